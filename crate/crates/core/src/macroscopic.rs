//! Macroscopic (mean-field) side: radial discretization of a model, the
//! energy / entropy / free-energy functionals, a damped fixed-point solver
//! for the Gibbs minimizer, dual curves, and the core-halo family showing
//! entropy-energy concentration for integrable singular kernels.

use crate::curve::{Provenance, SampledCurve};
use crate::error::{LabError, Result};
use crate::model::{sphere_area, ModelSpec};
use crate::quad::{angular_average, integrate};
use serde::{Deserialize, Serialize};

/// Rotation-invariant model reduced to K radial shells on [0, r_max].
///
/// `w[i * k + j]` is the angular average of the kernel between shells i
/// and j; `mass0` carries the prior mass of each shell (renormalized to
/// sum to one after truncation).
#[derive(Debug, Clone)]
pub struct DiscretizedModel {
    pub r: Vec<f64>,
    pub mass0: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub k: usize,
    pub d: usize,
    /// Prior mass lost to truncation at r_max (before renormalization).
    pub truncated_mass: f64,
}

/// Angular average of a radial kernel profile between circles of radius r
/// and s in dimension d.
pub fn shell_average(
    profile: &crate::profile::RadialProfile,
    r: f64,
    s: f64,
    d: usize,
    n_theta: usize,
) -> f64 {
    if profile.label == "log" && r.max(s) > 0.0 {
        // mean of -log|x - y| over the sphere: -log max(r, s) in d = 2
        if d == 2 {
            return -r.max(s).ln();
        }
    }
    match d {
        1 => 0.5 * (profile.eval((r - s).abs()) + profile.eval(r + s)),
        2 => angular_average(
            |th| {
                let d2 = r * r + s * s - 2.0 * r * s * th.cos();
                profile.eval(d2.max(0.0).sqrt())
            },
            n_theta,
        ),
        _ => {
            // average over the polar angle with sin^{d-2} weight
            let p = (d - 2) as f64;
            let num = integrate(
                |th: f64| {
                    let d2 = r * r + s * s - 2.0 * r * s * th.cos();
                    profile.eval(d2.max(0.0).sqrt()) * th.sin().powf(p)
                },
                0.0,
                std::f64::consts::PI,
                n_theta.max(64),
            );
            let den = integrate(|th: f64| th.sin().powf(p), 0.0, std::f64::consts::PI, n_theta.max(64));
            num / den
        }
    }
}

pub fn discretize_radial(model: &ModelSpec, k: usize, r_max: f64) -> Result<DiscretizedModel> {
    if k < 2 || r_max <= 0.0 {
        return Err(LabError::Usage("need k >= 2 shells and r_max > 0".into()));
    }
    let profile = model
        .kernel
        .as_radial()
        .ok_or_else(|| LabError::Usage("radial discretization needs a radial kernel".into()))?
        .clone();
    let d = model.dim();
    let area = sphere_area(d);
    let h = r_max / k as f64;
    let mut r = Vec::with_capacity(k);
    let mut mass0 = Vec::with_capacity(k);
    for i in 0..k {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        // mass-weighted center of the shell under the prior
        let dens = |s: f64| model.prior.radial_density(s) * area * s.powi(d as i32 - 1);
        let m = integrate(&dens, a, b, 16);
        let c = if m > 0.0 {
            integrate(|s| s * dens(s), a, b, 16) / m
        } else {
            0.5 * (a + b)
        };
        r.push(c);
        mass0.push(m.max(0.0));
    }
    let total: f64 = mass0.iter().sum();
    if total <= 0.0 {
        return Err(LabError::Precondition("prior has no mass below r_max".into()));
    }
    let truncated_mass = (1.0 - total).max(0.0);
    for m in mass0.iter_mut() {
        *m /= total;
    }
    let mut w = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let val = shell_average(&profile, r[i], r[j], d, 128);
            if !val.is_finite() && i == j {
                return Err(LabError::Precondition(format!(
                    "kernel diverges on the diagonal at r = {:.4}; regularize it first",
                    r[i]
                )));
            }
            w[i * k + j] = val;
            w[j * k + i] = val;
        }
    }
    let v: Vec<f64> = r
        .iter()
        .map(|&ri| model.potential.radial_eval(ri))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| LabError::Usage("radial discretization needs a radial potential".into()))?;
    Ok(DiscretizedModel { r, mass0, w, v, k, d, truncated_mass })
}

/// Cartesian-cell counterpart for d = 2 models: k x k square cells on
/// [-r_max, r_max]^2. Shares the solver and functionals with the radial
/// grid; `r` holds cell-center norms. Intra-cell interaction uses a
/// four-point offset average so log-type kernels stay finite.
pub fn discretize_planar(model: &ModelSpec, k: usize, r_max: f64) -> Result<DiscretizedModel> {
    if model.dim() != 2 {
        return Err(LabError::Usage("planar mode is for d = 2 models only".into()));
    }
    // the dense pair matrix is (k^2)^2 entries; 64 cells/axis is ~134 MB
    if k < 2 || k > 64 {
        return Err(LabError::Usage("planar resolution must be in [2, 64]".into()));
    }
    let n = k * k;
    let h = 2.0 * r_max / k as f64;
    let mut centers = Vec::with_capacity(n);
    let mut mass0 = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for iy in 0..k {
        for ix in 0..k {
            let x = -r_max + (ix as f64 + 0.5) * h;
            let y = -r_max + (iy as f64 + 0.5) * h;
            let r = (x * x + y * y).sqrt();
            centers.push([x, y]);
            mass0.push(model.prior.radial_density(r).max(0.0) * h * h);
            v.push(model.potential.eval(&[x, y]));
        }
    }
    let total: f64 = mass0.iter().sum();
    if total <= 0.0 {
        return Err(LabError::Precondition("prior has no mass inside the box".into()));
    }
    let truncated_mass = (1.0 - total).max(0.0);
    for m in mass0.iter_mut() {
        *m /= total;
    }
    let mut w = vec![0.0; n * n];
    // offset used for the self-interaction of a cell: the mean pair
    // distance of two uniform points in a square of side h is ~0.5214 h
    let self_r = 0.5214 * h;
    for i in 0..n {
        for j in i..n {
            let val = if i == j {
                let val = model
                    .kernel
                    .eval(&centers[i], &[centers[i][0] + self_r, centers[i][1]]);
                if !val.is_finite() {
                    return Err(LabError::Precondition(
                        "kernel diverges within a cell; regularize it first".into(),
                    ));
                }
                val
            } else {
                model.kernel.eval(&centers[i], &centers[j])
            };
            w[i * n + j] = val;
            w[j * n + i] = val;
        }
    }
    let r: Vec<f64> = centers.iter().map(|c| (c[0] * c[0] + c[1] * c[1]).sqrt()).collect();
    Ok(DiscretizedModel { r, mass0, w, v, k: n, d: 2, truncated_mass })
}

impl DiscretizedModel {
    /// E(mu) = (1/2) mu' W mu + mu' v for a probability vector over shells.
    pub fn energy(&self, mu: &[f64]) -> f64 {
        let mut pair = 0.0;
        for i in 0..self.k {
            if mu[i] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for j in 0..self.k {
                row += self.w[i * self.k + j] * mu[j];
            }
            pair += mu[i] * row;
        }
        0.5 * pair + self.v.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>()
    }

    /// S(mu) = -sum mu_i log(mu_i / mass0_i), with 0 log 0 = 0.
    pub fn entropy(&self, mu: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.k {
            if mu[i] > 0.0 {
                if self.mass0[i] == 0.0 {
                    return f64::NEG_INFINITY;
                }
                s -= mu[i] * (mu[i] / self.mass0[i]).ln();
            }
        }
        s
    }

    /// The variational objective beta E(mu) - S(mu).
    pub fn free_energy_functional(&self, beta: f64, mu: &[f64]) -> f64 {
        beta * self.energy(mu) - self.entropy(mu)
    }

    /// Mean field h_i = sum_j w_ij mu_j + v_i.
    pub fn field(&self, mu: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|i| {
                self.v[i]
                    + (0..self.k).map(|j| self.w[i * self.k + j] * mu[j]).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Initial damping; halved whenever the objective increases.
    pub theta: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iter: 4000, tol: 1e-12, theta: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub mu: Vec<f64>,
    pub free_energy: f64,
    pub energy: f64,
    pub entropy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm of the final fixed-point residual.
    pub residual: f64,
}

/// Damped iteration of mu <- mu0 e^{-beta h[mu]} / Z toward the Gibbs
/// minimizer of beta E - S. Deterministic; warm-startable via `init`.
pub fn solve_mean_field(
    dm: &DiscretizedModel,
    beta: f64,
    init: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<MeanFieldSolution> {
    let k = dm.k;
    let mut mu: Vec<f64> = match init {
        Some(m) if m.len() == k => {
            let total: f64 = m.iter().sum();
            if total <= 0.0 || m.iter().any(|v| *v < 0.0) {
                return Err(LabError::Usage("init must be a nonnegative mass vector".into()));
            }
            m.iter().map(|v| v / total).collect()
        }
        Some(_) => return Err(LabError::Usage("init length mismatch".into())),
        None => dm.mass0.clone(),
    };
    let mut obj = dm.free_energy_functional(beta, &mu);
    let mut theta = opts.theta;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let h = dm.field(&mu);
        // Gibbs update, stabilized in log space
        let mut logw: Vec<f64> = (0..k)
            .map(|i| {
                if dm.mass0[i] > 0.0 {
                    dm.mass0[i].ln() - beta * h[i]
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(LabError::Precondition(
                "Gibbs update degenerate: all shells have zero weight".into(),
            ));
        }
        for lw in logw.iter_mut() {
            *lw = (*lw - top).exp();
        }
        let z: f64 = logw.iter().sum();
        let target: Vec<f64> = logw.iter().map(|v| v / z).collect();
        residual = mu
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < opts.tol {
            converged = true;
            break;
        }
        let candidate: Vec<f64> = mu
            .iter()
            .zip(&target)
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect();
        let cand_obj = dm.free_energy_functional(beta, &candidate);
        if cand_obj <= obj + 1e-15 * obj.abs() {
            mu = candidate;
            obj = cand_obj;
            // cautiously re-accelerate
            theta = (theta * 1.3).min(opts.theta.max(0.9));
        } else {
            theta *= 0.5;
            if theta < 1e-6 {
                // stuck at a stationary point up to rounding
                converged = residual < 1e-8;
                break;
            }
        }
    }
    let energy = dm.energy(&mu);
    let entropy = dm.entropy(&mu);
    Ok(MeanFieldSolution {
        free_energy: beta * energy - entropy,
        mu,
        energy,
        entropy,
        iterations,
        converged,
        residual,
    })
}

/// F(beta) over a beta grid, warm-starting each solve from the previous
/// minimizer. Returns the curve plus the per-beta solutions.
pub fn free_energy_curve(
    dm: &DiscretizedModel,
    betas: &[f64],
    opts: &SolverOptions,
) -> Result<(SampledCurve, Vec<MeanFieldSolution>)> {
    let mut order: Vec<usize> = (0..betas.len()).collect();
    order.sort_by(|&a, &b| betas[a].total_cmp(&betas[b]));
    // sweep from the largest beta down toward criticality so warm starts
    // track the concentrating branch
    let mut sols: Vec<Option<MeanFieldSolution>> = vec![None; betas.len()];
    let mut prev: Option<Vec<f64>> = None;
    for &i in order.iter().rev() {
        let sol = solve_mean_field(dm, betas[i], prev.as_deref(), opts)?;
        prev = Some(sol.mu.clone());
        sols[i] = Some(sol);
    }
    let sols: Vec<MeanFieldSolution> = order
        .iter()
        .map(|&i| sols[i].take().expect("solved above"))
        .collect();
    let x: Vec<f64> = order.iter().map(|&i| betas[i]).collect();
    let y: Vec<f64> = sols.iter().map(|s| s.free_energy).collect();
    let curve = SampledCurve::new(x, y, None, Provenance::Macro)?;
    Ok((curve, sols))
}

/// Invert the monotone map beta -> E(mu_beta) by bisection.
pub fn beta_for_energy(
    dm: &DiscretizedModel,
    e_target: f64,
    mut lo: f64,
    mut hi: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(LabError::Usage("need lo < hi".into()));
    }
    let energy_at = |beta: f64| -> Result<f64> {
        Ok(solve_mean_field(dm, beta, None, opts)?.energy)
    };
    // E is nonincreasing in beta
    let e_lo = energy_at(lo)?;
    let e_hi = energy_at(hi)?;
    if !((e_hi - e_target) * (e_lo - e_target) <= 0.0) {
        return Err(LabError::Bracket(format!(
            "e = {e_target} not bracketed: E({lo}) = {e_lo}, E({hi}) = {e_hi}"
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let em = energy_at(mid)?;
        if (em - e_target) * (e_lo - e_target) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Macroscopic entropy over an energy grid via the dual formula
/// S(e) = beta(e) e - F(beta(e)).
pub fn entropy_curve_dual(
    dm: &DiscretizedModel,
    e_grid: &[f64],
    beta_lo: f64,
    beta_hi: f64,
    opts: &SolverOptions,
) -> Result<SampledCurve> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(e_grid.len());
    for &e in e_grid {
        let beta = beta_for_energy(dm, e, beta_lo, beta_hi, opts)?;
        let sol = solve_mean_field(dm, beta, None, opts)?;
        pts.push((e, beta * e - sol.free_energy));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    SampledCurve::new(
        pts.iter().map(|p| p.0).collect(),
        pts.iter().map(|p| p.1).collect(),
        None,
        Provenance::Macro,
    )
}

/// Largest mean-field energy reachable on the shell grid: coordinate
/// ascent over mixtures of at most two shells, started from the best
/// single shell. Exact for kernels whose restricted quadratic form is
/// convex in the mixing weight.
pub fn max_energy_estimate(dm: &DiscretizedModel) -> f64 {
    let point_energy = |i: usize| 0.5 * dm.w[i * dm.k + i] + dm.v[i];
    let mut best = f64::NEG_INFINITY;
    for i in 0..dm.k {
        if dm.mass0[i] > 0.0 {
            best = best.max(point_energy(i));
        }
    }
    for i in 0..dm.k {
        for j in (i + 1)..dm.k {
            if dm.mass0[i] == 0.0 || dm.mass0[j] == 0.0 {
                continue;
            }
            // E(t) over mu = t delta_i + (1-t) delta_j is a quadratic in t;
            // its max over [0,1] is at a vertex or the interior stationary point
            let (wii, wjj, wij) = (
                dm.w[i * dm.k + i],
                dm.w[j * dm.k + j],
                dm.w[i * dm.k + j],
            );
            let a = 0.5 * (wii + wjj) - wij;
            let b = wij - wjj + dm.v[i] - dm.v[j];
            let c = 0.5 * wjj + dm.v[j];
            if a < 0.0 {
                let t = (-b / (2.0 * a)).clamp(0.0, 1.0);
                best = best.max(a * t * t + b * t + c);
            }
        }
    }
    best
}

// --- core-halo family for inverse-power kernels on the unit ball ----------

/// Riesz-type double integral I(a, b) = int int w(|x - y|) dU_a dU_b for
/// uniform measures on concentric balls of radii a and b, d = 2, computed
/// by radial quadrature with angular averages.
pub fn uniform_disc_cross_energy(profile: &crate::profile::RadialProfile, a: f64, b: f64) -> f64 {
    let fa = 2.0 / (a * a);
    let fb = 2.0 / (b * b);
    integrate(
        |r: f64| {
            fa * r
                * integrate(|s: f64| fb * s * shell_average(profile, r, s, 2, 512), 0.0, b, 48)
        },
        0.0,
        a,
        48,
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoreHalo {
    /// Mass placed on the shrinking core.
    pub mass: f64,
    /// Core radius.
    pub eps: f64,
    pub entropy: f64,
    pub energy: f64,
}

/// Closed-form relative entropy of m U_eps + (1 - m) U_1 against the
/// uniform prior on the unit ball in R^d.
pub fn core_halo_entropy(d: usize, mass: f64, eps: f64) -> f64 {
    let cap = eps.powi(d as i32); // prior mass of the core
    let rho_in = mass / cap + (1.0 - mass);
    let rho_out = 1.0 - mass;
    let mut s = 0.0;
    if rho_in > 0.0 {
        s -= cap * rho_in * rho_in.ln();
    }
    if rho_out > 0.0 {
        s -= (1.0 - cap) * rho_out * rho_out.ln();
    }
    s
}

/// Energy of the core-halo measure for w(r) = r^{-alpha} on the unit disc:
/// the self term of the core scales like eps^{-alpha}.
pub fn core_halo_energy(alpha: f64, mass: f64, eps: f64) -> f64 {
    let w = crate::profile::RadialProfile::inverse_power(alpha);
    let self_unit = uniform_disc_cross_energy(&w, 1.0, 1.0);
    let cross = uniform_disc_cross_energy(&w, eps, 1.0);
    let m = mass;
    0.5 * (m * m * eps.powf(-alpha) * self_unit
        + 2.0 * m * (1.0 - m) * cross
        + (1.0 - m) * (1.0 - m) * self_unit)
}

/// One-parameter diagnostic family: mass eps^{alpha/4} on a core of radius
/// eps. Its energy diverges like eps^{-alpha/2} while its entropy only
/// decays like eps^{alpha/4} log eps.
pub fn concentration_family(alpha: f64, eps: f64) -> CoreHalo {
    let mass = eps.powf(alpha / 4.0);
    CoreHalo {
        mass,
        eps,
        entropy: core_halo_entropy(2, mass, eps),
        energy: core_halo_energy(alpha, mass, eps),
    }
}

/// Search the two-parameter core-halo family for the largest entropy at a
/// given energy level: for each core mass on a log grid, shrink the core
/// radius until the energy target is hit, then keep the best entropy.
pub fn best_core_halo_at_energy(alpha: f64, e_target: f64) -> Result<CoreHalo> {
    let w = crate::profile::RadialProfile::inverse_power(alpha);
    let self_unit = uniform_disc_cross_energy(&w, 1.0, 1.0);
    if e_target <= 0.5 * self_unit {
        return Err(LabError::Usage(format!(
            "target {e_target} at or below the uniform energy {}",
            0.5 * self_unit
        )));
    }
    let mut best: Option<CoreHalo> = None;
    for k in 1..=60 {
        let mass = (10.0f64).powf(-4.0 * k as f64 / 60.0); // 1e-4 .. ~1
        // solve E(eps) = e_target by bisection in log eps
        let energy_at = |eps: f64| {
            let cross = uniform_disc_cross_energy(&w, eps, 1.0);
            0.5 * (mass * mass * eps.powf(-alpha) * self_unit
                + 2.0 * mass * (1.0 - mass) * cross
                + (1.0 - mass) * (1.0 - mass) * self_unit)
        };
        let (mut lo, mut hi) = (1e-12f64.ln(), (0.999f64).ln());
        if energy_at(lo.exp()) < e_target {
            continue; // even the tiniest core cannot reach the target
        }
        if energy_at(hi.exp()) > e_target {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if energy_at(mid.exp()) > e_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let eps = (0.5 * (lo + hi)).exp();
        let cand = CoreHalo {
            mass,
            eps,
            entropy: core_halo_entropy(2, mass, eps),
            energy: energy_at(eps),
        };
        if best.as_ref().map_or(true, |b| cand.entropy > b.entropy) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| LabError::Bracket("no core-halo member reaches the target energy".into()))
}
