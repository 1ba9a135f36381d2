//! Finite-N microcanonical estimators: per-particle energies of sampled
//! configurations, direct Monte Carlo tail probabilities, a flat-histogram
//! estimator for deep tails, and the concavity diagnostic.

use crate::curve::{Provenance, SampledCurve};
use crate::error::{LabError, Result};
use crate::model::ModelSpec;
use crate::report::{CheckEntry, ValidationReport, Witness};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Flat storage of N points in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub coords: Vec<f64>,
    pub d: usize,
}

impl Configuration {
    pub fn n_particles(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }
}

/// Total interaction + confinement energy:
/// H = (1/(2N)) sum_{i != j} W(x_i, x_j) + sum_i V(x_i).
pub fn hamiltonian(model: &ModelSpec, config: &Configuration) -> f64 {
    let n = config.n_particles();
    let mut pair = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            pair += model.kernel.eval(config.point(i), config.point(j));
        }
    }
    let mut ext = 0.0;
    for i in 0..n {
        ext += model.potential.eval(config.point(i));
    }
    pair / n as f64 + ext
}

/// Energy per particle e = H / N.
pub fn energy_per_particle(model: &ModelSpec, config: &Configuration) -> f64 {
    hamiltonian(model, config) / config.n_particles() as f64
}

fn require_n(model: &ModelSpec) -> Result<usize> {
    model
        .n_particles
        .ok_or_else(|| LabError::Usage("model must set N for microcanonical estimators".into()))
}

/// Draw `count` iid prior configurations and return their per-particle
/// energies. Work is split into fixed chunks with per-chunk seeds derived
/// from `seed`, so results are identical for any worker count.
pub fn sample_energies(model: &ModelSpec, count: usize, seed: u64) -> Result<Vec<f64>> {
    const CHUNK: usize = 512;
    let d = model.dim();
    let n = require_n(model)?;
    let chunks: Vec<usize> = (0..count.div_ceil(CHUNK)).collect();
    let nested: Vec<Result<Vec<f64>>> = chunks
        .par_iter()
        .map(|&c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(c as u64 + 1)));
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(count);
            let mut out = Vec::with_capacity(hi - lo);
            let mut config = Configuration { coords: vec![0.0; n * d], d };
            for _ in lo..hi {
                for i in 0..n {
                    model.prior.sample(&mut rng, &mut config.coords[i * d..(i + 1) * d])?;
                }
                out.push(energy_per_particle(model, &config));
            }
            Ok(out)
        })
        .collect();
    let mut energies = Vec::with_capacity(count);
    for part in nested {
        energies.extend(part?);
    }
    Ok(energies)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// P(H/N <= e): the lower entropy branch, nondecreasing in e.
    Lower,
    /// P(H/N >= e): the upper entropy branch, nonincreasing in e.
    Upper,
}

/// (1/N) log P(H/N in tail at e) over a grid, by direct counting.
///
/// Empty-count grid points become -inf with a `flag` in the CSV output;
/// the stderr is the delta-method binomial error of the log, divided by N.
pub fn tail_logprob_direct(
    model: &ModelSpec,
    e_grid: &[f64],
    tail: Tail,
    samples: usize,
    seed: u64,
) -> Result<SampledCurve> {
    if samples == 0 {
        return Err(LabError::Usage("samples must be positive".into()));
    }
    let n = require_n(model)?;
    let energies = sample_energies(model, samples, seed)?;
    tail_logprob_from_energies(&energies, e_grid, tail, n)
}

pub fn tail_logprob_from_energies(
    energies: &[f64],
    e_grid: &[f64],
    tail: Tail,
    n_particles: usize,
) -> Result<SampledCurve> {
    let m = energies.len() as f64;
    let nf = n_particles as f64;
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut y = Vec::with_capacity(e_grid.len());
    let mut se = Vec::with_capacity(e_grid.len());
    for &e in e_grid {
        let below = sorted.partition_point(|&v| v <= e);
        let hits = match tail {
            Tail::Lower => below,
            Tail::Upper => sorted.len() - sorted.partition_point(|&v| v < e),
        };
        if hits == 0 {
            y.push(f64::NEG_INFINITY);
            se.push(f64::INFINITY);
        } else {
            let p = hits as f64 / m;
            y.push(p.ln() / nf);
            se.push(((1.0 - p) / (p * m)).sqrt() / nf);
        }
    }
    let (x, y, se) = sort_for_curve(e_grid, y, se, tail)?;
    SampledCurve::new(x, y, Some(se), Provenance::Micro)
}

// SampledCurve wants strictly increasing x with -inf only at the ends; the
// upper tail naturally has its -inf block on the right.
fn sort_for_curve(
    e_grid: &[f64],
    y: Vec<f64>,
    se: Vec<f64>,
    tail: Tail,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut idx: Vec<usize> = (0..e_grid.len()).collect();
    idx.sort_by(|&a, &b| e_grid[a].total_cmp(&e_grid[b]));
    let x: Vec<f64> = idx.iter().map(|&i| e_grid[i]).collect();
    let yy: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let ss: Vec<f64> = idx.iter().map(|&i| se[i]).collect();
    // interior -inf (possible only from sampling noise) is rejected by the
    // curve invariant; give a clearer message here.
    let finite: Vec<bool> = yy.iter().map(|v| v.is_finite()).collect();
    let first = finite.iter().position(|&b| b);
    let last = finite.iter().rposition(|&b| b);
    if let (Some(a), Some(b)) = (first, last) {
        if finite[a..=b].iter().any(|&f| !f) {
            return Err(LabError::InsufficientData(format!(
                "empty {:?}-tail count strictly inside the sampled range; increase samples or shrink the grid",
                tail
            )));
        }
    }
    Ok((x, yy, ss))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatHistogramOptions {
    /// Energy window [lo, hi] in per-particle units; must cover the grid.
    pub window: (f64, f64),
    pub bins: usize,
    /// Proposal standard deviation for single-particle moves.
    pub step: f64,
    /// Histogram flatness threshold (min bin count / mean bin count).
    pub flatness: f64,
    /// Stop when the log modification factor drops below this.
    pub min_log_f: f64,
    /// Hard cap on sweeps (N moves each) to bound runtime.
    pub max_sweeps: usize,
    /// Independent replicas; the spread between them gives the stderr.
    pub replicas: usize,
}

impl Default for FlatHistogramOptions {
    fn default() -> Self {
        FlatHistogramOptions {
            window: (0.0, 1.0),
            bins: 64,
            step: 0.3,
            flatness: 0.8,
            min_log_f: 2e-4,
            max_sweeps: 200_000,
            replicas: 3,
        }
    }
}

/// One replica's converged log-weights over the energy bins (relative:
/// shifted so the maximum is zero).
fn flat_histogram_run(
    model: &ModelSpec,
    opts: &FlatHistogramOptions,
    seed: u64,
) -> Result<Vec<f64>> {
    let (lo, hi) = opts.window;
    if !(hi > lo) || opts.bins < 4 {
        return Err(LabError::Usage("bad flat-histogram window or bin count".into()));
    }
    let d = model.dim();
    let n = require_n(model)?;
    let width = (hi - lo) / opts.bins as f64;
    let bin_of = |e: f64| -> Option<usize> {
        if e < lo || e >= hi {
            None
        } else {
            Some(((e - lo) / width) as usize)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // start from prior draws; walk the chain into the window if needed
    let mut config = Configuration { coords: vec![0.0; n * d], d };
    let mut e = f64::NAN;
    let mut found = false;
    for _ in 0..10_000 {
        for i in 0..n {
            model.prior.sample(&mut rng, &mut config.coords[i * d..(i + 1) * d])?;
        }
        e = energy_per_particle(model, &config);
        if bin_of(e).is_some() {
            found = true;
            break;
        }
    }
    if !found {
        // greedy walk toward the window from the closest draw seen
        let target = 0.5 * (lo + hi);
        for _ in 0..200_000 {
            let i = rng.random_range(0..n);
            let old: Vec<f64> = config.point(i).to_vec();
            let mut proposal = old.clone();
            for v in proposal.iter_mut() {
                *v += opts.step * rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
            let de = move_energy_delta(model, &config, i, &proposal);
            let dprior = prior_log_ratio(model, &old, &proposal);
            if !de.is_finite() || dprior == f64::NEG_INFINITY {
                continue;
            }
            let e_new = e + de;
            if (e_new - target).abs() < (e - target).abs() {
                config.coords[i * d..(i + 1) * d].copy_from_slice(&proposal);
                e = e_new;
                if bin_of(e).is_some() {
                    found = true;
                    break;
                }
            }
        }
        if !found {
            return Err(LabError::Bracket(format!(
                "could not reach energy window [{lo}, {hi}] from prior draws"
            )));
        }
    }

    let mut log_g = vec![0.0f64; opts.bins];
    let mut hist = vec![0u64; opts.bins];
    let mut log_f = 1.0f64;
    let mut bin = bin_of(e).unwrap();
    let mut sweeps = 0usize;
    while log_f >= opts.min_log_f && sweeps < opts.max_sweeps {
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let old: Vec<f64> = config.point(i).to_vec();
            let mut proposal = old.clone();
            for v in proposal.iter_mut() {
                *v += opts.step * rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
            let dprior = prior_log_ratio(model, &old, &proposal);
            let de = move_energy_delta(model, &config, i, &proposal);
            let e_new = e + de;
            let accept = match bin_of(e_new) {
                _ if dprior == f64::NEG_INFINITY || !de.is_finite() => false,
                None => false,
                Some(b_new) => {
                    let log_acc = log_g[bin] - log_g[b_new] + dprior;
                    log_acc >= 0.0 || rng.random::<f64>() < log_acc.exp()
                }
            };
            if accept {
                config.coords[i * d..(i + 1) * d].copy_from_slice(&proposal);
                e = e_new;
                bin = bin_of(e).unwrap();
            }
            log_g[bin] += log_f;
            hist[bin] += 1;
        }
        sweeps += 1;
        if sweeps % 64 == 0 {
            let visited: Vec<u64> = hist.iter().copied().filter(|&h| h > 0).collect();
            if visited.len() == opts.bins {
                let mean = visited.iter().sum::<u64>() as f64 / visited.len() as f64;
                let min = *visited.iter().min().unwrap() as f64;
                if min >= opts.flatness * mean {
                    log_f *= 0.5;
                    hist.fill(0);
                }
            }
        }
    }
    if log_f >= opts.min_log_f {
        return Err(LabError::InsufficientData(format!(
            "flat histogram did not converge in {} sweeps (log f = {log_f:.2e}); widen bins or raise max_sweeps",
            opts.max_sweeps
        )));
    }
    let top = log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(log_g.iter().map(|v| v - top).collect())
}

fn prior_log_ratio(model: &ModelSpec, old: &[f64], new: &[f64]) -> f64 {
    if !model.domain.contains(new) {
        return f64::NEG_INFINITY;
    }
    let a = model.prior.neg_log_density(new);
    let b = model.prior.neg_log_density(old);
    if a.is_infinite() {
        f64::NEG_INFINITY
    } else {
        b - a
    }
}

fn move_energy_delta(model: &ModelSpec, config: &Configuration, i: usize, proposal: &[f64]) -> f64 {
    let n = config.n_particles();
    let nf = n as f64;
    let mut dpair = 0.0;
    for j in 0..n {
        if j == i {
            continue;
        }
        dpair += model.kernel.eval(proposal, config.point(j))
            - model.kernel.eval(config.point(i), config.point(j));
    }
    let dext = model.potential.eval(proposal) - model.potential.eval(config.point(i));
    (dpair / nf + dext) / nf
}

/// Deep-tail estimator: flat-histogram log-weights, cumulated into tail
/// log-probabilities and anchored to a direct Monte Carlo run at the grid
/// point where the direct count is most reliable. The stderr combines the
/// replica spread with the anchor's direct error.
pub fn tail_logprob_flat_histogram(
    model: &ModelSpec,
    e_grid: &[f64],
    tail: Tail,
    opts: &FlatHistogramOptions,
    direct_samples: usize,
    seed: u64,
) -> Result<SampledCurve> {
    let (lo, hi) = opts.window;
    for &e in e_grid {
        if e < lo || e > hi {
            return Err(LabError::Usage(format!(
                "grid point {e} outside flat-histogram window [{lo}, {hi}]"
            )));
        }
    }
    let direct = tail_logprob_direct(model, e_grid, tail, direct_samples, seed ^ 0xd1ec_7)?;
    // anchor at the finite direct point with the smallest stderr
    let anchor = direct
        .y
        .iter()
        .zip(direct.stderr.as_ref().unwrap())
        .enumerate()
        .filter(|(_, (y, _))| y.is_finite())
        .min_by(|a, b| a.1 .1.total_cmp(b.1 .1))
        .map(|(i, _)| i)
        .ok_or_else(|| {
            LabError::InsufficientData("no finite direct estimate to anchor the deep tail".into())
        })?;

    let runs: Vec<Result<Vec<f64>>> = (0..opts.replicas)
        .into_par_iter()
        .map(|r| flat_histogram_run(model, opts, seed.wrapping_add(101 + r as u64 * 7919)))
        .collect();
    let nf = require_n(model)? as f64;
    let width = (hi - lo) / opts.bins as f64;
    let mut per_replica: Vec<Vec<f64>> = Vec::with_capacity(opts.replicas);
    for run in runs {
        let log_g = run?;
        // cumulative tail mass in log space, bin centers as breakpoints
        let centers: Vec<f64> = (0..opts.bins).map(|b| lo + (b as f64 + 0.5) * width).collect();
        let cum = |e0: f64| -> f64 {
            let mut terms: Vec<f64> = Vec::new();
            for (b, &c) in centers.iter().enumerate() {
                let include = match tail {
                    Tail::Lower => c <= e0,
                    Tail::Upper => c >= e0,
                };
                if include {
                    terms.push(log_g[b]);
                }
            }
            log_sum_exp(&terms)
        };
        let raw: Vec<f64> = e_grid.iter().map(|&e| cum(e) / nf).collect();
        let shift = direct.y[anchor] - raw[anchor];
        per_replica.push(raw.iter().map(|v| v + shift).collect());
    }
    let r = per_replica.len() as f64;
    let mut y = Vec::with_capacity(e_grid.len());
    let mut se = Vec::with_capacity(e_grid.len());
    let anchor_se = direct.stderr.as_ref().unwrap()[anchor];
    for k in 0..e_grid.len() {
        let vals: Vec<f64> = per_replica.iter().map(|rep| rep[k]).collect();
        let mean = vals.iter().sum::<f64>() / r;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0).max(1.0);
        y.push(mean);
        se.push(((var / r) + anchor_se * anchor_se).sqrt());
    }
    let (x, y, se) = sort_for_curve(e_grid, y, se, tail)?;
    SampledCurve::new(x, y, Some(se), Provenance::Micro)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return f64::NEG_INFINITY;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// Exact lower-tail log-probability for the kernel-free model with
/// V(x) = |x|^alpha and a uniform prior on the ball of radius r:
/// (1/N) log P(sum_i |x_i|^alpha <= N e). Valid for N e <= r^alpha.
pub fn exact_sublevel_logprob_powerlaw(
    alpha: f64,
    d: usize,
    n: usize,
    r: f64,
    e: f64,
) -> Result<f64> {
    use crate::model::{ball_volume, sphere_area};
    if alpha <= 0.0 || e <= 0.0 {
        return Err(LabError::Usage("need alpha > 0 and e > 0".into()));
    }
    let total = n as f64 * e;
    if total > r.powf(alpha) + 1e-12 {
        return Err(LabError::Precondition(format!(
            "closed form needs N e <= r^alpha (got {total} > {})",
            r.powf(alpha)
        )));
    }
    let df = d as f64;
    let nf = n as f64;
    // vol{sum r_i^alpha <= t} = S_{d-1}^N alpha^{-N} Gamma(d/a)^N / Gamma(N d/a + 1) t^{N d / a}
    let log_vol = nf * sphere_area(d).ln() - nf * alpha.ln()
        + nf * ln_gamma(df / alpha)
        - ln_gamma(nf * df / alpha + 1.0)
        + (nf * df / alpha) * total.ln();
    let log_prob = log_vol - nf * ball_volume(d, r).ln();
    Ok(log_prob / nf)
}

fn ln_gamma(x: f64) -> f64 {
    // Stirling with enough correction terms for x >= 8; recurrence below
    let mut x = x;
    let mut shift = 0.0;
    while x < 8.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    shift
        + 0.5 * ((2.0 * std::f64::consts::PI).ln() - x.ln())
        + x * (x.ln() - 1.0)
        + inv / 12.0 * (1.0 - inv2 / 30.0 * (1.0 - inv2 * 2.0 / 7.0))
}

/// Second-difference concavity diagnostic on a sampled curve. A violation
/// counts only when it exceeds `sigmas` times the propagated noise of the
/// second difference.
pub fn concavity_check(curve: &SampledCurve, sigmas: f64) -> ValidationReport {
    let mut report = ValidationReport::new();
    let idx = curve.finite_indices();
    if idx.len() < 3 {
        report.push(CheckEntry {
            name: "resolved-points".into(),
            pass: false,
            witness: Some(Witness::Scalar(idx.len() as f64)),
            margin: idx.len() as f64 - 3.0,
            note: Some("need at least 3 finite points".into()),
        });
        return report;
    }
    let zeros = vec![0.0; curve.y.len()];
    let se = curve.stderr.as_ref().unwrap_or(&zeros);
    let mut worst: Option<(f64, f64, f64)> = None; // (normalized excess, x, d2)
    for w in idx.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let (x0, x1, x2) = (curve.x[a], curve.x[b], curve.x[c]);
        let (y0, y1, y2) = (curve.y[a], curve.y[b], curve.y[c]);
        // chord test: midpoint value vs interpolated chord
        let chord = y0 + (y2 - y0) * (x1 - x0) / (x2 - x0);
        let excess = y1 - chord; // >= -noise for concave data
        let t = (x1 - x0) / (x2 - x0);
        let noise = (se[b] * se[b] + (1.0 - t) * (1.0 - t) * se[a] * se[a] + t * t * se[c] * se[c])
            .sqrt();
        let violation = -excess - sigmas * noise.max(1e-14);
        if violation > 0.0 {
            let norm = if noise > 0.0 { -excess / noise } else { f64::INFINITY };
            if worst.map_or(true, |(e0, _, _)| norm > e0) {
                worst = Some((norm, x1, excess));
            }
        }
    }
    match worst {
        None => report.push_pass("second-differences", 0.0),
        Some((norm, x1, excess)) => report.push(CheckEntry {
            name: "second-differences".into(),
            pass: false,
            witness: Some(Witness::Point(vec![x1])),
            margin: excess,
            note: Some(format!("convex dip of {norm:.1} sigma at e = {x1:.6}")),
        }),
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::PairKernel;
    use crate::model::{Domain, ExteriorPotential, PriorMeasure};
    use crate::profile::RadialProfile;
    use approx::assert_relative_eq;

    fn free_powerlaw_model(alpha: f64, n: usize, r: f64) -> ModelSpec {
        ModelSpec::new(
            Domain::Ball { d: 2, r },
            PairKernel::radial(RadialProfile::zero()),
            ExteriorPotential::Radial { profile: RadialProfile::monomial(1.0, alpha) },
            PriorMeasure::UniformBall { d: 2, r },
            Some(n),
        )
        .unwrap()
    }

    fn gaussian_vortex_pair() -> ModelSpec {
        ModelSpec::new(
            Domain::FullSpace { d: 2 },
            PairKernel::radial(RadialProfile::log()),
            ExteriorPotential::Zero,
            PriorMeasure::Gaussian { d: 2, lambda: 1.0 },
            Some(2),
        )
        .unwrap()
    }

    #[test]
    fn hamiltonian_two_particles_is_half_kernel() {
        let model = gaussian_vortex_pair();
        let config = Configuration { coords: vec![0.0, 0.0, 3.0, 4.0], d: 2 };
        // H = W(x1,x2)/2 = -log(5)/2
        assert_relative_eq!(hamiltonian(&model, &config), -(5.0f64.ln()) / 2.0);
        assert_relative_eq!(energy_per_particle(&model, &config), -(5.0f64.ln()) / 4.0);
    }

    #[test]
    fn hamiltonian_counts_ordered_pairs_once_each_way() {
        // three particles at mutual distance 1: pair sum over i != j is 6
        // kernel terms; H = (1/(2*3)) * 6 * w(1) + sum V
        let model = ModelSpec::new(
            Domain::FullSpace { d: 2 },
            PairKernel::radial(RadialProfile::monomial(1.0, 2.0)),
            ExteriorPotential::Zero,
            PriorMeasure::Gaussian { d: 2, lambda: 1.0 },
            Some(3),
        )
        .unwrap();
        let h = 3.0f64.sqrt() / 2.0;
        let config = Configuration {
            coords: vec![0.0, 0.0, 1.0, 0.0, 0.5, h],
            d: 2,
        };
        let w1 = model.kernel.eval(&[0.0, 0.0], &[1.0, 0.0]);
        assert_relative_eq!(hamiltonian(&model, &config), 3.0 * w1 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sample_energies_deterministic_across_thread_counts() {
        let model = gaussian_vortex_pair();
        let a = sample_energies(&model, 1000, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_energies(&model, 1000, 42).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn direct_tail_matches_exact_powerlaw_sublevel() {
        // N = 2, alpha = 2, uniform disc radius 1: P(|x1|^2 + |x2|^2 <= 2e)
        let model = free_powerlaw_model(2.0, 2, 1.0);
        let e_grid = [0.05, 0.1, 0.2];
        let curve = tail_logprob_direct(&model, &e_grid, Tail::Lower, 400_000, 7).unwrap();
        for (i, &e) in e_grid.iter().enumerate() {
            let exact = exact_sublevel_logprob_powerlaw(2.0, 2, 2, 1.0, e).unwrap();
            let se = curve.stderr.as_ref().unwrap()[i];
            assert!(
                (curve.y[i] - exact).abs() < 5.0 * se + 1e-4,
                "e = {e}: mc = {}, exact = {exact}, se = {se}",
                curve.y[i]
            );
        }
    }

    #[test]
    fn exact_sublevel_n1_alpha2_closed_form() {
        // N = 1, d = 2, alpha = 2, r = 1: P(|x|^2 <= e) = e
        for e in [0.1, 0.3, 0.9] {
            assert_relative_eq!(
                exact_sublevel_logprob_powerlaw(2.0, 2, 1, 1.0, e).unwrap(),
                e.ln(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn exact_sublevel_n1_alpha1_closed_form() {
        // N = 1, d = 2, alpha = 1, r = 1: P(|x| <= e) = e^2
        assert_relative_eq!(
            exact_sublevel_logprob_powerlaw(1.0, 2, 1, 1.0, 0.25).unwrap(),
            2.0 * 0.25f64.ln(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn exact_sublevel_scaling_exponent() {
        // slope in log e must be d N / alpha / N = d / alpha per particle
        let (a, b) = (
            exact_sublevel_logprob_powerlaw(1.5, 2, 3, 1.0, 0.01).unwrap(),
            exact_sublevel_logprob_powerlaw(1.5, 2, 3, 1.0, 0.02).unwrap(),
        );
        assert_relative_eq!((b - a) / 2.0f64.ln(), 2.0 / 1.5, epsilon = 1e-10);
    }

    #[test]
    fn ln_gamma_reference_values() {
        assert_relative_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-10);
        assert_relative_eq!(ln_gamma(0.5), std::f64::consts::PI.ln() / 2.0, epsilon = 1e-9);
        assert_relative_eq!(ln_gamma(10.0), 362880.0f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn upper_and_lower_tails_cover_everything() {
        let model = gaussian_vortex_pair();
        let energies = sample_energies(&model, 20_000, 3).unwrap();
        let e0 = -0.03;
        let lower = tail_logprob_from_energies(&energies, &[e0], Tail::Lower, 2).unwrap();
        let upper = tail_logprob_from_energies(&energies, &[e0], Tail::Upper, 2).unwrap();
        // P(<= e0) + P(>= e0) >= 1
        let total = (2.0 * lower.y[0]).exp() + (2.0 * upper.y[0]).exp();
        assert!(total >= 1.0 - 1e-12 && total <= 1.0 + 1e-4, "total = {total}");
    }

    #[test]
    fn flat_histogram_matches_exact_deep_tail() {
        // kernel-free quadratic confinement: exact answer available far
        // below anything direct MC can resolve at these sample counts
        let model = free_powerlaw_model(2.0, 2, 1.0);
        let e_grid = [0.002, 0.005, 0.01, 0.05, 0.2];
        let opts = FlatHistogramOptions {
            window: (0.0, 0.25),
            bins: 50,
            step: 0.15,
            flatness: 0.8,
            min_log_f: 5e-4,
            max_sweeps: 400_000,
            replicas: 3,
        };
        let curve =
            tail_logprob_flat_histogram(&model, &e_grid, Tail::Lower, &opts, 100_000, 11).unwrap();
        for (i, &e) in e_grid.iter().enumerate() {
            let exact = exact_sublevel_logprob_powerlaw(2.0, 2, 2, 1.0, e).unwrap();
            let err = (curve.y[i] - exact).abs();
            // bin discretization dominates near the window edge
            assert!(err < 0.12, "e = {e}: est = {}, exact = {exact}", curve.y[i]);
        }
    }

    #[test]
    fn concavity_check_passes_on_concave_data() {
        let x = crate::curve::linspace(0.0, 2.0, 30);
        let y: Vec<f64> = x.iter().map(|v| -(v - 1.0) * (v - 1.0)).collect();
        let curve = SampledCurve::new(x, y, None, Provenance::Synthetic).unwrap();
        assert!(concavity_check(&curve, 3.0).passed());
    }

    #[test]
    fn concavity_check_flags_convex_dip() {
        let x = crate::curve::linspace(0.0, 2.0, 21);
        let mut y: Vec<f64> = x.iter().map(|v| -v * v).collect();
        y[10] -= 0.5;
        let se = vec![0.01; x.len()];
        let curve = SampledCurve::new(x, y, Some(se), Provenance::Synthetic).unwrap();
        let report = concavity_check(&curve, 3.0);
        assert!(!report.passed());
        let fail = report.failures().next().unwrap();
        match fail.witness {
            Some(Witness::Point(ref p)) => assert_relative_eq!(p[0], 1.0, epsilon = 0.11),
            _ => panic!("expected point witness"),
        }
    }

    #[test]
    fn concavity_check_tolerates_noise_at_scale() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = crate::curve::linspace(0.0, 2.0, 40);
        let sigma = 0.005;
        let y: Vec<f64> = x
            .iter()
            .map(|v| -v * v + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let curve =
            SampledCurve::new(x, y, Some(vec![sigma; 40]), Provenance::Synthetic).unwrap();
        assert!(concavity_check(&curve, 4.0).passed());
    }
}
