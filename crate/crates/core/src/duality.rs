//! Concave-analysis toolkit on sampled curves: Legendre-Fenchel transform,
//! concave envelope, superdifferentials, ensemble-equivalence gap,
//! asymptotic slopes, and the critical inverse temperature formulas.

use crate::checks::dot_w;
use crate::curve::SampledCurve;
use crate::error::{LabError, Result};
use crate::profile::RadialProfile;
use serde::{Deserialize, Serialize};

/// Concave Legendre-Fenchel transform f*(y) = inf_x (x y - f(x)),
/// evaluated over the sample points.
///
/// The dual grid consists of the sorted secant slopes of the input (the
/// breakpoints of the piecewise-linear transform) plus `pad` extra points
/// extending the slope range on both sides, so the discrete transform is
/// exact for the sampled piecewise-linear model.
pub fn legendre_concave(curve: &SampledCurve, pad: usize) -> Result<SampledCurve> {
    let (x, y) = curve.finite_points();
    if x.len() < 3 {
        return Err(LabError::InsufficientData("transform needs >= 3 finite points".into()));
    }
    let mut slopes: Vec<f64> = x
        .windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (ys[1] - ys[0]) / (xs[1] - xs[0]))
        .collect();
    slopes.sort_by(f64::total_cmp);
    let span = (slopes[slopes.len() - 1] - slopes[0]).max(1e-9);
    let step = span / (slopes.len() as f64);
    let mut dual: Vec<f64> = Vec::new();
    for k in (1..=pad).rev() {
        dual.push(slopes[0] - step * k as f64);
    }
    dual.extend_from_slice(&slopes);
    for k in 1..=pad {
        dual.push(slopes[slopes.len() - 1] + step * k as f64);
    }
    dual.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * (1.0 + a.abs()));
    let values: Vec<f64> = dual
        .iter()
        .map(|&s| {
            x.iter()
                .zip(&y)
                .map(|(&xi, &yi)| xi * s - yi)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    SampledCurve::new(dual, values, None, curve.meta)
}

/// Concave envelope (double transform f**): the upper concave hull of the
/// sample points, evaluated back on the original abscissae. End sentinels
/// are excluded from the hull.
pub fn concave_envelope(curve: &SampledCurve) -> Result<SampledCurve> {
    let (x, y) = curve.finite_points();
    if x.len() < 2 {
        return Err(LabError::InsufficientData("envelope needs >= 2 finite points".into()));
    }
    // upper hull scan (points are already sorted by x)
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(x.len());
    for (&xi, &yi) in x.iter().zip(&y) {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // drop the middle point if it lies below the chord
            if (y2 - y1) * (xi - x1) <= (yi - y1) * (x2 - x1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((xi, yi));
    }
    let env_at = |x0: f64| -> f64 {
        let j = hull.partition_point(|&(hx, _)| hx < x0);
        if j == 0 {
            return hull[0].1;
        }
        if j == hull.len() {
            return hull[hull.len() - 1].1;
        }
        let (x1, y1) = hull[j - 1];
        let (x2, y2) = hull[j];
        y1 + (y2 - y1) * (x0 - x1) / (x2 - x1)
    };
    let vals: Vec<f64> = curve
        .x
        .iter()
        .zip(&curve.y)
        .map(|(&xi, &yi)| if yi.is_finite() { env_at(xi) } else { yi })
        .collect();
    SampledCurve::new(curve.x.clone(), vals, None, curve.meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Superdifferential {
    /// Right derivative f'(x+): the lower end for concave curves.
    pub slope_right: f64,
    /// Left derivative f'(x-): the upper end for concave curves.
    pub slope_left: f64,
    /// True when x0 was at the boundary and only one side is available.
    pub boundary: bool,
}

/// One-sided secant slopes at the sample point nearest to x0.
pub fn superdifferential(curve: &SampledCurve, x0: f64) -> Result<Superdifferential> {
    let (x, y) = curve.finite_points();
    if x.len() < 2 {
        return Err(LabError::InsufficientData("need >= 2 finite points".into()));
    }
    let i = x
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x0).abs().total_cmp(&(b.1 - x0).abs()))
        .map(|(i, _)| i)
        .unwrap();
    let left = (i > 0).then(|| (y[i] - y[i - 1]) / (x[i] - x[i - 1]));
    let right = (i + 1 < x.len()).then(|| (y[i + 1] - y[i]) / (x[i + 1] - x[i]));
    match (left, right) {
        (Some(l), Some(r)) => Ok(Superdifferential { slope_right: r, slope_left: l, boundary: false }),
        (Some(l), None) => Ok(Superdifferential { slope_right: l, slope_left: l, boundary: true }),
        (None, Some(r)) => Ok(Superdifferential { slope_right: r, slope_left: r, boundary: true }),
        (None, None) => unreachable!(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceGap {
    pub gap: f64,
    pub argmax_e: f64,
    pub pass: bool,
}

/// Thermodynamic-equivalence gap: max over the S-curve grid of
/// |S(e) - (F*)(e)| restricted to the dual range of the F-curve.
pub fn equivalence_gap(
    s_curve: &SampledCurve,
    f_curve: &SampledCurve,
    tol_equiv: f64,
) -> Result<EquivalenceGap> {
    let f_star = legendre_concave(f_curve, 0)?;
    let (fx, _) = f_star.finite_points();
    let (lo, hi) = (fx[0], fx[fx.len() - 1]);
    let (sx, sy) = s_curve.finite_points();
    let mut gap = f64::NEG_INFINITY;
    let mut arg = f64::NAN;
    let mut overlap = 0usize;
    for (&e, &s) in sx.iter().zip(&sy) {
        if e < lo || e > hi {
            continue;
        }
        overlap += 1;
        let d = (s - f_star.interpolate(e)).abs();
        if d > gap {
            gap = d;
            arg = e;
        }
    }
    if overlap == 0 {
        return Err(LabError::Usage("no overlap between S grid and dual F range".into()));
    }
    Ok(EquivalenceGap { gap, argmax_e: arg, pass: gap <= tol_equiv })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeEstimate {
    /// Headline estimate: the extrapolated limit when stable, else the
    /// final secant slope.
    pub slope: f64,
    /// Final (rightmost) secant slope.
    pub last: f64,
    /// The fitted window of secant slopes, left to right.
    pub window_slopes: Vec<f64>,
    /// Concave curves must have non-increasing slopes.
    pub monotone: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Asymptotic slope of the upper (right) end of the curve.
pub fn asymptotic_slope(curve: &SampledCurve, window: usize) -> Result<SlopeEstimate> {
    let slopes = curve.secant_slopes();
    if slopes.len() < window.max(2) {
        return Err(LabError::InsufficientData(format!(
            "need >= {} secants, have {}",
            window.max(2),
            slopes.len()
        )));
    }
    let w = &slopes[slopes.len() - window..];
    let last = w[w.len() - 1];
    let noise = 1e-12 * (1.0 + last.abs());
    let monotone = w.windows(2).all(|p| p[1] <= p[0] + noise);
    let mut warning = None;
    if !monotone {
        warning = Some("slope sequence is not monotone over the window".into());
    }
    // Aitken extrapolation of the slope sequence
    let mut slope = last;
    if w.len() >= 3 {
        let (s0, s1, s2) = (w[w.len() - 3], w[w.len() - 2], last);
        let denom = s2 - 2.0 * s1 + s0;
        if denom.abs() > 1e-14 * (1.0 + last.abs()) {
            let acc = s2 - (s2 - s1) * (s2 - s1) / denom;
            // only trust the acceleration when it stays near the data
            if (acc - last).abs() <= 4.0 * (s2 - s1).abs() {
                slope = acc;
            } else {
                warning = Some("extrapolation diverged; reporting final secant".into());
            }
        }
    }
    Ok(SlopeEstimate { slope, last, window_slopes: w.to_vec(), monotone, warning })
}

/// Analytic critical inverse temperature 2d / dot-w; -inf for bounded
/// kernels (dot-w = 0).
pub fn beta_c_analytic(w: &RadialProfile, d: usize) -> Result<f64> {
    let wd = dot_w(w)?;
    if wd > 1e-4 {
        return Err(LabError::Config(format!(
            "profile has positive limiting slope ({wd:.3e}); not a repulsive decreasing kernel"
        )));
    }
    if wd.abs() <= 1e-4 {
        Ok(f64::NEG_INFINITY)
    } else {
        Ok(2.0 * d as f64 / wd)
    }
}

/// Budgets for the three-way critical-temperature comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrosscheckBudgets {
    /// Particle count for the finite-N pipeline.
    pub n_particles: usize,
    pub micro_samples: usize,
    pub seed: u64,
    pub shells: usize,
    pub r_max: f64,
    /// Secants in the slope-fit window.
    pub window: usize,
    /// Relative agreement tolerance for the verdict flags.
    pub rel_tol: f64,
    /// Nested sample sizes for the partition-function trend diagnostic.
    pub zn_sizes: Vec<usize>,
}

impl Default for CrosscheckBudgets {
    fn default() -> Self {
        CrosscheckBudgets {
            n_particles: 8,
            micro_samples: 200_000,
            seed: 1,
            shells: 256,
            r_max: 6.0,
            window: 6,
            rel_tol: 0.15,
            zn_sizes: vec![10_000, 100_000, 1_000_000],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZnTrendPoint {
    pub samples: usize,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZnDiagnostics {
    pub beta: f64,
    pub trend: Vec<ZnTrendPoint>,
    /// "unbounded" = estimate grows by more than x10 across nested sample
    /// sizes while the relative stderr does not shrink.
    pub divergent: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalBetaReport {
    pub beta_analytic: f64,
    pub beta_macro: Option<SlopeEstimate>,
    pub beta_micro: Option<SlopeEstimate>,
    pub agreement_macro: Option<bool>,
    pub agreement_micro: Option<bool>,
    pub zn_diagnostics: Vec<ZnDiagnostics>,
    pub notes: Vec<String>,
}

impl CriticalBetaReport {
    pub fn assess(&mut self, rel_tol: f64) {
        let compare = |est: &Option<SlopeEstimate>, target: f64| {
            est.as_ref().map(|s| {
                if target.is_finite() {
                    (s.slope - target).abs() <= rel_tol * target.abs()
                } else {
                    // -inf case: slopes must keep decreasing without stabilizing
                    !s.monotone || s.slope < -1.0
                }
            })
        };
        self.agreement_macro = compare(&self.beta_macro, self.beta_analytic);
        self.agreement_micro = compare(&self.beta_micro, self.beta_analytic);
    }
}

/// Monte Carlo trend diagnostic for Z_{N,beta} = E[e^{-beta H}] under the
/// prior: the estimate is recomputed on nested prefixes of one sample
/// stream; "divergent" means it grows by more than x10 while the relative
/// stderr fails to shrink.
pub fn zn_divergence_diagnostic(
    model: &crate::model::ModelSpec,
    beta: f64,
    sizes: &[usize],
    seed: u64,
) -> Result<ZnDiagnostics> {
    let n = model
        .n_particles
        .ok_or_else(|| LabError::Usage("model must set N for the Z diagnostic".into()))?;
    let max = *sizes
        .iter()
        .max()
        .ok_or_else(|| LabError::Usage("need at least one sample size".into()))?;
    let energies = crate::micro::sample_energies(model, max, seed)?;
    let nf = n as f64;
    let mut trend = Vec::with_capacity(sizes.len());
    let mut sorted_sizes = sizes.to_vec();
    sorted_sizes.sort_unstable();
    for &m in &sorted_sizes {
        let slice = &energies[..m];
        // H = N e; weights e^{-beta N e}
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for &e in slice {
            let w = (-beta * nf * e).exp();
            sum += w;
            sumsq += w * w;
        }
        let mf = m as f64;
        let mean = sum / mf;
        let var = (sumsq / mf - mean * mean).max(0.0);
        trend.push(ZnTrendPoint { samples: m, estimate: mean, stderr: (var / mf).sqrt() });
    }
    let first = &trend[0];
    let last = &trend[trend.len() - 1];
    let grew = last.estimate > 10.0 * first.estimate;
    let rel_first = first.stderr / first.estimate.abs().max(1e-300);
    let rel_last = last.stderr / last.estimate.abs().max(1e-300);
    let divergent = grew && rel_last >= 0.5 * rel_first;
    Ok(ZnDiagnostics { beta, trend, divergent })
}

/// Compare the analytic critical inverse temperature against the slope
/// limits of the macroscopic and finite-N entropy curves, with partition
/// function trend diagnostics just above and below the analytic value.
pub fn critical_beta_crosscheck(
    model: &crate::model::ModelSpec,
    budgets: &CrosscheckBudgets,
) -> Result<CriticalBetaReport> {
    use crate::macroscopic::{discretize_radial, entropy_curve_dual, solve_mean_field, SolverOptions};
    use crate::micro::{tail_logprob_direct, Tail};

    let profile = model
        .kernel
        .as_radial()
        .ok_or_else(|| LabError::Usage("crosscheck needs a radial kernel".into()))?;
    let d = model.dim();
    let beta_analytic = beta_c_analytic(profile, d)?;
    let mut notes = Vec::new();

    // macroscopic branch: push beta toward the critical value and read off
    // the slope of the dual entropy curve
    let dm = discretize_radial(model, budgets.shells, budgets.r_max)?;
    let opts = SolverOptions::default();
    let e0 = dm.energy(&dm.mass0);
    let beta_edge = if beta_analytic.is_finite() {
        beta_analytic * (1.0 - 0.02)
    } else {
        // bounded kernel: go far negative; e saturates near e_max
        -40.0
    };
    let beta_macro = (|| -> Result<SlopeEstimate> {
        let e_hi = solve_mean_field(&dm, beta_edge, None, &opts)?.energy;
        if !(e_hi > e0 + 0.05) {
            return Err(LabError::InsufficientData(
                "mean-field energy range too narrow for a slope fit".into(),
            ));
        }
        let grid = crate::curve::linspace(e0 + 0.02 * (e_hi - e0), e_hi, 40);
        let s = entropy_curve_dual(&dm, &grid, beta_edge * 1.001, 1.0, &opts)?;
        asymptotic_slope(&s, budgets.window)
    })();
    let beta_macro = match beta_macro {
        Ok(est) => Some(est),
        Err(e) => {
            notes.push(format!("macroscopic branch failed: {e}"));
            None
        }
    };

    // finite-N branch: upper-tail entropy from direct sampling, grid set
    // from a pilot run's upper quantiles
    let micro_model = crate::model::ModelSpec::new(
        model.domain,
        model.kernel.clone(),
        model.potential.clone(),
        model.prior.clone(),
        Some(budgets.n_particles),
    )?;
    let beta_micro = (|| -> Result<SlopeEstimate> {
        let pilot = crate::micro::sample_energies(&micro_model, 20_000, budgets.seed ^ 0x51)?;
        let mut sorted = pilot;
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p) as usize];
        // keep tail counts resolvable at the full budget
        let lo = q(0.5);
        let hi = q(1.0 - 20.0 / budgets.micro_samples as f64);
        let grid = crate::curve::linspace(lo, hi, 20);
        let s = tail_logprob_direct(
            &micro_model,
            &grid,
            Tail::Upper,
            budgets.micro_samples,
            budgets.seed,
        )?;
        asymptotic_slope(&s, budgets.window)
    })();
    let beta_micro = match beta_micro {
        Ok(est) => Some(est),
        Err(e) => {
            notes.push(format!("finite-N branch failed: {e}"));
            None
        }
    };

    let mut zn_diagnostics = Vec::new();
    if beta_analytic.is_finite() {
        for factor in [1.0 - 0.1, 1.0 + 0.1] {
            match zn_divergence_diagnostic(
                &micro_model,
                beta_analytic * factor,
                &budgets.zn_sizes,
                budgets.seed ^ 0x2a,
            ) {
                Ok(diag) => zn_diagnostics.push(diag),
                Err(e) => notes.push(format!("Z trend at factor {factor} failed: {e}")),
            }
        }
    } else {
        notes.push("analytic value is -inf; slope estimates should keep decreasing".into());
    }

    let mut report = CriticalBetaReport {
        beta_analytic,
        beta_macro,
        beta_micro,
        agreement_macro: None,
        agreement_micro: None,
        zn_diagnostics,
        notes,
    };
    report.assess(budgets.rel_tol);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{linspace, Provenance};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn curve_from(x: Vec<f64>, y: Vec<f64>) -> SampledCurve {
        SampledCurve::new(x, y, None, Provenance::Synthetic).unwrap()
    }

    #[test]
    fn legendre_of_neg_half_square_is_itself() {
        let x = linspace(-3.0, 3.0, 121);
        let y: Vec<f64> = x.iter().map(|v| -v * v / 2.0).collect();
        let f = curve_from(x, y);
        let fs = legendre_concave(&f, 0).unwrap();
        let dx = 6.0 / 120.0;
        for (xi, yi) in fs.x.iter().zip(&fs.y) {
            if xi.abs() <= 2.9 {
                assert!(
                    (yi - (-xi * xi / 2.0)).abs() <= dx * dx / 2.0 + 1e-12,
                    "f*({xi}) = {yi}"
                );
            }
        }
    }

    #[test]
    fn legendre_of_neg_abs_is_zero_on_unit_interval() {
        let x = linspace(-2.0, 2.0, 81);
        let y: Vec<f64> = x.iter().map(|v| -v.abs()).collect();
        let fs = legendre_concave(&curve_from(x, y), 0).unwrap();
        for (xi, yi) in fs.x.iter().zip(&fs.y) {
            if xi.abs() <= 0.999 {
                assert!(yi.abs() < 1e-12, "f*({xi}) = {yi}");
            }
        }
    }

    #[test]
    fn envelope_of_concave_curve_is_identity() {
        let x = linspace(0.0, 4.0, 33);
        let y: Vec<f64> = x.iter().map(|v| -(v - 2.0) * (v - 2.0)).collect();
        let c = curve_from(x, y);
        let env = concave_envelope(&c).unwrap();
        for (a, b) in env.y.iter().zip(&c.y) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_bridges_a_dent_affinely() {
        // f(x) = min(-x^2, -(x-2)^2) has a dent around x = 1
        let x = linspace(-1.0, 3.0, 81);
        let y: Vec<f64> = x.iter().map(|v| (-v * v).min(-(v - 2.0) * (v - 2.0))).collect();
        let c = curve_from(x.clone(), y.clone());
        let env = concave_envelope(&c).unwrap();
        // envelope dominates
        for i in 0..x.len() {
            assert!(env.y[i] >= y[i] - 1e-12);
        }
        // affine on the gap: second differences vanish where env > f
        for i in 1..x.len() - 1 {
            if env.y[i] > y[i] + 1e-9 {
                let d2 = env.y[i + 1] - 2.0 * env.y[i] + env.y[i - 1];
                assert!(d2.abs() < 1e-10, "at x = {}", x[i]);
            }
        }
    }

    #[test]
    fn envelope_ignores_end_sentinel() {
        let x = linspace(0.0, 1.0, 5);
        let mut y = vec![0.0, -0.1, -0.3, -0.6, -1.0];
        y[0] = f64::NEG_INFINITY;
        let c = SampledCurve::new(x, y, None, Provenance::Synthetic).unwrap();
        let env = concave_envelope(&c).unwrap();
        assert_eq!(env.y[0], f64::NEG_INFINITY);
        assert!(env.y[1].is_finite());
    }

    #[test]
    fn superdifferential_of_neg_abs_at_zero() {
        let x = linspace(-1.0, 1.0, 21);
        let y: Vec<f64> = x.iter().map(|v| -v.abs()).collect();
        let sd = superdifferential(&curve_from(x, y), 0.0).unwrap();
        assert_relative_eq!(sd.slope_right, -1.0);
        assert_relative_eq!(sd.slope_left, 1.0);
        assert!(!sd.boundary);
    }

    #[test]
    fn superdifferential_affine_curve() {
        let x = linspace(0.0, 1.0, 11);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let sd = superdifferential(&curve_from(x, y), 0.5).unwrap();
        assert_relative_eq!(sd.slope_right, 3.0);
        assert_relative_eq!(sd.slope_left, 3.0);
    }

    #[test]
    fn superdifferential_boundary_flagged() {
        let x = linspace(0.0, 1.0, 11);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let sd = superdifferential(&curve_from(x, y), 0.0).unwrap();
        assert!(sd.boundary);
    }

    #[test]
    fn equivalence_gap_closes_for_dual_pair() {
        // concave S, F = S* => S = F* up to interpolation error
        let e = linspace(-2.0, 2.0, 201);
        let s: Vec<f64> = e.iter().map(|v| -v * v).collect();
        let s_curve = curve_from(e, s);
        let f_curve = legendre_concave(&s_curve, 2).unwrap();
        let gap = equivalence_gap(&s_curve, &f_curve, 1e-3).unwrap();
        assert!(gap.pass, "gap = {}", gap.gap);
    }

    #[test]
    fn equivalence_gap_detects_dent() {
        let e = linspace(-1.0, 3.0, 161);
        let s: Vec<f64> = e.iter().map(|v| (-v * v).min(-(v - 2.0) * (v - 2.0))).collect();
        let s_curve = curve_from(e.clone(), s.clone());
        let f_curve = legendre_concave(&s_curve, 2).unwrap();
        let gap = equivalence_gap(&s_curve, &f_curve, 1e-6).unwrap();
        // F* is the concave envelope; the gap equals the dent depth
        let env = concave_envelope(&s_curve).unwrap();
        let dent = env
            .y
            .iter()
            .zip(&s)
            .map(|(a, b)| a - b)
            .fold(0.0f64, f64::max);
        assert!(!gap.pass);
        assert_relative_eq!(gap.gap, dent, max_relative = 1e-6);
    }

    #[test]
    fn asymptotic_slope_affine_tail_exact() {
        let x = linspace(0.0, 5.0, 26);
        let y: Vec<f64> = x.iter().map(|v| 1.0 - 4.0 * v).collect();
        let est = asymptotic_slope(&curve_from(x, y), 5).unwrap();
        assert_eq!(est.slope, -4.0);
        assert_eq!(est.last, -4.0);
        assert!(est.monotone);
    }

    #[test]
    fn asymptotic_slope_converges_with_log_correction() {
        // S(e) = -4 e + log(1 + e): secant slopes -> -4
        let x = linspace(1.0, 200.0, 400);
        let y: Vec<f64> = x.iter().map(|v| -4.0 * v + (1.0 + v).ln()).collect();
        let est = asymptotic_slope(&curve_from(x, y), 10).unwrap();
        assert!((est.slope + 4.0).abs() < 0.01, "slope = {}", est.slope);
        assert!(est.monotone);
    }

    #[test]
    fn beta_c_analytic_log_kernel_is_minus_four() {
        assert_eq!(beta_c_analytic(&RadialProfile::log(), 2).unwrap(), -4.0);
    }

    #[test]
    fn beta_c_analytic_bounded_kernels_minus_infinity() {
        assert_eq!(
            beta_c_analytic(&RadialProfile::power_law(1.0), 2).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(beta_c_analytic(&RadialProfile::log_log(), 2).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn slope_matches_superdifferential_on_affine_curves() {
        let x = linspace(0.0, 1.0, 11);
        let y: Vec<f64> = x.iter().map(|v| -2.5 * v).collect();
        let c = curve_from(x, y);
        let est = asymptotic_slope(&c, 4).unwrap();
        let sd = superdifferential(&c, 0.5).unwrap();
        assert_eq!(est.slope, sd.slope_left);
        assert_eq!(est.slope, sd.slope_right);
    }

    // --- property tests ----------------------------------------------------

    fn random_concave_curve(seed: u64, n: usize) -> SampledCurve {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            v
        };
        // concave: integrate decreasing slopes
        let mut slopes: Vec<f64> = (0..x.len() - 1).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        slopes.sort_by(|a, b| b.total_cmp(a));
        let mut y = vec![rng.random::<f64>()];
        for i in 0..x.len() - 1 {
            let v = y[i] + slopes[i] * (x[i + 1] - x[i]);
            y.push(v);
        }
        SampledCurve::new(x, y, None, Provenance::Synthetic).unwrap()
    }

    proptest! {
        #[test]
        fn involution_on_concave_curves(seed in 0u64..500, n in 4usize..40) {
            let c = random_concave_curve(seed, n);
            let env = concave_envelope(&c).unwrap();
            for (a, b) in env.y.iter().zip(&c.y) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn order_reversal(seed in 0u64..200, n in 4usize..30) {
            // f <= g pointwise => f* >= g* on the common dual grid
            let f = random_concave_curve(seed, n);
            let shift = 0.7;
            let g = SampledCurve::new(
                f.x.clone(),
                f.y.iter().map(|v| v + shift).collect(),
                None,
                Provenance::Synthetic,
            ).unwrap();
            let fs = legendre_concave(&f, 1).unwrap();
            let gs = legendre_concave(&g, 1).unwrap();
            for (&xd, &fv) in fs.x.iter().zip(&fs.y) {
                let gv = gs.interpolate(xd);
                prop_assert!(fv >= gv - 1e-9, "at {xd}: f* = {fv}, g* = {gv}");
            }
        }

        #[test]
        fn envelope_dominates(seed in 0u64..200, n in 4usize..40) {
            use rand::prelude::*;
            // arbitrary (non-concave) curves
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
            x.sort_by(f64::total_cmp);
            x.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            if x.len() < 2 { return Ok(()); }
            let y: Vec<f64> = (0..x.len()).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let c = SampledCurve::new(x, y, None, Provenance::Synthetic).unwrap();
            let env = concave_envelope(&c).unwrap();
            for (a, b) in env.y.iter().zip(&c.y) {
                prop_assert!(*a >= b - 1e-12);
            }
        }
    }
}
