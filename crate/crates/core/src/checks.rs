//! Structural validity checkers: log-concavity of radial profiles,
//! complete monotonicity, weak positive definiteness, sampled psh tests,
//! the disc Green-function threshold, and the limiting slope of a profile.

use crate::error::{LabError, Result};
use crate::kernel::PairKernel;
use crate::model::WeightVector;
use crate::profile::RadialProfile;
use crate::report::{CheckEntry, ValidationReport, Witness};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Relative tolerance for closed-form profile checks.
pub const TOL_PROFILE: f64 = 1e-8;
/// Tolerance for finite-difference Hessian checks.
pub const TOL_HESSIAN: f64 = 1e-6;

fn local_scale(values: &[f64]) -> f64 {
    values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Checks that w(e^t) is concave on the grid and bounded below toward r = 0.
///
/// The grid must have >= 8 points spanning >= 4 decades.
pub fn check_homogeneous_assumptions(w: &RadialProfile, grid: &[f64]) -> Result<ValidationReport> {
    if grid.len() < 8 {
        return Err(LabError::Precondition("grid needs >= 8 points".into()));
    }
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(lo > 0.0) || hi / lo < 1e4 {
        return Err(LabError::Precondition("grid must span >= 4 decades of radius".into()));
    }
    let t: Vec<f64> = grid.iter().map(|r| r.ln()).collect();
    let g: Vec<f64> = grid.iter().map(|&r| w.eval(r)).collect();
    for (i, v) in g.iter().enumerate() {
        if v.is_nan() {
            return Err(LabError::Data { at: grid[i], what: "profile evaluated to NaN".into() });
        }
    }
    let tol = TOL_PROFILE * local_scale(&g);
    let mut report = ValidationReport::new();

    // concavity: slopes of w(e^t) non-increasing
    let mut worst = (f64::NEG_INFINITY, 0usize);
    for i in 1..g.len() - 1 {
        let s_left = (g[i] - g[i - 1]) / (t[i] - t[i - 1]);
        let s_right = (g[i + 1] - g[i]) / (t[i + 1] - t[i]);
        let d2 = s_right - s_left;
        if d2 > worst.0 {
            worst = (d2, i);
        }
    }
    if worst.0 <= tol {
        report.push_pass("log-concavity", tol - worst.0);
    } else {
        report.push_fail("log-concavity", Witness::Scalar(grid[worst.1]), tol - worst.0);
    }

    // bounded below as t -> -inf: under concavity the first secant slope is
    // the largest one, so a positive first slope means w drops to -inf.
    let s0 = (g[1] - g[0]) / (t[1] - t[0]);
    if s0 <= tol {
        report.push_pass("bounded-below-at-zero", tol - s0);
    } else {
        report.push_fail("bounded-below-at-zero", Witness::Scalar(grid[0]), tol - s0);
    }
    Ok(report)
}

/// Alternating-sign finite-difference test for complete monotonicity of
/// f(r) = w(r^{1/2}) up to order `m_max`.
pub fn check_complete_monotonicity(
    w: &RadialProfile,
    m_max: usize,
    grid: &[f64],
) -> Result<ValidationReport> {
    if m_max < 3 {
        return Err(LabError::Precondition("m_max must be >= 3".into()));
    }
    if grid.iter().any(|&r| r <= 0.0) {
        return Err(LabError::Precondition("grid must be strictly positive".into()));
    }
    if grid.len() < m_max + 2 {
        return Err(LabError::Precondition("grid too short for requested order".into()));
    }
    // uniform resampling so forward differences are meaningful
    let n = grid.len();
    let (a, b) = (grid[0], grid[n - 1]);
    let xs: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let f: Vec<f64> = xs.iter().map(|&r| w.eval(r.sqrt())).collect();
    if f.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Data { at: a, what: "profile not finite on grid".into() });
    }
    let tol = TOL_PROFILE * local_scale(&f);
    let mut report = ValidationReport::new();
    let mut diff = f.clone();
    for m in 0..=m_max {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let mut worst = (f64::INFINITY, 0usize);
        for (i, &v) in diff.iter().enumerate() {
            let signed = sign * v;
            if signed < worst.0 {
                worst = (signed, i);
            }
        }
        if worst.0 >= -tol {
            report.push_pass(format!("order-{m}"), worst.0 + tol);
        } else {
            report.push_fail(format!("order-{m}"), Witness::Scalar(xs[worst.1]), worst.0 + tol);
        }
        // next forward difference
        diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(report)
}

/// Orthonormal basis of the zero-sum subspace {sum a_i = 0} in R^n
/// (Helmert construction), returned as an n x (n-1) matrix.
fn zero_sum_basis(n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n - 1);
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            p[(i, k - 1)] = 1.0 / norm;
        }
        p[(k, k - 1)] = -(k as f64) / norm;
    }
    p
}

/// Minimal eigenvalue of the Gram matrix restricted to zero-sum vectors.
///
/// Returns (lambda_min, norm_g, eigvec_in_full_space).
fn zero_sum_min_eig(g: &DMatrix<f64>) -> (f64, f64, Vec<f64>) {
    let n = g.nrows();
    let sym = (g + g.transpose()) * 0.5;
    let norm_g = sym
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let p = zero_sum_basis(n);
    let m = p.transpose() * &sym * &p;
    let eig = m.symmetric_eigen();
    let (mut min_val, mut min_idx) = (f64::INFINITY, 0);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < min_val {
            min_val = v;
            min_idx = i;
        }
    }
    let vec = &p * eig.eigenvectors.column(min_idx);
    (min_val, norm_g, vec.iter().copied().collect())
}

/// Weak positive definiteness: the Gram quadratic form must be nonnegative
/// on zero-sum coefficient vectors. Also spot-checks `trials` random
/// zero-sum vectors directly against the quadratic form.
pub fn check_weak_positive_definiteness(
    kernel: &PairKernel,
    points: &[Vec<f64>],
    trials: usize,
) -> Result<ValidationReport> {
    let n = points.len();
    if n < 2 {
        return Err(LabError::Precondition("need at least 2 points".into()));
    }
    for i in 0..n {
        for j in i + 1..n {
            if points[i] == points[j] {
                return Err(LabError::Precondition(format!("points {i} and {j} coincide")));
            }
        }
    }
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = kernel.eval(&points[i], &points[j]);
        }
        if !g[(i, i)].is_finite() {
            return Err(LabError::Precondition(
                "kernel is singular on the diagonal; apply a regularization first".into(),
            ));
        }
    }
    let (min_eig, norm_g, vec) = zero_sum_min_eig(&g);
    let tol = TOL_PROFILE * norm_g;
    let mut report = ValidationReport::new();
    if min_eig >= -tol {
        report.push_pass("zero-sum-min-eigenvalue", min_eig / norm_g.max(1e-300));
    } else {
        // witness: index of the dominant coefficient of the violating vector
        let idx = vec
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        report.push(CheckEntry {
            name: "zero-sum-min-eigenvalue".into(),
            pass: false,
            witness: Some(Witness::Index(idx)),
            margin: min_eig / norm_g.max(1e-300),
            note: Some(format!("min zero-sum eigenvalue {min_eig:.6e}, |G| = {norm_g:.6e}")),
        });
    }
    if trials > 0 {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_ab1e);
        let mut worst = f64::INFINITY;
        for _ in 0..trials {
            let mut a: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let mean = a.iter().sum::<f64>() / n as f64;
            for v in &mut a {
                *v -= mean;
            }
            let na: f64 = a.iter().map(|v| v * v).sum();
            let mut q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    q += a[i] * g[(i, j)] * a[j];
                }
            }
            worst = worst.min(q / (norm_g * na));
        }
        if worst >= -TOL_PROFILE {
            report.push_pass("random-zero-sum-vectors", worst);
        } else {
            report.push_fail("random-zero-sum-vectors", Witness::Index(0), worst);
        }
    }
    Ok(report)
}

/// For a rotation-invariant candidate psi(z) = w(|z|): psh iff w(e^t) is
/// convex on the grid.
pub fn check_psh_radial(w: &RadialProfile, grid: &[f64]) -> Result<ValidationReport> {
    if grid.len() < 3 || grid.iter().any(|&r| r <= 0.0) {
        return Err(LabError::Precondition("grid must be positive with >= 3 points".into()));
    }
    let t: Vec<f64> = grid.iter().map(|r| r.ln()).collect();
    let g: Vec<f64> = grid.iter().map(|&r| w.eval(r)).collect();
    for (i, v) in g.iter().enumerate() {
        if v.is_nan() {
            return Err(LabError::Data { at: grid[i], what: "profile evaluated to NaN".into() });
        }
    }
    let tol = TOL_PROFILE * local_scale(&g);
    let mut report = ValidationReport::new();
    let mut worst = (f64::INFINITY, 0usize);
    for i in 1..g.len() - 1 {
        let s_left = (g[i] - g[i - 1]) / (t[i] - t[i - 1]);
        let s_right = (g[i + 1] - g[i]) / (t[i + 1] - t[i]);
        let d2 = s_right - s_left;
        if d2 < worst.0 {
            worst = (d2, i);
        }
    }
    if worst.0 >= -tol {
        report.push_pass("log-convexity", worst.0 + tol);
    } else {
        report.push_fail("log-convexity", Witness::Scalar(grid[worst.1]), worst.0 + tol);
    }
    Ok(report)
}

/// Complex Hessian (d^2 f / dz_i dzbar_j) by central differences in the 2n
/// real coordinates; passes iff the minimal eigenvalue at every sampled
/// point is >= -tol.
pub fn check_psh_hessian<F>(f: F, points: &[Vec<Complex64>], h: f64) -> Result<ValidationReport>
where
    F: Fn(&[Complex64]) -> f64,
{
    if h <= 0.0 {
        return Err(LabError::Precondition("step must be positive".into()));
    }
    let mut report = ValidationReport::new();
    for (pi, z0) in points.iter().enumerate() {
        let n = z0.len();
        let eval_real = |coords: &[f64]| {
            let z: Vec<Complex64> =
                (0..n).map(|i| Complex64::new(coords[2 * i], coords[2 * i + 1])).collect();
            f(&z)
        };
        let base: Vec<f64> = z0.iter().flat_map(|z| [z.re, z.im]).collect();
        // real Hessian by central differences
        let m = 2 * n;
        let mut hess = DMatrix::zeros(m, m);
        let f0 = eval_real(&base);
        if f0.is_nan() {
            return Err(LabError::Data { at: pi as f64, what: "NaN at sample point".into() });
        }
        for a in 0..m {
            for b in a..m {
                let mut p = base.clone();
                let v = if a == b {
                    p[a] = base[a] + h;
                    let fp = eval_real(&p);
                    p[a] = base[a] - h;
                    let fm = eval_real(&p);
                    (fp - 2.0 * f0 + fm) / (h * h)
                } else {
                    p[a] = base[a] + h;
                    p[b] = base[b] + h;
                    let fpp = eval_real(&p);
                    p[b] = base[b] - h;
                    let fpm = eval_real(&p);
                    p[a] = base[a] - h;
                    let fmm = eval_real(&p);
                    p[b] = base[b] + h;
                    let fmp = eval_real(&p);
                    (fpp - fpm - fmp + fmm) / (4.0 * h * h)
                };
                if v.is_nan() {
                    return Err(LabError::Data { at: pi as f64, what: "NaN in Hessian stencil".into() });
                }
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        // H_jk = 1/4 [ (f_xx + f_yy) + i (f_xy' - f_yx') ]
        let mut re = DMatrix::zeros(n, n);
        let mut im = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
                re[(j, k)] = 0.25 * (hess[(xj, xk)] + hess[(yj, yk)]);
                im[(j, k)] = 0.25 * (hess[(xj, yk)] - hess[(yj, xk)]);
            }
        }
        let min_eig = hermitian_min_eig(&re, &im);
        let scale = re.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = TOL_HESSIAN * scale;
        let name = format!("psh-hessian-point-{pi}");
        if min_eig >= -tol {
            report.push_pass(name, min_eig + tol);
        } else {
            report.push_fail(
                name,
                Witness::Point(base),
                min_eig + tol,
            );
        }
    }
    Ok(report)
}

/// Minimal eigenvalue of the Hermitian matrix Re + i Im via the standard
/// real symmetric embedding [[Re, -Im], [Im, Re]].
fn hermitian_min_eig(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let n = re.nrows();
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            e[(i, j)] = re[(i, j)];
            e[(n + i, n + j)] = re[(i, j)];
            e[(i, n + j)] = -im[(i, j)];
            e[(n + i, j)] = im[(i, j)];
        }
    }
    let sym = (&e + e.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v))
}

/// Invariance of f under the weighted circle action with weights `a`.
pub fn check_s1_invariance<F>(
    f: F,
    a: &WeightVector,
    points: &[Vec<Complex64>],
    angles: &[f64],
) -> Result<ValidationReport>
where
    F: Fn(&[Complex64]) -> f64,
{
    let mut report = ValidationReport::new();
    let mut worst: (f64, Option<(usize, f64)>) = (0.0, None);
    for (pi, z) in points.iter().enumerate() {
        if z.len() != a.0.len() {
            return Err(LabError::Precondition("point and weight dimension mismatch".into()));
        }
        let f0 = f(z);
        for &theta in angles {
            let rotated: Vec<Complex64> = z
                .iter()
                .zip(&a.0)
                .map(|(zi, &ai)| zi * Complex64::from_polar(1.0, ai * theta))
                .collect();
            let gap = (f(&rotated) - f0).abs();
            if gap > worst.0 || worst.1.is_none() {
                worst = (gap, Some((pi, theta)));
            }
        }
    }
    let tol = TOL_HESSIAN;
    match worst {
        (gap, Some((pi, theta))) if gap > tol => {
            report.push(CheckEntry {
                name: "s1-invariance".into(),
                pass: false,
                witness: Some(Witness::Index(pi)),
                margin: tol - gap,
                note: Some(format!("violated at angle {theta}")),
            });
        }
        (gap, _) => report.push_pass("s1-invariance", tol - gap),
    }
    Ok(report)
}

/// Closed-form 2x2 complex Hessian of
/// psi(z,w) + lambda (phi(z) + phi(w)) on the unit bidisc, where
/// psi = log(|z-w|^2 / |1-z wbar|^2) and phi = -log((1-|z|^2)^2).
/// Off the diagonal the log |z-w|^2 term is pluriharmonic, so the Hessian is
///   [ 2 lambda (1-|z|^2)^{-2}   (1-zbar w)^{-2}       ]
///   [ (1-z wbar)^{-2}           2 lambda (1-|w|^2)^{-2} ]
/// Passes iff trace >= 0 and det >= -tol at every pair.
pub fn disc_green_psh_check(lambda: f64, pairs: &[(Complex64, Complex64)]) -> Result<ValidationReport> {
    let mut report = ValidationReport::new();
    let mut any_fail = false;
    let mut worst: (f64, usize) = (f64::INFINITY, 0);
    for (i, &(z, w)) in pairs.iter().enumerate() {
        if z.norm() >= 1.0 || w.norm() >= 1.0 {
            return Err(LabError::Precondition(format!("pair {i} outside the open bidisc")));
        }
        if z == w {
            return Err(LabError::Precondition(format!("pair {i} lies on the diagonal")));
        }
        let az = 1.0 - z.norm_sqr();
        let aw = 1.0 - w.norm_sqr();
        let diag_z = 2.0 * lambda / (az * az);
        let diag_w = 2.0 * lambda / (aw * aw);
        let off = (Complex64::new(1.0, 0.0) - z.conj() * w).norm_sqr();
        let trace = diag_z + diag_w;
        let det = diag_z * diag_w - 1.0 / (off * off);
        let scale = (diag_z * diag_w).abs().max(1.0 / (off * off));
        let tol = TOL_HESSIAN * scale;
        let ok = trace >= -tol && det >= -tol;
        let margin = (det + tol) / scale;
        if !ok {
            any_fail = true;
            report.push(CheckEntry {
                name: format!("disc-psh-pair-{i}"),
                pass: false,
                witness: Some(Witness::Pair(vec![z.re, z.im], vec![w.re, w.im])),
                margin,
                note: Some(format!("det = {det:.6e}, trace = {trace:.6e}")),
            });
        }
        if margin < worst.0 {
            worst = (margin, i);
        }
    }
    if !any_fail {
        report.push_pass("disc-psh", worst.0);
    }
    Ok(report)
}

/// Limiting slope of w(e^t) as t -> -inf, on a geometric t-grid down to
/// t = -60, with Aitken acceleration of the secant-slope sequence.
pub fn dot_w(w: &RadialProfile) -> Result<f64> {
    // geometric grid t_j = -2^j, capped at t >= -60
    let ts: Vec<f64> = vec![-1.0, -2.0, -4.0, -8.0, -16.0, -32.0];
    let vals: Vec<f64> = ts.iter().map(|&t| w.eval(t.exp())).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Data { at: 0.0, what: "profile not finite near zero".into() });
    }
    let slopes: Vec<f64> = ts
        .windows(2)
        .zip(vals.windows(2))
        .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
        .collect();
    // raw stabilization
    let k = slopes.len();
    if (slopes[k - 1] - slopes[k - 2]).abs() < 1e-6 {
        return Ok(snap(slopes[k - 1]));
    }
    // Aitken on the last three slopes; exact for geometric convergence
    let (s0, s1, s2) = (slopes[k - 3], slopes[k - 2], slopes[k - 1]);
    let denom = s2 - 2.0 * s1 + s0;
    if denom.abs() > 1e-300 {
        let acc = s2 - (s2 - s1) * (s2 - s1) / denom;
        // second window for a stabilization certificate
        let (r0, r1, r2) = (slopes[k - 4], slopes[k - 3], slopes[k - 2]);
        let denom2 = r2 - 2.0 * r1 + r0;
        if denom2.abs() > 1e-300 {
            let acc2 = r2 - (r2 - r1) * (r2 - r1) / denom2;
            if (acc - acc2).abs() < 1e-5 {
                return Ok(snap(acc));
            }
        }
    }
    // no acceleration possible: demand a monotone difference sequence
    let diffs: Vec<f64> = slopes.windows(2).map(|s| (s[1] - s[0]).abs()).collect();
    if diffs.windows(2).all(|d| d[1] <= d[0] * (1.0 + 1e-9)) {
        Ok(snap(slopes[k - 1]))
    } else {
        Err(LabError::Data { at: 0.0, what: "no limit detected for dot-w".into() })
    }
}

/// Snap a numerically extracted limit to the nearest integer when the
/// residual is at the level of accumulated round-off.
fn snap(v: f64) -> f64 {
    if (v - v.round()).abs() < 1e-9 {
        v.round()
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::logspace;
    use rand::prelude::*;

    fn grid() -> Vec<f64> {
        logspace(1e-4, 1.0, 32)
    }

    // --- homogeneous assumptions -------------------------------------------

    #[test]
    fn log_profile_is_log_affine() {
        let r = check_homogeneous_assumptions(&RadialProfile::log(), &grid()).unwrap();
        assert!(r.passed(), "{}", r.to_json());
    }

    #[test]
    fn power_law_passes() {
        let r = check_homogeneous_assumptions(&RadialProfile::power_law(1.0), &grid()).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn quadratic_fails_with_interior_witness() {
        let r = check_homogeneous_assumptions(&RadialProfile::monomial(1.0, 2.0), &grid()).unwrap();
        assert!(!r.passed());
        let w = r.failures().next().unwrap().witness.clone().unwrap();
        match w {
            Witness::Scalar(at) => assert!(at > 1e-4 && at < 1.0),
            other => panic!("unexpected witness {other:?}"),
        }
    }

    #[test]
    fn short_grid_rejected() {
        assert!(check_homogeneous_assumptions(&RadialProfile::log(), &[0.1, 0.2, 0.3]).is_err());
    }

    // --- complete monotonicity ---------------------------------------------

    #[test]
    fn gaussian_is_completely_monotone_in_r_squared() {
        // w(r) = e^{-r^2} => f(r) = e^{-r}
        let g = logspace(0.01, 2.0, 64);
        let r = check_complete_monotonicity(&RadialProfile::gaussian(), 5, &g).unwrap();
        assert!(r.passed(), "{}", r.to_json());
    }

    #[test]
    fn cauchy_is_completely_monotone() {
        // w(r) = 1/(1+r^2) => f(r) = 1/(1+r)
        let w = RadialProfile::new(
            "cauchy",
            1.0,
            std::sync::Arc::new(|r| 1.0 / (1.0 + r * r)),
        );
        let g = logspace(0.01, 2.0, 64);
        assert!(check_complete_monotonicity(&w, 6, &g).unwrap().passed());
    }

    #[test]
    fn quartic_gaussian_fails_at_order_two() {
        // w(r) = e^{-r^4} => f(r) = e^{-r^2}, f'' < 0 near 0
        let w = RadialProfile::new(
            "quartic",
            1.0,
            std::sync::Arc::new(|r: f64| (-r.powi(4)).exp()),
        );
        let g = logspace(0.005, 1.0, 64);
        let rep = check_complete_monotonicity(&w, 3, &g).unwrap();
        assert!(!rep.passed());
        assert!(rep.entries.iter().any(|e| e.name == "order-2" && !e.pass));
    }

    #[test]
    fn singular_profile_is_domain_error() {
        let g = logspace(1e-9, 1.0, 64);
        // inverse power has +inf nowhere on positive grid, so force one via 0-start
        let mut bad = g.clone();
        bad[0] = -0.1;
        assert!(check_complete_monotonicity(&RadialProfile::gaussian(), 3, &bad).is_err());
    }

    // --- weak positive definiteness ----------------------------------------

    fn disc_points(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| loop {
                let x = rng.random::<f64>() * 2.0 - 1.0;
                let y = rng.random::<f64>() * 2.0 - 1.0;
                if x * x + y * y <= 1.0 {
                    break vec![x, y];
                }
            })
            .collect()
    }

    #[test]
    fn negative_square_distance_is_weakly_pd() {
        // a'Ga = 2 |sum a_i x_i|^2 on zero-sum vectors
        let k = PairKernel::radial(RadialProfile::power_law(2.0));
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        let rep = check_weak_positive_definiteness(&k, &pts, 50).unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
    }

    #[test]
    fn power_law_one_is_weakly_pd_on_disc() {
        let k = PairKernel::radial(RadialProfile::power_law(1.0));
        let rep = check_weak_positive_definiteness(&k, &disc_points(64, 2), 0).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn cubic_power_law_fails() {
        let k = PairKernel::radial(RadialProfile::power_law(3.0));
        let rep = check_weak_positive_definiteness(&k, &disc_points(64, 2), 0).unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn singular_diagonal_is_precondition_error() {
        let k = PairKernel::radial(RadialProfile::log());
        let err = check_weak_positive_definiteness(&k, &disc_points(8, 1), 0);
        assert!(matches!(err, Err(LabError::Precondition(_))));
    }

    #[test]
    fn verdict_invariant_under_constant_shift() {
        // adding c changes nothing on zero-sum vectors (test with c = 1e3)
        let pts = disc_points(32, 9);
        for a in [1.0, 3.0] {
            let k = PairKernel::radial(RadialProfile::power_law(a));
            let base = check_weak_positive_definiteness(&k, &pts, 0).unwrap().passed();
            let prof = RadialProfile::new(
                "shifted",
                1e3,
                std::sync::Arc::new(move |r: f64| -r.powf(a) + 1e3),
            );
            let shifted =
                check_weak_positive_definiteness(&PairKernel::radial(prof), &pts, 0)
                    .unwrap()
                    .passed();
            assert_eq!(base, shifted, "a = {a}");
        }
    }

    #[test]
    fn zero_sum_quadratic_form_matches_moment_identity() {
        // for W = -|x-y|^2 the form equals 2 |sum a_i x_i|^2
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let pts = disc_points(16, 3);
        for _ in 0..20 {
            let mut a: Vec<f64> = (0..16).map(|_| rng.random::<f64>() - 0.5).collect();
            let mean = a.iter().sum::<f64>() / 16.0;
            for v in &mut a {
                *v -= mean;
            }
            let mut q = 0.0;
            for i in 0..16 {
                for j in 0..16 {
                    let d2: f64 = pts[i]
                        .iter()
                        .zip(&pts[j])
                        .map(|(u, v)| (u - v) * (u - v))
                        .sum();
                    q += -a[i] * a[j] * d2;
                }
            }
            let mut sx = 0.0;
            let mut sy = 0.0;
            for (ai, p) in a.iter().zip(&pts) {
                sx += ai * p[0];
                sy += ai * p[1];
            }
            let expect = 2.0 * (sx * sx + sy * sy);
            assert!((q - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        }
    }

    // --- psh checks --------------------------------------------------------

    #[test]
    fn psh_radial_log_is_affine_boundary_case() {
        let psi = RadialProfile::new("logr", f64::NEG_INFINITY, std::sync::Arc::new(|r: f64| r.ln()));
        assert!(check_psh_radial(&psi, &grid()).unwrap().passed());
    }

    #[test]
    fn psh_radial_square_passes_and_neg_log_fails_strictly_concave() {
        assert!(check_psh_radial(&RadialProfile::monomial(1.0, 2.0), &grid()).unwrap().passed());
        // -log r is affine in t: passes with margin ~0
        assert!(check_psh_radial(&RadialProfile::log(), &grid()).unwrap().passed());
        // a strictly log-concave candidate fails
        let bad = RadialProfile::new("sqrtlog", 0.0, std::sync::Arc::new(|r: f64| -(r.powf(0.5))));
        assert!(!check_psh_radial(&bad, &grid()).unwrap().passed());
    }

    #[test]
    fn homogeneous_and_psh_radial_agree_with_opposite_signs() {
        for (profile, neg) in [
            (RadialProfile::log(), RadialProfile::new("negl", f64::NEG_INFINITY, std::sync::Arc::new(|r: f64| r.ln()))),
            (RadialProfile::power_law(1.5), RadialProfile::monomial(1.0, 1.5)),
        ] {
            let conc = check_homogeneous_assumptions(&profile, &grid())
                .unwrap()
                .entries
                .iter()
                .find(|e| e.name == "log-concavity")
                .unwrap()
                .pass;
            let conv = check_psh_radial(&neg, &grid()).unwrap().passed();
            assert_eq!(conc, conv, "{}", profile.label);
        }
    }

    #[test]
    fn hessian_of_norm_squared_is_identity() {
        let f = |z: &[Complex64]| z.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let pts = vec![vec![Complex64::new(0.3, 0.1)], vec![Complex64::new(-0.5, 0.8)]];
        let rep = check_psh_hessian(f, &pts, 1e-4).unwrap();
        assert!(rep.passed());
        // margin should reflect eigenvalue 1
        assert!(rep.entries[0].margin > 0.9);
    }

    #[test]
    fn log_norm_squared_is_harmonic_off_origin() {
        let f = |z: &[Complex64]| z[0].norm_sqr().ln();
        let pts = vec![vec![Complex64::new(1.0, 0.0)]];
        let rep = check_psh_hessian(f, &pts, 1e-4).unwrap();
        assert!(rep.passed());
        assert!(rep.entries[0].margin < 1e-3); // margin ~ 0
    }

    #[test]
    fn negative_norm_squared_fails_everywhere() {
        let f = |z: &[Complex64]| -z.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let pts = vec![vec![Complex64::new(0.2, 0.4)], vec![Complex64::new(0.9, -0.1)]];
        let rep = check_psh_hessian(f, &pts, 1e-4).unwrap();
        assert!(rep.entries.iter().all(|e| !e.pass));
    }

    // --- S^1 invariance ----------------------------------------------------

    #[test]
    fn weighted_norms_are_invariant() {
        let f = |z: &[Complex64]| z[0].norm_sqr() + z[1].norm_sqr();
        let a = WeightVector::new(vec![1.0, 2.0]).unwrap();
        let pts = vec![vec![Complex64::new(0.5, 0.2), Complex64::new(-0.3, 0.7)]];
        let angles = [0.3, 1.2, std::f64::consts::PI];
        assert!(check_s1_invariance(f, &a, &pts, &angles).unwrap().passed());
    }

    #[test]
    fn mixed_weight_polynomial_modulus_not_invariant() {
        // log|z1^2 z2 + z2^3| under weights (1,2): the two monomials rotate
        // with different phases, so the modulus changes. At z = (1,1),
        // theta = pi/2: |e^{2pi i} + e^{3pi i}| = 0 vs |1 + 1| = 2.
        let f = |z: &[Complex64]| (z[0] * z[0] * z[1] + z[1].powu(3)).norm().ln();
        let a = WeightVector::new(vec![1.0, 2.0]).unwrap();
        let pts = vec![vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]];
        let angles = [std::f64::consts::FRAC_PI_2];
        assert!(!check_s1_invariance(f, &a, &pts, &angles).unwrap().passed());
    }

    #[test]
    fn real_part_not_invariant() {
        let f = |z: &[Complex64]| z[0].re;
        let a = WeightVector::new(vec![1.0]).unwrap();
        let pts = vec![vec![Complex64::new(1.0, 0.0)]];
        let rep = check_s1_invariance(f, &a, &pts, &[std::f64::consts::PI]).unwrap();
        assert!(!rep.passed());
    }

    // --- disc green check --------------------------------------------------

    fn random_pairs(n: usize, seed: u64) -> Vec<(Complex64, Complex64)> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| loop {
            let x = rng.random::<f64>() * 2.0 - 1.0;
            let y = rng.random::<f64>() * 2.0 - 1.0;
            if x * x + y * y < 0.98 {
                break Complex64::new(x, y);
            }
        };
        (0..n)
            .map(|_| {
                let z = draw(&mut rng);
                let mut w = draw(&mut rng);
                while w == z {
                    w = draw(&mut rng);
                }
                (z, w)
            })
            .collect()
    }

    #[test]
    fn disc_check_passes_at_half_and_one() {
        for lambda in [0.5, 1.0] {
            let rep = disc_green_psh_check(lambda, &random_pairs(1000, 4)).unwrap();
            assert!(rep.passed(), "lambda = {lambda}");
        }
    }

    #[test]
    fn disc_check_fails_below_half_near_origin() {
        let pairs = vec![(Complex64::new(0.01, 0.0), Complex64::new(-0.01, 0.005))];
        let rep = disc_green_psh_check(0.4, &pairs).unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn diagonal_pair_rejected() {
        let z = Complex64::new(0.2, 0.2);
        assert!(disc_green_psh_check(0.5, &[(z, z)]).is_err());
    }

    // --- dot w -------------------------------------------------------------

    #[test]
    fn dot_w_of_log_is_minus_one_exactly() {
        assert_eq!(dot_w(&RadialProfile::log()).unwrap(), -1.0);
    }

    #[test]
    fn dot_w_of_power_law_is_zero() {
        let v = dot_w(&RadialProfile::power_law(1.0)).unwrap();
        assert!(v.abs() < 1e-6, "got {v}");
    }

    #[test]
    fn dot_w_of_log_log_is_zero() {
        let v = dot_w(&RadialProfile::log_log()).unwrap();
        assert!(v.abs() < 1e-6, "got {v}");
    }

    #[test]
    fn dot_w_of_log_2pi() {
        let v = dot_w(&RadialProfile::log_2pi()).unwrap();
        assert!((v + 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-9);
    }
}
