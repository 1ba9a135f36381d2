//! Small deterministic quadrature helpers used throughout the crate.

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre polynomial; accurate to machine
/// precision for the orders used here (n <= 256).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}

/// Integrate f over [a, b] with an n-point Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre_on(n, a, b);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}

/// Composite Gauss rule: split [a, b] into `panels` panels of `n` points each.
pub fn integrate_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| integrate(&f, a + k as f64 * h, a + (k + 1) as f64 * h, n))
        .sum()
}

/// Periodic trapezoid rule for (1/2pi) * \int_0^{2pi} f(theta) dtheta.
///
/// Nodes are offset by half a step so the integrand is never sampled at
/// theta = 0, where angular averages of singular kernels blow up.
pub fn angular_average<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|k| f((k as f64 + 0.5) * h)).sum::<f64>() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        // 8-point rule integrates degree-15 polynomials exactly
        let v = integrate(|x| x.powi(14), -1.0, 1.0, 8);
        assert_relative_eq!(v, 2.0 / 15.0, epsilon = 1e-13);
    }

    #[test]
    fn gauss_legendre_weights_sum() {
        let (_, w) = gauss_legendre(64);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn integrates_exp() {
        let v = integrate(f64::exp, 0.0, 1.0, 16);
        assert_relative_eq!(v, std::f64::consts::E - 1.0, epsilon = 1e-14);
    }

    #[test]
    fn angular_average_of_cos_vanishes() {
        assert!(angular_average(f64::cos, 128).abs() < 1e-15);
    }
}
