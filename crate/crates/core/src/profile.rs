//! Radial interaction profiles w(r).
//!
//! Values live in R ∪ {+inf}; singular profiles may diverge as r -> 0+.
//! Evaluation is deterministic: the same r always yields the same bits.

use std::fmt;
use std::sync::Arc;

type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct RadialProfile {
    eval: EvalFn,
    pub limit_at_zero: f64,
    pub label: String,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("label", &self.label)
            .field("limit_at_zero", &self.limit_at_zero)
            .finish()
    }
}

impl RadialProfile {
    pub fn new(label: impl Into<String>, limit_at_zero: f64, eval: EvalFn) -> Self {
        Self { eval, limit_at_zero, label: label.into() }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            self.limit_at_zero
        } else {
            (self.eval)(r)
        }
    }

    /// Point-vortex kernel profile with the normalization tied to the
    /// beta_c = -4 anchor: w(r) = -log r.
    pub fn log() -> Self {
        Self::new("log", f64::INFINITY, Arc::new(|r| -r.ln()))
    }

    /// The 1/(2 pi)-scaled logarithmic profile, w(r) = -(1/2pi) log r.
    pub fn log_2pi() -> Self {
        let c = 1.0 / (2.0 * std::f64::consts::PI);
        Self::new("log2pi", f64::INFINITY, Arc::new(move |r| -c * r.ln()))
    }

    /// Continuous repulsive power law w(r) = -r^a, a > 0.
    pub fn power_law(a: f64) -> Self {
        assert!(a > 0.0);
        Self::new(format!("power[a={a}]"), 0.0, Arc::new(move |r| -r.powf(a)))
    }

    /// Singular repulsive power law w(r) = r^{-alpha}, alpha > 0.
    pub fn inverse_power(alpha: f64) -> Self {
        assert!(alpha > 0.0);
        Self::new(
            format!("inverse_power[alpha={alpha}]"),
            f64::INFINITY,
            Arc::new(move |r| r.powf(-alpha)),
        )
    }

    /// Born-Mayer exponential w(r) = exp(-a r).
    pub fn born_mayer(a: f64) -> Self {
        assert!(a > 0.0);
        Self::new(format!("born_mayer[a={a}]"), 1.0, Arc::new(move |r| (-a * r).exp()))
    }

    /// Gaussian profile w(r) = exp(-r^2).
    pub fn gaussian() -> Self {
        Self::new("gaussian", 1.0, Arc::new(|r| (-r * r).exp()))
    }

    /// Iterated logarithm w(r) = log log(1/r), defined for 0 < r < 1.
    pub fn log_log() -> Self {
        Self::new(
            "loglog",
            f64::INFINITY,
            Arc::new(|r| if r < 1.0 { (1.0 / r).ln().ln() } else { f64::NAN }),
        )
    }

    /// General monomial c * r^a (e.g. r^2 for a confining potential).
    pub fn monomial(coef: f64, a: f64) -> Self {
        let lim = if a > 0.0 {
            0.0
        } else if coef >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        Self::new(format!("monomial[c={coef},a={a}]"), lim, Arc::new(move |r| coef * r.powf(a)))
    }

    pub fn zero() -> Self {
        Self::new("zero", 0.0, Arc::new(|_| 0.0))
    }

    /// Pointwise transform of the profile (used by regularization schemes).
    pub fn map_radius(
        &self,
        label: impl Into<String>,
        limit_at_zero: f64,
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let base = self.clone();
        Self::new(label, limit_at_zero, Arc::new(move |r| base.eval(map(r))))
    }
}
