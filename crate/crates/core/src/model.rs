//! Model bundles: domain, kernel, exterior potential and prior measure.

use crate::error::{LabError, Result};
use crate::kernel::{regularize, PairKernel, RegScheme};
use crate::profile::RadialProfile;
use crate::quad::integrate_composite;
use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Ball { d: usize, r: f64 },
    FullSpace { d: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { d, .. } | Domain::FullSpace { d } => *d,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            Domain::Ball { r, .. } => Some(*r),
            Domain::FullSpace { .. } => None,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Ball { r, .. } => x.iter().map(|v| v * v).sum::<f64>() <= r * r,
            Domain::FullSpace { .. } => x.iter().all(|v| v.is_finite()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Domain::Ball { d, r } if *d >= 1 && *r > 0.0 => Ok(()),
            Domain::FullSpace { d } if *d >= 1 => Ok(()),
            _ => Err(LabError::Config("domain requires d >= 1 and R > 0".into())),
        }
    }
}

#[derive(Clone)]
pub enum ExteriorPotential {
    Zero,
    Radial { profile: RadialProfile },
    General { f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, label: String },
}

impl std::fmt::Debug for ExteriorPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExteriorPotential::Zero => write!(f, "Zero"),
            ExteriorPotential::Radial { profile } => write!(f, "Radial({})", profile.label),
            ExteriorPotential::General { label, .. } => write!(f, "General({label})"),
        }
    }
}

impl ExteriorPotential {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ExteriorPotential::Zero => 0.0,
            ExteriorPotential::Radial { profile } => {
                profile.eval(x.iter().map(|v| v * v).sum::<f64>().sqrt())
            }
            ExteriorPotential::General { f, .. } => f(x),
        }
    }

    pub fn radial_eval(&self, r: f64) -> Option<f64> {
        match self {
            ExteriorPotential::Zero => Some(0.0),
            ExteriorPotential::Radial { profile } => Some(profile.eval(r)),
            ExteriorPotential::General { .. } => None,
        }
    }
}

/// Surface area of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma(half)
}

/// Lanczos gamma, good to ~1e-13 for the arguments used here.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        const G: f64 = 7.0;
        const C: [f64; 9] = [
            0.99999999999980993,
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, &c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Prior probability measure mu_0 = e^{-psi_0} d(lebesgue), with an exact
/// sampler for the built-in families and rejection sampling for the rest.
#[derive(Clone)]
pub enum PriorMeasure {
    /// Gaussian density proportional to exp(-lambda |x|^2) on R^d.
    Gaussian { d: usize, lambda: f64 },
    /// Normalized Lebesgue measure on the ball of radius r in R^d.
    UniformBall { d: usize, r: f64 },
    /// Density e^{-psi0} on a ball, sampled by rejection from the uniform
    /// envelope; `bound` must dominate sup e^{-psi0} over the ball.
    General {
        d: usize,
        r: f64,
        psi0: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        bound: f64,
        norm: f64,
    },
}

impl std::fmt::Debug for PriorMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PriorMeasure::Gaussian { d, lambda } => write!(f, "Gaussian(d={d}, lambda={lambda})"),
            PriorMeasure::UniformBall { d, r } => write!(f, "UniformBall(d={d}, r={r})"),
            PriorMeasure::General { d, r, .. } => write!(f, "General(d={d}, r={r})"),
        }
    }
}

impl PriorMeasure {
    pub fn dim(&self) -> usize {
        match self {
            PriorMeasure::Gaussian { d, .. }
            | PriorMeasure::UniformBall { d, .. }
            | PriorMeasure::General { d, .. } => *d,
        }
    }

    /// psi_0(x) including the normalizing constant, so that the density of
    /// the probability measure is exactly e^{-psi_0}.
    pub fn neg_log_density(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            PriorMeasure::Gaussian { d, lambda } => {
                // Z = (pi / lambda)^{d/2}
                lambda * r2 + (*d as f64 / 2.0) * (std::f64::consts::PI / lambda).ln()
            }
            PriorMeasure::UniformBall { d, r } => {
                if r2 <= r * r {
                    ball_volume(*d, *r).ln()
                } else {
                    f64::INFINITY
                }
            }
            PriorMeasure::General { psi0, norm, r, .. } => {
                if r2 <= r * r {
                    psi0(x) + norm.ln()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Radial density rho(r) of the probability measure w.r.t. Lebesgue
    /// (i.e. the full density at |x| = r), for rotation-invariant priors.
    pub fn radial_density(&self, r: f64) -> f64 {
        match self {
            PriorMeasure::Gaussian { d, lambda } => {
                (-lambda * r * r).exp() / (std::f64::consts::PI / lambda).powf(*d as f64 / 2.0)
            }
            PriorMeasure::UniformBall { d, r: rad } => {
                if r <= *rad {
                    1.0 / ball_volume(*d, *rad)
                } else {
                    0.0
                }
            }
            PriorMeasure::General { .. } => f64::NAN,
        }
    }

    /// One i.i.d. draw written into `out` (length d).
    pub fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        match self {
            PriorMeasure::Gaussian { lambda, .. } => {
                let sigma = (0.5 / lambda).sqrt();
                for v in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = sigma * z;
                }
                Ok(())
            }
            PriorMeasure::UniformBall { d, r } => {
                sample_uniform_ball(rng, *d, *r, out);
                Ok(())
            }
            PriorMeasure::General { d, r, psi0, bound, .. } => {
                let mut tries = 0usize;
                loop {
                    sample_uniform_ball(rng, *d, *r, out);
                    let density = (-psi0(out)).exp();
                    if rng.random::<f64>() * bound <= density {
                        return Ok(());
                    }
                    tries += 1;
                    if tries > 10_000 {
                        return Err(LabError::Config(
                            "rejection acceptance rate below 1e-3; supply a tighter envelope"
                                .into(),
                        ));
                    }
                }
            }
        }
    }
}

pub fn ball_volume(d: usize, r: f64) -> f64 {
    sphere_area(d) / d as f64 * r.powi(d as i32)
}

fn sample_uniform_ball<R: Rng>(rng: &mut R, d: usize, radius: f64, out: &mut [f64]) {
    // direction from a Gaussian, radius from the d-th root of a uniform
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = z;
            n2 += z * z;
        }
        if n2 > 0.0 {
            let u: f64 = rng.random();
            let scale = radius * u.powf(1.0 / d as f64) / n2.sqrt();
            for v in out.iter_mut() {
                *v *= scale;
            }
            return;
        }
    }
}

/// Positive weight vector for the weighted circle action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|&v| v <= 0.0) {
            return Err(LabError::Config("weight vector components must be > 0".into()));
        }
        Ok(Self(a))
    }
}

/// One statistical-mechanics model: domain, pair kernel, exterior
/// potential, prior, and an optional particle count.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub domain: Domain,
    pub kernel: PairKernel,
    pub potential: ExteriorPotential,
    pub prior: PriorMeasure,
    pub n_particles: Option<usize>,
}

impl ModelSpec {
    pub fn new(
        domain: Domain,
        kernel: PairKernel,
        potential: ExteriorPotential,
        prior: PriorMeasure,
        n_particles: Option<usize>,
    ) -> Result<Self> {
        domain.validate()?;
        if prior.dim() != domain.dim() {
            return Err(LabError::Config("prior and domain dimension mismatch".into()));
        }
        if let Some(n) = n_particles {
            if n < 1 {
                return Err(LabError::Config("N must be >= 1".into()));
            }
        }
        Ok(Self { domain, kernel, potential, prior, n_particles })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// E(mu_0) for rotation-invariant data, by radial quadrature, along
    /// with the potential part. Needs a radial kernel and potential.
    pub fn prior_energy_radial(&self, truncation: f64, panels: usize) -> Result<f64> {
        let w = self
            .kernel
            .as_radial()
            .ok_or_else(|| LabError::Usage("prior_energy_radial needs a radial kernel".into()))?
            .clone();
        let d = self.dim();
        let area = sphere_area(d);
        let rho = |r: f64| self.prior.radial_density(r) * area * r.powi(d as i32 - 1);
        // pair part: (1/2) \int\int wbar(r,s) rho(r) rho(s)
        let wbar = move |r: f64, s: f64| crate::quad::angular_average(
            |th| {
                let d2 = r * r + s * s - 2.0 * r * s * th.cos();
                w.eval(d2.max(0.0).sqrt())
            },
            256,
        );
        let inner = |r: f64| {
            integrate_composite(|s| wbar(r, s) * rho(s), 0.0, truncation, 8, panels)
        };
        let pair = 0.5 * integrate_composite(|r| inner(r) * rho(r), 0.0, truncation, 8, panels);
        let pot = match &self.potential {
            ExteriorPotential::Zero => 0.0,
            _ => integrate_composite(
                |r| self.potential.radial_eval(r).unwrap_or(f64::NAN) * rho(r),
                0.0,
                truncation,
                8,
                panels,
            ),
        };
        Ok(pair + pot)
    }
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelJson {
    pub domain: Domain,
    pub kernel: KernelJson,
    #[serde(default)]
    pub potential: Option<PotentialJson>,
    pub prior: PriorJson,
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelJson {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub regularization: Option<RegJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegJson {
    pub scheme: RegScheme,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialJson {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriorJson {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

fn param_f64(map: &serde_json::Map<String, serde_json::Value>, key: &str) -> Result<f64> {
    map.get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| LabError::Config(format!("missing numeric parameter {key:?}")))
}

pub fn profile_from_json(family: &str, params: &serde_json::Map<String, serde_json::Value>) -> Result<RadialProfile> {
    Ok(match family {
        "log" => RadialProfile::log(),
        "log2pi" => RadialProfile::log_2pi(),
        "power" => RadialProfile::power_law(param_f64(params, "a")?),
        "inverse_power" => RadialProfile::inverse_power(param_f64(params, "alpha")?),
        "born_mayer" => RadialProfile::born_mayer(param_f64(params, "a")?),
        "gaussian" => RadialProfile::gaussian(),
        "loglog" => RadialProfile::log_log(),
        "monomial" => RadialProfile::monomial(param_f64(params, "coef")?, param_f64(params, "a")?),
        "zero" => RadialProfile::zero(),
        other => return Err(LabError::Config(format!("unknown kernel family {other:?}"))),
    })
}

impl ModelJson {
    pub fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(LabError::from)
    }

    pub fn build(&self) -> Result<ModelSpec> {
        let d = self.domain.dim();
        let profile = profile_from_json(&self.kernel.family, &self.kernel.params)?;
        let mut kernel = PairKernel::radial(profile);
        if let Some(reg) = &self.kernel.regularization {
            kernel = regularize(&kernel, reg.scheme, reg.delta)?;
        }
        let potential = match &self.potential {
            None => ExteriorPotential::Zero,
            Some(p) => match p.family.as_str() {
                "zero" => ExteriorPotential::Zero,
                other => ExteriorPotential::Radial { profile: profile_from_json(other, &p.params)? },
            },
        };
        let prior = match self.prior.family.as_str() {
            "gaussian" => PriorMeasure::Gaussian {
                d,
                lambda: self.prior.params.get("lambda").and_then(|v| v.as_f64()).unwrap_or(1.0),
            },
            "uniform_ball" => {
                let r = match self.domain {
                    Domain::Ball { r, .. } => r,
                    Domain::FullSpace { .. } => {
                        return Err(LabError::Config(
                            "uniform_ball prior requires a ball domain".into(),
                        ))
                    }
                };
                PriorMeasure::UniformBall { d, r }
            }
            other => return Err(LabError::Config(format!("unknown prior family {other:?}"))),
        };
        ModelSpec::new(self.domain, kernel, potential, prior, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    #[test]
    fn gaussian_prior_normalized_by_quadrature() {
        // total mass 1 within 1e-6
        let p = PriorMeasure::Gaussian { d: 2, lambda: 1.0 };
        let mass = integrate_composite(
            |r| p.radial_density(r) * sphere_area(2) * r,
            0.0,
            10.0,
            8,
            64,
        );
        assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn uniform_ball_prior_normalized() {
        let p = PriorMeasure::UniformBall { d: 3, r: 2.0 };
        let mass = integrate_composite(
            |r| p.radial_density(r) * sphere_area(3) * r * r,
            0.0,
            2.0,
            8,
            16,
        );
        assert_relative_eq!(mass, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sampler_moments_match_quadrature() {
        // empirical mean radius vs quadrature at 1e5 draws, within 4 stderr
        let p = PriorMeasure::UniformBall { d: 2, r: 1.0 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = 100_000;
        let mut buf = [0.0; 2];
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..m {
            p.sample(&mut rng, &mut buf).unwrap();
            let r = (buf[0] * buf[0] + buf[1] * buf[1]).sqrt();
            sum += r;
            sum2 += r * r;
        }
        let mean = sum / m as f64;
        let sd = ((sum2 / m as f64 - mean * mean) / m as f64).sqrt();
        // \int_0^1 r * 2r dr = 2/3
        assert!((mean - 2.0 / 3.0).abs() < 4.0 * sd, "mean {mean}");
    }

    #[test]
    fn gaussian_sampler_centered() {
        let p = PriorMeasure::Gaussian { d: 2, lambda: 1.0 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = 100_000;
        let mut buf = [0.0; 2];
        let mut mean = [0.0; 2];
        for _ in 0..m {
            p.sample(&mut rng, &mut buf).unwrap();
            mean[0] += buf[0];
            mean[1] += buf[1];
        }
        // per-coordinate sd is sqrt(1/2); mean within 4 sigma/sqrt(M)
        let tol = 4.0 * (0.5f64).sqrt() / (m as f64).sqrt();
        assert!(mean[0].abs() / m as f64 <= tol);
        assert!(mean[1].abs() / m as f64 <= tol);
    }

    #[test]
    fn general_prior_rejection_sampling() {
        // half-density on an annulus-free disc: psi0 = const
        let p = PriorMeasure::General {
            d: 2,
            r: 1.0,
            psi0: Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum::<f64>()),
            bound: 1.0,
            norm: 1.0,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut buf = [0.0; 2];
        for _ in 0..100 {
            p.sample(&mut rng, &mut buf).unwrap();
            assert!(buf[0] * buf[0] + buf[1] * buf[1] <= 1.0);
        }
    }

    #[test]
    fn model_json_round_trip() {
        let s = r#"{
            "domain": {"type": "full_space", "d": 2},
            "kernel": {"family": "log"},
            "prior": {"family": "gaussian", "params": {"lambda": 1.0}},
            "N": 4
        }"#;
        let mj = ModelJson::from_str(s).unwrap();
        let model = mj.build().unwrap();
        assert_eq!(model.dim(), 2);
        assert_eq!(model.n_particles, Some(4));
        assert_eq!(model.kernel.eval(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = ModelSpec::new(
            Domain::Ball { d: 2, r: 1.0 },
            PairKernel::radial(RadialProfile::log()),
            ExteriorPotential::Zero,
            PriorMeasure::Gaussian { d: 3, lambda: 1.0 },
            None,
        );
        assert!(m.is_err());
    }

    #[test]
    fn gamma_half_integer() {
        assert_relative_eq!(gamma(0.5), std::f64::consts::PI.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(gamma(5.0), 24.0, epsilon = 1e-10);
    }
}
