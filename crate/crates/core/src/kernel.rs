//! Pair interaction kernels W(x, y) and their regularizations.

use crate::error::{LabError, Result};
use crate::profile::RadialProfile;
use crate::quad::gauss_legendre_on;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegScheme {
    /// w_delta(r) = w(r + delta).
    Shift,
    /// w_delta(r) = w(max(r, delta)): constant inside radius delta.
    Cap,
    /// Convolution against a compactly supported bump of width delta,
    /// evaluated by a fixed 64-point product Gauss rule.
    Mollify,
}

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PairKernel {
    Radial { profile: RadialProfile },
    /// W(x, y) = -Psi(x - y).
    TranslationInvariant { psi: PointFn, label: String },
    /// Precomputed values on a node set; eval only at stored nodes.
    TableGrid { nodes: Vec<Vec<f64>>, matrix: Vec<Vec<f64>> },
}

impl fmt::Debug for PairKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairKernel::Radial { profile } => write!(f, "Radial({})", profile.label),
            PairKernel::TranslationInvariant { label, .. } => {
                write!(f, "TranslationInvariant({label})")
            }
            PairKernel::TableGrid { nodes, .. } => write!(f, "TableGrid({} nodes)", nodes.len()),
        }
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

impl PairKernel {
    pub fn radial(profile: RadialProfile) -> Self {
        PairKernel::Radial { profile }
    }

    pub fn translation_invariant(
        label: impl Into<String>,
        psi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PairKernel::TranslationInvariant { psi: Arc::new(psi), label: label.into() }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            PairKernel::Radial { profile } => profile.eval(dist(x, y)),
            PairKernel::TranslationInvariant { psi, .. } => {
                let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                -psi(&diff)
            }
            PairKernel::TableGrid { nodes, matrix } => {
                let find = |p: &[f64]| nodes.iter().position(|n| n.as_slice() == p);
                match (find(x), find(y)) {
                    (Some(i), Some(j)) => matrix[i][j],
                    _ => f64::NAN,
                }
            }
        }
    }

    /// The radial profile view, when the kernel is radial.
    pub fn as_radial(&self) -> Option<&RadialProfile> {
        match self {
            PairKernel::Radial { profile } => Some(profile),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PairKernel::Radial { profile } => profile.label.clone(),
            PairKernel::TranslationInvariant { label, .. } => label.clone(),
            PairKernel::TableGrid { .. } => "table".into(),
        }
    }
}

/// Normalized bump of width delta on [0, delta]: b(s) ~ (1 - (s/delta)^2)^3.
fn bump(s: f64, delta: f64) -> f64 {
    let t = s / delta;
    if t >= 1.0 {
        0.0
    } else {
        (1.0 - t * t).powi(3)
    }
}

/// Mollified profile in the plane: (w * b_delta)(x) for |x| = r, with the
/// bump normalized by the same quadrature rule so constants are reproduced
/// exactly.
fn mollify_profile(base: &RadialProfile, delta: f64) -> RadialProfile {
    let base = base.clone();
    let (sn, sw) = gauss_legendre_on(8, 0.0, delta);
    let (an, aw) = gauss_legendre_on(8, 0.0, std::f64::consts::PI);
    // mass of the bump under the same rule (factor 2 from angular symmetry)
    let mass: f64 = sn
        .iter()
        .zip(&sw)
        .map(|(&s, &ws)| ws * s * bump(s, delta) * 2.0 * aw.iter().sum::<f64>())
        .sum();
    let label = format!("mollify[{},delta={delta}]", base.label);
    let eval = move |r: f64| {
        let mut acc = 0.0;
        for (&s, &ws) in sn.iter().zip(&sw) {
            let b = bump(s, delta);
            if b == 0.0 {
                continue;
            }
            for (&a, &wa) in an.iter().zip(&aw) {
                // |x - u| for |x| = r, |u| = s, angle a between them
                let d2 = r * r + s * s - 2.0 * r * s * a.cos();
                acc += ws * wa * 2.0 * s * b * base.eval(d2.max(0.0).sqrt());
            }
        }
        acc / mass
    };
    let lim = eval(0.0);
    RadialProfile::new(label, lim, Arc::new(eval))
}

/// Returns a regularized copy of the kernel, finite on the diagonal.
pub fn regularize(kernel: &PairKernel, scheme: RegScheme, delta: f64) -> Result<PairKernel> {
    if delta <= 0.0 {
        return Err(LabError::Config("regularization requires delta > 0".into()));
    }
    match kernel {
        PairKernel::Radial { profile } => {
            let p = match scheme {
                RegScheme::Shift => {
                    let lim = profile.eval(delta);
                    profile.map_radius(
                        format!("shift[{},delta={delta}]", profile.label),
                        lim,
                        move |r| r + delta,
                    )
                }
                RegScheme::Cap => {
                    let lim = profile.eval(delta);
                    profile.map_radius(
                        format!("cap[{},delta={delta}]", profile.label),
                        lim,
                        move |r| r.max(delta),
                    )
                }
                RegScheme::Mollify => mollify_profile(profile, delta),
            };
            Ok(PairKernel::Radial { profile: p })
        }
        PairKernel::TranslationInvariant { psi, label } => match scheme {
            RegScheme::Shift | RegScheme::Cap => {
                let psi = psi.clone();
                let label = format!("{scheme:?}[{label},delta={delta}]").to_lowercase();
                Ok(PairKernel::translation_invariant(label, move |diff: &[f64]| {
                    let r: f64 = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if r == 0.0 {
                        // evaluate on a shifted point along the first axis
                        let mut p = vec![0.0; diff.len()];
                        p[0] = delta;
                        return psi(&p);
                    }
                    let scale = match scheme {
                        RegScheme::Shift => (r + delta) / r,
                        RegScheme::Cap => r.max(delta) / r,
                        RegScheme::Mollify => unreachable!(),
                    };
                    let p: Vec<f64> = diff.iter().map(|v| v * scale).collect();
                    psi(&p)
                }))
            }
            RegScheme::Mollify => Err(LabError::Config(
                "mollify is only available for radial kernels".into(),
            )),
        },
        PairKernel::TableGrid { .. } => Err(LabError::Config(
            "cannot regularize a tabulated kernel".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_composite;
    use approx::assert_relative_eq;

    #[test]
    fn shift_on_log_2pi_matches_closed_form() {
        // W_delta(x,y) = -(1/2pi) log(|x-y| + delta) exactly
        let k = regularize(&PairKernel::radial(RadialProfile::log_2pi()), RegScheme::Shift, 0.5)
            .unwrap();
        let v = k.eval(&[0.0, 0.0], &[0.5, 0.0]);
        assert_eq!(v, -(1.0f64).ln() / (2.0 * std::f64::consts::PI));
        assert_eq!(v, 0.0);
        let v2 = k.eval(&[0.0, 0.0], &[0.3, 0.0]);
        assert_relative_eq!(v2, -(0.8f64).ln() / (2.0 * std::f64::consts::PI), epsilon = 1e-15);
    }

    #[test]
    fn cap_is_constant_inside_delta() {
        let k =
            regularize(&PairKernel::radial(RadialProfile::log()), RegScheme::Cap, 0.1).unwrap();
        let at = |r: f64| k.eval(&[0.0, 0.0], &[r, 0.0]);
        assert_eq!(at(0.05), at(0.1));
        assert_eq!(at(0.0), at(0.1));
        assert!(at(0.2) < at(0.1));
    }

    #[test]
    fn mollify_close_to_base_away_from_singularity() {
        // Oracle: high-order composite quadrature of the convolution integral.
        let base = RadialProfile::log();
        let delta = 0.1;
        let k = regularize(&PairKernel::radial(base.clone()), RegScheme::Mollify, delta).unwrap();
        let got = k.eval(&[0.0, 0.0], &[1.0, 0.0]);
        assert!((got - base.eval(1.0)).abs() < 1e-3);

        // independent oracle at higher order
        let mass = integrate_composite(|s| s * bump(s, delta), 0.0, delta, 16, 8)
            * 2.0
            * std::f64::consts::PI;
        let oracle = integrate_composite(
            |s| {
                s * bump(s, delta)
                    * 2.0
                    * integrate_composite(
                        |a| base.eval((1.0 + s * s - 2.0 * s * a.cos()).sqrt()),
                        0.0,
                        std::f64::consts::PI,
                        16,
                        8,
                    )
            },
            0.0,
            delta,
            16,
            8,
        ) / mass;
        assert!((got - oracle).abs() < 1e-3, "got {got}, oracle {oracle}");
    }

    #[test]
    fn regularized_kernels_finite_on_diagonal() {
        for scheme in [RegScheme::Shift, RegScheme::Cap, RegScheme::Mollify] {
            let k = regularize(&PairKernel::radial(RadialProfile::log()), scheme, 0.1).unwrap();
            let v = k.eval(&[0.3, 0.4], &[0.3, 0.4]);
            assert!(v.is_finite(), "{scheme:?} diagonal not finite: {v}");
        }
    }

    #[test]
    fn symmetry_exact_for_builtin_kernels() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let kernels = [
            PairKernel::radial(RadialProfile::log()),
            PairKernel::radial(RadialProfile::power_law(1.5)),
            PairKernel::radial(RadialProfile::born_mayer(1.0)),
            regularize(&PairKernel::radial(RadialProfile::log()), RegScheme::Shift, 0.1).unwrap(),
        ];
        for k in &kernels {
            for _ in 0..1000 {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                let y = [rng.random::<f64>(), rng.random::<f64>()];
                assert_eq!(k.eval(&x, &y), k.eval(&y, &x));
            }
        }
    }

    #[test]
    fn shift_monotone_in_delta_for_decreasing_profiles() {
        // delta1 < delta2 => w_{delta1}(r) >= w_{delta2}(r)
        for profile in [RadialProfile::log(), RadialProfile::power_law(1.0)] {
            let k1 = regularize(&PairKernel::radial(profile.clone()), RegScheme::Shift, 0.1).unwrap();
            let k2 = regularize(&PairKernel::radial(profile), RegScheme::Shift, 0.5).unwrap();
            for i in 0..50 {
                let r = 0.02 * (i + 1) as f64;
                let x = [0.0, 0.0];
                let y = [r, 0.0];
                assert!(k1.eval(&x, &y) >= k2.eval(&x, &y));
            }
        }
    }

    #[test]
    fn unsupported_scheme_is_config_error() {
        let table = PairKernel::TableGrid { nodes: vec![], matrix: vec![] };
        assert!(regularize(&table, RegScheme::Shift, 0.1).is_err());
    }
}
