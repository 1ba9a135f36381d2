//! Numerical laboratory for mean-field statistical mechanics: finite-N
//! microcanonical entropies, macroscopic energy/entropy/free-energy
//! functionals, Legendre duality, and critical inverse temperatures.

pub mod checks;
pub mod curve;
pub mod duality;
pub mod error;
pub mod kernel;
pub mod macroscopic;
pub mod micro;
pub mod model;
pub mod profile;
pub mod quad;
pub mod report;

pub use curve::{Provenance, SampledCurve};
pub use error::{LabError, Result};
pub use kernel::{regularize, PairKernel, RegScheme};
pub use model::{Domain, ExteriorPotential, ModelJson, ModelSpec, PriorMeasure, WeightVector};
pub use profile::RadialProfile;
pub use report::{CheckEntry, ValidationReport, Witness};
