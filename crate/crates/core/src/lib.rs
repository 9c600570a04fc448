//! Fractional powers of non-negative self-adjoint operators on finite
//! weighted spaces, α-stable subordination, and numerical certificates for
//! Nash and logarithmic Sobolev inequalities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod gallery;
pub mod log_sobolev;
pub mod nash;
pub mod ou;
pub mod quad;
pub mod spectral;
pub mod subordination;
pub mod torus;

pub use ensemble::{Ensemble, EnsembleConfig, Family};
pub use error::{Error, Result};
pub use gallery::{build, dirichlet_energy, GeneratorSpec};
pub use nash::{DecayProfile, NashCertificate, RateFunction};
pub use spectral::{eigendecompose, norm_1_to_inf, MeasureSpace, ScalarFunction, SpectralOperator};
pub use subordination::{laplace_check, poisson_semigroup, stable_density, subordinate_semigroup, StableSubordinator};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
