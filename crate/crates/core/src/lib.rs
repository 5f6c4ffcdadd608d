//! Targeted local projections.
//!
//! Local projection (LP) and structural VAR impulse responses, their
//! horizon-by-horizon shrinkage combination (TLP), smooth local projections
//! (SLP), the mean-centered symmetric double bootstrap used for inference,
//! and a Monte Carlo engine for coverage experiments.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`, which is what the experiment pipeline uses.

pub mod bootstrap;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod linalg;
pub mod lyapunov;
pub mod rng;
pub mod scalar;
pub mod shrinkage;
pub mod types;

pub use bootstrap::{BootstrapConfig, BootstrapEnsemble, Centering};
pub use experiment::{ExperimentDesign, MetricsTable};

pub use error::{Error, Result};
pub use linalg::{cholesky_lower, Matrix};
pub use lyapunov::lyapunov_solve;
pub use rng::RngStream;
pub use scalar::Scalar;
pub use types::{IrfPath, Method, ShockTarget, TimeSeriesPanel};

/// Library version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Matrix64 = Matrix<f64>;
pub type Panel = TimeSeriesPanel<f64>;
pub type Irf = IrfPath<f64>;
pub type Dgp = dgp::DgpSpec<f64>;
pub type VarFit64 = estimators::VarFit<f64>;
pub type Ensemble = bootstrap::BootstrapEnsemble<f64>;
pub type Design = experiment::ExperimentDesign<f64>;
