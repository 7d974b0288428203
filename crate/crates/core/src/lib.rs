//! Simulation and minimum-contrast estimation for small-noise stochastic
//! functional delay equations (SFDEs)
//!
//! ```text
//! dX_t = b(X_t, H(X_{t−·}), α) dt + ε σ(X_t, H(X_{t−·}), β) dW_t,
//! H(X_{t−·}) = ∫₀^δ X_{t−u} μ(du),
//! ```
//!
//! observed at t = k/n. The crate covers path simulation ([`simulate`]), the
//! local-Gauss contrast ([`contrast`]), its minimisation and the Fisher
//! information ([`estimate`]), and seeded Monte Carlo experiments
//! ([`montecarlo`]).

pub mod contrast;
pub mod delay_measure;
pub mod error;
pub mod estimate;
pub mod io;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod simulate;

pub use contrast::{contrast, contrast_gradient, residual_pk, ContrastWorkspace};
pub use delay_measure::{DelayMeasure, DensityPiece, GridWeights, HistorySegment};
pub use error::{Result, SfdeError};
pub use estimate::{
    closed_form_benchmark, fisher_info, minimize_contrast, standardized_errors, EstimationResult,
    Estimator, FisherInfo,
};
pub use model::{builtin_benchmark, Coefficients, Dims, History, ModelSpec, ParameterBox};
pub use montecarlo::{run_experiment, Cell, ExperimentPlan, MonteCarloSummary};
pub use simulate::{path_to_ode_distance, simulate_path, solve_limit_ode, PathGrid, SimConfig};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
