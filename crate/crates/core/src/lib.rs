//! Stationary Wong–Zakai approximation of fractional Brownian motion.
//!
//! The crate samples fBm exactly on uniform grids, builds the moving-average
//! smoothing `G_δ(t) = ∫_0^t (ω(s+δ) - ω(s))/δ ds`, measures the error
//! `G_δ - ω` pointwise and in Besov-type norms, integrates against rough
//! signals, and drives SDEs with either signal. Monte Carlo drivers estimate
//! convergence rates; the `wzfbm` binary exposes all of it.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiations.

pub mod cli;
pub mod error;
pub mod fbm;
pub mod harness;
pub mod integration;
mod kernel;
pub mod norms;
mod quadrature;
pub mod scalar;
pub mod sde;
pub mod stats;
pub mod wong_zakai;

pub use error::{Error, Result};
pub use fbm::{
    covariance, generate_path, FbmSampler, GridPath, HurstParam, SamplePath, SamplerMethod,
    TimeGrid,
};
pub use harness::{
    rate_regression, run_experiment, ExperimentConfig, ExperimentKind, RateReport, RateRow,
    Regression,
};
pub use integration::{gls_integral, weyl_marchaud, young_integral, FracDerivative, Side};
pub use norms::{
    besov_report, holder_norm, norm_1_1mb, norm_2_beta, norm_beta_inf, vector_norm_1_1mb,
    vector_norm_beta_inf, BesovExponent, BesovReport,
};
pub use scalar::Scalar;
pub use sde::{
    kappa, solution_error, solve_euler, BuiltinProblem, CoefficientConditions, Coefficients,
    SdeProblem, SolutionPath,
};
pub use stats::Estimate;
pub use wong_zakai::{
    build_driver, error_process, exact_lp_error, theta, ErrorProcess, ThetaMethod,
    WongZakaiDriver,
};

pub type HurstF64 = HurstParam<f64>;
pub type TimeGridF64 = TimeGrid<f64>;
pub type SamplePathF64 = SamplePath<f64>;
pub type FbmSamplerF64 = FbmSampler<f64>;
pub type WongZakaiDriverF64 = WongZakaiDriver<f64>;
pub type ErrorProcessF64 = ErrorProcess<f64>;
pub type BesovExponentF64 = BesovExponent<f64>;
pub type BesovReportF64 = BesovReport<f64>;
pub type SolutionPathF64 = SolutionPath<f64>;
pub type SdeProblemF64 = SdeProblem<f64>;

pub type HurstF32 = HurstParam<f32>;
pub type TimeGridF32 = TimeGrid<f32>;
pub type SamplePathF32 = SamplePath<f32>;
pub type WongZakaiDriverF32 = WongZakaiDriver<f32>;
pub type SolutionPathF32 = SolutionPath<f32>;
