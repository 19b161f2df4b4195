//! Estimation and inference for the directed-network logistic model with
//! sender effects, receiver effects and edge covariates:
//!
//! ```text
//! P(a_ij = 1) = mu(nu + alpha_i + beta_j + z_ij' gamma),   mu(x) = e^x / (1 + e^x)
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). Enable `std` for `std::error::Error`
//! impls through `thiserror` and `serde` for serialization of results.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod error;
pub mod estimator;
pub mod inference;
pub mod linalg;
pub mod logistic;
pub mod model;
pub mod score;

#[cfg(test)]
mod testutil;

pub use error::{Error, NonExistenceKind, Result};
pub use estimator::{
    fit, profile_jacobian_qc, profile_score_qc, solve_eta_given_gamma, Algorithm, Existence, FitOptions, FitResult,
    InnerSolution, KantorovichStep,
};
pub use inference::{
    bias_corrected_gamma, contrast, critical_value, degree_standard_errors, eta_standard_errors,
    gamma_information_and_bias, gamma_standard_errors, infer, nu_standard_error, recover_signals, s_matrix, Contrast,
    ContrastKind, DegreeStandardErrors, InferenceReport, SMatrix,
};
pub use logistic::mu;
pub use model::{link_probability, linear_predictors, log_likelihood, DirectedNetwork, EdgeCovariates, ParamVector, Restriction};
pub use score::{check_gamma_identified, fisher_blocks, score_f, score_q, FisherBlocks};
