//! Mixtures of Ising and Potts models learned by pseudolikelihood.
//!
//! The crate is organised bottom-up:
//!
//! * [`spin_models`] holds the component parameterization and every
//!   single-component pseudolikelihood quantity.
//! * [`exact`] enumerates small systems and serves as ground truth.
//! * [`sampler`] draws synthetic data with a sequential-scan Gibbs sampler.
//! * [`optimizer`] is a gradient ascent with backtracking line search.
//! * [`mixture`] contains responsibilities, the mixture pseudolikelihood
//!   and the EM loop.
//! * [`init`] provides random and farthest-codeword starting points.
//! * [`dca`] covers alignment ingestion, coupling scores and TP-rate curves.

pub mod dca;
pub mod error;
pub mod exact;
pub mod init;
pub mod mixture;
pub mod optimizer;
pub mod sampler;
pub mod spin_models;
pub mod surface;

mod numeric;

pub use error::{Error, Result};
pub use mixture::{
    fit, m_step, mixture_log_pl, responsibilities_pl, update_mixing, FitEvent, FitOptions,
    FitReport, FlipRatioTable, IterationRecord, MixtureModel, Responsibilities,
};
pub use spin_models::{ComponentParams, Dataset, GradientVector, SpinConfiguration, TieMode};
