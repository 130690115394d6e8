//! Empirical-risk minimization for weight-decayed ReLU networks with
//! Lipschitz (robust) losses.
//!
//! The crate is split along the pipeline an experiment walks through:
//!
//! - [`losses`]: LAD, Huber, Cauchy and Tukey losses (plus least squares as a
//!   non-Lipschitz baseline), their subgradients and Lipschitz constants.
//! - [`network`]: bias-free feedforward ReLU networks, the Frobenius-ball
//!   constraint `max_j ‖Θ^j‖_F ≤ b` and the parameter-Lipschitz inequality.
//! - [`training`]: projected subgradient descent on the empirical risk.
//! - [`complexity`]: plug-in and Monte Carlo estimates of the input size,
//!   noise size, envelope and Rademacher complexity, with their closed-form
//!   upper bounds.
//! - [`bounds`]: the risk-bound calculators.
//! - [`datagen`]: synthetic data with per-component contaminated inputs.
//! - [`harness`]: grid sweeps, summaries and CSV export.
//!
//! Every random quantity is driven by an explicit `u64` seed; substreams are
//! derived by index so parallel execution never changes a result.

pub mod bounds;
pub mod complexity;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod losses;
pub mod network;
pub mod rng;
pub mod training;

pub use bounds::{BoundInputs, BoundReport, DEFAULT_A_CONSTANT};
pub use complexity::{ComplexityConfig, ComplexityReport};
pub use datagen::{ContaminationConfig, CorruptionKind, Dataset, NoiseKind, Sampler};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentRecord};
pub use losses::{LossFunction, LossKind};
pub use network::{Architecture, Matrix, NetworkParams, OracleNetwork};
pub use training::{BatchSize, TrainConfig, TrainResult, TrainedModel};
