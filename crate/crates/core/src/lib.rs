//! Cross-agent learning feedforward for decoupled LTI position loops.
//!
//! A target agent improves its tracking by filtering the recorded errors of
//! trainer agents through FIR approximate inverses of its own closed loop.
//! The crate covers the pieces end to end: discrete transfer functions and
//! matrices ([`lti`]), learning-filter design and convergence margins
//! ([`filter_design`]), agent models and dynamics maps ([`agents`]),
//! waypoint references and scenario maps ([`reference`](mod@reference)), the learning loop
//! itself ([`learning`]) and the config/CLI layer ([`config`], [`export`],
//! [`cli`]).
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.
//!
//! ```
//! use xilc::config::parse_config;
//! use xilc::learning::run_experiment;
//!
//! let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fig3.cfg");
//! let exp = parse_config(cfg)?.resolve::<f64>()?;
//! let run = run_experiment(&exp)?;
//! assert!(run.convergence.as_ref().unwrap().margin < 1.0);
//! assert!(run.metrics.target_vs_baseline < 0.3);
//! # Ok::<(), xilc::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN

pub mod agents;
pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod filter_design;
pub mod learning;
pub mod linalg;
pub mod lti;
pub mod reference;
pub mod scalar;

pub use error::{Error, Result};
pub use learning::{run_experiment, BoundPolicy, Chaining, Experiment, LearningConfig, RunResult};
pub use scalar::Scalar;

pub type TransferFunction = lti::TransferFunction<f64>;
pub type TransferMatrix = lti::TransferMatrix<f64>;
pub type Signal = lti::Signal<f64>;
pub type FrequencyGrid = lti::FrequencyGrid<f64>;
pub type AgentModel = agents::AgentModel<f64>;
pub type ReferenceTrajectory = reference::ReferenceTrajectory<f64>;
pub type ScenarioMap = reference::ScenarioMap<f64>;

pub type TransferFunction32 = lti::TransferFunction<f32>;
pub type TransferMatrix32 = lti::TransferMatrix<f32>;
pub type Signal32 = lti::Signal<f32>;
pub type FrequencyGrid32 = lti::FrequencyGrid<f32>;
pub type AgentModel32 = agents::AgentModel<f32>;
pub type ReferenceTrajectory32 = reference::ReferenceTrajectory<f32>;
pub type ScenarioMap32 = reference::ScenarioMap<f32>;
