//! Sequence associative memories built from bipolar patterns.
//!
//! The crate covers pattern storage ([`patterns`]), the update rules
//! ([`rules`]), small numerical kernels ([`numerics`]), closed-form capacity
//! and crosstalk predictions ([`theory`]), Monte Carlo experiments
//! ([`harness`]) and MNIST ingestion ([`datasets`]).

pub mod datasets;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod patterns;
pub mod rng;
pub mod rules;
pub mod theory;

pub use error::{Error, Result};
pub use patterns::{PatternDistribution, PatternLaw, PatternSet, StateVector};
pub use rules::{InteractionFunction, OverlapMode, RuleConfig, TemporalKernel};

/// Version string embedded in every result file.
pub const VERSION: &str = concat!("seqmem v", env!("CARGO_PKG_VERSION"));
