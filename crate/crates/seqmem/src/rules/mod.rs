//! Update rules: SeqNet, DenseNet, Hopfield/MHN, MixedNet, GPI and the
//! two-layer form.
//!
//! Signs follow `sgn(0) = +1`. SeqNet, DenseNet, Hopfield and MixedNet use
//! self-excluded overlaps (divisor `N - 1`); GPI and the two-layer network
//! use full overlaps (divisor `N`).

mod field;
mod gpi;
mod mixed;
mod network;
mod trajectory;
mod two_layer;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::patterns::{PatternSet, StateVector};
use field::{ActivationTable, Targets};

pub use gpi::{gpi_update, GpiForm, GpiOperator};
pub use mixed::{mixednet_update, StateHistory};
pub use network::Network;
pub use trajectory::{run_sequence, Trajectory};
pub use two_layer::{build_two_layer, two_layer_update, TwoLayerWeights};

/// Output of `sgn` at exactly zero.
pub const SIGN_OF_ZERO: i8 = 1;

/// Default GPI eigenvalue truncation.
pub const DEFAULT_GPI_TOL: f64 = 1e-10;

/// Default MixedNet asymmetric strength.
pub const DEFAULT_LAMBDA: f64 = 2.5;

/// Separation function applied to overlaps. `f(1) = 1` for every variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum InteractionFunction {
    Identity,
    Polynomial(u32),
    /// `f(m) = exp((N - 1)(m - 1))`.
    Exponential,
}

impl InteractionFunction {
    /// Polynomial degree; `None` for the exponential.
    pub fn degree(&self) -> Option<u32> {
        match *self {
            InteractionFunction::Identity => Some(1),
            InteractionFunction::Polynomial(d) => Some(d),
            InteractionFunction::Exponential => None,
        }
    }

    pub fn eval(&self, m: f64, n: usize) -> f64 {
        match *self {
            InteractionFunction::Identity => m,
            InteractionFunction::Polynomial(d) => m.powi(d as i32),
            InteractionFunction::Exponential => ((n as f64 - 1.0) * (m - 1.0)).exp(),
        }
    }

    /// `f(num / den)` evaluated so that integer numerators with
    /// `den = N - 1` give the exponential as exactly `exp(num - den)`.
    pub fn eval_ratio(&self, num: f64, den: f64, n: usize) -> f64 {
        match *self {
            InteractionFunction::Identity => num / den,
            InteractionFunction::Polynomial(d) => (num / den).powi(d as i32),
            InteractionFunction::Exponential => {
                let scale = n as f64 - 1.0;
                if scale == den {
                    (num - den).exp()
                } else {
                    (scale * (num - den) / den).exp()
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InteractionFunction::Polynomial(0) => Err(invalid("polynomial degree must be >= 1")),
            InteractionFunction::Polynomial(d) if d > 64 => Err(invalid("polynomial degree must be <= 64")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for InteractionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InteractionFunction::Identity => write!(f, "identity"),
            InteractionFunction::Polynomial(d) => write!(f, "poly:{d}"),
            InteractionFunction::Exponential => write!(f, "exp"),
        }
    }
}

impl FromStr for InteractionFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let f = match s.as_str() {
            "identity" | "linear" => InteractionFunction::Identity,
            "exp" | "exponential" => InteractionFunction::Exponential,
            _ => {
                let d = s
                    .strip_prefix("poly:")
                    .and_then(|d| d.parse::<u32>().ok())
                    .ok_or_else(|| invalid(format!("unknown interaction function '{s}' (identity, poly:<d>, exp)")))?;
                InteractionFunction::Polynomial(d)
            }
        };
        f.validate()?;
        Ok(f)
    }
}

impl From<InteractionFunction> for String {
    fn from(f: InteractionFunction) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for InteractionFunction {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMode {
    /// Neuron `i` is left out of its own overlaps; divisor `N - 1`.
    SelfExcluded,
    /// Divisor `N`.
    Full,
}

/// Weights `w(rho)` forming `S-bar(t) = sum_rho w(rho) S(t - rho)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum TemporalKernel {
    /// `w(rho) = 1/tau` on the `tau` most recent states.
    UniformStep,
    /// `w(rho)` proportional to `exp(-rate * rho)` for `rho = 0..=tau`.
    ExponentialDecay { rate: f64 },
}

impl TemporalKernel {
    /// Weights for the `available` most recent states, renormalized when
    /// fewer states exist than the kernel spans.
    pub fn weights(&self, tau: usize, available: usize) -> Vec<f64> {
        let raw: Vec<f64> = match *self {
            TemporalKernel::UniformStep => vec![1.0; tau.max(1)],
            TemporalKernel::ExponentialDecay { rate } => (0..=tau).map(|r| (-rate * r as f64).exp()).collect(),
        };
        let len = raw.len().min(available.max(1));
        let total: f64 = raw[..len].iter().sum();
        raw[..len].iter().map(|w| w / total).collect()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TemporalKernel::ExponentialDecay { rate } if !(rate.is_finite() && rate >= 0.0) => {
                Err(invalid(format!("decay rate must be finite and >= 0, got {rate}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RuleConfig {
    SeqNet,
    DenseNet {
        f: InteractionFunction,
    },
    Hopfield,
    Mhn {
        f: InteractionFunction,
    },
    MixedNet {
        f_s: InteractionFunction,
        f_a: InteractionFunction,
        lambda: f64,
        tau: usize,
        kernel: TemporalKernel,
    },
    GpiDenseNet {
        f: InteractionFunction,
        tol: f64,
    },
}

impl RuleConfig {
    pub fn densenet(f: InteractionFunction) -> Self {
        RuleConfig::DenseNet { f }
    }

    pub fn gpi(f: InteractionFunction) -> Self {
        RuleConfig::GpiDenseNet { f, tol: DEFAULT_GPI_TOL }
    }

    pub fn mixednet(f_s: InteractionFunction, f_a: InteractionFunction, lambda: f64, tau: usize) -> Self {
        RuleConfig::MixedNet { f_s, f_a, lambda, tau, kernel: TemporalKernel::UniformStep }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RuleConfig::SeqNet | RuleConfig::Hopfield => Ok(()),
            RuleConfig::DenseNet { f } | RuleConfig::Mhn { f } => f.validate(),
            RuleConfig::MixedNet { f_s, f_a, lambda, tau, kernel } => {
                f_s.validate()?;
                f_a.validate()?;
                kernel.validate()?;
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(invalid(format!("lambda must be positive, got {lambda}")));
                }
                if tau == 0 {
                    return Err(invalid("tau must be >= 1"));
                }
                Ok(())
            }
            RuleConfig::GpiDenseNet { f, tol } => {
                f.validate()?;
                if !(tol > 0.0 && tol <= 1e-6) {
                    return Err(invalid(format!("GPI tolerance must lie in (0, 1e-6], got {tol}")));
                }
                Ok(())
            }
        }
    }

    /// The interaction function of single-f rules (identity for SeqNet and Hopfield).
    pub fn interaction(&self) -> Option<InteractionFunction> {
        match *self {
            RuleConfig::SeqNet | RuleConfig::Hopfield => Some(InteractionFunction::Identity),
            RuleConfig::DenseNet { f } | RuleConfig::Mhn { f } | RuleConfig::GpiDenseNet { f, .. } => Some(f),
            RuleConfig::MixedNet { .. } => None,
        }
    }

    /// Whether pattern `mu` should map to its successor (sequence rules) or
    /// to itself (autoassociative rules).
    pub fn is_autoassociative(&self) -> bool {
        matches!(self, RuleConfig::Hopfield | RuleConfig::Mhn { .. })
    }

    pub fn label(&self) -> String {
        match self {
            RuleConfig::SeqNet => "seqnet".into(),
            RuleConfig::DenseNet { f } => format!("densenet[{f}]"),
            RuleConfig::Hopfield => "hopfield".into(),
            RuleConfig::Mhn { f } => format!("mhn[{f}]"),
            RuleConfig::MixedNet { f_s, f_a, lambda, tau, .. } => {
                format!("mixednet[{f_s},{f_a},lambda={lambda},tau={tau}]")
            }
            RuleConfig::GpiDenseNet { f, .. } => format!("gpi[{f}]"),
        }
    }
}

fn check_sizes(s: &StateVector, ps: &PatternSet) -> Result<()> {
    if s.len() != ps.n_neurons() {
        return Err(Error::DimensionMismatch { expected: ps.n_neurons(), got: s.len() });
    }
    Ok(())
}

pub(crate) fn table_update(
    s: &StateVector,
    ps: &PatternSet,
    table: &ActivationTable,
    mode: OverlapMode,
    targets: Targets,
) -> StateVector {
    let nums = ps.overlap_numerators(s);
    match mode {
        OverlapMode::SelfExcluded => {
            let state = s.to_bipolar();
            field::excluded_field(ps, &state, &nums, table, targets)
        }
        OverlapMode::Full => field::full_field_from_table(ps, &nums, table, targets),
    }
}

/// `sgn(sum_mu xi^{mu+1}_i m^mu_i)` with self-excluded overlaps.
pub fn seqnet_update(s: &StateVector, ps: &PatternSet) -> Result<StateVector> {
    densenet_update(s, ps, InteractionFunction::Identity)
}

/// `sgn(sum_mu xi^{mu+1}_i f(m^mu_i))` with self-excluded overlaps.
pub fn densenet_update(s: &StateVector, ps: &PatternSet, f: InteractionFunction) -> Result<StateVector> {
    densenet_update_with(s, ps, f, OverlapMode::SelfExcluded)
}

pub fn densenet_update_with(s: &StateVector, ps: &PatternSet, f: InteractionFunction, mode: OverlapMode) -> Result<StateVector> {
    check_sizes(s, ps)?;
    f.validate()?;
    let table = ActivationTable::new(f, ps.n_neurons(), mode, ps.n_patterns());
    Ok(table_update(s, ps, &table, mode, Targets::Successor))
}

/// Autoassociative form `sgn(sum_mu xi^mu_i f(m^mu_i))`; `f = Identity` is
/// the classic Hopfield network.
pub fn hopfield_update(s: &StateVector, ps: &PatternSet, f: InteractionFunction) -> Result<StateVector> {
    check_sizes(s, ps)?;
    f.validate()?;
    let table = ActivationTable::new(f, ps.n_neurons(), OverlapMode::SelfExcluded, ps.n_patterns());
    Ok(table_update(s, ps, &table, OverlapMode::SelfExcluded, Targets::Own))
}
