//! Decaying-length capacity search.
//!
//! Each round draws `n_sequences` fresh sequences of length `P`; any failure
//! shrinks `P` to `floor(decay * P)` (at least one less) and the first
//! error-free round fixes the repeat's capacity. If the very first round of
//! a start succeeds, `P0` is doubled and the repeat restarts.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::patterns::{generate_with, PatternLaw, StateVector};
use crate::rng::substream;
use crate::rules::{Network, RuleConfig, TemporalKernel};
use crate::theory::{rule_capacity, CapacityKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityProtocolConfig {
    pub n_sequences: usize,
    pub n_repeats: usize,
    pub decay: f64,
    pub p0_multiplier: f64,
    pub max_rounds: usize,
    pub max_doublings: u32,
}

impl Default for CapacityProtocolConfig {
    fn default() -> Self {
        CapacityProtocolConfig {
            n_sequences: 100,
            n_repeats: 20,
            decay: 0.99,
            p0_multiplier: 2.0,
            max_rounds: 10_000,
            max_doublings: 30,
        }
    }
}

impl CapacityProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(invalid(format!("decay must lie in (0, 1), got {}", self.decay)));
        }
        if self.n_sequences == 0 || self.n_repeats == 0 {
            return Err(invalid("n_sequences and n_repeats must be >= 1"));
        }
        if !(self.p0_multiplier > 0.0 && self.p0_multiplier.is_finite()) {
            return Err(invalid(format!("p0_multiplier must be positive, got {}", self.p0_multiplier)));
        }
        if self.max_rounds == 0 {
            return Err(invalid("max_rounds must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepeatOutcome {
    pub capacity: usize,
    /// Rounds run, including restarts.
    pub rounds: usize,
    /// Starting length of the final start.
    pub p0: usize,
    pub doublings: u32,
    /// True when even `P = 2` failed and the floor was recorded.
    pub floored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub rule: RuleConfig,
    pub rule_label: String,
    pub kind: CapacityKind,
    pub n_neurons: usize,
    pub seed: u64,
    pub law: PatternLaw,
    pub protocol: CapacityProtocolConfig,
    /// Gaussian-theory capacity, when a closed form exists.
    pub theory: Option<f64>,
    pub capacities: Vec<usize>,
    pub mean: f64,
    pub std: f64,
    pub repeats: Vec<RepeatOutcome>,
}

impl CapacityEstimate {
    /// One row per repeat.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rule,kind,n,epsilon,seed,repeat,capacity,rounds,p0,doublings,floored")?;
        let eps = match self.law {
            PatternLaw::Biased { epsilon } => epsilon,
            _ => 0.0,
        };
        for (r, o) in self.repeats.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.rule_label, self.kind, self.n_neurons, eps, self.seed, r, o.capacity, o.rounds, o.p0, o.doublings, o.floored
            )?;
        }
        Ok(())
    }
}

fn check_rule(rule: &RuleConfig) -> Result<()> {
    rule.validate()?;
    if let RuleConfig::MixedNet { tau, kernel, .. } = *rule {
        if tau != 1 || kernel != TemporalKernel::UniformStep {
            return Err(invalid("capacity searches need a single-step MixedNet (tau = 1, uniform kernel)"));
        }
    }
    Ok(())
}

/// Whether one freshly drawn sequence is recalled. Numerical failures of
/// the rule count as recall failures.
fn step(net: &mut Network, s: &StateVector) -> Result<Option<StateVector>> {
    match net.step(s) {
        Ok(v) => Ok(Some(v)),
        Err(Error::NumericalInstability(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn sequence_ok(rule: &RuleConfig, n: usize, p: usize, kind: CapacityKind, law: PatternLaw, path: [u64; 3], seed: u64) -> Result<bool> {
    let mut rng = substream(seed, &path);
    let ps = generate_with(&mut rng, law, n, p)?;
    let mut net = match Network::new(*rule, &ps) {
        Ok(net) => net,
        Err(Error::NumericalInstability(_) | Error::NoConvergence(_) | Error::NotPositiveSemidefinite(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    match kind {
        CapacityKind::Transition => {
            let out = step(&mut net, &ps.pattern(0))?;
            Ok(out.is_some_and(|o| o == ps.pattern(net.target_index(0))))
        }
        CapacityKind::Sequence if rule.is_autoassociative() => {
            for mu in 0..p {
                match step(&mut net, &ps.pattern(mu))? {
                    Some(o) if o == ps.pattern(mu) => {}
                    _ => return Ok(false),
                }
            }
            Ok(true)
        }
        CapacityKind::Sequence => {
            let mut s = ps.pattern(0);
            for t in 0..p {
                match step(&mut net, &s)? {
                    Some(o) if o.words() == ps.row_words(ps.next_index(t)) => s = o,
                    _ => return Ok(false),
                }
            }
            Ok(true)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_round(
    rule: &RuleConfig,
    n: usize,
    p: usize,
    kind: CapacityKind,
    law: PatternLaw,
    proto: &CapacityProtocolConfig,
    seed: u64,
    repeat: usize,
    round: usize,
) -> Result<bool> {
    let first_bad = (0..proto.n_sequences)
        .into_par_iter()
        .map(|k| sequence_ok(rule, n, p, kind, law, [repeat as u64, round as u64, k as u64], seed))
        .find_first(|r| !matches!(r, Ok(true)));
    match first_bad {
        None => Ok(true),
        Some(Ok(_)) => Ok(false),
        Some(Err(e)) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_repeat(
    rule: &RuleConfig,
    n: usize,
    kind: CapacityKind,
    law: PatternLaw,
    proto: &CapacityProtocolConfig,
    seed: u64,
    repeat: usize,
    start: usize,
) -> Result<RepeatOutcome> {
    let mut p0 = start;
    let mut doublings = 0u32;
    let mut round = 0usize;
    'restart: loop {
        let mut p = p0;
        let mut first = true;
        loop {
            if round >= proto.max_rounds {
                return Err(Error::RoundsExhausted(round));
            }
            let ok = run_round(rule, n, p, kind, law, proto, seed, repeat, round)?;
            round += 1;
            if ok {
                if first && doublings < proto.max_doublings {
                    p0 = p0.saturating_mul(2);
                    doublings += 1;
                    continue 'restart;
                }
                return Ok(RepeatOutcome { capacity: p, rounds: round, p0, doublings, floored: false });
            }
            first = false;
            if p <= 2 {
                return Ok(RepeatOutcome { capacity: 2, rounds: round, p0, doublings, floored: true });
            }
            let shrunk = (p as f64 * proto.decay).floor() as usize;
            p = shrunk.min(p - 1).max(2);
        }
    }
}

/// Capacity search under an arbitrary pattern law.
pub fn estimate_capacity(
    rule: &RuleConfig,
    n: usize,
    kind: CapacityKind,
    law: PatternLaw,
    proto: &CapacityProtocolConfig,
    seed: u64,
) -> Result<CapacityEstimate> {
    check_rule(rule)?;
    proto.validate()?;
    law.validate()?;
    if n < 2 {
        return Err(invalid(format!("N must be >= 2, got {n}")));
    }
    let theory = rule_capacity(rule, n, kind);
    let start = match theory {
        Some(t) => (proto.p0_multiplier * t).ceil().clamp(2.0, 1e12) as usize,
        None => n.max(2),
    };
    let repeats: Vec<RepeatOutcome> = (0..proto.n_repeats)
        .into_par_iter()
        .map(|r| run_repeat(rule, n, kind, law, proto, seed, r, start))
        .collect::<Result<_>>()?;
    let capacities: Vec<usize> = repeats.iter().map(|o| o.capacity).collect();
    let k = capacities.len() as f64;
    let mean = capacities.iter().sum::<usize>() as f64 / k;
    let std = if capacities.len() > 1 {
        (capacities.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(CapacityEstimate {
        rule: *rule,
        rule_label: rule.label(),
        kind,
        n_neurons: n,
        seed,
        law,
        protocol: *proto,
        theory,
        capacities,
        mean,
        std,
        repeats,
    })
}

pub fn estimate_transition_capacity(rule: &RuleConfig, n: usize, proto: &CapacityProtocolConfig, seed: u64) -> Result<CapacityEstimate> {
    estimate_capacity(rule, n, CapacityKind::Transition, PatternLaw::Rademacher, proto, seed)
}

pub fn estimate_sequence_capacity(rule: &RuleConfig, n: usize, proto: &CapacityProtocolConfig, seed: u64) -> Result<CapacityEstimate> {
    estimate_capacity(rule, n, CapacityKind::Sequence, PatternLaw::Rademacher, proto, seed)
}
