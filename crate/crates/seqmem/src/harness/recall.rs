//! Serial recall of a stored sequence, scored step by step.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::Result;
use crate::patterns::{PatternSet, StateVector};
use crate::rules::{Network, RuleConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RepeatedState {
    /// Step at which a state already seen reappeared.
    pub time: usize,
    pub earlier: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecallReport {
    pub steps: usize,
    /// `correct[t]` is whether the state after step `t + 1` equals pattern `(t + 1) mod P`.
    pub correct: Vec<bool>,
    pub n_correct: usize,
    pub accuracy: f64,
    pub first_error: Option<usize>,
    pub repeated_state: Option<RepeatedState>,
    /// `(T, state)` with `T` one-based, so `T = 1` is the initial pattern.
    pub dumps: Vec<(usize, Vec<i8>)>,
}

/// Runs `steps` updates from pattern 0. Memoryless rules stop simulating at
/// the first repeated state and read the remaining steps off the cycle.
pub fn sequence_recall(ps: &PatternSet, rule: &RuleConfig, steps: usize, dump_times: &[usize]) -> Result<RecallReport> {
    let mut net = Network::new(*rule, ps)?;
    let memoryless = !matches!(rule, RuleConfig::MixedNet { .. });
    let p = ps.n_patterns();
    let mut states: Vec<StateVector> = Vec::with_capacity(steps + 1);
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut repeated_state = None;
    states.push(ps.pattern(0));
    seen.insert(states[0].words().to_vec(), 0);
    while states.len() <= steps {
        let t = states.len();
        if let (true, Some(RepeatedState { time, earlier })) = (memoryless, repeated_state) {
            let period = time - earlier;
            states.push(states[earlier + (t - earlier) % period].clone());
            continue;
        }
        let next = net.step(&states[t - 1])?;
        if repeated_state.is_none() {
            if let Some(&k) = seen.get(next.words()) {
                repeated_state = Some(RepeatedState { time: t, earlier: k });
            } else {
                seen.insert(next.words().to_vec(), t);
            }
        }
        states.push(next);
    }
    let correct: Vec<bool> = (1..=steps).map(|t| states[t].words() == ps.row_words(t % p)).collect();
    let n_correct = correct.iter().filter(|&&c| c).count();
    let dumps = dump_times
        .iter()
        .filter(|&&tt| tt >= 1 && tt <= steps + 1)
        .map(|&tt| (tt, states[tt - 1].to_bipolar()))
        .collect();
    Ok(RecallReport {
        steps,
        first_error: correct.iter().position(|&c| !c).map(|k| k + 1),
        accuracy: if steps == 0 { 1.0 } else { n_correct as f64 / steps as f64 },
        n_correct,
        correct,
        repeated_state,
        dumps,
    })
}
