//! MixedNet: symmetric recall plus delayed asymmetric drive.

use std::collections::VecDeque;

use super::field::{ActivationTable, RealField};
use super::{check_sizes, InteractionFunction, OverlapMode, RuleConfig, TemporalKernel};
use crate::error::{invalid, Result};
use crate::patterns::{PatternSet, StateVector};

/// Most recent states, newest first, at most `tau + 1` long.
#[derive(Clone, Debug, PartialEq)]
pub struct StateHistory {
    capacity: usize,
    states: VecDeque<StateVector>,
}

impl StateHistory {
    pub fn new(tau: usize) -> Self {
        StateHistory { capacity: tau + 1, states: VecDeque::with_capacity(tau + 1) }
    }

    pub fn with_initial(s: StateVector, tau: usize) -> Self {
        let mut h = StateHistory::new(tau);
        h.push(s);
        h
    }

    pub fn push(&mut self, s: StateVector) {
        if self.states.len() == self.capacity {
            self.states.pop_back();
        }
        self.states.push_front(s);
    }

    pub fn newest(&self) -> Option<&StateVector> {
        self.states.front()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn clear(&mut self) {
        self.states.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = &StateVector> {
        self.states.iter()
    }
}

/// `sgn[sum_mu xi^mu_i f_S(m^mu_i) + lambda xi^{mu+1}_i f_A(m-bar^mu_i)]`
/// where `m-bar` is taken against `S-bar = sum_rho w(rho) S(t - rho)`.
pub fn mixednet_update(history: &StateHistory, ps: &PatternSet, cfg: &RuleConfig) -> Result<StateVector> {
    mixednet_update_with(history, ps, cfg, OverlapMode::SelfExcluded)
}

pub fn mixednet_update_with(history: &StateHistory, ps: &PatternSet, cfg: &RuleConfig, mode: OverlapMode) -> Result<StateVector> {
    cfg.validate()?;
    let RuleConfig::MixedNet { f_s, f_a, lambda, tau, kernel } = *cfg else {
        return Err(invalid(format!("mixednet_update needs a MixedNet config, got {}", cfg.label())));
    };
    let table = ActivationTable::new(f_s, ps.n_neurons(), mode, ps.n_patterns());
    mixed_field(history, ps, &table, f_a, lambda, tau, kernel, mode)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn mixed_field(
    history: &StateHistory,
    ps: &PatternSet,
    table_s: &ActivationTable,
    f_a: InteractionFunction,
    lambda: f64,
    tau: usize,
    kernel: TemporalKernel,
    mode: OverlapMode,
) -> Result<StateVector> {
    let current = history.newest().ok_or_else(|| invalid("MixedNet history is empty"))?;
    for s in history.iter() {
        check_sizes(s, ps)?;
    }
    let n = ps.n_neurons();
    let p = ps.n_patterns();
    let weights = kernel.weights(tau, history.len());
    let mut sbar = vec![0.0f64; n];
    let mut sbar_num = vec![0.0f64; p];
    for (w, s) in weights.iter().zip(history.iter()) {
        for (acc, v) in sbar.iter_mut().zip(s.to_bipolar()) {
            *acc += w * v as f64;
        }
        for (acc, k) in sbar_num.iter_mut().zip(ps.overlap_numerators(s)) {
            *acc += w * k as f64;
        }
    }
    let state = current.to_bipolar();
    let nums = ps.overlap_numerators(current);
    let den = match mode {
        OverlapMode::SelfExcluded => n as f64 - 1.0,
        OverlapMode::Full => n as f64,
    };
    let mut field = RealField::new(n);
    for nu in 0..p {
        let own = ps.unpacked_row(nu);
        let next = ps.unpacked_row(ps.next_index(nu));
        let s = nums[nu] as i64;
        match mode {
            OverlapMode::SelfExcluded => {
                let agree = table_s.real(s - 1);
                let disagree = table_s.real(s + 1);
                for i in 0..n {
                    let fs = if own[i] == state[i] { agree } else { disagree };
                    let fa = f_a.eval_ratio(sbar_num[nu] - own[i] as f64 * sbar[i], den, n);
                    field.add(i, own[i] as f64 * fs + lambda * next[i] as f64 * fa);
                }
            }
            OverlapMode::Full => {
                let fs = table_s.real(s);
                let fa = f_a.eval_ratio(sbar_num[nu], den, n);
                for i in 0..n {
                    field.add(i, own[i] as f64 * fs + lambda * next[i] as f64 * fa);
                }
            }
        }
    }
    Ok(field.signs())
}
