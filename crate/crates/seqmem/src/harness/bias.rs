use std::io::Write;

use rand::RngCore;
use serde::Serialize;

use super::capacity::{estimate_capacity, CapacityEstimate, CapacityProtocolConfig};
use crate::error::Result;
use crate::patterns::PatternLaw;
use crate::rng::substream;
use crate::rules::RuleConfig;
use crate::theory::CapacityKind;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasSweepRow {
    pub rule_label: String,
    pub epsilon: f64,
    pub estimate: CapacityEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasSweepTable {
    pub n_neurons: usize,
    pub kind: CapacityKind,
    pub seed: u64,
    pub rows: Vec<BiasSweepRow>,
}

impl BiasSweepTable {
    pub fn get(&self, rule_label: &str, epsilon: f64) -> Option<&CapacityEstimate> {
        self.rows.iter().find(|r| r.rule_label == rule_label && r.epsilon == epsilon).map(|r| &r.estimate)
    }

    /// One row per (rule, epsilon, repeat).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rule,epsilon,kind,n,repeat,capacity,mean,std")?;
        for row in &self.rows {
            for (r, c) in row.estimate.capacities.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    row.rule_label, row.epsilon, self.kind, self.n_neurons, r, c, row.estimate.mean, row.estimate.std
                )?;
            }
        }
        Ok(())
    }
}

/// Capacity of each rule under `Biased(epsilon)` patterns. Cell
/// `(rule i, epsilon j)` uses a seed drawn from substream `[i, j]`.
pub fn bias_sweep(
    rules: &[RuleConfig],
    n: usize,
    epsilons: &[f64],
    kind: CapacityKind,
    proto: &CapacityProtocolConfig,
    seed: u64,
) -> Result<BiasSweepTable> {
    let mut rows = Vec::with_capacity(rules.len() * epsilons.len());
    for (i, rule) in rules.iter().enumerate() {
        for (j, &epsilon) in epsilons.iter().enumerate() {
            let cell_seed = substream(seed, &[i as u64, j as u64]).next_u64();
            let estimate = estimate_capacity(rule, n, kind, PatternLaw::Biased { epsilon }, proto, cell_seed)?;
            rows.push(BiasSweepRow { rule_label: rule.label(), epsilon, estimate });
        }
    }
    Ok(BiasSweepTable { n_neurons: n, kind, seed, rows })
}
