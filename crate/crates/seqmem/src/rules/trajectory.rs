use std::io::Write;

use serde::Serialize;

use super::{Network, RuleConfig};
use crate::error::Result;
use crate::patterns::{PatternSet, StateVector};

/// States visited by a run and the full overlap `m^mu(t)` of each.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    #[serde(skip)]
    pub states: Vec<StateVector>,
    /// `overlaps[t][mu]`, divisor `N`.
    pub overlaps: Vec<Vec<f64>>,
}

impl Trajectory {
    fn record(&mut self, ps: &PatternSet, s: StateVector) {
        let n = ps.n_neurons() as f64;
        self.overlaps.push(ps.overlap_numerators(&s).iter().map(|&k| k as f64 / n).collect());
        self.states.push(s);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Pattern with the largest overlap at time `t` (lowest index on ties).
    pub fn best_match(&self, t: usize) -> (usize, f64) {
        self.overlaps[t]
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (mu, m)| if m > best.1 { (mu, m) } else { best })
    }

    /// CSV with header `t,mu,m`, one row per time and pattern.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,mu,m")?;
        for (t, row) in self.overlaps.iter().enumerate() {
            for (mu, m) in row.iter().enumerate() {
                writeln!(w, "{t},{mu},{m}")?;
            }
        }
        Ok(())
    }
}

/// Iterates the rule `steps` times from `initial`; the trajectory holds
/// `steps + 1` states.
pub fn run_sequence(initial: &StateVector, ps: &PatternSet, cfg: &RuleConfig, steps: usize) -> Result<Trajectory> {
    super::check_sizes(initial, ps)?;
    let mut net = Network::new(*cfg, ps)?;
    let mut traj = Trajectory { states: Vec::with_capacity(steps + 1), overlaps: Vec::with_capacity(steps + 1) };
    let mut s = initial.clone();
    traj.record(ps, s.clone());
    for _ in 0..steps {
        s = net.step(&s)?;
        traj.record(ps, s.clone());
    }
    Ok(traj)
}
