//! Segmentation of a trajectory into dwell periods on single patterns.

use serde::{Deserialize, Serialize};

use crate::rules::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwellConfig {
    /// A step is aligned with pattern `mu` when `m^mu >= threshold`.
    pub threshold: f64,
    /// Longest run of unaligned steps tolerated before the run counts as lost.
    pub max_gap: usize,
}

impl Default for DwellConfig {
    fn default() -> Self {
        DwellConfig { threshold: 0.9, max_gap: 2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DwellSegment {
    pub pattern: usize,
    pub start: usize,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DwellReport {
    pub segments: Vec<DwellSegment>,
    pub unaligned_steps: usize,
    pub longest_gap: usize,
    pub lost: bool,
    /// Consecutive segments visit consecutive patterns (mod P).
    pub order_correct: bool,
    /// Common length of all interior segments, if they agree. The first
    /// segment (start-up) and last one (cut by the end of the run) are not
    /// interior.
    pub uniform_dwell: Option<usize>,
}

impl DwellReport {
    pub fn interior(&self) -> &[DwellSegment] {
        if self.segments.len() <= 2 {
            &[]
        } else {
            &self.segments[1..self.segments.len() - 1]
        }
    }

    /// Number of distinct patterns held for exactly `tau` steps in an interior segment.
    pub fn patterns_with_dwell(&self, tau: usize) -> usize {
        let mut seen: Vec<usize> = self.interior().iter().filter(|s| s.length == tau).map(|s| s.pattern).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Order and timing both right: ordered, not lost, and every interior dwell equals `tau`.
    pub fn timing_correct(&self, tau: usize) -> bool {
        self.order_correct && !self.lost && self.uniform_dwell == Some(tau)
    }
}

pub fn dwell_analysis(traj: &Trajectory, cfg: &DwellConfig) -> DwellReport {
    let mut segments: Vec<DwellSegment> = Vec::new();
    let mut unaligned = 0;
    let mut gap = 0;
    let mut longest_gap = 0;
    for t in 0..traj.len() {
        let (mu, m) = traj.best_match(t);
        if m < cfg.threshold {
            unaligned += 1;
            gap += 1;
            longest_gap = longest_gap.max(gap);
            continue;
        }
        let continues = gap == 0 && segments.last().is_some_and(|s| s.pattern == mu && s.start + s.length == t);
        gap = 0;
        if continues {
            segments.last_mut().unwrap().length += 1;
        } else {
            segments.push(DwellSegment { pattern: mu, start: t, length: 1 });
        }
    }
    let p = traj.overlaps.first().map_or(1, |o| o.len().max(1));
    let order_correct = segments.len() >= 2 && segments.windows(2).all(|w| w[1].pattern == (w[0].pattern + 1) % p);
    let lost = segments.is_empty() || longest_gap > cfg.max_gap;
    let mut report = DwellReport { segments, unaligned_steps: unaligned, longest_gap, lost, order_correct, uniform_dwell: None };
    let lens: Vec<usize> = report.interior().iter().map(|s| s.length).collect();
    report.uniform_dwell = match lens.first() {
        Some(&l) if lens.iter().all(|&x| x == l) => Some(l),
        _ => None,
    };
    report
}
