//! Experiments: capacity searches, crosstalk sampling, bias sweeps and
//! dwell analysis and serial recall of trajectories.

mod bias;
mod capacity;
mod crosstalk;
mod dwell;
mod recall;

pub use bias::{bias_sweep, BiasSweepRow, BiasSweepTable};
pub use capacity::{
    estimate_capacity, estimate_sequence_capacity, estimate_transition_capacity, CapacityEstimate,
    CapacityProtocolConfig, RepeatOutcome,
};
pub use crosstalk::{
    bimodality, sample_crosstalk, sample_crosstalk_values, BimodalityReport, BranchStats, CrosstalkSamples,
    CrosstalkStats, CrosstalkTheoryValues, Histogram, DEFAULT_BINS,
};
pub use dwell::{dwell_analysis, DwellConfig, DwellReport, DwellSegment};
pub use recall::{sequence_recall, RecallReport, RepeatedState};
