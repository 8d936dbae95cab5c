//! Monte Carlo sampling of the crosstalk at neuron 1 for a transition out
//! of pattern 1, with fresh random patterns per sample.
//!
//! DenseNet/SeqNet: `C = sum_{mu>=2} xi^2_1 xi^{mu+1}_1 f(m^mu_1)`, a bitflip
//! needs `C < -1`. Hopfield/MHN use `xi^1_1 xi^mu_1` instead. MixedNet:
//! `C = xi^2_1 xi^1_1 + sum_{mu>=2} xi^2_1 [xi^mu_1 f_S(m^mu_1) + lambda xi^{mu+1}_1 f_A(m^mu_1)]`,
//! whose branch variable is `b = xi^2_1 xi^1_1` and a bitflip needs
//! `C < -lambda`. Overlaps exclude neuron 1.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::numerics::{MomentAccumulator, Moments};
use crate::patterns::words_for;
use crate::rng::substream;
use crate::rules::{InteractionFunction, RuleConfig};
use crate::theory::{
    crosstalk_kurtosis_exact, crosstalk_kurtosis_theory, crosstalk_variance_theory, exact_term_moment,
    mixed_crosstalk_theory, MixedCrosstalkTheory,
};

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug)]
enum Form {
    Sequence(InteractionFunction),
    Auto(InteractionFunction),
    Mixed { f_s: InteractionFunction, f_a: InteractionFunction, lambda: f64 },
}

fn form_of(rule: &RuleConfig) -> Result<Form> {
    rule.validate()?;
    Ok(match *rule {
        RuleConfig::SeqNet => Form::Sequence(InteractionFunction::Identity),
        RuleConfig::DenseNet { f } => Form::Sequence(f),
        RuleConfig::Hopfield => Form::Auto(InteractionFunction::Identity),
        RuleConfig::Mhn { f } => Form::Auto(f),
        RuleConfig::MixedNet { f_s, f_a, lambda, .. } => Form::Mixed { f_s, f_a, lambda },
        RuleConfig::GpiDenseNet { .. } => return Err(invalid("crosstalk sampling is not defined for the GPI rule")),
    })
}

fn table(f: InteractionFunction, n: usize) -> Vec<f64> {
    // index h = mismatches among the N - 1 non-excluded neurons
    let d = n - 1;
    (0..=d).map(|h| f.eval_ratio(d as f64 - 2.0 * h as f64, d as f64, n)).collect()
}

/// Raw samples plus, for MixedNet, the branch variable of each.
#[derive(Clone, Debug)]
pub struct CrosstalkSamples {
    pub values: Vec<f64>,
    pub branches: Option<Vec<i8>>,
}

struct Sampler {
    form: Form,
    n: usize,
    p: usize,
    words: usize,
    g_s: Vec<f64>,
    g_a: Vec<f64>,
}

impl Sampler {
    fn sample<R: Rng>(&self, rng: &mut R, rows: &mut [u64]) -> (f64, i8) {
        let w = self.words;
        let tail = match self.n % 64 {
            0 => u64::MAX,
            r => (1u64 << r) - 1,
        };
        for row in rows.chunks_exact_mut(w) {
            rng.fill(row);
            row[w - 1] &= tail;
        }
        let bit0 = |mu: usize| if rows[mu * w] & 1 == 1 { 1.0 } else { -1.0 };
        let first = &rows[..w];
        let mismatches = |mu: usize| -> usize {
            let row = &rows[mu * w..(mu + 1) * w];
            let mut h = 0u32;
            for (k, (a, b)) in row.iter().zip(first).enumerate() {
                let x = a ^ b;
                h += if k == 0 { (x & !1).count_ones() } else { x.count_ones() };
            }
            h as usize
        };
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        let mut add = |x: f64| {
            let t = sum + x;
            comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
            sum = t;
        };
        let x2 = bit0(1);
        let mut branch = 0i8;
        match self.form {
            Form::Sequence(_) => {
                for mu in 1..self.p {
                    add(x2 * bit0((mu + 1) % self.p) * self.g_s[mismatches(mu)]);
                }
            }
            Form::Auto(_) => {
                let x1 = bit0(0);
                for mu in 1..self.p {
                    add(x1 * bit0(mu) * self.g_s[mismatches(mu)]);
                }
            }
            Form::Mixed { lambda, .. } => {
                let b = x2 * bit0(0);
                branch = b as i8;
                add(b);
                for mu in 1..self.p {
                    let h = mismatches(mu);
                    add(x2 * bit0(mu) * self.g_s[h]);
                    add(lambda * x2 * bit0((mu + 1) % self.p) * self.g_a[h]);
                }
            }
        }
        (sum + comp, branch)
    }
}

/// Draws `n_samples` crosstalk values; chunk `c` uses substream `[c]`.
pub fn sample_crosstalk_values(rule: &RuleConfig, n: usize, p: usize, n_samples: usize, seed: u64) -> Result<CrosstalkSamples> {
    let form = form_of(rule)?;
    if n < 2 || p < 2 {
        return Err(invalid(format!("need N >= 2 and P >= 2, got N={n}, P={p}")));
    }
    let (f_s, f_a) = match form {
        Form::Sequence(f) | Form::Auto(f) => (f, f),
        Form::Mixed { f_s, f_a, .. } => (f_s, f_a),
    };
    let sampler = Sampler { form, n, p, words: words_for(n), g_s: table(f_s, n), g_a: table(f_a, n) };
    let n_chunks = n_samples.div_ceil(CHUNK);
    let chunks: Vec<(Vec<f64>, Vec<i8>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, &[c as u64]);
            let len = CHUNK.min(n_samples - c * CHUNK);
            let mut rows = vec![0u64; sampler.words * p];
            let mut vals = Vec::with_capacity(len);
            let mut br = Vec::with_capacity(len);
            for _ in 0..len {
                let (v, b) = sampler.sample(&mut rng, &mut rows);
                vals.push(v);
                br.push(b);
            }
            (vals, br)
        })
        .collect();
    let mut values = Vec::with_capacity(n_samples);
    let mut branches = Vec::with_capacity(n_samples);
    for (v, b) in chunks {
        values.extend(v);
        branches.extend(b);
    }
    let branches = matches!(form, Form::Mixed { .. }).then_some(branches);
    Ok(CrosstalkSamples { values, branches })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], n_bins: usize) -> Self {
        let n_bins = n_bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if values.is_empty() { (0.0, 1.0) } else if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / n_bins as f64;
        let edges = (0..=n_bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0u64; n_bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(n_bins - 1);
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_lo,bin_hi,count")?;
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", self.edges[k], self.edges[k + 1], c)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BimodalityReport {
    /// Sarle's coefficient `(g^2 + 1) / (k + 3 (n-1)^2 / ((n-2)(n-3)))`; above 5/9 suggests bimodality.
    pub coefficient: f64,
    /// Centres of the two separated histogram modes, if found.
    pub modes: Option<(f64, f64)>,
    /// Lowest smoothed count between the modes over the smaller mode height.
    pub valley_ratio: f64,
    pub bimodal: bool,
}

/// Two-mode test on a smoothed histogram combined with Sarle's coefficient.
pub fn bimodality(values: &[f64], n_bins: usize) -> Result<BimodalityReport> {
    let acc: MomentAccumulator = values.iter().copied().collect();
    let n = acc.count() as f64;
    let kurt = acc.excess_kurtosis()?;
    let skew = acc.skewness()?;
    let coefficient = (skew * skew + 1.0) / (kurt + 3.0 * (n - 1.0).powi(2) / ((n - 2.0) * (n - 3.0)));
    let hist = Histogram::new(values, n_bins);
    let c = &hist.counts;
    let smooth: Vec<f64> = (0..c.len())
        .map(|k| {
            let lo = k.saturating_sub(2);
            let hi = (k + 3).min(c.len());
            c[lo..hi].iter().sum::<u64>() as f64 / (hi - lo) as f64
        })
        .collect();
    let top = smooth.iter().copied().fold(0.0, f64::max);
    let peaks: Vec<usize> = (0..smooth.len())
        .filter(|&k| {
            let left = k == 0 || smooth[k] > smooth[k - 1];
            let right = k + 1 == smooth.len() || smooth[k] >= smooth[k + 1];
            left && right && smooth[k] >= 0.05 * top
        })
        .collect();
    let mut best: Option<(usize, usize, f64)> = None;
    for (a_i, &a) in peaks.iter().enumerate() {
        for &b in &peaks[a_i + 1..] {
            let valley = smooth[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
            let ratio = valley / smooth[a].min(smooth[b]);
            if best.is_none_or(|(_, _, r)| ratio < r) {
                best = Some((a, b, ratio));
            }
        }
    }
    let centre = |k: usize| 0.5 * (hist.edges[k] + hist.edges[k + 1]);
    let (modes, valley_ratio) = match best {
        Some((a, b, r)) => (Some((centre(a), centre(b))), r),
        None => (None, 1.0),
    };
    Ok(BimodalityReport { coefficient, modes, valley_ratio, bimodal: valley_ratio < 0.5 && coefficient > 5.0 / 9.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchStats {
    pub branch: i8,
    pub weight: f64,
    pub moments: Moments,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosstalkTheoryValues {
    /// Asymptotic variance of one term.
    pub variance_per_term: Option<f64>,
    /// Exact finite-N `E[f(Xi)^2]`.
    pub variance_per_term_exact: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub excess_kurtosis_exact: Option<f64>,
    pub mixed: Option<MixedCrosstalkTheory>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosstalkStats {
    pub rule: RuleConfig,
    pub rule_label: String,
    pub n_neurons: usize,
    pub n_patterns: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub moments: Moments,
    /// `Var(C) / (P - 1)` and its standard error.
    pub variance_per_term: f64,
    pub variance_per_term_se: f64,
    /// Fraction of samples that would flip the neuron.
    pub flip_fraction: f64,
    pub theory: CrosstalkTheoryValues,
    pub histogram: Histogram,
    pub branches: Option<Vec<BranchStats>>,
    pub bimodality: Option<BimodalityReport>,
}

pub const DEFAULT_BINS: usize = 200;

pub fn sample_crosstalk(rule: &RuleConfig, n: usize, p: usize, n_samples: usize, seed: u64) -> Result<CrosstalkStats> {
    if n_samples < 10_000 {
        return Err(Error::TooFewSamples { need: 10_000, have: n_samples as u64 });
    }
    let samples = sample_crosstalk_values(rule, n, p, n_samples, seed)?;
    let acc: MomentAccumulator = samples.values.iter().copied().collect();
    let moments = acc.summary();
    let terms = (p - 1) as f64;
    let form = form_of(rule)?;
    let threshold = match form {
        Form::Mixed { lambda, .. } => -lambda,
        _ => -1.0,
    };
    let flips = samples.values.iter().filter(|&&v| v < threshold).count();
    let theory = match form {
        Form::Sequence(f) | Form::Auto(f) => CrosstalkTheoryValues {
            variance_per_term: crosstalk_variance_theory(f, n).ok(),
            variance_per_term_exact: exact_term_moment(f, n, 2).ok(),
            excess_kurtosis: crosstalk_kurtosis_theory(f, n, p).ok(),
            excess_kurtosis_exact: crosstalk_kurtosis_exact(f, n, p).ok(),
            mixed: None,
        },
        Form::Mixed { f_s, f_a, lambda } => CrosstalkTheoryValues {
            variance_per_term: None,
            variance_per_term_exact: None,
            excess_kurtosis: None,
            excess_kurtosis_exact: None,
            mixed: mixed_crosstalk_theory(f_s, f_a, lambda, n, p).ok(),
        },
    };
    let branches = samples.branches.as_ref().map(|br| {
        [-1i8, 1]
            .iter()
            .map(|&b| {
                let a: MomentAccumulator = samples.values.iter().zip(br).filter(|(_, &x)| x == b).map(|(&v, _)| v).collect();
                BranchStats { branch: b, weight: a.count() as f64 / n_samples as f64, moments: a.summary() }
            })
            .collect()
    });
    let bimodality = match form {
        Form::Mixed { .. } => Some(bimodality(&samples.values, DEFAULT_BINS)?),
        _ => None,
    };
    Ok(CrosstalkStats {
        rule: *rule,
        rule_label: rule.label(),
        n_neurons: n,
        n_patterns: p,
        n_samples,
        seed,
        moments,
        variance_per_term: moments.variance / terms,
        variance_per_term_se: acc.variance_standard_error() / terms,
        flip_fraction: flips as f64 / n_samples as f64,
        theory,
        histogram: Histogram::new(&samples.values, DEFAULT_BINS),
        branches,
        bimodality,
    })
}
