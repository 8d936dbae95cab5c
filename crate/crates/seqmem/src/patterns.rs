//! Bit-packed bipolar patterns and states.
//!
//! Component `j` of a row lives in bit `j % 64` of word `j / 64`; a set bit
//! stands for +1. Padding bits past `n_neurons` are always zero, so XOR and
//! popcount over whole words count mismatches directly. Pattern indices are
//! 0-based and wrap modulo `P`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::Matrix;
use crate::rng::substream;

pub const WORD_BITS: usize = 64;
pub const FILE_MAGIC: &[u8; 6] = b"SQMEM1";
pub const HEADER_LEN: usize = 16;

pub fn words_for(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

fn tail_mask(n: usize) -> u64 {
    match n % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

fn pack_into(values: &[i8], out: &mut [u64]) -> Result<()> {
    out.fill(0);
    for (j, &v) in values.iter().enumerate() {
        match v {
            1 => out[j / WORD_BITS] |= 1 << (j % WORD_BITS),
            -1 => {}
            other => return Err(invalid(format!("component {j} is {other}, not +-1"))),
        }
    }
    Ok(())
}

#[inline]
fn bit(words: &[u64], j: usize) -> i8 {
    if (words[j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1 {
        1
    } else {
        -1
    }
}

#[inline]
fn mismatches(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

fn unpack(words: &[u64], n: usize, out: &mut [i8]) {
    for (j, o) in out.iter_mut().enumerate().take(n) {
        *o = bit(words, j);
    }
}

/// One network state S.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StateVector {
    n_neurons: usize,
    words: Vec<u64>,
}

impl StateVector {
    pub fn from_bipolar(values: &[i8]) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("state must have at least one neuron"));
        }
        let mut words = vec![0; words_for(values.len())];
        pack_into(values, &mut words)?;
        Ok(StateVector { n_neurons: values.len(), words })
    }

    /// Builds a state from packed words; bits past `n_neurons` are cleared.
    pub fn from_words(n_neurons: usize, mut words: Vec<u64>) -> Result<Self> {
        if words.len() != words_for(n_neurons) {
            return Err(Error::DimensionMismatch { expected: words_for(n_neurons), got: words.len() });
        }
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(n_neurons);
        }
        Ok(StateVector { n_neurons, words })
    }

    /// All components +1 where `positive(j)` holds.
    pub(crate) fn from_fn(n_neurons: usize, mut positive: impl FnMut(usize) -> bool) -> Self {
        let mut words = vec![0u64; words_for(n_neurons)];
        for j in 0..n_neurons {
            if positive(j) {
                words[j / WORD_BITS] |= 1 << (j % WORD_BITS);
            }
        }
        StateVector { n_neurons, words }
    }

    pub fn len(&self) -> usize {
        self.n_neurons
    }

    pub fn is_empty(&self) -> bool {
        self.n_neurons == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, j: usize) -> i8 {
        bit(&self.words, j)
    }

    pub fn flip(&mut self, j: usize) {
        self.words[j / WORD_BITS] ^= 1 << (j % WORD_BITS);
    }

    pub fn negated(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(self.n_neurons);
        }
        StateVector { n_neurons: self.n_neurons, words }
    }

    pub fn to_bipolar(&self) -> Vec<i8> {
        let mut out = vec![0; self.n_neurons];
        unpack(&self.words, self.n_neurons, &mut out);
        out
    }


    /// Hamming distance to another state.
    pub fn mismatches(&self, other: &StateVector) -> Result<usize> {
        if other.n_neurons != self.n_neurons {
            return Err(Error::DimensionMismatch { expected: self.n_neurons, got: other.n_neurons });
        }
        Ok(mismatches(&self.words, &other.words) as usize)
    }
}

/// Component law of generated patterns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PatternLaw {
    Rademacher,
    /// P(+1) = (1 + epsilon) / 2.
    Biased { epsilon: f64 },
    /// Patterns come from a dataset; nothing to sample.
    FromData,
}

impl PatternLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PatternLaw::Biased { epsilon } if !(0.0..1.0).contains(&epsilon) => {
                Err(invalid(format!("bias epsilon must lie in [0, 1), got {epsilon}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternDistribution {
    pub law: PatternLaw,
    pub seed: u64,
}

impl PatternDistribution {
    pub fn rademacher(seed: u64) -> Self {
        PatternDistribution { law: PatternLaw::Rademacher, seed }
    }

    pub fn biased(epsilon: f64, seed: u64) -> Self {
        PatternDistribution { law: PatternLaw::Biased { epsilon }, seed }
    }
}

/// A stored sequence of `P` patterns of `N` neurons.
#[derive(Debug)]
pub struct PatternSet {
    n_neurons: usize,
    n_patterns: usize,
    words_per_row: usize,
    data: Vec<u64>,
    unpacked: OnceLock<Vec<i8>>,
    successor_products: OnceLock<Vec<i8>>,
}

impl Clone for PatternSet {
    fn clone(&self) -> Self {
        PatternSet::from_packed(self.n_neurons, self.n_patterns, self.data.clone())
    }
}

impl PartialEq for PatternSet {
    fn eq(&self, other: &Self) -> bool {
        self.n_neurons == other.n_neurons && self.n_patterns == other.n_patterns && self.data == other.data
    }
}

impl Eq for PatternSet {}

impl PatternSet {
    fn from_packed(n_neurons: usize, n_patterns: usize, data: Vec<u64>) -> Self {
        PatternSet {
            n_neurons,
            n_patterns,
            words_per_row: words_for(n_neurons),
            data,
            unpacked: OnceLock::new(),
            successor_products: OnceLock::new(),
        }
    }

    pub fn from_rows<R: AsRef<[i8]>>(rows: &[R]) -> Result<Self> {
        let n = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if n == 0 || rows.is_empty() {
            return Err(invalid("pattern set needs at least one non-empty row"));
        }
        let wpr = words_for(n);
        let mut data = vec![0u64; wpr * rows.len()];
        for (mu, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            pack_into(row, &mut data[mu * wpr..(mu + 1) * wpr])?;
        }
        Ok(PatternSet::from_packed(n, rows.len(), data))
    }

    pub fn from_states(states: &[StateVector]) -> Result<Self> {
        let n = states.first().map(|s| s.len()).ok_or_else(|| invalid("no states"))?;
        let mut data = Vec::with_capacity(words_for(n) * states.len());
        for s in states {
            if s.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: s.len() });
            }
            data.extend_from_slice(s.words());
        }
        Ok(PatternSet::from_packed(n, states.len(), data))
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn n_patterns(&self) -> usize {
        self.n_patterns
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    /// Index of the successor of pattern `mu` under periodic boundaries.
    pub fn next_index(&self, mu: usize) -> usize {
        (mu + 1) % self.n_patterns
    }

    pub fn row_words(&self, mu: usize) -> &[u64] {
        let w = self.words_per_row;
        &self.data[mu * w..(mu + 1) * w]
    }

    pub fn pattern(&self, mu: usize) -> StateVector {
        StateVector { n_neurons: self.n_neurons, words: self.row_words(mu).to_vec() }
    }

    pub fn get(&self, mu: usize, j: usize) -> i8 {
        bit(self.row_words(mu), j)
    }

    /// Row-major `P x N` matrix of +-1 entries, built once on first use.
    pub fn unpacked(&self) -> &[i8] {
        self.unpacked.get_or_init(|| {
            let n = self.n_neurons;
            let mut out = vec![0i8; n * self.n_patterns];
            for (mu, row) in out.chunks_exact_mut(n).enumerate() {
                unpack(self.row_words(mu), n, row);
            }
            out
        })
    }

    pub fn unpacked_row(&self, mu: usize) -> &[i8] {
        let n = self.n_neurons;
        &self.unpacked()[mu * n..(mu + 1) * n]
    }

    /// Row `mu` holds `xi^{mu+1}_i * xi^mu_i`.
    pub(crate) fn successor_products(&self) -> &[i8] {
        self.successor_products.get_or_init(|| {
            let n = self.n_neurons;
            let x = self.unpacked();
            let mut out = vec![0i8; n * self.n_patterns];
            for (mu, row) in out.chunks_exact_mut(n).enumerate() {
                let a = &x[mu * n..(mu + 1) * n];
                let nu = self.next_index(mu);
                let b = &x[nu * n..(nu + 1) * n];
                for ((o, &p), &q) in row.iter_mut().zip(a).zip(b) {
                    *o = p * q;
                }
            }
            out
        })
    }

    pub fn packed_data(&self) -> &[u64] {
        &self.data
    }

    fn check_state(&self, s: &StateVector) -> Result<()> {
        if s.len() != self.n_neurons {
            return Err(Error::DimensionMismatch { expected: self.n_neurons, got: s.len() });
        }
        Ok(())
    }

    fn check_index(&self, mu: usize) -> Result<()> {
        if mu >= self.n_patterns {
            return Err(Error::IndexOutOfRange { index: mu, len: self.n_patterns });
        }
        Ok(())
    }

    /// Full-width numerators `N - 2 * mismatches(S, xi^mu)` for every pattern.
    pub fn overlap_numerators(&self, s: &StateVector) -> Vec<i32> {
        let n = self.n_neurons as i32;
        (0..self.n_patterns)
            .map(|mu| n - 2 * mismatches(self.row_words(mu), s.words()) as i32)
            .collect()
    }
}

pub fn generate_patterns(dist: PatternDistribution, n: usize, p: usize) -> Result<PatternSet> {
    if n < 2 || p < 2 {
        return Err(invalid(format!("need N >= 2 and P >= 2, got N={n}, P={p}")));
    }
    let mut rng = substream(dist.seed, &[]);
    generate_with(&mut rng, dist.law, n, p)
}

/// Samples a pattern set from an existing generator.
pub fn generate_with<R: Rng + ?Sized>(rng: &mut R, law: PatternLaw, n: usize, p: usize) -> Result<PatternSet> {
    law.validate()?;
    if n == 0 || p == 0 {
        return Err(invalid("empty pattern set"));
    }
    let wpr = words_for(n);
    let mut data = vec![0u64; wpr * p];
    match law {
        PatternLaw::Rademacher => {
            for row in data.chunks_exact_mut(wpr) {
                rng.fill(row);
                row[wpr - 1] &= tail_mask(n);
            }
        }
        PatternLaw::Biased { epsilon } => {
            let q = (1.0 + epsilon) / 2.0;
            for row in data.chunks_exact_mut(wpr) {
                for j in 0..n {
                    if rng.random::<f64>() < q {
                        row[j / WORD_BITS] |= 1 << (j % WORD_BITS);
                    }
                }
            }
        }
        PatternLaw::FromData => return Err(invalid("FromData patterns are loaded, not generated")),
    }
    Ok(PatternSet::from_packed(n, p, data))
}

/// Overlap of `s` with pattern `mu`. With `exclude = Some(i)` neuron `i` is
/// dropped and the divisor is `N - 1`.
pub fn overlap(ps: &PatternSet, mu: usize, s: &StateVector, exclude: Option<usize>) -> Result<f64> {
    ps.check_index(mu)?;
    ps.check_state(s)?;
    let n = ps.n_neurons as i64;
    let full = n - 2 * mismatches(ps.row_words(mu), s.words()) as i64;
    match exclude {
        None => Ok(full as f64 / n as f64),
        Some(i) => {
            if i >= ps.n_neurons {
                return Err(Error::IndexOutOfRange { index: i, len: ps.n_neurons });
            }
            if n < 2 {
                return Err(invalid("self-excluded overlap needs N >= 2"));
            }
            let own = (ps.get(mu, i) * s.get(i)) as i64;
            Ok((full - own) as f64 / (n - 1) as f64)
        }
    }
}

/// `O = X X^T / N`.
pub fn overlap_matrix(ps: &PatternSet) -> Matrix {
    let p = ps.n_patterns;
    let n = ps.n_neurons as f64;
    let mut o = Matrix::zeros(p, p);
    for a in 0..p {
        o.set(a, a, 1.0);
        for b in a + 1..p {
            let num = ps.n_neurons as i64 - 2 * mismatches(ps.row_words(a), ps.row_words(b)) as i64;
            let v = num as f64 / n;
            o.set(a, b, v);
            o.set(b, a, v);
        }
    }
    o
}

/// Hamming distance between a state and pattern `mu`.
pub fn mismatch_count(a: &StateVector, ps: &PatternSet, mu: usize) -> Result<usize> {
    ps.check_index(mu)?;
    ps.check_state(a)?;
    Ok(mismatches(a.words(), ps.row_words(mu)) as usize)
}

pub fn write_patterns<W: Write>(mut w: W, ps: &PatternSet) -> Result<()> {
    let n = u32::try_from(ps.n_neurons).map_err(|_| invalid("N does not fit in 32 bits"))?;
    let p = u32::try_from(ps.n_patterns).map_err(|_| invalid("P does not fit in 32 bits"))?;
    let mut header = [0u8; HEADER_LEN];
    header[..6].copy_from_slice(FILE_MAGIC);
    header[8..12].copy_from_slice(&n.to_le_bytes());
    header[12..16].copy_from_slice(&p.to_le_bytes());
    w.write_all(&header)?;
    for word in &ps.data {
        w.write_all(&word.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_patterns<R: Read>(mut r: R) -> Result<PatternSet> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() < HEADER_LEN {
        return Err(Error::Truncated { expected: HEADER_LEN, found: buf.len() });
    }
    if &buf[..6] != FILE_MAGIC {
        return Err(Error::Format("bad magic, expected SQMEM1".into()));
    }
    let n = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    let p = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
    if n == 0 || p == 0 {
        return Err(Error::Format(format!("empty dimensions N={n}, P={p}")));
    }
    let wpr = words_for(n);
    let expected = HEADER_LEN + 8 * wpr * p;
    if buf.len() != expected {
        return Err(Error::Truncated { expected, found: buf.len() });
    }
    let mut data: Vec<u64> = buf[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mask = tail_mask(n);
    for row in data.chunks_exact_mut(wpr) {
        if row[wpr - 1] & !mask != 0 {
            return Err(Error::Format("nonzero padding bits".into()));
        }
    }
    data.shrink_to_fit();
    Ok(PatternSet::from_packed(n, p, data))
}

pub fn save_patterns(path: impl AsRef<Path>, ps: &PatternSet) -> Result<()> {
    write_patterns(BufWriter::new(File::create(path)?), ps)
}

pub fn load_patterns(path: impl AsRef<Path>) -> Result<PatternSet> {
    read_patterns(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_enumerated_excluded_overlap() {
        let ps = PatternSet::from_rows(&[[1i8, 1, 1, 1, 1], [-1, -1, -1, -1, -1]]).unwrap();
        // j != 1 leaves +,+,+,- against the all-plus row
        let s = StateVector::from_bipolar(&[1, -1, 1, 1, -1]).unwrap();
        assert_eq!(overlap(&ps, 0, &s, Some(1)).unwrap(), 0.5);
    }

    #[test]
    fn self_and_antipodal() {
        let ps = generate_patterns(PatternDistribution::rademacher(3), 77, 4).unwrap();
        let x = ps.pattern(2);
        assert_eq!(overlap(&ps, 2, &x, None).unwrap(), 1.0);
        assert_eq!(overlap(&ps, 2, &x.negated(), None).unwrap(), -1.0);
        assert_eq!(overlap(&ps, 2, &x, Some(76)).unwrap(), 1.0);
        assert_eq!(mismatch_count(&x.negated(), &ps, 2).unwrap(), 77);
    }

    #[test]
    fn determinism() {
        let a = generate_patterns(PatternDistribution::rademacher(0), 4, 2).unwrap();
        let b = generate_patterns(PatternDistribution::rademacher(0), 4, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn epsilon_one_rejected() {
        assert!(generate_patterns(PatternDistribution::biased(1.0, 0), 4, 2).is_err());
        assert!(generate_patterns(PatternDistribution::biased(0.5, 0), 1, 2).is_err());
    }

    #[test]
    fn bad_header_rejected() {
        assert!(matches!(read_patterns(&b"SQMEM"[..]), Err(Error::Truncated { .. })));
        let mut buf = [0u8; 16];
        buf[..6].copy_from_slice(b"SQMEM2");
        assert!(matches!(read_patterns(&buf[..]), Err(Error::Format(_))));
    }
}
