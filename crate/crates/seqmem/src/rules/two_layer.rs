//! Visible/hidden form: `h_mu = f(sum_j W_{j mu} v_j)`,
//! `v_j = sgn(sum_mu M_{mu j} h_mu)`.

use super::field::{ActivationTable, RealField};
use super::{InteractionFunction, OverlapMode, RuleConfig};
use crate::error::{invalid, Error, Result};
use crate::patterns::{PatternSet, StateVector};

#[derive(Clone, Debug, PartialEq)]
pub struct TwoLayerWeights {
    n_visible: usize,
    n_hidden: usize,
    /// Numerators of `W`, laid out `[j * P + mu]`; `W = w_num / N`.
    w_num: Vec<i8>,
    /// `M`, laid out `[mu * N + j]`.
    m: Vec<f64>,
    m_integral: bool,
}

impl TwoLayerWeights {
    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    /// `W_{j mu}`.
    pub fn w(&self, j: usize, mu: usize) -> f64 {
        self.w_num[j * self.n_hidden + mu] as f64 / self.n_visible as f64
    }

    /// `M_{mu j}`.
    pub fn m(&self, mu: usize, j: usize) -> f64 {
        self.m[mu * self.n_visible + j]
    }
}

/// `W_{j mu} = xi^mu_j / N`; `M_{mu j} = xi^{mu+1}_j` for sequence DenseNets
/// and SeqNet, `xi^mu_j + lambda xi^{mu+1}_j` for MixedNet.
pub fn build_two_layer(ps: &PatternSet, cfg: &RuleConfig) -> Result<TwoLayerWeights> {
    let lambda = match *cfg {
        RuleConfig::SeqNet | RuleConfig::DenseNet { .. } => None,
        RuleConfig::MixedNet { lambda, .. } => Some(lambda),
        other => return Err(invalid(format!("no two-layer form for {}", other.label()))),
    };
    if let Some(l) = lambda {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(invalid(format!("lambda must be finite and >= 0, got {l}")));
        }
    }
    let n = ps.n_neurons();
    let p = ps.n_patterns();
    let mut w_num = vec![0i8; n * p];
    for mu in 0..p {
        for (j, &x) in ps.unpacked_row(mu).iter().enumerate() {
            w_num[j * p + mu] = x;
        }
    }
    let mut m = vec![0.0f64; p * n];
    for mu in 0..p {
        let next = ps.unpacked_row(ps.next_index(mu));
        let own = ps.unpacked_row(mu);
        for j in 0..n {
            m[mu * n + j] = match lambda {
                None => next[j] as f64,
                Some(l) => own[j] as f64 + l * next[j] as f64,
            };
        }
    }
    let m_integral = m.iter().all(|v| v.fract() == 0.0);
    Ok(TwoLayerWeights { n_visible: n, n_hidden: p, w_num, m, m_integral })
}

pub fn two_layer_update(v: &StateVector, weights: &TwoLayerWeights, f: InteractionFunction) -> Result<StateVector> {
    f.validate()?;
    let n = weights.n_visible;
    let p = weights.n_hidden;
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    let vis = v.to_bipolar();
    let mut pre = vec![0i32; p];
    for (j, &vj) in vis.iter().enumerate() {
        let col = &weights.w_num[j * p..(j + 1) * p];
        for (acc, &w) in pre.iter_mut().zip(col) {
            *acc += (w * vj) as i32;
        }
    }
    let table = ActivationTable::new(f, n, OverlapMode::Full, p);
    if table.is_exact() && weights.m_integral {
        let mut field = vec![0i64; n];
        for (mu, &k) in pre.iter().enumerate() {
            let h = table.int(k as i64).unwrap();
            let row = &weights.m[mu * n..(mu + 1) * n];
            for (acc, &mij) in field.iter_mut().zip(row) {
                *acc += mij as i64 * h;
            }
        }
        return Ok(super::field::signs_of_int(&field));
    }
    let mut field = RealField::new(n);
    for (mu, &k) in pre.iter().enumerate() {
        let h = table.real(k as i64);
        let row = &weights.m[mu * n..(mu + 1) * n];
        for (j, &mij) in row.iter().enumerate() {
            field.add(j, mij * h);
        }
    }
    Ok(field.signs())
}
