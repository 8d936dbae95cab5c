//! Local-field kernels shared by the update rules.
//!
//! Every rule reduces to `sgn(sum_nu out^nu_i * g(k^nu_i))` where `k` is an
//! integer overlap numerator and `g` a lookup table. Polynomial tables are
//! kept as integers (the positive scale `D^d` is dropped) whenever the sum
//! provably fits in 64 bits; otherwise terms are summed in `f64` with
//! Neumaier compensation in ascending pattern order.

use std::ops::{AddAssign, Mul, Sub};

use super::{InteractionFunction, OverlapMode};
use crate::patterns::{PatternSet, StateVector};

/// Which row multiplies pattern `nu`'s interaction term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Targets {
    Successor,
    Own,
}

impl Targets {
    fn row(self, ps: &PatternSet, nu: usize) -> &[i8] {
        match self {
            Targets::Successor => ps.unpacked_row(ps.next_index(nu)),
            Targets::Own => ps.unpacked_row(nu),
        }
    }
}

#[derive(Clone, Debug)]
enum Values {
    Int(Vec<i64>),
    Real,
}

/// `g[k] = f(k / D)` for `k` in `-(D+2)..=D+2`.
#[derive(Clone, Debug)]
pub(crate) struct ActivationTable {
    denom: i64,
    values: Values,
    /// `f(k / D)` itself; the integer table drops the factor `D^d`.
    reals: Vec<f64>,
    narrow: bool,
}

#[inline(always)]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    let (big, small) = if sum.abs() >= x.abs() { (*sum, x) } else { (x, *sum) };
    *comp += (big - t) + small;
    *sum = t;
}

impl ActivationTable {
    pub(crate) fn new(f: InteractionFunction, n: usize, mode: OverlapMode, n_patterns: usize) -> Self {
        let denom = match mode {
            OverlapMode::SelfExcluded => n as i64 - 1,
            OverlapMode::Full => n as i64,
        };
        let ks = -(denom + 2)..=denom + 2;
        let reals: Vec<f64> = ks.clone().map(|k| f.eval_ratio(k as f64, denom as f64, n)).collect();
        if let Some(d) = f.degree() {
            // worst case |sum| <= 2 P (D+2)^d for the split excluded kernel
            let bound = (denom as u128 + 2)
                .checked_pow(d)
                .and_then(|b| b.checked_mul(2 * n_patterns as u128 + 2));
            if let Some(b) = bound.filter(|&b| b <= i64::MAX as u128) {
                let vals = ks.map(|k| k.pow(d)).collect();
                return ActivationTable { denom, values: Values::Int(vals), reals, narrow: b <= i32::MAX as u128 };
            }
        }
        ActivationTable { denom, values: Values::Real, reals, narrow: false }
    }

    #[inline]
    fn idx(&self, k: i64) -> usize {
        (k + self.denom + 2) as usize
    }

    pub(crate) fn is_exact(&self) -> bool {
        matches!(self.values, Values::Int(_))
    }

    pub(crate) fn real(&self, k: i64) -> f64 {
        self.reals[self.idx(k)]
    }

    pub(crate) fn int(&self, k: i64) -> Option<i64> {
        match &self.values {
            Values::Int(v) => Some(v[self.idx(k)]),
            Values::Real => None,
        }
    }
}

trait Acc: Copy + Default + AddAssign + Mul<Output = Self> + Sub<Output = Self> + From<i8> + PartialOrd {
    fn from_i64(v: i64) -> Self;
    /// `self * o` for `o` in {-1, +1}, branch- and multiply-free so the loop vectorizes.
    fn signed(self, o: i8) -> Self;
}

impl Acc for i32 {
    fn from_i64(v: i64) -> Self {
        v as i32
    }

    #[inline(always)]
    fn signed(self, o: i8) -> Self {
        let m = (o as i32) >> 31;
        (self ^ m) - m
    }
}

impl Acc for i64 {
    fn from_i64(v: i64) -> Self {
        v
    }

    #[inline(always)]
    fn signed(self, o: i8) -> Self {
        let m = (o as i64) >> 63;
        (self ^ m) - m
    }
}

fn signs_from<T: PartialOrd + Default>(field: &[T]) -> StateVector {
    StateVector::from_fn(field.len(), |i| field[i] >= T::default())
}

/// Self-excluded numerators: neuron `i` sees `s_nu - xi^nu_i S_i`.
pub(crate) fn excluded_field(
    ps: &PatternSet,
    state: &[i8],
    nums: &[i32],
    table: &ActivationTable,
    targets: Targets,
) -> StateVector {
    match (&table.values, table.narrow) {
        (Values::Int(_), true) => excluded_exact::<i32>(ps, state, nums, table, targets),
        (Values::Int(_), false) => excluded_exact::<i64>(ps, state, nums, table, targets),
        (Values::Real, _) => excluded_real(ps, state, nums, table, targets),
    }
}

fn excluded_exact<T: Acc>(ps: &PatternSet, state: &[i8], nums: &[i32], table: &ActivationTable, targets: Targets) -> StateVector {
    let n = ps.n_neurons();
    let mut acc_c = vec![T::default(); n];
    let mut acc_e = vec![T::default(); n];
    let mut scalar_e = T::default();
    for (nu, &s) in nums.iter().enumerate() {
        let s = s as i64;
        let lo = table.int(s - 1).unwrap();
        let hi = table.int(s + 1).unwrap();
        // g[s - y] = c - y e for y = xi_i S_i
        let c = T::from_i64((lo + hi) / 2);
        let e = T::from_i64((hi - lo) / 2);
        let out = targets.row(ps, nu);
        match targets {
            Targets::Successor => {
                let prod = &ps.successor_products()[nu * n..(nu + 1) * n];
                for (((a, b), &o), &q) in acc_c.iter_mut().zip(acc_e.iter_mut()).zip(out).zip(prod) {
                    *a += c.signed(o);
                    *b += e.signed(q);
                }
            }
            Targets::Own => {
                for (a, &o) in acc_c.iter_mut().zip(out) {
                    *a += c.signed(o);
                }
                scalar_e += e;
            }
        }
    }
    let field: Vec<T> = (0..n)
        .map(|i| {
            let e = if targets == Targets::Own { scalar_e } else { acc_e[i] };
            acc_c[i] - T::from(state[i]) * e
        })
        .collect();
    signs_from(&field)
}

fn excluded_real(ps: &PatternSet, state: &[i8], nums: &[i32], table: &ActivationTable, targets: Targets) -> StateVector {
    let n = ps.n_neurons();
    let mut sum = vec![0.0f64; n];
    let mut comp = vec![0.0f64; n];
    for (nu, &s) in nums.iter().enumerate() {
        let s = s as i64;
        let agree = table.real(s - 1);
        let disagree = table.real(s + 1);
        let row = ps.unpacked_row(nu);
        let out = targets.row(ps, nu);
        for ((((s, c), &r), &st), &o) in sum.iter_mut().zip(comp.iter_mut()).zip(row).zip(state).zip(out) {
            let g = if r == st { agree } else { disagree };
            neumaier(s, c, if o > 0 { g } else { -g });
        }
    }
    let field: Vec<f64> = sum.iter().zip(&comp).map(|(s, c)| s + c).collect();
    signs_from(&field)
}

/// Full-divisor form: one value per pattern, shared by every neuron.
pub(crate) fn full_field_from_table(ps: &PatternSet, nums: &[i32], table: &ActivationTable, targets: Targets) -> StateVector {
    match &table.values {
        Values::Int(_) => {
            let vals: Vec<i64> = nums.iter().map(|&s| table.int(s as i64).unwrap()).collect();
            if table.narrow {
                full_exact::<i32>(ps, &vals, targets)
            } else {
                full_exact::<i64>(ps, &vals, targets)
            }
        }
        Values::Real => {
            let vals: Vec<f64> = nums.iter().map(|&s| table.real(s as i64)).collect();
            full_field_real(ps, &vals, targets)
        }
    }
}

fn full_exact<T: Acc>(ps: &PatternSet, vals: &[i64], targets: Targets) -> StateVector {
    let mut acc = vec![T::default(); ps.n_neurons()];
    for (nu, &v) in vals.iter().enumerate() {
        let v = T::from_i64(v);
        for (a, &o) in acc.iter_mut().zip(targets.row(ps, nu)) {
            *a += v * T::from(o);
        }
    }
    signs_from(&acc)
}

pub(crate) fn full_field_real(ps: &PatternSet, vals: &[f64], targets: Targets) -> StateVector {
    signs_from(&full_real_sums(ps, vals, targets))
}

pub(crate) fn full_real_sums(ps: &PatternSet, vals: &[f64], targets: Targets) -> Vec<f64> {
    let n = ps.n_neurons();
    let mut sum = vec![0.0f64; n];
    let mut comp = vec![0.0f64; n];
    for (nu, &v) in vals.iter().enumerate() {
        for ((s, c), &o) in sum.iter_mut().zip(comp.iter_mut()).zip(targets.row(ps, nu)) {
            neumaier(s, c, o as f64 * v);
        }
    }
    sum.iter().zip(&comp).map(|(s, c)| s + c).collect()
}

/// Compensated accumulator over rows of real terms, for callers that build
/// their own per-neuron terms.
pub(crate) struct RealField {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl RealField {
    pub(crate) fn new(n: usize) -> Self {
        RealField { sum: vec![0.0; n], comp: vec![0.0; n] }
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, x: f64) {
        neumaier(&mut self.sum[i], &mut self.comp[i], x);
    }

    pub(crate) fn totals(&self) -> Vec<f64> {
        self.sum.iter().zip(&self.comp).map(|(s, c)| s + c).collect()
    }

    pub(crate) fn signs(&self) -> StateVector {
        signs_from(&self.totals())
    }
}

pub(crate) fn signs_of(field: &[f64]) -> StateVector {
    signs_from(field)
}

pub(crate) fn signs_of_int(field: &[i64]) -> StateVector {
    signs_from(field)
}
