//! Closed-form capacity, crosstalk and bitflip predictions.
//!
//! Logarithms are natural. Capacities are reals; callers floor them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{double_factorial, gaussian_tail, gaussian_tail_inv, ln_binomial_row, ln_double_factorial};
use crate::rules::{InteractionFunction, RuleConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityKind {
    /// One transition succeeds with high probability.
    Transition,
    /// Every transition of the sequence succeeds with high probability.
    Sequence,
}

impl fmt::Display for CapacityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CapacityKind::Transition => "transition",
            CapacityKind::Sequence => "sequence",
        })
    }
}

impl FromStr for CapacityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "transition" | "t" => Ok(CapacityKind::Transition),
            "sequence" | "s" => Ok(CapacityKind::Sequence),
            other => Err(invalid(format!("unknown capacity kind '{other}' (transition, sequence)"))),
        }
    }
}

/// `beta = e^2 / cosh 2`.
pub fn beta() -> f64 {
    (2.0f64).exp() / (2.0f64).cosh()
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(invalid(format!("N must be >= {min}, got {n}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must exceed 1, got {lambda}")));
    }
    Ok(())
}

fn df(k: i64) -> Result<f64> {
    Ok(ln_double_factorial(k)?.exp())
}

/// `P_T = N^d / (2 (2d-1)!! ln N)`; `P_S = P_T / (d + 1)`.
pub fn poly_densenet_capacity(n: usize, d: u32, kind: CapacityKind) -> Result<f64> {
    check_n(n, 3)?;
    if d == 0 {
        return Err(invalid("degree must be >= 1"));
    }
    let nf = n as f64;
    let ln_pt = d as f64 * nf.ln() - (2.0f64).ln() - ln_double_factorial(2 * d as i64 - 1)? - nf.ln().ln();
    let pt = ln_pt.exp();
    Ok(match kind {
        CapacityKind::Transition => pt,
        CapacityKind::Sequence => pt / (d as f64 + 1.0),
    })
}

/// `P_T = beta^(N-1) / (2 ln N)`; `P_S = beta^(N-1) / (2 N ln beta)`.
pub fn exp_densenet_capacity(n: usize, kind: CapacityKind) -> Result<f64> {
    check_n(n, 3)?;
    let nf = n as f64;
    let b = beta();
    let bn = b.powi(n as i32 - 1);
    Ok(match kind {
        CapacityKind::Transition => bn / (2.0 * nf.ln()),
        CapacityKind::Sequence => bn / (2.0 * nf * b.ln()),
    })
}

/// Multiplicative factor of the MixedNet conditional variance.
pub fn gamma_factor(d_s: u32, d_a: u32, lambda: f64) -> Result<f64> {
    if d_s == 0 || d_a == 0 {
        return Err(invalid("degrees must be >= 1"));
    }
    use std::cmp::Ordering::*;
    Ok(match d_s.cmp(&d_a) {
        Less => double_factorial(2 * d_s as i64 - 1)? as f64,
        Greater => lambda * lambda * double_factorial(2 * d_a as i64 - 1)? as f64,
        Equal => {
            let d = d_s as i64;
            let mut g = (lambda * lambda + 1.0) * double_factorial(2 * d - 1)? as f64;
            if d % 2 == 0 {
                let h = double_factorial(d - 1)? as f64;
                g += 2.0 * lambda * h * h;
            }
            g
        }
    })
}

/// `P_T = (lambda-1)^2 N^min / (2 gamma ln N)`; `P_S = P_T / (min + 1)`.
pub fn mixed_poly_capacity(n: usize, d_s: u32, d_a: u32, lambda: f64, kind: CapacityKind) -> Result<f64> {
    check_n(n, 3)?;
    check_lambda(lambda)?;
    let dmin = d_s.min(d_a);
    let nf = n as f64;
    let pt = (lambda - 1.0).powi(2) * nf.powi(dmin as i32) / (2.0 * gamma_factor(d_s, d_a, lambda)? * nf.ln());
    Ok(match kind {
        CapacityKind::Transition => pt,
        CapacityKind::Sequence => pt / (dmin as f64 + 1.0),
    })
}

/// `(lambda-1)^2 / (lambda^2+1)`.
pub fn mixed_exp_factor(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok((lambda - 1.0).powi(2) / (lambda * lambda + 1.0))
}

pub fn mixed_exp_capacity(n: usize, lambda: f64, kind: CapacityKind) -> Result<f64> {
    Ok(mixed_exp_factor(lambda)? * exp_densenet_capacity(n, kind)?)
}

/// Asymptotic variance of one crosstalk term: `(2d-1)!!/N^d` or `beta^-(N-1)`.
pub fn crosstalk_variance_theory(f: InteractionFunction, n: usize) -> Result<f64> {
    check_n(n, 2)?;
    Ok(match f.degree() {
        Some(d) => df(2 * d as i64 - 1)? / (n as f64).powi(d as i32),
        None => beta().powi(-(n as i32 - 1)),
    })
}

/// Excess kurtosis of the crosstalk sum over `P - 1` terms.
pub fn crosstalk_kurtosis_theory(f: InteractionFunction, n: usize, p: usize) -> Result<f64> {
    check_n(n, 2)?;
    if p < 2 {
        return Err(invalid(format!("kurtosis needs P >= 2, got {p}")));
    }
    let bracket = match f.degree() {
        Some(d) => {
            let d = d as i64;
            (ln_double_factorial(4 * d - 1)? - 2.0 * ln_double_factorial(2 * d - 1)?).exp() - 3.0
        }
        None => ((4.0f64).cosh() / (2.0f64).cosh().powi(2)).powi(n as i32 - 1) - 3.0,
    };
    Ok(bracket / (p - 1) as f64)
}

/// Exact `E[f(Xi)^k]` with `Xi` the mean of `N - 1` Rademacher variables.
pub fn exact_term_moment(f: InteractionFunction, n: usize, k: u32) -> Result<f64> {
    check_n(n, 2)?;
    let big_d = n - 1;
    let row = ln_binomial_row(big_d);
    let ln_half = -(big_d as f64) * (2.0f64).ln();
    let mut total = 0.0;
    for (h, &lc) in row.iter().enumerate() {
        let w = lc + ln_half;
        let term = match f.degree() {
            Some(d) => {
                let x = (big_d as f64 - 2.0 * h as f64) / big_d as f64;
                w.exp() * x.powi((d * k) as i32)
            }
            None => (w - 2.0 * h as f64 * k as f64).exp(),
        };
        total += term;
    }
    Ok(total)
}

/// Excess kurtosis of the crosstalk built from exact finite-N term moments.
pub fn crosstalk_kurtosis_exact(f: InteractionFunction, n: usize, p: usize) -> Result<f64> {
    if p < 2 {
        return Err(invalid(format!("kurtosis needs P >= 2, got {p}")));
    }
    let m2 = exact_term_moment(f, n, 2)?;
    let m4 = exact_term_moment(f, n, 4)?;
    Ok((m4 / (m2 * m2) - 3.0) / (p - 1) as f64)
}

/// First and second moments of `f(Xi)` in the forms used for MixedNet.
/// Exponential moments are exact; polynomial ones are leading order.
pub fn interaction_moments(f: InteractionFunction, n: usize) -> Result<(f64, f64)> {
    check_n(n, 2)?;
    let nf = n as f64;
    Ok(match f.degree() {
        Some(d) => {
            let mean = if d % 2 == 0 { df(d as i64 - 1)? / nf.powf(d as f64 / 2.0) } else { 0.0 };
            (mean, df(2 * d as i64 - 1)? / nf.powi(d as i32))
        }
        None => {
            let e = n as i32 - 1;
            (((1.0f64).cosh() / (1.0f64).exp()).powi(e), beta().powi(-e))
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixedCrosstalkTheory {
    /// `E[C | xi = -1]`.
    pub mean_minus: f64,
    /// `E[C | xi = +1]`.
    pub mean_plus: f64,
    /// `Var[C | xi]`, equal for both branches.
    pub variance: f64,
}

pub fn mixed_crosstalk_theory(
    f_s: InteractionFunction,
    f_a: InteractionFunction,
    lambda: f64,
    n: usize,
    p: usize,
) -> Result<MixedCrosstalkTheory> {
    if p < 2 {
        return Err(invalid(format!("need P >= 2, got {p}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let (es, es2) = interaction_moments(f_s, n)?;
    let (ea, ea2) = interaction_moments(f_a, n)?;
    let variance = (p - 1) as f64 * (es2 + 2.0 * lambda * es * ea + lambda * lambda * ea2) - es * es - lambda * lambda * ea * ea;
    let shift = 1.0 + lambda * ea;
    Ok(MixedCrosstalkTheory { mean_minus: -shift + es, mean_plus: shift + es, variance })
}

/// Gaussian single-bitflip estimate, with a flag when the Gaussian regime
/// `(P-1) Var < 1` does not hold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BitflipEstimate {
    pub probability: f64,
    pub regime_ok: bool,
}

/// Which network a bitflip or finite-c prediction refers to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TheoryModel {
    DenseNet { f: InteractionFunction },
    MixedNet { f_s: InteractionFunction, f_a: InteractionFunction, lambda: f64 },
    /// Classic autoassociative Hopfield, `Var(chi) = 1/(N-1)`.
    Hopfield,
}

fn term_variance(model: &TheoryModel, n: usize) -> Result<f64> {
    match model {
        TheoryModel::DenseNet { f } => crosstalk_variance_theory(*f, n),
        TheoryModel::Hopfield => {
            check_n(n, 2)?;
            Ok(1.0 / (n as f64 - 1.0))
        }
        TheoryModel::MixedNet { .. } => Err(invalid("MixedNet has no single-term variance")),
    }
}

pub fn bitflip_probability(model: &TheoryModel, n: usize, p: usize) -> Result<BitflipEstimate> {
    if p < 2 {
        return Err(invalid(format!("need P >= 2, got {p}")));
    }
    match *model {
        TheoryModel::MixedNet { f_s, f_a, lambda } => {
            let t = mixed_crosstalk_theory(f_s, f_a, lambda, n, p)?;
            let sd = t.variance.max(0.0).sqrt();
            let probability =
                0.5 * gaussian_tail((lambda + t.mean_minus) / sd) + 0.5 * gaussian_tail((lambda + t.mean_plus) / sd);
            Ok(BitflipEstimate { probability, regime_ok: t.variance < 1.0 })
        }
        _ => {
            let v = (p - 1) as f64 * term_variance(model, n)?;
            Ok(BitflipEstimate { probability: gaussian_tail(1.0 / v.sqrt()), regime_ok: v < 1.0 })
        }
    }
}

/// Largest `P` with `N P_flip = c` (transition) or `N P P_flip = c`
/// (sequence) under the Gaussian approximation, found by bisection.
pub fn finite_c_capacity(n: usize, c: f64, model: &TheoryModel, kind: CapacityKind) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid(format!("c must lie in (0, 1), got {c}")));
    }
    let var = term_variance(model, n)?;
    let nf = n as f64;
    let rhs = |p: f64| -> Result<f64> {
        let q = match kind {
            CapacityKind::Transition => c / nf,
            CapacityKind::Sequence => c / (nf * p),
        };
        let x = gaussian_tail_inv(q.min(0.5))?;
        Ok(1.0 + 1.0 / (var * x * x))
    };
    if kind == CapacityKind::Transition {
        return rhs(1.0);
    }
    // g(P) = P - rhs(P) is increasing; bracket then bisect
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    let mut it = 0;
    while hi - rhs(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        it += 1;
        if it > 1000 {
            return Err(Error::RootNotFound(it));
        }
    }
    for _ in 0..1000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= 1e-13 * hi {
            return Ok(mid);
        }
        if mid - rhs(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootNotFound(1000))
}

/// Hoeffding upper bound on the classic Hopfield bitflip probability.
pub fn hopfield_hoeffding_bound(n: usize, p: usize) -> Result<f64> {
    if n < 2 || p < 2 {
        return Err(invalid(format!("need N, P >= 2, got N={n}, P={p}")));
    }
    Ok((-(n as f64 - 1.0) / (2.0 * (p as f64 - 1.0))).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeProfile {
    /// `ln P_T(d)` for `d = 1..=N`.
    pub ln_capacities: Vec<f64>,
    /// Largest maximizing degree; capacity strictly decreases beyond it.
    pub argmax: u32,
}

/// Transition capacity over `d = 1..=N`, built from the ratio `N / (2d+1)`.
pub fn max_degree_profile(n: usize) -> Result<DegreeProfile> {
    check_n(n, 5)?;
    let nf = n as f64;
    let mut ln = Vec::with_capacity(n);
    let mut cur = poly_densenet_capacity(n, 1, CapacityKind::Transition)?.ln();
    ln.push(cur);
    let mut argmax = 1u32;
    let mut best = cur;
    for d in 1..n {
        cur += (nf / (2 * d + 1) as f64).ln();
        ln.push(cur);
        if cur >= best {
            best = cur;
            argmax = d as u32 + 1;
        }
    }
    Ok(DegreeProfile { ln_capacities: ln, argmax })
}

/// Gaussian-theory capacity of a rule, where a closed form exists.
pub fn rule_capacity(rule: &RuleConfig, n: usize, kind: CapacityKind) -> Option<f64> {
    let single = |f: InteractionFunction| match f.degree() {
        Some(d) => poly_densenet_capacity(n, d, kind).ok(),
        None => exp_densenet_capacity(n, kind).ok(),
    };
    match *rule {
        RuleConfig::MixedNet { f_s, f_a, lambda, .. } => match (f_s.degree(), f_a.degree()) {
            (Some(ds), Some(da)) => mixed_poly_capacity(n, ds, da, lambda, kind).ok(),
            (None, None) => mixed_exp_capacity(n, lambda, kind).ok(),
            _ => None,
        },
        other => single(other.interaction()?),
    }
}

/// Inputs accepted by [`evaluate`]; unused fields stay `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub d: Option<u32>,
    pub d_s: Option<u32>,
    pub d_a: Option<u32>,
    pub lambda: Option<f64>,
    pub c: Option<f64>,
    pub f: Option<InteractionFunction>,
    pub kind: Option<CapacityKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryPrediction {
    pub formula_id: String,
    pub inputs: BTreeMap<String, String>,
    pub value: f64,
}

pub const FORMULAS: &[&str] = &[
    "beta",
    "gamma",
    "poly_capacity",
    "exp_capacity",
    "mixed_poly_capacity",
    "mixed_exp_capacity",
    "crosstalk_variance",
    "crosstalk_kurtosis",
    "bitflip",
    "finite_c_capacity",
    "hoeffding",
    "max_degree",
];

fn need<T: Copy>(v: Option<T>, name: &str, formula: &str) -> Result<T> {
    v.ok_or_else(|| invalid(format!("formula '{formula}' needs --{name}")))
}

/// Evaluates a formula by id, echoing the inputs that were used.
pub fn evaluate(formula_id: &str, inp: &TheoryInputs) -> Result<TheoryPrediction> {
    let mut used = BTreeMap::new();
    let id = formula_id;
    macro_rules! get {
        ($field:ident) => {{
            let v = need(inp.$field, stringify!($field), id)?;
            used.insert(stringify!($field).to_string(), format!("{}", v));
            v
        }};
    }
    let interaction = |f: Option<InteractionFunction>, d: Option<u32>| -> Result<InteractionFunction> {
        match (f, d) {
            (Some(f), _) => Ok(f),
            (None, Some(d)) => Ok(InteractionFunction::Polynomial(d)),
            (None, None) => Err(invalid(format!("formula '{id}' needs --f or --d"))),
        }
    };
    let value = match id {
        "beta" => beta(),
        "gamma" => gamma_factor(get!(d_s), get!(d_a), get!(lambda))?,
        "poly_capacity" => poly_densenet_capacity(get!(n), get!(d), get!(kind))?,
        "exp_capacity" => exp_densenet_capacity(get!(n), get!(kind))?,
        "mixed_poly_capacity" => mixed_poly_capacity(get!(n), get!(d_s), get!(d_a), get!(lambda), get!(kind))?,
        "mixed_exp_capacity" => mixed_exp_capacity(get!(n), get!(lambda), get!(kind))?,
        "crosstalk_variance" => {
            let f = interaction(inp.f, inp.d)?;
            used.insert("f".into(), f.to_string());
            crosstalk_variance_theory(f, get!(n))?
        }
        "crosstalk_kurtosis" => {
            let f = interaction(inp.f, inp.d)?;
            used.insert("f".into(), f.to_string());
            crosstalk_kurtosis_theory(f, get!(n), get!(p))?
        }
        "bitflip" => {
            let f = interaction(inp.f, inp.d)?;
            used.insert("f".into(), f.to_string());
            bitflip_probability(&TheoryModel::DenseNet { f }, get!(n), get!(p))?.probability
        }
        "finite_c_capacity" => {
            let f = interaction(inp.f, inp.d)?;
            used.insert("f".into(), f.to_string());
            finite_c_capacity(get!(n), get!(c), &TheoryModel::DenseNet { f }, get!(kind))?
        }
        "hoeffding" => hopfield_hoeffding_bound(get!(n), get!(p))?,
        "max_degree" => max_degree_profile(get!(n))?.argmax as f64,
        other => {
            return Err(invalid(format!("unknown formula '{other}' (one of {})", FORMULAS.join(", "))));
        }
    };
    Ok(TheoryPrediction { formula_id: id.to_string(), inputs: used, value })
}
