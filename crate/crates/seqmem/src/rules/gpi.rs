//! Generalized pseudoinverse rule.

use super::field::{self, Targets};
use super::{check_sizes, InteractionFunction};
use crate::error::{Error, Result};
use crate::numerics::{pseudoinverse_psd_ranked, Matrix};
use crate::patterns::{overlap_matrix, PatternSet, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GpiForm {
    /// `x = O^+ m` with the `P x P` overlap matrix.
    Overlap,
    /// `x = X (X^T X)^+ S` with the `N x N` Gram matrix; cheaper for `P > N`.
    Dual,
}

/// Precomputed decorrelation for one pattern set.
#[derive(Clone, Debug)]
pub struct GpiOperator {
    form: GpiForm,
    n_neurons: usize,
    n_patterns: usize,
    rank: usize,
    pinv: Matrix,
}

impl GpiOperator {
    /// Picks the smaller of the two equivalent forms.
    pub fn new(ps: &PatternSet, tol_rel: f64) -> Result<Self> {
        let form = if ps.n_patterns() <= ps.n_neurons() { GpiForm::Overlap } else { GpiForm::Dual };
        GpiOperator::with_form(ps, tol_rel, form)
    }

    pub fn with_form(ps: &PatternSet, tol_rel: f64, form: GpiForm) -> Result<Self> {
        let (pinv, rank) = match form {
            GpiForm::Overlap => pseudoinverse_psd_ranked(&overlap_matrix(ps), tol_rel)?,
            GpiForm::Dual => pseudoinverse_psd_ranked(&gram(ps), tol_rel)?,
        };
        Ok(GpiOperator { form, n_neurons: ps.n_neurons(), n_patterns: ps.n_patterns(), rank, pinv })
    }

    pub fn form(&self) -> GpiForm {
        self.form
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// True when the patterns are linearly independent.
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.n_patterns
    }

    /// The matrix `O^+` (overlap form) or `(X^T X)^+` (dual form).
    pub fn pinv(&self) -> &Matrix {
        &self.pinv
    }

    /// Decorrelated overlaps `x_mu = sum_nu (O^+)^{mu nu} m^nu`.
    pub fn arguments(&self, ps: &PatternSet, s: &StateVector) -> Result<Vec<f64>> {
        check_sizes(s, ps)?;
        if ps.n_patterns() != self.n_patterns || ps.n_neurons() != self.n_neurons {
            return Err(Error::DimensionMismatch { expected: self.n_patterns, got: ps.n_patterns() });
        }
        match self.form {
            GpiForm::Overlap => {
                let n = ps.n_neurons() as f64;
                let m: Vec<f64> = ps.overlap_numerators(s).iter().map(|&k| k as f64 / n).collect();
                self.pinv.matvec(&m)
            }
            GpiForm::Dual => {
                let sv: Vec<f64> = s.to_bipolar().iter().map(|&v| v as f64).collect();
                let u = self.pinv.matvec(&sv)?;
                Ok((0..ps.n_patterns())
                    .map(|mu| ps.unpacked_row(mu).iter().zip(&u).map(|(&x, &w)| x as f64 * w).sum())
                    .collect())
            }
        }
    }
}

fn gram(ps: &PatternSet) -> Matrix {
    let n = ps.n_neurons();
    let x = ps.unpacked();
    let mut g = vec![0i64; n * n];
    for row in x.chunks_exact(n) {
        for j in 0..n {
            let a = row[j] as i64;
            let dst = &mut g[j * n..(j + 1) * n];
            for (d, &b) in dst.iter_mut().zip(row) {
                *d += a * b as i64;
            }
        }
    }
    Matrix::from_fn(n, n, |i, j| g[i * n + j] as f64)
}

/// `sgn(sum_mu xi^{mu+1}_i f(x_mu))` with `x = O^+ m` and full overlaps.
pub fn gpi_update(s: &StateVector, ps: &PatternSet, f: InteractionFunction, op: &GpiOperator) -> Result<StateVector> {
    f.validate()?;
    let x = op.arguments(ps, s)?;
    let n = ps.n_neurons();
    let vals: Vec<f64> = x.iter().map(|&v| f.eval(v, n)).collect();
    if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalInstability(format!("f(x) not finite for pattern {bad} (x = {})", x[bad])));
    }
    let field = field::full_real_sums(ps, &vals, Targets::Successor);
    if field.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalInstability("local field not finite".into()));
    }
    Ok(field::signs_of(&field))
}
