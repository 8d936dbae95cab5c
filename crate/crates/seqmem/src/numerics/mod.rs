//! Dense linear algebra and statistics kernels.

mod combinatorics;
mod eigen;
mod gaussian;
mod matrix;
mod moments;

pub use combinatorics::{double_factorial, ln_binomial_row, ln_double_factorial};
pub use eigen::{pseudoinverse_psd, pseudoinverse_psd_ranked, symmetric_eigen, SymmetricEigen, DEFAULT_PINV_TOL};
pub use gaussian::{gaussian_tail, gaussian_tail_asymptotic, gaussian_tail_inv, ln_gaussian_tail};
pub use matrix::Matrix;
pub use moments::{moments, MomentAccumulator, Moments};
