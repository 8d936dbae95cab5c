use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqmem::numerics::*;
use seqmem::Error;

/// Upper tail by the Lentz continued fraction for large x and a Taylor
/// series of erf for small x; independent of the library's erfc.
fn tail_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - tail_oracle(-x);
    }
    if x < 3.0 {
        // erf(z) = 2/sqrt(pi) sum (-1)^k z^(2k+1) / (k! (2k+1))
        let z = x / 2f64.sqrt();
        let mut term = z;
        let mut sum = z;
        for k in 1..200 {
            term *= -z * z / k as f64;
            let add = term / (2 * k + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return 0.5 * (1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum);
    }
    // Q(x) = phi(x) / (x + 1/(x + 2/(x + 3/(x + ...))))
    let mut f = x;
    for k in (1..200).rev() {
        f = x + k as f64 / f;
    }
    (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() / f
}

#[test]
fn gaussian_tail_matches_oracle() {
    for &x in &[-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 2.9, 3.1, 5.0, 8.0, 12.0] {
        let got = gaussian_tail(x);
        let want = tail_oracle(x);
        assert!(((got - want) / want).abs() < 1e-9, "x={x}: {got} vs {want}");
    }
    assert_eq!(gaussian_tail(0.0), 0.5);
}

#[test]
fn log_tail_continues_past_underflow() {
    // ln Q(x) ~ -x^2/2 - ln(x sqrt(2 pi)) - 1/x^2
    for &x in &[40.0, 100.0, 1e3] {
        let approx = -x * x / 2.0 - (x * (2.0 * std::f64::consts::PI).sqrt()).ln() - 1.0 / (x * x);
        assert!((ln_gaussian_tail(x) - approx).abs() < 1e-5 * approx.abs());
    }
    assert!((ln_gaussian_tail(3.0) - gaussian_tail(3.0).ln()).abs() < 1e-12);
    assert!((ln_gaussian_tail(36.5) - ln_gaussian_tail(37.5)).abs() < 37.5);
}

#[test]
fn tail_inverse_round_trips() {
    for &p in &[0.5, 0.1, 1e-3, 1e-9, 1e-30, 1e-200] {
        let x = gaussian_tail_inv(p).unwrap();
        assert!((ln_gaussian_tail(x) - p.ln()).abs() < 1e-9 * p.ln().abs().max(1.0), "p={p}");
    }
    assert!(gaussian_tail_inv(0.7).is_err());
    assert!(gaussian_tail_inv(0.0).is_err());
}

#[test]
fn double_factorials() {
    assert_eq!(double_factorial(-1).unwrap(), 1);
    assert_eq!(double_factorial(5).unwrap(), 15);
    assert_eq!(double_factorial(7).unwrap(), 105);
    assert_eq!(double_factorial(15).unwrap(), 2_027_025);
    // only odd arguments are defined
    assert!(double_factorial(8).is_err());
    assert!(double_factorial(-3).is_err());
    assert!((ln_double_factorial(9).unwrap() - 945f64.ln()).abs() < 1e-12);
}

#[test]
fn binomial_row_sums_to_power_of_two() {
    let row = ln_binomial_row(20);
    let total: f64 = row.iter().map(|l| l.exp()).sum();
    assert!((total - 2f64.powi(20)).abs() < 1e-6);
    assert!((row[10].exp() - 184_756.0).abs() < 1e-6);
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> Matrix {
    let x = Matrix::from_fn(n, rank, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    x.matmul(&x.transpose()).unwrap()
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2, 5, 17, 40] {
        let a = Matrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let a = Matrix::from_fn(n, n, |i, j| a.get(i, j) + a.get(j, i));
        let ours = symmetric_eigen(&a).unwrap();
        let mut got = ours.values.clone();
        got.sort_by(f64::total_cmp);
        let na = DMatrix::from_row_slice(n, n, a.as_slice());
        let mut want: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10 * a.frobenius_norm().max(1.0), "n={n}: {g} vs {w}");
        }
        // A V = V diag(values)
        let av = a.matmul(&ours.vectors).unwrap();
        let vd = ours.vectors.matmul(&Matrix::from_diag(&ours.values)).unwrap();
        assert!(av.sub(&vd).unwrap().frobenius_norm() < 1e-10 * a.frobenius_norm().max(1.0));
    }
}

#[test]
fn pseudoinverse_satisfies_penrose_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (n, rank) in [(6, 6), (12, 4), (30, 29), (25, 40)] {
        let o = random_psd(&mut rng, n, rank);
        let (pinv, r) = pseudoinverse_psd_ranked(&o, DEFAULT_PINV_TOL).unwrap();
        let na_rank = DMatrix::from_row_slice(n, n, o.as_slice()).rank(1e-8 * o.frobenius_norm());
        assert_eq!(r, na_rank);
        let norm = o.frobenius_norm();
        let opo = o.matmul(&pinv).unwrap().matmul(&o).unwrap();
        assert!(opo.sub(&o).unwrap().frobenius_norm() < 1e-8 * norm);
        let pop = pinv.matmul(&o).unwrap().matmul(&pinv).unwrap();
        assert!(pop.sub(&pinv).unwrap().frobenius_norm() < 1e-8 * pinv.frobenius_norm());
        assert_eq!(pinv.asymmetry(), 0.0);
        // agrees with nalgebra's SVD pseudoinverse
        let na = DMatrix::from_row_slice(n, n, o.as_slice()).pseudo_inverse(1e-8 * norm).unwrap();
        let diff = DMatrix::from_row_slice(n, n, pinv.as_slice()) - na;
        assert!(diff.norm() < 1e-8 * pinv.frobenius_norm().max(1.0));
    }
}

#[test]
fn pseudoinverse_rejects_bad_input() {
    let asym = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
    assert!(matches!(pseudoinverse_psd(&asym, DEFAULT_PINV_TOL), Err(Error::NotSymmetric(_))));
    let indefinite = Matrix::from_diag(&[1.0, -1.0]);
    assert!(matches!(pseudoinverse_psd(&indefinite, DEFAULT_PINV_TOL), Err(Error::NotPositiveSemidefinite(_))));
}

fn two_pass(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>();
    (mean, m2 / (n - 1.0), n * m4 / (m2 * m2) - 3.0)
}

#[test]
fn rademacher_kurtosis_is_minus_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let acc: MomentAccumulator = (0..1_000_000).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    assert!((acc.excess_kurtosis().unwrap() + 2.0).abs() < 0.01);
}

#[test]
fn too_few_samples_for_kurtosis() {
    let acc: MomentAccumulator = [1.0, 2.0, 3.0].into_iter().collect();
    assert!(matches!(acc.excess_kurtosis(), Err(Error::TooFewSamples { .. })));
    let flat: MomentAccumulator = [2.0; 10].into_iter().collect();
    assert!(matches!(flat.excess_kurtosis(), Err(Error::ZeroVariance)));
}

proptest! {
    #[test]
    fn streaming_moments_match_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 5..200), split in 0usize..200) {
        let acc: MomentAccumulator = xs.iter().copied().collect();
        let (mean, var, kurt) = two_pass(&xs);
        prop_assume!(var > 1e-6);
        prop_assert!((acc.mean() - mean).abs() < 1e-9 * mean.abs().max(1.0));
        prop_assert!((acc.variance() - var).abs() < 1e-8 * var);
        prop_assert!((acc.excess_kurtosis().unwrap() - kurt).abs() < 1e-7 * kurt.abs().max(1.0));
        // merging two halves gives the same state
        let k = split.min(xs.len());
        let mut a: MomentAccumulator = xs[..k].iter().copied().collect();
        let b: MomentAccumulator = xs[k..].iter().copied().collect();
        a.merge(&b);
        prop_assert!((a.variance() - var).abs() < 1e-8 * var);
        prop_assert!((a.excess_kurtosis().unwrap() - kurt).abs() < 1e-7 * kurt.abs().max(1.0));
    }

    #[test]
    fn tail_is_decreasing_and_symmetric(x in -10f64..10.0, dx in 1e-3f64..1.0) {
        prop_assert!(gaussian_tail(x + dx) <= gaussian_tail(x));
        if x > -5.0 {
            prop_assert!(gaussian_tail(x + dx) < gaussian_tail(x));
        }
        prop_assert!((gaussian_tail(x) + gaussian_tail(-x) - 1.0).abs() < 1e-14);
    }
}
