use proptest::prelude::*;

use seqmem::patterns::*;
use seqmem::Error;

fn bipolar_rows(n: usize, p: usize) -> impl Strategy<Value = Vec<Vec<i8>>> {
    prop::collection::vec(prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }), n), p)
}

fn naive_overlap(a: &[i8], b: &[i8], exclude: Option<usize>) -> f64 {
    let sum: i64 = a.iter().zip(b).enumerate().filter(|(j, _)| Some(*j) != exclude).map(|(_, (&x, &y))| (x * y) as i64).sum();
    let den = if exclude.is_some() { a.len() - 1 } else { a.len() };
    sum as f64 / den as f64
}

proptest! {
    #[test]
    fn packing_round_trips((n, rows) in (1usize..200).prop_flat_map(|n| (Just(n), bipolar_rows(n, 3)))) {
        let ps = PatternSet::from_rows(&rows).unwrap();
        prop_assert_eq!(ps.n_neurons(), n);
        for (mu, row) in rows.iter().enumerate() {
            prop_assert_eq!(&ps.pattern(mu).to_bipolar(), row);
            prop_assert_eq!(ps.unpacked_row(mu), &row[..]);
            // padding bits stay clear
            let last = *ps.row_words(mu).last().unwrap();
            if n % 64 != 0 {
                prop_assert_eq!(last >> (n % 64), 0);
            }
        }
    }

    #[test]
    fn overlaps_match_definition((n, rows) in (2usize..150).prop_flat_map(|n| (Just(n), bipolar_rows(n, 4))), i in any::<prop::sample::Index>()) {
        let ps = PatternSet::from_rows(&rows[..3]).unwrap();
        let s = StateVector::from_bipolar(&rows[3]).unwrap();
        let i = i.index(n);
        for mu in 0..3 {
            prop_assert_eq!(overlap(&ps, mu, &s, None).unwrap(), naive_overlap(&rows[mu], &rows[3], None));
            prop_assert_eq!(overlap(&ps, mu, &s, Some(i)).unwrap(), naive_overlap(&rows[mu], &rows[3], Some(i)));
            let h = mismatch_count(&s, &ps, mu).unwrap();
            prop_assert_eq!(ps.overlap_numerators(&s)[mu] as i64, n as i64 - 2 * h as i64);
        }
        let o = overlap_matrix(&ps);
        for a in 0..3 {
            prop_assert_eq!(o.get(a, a), 1.0);
            for b in 0..3 {
                prop_assert_eq!(o.get(a, b), o.get(b, a));
                prop_assert_eq!(o.get(a, b), naive_overlap(&rows[a], &rows[b], None));
            }
        }
    }

    #[test]
    fn file_round_trip_is_bit_identical(n in 1usize..300, p in 1usize..20, seed in any::<u64>()) {
        let ps = if p >= 2 && n >= 2 {
            generate_patterns(PatternDistribution::rademacher(seed), n, p).unwrap()
        } else {
            PatternSet::from_rows(&vec![vec![1i8; n]; p]).unwrap()
        };
        let mut buf = Vec::new();
        write_patterns(&mut buf, &ps).unwrap();
        prop_assert_eq!(buf.len(), 16 + 8 * n.div_ceil(64) * p);
        let back = read_patterns(&buf[..]).unwrap();
        prop_assert_eq!(back.packed_data(), ps.packed_data());
        prop_assert_eq!(back, ps);
    }

    #[test]
    fn flip_changes_one_component(n in 1usize..130, j in any::<prop::sample::Index>()) {
        let mut s = StateVector::from_bipolar(&vec![1i8; n]).unwrap();
        let j = j.index(n);
        let t = s.clone();
        s.flip(j);
        prop_assert_eq!(s.mismatches(&t).unwrap(), 1);
        prop_assert_eq!(s.get(j), -1);
        prop_assert_eq!(s.negated().mismatches(&t).unwrap(), n - 1);
    }
}

#[test]
fn generation_is_deterministic_per_seed() {
    let a = generate_patterns(PatternDistribution::rademacher(42), 100, 30).unwrap();
    let b = generate_patterns(PatternDistribution::rademacher(42), 100, 30).unwrap();
    let c = generate_patterns(PatternDistribution::rademacher(43), 100, 30).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn biased_patterns_have_mean_epsilon() {
    for eps in [0.0, 0.2, 0.6] {
        let ps = generate_patterns(PatternDistribution::biased(eps, 1), 1000, 200).unwrap();
        let mean = ps.unpacked().iter().map(|&v| v as f64).sum::<f64>() / 200_000.0;
        // standard error sqrt((1 - eps^2) / 2e5) <= 0.0023
        assert!((mean - eps).abs() < 0.01, "eps={eps}: mean {mean}");
        // overlap between distinct patterns concentrates at eps^2
        let o = overlap_matrix(&ps);
        let off: f64 = (0..200).flat_map(|a| (0..200).filter(move |&b| b != a).map(move |b| (a, b))).map(|(a, b)| o.get(a, b)).sum::<f64>() / (200.0 * 199.0);
        assert!((off - eps * eps).abs() < 0.01, "eps={eps}: mean overlap {off}");
    }
}

#[test]
fn rademacher_bits_are_balanced() {
    let ps = generate_patterns(PatternDistribution::rademacher(9), 257, 400).unwrap();
    let plus = ps.unpacked().iter().filter(|&&v| v == 1).count() as f64;
    let total = (257 * 400) as f64;
    assert!((plus / total - 0.5).abs() < 4.0 * 0.5 / total.sqrt());
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(generate_patterns(PatternDistribution::biased(1.0, 0), 10, 10).is_err());
    assert!(generate_patterns(PatternDistribution::rademacher(0), 1, 10).is_err());
    assert!(StateVector::from_bipolar(&[1, 0, -1]).is_err());
    assert!(PatternSet::from_rows(&[vec![1i8, 1], vec![1]]).is_err());
    let ps = generate_patterns(PatternDistribution::rademacher(0), 10, 3).unwrap();
    let s = ps.pattern(0);
    assert!(matches!(overlap(&ps, 3, &s, None), Err(Error::IndexOutOfRange { .. })));
    assert!(matches!(overlap(&ps, 0, &s, Some(10)), Err(Error::IndexOutOfRange { .. })));
}

#[test]
fn corrupt_files_are_rejected() {
    let ps = generate_patterns(PatternDistribution::rademacher(0), 70, 3).unwrap();
    let mut buf = Vec::new();
    write_patterns(&mut buf, &ps).unwrap();
    assert!(matches!(read_patterns(&buf[..10]), Err(Error::Truncated { .. })));
    assert!(matches!(read_patterns(&buf[..buf.len() - 1]), Err(Error::Truncated { .. })));
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(read_patterns(&bad[..]), Err(Error::Format(_))));
    let mut padded = buf.clone();
    // last byte of the first row's second word holds padding bits for N = 70
    padded[16 + 15] |= 0x80;
    assert!(matches!(read_patterns(&padded[..]), Err(Error::Format(_))));
}

#[test]
fn save_and_load_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ps.bin");
    let ps = generate_patterns(PatternDistribution::biased(0.3, 5), 784, 20).unwrap();
    save_patterns(&path, &ps).unwrap();
    assert_eq!(load_patterns(&path).unwrap(), ps);
}
