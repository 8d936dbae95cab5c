use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

use seqmem::harness::*;
use seqmem::patterns::{generate_patterns, PatternDistribution, PatternLaw, StateVector};
use seqmem::rules::{run_sequence, InteractionFunction, RuleConfig, Trajectory};
use seqmem::theory::CapacityKind;
use seqmem::Error;

fn quick_protocol(repeats: usize) -> CapacityProtocolConfig {
    CapacityProtocolConfig { n_sequences: 20, n_repeats: repeats, ..Default::default() }
}

#[test]
fn capacity_is_reproducible_across_thread_counts() {
    let rule = RuleConfig::densenet(InteractionFunction::Polynomial(2));
    let proto = quick_protocol(3);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_capacity(&rule, 40, CapacityKind::Sequence, PatternLaw::Rademacher, &proto, 17).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a, b);
    let c = estimate_capacity(&rule, 40, CapacityKind::Sequence, PatternLaw::Rademacher, &proto, 18).unwrap();
    assert_eq!(c.capacities.len(), 3);
    assert_eq!(a.repeats.len(), 3);
    assert!(a.capacities.iter().all(|&p| p >= 2));
    let mean = a.capacities.iter().sum::<usize>() as f64 / 3.0;
    assert!((a.mean - mean).abs() < 1e-12);
}

#[test]
fn transition_capacity_exceeds_sequence_capacity() {
    let rule = RuleConfig::densenet(InteractionFunction::Polynomial(2));
    let proto = quick_protocol(4);
    let t = estimate_transition_capacity(&rule, 60, &proto, 3).unwrap();
    let s = estimate_sequence_capacity(&rule, 60, &proto, 3).unwrap();
    assert!(t.mean > s.mean);
    assert_eq!(t.kind, CapacityKind::Transition);
}

#[test]
fn tiny_networks_hit_the_floor_without_error() {
    let est = estimate_capacity(&RuleConfig::SeqNet, 4, CapacityKind::Sequence, PatternLaw::Rademacher, &quick_protocol(5), 0).unwrap();
    assert!(est.capacities.iter().all(|&p| p >= 2));
    assert!(est.repeats.iter().any(|r| r.floored));
}

#[test]
fn capacity_rejects_multi_step_mixednet_and_bad_protocols() {
    let f = InteractionFunction::Polynomial(2);
    let rule = RuleConfig::mixednet(f, f, 2.5, 3);
    assert!(estimate_capacity(&rule, 50, CapacityKind::Transition, PatternLaw::Rademacher, &quick_protocol(1), 0).is_err());
    let bad = CapacityProtocolConfig { decay: 1.0, ..Default::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn capacity_csv_has_one_row_per_repeat() {
    let est = estimate_capacity(&RuleConfig::SeqNet, 100, CapacityKind::Transition, PatternLaw::Biased { epsilon: 0.2 }, &quick_protocol(3), 4).unwrap();
    let mut buf = Vec::new();
    est.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rule,kind,n,epsilon,seed,repeat,capacity,rounds,p0,doublings,floored");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("seqnet,transition,100,0.2,4,0,"));
}

#[test]
fn seqnet_crosstalk_matches_exact_moments() {
    // one term is xi m with m the mean of N - 1 signs: E = 0, Var = 1/(N-1)
    let n = 51;
    let p = 21;
    let stats = sample_crosstalk(&RuleConfig::SeqNet, n, p, 200_000, 3).unwrap();
    let var_term = 1.0 / (n - 1) as f64;
    assert!((stats.variance_per_term - var_term).abs() < 4.0 * stats.variance_per_term_se);
    let se_mean = (stats.moments.variance / 200_000.0).sqrt();
    assert!(stats.moments.mean.abs() < 4.0 * se_mean);
    assert_eq!(stats.histogram.counts.iter().sum::<u64>(), 200_000);
    assert!(stats.branches.is_none());
}

#[test]
fn crosstalk_sampling_is_deterministic_and_guarded() {
    let rule = RuleConfig::densenet(InteractionFunction::Exponential);
    let a = sample_crosstalk_values(&rule, 11, 30, 10_000, 5).unwrap();
    let b = sample_crosstalk_values(&rule, 11, 30, 10_000, 5).unwrap();
    assert_eq!(a.values, b.values);
    // a shorter run is a prefix of a longer one
    let c = sample_crosstalk_values(&rule, 11, 30, 5_000, 5).unwrap();
    assert_eq!(&a.values[..5_000], &c.values[..]);
    assert!(matches!(sample_crosstalk(&rule, 11, 30, 9_999, 5), Err(Error::TooFewSamples { .. })));
    assert!(sample_crosstalk_values(&RuleConfig::gpi(InteractionFunction::Identity), 11, 30, 10, 5).is_err());
}

#[test]
fn mixednet_crosstalk_splits_into_two_branches() {
    let f = InteractionFunction::Polynomial(3);
    let stats = sample_crosstalk(&RuleConfig::mixednet(f, f, 2.5, 1), 100, 300, 20_000, 1).unwrap();
    let br = stats.branches.unwrap();
    assert_eq!(br.len(), 2);
    assert!((br[0].moments.mean + 1.0).abs() < 0.05);
    assert!((br[1].moments.mean - 1.0).abs() < 0.05);
    assert!((br[0].weight + br[1].weight - 1.0).abs() < 1e-12);
}

#[test]
fn bimodality_separates_mixture_from_gaussian() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut gauss = || {
        // Box-Muller
        let u: f64 = rng.random::<f64>().max(1e-300);
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    };
    let single: Vec<f64> = (0..50_000).map(|_| gauss()).collect();
    let mixture: Vec<f64> = (0..50_000).map(|k| if k % 2 == 0 { -1.0 } else { 1.0 } + 0.3 * gauss()).collect();
    let a = bimodality(&single, 100).unwrap();
    let b = bimodality(&mixture, 100).unwrap();
    assert!(!a.bimodal && a.coefficient < 5.0 / 9.0);
    assert!(b.bimodal && b.coefficient > 5.0 / 9.0);
    let (lo, hi) = b.modes.unwrap();
    assert!((lo + 1.0).abs() < 0.1 && (hi - 1.0).abs() < 0.1);
}

fn synthetic(best: &[Option<usize>], p: usize) -> Trajectory {
    let overlaps = best
        .iter()
        .map(|b| (0..p).map(|mu| if Some(mu) == *b { 1.0 } else { 0.1 }).collect())
        .collect();
    let states = vec![StateVector::from_bipolar(&[1]).unwrap(); best.len()];
    Trajectory { states, overlaps }
}

#[test]
fn dwell_segments_synthetic_runs() {
    let cfg = DwellConfig::default();
    let seq: Vec<Option<usize>> = [0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 0].iter().map(|&m| Some(m)).collect();
    let r = dwell_analysis(&synthetic(&seq, 4), &cfg);
    assert!(r.order_correct && !r.lost);
    assert_eq!(r.uniform_dwell, Some(3));
    assert!(r.timing_correct(3));
    assert_eq!(r.patterns_with_dwell(3), 3);

    // a long unaligned stretch loses the sequence
    let lost: Vec<Option<usize>> = vec![Some(0), None, None, None, Some(1)];
    let r = dwell_analysis(&synthetic(&lost, 2), &cfg);
    assert!(r.lost);
    assert_eq!(r.longest_gap, 3);

    // short gaps are tolerated, a skipped pattern breaks the order
    let skip: Vec<Option<usize>> = vec![Some(0), None, Some(1), Some(1), Some(3), Some(3)];
    let r = dwell_analysis(&synthetic(&skip, 5), &cfg);
    assert!(!r.lost && !r.order_correct);

    // never leaving the first pattern is not a recovered order
    let stuck = vec![Some(0); 10];
    assert!(!dwell_analysis(&synthetic(&stuck, 3), &cfg).order_correct);
}

#[test]
fn dwell_of_a_real_densenet_run_is_one_step() {
    let ps = generate_patterns(PatternDistribution::rademacher(2), 200, 12).unwrap();
    let tr = run_sequence(&ps.pattern(0), &ps, &RuleConfig::densenet(InteractionFunction::Polynomial(3)), 30).unwrap();
    let r = dwell_analysis(&tr, &DwellConfig::default());
    assert!(r.order_correct && !r.lost);
    assert_eq!(r.uniform_dwell, Some(1));
}

#[test]
fn recall_cycle_shortcut_matches_full_simulation() {
    // overloaded SeqNet falls into a short cycle quickly
    let ps = generate_patterns(PatternDistribution::rademacher(3), 30, 60).unwrap();
    let rule = RuleConfig::SeqNet;
    let steps = 200;
    let report = sequence_recall(&ps, &rule, steps, &[1, 5, 150]).unwrap();
    let tr = run_sequence(&ps.pattern(0), &ps, &rule, steps).unwrap();
    let want: Vec<bool> = (1..=steps).map(|t| tr.states[t] == ps.pattern(t % 60)).collect();
    assert_eq!(report.correct, want);
    assert!(report.repeated_state.is_some());
    assert_eq!(report.dumps[0].1, ps.pattern(0).to_bipolar());
    assert_eq!(report.dumps[2].1, tr.states[149].to_bipolar());
    assert!(report.accuracy < 1.0);
}

#[test]
fn recall_of_an_easy_sequence_is_perfect() {
    let ps = generate_patterns(PatternDistribution::rademacher(4), 300, 40).unwrap();
    let report = sequence_recall(&ps, &RuleConfig::densenet(InteractionFunction::Exponential), 39, &[]).unwrap();
    assert_eq!(report.accuracy, 1.0);
    assert_eq!(report.first_error, None);
    assert!(report.repeated_state.is_none());
}

#[test]
fn bias_sweep_table_layout() {
    let rules = [RuleConfig::SeqNet, RuleConfig::densenet(InteractionFunction::Polynomial(2))];
    let table = bias_sweep(&rules, 50, &[0.0, 0.4], CapacityKind::Transition, &quick_protocol(2), 9).unwrap();
    assert_eq!(table.rows.len(), 4);
    assert!(table.get("seqnet", 0.4).is_some());
    assert!(table.get("seqnet", 0.3).is_none());
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 4 * 2);
}
