use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use seqmem::datasets::{build_digit_sequence, load_idx_images, load_idx_labels};
use seqmem::harness::{
    bias_sweep, dwell_analysis, estimate_capacity, sample_crosstalk_values, sequence_recall, CapacityProtocolConfig,
    DwellConfig, Histogram,
};
use seqmem::patterns::{generate_patterns, PatternDistribution, PatternLaw};
use seqmem::rules::{run_sequence, RuleConfig};
use seqmem::theory::{evaluate, CapacityKind, TheoryInputs};
use seqmem::{Error, VERSION};

use crate::args::*;

pub enum Failure {
    Usage(String),
    Experiment(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            other => Failure::Experiment(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Experiment(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Capacity(a) => capacity(cli, a),
        Command::Crosstalk(a) => crosstalk(cli, a),
        Command::Trace(a) => trace(cli, a),
        Command::BiasSweep(a) => sweep(cli, a),
        Command::Mnist(a) => mnist(cli, a),
        Command::Theory(a) => theory(a),
    }
}

fn file_safe(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() || c == '.' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

fn envelope<C: Serialize, R: Serialize>(command: &str, seed: u64, config: &C, result: &R) -> Result<Value, Failure> {
    let config = serde_json::to_value(config).map_err(|e| Failure::Experiment(e.to_string()))?;
    let result = serde_json::to_value(result).map_err(|e| Failure::Experiment(e.to_string()))?;
    Ok(json!({ "version": VERSION, "command": command, "seed": seed, "config": config, "result": result }))
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(&cli.out_dir)?;
    Ok(cli.out_dir.join(name))
}

fn write_json(path: &Path, v: &Value) -> Outcome {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| Failure::Experiment(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

/// CSV preceded by `#` comment lines carrying version, seed and config.
fn write_csv(path: &Path, meta: &Value, body: impl FnOnce(&mut dyn Write) -> seqmem::Result<()>) -> Outcome {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# version: {}", meta["version"].as_str().unwrap_or(""))?;
    writeln!(w, "# seed: {}", meta["seed"])?;
    writeln!(w, "# config: {}", meta["config"])?;
    body(&mut w)?;
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn law(epsilon: f64) -> PatternLaw {
    if epsilon == 0.0 {
        PatternLaw::Rademacher
    } else {
        PatternLaw::Biased { epsilon }
    }
}

fn protocol(p: &ProtocolArgs) -> Result<CapacityProtocolConfig, Failure> {
    let proto = CapacityProtocolConfig {
        n_sequences: p.n_sequences,
        n_repeats: p.repeats,
        decay: p.decay,
        p0_multiplier: p.p0_multiplier,
        max_rounds: p.max_rounds,
        ..Default::default()
    };
    proto.validate()?;
    Ok(proto)
}

fn capacity(cli: &Cli, a: &CapacityArgs) -> Outcome {
    let rule = a.rule.to_rule().map_err(Failure::Usage)?;
    let proto = protocol(&a.protocol)?;
    for kind in a.kind.kinds() {
        let est = estimate_capacity(&rule, a.n, kind, law(a.epsilon), &proto, cli.seed)?;
        let stem = format!("capacity_{}_{}_n{}", file_safe(&rule.label()), kind, a.n);
        let doc = envelope("capacity", cli.seed, a, &est)?;
        write_json(&out_path(cli, &format!("{stem}.json"))?, &doc)?;
        write_csv(&out_path(cli, &format!("{stem}.csv"))?, &doc, |w| est.write_csv(w))?;
        println!("{} {kind} capacity at N={}: mean {} (std {}), theory {:?}", rule.label(), a.n, est.mean, est.std, est.theory);
    }
    Ok(())
}

fn crosstalk(cli: &Cli, a: &CrosstalkArgs) -> Outcome {
    let rule = a.rule.to_rule().map_err(Failure::Usage)?;
    let stats = seqmem::harness::sample_crosstalk(&rule, a.n, a.p, a.samples, cli.seed)?;
    let hist = if a.bins == seqmem::harness::DEFAULT_BINS {
        stats.histogram.clone()
    } else {
        Histogram::new(&sample_crosstalk_values(&rule, a.n, a.p, a.samples, cli.seed)?.values, a.bins)
    };
    let stem = format!("crosstalk_{}_n{}_p{}", file_safe(&rule.label()), a.n, a.p);
    let doc = envelope("crosstalk", cli.seed, a, &stats)?;
    write_json(&out_path(cli, &format!("{stem}.json"))?, &doc)?;
    write_csv(&out_path(cli, &format!("{stem}_hist.csv"))?, &doc, |w| hist.write_csv(w))?;
    println!(
        "variance per term {} (se {}), excess kurtosis {:?}",
        stats.variance_per_term, stats.variance_per_term_se, stats.moments.excess_kurtosis
    );
    Ok(())
}

fn trace(cli: &Cli, a: &TraceArgs) -> Outcome {
    let rule = a.rule.to_rule().map_err(Failure::Usage)?;
    let ps = generate_patterns(PatternDistribution { law: law(a.epsilon), seed: cli.seed }, a.n, a.p)?;
    let steps = a.steps.unwrap_or(a.p * a.rule.tau + a.rule.tau);
    let traj = run_sequence(&ps.pattern(0), &ps, &rule, steps)?;
    let report = dwell_analysis(&traj, &DwellConfig { threshold: a.threshold, max_gap: a.max_gap });
    let stem = format!("trace_{}_n{}_p{}", file_safe(&rule.label()), a.n, a.p);
    let doc = envelope("trace", cli.seed, a, &report)?;
    write_json(&out_path(cli, &format!("{stem}.json"))?, &doc)?;
    write_csv(&out_path(cli, &format!("{stem}_overlaps.csv"))?, &doc, |w| traj.write_csv(w))?;
    println!(
        "{} segments, lost {}, order correct {}, uniform dwell {:?}",
        report.segments.len(),
        report.lost,
        report.order_correct,
        report.uniform_dwell
    );
    Ok(())
}

fn sweep(cli: &Cli, a: &BiasSweepArgs) -> Outcome {
    let rules: Vec<RuleConfig> = a.rules.iter().map(|s| parse_rule_spec(s)).collect::<Result<_, _>>().map_err(Failure::Usage)?;
    let proto = protocol(&a.protocol)?;
    for kind in a.kind.kinds() {
        let table = bias_sweep(&rules, a.n, &a.epsilons, kind, &proto, cli.seed)?;
        let stem = format!("bias_sweep_{kind}_n{}", a.n);
        let doc = envelope("bias-sweep", cli.seed, a, &table)?;
        write_json(&out_path(cli, &format!("{stem}.json"))?, &doc)?;
        write_csv(&out_path(cli, &format!("{stem}.csv"))?, &doc, |w| table.write_csv(w))?;
        for row in &table.rows {
            println!("{} epsilon={} {kind} capacity {}", row.rule_label, row.epsilon, row.estimate.mean);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MnistResult<'a> {
    n_neurons: usize,
    n_patterns: usize,
    transitions: usize,
    n_correct: usize,
    accuracy: f64,
    first_error: Option<usize>,
    repeated_state: Option<seqmem::harness::RepeatedState>,
    stuck: bool,
    labels: &'a [u8],
    source_indices: &'a [usize],
}

fn mnist(cli: &Cli, a: &MnistArgs) -> Outcome {
    let rule = a.rule.to_rule().map_err(Failure::Usage)?;
    let images = load_idx_images(&a.images)?;
    let labels = load_idx_labels(&a.labels)?;
    let seq = build_digit_sequence(&images, &labels, a.blocks, a.threshold, cli.seed)?;
    let ps = seq.to_pattern_set()?;
    let transitions = ps.n_patterns() - 1;
    let report = sequence_recall(&ps, &rule, transitions, &a.dump_times)?;
    let result = MnistResult {
        n_neurons: ps.n_neurons(),
        n_patterns: ps.n_patterns(),
        transitions,
        n_correct: report.n_correct,
        accuracy: report.accuracy,
        first_error: report.first_error,
        repeated_state: report.repeated_state,
        stuck: report.repeated_state.is_some(),
        labels: &seq.labels,
        source_indices: &seq.source_indices,
    };
    let stem = format!("mnist_{}", file_safe(&rule.label()));
    let doc = envelope("mnist", cli.seed, a, &result)?;
    write_json(&out_path(cli, &format!("{stem}.json"))?, &doc)?;
    write_csv(&out_path(cli, &format!("{stem}_steps.csv"))?, &doc, |w| {
        writeln!(w, "t,label,correct")?;
        for (k, c) in report.correct.iter().enumerate() {
            writeln!(w, "{},{},{}", k + 1, seq.labels[(k + 1) % seq.labels.len()], u8::from(*c))?;
        }
        Ok(())
    })?;
    for (t, state) in &report.dumps {
        let path = out_path(cli, &format!("{stem}_T{t}.pbm"))?;
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "P1\n# T = {t}\n{} {}", images.cols, images.rows)?;
        for row in state.chunks(images.cols) {
            let line: Vec<&str> = row.iter().map(|&v| if v > 0 { "1" } else { "0" }).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()?;
    }
    println!(
        "transition accuracy {:.4} ({} / {}), repeated state {:?}",
        report.accuracy, report.n_correct, transitions, report.repeated_state
    );
    Ok(())
}

fn theory(a: &TheoryArgs) -> Outcome {
    let kind = match &a.kind {
        Some(k) => Some(k.parse::<CapacityKind>().map_err(|e| Failure::Usage(e.to_string()))?),
        None => None,
    };
    let inputs = TheoryInputs { n: a.n, p: a.p, d: a.d, d_s: a.d_s, d_a: a.d_a, lambda: a.lambda, c: a.c, f: a.f, kind };
    let pred = evaluate(&a.formula, &inputs)?;
    let text = serde_json::to_string(&pred).map_err(|e| Failure::Experiment(e.to_string()))?;
    println!("{text}");
    Ok(())
}
