use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nonsmooth_lb::harness::{
    self, cap_probability_experiment, emit_results, run_lemma_suite, write_results,
    ExperimentConfig, LemmaSuiteSpec, Mode, OutputFormat, PropertyOutcome,
};
use nonsmooth_lb::harness::suites::{lipschitz_check, subgradient_suite};
use nonsmooth_lb::instance::{save_instance, StorageFormat};
use nonsmooth_lb::seeds::{self, Role};
use nonsmooth_lb::{Error, HardInstance};

#[derive(Parser)]
#[command(name = "nslb", version, about = "Hard nonsmooth convex instances and lower-bound experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an instance and write it to disk.
    Gen(GenArgs),
    /// Run an experiment and emit one summary row per cell.
    Run(RunArgs),
    /// Run one checker suite; exits 1 on any counterexample.
    Verify(VerifyArgs),
    /// Run every (k, d) cell of a grid.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: usize,
    #[arg(long = "L", default_value_t = 1.0)]
    lipschitz: f64,
    #[arg(long = "B", default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Storage::Auto)]
    format: Storage,
}

#[derive(Clone, Copy, ValueEnum)]
enum Storage {
    Text,
    Binary,
    Auto,
}

/// Flags shared by `run` and `sweep`; each overrides the config file.
#[derive(Args, Default)]
struct CommonArgs {
    /// Key-value config file (`key = value` per line).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long = "L")]
    lipschitz: Option<f64>,
    #[arg(long = "B")]
    radius: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long = "k-list")]
    k_list: Option<String>,
    #[arg(long = "d-list")]
    d_list: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lipschitz,
    Subgradient,
    Lemma1,
    Lemma2,
    Cap,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Samples for property and cap suites, runs per k for lemma suites.
    #[arg(long)]
    trials: Option<usize>,
    /// Restrict to one k (default: 1,4,16 for lipschitz and subgradient,
    /// 1,2,4,8 for the lemma suites).
    #[arg(long)]
    k: Option<usize>,
    /// Dimension (default: 4096 for property suites, 64k for lemma
    /// suites, 2000 for cap).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sequential: bool,
}

enum Outcome {
    Pass,
    Counterexample,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Counterexample) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn gen(a: GenArgs) -> Result<Outcome, Error> {
    let inst = HardInstance::build(a.k, a.d, a.lipschitz, a.radius, a.seed)?;
    let format = match a.format {
        Storage::Text => StorageFormat::Text,
        Storage::Binary => StorageFormat::Binary,
        Storage::Auto => StorageFormat::Auto,
    };
    save_instance(&inst, &a.out, format)?;
    Ok(Outcome::Pass)
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        cfg.merge_kv_text(&text)?;
    }
    if let Some(v) = &common.algo {
        cfg.algo = v.parse()?;
    }
    if let Some(v) = common.lipschitz {
        cfg.lipschitz = v;
    }
    if let Some(v) = common.radius {
        cfg.radius = v;
    }
    if common.budget.is_some() {
        cfg.budget = common.budget;
    }
    if let Some(v) = common.trials {
        cfg.trials = v;
    }
    if let Some(v) = common.seed {
        cfg.base_seed = v;
    }
    if common.csv.is_some() {
        cfg.csv.clone_from(&common.csv);
    }
    if common.json.is_some() {
        cfg.json.clone_from(&common.json);
    }
    if common.sequential {
        cfg.execution = harness::Execution::Sequential;
    }
    Ok(cfg)
}

fn emit<T: serde::Serialize>(rows: &[T], cfg: &ExperimentConfig) -> Result<(), Error> {
    if let Some(path) = &cfg.csv {
        emit_results(rows, path, OutputFormat::Csv)?;
    }
    if let Some(path) = &cfg.json {
        emit_results(rows, path, OutputFormat::Json)?;
    }
    if cfg.csv.is_none() && cfg.json.is_none() {
        write_results(rows, io::stdout().lock(), OutputFormat::Csv)?;
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<Outcome, Error> {
    let mut cfg = load_config(&a.common)?;
    if let Some(v) = &a.mode {
        cfg.mode = v.parse()?;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.d {
        cfg.d = v;
    }
    if let Some(v) = a.tau {
        cfg.tau = v;
    }
    cfg.validate()?;
    match cfg.mode {
        Mode::LowerBound | Mode::UpperBound => {
            let rows = harness::queries_to_epsilon(&cfg)?;
            emit(&rows, &cfg)?;
            Ok(verdict(rows.iter().any(|r| r.has_counterexample())))
        }
        Mode::Sweep => {
            let rows = harness::sweep(&cfg)?;
            emit(&rows, &cfg)?;
            Ok(verdict(rows.iter().any(|r| r.has_counterexample())))
        }
        Mode::CapCheck => {
            let r = cap_probability_experiment(cfg.d, cfg.tau, cfg.trials, cfg.base_seed, cfg.execution)?;
            emit(&[r], &cfg)?;
            Ok(verdict(!r.within_bound))
        }
        Mode::LemmaSuite => {
            let mut spec = LemmaSuiteSpec::from_config(&cfg);
            if cfg.k_list.is_empty() && a.k.is_some() {
                spec.ks = vec![cfg.k];
            }
            if a.d.is_some() {
                spec.d = Some(cfg.d);
            }
            let report = run_lemma_suite(&spec, cfg.execution)?;
            emit(&[flatten_report(&report)], &cfg)?;
            Ok(verdict(!report.passed()))
        }
    }
}

fn sweep(a: SweepArgs) -> Result<Outcome, Error> {
    let mut cfg = load_config(&a.common)?;
    cfg.mode = Mode::Sweep;
    if let Some(v) = &a.k_list {
        cfg.apply("k_list", v)?;
    }
    if let Some(v) = &a.d_list {
        cfg.apply("d_list", v)?;
    }
    let rows = harness::sweep(&cfg)?;
    emit(&rows, &cfg)?;
    Ok(verdict(rows.iter().any(|r| r.has_counterexample())))
}

fn verdict(failed: bool) -> Outcome {
    if failed {
        Outcome::Counterexample
    } else {
        Outcome::Pass
    }
}

#[derive(serde::Serialize)]
struct FlatReport {
    runs: usize,
    lemma1_checked: usize,
    lemma1_counterexamples: usize,
    lemma2_rounds_checked: usize,
    lemma2_counterexamples: usize,
    diagnostic_flags: usize,
    chain_violations: usize,
    lipschitz_failures: usize,
    convexity_failures: usize,
    subgradient_failures: usize,
    fault_oracle_runs: usize,
    fault_oracle_detections: usize,
    fault_threshold_runs: usize,
    fault_threshold_lemma1: usize,
    passed: bool,
}

fn flatten_report(r: &harness::LemmaReport) -> FlatReport {
    FlatReport {
        runs: r.runs,
        lemma1_checked: r.lemma1_checked,
        lemma1_counterexamples: r.lemma1_counterexamples,
        lemma2_rounds_checked: r.lemma2_rounds_checked,
        lemma2_counterexamples: r.lemma2_counterexamples,
        diagnostic_flags: r.diagnostic_flags,
        chain_violations: r.chain_violations,
        lipschitz_failures: r.lipschitz.failures,
        convexity_failures: r.convexity.failures,
        subgradient_failures: r.subgradient.failures,
        fault_oracle_runs: r.fault_oracle_runs,
        fault_oracle_detections: r.fault_oracle_detections,
        fault_threshold_runs: r.fault_threshold_runs,
        fault_threshold_lemma1: r.fault_threshold_lemma1,
        passed: r.passed(),
    }
}

fn print_property(name: &str, k: usize, d: usize, o: PropertyOutcome) -> PropertyOutcome {
    println!(
        "{name} k={k} d={d} checked={} failures={} worst={:.6}",
        o.checked, o.failures, o.worst
    );
    o
}

fn verify(a: VerifyArgs) -> Result<Outcome, Error> {
    let exec = if a.sequential {
        harness::Execution::Sequential
    } else {
        harness::Execution::Parallel
    };
    let trials = a.trials.unwrap_or(10_000);
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    match a.suite {
        Suite::Lipschitz | Suite::Subgradient => {
            let d = a.d.unwrap_or(4096);
            let ks = a.k.map_or(vec![1, 4, 16], |k| vec![k]);
            let mut failed = false;
            for (i, &k) in ks.iter().enumerate() {
                let inst = HardInstance::build(k, d, 1.0, 1.0, seeds::derive_seed(a.seed, i as u64, Role::Instance))?;
                let mut rng = seeds::trial_stream(a.seed, i as u64, Role::Probe);
                let o = if a.suite == Suite::Lipschitz {
                    print_property("lipschitz", k, d, lipschitz_check(&inst, trials, &mut rng))
                } else {
                    let probes = 100.min(trials);
                    let queries = trials.div_ceil(probes);
                    print_property("subgradient", k, d, subgradient_suite(&inst, queries, probes, &mut rng))
                };
                failed |= !o.passed();
            }
            Ok(verdict(failed))
        }
        Suite::Lemma1 | Suite::Lemma2 => {
            let mut spec = LemmaSuiteSpec {
                trials,
                base_seed: a.seed,
                d: a.d,
                ..LemmaSuiteSpec::default()
            };
            if let Some(k) = a.k {
                spec.ks = vec![k];
            }
            if a.trials.is_none() {
                spec.trials = 1000;
            }
            let r = run_lemma_suite(&spec, exec)?;
            let mut out = io::stdout().lock();
            let _ = writeln!(
                out,
                "runs={} lemma1_checked={} lemma1_counterexamples={} lemma2_rounds_checked={} \
                 lemma2_counterexamples={} diagnostic_flags={} chain_violations={}",
                r.runs,
                r.lemma1_checked,
                r.lemma1_counterexamples,
                r.lemma2_rounds_checked,
                r.lemma2_counterexamples,
                r.diagnostic_flags,
                r.chain_violations
            );
            let failed = if a.suite == Suite::Lemma1 {
                let _ = writeln!(
                    out,
                    "doubled-threshold self-test: {} of {} runs reported a lemma1 counterexample",
                    r.fault_threshold_lemma1, r.fault_threshold_runs
                );
                r.lemma1_counterexamples > 0
            } else {
                let _ = writeln!(
                    out,
                    "shifted-oracle self-test: detected in {} of {} runs",
                    r.fault_oracle_detections, r.fault_oracle_runs
                );
                r.lemma2_counterexamples > 0 || (r.fault_oracle_runs > 0 && r.fault_oracle_detections == 0)
            };
            Ok(verdict(failed))
        }
        Suite::Cap => {
            let d = a.d.unwrap_or(2000);
            let r = cap_probability_experiment(d, a.tau, trials, a.seed, exec)?;
            println!(
                "cap d'={} tau={} samples={} empirical={:.6} bound={:.6} within_bound={}",
                r.d_prime, r.tau, r.samples, r.empirical, r.analytic_bound, r.within_bound
            );
            Ok(verdict(!r.within_bound))
        }
    }
}
