//! Monte Carlo drivers: event probabilities, queries-to-eps, sphere caps,
//! the lemma suite, and (k, d) sweeps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::HardInstance;
use crate::optimizers::{run_algorithm_with, AlgorithmKind, RunOptions, TrialRecord};
use crate::oracle::{subgradient_violations, OracleFault};
use crate::seeds::{self, derive_seed, Role};
use crate::vecspace::sample_unit_sphere;

use super::config::{AlgoSelection, ExperimentConfig, Mode};
use super::exec::{map_trials, Execution};
use super::stats::{CellLabel, SummaryStats, TrialOutcome};
use super::suites::{convexity_check, lipschitz_check, PropertyOutcome};

/// Shape of one Monte Carlo cell.
#[derive(Clone, Copy, Debug)]
pub struct CellSpec {
    pub k: usize,
    pub d: usize,
    pub lipschitz: f64,
    pub radius: f64,
    pub budget: usize,
    pub trials: usize,
    pub base_seed: u64,
}

impl CellSpec {
    fn label(&self, algo: String) -> CellLabel {
        CellLabel {
            k: self.k,
            d: self.d,
            lipschitz: self.lipschitz,
            radius: self.radius,
            algo,
            budget: self.budget,
            seed: self.base_seed,
        }
    }

    /// Instance of trial `i`; the same for every algorithm in the cell.
    pub fn instance(&self, trial: usize) -> Result<HardInstance> {
        HardInstance::build(
            self.k,
            self.d,
            self.lipschitz,
            self.radius,
            derive_seed(self.base_seed, trial as u64, Role::Instance),
        )
    }

    pub fn run_trial(
        &self,
        trial: usize,
        kind: AlgorithmKind,
        opts: RunOptions,
    ) -> Result<TrialRecord> {
        let inst = self.instance(trial)?;
        let seed = derive_seed(self.base_seed, trial as u64, Role::Algorithm);
        run_algorithm_with(&inst, kind, self.budget, seed, opts)
    }
}

fn outcome(rec: &TrialRecord) -> TrialOutcome {
    TrialOutcome {
        first_success_value: rec.first_success_value,
        first_success_cert: rec.first_success_cert,
        e_holds: rec.e_holds,
        g_all: rec.g_all,
        lemma1_counterexample: rec.lemma1.counterexample().is_some(),
        lemma2_counterexample: rec.lemma2.is_some(),
        diagnostic_flags: rec.diagnostic_flags,
        chain_violations: rec.certificate_chain_violations,
        final_output_value: rec.final_output_value,
    }
}

/// Runs every trial of a cell with `kind_for(trial)` and summarizes.
pub fn run_cell<F>(cell: &CellSpec, label: String, kind_for: F, exec: Execution) -> Result<SummaryStats>
where
    F: Fn(usize) -> AlgorithmKind + Sync + Send,
{
    if cell.trials == 0 {
        return Err(Error::arg("trials must be at least 1"));
    }
    if cell.d < 2 * cell.k {
        return Err(Error::arg(format!(
            "dimension d={} must be at least 2k={}",
            cell.d,
            2 * cell.k
        )));
    }
    let opts = RunOptions {
        keep_ledger: false,
        ..RunOptions::default()
    };
    let outcomes = map_trials(cell.trials, exec, |i| {
        cell.run_trial(i, kind_for(i), opts).map(|r| outcome(&r))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(SummaryStats::from_outcomes(cell.label(label), &outcomes))
}

/// One summary per selected algorithm (a single row for `Mixed`).
pub fn run_selection(
    cell: &CellSpec,
    selection: AlgoSelection,
    exec: Execution,
) -> Result<Vec<SummaryStats>> {
    match selection {
        AlgoSelection::One(kind) => Ok(vec![run_cell(cell, kind.name().into(), |_| kind, exec)?]),
        AlgoSelection::All => AlgorithmKind::ALL
            .iter()
            .map(|&kind| run_cell(cell, kind.name().into(), |_| kind, exec))
            .collect(),
        AlgoSelection::Mixed => Ok(vec![run_cell(
            cell,
            "mixed".into(),
            |i| AlgorithmKind::ALL[i % AlgorithmKind::ALL.len()],
            exec,
        )?]),
    }
}

fn cell_from(cfg: &ExperimentConfig, k: usize, d: usize) -> CellSpec {
    CellSpec {
        k,
        d,
        lipschitz: cfg.lipschitz,
        radius: cfg.radius,
        budget: cfg.budget_for(k),
        trials: cfg.trials,
        base_seed: cfg.base_seed,
    }
}

/// Empirical `P[E]` (over rounds `1..=min(budget, k)`) with its binomial
/// interval and the closed-form lower bound, one row per algorithm.
pub fn estimate_p_e(cfg: &ExperimentConfig) -> Result<Vec<SummaryStats>> {
    if cfg.mode != Mode::LowerBound {
        return Err(Error::arg("estimate_p_e needs mode lower_bound"));
    }
    cfg.validate()?;
    run_selection(&cell_from(cfg, cfg.k, cfg.d), cfg.algo, cfg.execution)
}

/// First value-based success round per trial, summarized. In lower-bound
/// mode read `success_frac_value` (within the budget) and
/// `success_before_k`; in upper-bound mode read `median_first_success`.
pub fn queries_to_epsilon(cfg: &ExperimentConfig) -> Result<Vec<SummaryStats>> {
    if !matches!(cfg.mode, Mode::LowerBound | Mode::UpperBound) {
        return Err(Error::arg("queries_to_epsilon needs mode lower_bound or upper_bound"));
    }
    cfg.validate()?;
    run_selection(&cell_from(cfg, cfg.k, cfg.d), cfg.algo, cfg.execution)
}

/// One row per `(k, d, algo)` cell, sorted by `(k, d, algo)`. Cells with
/// `d < 2k` are rejected.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SummaryStats>> {
    let mut checked = cfg.clone();
    checked.mode = Mode::Sweep;
    checked.validate()?;
    let mut rows = Vec::new();
    for &k in &cfg.k_list {
        for &d in &cfg.d_list {
            rows.extend(run_selection(&cell_from(cfg, k, d), cfg.algo, cfg.execution)?);
        }
    }
    rows.sort_by(|a, b| (a.k, a.d, &a.algo).cmp(&(b.k, b.d, &b.algo)));
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapResult {
    pub d_prime: usize,
    pub tau: f64,
    pub samples: usize,
    pub hits: usize,
    /// Fraction of sampled `u` with `|<u, e_1>| >= tau`.
    pub empirical: f64,
    /// `exp(-tau^2 (d' - 1) / 2)`.
    pub analytic_bound: f64,
    /// Whether `empirical <= bound + 3 sqrt(bound (1 - bound) / samples)`.
    pub within_bound: bool,
}

const CAP_BATCH: usize = 4096;

/// Fraction of uniform unit vectors in `R^{d'}` lying in the two end caps
/// `|<u, e_1>| >= tau`, against `exp(-tau^2 (d' - 1) / 2)`.
///
/// Samples are drawn in fixed batches, batch `b` from its own derived
/// stream, so the result does not depend on the execution mode.
pub fn cap_probability_experiment(
    d_prime: usize,
    tau: f64,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<CapResult> {
    if d_prime < 2 {
        return Err(Error::arg(format!("cap experiment needs d' >= 2, got {d_prime}")));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::arg(format!("tau must be positive and finite, got {tau}")));
    }
    if samples == 0 {
        return Err(Error::arg("samples must be at least 1"));
    }
    let batches = samples.div_ceil(CAP_BATCH);
    let hits: usize = map_trials(batches, exec, |b| {
        let mut rng = seeds::trial_stream(seed, b as u64, Role::Sphere);
        let n = CAP_BATCH.min(samples - b * CAP_BATCH);
        (0..n)
            .filter(|_| sample_unit_sphere(d_prime, &mut rng)[0].abs() >= tau)
            .count()
    })
    .into_iter()
    .sum();
    let empirical = hits as f64 / samples as f64;
    let analytic_bound = (-tau * tau * (d_prime as f64 - 1.0) / 2.0).exp();
    let margin = 3.0 * (analytic_bound * (1.0 - analytic_bound) / samples as f64).sqrt();
    Ok(CapResult {
        d_prime,
        tau,
        samples,
        hits,
        empirical,
        analytic_bound,
        within_bound: empirical <= analytic_bound + margin,
    })
}

/// What the lemma suite runs.
#[derive(Clone, Debug)]
pub struct LemmaSuiteSpec {
    pub ks: Vec<usize>,
    /// Fixed dimension, or `64 k` when `None`.
    pub d: Option<usize>,
    pub trials: usize,
    pub base_seed: u64,
    /// Lipschitz pairs, convexity triples and probes per query, per trial.
    pub property_samples: usize,
    /// Runs per `k >= 2` for each fault-injection self-test.
    pub fault_trials: usize,
    pub lipschitz: f64,
    pub radius: f64,
}

impl Default for LemmaSuiteSpec {
    fn default() -> Self {
        LemmaSuiteSpec {
            ks: vec![1, 2, 4, 8],
            d: None,
            trials: 1000,
            base_seed: 0,
            property_samples: 8,
            fault_trials: 20,
            lipschitz: 1.0,
            radius: 1.0,
        }
    }
}

impl LemmaSuiteSpec {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        LemmaSuiteSpec {
            ks: if cfg.k_list.is_empty() { vec![1, 2, 4, 8] } else { cfg.k_list.clone() },
            trials: cfg.trials,
            base_seed: cfg.base_seed,
            lipschitz: cfg.lipschitz,
            radius: cfg.radius,
            ..LemmaSuiteSpec::default()
        }
    }

    fn dim(&self, k: usize) -> usize {
        self.d.unwrap_or(64 * k)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LemmaReport {
    pub runs: usize,
    pub lemma1_checked: usize,
    pub lemma1_counterexamples: usize,
    pub lemma2_rounds_checked: usize,
    pub lemma2_counterexamples: usize,
    pub diagnostic_flags: usize,
    pub chain_violations: usize,
    pub lipschitz: PropertyOutcome,
    pub convexity: PropertyOutcome,
    pub subgradient: PropertyOutcome,
    pub fault_oracle_runs: usize,
    pub fault_oracle_detections: usize,
    pub fault_threshold_runs: usize,
    pub fault_threshold_lemma1: usize,
}

impl LemmaReport {
    pub fn honest_counterexamples(&self) -> usize {
        self.lemma1_counterexamples
            + self.lemma2_counterexamples
            + self.chain_violations
            + self.lipschitz.failures
            + self.convexity.failures
            + self.subgradient.failures
    }

    /// No honest counterexample, and the corrupted oracle was caught.
    pub fn passed(&self) -> bool {
        self.honest_counterexamples() == 0
            && (self.fault_oracle_runs == 0 || self.fault_oracle_detections > 0)
    }

    fn absorb(&mut self, o: &LemmaTrial) {
        self.runs += 1;
        self.lemma1_checked += o.lemma1_checked as usize;
        self.lemma1_counterexamples += o.lemma1_cex as usize;
        self.lemma2_rounds_checked += o.lemma2_checked;
        self.lemma2_counterexamples += o.lemma2_cex as usize;
        self.diagnostic_flags += o.diagnostic_flags;
        self.chain_violations += o.chain_violations;
        self.lipschitz = self.lipschitz.merge(o.lipschitz);
        self.convexity = self.convexity.merge(o.convexity);
        self.subgradient = self.subgradient.merge(o.subgradient);
    }
}

struct LemmaTrial {
    lemma1_checked: bool,
    lemma1_cex: bool,
    lemma2_checked: usize,
    lemma2_cex: bool,
    diagnostic_flags: usize,
    chain_violations: usize,
    lipschitz: PropertyOutcome,
    convexity: PropertyOutcome,
    subgradient: PropertyOutcome,
}

fn lemma_trial(spec: &LemmaSuiteSpec, k: usize, i: usize) -> Result<LemmaTrial> {
    let cell = CellSpec {
        k,
        d: spec.dim(k),
        lipschitz: spec.lipschitz,
        radius: spec.radius,
        budget: k,
        trials: spec.trials,
        base_seed: spec.base_seed ^ (k as u64).wrapping_mul(0x9E37_79B9),
    };
    let inst = cell.instance(i)?;
    let kind = AlgorithmKind::ALL[i % AlgorithmKind::ALL.len()];
    let seed = derive_seed(cell.base_seed, i as u64, Role::Algorithm);
    let rec = run_algorithm_with(&inst, kind, k, seed, RunOptions::default())?;

    let mut rng = seeds::trial_stream(cell.base_seed, i as u64, Role::Probe);
    let n = spec.property_samples;
    let mut subgradient = PropertyOutcome::default();
    for (x, r) in rec.ledger.queries().iter().zip(rec.ledger.responses()) {
        subgradient.checked += n;
        subgradient.failures += subgradient_violations(&inst, x, r, n, &mut rng);
    }
    Ok(LemmaTrial {
        lemma1_checked: rec.g_all,
        lemma1_cex: rec.lemma1.counterexample().is_some(),
        lemma2_checked: rec.lemma2_checked,
        lemma2_cex: rec.lemma2.is_some(),
        diagnostic_flags: rec.diagnostic_flags,
        chain_violations: rec.certificate_chain_violations,
        lipschitz: lipschitz_check(&inst, n, &mut rng),
        convexity: convexity_check(&inst, n, &mut rng),
        subgradient,
    })
}

/// Honest runs over every `k` (algorithms round-robin), each instrumented
/// with both lemma checkers, the projection diagnostic, the certificate
/// chain and sampled property checks; then the two fault-injection
/// self-tests.
pub fn run_lemma_suite(spec: &LemmaSuiteSpec, exec: Execution) -> Result<LemmaReport> {
    if spec.trials == 0 {
        return Err(Error::arg("trials must be at least 1"));
    }
    let mut report = LemmaReport::default();
    for &k in &spec.ks {
        if spec.dim(k) < 2 * k {
            return Err(Error::arg(format!("dimension {} below 2k for k={k}", spec.dim(k))));
        }
        let trials = map_trials(spec.trials, exec, |i| lemma_trial(spec, k, i))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        trials.iter().for_each(|t| report.absorb(t));

        if k < 2 {
            continue;
        }
        for i in 0..spec.fault_trials {
            let cell = CellSpec {
                k,
                d: spec.dim(k),
                lipschitz: spec.lipschitz,
                radius: spec.radius,
                budget: k,
                trials: spec.fault_trials,
                base_seed: spec.base_seed ^ 0xFA17,
            };
            let kind = AlgorithmKind::ALL[i % AlgorithmKind::ALL.len()];
            let shifted = cell.run_trial(
                i,
                kind,
                RunOptions {
                    fault: Some(OracleFault::ShiftIndex),
                    ..RunOptions::default()
                },
            )?;
            report.fault_oracle_runs += 1;
            report.fault_oracle_detections += shifted.lemma2.is_some() as usize;

            let loose = cell.run_trial(
                i,
                kind,
                RunOptions {
                    threshold_scale: 2.0,
                    ..RunOptions::default()
                },
            )?;
            report.fault_threshold_runs += 1;
            report.fault_threshold_lemma1 += loose.lemma1.counterexample().is_some() as usize;
        }
    }
    Ok(report)
}
