//! Aggregation of trial outcomes and the closed-form reference quantities
//! they are compared against.

use serde::Serialize;

use crate::instance::offset_for;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes / trials` at quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// `1 - k^2 exp(-c^2 (d - 2k + 1) / (40 k))`, the lower bound on `P[E]`.
/// Not clamped: small `d` gives a vacuous (negative) value.
pub fn p_e_lower_bound(k: usize, d: usize) -> f64 {
    let kf = k as f64;
    let c = offset_for(k);
    let exponent = -c * c * (d as f64 - 2.0 * kf + 1.0) / (40.0 * kf);
    1.0 - kf * kf * exponent.exp()
}

/// `(2 / eps^8) ln(1 / eps^4)`, the dimension above which `P[E] > 15/16`.
pub fn constant_probability_dimension(eps: f64) -> f64 {
    2.0 / eps.powi(8) * (1.0 / eps.powi(4)).ln()
}

/// `15 k / 16`, the expected-query lower bound once `P[E] > 15/16`.
pub fn expected_query_reference(k: usize) -> f64 {
    15.0 * k as f64 / 16.0
}

/// Per-trial facts the summary is built from.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub first_success_value: Option<usize>,
    pub first_success_cert: Option<usize>,
    pub e_holds: bool,
    pub g_all: bool,
    pub lemma1_counterexample: bool,
    pub lemma2_counterexample: bool,
    pub diagnostic_flags: usize,
    pub chain_violations: usize,
    pub final_output_value: f64,
}

/// One result row. Field order is the emitted column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub k: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    #[serde(rename = "B")]
    pub radius: f64,
    pub algo: String,
    pub trials: usize,
    pub budget: usize,
    /// Fraction of trials with a value-based success within the budget.
    pub success_frac_value: f64,
    /// Fraction of trials where some point went uncertified within the budget.
    pub success_frac_cert: f64,
    #[serde(rename = "P_E_hat")]
    pub p_e_hat: f64,
    #[serde(rename = "P_E_bound")]
    pub p_e_bound: f64,
    pub seed: u64,
    pub success_value: usize,
    pub success_cert: usize,
    /// Value-based successes within the first `k - 1` rounds.
    pub success_before_k: usize,
    pub success_ci_lo: f64,
    pub success_ci_hi: f64,
    pub e_count: usize,
    pub g_all_count: usize,
    #[serde(rename = "P_E_ci_lo")]
    pub p_e_ci_lo: f64,
    #[serde(rename = "P_E_ci_hi")]
    pub p_e_ci_hi: f64,
    /// Mean first-success round over succeeding trials.
    pub mean_first_success: Option<f64>,
    /// Median first-success round over all trials, failures counted as
    /// never; empty when at least half the trials never succeed.
    pub median_first_success: Option<f64>,
    pub expected_query_ref: f64,
    pub lemma1_counterexamples: usize,
    pub lemma2_counterexamples: usize,
    pub diagnostic_flags: usize,
    pub chain_violations: usize,
}

/// Identifies the cell a summary belongs to.
#[derive(Clone, Debug)]
pub struct CellLabel {
    pub k: usize,
    pub d: usize,
    pub lipschitz: f64,
    pub radius: f64,
    pub algo: String,
    pub budget: usize,
    pub seed: u64,
}

fn median_with_failures(rounds: &[Option<usize>]) -> Option<f64> {
    let mut keys: Vec<f64> = rounds
        .iter()
        .map(|r| r.map_or(f64::INFINITY, |t| t as f64))
        .collect();
    if keys.is_empty() {
        return None;
    }
    keys.sort_by(f64::total_cmp);
    let n = keys.len();
    let m = if n % 2 == 1 {
        keys[n / 2]
    } else {
        0.5 * (keys[n / 2 - 1] + keys[n / 2])
    };
    m.is_finite().then_some(m)
}

impl SummaryStats {
    pub fn from_outcomes(label: CellLabel, outcomes: &[TrialOutcome]) -> Self {
        let trials = outcomes.len();
        let n = trials.max(1) as f64;
        let count = |f: &dyn Fn(&TrialOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
        let success_value = count(&|o| o.first_success_value.is_some());
        let success_cert = count(&|o| o.first_success_cert.is_some());
        let success_before_k =
            count(&|o| o.first_success_value.is_some_and(|t| t < label.k));
        let e_count = count(&|o| o.e_holds);
        let g_all_count = count(&|o| o.g_all);
        let (s_lo, s_hi) = wilson_interval(success_value, trials, Z95);
        let (e_lo, e_hi) = wilson_interval(e_count, trials, Z95);
        let firsts: Vec<Option<usize>> = outcomes.iter().map(|o| o.first_success_value).collect();
        let succeeded: Vec<f64> = firsts.iter().flatten().map(|&t| t as f64).collect();
        let mean_first_success =
            (!succeeded.is_empty()).then(|| succeeded.iter().sum::<f64>() / succeeded.len() as f64);

        SummaryStats {
            k: label.k,
            d: label.d,
            lipschitz: label.lipschitz,
            radius: label.radius,
            algo: label.algo,
            trials,
            budget: label.budget,
            success_frac_value: success_value as f64 / n,
            success_frac_cert: success_cert as f64 / n,
            p_e_hat: e_count as f64 / n,
            p_e_bound: p_e_lower_bound(label.k, label.d),
            seed: label.seed,
            success_value,
            success_cert,
            success_before_k,
            success_ci_lo: s_lo,
            success_ci_hi: s_hi,
            e_count,
            g_all_count,
            p_e_ci_lo: e_lo,
            p_e_ci_hi: e_hi,
            mean_first_success,
            median_first_success: median_with_failures(&firsts),
            expected_query_ref: expected_query_reference(label.k),
            lemma1_counterexamples: count(&|o| o.lemma1_counterexample),
            lemma2_counterexamples: count(&|o| o.lemma2_counterexample),
            diagnostic_flags: outcomes.iter().map(|o| o.diagnostic_flags).sum(),
            chain_violations: outcomes.iter().map(|o| o.chain_violations).sum(),
        }
    }

    /// Whether any honest-run checker produced a counterexample.
    pub fn has_counterexample(&self) -> bool {
        self.lemma1_counterexamples + self.lemma2_counterexamples + self.chain_violations > 0
    }
}
