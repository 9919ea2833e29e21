//! Run instrumentation: the incremental basis of
//! `S_t = span{x^(1..t), v_1..t}`, the per-round events `G_t`, the aggregate
//! event `E`, and executable checks of the two implications the lower bound
//! rests on.
//!
//! Everything here works on unit-scaled quantities (`x / B` against the unit
//! vectors `v_j`), whatever the instance's `L` and `B`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::instance::HardInstance;
use crate::oracle::{csv_err, QueryLedger};
use crate::vecspace::{DenseVector, OrthonormalBasis, DROP_TOL};

/// Absolute slack on the inductive projection bound; absorbs roundoff in
/// squared norms that should be exactly zero.
const DIAGNOSTIC_SLACK: f64 = 1e-12;

/// `c / (2 (sqrt 2 + sqrt(k - 1)))`.
pub fn g_threshold(inst: &HardInstance) -> f64 {
    threshold_for(inst.k(), inst.c())
}

fn threshold_for(k: usize, c: f64) -> f64 {
    c / (2.0 * (std::f64::consts::SQRT_2 + ((k - 1) as f64).sqrt()))
}

/// Gram-Schmidt basis of `S_t`, grown by the residual of `x^(t)/B` and then
/// that of `v_t` each round. Null residuals are counted and skipped.
#[derive(Clone, Debug)]
pub struct ProjectionTracker {
    basis: OrthonormalBasis,
    round: usize,
    dropped: usize,
}

impl ProjectionTracker {
    pub fn new(dim: usize) -> Self {
        ProjectionTracker {
            basis: OrthonormalBasis::empty(dim),
            round: 0,
            dropped: 0,
        }
    }

    /// A tracker that claims `round` completed rounds over `basis`. Intended
    /// for self-tests of the diagnostics.
    pub fn from_parts(basis: OrthonormalBasis, round: usize) -> Self {
        ProjectionTracker {
            basis,
            round,
            dropped: 0,
        }
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    fn append(&mut self, residual: Option<DenseVector>) {
        match residual {
            Some(r) if self.basis.len() < self.basis.dim() => self.basis.push_unchecked(r),
            _ => self.dropped += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    /// `|<x^(t)/B, v_j>|` for `j = 1..=k`.
    pub inner_products: Vec<f64>,
    /// `max_{j>=t} |<normalized P_{t-1}^⊥ x^(t), v_j>|`, zero when `x^(t)`
    /// adds no direction.
    pub g_margin: f64,
    pub g_flag: bool,
    pub active_index: Option<usize>,
}

impl RoundRecord {
    /// `max_{j>=t} |<x^(t)/B, v_j>|`.
    pub fn max_future_inner_product(&self) -> f64 {
        self.inner_products[self.t - 1..]
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// A witness that an implication failed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Counterexample {
    pub round: usize,
    /// The offending piece index (one-based).
    pub index: usize,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    Pass,
    /// The antecedent failed, so there was nothing to check.
    NotApplicable,
    Counterexample(Counterexample),
}

impl Verdict {
    pub fn counterexample(&self) -> Option<Counterexample> {
        match *self {
            Verdict::Counterexample(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EventTrace {
    k: usize,
    c: f64,
    threshold: f64,
    rounds: Vec<RoundRecord>,
    pub lemma1_violation: Option<Counterexample>,
    pub lemma2_violation: Option<Counterexample>,
}

impl EventTrace {
    pub fn new(inst: &HardInstance) -> Self {
        Self::with_threshold(inst, g_threshold(inst))
    }

    /// A trace that judges `G_t` against a caller-chosen threshold
    /// (fault injection).
    pub fn with_threshold(inst: &HardInstance, threshold: f64) -> Self {
        EventTrace {
            k: inst.k(),
            c: inst.c(),
            threshold,
            rounds: Vec::new(),
            lemma1_violation: None,
            lemma2_violation: None,
        }
    }

    /// A trace assembled from given records (checker self-tests).
    pub fn from_rounds(k: usize, c: f64, rounds: Vec<RoundRecord>) -> Self {
        EventTrace {
            k,
            c,
            threshold: threshold_for(k, c),
            rounds,
            lemma1_violation: None,
            lemma2_violation: None,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn record_response(&mut self, t: usize, active_index: usize) {
        if let Some(r) = self.rounds.get_mut(t.wrapping_sub(1)) {
            r.active_index = Some(active_index);
        }
    }

    /// First `(t, j)` with `j >= t` and `|<x^(t), v_j>| >= c/2`.
    pub fn e_violation(&self) -> Option<Counterexample> {
        let half_c = 0.5 * self.c;
        self.rounds.iter().find_map(|r| {
            r.inner_products
                .iter()
                .enumerate()
                .skip(r.t - 1)
                .find(|(_, &ip)| !(ip < half_c))
                .map(|(j, &ip)| Counterexample {
                    round: r.t,
                    index: j + 1,
                    value: ip,
                })
        })
    }

    /// Whether `E` holds over the recorded rounds.
    pub fn e_holds(&self) -> bool {
        self.e_violation().is_none()
    }

    /// Whether every recorded `G_t` holds.
    pub fn g_all(&self) -> bool {
        self.rounds.iter().all(|r| r.g_flag)
    }

    /// Whether `G_1, ..., G_t` all hold.
    pub fn g_prefix(&self, t: usize) -> bool {
        t <= self.rounds.len() && self.rounds[..t].iter().all(|r| r.g_flag)
    }

    /// Per-round rows:
    /// `t,g_margin,g_threshold,g_flag,max_future_ip,half_c,active_index`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t",
            "g_margin",
            "g_threshold",
            "g_flag",
            "max_future_ip",
            "half_c",
            "active_index",
        ])
        .map_err(csv_err)?;
        for r in &self.rounds {
            w.write_record([
                r.t.to_string(),
                r.g_margin.to_string(),
                self.threshold.to_string(),
                r.g_flag.to_string(),
                r.max_future_inner_product().to_string(),
                (0.5 * self.c).to_string(),
                r.active_index.map_or_else(String::new, |i| i.to_string()),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Records round `t` (one-based) with query `x_t` and then grows the tracker
/// by `x_t / B` and `v_t`. Rounds must arrive in order and `t <= k`.
pub fn observe_round(
    tracker: &mut ProjectionTracker,
    trace: &mut EventTrace,
    inst: &HardInstance,
    t: usize,
    x_t: &DenseVector,
) -> Result<()> {
    if t != tracker.round + 1 || t != trace.rounds.len() + 1 {
        return Err(Error::State(format!(
            "round {t} observed after tracker round {} / trace length {}",
            tracker.round,
            trace.rounds.len()
        )));
    }
    if t > inst.k() {
        return Err(Error::State(format!(
            "round {t} exceeds k={}; events are defined for t <= k only",
            inst.k()
        )));
    }
    if trace.k != inst.k() {
        return Err(Error::State("trace belongs to a different instance".into()));
    }
    if tracker.basis.dim() != inst.d() {
        return Err(Error::State("tracker dimension differs from instance".into()));
    }

    let x_unit = x_t.scaled(1.0 / inst.radius());
    let inner_products: Vec<f64> = inst
        .vectors()
        .vectors()
        .iter()
        .map(|v| x_unit.dot(v).abs())
        .collect();

    let residual = tracker.basis.gram_schmidt_residual(&x_unit, DROP_TOL)?;
    let g_margin = residual.as_ref().map_or(0.0, |r| {
        inst.vectors().vectors()[t - 1..]
            .iter()
            .map(|v| r.dot(v).abs())
            .fold(0.0, f64::max)
    });

    trace.rounds.push(RoundRecord {
        t,
        inner_products,
        g_margin,
        g_flag: g_margin < trace.threshold,
        active_index: None,
    });

    tracker.append(residual);
    let v_residual = tracker.basis.gram_schmidt_residual(inst.v(t), DROP_TOL)?;
    tracker.append(v_residual);
    tracker.round = t;
    Ok(())
}

/// `(for all t: G_t) => E` over the recorded prefix.
pub fn check_lemma_gimp_e(trace: &EventTrace) -> Verdict {
    if !trace.g_all() {
        return Verdict::NotApplicable;
    }
    match trace.e_violation() {
        Some(c) => Verdict::Counterexample(c),
        None => Verdict::Pass,
    }
}

/// `G_{<=t} => active_index(t) <= t`, reading the answer from the ledger.
pub fn check_lemma_oracle_responses(trace: &EventTrace, ledger: &QueryLedger, t: usize) -> Verdict {
    if t == 0 || !trace.g_prefix(t) {
        return Verdict::NotApplicable;
    }
    match ledger.round(t) {
        Some((_, r)) if r.active_index > t => Verdict::Counterexample(Counterexample {
            round: t,
            index: r.active_index,
            value: r.value,
        }),
        Some(_) => Verdict::Pass,
        None => Verdict::NotApplicable,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionDiagnostic {
    pub t: usize,
    /// `c^2 (t-1) / (2 (sqrt 2 + sqrt(k-1))^2)`.
    pub bound: f64,
    /// `(j, ||P_{t-1} v_j||^2)` for `j >= t`.
    pub norms_sq: Vec<(usize, f64)>,
    /// Indices whose squared projection exceeds the bound.
    pub flagged: Vec<usize>,
}

/// Compares `||P_{t-1} v_j||^2` for `j >= t` with the inductive bound. The
/// tracker must have observed exactly `t - 1` rounds.
pub fn projection_bound_diagnostic(
    tracker: &ProjectionTracker,
    inst: &HardInstance,
    t: usize,
) -> Result<ProjectionDiagnostic> {
    if t == 0 || t > inst.k() {
        return Err(Error::arg(format!("round {t} outside 1..={}", inst.k())));
    }
    if tracker.round + 1 != t {
        return Err(Error::State(format!(
            "diagnostic for round {t} needs {} observed rounds, tracker has {}",
            t - 1,
            tracker.round
        )));
    }
    let denom = std::f64::consts::SQRT_2 + ((inst.k() - 1) as f64).sqrt();
    let bound = inst.c().powi(2) * (t - 1) as f64 / (2.0 * denom * denom);
    let mut norms_sq = Vec::with_capacity(inst.k() + 1 - t);
    let mut flagged = Vec::new();
    for j in t..=inst.k() {
        let n = tracker.basis.projected_norm_sq(inst.v(j))?;
        if n > bound + DIAGNOSTIC_SLACK {
            flagged.push(j);
        }
        norms_sq.push((j, n));
    }
    Ok(ProjectionDiagnostic {
        t,
        bound,
        norms_sq,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::resisting_query;
    use crate::seeds;
    use crate::vecspace::sample_unit_sphere;

    #[test]
    fn threshold_values() {
        let k4 = HardInstance::build(4, 8, 1.0, 1.0, 0).unwrap();
        let expected = 0.0625 / (2.0 * (2f64.sqrt() + 3f64.sqrt()));
        assert_eq!(g_threshold(&k4), expected);
        assert!((g_threshold(&k4) - 0.009_932_414).abs() < 1e-9);

        let k1 = HardInstance::build(1, 2, 1.0, 1.0, 0).unwrap();
        assert!((g_threshold(&k1) - 0.176777).abs() < 5e-7);

        for k in 1..200 {
            let c = crate::instance::offset_for(k);
            assert!(threshold_for(k, c) < c / 2.0);
        }
    }

    #[test]
    fn zero_query_holds_vacuously() {
        let inst = HardInstance::build(3, 10, 1.0, 1.0, 4).unwrap();
        let mut tracker = ProjectionTracker::new(10);
        let mut trace = EventTrace::new(&inst);
        observe_round(&mut tracker, &mut trace, &inst, 1, &DenseVector::zeros(10)).unwrap();
        let r = &trace.rounds()[0];
        assert_eq!(r.g_margin, 0.0);
        assert!(r.g_flag);
        assert_eq!(tracker.dropped(), 1);
        assert_eq!(tracker.basis().len(), 1);
    }

    #[test]
    fn querying_v1_breaks_g1() {
        let inst = HardInstance::build(3, 10, 1.0, 2.0, 4).unwrap();
        let mut tracker = ProjectionTracker::new(10);
        let mut trace = EventTrace::new(&inst);
        let x = inst.v(1).scaled(2.0);
        observe_round(&mut tracker, &mut trace, &inst, 1, &x).unwrap();
        let r = &trace.rounds()[0];
        assert!((r.g_margin - 1.0).abs() < 1e-12);
        assert!(!r.g_flag);
        assert!(!trace.e_holds());
        assert_eq!(check_lemma_gimp_e(&trace), Verdict::NotApplicable);
        // v_1 is already in the span after the query
        assert_eq!(tracker.dropped(), 1);
    }

    #[test]
    fn out_of_order_rounds_are_rejected() {
        let inst = HardInstance::build(2, 6, 1.0, 1.0, 4).unwrap();
        let mut tracker = ProjectionTracker::new(6);
        let mut trace = EventTrace::new(&inst);
        let x = DenseVector::zeros(6);
        assert!(matches!(
            observe_round(&mut tracker, &mut trace, &inst, 2, &x),
            Err(Error::State(_))
        ));
        observe_round(&mut tracker, &mut trace, &inst, 1, &x).unwrap();
        observe_round(&mut tracker, &mut trace, &inst, 2, &x).unwrap();
        assert!(matches!(
            observe_round(&mut tracker, &mut trace, &inst, 3, &x),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn basis_bookkeeping() {
        let inst = HardInstance::build(4, 40, 1.0, 1.0, 6).unwrap();
        let mut rng = seeds::stream(6);
        let mut tracker = ProjectionTracker::new(40);
        let mut trace = EventTrace::new(&inst);
        for t in 1..=4 {
            let x = if t == 2 { DenseVector::zeros(40) } else { sample_unit_sphere(40, &mut rng) };
            observe_round(&mut tracker, &mut trace, &inst, t, &x).unwrap();
            assert_eq!(tracker.basis().len() + tracker.dropped(), 2 * t);
            assert!(tracker.basis().gram_error() <= 1e-10);
        }
    }

    #[test]
    fn gimp_e_checker_fires_on_forced_trace() {
        let c = 0.0625;
        let rounds = vec![RoundRecord {
            t: 1,
            inner_products: vec![c, c, c, c],
            g_margin: 0.0,
            g_flag: true,
            active_index: Some(1),
        }];
        let trace = EventTrace::from_rounds(4, c, rounds);
        let v = check_lemma_gimp_e(&trace);
        assert_eq!(
            v.counterexample().map(|c| (c.round, c.index)),
            Some((1, 1))
        );
    }

    #[test]
    fn oracle_response_checker() {
        let inst = HardInstance::build(4, 64, 1.0, 1.0, 10).unwrap();
        let mut ledger = QueryLedger::new();
        let mut tracker = ProjectionTracker::new(64);
        let mut trace = EventTrace::new(&inst);
        let x = DenseVector::zeros(64);
        observe_round(&mut tracker, &mut trace, &inst, 1, &x).unwrap();
        resisting_query(&inst, &mut ledger, x).unwrap();
        assert_eq!(check_lemma_oracle_responses(&trace, &ledger, 1), Verdict::Pass);

        // G_1 fails when querying v_2 directly; the checker stands down.
        let mut ledger = QueryLedger::new();
        let mut tracker = ProjectionTracker::new(64);
        let mut trace = EventTrace::new(&inst);
        let x = inst.v(2).clone();
        observe_round(&mut tracker, &mut trace, &inst, 1, &x).unwrap();
        resisting_query(&inst, &mut ledger, x).unwrap();
        assert_eq!(ledger.responses()[0].active_index, 2);
        assert_eq!(
            check_lemma_oracle_responses(&trace, &ledger, 1),
            Verdict::NotApplicable
        );
    }

    #[test]
    fn diagnostic_cases() {
        let inst = HardInstance::build(4, 32, 1.0, 1.0, 12).unwrap();
        let tracker = ProjectionTracker::new(32);
        let diag = projection_bound_diagnostic(&tracker, &inst, 1).unwrap();
        assert_eq!(diag.bound, 0.0);
        assert!(diag.norms_sq.iter().all(|&(_, n)| n == 0.0));
        assert!(diag.flagged.is_empty());

        let mut basis = OrthonormalBasis::empty(32);
        basis.push_unchecked(inst.v(3).clone());
        let planted = ProjectionTracker::from_parts(basis, 1);
        let diag = projection_bound_diagnostic(&planted, &inst, 2).unwrap();
        assert_eq!(diag.flagged, vec![3]);

        assert!(matches!(
            projection_bound_diagnostic(&tracker, &inst, 3),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn trace_csv_rows() {
        let inst = HardInstance::build(2, 8, 1.0, 1.0, 1).unwrap();
        let mut tracker = ProjectionTracker::new(8);
        let mut trace = EventTrace::new(&inst);
        observe_round(&mut tracker, &mut trace, &inst, 1, &DenseVector::zeros(8)).unwrap();
        trace.record_response(1, 1);
        let mut out = Vec::new();
        trace.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,g_margin,g_threshold,g_flag,max_future_ip,half_c,active_index"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("1,0,"));
        assert!(row.ends_with(",true,0,0.08838834764831843,1"), "{row}");
    }
}
