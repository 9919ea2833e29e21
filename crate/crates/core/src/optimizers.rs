//! First-order methods under a deterministic-given-seed contract, and the
//! instrumented driver that runs one of them against a hard instance.
//!
//! A method's next query is a function of its seed and the ledger so far.
//! Replaying a ledger therefore reproduces the query sequence bit for bit,
//! which is what lets a randomized method be treated as a fixed
//! deterministic one per seed.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::events::{
    check_lemma_gimp_e, check_lemma_oracle_responses, observe_round,
    projection_bound_diagnostic, Counterexample, EventTrace, ProjectionTracker, Verdict,
};
use crate::instance::{Certificate, HardInstance};
use crate::oracle::{OracleFault, QueryLedger, ResistingOracle};
use crate::seeds::{self, StreamRng};
use crate::vecspace::{sample_unit_sphere, DenseVector, OrthonormalBasis, DROP_TOL};

/// Registry of the available methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    /// Projected subgradient with constant step `B / (L sqrt(T))`; reports
    /// the best query.
    SubgradientConstant,
    /// Projected subgradient with step `B / (L sqrt(t))`; reports the running
    /// average of its queries.
    SubgradientAveraged,
    /// `B u` with `u` uniform on the sphere, fresh every round.
    RandomSearch,
    /// Queries `-(B / sqrt(m)) sum_i b_i` over an orthonormal basis `b_i` of
    /// the returned subgradients.
    SpanRestricted,
    /// The span-restricted guess blended with one fresh random direction.
    Hybrid,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::SubgradientConstant,
        AlgorithmKind::SubgradientAveraged,
        AlgorithmKind::RandomSearch,
        AlgorithmKind::SpanRestricted,
        AlgorithmKind::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::SubgradientConstant => "subgradient-const",
            AlgorithmKind::SubgradientAveraged => "subgradient-avg",
            AlgorithmKind::RandomSearch => "random-search",
            AlgorithmKind::SpanRestricted => "span-restricted",
            AlgorithmKind::Hybrid => "hybrid",
        }
    }

    pub fn output_rule(self) -> OutputRule {
        match self {
            AlgorithmKind::SubgradientAveraged => OutputRule::Average,
            _ => OutputRule::BestQuery,
        }
    }

    /// A fresh method for an instance with the given shape.
    pub fn instantiate(
        self,
        d: usize,
        lipschitz: f64,
        radius: f64,
        budget: usize,
        seed: u64,
    ) -> Box<dyn FirstOrderMethod + Send> {
        match self {
            AlgorithmKind::SubgradientConstant => Box::new(ProjectedSubgradient {
                d,
                radius,
                step: StepRule::Constant(radius / (lipschitz * (budget.max(1) as f64).sqrt())),
            }),
            AlgorithmKind::SubgradientAveraged => Box::new(ProjectedSubgradient {
                d,
                radius,
                step: StepRule::Decaying(radius / lipschitz),
            }),
            AlgorithmKind::RandomSearch => Box::new(RandomSearch {
                d,
                radius,
                rng: seeds::stream(seed),
            }),
            AlgorithmKind::SpanRestricted => Box::new(SpanGuess::new(d, radius, None)),
            AlgorithmKind::Hybrid => Box::new(SpanGuess::new(d, radius, Some(seeds::stream(seed)))),
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = AlgorithmKind::ALL.iter().map(|k| k.name()).collect();
                Error::arg(format!("unknown algorithm {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Which point a method reports as its answer after each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputRule {
    BestQuery,
    Average,
}

pub trait FirstOrderMethod {
    /// The next feasible query given every answer so far.
    fn next_query(&mut self, ledger: &QueryLedger) -> DenseVector;
}

#[derive(Clone, Copy, Debug)]
enum StepRule {
    Constant(f64),
    /// `scale / sqrt(t)` after round `t`.
    Decaying(f64),
}

/// `x_1 = 0`, `x_{t+1} = Π_B(x_t - η_t g_t)`.
#[derive(Clone, Debug)]
struct ProjectedSubgradient {
    d: usize,
    radius: f64,
    step: StepRule,
}

impl FirstOrderMethod for ProjectedSubgradient {
    fn next_query(&mut self, ledger: &QueryLedger) -> DenseVector {
        let t = ledger.count();
        let Some((x, r)) = ledger.round(t) else {
            return DenseVector::zeros(self.d);
        };
        let eta = match self.step {
            StepRule::Constant(eta) => eta,
            StepRule::Decaying(scale) => scale / (t as f64).sqrt(),
        };
        let mut next = x.clone();
        next.axpy(-eta, &r.subgradient);
        next.project_to_ball(self.radius);
        next
    }
}

#[derive(Clone, Debug)]
struct RandomSearch {
    d: usize,
    radius: f64,
    rng: StreamRng,
}

impl FirstOrderMethod for RandomSearch {
    fn next_query(&mut self, _ledger: &QueryLedger) -> DenseVector {
        let mut u = sample_unit_sphere(self.d, &mut self.rng);
        u.scale_in_place(self.radius);
        u
    }
}

/// Span-restricted guessing, optionally mixed with a random direction.
#[derive(Clone, Debug)]
struct SpanGuess {
    d: usize,
    radius: f64,
    directions: OrthonormalBasis,
    absorbed: usize,
    rng: Option<StreamRng>,
}

impl SpanGuess {
    fn new(d: usize, radius: f64, rng: Option<StreamRng>) -> Self {
        SpanGuess {
            d,
            radius,
            directions: OrthonormalBasis::empty(d),
            absorbed: 0,
            rng,
        }
    }

    fn absorb(&mut self, ledger: &QueryLedger) {
        for r in &ledger.responses()[self.absorbed..] {
            // Subgradients are finite and the basis rejects nothing else.
            self.directions
                .extend(&r.subgradient, DROP_TOL)
                .expect("subgradient has the instance dimension");
        }
        self.absorbed = ledger.count();
    }

    /// `-(1/sqrt(m)) sum_i b_i`, a unit vector, or `None` for `m = 0`.
    fn span_guess(&self) -> Option<DenseVector> {
        let m = self.directions.len();
        if m == 0 {
            return None;
        }
        let mut s = DenseVector::zeros(self.d);
        for b in self.directions.vectors() {
            s.axpy(1.0, b);
        }
        s.scale_in_place(-1.0 / (m as f64).sqrt());
        Some(s)
    }
}

impl FirstOrderMethod for SpanGuess {
    fn next_query(&mut self, ledger: &QueryLedger) -> DenseVector {
        self.absorb(ledger);
        let guess = self.span_guess();
        let m = self.directions.len() as f64;
        let mut x = match (&mut self.rng, guess) {
            (None, None) => DenseVector::zeros(self.d),
            (None, Some(s)) => s,
            (Some(rng), guess) => {
                let u = sample_unit_sphere(self.d, rng);
                match guess {
                    None => u,
                    Some(mut s) => {
                        s.scale_in_place((m / (m + 1.0)).sqrt());
                        s.axpy((1.0 / (m + 1.0)).sqrt(), &u);
                        s
                    }
                }
            }
        };
        x.scale_in_place(self.radius);
        x.project_to_ball(self.radius);
        x
    }
}

/// Knobs for [`run_algorithm_with`]; the defaults are an honest run.
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub fault: Option<OracleFault>,
    /// Multiplies the `G_t` threshold (fault injection when `!= 1`).
    pub threshold_scale: f64,
    /// Keep the full ledger in the returned record.
    pub keep_ledger: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            fault: None,
            threshold_scale: 1.0,
            keep_ledger: true,
        }
    }
}

/// Everything observed in one run.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub algorithm: AlgorithmKind,
    pub budget: usize,
    /// Empty unless [`RunOptions::keep_ledger`].
    pub ledger: QueryLedger,
    pub trace: EventTrace,
    /// First round whose query or reported point has `f <= f(x̂) + eps`.
    pub first_success_value: Option<usize>,
    /// First round whose query or reported point admits no
    /// non-suboptimality certificate.
    pub first_success_cert: Option<usize>,
    pub best_value: f64,
    /// Whether the best query carries a non-suboptimality certificate.
    pub best_certified: bool,
    /// `f` at the reported point after the last round.
    pub final_output_value: f64,
    /// `f` at the reported point after each round.
    pub output_values: Vec<f64>,
    pub e_holds: bool,
    pub g_all: bool,
    pub lemma1: Verdict,
    /// First counterexample to `G_{<=t} => active_index <= t`, if any.
    pub lemma2: Option<Counterexample>,
    /// Rounds where `G_{<=t}` held and the oracle check ran.
    pub lemma2_checked: usize,
    /// Inductive projection-bound flags raised while `G_{<t}` held.
    pub diagnostic_flags: usize,
    /// Certified points whose value was not above `f(x̂) + eps`.
    pub certificate_chain_violations: usize,
}

impl TrialRecord {
    pub fn succeeded_by(&self, round: usize) -> bool {
        self.first_success_value.is_some_and(|t| t <= round)
    }
}

/// Runs `budget` rounds of `kind` against the honest resisting oracle.
pub fn run_algorithm(
    inst: &HardInstance,
    kind: AlgorithmKind,
    budget: usize,
    seed: u64,
) -> Result<TrialRecord> {
    run_algorithm_with(inst, kind, budget, seed, RunOptions::default())
}

pub fn run_algorithm_with(
    inst: &HardInstance,
    kind: AlgorithmKind,
    budget: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<TrialRecord> {
    if budget == 0 {
        return Err(Error::arg("budget must be at least 1"));
    }
    let oracle = match opts.fault {
        Some(f) => ResistingOracle::with_fault(inst, f),
        None => ResistingOracle::new(inst),
    };
    let mut method = kind.instantiate(inst.d(), inst.lipschitz(), inst.radius(), budget, seed);
    let reference = inst.reference_solution();
    let eps = inst.target_eps();
    let success_level = reference.f_x_hat + eps;

    let mut ledger = QueryLedger::new();
    let mut tracker = ProjectionTracker::new(inst.d());
    let mut trace = EventTrace::with_threshold(
        inst,
        crate::events::g_threshold(inst) * opts.threshold_scale,
    );

    let mut first_value = None;
    let mut first_cert = None;
    let mut best_value = f64::INFINITY;
    let mut best_certified = true;
    let mut average = DenseVector::zeros(inst.d());
    let mut output_values = Vec::with_capacity(budget);
    let mut lemma2 = None;
    let mut lemma2_checked = 0;
    let mut diagnostic_flags = 0;
    let mut chain_violations = 0;

    for t in 1..=budget {
        let x = method.next_query(&ledger);
        let instrumented = t <= inst.k();
        if instrumented {
            if trace.g_prefix(t - 1) {
                diagnostic_flags += projection_bound_diagnostic(&tracker, inst, t)?.flagged.len();
            }
            observe_round(&mut tracker, &mut trace, inst, t, &x)?;
        }
        let (value, active) = {
            let r = oracle.query(&mut ledger, x)?;
            (r.value, r.active_index)
        };
        let x = &ledger.queries()[t - 1];

        if instrumented {
            trace.record_response(t, active);
            match check_lemma_oracle_responses(&trace, &ledger, t) {
                Verdict::Counterexample(c) => {
                    lemma2_checked += 1;
                    lemma2.get_or_insert(c);
                }
                Verdict::Pass => lemma2_checked += 1,
                Verdict::NotApplicable => {}
            }
        }

        let cert = inst.certificate_unchecked(x);
        if cert.is_certified() && !(value > success_level) {
            chain_violations += 1;
        }
        if value < best_value {
            best_value = value;
            best_certified = cert.is_certified();
        }

        let (output_value, output_cert) = match kind.output_rule() {
            OutputRule::BestQuery => (best_value, cert),
            OutputRule::Average => {
                average.scale_in_place((t - 1) as f64 / t as f64);
                average.axpy(1.0 / t as f64, x);
                (inst.value_unchecked(&average), inst.certificate_unchecked(&average))
            }
        };
        output_values.push(output_value);

        if first_value.is_none() && value.min(output_value) <= success_level {
            first_value = Some(t);
        }
        if first_cert.is_none()
            && (cert == Certificate::Inconclusive || output_cert == Certificate::Inconclusive)
        {
            first_cert = Some(t);
        }
    }

    let lemma1 = check_lemma_gimp_e(&trace);
    trace.lemma1_violation = lemma1.counterexample();
    trace.lemma2_violation = lemma2;

    Ok(TrialRecord {
        algorithm: kind,
        budget,
        e_holds: trace.e_holds(),
        g_all: trace.g_all(),
        ledger: if opts.keep_ledger { ledger } else { QueryLedger::new() },
        trace,
        first_success_value: first_value,
        first_success_cert: first_cert,
        best_value,
        best_certified,
        final_output_value: *output_values.last().expect("budget >= 1"),
        output_values,
        lemma1,
        lemma2,
        lemma2_checked,
        diagnostic_flags,
        certificate_chain_violations: chain_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in AlgorithmKind::ALL {
            assert_eq!(k.name().parse::<AlgorithmKind>().unwrap(), k);
        }
        assert!("newton".parse::<AlgorithmKind>().is_err());
    }

    #[test]
    fn zero_budget_is_rejected() {
        let inst = HardInstance::build(2, 8, 1.0, 1.0, 0).unwrap();
        assert!(matches!(
            run_algorithm(&inst, AlgorithmKind::RandomSearch, 0, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn subgradient_starts_at_origin_and_steps() {
        let inst = HardInstance::build(4, 32, 2.0, 3.0, 5).unwrap();
        let rec = run_algorithm(&inst, AlgorithmKind::SubgradientConstant, 9, 0).unwrap();
        let q = rec.ledger.queries();
        assert_eq!(q[0], DenseVector::zeros(32));
        let eta = 3.0 / (2.0 * 3.0);
        for t in 0..8 {
            let mut expected = q[t].clone();
            expected.axpy(-eta, &rec.ledger.responses()[t].subgradient);
            expected.project_to_ball(3.0);
            assert_eq!(q[t + 1], expected);
        }
    }

    #[test]
    fn span_restricted_reveals_one_vector_per_round() {
        let inst = HardInstance::build(4, 64, 1.0, 1.0, 3).unwrap();
        let rec = run_algorithm(&inst, AlgorithmKind::SpanRestricted, 6, 0).unwrap();
        let idx: Vec<usize> = rec.ledger.responses().iter().map(|r| r.active_index).collect();
        assert_eq!(&idx[..4], &[1, 2, 3, 4]);
        // The k-th query is still not eps-suboptimal; the (k+1)-th is x̂.
        assert_eq!(rec.first_success_value, Some(5));
        assert!(rec.e_holds && rec.g_all);
        let xhat = inst.reference_solution().x_hat;
        assert!(rec.ledger.queries()[4].sub(&xhat).norm() < 1e-12);
    }

    #[test]
    fn queries_are_feasible_and_deterministic() {
        let inst = HardInstance::build(3, 48, 1.5, 2.0, 8).unwrap();
        for kind in AlgorithmKind::ALL {
            let a = run_algorithm(&inst, kind, 12, 99).unwrap();
            let b = run_algorithm(&inst, kind, 12, 99).unwrap();
            for (x, y) in a.ledger.queries().iter().zip(b.ledger.queries()) {
                assert!(x.norm() <= 2.0 * (1.0 + 1e-12));
                assert_eq!(x, y);
            }
            assert_eq!(a.output_values, b.output_values);
        }
    }

    #[test]
    fn averaged_output_is_the_mean_of_queries() {
        let inst = HardInstance::build(4, 16, 1.0, 1.0, 2).unwrap();
        let rec = run_algorithm(&inst, AlgorithmKind::SubgradientAveraged, 10, 0).unwrap();
        let mut mean = DenseVector::zeros(16);
        for x in rec.ledger.queries() {
            mean.axpy(0.1, x);
        }
        assert!((inst.evaluate(&mean).unwrap() - rec.final_output_value).abs() < 1e-12);
    }

    #[test]
    fn instrumentation_stops_after_k_rounds() {
        let inst = HardInstance::build(3, 24, 1.0, 1.0, 2).unwrap();
        let rec = run_algorithm(&inst, AlgorithmKind::Hybrid, 10, 4).unwrap();
        assert_eq!(rec.trace.len(), 3);
        assert_eq!(rec.ledger.count(), 10);
    }

    #[test]
    fn shifted_oracle_trips_lemma2_at_round_one() {
        let inst = HardInstance::build(4, 64, 1.0, 1.0, 3).unwrap();
        let opts = RunOptions {
            fault: Some(OracleFault::ShiftIndex),
            ..RunOptions::default()
        };
        let rec = run_algorithm_with(&inst, AlgorithmKind::SubgradientConstant, 4, 0, opts).unwrap();
        let c = rec.lemma2.expect("checker fires");
        assert_eq!((c.round, c.index), (1, 2));
    }
}
