//! Sampled property checks of a hard instance: Lipschitz continuity,
//! convexity, and validity of the oracle's subgradients.

use rand::Rng;
use serde::Serialize;

use crate::instance::HardInstance;
use crate::oracle::{subgradient_violations, QueryLedger, ResistingOracle};
use crate::vecspace::{sample_in_ball, sample_unit_sphere, DenseVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub checked: usize,
    pub failures: usize,
    /// Largest normalized slack seen; `<= 1` means every check passed with
    /// room to spare (property-specific).
    pub worst: f64,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn merge(self, other: PropertyOutcome) -> PropertyOutcome {
        PropertyOutcome {
            checked: self.checked + other.checked,
            failures: self.failures + other.failures,
            worst: self.worst.max(other.worst),
        }
    }
}

/// A pair of feasible points; odd indices give a close pair.
fn sample_pair<R: Rng + ?Sized>(
    inst: &HardInstance,
    i: usize,
    rng: &mut R,
) -> (DenseVector, DenseVector) {
    let b = inst.radius();
    let x = sample_in_ball(inst.d(), b, rng);
    let y = if i.is_multiple_of(2) {
        sample_in_ball(inst.d(), b, rng)
    } else {
        let mut y = x.clone();
        let step: f64 = rng.random_range(0.0..=1e-3);
        y.axpy(step * b, &sample_unit_sphere(inst.d(), rng));
        y.project_to_ball(b);
        y
    };
    (x, y)
}

/// `|f(x) - f(y)| <= L ||x - y|| (1 + 1e-9)` over `pairs` random pairs.
/// `worst` is the largest observed `|f(x) - f(y)| / (L ||x - y||)`.
pub fn lipschitz_check<R: Rng + ?Sized>(
    inst: &HardInstance,
    pairs: usize,
    rng: &mut R,
) -> PropertyOutcome {
    let l = inst.lipschitz();
    let mut out = PropertyOutcome::default();
    for i in 0..pairs {
        let (x, y) = sample_pair(inst, i, rng);
        let gap = (inst.value_unchecked(&x) - inst.value_unchecked(&y)).abs();
        let dist = x.sub(&y).norm();
        out.checked += 1;
        if gap > l * dist * (1.0 + 1e-9) {
            out.failures += 1;
        }
        if dist > 0.0 {
            out.worst = out.worst.max(gap / (l * dist));
        }
    }
    out
}

/// `f(λx + (1-λ)y) <= λ f(x) + (1-λ) f(y) + 1e-9 L B`. `worst` is the
/// largest observed left-minus-right excess divided by `L B`.
pub fn convexity_check<R: Rng + ?Sized>(
    inst: &HardInstance,
    samples: usize,
    rng: &mut R,
) -> PropertyOutcome {
    let scale = inst.lipschitz() * inst.radius();
    let mut out = PropertyOutcome {
        worst: f64::NEG_INFINITY,
        ..PropertyOutcome::default()
    };
    for i in 0..samples {
        let (x, y) = sample_pair(inst, i, rng);
        let lambda: f64 = rng.random_range(0.0..=1.0);
        let mut z = x.scaled(lambda);
        z.axpy(1.0 - lambda, &y);
        let lhs = inst.value_unchecked(&z);
        let rhs = lambda * inst.value_unchecked(&x) + (1.0 - lambda) * inst.value_unchecked(&y);
        out.checked += 1;
        if lhs > rhs + 1e-9 * scale {
            out.failures += 1;
        }
        out.worst = out.worst.max((lhs - rhs) / scale);
    }
    if out.checked == 0 {
        out.worst = 0.0;
    }
    out
}

/// Queries the oracle at `queries` random feasible points (the first one is
/// the origin) and probes each answer `probes` times. `checked` counts
/// (query, probe) pairs.
pub fn subgradient_suite<R: Rng + ?Sized>(
    inst: &HardInstance,
    queries: usize,
    probes: usize,
    rng: &mut R,
) -> PropertyOutcome {
    let oracle = ResistingOracle::new(inst);
    let mut ledger = QueryLedger::new();
    let mut out = PropertyOutcome::default();
    for q in 0..queries {
        let x = if q == 0 {
            DenseVector::zeros(inst.d())
        } else {
            sample_in_ball(inst.d(), inst.radius(), rng)
        };
        let response = oracle
            .query(&mut ledger, x.clone())
            .expect("sampled points are feasible")
            .clone();
        let bad = subgradient_violations(inst, &x, &response, probes, rng);
        out.checked += probes;
        out.failures += bad;
    }
    out.worst = if out.checked > 0 {
        out.failures as f64 / out.checked as f64
    } else {
        0.0
    };
    out
}
