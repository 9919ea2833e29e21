//! The resisting first-order oracle.
//!
//! Every answer is `(f(x), L v_ℓ)` where `ℓ` is the smallest index attaining
//! the maximum piece. This is always a valid subgradient and never reveals
//! more than one construction vector per query.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::HardInstance;
use crate::vecspace::{sample_in_ball, sample_unit_sphere, DenseVector};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResponse {
    pub value: f64,
    pub subgradient: DenseVector,
    /// One-based index `ℓ` of the returned piece.
    pub active_index: usize,
}

/// Every accepted query and its answer, in order.
#[derive(Clone, Debug, Default)]
pub struct QueryLedger {
    queries: Vec<DenseVector>,
    responses: Vec<OracleResponse>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn queries(&self) -> &[DenseVector] {
        &self.queries
    }

    pub fn responses(&self) -> &[OracleResponse] {
        &self.responses
    }

    /// Query and response of round `t` (one-based).
    pub fn round(&self, t: usize) -> Option<(&DenseVector, &OracleResponse)> {
        let i = t.checked_sub(1)?;
        Some((self.queries.get(i)?, self.responses.get(i)?))
    }

    pub fn last_response(&self) -> Option<&OracleResponse> {
        self.responses.last()
    }

    fn push(&mut self, x: DenseVector, r: OracleResponse) -> &OracleResponse {
        self.queries.push(x);
        self.responses.push(r);
        self.responses.last().expect("just pushed")
    }

    /// Columnar export: `t,active_index,value,norm` and optionally the full
    /// query as `x1..xd`.
    pub fn write_csv<W: Write>(&self, out: W, include_queries: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.queries.first().map_or(0, DenseVector::dim);
        let mut header = vec![
            "t".to_string(),
            "active_index".to_string(),
            "value".to_string(),
            "norm".to_string(),
        ];
        if include_queries {
            header.extend((1..=d).map(|i| format!("x{i}")));
        }
        w.write_record(&header).map_err(csv_err)?;
        for (t, (x, r)) in self.queries.iter().zip(&self.responses).enumerate() {
            let mut row = vec![
                (t + 1).to_string(),
                r.active_index.to_string(),
                r.value.to_string(),
                x.norm().to_string(),
            ];
            if include_queries {
                row.extend(x.as_slice().iter().map(f64::to_string));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

/// Deliberate oracle defects used to check that the lemma checkers fire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleFault {
    /// Answer with `v_{ℓ+1}` (capped at `k`) instead of `v_ℓ`.
    ShiftIndex,
}

#[derive(Clone, Copy, Debug)]
pub struct ResistingOracle<'a> {
    inst: &'a HardInstance,
    fault: Option<OracleFault>,
}

impl<'a> ResistingOracle<'a> {
    pub fn new(inst: &'a HardInstance) -> Self {
        ResistingOracle { inst, fault: None }
    }

    pub fn with_fault(inst: &'a HardInstance, fault: OracleFault) -> Self {
        ResistingOracle {
            inst,
            fault: Some(fault),
        }
    }

    pub fn instance(&self) -> &'a HardInstance {
        self.inst
    }

    /// Answers `x` and records it. Infeasible queries are rejected and leave
    /// the ledger untouched.
    pub fn query<'l>(
        &self,
        ledger: &'l mut QueryLedger,
        x: DenseVector,
    ) -> Result<&'l OracleResponse> {
        let inst = self.inst;
        inst.check_feasible(&x)?;
        let (mut active, top) = inst.active_piece(&x);
        if self.fault == Some(OracleFault::ShiftIndex) {
            active = (active + 1).min(inst.k());
        }
        let response = OracleResponse {
            value: inst.lipschitz() * inst.radius() * top,
            subgradient: inst.v(active).scaled(inst.lipschitz()),
            active_index: active,
        };
        Ok(ledger.push(x, response))
    }
}

/// Answers `x` with the honest resisting oracle.
pub fn resisting_query(
    inst: &HardInstance,
    ledger: &mut QueryLedger,
    x: DenseVector,
) -> Result<OracleResponse> {
    ResistingOracle::new(inst).query(ledger, x).cloned()
}

/// Probes the subgradient inequality `f(y) >= f(x) + <g, y - x>` at `probes`
/// feasible points, half drawn across the ball and half near `x`.
pub fn subgradient_validity_check<R: Rng + ?Sized>(
    inst: &HardInstance,
    x: &DenseVector,
    response: &OracleResponse,
    probes: usize,
    rng: &mut R,
) -> bool {
    subgradient_violations(inst, x, response, probes, rng) == 0
}

/// Number of probes violating the subgradient inequality by more than
/// `1e-9 L B`.
pub fn subgradient_violations<R: Rng + ?Sized>(
    inst: &HardInstance,
    x: &DenseVector,
    response: &OracleResponse,
    probes: usize,
    rng: &mut R,
) -> usize {
    let b = inst.radius();
    let tol = 1e-9 * inst.lipschitz() * b;
    let fx = response.value;
    (0..probes)
        .filter(|&i| {
            let y = if i % 2 == 0 {
                sample_in_ball(inst.d(), b, rng)
            } else {
                let mut y = x.clone();
                let step: f64 = rng.random_range(0.0..=0.1);
                y.axpy(step * b, &sample_unit_sphere(inst.d(), rng));
                y.project_to_ball(b);
                y
            };
            let fy = inst.value_unchecked(&y);
            fy < fx + response.subgradient.dot(&y.sub(x)) - tol
        })
        .count()
}
