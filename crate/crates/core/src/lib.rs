//! Hard instances for first-order nonsmooth convex optimization.
//!
//! The crate builds functions of the form `f(x) = max_j (<x, v_j> - j c)`
//! over a Haar-random orthonormal set `{v_j}`, answers queries through a
//! resisting subgradient oracle, instruments runs with the projection events
//! that drive the randomized query lower bound, and provides a Monte Carlo
//! harness that measures how often optimizers beat that bound.
//!
//! Module map:
//!
//! * [`vecspace`]: dense vectors, Gram-Schmidt, projections, sphere sampling.
//! * [`instance`]: the hard function, its reference point and certificates.
//! * [`oracle`]: the resisting first-order oracle and its query ledger.
//! * [`events`]: projection tracking, the `G_t` / `E` events and lemma checkers.
//! * [`optimizers`]: deterministic-given-seed first-order algorithms.
//! * [`harness`]: experiments, statistics, result emission and the CLI config.

pub mod error;
pub mod events;
pub mod harness;
pub mod instance;
pub mod optimizers;
pub mod oracle;
pub mod seeds;
pub mod vecspace;

pub use error::{Error, Result};
pub use events::{EventTrace, ProjectionTracker};
pub use instance::{HardInstance, ReferenceSolution};
pub use optimizers::{run_algorithm, AlgorithmKind, TrialRecord};
pub use oracle::{OracleResponse, QueryLedger, ResistingOracle};
pub use vecspace::{DenseVector, OrthonormalBasis};
