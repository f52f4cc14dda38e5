//! Measurement-driven consensus for networks of single-qubit nodes.
//!
//! Each node holds one real qubit `cos x |0> + sin x |1>`, identified with its
//! angle `x` in `[0, pi)`. Nodes act only through projective measurements and
//! exchange measurement outcomes over classical links. The crate provides:
//!
//! - [`qstate`]: angle canonicalization, the Born rule, collapse and pure-state
//!   density operators.
//! - [`graph`]: the classical topology, the pair-selection law of the gossip
//!   protocol, its consensus Laplacian and spectral gap.
//! - [`pqp`]: the pairwise qubit projection gossip engine and its diagnostics.
//! - [`density`]: exact expected-density propagation and Monte Carlo
//!   cross-validation against the engine.
//! - [`planner`]: centralized finite- and infinite-horizon dynamic programming
//!   over a discretized measurement grid.
//! - [`harness`]: configuration, presets, seed derivation, batch runs and the
//!   verification suite used by the `qconsensus` binary.

pub mod density;
pub mod error;
pub mod graph;
pub mod harness;
pub mod par;
pub mod planner;
pub mod pqp;
pub mod qstate;
pub mod stats;
pub mod tol;

pub use error::{Error, Result};
