//! Simulator and explicit-state model checker for Dijkstra's K-state
//! self-stabilizing mutual exclusion protocol on a unidirectional ring.
//!
//! * [`protocol`]: configurations, privilege guards, moves, legitimacy.
//! * [`daemon`]: central-daemon runs, strategies, trace replay.
//! * [`checker`]: exhaustive convergence, closure, non-termination and
//!   node-0 liveness checks, worst-case step counts, counterexample lassos.
//! * [`theorem`]: probes for the intermediate steps of the K = N
//!   stabilization argument.
//! * [`cli`]: the `stabring` command-line front end.
//!
//! Throughout, `n` is the highest node index: a ring with `n = 3` has four
//! nodes.

pub mod checker;
pub mod cli;
pub mod daemon;
pub mod error;
pub mod protocol;
pub mod theorem;

pub use error::{Error, Result};
pub use protocol::{Configuration, LegitimacyWitness, NodeId, Params};
