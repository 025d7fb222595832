//! Random walk on dynamical percolation.
//!
//! The walker moves on a finite graph whose edges independently refresh at rate
//! `mu`, becoming open with probability `p`; it attempts a jump to a uniform
//! neighbour at rate 1 and crosses only open edges. This crate provides the
//! graph builders, an event-driven simulator of the joint process, the
//! infected-edge bookkeeping that produces regeneration times and the
//! auxiliary chain, exact analytics for finite Markov chains, and the
//! comparison experiments built on top of them.

pub mod chain;
pub mod cluster;
pub mod comparison;
pub mod error;
pub mod full;
pub mod graph;
pub mod identities;
pub mod linalg;
pub mod regeneration;
pub mod rng;
pub mod stats;
pub mod union_find;

pub use chain::{srw_chain, ChainKind, ChainSpec};
pub use error::{Error, Result};
pub use graph::{stationary_distribution, EdgeId, Graph, StationaryDist};

/// Formats a float with 12 significant digits, the precision used in every
/// CSV and JSON report.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}
