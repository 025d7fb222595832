//! Criterion benchmarks for the simulator and the exact analytics; see
//! `benches/`. This library holds the fixtures both benchmark files share.

use dynperc_core::full::{build_full_generator, FullParams};
use dynperc_core::{ChainSpec, Graph};

pub const MU: f64 = 0.5;
pub const P: f64 = 0.3;

pub fn params() -> FullParams {
    FullParams::new(MU, P).expect("valid parameters")
}

/// Full-process generator of `g` at the fixture parameters.
pub fn full_chain(g: &Graph) -> ChainSpec {
    build_full_generator(g, params()).expect("small enough for exact analysis")
}
