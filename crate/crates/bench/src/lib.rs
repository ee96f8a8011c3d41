//! Shared inputs for the benchmarks.

use asymenv::environment::{generate_path, EnvironmentPath, SimConfig, StopRule, StreamId};
use asymenv::StabilityIndex;

pub const INDICES: [f64; 3] = [1.2, 1.5, 2.0];

pub fn index(a: f64) -> StabilityIndex {
    StabilityIndex::new(a).expect("benchmark index in (1, 2]")
}

/// One path at step `h`, grown until two level-1 extrema confirm per side.
pub fn fixture_path(a: f64, h: f64) -> EnvironmentPath {
    let cfg = SimConfig {
        h,
        ..SimConfig::new(index(a))
    };
    generate_path(&cfg, &StopRule::default(), StreamId::default()).expect("fixture path")
}

/// Grid values of [`fixture_path`] from the far left to the far right.
pub fn fixture_values(a: f64, h: f64) -> Vec<f64> {
    fixture_path(a, h).combined().0
}
