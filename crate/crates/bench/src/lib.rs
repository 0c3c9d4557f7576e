//! Inputs shared by the kernel benches.

use infreg::fixtures;
use infreg::regmod::SamplerConfig;
use infreg::{InfinityWindow, SetValuedMap};

/// Polyhedral fixtures with `ȳ` in their Jelonek set.
pub fn suite() -> Vec<(&'static str, SetValuedMap, Vec<f64>)> {
    vec![
        ("projection", fixtures::coordinate_projection(1.0), vec![0.0]),
        ("piecewise", fixtures::piecewise_three(), vec![0.0]),
        ("chain", fixtures::inverse_like_chain(), vec![0.0]),
        ("diagonal", fixtures::diagonal_scaling(3.0, 0.5), vec![0.0, 0.0]),
    ]
}

pub fn window() -> InfinityWindow {
    InfinityWindow::default()
}

pub fn sampler(samples: usize) -> SamplerConfig {
    SamplerConfig { samples, seed: 1, shells: 6 }
}
