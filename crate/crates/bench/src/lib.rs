//! Shared fixtures for the criterion benches.

use metpart::{fixtures, MetricGraph};

/// Graphs used by the spectral benches, smallest first.
pub fn spectral_cases() -> Vec<(&'static str, MetricGraph)> {
    vec![
        ("star3", fixtures::star3()),
        ("pumpkin6", fixtures::pumpkin6()),
        ("pumpkin-H", fixtures::pumpkin_h()),
        ("double-dumbbell", fixtures::double_dumbbell()),
    ]
}
