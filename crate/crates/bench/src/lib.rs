//! Fixtures shared by the benchmarks.

use cavity_core::model::{Polarization, ProblemSpec};
use cavity_core::scenarios;

/// Named problems of increasing size, from one empty cavity to three
/// layered ones.
pub fn problems() -> Vec<(&'static str, ProblemSpec)> {
    vec![
        ("example1_tm_n30", scenarios::order_of_accuracy(Polarization::TM)),
        ("example1_te_n30", scenarios::order_of_accuracy(Polarization::TE)),
        ("example4_tm_n40", scenarios::multiple_cavities(Polarization::TM, 40)),
        ("example2_tm_n150", scenarios::radar_cross_section(150, false)),
    ]
}

/// Arguments spread over the series and asymptotic branches of the Bessel
/// routines.
pub fn bessel_arguments() -> Vec<f64> {
    (1..=200).map(|i| 0.05 * i as f64).collect()
}
