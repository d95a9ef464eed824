//! Shared fixtures for the hot-path benchmarks: small but representative
//! systems built with the default experimental parameters.

use fsl_core::dynamics::DecayRates;
use fsl_core::hamiltonians::{khz_to_angular, mhz_to_angular};

/// Default coupling amplitude, rad/us.
pub fn default_g() -> f64 {
    mhz_to_angular(0.282)
}

/// Default decay rates, rad/us.
pub fn default_rates() -> DecayRates {
    DecayRates::new(
        khz_to_angular(3.6),
        khz_to_angular(2.0),
        khz_to_angular(3.4),
    )
    .expect("rates are non-negative")
}
