//! Phase-angle helpers shared by every module.
//!
//! All phases in this crate live in the half-open interval `[-pi, pi)`.

use std::f64::consts::{PI, TAU};

/// Wraps any finite angle into `[-pi, pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut w = theta - TAU * ((theta + PI) / TAU).floor();
    // rounding can land exactly on +pi
    if w >= PI {
        w -= TAU;
    }
    if w < -PI {
        w = -PI;
    }
    w
}

/// Accepts `[-pi, pi]`, mapping `pi` itself onto `-pi`. Anything else is `None`.
pub fn normalize_in_domain(theta: f64) -> Option<f64> {
    if !theta.is_finite() || !(-PI..=PI).contains(&theta) {
        return None;
    }
    Some(if theta == PI { -PI } else { theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pi_maps_to_minus_pi() {
        assert_eq!(wrap_phase(PI), -PI);
        assert_eq!(wrap_phase(-PI), -PI);
        assert_eq!(normalize_in_domain(PI), Some(-PI));
        assert_eq!(normalize_in_domain(3.5), None);
        assert_eq!(normalize_in_domain(f64::NAN), None);
    }

    #[test]
    fn wraps_multiples() {
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_phase(-5.0 * PI / 2.0) + PI / 2.0).abs() < 1e-14);
        assert_eq!(wrap_phase(0.0), 0.0);
    }

    proptest! {
        #[test]
        fn wrapped_is_half_open(theta in -1e3f64..1e3) {
            let w = wrap_phase(theta);
            prop_assert!((-PI..PI).contains(&w));
            let k = ((theta - w) / TAU).round();
            prop_assert!((theta - w - k * TAU).abs() < 1e-9);
        }
    }
}
