//! Equivalent-circuit model of a single reflecting element.
//!
//! The element is a bottom-layer inductance `L1` in parallel with a series
//! branch made of the top-layer inductance `L2`, the tunable capacitance `C`
//! and the loss resistance `R`. Its reflection coefficient follows from the
//! impedance mismatch against free space.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{invalid, IrsError, Result};
use crate::phase::wrap_phase;

pub type C64 = Complex<f64>;

/// Below this magnitude (ohms) the parallel-resonance denominator is singular.
pub const RESONANCE_EPSILON: f64 = 1e-9;

/// Free-space impedance used by the reference sweep.
pub const FREE_SPACE_IMPEDANCE: f64 = 377.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Bottom-layer inductance (H).
    pub l1: f64,
    /// Top-layer inductance (H).
    pub l2: f64,
    /// Free-space impedance (ohm).
    pub z0: f64,
    /// Angular frequency (rad/s).
    pub omega: f64,
}

impl CircuitParams {
    pub fn new(l1: f64, l2: f64, z0: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("L1", l1), ("L2", l2), ("Z0", z0), ("omega", omega)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { l1, l2, z0, omega })
    }

    pub fn from_frequency(l1: f64, l2: f64, z0: f64, freq_hz: f64) -> Result<Self> {
        Self::new(l1, l2, z0, 2.0 * PI * freq_hz)
    }

    /// The 2.4 GHz varactor element: L1 = 2.5 nH, L2 = 0.7 nH, Z0 = 377 ohm.
    pub fn reference() -> Self {
        Self {
            l1: 2.5e-9,
            l2: 0.7e-9,
            z0: FREE_SPACE_IMPEDANCE,
            omega: 2.0 * PI * 2.4e9,
        }
    }
}

/// Tunable state of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementState {
    /// Effective capacitance (F).
    pub c: f64,
    /// Effective resistance (ohm).
    pub r: f64,
}

impl ElementState {
    pub fn new(c: f64, r: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("capacitance must be positive, got {c}")));
        }
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid(format!("resistance must be non-negative, got {r}")));
        }
        Ok(Self { c, r })
    }
}

pub fn element_impedance(params: &CircuitParams, state: &ElementState) -> Result<C64> {
    let w = params.omega;
    let shunt = C64::new(0.0, w * params.l1);
    let series = C64::new(state.r, w * params.l2 - 1.0 / (w * state.c));
    let den = shunt + series;
    let magnitude = den.norm();
    if magnitude < RESONANCE_EPSILON {
        return Err(IrsError::DegenerateResonance {
            magnitude,
            epsilon: RESONANCE_EPSILON,
        });
    }
    Ok(shunt * series / den)
}

pub fn reflection_coefficient(params: &CircuitParams, state: &ElementState) -> Result<C64> {
    let z = element_impedance(params, state)?;
    let z0 = C64::new(params.z0, 0.0);
    Ok((z - z0) / (z + z0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub c: f64,
    pub r: f64,
    pub amplitude: f64,
    /// In `[-pi, pi)`.
    pub phase: f64,
}

/// Linear sweep of `C` over `[c_min, c_max]` for each resistance, R-major.
pub fn sweep_reflection(
    params: &CircuitParams,
    c_min: f64,
    c_max: f64,
    n_points: usize,
    r_values: &[f64],
) -> Result<Vec<SweepRow>> {
    if !(c_min > 0.0 && c_min < c_max) {
        return Err(invalid(format!(
            "need 0 < c_min < c_max, got [{c_min}, {c_max}]"
        )));
    }
    if n_points < 2 {
        return Err(invalid("sweep needs at least 2 points"));
    }
    let step = (c_max - c_min) / (n_points - 1) as f64;
    let mut rows = Vec::with_capacity(n_points * r_values.len());
    for &r in r_values {
        for i in 0..n_points {
            let c = if i + 1 == n_points {
                c_max
            } else {
                c_min + step * i as f64
            };
            let v = reflection_coefficient(params, &ElementState::new(c, r)?)?;
            rows.push(SweepRow {
                c,
                r,
                amplitude: v.norm(),
                phase: wrap_phase(v.arg()),
            });
        }
    }
    Ok(rows)
}

/// Largest minus smallest phase in a sweep, as a fraction of a full turn.
pub fn phase_coverage(rows: &[SweepRow]) -> f64 {
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        (lo.min(r.phase), hi.max(r.phase))
    });
    if rows.is_empty() {
        0.0
    } else {
        (hi - lo) / (2.0 * PI)
    }
}
