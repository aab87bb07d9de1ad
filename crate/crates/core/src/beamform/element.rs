//! Single-element subproblem of the alternating optimization.
//!
//! With every other element fixed, element `n` maximizes
//!
//! ```text
//! f(theta) = beta(theta)^2 Psi_nn + beta(theta) |phi_n| cos(arg(phi_n) - theta)
//! ```
//!
//! Under the ideal model the maximizer is `arg(phi_n)`. A phase-dependent
//! amplitude pulls it away from `arg(phi_n)` towards `+pi` (for
//! `arg(phi_n) >= 0`) or `-pi` (otherwise), so the search is confined to
//! that interval.

use std::f64::consts::{PI, TAU};

use super::C64;
use crate::phase::wrap_phase;
use crate::phase_model::{golden_section_min, PhaseShiftModel};

#[inline]
pub fn element_objective(theta: f64, psi_nn: f64, phi_n: C64, model: &PhaseShiftModel) -> f64 {
    let beta = model.amplitude_wrapped(theta);
    let (s, c) = theta.sin_cos();
    beta * beta * psi_nn + beta * (phi_n.re * c + phi_n.im * s)
}

/// `f` at `start + i * step` for `i < count`, stepping `e^{i theta}` by rotation.
fn grid_objective(
    start: f64,
    step: f64,
    count: usize,
    psi_nn: f64,
    phi_n: C64,
    model: &PhaseShiftModel,
    mut visit: impl FnMut(usize, f64),
) {
    const REANCHOR: usize = 64;
    let rot = C64::from_polar(1.0, step);
    let shift = C64::from_polar(1.0, -model.phi);
    let mut z = C64::from_polar(1.0, start);
    for i in 0..count {
        if i % REANCHOR == 0 {
            z = C64::from_polar(1.0, start + step * i as f64);
        }
        let beta = model.amplitude_from_sin((z * shift).im);
        visit(i, beta * beta * psi_nn + beta * (phi_n.re * z.re + phi_n.im * z.im));
        z *= rot;
    }
}

/// Closed interval `[lo, hi]` of phases. `hi` may equal `pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseInterval {
    pub lo: f64,
    pub hi: f64,
}

impl PhaseInterval {
    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lo && theta <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `[arg_phi, pi]` when `arg_phi >= 0`, otherwise `[-pi, arg_phi]`.
pub fn trust_region(arg_phi: f64) -> PhaseInterval {
    let a = wrap_phase(arg_phi);
    if a >= 0.0 {
        PhaseInterval { lo: a, hi: PI }
    } else {
        PhaseInterval { lo: -PI, hi: a }
    }
}

/// Three-point quadratic interpolation over the trust region.
///
/// `f` is sampled at `arg(phi_n)`, at the far end `(-1)^lambda pi` and at
/// their midpoint; the vertex of the interpolating parabola is
///
/// ```text
/// theta = (c (3 f1 - 4 f2 + f3) + a (f1 - 4 f2 + 3 f3)) / (4 (f1 - 2 f2 + f3))
/// ```
///
/// clamped into the region. If the vertex scores below the best sample (a
/// convex fit, or a vertex outside the region) the best sample wins.
pub fn solve_element_quadratic(psi_nn: f64, phi_n: C64, model: &PhaseShiftModel) -> f64 {
    let a = wrap_phase(phi_n.arg());
    let c = if a >= 0.0 { PI } else { -PI };
    let b = 0.5 * (a + c);
    let f = |t: f64| element_objective(t, psi_nn, phi_n, model);
    let (f1, f2, f3) = (f(a), f(b), f(c));

    let mut best = (a, f1);
    for (t, v) in [(b, f2), (c, f3)] {
        if v > best.1 {
            best = (t, v);
        }
    }

    let curvature = f1 - 2.0 * f2 + f3;
    let scale = f1.abs() + f2.abs() + f3.abs();
    if !(curvature.abs() > f64::EPSILON * scale) {
        return wrap_phase(best.0);
    }
    let vertex = (c * (3.0 * f1 - 4.0 * f2 + f3) + a * (f1 - 4.0 * f2 + 3.0 * f3)) / (4.0 * curvature);
    if !vertex.is_finite() {
        return wrap_phase(best.0);
    }
    let region = trust_region(a);
    let vertex = vertex.clamp(region.lo, region.hi);
    if f(vertex) < best.1 {
        wrap_phase(best.0)
    } else {
        wrap_phase(vertex)
    }
}

/// Uniform grid over the trust region (or the whole circle), then one
/// golden-section pass between the neighbours of the best grid point.
pub fn solve_element_1d(psi_nn: f64, phi_n: C64, model: &PhaseShiftModel, grid_points: usize, full_circle: bool) -> f64 {
    let grid_points = grid_points.max(3);
    let f = |t: f64| element_objective(t, psi_nn, phi_n, model);

    let (start, end, step) = if full_circle {
        (-PI, PI, TAU / grid_points as f64)
    } else {
        let r = trust_region(phi_n.arg());
        if r.width() <= 0.0 {
            return wrap_phase(r.lo);
        }
        (r.lo, r.hi, r.width() / (grid_points - 1) as f64)
    };
    let count = grid_points;
    let at = |i: usize| {
        if !full_circle && i + 1 == count {
            end
        } else {
            start + step * i as f64
        }
    };

    let mut best_i = 0;
    let mut best_f = f64::NEG_INFINITY;
    grid_objective(start, step, count - 1, psi_nn, phi_n, model, |i, v| {
        if v > best_f {
            best_f = v;
            best_i = i;
        }
    });
    let last = f(at(count - 1));
    if last > best_f {
        best_i = count - 1;
    }
    best_f = f(at(best_i));
    let center = at(best_i);
    let (lo, hi) = if full_circle {
        (center - step, center + step)
    } else {
        (at(best_i.saturating_sub(1)), at((best_i + 1).min(count - 1)))
    };
    let refined = golden_section_min(|t| -f(t), lo, hi, 1e-12);
    if f(refined) > best_f {
        wrap_phase(refined)
    } else {
        wrap_phase(center)
    }
}

/// Levels of a `bits`-bit phase shifter, `2 pi l / 2^bits` wrapped into `[-pi, pi)`.
pub fn discrete_levels(bits: u32) -> Vec<f64> {
    assert!((1..=24).contains(&bits), "bits must lie in 1..=24, got {bits}");
    let k = 1usize << bits;
    (0..k).map(|l| wrap_phase(TAU * l as f64 / k as f64)).collect()
}

/// Exhaustive search over the `2^bits` levels.
///
/// # Panics
///
/// If `bits` is 0 or above 24.
pub fn solve_element_discrete(psi_nn: f64, phi_n: C64, model: &PhaseShiftModel, bits: u32) -> f64 {
    let mut best = (0.0, f64::NEG_INFINITY);
    for t in discrete_levels(bits) {
        let v = element_objective(t, psi_nn, phi_n, model);
        if v > best.1 {
            best = (t, v);
        }
    }
    best.0
}

/// Phase alignment, the exact optimum under the ideal model.
pub fn solve_element_aligned(phi_n: C64) -> f64 {
    wrap_phase(phi_n.arg())
}
