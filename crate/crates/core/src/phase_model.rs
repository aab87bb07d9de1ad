//! Phase-dependent reflection amplitude.
//!
//! A practical element cannot reflect at unit amplitude for every phase
//! shift. The model used here is
//!
//! ```text
//! beta(theta) = (1 - beta_min) * ((sin(theta - phi) + 1) / 2)^k + beta_min
//! ```
//!
//! which dips to `beta_min` at `theta = phi - pi/2` and reaches one at
//! `theta = phi + pi/2`. `k = 0` recovers the ideal unit-amplitude element.
//! All elements of a surface share one model.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{invalid, IrsError, Result};
use crate::phase::{normalize_in_domain, wrap_phase};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShiftModel {
    pub beta_min: f64,
    pub phi: f64,
    pub k: f64,
}

impl PhaseShiftModel {
    pub fn new(beta_min: f64, phi: f64, k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta_min) {
            return Err(invalid(format!("beta_min must lie in [0, 1], got {beta_min}")));
        }
        if !(phi.is_finite() && phi >= 0.0) {
            return Err(invalid(format!("phi must be >= 0, got {phi}")));
        }
        if !(k.is_finite() && k >= 0.0) {
            return Err(invalid(format!("k must be >= 0, got {k}")));
        }
        Ok(Self { beta_min, phi, k })
    }

    /// beta_min = 0.2, phi = 0.43 pi, k = 1.6.
    pub fn practical() -> Self {
        Self {
            beta_min: 0.2,
            phi: 0.43 * PI,
            k: 1.6,
        }
    }

    /// Unit amplitude at every phase.
    pub fn ideal() -> Self {
        Self {
            beta_min: 1.0,
            phi: 0.0,
            k: 0.0,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.k == 0.0 || self.beta_min == 1.0
    }

    /// Amplitude at `theta`, which must lie in `[-pi, pi]` (`pi` is read as `-pi`).
    pub fn amplitude(&self, theta: f64) -> Result<f64> {
        let t = normalize_in_domain(theta).ok_or(IrsError::PhaseDomain(theta))?;
        Ok(self.raw(t))
    }

    /// Amplitude at any real angle, wrapped into `[-pi, pi)` first.
    pub fn amplitude_wrapped(&self, theta: f64) -> f64 {
        self.raw(wrap_phase(theta))
    }

    #[inline]
    fn raw(&self, theta: f64) -> f64 {
        if self.k == 0.0 {
            return 1.0;
        }
        self.amplitude_from_sin((theta - self.phi).sin())
    }

    /// Amplitude given `sin(theta - phi)` directly.
    #[inline]
    pub(crate) fn amplitude_from_sin(&self, sin_offset: f64) -> f64 {
        if self.k == 0.0 {
            return 1.0;
        }
        let s = ((sin_offset + 1.0) * 0.5).clamp(0.0, 1.0);
        (1.0 - self.beta_min) * s.powf(self.k) + self.beta_min
    }

    pub fn reflection_value(&self, theta: f64) -> Result<Complex<f64>> {
        let t = normalize_in_domain(theta).ok_or(IrsError::PhaseDomain(theta))?;
        Ok(Complex::from_polar(self.raw(t), t))
    }

    pub fn reflection_value_wrapped(&self, theta: f64) -> Complex<f64> {
        let t = wrap_phase(theta);
        Complex::from_polar(self.raw(t), t)
    }
}

/// Result of fitting a [`PhaseShiftModel`] to amplitude-vs-phase samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelFit {
    pub model: PhaseShiftModel,
    pub rmse: f64,
}

const BETA_STEPS: usize = 100;
const PHI_STEPS: usize = 100;
const K_MAX: f64 = 5.0;
const K_STEPS: usize = 100;
const REFINE_ROUNDS: usize = 3;

/// Least-squares fit of `(beta_min, phi, k)` to `(theta, beta)` samples.
///
/// An exhaustive grid (beta_min step 0.01, phi step 0.01 pi, k step 0.05)
/// seeds three rounds of per-coordinate golden-section refinement. The
/// search never fails once the inputs are valid; a poor fit shows up in
/// the returned RMSE.
pub fn fit(samples: &[(f64, f64)]) -> Result<ModelFit> {
    if samples.len() < 10 {
        return Err(IrsError::InsufficientSamples(format!(
            "need at least 10 samples, got {}",
            samples.len()
        )));
    }
    let mut thetas = Vec::with_capacity(samples.len());
    for &(t, b) in samples {
        if !t.is_finite() || !b.is_finite() {
            return Err(invalid("non-finite sample"));
        }
        thetas.push(wrap_phase(t));
    }
    let lo = thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < PI {
        return Err(IrsError::InsufficientSamples(format!(
            "samples span {:.4} rad of phase, need at least pi",
            hi - lo
        )));
    }
    let betas: Vec<f64> = samples.iter().map(|s| s.1).collect();

    let sse = |m: &PhaseShiftModel| -> f64 {
        thetas
            .iter()
            .zip(&betas)
            .map(|(&t, &b)| {
                let e = m.raw(t) - b;
                e * e
            })
            .sum()
    };

    // For fixed (phi, k) the model is affine in beta_min, so the SSE over the
    // beta_min grid is a quadratic whose three coefficients take one pass.
    let mut best = (f64::INFINITY, PhaseShiftModel::ideal());
    let mut shape = vec![0.0; thetas.len()];
    for pi_idx in 0..=PHI_STEPS {
        let phi = PI * pi_idx as f64 / PHI_STEPS as f64;
        for k_idx in 0..=K_STEPS {
            let k = K_MAX * k_idx as f64 / K_STEPS as f64;
            for (s, &t) in shape.iter_mut().zip(&thetas) {
                *s = if k == 0.0 {
                    1.0
                } else {
                    (((t - phi).sin() + 1.0) * 0.5).clamp(0.0, 1.0).powf(k)
                };
            }
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for (&s, &y) in shape.iter().zip(&betas) {
                let r = s - y;
                let u = 1.0 - s;
                a += r * r;
                b += r * u;
                c += u * u;
            }
            for b_idx in 0..=BETA_STEPS {
                let bm = b_idx as f64 / BETA_STEPS as f64;
                let val = a + 2.0 * bm * b + bm * bm * c;
                if val < best.0 {
                    best = (
                        val,
                        PhaseShiftModel {
                            beta_min: bm,
                            phi,
                            k,
                        },
                    );
                }
            }
        }
    }

    let mut model = best.1;
    let mut cur = sse(&model);
    let widths = [1.0 / BETA_STEPS as f64, PI / PHI_STEPS as f64, K_MAX / K_STEPS as f64];
    let bounds = [(0.0, 1.0), (0.0, PI), (0.0, K_MAX)];
    for _ in 0..REFINE_ROUNDS {
        for coord in 0..3 {
            let get = |m: &PhaseShiftModel| match coord {
                0 => m.beta_min,
                1 => m.phi,
                _ => m.k,
            };
            let with = |m: PhaseShiftModel, x: f64| {
                let mut m = m;
                match coord {
                    0 => m.beta_min = x,
                    1 => m.phi = x,
                    _ => m.k = x,
                }
                m
            };
            let x0 = get(&model);
            let a = (x0 - widths[coord]).max(bounds[coord].0);
            let b = (x0 + widths[coord]).min(bounds[coord].1);
            let x = golden_section_min(|x| sse(&with(model, x)), a, b, 1e-12);
            let cand = with(model, x);
            let val = sse(&cand);
            if val < cur {
                model = cand;
                cur = val;
            }
        }
    }

    Ok(ModelFit {
        model,
        rmse: (cur / thetas.len() as f64).sqrt(),
    })
}

pub(crate) const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimizer on `[a, b]`.
pub(crate) fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ideal_is_flat() {
        let m = PhaseShiftModel::new(0.3, 1.0, 0.0).unwrap();
        for i in 0..50 {
            let t = -PI + 2.0 * PI * i as f64 / 50.0;
            assert_eq!(m.amplitude(t).unwrap(), 1.0);
        }
    }

    #[test]
    fn extremes_at_quarter_turns() {
        let m = PhaseShiftModel::new(0.2, 0.43 * PI, 1.6).unwrap();
        assert!((m.amplitude(m.phi - PI / 2.0).unwrap() - 0.2).abs() < 1e-15);
        assert!((m.amplitude(wrap_phase(m.phi + PI / 2.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frozen_scalar_values() {
        // direct scalar evaluation in an independent calculator
        let m = PhaseShiftModel::practical();
        assert!((m.amplitude(0.0).unwrap() - 0.20067949427156972).abs() < 1e-14);
        assert!((m.amplitude(-PI).unwrap() - 0.9846424976432342).abs() < 1e-14);
    }

    #[test]
    fn pi_is_read_as_minus_pi() {
        let m = PhaseShiftModel::practical();
        assert_eq!(m.amplitude(PI).unwrap(), m.amplitude(-PI).unwrap());
        let v = m.reflection_value(PI).unwrap();
        assert!((v.norm() - m.amplitude(-PI).unwrap()).abs() < 1e-15);
        assert!(m.amplitude(3.2).is_err());
        assert!(m.reflection_value(-3.2).is_err());
    }

    #[test]
    fn reflection_value_ideal_origin() {
        let v = PhaseShiftModel::ideal().reflection_value(0.0).unwrap();
        assert_eq!(v, Complex::new(1.0, 0.0));
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(PhaseShiftModel::new(1.2, 0.0, 1.0).is_err());
        assert!(PhaseShiftModel::new(0.2, -0.1, 1.0).is_err());
        assert!(PhaseShiftModel::new(0.2, 0.1, -1.0).is_err());
    }

    fn samples_from(m: &PhaseShiftModel, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = -PI + 2.0 * PI * i as f64 / n as f64;
                (t, m.amplitude(t).unwrap())
            })
            .collect()
    }

    #[test]
    fn fit_recovers_known_model() {
        let truth = PhaseShiftModel::practical();
        let f = fit(&samples_from(&truth, 120)).unwrap();
        assert!((f.model.beta_min - truth.beta_min).abs() < 0.02, "{f:?}");
        assert!((f.model.phi - truth.phi).abs() < 0.02, "{f:?}");
        assert!((f.model.k - truth.k).abs() < 0.02, "{f:?}");
        assert!(f.rmse < 1e-3);
    }

    #[test]
    fn fit_constant_unit_amplitude() {
        let s: Vec<_> = (0..20).map(|i| (-PI + 0.3 * i as f64, 1.0)).collect();
        let f = fit(&s).unwrap();
        assert!(f.model.k == 0.0 || f.model.beta_min == 1.0, "{f:?}");
        assert!(f.rmse < 1e-12);
    }

    #[test]
    fn fit_is_idempotent() {
        let truth = PhaseShiftModel::new(0.35, 0.3 * PI, 2.2).unwrap();
        let first = fit(&samples_from(&truth, 90)).unwrap();
        let second = fit(&samples_from(&first.model, 90)).unwrap();
        assert!((first.model.beta_min - second.model.beta_min).abs() <= 0.01);
        assert!((first.model.phi - second.model.phi).abs() <= 0.01 * PI);
        assert!((first.model.k - second.model.k).abs() <= 0.05);
    }

    #[test]
    fn fit_rejects_thin_data() {
        let s: Vec<_> = (0..9).map(|i| (i as f64 * 0.5 - 2.0, 0.5)).collect();
        assert!(matches!(fit(&s), Err(IrsError::InsufficientSamples(_))));
        let narrow: Vec<_> = (0..30).map(|i| (i as f64 * 0.05, 0.5)).collect();
        assert!(matches!(fit(&narrow), Err(IrsError::InsufficientSamples(_))));
    }

    proptest! {
        #[test]
        fn amplitude_bounded(bm in 0.0f64..=1.0, phi in 0.0f64..(2.0 * PI), k in 0.0f64..6.0, t in -PI..PI) {
            let m = PhaseShiftModel::new(bm, phi, k).unwrap();
            let a = m.amplitude(t).unwrap();
            prop_assert!(a >= bm - 1e-15 && a <= 1.0 + 1e-15);
        }

        #[test]
        fn wrapping_is_consistent(t in -50.0f64..50.0) {
            let m = PhaseShiftModel::practical();
            prop_assert_eq!(m.amplitude_wrapped(t), m.amplitude(wrap_phase(t)).unwrap());
        }

        #[test]
        fn reflection_modulus_and_argument(t in -PI..PI) {
            let m = PhaseShiftModel::practical();
            let v = m.reflection_value(t).unwrap();
            prop_assert!((v.norm() - m.amplitude(t).unwrap()).abs() < 1e-14);
            prop_assert!((wrap_phase(v.arg() - t)).abs() < 1e-12);
        }
    }
}
