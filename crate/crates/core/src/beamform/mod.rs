//! Joint transmit / reflect beamforming for one AP, one IRS and one user.
//!
//! For a fixed reflection vector `v` the best transmit beam is MRT along the
//! effective channel `v^H Phi + h_d^H`, so the reflect design reduces to
//! maximizing `||v^H Phi + h_d^H||^2` over the phases. [`ao`] does this one
//! element at a time; [`element`] holds the single-element subproblem and
//! its solvers.

pub mod ao;
pub mod element;

use nalgebra::{Complex, DMatrix, DVector};

use crate::channel::ChannelSet;
use crate::error::{invalid, IrsError, Result};
use crate::phase::normalize_in_domain;
use crate::phase_model::PhaseShiftModel;

pub use ao::{ao_optimize, ao_optimize_observed, ideal_upper_bound, AoConfig, AoOutcome, ElementSolver, ElementUpdate};
pub use element::{
    element_objective, solve_element_1d, solve_element_discrete, solve_element_quadratic, trust_region,
    PhaseInterval,
};

pub type C64 = Complex<f64>;

/// Phases and the matching reflection coefficients `v_n = beta(theta_n) e^{j theta_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionState {
    thetas: Vec<f64>,
    v: DVector<C64>,
}

impl ReflectionState {
    /// `theta = pi` is stored as `-pi`; anything outside `[-pi, pi]` is rejected.
    pub fn new(model: &PhaseShiftModel, thetas: &[f64]) -> Result<Self> {
        let mut t = Vec::with_capacity(thetas.len());
        for &th in thetas {
            t.push(normalize_in_domain(th).ok_or(crate::error::IrsError::PhaseDomain(th))?);
        }
        let v = DVector::from_iterator(t.len(), t.iter().map(|&th| model.reflection_value_wrapped(th)));
        Ok(Self { thetas: t, v })
    }

    pub(crate) fn from_parts(thetas: Vec<f64>, v: DVector<C64>) -> Self {
        Self { thetas, v }
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn v(&self) -> &DVector<C64> {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Same phases under a different amplitude model.
    pub fn remodel(&self, model: &PhaseShiftModel) -> Self {
        let v = DVector::from_iterator(self.len(), self.thetas.iter().map(|&th| model.reflection_value_wrapped(th)));
        Self {
            thetas: self.thetas.clone(),
            v,
        }
    }
}

/// `Phi = diag(h_r^H) G`, i.e. `Phi[n, m] = conj(h_r[n]) G[n, m]`.
pub fn composite_matrix(ch: &ChannelSet) -> DMatrix<C64> {
    let mut phi = ch.g.clone();
    for (n, mut row) in phi.row_iter_mut().enumerate() {
        let c = ch.h_r[n].conj();
        for z in row.iter_mut() {
            *z *= c;
        }
    }
    phi
}

/// Entries `g_m` of the row vector `v^H Phi + h_d^H`.
pub fn effective_channel(v: &DVector<C64>, phi: &DMatrix<C64>, h_d: &DVector<C64>) -> DVector<C64> {
    DVector::from_fn(phi.ncols(), |m, _| {
        let mut acc = h_d[m].conj();
        for n in 0..phi.nrows() {
            acc += v[n].conj() * phi[(n, m)];
        }
        acc
    })
}

/// `||v^H Phi + h_d^H||^2`.
pub fn objective(v: &DVector<C64>, phi: &DMatrix<C64>, h_d: &DVector<C64>) -> f64 {
    effective_channel(v, phi, h_d).norm_squared()
}

pub fn mrt_beamformer(v: &DVector<C64>, phi: &DMatrix<C64>, h_d: &DVector<C64>, p_t: f64) -> Result<DVector<C64>> {
    if !(p_t > 0.0) {
        return Err(invalid(format!("transmit power must be positive, got {p_t}")));
    }
    let g = effective_channel(v, phi, h_d);
    let norm = g.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(IrsError::ZeroChannel);
    }
    let scale = p_t.sqrt() / norm;
    Ok(g.map(|z| z.conj() * scale))
}

/// `log2(1 + |(v^H Phi + h_d^H) w|^2 / sigma2)`.
pub fn achievable_rate(v: &DVector<C64>, w: &DVector<C64>, ch: &ChannelSet, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(invalid(format!("noise power must be positive, got {sigma2}")));
    }
    let g = effective_channel(v, &composite_matrix(ch), &ch.h_d);
    let gain: C64 = g.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
    Ok((1.0 + gain.norm_sqr() / sigma2).log2())
}

/// Rate of reflection vector `v` with its MRT beam: `log2(1 + P_T ||g||^2 / sigma2)`.
pub fn mrt_rate(v: &DVector<C64>, ch: &ChannelSet, p_t: f64, sigma2: f64) -> Result<f64> {
    let phi = composite_matrix(ch);
    let w = mrt_beamformer(v, &phi, &ch.h_d, p_t)?;
    achievable_rate(v, &w, ch, sigma2)
}

/// Direct link only, `w = sqrt(P_T) h_d / ||h_d||`.
pub fn no_irs_rate(ch: &ChannelSet, p_t: f64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(invalid(format!("noise power must be positive, got {sigma2}")));
    }
    let e = ch.h_d.norm_squared();
    if !(e > 0.0) {
        return Err(IrsError::ZeroChannel);
    }
    Ok((1.0 + p_t * e / sigma2).log2())
}

/// Rate of phases designed elsewhere (typically under the ideal model) when
/// the hardware actually follows `model`.
pub fn evaluate_mismatched(thetas: &[f64], model: &PhaseShiftModel, ch: &ChannelSet, p_t: f64, sigma2: f64) -> Result<f64> {
    let state = ReflectionState::new(model, thetas)?;
    mrt_rate(state.v(), ch, p_t, sigma2)
}

/// `Psi = diag(h_r^H) G G^H diag(h_r)` and `h_hat = diag(h_r^H) G h_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTerms {
    pub psi: DMatrix<C64>,
    pub h_hat: DVector<C64>,
}

pub fn quadratic_terms(ch: &ChannelSet) -> QuadraticTerms {
    let phi = composite_matrix(ch);
    let n = phi.nrows();
    let mut psi = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        let diag: f64 = phi.row(i).iter().map(|z| z.norm_sqr()).sum();
        psi[(i, i)] = C64::new(diag, 0.0);
        for j in (i + 1)..n {
            let val: C64 = phi.row(i).iter().zip(phi.row(j).iter()).map(|(a, b)| a * b.conj()).sum();
            psi[(i, j)] = val;
            psi[(j, i)] = val.conj();
        }
    }
    let h_hat = &phi * &ch.h_d;
    QuadraticTerms { psi, h_hat }
}

/// Linear coefficient of element `n` in the expanded objective:
/// `2 (sum_{m != n} Psi[n, m] v_m + h_hat[n])`.
///
/// With it, `||v^H Phi + h_d^H||^2` equals
/// `beta_n^2 Psi[n, n] + beta_n |phi_n| cos(arg phi_n - theta_n)` plus terms
/// that do not involve element `n`.
pub fn element_phi(qt: &QuadraticTerms, v: &DVector<C64>, n: usize) -> Result<C64> {
    let len = qt.h_hat.len();
    if n >= len || v.len() != len {
        return Err(IrsError::IndexOutOfRange { index: n, len });
    }
    let mut acc = qt.h_hat[n];
    for m in 0..len {
        if m != n {
            acc += qt.psi[(n, m)] * v[m];
        }
    }
    Ok(acc * 2.0)
}
