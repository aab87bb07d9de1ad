//! Alternating optimization over the element phases.

use nalgebra::DVector;

use super::element::{
    element_objective, solve_element_1d, solve_element_aligned, solve_element_discrete, solve_element_quadratic,
};
use super::{composite_matrix, objective, quadratic_terms, ReflectionState, C64};
use crate::channel::ChannelSet;
use crate::error::{invalid, IrsError, Result};
use crate::phase::normalize_in_domain;
use crate::phase_model::PhaseShiftModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementSolver {
    /// Three-point quadratic interpolation over the trust region.
    QuadraticFit,
    /// Dense grid plus golden-section refinement.
    OneDSearch,
    /// Exhaustive search over `2^discrete_bits` levels.
    Discrete,
    /// `theta_n = arg(phi_n)`; optimal only for unit amplitudes.
    PhaseAlignment,
}

impl ElementSolver {
    pub fn name(&self) -> &'static str {
        match self {
            ElementSolver::QuadraticFit => "quadratic",
            ElementSolver::OneDSearch => "1d",
            ElementSolver::Discrete => "discrete",
            ElementSolver::PhaseAlignment => "align",
        }
    }
}

impl std::str::FromStr for ElementSolver {
    type Err = IrsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" | "quadratic_fit" => Ok(Self::QuadraticFit),
            "1d" | "one_d_search" => Ok(Self::OneDSearch),
            "discrete" => Ok(Self::Discrete),
            "align" | "phase_alignment" => Ok(Self::PhaseAlignment),
            other => Err(invalid(format!("unknown element solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoConfig {
    /// Stop once the relative objective change between sweeps drops below this.
    pub tol: f64,
    pub max_outer_iters: usize,
    pub solver: ElementSolver,
    pub grid_points: usize,
    pub discrete_bits: u32,
    /// 1D search over all of `[-pi, pi)` instead of the trust region.
    pub full_circle: bool,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_outer_iters: 100,
            solver: ElementSolver::QuadraticFit,
            grid_points: 1000,
            discrete_bits: 2,
            full_circle: false,
        }
    }
}

impl AoConfig {
    pub fn with_solver(self, solver: ElementSolver) -> Self {
        Self { solver, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        if self.max_outer_iters < 1 {
            return Err(invalid("max_outer_iters must be at least 1"));
        }
        if self.grid_points < 3 {
            return Err(invalid("grid_points must be at least 3"));
        }
        if !(1..=24).contains(&self.discrete_bits) {
            return Err(invalid("discrete_bits must lie in 1..=24"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoOutcome {
    pub state: ReflectionState,
    /// Objective at the initial point followed by one entry per sweep.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl AoOutcome {
    pub fn objective(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial objective")
    }
}

/// One accepted or rejected element update, as seen by an observer.
#[derive(Debug)]
pub struct ElementUpdate<'a> {
    pub sweep: usize,
    pub element: usize,
    pub theta: f64,
    pub accepted: bool,
    pub v: &'a DVector<C64>,
}

pub fn ao_optimize(ch: &ChannelSet, model: &PhaseShiftModel, cfg: &AoConfig, init_thetas: &[f64]) -> Result<AoOutcome> {
    ao_optimize_observed(ch, model, cfg, init_thetas, |_| {})
}

/// [`ao_optimize`] with a callback after every element update.
///
/// Each element takes the solver's phase only if it does not lower the
/// element objective, so the overall objective never decreases.
pub fn ao_optimize_observed<F>(
    ch: &ChannelSet,
    model: &PhaseShiftModel,
    cfg: &AoConfig,
    init_thetas: &[f64],
    mut observe: F,
) -> Result<AoOutcome>
where
    F: FnMut(&ElementUpdate<'_>),
{
    cfg.validate()?;
    let n = ch.elements();
    if init_thetas.len() != n {
        return Err(invalid(format!(
            "expected {n} initial phases, got {}",
            init_thetas.len()
        )));
    }
    let mut thetas = Vec::with_capacity(n);
    for &t in init_thetas {
        thetas.push(normalize_in_domain(t).ok_or(IrsError::PhaseDomain(t))?);
    }
    let mut v = DVector::from_iterator(n, thetas.iter().map(|&t| model.reflection_value_wrapped(t)));

    let qt = quadratic_terms(ch);
    let phi_mat = composite_matrix(ch);
    // running Psi v, updated as single elements change
    let mut psi_v = &qt.psi * &v;

    let mut trace = vec![objective(&v, &phi_mat, &ch.h_d)];
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < cfg.max_outer_iters {
        sweeps += 1;
        for idx in 0..n {
            let psi_nn = qt.psi[(idx, idx)].re;
            let phi_n = (psi_v[idx] - qt.psi[(idx, idx)] * v[idx] + qt.h_hat[idx]) * 2.0;
            let candidate = match cfg.solver {
                ElementSolver::QuadraticFit => solve_element_quadratic(psi_nn, phi_n, model),
                ElementSolver::OneDSearch => solve_element_1d(psi_nn, phi_n, model, cfg.grid_points, cfg.full_circle),
                ElementSolver::Discrete => solve_element_discrete(psi_nn, phi_n, model, cfg.discrete_bits),
                ElementSolver::PhaseAlignment => solve_element_aligned(phi_n),
            };
            let current = element_objective(thetas[idx], psi_nn, phi_n, model);
            let proposed = element_objective(candidate, psi_nn, phi_n, model);
            let accepted = proposed > current;
            if accepted {
                let new_v = model.reflection_value_wrapped(candidate);
                let delta = new_v - v[idx];
                for m in 0..n {
                    psi_v[m] += qt.psi[(m, idx)] * delta;
                }
                v[idx] = new_v;
                thetas[idx] = candidate;
            }
            observe(&ElementUpdate {
                sweep: sweeps,
                element: idx,
                theta: thetas[idx],
                accepted,
                v: &v,
            });
        }
        // refresh to keep rounding drift out of the incremental product
        psi_v = &qt.psi * &v;
        let obj = objective(&v, &phi_mat, &ch.h_d);
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if (obj - prev).abs() <= cfg.tol * prev.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    Ok(AoOutcome {
        state: ReflectionState::from_parts(thetas, v),
        trace,
        sweeps,
        converged,
    })
}

/// Unit-amplitude design: AO with phase alignment under the ideal model,
/// started from all phases at `-pi`.
pub fn ideal_upper_bound(ch: &ChannelSet, cfg: &AoConfig) -> Result<AoOutcome> {
    let init = vec![-std::f64::consts::PI; ch.elements()];
    ao_optimize(
        ch,
        &PhaseShiftModel::ideal(),
        &cfg.with_solver(ElementSolver::PhaseAlignment),
        &init,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::{element_phi, mrt_rate, solve_element_quadratic};
    use crate::channel::{Geometry, PathLossConfig, TrialStreams};
    use std::f64::consts::PI;

    fn channel(trial: u64, n: usize) -> ChannelSet {
        TrialStreams::new(99)
            .sample(trial, &Geometry::default(), &PathLossConfig::default(), 2, n)
            .unwrap()
    }

    #[test]
    fn single_element_matches_direct_solve() {
        let ch = channel(0, 1);
        let model = PhaseShiftModel::practical();
        let out = ao_optimize(&ch, &model, &AoConfig::default(), &[-PI]).unwrap();
        let qt = quadratic_terms(&ch);
        let phi = element_phi(&qt, &DVector::zeros(1), 0).unwrap();
        let direct = solve_element_quadratic(qt.psi[(0, 0)].re, phi, &model);
        let cur = element_objective(-PI, qt.psi[(0, 0)].re, phi, &model);
        let new = element_objective(direct, qt.psi[(0, 0)].re, phi, &model);
        let expect = if new > cur { direct } else { -PI };
        assert_eq!(out.state.thetas()[0], expect);
    }

    #[test]
    fn every_update_is_monotone() {
        let model = PhaseShiftModel::practical();
        for solver in [ElementSolver::QuadraticFit, ElementSolver::OneDSearch, ElementSolver::Discrete] {
            for trial in 0..5 {
                let ch = channel(trial, 12);
                let phi_mat = composite_matrix(&ch);
                let mut last = objective(
                    &DVector::from_element(12, model.reflection_value_wrapped(-PI)),
                    &phi_mat,
                    &ch.h_d,
                );
                let cfg = AoConfig {
                    grid_points: 200,
                    ..AoConfig::default().with_solver(solver)
                };
                let out = ao_optimize_observed(&ch, &model, &cfg, &[-PI; 12], |u| {
                    let now = objective(u.v, &phi_mat, &ch.h_d);
                    assert!(now >= last * (1.0 - 1e-9), "{solver:?}: {now} < {last}");
                    last = now;
                })
                .unwrap();
                assert!(out.trace.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)));
            }
        }
    }

    #[test]
    fn ideal_fixed_point_is_phase_aligned() {
        let ch = channel(3, 16);
        let cfg = AoConfig {
            tol: 1e-13,
            max_outer_iters: 500,
            ..AoConfig::default()
        };
        let out = ideal_upper_bound(&ch, &cfg).unwrap();
        let qt = quadratic_terms(&ch);
        for n in 0..16 {
            let phi = element_phi(&qt, out.state.v(), n).unwrap();
            let diff = crate::phase::wrap_phase(phi.arg() - out.state.thetas()[n]);
            assert!(diff.abs() < 1e-4, "element {n}: {diff}");
        }
    }

    #[test]
    fn ideal_single_element() {
        let ch = channel(4, 1);
        let out = ideal_upper_bound(&ch, &AoConfig::default()).unwrap();
        let qt = quadratic_terms(&ch);
        let want = crate::phase::wrap_phase((qt.h_hat[0] * 2.0).arg());
        assert!((out.state.thetas()[0] - want).abs() < 1e-12);
    }

    #[test]
    fn ideal_design_dominates_practical_design() {
        let model = PhaseShiftModel::practical();
        for trial in 0..20 {
            let ch = channel(trial, 20);
            let ub = ideal_upper_bound(&ch, &AoConfig::default()).unwrap();
            let pr = ao_optimize(&ch, &model, &AoConfig::default(), &[-PI; 20]).unwrap();
            let r1 = mrt_rate(ub.state.v(), &ch, 3.98, 3.98e-13).unwrap();
            let r2 = mrt_rate(pr.state.v(), &ch, 3.98, 3.98e-13).unwrap();
            assert!(r1 >= r2 - 1e-9, "trial {trial}: {r1} < {r2}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let ch = channel(0, 3);
        let m = PhaseShiftModel::practical();
        assert!(ao_optimize(&ch, &m, &AoConfig::default(), &[0.0; 2]).is_err());
        assert!(ao_optimize(&ch, &m, &AoConfig::default(), &[0.0, 0.0, 7.0]).is_err());
        let bad = AoConfig { tol: 0.0, ..AoConfig::default() };
        assert!(ao_optimize(&ch, &m, &bad, &[0.0; 3]).is_err());
        let bad = AoConfig { grid_points: 2, ..AoConfig::default() };
        assert!(ao_optimize(&ch, &m, &bad, &[0.0; 3]).is_err());
    }

    #[test]
    fn solver_names_round_trip() {
        for s in [
            ElementSolver::QuadraticFit,
            ElementSolver::OneDSearch,
            ElementSolver::Discrete,
            ElementSolver::PhaseAlignment,
        ] {
            assert_eq!(s.name().parse::<ElementSolver>().unwrap(), s);
        }
        assert!("nope".parse::<ElementSolver>().is_err());
    }
}
