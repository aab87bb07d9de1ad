//! Paired Monte Carlo comparison of the beamforming schemes.
//!
//! Every trial draws one channel realization and runs all configured schemes
//! on it, so differences between schemes are paired. Trials are spread over
//! a rayon pool and gathered in trial order, so results do not depend on the
//! thread count.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::beamform::{
    ao_optimize, evaluate_mismatched, ideal_upper_bound, mrt_rate, no_irs_rate, AoConfig, AoOutcome, ElementSolver,
};
use crate::channel::{ChannelSet, Geometry, LinkTag, PathLossConfig, TrialStreams};
use crate::error::{invalid, IrsError, Result};
use crate::phase_model::PhaseShiftModel;

pub const CSV_HEADER: &str = "sweep_var,sweep_value,scheme,mean_rate_bpshz,stderr,trials,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Unit-amplitude AO design evaluated with unit amplitudes.
    UpperBound,
    /// Practical-model AO, element updates by quadratic interpolation.
    PracticalQuadratic,
    /// Practical-model AO, element updates by 1D search.
    Practical1d,
    /// Unit-amplitude design evaluated on practical hardware.
    IdealMismatched,
    /// Direct link only.
    NoIrs,
    /// Practical-model AO restricted to `b`-bit phases.
    PracticalDiscrete(u32),
    /// Unit-amplitude AO restricted to `b`-bit phases, evaluated on practical hardware.
    IdealDiscrete(u32),
}

impl Scheme {
    /// The five continuous-phase schemes in their usual order.
    pub const BASELINE: [Scheme; 5] = [
        Scheme::UpperBound,
        Scheme::PracticalQuadratic,
        Scheme::Practical1d,
        Scheme::IdealMismatched,
        Scheme::NoIrs,
    ];

    pub fn label(&self) -> String {
        match self {
            Scheme::UpperBound => "upper_bound_ideal_ao".into(),
            Scheme::PracticalQuadratic => "practical_ao_quadratic".into(),
            Scheme::Practical1d => "practical_ao_1d".into(),
            Scheme::IdealMismatched => "ideal_design_practical_eval".into(),
            Scheme::NoIrs => "no_irs".into(),
            Scheme::PracticalDiscrete(b) => format!("practical_discrete_b{b}"),
            Scheme::IdealDiscrete(b) => format!("ideal_discrete_b{b}_practical_eval"),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Scheme {
    type Err = IrsError;

    /// Accepts labels and the numeric shorthands `1`..`5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parsed = match s {
            "1" | "upper_bound_ideal_ao" | "upper_bound" => Some(Scheme::UpperBound),
            "2" | "practical_ao_quadratic" => Some(Scheme::PracticalQuadratic),
            "3" | "practical_ao_1d" => Some(Scheme::Practical1d),
            "4" | "ideal_design_practical_eval" => Some(Scheme::IdealMismatched),
            "5" | "no_irs" => Some(Scheme::NoIrs),
            _ => None,
        };
        if let Some(p) = parsed {
            return Ok(p);
        }
        let bits = |rest: &str| rest.parse::<u32>().ok().filter(|b| (1..=24).contains(b));
        if let Some(b) = s.strip_prefix("practical_discrete_b").and_then(bits) {
            return Ok(Scheme::PracticalDiscrete(b));
        }
        if let Some(b) = s
            .strip_prefix("ideal_discrete_b")
            .and_then(|r| r.strip_suffix("_practical_eval").or(Some(r)))
            .and_then(bits)
        {
            return Ok(Scheme::IdealDiscrete(b));
        }
        Err(invalid(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// AP-user horizontal distances (m).
    Distance(Vec<f64>),
    /// Element counts, at the configured distance.
    Elements(Vec<usize>),
    /// Distances, with every discrete scheme family expanded over `bits`.
    Bits { bits: Vec<u32>, d: Vec<f64> },
}

impl Sweep {
    pub fn var_name(&self) -> &'static str {
        match self {
            Sweep::Distance(_) | Sweep::Bits { .. } => "d",
            Sweep::Elements(_) => "N",
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Sweep::Distance(_) => "d",
            Sweep::Elements(_) => "n",
            Sweep::Bits { .. } => "b",
        }
    }

    fn points(&self) -> Vec<f64> {
        match self {
            Sweep::Distance(d) | Sweep::Bits { d, .. } => d.clone(),
            Sweep::Elements(n) => n.iter().map(|&n| n as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Rate versus AP-user distance, N = 40.
    Fig4,
    /// Rate versus element count at d = 498 m.
    Fig5,
    /// Discrete phase shifters versus distance, N = 40.
    Fig6,
}

impl FromStr for Preset {
    type Err = IrsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig4" => Ok(Preset::Fig4),
            "fig5" => Ok(Preset::Fig5),
            "fig6" => Ok(Preset::Fig6),
            other => Err(invalid(format!("unknown preset '{other}' (fig4|fig5|fig6)"))),
        }
    }
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
        }
    }
}

pub const DEFAULT_DISTANCES: [f64; 7] = [400.0, 425.0, 450.0, 470.0, 485.0, 495.0, 498.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub p_t_dbm: f64,
    pub sigma2_dbm: f64,
    pub trials: usize,
    pub model: PhaseShiftModel,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub sweep: Sweep,
    /// `d` is used whenever the sweep is not over distance.
    pub geometry: Geometry,
    pub path_loss: PathLossConfig,
    pub ao: AoConfig,
    /// Worker threads; `None` uses the machine's parallelism.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 2,
            n: 40,
            p_t_dbm: 36.0,
            sigma2_dbm: -94.0,
            trials: 1000,
            model: PhaseShiftModel::practical(),
            seed: 0,
            schemes: Scheme::BASELINE.to_vec(),
            sweep: Sweep::Distance(DEFAULT_DISTANCES.to_vec()),
            geometry: Geometry::default(),
            path_loss: PathLossConfig::default(),
            ao: AoConfig::default(),
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn preset(p: Preset) -> Self {
        let base = Self::default();
        match p {
            Preset::Fig4 => base,
            Preset::Fig5 => Self {
                sweep: Sweep::Elements((1..=8).map(|i| i * 10).collect()),
                ..base
            },
            Preset::Fig6 => Self {
                schemes: vec![Scheme::Practical1d, Scheme::IdealMismatched],
                sweep: Sweep::Bits {
                    bits: vec![1, 2, 3],
                    d: DEFAULT_DISTANCES.to_vec(),
                },
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.m < 1 || self.n < 1 {
            return Err(invalid("M and N must be at least 1"));
        }
        if self.schemes.is_empty() && !matches!(self.sweep, Sweep::Bits { .. }) {
            return Err(invalid("no schemes selected"));
        }
        match &self.sweep {
            Sweep::Distance(d) | Sweep::Bits { d, .. } if d.is_empty() => {
                return Err(invalid("empty distance sweep"))
            }
            Sweep::Elements(n) if n.is_empty() || n.contains(&0) => {
                return Err(invalid("element sweep must be non-empty and positive"))
            }
            Sweep::Bits { bits, .. } if bits.is_empty() || bits.iter().any(|b| !(1..=24).contains(b)) => {
                return Err(invalid("bits must lie in 1..=24"))
            }
            _ => {}
        }
        self.geometry.validate()?;
        self.path_loss.validate()?;
        self.ao.validate()?;
        if !self.p_t_dbm.is_finite() || !self.sigma2_dbm.is_finite() {
            return Err(invalid("powers must be finite"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be at least 1"));
        }
        Ok(())
    }

    /// Schemes actually run, with discrete families expanded for a bit sweep.
    pub fn expanded_schemes(&self) -> Vec<Scheme> {
        let mut out = self.schemes.clone();
        if let Sweep::Bits { bits, .. } = &self.sweep {
            for &b in bits {
                out.push(Scheme::PracticalDiscrete(b));
            }
            for &b in bits {
                out.push(Scheme::IdealDiscrete(b));
            }
        }
        let mut seen = Vec::new();
        out.retain(|s| {
            if seen.contains(s) {
                false
            } else {
                seen.push(*s);
                true
            }
        });
        out
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Link budget in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Powers {
    pub p_t: f64,
    pub sigma2: f64,
}

impl Powers {
    pub fn from_dbm(p_t_dbm: f64, sigma2_dbm: f64) -> Self {
        Self {
            p_t: dbm_to_watts(p_t_dbm),
            sigma2: dbm_to_watts(sigma2_dbm),
        }
    }
}

/// Each phase is drawn from `{pi, -pi}`, both stored as `-pi`.
pub fn init_phases<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let theta = if rng.random::<bool>() {
                std::f64::consts::PI
            } else {
                -std::f64::consts::PI
            };
            crate::phase::wrap_phase(theta)
        })
        .collect()
}

/// Runs every scheme on one channel realization, sharing designs where schemes reuse them.
pub fn run_schemes(
    schemes: &[Scheme],
    ch: &ChannelSet,
    model: &PhaseShiftModel,
    ao: &AoConfig,
    init: &[f64],
    powers: Powers,
) -> Result<Vec<f64>> {
    let mut ideal: Option<AoOutcome> = None;
    let mut ideal_discrete: HashMap<u32, AoOutcome> = HashMap::new();
    let mut rates = Vec::with_capacity(schemes.len());
    let practical = |solver: ElementSolver, bits: u32| -> Result<f64> {
        let cfg = AoConfig {
            discrete_bits: bits,
            ..ao.with_solver(solver)
        };
        let out = ao_optimize(ch, model, &cfg, init)?;
        mrt_rate(out.state.v(), ch, powers.p_t, powers.sigma2)
    };
    for scheme in schemes {
        let rate = match *scheme {
            Scheme::UpperBound | Scheme::IdealMismatched => {
                if ideal.is_none() {
                    ideal = Some(ideal_upper_bound(ch, ao)?);
                }
                let design = ideal.as_ref().unwrap();
                if *scheme == Scheme::UpperBound {
                    mrt_rate(design.state.v(), ch, powers.p_t, powers.sigma2)?
                } else {
                    evaluate_mismatched(design.state.thetas(), model, ch, powers.p_t, powers.sigma2)?
                }
            }
            Scheme::PracticalQuadratic => practical(ElementSolver::QuadraticFit, ao.discrete_bits)?,
            Scheme::Practical1d => practical(ElementSolver::OneDSearch, ao.discrete_bits)?,
            Scheme::PracticalDiscrete(b) => practical(ElementSolver::Discrete, b)?,
            Scheme::IdealDiscrete(b) => {
                if !ideal_discrete.contains_key(&b) {
                    let cfg = AoConfig {
                        discrete_bits: b,
                        ..ao.with_solver(ElementSolver::Discrete)
                    };
                    let out = ao_optimize(ch, &PhaseShiftModel::ideal(), &cfg, init)?;
                    ideal_discrete.insert(b, out);
                }
                let design = &ideal_discrete[&b];
                evaluate_mismatched(design.state.thetas(), model, ch, powers.p_t, powers.sigma2)?
            }
            Scheme::NoIrs => no_irs_rate(ch, powers.p_t, powers.sigma2)?,
        };
        rates.push(rate);
    }
    Ok(rates)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_var: &'static str,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub sweep_var: &'static str,
    pub points: Vec<f64>,
    pub schemes: Vec<Scheme>,
    /// `rates[point][trial][scheme]`.
    pub rates: Vec<Vec<Vec<f64>>>,
    pub rows: Vec<ResultRow>,
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl ExperimentResult {
    pub fn point_index(&self, value: f64) -> Option<usize> {
        self.points.iter().position(|&p| p == value)
    }

    fn scheme_index(&self, s: Scheme) -> Option<usize> {
        self.schemes.iter().position(|&x| x == s)
    }

    pub fn trial_rates(&self, point: f64, scheme: Scheme) -> Option<Vec<f64>> {
        let p = self.point_index(point)?;
        let s = self.scheme_index(scheme)?;
        Some(self.rates[p].iter().map(|t| t[s]).collect())
    }

    pub fn mean(&self, point: f64, scheme: Scheme) -> Option<f64> {
        self.trial_rates(point, scheme).map(|r| mean_stderr(&r).0)
    }

    /// Mean and standard error of the paired difference `a - b`.
    pub fn paired_difference(&self, point: f64, a: Scheme, b: Scheme) -> Option<(f64, f64)> {
        let ra = self.trial_rates(point, a)?;
        let rb = self.trial_rates(point, b)?;
        let diff: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| x - y).collect();
        Some(mean_stderr(&diff))
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.sweep_var, r.sweep_value, r.scheme, r.mean, r.stderr, r.trials, r.seed
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Line chart of mean rate per scheme against the sweep variable.
    pub fn render_svg(&self) -> String {
        let (w, h, pad) = (720.0, 480.0, 60.0);
        let xs = &self.points;
        let (x0, x1) = bounds(xs.iter().copied());
        let (y0, y1) = bounds(self.rows.iter().map(|r| r.mean));
        let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(f64::MIN_POSITIVE) * (h - 2.0 * pad);
        let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#7f7f7f", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22"];
        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        ));
        s.push_str(&format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"));
        s.push_str(&format!(
            "<path d=\"M{pad} {pad} V{} H{}\" stroke=\"black\" fill=\"none\"/>\n",
            h - pad,
            w - pad
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
            w / 2.0,
            h - 15.0,
            self.sweep_var
        ));
        s.push_str(&format!(
            "<text x=\"15\" y=\"{}\" font-size=\"14\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">rate (bps/Hz)</text>\n",
            h / 2.0,
            h / 2.0
        ));
        for (val, x) in [(x0, sx(x0)), (x1, sx(x1))] {
            s.push_str(&format!(
                "<text x=\"{x}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{val}</text>\n",
                h - pad + 16.0
            ));
        }
        for (val, y) in [(y0, sy(y0)), (y1, sy(y1))] {
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{y}\" font-size=\"11\" text-anchor=\"end\">{val:.3}</text>\n",
                pad - 6.0
            ));
        }
        for (i, scheme) in self.schemes.iter().enumerate() {
            let color = palette[i % palette.len()];
            let pts: Vec<String> = self
                .rows
                .iter()
                .filter(|r| r.scheme == *scheme)
                .map(|r| format!("{:.2},{:.2}", sx(r.sweep_value), sy(r.mean)))
                .collect();
            s.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
                pts.join(" ")
            ));
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{scheme}</text>\n",
                pad + 10.0,
                pad + 14.0 * (i as f64 + 1.0)
            ));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let powers = Powers::from_dbm(cfg.p_t_dbm, cfg.sigma2_dbm);
    let schemes = cfg.expanded_schemes();
    let streams = TrialStreams::new(cfg.seed);
    let points = cfg.sweep.points();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;

    let mut rates = Vec::with_capacity(points.len());
    for &point in &points {
        let (geom, n) = match cfg.sweep {
            Sweep::Elements(_) => (cfg.geometry, point as usize),
            _ => (cfg.geometry.with_d(point), cfg.n),
        };
        let per_trial: Result<Vec<Vec<f64>>> = pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let trial = trial as u64;
                    let ch = streams.sample(trial, &geom, &cfg.path_loss, cfg.m, n)?;
                    let init = init_phases(&mut streams.rng(trial, LinkTag::InitPhases), n);
                    run_schemes(&schemes, &ch, &cfg.model, &cfg.ao, &init, powers)
                })
                .collect()
        });
        rates.push(per_trial?);
    }

    let mut rows = Vec::new();
    for (p, &point) in points.iter().enumerate() {
        for (s, &scheme) in schemes.iter().enumerate() {
            let xs: Vec<f64> = rates[p].iter().map(|t| t[s]).collect();
            let (mean, stderr) = mean_stderr(&xs);
            rows.push(ResultRow {
                sweep_var: cfg.sweep.var_name(),
                sweep_value: point,
                scheme,
                mean,
                stderr,
                trials: cfg.trials,
                seed: cfg.seed,
            });
        }
    }

    Ok(ExperimentResult {
        sweep_var: cfg.sweep.var_name(),
        points,
        schemes,
        rates,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small(schemes: Vec<Scheme>, sweep: Sweep, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            n: 8,
            trials,
            schemes,
            sweep,
            seed: 5,
            threads: Some(2),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(36.0) - 3.981071705534972).abs() < 1e-12);
        assert!((dbm_to_watts(-94.0) / 3.981071705534973e-13 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scheme_labels_parse_back() {
        let all = [
            Scheme::UpperBound,
            Scheme::PracticalQuadratic,
            Scheme::Practical1d,
            Scheme::IdealMismatched,
            Scheme::NoIrs,
            Scheme::PracticalDiscrete(3),
            Scheme::IdealDiscrete(2),
        ];
        for s in all {
            assert_eq!(s.label().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("4".parse::<Scheme>().unwrap(), Scheme::IdealMismatched);
        assert!("practical_discrete_b0".parse::<Scheme>().is_err());
        assert!("six".parse::<Scheme>().is_err());
    }

    #[test]
    fn init_phases_are_max_amplitude_convention() {
        let s = TrialStreams::new(1);
        let a = init_phases(&mut s.rng(0, LinkTag::InitPhases), 50);
        assert!(a.iter().all(|&t| t == -PI));
        assert_eq!(a, init_phases(&mut s.rng(0, LinkTag::InitPhases), 50));
    }

    #[test]
    fn init_amplitude_is_near_but_not_at_the_peak() {
        // beta(-pi) is within 2% of the maximum; the maximum itself sits at phi + pi/2
        let m = PhaseShiftModel::practical();
        let at_init = m.amplitude(-PI).unwrap();
        let peak = (0..100_000)
            .map(|i| m.amplitude(-PI + 2.0 * PI * i as f64 / 100_000.0).unwrap())
            .fold(0.0, f64::max);
        assert!(at_init >= 0.98 * peak);
        assert!(peak - at_init > 0.01);
    }

    #[test]
    fn single_trial_is_deterministic() {
        let cfg = small(vec![Scheme::PracticalQuadratic], Sweep::Distance(vec![498.0]), 1);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.rows.len(), 1);
        assert_eq!(a.rows[0].stderr, 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let mut cfg = small(Scheme::BASELINE.to_vec(), Sweep::Distance(vec![450.0, 498.0]), 12);
        cfg.ao.grid_points = 100;
        let one = run_experiment(&ExperimentConfig { threads: Some(1), ..cfg.clone() }).unwrap();
        let four = run_experiment(&ExperimentConfig { threads: Some(4), ..cfg }).unwrap();
        assert_eq!(one.to_csv_string(), four.to_csv_string());
    }

    #[test]
    fn bit_sweep_expands_schemes() {
        let cfg = small(vec![Scheme::IdealMismatched], Sweep::Bits { bits: vec![1, 2], d: vec![498.0] }, 3);
        assert_eq!(
            cfg.expanded_schemes(),
            vec![
                Scheme::IdealMismatched,
                Scheme::PracticalDiscrete(1),
                Scheme::PracticalDiscrete(2),
                Scheme::IdealDiscrete(1),
                Scheme::IdealDiscrete(2)
            ]
        );
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.rows.len(), 5);
        assert!(r.rows.iter().all(|row| row.sweep_var == "d" && row.mean.is_finite()));
    }

    #[test]
    fn no_irs_matches_large_reference() {
        // self-referential Monte Carlo: 400 trials vs a 100k-trial reference
        let cfg = small(vec![Scheme::NoIrs], Sweep::Distance(vec![498.0]), 400);
        let run = run_experiment(&cfg).unwrap();
        let reference = run_experiment(&ExperimentConfig {
            trials: 100_000,
            seed: 1234,
            ..cfg.clone()
        })
        .unwrap();
        let (m, se) = (run.rows[0].mean, run.rows[0].stderr);
        let r = reference.rows[0].mean;
        assert!((m - r).abs() <= 3.0 * se, "{m} vs {r} (se {se})");
    }

    #[test]
    fn csv_layout() {
        let cfg = small(vec![Scheme::NoIrs, Scheme::UpperBound], Sweep::Elements(vec![4, 6]), 2);
        let csv = run_experiment(&cfg).unwrap().to_csv_string();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("N,4,no_irs,"));
        assert!(lines[4].starts_with("N,6,upper_bound_ideal_ao,"));
        assert!(lines[1].ends_with(",2,5"));
    }

    #[test]
    fn svg_has_one_curve_per_scheme() {
        let cfg = small(vec![Scheme::NoIrs, Scheme::UpperBound], Sweep::Distance(vec![450.0, 498.0]), 2);
        let svg = run_experiment(&cfg).unwrap().render_svg();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn invalid_configs() {
        assert!(run_experiment(&ExperimentConfig { trials: 0, ..Default::default() }).is_err());
        assert!(run_experiment(&small(vec![], Sweep::Distance(vec![498.0]), 1)).is_err());
        assert!(run_experiment(&small(vec![Scheme::NoIrs], Sweep::Elements(vec![0]), 1)).is_err());
        assert!("fig7".parse::<Preset>().is_err());
    }
}
