use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::{join, list, num, render_manifest, Settings};
use super::CliError;
use crate::beamform::{ao_optimize, evaluate_mismatched, mrt_rate, no_irs_rate, AoConfig, ElementSolver};
use crate::channel::{ChannelSet, Geometry, LinkTag, PathLossConfig, TrialStreams};
use crate::circuit::{phase_coverage, sweep_reflection, CircuitParams};
use crate::experiments::{init_phases, run_experiment, ExperimentConfig, Powers, Preset, Scheme, Sweep};
use crate::phase_model::{fit, PhaseShiftModel};

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// Writes each output and its manifest.
fn emit<S: Settings>(subcommand: &str, settings: &S, outputs: &[(&Path, Vec<u8>)]) -> Result<(), CliError> {
    let manifest = render_manifest(subcommand, &settings.pairs());
    for (path, bytes) in outputs {
        write_file(path, bytes)?;
        write_file(&manifest_path(path), manifest.as_bytes())?;
    }
    Ok(())
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got '{v}'")),
    }
}

fn opt_path(v: &str) -> Option<PathBuf> {
    if v.is_empty() || v == "none" {
        None
    } else {
        Some(PathBuf::from(v))
    }
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string())
}

/// Model, geometry, path loss, link budget and AO settings shared by `optimize` and `experiment`.
#[derive(Debug, Clone)]
pub(crate) struct System {
    pub m: usize,
    pub n: usize,
    pub p_t_dbm: f64,
    pub sigma2_dbm: f64,
    pub model: PhaseShiftModel,
    pub geometry: Geometry,
    pub path_loss: PathLossConfig,
    pub ao: AoConfig,
    pub seed: u64,
}

impl System {
    fn from_experiment(cfg: &ExperimentConfig) -> Self {
        Self {
            m: cfg.m,
            n: cfg.n,
            p_t_dbm: cfg.p_t_dbm,
            sigma2_dbm: cfg.sigma2_dbm,
            model: cfg.model,
            geometry: cfg.geometry,
            path_loss: cfg.path_loss,
            ao: cfg.ao,
            seed: cfg.seed,
        }
    }

    fn set(&mut self, key: &str, v: &str) -> Option<Result<(), String>> {
        let r = match key {
            "m" => num(key, v).map(|x| self.m = x),
            "n" => num(key, v).map(|x| self.n = x),
            "p_t_dbm" => num(key, v).map(|x| self.p_t_dbm = x),
            "sigma2_dbm" => num(key, v).map(|x| self.sigma2_dbm = x),
            "beta_min" => num(key, v).map(|x| self.model.beta_min = x),
            "phi" => num(key, v).map(|x| self.model.phi = x),
            "k" => num(key, v).map(|x| self.model.k = x),
            "d" => num(key, v).map(|x| self.geometry.d = x),
            "ap_irs_distance" => num(key, v).map(|x| self.geometry.ap_irs_distance = x),
            "vertical_offset" => num(key, v).map(|x| self.geometry.vertical_offset = x),
            "ref_loss_db" => num(key, v).map(|x| self.path_loss.ref_loss_db = x),
            "exp_ap_irs" => num(key, v).map(|x| self.path_loss.exp_ap_irs = x),
            "exp_irs_user" => num(key, v).map(|x| self.path_loss.exp_irs_user = x),
            "exp_ap_user" => num(key, v).map(|x| self.path_loss.exp_ap_user = x),
            "tol" => num(key, v).map(|x| self.ao.tol = x),
            "max_outer_iters" => num(key, v).map(|x| self.ao.max_outer_iters = x),
            "grid_points" => num(key, v).map(|x| self.ao.grid_points = x),
            "discrete_bits" => num(key, v).map(|x| self.ao.discrete_bits = x),
            "full_circle" => parse_bool(key, v).map(|x| self.ao.full_circle = x),
            "seed" => num(key, v).map(|x| self.seed = x),
            _ => return None,
        };
        Some(r)
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("m", self.m.to_string()),
            ("n", self.n.to_string()),
            ("p_t_dbm", self.p_t_dbm.to_string()),
            ("sigma2_dbm", self.sigma2_dbm.to_string()),
            ("beta_min", self.model.beta_min.to_string()),
            ("phi", self.model.phi.to_string()),
            ("k", self.model.k.to_string()),
            ("d", self.geometry.d.to_string()),
            ("ap_irs_distance", self.geometry.ap_irs_distance.to_string()),
            ("vertical_offset", self.geometry.vertical_offset.to_string()),
            ("ref_loss_db", self.path_loss.ref_loss_db.to_string()),
            ("exp_ap_irs", self.path_loss.exp_ap_irs.to_string()),
            ("exp_irs_user", self.path_loss.exp_irs_user.to_string()),
            ("exp_ap_user", self.path_loss.exp_ap_user.to_string()),
            ("tol", self.ao.tol.to_string()),
            ("max_outer_iters", self.ao.max_outer_iters.to_string()),
            ("grid_points", self.ao.grid_points.to_string()),
            ("discrete_bits", self.ao.discrete_bits.to_string()),
            ("full_circle", self.ao.full_circle.to_string()),
        ]
    }

    fn model(&self) -> crate::Result<PhaseShiftModel> {
        PhaseShiftModel::new(self.model.beta_min, self.model.phi, self.model.k)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SweepSettings {
    pub l1: f64,
    pub l2: f64,
    pub z0: f64,
    pub freq: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub points: usize,
    pub r_values: Vec<f64>,
    pub out: PathBuf,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            l1: 2.5e-9,
            l2: 0.7e-9,
            z0: 377.0,
            freq: 2.4e9,
            c_min: 0.47e-12,
            c_max: 2.35e-12,
            points: 1000,
            r_values: vec![2.5],
            out: PathBuf::from("circuit_sweep.csv"),
        }
    }
}

impl Settings for SweepSettings {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "l1" => self.l1 = num(key, v)?,
            "l2" => self.l2 = num(key, v)?,
            "z0" => self.z0 = num(key, v)?,
            "freq" => self.freq = num(key, v)?,
            "c_min" => self.c_min = num(key, v)?,
            "c_max" => self.c_max = num(key, v)?,
            "points" => self.points = num(key, v)?,
            "r_values" => self.r_values = list(key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(format!("unknown key '{key}' for circuit-sweep")),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("l1", self.l1.to_string()),
            ("l2", self.l2.to_string()),
            ("z0", self.z0.to_string()),
            ("freq", self.freq.to_string()),
            ("c_min", self.c_min.to_string()),
            ("c_max", self.c_max.to_string()),
            ("points", self.points.to_string()),
            ("r_values", join(&self.r_values)),
            ("out", self.out.display().to_string()),
        ]
    }
}

pub(crate) fn circuit_sweep(s: &SweepSettings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = CircuitParams::from_frequency(s.l1, s.l2, s.z0, s.freq)?;
    let rows = sweep_reflection(&params, s.c_min, s.c_max, s.points, &s.r_values)?;
    let mut csv = String::from("c,r,amplitude,phase\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.c, r.r, r.amplitude, r.phase));
    }
    emit("circuit-sweep", s, &[(&s.out, csv.into_bytes())])?;
    writeln!(
        stdout,
        "wrote {} rows to {} (phase coverage {:.4} of 2pi)",
        rows.len(),
        s.out.display(),
        phase_coverage(&rows)
    )
    .map_err(CliError::stdout)
}

#[derive(Debug, Clone)]
pub(crate) struct FitSettings {
    pub input: Option<PathBuf>,
    /// Only rows with this resistance; `None` uses every row.
    pub r: Option<f64>,
    pub out: PathBuf,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            input: None,
            r: None,
            out: PathBuf::from("model.conf"),
        }
    }
}

impl Settings for FitSettings {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "input" => self.input = opt_path(v),
            "r" => self.r = if v == "all" { None } else { Some(num(key, v)?) },
            "out" => self.out = PathBuf::from(v),
            _ => return Err(format!("unknown key '{key}' for fit-model")),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("input", show_path(&self.input)),
            ("r", self.r.map_or_else(|| "all".to_string(), |r| r.to_string())),
            ("out", self.out.display().to_string()),
        ]
    }
}

/// Reads `(phase, amplitude)` pairs from a `c,r,amplitude,phase` CSV.
fn read_sweep_csv(path: &Path, r_filter: Option<f64>) -> Result<Vec<(f64, f64)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| CliError::Run(crate::error::invalid(format!("{}: missing column '{name}'", path.display()))))
    };
    let (ci_r, ci_a, ci_p) = (col("r")?, col("amplitude")?, col("phase")?);
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        let get = |c: usize| -> Result<f64, CliError> {
            cells
                .get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Run(crate::error::invalid(format!("{}: bad row {}", path.display(), i + 2))))
        };
        if r_filter.is_some_and(|r| get(ci_r).is_ok_and(|x| x != r)) {
            continue;
        }
        out.push((get(ci_p)?, get(ci_a)?));
    }
    Ok(out)
}

pub(crate) fn fit_model(s: &FitSettings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let samples = match &s.input {
        Some(p) => read_sweep_csv(p, s.r)?,
        None => {
            let d = SweepSettings::default();
            let params = CircuitParams::from_frequency(d.l1, d.l2, d.z0, d.freq)?;
            sweep_reflection(&params, d.c_min, d.c_max, d.points, &[s.r.unwrap_or(2.5)])?
                .iter()
                .map(|r| (r.phase, r.amplitude))
                .collect()
        }
    };
    let f = fit(&samples)?;
    let body = format!(
        "# rmse = {}\nbeta_min = {}\nphi = {}\nk = {}\n",
        f.rmse, f.model.beta_min, f.model.phi, f.model.k
    );
    emit("fit-model", s, &[(&s.out, body.clone().into_bytes())])?;
    write!(stdout, "{body}").map_err(CliError::stdout)
}

#[derive(Debug, Clone)]
pub(crate) struct OptimizeSettings {
    pub system: System,
    pub trial: u64,
    pub scheme: Scheme,
    /// Overrides the scheme's element solver.
    pub solver: Option<ElementSolver>,
    pub out: PathBuf,
    pub dump_channels: Option<PathBuf>,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        Self {
            system: System::from_experiment(&ExperimentConfig::default()),
            trial: 0,
            scheme: Scheme::PracticalQuadratic,
            solver: None,
            out: PathBuf::from("optimize.csv"),
            dump_channels: None,
        }
    }
}

impl Settings for OptimizeSettings {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        if let Some(r) = self.system.set(key, v) {
            return r;
        }
        match key {
            "trial" => self.trial = num(key, v)?,
            "scheme" => self.scheme = v.parse().map_err(|e: crate::IrsError| e.to_string())?,
            "solver" => {
                self.solver = if v == "auto" {
                    None
                } else {
                    Some(v.parse().map_err(|e: crate::IrsError| e.to_string())?)
                }
            }
            "out" => self.out = PathBuf::from(v),
            "dump_channels" => self.dump_channels = opt_path(v),
            _ => return Err(format!("unknown key '{key}' for optimize")),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut p = self.system.pairs();
        p.extend([
            ("trial", self.trial.to_string()),
            ("scheme", self.scheme.label()),
            ("solver", self.solver.map_or("auto", |s| s.name()).to_string()),
            ("out", self.out.display().to_string()),
            ("dump_channels", show_path(&self.dump_channels)),
        ]);
        p
    }
}

/// Design model, element solver and phase-shifter bits a scheme optimizes with.
fn scheme_design(scheme: Scheme, practical: PhaseShiftModel, bits: u32) -> Option<(PhaseShiftModel, ElementSolver, u32)> {
    let ideal = PhaseShiftModel::ideal();
    match scheme {
        Scheme::UpperBound | Scheme::IdealMismatched => Some((ideal, ElementSolver::PhaseAlignment, bits)),
        Scheme::PracticalQuadratic => Some((practical, ElementSolver::QuadraticFit, bits)),
        Scheme::Practical1d => Some((practical, ElementSolver::OneDSearch, bits)),
        Scheme::PracticalDiscrete(b) => Some((practical, ElementSolver::Discrete, b)),
        Scheme::IdealDiscrete(b) => Some((ideal, ElementSolver::Discrete, b)),
        Scheme::NoIrs => None,
    }
}

pub(crate) fn optimize(s: &OptimizeSettings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let sys = &s.system;
    let model = sys.model()?;
    sys.ao.validate()?;
    sys.geometry.validate()?;
    sys.path_loss.validate()?;
    if sys.m == 0 || sys.n == 0 {
        return Err(crate::error::invalid("m and n must be at least 1").into());
    }
    let streams = TrialStreams::new(sys.seed);
    let ch: ChannelSet = streams.sample(s.trial, &sys.geometry, &sys.path_loss, sys.m, sys.n)?;
    let init = init_phases(&mut streams.rng(s.trial, LinkTag::InitPhases), sys.n);
    let powers = Powers::from_dbm(sys.p_t_dbm, sys.sigma2_dbm);

    let mut csv = String::from("element,theta,amplitude\n");
    let (rate, outcome) = match scheme_design(s.scheme, model, sys.ao.discrete_bits) {
        None => (no_irs_rate(&ch, powers.p_t, powers.sigma2)?, None),
        Some((design, solver, bits)) => {
            let ao = AoConfig {
                discrete_bits: bits,
                ..sys.ao.with_solver(s.solver.unwrap_or(solver))
            };
            ao.validate()?;
            let outcome = ao_optimize(&ch, &design, &ao, &init)?;
            let rate = if design.is_ideal() && s.scheme != Scheme::UpperBound {
                evaluate_mismatched(outcome.state.thetas(), &model, &ch, powers.p_t, powers.sigma2)?
            } else {
                mrt_rate(outcome.state.v(), &ch, powers.p_t, powers.sigma2)?
            };
            let evaluated = if s.scheme == Scheme::UpperBound {
                outcome.state.clone()
            } else {
                outcome.state.remodel(&model)
            };
            for (i, (&t, v)) in evaluated.thetas().iter().zip(evaluated.v().iter()).enumerate() {
                csv.push_str(&format!("{i},{t},{}\n", v.norm()));
            }
            (rate, Some(outcome))
        }
    };

    let mut outputs = vec![(s.out.as_path(), csv.into_bytes())];
    if let Some(p) = &s.dump_channels {
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        outputs.push((p.as_path(), buf));
    }
    emit("optimize", s, &outputs)?;

    let mut report = format!("# scheme = {}\n# rate_bpshz = {rate}\n", s.scheme);
    if let Some(o) = &outcome {
        report.push_str(&format!("# sweeps = {}\n# converged = {}\nsweep,objective\n", o.sweeps, o.converged));
        for (i, v) in o.trace.iter().enumerate() {
            report.push_str(&format!("{i},{v}\n"));
        }
    }
    write!(stdout, "{report}").map_err(CliError::stdout)
}

#[derive(Debug, Clone)]
pub(crate) struct ExperimentSettings {
    pub preset: Option<Preset>,
    pub system: System,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub sweep: String,
    pub sweep_values: Vec<f64>,
    pub bits: Vec<u32>,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub plot: Option<PathBuf>,
}

impl ExperimentSettings {
    pub fn new(preset: Option<Preset>) -> Self {
        let cfg = preset.map_or_else(ExperimentConfig::default, ExperimentConfig::preset);
        let (sweep_values, bits) = match &cfg.sweep {
            Sweep::Distance(d) => (d.clone(), vec![1, 2, 3]),
            Sweep::Elements(n) => (n.iter().map(|&n| n as f64).collect(), vec![1, 2, 3]),
            Sweep::Bits { bits, d } => (d.clone(), bits.clone()),
        };
        Self {
            preset,
            system: System::from_experiment(&cfg),
            trials: cfg.trials,
            schemes: cfg.schemes.clone(),
            sweep: cfg.sweep.kind().to_string(),
            sweep_values,
            bits,
            threads: cfg.threads,
            out: PathBuf::from("results.csv"),
            plot: None,
        }
    }

    pub fn build(&self) -> crate::Result<ExperimentConfig> {
        let sweep = match self.sweep.as_str() {
            "d" => Sweep::Distance(self.sweep_values.clone()),
            "b" => Sweep::Bits {
                bits: self.bits.clone(),
                d: self.sweep_values.clone(),
            },
            "n" => Sweep::Elements(
                self.sweep_values
                    .iter()
                    .map(|&x| {
                        if x >= 1.0 && x.fract() == 0.0 {
                            Ok(x as usize)
                        } else {
                            Err(crate::error::invalid(format!("element count {x} is not a positive integer")))
                        }
                    })
                    .collect::<crate::Result<_>>()?,
            ),
            other => return Err(crate::error::invalid(format!("sweep must be d, n or b, got '{other}'"))),
        };
        let sys = &self.system;
        let cfg = ExperimentConfig {
            m: sys.m,
            n: sys.n,
            p_t_dbm: sys.p_t_dbm,
            sigma2_dbm: sys.sigma2_dbm,
            trials: self.trials,
            model: sys.model()?,
            seed: sys.seed,
            schemes: self.schemes.clone(),
            sweep,
            geometry: sys.geometry,
            path_loss: sys.path_loss,
            ao: sys.ao,
            threads: self.threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Settings for ExperimentSettings {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        if let Some(r) = self.system.set(key, v) {
            return r;
        }
        match key {
            "trials" => self.trials = num(key, v)?,
            "schemes" => {
                self.schemes = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse().map_err(|e: crate::IrsError| e.to_string()))
                    .collect::<Result<_, _>>()?
            }
            "sweep" => self.sweep = v.to_string(),
            "sweep_values" => self.sweep_values = list(key, v)?,
            "bits" => self.bits = list(key, v)?,
            "threads" => self.threads = if v == "auto" { None } else { Some(num(key, v)?) },
            "out" => self.out = PathBuf::from(v),
            "plot" => self.plot = opt_path(v),
            _ => return Err(format!("unknown key '{key}' for experiment")),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut p = vec![("preset", self.preset.map_or("none", |p| p.name()).to_string())];
        p.extend(self.system.pairs());
        p.extend([
            ("trials", self.trials.to_string()),
            ("schemes", join(&self.schemes)),
            ("sweep", self.sweep.clone()),
            ("sweep_values", join(&self.sweep_values)),
            ("bits", join(&self.bits)),
            ("threads", self.threads.map_or_else(|| "auto".to_string(), |t| t.to_string())),
            ("out", self.out.display().to_string()),
            ("plot", show_path(&self.plot)),
        ]);
        p
    }
}

pub(crate) fn experiment(s: &ExperimentSettings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = s.build()?;
    let result = run_experiment(&cfg)?;
    let mut outputs = vec![(s.out.as_path(), result.to_csv_string().into_bytes())];
    if let Some(p) = &s.plot {
        outputs.push((p.as_path(), result.render_svg().into_bytes()));
    }
    emit("experiment", s, &outputs)?;
    writeln!(
        stdout,
        "wrote {} rows ({} trials per point) to {}",
        result.rows.len(),
        cfg.trials,
        s.out.display()
    )
    .map_err(CliError::stdout)
}
