//! Rayleigh-fading channel realizations for the AP / IRS / user triangle.
//!
//! The AP and the IRS sit `ap_irs_distance` apart on one horizontal line;
//! the user moves on a parallel line `vertical_offset` below it, at
//! horizontal distance `d` from the AP. Every channel entry is
//! circularly-symmetric complex Gaussian with variance equal to the
//! distance-dependent path loss of its link.
//!
//! # Reproducibility
//!
//! Random draws come from ChaCha20 (`rand_chacha` 0.9). A trial's stream for
//! one link is keyed as
//!
//! ```text
//! ChaCha20Rng::seed_from_u64(seed), stream = (trial << 8) | link_tag
//! ```
//!
//! with link tags `G = 0`, `h_r = 1`, `h_d = 2`, initial phases `= 3`. The
//! geometry does not enter the key, so every sweep point of an experiment
//! sees the same small-scale fading for a given trial.

use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, IrsError, Result};

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub ap_irs_distance: f64,
    pub vertical_offset: f64,
    /// Horizontal AP-user distance.
    pub d: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            ap_irs_distance: 500.0,
            vertical_offset: 2.0,
            d: 498.0,
        }
    }
}

impl Geometry {
    pub fn with_d(self, d: f64) -> Self {
        Self { d, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ap_irs_distance > 0.0 && self.vertical_offset > 0.0 && self.d >= 0.0) {
            return Err(invalid(format!("invalid geometry {self:?}")));
        }
        if !(self.ap_irs_distance.is_finite() && self.vertical_offset.is_finite() && self.d.is_finite()) {
            return Err(invalid(format!("non-finite geometry {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDistances {
    pub ap_user: f64,
    pub irs_user: f64,
    pub ap_irs: f64,
}

pub fn link_distances(geom: &Geometry) -> LinkDistances {
    let v2 = geom.vertical_offset * geom.vertical_offset;
    let dx = geom.ap_irs_distance - geom.d;
    LinkDistances {
        ap_user: (geom.d * geom.d + v2).sqrt(),
        irs_user: (dx * dx + v2).sqrt(),
        ap_irs: geom.ap_irs_distance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossConfig {
    /// Attenuation at 1 m (dB).
    pub ref_loss_db: f64,
    pub exp_ap_irs: f64,
    pub exp_irs_user: f64,
    pub exp_ap_user: f64,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        Self {
            ref_loss_db: 40.0,
            exp_ap_irs: 2.2,
            exp_irs_user: 2.8,
            exp_ap_user: 3.8,
        }
    }
}

impl PathLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ref_loss_db > 0.0) {
            return Err(invalid("ref_loss_db must be positive"));
        }
        for e in [self.exp_ap_irs, self.exp_irs_user, self.exp_ap_user] {
            if !(e >= 2.0 && e.is_finite()) {
                return Err(invalid(format!("path-loss exponent {e} must be >= 2")));
            }
        }
        Ok(())
    }
}

/// Linear power gain `10^(-ref/10) * distance^(-exponent)`.
pub fn path_loss_linear(distance: f64, exponent: f64, cfg: &PathLossConfig) -> Result<f64> {
    if !(distance >= 1.0) {
        return Err(IrsError::SubReferenceDistance(distance));
    }
    Ok(10f64.powf(-cfg.ref_loss_db / 10.0) * distance.powf(-exponent))
}

/// `h_d` (M), `h_r` (N) and `G` (N x M).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_d: DVector<C64>,
    pub h_r: DVector<C64>,
    pub g: DMatrix<C64>,
}

impl ChannelSet {
    pub fn new(h_d: DVector<C64>, h_r: DVector<C64>, g: DMatrix<C64>) -> Result<Self> {
        if g.nrows() != h_r.len() || g.ncols() != h_d.len() {
            return Err(invalid(format!(
                "G is {}x{} but h_r has {} and h_d has {} entries",
                g.nrows(),
                g.ncols(),
                h_r.len(),
                h_d.len()
            )));
        }
        if h_d.len() == 0 || h_r.len() == 0 {
            return Err(invalid("channel dimensions must be at least 1"));
        }
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        if !(h_d.iter().all(finite) && h_r.iter().all(finite) && g.iter().all(finite)) {
            return Err(invalid("channel entries must be finite"));
        }
        Ok(Self { h_d, h_r, g })
    }

    pub fn antennas(&self) -> usize {
        self.h_d.len()
    }

    pub fn elements(&self) -> usize {
        self.h_r.len()
    }

    /// One CSV row per complex entry: `link,row,col,re,im`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "link,row,col,re,im")?;
        self.write_csv_rows(out, None)
    }

    pub(crate) fn write_csv_rows<W: Write>(&self, out: &mut W, trial: Option<usize>) -> std::io::Result<()> {
        let prefix = trial.map(|t| format!("{t},")).unwrap_or_default();
        for (m, z) in self.h_d.iter().enumerate() {
            writeln!(out, "{prefix}h_d,{m},0,{},{}", z.re, z.im)?;
        }
        for (n, z) in self.h_r.iter().enumerate() {
            writeln!(out, "{prefix}h_r,{n},0,{},{}", z.re, z.im)?;
        }
        for n in 0..self.g.nrows() {
            for m in 0..self.g.ncols() {
                let z = self.g[(n, m)];
                writeln!(out, "{prefix}G,{n},{m},{},{}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// Circularly-symmetric complex Gaussian with variance `power`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, power: f64) -> C64 {
    let s = (power * 0.5).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LinkGains {
    g: f64,
    h_r: f64,
    h_d: f64,
}

fn link_gains(geom: &Geometry, cfg: &PathLossConfig) -> Result<LinkGains> {
    geom.validate()?;
    cfg.validate()?;
    let d = link_distances(geom);
    Ok(LinkGains {
        g: path_loss_linear(d.ap_irs, cfg.exp_ap_irs, cfg)?,
        h_r: path_loss_linear(d.irs_user, cfg.exp_irs_user, cfg)?,
        h_d: path_loss_linear(d.ap_user, cfg.exp_ap_user, cfg)?,
    })
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(invalid(format!("need M >= 1 and N >= 1, got M={m}, N={n}")));
    }
    Ok(())
}

/// Draws `G` (row-major), then `h_r`, then `h_d` from a single generator.
pub fn sample_channels<R: Rng + ?Sized>(
    rng: &mut R,
    geom: &Geometry,
    cfg: &PathLossConfig,
    m: usize,
    n: usize,
) -> Result<ChannelSet> {
    check_dims(m, n)?;
    let gains = link_gains(geom, cfg)?;
    let g = DMatrix::from_row_iterator(n, m, (0..n * m).map(|_| complex_gaussian(rng, gains.g)).collect::<Vec<_>>());
    let h_r = DVector::from_iterator(n, (0..n).map(|_| complex_gaussian(rng, gains.h_r)).collect::<Vec<_>>());
    let h_d = DVector::from_iterator(m, (0..m).map(|_| complex_gaussian(rng, gains.h_d)).collect::<Vec<_>>());
    Ok(ChannelSet { h_d, h_r, g })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum LinkTag {
    ApIrs = 0,
    IrsUser = 1,
    ApUser = 2,
    InitPhases = 3,
}

/// Independent, reproducible per-trial, per-link generators derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialStreams {
    pub seed: u64,
}

impl TrialStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn rng(&self, trial: u64, link: LinkTag) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream((trial << 8) | link as u64);
        rng
    }

    /// Channels for one trial; the first entries of each link do not depend on `m`/`n`.
    pub fn sample(&self, trial: u64, geom: &Geometry, cfg: &PathLossConfig, m: usize, n: usize) -> Result<ChannelSet> {
        check_dims(m, n)?;
        let gains = link_gains(geom, cfg)?;
        let mut rg = self.rng(trial, LinkTag::ApIrs);
        let mut rr = self.rng(trial, LinkTag::IrsUser);
        let mut rd = self.rng(trial, LinkTag::ApUser);
        let g_entries: Vec<C64> = (0..n * m).map(|_| complex_gaussian(&mut rg, gains.g)).collect();
        let g = DMatrix::from_row_slice(n, m, &g_entries);
        let h_r = DVector::from_iterator(n, (0..n).map(|_| complex_gaussian(&mut rr, gains.h_r)));
        let h_d = DVector::from_iterator(m, (0..m).map(|_| complex_gaussian(&mut rd, gains.h_d)));
        Ok(ChannelSet { h_d, h_r, g })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        let g = Geometry::default().with_d(500.0);
        assert_eq!(link_distances(&g).irs_user, 2.0);
        assert_eq!(link_distances(&g.with_d(0.0)).ap_user, 2.0);
        let l = link_distances(&g.with_d(498.0));
        assert!((l.irs_user - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(l.ap_irs, 500.0);
    }

    #[test]
    fn path_loss_values() {
        let cfg = PathLossConfig::default();
        assert!((path_loss_linear(1.0, 3.8, &cfg).unwrap() - 1e-4).abs() < 1e-18);
        assert!((path_loss_linear(10.0, 2.0, &cfg).unwrap() - 1e-6).abs() < 1e-20);
        // 1e-4 * 498^-3.8, direct scalar evaluation
        let v = path_loss_linear(498.0, 3.8, &cfg).unwrap();
        assert!((v / 5.6302606079738044e-15 - 1.0).abs() < 1e-12, "{v:e}");
        assert!(matches!(
            path_loss_linear(0.5, 2.0, &cfg),
            Err(IrsError::SubReferenceDistance(_))
        ));
    }

    #[test]
    fn doubling_db_squares_attenuation() {
        let a = PathLossConfig { ref_loss_db: 30.0, ..Default::default() };
        let b = PathLossConfig { ref_loss_db: 60.0, ..Default::default() };
        let la = path_loss_linear(1.0, 2.0, &a).unwrap();
        let lb = path_loss_linear(1.0, 2.0, &b).unwrap();
        assert!((lb / (la * la) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shapes() {
        let s = TrialStreams::new(1);
        let ch = s.sample(0, &Geometry::default(), &PathLossConfig::default(), 2, 40).unwrap();
        assert_eq!(ch.h_d.len(), 2);
        assert_eq!(ch.h_r.len(), 40);
        assert_eq!((ch.g.nrows(), ch.g.ncols()), (40, 2));
        assert!(s.sample(0, &Geometry::default(), &PathLossConfig::default(), 0, 4).is_err());
    }

    #[test]
    fn deterministic_and_distinct() {
        let s = TrialStreams::new(77);
        let g = Geometry::default();
        let c = PathLossConfig::default();
        assert_eq!(s.sample(5, &g, &c, 2, 8).unwrap(), s.sample(5, &g, &c, 2, 8).unwrap());
        assert_ne!(s.sample(5, &g, &c, 2, 8).unwrap(), s.sample(6, &g, &c, 2, 8).unwrap());
        let mut r1 = ChaCha20Rng::seed_from_u64(4);
        let mut r2 = ChaCha20Rng::seed_from_u64(4);
        assert_eq!(
            sample_channels(&mut r1, &g, &c, 2, 3).unwrap(),
            sample_channels(&mut r2, &g, &c, 2, 3).unwrap()
        );
    }

    #[test]
    fn nested_dimensions_share_prefix() {
        let s = TrialStreams::new(3);
        let g = Geometry::default();
        let c = PathLossConfig::default();
        let small = s.sample(2, &g, &c, 2, 10).unwrap();
        let big = s.sample(2, &g, &c, 2, 30).unwrap();
        assert_eq!(small.h_r.rows(0, 10), big.h_r.rows(0, 10));
        assert_eq!(small.h_d, big.h_d);
    }

    #[test]
    fn geometry_only_scales() {
        let s = TrialStreams::new(3);
        let c = PathLossConfig::default();
        let a = s.sample(1, &Geometry::default().with_d(400.0), &c, 2, 4).unwrap();
        let b = s.sample(1, &Geometry::default().with_d(498.0), &c, 2, 4).unwrap();
        let ratio = b.h_d[0] / a.h_d[0];
        assert!(ratio.im.abs() < 1e-12 && ratio.re > 0.0);
        assert_eq!(a.g, b.g);
    }

    #[test]
    fn second_moment_matches_path_loss() {
        let geom = Geometry::default();
        let cfg = PathLossConfig::default();
        let target = path_loss_linear(link_distances(&geom).ap_user, 3.8, &cfg).unwrap();
        let mut rng = TrialStreams::new(11).rng(0, LinkTag::ApUser);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| complex_gaussian(&mut rng, target).norm_sqr()).sum::<f64>() / n as f64;
        // |h|^2 is exponential: stderr = target / sqrt(n)
        let z = (mean - target) / (target / (n as f64).sqrt());
        assert!((mean / target - 1.0).abs() < 0.02);
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn csv_dump_layout() {
        let ch = TrialStreams::new(1).sample(0, &Geometry::default(), &PathLossConfig::default(), 2, 3).unwrap();
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "link,row,col,re,im");
        assert_eq!(lines.len(), 1 + 2 + 3 + 6);
        assert!(lines[1].starts_with("h_d,0,0,"));
        assert!(lines.last().unwrap().starts_with("G,2,1,"));
    }
}
