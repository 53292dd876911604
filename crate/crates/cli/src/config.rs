//! TOML run configuration.
//!
//! Every section is optional and falls back to the documented defaults;
//! unknown keys are rejected. A minimal file is the empty file.
//!
//! ```toml
//! [grid]
//! length = 20.0
//! n = 256
//!
//! [initial]
//! kind = "smoothed_dambreak"
//! eta_left = 0.5
//! width = 0.5
//!
//! [bathymetry]
//! kind = "gaussian_bump"
//! amplitude = 0.2
//!
//! [physics]
//! eps = 1e-3
//! gravity = { kind = "constant", g0 = 9.81 }
//!
//! [control]
//! t_end = 5.0
//! gradient_factor = 10.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rsvub_core::diagnostics::BlowupThresholds;
use rsvub_core::fields::{self, BathymetryKind, BathymetryParams, InitialKind, InitialParams};
use rsvub_core::mms::TravellingWave;
use rsvub_core::{Bathymetry, Epsilon, Gravity, Grid, Model, PicardConfig, State, StepControl};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Picard,
    MmsConvergence,
    OperatorProbe,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Picard => "picard",
            Mode::MmsConvergence => "mms_convergence",
            Mode::OperatorProbe => "operator_probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub grid: GridSection,
    pub initial: InitialSection,
    pub bathymetry: BathymetrySection,
    pub physics: PhysicsSection,
    pub control: ControlSection,
    pub picard: PicardSection,
    pub mms: MmsSection,
    pub probe: ProbeSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Simulate,
            grid: GridSection::default(),
            initial: InitialSection::default(),
            bathymetry: BathymetrySection::default(),
            physics: PhysicsSection::default(),
            control: ControlSection::default(),
            picard: PicardSection::default(),
            mms: MmsSection::default(),
            probe: ProbeSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { length: 20.0, n: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub velocity_amplitude: f64,
    pub sigma: f64,
    pub center: f64,
    pub mode: u32,
    pub eta_left: f64,
    pub eta_right: f64,
    pub width: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        let p = InitialParams::default();
        InitialSection {
            kind: InitialKind::GaussianEta,
            amplitude: p.amplitude,
            velocity_amplitude: p.velocity_amplitude,
            sigma: p.sigma,
            center: p.center,
            mode: p.mode,
            eta_left: p.eta_left,
            eta_right: p.eta_right,
            width: p.width,
        }
    }
}

impl InitialSection {
    fn params(&self) -> InitialParams {
        InitialParams {
            amplitude: self.amplitude,
            velocity_amplitude: self.velocity_amplitude,
            sigma: self.sigma,
            center: self.center,
            mode: self.mode,
            eta_left: self.eta_left,
            eta_right: self.eta_right,
            width: self.width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathymetrySection {
    pub kind: BathymetryKind,
    pub depth: f64,
    pub amplitude: f64,
    pub sigma: f64,
    pub center: f64,
    pub speed: f64,
}

impl Default for BathymetrySection {
    fn default() -> Self {
        let p = BathymetryParams::default();
        BathymetrySection {
            kind: BathymetryKind::Flat,
            depth: p.depth,
            amplitude: p.amplitude,
            sigma: p.sigma,
            center: p.center,
            speed: p.speed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GravityKind {
    Constant,
    Oscillating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravitySection {
    pub kind: GravityKind,
    pub g0: f64,
    /// Relative modulation `a` in `g0 (1 + a sin(omega t))`.
    pub amplitude: f64,
    pub omega: f64,
}

impl Default for GravitySection {
    fn default() -> Self {
        GravitySection { kind: GravityKind::Constant, g0: 9.81, amplitude: 0.0, omega: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub eps: f64,
    pub gravity: GravitySection,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection { eps: 1.0, gravity: GravitySection::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub cfl: f64,
    pub t_end: f64,
    /// Upper bound on the step; absent means unbounded.
    pub dt_max: Option<f64>,
    pub record_every: usize,
    pub gradient_factor: f64,
    pub vacuum_fraction: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        let s = StepControl::default();
        ControlSection {
            cfl: s.cfl,
            t_end: s.t_end,
            dt_max: None,
            record_every: s.record_every,
            gradient_factor: s.thresholds.gradient_factor,
            vacuum_fraction: s.thresholds.vacuum_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSection {
    pub horizon: f64,
    pub iterations: usize,
}

impl Default for PicardSection {
    fn default() -> Self {
        PicardSection { horizon: 0.4, iterations: 6 }
    }
}

/// Travelling-wave target `eta = A cos(k x - w t)`, `u = B sin(k x - w t)`
/// run to `control.t_end` with `dt = dt_per_dx * dx` on every grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsSection {
    pub resolutions: Vec<usize>,
    pub eta_amplitude: f64,
    pub u_amplitude: f64,
    pub mode: u32,
    pub omega: f64,
    pub dt_per_dx: f64,
}

impl Default for MmsSection {
    fn default() -> Self {
        MmsSection {
            resolutions: vec![64, 128, 256, 512],
            eta_amplitude: 0.05,
            u_amplitude: 0.1,
            mode: 1,
            omega: 2.0,
            dt_per_dx: 0.075,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub samples: usize,
    pub seed: u64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection { samples: 100, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    /// Write a state snapshot every this many records; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json], snapshot_every: 0 }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub n: Option<usize>,
    pub eps: Option<f64>,
    pub t_end: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Everything a run needs, built from a validated [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: Model,
    pub initial: State,
    pub control: StepControl,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    parse_config(&text)
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(n) = o.n {
            self.grid.n = n;
        }
        if let Some(e) = o.eps {
            self.physics.eps = e;
        }
        if let Some(t) = o.t_end {
            self.control.t_end = t;
        }
        if let Some(d) = &o.out {
            self.output.directory = d.clone();
        }
        if let Some(s) = o.seed {
            self.probe.seed = s;
        }
        self.validate()
    }

    /// Checks every physical and mode-specific parameter without running anything.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let scenario = self.scenario()?;
        match self.mode {
            Mode::Simulate => {}
            Mode::Picard => {
                if self.picard.iterations < 2 {
                    return Err(invalid("picard.iterations >= 2 required"));
                }
                if !(self.picard.horizon > 0.0 && self.picard.horizon.is_finite()) {
                    return Err(invalid("picard.horizon > 0 required"));
                }
            }
            Mode::MmsConvergence => {
                if self.mms.resolutions.len() < 2 {
                    return Err(invalid("mms.resolutions needs at least two grids"));
                }
                if self.mms.resolutions.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("mms.resolutions must be strictly increasing"));
                }
                for &n in &self.mms.resolutions {
                    Grid::new(self.grid.length, n).map_err(invalid)?;
                }
                if !(self.mms.dt_per_dx > 0.0 && self.mms.dt_per_dx.is_finite()) {
                    return Err(invalid("mms.dt_per_dx > 0 required"));
                }
                if self.mms.mode == 0 {
                    return Err(invalid("mms.mode >= 1 required"));
                }
                // The target must keep positive depth wherever the bottom is lowest.
                let lowest = self.mms.eta_amplitude.abs() + self.bathymetry_max_height(&scenario.model);
                if lowest >= scenario.model.bathymetry.d_bar() {
                    return Err(invalid("depth positivity: mms target amplitude too large for the bathymetry"));
                }
            }
            Mode::OperatorProbe => {
                if self.probe.samples == 0 {
                    return Err(invalid("probe.samples >= 1 required"));
                }
            }
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats must name at least one of csv, json"));
        }
        Ok(())
    }

    fn bathymetry_max_height(&self, model: &Model) -> f64 {
        let b = &model.bathymetry;
        let d_bar = b.d_bar();
        model.grid.nodes().map(|x| d_bar - b.d(0.0, x)).fold(0.0, f64::max)
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.grid.length, self.grid.n).map_err(invalid)
    }

    pub fn gravity(&self) -> Result<Gravity, ConfigError> {
        let g = &self.physics.gravity;
        match g.kind {
            GravityKind::Constant => Gravity::constant(g.g0),
            GravityKind::Oscillating => Gravity::oscillating(g.g0, g.amplitude, g.omega),
        }
        .map_err(invalid)
    }

    pub fn bathymetry(&self, grid: &Grid) -> Result<Bathymetry, ConfigError> {
        let b = &self.bathymetry;
        let params = BathymetryParams {
            depth: b.depth,
            amplitude: b.amplitude,
            sigma: b.sigma,
            center: b.center,
            speed: b.speed,
        };
        Bathymetry::preset(b.kind, &params, grid).map_err(invalid)
    }

    pub fn model_on(&self, grid: Grid) -> Result<Model, ConfigError> {
        let bathy = self.bathymetry(&grid)?;
        let eps = Epsilon::new(self.physics.eps).map_err(invalid)?;
        Ok(Model::new(grid, bathy, self.gravity()?, eps))
    }

    pub fn step_control(&self) -> Result<StepControl, ConfigError> {
        let c = &self.control;
        let ctrl = StepControl {
            cfl: c.cfl,
            dt_max: c.dt_max.unwrap_or(f64::INFINITY),
            t_end: c.t_end,
            record_every: c.record_every,
            thresholds: BlowupThresholds { gradient_factor: c.gradient_factor, vacuum_fraction: c.vacuum_fraction },
        };
        ctrl.validate().map_err(invalid)?;
        Ok(ctrl)
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let model = self.model_on(self.grid()?)?;
        let initial = fields::preset_initial(self.initial.kind, &self.initial.params(), &model.grid, &model.bathymetry)
            .map_err(invalid)?;
        Ok(Scenario { model, initial, control: self.step_control()? })
    }

    pub fn picard_config(&self) -> PicardConfig {
        PicardConfig { horizon: self.picard.horizon, iterations: self.picard.iterations, cfl: self.control.cfl }
    }

    pub fn mms_target(&self) -> TravellingWave {
        let m = &self.mms;
        TravellingWave::on_period(m.eta_amplitude, m.u_amplitude, m.mode, self.grid.length, m.omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.control.cfl, 0.4);
        assert_eq!(cfg.physics.eps, 1.0);
        assert_eq!(cfg.bathymetry.kind, BathymetryKind::Flat);
        assert!(cfg.scenario().unwrap().model.bathymetry.is_flat());
    }

    #[test]
    fn negative_eps_is_rejected() {
        let err = parse_config("[physics]\neps = -1.0\n").unwrap_err().to_string();
        assert!(err.contains("eps >= 0"), "{err}");
    }

    #[test]
    fn tall_bump_names_depth_positivity() {
        let err = parse_config("[bathymetry]\nkind = \"gaussian_bump\"\ndepth = 1.0\namplitude = 1.2\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("depth positivity"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("[grid]\nlenght = 3.0\n").unwrap_err().to_string();
        assert!(err.contains("lenght"), "{err}");
        let err = parse_config("[bogus]\n").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = parse_config("[grid]\nn = 64\n[physics]\neps = 0.5\n").unwrap();
        let o = Overrides { n: Some(128), eps: Some(0.25), t_end: Some(2.0), seed: Some(7), ..Overrides::default() };
        cfg.apply(&o).unwrap();
        assert_eq!((cfg.grid.n, cfg.physics.eps, cfg.control.t_end, cfg.probe.seed), (128, 0.25, 2.0, 7));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.control.dt_max = Some(0.01);
        cfg.mode = Mode::Picard;
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
