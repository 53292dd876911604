use std::path::PathBuf;

use rsvub_core::integrate::{self, StopReason};
use rsvub_core::mms::{self, ManufacturedForcing};
use rsvub_core::{DiagnosticsRecord, DiagnosticsSink, Grid, Model, State};
use serde::Serialize;

use crate::config::{ConfigError, Format, Mode, RunConfig};
use crate::output::{self, cell, opt_cell};
use crate::probe::{self, ProbeSample};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver error: {0}")]
    Core(#[from] rsvub_core::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_vacuum() => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Vacuum,
    GradientBlowup,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::Vacuum => 3,
            RunStatus::GradientBlowup => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub status: RunStatus,
    pub message: String,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    mode: &'static str,
    grid: GridInfo,
    status: RunStatus,
    message: &'a str,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct GridInfo {
    length: f64,
    n: usize,
    dx: f64,
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.cfg.output.directory.join(name);
        self.files.push(p.clone());
        p
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, v: &T) -> std::io::Result<()> {
        if self.cfg.output.wants(Format::Json) {
            let p = self.path(name);
            output::write_json(&p, v)?;
        }
        Ok(())
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        if self.cfg.output.wants(Format::Csv) {
            let p = self.path(name);
            output::write_table(&p, header, rows)?;
        }
        Ok(())
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Summary, CliError> {
    cfg.validate()?;
    let mut w = Writer { cfg, files: Vec::new() };
    let (status, message) = match cfg.mode {
        Mode::Simulate => simulate(cfg, &mut w)?,
        Mode::Picard => picard(cfg, &mut w)?,
        Mode::MmsConvergence => mms_convergence(cfg, &mut w)?,
        Mode::OperatorProbe => operator_probe(cfg, &mut w)?,
    };
    let grid = cfg.grid()?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode.as_str(),
        grid: GridInfo { length: grid.length(), n: grid.n(), dx: grid.dx() },
        status,
        message: &message,
        config: cfg,
    };
    let p = w.path("manifest.json");
    output::write_json(&p, &manifest)?;
    Ok(Summary { status, message, files: w.files })
}

/// Keeps every record plus a state snapshot every `every` records.
struct Collector {
    records: Vec<DiagnosticsRecord>,
    snapshots: Vec<(usize, State)>,
    every: usize,
}

impl DiagnosticsSink for Collector {
    fn record(&mut self, record: &DiagnosticsRecord, state: &State) {
        if self.every > 0 && self.records.len().is_multiple_of(self.every) {
            self.snapshots.push((self.records.len(), state.clone()));
        }
        self.records.push(record.clone());
    }
}

fn snapshot_name(index: usize) -> String {
    format!("snapshot_{index:06}.csv")
}

fn simulate(cfg: &RunConfig, w: &mut Writer) -> Result<(RunStatus, String), CliError> {
    let sc = cfg.scenario()?;
    let mut sink = Collector { records: Vec::new(), snapshots: Vec::new(), every: cfg.output.snapshot_every };
    let out = integrate::run(&sc.model, &sc.initial, &sc.control, None, &mut sink)?;
    eprintln!(
        "blow-up monitor: gradient threshold {:e}, vacuum threshold {:e}",
        out.gradient_threshold, out.vacuum_threshold
    );
    if cfg.output.snapshot_every > 0 {
        let last = sink.records.len().saturating_sub(1);
        if sink.snapshots.last().map(|s| s.0) != Some(last) {
            sink.snapshots.push((last, out.state.clone()));
        }
    }
    if cfg.output.wants(Format::Csv) {
        let p = w.path("diagnostics.csv");
        output::write_diagnostics_csv(&p, &sink.records)?;
    }
    w.json("diagnostics.json", &sink.records)?;
    for (i, s) in &sink.snapshots {
        let p = w.path(&snapshot_name(*i));
        output::write_snapshot(&p, &sc.model, s)?;
    }
    let (status, message) = match out.stop {
        StopReason::Completed => {
            (RunStatus::Completed, format!("completed t = {} in {} steps", out.state.t, out.steps))
        }
        StopReason::Vacuum { t, inf_h } => (RunStatus::Vacuum, format!("vacuum at t = {t}: inf h = {inf_h}")),
        StopReason::GradientBlowup { t, sup_wx, threshold } => {
            (RunStatus::GradientBlowup, format!("gradient blow-up at t = {t}: sup |W_x| = {sup_wx} > {threshold}"))
        }
    };
    Ok((status, message))
}

#[derive(Serialize)]
struct PicardJson<'a> {
    times: &'a [f64],
    etilde: &'a [Vec<f64>],
    ratios: &'a [f64],
}

fn picard(cfg: &RunConfig, w: &mut Writer) -> Result<(RunStatus, String), CliError> {
    let sc = cfg.scenario()?;
    let report = integrate::picard_solve(&sc.model, &sc.initial, &cfg.picard_config())?;
    let finals = report.final_energies();
    let rows: Vec<Vec<String>> = finals
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let ratio = (k > 0).then(|| report.ratios[k - 1]);
            vec![(k + 1).to_string(), cell(e), opt_cell(ratio)]
        })
        .collect();
    w.table("picard.csv", &["n", "etilde_T", "ratio"], &rows)?;
    w.json("picard.json", &PicardJson { times: &report.times, etilde: &report.etilde, ratios: &report.ratios })?;
    let last = report.ratios.last().copied().unwrap_or(0.0);
    Ok((
        RunStatus::Completed,
        format!("{} iterates on [0, {}], final ratio {last:e}", finals.len(), cfg.picard.horizon),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MmsRow {
    pub n: usize,
    pub error: f64,
    pub order: Option<f64>,
}

/// Runs the manufactured travelling wave to `t_end` on one grid and returns
/// `max(|eta - eta*|_inf, |u - u*|_inf)` at the final time.
pub fn mms_error(cfg: &RunConfig, n: usize) -> Result<f64, CliError> {
    let grid = Grid::new(cfg.grid.length, n)?;
    let model: Model = cfg.model_on(grid)?;
    let target = cfg.mms_target();
    let mut ctrl = cfg.step_control()?;
    ctrl.cfl = 1.0;
    ctrl.dt_max = cfg.mms.dt_per_dx * model.grid.dx();
    ctrl.record_every = usize::MAX;
    let initial = mms::sample_target(&target, &model, 0.0);
    let forcing = ManufacturedForcing { target };
    let mut sink: Vec<DiagnosticsRecord> = Vec::new();
    let out = integrate::run(&model, &initial, &ctrl, Some(&forcing), &mut sink)?;
    if out.stop != StopReason::Completed {
        return Err(rsvub_core::Error::NumericalDegeneracy("manufactured run stopped early").into());
    }
    let exact = mms::sample_target(&target, &model, out.state.t);
    let e_eta = out.state.eta.zip_map(&exact.eta, |a, b| a - b).max_abs();
    let e_u = out.state.u.zip_map(&exact.u, |a, b| a - b).max_abs();
    Ok(e_eta.max(e_u))
}

pub fn mms_table(cfg: &RunConfig) -> Result<Vec<MmsRow>, CliError> {
    let errors: Vec<Result<f64, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg.mms.resolutions.iter().map(|&n| s.spawn(move || mms_error(cfg, n))).collect();
        handles.into_iter().map(|h| h.join().expect("mms worker panicked")).collect()
    });
    let mut rows: Vec<MmsRow> = Vec::new();
    for (&n, e) in cfg.mms.resolutions.iter().zip(errors) {
        let error = e?;
        let order = rows.last().map(|p| (p.error / error).ln() / (n as f64 / p.n as f64).ln());
        rows.push(MmsRow { n, error, order });
    }
    Ok(rows)
}

fn mms_convergence(cfg: &RunConfig, w: &mut Writer) -> Result<(RunStatus, String), CliError> {
    let rows = mms_table(cfg)?;
    let cells: Vec<Vec<String>> =
        rows.iter().map(|r| vec![r.n.to_string(), cell(r.error), opt_cell(r.order)]).collect();
    w.table("mms.csv", &["n", "error", "order"], &cells)?;
    w.json("mms.json", &rows)?;
    let last = rows.last().and_then(|r| r.order).unwrap_or(f64::NAN);
    Ok((RunStatus::Completed, format!("observed order on the finest pair: {last:.3}")))
}

fn operator_probe(cfg: &RunConfig, w: &mut Writer) -> Result<(RunStatus, String), CliError> {
    let sc = cfg.scenario()?;
    let samples: Vec<ProbeSample> =
        probe::run_ensemble(&sc.model.grid, sc.model.eps, cfg.probe.samples, cfg.probe.seed)?;
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| vec![s.index.to_string(), cell(s.h_inf), cell(s.residual), cell(s.coercivity), cell(s.bound_ratio)])
        .collect();
    w.table("probe.csv", &["sample", "h_inf", "residual", "coercivity", "bound_ratio"], &rows)?;
    w.json("probe.json", &samples)?;
    let worst = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let weakest = samples.iter().map(|s| s.coercivity).fold(f64::INFINITY, f64::min);
    Ok((RunStatus::Completed, format!("max residual {worst:e}, min coercivity ratio {weakest:e}")))
}
