//! Time integration: CFL control, classical RK4, the nonlinear run loop and
//! the frozen-coefficient Picard iteration.

use alloc::vec::Vec;

use crate::diagnostics::{self, BlowupThresholds, DiagnosticsRecord, DiagnosticsSink, Status};
use crate::dynamics::{self, Model, Tendency};
use crate::error::{Error, Result};
use crate::fields::State;
use crate::grid::Field;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StepControl {
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub thresholds: BlowupThresholds,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl: 0.4,
            dt_max: f64::INFINITY,
            t_end: 1.0,
            record_every: 1,
            thresholds: BlowupThresholds::default(),
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid(alloc::format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(alloc::format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::invalid("dt_max must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be at least 1"));
        }
        self.thresholds.validate()
    }
}

/// `min(dt_max, cfl dx / max |u -/+ sqrt(g h)|)`.
pub fn cfl_dt(model: &Model, state: &State, ctrl: &StepControl) -> Result<f64> {
    let (lm, lp) = dynamics::char_speeds(model, state)?;
    let speed = lm.max_abs().max(lp.max_abs());
    if speed > 0.0 {
        Ok(ctrl.dt_max.min(ctrl.cfl * model.grid.dx() / speed))
    } else {
        Ok(ctrl.dt_max)
    }
}

/// Extra right-hand-side terms `(S_eta, S_u)` added to the semi-discrete system.
pub trait Forcing {
    fn eval(&self, model: &Model, state: &State) -> Result<(Field, Field)>;
}

fn forced_tendency(model: &Model, state: &State, forcing: Option<&dyn Forcing>) -> Result<Tendency> {
    let mut k = dynamics::tendency(model, state)?;
    if let Some(f) = forcing {
        let (se, su) = f.eval(model, state)?;
        k.deta_dt = k.deta_dt.axpy(1.0, &se);
        k.du_dt = k.du_dt.axpy(1.0, &su);
    }
    Ok(k)
}

fn shifted(state: &State, k: &Tendency, dt: f64, t: f64) -> State {
    State { eta: state.eta.axpy(dt, &k.deta_dt), u: state.u.axpy(dt, &k.du_dt), t }
}

/// Generic classical RK4 step for `W' = rhs(W)`; vacuum errors carry the stage index.
fn rk4_with(state: &State, dt: f64, mut rhs: impl FnMut(&State) -> Result<Tendency>) -> Result<State> {
    let t = state.t;
    let k1 = rhs(state).map_err(|e| e.with_stage(1))?;
    let k2 = rhs(&shifted(state, &k1, 0.5 * dt, t + 0.5 * dt)).map_err(|e| e.with_stage(2))?;
    let k3 = rhs(&shifted(state, &k2, 0.5 * dt, t + 0.5 * dt)).map_err(|e| e.with_stage(3))?;
    let k4 = rhs(&shifted(state, &k3, dt, t + dt)).map_err(|e| e.with_stage(4))?;
    let combine = |y: &Field, a: &Field, b: &Field, c: &Field, d: &Field| -> Field {
        (0..y.len()).map(|i| y[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
    };
    Ok(State {
        eta: combine(&state.eta, &k1.deta_dt, &k2.deta_dt, &k3.deta_dt, &k4.deta_dt),
        u: combine(&state.u, &k1.du_dt, &k2.du_dt, &k3.du_dt, &k4.du_dt),
        t: t + dt,
    })
}

pub fn rk4_step(model: &Model, state: &State, dt: f64) -> Result<State> {
    rk4_step_forced(model, state, dt, None)
}

pub fn rk4_step_forced(model: &Model, state: &State, dt: f64, forcing: Option<&dyn Forcing>) -> Result<State> {
    if !dt.is_finite() || dt == 0.0 {
        return Err(Error::invalid(alloc::format!("time step must be finite and non-zero, got {dt}")));
    }
    rk4_with(state, dt, |s| forced_tendency(model, s, forcing))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    Completed,
    Vacuum { t: f64, inf_h: f64 },
    GradientBlowup { t: f64, sup_wx: f64, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: State,
    pub stop: StopReason,
    pub steps: usize,
    /// Gradient trigger used by the monitor, `factor (sup |W_x(0)| + 1)`.
    pub gradient_threshold: f64,
    pub vacuum_threshold: f64,
}

/// Advances `initial` to `ctrl.t_end`, or until the blow-up monitor trips.
///
/// Records are emitted at `t = 0`, every `record_every` steps, at the final
/// time and at any stop. The last step is shortened to land on `t_end`.
pub fn run(
    model: &Model,
    initial: &State,
    ctrl: &StepControl,
    forcing: Option<&dyn Forcing>,
    sink: &mut dyn DiagnosticsSink,
) -> Result<RunOutcome> {
    ctrl.validate()?;
    model.frame(initial)?;
    let limits = ctrl.thresholds.limits(diagnostics::sup_wx(initial, &model.grid)?, model.bathymetry.d_bar());

    let mut state = initial.clone();
    let mut integral = 0.0;
    let mut last = DiagnosticsRecord::measure(model, &state, integral, &limits)?;
    sink.record(&last, &state);
    let mut steps = 0;
    let finish = |state: State, stop, steps| RunOutcome {
        state,
        stop,
        steps,
        gradient_threshold: limits.gradient,
        vacuum_threshold: limits.vacuum,
    };
    if last.status != Status::Ok {
        let stop = stop_reason(&last, &limits);
        return Ok(finish(state, stop, 0));
    }

    let tol = 1e-12 * ctrl.t_end.max(1.0);
    while state.t < ctrl.t_end - tol {
        let mut dt = cfl_dt(model, &state, ctrl)?;
        if state.t + dt >= ctrl.t_end - tol {
            dt = ctrl.t_end - state.t;
        }
        let next = match rk4_step_forced(model, &state, dt, forcing) {
            Ok(s) => s,
            Err(Error::Vacuum { t, inf_h, .. }) => {
                let mut rec = DiagnosticsRecord::measure(model, &state, integral, &limits)?;
                rec.status = Status::Vacuum;
                sink.record(&rec, &state);
                return Ok(finish(state, StopReason::Vacuum { t, inf_h }, steps));
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        let mut rec = DiagnosticsRecord::measure(model, &next, integral, &limits)?;
        integral += 0.5 * dt * (last.energy_source_rate + rec.energy_source_rate);
        rec.energy_source_integral = integral;
        state = next;
        let done = state.t >= ctrl.t_end - tol;
        if rec.status != Status::Ok {
            sink.record(&rec, &state);
            let stop = stop_reason(&rec, &limits);
            return Ok(finish(state, stop, steps));
        }
        if steps.is_multiple_of(ctrl.record_every) || done {
            sink.record(&rec, &state);
        }
        last = rec;
    }
    Ok(finish(state, StopReason::Completed, steps))
}

fn stop_reason(rec: &DiagnosticsRecord, limits: &diagnostics::Limits) -> StopReason {
    match rec.status {
        Status::Vacuum => StopReason::Vacuum { t: rec.t, inf_h: rec.inf_h },
        Status::GradientBlowup => {
            StopReason::GradientBlowup { t: rec.t, sup_wx: rec.sup_wx, threshold: limits.gradient }
        }
        Status::Ok => StopReason::Completed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Final time `T` of every linear solve.
    pub horizon: f64,
    /// Number of iterates computed after the frozen datum `W^0`.
    pub iterations: usize,
    pub cfl: f64,
}

/// Output of [`picard_solve`].
///
/// `iterates[0]` is the frozen datum `W^0`. `etilde[n - 1]` holds the
/// difference energy of `W^n - W^{n-1}` weighted by `A(W^{n-1})` at every
/// time level, and `ratios[n - 1] = etilde_{n+1}(T) / etilde_n(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub times: Vec<f64>,
    pub iterates: Vec<Vec<State>>,
    pub etilde: Vec<Vec<f64>>,
    pub ratios: Vec<f64>,
}

impl PicardReport {
    /// `etilde_n(T)` for `n = 1..=iterations`.
    pub fn final_energies(&self) -> Vec<f64> {
        self.etilde.iter().map(|e| *e.last().unwrap_or(&0.0)).collect()
    }
}

fn lerp(a: &State, b: &State, t: f64) -> State {
    let span = b.t - a.t;
    let w = if span == 0.0 { 0.0 } else { (t - a.t) / span };
    State { eta: a.eta.zip_map(&b.eta, |x, y| x + w * (y - x)), u: a.u.zip_map(&b.u, |x, y| x + w * (y - x)), t }
}

/// Frozen-coefficient coefficients at one time: `(u, h, g, F_eta, F_u)` of
/// `W_t + B(W^n) W_x = F(W^n)`.
struct Coefficients {
    u: Field,
    h: Field,
    g: f64,
    f_eta: Field,
    f_u: Field,
}

fn coefficients(model: &Model, frozen: &State) -> Result<Coefficients> {
    let f = model.frame(frozen)?;
    let f_eta = (0..model.grid.n()).map(|i| -f.bathy.d_t[i] - frozen.u[i] * f.bathy.d_x[i]).collect();
    let f_u = dynamics::nonlocal_for(model, frozen)?;
    Ok(Coefficients { u: frozen.u.clone(), h: f.h, g: f.g, f_eta, f_u })
}

fn linear_tendency(model: &Model, c: &Coefficients, w: &State) -> Result<Tendency> {
    let grid = &model.grid;
    let eta_x = grid.ddx(&w.eta)?;
    let u_x = grid.ddx(&w.u)?;
    let n = grid.n();
    Ok(Tendency {
        deta_dt: (0..n).map(|i| -c.u[i] * eta_x[i] - c.h[i] * u_x[i] + c.f_eta[i]).collect(),
        du_dt: (0..n).map(|i| -c.u[i] * u_x[i] - c.g * eta_x[i] + c.f_u[i]).collect(),
    })
}

/// `quad[(g / h) (d eta^2 + d eta_x^2) + d u^2 + d u_x^2]` for the difference
/// `next - prev`, weighted by the symmetriser of `weight`.
fn difference_energy(model: &Model, next: &State, prev: &State, weight: &State) -> Result<f64> {
    let grid = &model.grid;
    let f = model.frame(weight)?;
    let de = next.eta.zip_map(&prev.eta, |a, b| a - b);
    let du = next.u.zip_map(&prev.u, |a, b| a - b);
    let de_x = grid.ddx(&de)?;
    let du_x = grid.ddx(&du)?;
    let density: Field = (0..grid.n())
        .map(|i| f.g / f.h[i] * (de[i] * de[i] + de_x[i] * de_x[i]) + du[i] * du[i] + du_x[i] * du_x[i])
        .collect();
    grid.quad(&density)
}

/// Runs the Picard scheme `W^{n+1}_t + B(W^n) W^{n+1}_x = F(W^n)` on `[0, T]`.
///
/// Every iterate uses the same uniform time levels, chosen from the CFL bound
/// of the initial datum. Coefficients at RK stage times are interpolated
/// linearly from the stored trajectory of the previous iterate.
pub fn picard_solve(model: &Model, initial: &State, cfg: &PicardConfig) -> Result<PicardReport> {
    if cfg.iterations < 2 {
        return Err(Error::invalid("Picard iteration needs at least 2 iterates"));
    }
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
        return Err(Error::invalid("Picard horizon must be positive"));
    }
    let ctrl = StepControl { cfl: cfg.cfl, t_end: cfg.horizon, ..Default::default() };
    ctrl.validate()?;
    let dt_cfl = cfl_dt(model, initial, &ctrl)?;
    let steps = libm::ceil(cfg.horizon / dt_cfl).max(1.0) as usize;
    let dt = cfg.horizon / steps as f64;
    let t0 = initial.t;
    let times: Vec<f64> = (0..=steps).map(|k| t0 + k as f64 * dt).collect();

    let frozen: Vec<State> = times.iter().map(|&t| State { t, ..initial.clone() }).collect();
    let mut iterates = alloc::vec![frozen];
    let mut etilde = Vec::with_capacity(cfg.iterations);

    for _ in 0..cfg.iterations {
        let prev = iterates.last().expect("non-empty");
        let mut coef = Vec::with_capacity(steps + 1);
        let mut coef_mid = Vec::with_capacity(steps);
        for k in 0..=steps {
            coef.push(coefficients(model, &prev[k])?);
            if k < steps {
                let mid = lerp(&prev[k], &prev[k + 1], times[k] + 0.5 * dt);
                coef_mid.push(coefficients(model, &mid)?);
            }
        }
        let mut traj = Vec::with_capacity(steps + 1);
        let mut w = initial.clone();
        traj.push(w.clone());
        for k in 0..steps {
            let t_mid = times[k] + 0.5 * dt;
            w = rk4_with(&w, dt, |s| {
                let c = if s.t <= times[k] {
                    &coef[k]
                } else if s.t <= t_mid {
                    &coef_mid[k]
                } else {
                    &coef[k + 1]
                };
                linear_tendency(model, c, s)
            })?;
            w.t = times[k + 1];
            model.frame(&w)?;
            traj.push(w.clone());
        }
        let energies =
            (0..=steps).map(|k| difference_energy(model, &traj[k], &prev[k], &prev[k])).collect::<Result<Vec<_>>>()?;
        etilde.push(energies);
        iterates.push(traj);
    }

    let finals: Vec<f64> = etilde.iter().map(|e| *e.last().expect("non-empty")).collect();
    let ratios = finals.windows(2).map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] }).collect();
    Ok(PicardReport { times, iterates, etilde, ratios })
}
