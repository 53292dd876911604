//! Energy, mass, norm and blow-up instrumentation.
//!
//! The energy density is
//! `e = h u^2 / 2 + eps h^3 u_x^2 / 2 + g eta^2 / 2 + eps g h^2 eta_x^2 / 2`
//! and over a periodic domain its integral obeys
//! `E' = int [ gdot/2 (eta^2 + eps h^2 eta_x^2) - g eta d_t - eps g h^2 eta_x d_xt ]`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::fields::State;
use crate::grid::{Field, Grid};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Status {
    Ok,
    Vacuum,
    GradientBlowup,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Vacuum => "vacuum",
            Status::GradientBlowup => "gradient_blowup",
        }
    }
}

/// One row of run diagnostics.
///
/// The first eight fields are the serialised columns. The remaining ones feed
/// the Gronwall and characteristics envelopes and are kept in memory only.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// Time integral of the energy source since the start of the run.
    pub energy_source_integral: f64,
    #[cfg_attr(feature = "serde", serde(rename = "sup_Wx"))]
    pub sup_wx: f64,
    pub inf_h: f64,
    pub h2_norm: f64,
    pub status: Status,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub energy_source_rate: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub sup_h: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub sup_ux: f64,
    /// `g/2 int (d_t^2 + eps h^2 d_xt^2)`, the forcing of the Gronwall inequality.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub gronwall_source: f64,
}

pub const CSV_HEADER: &str = "t,mass,energy,energy_source_integral,sup_Wx,inf_h,h2_norm,status";

impl DiagnosticsRecord {
    /// Measures `state`. `source_integral` is the accumulated source supplied by the run loop.
    pub fn measure(model: &Model, state: &State, source_integral: f64, limits: &Limits) -> Result<Self> {
        let grid = &model.grid;
        let h = crate::fields::depth(state, &model.bathymetry, grid);
        let eta_x = grid.ddx(&state.eta)?;
        let u_x = grid.ddx(&state.u)?;
        let sup_ux = u_x.max_abs();
        let sup_wx = nan_max(eta_x.max_abs(), sup_ux);
        let inf_h = h.min();
        let status = limits.classify(inf_h, sup_wx);
        let admissible = inf_h > 0.0 && state.is_finite();
        let (energy, rate) =
            if admissible { (energy_total(model, state)?, energy_source(model, state)?) } else { (f64::NAN, f64::NAN) };
        let g = model.gravity.g(state.t);
        let bathy = model.bathymetry.sample(grid, state.t);
        let eps = model.eps.get();
        let gronwall_density: Field = (0..grid.n())
            .map(|i| bathy.d_t[i] * bathy.d_t[i] + eps * h[i] * h[i] * bathy.d_xt[i] * bathy.d_xt[i])
            .collect();
        Ok(DiagnosticsRecord {
            t: state.t,
            mass: grid.quad(&h)?,
            energy,
            energy_source_integral: source_integral,
            sup_wx,
            inf_h,
            h2_norm: sobolev_proxy(state, grid, 2)?,
            status,
            energy_source_rate: rate,
            sup_h: h.max(),
            sup_ux,
            gronwall_source: 0.5 * g * grid.quad(&gronwall_density)?,
        })
    }

    /// CSV row in [`CSV_HEADER`] order. Floats use the shortest round-trip
    /// scientific representation.
    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.t,
            self.mass,
            self.energy,
            self.energy_source_integral,
            self.sup_wx,
            self.inf_h,
            self.h2_norm,
            self.status.as_str()
        )
    }
}

/// Receives records (and the state they were measured on) from the run loop.
pub trait DiagnosticsSink {
    fn record(&mut self, record: &DiagnosticsRecord, state: &State);
}

impl DiagnosticsSink for Vec<DiagnosticsRecord> {
    fn record(&mut self, record: &DiagnosticsRecord, _state: &State) {
        self.push(record.clone());
    }
}

/// Policy for stopping a run: gradient trigger relative to the initial
/// `sup |W_x|`, vacuum trigger relative to `d_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BlowupThresholds {
    pub gradient_factor: f64,
    pub vacuum_fraction: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        BlowupThresholds { gradient_factor: 1e3, vacuum_fraction: 1e-6 }
    }
}

impl BlowupThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_factor > 0.0 && self.gradient_factor.is_finite()) {
            return Err(Error::invalid("gradient blow-up factor must be positive"));
        }
        if !(self.vacuum_fraction >= 0.0 && self.vacuum_fraction < 1.0) {
            return Err(Error::invalid("vacuum fraction must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Absolute limits: `sup |W_x| > factor (sup |W_x(0)| + 1)`, `inf h < fraction d_bar`.
    pub fn limits(&self, initial_sup_wx: f64, d_bar: f64) -> Limits {
        Limits { gradient: self.gradient_factor * (initial_sup_wx + 1.0), vacuum: self.vacuum_fraction * d_bar }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub gradient: f64,
    pub vacuum: f64,
}

impl Limits {
    /// Vacuum takes precedence; non-finite gradients count as blow-up.
    pub fn classify(&self, inf_h: f64, sup_wx: f64) -> Status {
        if inf_h < self.vacuum || inf_h <= 0.0 {
            Status::Vacuum
        } else if !(sup_wx <= self.gradient) {
            Status::GradientBlowup
        } else {
            Status::Ok
        }
    }
}

/// `max(|eta_x|_inf, |u_x|_inf)`.
pub fn sup_wx(state: &State, grid: &Grid) -> Result<f64> {
    Ok(nan_max(grid.ddx(&state.eta)?.max_abs(), grid.ddx(&state.u)?.max_abs()))
}

/// `max` that propagates NaN, so a corrupted field is never reported as bounded.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

pub fn blowup_check(model: &Model, state: &State, limits: &Limits) -> Result<Status> {
    let h = crate::fields::depth(state, &model.bathymetry, &model.grid);
    Ok(limits.classify(h.min(), sup_wx(state, &model.grid)?))
}

pub fn energy_total(model: &Model, state: &State) -> Result<f64> {
    let grid = &model.grid;
    let f = model.frame(state)?;
    let eta_x = grid.ddx(&state.eta)?;
    let u_x = grid.ddx(&state.u)?;
    let eps = model.eps.get();
    let density: Field = (0..grid.n())
        .map(|i| {
            let (h, u, eta) = (f.h[i], state.u[i], state.eta[i]);
            0.5 * h * u * u
                + 0.5 * eps * h * h * h * u_x[i] * u_x[i]
                + 0.5 * f.g * eta * eta
                + 0.5 * eps * f.g * h * h * eta_x[i] * eta_x[i]
        })
        .collect();
    grid.quad(&density)
}

pub fn energy_source(model: &Model, state: &State) -> Result<f64> {
    let grid = &model.grid;
    let f = model.frame(state)?;
    let gdot = model.gravity.gdot(state.t);
    if gdot == 0.0 && model.bathymetry.is_fixed() {
        return Ok(0.0);
    }
    let eta_x = grid.ddx(&state.eta)?;
    let eps = model.eps.get();
    let density: Field = (0..grid.n())
        .map(|i| {
            let (h, eta) = (f.h[i], state.eta[i]);
            0.5 * gdot * (eta * eta + eps * h * h * eta_x[i] * eta_x[i])
                - f.g * eta * f.bathy.d_t[i]
                - eps * f.g * h * h * eta_x[i] * f.bathy.d_xt[i]
        })
        .collect();
    grid.quad(&density)
}

/// `r_k = E'(t_k) - source(t_k)` for interior records, with `E'` the centred
/// three-point derivative. On uniform spacing this is
/// `(E_{k+1} - E_{k-1}) / (t_{k+1} - t_{k-1})`; the weights stay second order
/// when the last step of a run is shortened.
pub fn energy_balance_residual(records: &[DiagnosticsRecord]) -> Result<Vec<f64>> {
    if records.len() < 3 {
        return Err(Error::TooFewRecords { needed: 3, found: records.len() });
    }
    Ok(records
        .windows(3)
        .map(|w| {
            let h1 = w[1].t - w[0].t;
            let h2 = w[2].t - w[1].t;
            let de = -h2 / (h1 * (h1 + h2)) * w[0].energy
                + (h2 - h1) / (h1 * h2) * w[1].energy
                + h1 / (h2 * (h1 + h2)) * w[2].energy;
            de - w[1].energy_source_rate
        })
        .collect())
}

/// Discrete envelope of `E' <= (|gdot|/g + 1) E + g/2 int (d_t^2 + eps h^2 d_xt^2)`
/// started from the first record's energy.
///
/// Each interval uses the exact propagator of the trapezoid-averaged growth
/// rate, with the forcing integrated by the trapezoid rule, so a source-free
/// run with constant gravity yields `E(0) e^t`.
pub fn gronwall_bound(records: &[DiagnosticsRecord], model: &Model) -> Result<Vec<f64>> {
    let first = records.first().ok_or(Error::TooFewRecords { needed: 1, found: 0 })?;
    let rate = |t: f64| model.gravity.gdot(t).abs() / model.gravity.g(t) + 1.0;
    let mut env = Vec::with_capacity(records.len());
    let mut e = first.energy;
    env.push(e);
    for w in records.windows(2) {
        let dt = w[1].t - w[0].t;
        let growth = math::exp(0.5 * dt * (rate(w[0].t) + rate(w[1].t)));
        e = growth * (e + 0.5 * dt * w[0].gronwall_source) + 0.5 * dt * w[1].gronwall_source;
        env.push(e);
    }
    Ok(env)
}

/// Lower and upper envelopes `inf h0 exp(-I)`, `sup h0 exp(I)` with
/// `I(t) = int_0^t |u_x|_inf` accumulated by the trapezoid rule over records.
pub fn depth_envelope(records: &[DiagnosticsRecord]) -> Result<Vec<(f64, f64)>> {
    let first = records.first().ok_or(Error::TooFewRecords { needed: 1, found: 0 })?;
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(records.len());
    out.push((first.inf_h, first.sup_h));
    for w in records.windows(2) {
        integral += 0.5 * (w[1].t - w[0].t) * (w[0].sup_ux + w[1].sup_ux);
        out.push((first.inf_h * math::exp(-integral), first.sup_h * math::exp(integral)));
    }
    Ok(out)
}

/// `sqrt(quad(sum_{j <= order} |d^j eta|^2 + |d^j u|^2))` with repeated central differences.
pub fn sobolev_proxy(state: &State, grid: &Grid, order: u32) -> Result<f64> {
    if order > 2 {
        return Err(Error::invalid(format!("Sobolev proxy order must be at most 2, got {order}")));
    }
    let mut eta = state.eta.clone();
    let mut u = state.u.clone();
    let mut total = 0.0;
    for j in 0..=order {
        if j > 0 {
            eta = grid.ddx(&eta)?;
            u = grid.ddx(&u)?;
        }
        let sq: Field = eta.iter().zip(u.iter()).map(|(a, b)| a * a + b * b).collect();
        total += grid.quad(&sq)?;
    }
    Ok(math::sqrt(total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Bathymetry, Epsilon, Gravity};
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn model(bathy: Bathymetry, gravity: Gravity, eps: f64) -> Model {
        Model::new(Grid::new(2.0 * PI, 128).unwrap(), bathy, gravity, Epsilon::new(eps).unwrap())
    }

    fn sine_state(grid: &Grid, a: f64) -> State {
        State::new(grid.sample(|x| a * libm::sin(x)), Field::zeros(grid.n()), 0.0).unwrap()
    }

    #[test]
    fn energy_closed_forms() {
        let m = model(Bathymetry::flat(2.0).unwrap(), Gravity::constant(9.81).unwrap(), 0.7);
        assert_eq!(energy_total(&m, &State::rest(&m.grid)).unwrap(), 0.0);
        let s = State::new(Field::zeros(128), Field::constant(128, 0.3), 0.0).unwrap();
        assert_relative_eq!(energy_total(&m, &s).unwrap(), 0.5 * 2.0 * 0.09 * 2.0 * PI, max_relative = 1e-13);

        let m0 = model(Bathymetry::flat(2.0).unwrap(), Gravity::constant(9.81).unwrap(), 0.0);
        let s = State::new(m0.grid.sample(|x| 0.1 * libm::cos(x)), m0.grid.sample(libm::sin), 0.0).unwrap();
        let h = crate::fields::depth(&s, &m0.bathymetry, &m0.grid);
        let dens: Field = (0..128).map(|i| 0.5 * h[i] * s.u[i] * s.u[i] + 0.5 * 9.81 * s.eta[i] * s.eta[i]).collect();
        assert_relative_eq!(energy_total(&m0, &s).unwrap(), m0.grid.quad(&dens).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn source_cases() {
        let m = model(
            Bathymetry::gaussian_bump(1.0, 0.3, 0.5, 1.0, 2.0 * PI).unwrap(),
            Gravity::constant(9.81).unwrap(),
            1.0,
        );
        assert_eq!(energy_source(&m, &sine_state(&m.grid, 0.05)).unwrap(), 0.0);

        let moving = model(
            Bathymetry::moving_bump(1.0, 0.3, 0.5, 1.0, 0.4, 2.0 * PI).unwrap(),
            Gravity::constant(9.81).unwrap(),
            1.0,
        );
        let src = energy_source(&moving, &State::rest(&moving.grid)).unwrap();
        assert_eq!(src, 0.0);

        let (eps, a) = (0.5, 0.05);
        let g = Gravity::oscillating(9.81, 0.1, 2.0).unwrap();
        let m = model(Bathymetry::flat(1.0).unwrap(), g, eps);
        let mut s = sine_state(&m.grid, a);
        s.t = 0.3;
        let h = crate::fields::depth(&s, &m.bathymetry, &m.grid);
        let eta_x = m.grid.ddx(&s.eta).unwrap();
        let dens: Field = (0..128).map(|i| s.eta[i] * s.eta[i] + eps * h[i] * h[i] * eta_x[i] * eta_x[i]).collect();
        let expect = 0.5 * g.gdot(0.3) * m.grid.quad(&dens).unwrap();
        assert!(expect.abs() > 1e-4);
        assert_relative_eq!(energy_source(&m, &s).unwrap(), expect, max_relative = 1e-13);
    }

    #[test]
    fn sobolev_proxy_values() {
        let grid = Grid::new(2.0 * PI, 64).unwrap();
        assert_eq!(sobolev_proxy(&State::rest(&grid), &grid, 2).unwrap(), 0.0);
        let s = sine_state(&grid, 1.0);
        let factor = libm::sin(grid.dx()) / grid.dx();
        let h1 = sobolev_proxy(&s, &grid, 1).unwrap();
        assert_relative_eq!(h1, libm::sqrt(PI + PI * factor * factor), max_relative = 1e-13);
        let l2 = sobolev_proxy(&s, &grid, 0).unwrap();
        let h2 = sobolev_proxy(&s, &grid, 2).unwrap();
        assert!(h2 >= h1 && h1 >= l2);
        assert!(sobolev_proxy(&s, &grid, 3).is_err());
    }

    #[test]
    fn blowup_statuses() {
        let m = model(Bathymetry::flat(1.0).unwrap(), Gravity::constant(1.0).unwrap(), 1.0);
        let limits = BlowupThresholds::default().limits(0.0, 1.0);
        assert_eq!(blowup_check(&m, &State::rest(&m.grid), &limits).unwrap(), Status::Ok);
        let mut dry = State::rest(&m.grid);
        dry.eta[5] = -1.0;
        assert_eq!(blowup_check(&m, &dry, &limits).unwrap(), Status::Vacuum);
        let mut spike = State::rest(&m.grid);
        spike.u[10] = 3.0 * limits.gradient * m.grid.dx();
        assert_eq!(blowup_check(&m, &spike, &limits).unwrap(), Status::GradientBlowup);
        // vacuum wins over a gradient spike
        spike.eta[40] = -1.0;
        assert_eq!(blowup_check(&m, &spike, &limits).unwrap(), Status::Vacuum);
        let mut nan = State::rest(&m.grid);
        nan.u[3] = f64::NAN;
        assert_eq!(blowup_check(&m, &nan, &limits).unwrap(), Status::GradientBlowup);
    }

    fn rec(t: f64, energy: f64, rate: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            mass: 1.0,
            energy,
            energy_source_integral: 0.0,
            sup_wx: 0.0,
            inf_h: 1.0,
            h2_norm: 0.0,
            status: Status::Ok,
            energy_source_rate: rate,
            sup_h: 1.0,
            sup_ux: 0.5,
            gronwall_source: 0.0,
        }
    }

    #[test]
    fn residual_and_envelopes() {
        assert!(energy_balance_residual(&[rec(0.0, 1.0, 0.0), rec(1.0, 1.0, 0.0)]).is_err());
        let recs: Vec<_> = (0..5).map(|k| rec(k as f64 * 0.1, 2.0 * k as f64 * 0.1, 2.0)).collect();
        for r in energy_balance_residual(&recs).unwrap() {
            assert!(r.abs() < 1e-12);
        }

        let m = model(Bathymetry::flat(1.0).unwrap(), Gravity::constant(9.81).unwrap(), 1.0);
        let recs: Vec<_> = (0..11).map(|k| rec(k as f64 * 0.2, 3.0, 0.0)).collect();
        let env = gronwall_bound(&recs, &m).unwrap();
        for (r, e) in recs.iter().zip(&env) {
            assert_relative_eq!(*e, 3.0 * libm::exp(r.t), max_relative = 1e-12);
        }
        assert!(gronwall_bound(&[], &m).is_err());

        let env = depth_envelope(&recs).unwrap();
        assert_relative_eq!(env[10].0, libm::exp(-0.5 * 2.0), max_relative = 1e-12);
        assert_relative_eq!(env[10].1, libm::exp(0.5 * 2.0), max_relative = 1e-12);
    }

    #[test]
    fn csv_row_layout() {
        let r = rec(0.5, 1.25, 0.0);
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.ends_with(",ok"));
        assert!(row.starts_with("5e-1,1e0,1.25e0,"));
    }
}
