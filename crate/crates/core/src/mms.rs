//! Manufactured-solution harness.
//!
//! A target `(eta*, u*)` is an analytic function of `(t, x)` that supplies its
//! own derivatives. [`mms_forcing`] returns the residual of the discrete
//! right-hand side on the sampled target; [`analytic_forcing`] returns the
//! continuum residual, which is what a convergence study must add so that the
//! target solves the forced PDE exactly.

use crate::dynamics::{self, Model};
use crate::error::Result;
use crate::fields::State;
use crate::grid::Field;
use crate::integrate::Forcing;
use crate::math;
use crate::sturm_liouville::SlOperator;

/// Pointwise values and derivatives of a target solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetJet {
    pub eta: f64,
    pub eta_t: f64,
    pub eta_x: f64,
    pub eta_xx: f64,
    pub eta_xxx: f64,
    pub u: f64,
    pub u_t: f64,
    pub u_x: f64,
    pub u_xx: f64,
    pub u_xxx: f64,
    pub u_tx: f64,
    pub u_txx: f64,
}

pub trait ManufacturedSolution {
    fn jet(&self, t: f64, x: f64) -> TargetJet;
}

/// `eta = A cos(k x - w t)`, `u = B sin(k x - w t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravellingWave {
    pub eta_amplitude: f64,
    pub u_amplitude: f64,
    pub wavenumber: f64,
    pub omega: f64,
}

impl TravellingWave {
    /// Wave with `mode` periods over a domain of length `length`.
    pub fn on_period(eta_amplitude: f64, u_amplitude: f64, mode: u32, length: f64, omega: f64) -> Self {
        TravellingWave {
            eta_amplitude,
            u_amplitude,
            wavenumber: 2.0 * core::f64::consts::PI * mode as f64 / length,
            omega,
        }
    }
}

impl ManufacturedSolution for TravellingWave {
    fn jet(&self, t: f64, x: f64) -> TargetJet {
        let (a, b, k, w) = (self.eta_amplitude, self.u_amplitude, self.wavenumber, self.omega);
        let th = k * x - w * t;
        let (s, c) = (math::sin(th), math::cos(th));
        TargetJet {
            eta: a * c,
            eta_t: a * w * s,
            eta_x: -a * k * s,
            eta_xx: -a * k * k * c,
            eta_xxx: a * k * k * k * s,
            u: b * s,
            u_t: -b * w * c,
            u_x: b * k * c,
            u_xx: -b * k * k * s,
            u_xxx: -b * k * k * k * c,
            u_tx: b * w * k * s,
            u_txx: b * w * k * k * c,
        }
    }
}

pub fn sample_target(target: &impl ManufacturedSolution, model: &Model, t: f64) -> State {
    let jets: alloc::vec::Vec<TargetJet> = model.grid.nodes().map(|x| target.jet(t, x)).collect();
    State { eta: jets.iter().map(|j| j.eta).collect(), u: jets.iter().map(|j| j.u).collect(), t }
}

/// Residual of the discrete semi-discretisation on the sampled target:
/// `(eta*_t - rhs_mass, u*_t - rhs_momentum)`.
pub fn mms_forcing(model: &Model, target: &impl ManufacturedSolution, t: f64) -> Result<(Field, Field)> {
    let state = sample_target(target, model, t);
    let k = dynamics::tendency(model, &state)?;
    let mut s_eta = Field::zeros(model.grid.n());
    let mut s_u = Field::zeros(model.grid.n());
    for (i, x) in model.grid.nodes().enumerate() {
        let j = target.jet(t, x);
        s_eta[i] = j.eta_t - k.deta_dt[i];
        s_u[i] = j.u_t - k.du_dt[i];
    }
    Ok((s_eta, s_u))
}

/// Continuum residual of the target.
///
/// The momentum residual is formed before inversion,
/// `Q = L_h M - eps g h^2 eta_x d_xx + eps P_x` with `M = u_t + u u_x + g eta_x`,
/// evaluated analytically, and returned as `L_h^{-1} Q` with the discrete
/// operator assembled on the target depth.
pub fn analytic_forcing(model: &Model, target: &impl ManufacturedSolution, t: f64) -> Result<(Field, Field)> {
    let grid = &model.grid;
    let bathy = &model.bathymetry;
    let g = model.gravity.g(t);
    let eps = model.eps.get();
    let n = grid.n();
    let mut s_eta = Field::zeros(n);
    let mut q = Field::zeros(n);
    let mut h_star = Field::zeros(n);
    for (i, x) in grid.nodes().enumerate() {
        let j = target.jet(t, x);
        let (d, d_x, d_xx, d_t) = (bathy.d(t, x), bathy.d_x(t, x), bathy.d_xx(t, x), bathy.d_t(t, x));
        let h = j.eta + d;
        let h_x = j.eta_x + d_x;
        h_star[i] = h;
        s_eta[i] = j.eta_t + h_x * j.u + h * j.u_x + d_t;

        let m = j.u_t + j.u * j.u_x + g * j.eta_x;
        let m_x = j.u_tx + j.u_x * j.u_x + j.u * j.u_xx + g * j.eta_xx;
        let m_xx = j.u_txx + 3.0 * j.u_x * j.u_xx + j.u * j.u_xxx + g * j.eta_xxx;
        let (h2, h3) = (h * h, h * h * h);
        let l_m = h * m - eps * (3.0 * h2 * h_x * m_x + h3 * m_xx);
        let p_x = 6.0 * h2 * h_x * j.u_x * j.u_x + 4.0 * h3 * j.u_x * j.u_xx
            - g * h * h_x * (j.eta_x * j.eta_x + 2.0 * j.eta_x * d_x)
            - g * h2 * (j.eta_x * j.eta_xx + j.eta_xx * d_x + j.eta_x * d_xx);
        q[i] = l_m - eps * g * h2 * j.eta_x * d_xx + eps * p_x;
    }
    let op = SlOperator::assemble(&h_star, model.eps, grid)?;
    Ok((s_eta, op.solve(&q)?))
}

/// [`Forcing`] adapter that adds the continuum residual of `target`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedForcing<T> {
    pub target: T,
}

impl<T: ManufacturedSolution> Forcing for ManufacturedForcing<T> {
    fn eval(&self, model: &Model, state: &State) -> Result<(Field, Field)> {
        analytic_forcing(model, &self.target, state.t)
    }
}
