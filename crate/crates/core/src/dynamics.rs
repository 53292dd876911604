//! Spatial semi-discretisation of the evolution system
//!
//! ```text
//! eta_t = -(h u)_x - d_t
//! u_t   = -u u_x - g eta_x + eps g L_h^{-1}{h^2 eta_x d_xx} - eps L_h^{-1} d_x {P}
//! P     = 2 h^3 u_x^2 - g/2 h^2 (eta_x^2 + 2 eta_x d_x)
//! ```
//!
//! Products are formed nodewise before differencing, so the mass flux
//! telescopes and lake-at-rest data is an exact discrete steady state.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::{Bathymetry, BathymetrySample, Epsilon, Gravity, State};
use crate::grid::{Field, Grid};
use crate::math;
use crate::sturm_liouville::SlOperator;

/// Everything that defines the semi-discrete system apart from the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub grid: Grid,
    pub bathymetry: Bathymetry,
    pub gravity: Gravity,
    pub eps: Epsilon,
}

impl Model {
    pub fn new(grid: Grid, bathymetry: Bathymetry, gravity: Gravity, eps: Epsilon) -> Self {
        Model { grid, bathymetry, gravity, eps }
    }

    /// Samples the bathymetry and forms `h`, rejecting non-positive depth.
    pub(crate) fn frame(&self, state: &State) -> Result<Frame> {
        let n = self.grid.n();
        if state.eta.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: state.eta.len() });
        }
        if state.u.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: state.u.len() });
        }
        let bathy = self.bathymetry.sample(&self.grid, state.t);
        let h = state.eta.zip_map(&bathy.d, |e, d| e + d);
        let inf_h = h.min();
        if !(inf_h > 0.0) {
            return Err(Error::Vacuum { t: state.t, inf_h, stage: None });
        }
        Ok(Frame { h, bathy, g: self.gravity.g(state.t) })
    }

    fn operator(&self, h: &[f64], t: f64) -> Result<SlOperator> {
        SlOperator::assemble(h, self.eps, &self.grid).map_err(|e| stamp(e, t, h))
    }
}

fn stamp(e: Error, t: f64, h: &[f64]) -> Error {
    match e {
        Error::Vacuum { stage, .. } => Error::Vacuum { t, inf_h: Field::from(h.to_vec()).min(), stage },
        other => other,
    }
}

pub(crate) struct Frame {
    pub h: Field,
    pub bathy: BathymetrySample,
    pub g: f64,
}

/// `(eta_t, u_t)` as returned by the semi-discrete right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub deta_dt: Field,
    pub du_dt: Field,
}

/// The three terms through which the bottom topography enters the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct BathymetrySources {
    /// `eps g h^2 eta_x d_xx`, inverted through `L_h` in the momentum equation.
    pub curvature: Field,
    /// `g h^2 eta_x d_x`, the slope part of `P`.
    pub slope: Field,
    /// `d_t`, the moving-bottom term of the mass equation.
    pub motion: Field,
}

pub fn bathymetry_sources(model: &Model, state: &State) -> Result<BathymetrySources> {
    let f = model.frame(state)?;
    let eta_x = model.grid.ddx(&state.eta)?;
    let eps = model.eps.get();
    let n = model.grid.n();
    let curvature = (0..n).map(|i| eps * f.g * f.h[i] * f.h[i] * eta_x[i] * f.bathy.d_xx[i]).collect();
    let slope = (0..n).map(|i| f.g * f.h[i] * f.h[i] * eta_x[i] * f.bathy.d_x[i]).collect();
    Ok(BathymetrySources { curvature, slope, motion: f.bathy.d_t })
}

/// `P = 2 h^3 u_x^2 - g/2 h^2 (eta_x^2 + 2 eta_x d_x)` and `k = h^2 eta_x d_xx`.
fn local_terms(f: &Frame, eta_x: &[f64], u_x: &[f64]) -> (Field, Field) {
    let n = f.h.len();
    let mut p = Vec::with_capacity(n);
    let mut k = Vec::with_capacity(n);
    for i in 0..n {
        let h = f.h[i];
        let h2 = h * h;
        p.push(
            2.0 * h2 * h * u_x[i] * u_x[i] - 0.5 * f.g * h2 * (eta_x[i] * eta_x[i] + 2.0 * eta_x[i] * f.bathy.d_x[i]),
        );
        k.push(h2 * eta_x[i] * f.bathy.d_xx[i]);
    }
    (p.into(), k.into())
}

/// `eps L_h^{-1} (g k - d_x P)`: the non-local part of the momentum equation.
fn nonlocal_momentum(model: &Model, f: &Frame, t: f64, eta_x: &[f64], u_x: &[f64]) -> Result<Field> {
    let eps = model.eps.get();
    if eps == 0.0 {
        return Ok(Field::zeros(model.grid.n()));
    }
    let (p, k) = local_terms(f, eta_x, u_x);
    let dp = model.grid.ddx(&p)?;
    let rhs = k.zip_map(&dp, |k, dp| f.g * k - dp);
    let op = model.operator(&f.h, t)?;
    Ok(op.solve(&rhs)?.map(|v| eps * v))
}

pub(crate) fn nonlocal_for(model: &Model, state: &State) -> Result<Field> {
    let f = model.frame(state)?;
    let eta_x = model.grid.ddx(&state.eta)?;
    let u_x = model.grid.ddx(&state.u)?;
    nonlocal_momentum(model, &f, state.t, &eta_x, &u_x)
}

/// `eta_t = -d_x(h u) - d_t`.
pub fn rhs_mass(model: &Model, state: &State) -> Result<Field> {
    let f = model.frame(state)?;
    mass_from_frame(model, state, &f)
}

fn mass_from_frame(model: &Model, state: &State, f: &Frame) -> Result<Field> {
    let flux = f.h.zip_map(&state.u, |h, u| h * u);
    let div = model.grid.ddx(&flux)?;
    Ok(div.zip_map(&f.bathy.d_t, |dq, dt| -dq - dt))
}

pub fn rhs_momentum(model: &Model, state: &State) -> Result<Field> {
    let f = model.frame(state)?;
    momentum_from_frame(model, state, &f)
}

fn momentum_from_frame(model: &Model, state: &State, f: &Frame) -> Result<Field> {
    let grid = &model.grid;
    let eta_x = grid.ddx(&state.eta)?;
    let u_x = grid.ddx(&state.u)?;
    let nonlocal = nonlocal_momentum(model, f, state.t, &eta_x, &u_x)?;
    Ok((0..grid.n()).map(|i| -state.u[i] * u_x[i] - f.g * eta_x[i] + nonlocal[i]).collect())
}

/// Both right-hand sides from one depth evaluation.
pub fn tendency(model: &Model, state: &State) -> Result<Tendency> {
    let f = model.frame(state)?;
    Ok(Tendency { deta_dt: mass_from_frame(model, state, &f)?, du_dt: momentum_from_frame(model, state, &f)? })
}

/// `R` from its defining expression, with `u_t` taken from `tendency`:
///
/// `R = 2 h^3 u_x^2 - h^3 [u_t + u u_x + g eta_x]_x - g/2 h^2 (eta_x^2 + 2 eta_x d_x)`.
///
/// The outer derivative of the bracket is expanded as
/// `d_x(u_t) + u_x^2 + u u_xx + g eta_xx` with compact second differences, which
/// keeps this route an independent O(dx^2) discretisation of the same quantity
/// as [`compute_r_nonlocal`].
pub fn compute_r_direct(model: &Model, state: &State, tendency: &Tendency) -> Result<Field> {
    let grid = &model.grid;
    let f = model.frame(state)?;
    let eta_x = grid.ddx(&state.eta)?;
    let u_x = grid.ddx(&state.u)?;
    let eta_xx = grid.d2x(&state.eta)?;
    let u_xx = grid.d2x(&state.u)?;
    let ut_x = grid.ddx(&tendency.du_dt)?;
    let (p, _) = local_terms(&f, &eta_x, &u_x);
    Ok((0..grid.n())
        .map(|i| {
            let h3 = f.h[i] * f.h[i] * f.h[i];
            let bracket_x = ut_x[i] + u_x[i] * u_x[i] + state.u[i] * u_xx[i] + f.g * eta_xx[i];
            p[i] - h3 * bracket_x
        })
        .collect())
}

/// `R = (1 + eps h^3 d_x L^{-1} d_x) P - eps h^3 d_x L^{-1} {g h^2 eta_x d_xx}`.
pub fn compute_r_nonlocal(model: &Model, state: &State) -> Result<Field> {
    let grid = &model.grid;
    let f = model.frame(state)?;
    let eta_x = grid.ddx(&state.eta)?;
    let u_x = grid.ddx(&state.u)?;
    let (p, k) = local_terms(&f, &eta_x, &u_x);
    let eps = model.eps.get();
    if eps == 0.0 {
        return Ok(p);
    }
    let op = model.operator(&f.h, state.t)?;
    let a = grid.ddx(&op.solve_dx(&p, grid)?)?;
    let b = grid.ddx(&op.solve(&k.map(|v| f.g * v))?)?;
    Ok((0..grid.n())
        .map(|i| {
            let h3 = f.h[i] * f.h[i] * f.h[i];
            p[i] + eps * h3 * (a[i] - b[i])
        })
        .collect())
}

/// Characteristic speeds `u -/+ sqrt(g h)`, the eigenvalues of `B(W)`.
pub fn char_speeds(model: &Model, state: &State) -> Result<(Field, Field)> {
    let f = model.frame(state)?;
    let c = f.h.map(|h| math::sqrt(f.g * h));
    Ok((state.u.zip_map(&c, |u, c| u - c), state.u.zip_map(&c, |u, c| u + c)))
}

/// Nodewise advection matrix `B(W) = [[u, h], [g, u]]` and its diagonal
/// symmetriser `A(W) = diag(g / h, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub b: Vec<[[f64; 2]; 2]>,
    pub a: Vec<[f64; 2]>,
}

impl SystemMatrices {
    pub fn new(model: &Model, state: &State) -> Result<Self> {
        let f = model.frame(state)?;
        let b = f.h.iter().zip(state.u.iter()).map(|(&h, &u)| [[u, h], [f.g, u]]).collect();
        let a = f.h.iter().map(|&h| [f.g / h, 1.0]).collect();
        Ok(SystemMatrices { b, a })
    }

    /// `max |(A B)_12 - (A B)_21|` over nodes.
    pub fn asymmetry(&self) -> f64 {
        self.a.iter().zip(&self.b).map(|(a, b)| (a[0] * b[0][1] - a[1] * b[1][0]).abs()).fold(0.0, f64::max)
    }

    /// Smallest diagonal entry of `A` over all nodes.
    pub fn min_symmetriser_entry(&self) -> f64 {
        self.a.iter().map(|a| a[0].min(a[1])).fold(f64::INFINITY, f64::min)
    }
}

pub fn symmetriser_check(model: &Model, state: &State) -> Result<f64> {
    Ok(SystemMatrices::new(model, state)?.asymmetry())
}
