//! The Sturm-Liouville operator `L_h = h - eps d_x h^3 d_x` on the periodic grid.
//!
//! Flux form with face coefficients `kappa[i] = ((h[i] + h[i+1]) / 2)^3`:
//!
//! ```text
//! (L psi)[i] = h[i] psi[i] - eps/dx^2 * (kappa[i] (psi[i+1] - psi[i]) - kappa[i-1] (psi[i] - psi[i-1]))
//! ```
//!
//! The matrix is symmetric, cyclic tridiagonal and strictly diagonally dominant
//! whenever `inf h > 0`, so it is inverted directly: Thomas elimination on the
//! open chain plus a Sherman-Morrison correction for the periodic corners.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::Epsilon;
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct SlOperator {
    diag: Vec<f64>,
    /// `off[i]` couples nodes `i` and `i + 1 (mod n)`.
    off: Vec<f64>,
    h_inf: f64,
    eps: Epsilon,
}

impl SlOperator {
    /// Assembles `L_h`; fails with a vacuum error unless `inf h > 0`.
    pub fn assemble(h: &[f64], eps: Epsilon, grid: &Grid) -> Result<Self> {
        if h.len() != grid.n() {
            return Err(Error::LengthMismatch { expected: grid.n(), found: h.len() });
        }
        let n = h.len();
        let h_inf = crate::grid::Field::from(h.to_vec()).min();
        if !(h_inf > 0.0) {
            return Err(Error::Vacuum { t: f64::NAN, inf_h: h_inf, stage: None });
        }
        let scale = eps.get() / (grid.dx() * grid.dx());
        let off: Vec<f64> = (0..n)
            .map(|i| {
                let m = 0.5 * (h[i] + h[(i + 1) % n]);
                -scale * m * m * m
            })
            .collect();
        let diag = (0..n).map(|i| h[i] - off[i] - off[(i + n - 1) % n]).collect();
        Ok(SlOperator { diag, off, h_inf, eps })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn h_inf(&self) -> f64 {
        self.h_inf
    }

    pub fn eps(&self) -> Epsilon {
        self.eps
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::LengthMismatch { expected: self.n(), found: v.len() });
        }
        Ok(())
    }

    /// Matrix-vector product `L_h psi`.
    pub fn apply(&self, psi: &[f64]) -> Result<Field> {
        self.check(psi)?;
        let n = self.n();
        Ok((0..n)
            .map(|i| {
                let ip = (i + 1) % n;
                let im = (i + n - 1) % n;
                self.diag[i] * psi[i] + self.off[i] * psi[ip] + self.off[im] * psi[im]
            })
            .collect())
    }

    /// Solves `L_h psi = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Field> {
        self.check(rhs)?;
        let n = self.n();
        let corner = self.off[n - 1];
        if corner == 0.0 {
            let mut diag = self.diag.clone();
            let mut x = rhs.to_vec();
            thomas(&self.off[..n - 1], &mut diag, &mut x)?;
            return Ok(x.into());
        }

        // A = T + gamma w w^T, w = (1, 0, .., 0, corner / gamma), gamma = -diag[0]
        let gamma = -self.diag[0];
        let mut t_diag = self.diag.clone();
        t_diag[0] -= gamma;
        t_diag[n - 1] -= corner * corner / gamma;

        let mut y = rhs.to_vec();
        let mut work = t_diag.clone();
        thomas(&self.off[..n - 1], &mut work, &mut y)?;

        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = corner;
        thomas(&self.off[..n - 1], &mut t_diag, &mut z)?;

        let ratio = corner / gamma;
        let denom = 1.0 + z[0] + ratio * z[n - 1];
        if !(denom.abs() > f64::EPSILON) {
            return Err(Error::NumericalDegeneracy("singular periodic correction in cyclic solve"));
        }
        let factor = (y[0] + ratio * y[n - 1]) / denom;
        for (yi, zi) in y.iter_mut().zip(&z) {
            *yi -= factor * zi;
        }
        Ok(y.into())
    }

    /// `L_h^{-1} d_x psi`, with `d_x` the central difference of the grid.
    pub fn solve_dx(&self, psi: &[f64], grid: &Grid) -> Result<Field> {
        self.solve(&grid.ddx(psi)?)
    }

    /// `v . L_h v` (unweighted dot product).
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        let lv = self.apply(v)?;
        Ok(v.iter().zip(lv.iter()).map(|(a, b)| a * b).sum())
    }
}

/// In-place Thomas elimination for a symmetric tridiagonal system with
/// off-diagonal `off`; `diag` is overwritten by the pivots and `x` holds the
/// right-hand side on entry and the solution on exit.
fn thomas(off: &[f64], diag: &mut [f64], x: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if !(diag[0] > 0.0) {
        return Err(vacuum_pivot());
    }
    for i in 1..n {
        let w = off[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        if !(diag[i] > 0.0) {
            return Err(vacuum_pivot());
        }
        x[i] -= w * x[i - 1];
    }
    x[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (x[i] - off[i] * x[i + 1]) / diag[i];
    }
    Ok(())
}

fn vacuum_pivot() -> Error {
    Error::Vacuum { t: f64::NAN, inf_h: f64::NAN, stage: None }
}
