//! Periodic uniform mesh and the discrete calculus shared by every other module.
//!
//! Nodes sit at `x_i = i * dx` for `i = 0..n`, with `x_n` identified with `x_0`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Smallest admissible cell count.
pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Grid {
    length: f64,
    n: usize,
    dx: f64,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(alloc::format!("domain length must be positive, got {length}")));
        }
        if n < MIN_CELLS {
            return Err(Error::invalid(alloc::format!("cell count must be at least {MIN_CELLS}, got {n}")));
        }
        Ok(Grid { length, n, dx: length / n as f64 })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.nodes().map(f).collect())
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, found: f.len() });
        }
        Ok(())
    }

    /// Second-order central difference `(f[i+1] - f[i-1]) / 2dx` with periodic wrap.
    pub fn ddx(&self, f: &[f64]) -> Result<Field> {
        self.check(f)?;
        let n = self.n;
        let inv = 0.5 / self.dx;
        let out = (0..n).map(|i| (f[(i + 1) % n] - f[(i + n - 1) % n]) * inv).collect();
        Ok(Field(out))
    }

    /// Compact three-point second difference `(f[i+1] - 2 f[i] + f[i-1]) / dx^2`.
    pub fn d2x(&self, f: &[f64]) -> Result<Field> {
        self.check(f)?;
        let n = self.n;
        let inv = 1.0 / (self.dx * self.dx);
        let out = (0..n).map(|i| (f[(i + 1) % n] - 2.0 * f[i] + f[(i + n - 1) % n]) * inv).collect();
        Ok(Field(out))
    }

    /// Rectangle rule `dx * sum f`, spectrally accurate for smooth periodic integrands.
    pub fn quad(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        Ok(self.dx * f.iter().sum::<f64>())
    }

    /// Discrete L2 norm `sqrt(quad(f^2))`.
    pub fn l2(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        Ok(crate::math::sqrt(self.dx * f.iter().map(|v| v * v).sum::<f64>()))
    }
}

/// Nodal values of a scalar function on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Field(vec![value; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `max |f_i|`; NaN if any entry is NaN.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, |a, b| if b < a || b.is_nan() { b } else { a })
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, |a, b| if b > a || b.is_nan() { b } else { a })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.0.iter().map(|&v| f(v)).collect())
    }

    /// Nodewise combination of two fields of equal length.
    pub fn zip_map(&self, other: &[f64], f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.len(), other.len());
        Field(self.0.iter().zip(other).map(|(&a, &b)| f(a, b)).collect())
    }

    /// `self + scale * other`, nodewise.
    pub fn axpy(&self, scale: f64, other: &[f64]) -> Field {
        self.zip_map(other, |a, b| a + scale * b)
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, &v| {
        let a = v.abs();
        if a > m || a.is_nan() {
            a
        } else {
            m
        }
    })
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

impl FromIterator<f64> for Field {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Field(iter.into_iter().collect())
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn spacing() {
        assert_eq!(Grid::new(1.0, 8).unwrap().dx(), 0.125);
        let g = Grid::new(2.0 * PI, 256).unwrap();
        assert_relative_eq!(g.dx(), 2.0 * PI / 256.0);
        assert!(matches!(Grid::new(-1.0, 8), Err(Error::InvalidArgument(_))));
        assert!(matches!(Grid::new(1.0, 7), Err(Error::InvalidArgument(_))));
        assert!(Grid::new(0.0, 8).is_err());
    }

    #[test]
    fn ddx_of_constant_is_zero() {
        let g = Grid::new(3.0, 16).unwrap();
        let d = g.ddx(&Field::constant(16, 2.5)).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ddx_fourier_mode() {
        let l = 2.0;
        let g = Grid::new(l, 64).unwrap();
        let k = 2.0 * PI / l;
        let f = g.sample(|x| libm::sin(k * x));
        let d = g.ddx(&f).unwrap();
        let factor = libm::sin(k * g.dx()) / g.dx();
        for (i, v) in d.iter().enumerate() {
            assert_relative_eq!(*v, factor * libm::cos(k * g.x(i)), epsilon = 1e-13);
        }
    }

    #[test]
    fn ddx_second_order() {
        let errs: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&n| {
                let g = Grid::new(1.0, n).unwrap();
                let k = 2.0 * PI;
                let d = g.ddx(&g.sample(|x| libm::sin(k * x))).unwrap();
                let exact = g.sample(|x| k * libm::cos(k * x));
                d.zip_map(&exact, |a, b| a - b).max_abs()
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.7..=4.3).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn quad_basics() {
        let g = Grid::new(2.0, 32).unwrap();
        assert_relative_eq!(g.quad(&Field::constant(32, 1.5)).unwrap(), 3.0, epsilon = 1e-14);
        let s = g.sample(|x| libm::sin(PI * x));
        assert!(g.quad(&s).unwrap().abs() < 1e-14);
        let f = g.sample(|x| libm::exp(libm::sin(PI * x)) + x * 0.0);
        assert!(g.quad(&g.ddx(&f).unwrap()).unwrap().abs() < 1e-13);
    }

    #[test]
    fn length_mismatch() {
        let g = Grid::new(1.0, 8).unwrap();
        assert_eq!(g.ddx(&[0.0; 5]), Err(Error::LengthMismatch { expected: 8, found: 5 }));
        assert!(g.quad(&[0.0; 9]).is_err());
    }
}
