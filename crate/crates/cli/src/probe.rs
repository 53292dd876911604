//! Random ensembles for the operator probe.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsvub_core::{Epsilon, Field, Grid, SlOperator};

/// Depth modes; their summed amplitude keeps `h` inside `[0.5, 2]`.
const DEPTH_MODES: usize = 4;
const DEPTH_MEAN: f64 = 1.25;
const DEPTH_SPREAD: f64 = 0.7;
const RHS_MODES: usize = 8;

pub struct Ensemble {
    rng: ChaCha8Rng,
}

impl Ensemble {
    pub fn new(seed: u64) -> Self {
        Ensemble { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn series(&mut self, grid: &Grid, mean: f64, amps: &[f64]) -> Field {
        let l = grid.length();
        let terms: Vec<(f64, f64)> = amps.iter().map(|&a| (a, self.rng.random_range(0.0..2.0 * PI))).collect();
        grid.sample(|x| {
            mean + terms
                .iter()
                .enumerate()
                .map(|(m, &(a, p))| a * (2.0 * PI * (m + 1) as f64 * x / l + p).cos())
                .sum::<f64>()
        })
    }

    /// Smooth periodic depth with values in `[0.5, 2]`.
    pub fn depth(&mut self, grid: &Grid) -> Field {
        let per = DEPTH_SPREAD / DEPTH_MODES as f64;
        let amps: Vec<f64> = (0..DEPTH_MODES).map(|_| self.rng.random_range(-per..per)).collect();
        self.series(grid, DEPTH_MEAN, &amps)
    }

    /// Smooth periodic right-hand side with unit-scale coefficients.
    pub fn rhs(&mut self, grid: &Grid) -> Field {
        let mean = self.rng.random_range(-1.0..1.0);
        let amps: Vec<f64> = (0..RHS_MODES).map(|_| self.rng.random_range(-1.0..1.0)).collect();
        self.series(grid, mean, &amps)
    }
}

/// Measurements on one random `(h, rhs)` pair.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProbeSample {
    pub index: usize,
    pub h_inf: f64,
    /// `|L solve(rhs) - rhs|_inf / |rhs|_inf`.
    pub residual: f64,
    /// `v.Lv / (h_inf |v|^2)` with `v = rhs`; at least one for an SPD operator bounded below by `h_inf`.
    pub coercivity: f64,
    /// `|solve(rhs)|_{H^1} / |rhs|_{L^2}`.
    pub bound_ratio: f64,
}

fn h1(grid: &Grid, v: &[f64]) -> f64 {
    let l2 = grid.l2(v).unwrap_or(f64::NAN);
    let dl2 = grid.ddx(v).and_then(|d| grid.l2(&d)).unwrap_or(f64::NAN);
    (l2 * l2 + dl2 * dl2).sqrt()
}

pub fn probe_pair(index: usize, grid: &Grid, eps: Epsilon, h: &[f64], rhs: &[f64]) -> rsvub_core::Result<ProbeSample> {
    let op = SlOperator::assemble(h, eps, grid)?;
    let psi = op.solve(rhs)?;
    let back = op.apply(&psi)?;
    let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual = back.iter().zip(rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    let norm2: f64 = rhs.iter().map(|v| v * v).sum();
    let coercivity = op.quadratic_form(rhs)? / (op.h_inf() * norm2);
    let bound_ratio = h1(grid, &psi) / grid.l2(rhs)?;
    Ok(ProbeSample { index, h_inf: op.h_inf(), residual, coercivity, bound_ratio })
}

/// Draws `samples` pairs from `seed`, split across threads; results are in
/// draw order and independent of the thread count.
pub fn run_ensemble(grid: &Grid, eps: Epsilon, samples: usize, seed: u64) -> rsvub_core::Result<Vec<ProbeSample>> {
    let mut ens = Ensemble::new(seed);
    let pairs: Vec<(Field, Field)> = (0..samples).map(|_| (ens.depth(grid), ens.rhs(grid))).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(samples.max(1));
    let chunk = samples.div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .enumerate()
            .map(|(c, block)| {
                s.spawn(move || {
                    block
                        .iter()
                        .enumerate()
                        .map(|(j, (h, r))| probe_pair(c * chunk + j, grid, eps, h, r))
                        .collect::<rsvub_core::Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(samples);
        for h in handles {
            out.extend(h.join().expect("probe worker panicked")?);
        }
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_stays_in_range() {
        let g = Grid::new(10.0, 128).unwrap();
        let mut e = Ensemble::new(3);
        for _ in 0..200 {
            let h = e.depth(&g);
            assert!(h.min() >= 0.5 && h.max() <= 2.0);
        }
    }

    #[test]
    fn ensemble_is_seeded() {
        let g = Grid::new(10.0, 64).unwrap();
        let eps = Epsilon::new(1.0).unwrap();
        let a = run_ensemble(&g, eps, 10, 42).unwrap();
        let b = run_ensemble(&g, eps, 10, 42).unwrap();
        let c = run_ensemble(&g, eps, 10, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|s| s.coercivity >= 1.0 - 1e-12));
    }

    #[test]
    fn measured_solve_constant_is_stable() {
        // sup over 50 samples of |solve(rhs)|_{H^1} / |rhs|_{L^2}, for several draws
        let g = Grid::new(20.0, 256).unwrap();
        let eps = Epsilon::new(1.0).unwrap();
        let constants: Vec<f64> = (0..6)
            .map(|seed| {
                let s = run_ensemble(&g, eps, 50, seed).unwrap();
                s.iter().map(|p| p.bound_ratio).fold(0.0, f64::max)
            })
            .collect();
        let hi = constants.iter().copied().fold(0.0, f64::max);
        let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(hi / lo <= 2.0, "{constants:?}");
    }
}
