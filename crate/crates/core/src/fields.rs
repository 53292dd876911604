//! Physical field bundles: the state `(eta, u)`, bathymetry with analytic
//! derivatives, time-dependent gravity, the regularisation strength and the
//! scenario presets used to build initial data.

use alloc::format;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::math;

/// Surface elevation and depth-averaged velocity at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub eta: Field,
    pub u: Field,
    pub t: f64,
}

impl State {
    pub fn new(eta: Field, u: Field, t: f64) -> Result<Self> {
        if eta.len() != u.len() {
            return Err(Error::LengthMismatch { expected: eta.len(), found: u.len() });
        }
        Ok(State { eta, u, t })
    }

    pub fn rest(grid: &Grid) -> Self {
        State { eta: Field::zeros(grid.n()), u: Field::zeros(grid.n()), t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.eta.is_finite() && self.u.is_finite()
    }
}

/// Regularisation strength; the length scale squared in `h - eps d_x h^3 d_x`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Epsilon(f64);

impl Epsilon {
    pub const ZERO: Epsilon = Epsilon(0.0);

    pub fn new(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::invalid(format!("eps >= 0 required, got {eps}")));
        }
        Ok(Epsilon(eps))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Gravity acceleration, possibly time dependent.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Gravity {
    Constant(f64),
    /// `g(t) = g0 (1 + amplitude sin(omega t))` with `|amplitude| < 1`.
    Oscillating {
        g0: f64,
        amplitude: f64,
        omega: f64,
    },
}

impl Gravity {
    pub fn constant(g0: f64) -> Result<Self> {
        if !(g0.is_finite() && g0 > 0.0) {
            return Err(Error::invalid(format!("gravity must be positive, got {g0}")));
        }
        Ok(Gravity::Constant(g0))
    }

    pub fn oscillating(g0: f64, amplitude: f64, omega: f64) -> Result<Self> {
        Gravity::constant(g0)?;
        if !(amplitude.abs() < 1.0) {
            return Err(Error::invalid(format!(
                "gravity modulation amplitude must satisfy |a| < 1 to keep g > 0, got {amplitude}"
            )));
        }
        if !omega.is_finite() {
            return Err(Error::invalid("gravity modulation frequency must be finite"));
        }
        Ok(Gravity::Oscillating { g0, amplitude, omega })
    }

    pub fn g(&self, t: f64) -> f64 {
        match *self {
            Gravity::Constant(g0) => g0,
            Gravity::Oscillating { g0, amplitude, omega } => g0 * (1.0 + amplitude * math::sin(omega * t)),
        }
    }

    pub fn gdot(&self, t: f64) -> f64 {
        match *self {
            Gravity::Constant(_) => 0.0,
            Gravity::Oscillating { g0, amplitude, omega } => g0 * amplitude * omega * math::cos(omega * t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Gravity::Constant(_))
    }
}

/// Periodic sum of Gaussian images and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PeriodicGaussian {
    sigma: f64,
    period: f64,
}

const IMAGES: i32 = 4;

impl PeriodicGaussian {
    fn new(sigma: f64, period: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= period / 4.0) {
            return Err(Error::invalid(format!(
                "bump width sigma must lie in (0, L/4] = (0, {}], got {sigma}",
                period / 4.0
            )));
        }
        Ok(PeriodicGaussian { sigma, period })
    }

    /// Returns `(phi, phi', phi'')` at offset `xi` from the centre.
    fn eval(&self, xi: f64) -> (f64, f64, f64) {
        let l = self.period;
        let wrapped = xi - l * math::floor(xi / l + 0.5);
        let s2 = self.sigma * self.sigma;
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for m in -IMAGES..=IMAGES {
            let z = wrapped - m as f64 * l;
            let e = math::exp(-z * z / (2.0 * s2));
            p += e;
            dp -= z / s2 * e;
            ddp += (z * z / (s2 * s2) - 1.0 / s2) * e;
        }
        (p, dp, ddp)
    }

    fn peak(&self) -> f64 {
        self.eval(0.0).0
    }
}

/// Still-water depth `d(t, x)` with analytic derivatives.
///
/// Bumps are `d = depth - amplitude * phi(x - center - speed t)` where `phi`
/// is a periodised unit Gaussian, so `d_t = -speed d_x` and `d_xt = -speed d_xx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bathymetry {
    depth: f64,
    bump: Option<Bump>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Bump {
    amplitude: f64,
    center: f64,
    speed: f64,
    profile: PeriodicGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BathymetryKind {
    Flat,
    GaussianBump,
    MovingBump,
}

/// Parameters for [`Bathymetry::preset`]; unused entries are ignored by `Flat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathymetryParams {
    pub depth: f64,
    pub amplitude: f64,
    pub sigma: f64,
    pub center: f64,
    pub speed: f64,
}

impl Default for BathymetryParams {
    fn default() -> Self {
        BathymetryParams { depth: 1.0, amplitude: 0.3, sigma: 1.0, center: 0.0, speed: 0.0 }
    }
}

/// Nodal samples of `d` and its derivatives at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct BathymetrySample {
    pub d: Field,
    pub d_x: Field,
    pub d_xx: Field,
    pub d_t: Field,
    pub d_xt: Field,
}

impl Bathymetry {
    pub fn flat(depth: f64) -> Result<Self> {
        if !(depth.is_finite() && depth > 0.0) {
            return Err(Error::invalid(format!("mean depth must be positive, got {depth}")));
        }
        Ok(Bathymetry { depth, bump: None })
    }

    pub fn gaussian_bump(depth: f64, amplitude: f64, sigma: f64, center: f64, period: f64) -> Result<Self> {
        Bathymetry::moving_bump(depth, amplitude, sigma, center, 0.0, period)
    }

    pub fn moving_bump(depth: f64, amplitude: f64, sigma: f64, center: f64, speed: f64, period: f64) -> Result<Self> {
        let mut b = Bathymetry::flat(depth)?;
        let profile = PeriodicGaussian::new(sigma, period)?;
        if !(amplitude.is_finite() && center.is_finite() && speed.is_finite()) {
            return Err(Error::invalid("bump parameters must be finite"));
        }
        if amplitude * profile.peak() >= depth {
            return Err(Error::invalid(format!(
                "depth positivity: bump amplitude {amplitude} must be below the mean depth {depth}"
            )));
        }
        b.bump = Some(Bump { amplitude, center, speed, profile });
        Ok(b)
    }

    pub fn preset(kind: BathymetryKind, params: &BathymetryParams, grid: &Grid) -> Result<Self> {
        let p = params;
        match kind {
            BathymetryKind::Flat => Bathymetry::flat(p.depth),
            BathymetryKind::GaussianBump => {
                Bathymetry::gaussian_bump(p.depth, p.amplitude, p.sigma, p.center, grid.length())
            }
            BathymetryKind::MovingBump => {
                Bathymetry::moving_bump(p.depth, p.amplitude, p.sigma, p.center, p.speed, grid.length())
            }
        }
    }

    /// Far-field (and, for Gaussian bumps on a long period, mean) depth.
    pub fn d_bar(&self) -> f64 {
        self.depth
    }

    pub fn is_flat(&self) -> bool {
        self.bump.is_none_or(|b| b.amplitude == 0.0)
    }

    /// True when `d_t` and `d_xt` vanish identically.
    pub fn is_fixed(&self) -> bool {
        self.bump.is_none_or(|b| b.speed == 0.0 || b.amplitude == 0.0)
    }

    fn profile(&self, t: f64, x: f64) -> Option<(f64, f64, f64, f64)> {
        self.bump.map(|b| {
            let (p, dp, ddp) = b.profile.eval(x - b.center - b.speed * t);
            (b.amplitude, p, dp, ddp)
        })
    }

    pub fn d(&self, t: f64, x: f64) -> f64 {
        self.depth - self.profile(t, x).map_or(0.0, |(a, p, _, _)| a * p)
    }

    pub fn d_x(&self, t: f64, x: f64) -> f64 {
        self.profile(t, x).map_or(0.0, |(a, _, dp, _)| -a * dp)
    }

    pub fn d_xx(&self, t: f64, x: f64) -> f64 {
        self.profile(t, x).map_or(0.0, |(a, _, _, ddp)| -a * ddp)
    }

    pub fn d_t(&self, t: f64, x: f64) -> f64 {
        match self.bump {
            Some(b) if b.speed != 0.0 => -b.speed * self.d_x(t, x),
            _ => 0.0,
        }
    }

    pub fn d_xt(&self, t: f64, x: f64) -> f64 {
        match self.bump {
            Some(b) if b.speed != 0.0 => -b.speed * self.d_xx(t, x),
            _ => 0.0,
        }
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> BathymetrySample {
        let n = grid.n();
        let mut s = BathymetrySample {
            d: Field::constant(n, self.depth),
            d_x: Field::zeros(n),
            d_xx: Field::zeros(n),
            d_t: Field::zeros(n),
            d_xt: Field::zeros(n),
        };
        let Some(b) = self.bump else { return s };
        for (i, x) in grid.nodes().enumerate() {
            let (p, dp, ddp) = b.profile.eval(x - b.center - b.speed * t);
            s.d[i] = self.depth - b.amplitude * p;
            s.d_x[i] = -b.amplitude * dp;
            s.d_xx[i] = -b.amplitude * ddp;
            if b.speed != 0.0 {
                s.d_t[i] = b.speed * b.amplitude * dp;
                s.d_xt[i] = b.speed * b.amplitude * ddp;
            }
        }
        s
    }
}

/// Total depth `h = eta + d(t, .)`.
pub fn depth(state: &State, bathy: &Bathymetry, grid: &Grid) -> Field {
    grid.nodes().zip(state.eta.iter()).map(|(x, &eta)| eta + bathy.d(state.t, x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitialKind {
    LakeAtRest,
    GaussianEta,
    SmoothedDambreak,
    SineWave,
}

/// Parameters for [`preset_initial`]. Entries a preset does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialParams {
    /// Peak elevation (gaussian) or elevation amplitude (sine).
    pub amplitude: f64,
    /// Velocity amplitude of the sine wave.
    pub velocity_amplitude: f64,
    /// Gaussian width.
    pub sigma: f64,
    /// Gaussian centre, or the downstream front of the dam-break.
    pub center: f64,
    /// Mode number of the sine wave, `k = 2 pi m / L`.
    pub mode: u32,
    /// Dam-break elevation on the raised (upstream) side.
    pub eta_left: f64,
    /// Dam-break elevation on the downstream side.
    pub eta_right: f64,
    /// tanh front width of the dam-break.
    pub width: f64,
}

impl Default for InitialParams {
    fn default() -> Self {
        InitialParams {
            amplitude: 0.1,
            velocity_amplitude: 0.0,
            sigma: 1.0,
            center: 0.0,
            mode: 1,
            eta_left: 0.2,
            eta_right: 0.0,
            width: 0.5,
        }
    }
}

/// Two-front tanh plateau of height one between `center - L/2` and `center`,
/// made periodic by summing images.
fn dambreak_profile(x: f64, center: f64, width: f64, period: f64) -> f64 {
    let up = center - 0.5 * period;
    let wrapped = x - period * math::floor((x - up) / period);
    let mut s = 0.0;
    for m in -IMAGES..=IMAGES {
        let z = wrapped - m as f64 * period;
        s += 0.5 * (math::tanh((z - up) / width) - math::tanh((z - center) / width));
    }
    s
}

/// Builds the state at `t = 0` for one of the scenario presets and checks that
/// the resulting depth is admissible over `bathy`.
pub fn preset_initial(kind: InitialKind, params: &InitialParams, grid: &Grid, bathy: &Bathymetry) -> Result<State> {
    let p = params;
    let l = grid.length();
    let (eta, u) = match kind {
        InitialKind::LakeAtRest => (Field::zeros(grid.n()), Field::zeros(grid.n())),
        InitialKind::GaussianEta => {
            let g = PeriodicGaussian::new(p.sigma, l)?;
            (grid.sample(|x| p.amplitude * g.eval(x - p.center).0), Field::zeros(grid.n()))
        }
        InitialKind::SmoothedDambreak => {
            if !(p.width > 0.0 && p.width <= l / 20.0) {
                return Err(Error::invalid(format!(
                    "dam-break front width must lie in (0, L/20] = (0, {}], got {}",
                    l / 20.0,
                    p.width
                )));
            }
            let jump = p.eta_left - p.eta_right;
            let eta = grid.sample(|x| p.eta_right + jump * dambreak_profile(x, p.center, p.width, l));
            (eta, Field::zeros(grid.n()))
        }
        InitialKind::SineWave => {
            if p.mode == 0 {
                return Err(Error::invalid("sine wave mode number must be at least 1"));
            }
            let k = 2.0 * core::f64::consts::PI * p.mode as f64 / l;
            (grid.sample(|x| p.amplitude * math::sin(k * x)), grid.sample(|x| p.velocity_amplitude * math::sin(k * x)))
        }
    };
    let state = State { eta, u, t: 0.0 };
    if !state.is_finite() {
        return Err(Error::invalid("initial data must be finite"));
    }
    let h_min = depth(&state, bathy, grid).min();
    if !(h_min > 0.0) {
        return Err(Error::invalid(format!("depth positivity: initial inf h = {h_min} must be positive")));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Grid {
        Grid::new(20.0, 400).unwrap()
    }

    #[test]
    fn flat_depth_and_sum() {
        let g = grid();
        let b = Bathymetry::flat(1.0).unwrap();
        let rest = State::rest(&g);
        assert!(depth(&rest, &b, &g).iter().all(|&h| h == 1.0));
        let s = b.sample(&g, 0.3);
        assert!(s.d_x.iter().chain(s.d_xx.iter()).chain(s.d_t.iter()).chain(s.d_xt.iter()).all(|&v| v == 0.0));
        let eta = g.sample(|x| 0.1 * libm::sin(x));
        let st = State::new(eta.clone(), Field::zeros(g.n()), 0.0).unwrap();
        let h = depth(&st, &b, &g);
        for i in 0..g.n() {
            assert_eq!(h[i], 1.0 + eta[i]);
        }
        let vac = State::new(Field::constant(g.n(), -1.0), Field::zeros(g.n()), 0.0).unwrap();
        assert!(depth(&vac, &b, &g).iter().all(|&h| h == 0.0));
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let g = grid();
        let b = Bathymetry::moving_bump(1.0, 0.3, 1.5, 7.0, 0.4, g.length()).unwrap();
        let dxh = 1e-4;
        for &t in &[0.0, 0.7, 3.2] {
            for x in [0.1, 5.5, 7.0, 8.3, 19.9] {
                let fd = (b.d(t, x + dxh) - b.d(t, x - dxh)) / (2.0 * dxh);
                assert_relative_eq!(b.d_x(t, x), fd, epsilon = 1e-7);
                let fd2 = (b.d_x(t, x + dxh) - b.d_x(t, x - dxh)) / (2.0 * dxh);
                assert_relative_eq!(b.d_xx(t, x), fd2, epsilon = 1e-7);
                let fdt = (b.d(t + dxh, x) - b.d(t - dxh, x)) / (2.0 * dxh);
                assert_relative_eq!(b.d_t(t, x), fdt, epsilon = 1e-7);
                let fdxt = (b.d_x(t + dxh, x) - b.d_x(t - dxh, x)) / (2.0 * dxh);
                assert_relative_eq!(b.d_xt(t, x), fdxt, epsilon = 1e-7);
                assert_relative_eq!(b.d_t(t, x), -0.4 * b.d_x(t, x));
            }
        }
    }

    #[test]
    fn bump_fd_error_is_second_order_on_grid() {
        let b0 = Bathymetry::gaussian_bump(1.0, 0.3, 1.5, 10.0, 20.0).unwrap();
        for n in [200, 400, 800] {
            let g = Grid::new(20.0, n).unwrap();
            let s = b0.sample(&g, 0.0);
            let fd = g.ddx(&s.d).unwrap();
            let err = fd.zip_map(&s.d_x, |a, b| a - b).max_abs() / s.d_x.max_abs();
            assert!(err <= 10.0 * g.dx() * g.dx(), "n = {n}: {err}");
        }
    }

    #[test]
    fn bump_is_periodic_and_positive() {
        let b = Bathymetry::gaussian_bump(1.0, 0.9, 5.0, 0.0, 20.0).unwrap();
        assert_relative_eq!(b.d(0.0, -0.3), b.d(0.0, 19.7), epsilon = 1e-14);
        assert_relative_eq!(b.d_x(0.0, 1.0), b.d_x(0.0, 21.0), epsilon = 1e-14);
        assert!(b.sample(&grid(), 0.0).d.min() > 0.0);
    }

    #[test]
    fn bump_amplitude_must_stay_below_depth() {
        assert!(matches!(Bathymetry::gaussian_bump(1.0, 1.0, 1.0, 0.0, 20.0), Err(Error::InvalidArgument(_))));
        assert!(Bathymetry::gaussian_bump(1.0, 0.3, 0.0, 0.0, 20.0).is_err());
        assert!(Bathymetry::flat(0.0).is_err());
    }

    #[test]
    fn gravity_derivative() {
        let g = Gravity::oscillating(9.81, 0.2, 1.3).unwrap();
        let h = 1e-5;
        for t in [0.0, 0.4, 2.0] {
            assert!(g.g(t) > 0.0);
            assert_relative_eq!(g.gdot(t), (g.g(t + h) - g.g(t - h)) / (2.0 * h), epsilon = 1e-6);
        }
        assert!(Gravity::oscillating(9.81, 1.0, 1.0).is_err());
        assert!(Gravity::constant(0.0).is_err());
        assert_eq!(Gravity::constant(2.0).unwrap().gdot(1.0), 0.0);
        assert!(Epsilon::new(-1.0).is_err());
    }

    #[test]
    fn initial_presets() {
        let g = grid();
        let b = Bathymetry::flat(1.0).unwrap();
        let rest = preset_initial(InitialKind::LakeAtRest, &InitialParams::default(), &g, &b).unwrap();
        assert_eq!(rest, State::rest(&g));

        let p = InitialParams { amplitude: 0.1, sigma: 1.0, center: 10.0, ..Default::default() };
        let s = preset_initial(InitialKind::GaussianEta, &p, &g, &b).unwrap();
        let imax = (0..g.n()).max_by(|&i, &j| s.eta[i].total_cmp(&s.eta[j])).unwrap();
        assert_relative_eq!(s.eta[imax], 0.1, epsilon = 1e-12);
        assert_relative_eq!(g.x(imax), 10.0);

        let p = InitialParams { amplitude: -1.5, sigma: 1.0, center: 10.0, ..Default::default() };
        assert!(preset_initial(InitialKind::GaussianEta, &p, &g, &b).is_err());
    }

    #[test]
    fn dambreak_fronts_are_monotone() {
        let g = grid();
        let b = Bathymetry::flat(1.0).unwrap();
        let p = InitialParams { eta_left: 0.2, eta_right: 0.0, width: 0.4, center: 15.0, ..Default::default() };
        let s = preset_initial(InitialKind::SmoothedDambreak, &p, &g, &b).unwrap();
        // raised plateau on [5, 15], fronts at 5 (rising) and 15 (falling)
        let i = |x: f64| (x / g.dx()).round() as usize;
        assert!(s.eta[i(10.0)] > 0.2 - 1e-9);
        assert!(s.eta[i(0.2)].abs() < 1e-9);
        for k in i(0.0)..i(10.0) {
            assert!(s.eta[k + 1] >= s.eta[k] - 1e-15);
        }
        for k in i(10.0)..g.n() - 1 {
            assert!(s.eta[k + 1] <= s.eta[k] + 1e-15);
        }
        let bad = InitialParams { width: 5.0, ..p };
        assert!(preset_initial(InitialKind::SmoothedDambreak, &bad, &g, &b).is_err());
    }
}
