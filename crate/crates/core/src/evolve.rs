//! Radial evolution of single separated sectors.
//!
//! Wave sectors are evolved in the regularized variable
//! `w = r^{(n-2)/2 - ν} u`, which solves the radial wave equation in the
//! effective dimension `d = 2 + 2ν`:
//!
//! ```text
//! w_tt = r^{-(d-1)} ∂_r ( r^{d-1} ∂_r w )
//! ```
//!
//! The Friedrichs branch `u ~ r^{-(n-2)/2 + ν}` is the even regular solution
//! for `w`, so the origin closure is the vanishing flux through `r = 0`.
//! Space is discretized with cell masses `∫ r^{d-1} dr` and face fluxes on the
//! staggered grid `r_i = (i + 1/2) h`; time stepping is leapfrog, which
//! conserves a discrete energy exactly.
//!
//! Dirac sectors evolve `i ∂_t (f, g) = H (f, g)` with
//!
//! ```text
//! H = [[ -Z/r, -∂_r + κ/r ], [ ∂_r + κ/r, -Z/r ]]
//! ```
//!
//! in the regularized fields `r^{-s} (f, g)` by linear finite elements in
//! the weighted space `L²(r^{2s} dr)` and Crank–Nicolson in time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Trajectory;
use crate::spectrum::ModeSpec;

/// Default spacing.
pub const DEFAULT_H: f64 = 0.02;
/// Default wave time step (`0.4 h`).
pub const DEFAULT_WAVE_DT: f64 = 0.008;
/// Default Dirac time step. Crank–Nicolson is unconditionally stable and
/// the tail is insensitive to `dt` below `h`.
pub const DEFAULT_DIRAC_DT: f64 = 0.02;
/// Largest wave Courant number accepted.
pub const MAX_WAVE_COURANT: f64 = 0.4;
/// Extra cells beyond the causal bound on the outer radius.
pub const MARGIN_CELLS: f64 = 10.0;
/// Largest group speed of the discrete Dirac operator. Linear elements carry
/// a grid-scale branch moving at three times the speed of light, and the
/// outer wall scatters into it.
pub const DIRAC_RETURN_SPEED: f64 = 3.0;

/// Fastest speed at which a reflection from the outer wall can travel back
/// inwards for this sector.
pub fn return_speed(spec: &ModeSpec) -> f64 {
    match spec {
        ModeSpec::Wave { .. } => 1.0,
        ModeSpec::Dirac { .. } => DIRAC_RETURN_SPEED,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub h: f64,
    pub points: usize,
    pub dt: f64,
    pub t_max: f64,
}

impl Grid {
    pub fn new(h: f64, points: usize, dt: f64, t_max: f64) -> Result<Self> {
        if !(h > 0.0 && dt > 0.0 && t_max >= 0.0) || points < 4 {
            return Err(Error::InvalidSetup(format!(
                "grid needs h > 0, dt > 0, t_max ≥ 0 and at least 4 points (h = {h}, dt = {dt}, t_max = {t_max}, points = {points})"
            )));
        }
        Ok(Self { h, points, dt, t_max })
    }

    /// Smallest grid for `spec` whose outer boundary cannot send a
    /// reflection back to any radius `≤ max_sample_r` before `t_max`, given
    /// initial data supported in `r ≤ data_extent`.
    pub fn sized_for(spec: &ModeSpec, h: f64, dt: f64, t_max: f64, max_sample_r: f64, data_extent: f64) -> Result<Self> {
        let c = return_speed(spec);
        let causal = (c * (t_max + data_extent) + max_sample_r) / (c + 1.0);
        let outer = causal.max(data_extent).max(max_sample_r) + MARGIN_CELLS * h;
        let points = (outer / h + 0.5).ceil() as usize + 1;
        Self::new(h, points, dt, t_max)
    }

    pub fn radius(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    /// Radius of the outermost cell, where the Dirichlet condition sits.
    pub fn outer_radius(&self) -> f64 {
        (self.points as f64 - 0.5) * self.h
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Latest time at which radius `r` is unaffected by reflections of data
    /// supported in `r ≤ data_extent` that return at speed `return_speed`.
    pub fn clean_until(&self, r: f64, data_extent: f64, return_speed: f64) -> f64 {
        let outer = self.outer_radius();
        outer - data_extent + (outer - r) / return_speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Profile {
    /// `amplitude · exp(-((r - center)/width)²)`.
    GaussianBump { center: f64, width: f64, amplitude: f64 },
    /// Smooth bump supported on `[r1, r2]` with peak `amplitude`.
    CInfBump { r1: f64, r2: f64, amplitude: f64 },
}

impl Profile {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Profile::GaussianBump { center, width, amplitude } => {
                let z = (r - center) / width;
                amplitude * (-z * z).exp()
            }
            Profile::CInfBump { r1, r2, amplitude } => {
                let xi = (2.0 * r - r1 - r2) / (r2 - r1);
                if xi.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - xi * xi)).exp()
                }
            }
        }
    }

    /// Radial interval outside which the profile is below double precision
    /// relative to its peak.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Profile::GaussianBump { center, width, .. } => (center - 6.0 * width, center + 6.0 * width),
            Profile::CInfBump { r1, r2, .. } => (r1, r2),
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Profile::GaussianBump { amplitude, .. } | Profile::CInfBump { amplitude, .. } => amplitude,
        }
    }
}

/// Initial data: a radial profile and the weights with which it seeds the
/// two fields, `(u, ∂_t u)` for wave sectors and `(f, g)` for Dirac sectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub profile: Profile,
    pub weights: [f64; 2],
}

impl InitialData {
    pub fn default_profile() -> Profile {
        Profile::GaussianBump { center: 6.0, width: 1.0, amplitude: 1.0 }
    }

    /// Gaussian bump at `r = 6` seeding both `u` and `∂_t u`.
    pub fn default_wave() -> Self {
        Self { profile: Self::default_profile(), weights: [1.0, 1.0] }
    }

    /// Gaussian bump at `r = 6` seeding `f` and `g` equally.
    pub fn default_dirac() -> Self {
        Self { profile: Self::default_profile(), weights: [1.0, 1.0] }
    }

    pub fn zero() -> Self {
        Self { profile: Self::default_profile(), weights: [0.0, 0.0] }
    }

    pub fn outer_extent(&self) -> f64 {
        self.profile.support().1
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        let (lo, hi) = self.profile.support();
        if let Profile::CInfBump { r1, r2, .. } = self.profile {
            if !(r1 > 0.0 && r2 > r1) {
                return Err(Error::InvalidSetup(format!("bump support [{r1}, {r2}] must satisfy 0 < r1 < r2")));
            }
        }
        if let Profile::GaussianBump { width, .. } = self.profile {
            if !(width > 0.0) {
                return Err(Error::InvalidSetup(format!("bump width {width} must be positive")));
            }
        }
        if hi >= grid.outer_radius() || hi <= 0.0 {
            return Err(Error::InvalidSetup(format!(
                "data support [{lo}, {hi}] is not inside (0, {})",
                grid.outer_radius()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub id: String,
    pub trajectory: Trajectory,
}

impl Sampler {
    pub fn new(id: impl Into<String>, trajectory: Trajectory) -> Self {
        Self { id: id.into(), trajectory }
    }
}

/// Field values recorded along one trajectory. For wave sectors `values`
/// holds `u` (real); for Dirac sectors it holds `f` and `secondary` holds `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    pub id: String,
    pub trajectory: Trajectory,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub secondary: Option<Vec<Complex64>>,
}

impl SampleSeries {
    fn new(sampler: &Sampler, dirac: bool) -> Self {
        Self {
            id: sampler.id.clone(),
            trajectory: sampler.trajectory,
            times: Vec::new(),
            values: Vec::new(),
            secondary: dirac.then(Vec::new),
        }
    }

    /// `(t, |value|)` pairs.
    pub fn magnitudes(&self) -> Vec<(f64, f64)> {
        self.times.iter().zip(&self.values).map(|(&t, v)| (t, v.norm())).collect()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Series of `value · r(t)^power`, e.g. `power = -1` turns the reduced
    /// Dirac field `f` into `f / r`.
    pub fn scaled_by_radius(&self, power: f64) -> SampleSeries {
        let values = self
            .times
            .iter()
            .zip(&self.values)
            .map(|(&t, v)| v * self.trajectory.radius(t).powf(power))
            .collect();
        SampleSeries { values, secondary: None, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Energy (wave) or squared L² norm (Dirac) after the first step.
    pub initial: f64,
    pub last: f64,
    /// Largest `|Q(t) - Q(0)| / Q(0)` observed at the checkpoints.
    pub max_relative_drift: f64,
    pub steps: usize,
    pub outer_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionOutput {
    pub series: Vec<SampleSeries>,
    pub diagnostics: Diagnostics,
}

/// Four-point Lagrange interpolation at fractional index `x` (grid index
/// units, cell centres at integers). `at` maps any integer index to a value.
fn cubic<T, F>(x: f64, at: F) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    F: Fn(isize) -> T,
{
    let i1 = x.floor() as isize;
    let s = x - i1 as f64;
    let c0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let c1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let c2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let c3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    at(i1 - 1) * c0 + at(i1) * c1 + at(i1 + 1) * c2 + at(i1 + 2) * c3
}

fn check_samplers(spec: &ModeSpec, grid: &Grid, samplers: &[Sampler], extent: f64) -> Result<()> {
    for s in samplers {
        s.trajectory.validate()?;
        let r_end = s.trajectory.radius(grid.t_max);
        let clean = grid.clean_until(r_end.max(0.0), extent, return_speed(spec));
        if grid.t_max > clean {
            return Err(Error::SamplerOutsideWindow {
                id: s.id.clone(),
                detail: format!(
                    "reflections from R = {} reach r = {r_end} at t = {clean} < t_max = {}",
                    grid.outer_radius(),
                    grid.t_max
                ),
            });
        }
    }
    Ok(())
}

/// Leapfrog solver for one wave sector in the regularized variable.
#[derive(Debug, Clone)]
pub struct WaveSolver {
    grid: Grid,
    nu: f64,
    /// `ν - (n-2)/2`: `u = r^{u_power} w`.
    u_power: f64,
    /// Upper/lower stencil coefficients, already multiplied by `(dt/h)²`.
    up: Vec<f64>,
    down: Vec<f64>,
    /// Cell masses `∫ r^{d-1} dr`.
    mass: Vec<f64>,
    /// Face weights `r_{i+1/2}^{d-1} / h` for the face between `i` and `i+1`.
    face: Vec<f64>,
    prev: Vec<f64>,
    curr: Vec<f64>,
    step: usize,
}

impl WaveSolver {
    pub fn new(spec: &ModeSpec, grid: &Grid, data: &InitialData) -> Result<Self> {
        let ModeSpec::Wave { n, .. } = *spec else {
            return Err(Error::InvalidMode(format!("{spec} is not a wave sector")));
        };
        let nu = spec.exponent()?;
        let courant = grid.dt / grid.h;
        if courant > MAX_WAVE_COURANT + 1e-12 {
            return Err(Error::Cfl { dt: grid.dt, limit: MAX_WAVE_COURANT * grid.h });
        }
        data.validate(grid)?;

        let d = 2.0 + 2.0 * nu;
        let p = d - 1.0;
        let lambda2 = courant * courant;
        let npts = grid.points;
        let mut up = vec![0.0; npts];
        let mut down = vec![0.0; npts];
        let mut mass = vec![0.0; npts];
        let mut face = vec![0.0; npts];
        for i in 0..npts {
            let ip1 = (i + 1) as f64;
            // 1 - (i/(i+1))^d, evaluated without cancellation.
            let gap = if i == 0 { 1.0 } else { -(-d * (1.0 / i as f64).ln_1p()).exp_m1() };
            // mass_i / r_{i+1/2}^{d-1} in units of h.
            let mass_over_face = ip1 * gap / d;
            up[i] = lambda2 / mass_over_face;
            down[i] = if i == 0 { 0.0 } else { up[i] * (i as f64 / ip1).powf(p) };
            let r_face = ip1 * grid.h;
            face[i] = r_face.powf(p) / grid.h;
            mass[i] = grid.h * r_face.powf(p) * mass_over_face;
        }
        let stiff = (0..npts).map(|i| 2.0 * (up[i] + down[i])).fold(0.0, f64::max);
        if stiff >= 4.0 {
            return Err(Error::Cfl { dt: grid.dt, limit: grid.dt * (4.0 / stiff).sqrt() });
        }

        let u_power = nu - (n as f64 - 2.0) / 2.0;
        let mut w0 = vec![0.0; npts];
        let mut v0 = vec![0.0; npts];
        for i in 0..npts - 1 {
            let r = grid.radius(i);
            let to_w = r.powf(-u_power);
            let prof = data.profile.value(r);
            w0[i] = data.weights[0] * prof * to_w;
            v0[i] = data.weights[1] * prof * to_w;
        }
        let mut solver = Self { grid: *grid, nu, u_power, up, down, mass, face, prev: w0.clone(), curr: w0, step: 0 };
        // Second-order Taylor start: w(dt) = w + dt v + dt²/2 L w.
        let lw = solver.apply_operator(&solver.prev);
        for i in 0..npts - 1 {
            solver.curr[i] = solver.prev[i] + grid.dt * v0[i] + 0.5 * lw[i];
        }
        solver.step = 1;
        Ok(solver)
    }

    /// `dt² L w` with the boundary conditions applied.
    fn apply_operator(&self, w: &[f64]) -> Vec<f64> {
        let n = w.len();
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let lower = if i == 0 { 0.0 } else { self.down[i] * (w[i] - w[i - 1]) };
            out[i] = self.up[i] * (w[i + 1] - w[i]) - lower;
        }
        out
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.grid.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Regularized field at the current time level.
    pub fn field(&self) -> &[f64] {
        &self.curr
    }

    pub fn advance(&mut self) {
        let n = self.curr.len();
        let (c, p) = (&self.curr, &mut self.prev);
        // i = 0 has no inner face.
        p[0] = 2.0 * c[0] - p[0] + self.up[0] * (c[1] - c[0]);
        for i in 1..n - 1 {
            p[i] = 2.0 * c[i] - p[i] + self.up[i] * (c[i + 1] - c[i]) - self.down[i] * (c[i] - c[i - 1]);
        }
        p[n - 1] = 0.0;
        std::mem::swap(&mut self.prev, &mut self.curr);
        self.step += 1;
    }

    /// Regularized field at radius `r` (cubic, even reflection at `r = 0`).
    pub fn w_at(&self, r: f64) -> f64 {
        let n = self.curr.len() as isize;
        let w = &self.curr;
        let at = |i: isize| -> f64 {
            let k = if i < 0 { -i - 1 } else { i };
            if k >= n {
                0.0
            } else {
                w[k as usize]
            }
        };
        cubic(r / self.grid.h - 0.5, at)
    }

    /// Mode amplitude `u = r^{ν-(n-2)/2} w` at radius `r > 0`.
    pub fn u_at(&self, r: f64) -> f64 {
        r.powf(self.u_power) * self.w_at(r)
    }

    /// Discrete energy of the regularized field,
    /// `Σ m_i ((w^{k+1} - w^k)/dt)² + Σ_faces r^{d-1} Δw^{k+1} Δw^k / h`,
    /// the quadrature of `∫ (w_t² + w_r²) r^{1+2ν} dr` that leapfrog conserves.
    pub fn energy(&self) -> f64 {
        let dt = self.grid.dt;
        let n = self.curr.len();
        let mut kinetic = 0.0;
        for i in 0..n {
            let v = (self.curr[i] - self.prev[i]) / dt;
            kinetic += self.mass[i] * v * v;
        }
        let mut potential = 0.0;
        for i in 0..n - 1 {
            potential += self.face[i] * (self.curr[i + 1] - self.curr[i]) * (self.prev[i + 1] - self.prev[i]);
        }
        kinetic + potential
    }

    fn all_finite(&self) -> bool {
        self.curr.iter().all(|v| v.is_finite())
    }
}

/// Crank–Nicolson solver for one Dirac–Coulomb sector in the regularized
/// fields `(F, G) = r^{-s} (f, g)`, `s = sqrt(κ² - Z²)`.
///
/// In these variables the regular solution is smooth at `r = 0` and
///
/// ```text
/// i ∂_t F = -Z F / r + A* G,   i ∂_t G = A F - Z G / r,   A = ∂_r + (κ + s)/r,
/// ```
///
/// where `A*` is the adjoint of `A` for the weight `r^{2s}`. Space is
/// discretized by continuous piecewise-linear elements on the nodes `j h`,
/// with every integral taken against the weight, so the origin needs no
/// boundary condition: the weighted boundary term vanishes. The outer node
/// `points · h` is a Dirichlet wall. Crank–Nicolson conserves the discrete
/// norm `x* M x ≈ ∫ (|f|² + |g|²) dr` exactly.
#[derive(Debug, Clone)]
pub struct DiracSolver {
    grid: Grid,
    s: f64,
    /// Number of active nodes (`F` and `G` at each, interleaved).
    nodes: usize,
    /// Banded mass matrix, `BAND` entries each side.
    mass: Vec<[f64; BAND_WIDTH]>,
    /// `M - i (dt/2) K` and the LU factors of `M + i (dt/2) K`.
    explicit: Vec<[Complex64; BAND_WIDTH]>,
    lu: Vec<[Complex64; BAND_WIDTH]>,
    x: Vec<Complex64>,
    rhs: Vec<Complex64>,
    step: usize,
}

const BAND: usize = 3;
const BAND_WIDTH: usize = 2 * BAND + 1;
const TINY: f64 = 1e-200;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Element integrals of `r^p` against `(φ_L², φ_L φ_R, φ_R², φ_L, φ_R)` on
/// `[j h, (j + 1) h]` with the linear hat functions of the element.
fn element_moments(j: usize, h: f64, p: f64, rule: &[(f64, f64)]) -> [f64; 5] {
    if j == 0 {
        // Exact on the first element, where r^p is singular.
        let hp = h.powf(p + 1.0);
        let (a, b, c) = (1.0 / (p + 1.0), 1.0 / (p + 2.0), 1.0 / (p + 3.0));
        return [hp * (a - 2.0 * b + c), hp * (b - c), hp * c, hp * (a - b), hp * b];
    }
    let mid = (j as f64 + 0.5) * h;
    let mut out = [0.0; 5];
    for &(xi, wq) in rule {
        let r = mid + 0.5 * h * xi;
        let w = 0.5 * h * wq * r.powf(p);
        let right = 0.5 * (1.0 + xi);
        let left = 1.0 - right;
        out[0] += w * left * left;
        out[1] += w * left * right;
        out[2] += w * right * right;
        out[3] += w * left;
        out[4] += w * right;
    }
    out
}

impl DiracSolver {
    pub fn new(spec: &ModeSpec, grid: &Grid, data: &InitialData) -> Result<Self> {
        let ModeSpec::Dirac { z, kappa } = *spec else {
            return Err(Error::InvalidMode(format!("{spec} is not a Dirac sector")));
        };
        let s = spec.exponent()?;
        data.validate(grid)?;
        let h = grid.h;
        let nodes = grid.points;
        let up = kappa as f64 + s;
        let rule = gauss_legendre(10);
        let dim = 2 * nodes;
        let mut mass = vec![[0.0; BAND_WIDTH]; dim];
        let mut ham = vec![[0.0; BAND_WIDTH]; dim];
        let add = |band: &mut Vec<[f64; BAND_WIDTH]>, row: usize, col: usize, v: f64| {
            if row < dim && col < dim {
                band[row][col + BAND - row] += v;
            }
        };

        // Element `j` joins nodes j and j + 1; node `nodes` is the wall.
        for j in 0..nodes {
            let [ll, lr, rr, l1, r1] = element_moments(j, h, 2.0 * s, &rule);
            let [vll, vlr, vrr, _, _] = element_moments(j, h, 2.0 * s - 1.0, &rule);
            let local = [j, j + 1];
            let m_loc = [[ll, lr], [lr, rr]];
            let v_loc = [[vll, vlr], [vlr, vrr]];
            let first = [l1, r1];
            // B[a][b] = ∫ r^{2s} (φ_b' + (κ+s) φ_b / r) φ_a.
            let slope = [-1.0 / h, 1.0 / h];
            for a in 0..2 {
                for b in 0..2 {
                    let (ra, cb) = (local[a], local[b]);
                    let bab = slope[b] * first[a] + up * v_loc[a][b];
                    add(&mut mass, 2 * ra, 2 * cb, m_loc[a][b]);
                    add(&mut mass, 2 * ra + 1, 2 * cb + 1, m_loc[a][b]);
                    add(&mut ham, 2 * ra, 2 * cb, -z * v_loc[a][b]);
                    add(&mut ham, 2 * ra + 1, 2 * cb + 1, -z * v_loc[a][b]);
                    // G-row tests A F; F-row tests A* G = B^T.
                    add(&mut ham, 2 * ra + 1, 2 * cb, bab);
                    add(&mut ham, 2 * cb, 2 * ra + 1, bab);
                }
            }
        }

        // Band LU of M + iτK without pivoting: its Hermitian part M is
        // positive definite.
        let tau = 0.5 * grid.dt;
        let mut lu: Vec<[Complex64; BAND_WIDTH]> = (0..dim)
            .map(|i| std::array::from_fn(|k| Complex64::new(mass[i][k], tau * ham[i][k])))
            .collect();
        for k in 0..dim {
            let pivot = lu[k][BAND];
            for i in k + 1..(k + BAND + 1).min(dim) {
                let factor = lu[i][k + BAND - i] / pivot;
                lu[i][k + BAND - i] = factor;
                for c in k + 1..(k + BAND + 1).min(dim) {
                    let v = lu[k][c + BAND - k];
                    lu[i][c + BAND - i] -= factor * v;
                }
            }
        }
        for row in lu.iter_mut() {
            row[BAND] = row[BAND].inv();
        }

        // Nodal interpolation of the data, then L² projection is unnecessary
        // for smooth profiles.
        let explicit = (0..dim)
            .map(|i| std::array::from_fn(|k| Complex64::new(mass[i][k], -tau * ham[i][k])))
            .collect();
        let mut x = vec![Complex64::new(0.0, 0.0); dim];
        for j in 1..nodes {
            let r = j as f64 * h;
            let scale = r.powf(-s) * data.profile.value(r);
            x[2 * j] = Complex64::new(data.weights[0] * scale, 0.0);
            x[2 * j + 1] = Complex64::new(data.weights[1] * scale, 0.0);
        }
        Ok(Self { grid: *grid, s, nodes, mass, explicit, lu, rhs: x.clone(), x, step: 0 })
    }

    fn band_apply(band: &[[f64; BAND_WIDTH]], x: &[Complex64], i: usize) -> Complex64 {
        let lo = i.saturating_sub(BAND);
        let hi = (i + BAND + 1).min(x.len());
        (lo..hi).map(|c| band[i][c + BAND - i] * x[c]).sum()
    }

    pub fn advance(&mut self) {
        let dim = self.x.len();
        let zero = Complex64::new(0.0, 0.0);
        let at = |v: &[Complex64], c: isize| if c >= 0 && (c as usize) < dim { v[c as usize] } else { zero };
        for i in 0..dim {
            let row = &self.explicit[i];
            let base = i as isize - BAND as isize;
            let mut acc = zero;
            if i >= BAND && i + BAND < dim {
                let window = &self.x[i - BAND..=i + BAND];
                for k in 0..BAND_WIDTH {
                    acc += row[k] * window[k];
                }
            } else {
                for k in 0..BAND_WIDTH {
                    acc += row[k] * at(&self.x, base + k as isize);
                }
            }
            self.rhs[i] = acc;
        }
        let lu = &self.lu;
        let rhs = &mut self.rhs;
        for i in 1..BAND.min(dim) {
            for c in 0..i {
                let v = rhs[c];
                rhs[i] -= lu[i][c + BAND - i] * v;
            }
        }
        for i in BAND..dim {
            let row = &lu[i];
            let v = rhs[i] - row[0] * rhs[i - 3] - row[1] * rhs[i - 2] - row[2] * rhs[i - 1];
            rhs[i] = v;
        }
        let x = &mut self.x;
        for i in (dim.saturating_sub(BAND)..dim).rev() {
            let mut acc = rhs[i];
            for c in i + 1..dim {
                acc -= lu[i][c + BAND - i] * x[c];
            }
            x[i] = acc * lu[i][BAND];
        }
        for i in (0..dim.saturating_sub(BAND)).rev() {
            let row = &lu[i];
            x[i] = (rhs[i] - row[4] * x[i + 1] - row[5] * x[i + 2] - row[6] * x[i + 3]) * row[3];
        }
        // The implicit solve leaks exponentially small values ahead of the
        // front; keep them out of the subnormal range, which is very slow.
        for v in x.iter_mut() {
            if v.re.abs() < TINY {
                v.re = 0.0;
            }
            if v.im.abs() < TINY {
                v.im = 0.0;
            }
        }
        self.step += 1;
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.grid.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Indicial exponent `s`.
    pub fn exponent(&self) -> f64 {
        self.s
    }

    fn interp(&self, offset: usize, r: f64) -> Complex64 {
        let n = self.nodes as isize;
        // One-sided near the origin; the wall node is zero.
        let x = (r / self.grid.h).max(1.0);
        let at = |i: isize| {
            if i >= n {
                Complex64::new(0.0, 0.0)
            } else {
                self.x[2 * i.max(0) as usize + offset]
            }
        };
        cubic(x, at) * r.powf(self.s)
    }

    pub fn f_at(&self, r: f64) -> Complex64 {
        self.interp(0, r)
    }

    pub fn g_at(&self, r: f64) -> Complex64 {
        self.interp(1, r)
    }

    /// Nodal values of `f` at `j h`, `j ≥ 1`.
    pub fn f_values(&self) -> Vec<Complex64> {
        (1..self.nodes).map(|j| self.x[2 * j] * (j as f64 * self.grid.h).powf(self.s)).collect()
    }

    /// Squared discrete L² norm `x* M x`, the quadrature of
    /// `∫ (|f|² + |g|²) dr` conserved by the scheme.
    pub fn l2_norm_sq(&self) -> f64 {
        (0..self.x.len())
            .map(|i| (self.x[i].conj() * Self::band_apply(&self.mass, &self.x, i)).re)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    fn all_finite(&self) -> bool {
        self.x.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Conserved energy of a wave state.
pub fn energy(state: &WaveSolver) -> f64 {
    state.energy()
}

/// L² norm of a Dirac state.
pub fn l2_norm(state: &DiracSolver) -> f64 {
    state.l2_norm()
}

const CHECK_EVERY: usize = 1000;

struct Recorder {
    series: Vec<SampleSeries>,
    initial: f64,
    last: f64,
    drift: f64,
}

impl Recorder {
    fn conserve(&mut self, q: f64) {
        self.last = q;
        if self.initial != 0.0 {
            self.drift = self.drift.max(((q - self.initial) / self.initial).abs());
        }
    }
}

/// Evolves a wave sector, sampling `u` along each trajectory every
/// `sample_every` steps (once the trajectory radius is positive).
pub fn wave_evolve(
    spec: &ModeSpec,
    grid: &Grid,
    data: &InitialData,
    samplers: &[Sampler],
    sample_every: usize,
) -> Result<EvolutionOutput> {
    check_samplers(spec, grid, samplers, data.outer_extent())?;
    let mut solver = WaveSolver::new(spec, grid, data)?;
    let e0 = solver.energy();
    let mut rec = Recorder { series: samplers.iter().map(|s| SampleSeries::new(s, false)).collect(), initial: e0, last: e0, drift: 0.0 };
    let every = sample_every.max(1);
    let total = grid.steps();
    while solver.steps_taken() < total {
        solver.advance();
        let step = solver.steps_taken();
        if step % every == 0 || step == total {
            let t = solver.time();
            for (s, series) in samplers.iter().zip(rec.series.iter_mut()) {
                let r = s.trajectory.radius(t);
                if r > 0.0 {
                    let u = solver.u_at(r);
                    if !u.is_finite() {
                        return Err(Error::Instability { step, t });
                    }
                    series.times.push(t);
                    series.values.push(Complex64::new(u, 0.0));
                }
            }
        }
        if step % CHECK_EVERY == 0 || step == total {
            if !solver.all_finite() {
                return Err(Error::Instability { step, t: solver.time() });
            }
            rec.conserve(solver.energy());
        }
    }
    Ok(EvolutionOutput {
        series: rec.series,
        diagnostics: Diagnostics {
            initial: rec.initial,
            last: rec.last,
            max_relative_drift: rec.drift,
            steps: solver.steps_taken(),
            outer_radius: grid.outer_radius(),
        },
    })
}

/// Evolves a Dirac sector, sampling `f` (and `g` as the secondary series).
pub fn dirac_evolve(
    spec: &ModeSpec,
    grid: &Grid,
    data: &InitialData,
    samplers: &[Sampler],
    sample_every: usize,
) -> Result<EvolutionOutput> {
    check_samplers(spec, grid, samplers, data.outer_extent())?;
    let mut solver = DiracSolver::new(spec, grid, data)?;
    let q0 = solver.l2_norm_sq();
    let mut rec = Recorder { series: samplers.iter().map(|s| SampleSeries::new(s, true)).collect(), initial: q0, last: q0, drift: 0.0 };
    let every = sample_every.max(1);
    let total = grid.steps();
    while solver.steps_taken() < total {
        solver.advance();
        let step = solver.steps_taken();
        if step % every == 0 || step == total {
            let t = solver.time();
            for (s, series) in samplers.iter().zip(rec.series.iter_mut()) {
                let r = s.trajectory.radius(t);
                if r > 0.0 {
                    let f = solver.f_at(r);
                    if !(f.re.is_finite() && f.im.is_finite()) {
                        return Err(Error::Instability { step, t });
                    }
                    series.times.push(t);
                    series.values.push(f);
                    if let Some(g) = series.secondary.as_mut() {
                        g.push(solver.g_at(r));
                    }
                }
            }
        }
        if step % CHECK_EVERY == 0 || step == total {
            if !solver.all_finite() {
                return Err(Error::Instability { step, t: solver.time() });
            }
            rec.conserve(solver.l2_norm_sq());
        }
    }
    Ok(EvolutionOutput {
        series: rec.series,
        diagnostics: Diagnostics {
            initial: rec.initial,
            last: rec.last,
            max_relative_drift: rec.drift,
            steps: solver.steps_taken(),
            outer_radius: grid.outer_radius(),
        },
    })
}

/// Dispatches on the sector kind.
pub fn evolve(spec: &ModeSpec, grid: &Grid, data: &InitialData, samplers: &[Sampler], sample_every: usize) -> Result<EvolutionOutput> {
    match spec {
        ModeSpec::Wave { .. } => wave_evolve(spec, grid, data, samplers, sample_every),
        ModeSpec::Dirac { .. } => dirac_evolve(spec, grid, data, samplers, sample_every),
    }
}
