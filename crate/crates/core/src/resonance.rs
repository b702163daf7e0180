//! Resonances of the reduced normal operator of a wave sector.
//!
//! Near the cone tip the reduced operator, conjugated by `x^α`, becomes the
//! hypergeometric equation with
//!
//! ```text
//! a = 1/2 + s,  b = 1/2 + iσ + s,  c = 1 + 2s,  α = -(n-2)/2 + s,  s = ν_j.
//! ```
//!
//! Matching the regular solution at `x = 1` brings in the coefficient
//! `Γ(c-1)Γ(c-a-b+1) / (Γ(c-a)Γ(c-b))` of the singular branch there, whose
//! zeros are the resonances `σ_{j,k} = -i(1/2 + s + k)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{gamma, hyp2f1, rgamma};
use crate::spectrum::{sphere_eigenvalue, ModeSpec, INTEGER_TOL};

/// `|coefficient|` below which a refined point counts as a zero.
pub const ZERO_TOL: f64 = 1e-10;
/// Default finite-difference step for the resonant-state check.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Largest finite-difference step accepted.
pub const MAX_FD_STEP: f64 = 1e-3;
const REFINE_ITERS: usize = 60;
const MERGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypergeomParams {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub s: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFamily {
    pub spec: ModeSpec,
    pub resonances: Vec<Complex64>,
    /// Exponent of `r` in the resonant states near the tip.
    pub leading_exponent: f64,
}

impl ResonanceFamily {
    pub fn coefficient(&self, sigma: Complex64) -> Result<Complex64> {
        connection_coeff_y2(&self.spec, sigma)
    }
}

/// Rectangle `[re.0, re.1] × [im.0, im.1]` in the σ-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl SearchBox {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Result<Self> {
        if !(re.0 < re.1 && im.0 < im.1) {
            return Err(Error::OutOfRange(format!("empty search box {re:?} × {im:?}")));
        }
        Ok(Self { re, im })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re.0..=self.re.1).contains(&z.re) && (self.im.0..=self.im.1).contains(&z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedResonances {
    pub zeros: Vec<Complex64>,
    /// Grid minima whose refinement stalled above the zero tolerance.
    pub warnings: Vec<String>,
}

fn wave_parts(spec: &ModeSpec) -> Result<(u32, f64, u32, f64)> {
    match *spec {
        ModeSpec::Wave { n, coupling, j } => Ok((n, coupling, j, spec.exponent()?)),
        ModeSpec::Dirac { .. } => Err(Error::InvalidMode(format!("{spec}: resonances are computed for wave sectors only"))),
    }
}

pub fn hypergeom_params(spec: &ModeSpec, sigma: Complex64) -> Result<HypergeomParams> {
    let (n, _, _, s) = wave_parts(spec)?;
    let i_sigma = Complex64::i() * sigma;
    Ok(HypergeomParams {
        a: Complex64::new(0.5 + s, 0.0),
        b: 0.5 + s + i_sigma,
        c: Complex64::new(1.0 + 2.0 * s, 0.0),
        s,
        alpha: -(n as f64 - 2.0) / 2.0 + s,
    })
}

/// Coefficient of the singular branch at `x = 1` in the regular solution.
pub fn connection_coeff_y2(spec: &ModeSpec, sigma: Complex64) -> Result<Complex64> {
    let HypergeomParams { a, b, c, .. } = hypergeom_params(spec, sigma)?;
    let num = |z: Complex64| gamma(z).map_err(|_| Error::DegenerateConnection { argument: format!("{z}") });
    Ok(num(c - 1.0)? * num(c - a - b + 1.0)? * rgamma(c - a) * rgamma(c - b))
}

pub fn closed_form_resonances(spec: &ModeSpec, kmax: u32) -> Result<ResonanceFamily> {
    let HypergeomParams { s, alpha, .. } = hypergeom_params(spec, Complex64::new(0.0, 0.0))?;
    let resonances = (0..=kmax).map(|k| Complex64::new(0.0, -(0.5 + s + k as f64))).collect();
    Ok(ResonanceFamily { spec: *spec, resonances, leading_exponent: alpha })
}

/// The lattice `-i(1/2 + s + k)` meets the numerator poles `-i(1 + m)`
/// exactly when `s` is a half-integer.
fn check_degenerate(spec: &ModeSpec) -> Result<()> {
    let (_, _, _, s) = wave_parts(spec)?;
    let shifted = s + 0.5;
    if (shifted - shifted.round()).abs() < INTEGER_TOL {
        return Err(Error::DegenerateConnection { argument: format!("c - a - b + 1 at σ = -{}i (s = {s})", shifted) });
    }
    Ok(())
}

/// Zeros of the connection coefficient inside `search`, located from the
/// minima of its modulus on a `grid × grid` lattice and refined by Halley
/// steps. Numerator poles inside the box are treated as infinite values.
pub fn locate_resonances_numeric(spec: &ModeSpec, search: SearchBox, grid: usize) -> Result<LocatedResonances> {
    check_degenerate(spec)?;
    if grid < 16 {
        return Err(Error::OutOfRange(format!("search grid must be at least 16, got {grid}")));
    }
    let f = |z: Complex64| connection_coeff_y2(spec, z).ok();
    let point = |i: usize, k: usize| {
        let u = i as f64 / (grid - 1) as f64;
        let v = k as f64 / (grid - 1) as f64;
        Complex64::new(search.re.0 + u * (search.re.1 - search.re.0), search.im.0 + v * (search.im.1 - search.im.0))
    };
    let modulus: Vec<Vec<f64>> = (0..grid)
        .map(|i| (0..grid).map(|k| f(point(i, k)).map_or(f64::INFINITY, |v| v.norm())).collect())
        .collect();

    let mut zeros: Vec<Complex64> = Vec::new();
    let mut warnings = Vec::new();
    let cell = ((search.re.1 - search.re.0) / (grid - 1) as f64).hypot((search.im.1 - search.im.0) / (grid - 1) as f64);
    for i in 0..grid {
        for k in 0..grid {
            let here = modulus[i][k];
            if !here.is_finite() {
                continue;
            }
            let mut is_min = true;
            for di in -1i64..=1 {
                for dk in -1i64..=1 {
                    let (ii, kk) = (i as i64 + di, k as i64 + dk);
                    if (di, dk) == (0, 0) || ii < 0 || kk < 0 || ii >= grid as i64 || kk >= grid as i64 {
                        continue;
                    }
                    if modulus[ii as usize][kk as usize] < here {
                        is_min = false;
                    }
                }
            }
            if !is_min {
                continue;
            }
            let start = point(i, k);
            match refine(&f, start, cell) {
                Some(z) if search.contains(z) => {
                    if !zeros.iter().any(|w| (w - z).norm() < MERGE_TOL) {
                        zeros.push(z);
                    }
                }
                Some(_) => {}
                None => {
                    // Minima on the box edge usually belong to a zero outside.
                    let edge = i == 0 || k == 0 || i == grid - 1 || k == grid - 1;
                    if !edge {
                        warnings.push(format!("refinement from {start} stalled above {ZERO_TOL:e}"));
                    }
                }
            }
        }
    }
    zeros.sort_by(|a, b| b.im.total_cmp(&a.im).then(a.re.total_cmp(&b.re)));
    Ok(LocatedResonances { zeros, warnings })
}

/// Halley iteration on the analytic coefficient with centred difference
/// derivatives. Halley is exact for a zero next to a pole, which happens
/// when a resonance sits close to a numerator pole. Gives up if it leaves
/// the neighbourhood of its start.
fn refine(f: &impl Fn(Complex64) -> Option<Complex64>, start: Complex64, cell: f64) -> Option<Complex64> {
    let mut z = start;
    let step = 1e-5;
    for _ in 0..REFINE_ITERS {
        let value = f(z)?;
        let (up, down) = (f(z + step)?, f(z - step)?);
        let d1 = (up - down) / (2.0 * step);
        let d2 = (up - 2.0 * value + down) / (step * step);
        let den = 2.0 * d1 * d1 - value * d2;
        if den.norm() == 0.0 {
            return None;
        }
        let delta = 2.0 * value * d1 / den;
        z -= delta;
        if (z - start).norm() > 4.0 * cell {
            return None;
        }
        if delta.norm() < 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let value = f(z)?;
    (value.norm() < ZERO_TOL).then_some(z)
}

/// Candidate state `x^α F(a, b, c; x)` at spectral parameter `sigma`.
pub fn candidate_state(spec: &ModeSpec, sigma: Complex64, x: f64) -> Result<Complex64> {
    let p = hypergeom_params(spec, sigma)?;
    Ok(x.powf(p.alpha) * hyp2f1(p.a, p.b, p.c, x)?)
}

/// Max over `grid_x` of `|P w|` for the candidate state at `sigma`, with
///
/// ```text
/// P = x(1-x)∂² + (n-1-x(n+iσ))∂ - (𝔣+λ_j)/x - ((n-1)/2)(iσ+(n-1)/2)
/// ```
///
/// and centred second-order differences of step `h`.
pub fn operator_residual(spec: &ModeSpec, sigma: Complex64, grid_x: &[f64], h: f64) -> Result<f64> {
    let (n, coupling, j, _) = wave_parts(spec)?;
    if !(h > 0.0 && h <= MAX_FD_STEP) {
        return Err(Error::OutOfRange(format!("finite-difference step must lie in (0, {MAX_FD_STEP}], got {h}")));
    }
    let nf = n as f64;
    let i_sigma = Complex64::i() * sigma;
    let potential = coupling + sphere_eigenvalue(j, n);
    let shift = 0.5 * (nf - 1.0) * (i_sigma + 0.5 * (nf - 1.0));
    let mut worst: f64 = 0.0;
    for &x in grid_x {
        if !(x - h > 0.0 && x + h < 1.0) {
            return Err(Error::OutOfRange(format!("grid point {x} with step {h} leaves (0, 1)")));
        }
        let w0 = candidate_state(spec, sigma, x)?;
        let wp = candidate_state(spec, sigma, x + h)?;
        let wm = candidate_state(spec, sigma, x - h)?;
        let d2 = (wp - 2.0 * w0 + wm) / (h * h);
        let d1 = (wp - wm) / (2.0 * h);
        let residual = x * (1.0 - x) * d2 + (nf - 1.0 - x * (nf + i_sigma)) * d1 - potential / x * w0 - shift * w0;
        worst = worst.max(residual.norm());
    }
    Ok(worst)
}

/// Residual of the `k`-th resonant state.
pub fn verify_resonant_state(spec: &ModeSpec, k: u32, grid_x: &[f64], h: f64) -> Result<f64> {
    let family = closed_form_resonances(spec, k)?;
    operator_residual(spec, family.resonances[k as usize], grid_x, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(n: u32, f: f64, j: u32) -> ModeSpec {
        ModeSpec::wave(n, f, j).unwrap()
    }

    #[test]
    fn parameter_examples() {
        let p = hypergeom_params(&spec(3, 0.75, 0), Complex64::new(0.0, 0.0)).unwrap();
        assert!((p.a - 1.5).norm() < 1e-15 && (p.b - 1.5).norm() < 1e-15 && (p.c - 3.0).norm() < 1e-15);
        assert!((p.alpha - 0.5).abs() < 1e-15 && (p.s - 1.0).abs() < 1e-15);
        let p = hypergeom_params(&spec(3, 1.0, 0), Complex64::new(0.0, -1.5)).unwrap();
        assert!((p.b - (2.0 + 1.25f64.sqrt())).norm() < 1e-15);
        assert!(hypergeom_params(&ModeSpec::dirac(0.3, 1).unwrap(), Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let s = spec(3, 0.75, 0);
        let v = connection_coeff_y2(&s, Complex64::new(0.0, 0.0)).unwrap();
        assert!((v - 4.0 / PI).norm() < 1e-13);
        assert_eq!(connection_coeff_y2(&s, Complex64::new(0.0, -1.5)).unwrap().norm(), 0.0);
        assert_eq!(connection_coeff_y2(&s, Complex64::new(0.0, -2.5)).unwrap().norm(), 0.0);
        assert!(matches!(connection_coeff_y2(&s, Complex64::new(0.0, -2.0)), Err(Error::DegenerateConnection { .. })));
    }

    #[test]
    fn closed_form_examples() {
        let f = closed_form_resonances(&spec(3, 0.75, 0), 1).unwrap();
        assert_eq!(f.resonances, vec![Complex64::new(0.0, -1.5), Complex64::new(0.0, -2.5)]);
        let f = closed_form_resonances(&spec(3, 1.0, 0), 0).unwrap();
        assert!((f.resonances[0].im + 0.5 + 1.25f64.sqrt()).abs() < 1e-15);
        let f = closed_form_resonances(&spec(5, 0.0, 0), 0).unwrap();
        assert!((f.resonances[0] - Complex64::new(0.0, -2.0)).norm() < 1e-15);
        assert!((f.leading_exponent).abs() < 1e-15);
    }

    #[test]
    fn numeric_search_examples() {
        let s = spec(3, 0.75, 0);
        let found = locate_resonances_numeric(&s, SearchBox::new((-0.5, 0.5), (-3.0, -1.0)).unwrap(), 32).unwrap();
        assert_eq!(found.zeros.len(), 2, "{found:?}");
        assert!((found.zeros[0] - Complex64::new(0.0, -1.5)).norm() < 1e-8);
        assert!((found.zeros[1] - Complex64::new(0.0, -2.5)).norm() < 1e-8);
        let none = locate_resonances_numeric(&s, SearchBox::new((1.0, 2.0), (-3.0, -1.0)).unwrap(), 16).unwrap();
        assert!(none.zeros.is_empty());
        let s = spec(3, 1.0, 1);
        let target = -(1.5 + 3.25f64.sqrt());
        let found = locate_resonances_numeric(&s, SearchBox::new((-0.4, 0.4), (target - 0.4, target + 0.4)).unwrap(), 16).unwrap();
        assert_eq!(found.zeros.len(), 1);
        assert!((found.zeros[0].im - target).abs() < 1e-8);
    }

    #[test]
    fn degenerate_spec_is_rejected() {
        let s = spec(3, 0.0, 0);
        let b = SearchBox::new((-0.5, 0.5), (-3.0, -0.5)).unwrap();
        assert!(matches!(locate_resonances_numeric(&s, b, 16), Err(Error::DegenerateConnection { .. })));
    }

    #[test]
    fn resonant_state_solves_the_equation() {
        let xs: Vec<f64> = (0..=14).map(|i| 0.1 + 0.05 * i as f64).collect();
        let s = spec(3, 0.75, 0);
        assert!(verify_resonant_state(&s, 0, &xs, DEFAULT_FD_STEP).unwrap() <= 1e-5);
        let off = operator_residual(&s, Complex64::new(0.3, -0.7), &xs, DEFAULT_FD_STEP).unwrap();
        assert!(off <= 1e-5);
    }

    #[test]
    fn residual_is_second_order() {
        let xs = [0.2, 0.4, 0.6, 0.8];
        let s = spec(3, 0.75, 0);
        let coarse = verify_resonant_state(&s, 1, &xs, 1e-3).unwrap();
        let fine = verify_resonant_state(&s, 1, &xs, 5e-4).unwrap();
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}
