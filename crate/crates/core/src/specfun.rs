//! Complex Gamma and the Gauss hypergeometric function on `[0, 1)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexValue = Complex64;

/// Distance to a nonpositive integer below which Gamma reports a pole.
pub const POLE_TOL: f64 = 1e-12;
/// Series iteration cap.
pub const MAX_TERMS: usize = 100_000;
/// `c - a - b` this close to an integer triggers the perturbed evaluation.
pub const INTEGER_GAP_TOL: f64 = 1e-8;
/// Parameter shift used around integer `c - a - b`.
pub const PERTURBATION: f64 = 1e-6;

// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPoleReport {
    pub is_pole: bool,
    pub nearest_nonpositive_integer: Option<i64>,
    pub distance: f64,
}

/// Nearest nonpositive integer to `z` and the distance to it.
fn nearest_pole(z: Complex64) -> (i64, f64) {
    let k = z.re.round().min(0.0);
    (k as i64, (z - k).norm())
}

pub fn gamma_pole_report(z: Complex64, tol: f64) -> GammaPoleReport {
    let (k, distance) = nearest_pole(z);
    let is_pole = distance <= tol;
    GammaPoleReport { is_pole, nearest_nonpositive_integer: is_pole.then_some(k), distance }
}

fn check_pole(z: Complex64) -> Result<()> {
    let (pole, distance) = nearest_pole(z);
    if distance < POLE_TOL {
        return Err(Error::GammaPole { z: format!("{z}"), pole, distance });
    }
    Ok(())
}

/// `sin(π z)` with the real part reduced first, so it stays accurate next to
/// the zeros.
fn sin_pi(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let x = z.re - n;
    let sign = if n.rem_euclid(2.0) == 0.0 { 1.0 } else { -1.0 };
    let y = PI * z.im;
    sign * Complex64::new((PI * x).sin() * y.cosh(), (PI * x).cos() * y.sinh())
}

/// `ln Γ(z)` for `Re z ≥ 1/2`, principal branch.
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln Γ(z)`. For `Re z < 1/2` it comes from the reflection formula, so
/// the imaginary part is fixed only modulo `2π` there; `exp` of the result
/// is always `Γ(z)`.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    check_pole(z)?;
    if z.re >= 0.5 {
        return Ok(ln_gamma_right(z));
    }
    let sin = sin_pi(z);
    Ok(Complex64::new(PI.ln(), 0.0) - sin.ln() - ln_gamma_right(1.0 - z))
}

pub fn gamma(z: Complex64) -> Result<Complex64> {
    check_pole(z)?;
    if z.re >= 0.5 {
        return Ok(ln_gamma_right(z).exp());
    }
    Ok(PI / (sin_pi(z) * ln_gamma_right(1.0 - z).exp()))
}

/// `1/Γ(z)`, entire: zero at the poles of Γ.
pub fn rgamma(z: Complex64) -> Complex64 {
    if nearest_pole(z).1 < POLE_TOL {
        return Complex64::new(0.0, 0.0);
    }
    if z.re >= 0.5 {
        return (-ln_gamma_right(z)).exp();
    }
    sin_pi(z) * ln_gamma_right(1.0 - z).exp() / PI
}

/// `Γ(c)Γ(c-a-b) / (Γ(c-a)Γ(c-b))`, the value of `F(a, b, c; 1)`.
pub fn gauss_value(a: Complex64, b: Complex64, c: Complex64) -> Result<Complex64> {
    let gap = c - a - b;
    if gap.re <= 0.0 {
        return Err(Error::OutOfRange(format!("Gauss summation needs Re(c - a - b) > 0, got {gap}")));
    }
    Ok(gamma(c)? * gamma(gap)? * rgamma(c - a) * rgamma(c - b))
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    nearest_pole(z).1 < POLE_TOL
}

/// Direct Gauss series. Terminates early when `a` or `b` is a nonpositive
/// integer.
fn series(a: Complex64, b: Complex64, c: Complex64, x: f64) -> Result<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut quiet = 0;
    for k in 0..MAX_TERMS {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() || term == Complex64::new(0.0, 0.0) {
            quiet += 1;
            if quiet == 2 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NoConvergence { terms: MAX_TERMS, x })
}

/// The `x → 1 - x` connection for non-integer `c - a - b`.
fn connected(a: Complex64, b: Complex64, c: Complex64, x: f64) -> Result<Complex64> {
    let y = 1.0 - x;
    let gap = c - a - b;
    let first = if is_nonpositive_integer(c - a) || is_nonpositive_integer(c - b) {
        Complex64::new(0.0, 0.0)
    } else {
        gamma(c)? * gamma(gap)? * rgamma(c - a) * rgamma(c - b) * series(a, b, 1.0 - gap, y)?
    };
    let second = if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        Complex64::new(0.0, 0.0)
    } else {
        gamma(c)? * gamma(-gap)? * rgamma(a) * rgamma(b) * Complex64::new(y, 0.0).powc(gap) * series(c - a, c - b, 1.0 + gap, y)?
    };
    Ok(first + second)
}

/// Gauss hypergeometric function `F(a, b, c; x)` for real `x ∈ [0, 1)`.
pub fn hyp2f1(a: Complex64, b: Complex64, c: Complex64, x: f64) -> Result<Complex64> {
    if is_nonpositive_integer(c) {
        return Err(Error::HypergeometricParameterPole { c: format!("{c}") });
    }
    if !(0.0..1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("hyp2f1 needs x in [0, 1), got {x}")));
    }
    if x <= 0.5 || is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return series(a, b, c, x);
    }
    let gap = c - a - b;
    if (gap - gap.re.round()).norm() < INTEGER_GAP_TOL {
        // Symmetric shift of c; the average cancels the first-order error.
        let up = connected(a, b, c + PERTURBATION, x)?;
        let down = connected(a, b, c - PERTURBATION, x)?;
        return Ok(0.5 * (up + down));
    }
    connected(a, b, c, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn ln_gamma_classical_values() {
        assert!(ln_gamma(re(1.0)).unwrap().norm() < 1e-14);
        assert!((ln_gamma(re(5.0)).unwrap() - 24f64.ln()).norm() < 1e-13);
        assert!((ln_gamma(re(0.5)).unwrap() - 0.5 * PI.ln()).norm() < 1e-14);
    }

    #[test]
    fn poles_are_rejected() {
        assert!(matches!(ln_gamma(re(-2.0)), Err(Error::GammaPole { pole: -2, .. })));
        assert!(matches!(gamma(re(0.0)), Err(Error::GammaPole { pole: 0, .. })));
        assert_eq!(rgamma(re(-3.0)), re(0.0));
    }

    #[test]
    fn pole_report_examples() {
        let r = gamma_pole_report(re(-3.0), 1e-9);
        assert_eq!((r.is_pole, r.nearest_nonpositive_integer, r.distance), (true, Some(-3), 0.0));
        let r = gamma_pole_report(re(0.5), 1e-9);
        assert_eq!((r.is_pole, r.nearest_nonpositive_integer), (false, None));
        assert!((r.distance - 0.5).abs() < 1e-15);
        let r = gamma_pole_report(Complex64::new(-2.0, 1e-12), 1e-9);
        assert_eq!((r.is_pole, r.nearest_nonpositive_integer), (true, Some(-2)));
        assert!((r.distance - 1e-12).abs() < 1e-20);
    }

    #[test]
    fn negative_real_gamma() {
        // Γ(-1/2) = -2√π
        let g = gamma(re(-0.5)).unwrap();
        assert!((g - re(-2.0 * PI.sqrt())).norm() < 1e-13);
        assert!((ln_gamma(re(-0.5)).unwrap().exp() - g).norm() < 1e-13);
    }

    #[test]
    fn hyp2f1_examples() {
        let (a, b, c) = (re(0.3), Complex64::new(1.0, 2.0), re(1.7));
        assert_eq!(hyp2f1(a, b, c, 0.0).unwrap(), re(1.0));
        let v = hyp2f1(re(1.0), re(1.0), re(2.0), 0.5).unwrap();
        assert!((v - re(2.0 * 2f64.ln())).norm() < 1e-14);
        let near_one = hyp2f1(re(0.5), re(0.5), re(2.0), 1.0 - 1e-12).unwrap();
        assert!((near_one - re(4.0 / PI)).norm() < 1e-9);
    }

    #[test]
    fn hyp2f1_rejects_bad_input() {
        assert!(matches!(hyp2f1(re(1.0), re(1.0), re(-2.0), 0.3), Err(Error::HypergeometricParameterPole { .. })));
        assert!(matches!(hyp2f1(re(1.0), re(1.0), re(2.0), 1.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn integer_gap_uses_perturbation() {
        // c - a - b = 0: F(1/2, 1/2, 1; x) = 2K(x)/π.
        let x: f64 = 0.9;
        let k = elliptic_k(x);
        let v = hyp2f1(re(0.5), re(0.5), re(1.0), x).unwrap();
        assert!((v - re(2.0 * k / PI)).norm() < 1e-9, "{v}");
        // c - a - b = 1: F(1, 1, 3; x) = 2((1-x)ln(1-x) + x)/x².
        let exact = 2.0 * ((1.0 - x) * (1.0 - x).ln() + x) / (x * x);
        let got = hyp2f1(re(1.0), re(1.0), re(3.0), x).unwrap();
        assert!((got - re(exact)).norm() < 1e-9, "{got} vs {exact}");
    }

    // Complete elliptic integral by the arithmetic-geometric mean.
    fn elliptic_k(m: f64) -> f64 {
        let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
        while (a - b).abs() > 1e-16 {
            (a, b) = (0.5 * (a + b), (a * b).sqrt());
        }
        PI / (2.0 * a)
    }

    #[test]
    fn gauss_value_examples() {
        assert!((gauss_value(re(0.5), re(0.5), re(2.0)).unwrap() - re(4.0 / PI)).norm() < 1e-14);
        assert!((gauss_value(re(1.0), re(1.0), re(3.0)).unwrap() - re(2.0)).norm() < 1e-13);
        assert!((gauss_value(re(0.0), Complex64::new(0.4, 1.0), re(2.5)).unwrap() - re(1.0)).norm() < 1e-13);
        assert!(gauss_value(re(1.0), re(1.0), re(1.5)).is_err());
    }
}
