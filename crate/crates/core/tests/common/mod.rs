#![allow(dead_code)]

use num_complex::Complex64;
use tail_lab::evolve::{evolve, EvolutionOutput, Grid, InitialData, Sampler, DEFAULT_DIRAC_DT, DEFAULT_H, DEFAULT_WAVE_DT};
use tail_lab::geometry::Trajectory;
use tail_lab::spectrum::ModeSpec;
use twofloat::TwoFloat;

pub fn default_data(spec: &ModeSpec) -> InitialData {
    match spec {
        ModeSpec::Wave { .. } => InitialData::default_wave(),
        ModeSpec::Dirac { .. } => InitialData::default_dirac(),
    }
}

/// Evolution at the default resolution on a grid sized to keep every
/// sampler reflection-free up to `t_max`.
pub fn default_run(spec: &ModeSpec, t_max: f64, samplers: &[Sampler]) -> EvolutionOutput {
    let data = default_data(spec);
    let dt = match spec {
        ModeSpec::Wave { .. } => DEFAULT_WAVE_DT,
        ModeSpec::Dirac { .. } => DEFAULT_DIRAC_DT,
    };
    let max_r = samplers.iter().map(|s| s.trajectory.radius(t_max)).fold(0.0, f64::max);
    let grid = Grid::sized_for(spec, DEFAULT_H, dt, t_max, max_r, data.outer_extent()).unwrap();
    let every = (0.04 / dt).round().max(1.0) as usize;
    evolve(spec, &grid, &data, samplers, every).unwrap()
}

/// Observed order from three resolutions `h = 0.04, 0.02, 0.01` sampled at
/// `r = 3` up to `t = 20`, using successive differences.
pub fn convergence_order(spec: &ModeSpec) -> f64 {
    let samplers = [Sampler::new("r3", Trajectory::FixedR(3.0))];
    let runs: Vec<Vec<Complex64>> = (0..3)
        .map(|level| {
            let h = 0.04 / 2f64.powi(level);
            let dt = match spec {
                ModeSpec::Wave { .. } => 0.4 * h,
                ModeSpec::Dirac { .. } => h,
            };
            let grid = Grid::new(h, (40.0 / h) as usize, dt, 20.0).unwrap();
            let every = (0.32 / dt).round() as usize;
            evolve(spec, &grid, &default_data(spec), &samplers, every).unwrap().series.remove(0).values
        })
        .collect();
    let diff = |a: &[Complex64], b: &[Complex64]| {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    };
    (diff(&runs[0], &runs[1]) / diff(&runs[1], &runs[2])).log2()
}

/// Flat three-dimensional monopole sampled at `r = 2`.
pub fn huygens_control(t_max: f64) -> EvolutionOutput {
    let spec = ModeSpec::wave(3, 0.0, 0).unwrap();
    default_run(&spec, t_max, &[Sampler::new("r2", Trajectory::FixedR(2.0))])
}

/// Largest `|value|` at `t ≥ after`.
pub fn max_after(times: &[f64], values: &[Complex64], after: f64) -> f64 {
    times.iter().zip(values).filter(|(t, _)| **t >= after).map(|(_, v)| v.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Copy)]
struct Dd {
    re: TwoFloat,
    im: TwoFloat,
}

impl Dd {
    fn new(z: Complex64) -> Self {
        Self { re: TwoFloat::from(z.re), im: TwoFloat::from(z.im) }
    }
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
    fn div(self, o: Self) -> Self {
        let den = o.re * o.re + o.im * o.im;
        Self { re: (self.re * o.re + self.im * o.im) / den, im: (self.im * o.re - self.re * o.im) / den }
    }
    fn scale(self, x: f64) -> Self {
        Self { re: self.re * x, im: self.im * x }
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.into(), self.im.into())
    }
}

/// Gauss series in double-double arithmetic.
pub fn series_dd(a: Complex64, b: Complex64, c: Complex64, x: f64) -> Complex64 {
    let mut term = Dd::new(Complex64::new(1.0, 0.0));
    let mut sum = term;
    for k in 0..5000 {
        let k = k as f64;
        let num = Dd::new(a + k).mul(Dd::new(b + k));
        let den = Dd::new(c + k).scale(k + 1.0);
        term = term.mul(num.div(den)).scale(x);
        sum = sum.add(term);
        if term.to_c64().norm() < 1e-30 * sum.to_c64().norm().max(1e-300) {
            break;
        }
    }
    sum.to_c64()
}
