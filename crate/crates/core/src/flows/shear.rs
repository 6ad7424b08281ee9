//! Shear profiles `u = (u(y), 0)` and their time-dependent variants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::{gauss_legendre, sign_changes};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ShearShape {
    /// `amplitude * sin(2 pi modes y / H)`.
    Sine { amplitude: f64, modes: u32 },
    /// `slope * (y - H/2)`.
    Linear { slope: f64 },
    /// A positive half-sine lobe on `[0, split H]` followed by a negative lobe
    /// on the rest, scaled so the mean vanishes.
    TwoLobe { amplitude: f64, split: f64 },
    /// Values at the cell midpoints `(k + 1/2) H / N`, linearly interpolated.
    Samples { values: Vec<f64> },
}

/// A mean-zero shear profile on `[0, H]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearProfile {
    pub shape: ShearShape,
    pub height: f64,
    /// Constant added to the raw shape to enforce zero mean.
    pub offset: f64,
    pub mean_removed: bool,
}

const SAMPLE_DENSITY: usize = 4096;

impl ShearProfile {
    pub fn new(shape: ShearShape, height: f64) -> Result<Self> {
        if !(height > 0.0) {
            return Err(invalid("shear height must be positive"));
        }
        match &shape {
            ShearShape::Sine { amplitude, modes } => {
                if *modes == 0 {
                    return Err(invalid("sine shear needs at least one mode"));
                }
                if !(*amplitude >= 0.0) {
                    return Err(invalid("sine shear amplitude must be non-negative"));
                }
            }
            ShearShape::TwoLobe { split, .. } => {
                if !(*split > 0.0 && *split < 1.0) {
                    return Err(invalid("two-lobe split must lie in (0, 1)"));
                }
            }
            ShearShape::Samples { values } => {
                if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("sampled shear needs at least two finite values"));
                }
            }
            ShearShape::Linear { slope } => {
                if !slope.is_finite() {
                    return Err(invalid("linear shear slope must be finite"));
                }
            }
        }
        let mut p = ShearProfile { shape, height, offset: 0.0, mean_removed: false };
        if let ShearShape::Samples { values } = &p.shape {
            let n = values.len();
            let mean = gauss_legendre(|y| p.raw(y), 0.0, height, 4 * n) / height;
            if mean != 0.0 {
                p.offset = -mean;
                p.mean_removed = true;
            }
        }
        Ok(p)
    }

    fn raw(&self, y: f64) -> f64 {
        let h = self.height;
        match &self.shape {
            ShearShape::Sine { amplitude, modes } => amplitude * (2.0 * PI * *modes as f64 * y / h).sin(),
            ShearShape::Linear { slope } => slope * (y - 0.5 * h),
            ShearShape::TwoLobe { amplitude, split } => {
                let cut = split * h;
                if y <= cut {
                    amplitude * (PI * y / cut).sin()
                } else {
                    -amplitude * split / (1.0 - split) * (PI * (y - cut) / (h - cut)).sin()
                }
            }
            ShearShape::Samples { values } => {
                let n = values.len();
                let s = y / h * n as f64 - 0.5;
                if s <= 0.0 {
                    values[0]
                } else if s >= (n - 1) as f64 {
                    values[n - 1]
                } else {
                    let k = s.floor() as usize;
                    let w = s - k as f64;
                    values[k] * (1.0 - w) + values[k + 1] * w
                }
            }
        }
    }

    /// `u(y)`.
    pub fn u(&self, y: f64) -> f64 {
        self.raw(y) + self.offset
    }

    /// `u'(y)`.
    pub fn du(&self, y: f64) -> f64 {
        let h = self.height;
        match &self.shape {
            ShearShape::Sine { amplitude, modes } => {
                let k = 2.0 * PI * *modes as f64 / h;
                amplitude * k * (k * y).cos()
            }
            ShearShape::Linear { slope } => *slope,
            ShearShape::TwoLobe { amplitude, split } => {
                let cut = split * h;
                if y <= cut {
                    amplitude * PI / cut * (PI * y / cut).cos()
                } else {
                    -amplitude * split / (1.0 - split) * PI / (h - cut) * (PI * (y - cut) / (h - cut)).cos()
                }
            }
            ShearShape::Samples { values } => {
                let n = values.len();
                let s = y / h * n as f64 - 0.5;
                if s <= 0.0 || s >= (n - 1) as f64 {
                    0.0
                } else {
                    let k = s.floor() as usize;
                    (values[k + 1] - values[k]) * n as f64 / h
                }
            }
        }
    }

    fn dense_max(&self, g: impl Fn(f64) -> f64) -> f64 {
        let n = SAMPLE_DENSITY * self.resolution_hint();
        (0..=n).map(|k| g(self.height * k as f64 / n as f64).abs()).fold(0.0, f64::max)
    }

    fn resolution_hint(&self) -> usize {
        match &self.shape {
            ShearShape::Sine { modes, .. } => *modes as usize,
            ShearShape::Samples { values } => (values.len() / 64).max(1),
            _ => 1,
        }
    }

    /// `sup |u|`.
    pub fn norm_inf(&self) -> f64 {
        match &self.shape {
            ShearShape::Sine { amplitude, .. } => *amplitude,
            ShearShape::Linear { slope } => 0.5 * slope.abs() * self.height,
            _ => self.dense_max(|y| self.u(y)),
        }
    }

    /// `sup |u'|`.
    pub fn deriv_inf(&self) -> f64 {
        match &self.shape {
            ShearShape::Sine { amplitude, modes } => amplitude * 2.0 * PI * *modes as f64 / self.height,
            ShearShape::Linear { slope } => slope.abs(),
            _ => self.dense_max(|y| self.du(y)),
        }
    }

    /// `int |u| dy / H`.
    pub fn norm_l1(&self) -> f64 {
        self.abs_integral(0.0, self.height) / self.height
    }

    /// Wrinkling scale `||u||_1 / ||u'||_inf`.
    pub fn h_u(&self) -> f64 {
        let d = self.deriv_inf();
        if d == 0.0 {
            f64::INFINITY
        } else {
            self.norm_l1() / d
        }
    }

    /// Sign changes of `u` in `(0, H)`.
    pub fn roots(&self) -> Vec<f64> {
        let tol = 1e-12 * self.norm_inf();
        sign_changes(|y| self.u(y), 0.0, self.height, SAMPLE_DENSITY * self.resolution_hint(), tol)
    }

    /// Points where `u` is only piecewise smooth.
    fn kinks(&self) -> Vec<f64> {
        let h = self.height;
        match &self.shape {
            ShearShape::TwoLobe { split, .. } => vec![split * h],
            ShearShape::Samples { values } => {
                let n = values.len();
                (0..n).map(|k| (k as f64 + 0.5) * h / n as f64).collect()
            }
            _ => Vec::new(),
        }
    }

    /// `int_a^b u dy`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return -self.integral(b, a);
        }
        let mut cuts = vec![a];
        cuts.extend(self.kinks().into_iter().filter(|&k| k > a && k < b));
        cuts.push(b);
        cuts.windows(2).map(|w| gauss_legendre(|y| self.u(y), w[0], w[1], self.panels(w[0], w[1]))).sum()
    }

    /// `int_a^b |u| dy`, splitting at interior sign changes.
    pub fn abs_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let tol = 1e-12 * self.norm_inf();
        let samples = ((SAMPLE_DENSITY * self.resolution_hint()) as f64 * (b - a) / self.height).ceil() as usize;
        let mut cuts = vec![a];
        cuts.extend(sign_changes(|y| self.u(y), a, b, samples.max(64), tol));
        cuts.push(b);
        cuts.windows(2).map(|w| self.integral(w[0], w[1]).abs()).sum()
    }

    fn panels(&self, a: f64, b: f64) -> usize {
        let base = match &self.shape {
            ShearShape::Samples { values } => 2 * values.len(),
            _ => 16 * self.resolution_hint(),
        };
        ((base as f64 * (b - a) / self.height).ceil() as usize).max(4)
    }

    /// The same shape multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let shape = match &self.shape {
            ShearShape::Sine { amplitude, modes } => ShearShape::Sine { amplitude: amplitude * factor, modes: *modes },
            ShearShape::Linear { slope } => ShearShape::Linear { slope: slope * factor },
            ShearShape::TwoLobe { amplitude, split } => ShearShape::TwoLobe { amplitude: amplitude * factor, split: *split },
            ShearShape::Samples { values } => ShearShape::Samples { values: values.iter().map(|v| v * factor).collect() },
        };
        ShearProfile { shape, height: self.height, offset: self.offset * factor, mean_removed: self.mean_removed }
    }
}

/// `u0 sin(2 pi n y / H)`.
pub fn make_shear_sine(u0: f64, n: u32, height: f64) -> Result<ShearProfile> {
    ShearProfile::new(ShearShape::Sine { amplitude: u0, modes: n }, height)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDepKind {
    /// `u0 sin(2 pi w t) sin(2 pi n y / H)`.
    Pulsating,
    /// `u0 sin(2 pi n (y - c t) / H)`.
    Translating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeDepShear {
    pub kind: TimeDepKind,
    pub amplitude: f64,
    pub modes: u32,
    pub height: f64,
    /// Frequency for pulsating flows, phase speed for translating ones.
    pub rate: f64,
}

pub fn make_timedep_shear(kind: TimeDepKind, u0: f64, n: u32, height: f64, rate: f64) -> Result<TimeDepShear> {
    if n == 0 || !(u0 >= 0.0) || !(height > 0.0) || !(rate >= 0.0) {
        return Err(invalid(format!("time-dependent shear needs n >= 1, u0 >= 0, H > 0, rate >= 0 (n={n}, u0={u0}, rate={rate})")));
    }
    Ok(TimeDepShear { kind, amplitude: u0, modes: n, height, rate })
}

impl TimeDepShear {
    pub fn u(&self, y: f64, t: f64) -> f64 {
        let k = 2.0 * PI * self.modes as f64 / self.height;
        match self.kind {
            TimeDepKind::Pulsating => self.amplitude * (2.0 * PI * self.rate * t).sin() * (k * y).sin(),
            TimeDepKind::Translating => self.amplitude * (k * (y - self.rate * t)).sin(),
        }
    }
}

/// Anything that is a shear flow `(u(y, t), 0)` on `[0, H]`.
pub trait ShearLike {
    fn velocity(&self, y: f64, t: f64) -> f64;
    fn height(&self) -> f64;
}

impl ShearLike for ShearProfile {
    fn velocity(&self, y: f64, _t: f64) -> f64 {
        self.u(y)
    }
    fn height(&self) -> f64 {
        self.height
    }
}

impl ShearLike for TimeDepShear {
    fn velocity(&self, y: f64, t: f64) -> f64 {
        self.u(y, t)
    }
    fn height(&self) -> f64 {
        self.height
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_example_values() {
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        assert!((u.u(0.25) - 1.0).abs() < 1e-15);
        assert!((u.norm_l1() - 2.0 / PI).abs() < 1e-10);
        let u2 = make_shear_sine(1.0, 2, 1.0).unwrap();
        assert!((u2.h_u() - 1.0 / (2.0 * PI * PI)).abs() < 1e-10);
        assert!((u2.h_u() - 0.050661).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_shear_sine(1.0, 0, 1.0).is_err());
        assert!(make_shear_sine(-1.0, 1, 1.0).is_err());
        assert!(ShearProfile::new(ShearShape::TwoLobe { amplitude: 1.0, split: 1.0 }, 1.0).is_err());
    }

    #[test]
    fn shapes_have_zero_mean() {
        let shapes = vec![
            ShearShape::Sine { amplitude: 2.0, modes: 3 },
            ShearShape::Linear { slope: 1.5 },
            ShearShape::TwoLobe { amplitude: 1.0, split: 0.7 },
            ShearShape::Samples { values: vec![1.0, 3.0, -0.5, 2.0, 0.25] },
        ];
        for s in shapes {
            let p = ShearProfile::new(s.clone(), 2.0).unwrap();
            let mean = p.integral(0.0, 2.0) / 2.0;
            assert!(mean.abs() < 1e-12, "{s:?}: {mean}");
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let p = ShearProfile::new(ShearShape::TwoLobe { amplitude: 1.3, split: 0.3 }, 1.0).unwrap();
        for y in [0.05, 0.2, 0.5, 0.9] {
            let fd = (p.u(y + 1e-6) - p.u(y - 1e-6)) / 2e-6;
            assert!((fd - p.du(y)).abs() < 1e-6);
        }
    }

    #[test]
    fn abs_integral_of_sine_middle_half() {
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        let v = u.abs_integral(0.125, 0.375);
        assert!((v - 2f64.sqrt() / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn time_dependent_examples() {
        let p = make_timedep_shear(TimeDepKind::Pulsating, 2.0, 1, 1.0, 0.5).unwrap();
        let s = make_shear_sine(2.0, 1, 1.0).unwrap();
        for k in 0..10 {
            let y = k as f64 / 10.0;
            assert_eq!(p.u(y, 0.0), 0.0);
            assert!(p.u(y, 1.0).abs() < 1e-15);
            assert!((p.u(y, 0.5) - s.u(y)).abs() < 1e-15);
        }
        let tr = make_timedep_shear(TimeDepKind::Translating, 1.0, 2, 3.0, 0.7).unwrap();
        let period = 3.0 / (0.7 * 2.0);
        for k in 0..10 {
            let y = 0.3 * k as f64;
            assert!((tr.u(y, period) - tr.u(y, 0.0)).abs() < 1e-12);
        }
        assert!(make_timedep_shear(TimeDepKind::Pulsating, 1.0, 1, 1.0, -1.0).is_err());
    }
}
