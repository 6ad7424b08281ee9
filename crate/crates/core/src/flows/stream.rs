//! Stream-function flows sampled on grid corners.

use std::f64::consts::PI;

use ndarray::Array2;

use super::{FlowField, Provenance};
use crate::error::{invalid, Result};
use crate::field::Grid;

/// Dimensionless `Psi` on the `(nx+1) x (ny+1)` cell corners. The induced
/// velocity is `U L (dPsi/dy, -dPsi/dx)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamFunction {
    pub grid: Grid,
    pub psi: Array2<f64>,
    pub amplitude: f64,
    pub length: f64,
}

impl StreamFunction {
    pub fn from_fn(grid: &Grid, amplitude: f64, length: f64, psi: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((grid.nx + 1, grid.ny + 1), |(k, m)| psi(grid.x_face(k), grid.y_face(m)));
        StreamFunction { grid: grid.clone(), psi: values, amplitude, length }
    }

    /// Velocity scale `U L` multiplying the gradient of `Psi`.
    pub fn scale(&self) -> f64 {
        self.amplitude * self.length
    }

    /// Staggered velocity; exactly divergence-free up to rounding.
    pub fn velocity(&self) -> FlowField {
        let g = &self.grid;
        let s = self.scale();
        let u1 = Array2::from_shape_fn((g.nx + 1, g.ny), |(k, j)| s * (self.psi[[k, j + 1]] - self.psi[[k, j]]) / g.dy);
        let u2 = Array2::from_shape_fn((g.nx, g.ny + 1), |(i, k)| -s * (self.psi[[i + 1, k]] - self.psi[[i, k]]) / g.dx);
        FlowField { grid: g.clone(), u1, u2, provenance: Provenance::StreamFunction }
    }

    /// `Psi` at the centre of cell `(i, j)` (corner average).
    pub fn at_center(&self, i: usize, j: usize) -> f64 {
        0.25 * (self.psi[[i, j]] + self.psi[[i + 1, j]] + self.psi[[i, j + 1]] + self.psi[[i + 1, j + 1]])
    }

    /// `|grad Psi|` at the centre of cell `(i, j)`.
    pub fn grad_norm_at_center(&self, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let px = 0.5 * (self.psi[[i + 1, j]] - self.psi[[i, j]] + self.psi[[i + 1, j + 1]] - self.psi[[i, j + 1]]) / g.dx;
        let py = 0.5 * (self.psi[[i, j + 1]] - self.psi[[i, j]] + self.psi[[i + 1, j + 1]] - self.psi[[i + 1, j]]) / g.dy;
        px.hypot(py)
    }
}

/// Closed form of the cellular family `cos^m(pi x / Lx) cos^m(pi (y - y0) / Ly)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cellular {
    pub m: u32,
    pub amplitude: f64,
    pub lx: f64,
    pub ly: f64,
    pub y_offset: f64,
}

impl Cellular {
    pub fn new(m: u32, amplitude: f64, lx: f64, ly: f64, y_offset: f64) -> Result<Self> {
        if m < 1 {
            return Err(invalid("cellular flow needs m >= 1"));
        }
        if !(lx > 0.0 && ly > 0.0) || !amplitude.is_finite() {
            return Err(invalid("cellular flow needs positive cell lengths and finite amplitude"));
        }
        Ok(Cellular { m, amplitude, lx, ly, y_offset })
    }

    pub fn psi(&self, x: f64, y: f64) -> f64 {
        let m = self.m as i32;
        (PI * x / self.lx).cos().powi(m) * (PI * (y - self.y_offset) / self.ly).cos().powi(m)
    }

    /// Exact velocity `U Ly (Psi_y, -Psi_x)`.
    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let m = self.m as f64;
        let (ax, ay) = (PI * x / self.lx, PI * (y - self.y_offset) / self.ly);
        let (cx, sx, cy, sy) = (ax.cos(), ax.sin(), ay.cos(), ay.sin());
        let mi = self.m as i32;
        let psi_x = -m * cx.powi(mi - 1) * sx * PI / self.lx * cy.powi(mi);
        let psi_y = -m * cy.powi(mi - 1) * sy * PI / self.ly * cx.powi(mi);
        let s = self.amplitude * self.ly;
        (s * psi_y, -s * psi_x)
    }

    pub fn sample(&self, grid: &Grid) -> StreamFunction {
        StreamFunction::from_fn(grid, self.amplitude, self.ly, |x, y| self.psi(x, y))
    }
}

/// Cellular stream function with `Psi_m = cos^m(pi x/Lx) cos^m(pi y/Ly)`.
pub fn make_cellular(m: u32, amplitude: f64, lx: f64, ly: f64, grid: &Grid) -> Result<StreamFunction> {
    Ok(Cellular::new(m, amplitude, lx, ly, 0.0)?.sample(grid))
}

/// Sine shear with a superposed cellular perturbation. In units of the
/// amplitude, `u1 = sin(k y) + eps cos(2 pi x / Lx) cos(k y)`, which keeps open
/// streamlines in both directions for small `eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbedShear {
    pub amplitude: f64,
    pub modes: u32,
    pub perturbation: f64,
    pub lx: f64,
    pub height: f64,
}

impl PerturbedShear {
    pub fn new(amplitude: f64, modes: u32, perturbation: f64, lx: f64, height: f64) -> Result<Self> {
        if modes == 0 || !(lx > 0.0) || !(height > 0.0) || !(perturbation >= 0.0) {
            return Err(invalid("perturbed shear needs modes >= 1, Lx > 0, H > 0, eps >= 0"));
        }
        Ok(PerturbedShear { amplitude, modes, perturbation, lx, height })
    }

    fn k(&self) -> f64 {
        2.0 * PI * self.modes as f64 / self.height
    }

    /// `Psi` normalised by `U H`.
    pub fn psi(&self, x: f64, y: f64) -> f64 {
        let k = self.k();
        let kh = k * self.height;
        (-(k * y).cos() + self.perturbation * (2.0 * PI * x / self.lx).cos() * (k * y).sin()) / kh
    }

    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let k = self.k();
        let ax = 2.0 * PI * x / self.lx;
        let u1 = (k * y).sin() + self.perturbation * ax.cos() * (k * y).cos();
        let u2 = self.perturbation * (2.0 * PI / self.lx) / k * ax.sin() * (k * y).sin();
        (self.amplitude * u1, self.amplitude * u2)
    }

    pub fn sample(&self, grid: &Grid) -> StreamFunction {
        StreamFunction::from_fn(grid, self.amplitude, self.height, |x, y| self.psi(x, y))
    }
}
