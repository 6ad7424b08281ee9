//! Discrete cell operator `u . grad + kappa (-Lap)` on a doubly periodic grid.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Staggered, exactly divergence-free velocity on a periodic `nx x ny` grid.
/// `u1[i * ny + j]` lives on the x-face left of cell `(i, j)`, `u2[i * ny + j]`
/// on the y-face below it.
#[derive(Clone, Debug)]
pub(crate) struct PeriodicFlow {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl PeriodicFlow {
    /// Velocity `(psi_y, -psi_x)` from corner samples `psi(i dx, j dy)`.
    pub fn from_stream(nx: usize, ny: usize, lx: f64, ly: f64, psi: impl Fn(f64, f64) -> f64) -> Self {
        let (dx, dy) = (lx / nx as f64, ly / ny as f64);
        let corner = |i: usize, j: usize| psi(i as f64 * dx, j as f64 * dy);
        let mut u1 = vec![0.0; nx * ny];
        let mut u2 = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                u1[i * ny + j] = (corner(i, j + 1) - corner(i, j)) / dy;
                u2[i * ny + j] = -(corner(i + 1, j) - corner(i, j)) / dx;
            }
        }
        PeriodicFlow { nx, ny, dx, dy, u1, u2 }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        (i % self.nx) * self.ny + (j % self.ny)
    }

    /// Cell-centred velocity components (face averages).
    pub fn centred(&self) -> [Vec<f64>; 2] {
        let (nx, ny) = (self.nx, self.ny);
        let mut c1 = vec![0.0; nx * ny];
        let mut c2 = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                let k = i * ny + j;
                c1[k] = 0.5 * (self.u1[k] + self.u1[self.idx(i + 1, j)]);
                c2[k] = 0.5 * (self.u2[k] + self.u2[self.idx(i, j + 1)]);
            }
        }
        [c1, c2]
    }

    pub fn sup(&self) -> f64 {
        self.u1.iter().chain(&self.u2).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[cfg(test)]
    pub fn max_divergence(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.nx {
            for j in 0..self.ny {
                let k = i * self.ny + j;
                let d = (self.u1[self.idx(i + 1, j)] - self.u1[k]) / self.dx
                    + (self.u2[self.idx(i, j + 1)] - self.u2[k]) / self.dy;
                m = m.max(d.abs());
            }
        }
        m
    }

    /// `out = scale * div(u theta)` with centred face values (skew-symmetric).
    pub fn advect(&self, theta: &[f64], scale: f64, out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for i in 0..nx {
            let (ip, im) = ((i + 1) % nx, (i + nx - 1) % nx);
            for j in 0..ny {
                let (jp, jm) = ((j + 1) % ny, (j + ny - 1) % ny);
                let k = i * ny + j;
                let t = theta[k];
                let fe = self.u1[ip * ny + j] * 0.5 * (t + theta[ip * ny + j]);
                let fw = self.u1[k] * 0.5 * (theta[im * ny + j] + t);
                let gn = self.u2[i * ny + jp] * 0.5 * (t + theta[i * ny + jp]);
                let gs = self.u2[k] * 0.5 * (theta[i * ny + jm] + t);
                out[k] = scale * ((fe - fw) / self.dx + (gn - gs) / self.dy);
            }
        }
    }
}

/// `out = -Lap_h theta` (5-point, periodic).
pub(crate) fn neg_laplacian(nx: usize, ny: usize, dx: f64, dy: f64, theta: &[f64], out: &mut [f64]) {
    let (cx, cy) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    for i in 0..nx {
        let (ip, im) = ((i + 1) % nx, (i + nx - 1) % nx);
        for j in 0..ny {
            let (jp, jm) = ((j + 1) % ny, (j + ny - 1) % ny);
            let t = theta[i * ny + j];
            out[i * ny + j] = cx * (2.0 * t - theta[ip * ny + j] - theta[im * ny + j])
                + cy * (2.0 * t - theta[i * ny + jp] - theta[i * ny + jm]);
        }
    }
}

/// Diagonal solves in the discrete Fourier basis of the periodic grid.
pub(crate) struct SpectralSolver {
    nx: usize,
    ny: usize,
    /// Eigenvalues of `-Lap_h`, row-major like the data.
    eig: Vec<f64>,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl SpectralSolver {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Self {
        let mut planner = FftPlanner::new();
        let sym = |p: usize, n: usize, h: f64| (2.0 - 2.0 * (2.0 * std::f64::consts::PI * p as f64 / n as f64).cos()) / (h * h);
        let mut eig = vec![0.0; nx * ny];
        for p in 0..nx {
            for q in 0..ny {
                eig[p * ny + q] = sym(p, nx, dx) + sym(q, ny, dy);
            }
        }
        SpectralSolver {
            nx,
            ny,
            eig,
            fx: planner.plan_fft_forward(nx),
            ix: planner.plan_fft_inverse(nx),
            fy: planner.plan_fft_forward(ny),
            iy: planner.plan_fft_inverse(ny),
        }
    }

    fn transform(&self, data: &mut [Complex64], fy: &Arc<dyn Fft<f64>>, fx: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        for row in data.chunks_mut(ny) {
            fy.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); nx];
        for j in 0..ny {
            for i in 0..nx {
                col[i] = data[i * ny + j];
            }
            fx.process(&mut col);
            for i in 0..nx {
                data[i * ny + j] = col[i];
            }
        }
    }

    /// Replaces `x` by `g(eig) * x` in Fourier space, with the mean mode
    /// multiplied by `zero_mode`.
    pub fn apply(&self, x: &mut [f64], g: impl Fn(f64) -> f64, zero_mode: f64) {
        let mut data: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.fy, &self.fx);
        data[0] *= zero_mode;
        for (d, &e) in data.iter_mut().zip(&self.eig).skip(1) {
            *d *= g(e);
        }
        self.transform(&mut data, &self.iy, &self.ix);
        let norm = 1.0 / (self.nx * self.ny) as f64;
        for (v, d) in x.iter_mut().zip(&data) {
            *v = d.re * norm;
        }
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
