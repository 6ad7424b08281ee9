//! Backward-Euler diffusion across the strip: `(I - r D_yy) T = rhs` per column.

use crate::field::BcY;

/// Pre-factored constant-coefficient tridiagonal system for one column.
#[derive(Clone, Debug)]
pub struct ColumnSolver {
    r: f64,
    bc: BcY,
    /// Thomas forward-sweep coefficients.
    c_prime: Vec<f64>,
    denom: Vec<f64>,
    /// Sherman-Morrison correction vector for the periodic case.
    z: Vec<f64>,
    z_factor: f64,
    gamma: f64,
}

impl ColumnSolver {
    pub fn new(ny: usize, r: f64, bc: BcY) -> Self {
        let mut diag = vec![1.0 + 2.0 * r; ny];
        let off = -r;
        let mut gamma = 0.0;
        match bc {
            BcY::Neumann => {
                diag[0] = 1.0 + r;
                diag[ny - 1] = 1.0 + r;
            }
            BcY::Periodic => {
                // A = B + u v^T with u = (gamma, 0.., off), v = (1, 0.., off/gamma)
                gamma = -diag[0];
                diag[0] -= gamma;
                diag[ny - 1] -= off * off / gamma;
            }
        }
        let mut c_prime = vec![0.0; ny];
        let mut denom = vec![0.0; ny];
        denom[0] = diag[0];
        c_prime[0] = off / denom[0];
        for j in 1..ny {
            denom[j] = diag[j] - off * c_prime[j - 1];
            c_prime[j] = off / denom[j];
        }
        let mut s = ColumnSolver { r, bc, c_prime, denom, z: Vec::new(), z_factor: 0.0, gamma };
        if bc == BcY::Periodic {
            let mut u = vec![0.0; ny];
            u[0] = gamma;
            u[ny - 1] = off;
            s.thomas(&mut u);
            s.z_factor = 1.0 / (1.0 + u[0] + off / gamma * u[ny - 1]);
            s.z = u;
        }
        s
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    fn thomas(&self, x: &mut [f64]) {
        let n = x.len();
        let off = -self.r;
        x[0] /= self.denom[0];
        for j in 1..n {
            x[j] = (x[j] - off * x[j - 1]) / self.denom[j];
        }
        for j in (0..n - 1).rev() {
            x[j] -= self.c_prime[j] * x[j + 1];
        }
    }

    /// Overwrites `x` (the right-hand side) with the solution.
    pub fn solve(&self, x: &mut [f64]) {
        self.thomas(x);
        if self.bc == BcY::Periodic {
            let n = x.len();
            let off = -self.r;
            let dot = x[0] + off / self.gamma * x[n - 1];
            let f = dot * self.z_factor;
            for (xi, zi) in x.iter_mut().zip(&self.z) {
                *xi -= f * zi;
            }
        }
    }
}
