//! Periodic cell problem and effective diffusivity.
//!
//! For each direction `i` the corrector `theta_i` solves
//! `theta_t + u . grad theta - kappa Lap theta = -u_i` on the periodic cell,
//! and `kappa*_ij = kappa delta_ij - <u_i theta_j>`. Steady flows are solved by
//! GMRES preconditioned with the inverse Laplacian; time-periodic flows are
//! integrated until the solution repeats from one period to the next.

mod gmres;
mod operator;

use std::f64::consts::PI;

use log::debug;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flows::Cellular;
use gmres::gmres;
use operator::{mean, neg_laplacian, PeriodicFlow, SpectralSolver};

/// Note attached to every homogenized result.
pub const WEAK_REACTION_CAVEAT: &str = "effective tensor applies only in the limit of very weak reaction";

/// Periodic velocity on the cell, `u = (psi_y, -psi_x)` times an optional
/// time modulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellFlow {
    None,
    /// `u = (amplitude sin(2 pi n y / Ly), 0)`.
    Shear { amplitude: f64, modes: u32 },
    /// `u = (0, amplitude sin(2 pi n x / Lx))`.
    RotatedShear { amplitude: f64, modes: u32 },
    /// The cellular family scaled by `amplitude`, cell sizes `lx`, `ly`.
    Cellular { m: u32, amplitude: f64, lx: f64, ly: f64 },
    /// Shear times `sin(2 pi frequency t)`.
    PulsatingShear { amplitude: f64, modes: u32, frequency: f64 },
}

impl CellFlow {
    fn stream(&self, lx: f64, ly: f64) -> Result<Box<dyn Fn(f64, f64) -> f64 + Send + Sync>> {
        Ok(match *self {
            CellFlow::None => Box::new(|_, _| 0.0),
            CellFlow::Shear { amplitude, modes } | CellFlow::PulsatingShear { amplitude, modes, .. } => {
                let k = 2.0 * PI * modes as f64 / ly;
                Box::new(move |_, y| -amplitude * (k * y).cos() / k)
            }
            CellFlow::RotatedShear { amplitude, modes } => {
                let k = 2.0 * PI * modes as f64 / lx;
                Box::new(move |x, _| amplitude * (k * x).cos() / k)
            }
            CellFlow::Cellular { m, amplitude, lx: cx, ly: cy } => {
                let c = Cellular::new(m, amplitude, cx, cy, 0.0)?;
                Box::new(move |x, y| amplitude * cy * c.psi(x, y))
            }
        })
    }

    /// Period in time, `None` for steady flows.
    pub fn period(&self) -> Option<f64> {
        match *self {
            CellFlow::PulsatingShear { frequency, .. } if frequency != 0.0 => Some(1.0 / frequency.abs()),
            _ => None,
        }
    }

    fn modulation(&self, t: f64) -> f64 {
        match *self {
            CellFlow::PulsatingShear { frequency, .. } => (2.0 * PI * frequency * t).sin(),
            _ => 1.0,
        }
    }

    fn check(&self) -> Result<()> {
        let (modes, amp) = match *self {
            CellFlow::None => return Ok(()),
            CellFlow::Shear { amplitude, modes }
            | CellFlow::RotatedShear { amplitude, modes }
            | CellFlow::PulsatingShear { amplitude, modes, .. } => (modes, amplitude),
            CellFlow::Cellular { amplitude, .. } => (1, amplitude),
        };
        if modes == 0 || !amp.is_finite() {
            return Err(invalid("cell flow needs modes >= 1 and a finite amplitude"));
        }
        Ok(())
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            CellFlow::None => 0.0,
            CellFlow::Shear { amplitude, .. }
            | CellFlow::RotatedShear { amplitude, .. }
            | CellFlow::Cellular { amplitude, .. }
            | CellFlow::PulsatingShear { amplitude, .. } => amplitude,
        }
    }

    pub fn with_amplitude(&self, a: f64) -> Self {
        let mut f = self.clone();
        match &mut f {
            CellFlow::None => {}
            CellFlow::Shear { amplitude, .. }
            | CellFlow::RotatedShear { amplitude, .. }
            | CellFlow::Cellular { amplitude, .. }
            | CellFlow::PulsatingShear { amplitude, .. } => *amplitude = a,
        }
        f
    }

    /// The same flow with the velocity reversed.
    pub fn reversed(&self) -> Self {
        let mut f = self.clone();
        match &mut f {
            CellFlow::None => {}
            CellFlow::Shear { amplitude, .. }
            | CellFlow::RotatedShear { amplitude, .. }
            | CellFlow::Cellular { amplitude, .. }
            | CellFlow::PulsatingShear { amplitude, .. } => *amplitude = -*amplitude,
        }
        f
    }
}

/// Solver settings for the cell problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSolverOptions {
    /// Residual target relative to `|u|_inf`.
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
    /// Time steps per period for time-periodic flows.
    pub steps_per_period: usize,
    pub max_periods: usize,
}

impl Default for CellSolverOptions {
    fn default() -> Self {
        CellSolverOptions { tolerance: 1e-8, restart: 50, max_iterations: 5000, steps_per_period: 400, max_periods: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellProblem {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub kappa: f64,
    pub flow: CellFlow,
    #[serde(default)]
    pub options: CellSolverOptions,
}

impl CellProblem {
    pub fn new(lx: f64, ly: f64, n: usize, kappa: f64, flow: CellFlow) -> Self {
        CellProblem { lx, ly, nx: n, ny: n, kappa, flow, options: CellSolverOptions::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lx > 0.0 && self.ly > 0.0 && self.kappa > 0.0) {
            return Err(invalid("cell problem needs positive cell lengths and kappa"));
        }
        if self.nx < 4 || self.ny < 4 {
            return Err(invalid("cell grid needs at least 4 x 4 cells"));
        }
        self.flow.check()?;
        let psi = self.flow.stream(self.lx, self.ly)?;
        // the velocity must be periodic on the cell
        for a in 0..7 {
            for b in 0..7 {
                let (x, y) = (self.lx * a as f64 / 7.0 + 0.013, self.ly * b as f64 / 7.0 + 0.029);
                let base = psi(x, y);
                let scale = psi(x, y).abs().max(1e-300);
                let jumps = [
                    psi(x + self.lx, y) - base - (psi(self.lx, y) - psi(0.0, y)),
                    psi(x, y + self.ly) - base - (psi(x, self.ly) - psi(x, 0.0)),
                ];
                if jumps.iter().any(|j| j.abs() > 1e-9 * scale.max(1.0)) {
                    return Err(invalid("flow is not periodic on the cell"));
                }
            }
        }
        Ok(())
    }

    fn discrete_flow(&self) -> Result<PeriodicFlow> {
        let psi = self.flow.stream(self.lx, self.ly)?;
        let f = PeriodicFlow::from_stream(self.nx, self.ny, self.lx, self.ly, psi);
        let [c1, c2] = f.centred();
        let sup = f.sup();
        for (k, c) in [c1, c2].iter().enumerate() {
            if mean(c).abs() > 1e-10 * sup.max(1e-300) {
                return Err(invalid(format!("velocity component {} has nonzero cell mean; the cell problem needs mean-zero flow", k + 1)));
            }
        }
        Ok(f)
    }
}

/// Correctors and solver diagnostics.
#[derive(Clone, Debug)]
pub struct CellSolution {
    pub theta: [Array2<f64>; 2],
    /// Final residual, relative to `|u|_inf` (periodicity defect for time-periodic flows).
    pub residuals: [f64; 2],
    pub iterations: [usize; 2],
    /// For time-periodic flows: `<u_i theta_j>` averaged over the last period.
    time_mean_flux: Option<[[f64; 2]; 2]>,
}

fn to_array(nx: usize, ny: usize, v: Vec<f64>) -> Array2<f64> {
    Array2::from_shape_vec((nx, ny), v).expect("length nx * ny")
}

fn solve_steady(cp: &CellProblem, flow: &PeriodicFlow, rhs: &[f64]) -> Result<(Vec<f64>, f64, usize)> {
    let (nx, ny, n) = (cp.nx, cp.ny, cp.nx * cp.ny);
    let sup = flow.sup();
    let mut theta = vec![0.0; n];
    if sup == 0.0 {
        return Ok((theta, 0.0, 0));
    }
    let (dx, dy, kappa) = (flow.dx, flow.dy, cp.kappa);
    let spectral = SpectralSolver::new(nx, ny, dx, dy);
    let precond = |v: &mut [f64]| spectral.apply(v, |e| 1.0 / (kappa * e), 0.0);
    let op = |x: &[f64], out: &mut [f64]| {
        let mut lap = vec![0.0; n];
        neg_laplacian(nx, ny, dx, dy, x, &mut lap);
        flow.advect(x, 1.0, out);
        out.iter_mut().zip(&lap).for_each(|(o, l)| *o += kappa * l);
    };
    let apply = |v: &[f64], out: &mut [f64]| {
        let mut z = v.to_vec();
        precond(&mut z);
        op(&z, out);
    };
    let residual = |x: &[f64]| {
        let mut ax = vec![0.0; n];
        op(x, &mut ax);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        (r.iter().fold(0.0f64, |m, v| m.max(v.abs())), r)
    };
    let tol = cp.options.tolerance * sup;
    let out = gmres(rhs, &mut theta, cp.options.restart, cp.options.max_iterations, tol, apply, precond, residual);
    let last = *out.history.last().unwrap_or(&f64::NAN);
    if !out.converged {
        return Err(Error::NoConvergence { iterations: out.iterations, residual: last / sup, history: out.history });
    }
    let m = mean(&theta);
    theta.iter_mut().for_each(|v| *v -= m);
    Ok((theta, last / sup, out.iterations))
}

/// Integrates both correctors over whole periods (Crank-Nicolson diffusion,
/// second-order Adams-Bashforth advection and forcing) until one period maps
/// the state to itself.
fn solve_periodic(cp: &CellProblem, flow: &PeriodicFlow, period: f64) -> Result<CellSolution> {
    let (nx, ny, n) = (cp.nx, cp.ny, cp.nx * cp.ny);
    let steps = cp.options.steps_per_period.max(8);
    let dt = period / steps as f64;
    let kappa = cp.kappa;
    let spectral = SpectralSolver::new(nx, ny, flow.dx, flow.dy);
    let centred = flow.centred();
    let sup = flow.sup();
    let mut theta = [vec![0.0; n], vec![0.0; n]];
    let mut prev_tend: [Option<Vec<f64>>; 2] = [None, None];
    let mut flux = [[0.0; 2]; 2];
    let mut defect = [f64::INFINITY; 2];
    let mut periods = 0;
    let scale_t = |k: usize| cp.flow.modulation(k as f64 * dt);
    // explicit part: -s(t) (div(u theta) + u_i)
    let tendency = |theta: &[f64], s: f64, comp: usize| {
        let mut out = vec![0.0; n];
        flow.advect(theta, s, &mut out);
        out.iter_mut().zip(&centred[comp]).for_each(|(o, u)| *o = -(*o + s * u));
        out
    };
    while periods < cp.options.max_periods {
        let start = theta.clone();
        let mut acc = [[0.0; 2]; 2];
        for k in 0..steps {
            let (s0, s1) = (scale_t(k), scale_t(k + 1));
            // trapezoid weights for the period average of <u_i theta_j>
            let w = if k == 0 { 0.5 } else { 1.0 };
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += w * s0 * dotm(&centred[i], &theta[j]);
                }
            }
            for c in 0..2 {
                let now = tendency(&theta[c], s0, c);
                let explicit: Vec<f64> = match &prev_tend[c] {
                    Some(p) => now.iter().zip(p).map(|(a, b)| 1.5 * a - 0.5 * b).collect(),
                    None => now.clone(),
                };
                let mut lap = vec![0.0; n];
                neg_laplacian(nx, ny, flow.dx, flow.dy, &theta[c], &mut lap);
                let mut rhs: Vec<f64> =
                    theta[c].iter().zip(&explicit).zip(&lap).map(|((t, e), l)| t + dt * e - 0.5 * dt * kappa * l).collect();
                spectral.apply(&mut rhs, |e| 1.0 / (1.0 + 0.5 * dt * kappa * e), 1.0);
                theta[c] = rhs;
                prev_tend[c] = Some(now);
            }
            if k + 1 == steps {
                for i in 0..2 {
                    for j in 0..2 {
                        acc[i][j] += 0.5 * s1 * dotm(&centred[i], &theta[j]);
                    }
                }
            }
        }
        periods += 1;
        for i in 0..2 {
            for j in 0..2 {
                flux[i][j] = acc[i][j] / steps as f64;
            }
        }
        let size = theta.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for c in 0..2 {
            defect[c] = theta[c].iter().zip(&start[c]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / size;
        }
        debug!("cell relaxation period {periods}: defect {defect:?}");
        if sup == 0.0 || defect.iter().all(|&d| d <= cp.options.tolerance) {
            let [t1, t2] = theta;
            return Ok(CellSolution {
                theta: [to_array(nx, ny, t1), to_array(nx, ny, t2)],
                residuals: defect,
                iterations: [periods * steps; 2],
                time_mean_flux: Some(flux),
            });
        }
    }
    let worst = defect[0].max(defect[1]);
    Err(Error::NoConvergence { iterations: periods * steps, residual: worst, history: defect.to_vec() })
}

fn dotm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// Mean-zero periodic correctors for both directions.
pub fn solve_cell_problem(cp: &CellProblem) -> Result<CellSolution> {
    cp.validate()?;
    let flow = cp.discrete_flow()?;
    if let Some(period) = cp.flow.period() {
        return solve_periodic(cp, &flow, period);
    }
    let [c1, c2] = flow.centred();
    let neg = |c: &Vec<f64>| c.iter().map(|v| -v).collect::<Vec<f64>>();
    let (r1, r2) = (neg(&c1), neg(&c2));
    let (a, b) = rayon::join(|| solve_steady(cp, &flow, &r1), || solve_steady(cp, &flow, &r2));
    let ((t1, res1, it1), (t2, res2, it2)) = (a?, b?);
    Ok(CellSolution {
        theta: [to_array(cp.nx, cp.ny, t1), to_array(cp.nx, cp.ny, t2)],
        residuals: [res1, res2],
        iterations: [it1, it2],
        time_mean_flux: None,
    })
}

/// Effective diffusivity report `{kappa, kstar_tensor, kstar_min, v0_star, residuals}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTensor {
    pub kappa: f64,
    pub kstar_tensor: [[f64; 2]; 2],
    pub kstar_min: f64,
    pub v0_star: f64,
    pub residuals: [f64; 2],
    pub caveats: Vec<String>,
}

impl EffectiveTensor {
    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> [f64; 2] {
        sym_eigs(&self.kstar_tensor)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn sym_eigs(k: &[[f64; 2]; 2]) -> [f64; 2] {
    let (a, d) = (k[0][0], k[1][1]);
    let b = 0.5 * (k[0][1] + k[1][0]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mid - rad, mid + rad]
}

/// `kappa*_ij = kappa delta_ij - <u_i theta_j>`, its smallest symmetric
/// eigenvalue `k*`, and the enhanced speed `v0 sqrt(k*/kappa)`.
pub fn effective_diffusivity(cp: &CellProblem, sol: &CellSolution, v0: f64) -> Result<EffectiveTensor> {
    if !(v0 > 0.0) {
        return Err(invalid("v0 must be positive"));
    }
    let flux = match sol.time_mean_flux {
        Some(f) => f,
        None => {
            let flow = cp.discrete_flow()?;
            let c = flow.centred();
            let th = [sol.theta[0].as_slice().expect("standard layout"), sol.theta[1].as_slice().expect("standard layout")];
            let mut f = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    f[i][j] = dotm(&c[i], th[j]);
                }
            }
            f
        }
    };
    let mut k = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            k[i][j] = if i == j { cp.kappa } else { 0.0 } - flux[i][j];
        }
    }
    let [kmin, _] = sym_eigs(&k);
    if !(kmin > 0.0) {
        return Err(Error::Indefinite(kmin));
    }
    Ok(EffectiveTensor {
        kappa: cp.kappa,
        kstar_tensor: k,
        kstar_min: kmin,
        v0_star: v0 * (kmin / cp.kappa).sqrt(),
        residuals: sol.residuals,
        caveats: vec![WEAK_REACTION_CAVEAT.to_string()],
    })
}

/// Solves the cell problem and returns the effective tensor.
pub fn homogenize(cp: &CellProblem, v0: f64) -> Result<EffectiveTensor> {
    let sol = solve_cell_problem(cp)?;
    effective_diffusivity(cp, &sol, v0)
}
