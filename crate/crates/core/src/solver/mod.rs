//! Time integration of the reactive strip problem with an optional moving window.
//!
//! One step is forward Euler on
//! `-div(u T) + kappa Lap T + (v0^2 / 4 kappa) f(T)`, with MUSCL face values
//! (monotonized-central limiter) on the staggered velocity. Diffusion across
//! the strip can instead be taken backward-Euler after the explicit part.
//! The step is bounded by a condition under which every cell update is a
//! convex combination, so `0 <= T <= 1` holds up to rounding.

mod checkpoint;
mod implicit;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use implicit::ColumnSolver;

use log::{debug, info, warn};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{lemma1_product, reaction_integral, BurningRateSeries};
use crate::error::{invalid, Error, Result};
use crate::field::{gradient_sq_unchecked, BcY, Grid, ScalarField};
use crate::flows::{FlowField, FlowSpec, ShearShape};
use crate::reaction::ReactionModel;

/// Overshoots up to this size are clamped; larger ones are scheme failures.
pub const RANGE_TOL: f64 = 1e-10;

/// Logistic initial profile `1 / (1 + exp(lambda (x - x0)))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialFront {
    pub x0: f64,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum WindowPolicy {
    Fixed,
    /// Shift right once a column `margin` cells from the right edge exceeds
    /// `threshold`; the leading active column is moved back to `2 margin`
    /// cells from the edge.
    FollowFront { margin: usize, threshold: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionMode {
    Explicit,
    /// Backward Euler across the strip, explicit along it.
    ImplicitY,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub grid: Grid,
    pub reaction: ReactionModel,
    pub flow: FlowSpec,
    /// Fixed step; chosen from the stability limits when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_final: f64,
    pub snapshot_every: f64,
    pub window: WindowPolicy,
    pub initial: InitialFront,
    pub diffusion: DiffusionMode,
    /// Values imposed left and right of the window.
    #[serde(default = "default_far_field")]
    pub far_field: (f64, f64),
}

fn default_far_field() -> (f64, f64) {
    (1.0, 0.0)
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.reaction.validate()?;
        if !(self.t_final >= 0.0) || !(self.snapshot_every > 0.0) {
            return Err(invalid("need t_final >= 0 and snapshot_every > 0"));
        }
        if !(self.initial.lambda > 0.0) {
            return Err(invalid(format!("initial decay rate must be positive, got {}", self.initial.lambda)));
        }
        let (l, r) = self.far_field;
        if !(0.0..=1.0).contains(&l) || !(0.0..=1.0).contains(&r) {
            return Err(invalid("far-field values must lie in [0, 1]"));
        }
        if let WindowPolicy::FollowFront { margin, threshold } = self.window {
            if margin == 0 || 2 * margin >= self.grid.nx || !(threshold > 0.0) {
                return Err(invalid(format!(
                    "follow-front window needs 0 < 2 margin < nx and threshold > 0 (margin={margin}, nx={})",
                    self.grid.nx
                )));
            }
        }
        Ok(())
    }
}

/// Step limits of the scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLimits {
    /// `0.4 min(dx, dy) / |u|_inf`.
    pub advective: f64,
    /// `0.25 min(dx, dy)^2 / kappa`, or `dx^2` only with implicit cross diffusion.
    pub diffusive: f64,
    /// `0.5 kappa / v0^2`.
    pub reactive: f64,
    /// `1 / (max_cell sum_faces |u_f| / h_f + 2 kappa / dx^2 [+ 2 kappa / dy^2] + rate Lip f)`.
    pub monotone: f64,
}

impl StepLimits {
    pub fn min(&self) -> f64 {
        self.advective.min(self.diffusive).min(self.reactive).min(self.monotone)
    }
}

/// Largest per-cell outflow-plus-inflow rate `sum_f |u_f| / h_f`.
fn face_rate(flow: &FlowField) -> f64 {
    let g = &flow.grid;
    let mut m = 0.0f64;
    for i in 0..g.nx {
        for j in 0..g.ny {
            let s = (flow.u1[[i, j]].abs() + flow.u1[[i + 1, j]].abs()) / g.dx
                + (flow.u2[[i, j]].abs() + flow.u2[[i, j + 1]].abs()) / g.dy;
            m = m.max(s);
        }
    }
    m
}

pub fn step_limits(config: &SimulationConfig) -> Result<StepLimits> {
    let g = &config.grid;
    let model = &config.reaction;
    let h = g.dx.min(g.dy);
    let (speed, rate) = if config.flow.is_time_dependent() {
        let u = config.flow.u1_sup(g.height)?;
        (u, 2.0 * u / g.dx)
    } else {
        let f = config.flow.sample(g, 0.0)?;
        (f.max_speed(), face_rate(&f))
    };
    let advective = if speed > 0.0 { 0.4 * h / speed } else { f64::INFINITY };
    let explicit_y = config.diffusion == DiffusionMode::Explicit;
    let diffusive = if explicit_y { 0.25 * h * h / model.kappa } else { 0.25 * g.dx * g.dx / model.kappa };
    let mut total = rate + 2.0 * model.kappa / (g.dx * g.dx) + model.rate() * model.lipschitz();
    if explicit_y {
        total += 2.0 * model.kappa / (g.dy * g.dy);
    }
    Ok(StepLimits { advective, diffusive, reactive: 0.5 * model.time(), monotone: 1.0 / total })
}

/// Logistic front, constant across the strip.
pub fn initial_front(grid: &Grid, x0: f64, lambda: f64) -> Result<ScalarField> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("initial decay rate must be positive, got {lambda}")));
    }
    Ok(ScalarField::from_fn(grid, |x, _| {
        let z = lambda * (x - x0);
        // 1 / (1 + e^z) without overflow
        if z > 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }))
}

/// Record of a window move.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowShift {
    pub t: f64,
    pub cells: usize,
    pub x_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState {
    pub field: ScalarField,
    pub t: f64,
    pub steps: u64,
    /// `int T dx` (per unit height) of columns shifted out on the left.
    pub dropped_mass: f64,
    pub shifts: Vec<WindowShift>,
    /// Set once the left edge is seen with `1 - T > 1e-3`.
    pub left_truncated: bool,
    /// Set once a fixed window sees `T > 1e-6` in its last column.
    pub right_truncated: bool,
}

impl SimulationState {
    /// `int int T dx dy / H` including the columns dropped by window moves.
    pub fn burned_mass(&self) -> f64 {
        let g = &self.field.grid;
        self.dropped_mass + self.field.values.sum() * g.dx / g.ny as f64
    }

    /// Where a sharp front with the same burned mass would sit, measured from
    /// the original left edge of the window.
    pub fn front_x(&self) -> f64 {
        let g = &self.field.grid;
        let moved: usize = self.shifts.iter().map(|s| s.cells).sum();
        g.x_min - moved as f64 * g.dx + self.burned_mass()
    }
}

enum FlowSource {
    Steady(FlowField),
    /// `sin(2 pi w t)` times a steady envelope.
    Pulsating { base: FlowField, frequency: f64 },
    Resampled(FlowSpec),
}

impl FlowSource {
    fn new(spec: &FlowSpec, grid: &Grid) -> Result<Self> {
        Ok(match *spec {
            FlowSpec::Pulsating { amplitude, modes, frequency } => FlowSource::Pulsating {
                base: FlowSpec::Shear { profile: ShearShape::Sine { amplitude, modes } }.sample(grid, 0.0)?,
                frequency,
            },
            FlowSpec::Translating { .. } => FlowSource::Resampled(spec.clone()),
            _ => FlowSource::Steady(spec.sample(grid, 0.0)?),
        })
    }

}

/// Explicit-in-time integrator with snapshot bookkeeping.
pub struct Solver {
    pub config: SimulationConfig,
    pub state: SimulationState,
    pub series: BurningRateSeries,
    dt: f64,
    flow: FlowSource,
    column: Option<ColumnSolver>,
    last_mass: f64,
    last_record_t: Option<f64>,
    next_snapshot: u64,
    ghost: Vec<f64>,
    spare: Vec<f64>,
}

impl Solver {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let field = initial_front(&config.grid, config.initial.x0, config.initial.lambda)?;
        let state = SimulationState {
            field,
            t: 0.0,
            steps: 0,
            dropped_mass: 0.0,
            shifts: Vec::new(),
            left_truncated: false,
            right_truncated: false,
        };
        Self::with_state(config, state, 0)
    }

    /// Starts from an arbitrary field instead of the logistic front.
    pub fn from_field(config: SimulationConfig, field: ScalarField) -> Result<Self> {
        config.validate()?;
        if field.grid != config.grid {
            return Err(invalid("initial field is not on the configured grid"));
        }
        field.check_finite()?;
        let (lo, hi) = field.min_max();
        if lo < -RANGE_TOL || hi > 1.0 + RANGE_TOL {
            return Err(Error::OutOfRange(if lo < 0.0 { lo } else { hi }));
        }
        let state = SimulationState {
            field,
            t: 0.0,
            steps: 0,
            dropped_mass: 0.0,
            shifts: Vec::new(),
            left_truncated: false,
            right_truncated: false,
        };
        Self::with_state(config, state, 0)
    }

    /// Resumes from a state at snapshot number `snapshot_index`.
    pub(crate) fn with_state(config: SimulationConfig, state: SimulationState, snapshot_index: u64) -> Result<Self> {
        let limits = step_limits(&config)?;
        let dt = match config.dt {
            Some(dt) => {
                if !(dt > 0.0) {
                    return Err(invalid("dt must be positive"));
                }
                let checks = [
                    (limits.advective, "advective CFL"),
                    (limits.diffusive, "diffusive limit"),
                    (limits.reactive, "reaction time"),
                    (limits.monotone, "monotonicity of the combined update"),
                ];
                for (limit, reason) in checks {
                    if dt > limit * (1.0 + 1e-12) {
                        return Err(Error::Stability { dt, limit, reason: reason.into() });
                    }
                }
                dt
            }
            None => {
                let max = 0.9 * limits.min();
                let k = (config.snapshot_every / max).ceil().max(1.0);
                config.snapshot_every / k
            }
        };
        debug!("dt = {dt:e}, limits {limits:?}");
        let flow = FlowSource::new(&config.flow, &state.field.grid)?;
        let column = match config.diffusion {
            DiffusionMode::Explicit => None,
            DiffusionMode::ImplicitY => {
                let g = &config.grid;
                Some(ColumnSolver::new(g.ny, dt * config.reaction.kappa / (g.dy * g.dy), g.bc_y))
            }
        };
        let last_mass = state.burned_mass();
        Ok(Solver {
            config,
            state,
            series: BurningRateSeries::default(),
            dt,
            flow,
            column,
            last_mass,
            last_record_t: None,
            next_snapshot: snapshot_index,
            ghost: Vec::new(),
            spare: Vec::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub(crate) fn last_mass(&self) -> f64 {
        self.last_mass
    }

    pub(crate) fn last_record_t(&self) -> Option<f64> {
        self.last_record_t
    }

    pub(crate) fn restore_record(&mut self, mass: f64, t: Option<f64>) {
        self.last_mass = mass;
        self.last_record_t = t;
    }

    pub(crate) fn snapshot_index(&self) -> u64 {
        self.next_snapshot
    }

    fn velocity_at(&self, t: f64) -> Result<(Option<FlowField>, f64)> {
        Ok(match &self.flow {
            FlowSource::Steady(_) => (None, 1.0),
            FlowSource::Pulsating { frequency, .. } => (None, (2.0 * std::f64::consts::PI * frequency * t).sin()),
            FlowSource::Resampled(spec) => (Some(spec.sample(&self.state.field.grid, t)?), 1.0),
        })
    }

    /// One forward step of length `dt`.
    pub fn step(&mut self) -> Result<()> {
        self.step_by(self.dt)
    }

    fn step_by(&mut self, dt: f64) -> Result<()> {
        let t = self.state.t;
        let (fresh, scale) = self.velocity_at(t)?;
        let flow = match (&fresh, &self.flow) {
            (Some(f), _) => f,
            (None, FlowSource::Steady(f)) => f,
            (None, FlowSource::Pulsating { base, .. }) => base,
            (None, FlowSource::Resampled(_)) => unreachable!("resampled flows always produce a field"),
        };
        let g = &self.state.field.grid;
        let (nx, ny) = (g.nx, g.ny);
        let values = self.state.field.values.as_slice().expect("standard layout");
        fill_ghosts(values, nx, ny, g.bc_y, self.config.far_field, &mut self.ghost);
        let mut next = std::mem::take(&mut self.spare);
        next.resize(nx * ny, 0.0);
        explicit_update(&self.ghost, &mut next, g, flow, scale, &self.config.reaction, dt, self.column.is_none());
        if let Some(col) = &self.column {
            let partial;
            let col = if dt == self.dt {
                col
            } else {
                partial = ColumnSolver::new(ny, dt * self.config.reaction.kappa / (g.dy * g.dy), g.bc_y);
                &partial
            };
            if rayon::current_num_threads() > 1 {
                next.par_chunks_mut(ny).with_min_len(16).for_each(|c| col.solve(c));
            } else {
                next.chunks_mut(ny).for_each(|c| col.solve(c));
            }
        }
        let next = Array2::from_shape_vec((nx, ny), next).expect("shape matches");
        let old = std::mem::replace(&mut self.state.field.values, next);
        self.spare = old.into_raw_vec();
        self.state.steps += 1;
        self.state.t = t + dt;
        self.enforce_range()?;
        self.follow_front();
        Ok(())
    }

    fn enforce_range(&mut self) -> Result<()> {
        let t = self.state.t;
        let ny = self.state.field.grid.ny;
        let data = self.state.field.values.as_slice_mut().expect("standard layout");
        for (k, v) in data.iter_mut().enumerate() {
            if *v >= 0.0 && *v <= 1.0 {
                continue;
            }
            let (i, j) = (k / ny, k % ny);
            if !v.is_finite() {
                return Err(Error::NonFinite { i, j, value: *v });
            }
            if *v < -RANGE_TOL || *v > 1.0 + RANGE_TOL {
                return Err(Error::SchemeFailure { t, i, j, value: *v });
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(())
    }

    fn follow_front(&mut self) {
        let WindowPolicy::FollowFront { margin, threshold } = self.config.window else {
            return;
        };
        let nx = self.config.grid.nx;
        let v = &self.state.field.values;
        let col_max = |i: usize| v.row(i).iter().fold(0.0f64, |m, &x| m.max(x));
        if col_max(nx - margin) <= threshold {
            return;
        }
        let lead = (0..nx).rev().find(|&i| col_max(i) > threshold).unwrap_or(nx - margin);
        let target = nx - 2 * margin;
        if lead > target {
            self.shift_window(lead - target);
        }
    }

    /// Drops `shift` columns on the left and appends far-field columns on the right.
    pub fn shift_window(&mut self, shift: usize) {
        let g = self.state.field.grid.clone();
        let (nx, ny) = (g.nx, g.ny);
        let shift = shift.min(nx);
        let old = &self.state.field.values;
        let dropped: f64 = (0..shift).map(|i| old.row(i).sum()).sum::<f64>() * g.dx / ny as f64;
        let far = self.config.far_field.1;
        let next = Array2::from_shape_fn((nx, ny), |(i, j)| if i + shift < nx { old[[i + shift, j]] } else { far });
        let x_min = g.x_min + shift as f64 * g.dx;
        let mut grid = g;
        grid.x_min = x_min;
        self.state.field = ScalarField { grid, values: next };
        self.state.dropped_mass += dropped;
        self.state.shifts.push(WindowShift { t: self.state.t, cells: shift, x_min });
        debug!("window shifted by {shift} cells to x_min = {x_min}");
        if self.config.flow.is_x_dependent() {
            // the velocity depends on absolute x; resample on the moved grid
            if let Ok(f) = FlowSource::new(&self.config.flow, &self.state.field.grid) {
                self.flow = f;
            }
        }
    }

    /// Appends diagnostics for the current state.
    pub fn record(&mut self) {
        let field = &self.state.field;
        let model = &self.config.reaction;
        let mass = self.state.burned_mass();
        let v_mass = match self.last_record_t {
            Some(t_prev) if self.state.t > t_prev => (mass - self.last_mass) / (self.state.t - t_prev),
            _ => f64::NAN,
        };
        self.last_mass = mass;
        self.last_record_t = Some(self.state.t);
        let v_reaction = model.rate() * reaction_integral(field, model);
        let grad_sq = gradient_sq_unchecked(field);
        let lemma = lemma1_product(field, model).map(|l| l.value).unwrap_or(f64::NAN);
        let front = self.state.front_x();
        self.series.push(self.state.t, v_reaction, v_mass, grad_sq, lemma, front);

        let nx = field.grid.nx;
        let left_min = field.values.row(0).iter().fold(1.0f64, |m, &x| m.min(x));
        if self.config.far_field.0 == 1.0 && 1.0 - left_min > 1e-3 && !self.state.left_truncated {
            warn!("front reached the left edge of the window at t = {}", self.state.t);
            self.state.left_truncated = true;
        }
        let right_max = field.values.row(nx - 1).iter().fold(0.0f64, |m, &x| m.max(x));
        if self.config.far_field.1 == 0.0 && right_max > 1e-6 && !self.state.right_truncated {
            warn!("front reached the right edge of the window at t = {}", self.state.t);
            self.state.right_truncated = true;
        }
    }

    /// Advances to the next snapshot time and records it.
    pub fn advance_snapshot(&mut self) -> Result<()> {
        let target = ((self.next_snapshot + 1) as f64 * self.config.snapshot_every).min(self.config.t_final);
        let start = self.state.t;
        let dt = self.dt;
        let n = ((target - start) / dt * (1.0 + 1e-12)).floor().max(0.0) as u64;
        for k in 0..n {
            self.step()?;
            // time stays exact relative to the snapshot start
            self.state.t = start + (k + 1) as f64 * dt;
        }
        let rest = target - self.state.t;
        if rest > 1e-9 * dt {
            self.step_by(rest)?;
        }
        self.state.t = target;
        self.next_snapshot += 1;
        self.record();
        Ok(())
    }

    pub fn is_done(&self) -> bool {
        self.state.t >= self.config.t_final - 1e-12 * self.config.t_final.max(1.0)
    }

    /// Runs to `t_final`, recording every snapshot.
    pub fn run(&mut self) -> Result<()> {
        if self.series.is_empty() && self.next_snapshot == 0 {
            self.record();
        }
        while !self.is_done() {
            self.advance_snapshot()?;
        }
        info!(
            "run finished: t = {}, {} steps, {} window moves",
            self.state.t,
            self.state.steps,
            self.state.shifts.len()
        );
        Ok(())
    }
}

/// Output of a complete run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub series: BurningRateSeries,
    pub state: SimulationState,
    pub dt: f64,
}

pub fn run(config: &SimulationConfig) -> Result<RunOutput> {
    let mut s = Solver::new(config.clone())?;
    s.run()?;
    Ok(RunOutput { series: s.series, dt: s.dt, state: s.state })
}

/// Decay rate of the leading edge: least-squares slope of `-ln T_bar` over the
/// columns where `1e-8 < T_bar < 1e-3`. `None` when fewer than 4 columns qualify.
pub fn leading_decay_rate(field: &ScalarField) -> Option<f64> {
    let g = &field.grid;
    let pts: Vec<(f64, f64)> = (0..g.nx)
        .map(|i| (g.x_center(i), field.column_mean(i)))
        .filter(|&(_, t)| t > 1e-8 && t < 1e-3)
        .map(|(x, t)| (x, t.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

/// Monotonized-central slope (times the cell width):
/// `minmod(2 (t0 - tm), (tp - tm) / 2, 2 (tp - t0))`.
#[inline]
fn mc_slope(tm: f64, t0: f64, tp: f64) -> f64 {
    let (a, b) = (t0 - tm, tp - t0);
    let m = (2.0 * a).abs().min((2.0 * b).abs()).min((0.5 * (a + b)).abs());
    if a * b > 0.0 {
        m.copysign(a)
    } else {
        0.0
    }
}

/// Upwinded MUSCL face value between cells with values `(a2, a1 | b1, b2)`,
/// where `a1`, `b1` touch the face.
#[inline]
fn face_value(vel: f64, a2: f64, a1: f64, b1: f64, b2: f64) -> f64 {
    if vel >= 0.0 {
        a1 + 0.5 * mc_slope(a2, a1, b1)
    } else {
        b1 - 0.5 * mc_slope(a1, b1, b2)
    }
}

const NG: usize = 2;

/// Copies `values` into `buf` with `NG` ghost cells on every side: far-field
/// values in x, the strip boundary condition in y.
fn fill_ghosts(values: &[f64], nx: usize, ny: usize, bc: BcY, far: (f64, f64), buf: &mut Vec<f64>) {
    let stride = ny + 2 * NG;
    buf.resize((nx + 2 * NG) * stride, 0.0);
    for (gi, col) in buf.chunks_exact_mut(stride).enumerate() {
        if gi < NG {
            col.fill(far.0);
            continue;
        }
        if gi >= nx + NG {
            col.fill(far.1);
            continue;
        }
        let i = gi - NG;
        col[NG..NG + ny].copy_from_slice(&values[i * ny..(i + 1) * ny]);
        for k in 0..NG {
            let (lo, hi) = match bc {
                BcY::Neumann => (col[NG + k], col[NG + ny - 1 - k]),
                BcY::Periodic => (col[NG + ny - 1 - k], col[NG + k]),
            };
            col[NG - 1 - k] = lo;
            col[NG + ny + k] = hi;
        }
    }
}

/// Upwinded flux through x-face `k` (between cells `k - 1` and `k`) for every row.
#[inline]
fn x_face_fluxes(ghost: &[f64], stride: usize, k: usize, u1: &[f64], scale: f64, out: &mut [f64]) {
    let ny = out.len();
    let c = |m: usize| &ghost[m * stride + NG..m * stride + NG + ny];
    // ghost column of cell k - 1 is k + 1
    let (a2, a1, b1, b2) = (c(k), c(k + 1), c(k + 2), c(k + 3));
    let u = &u1[k * ny..(k + 1) * ny];
    for j in 0..ny {
        let v = scale * u[j];
        out[j] = v * face_value(v, a2[j], a1[j], b1[j], b2[j]);
    }
}

/// Explicit advection + diffusion + reaction from the ghosted field into `out`.
/// Cross diffusion is skipped when `explicit_y` is false (the caller solves it
/// implicitly afterwards).
#[allow(clippy::too_many_arguments)]
fn explicit_update(
    ghost: &[f64],
    out: &mut [f64],
    grid: &Grid,
    flow: &FlowField,
    scale: f64,
    model: &ReactionModel,
    dt: f64,
    explicit_y: bool,
) {
    let (nx, ny) = (grid.nx, grid.ny);
    let stride = ny + 2 * NG;
    let rate = model.rate();
    let (cx, cy) = (model.kappa / (grid.dx * grid.dx), if explicit_y { model.kappa / (grid.dy * grid.dy) } else { 0.0 });
    let (idx, idy) = (1.0 / grid.dx, 1.0 / grid.dy);
    let u1 = flow.u1.as_slice().expect("standard layout");
    let u2 = flow.u2.as_slice().expect("standard layout");
    let has_u2 = u2.iter().any(|&v| v != 0.0);

    let threads = rayon::current_num_threads();
    let block = if threads > 1 { (nx / (4 * threads)).max(8) } else { nx };
    let update_block = |(b, chunk): (usize, &mut [f64])| {
        let i0 = b * block;
        let mut fw = vec![0.0; ny];
        let mut fe = vec![0.0; ny];
        x_face_fluxes(ghost, stride, i0, u1, scale, &mut fw);
        for (di, col) in chunk.chunks_mut(ny).enumerate() {
            let i = i0 + di;
            x_face_fluxes(ghost, stride, i + 1, u1, scale, &mut fe);
            let c0 = &ghost[(i + NG) * stride..(i + NG + 1) * stride];
            let cw = &ghost[(i + NG - 1) * stride + NG..(i + NG - 1) * stride + NG + ny];
            let ce = &ghost[(i + NG + 1) * stride + NG..(i + NG + 1) * stride + NG + ny];
            let v = &u2[i * (ny + 1)..(i + 1) * (ny + 1)];
            let mut gs = if has_u2 { scale * v[0] * face_value(scale * v[0], c0[0], c0[1], c0[2], c0[3]) } else { 0.0 };
            for j in 0..ny {
                let g = j + NG;
                let t0 = c0[g];
                let (tw, te) = (cw[j], ce[j]);
                let (ts, tn) = (c0[g - 1], c0[g + 1]);
                let mut adv = (fe[j] - fw[j]) * idx;
                if has_u2 {
                    let vn = scale * v[j + 1];
                    let gn = vn * face_value(vn, ts, t0, tn, c0[g + 2]);
                    adv += (gn - gs) * idy;
                    gs = gn;
                }
                let diff = cx * (tw - 2.0 * t0 + te) + cy * (ts - 2.0 * t0 + tn);
                col[j] = t0 + dt * (-adv + diff + rate * model.f_raw(t0));
            }
            std::mem::swap(&mut fw, &mut fe);
        }
    };
    if threads > 1 {
        out.par_chunks_mut(block * ny).enumerate().for_each(update_block);
    } else {
        update_block((0, out));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BcY;
    use crate::reaction::ReactionKind;

    fn config(grid: Grid, flow: FlowSpec, reaction: ReactionModel) -> SimulationConfig {
        SimulationConfig {
            grid,
            reaction,
            flow,
            dt: None,
            t_final: 1.0,
            snapshot_every: 0.5,
            window: WindowPolicy::Fixed,
            initial: InitialFront { x0: 0.0, lambda: 0.5 },
            diffusion: DiffusionMode::Explicit,
            far_field: (1.0, 0.0),
        }
    }

    #[test]
    fn initial_front_examples() {
        let g = Grid::new(64, 4, 0.25, 1.0, -8.0, BcY::Periodic).unwrap();
        let f = initial_front(&g, 0.125, 0.5).unwrap();
        // cell 32 is centred at 0.125
        assert!((f.values[[32, 0]] - 0.5).abs() < 1e-15);
        for i in 0..64 {
            let x = g.x_center(i);
            let v = f.values[[i, 1]];
            if x < 0.125 {
                assert!(1.0 - v <= (0.5 * (x - 0.125)).exp());
            } else {
                assert!(v <= (-0.5 * (x - 0.125)).exp());
            }
        }
        assert!(initial_front(&g, 0.0, 0.0).is_err());
    }

    #[test]
    fn constant_states_are_fixed_points() {
        let g = Grid::new(16, 8, 0.1, 1.0, 0.0, BcY::Periodic).unwrap();
        let flow = FlowSpec::Shear { profile: ShearShape::Sine { amplitude: 3.0, modes: 1 } };
        for c in [0.0, 1.0] {
            let mut cfg = config(g.clone(), flow.clone(), ReactionModel::kpp(1.0, 0.1).unwrap());
            cfg.far_field = (c, c);
            let mut s = Solver::new(cfg).unwrap();
            s.state.field = ScalarField::constant(&g, c);
            for _ in 0..20 {
                s.step().unwrap();
            }
            assert!(s.state.field.values.iter().all(|&v| v == c));
        }
    }

    #[test]
    fn rejects_unstable_step() {
        let g = Grid::new(16, 8, 0.1, 1.0, 0.0, BcY::Periodic).unwrap();
        let mut cfg = config(g, FlowSpec::None, ReactionModel::kpp(1.0, 1.0).unwrap());
        cfg.dt = Some(0.01);
        assert!(matches!(Solver::new(cfg), Err(Error::Stability { .. })));
    }

    #[test]
    fn mc_limiter_is_monotone() {
        assert_eq!(mc_slope(0.0, 1.0, 1.0), 0.0);
        assert_eq!(mc_slope(0.0, 0.5, 1.0), 0.5);
        assert_eq!(mc_slope(0.0, 0.1, 1.0), 0.2);
        assert_eq!(mc_slope(1.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn window_shift_keeps_mass_and_front() {
        let g = Grid::new(64, 4, 0.5, 1.0, -10.0, BcY::Neumann).unwrap();
        let mut cfg = config(g, FlowSpec::None, ReactionModel::kpp(1.0, 1.0).unwrap());
        cfg.window = WindowPolicy::FollowFront { margin: 8, threshold: 1e-6 };
        let mut s = Solver::new(cfg).unwrap();
        let (m, x) = (s.state.burned_mass(), s.state.front_x());
        s.shift_window(5);
        assert!((s.state.field.grid.x_min + 7.5).abs() < 1e-12);
        assert!((s.state.burned_mass() - m).abs() < 1e-6);
        assert!((s.state.front_x() - x).abs() < 1e-12);
        assert_eq!(s.state.shifts.len(), 1);
    }

    #[test]
    fn inert_step_matches_fine_heat_solution() {
        // one step of the scheme is exactly the 3-point heat update
        let g = Grid::new(32, 4, 0.1, 1.0, 0.0, BcY::Periodic).unwrap();
        let model = ReactionModel::new(ReactionKind::Inert, 1.0, 1.0).unwrap();
        let mut cfg = config(g.clone(), FlowSpec::None, model);
        cfg.far_field = (0.0, 0.0);
        cfg.dt = Some(0.002);
        let mut s = Solver::new(cfg).unwrap();
        s.state.field = ScalarField::from_fn(&g, |x, _| (-(x - 1.6f64).powi(2)).exp());
        let before = s.state.field.values.clone();
        s.step().unwrap();
        let r = 0.002 / 0.01;
        for i in 1..31 {
            let e = before[[i, 0]] + r * (before[[i - 1, 0]] - 2.0 * before[[i, 0]] + before[[i + 1, 0]]);
            assert!((s.state.field.values[[i, 0]] - e).abs() < 1e-15);
        }
    }
}
