//! Experiment specifications: one TOML document per experiment, resolved into
//! a finite list of strip runs or cell problems.
//!
//! ```toml
//! [experiment]
//! preset = "shear_sweep"
//! amplitudes = [4, 8, 16]
//!
//! [grid]
//! dx = 0.125
//! ny = 32
//! height = 2.0
//! bc_y = "periodic"
//! length = 60.0
//! length_per_amplitude = 8.0
//!
//! [reaction]
//! kind = "kpp_quadratic"
//! v0 = 1.0
//! kappa = 1.0
//!
//! [flow]
//! kind = "shear"
//! shape = "sine"
//! amplitude = 1.0
//! modes = 1
//!
//! [solver]
//! initial_lambda = 0.5
//! ```

mod run;

pub use run::{evaluate_bounds, fit_exponent, mean_front_speed, run_experiment, Bundle, RunOptions, RunRecord, SummaryRow};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BcY, Grid};
use crate::flows::FlowSpec;
use crate::homogenization::{CellFlow, CellProblem, CellSolverOptions};
use crate::reaction::ReactionModel;
use crate::solver::{DiffusionMode, InitialFront, SimulationConfig, WindowPolicy};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Laminar,
    ShearSweep,
    ShearPerpendicular,
    TimedepShear,
    Percolating,
    CellularSweep,
    Homogenize,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Laminar => "laminar",
            Preset::ShearSweep => "shear_sweep",
            Preset::ShearPerpendicular => "shear_perpendicular",
            Preset::TimedepShear => "timedep_shear",
            Preset::Percolating => "percolating",
            Preset::CellularSweep => "cellular_sweep",
            Preset::Homogenize => "homogenize",
        }
    }

    /// Whether the preset sweeps the flow amplitude (and so fits an exponent).
    pub fn fits_exponent(self) -> bool {
        matches!(self, Preset::ShearSweep | Preset::ShearPerpendicular | Preset::Percolating | Preset::CellularSweep)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub preset: Preset,
    #[serde(default)]
    pub name: Option<String>,
    /// Flow amplitudes; empty means the amplitude in `[flow]` only.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    /// Shear mode numbers swept at fixed amplitude.
    #[serde(default)]
    pub modes: Vec<u32>,
    /// Frequencies (pulsating) or speeds (translating) swept at fixed amplitude.
    #[serde(default)]
    pub frequencies: Vec<f64>,
    /// Averaging window `tau = tau_factor * tau0`.
    #[serde(default = "default_tau_factor")]
    pub tau_factor: f64,
    /// Start of the averaging window.
    #[serde(default)]
    pub average_start: f64,
    /// Constant of the initial data in the upper bound.
    #[serde(default = "one")]
    pub c0: f64,
}

fn default_tau_factor() -> f64 {
    4.0
}

fn one() -> f64 {
    1.0
}

/// Strip geometry for runs, or cell geometry for `homogenize`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dx: Option<f64>,
    pub ny: Option<usize>,
    /// `ny = ny_per_mode * modes` when set; overrides `ny`.
    pub ny_per_mode: Option<usize>,
    pub height: Option<f64>,
    pub bc_y: Option<BcY>,
    /// Window length is `length + length_per_amplitude * amplitude`.
    pub length: Option<f64>,
    #[serde(default)]
    pub length_per_amplitude: f64,
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    /// Cells per side of the periodic cell.
    pub n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "explicit")]
    pub diffusion: DiffusionMode,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_snapshot")]
    pub snapshot_every: f64,
    #[serde(default = "default_margin")]
    pub margin: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    pub initial_lambda: Option<f64>,
    #[serde(default)]
    pub initial_x0: f64,
    #[serde(default)]
    pub cell: Option<CellSolverOptions>,
}

fn explicit() -> DiffusionMode {
    DiffusionMode::Explicit
}

fn default_snapshot() -> f64 {
    0.25
}

fn default_margin() -> usize {
    160
}

fn default_threshold() -> f64 {
    1e-6
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            diffusion: explicit(),
            dt: None,
            snapshot_every: default_snapshot(),
            margin: default_margin(),
            threshold: default_threshold(),
            initial_lambda: None,
            initial_x0: 0.0,
            cell: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub grid: GridSection,
    pub reaction: ReactionModel,
    /// Strip flow, or cell flow for `homogenize`; parsed per preset.
    #[serde(default)]
    pub flow: Option<toml::Table>,
    #[serde(default)]
    pub solver: SolverSection,
}

/// One strip run of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPoint {
    pub index: usize,
    pub label: String,
    /// Value of the swept parameter (amplitude, mode number or frequency).
    pub parameter: f64,
    pub amplitude: f64,
    pub config: SimulationConfig,
    pub tau0: f64,
    pub average_start: f64,
    pub tau: f64,
    /// Resolution-policy violations; empty when resolved.
    pub under_resolved: Vec<String>,
}

impl RunPoint {
    pub fn short_window(&self) -> bool {
        self.tau < self.tau0
    }
}

/// One cell problem of a `homogenize` sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPoint {
    pub index: usize,
    pub label: String,
    pub amplitude: f64,
    pub problem: CellProblem,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Plan {
    Runs(Vec<RunPoint>),
    Cells(Vec<CellPoint>),
}

impl ExperimentSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(s).map_err(|e| config_err(e.to_string()))?;
        spec.reaction.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn name(&self) -> String {
        self.experiment.name.clone().unwrap_or_else(|| self.experiment.preset.name().to_string())
    }

    /// The `[flow]` section as a strip flow.
    pub fn strip_flow(&self) -> Result<FlowSpec> {
        match &self.flow {
            None => Ok(FlowSpec::None),
            Some(t) => toml::Value::Table(t.clone()).try_into().map_err(|e| config_err(format!("[flow]: {e}"))),
        }
    }

    /// The `[flow]` section as a periodic cell flow.
    pub fn cell_flow(&self) -> Result<CellFlow> {
        match &self.flow {
            None => Ok(CellFlow::None),
            Some(t) => toml::Value::Table(t.clone()).try_into().map_err(|e| config_err(format!("[flow]: {e}"))),
        }
    }

    fn expect_flow(&self, flow: &FlowSpec) -> Result<()> {
        let ok = match self.experiment.preset {
            Preset::Laminar => matches!(flow, FlowSpec::None),
            Preset::ShearSweep => matches!(flow, FlowSpec::Shear { .. }),
            Preset::ShearPerpendicular => matches!(flow, FlowSpec::Perpendicular { .. }),
            Preset::TimedepShear => flow.is_time_dependent(),
            Preset::Percolating => matches!(flow, FlowSpec::PerturbedShear { .. }),
            Preset::CellularSweep => matches!(flow, FlowSpec::Cellular { .. }),
            Preset::Homogenize => true,
        };
        if ok {
            Ok(())
        } else {
            Err(config_err(format!("flow {flow:?} does not fit preset {}", self.experiment.preset.name())))
        }
    }

    /// Resolves the spec into concrete runs or cell problems.
    pub fn plan(&self) -> Result<Plan> {
        let e = &self.experiment;
        if e.preset == Preset::Homogenize {
            return self.plan_cells().map(Plan::Cells);
        }
        if !(e.tau_factor > 0.0) || !(e.average_start >= 0.0) || !(e.c0 > 0.0) {
            return Err(config_err("need tau_factor > 0, average_start >= 0, c0 > 0"));
        }
        let base = self.strip_flow()?;
        self.expect_flow(&base)?;
        let variants = self.flow_variants(&base)?;
        let mut points = Vec::with_capacity(variants.len());
        for (index, (parameter, flow)) in variants.into_iter().enumerate() {
            points.push(self.run_point(index, parameter, flow)?);
        }
        Ok(Plan::Runs(points))
    }

    fn flow_variants(&self, base: &FlowSpec) -> Result<Vec<(f64, FlowSpec)>> {
        let e = &self.experiment;
        let swept = [!e.amplitudes.is_empty(), !e.modes.is_empty(), !e.frequencies.is_empty()];
        if swept.iter().filter(|&&s| s).count() > 1 {
            return Err(config_err("sweep over one of amplitudes, modes, frequencies at a time"));
        }
        if !e.modes.is_empty() {
            return e
                .modes
                .iter()
                .map(|&n| match base {
                    FlowSpec::Shear { profile: crate::flows::ShearShape::Sine { amplitude, .. } } => Ok((
                        n as f64,
                        FlowSpec::Shear { profile: crate::flows::ShearShape::Sine { amplitude: *amplitude, modes: n } },
                    )),
                    FlowSpec::Pulsating { amplitude, frequency, .. } => {
                        Ok((n as f64, FlowSpec::Pulsating { amplitude: *amplitude, modes: n, frequency: *frequency }))
                    }
                    FlowSpec::PerturbedShear { amplitude, perturbation, lx, .. } => Ok((
                        n as f64,
                        FlowSpec::PerturbedShear { amplitude: *amplitude, modes: n, perturbation: *perturbation, lx: *lx },
                    )),
                    _ => Err(config_err("mode sweeps need a sine shear, pulsating or perturbed shear flow")),
                })
                .collect();
        }
        if !e.frequencies.is_empty() {
            return e
                .frequencies
                .iter()
                .map(|&w| match *base {
                    FlowSpec::Pulsating { amplitude, modes, .. } => {
                        Ok((w, FlowSpec::Pulsating { amplitude, modes, frequency: w }))
                    }
                    FlowSpec::Translating { amplitude, modes, .. } => {
                        Ok((w, FlowSpec::Translating { amplitude, modes, speed: w }))
                    }
                    _ => Err(config_err("frequency sweeps need a pulsating or translating flow")),
                })
                .collect();
        }
        if !e.amplitudes.is_empty() {
            if matches!(base, FlowSpec::None) {
                return Err(config_err("amplitude sweep needs a flow"));
            }
            return Ok(e.amplitudes.iter().map(|&a| (a, base.with_amplitude(a))).collect());
        }
        Ok(vec![(base.amplitude(), base.clone())])
    }

    fn run_point(&self, index: usize, parameter: f64, flow: FlowSpec) -> Result<RunPoint> {
        let g = &self.grid;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| config_err(format!("[grid] needs `{key}`")));
        let dx = need(g.dx, "dx")?;
        let height = need(g.height, "height")?;
        let length = need(g.length, "length")?;
        let bc_y = g.bc_y.ok_or_else(|| config_err("[grid] needs `bc_y`"))?;
        let modes = shear_modes(&flow);
        let ny = match (g.ny_per_mode, g.ny) {
            (Some(per), _) => per * modes.unwrap_or(1) as usize,
            (None, Some(ny)) => ny,
            (None, None) => return Err(config_err("[grid] needs `ny` or `ny_per_mode`")),
        };
        let amplitude = flow.amplitude();
        let span = length + g.length_per_amplitude * amplitude.abs();
        if !(dx > 0.0) || !(span > 0.0) {
            return Err(config_err("need dx > 0 and a positive window length"));
        }
        let nx = (span / dx).round() as usize;
        let grid = Grid::new(nx, ny, dx, height, -0.5 * nx as f64 * dx, bc_y).map_err(|e| config_err(e.to_string()))?;

        let s = &self.solver;
        let lambda = s.initial_lambda.ok_or_else(|| config_err("[solver] needs `initial_lambda`"))?;
        let model = self.reaction;
        let tau0 = model.time().max(height / model.v0);
        let tau = self.experiment.tau_factor * tau0;
        let t_final = self.experiment.average_start + tau;
        let config = SimulationConfig {
            grid,
            reaction: model,
            flow,
            dt: s.dt,
            t_final,
            snapshot_every: s.snapshot_every,
            window: WindowPolicy::FollowFront { margin: s.margin, threshold: s.threshold },
            initial: InitialFront { x0: s.initial_x0, lambda },
            diffusion: s.diffusion,
            far_field: (1.0, 0.0),
        };
        config.validate().map_err(|e| config_err(e.to_string()))?;
        let under_resolved = resolution_issues(&config)?;
        let tag = if !self.experiment.modes.is_empty() {
            format!("n{parameter}")
        } else if !self.experiment.frequencies.is_empty() {
            format!("w{parameter}")
        } else {
            format!("a{parameter}")
        };
        Ok(RunPoint {
            index,
            label: format!("run{index:02}_{tag}"),
            parameter,
            amplitude,
            config,
            tau0,
            average_start: self.experiment.average_start,
            tau,
            under_resolved,
        })
    }

    fn plan_cells(&self) -> Result<Vec<CellPoint>> {
        let g = &self.grid;
        let (lx, ly, n) = match (g.lx, g.ly, g.n) {
            (Some(lx), Some(ly), Some(n)) => (lx, ly, n),
            _ => return Err(config_err("homogenize needs [grid] lx, ly and n")),
        };
        let base = self.cell_flow()?;
        let amps = if self.experiment.amplitudes.is_empty() { vec![base.amplitude()] } else { self.experiment.amplitudes.clone() };
        amps.iter()
            .enumerate()
            .map(|(index, &a)| {
                let mut problem = CellProblem::new(lx, ly, n, self.reaction.kappa, base.with_amplitude(a));
                if let Some(o) = self.solver.cell {
                    problem.options = o;
                }
                problem.validate().map_err(|e| config_err(e.to_string()))?;
                Ok(CellPoint { index, label: format!("cell{index:02}_a{a}"), amplitude: a, problem })
            })
            .collect()
    }
}

fn shear_modes(flow: &FlowSpec) -> Option<u32> {
    match *flow {
        FlowSpec::Shear { profile: crate::flows::ShearShape::Sine { modes, .. } }
        | FlowSpec::Pulsating { modes, .. }
        | FlowSpec::Translating { modes, .. }
        | FlowSpec::PerturbedShear { modes, .. } => Some(modes),
        _ => None,
    }
}

/// Checks `dx <= l/8` and that the flow's smallest scale spans at least
/// eight cells; returns the violations.
pub fn resolution_issues(config: &SimulationConfig) -> Result<Vec<String>> {
    let g = &config.grid;
    let l = config.reaction.length();
    let slack = 1.0 + 1e-9;
    let mut issues = Vec::new();
    if g.dx > slack * l / 8.0 {
        issues.push(format!("dx = {} exceeds l/8 = {}", g.dx, l / 8.0));
    }
    let mut need = |h: f64, step: f64, axis: &str| {
        if step > slack * h / 8.0 {
            issues.push(format!("d{axis} = {step} exceeds h/8 = {} for the flow scale h = {h}", h / 8.0));
        }
    };
    match &config.flow {
        FlowSpec::None => {}
        FlowSpec::Shear { .. } => {
            let p = config.flow.shear_profile(g.height).map_err(|e| config_err(e.to_string()))?.expect("shear");
            let part = crate::bounds::partition_sign_intervals(&p, l).map_err(|e| config_err(e.to_string()))?;
            if let Some(h) = part.min_half_width() {
                need(h, g.dy, "y");
            }
        }
        FlowSpec::Pulsating { modes, .. } | FlowSpec::Translating { modes, .. } => {
            need(g.height / (4.0 * *modes as f64), g.dy, "y")
        }
        FlowSpec::Perpendicular { wavelength, .. } => need(wavelength / 4.0, g.dx, "x"),
        FlowSpec::Cellular { lx, ly, .. } => {
            need(lx / 2.0, g.dx, "x");
            need(ly / 2.0, g.dy, "y");
        }
        FlowSpec::PerturbedShear { modes, lx, .. } => {
            need(g.height / (4.0 * *modes as f64), g.dy, "y");
            need(lx / 2.0, g.dx, "x");
        }
    }
    Ok(issues)
}
