//! Velocity fields: shear profiles, stream functions, and their sampling onto
//! a staggered grid.
//!
//! `u1` lives on x-faces (`(nx+1) x ny`), `u2` on y-faces (`nx x (ny+1)`), so
//! stream-function flows are divergence-free to rounding.

mod shear;
mod stream;
mod tubes;

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use shear::{make_shear_sine, make_timedep_shear, ShearLike, ShearProfile, ShearShape, TimeDepKind, TimeDepShear};
pub use stream::{make_cellular, Cellular, PerturbedShear, StreamFunction};
pub use tubes::{extract_tubes, MetricBounds, Tube, TubeBand, TubeGeometry, TubeOptions};

use crate::error::{invalid, Result};
use crate::field::{BcY, Grid, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ShearProfile,
    StreamFunction,
    Explicit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    pub grid: Grid,
    pub u1: Array2<f64>,
    pub u2: Array2<f64>,
    pub provenance: Provenance,
}

impl FlowField {
    pub fn zero(grid: &Grid) -> Self {
        FlowField {
            grid: grid.clone(),
            u1: Array2::zeros((grid.nx + 1, grid.ny)),
            u2: Array2::zeros((grid.nx, grid.ny + 1)),
            provenance: Provenance::Explicit,
        }
    }

    /// Samples `u1` at x-face centres and `u2` at y-face centres.
    pub fn from_fns(grid: &Grid, u1: impl Fn(f64, f64) -> f64, u2: impl Fn(f64, f64) -> f64) -> Self {
        FlowField {
            grid: grid.clone(),
            u1: Array2::from_shape_fn((grid.nx + 1, grid.ny), |(k, j)| u1(grid.x_face(k), grid.y_center(j))),
            u2: Array2::from_shape_fn((grid.nx, grid.ny + 1), |(i, k)| u2(grid.x_center(i), grid.y_face(k))),
            provenance: Provenance::Explicit,
        }
    }

    /// Shear flow `(u(y), 0)` with the discrete cross-section mean removed.
    pub fn from_shear(grid: &Grid, u: impl Fn(f64) -> f64) -> Self {
        let mut column: Vec<f64> = (0..grid.ny).map(|j| u(grid.y_center(j))).collect();
        let mean = column.iter().sum::<f64>() / grid.ny as f64;
        column.iter_mut().for_each(|v| *v -= mean);
        FlowField {
            grid: grid.clone(),
            u1: Array2::from_shape_fn((grid.nx + 1, grid.ny), |(_, j)| column[j]),
            u2: Array2::zeros((grid.nx, grid.ny + 1)),
            provenance: Provenance::ShearProfile,
        }
    }

    pub fn u1_sup(&self) -> f64 {
        self.u1.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn u2_sup(&self) -> f64 {
        self.u2.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_speed(&self) -> f64 {
        self.u1_sup().max(self.u2_sup())
    }

    pub fn u1_is_zero(&self) -> bool {
        self.u1.iter().all(|&v| v == 0.0)
    }

    pub fn u2_is_zero(&self) -> bool {
        self.u2.iter().all(|&v| v == 0.0)
    }

    /// Cell-centred velocity by face averaging.
    pub fn cell_velocity(&self, i: usize, j: usize) -> (f64, f64) {
        (0.5 * (self.u1[[i, j]] + self.u1[[i + 1, j]]), 0.5 * (self.u2[[i, j]] + self.u2[[i, j + 1]]))
    }

    /// Largest `|u2|` on the two walls, relative to the flow scale.
    pub fn wall_normal_velocity(&self) -> f64 {
        let ny = self.grid.ny;
        let wall = (0..self.grid.nx).map(|i| self.u2[[i, 0]].abs().max(self.u2[[i, ny]].abs())).fold(0.0, f64::max);
        wall / self.max_speed().max(f64::MIN_POSITIVE)
    }

    /// Dumps cell-centred velocities as CSV `x,y,u1,u2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,u1,u2")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let (a, b) = self.cell_velocity(i, j);
                writeln!(w, "{:.8e},{:.8e},{:.8e},{:.8e}", self.grid.x_center(i), self.grid.y_center(j), a, b)?;
            }
        }
        Ok(())
    }
}

/// Discrete divergence at cell centres.
pub fn divergence(flow: &FlowField) -> ScalarField {
    let g = &flow.grid;
    let mut out = ScalarField::zeros(g);
    for i in 0..g.nx {
        for j in 0..g.ny {
            out.values[[i, j]] = (flow.u1[[i + 1, j]] - flow.u1[[i, j]]) / g.dx + (flow.u2[[i, j + 1]] - flow.u2[[i, j]]) / g.dy;
        }
    }
    out
}

/// Flow families selectable from a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowSpec {
    None,
    Shear {
        #[serde(flatten)]
        profile: ShearShape,
    },
    Pulsating { amplitude: f64, modes: u32, frequency: f64 },
    Translating { amplitude: f64, modes: u32, speed: f64 },
    /// `u = (0, amplitude sin(2 pi x / wavelength))`.
    Perpendicular { amplitude: f64, wavelength: f64 },
    Cellular {
        m: u32,
        amplitude: f64,
        lx: f64,
        ly: f64,
        #[serde(default)]
        y_offset: f64,
    },
    PerturbedShear { amplitude: f64, modes: u32, perturbation: f64, lx: f64 },
}

impl FlowSpec {
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, FlowSpec::Pulsating { .. } | FlowSpec::Translating { .. })
    }

    pub fn is_x_dependent(&self) -> bool {
        matches!(self, FlowSpec::Perpendicular { .. } | FlowSpec::Cellular { .. } | FlowSpec::PerturbedShear { .. })
    }

    pub fn is_shear(&self) -> bool {
        matches!(self, FlowSpec::None | FlowSpec::Shear { .. } | FlowSpec::Pulsating { .. } | FlowSpec::Translating { .. })
    }

    /// Amplitude parameter, used as the sweep variable.
    pub fn amplitude(&self) -> f64 {
        match self {
            FlowSpec::None => 0.0,
            FlowSpec::Shear { profile } => match profile {
                ShearShape::Sine { amplitude, .. } | ShearShape::TwoLobe { amplitude, .. } => *amplitude,
                ShearShape::Linear { slope } => *slope,
                ShearShape::Samples { values } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            },
            FlowSpec::Pulsating { amplitude, .. }
            | FlowSpec::Translating { amplitude, .. }
            | FlowSpec::Perpendicular { amplitude, .. }
            | FlowSpec::Cellular { amplitude, .. }
            | FlowSpec::PerturbedShear { amplitude, .. } => *amplitude,
        }
    }

    /// The same family with the amplitude replaced.
    pub fn with_amplitude(&self, a: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            FlowSpec::None => {}
            FlowSpec::Shear { profile } => {
                let current = self.amplitude();
                match profile {
                    ShearShape::Sine { amplitude, .. } | ShearShape::TwoLobe { amplitude, .. } => *amplitude = a,
                    ShearShape::Linear { slope } => *slope = a,
                    ShearShape::Samples { values } => {
                        let f = if current > 0.0 { a / current } else { 0.0 };
                        values.iter_mut().for_each(|v| *v *= f);
                    }
                }
            }
            FlowSpec::Pulsating { amplitude, .. }
            | FlowSpec::Translating { amplitude, .. }
            | FlowSpec::Perpendicular { amplitude, .. }
            | FlowSpec::Cellular { amplitude, .. }
            | FlowSpec::PerturbedShear { amplitude, .. } => *amplitude = a,
        }
        s
    }

    pub fn shear_profile(&self, height: f64) -> Result<Option<ShearProfile>> {
        match self {
            FlowSpec::Shear { profile } => Ok(Some(ShearProfile::new(profile.clone(), height)?)),
            _ => Ok(None),
        }
    }

    pub fn timedep_shear(&self, height: f64) -> Result<Option<TimeDepShear>> {
        match *self {
            FlowSpec::Pulsating { amplitude, modes, frequency } => {
                Ok(Some(make_timedep_shear(TimeDepKind::Pulsating, amplitude, modes, height, frequency)?))
            }
            FlowSpec::Translating { amplitude, modes, speed } => {
                Ok(Some(make_timedep_shear(TimeDepKind::Translating, amplitude, modes, height, speed)?))
            }
            _ => Ok(None),
        }
    }

    /// Stream function on the grid, for stream-function families.
    pub fn stream_function(&self, grid: &Grid) -> Result<Option<StreamFunction>> {
        match *self {
            FlowSpec::Cellular { m, amplitude, lx, ly, y_offset } => {
                Ok(Some(Cellular::new(m, amplitude, lx, ly, y_offset)?.sample(grid)))
            }
            FlowSpec::PerturbedShear { amplitude, modes, perturbation, lx } => {
                Ok(Some(PerturbedShear::new(amplitude, modes, perturbation, lx, grid.height)?.sample(grid)))
            }
            _ => Ok(None),
        }
    }

    /// Supremum of `|u1|` over the strip and over time, from the closed form.
    pub fn u1_sup(&self, height: f64) -> Result<f64> {
        Ok(match *self {
            FlowSpec::None | FlowSpec::Perpendicular { .. } => 0.0,
            FlowSpec::Shear { .. } => self.shear_profile(height)?.map(|p| p.norm_inf()).unwrap_or(0.0),
            FlowSpec::Pulsating { amplitude, .. } | FlowSpec::Translating { amplitude, .. } => amplitude,
            FlowSpec::Cellular { m, amplitude, lx, ly, y_offset } => {
                let c = Cellular::new(m, amplitude, lx, ly, y_offset)?;
                dense_sup(|x, y| c.velocity(x, y).0, lx, ly)
            }
            FlowSpec::PerturbedShear { amplitude, modes, perturbation, lx } => {
                let p = PerturbedShear::new(amplitude, modes, perturbation, lx, height)?;
                dense_sup(|x, y| p.velocity(x, y).0, lx, height)
            }
        })
    }

    /// Samples the flow at time `t`.
    pub fn sample(&self, grid: &Grid, t: f64) -> Result<FlowField> {
        let field = match self {
            FlowSpec::None => FlowField::zero(grid),
            FlowSpec::Shear { .. } => {
                let p = self.shear_profile(grid.height)?.expect("shear");
                FlowField::from_shear(grid, |y| p.u(y))
            }
            FlowSpec::Pulsating { .. } | FlowSpec::Translating { .. } => {
                let p = self.timedep_shear(grid.height)?.expect("time-dependent shear");
                FlowField::from_shear(grid, |y| p.u(y, t))
            }
            FlowSpec::Perpendicular { amplitude, wavelength } => {
                if !(*wavelength > 0.0) {
                    return Err(invalid("perpendicular flow needs a positive wavelength"));
                }
                let (a, w) = (*amplitude, *wavelength);
                FlowField::from_fns(grid, |_, _| 0.0, |x, _| a * (2.0 * PI * x / w).sin())
            }
            FlowSpec::Cellular { .. } | FlowSpec::PerturbedShear { .. } => {
                self.stream_function(grid)?.expect("stream function").velocity()
            }
        };
        if grid.bc_y == BcY::Neumann && field.wall_normal_velocity() > 1e-12 {
            return Err(invalid("flow has a normal component on the walls; use periodic y or shift the cells"));
        }
        Ok(field)
    }

    /// Field with the time modulation at its peak; used for stability limits.
    pub fn envelope(&self, grid: &Grid) -> Result<FlowField> {
        match *self {
            FlowSpec::Pulsating { amplitude, modes, .. } => {
                FlowSpec::Shear { profile: ShearShape::Sine { amplitude, modes } }.sample(grid, 0.0)
            }
            _ => self.sample(grid, 0.0),
        }
    }
}

fn dense_sup(f: impl Fn(f64, f64) -> f64, lx: f64, ly: f64) -> f64 {
    let n = 512;
    let mut m = 0.0f64;
    for a in 0..=2 * n {
        for b in 0..=2 * n {
            m = m.max(f(lx * a as f64 / n as f64 - lx, ly * b as f64 / n as f64 - ly).abs());
        }
    }
    m
}
