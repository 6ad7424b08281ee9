//! Bulk burning rate laboratory.
//!
//! Simulates `T_t + u.grad T = kappa Lap T + (v0^2 / 4 kappa) f(T)` on a strip
//! `R x [0, H]`, measures the bulk burning rate, and evaluates the analytic
//! lower and upper bounds on it for shear, time-dependent shear, percolating
//! and cellular flows.

pub mod bounds;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod field;
pub mod flows;
pub mod homogenization;
pub mod quadrature;
pub mod reaction;
pub mod solver;

pub use bounds::{BoundReport, Partition, Sign, SignedInterval};
pub use diagnostics::BurningRateSeries;
pub use error::{Error, Result};
pub use field::{BcY, Grid, ScalarField};
pub use homogenization::{CellFlow, CellProblem, EffectiveTensor};
pub use flows::{FlowField, FlowSpec, ShearProfile, StreamFunction, TubeGeometry};
pub use reaction::{ReactionKind, ReactionModel};
pub use solver::{SimulationConfig, SimulationState, Solver};
