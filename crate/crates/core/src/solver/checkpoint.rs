//! Restart files: one JSON header line, then one CSV line of `T` per x-column.
//! Values are written in shortest round-trip form so a restart is bit-identical.

use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{SimulationConfig, SimulationState, Solver, WindowShift};
use crate::error::{Error, Result};
use crate::field::ScalarField;

#[derive(Serialize, Deserialize)]
struct Header {
    config: SimulationConfig,
    t: f64,
    steps: u64,
    x_min: f64,
    dropped_mass: f64,
    last_mass: f64,
    last_record_t: Option<f64>,
    snapshot_index: u64,
    shifts: Vec<WindowShift>,
    left_truncated: bool,
    right_truncated: bool,
}

pub fn write_checkpoint<W: Write>(solver: &Solver, mut w: W) -> Result<()> {
    let s = &solver.state;
    let header = Header {
        config: solver.config.clone(),
        t: s.t,
        steps: s.steps,
        x_min: s.field.grid.x_min,
        dropped_mass: s.dropped_mass,
        last_mass: solver.last_mass(),
        last_record_t: solver.last_record_t(),
        snapshot_index: solver.snapshot_index(),
        shifts: s.shifts.clone(),
        left_truncated: s.left_truncated,
        right_truncated: s.right_truncated,
    };
    serde_json::to_writer(&mut w, &header)?;
    writeln!(w)?;
    for col in s.field.values.rows() {
        let line: Vec<String> = col.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(r: R) -> Result<Solver> {
    let mut lines = r.lines();
    let head = lines.next().ok_or_else(|| Error::Checkpoint("empty file".into()))??;
    let h: Header = serde_json::from_str(&head)?;
    let mut grid = h.config.grid.clone();
    grid.x_min = h.x_min;
    let (nx, ny) = (grid.nx, grid.ny);
    let mut values = Array2::zeros((nx, ny));
    for i in 0..nx {
        let line = lines.next().ok_or_else(|| Error::Checkpoint(format!("missing column {i} of {nx}")))??;
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let parsed = parsed.map_err(|e| Error::Checkpoint(format!("column {i}: {e}")))?;
        if parsed.len() != ny {
            return Err(Error::Checkpoint(format!("column {i} has {} values, expected {ny}", parsed.len())));
        }
        for (j, v) in parsed.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    let state = SimulationState {
        field: ScalarField { grid, values },
        t: h.t,
        steps: h.steps,
        dropped_mass: h.dropped_mass,
        shifts: h.shifts,
        left_truncated: h.left_truncated,
        right_truncated: h.right_truncated,
    };
    state.field.check_finite()?;
    let mut solver = Solver::with_state(h.config, state, h.snapshot_index)?;
    solver.restore_record(h.last_mass, h.last_record_t);
    Ok(solver)
}
