//! Shared fixtures for the benchmarks.

use burnfront::field::{BcY, Grid, ScalarField};

/// Logistic front across the middle of a periodic strip.
pub fn front_field(nx: usize, ny: usize) -> ScalarField {
    let grid = Grid::new(nx, ny, 0.1, 1.0, 0.0, BcY::Periodic).expect("valid grid");
    let x0 = 0.5 * grid.length();
    ScalarField::from_fn(&grid, |x, _| 1.0 / (1.0 + (0.5 * (x - x0)).exp()))
}
