//! Strip grid, scalar fields, ghost layers and quadrature.
//!
//! Cells are centred: cell `(i, j)` covers `[x_min + i dx, x_min + (i+1) dx] x [j dy, (j+1) dy]`.
//! Values are stored as an `nx x ny` array with `y` contiguous.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcY {
    Neumann,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub x_min: f64,
    pub height: f64,
    pub bc_y: BcY,
}

impl Grid {
    /// Builds a grid with `dy = height / ny`.
    pub fn new(nx: usize, ny: usize, dx: f64, height: f64, x_min: f64, bc_y: BcY) -> Result<Self> {
        if nx < 8 || ny < 4 {
            return Err(invalid(format!("grid needs nx >= 8 and ny >= 4, got {nx} x {ny}")));
        }
        if !(dx > 0.0) || !(height > 0.0) || !x_min.is_finite() {
            return Err(invalid(format!("grid needs dx > 0, H > 0 (dx={dx}, H={height})")));
        }
        Ok(Grid { nx, ny, dx, dy: height / ny as f64, x_min, height, bc_y })
    }

    pub fn length(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.length()
    }

    pub fn x_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn y_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    /// Position of the x-face left of cell `k` (`k = nx` is the right edge).
    pub fn x_face(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx
    }

    pub fn y_face(&self, k: usize) -> f64 {
        k as f64 * self.dy
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Array2<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { grid: grid.clone(), values: Array2::zeros((grid.nx, grid.ny)) }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        ScalarField { grid: grid.clone(), values: Array2::from_elem((grid.nx, grid.ny), c) }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| f(grid.x_center(i), grid.y_center(j)));
        ScalarField { grid: grid.clone(), values }
    }

    pub fn check_finite(&self) -> Result<()> {
        for ((i, j), &v) in self.values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { i, j, value: v });
            }
        }
        Ok(())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Cross-section average of column `i`.
    pub fn column_mean(&self, i: usize) -> f64 {
        self.values.row(i).sum() / self.grid.ny as f64
    }

    /// Builds the ghosted copy used by stencils. x-ghost columns hold the
    /// far-field values; y-ghosts follow the boundary condition.
    pub fn ghosted(&self, ng: usize, far_left: f64, far_right: f64) -> GhostField {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut data = Array2::zeros((nx + 2 * ng, ny + 2 * ng));
        for i in 0..nx + 2 * ng {
            for j in ng..ny + ng {
                data[[i, j]] = if i < ng {
                    far_left
                } else if i >= nx + ng {
                    far_right
                } else {
                    self.values[[i - ng, j - ng]]
                };
            }
        }
        let mut g = GhostField { grid: self.grid.clone(), ng, data };
        apply_bc_y(&mut g);
        g
    }

    /// Writes the field as CSV `x,y,T`, looping over y rows then x.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,T")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                writeln!(
                    w,
                    "{:.8e},{:.8e},{:.8e}",
                    self.grid.x_center(i),
                    self.grid.y_center(j),
                    self.values[[i, j]]
                )?;
            }
        }
        Ok(())
    }
}

/// A field padded with `ng` ghost cells on every side.
#[derive(Clone, Debug, PartialEq)]
pub struct GhostField {
    pub grid: Grid,
    pub ng: usize,
    pub data: Array2<f64>,
}

impl GhostField {
    /// Value at interior index `(i, j)`, which may reach into the ghost layers.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let ng = self.ng as isize;
        self.data[[(i + ng) as usize, (j + ng) as usize]]
    }
}

/// Fills the y ghost rows of every column: mirror for Neumann, wrap for periodic.
pub fn apply_bc_y(g: &mut GhostField) {
    let ng = g.ng;
    let ny = g.grid.ny;
    let rows = g.data.nrows();
    for i in 0..rows {
        for k in 0..ng {
            let (lo, hi) = match g.grid.bc_y {
                BcY::Neumann => (g.data[[i, ng + k]], g.data[[i, ng + ny - 1 - k]]),
                BcY::Periodic => (g.data[[i, ng + ny - 1 - k]], g.data[[i, ng + k]]),
            };
            g.data[[i, ng - 1 - k]] = lo;
            g.data[[i, ng + ny + k]] = hi;
        }
    }
}

/// Midpoint-rule integral `int int f dx dy / H`.
pub fn integrate_scalar(f: &ScalarField) -> Result<f64> {
    f.check_finite()?;
    Ok(f.values.sum() * f.grid.dx * f.grid.dy / f.grid.height)
}

/// `int int |grad f|^2 dx dy / H`: centred differences inside, one-sided at the
/// x-ends of the window, boundary-condition aware in y.
pub fn gradient_sq_integral(f: &ScalarField) -> Result<f64> {
    f.check_finite()?;
    Ok(gradient_sq_unchecked(f))
}

pub(crate) fn gradient_sq_unchecked(f: &ScalarField) -> f64 {
    let g = &f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let v = &f.values;
    let mut total = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            let tx = if i == 0 {
                (v[[1, j]] - v[[0, j]]) / g.dx
            } else if i == nx - 1 {
                (v[[nx - 1, j]] - v[[nx - 2, j]]) / g.dx
            } else {
                (v[[i + 1, j]] - v[[i - 1, j]]) / (2.0 * g.dx)
            };
            let (up, down) = match g.bc_y {
                BcY::Periodic => (v[[i, (j + 1) % ny]], v[[i, (j + ny - 1) % ny]]),
                BcY::Neumann => (v[[i, (j + 1).min(ny - 1)]], v[[i, j.saturating_sub(1)]]),
            };
            let ty = (up - down) / (2.0 * g.dy);
            total += tx * tx + ty * ty;
        }
    }
    total * g.dx * g.dy / g.height
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(nx: usize, ny: usize, dx: f64, h: f64, bc: BcY) -> Grid {
        Grid::new(nx, ny, dx, h, 0.0, bc).unwrap()
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::new(4, 4, 0.1, 1.0, 0.0, BcY::Neumann).is_err());
        assert!(Grid::new(8, 2, 0.1, 1.0, 0.0, BcY::Neumann).is_err());
        assert!(Grid::new(8, 4, 0.0, 1.0, 0.0, BcY::Neumann).is_err());
    }

    #[test]
    fn integral_of_constants() {
        let g = grid(40, 8, 0.25, 3.0, BcY::Neumann);
        assert_eq!(integrate_scalar(&ScalarField::zeros(&g)).unwrap(), 0.0);
        let one = integrate_scalar(&ScalarField::constant(&g, 1.0)).unwrap();
        assert!((one - 10.0).abs() < 1e-12);
    }

    #[test]
    fn integral_of_sine_squared() {
        let h = 2.0;
        let g = grid(8, 256, 1.0 / 8.0, h, BcY::Periodic);
        let f = ScalarField::from_fn(&g, |_, y| (2.0 * PI * y / h).sin().powi(2));
        assert!((integrate_scalar(&f).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn non_finite_names_cell() {
        let g = grid(8, 4, 1.0, 1.0, BcY::Neumann);
        let mut f = ScalarField::zeros(&g);
        f.values[[3, 2]] = f64::NAN;
        match integrate_scalar(&f) {
            Err(Error::NonFinite { i: 3, j: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(gradient_sq_integral(&f).is_err());
    }

    #[test]
    fn gradient_of_linear_and_constant() {
        let g = grid(50, 4, 1.0 / 50.0, 0.7, BcY::Neumann);
        let f = ScalarField::from_fn(&g, |x, _| x);
        assert!((gradient_sq_integral(&f).unwrap() - 1.0).abs() < 1e-12);
        let c = ScalarField::constant(&g, 0.3);
        assert_eq!(gradient_sq_integral(&c).unwrap(), 0.0);
    }

    #[test]
    fn gradient_of_sine_in_y_converges() {
        let h = 1.5;
        let exact = 2.0 * PI * PI / (h * h);
        let mut errs = Vec::new();
        for ny in [16, 32, 64] {
            let g = grid(8, ny, 1.0 / 8.0, h, BcY::Periodic);
            let f = ScalarField::from_fn(&g, |_, y| (2.0 * PI * y / h).sin());
            errs.push((gradient_sq_integral(&f).unwrap() - exact).abs());
        }
        assert!(errs[2] < 1e-2 * exact);
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn integral_converges_second_order_neumann() {
        // A smooth field with non-trivial x and y structure and flat x-ends.
        let h = 1.0;
        let f = |x: f64, y: f64| (-(x - 4.0).powi(2)).exp() * (1.0 + 0.5 * (PI * y / h).cos() + y * y);
        let exact = PI.sqrt() * (1.0 + 1.0 / 3.0);
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let g = Grid::new(n * 16, n, 0.5 / n as f64, h, 0.0, BcY::Neumann).unwrap();
            let s = ScalarField::from_fn(&g, f);
            errs.push((integrate_scalar(&s).unwrap() - exact).abs());
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn neumann_ghosts_mirror() {
        let g = grid(8, 6, 0.1, 1.0, BcY::Neumann);
        let f = ScalarField::from_fn(&g, |_, y| y);
        let gh = f.ghosted(2, 1.0, 0.0);
        for i in 0..8 {
            assert_eq!(gh.at(i, -1), gh.at(i, 0));
            assert_eq!(gh.at(i, -2), gh.at(i, 1));
            assert_eq!(gh.at(i, 6), gh.at(i, 5));
            // discrete wall derivative vanishes
            assert_eq!(gh.at(i, 0) - gh.at(i, -1), 0.0);
        }
        assert_eq!(gh.at(-1, 3), 1.0);
        assert_eq!(gh.at(8, 3), 0.0);
    }

    #[test]
    fn periodic_ghosts_wrap() {
        let g = grid(8, 8, 0.1, 1.0, BcY::Periodic);
        let f = ScalarField::from_fn(&g, |_, y| (2.0 * PI * y).sin());
        let gh = f.ghosted(2, 1.0, 0.0);
        for i in 0..8 {
            assert_eq!(gh.at(i, -1), gh.at(i, 7));
            assert_eq!(gh.at(i, -2), gh.at(i, 6));
            assert_eq!(gh.at(i, 8), gh.at(i, 0));
            assert_eq!(gh.at(i, 9), gh.at(i, 1));
        }
    }

    #[test]
    fn constant_field_unchanged_by_bc() {
        let g = grid(8, 5, 0.1, 1.0, BcY::Neumann);
        let gh = ScalarField::constant(&g, 0.4).ghosted(2, 0.4, 0.4);
        assert!(gh.data.iter().all(|&v| v == 0.4));
    }

    #[test]
    fn csv_dump_format() {
        let g = grid(8, 4, 0.5, 1.0, BcY::Neumann);
        let f = ScalarField::constant(&g, 1.0 / 3.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,T"));
        assert_eq!(lines.next(), Some("2.50000000e-1,1.25000000e-1,3.33333333e-1"));
        assert_eq!(text.lines().count(), 33);
    }
}
