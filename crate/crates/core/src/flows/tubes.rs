//! Streamline tubes of a stream-function flow.
//!
//! A tube is the region between two level sets `lo <= Psi <= hi`. It is
//! followed column by column across the window; bands that break up, fold,
//! or lose flux between stations are rejected.

use serde::{Deserialize, Serialize};

use super::StreamFunction;
use crate::diagnostics::kernel_g;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeBand {
    pub lo: f64,
    pub hi: f64,
    /// Picks the component at the left edge when the band has several.
    #[serde(default)]
    pub seed_y: Option<f64>,
}

impl TubeBand {
    pub fn new(lo: f64, hi: f64) -> Self {
        TubeBand { lo: lo.min(hi), hi: lo.max(hi), seed_y: None }
    }

    pub fn seeded(lo: f64, hi: f64, y: f64) -> Self {
        TubeBand { seed_y: Some(y), ..TubeBand::new(lo, hi) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeOptions {
    /// Reaction length `l` entering the measure weights.
    pub reaction_length: f64,
    /// x-period over which the measure ratio is integrated.
    pub period: Option<f64>,
    /// Measure ratio supplied by the caller for non-periodic flows.
    pub m0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    /// +1 when the flow through the tube points to +x.
    pub sign: i8,
    #[serde(rename = "h_j")]
    pub half_width: f64,
    #[serde(rename = "c_j")]
    pub center: f64,
    pub flux: f64,
    pub middle_half_flux: f64,
    #[serde(skip)]
    pub mean_grad: f64,
    #[serde(skip)]
    pub level_mid: f64,
    #[serde(skip)]
    pub flux_spread: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBounds {
    pub e1_min: f64,
    pub e1_max: f64,
    /// `C` with `1/C <= E1 <= C`.
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeGeometry {
    pub tubes: Vec<Tube>,
    pub m0: Option<f64>,
    #[serde(rename = "L")]
    pub period: f64,
    pub height: f64,
    pub metric: MetricBounds,
}

impl TubeGeometry {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One connected y-interval of the band at a corner column.
#[derive(Clone, Copy, Debug)]
struct Span {
    lo: f64,
    hi: f64,
}

fn band_spans(sf: &StreamFunction, k: usize, band: &TubeBand) -> Vec<Span> {
    let dy = sf.grid.dy;
    let ny = sf.grid.ny;
    let mut spans: Vec<Span> = Vec::new();
    for m in 0..ny {
        let (a, b) = (sf.psi[[k, m]], sf.psi[[k, m + 1]]);
        let (s0, s1) = if a == b {
            if a >= band.lo && a <= band.hi {
                (0.0, 1.0)
            } else {
                continue;
            }
        } else {
            let sl = (band.lo - a) / (b - a);
            let sh = (band.hi - a) / (b - a);
            let (x0, x1) = (sl.min(sh).max(0.0), sl.max(sh).min(1.0));
            if x0 > x1 {
                continue;
            }
            (x0, x1)
        };
        let (y0, y1) = ((m as f64 + s0) * dy, (m as f64 + s1) * dy);
        match spans.last_mut() {
            Some(last) if (y0 - last.hi).abs() <= 1e-12 * dy => last.hi = y1,
            _ => spans.push(Span { lo: y0, hi: y1 }),
        }
    }
    spans
}

fn psi_on_column(sf: &StreamFunction, k: usize, y: f64) -> f64 {
    let dy = sf.grid.dy;
    let m = ((y / dy).floor() as usize).min(sf.grid.ny - 1);
    let s = y / dy - m as f64;
    sf.psi[[k, m]] * (1.0 - s) + sf.psi[[k, m + 1]] * s
}

/// Integral of the face velocity `u1` across `[ya, yb]` at corner column `k`.
fn column_flux(sf: &StreamFunction, k: usize, ya: f64, yb: f64) -> f64 {
    let dy = sf.grid.dy;
    let s = sf.scale();
    let mut total = 0.0;
    for j in 0..sf.grid.ny {
        let (c0, c1) = (j as f64 * dy, (j + 1) as f64 * dy);
        let overlap = (yb.min(c1) - ya.max(c0)).max(0.0);
        if overlap > 0.0 {
            total += s * (sf.psi[[k, j + 1]] - sf.psi[[k, j]]) / dy * overlap;
        }
    }
    total
}

/// Follows each band across the window and measures its geometry.
pub fn extract_tubes(sf: &StreamFunction, bands: &[TubeBand], opts: &TubeOptions) -> Result<TubeGeometry> {
    let g = &sf.grid;
    if bands.is_empty() {
        return Err(invalid("no bands given"));
    }
    let mut tubes = Vec::new();
    let mut e1_min = f64::INFINITY;
    let mut e1_max = 0.0f64;
    let mut band_cells: Vec<Vec<(usize, usize)>> = Vec::new();

    for band in bands {
        if !(band.hi > band.lo) {
            return Err(invalid(format!("band [{}, {}] is empty", band.lo, band.hi)));
        }
        // Track the component across corner columns.
        let mut track: Vec<Span> = Vec::with_capacity(g.nx + 1);
        for k in 0..=g.nx {
            let spans = band_spans(sf, k, band);
            let chosen = if k == 0 {
                match band.seed_y {
                    Some(y) => spans.iter().copied().find(|s| s.lo <= y && y <= s.hi),
                    None if spans.len() == 1 => Some(spans[0]),
                    None if spans.len() > 1 => {
                        return Err(Error::TubeRejected(format!(
                            "band [{}, {}] has {} components at the left edge; give a seed",
                            band.lo,
                            band.hi,
                            spans.len()
                        )))
                    }
                    None => None,
                }
            } else {
                let prev = track[k - 1];
                spans
                    .iter()
                    .copied()
                    .map(|s| ((s.hi.min(prev.hi) - s.lo.max(prev.lo)), s))
                    .filter(|(o, _)| *o >= 0.0)
                    .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                    .map(|(_, s)| s)
            };
            match chosen {
                Some(s) => track.push(s),
                None => {
                    return Err(Error::TubeRejected(format!(
                        "band [{}, {}] does not span the window: lost at x = {:.6}",
                        band.lo,
                        band.hi,
                        g.x_face(k)
                    )))
                }
            }
        }

        // Flux through every station, by direct quadrature of the face velocity.
        let fluxes: Vec<f64> = track.iter().enumerate().map(|(k, s)| column_flux(sf, k, s.lo, s.hi)).collect();
        let f0 = fluxes[0];
        if f0 == 0.0 {
            return Err(Error::TubeRejected(format!("band [{}, {}] carries no flux", band.lo, band.hi)));
        }
        let spread = fluxes.iter().map(|f| ((f - f0) / f0).abs()).fold(0.0, f64::max);
        if spread > 1e-8 {
            let worst = fluxes.iter().enumerate().max_by(|a, b| (a.1 - f0).abs().partial_cmp(&(b.1 - f0).abs()).unwrap()).unwrap().0;
            return Err(Error::TubeRejected(format!(
                "band [{}, {}] flux varies by {spread:.3e} between stations (worst at x = {:.6}); closed or stagnant streamlines",
                band.lo,
                band.hi,
                g.x_face(worst)
            )));
        }

        // Cells inside the band, stagnation and fold checks.
        let mut cells = Vec::new();
        let mut grad_sum = 0.0;
        for i in 0..g.nx {
            let (a, b) = (track[i], track[i + 1]);
            let (ylo, yhi) = (a.lo.min(b.lo), a.hi.max(b.hi));
            for j in 0..g.ny {
                let yc = g.y_center(j);
                let p = sf.at_center(i, j);
                if yc < ylo || yc > yhi || p < band.lo || p > band.hi {
                    continue;
                }
                let grad = sf.grad_norm_at_center(i, j);
                if grad * sf.length < 1e-6 || contains_critical_point(sf, i, j) {
                    return Err(Error::TubeRejected(format!(
                        "band [{}, {}] contains a stagnation point near (x, y) = ({:.6}, {:.6})",
                        band.lo,
                        band.hi,
                        g.x_center(i),
                        yc
                    )));
                }
                grad_sum += grad;
                cells.push((i, j));
            }
        }
        if cells.is_empty() {
            return Err(Error::TubeRejected(format!("band [{}, {}] is thinner than the grid", band.lo, band.hi)));
        }
        for (k, s) in track.iter().enumerate() {
            let m0 = (s.lo / g.dy).ceil() as usize;
            let m1 = ((s.hi / g.dy).floor() as usize).min(g.ny);
            let d: Vec<f64> = (m0..m1).map(|m| sf.psi[[k, m + 1]] - sf.psi[[k, m]]).collect();
            if d.iter().any(|v| v * f0 < 0.0) {
                return Err(Error::TubeRejected(format!(
                    "band [{}, {}] folds at x = {:.6}",
                    band.lo,
                    band.hi,
                    g.x_face(k)
                )));
            }
        }

        let mean_grad = grad_sum / cells.len() as f64;
        let half_width = (band.hi - band.lo) / (2.0 * mean_grad);
        let mid = 0.5 * (band.lo + band.hi);
        let center = track
            .iter()
            .enumerate()
            .map(|(k, s)| mid_crossing(sf, k, *s, mid))
            .sum::<f64>()
            / track.len() as f64;
        for &(i, j) in &cells {
            let e1 = mean_grad / sf.grad_norm_at_center(i, j);
            e1_min = e1_min.min(e1);
            e1_max = e1_max.max(e1);
        }
        let flux = f0.abs();
        tubes.push(Tube {
            sign: if f0 > 0.0 { 1 } else { -1 },
            half_width,
            center,
            flux,
            middle_half_flux: 0.5 * flux,
            mean_grad,
            level_mid: mid,
            flux_spread: spread,
        });
        band_cells.push(cells);
    }

    let period = opts.period.unwrap_or(0.0);
    let m0 = match (opts.m0, opts.period) {
        (Some(m), _) => {
            if !(m > 0.0) {
                return Err(invalid("m0 must be positive"));
            }
            Some(m)
        }
        (None, Some(l)) => Some(measure_ratio(sf, &tubes, &band_cells, l, opts.reaction_length)?),
        (None, None) => None,
    };

    Ok(TubeGeometry {
        tubes,
        m0,
        period,
        height: g.height,
        metric: MetricBounds { e1_min, e1_max, constant: e1_max.max(1.0 / e1_min) },
    })
}

fn mid_crossing(sf: &StreamFunction, k: usize, span: Span, level: f64) -> f64 {
    let (mut a, mut b) = (span.lo, span.hi);
    let fa = psi_on_column(sf, k, a) - level;
    for _ in 0..60 {
        let c = 0.5 * (a + b);
        if (psi_on_column(sf, k, c) - level) * fa > 0.0 {
            a = c;
        } else {
            b = c;
        }
    }
    0.5 * (a + b)
}

/// True when both gradient components change sign among the 3x3 block of
/// cells around `(i, j)`.
fn contains_critical_point(sf: &StreamFunction, i: usize, j: usize) -> bool {
    let g = &sf.grid;
    let mut sx = (false, false);
    let mut sy = (false, false);
    let scale = 1e-9 / sf.length;
    for a in i.saturating_sub(1)..=(i + 1).min(g.nx - 1) {
        for b in j.saturating_sub(1)..=(j + 1).min(g.ny - 1) {
            let px = 0.5 * (sf.psi[[a + 1, b]] - sf.psi[[a, b]] + sf.psi[[a + 1, b + 1]] - sf.psi[[a, b + 1]]) / g.dx;
            let py = 0.5 * (sf.psi[[a, b + 1]] - sf.psi[[a, b]] + sf.psi[[a + 1, b + 1]] - sf.psi[[a + 1, b]]) / g.dy;
            sx = (sx.0 || px > scale, sx.1 || px < -scale);
            sy = (sy.0 || py > scale, sy.1 || py < -scale);
        }
    }
    sx.0 && sx.1 && sy.0 && sy.1
}

fn measure_ratio(sf: &StreamFunction, tubes: &[Tube], cells: &[Vec<(usize, usize)>], period: f64, l: f64) -> Result<f64> {
    let g = &sf.grid;
    if !(period > 0.0) || period > g.length() * (1.0 + 1e-12) {
        return Err(invalid(format!("period {period} must be positive and fit in the window of length {}", g.length())));
    }
    let x_end = g.x_min + period;
    let (mut plus, mut minus) = (0.0, 0.0);
    for (tube, cells) in tubes.iter().zip(cells) {
        let h = tube.half_width;
        let w = 1.0 / (h * h + l * l);
        let mut acc = 0.0;
        for &(i, j) in cells {
            if g.x_center(i) > x_end {
                continue;
            }
            let rho = (sf.at_center(i, j) - tube.level_mid) / tube.mean_grad;
            acc += kernel_g(h, rho) * w;
        }
        acc *= g.dx * g.dy / g.height;
        if tube.sign > 0 {
            plus += acc;
        } else {
            minus += acc;
        }
    }
    if !(plus > 0.0 && minus > 0.0) {
        return Err(invalid("measure ratio needs tubes in both directions"));
    }
    Ok(plus / minus)
}
