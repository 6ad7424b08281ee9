//! Quantities measured from a run: burning rate, time averages, the averaging
//! kernel, the gradient-reaction product, and the shear functional `J`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::{Partition, Sign};
use crate::error::{invalid, Error, Result};
use crate::field::{gradient_sq_unchecked, ScalarField};
use crate::flows::ShearLike;
use crate::quadrature::{gauss_legendre, simpson};
use crate::reaction::ReactionModel;

/// `G(h, xi)`: piecewise quadratic on `[-h, h]`, zero outside.
#[inline]
pub fn kernel_g(h: f64, xi: f64) -> f64 {
    let a = xi.abs();
    if a >= h {
        0.0
    } else if a < 0.5 * h {
        0.5 * (h - a) * (h - a) - (0.5 * h - a) * (0.5 * h - a)
    } else {
        0.5 * (h - a) * (h - a)
    }
}

/// `int_{-h}^{xi} G(h, s) ds`, exact.
pub fn kernel_g_cumulative(h: f64, xi: f64) -> f64 {
    if xi <= -h {
        0.0
    } else if xi >= h {
        0.25 * h * h * h
    } else if xi <= 0.0 {
        let mut v = (h + xi).powi(3) / 6.0;
        if xi >= -0.5 * h {
            v -= (0.5 * h + xi).powi(3) / 3.0;
        }
        v
    } else {
        0.25 * h * h * h - kernel_g_cumulative(h, -xi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub value: f64,
    pub in_support: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub h: f64,
}

impl KernelSpec {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("kernel half-width must be positive"));
        }
        Ok(KernelSpec { h })
    }

    pub fn eval(&self, xi: f64) -> KernelSample {
        KernelSample { value: kernel_g(self.h, xi), in_support: xi.abs() <= self.h }
    }

    /// Total mass `h^3 / 4`.
    pub fn mass(&self) -> f64 {
        0.25 * self.h.powi(3)
    }
}

/// Instantaneous burning rate `(v0^2 / 4 kappa) int int f(T) dx dy / H`.
pub fn bulk_burning_rate(t: &ScalarField, model: &ReactionModel) -> Result<f64> {
    t.check_finite()?;
    Ok(model.rate() * reaction_integral(t, model))
}

/// `int int f(T) dx dy / H` without range checks.
pub(crate) fn reaction_integral(t: &ScalarField, model: &ReactionModel) -> f64 {
    let s: f64 = t.values.iter().map(|&v| model.f_raw(v.clamp(0.0, 1.0))).sum();
    s * t.grid.dx * t.grid.dy / t.grid.height
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1 {
    pub value: f64,
    /// Whether the field looks like a front (burnt on the left, fresh on the right).
    pub front_like: bool,
}

/// `[int int f(T)] [int int |grad T|^2] / H^2`.
pub fn lemma1_product(t: &ScalarField, model: &ReactionModel) -> Result<Lemma1> {
    t.check_finite()?;
    let nx = t.grid.nx;
    let front_like = t.column_mean(0) >= 0.9 && t.column_mean(nx - 1) <= 0.1;
    Ok(Lemma1 { value: reaction_integral(t, model) * gradient_sq_unchecked(t), front_like })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Flat,
    Kernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAverage {
    /// The average as defined: flat mean, or the kernel integral over `tau^3`.
    pub raw: f64,
    /// Divided by the weight mass, so a constant signal averages to itself.
    pub normalized: f64,
}

const KERNEL_NODES: usize = 4096;

/// Time series recorded by a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BurningRateSeries {
    pub t: Vec<f64>,
    pub v_reaction: Vec<f64>,
    /// Burned-mass difference quotient over the preceding interval; NaN at the first entry.
    pub v_mass: Vec<f64>,
    pub grad_sq: Vec<f64>,
    pub lemma1: Vec<f64>,
    pub front_x: Vec<f64>,
}

impl BurningRateSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn push(&mut self, t: f64, v_reaction: f64, v_mass: f64, grad_sq: f64, lemma1: f64, front_x: f64) {
        self.t.push(t);
        self.v_reaction.push(v_reaction);
        self.v_mass.push(v_mass);
        self.grad_sq.push(grad_sq);
        self.lemma1.push(lemma1);
        self.front_x.push(front_x);
    }

    /// Piecewise-linear interpolation of the reaction-integral rate.
    pub fn v_at(&self, t: f64) -> f64 {
        interp(&self.t, &self.v_reaction, t)
    }

    /// Running mean `<V>_t = (1/t) int_0^t V ds` at each recorded time
    /// (trapezoid rule; undefined at the first entry).
    pub fn running_mean(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for k in 0..self.len() {
            if k > 0 {
                acc += 0.5 * (self.v_reaction[k] + self.v_reaction[k - 1]) * (self.t[k] - self.t[k - 1]);
            }
            let span = self.t[k] - self.t[0];
            out.push(if span > 0.0 { acc / span } else { f64::NAN });
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,V_reaction,V_mass,grad_sq,lemma1_product,front_x")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
                self.t[k], self.v_reaction[k], self.v_mass[k], self.grad_sq[k], self.lemma1[k], self.front_x[k]
            )?;
        }
        Ok(())
    }
}

fn interp(ts: &[f64], vs: &[f64], t: f64) -> f64 {
    match ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(k) => vs[k],
        Err(0) => vs[0],
        Err(k) if k >= ts.len() => vs[ts.len() - 1],
        Err(k) => {
            let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
            vs[k - 1] * (1.0 - w) + vs[k] * w
        }
    }
}

/// Average of `V` over `[t0, t0 + tau]`, flat or kernel-weighted.
pub fn time_average_v(series: &BurningRateSeries, t0: f64, tau: f64, weighting: Weighting) -> Result<TimeAverage> {
    if !(tau > 0.0) {
        return Err(invalid("averaging window must be positive"));
    }
    if series.is_empty() {
        return Err(Error::Coverage { start: t0, end: t0 + tau, first: f64::NAN, last: f64::NAN });
    }
    let (first, last) = (series.t[0], series.t[series.len() - 1]);
    let slack = 1e-9 * tau.max(last.abs());
    if t0 < first - slack || t0 + tau > last + slack {
        return Err(Error::Coverage { start: t0, end: t0 + tau, first, last });
    }
    match weighting {
        Weighting::Flat => {
            let mut acc = 0.0;
            let (a, b) = (t0, t0 + tau);
            let ts = &series.t;
            // exact integral of the piecewise-linear interpolant
            let mut knots = vec![a];
            knots.extend(ts.iter().copied().filter(|&t| t > a && t < b));
            knots.push(b);
            for w in knots.windows(2) {
                acc += 0.5 * (series.v_at(w[0]) + series.v_at(w[1])) * (w[1] - w[0]);
            }
            let mean = acc / tau;
            Ok(TimeAverage { raw: mean, normalized: mean })
        }
        Weighting::Kernel => {
            let raw = kernel_time_average(|t| series.v_at(t), t0, tau);
            Ok(TimeAverage { raw, normalized: 32.0 * raw })
        }
    }
}

/// `(1/tau^3) int G(tau/2, t - t0 - tau/2) v(t) dt`.
pub fn kernel_time_average(v: impl Fn(f64) -> f64, t0: f64, tau: f64) -> f64 {
    let h = 0.5 * tau;
    simpson(|t| kernel_g(h, t - t0 - h) * v(t), t0, t0 + tau, KERNEL_NODES) / tau.powi(3)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JValue {
    pub raw: f64,
    pub normalized: f64,
}

/// Instantaneous functional: `c+ sum_{D+} w_j int_mid u / H - c- sum_{D-} w_j int_mid u / H`
/// with `w_j = (1 + l^2/h_j^2)^-1` and signed `u`.
pub fn j_instant<F: ShearLike + ?Sized>(flow: &F, partition: &Partition, t: f64) -> f64 {
    let (cp, cm) = (partition.c_plus(), partition.c_minus());
    let l = partition.reaction_length;
    let h_total = partition.height;
    partition
        .intervals
        .iter()
        .map(|iv| {
            let w = 1.0 / (1.0 + (l / iv.half_width).powi(2));
            let lo = iv.center - 0.5 * iv.half_width;
            let hi = iv.center + 0.5 * iv.half_width;
            let integral = gauss_legendre(|y| flow.velocity(y, t), lo, hi, 16) / h_total;
            match iv.sign {
                Sign::Plus => cp * w * integral,
                Sign::Minus => -cm * w * integral,
            }
        })
        .sum()
}

/// Kernel time average of `J` over `[t0, t0 + tau]`.
pub fn j_functional<F: ShearLike + ?Sized>(flow: &F, partition: &Partition, t0: f64, tau: f64) -> Result<JValue> {
    if !(tau > 0.0) {
        return Err(invalid("averaging window must be positive"));
    }
    if (flow.height() - partition.height).abs() > 1e-12 * partition.height {
        return Err(invalid("partition and flow heights differ"));
    }
    let raw = kernel_time_average(|t| j_instant(flow, partition, t), t0, tau);
    Ok(JValue { raw, normalized: 32.0 * raw })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HTilde {
    pub value: f64,
    pub degenerate: bool,
}

/// Largest gap between neighbouring roots of `g(y) = nu+[0, y] - nu-[0, y]`.
pub fn compute_h_tilde(partition: &Partition) -> HTilde {
    let h_total = partition.height;
    let l = partition.reaction_length;
    let (mp, mm) = (partition.m_plus(), partition.m_minus());
    let m = mp.max(mm);
    if !(m > 0.0) {
        return HTilde { value: 0.0, degenerate: true };
    }
    let g = |y: f64| -> f64 {
        partition
            .intervals
            .iter()
            .map(|iv| {
                let w = kernel_g_cumulative(iv.half_width, y - iv.center) / (h_total * (iv.half_width.powi(2) + l * l));
                match iv.sign {
                    Sign::Plus => mp / m * w,
                    Sign::Minus => -mm / m * w,
                }
            })
            .sum()
    };
    let n = 20_000;
    let ys: Vec<f64> = (0..=n).map(|k| h_total * k as f64 / n as f64).collect();
    let gs: Vec<f64> = ys.iter().map(|&y| g(y)).collect();
    let gmax = gs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(gmax > 0.0) {
        return HTilde { value: 0.0, degenerate: true };
    }
    // Sign crossings are interpolated linearly; touching zeros show up as
    // runs of nodes where |g| is negligible and are placed at the run centre.
    let tol = 1e-9 * gmax;
    let mut roots = vec![0.0];
    let mut k = 0;
    while k < n {
        if gs[k].abs() <= tol {
            let start = k;
            while k < n && gs[k + 1].abs() <= tol {
                k += 1;
            }
            if start > 0 && k < n {
                roots.push(0.5 * (ys[start] + ys[k]));
            }
            k += 1;
            continue;
        }
        let (a, b) = (gs[k], gs[k + 1]);
        if b.abs() > tol && a * b < 0.0 {
            roots.push(ys[k] + (ys[k + 1] - ys[k]) * a / (a - b));
        }
        k += 1;
    }
    roots.push(h_total);
    let gap = roots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    HTilde { value: gap.min(h_total), degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::partition_sign_intervals;
    use crate::field::{integrate_scalar, BcY, Grid};
    use crate::flows::{make_shear_sine, make_timedep_shear, TimeDepKind};

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_g(1.0, 0.0), 0.25);
        assert_eq!(kernel_g(1.0, 0.5), 0.125);
        assert_eq!(kernel_g(2.0, 0.5), 0.875);
        assert_eq!(kernel_g(1.0, 1.0), 0.0);
        let k = KernelSpec::new(1.0).unwrap();
        assert!(!k.eval(1.5).in_support);
        assert_eq!(k.eval(1.5).value, 0.0);
    }

    #[test]
    fn kernel_mass_and_cumulative() {
        for h in [0.1, 1.0, 3.7] {
            let q = simpson(|x| kernel_g(h, x), -h, h, 4000);
            assert!((q - h.powi(3) / 4.0).abs() < 1e-10 * h.powi(3));
            for k in 0..=20 {
                let xi = -h + 2.0 * h * k as f64 / 20.0;
                let direct = simpson(|x| kernel_g(h, x), -h, xi, 4000);
                assert!((direct - kernel_g_cumulative(h, xi)).abs() < 1e-10 * h.powi(3), "h={h} xi={xi}");
            }
        }
    }

    #[test]
    fn burning_rate_of_patch() {
        let grid = Grid::new(20, 10, 0.1, 1.0, 0.0, BcY::Neumann).unwrap();
        let model = ReactionModel::kpp(2.0, 0.5).unwrap();
        assert_eq!(bulk_burning_rate(&ScalarField::zeros(&grid), &model).unwrap(), 0.0);
        let mut t = ScalarField::zeros(&grid);
        for i in 2..6 {
            for j in 3..8 {
                t.values[[i, j]] = 0.5;
            }
        }
        let area = 4.0 * 5.0 * grid.cell_area();
        let v = bulk_burning_rate(&t, &model).unwrap();
        assert!((v - model.rate() * 0.25 * area / grid.height).abs() < 1e-14);
    }

    fn series(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> BurningRateSeries {
        let mut s = BurningRateSeries::default();
        for k in 0..=n {
            let t = t_end * k as f64 / n as f64;
            s.push(t, f(t), 0.0, 0.0, 0.0, 0.0);
        }
        s
    }

    #[test]
    fn time_average_examples() {
        let c = series(|_| 3.0, 2.0, 10);
        assert!((time_average_v(&c, 0.0, 2.0, Weighting::Flat).unwrap().raw - 3.0).abs() < 1e-14);
        let k = time_average_v(&c, 0.3, 1.5, Weighting::Kernel).unwrap();
        assert!((k.raw - 3.0 / 32.0).abs() < 1e-12);
        assert!((k.normalized - 3.0).abs() < 1e-10);
        let lin = series(|t| t, 1.0, 7);
        assert!((time_average_v(&lin, 0.0, 1.0, Weighting::Flat).unwrap().raw - 0.5).abs() < 1e-14);
        assert!(matches!(time_average_v(&lin, 0.5, 1.0, Weighting::Flat), Err(Error::Coverage { .. })));
    }

    #[test]
    fn running_mean_of_constant() {
        let c = series(|_| 2.0, 1.0, 4);
        let r = c.running_mean();
        assert!(r[0].is_nan());
        assert!(r[1..].iter().all(|v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn logistic_front_product_is_one_sixth() {
        // int T(1-T) dx = 1/lambda and int T_x^2 dx = lambda/6 for T = 1/(1+e^{lambda x}).
        let model = ReactionModel::kpp(1.0, 1.0).unwrap();
        for lambda in [0.5, 1.0] {
            let grid = Grid::new(8000, 4, 0.01, 3.0, -40.0, BcY::Neumann).unwrap();
            let t = ScalarField::from_fn(&grid, |x, _| 1.0 / (1.0 + (lambda * x).exp()));
            let p = lemma1_product(&t, &model).unwrap();
            assert!(p.front_like);
            assert!((p.value - 1.0 / 6.0).abs() < 1e-4, "{}", p.value);
        }
        let grid = Grid::new(16, 4, 0.1, 1.0, 0.0, BcY::Neumann).unwrap();
        let burnt = lemma1_product(&ScalarField::constant(&grid, 1.0), &model).unwrap();
        assert_eq!(burnt.value, 0.0);
        assert!(!burnt.front_like);
    }

    #[test]
    fn j_for_steady_sine_is_constant() {
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        let p = partition_sign_intervals(&u, 0.01).unwrap();
        let j0 = j_instant(&u, &p, 0.0);
        let j1 = j_instant(&u, &p, 5.0);
        assert_eq!(j0, j1);
        let w = 1.0 / (1.0 + (0.01f64 / 0.25).powi(2));
        assert!((j0 - w * 2f64.sqrt() / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
        let avg = j_functional(&u, &p, 0.0, 2.0).unwrap();
        assert!((avg.normalized - j0).abs() < 1e-10);
    }

    #[test]
    fn j_for_pulsating_flow() {
        let omega = 0.5;
        let f = make_timedep_shear(TimeDepKind::Pulsating, 1.0, 1, 1.0, omega).unwrap();
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        let p = partition_sign_intervals(&u, 0.05).unwrap();
        assert!(j_instant(&f, &p, 0.0).abs() < 1e-15);
        assert!(j_instant(&f, &p, 1.0 / omega).abs() < 1e-12);
        let j = j_functional(&f, &p, 0.0, 1.0 / (2.0 * omega)).unwrap();
        assert!(j.raw > 0.0);
    }

    #[test]
    fn h_tilde_for_sine_flows() {
        for (n, expect) in [(1u32, 1.0), (4, 0.25), (3, 1.0 / 3.0)] {
            let u = make_shear_sine(1.0, n, 1.0).unwrap();
            let p = partition_sign_intervals(&u, 0.05).unwrap();
            let h = compute_h_tilde(&p);
            assert!(!h.degenerate);
            assert!((h.value - expect).abs() < 1e-3, "n={n}: {}", h.value);
        }
    }

    #[test]
    fn h_tilde_degenerate_without_backward_tubes() {
        let p = Partition::new(1.0, 0.1, vec![crate::bounds::SignedInterval { center: 0.5, half_width: 0.5, sign: Sign::Plus }]).unwrap();
        assert!(compute_h_tilde(&p).degenerate);
    }

    #[test]
    fn series_csv_header() {
        let s = series(|t| t, 1.0, 2);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,V_reaction,V_mass,grad_sq,lemma1_product,front_x\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn integrate_matches_reaction_integral_scale() {
        let grid = Grid::new(16, 4, 0.25, 2.0, 0.0, BcY::Neumann).unwrap();
        let t = ScalarField::constant(&grid, 0.5);
        let model = ReactionModel::kpp(1.0, 1.0).unwrap();
        let a = integrate_scalar(&ScalarField::constant(&grid, 0.25)).unwrap();
        assert!((reaction_integral(&t, &model) - a).abs() < 1e-14);
    }
}
