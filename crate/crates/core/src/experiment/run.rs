//! Sweep execution and report assembly.

use std::fs;
use std::io::Write;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::{config_err, CellPoint, ExperimentSpec, Plan, Preset, RunPoint};
use crate::bounds::{
    cellular_upper_bound, homogenized_lower_bound, partition_sign_intervals, percolating_bound, shear_bound_thm1,
    shear_bound_thm4, timedep_bound, upper_bound, BoundReport,
};
use crate::diagnostics::BurningRateSeries;
use crate::error::Result;
use crate::field::{BcY, Grid};
use crate::flows::{extract_tubes, make_shear_sine, FlowSpec, PerturbedShear, TubeBand, TubeOptions};
use crate::homogenization::{homogenize, EffectiveTensor};
use crate::solver::{run, SimulationConfig};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for the sweep; 0 means one.
    pub threads: usize,
    pub allow_underresolved: bool,
}

/// One line of the sweep summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub amplitude: f64,
    /// Mean front speed over the averaging window.
    pub v_measured: Option<f64>,
    pub bound_core: Option<f64>,
    pub ratio: Option<f64>,
    pub fitted_exponent: Option<f64>,
    pub parameter: f64,
    pub tau0: f64,
    pub tau: f64,
    pub short_window: bool,
    pub under_resolved: bool,
    pub v_final: Option<f64>,
    pub left_truncated: bool,
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub label: String,
    pub series: Option<BurningRateSeries>,
    pub reports: Vec<BoundReport>,
    pub tensor: Option<EffectiveTensor>,
    pub error: Option<String>,
}

/// Results of one experiment: per-point records and the summary.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub name: String,
    pub preset: Preset,
    pub records: Vec<RunRecord>,
    pub rows: Vec<SummaryRow>,
    pub fitted_exponent: Option<f64>,
    /// False when any point failed.
    pub complete: bool,
}

/// Least-squares slope of `log v` against `log a` over the upper half of the
/// amplitude range (at least two points).
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|&(a, v)| a > 0.0 && v > 0.0).collect();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    if pts.len() < 2 {
        return None;
    }
    let keep = pts.len().div_ceil(2).max(2);
    let top = &pts[pts.len() - keep..];
    let n = top.len() as f64;
    let (mx, my) = top.iter().fold((0.0, 0.0), |(x, y), &(a, v)| (x + a.ln() / n, y + v.ln() / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(a, v) in top {
        sxy += (a.ln() - mx) * (v.ln() - my);
        sxx += (a.ln() - mx) * (a.ln() - mx);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Mean front speed `(x(t0 + tau) - x(t0)) / tau` with the front position
/// interpolated between snapshots.
pub fn mean_front_speed(series: &BurningRateSeries, t0: f64, tau: f64) -> Option<f64> {
    let at = |t: f64| -> Option<f64> {
        let ts = &series.t;
        let slack = 1e-9 * t.abs().max(1.0);
        let k = ts.iter().position(|&s| s >= t - slack)?;
        if (ts[k] - t).abs() <= slack || k == 0 {
            return ((ts[k] - t).abs() <= slack).then(|| series.front_x[k]);
        }
        let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
        Some(series.front_x[k - 1] * (1.0 - w) + series.front_x[k] * w)
    };
    Some((at(t0 + tau)? - at(t0)?) / tau)
}

fn strip_bounds(spec: &ExperimentSpec, p: &RunPoint) -> Result<(Option<f64>, Vec<BoundReport>)> {
    let cfg = &p.config;
    let model = &cfg.reaction;
    let h = cfg.grid.height;
    let l = model.length();
    let t_end = p.average_start + p.tau;
    let c0 = spec.experiment.c0;
    let u_inf = cfg.flow.u1_sup(h)?;
    let upper = BoundReport::new("upper", upper_bound(model, c0, u_inf, t_end)?, p.tau0)
        .input("c0", c0)
        .input("u1_sup", u_inf)
        .input("t", t_end);
    let mut reports = vec![upper.clone()];
    let core = match spec.experiment.preset {
        Preset::Laminar => {
            reports.push(BoundReport::new("laminar_speed", model.v0, p.tau0));
            Some(model.v0)
        }
        Preset::ShearPerpendicular => Some(upper.core),
        Preset::ShearSweep => {
            let profile = cfg.flow.shear_profile(h)?.expect("shear preset");
            let partition = partition_sign_intervals(&profile, l)?;
            let thm4 = shear_bound_thm4(&profile, &partition, model)?;
            let core = thm4.core;
            reports.push(thm4);
            if let Ok(r) = shear_bound_thm1(&profile, model) {
                reports.push(r);
            }
            Some(core)
        }
        Preset::TimedepShear => {
            let family = cfg.flow.timedep_shear(h)?.expect("time-dependent preset");
            let base = make_shear_sine(family.amplitude, family.modes, h)?;
            let partition = partition_sign_intervals(&base, l)?;
            let r = timedep_bound(&family, &partition, p.average_start, p.tau, model, Some(&family))?;
            // the window-dependent J average can cancel to zero for fast
            // oscillation; the family closed form is the comparable core
            let core = r.inputs.get("closed_form_core").and_then(|v| v.as_f64()).unwrap_or(r.core);
            reports.push(r);
            Some(core)
        }
        Preset::Percolating => {
            let FlowSpec::PerturbedShear { amplitude, modes, perturbation, lx } = cfg.flow else {
                unreachable!("percolating preset")
            };
            let flow = PerturbedShear::new(amplitude, modes, perturbation, lx, h)?;
            let nx = (lx / cfg.grid.dx).round().max(8.0) as usize;
            let grid = Grid::new(nx, cfg.grid.ny, lx / nx as f64, h, 0.0, BcY::Periodic)?;
            let sf = flow.sample(&grid);
            // inner half of every sign interval of the unperturbed shear
            let width = h / (2.0 * modes as f64);
            let bands: Vec<TubeBand> = (0..2 * modes)
                .map(|k| {
                    let c = (k as f64 + 0.5) * width;
                    let (lo, hi) = (c - 0.25 * width, c + 0.25 * width);
                    TubeBand::seeded(flow.psi(0.0, lo), flow.psi(0.0, hi), c)
                })
                .collect();
            let opts = TubeOptions { reaction_length: l, period: Some(lx), m0: None };
            let tubes = extract_tubes(&sf, &bands, &opts)?;
            let r = percolating_bound(&tubes, model)?;
            let core = r.core;
            reports.push(r);
            Some(core)
        }
        Preset::CellularSweep => {
            let FlowSpec::Cellular { m, amplitude, lx, .. } = cfg.flow else { unreachable!("cellular preset") };
            let r = cellular_upper_bound(m, amplitude, model, lx)?;
            let core = r.core;
            reports.push(r);
            Some(core)
        }
        Preset::Homogenize => None,
    };
    Ok((core, reports))
}

fn base_row(p: &RunPoint) -> SummaryRow {
    SummaryRow {
        label: p.label.clone(),
        amplitude: p.amplitude,
        v_measured: None,
        bound_core: None,
        ratio: None,
        fitted_exponent: None,
        parameter: p.parameter,
        tau0: p.tau0,
        tau: p.tau,
        short_window: p.short_window(),
        under_resolved: !p.under_resolved.is_empty(),
        v_final: None,
        left_truncated: false,
        status: "ok".into(),
    }
}

fn execute_run(spec: &ExperimentSpec, p: &RunPoint, simulate: bool) -> (RunRecord, SummaryRow) {
    let mut row = base_row(p);
    let mut record = RunRecord { label: p.label.clone(), series: None, reports: Vec::new(), tensor: None, error: None };
    match strip_bounds(spec, p) {
        Ok((core, reports)) => {
            row.bound_core = core;
            record.reports = reports;
        }
        Err(e) => {
            warn!("{}: bound evaluation failed: {e}", p.label);
            record.error = Some(format!("bounds: {e}"));
        }
    }
    if simulate {
        match simulate_point(&p.config) {
            Ok((series, left_truncated)) => {
                row.v_measured = mean_front_speed(&series, p.average_start, p.tau);
                row.v_final = series.v_reaction.last().copied();
                row.left_truncated = left_truncated;
                record.series = Some(series);
            }
            Err(e) => {
                warn!("{}: run failed: {e}", p.label);
                record.error = Some(format!("run: {e}"));
            }
        }
    }
    if let (Some(v), Some(c)) = (row.v_measured, row.bound_core) {
        row.ratio = (c > 0.0).then(|| v / c);
    }
    if let Some(e) = &record.error {
        row.status = e.clone();
    }
    (record, row)
}

fn simulate_point(config: &SimulationConfig) -> Result<(BurningRateSeries, bool)> {
    let out = run(config)?;
    Ok((out.series, out.state.left_truncated))
}

fn execute_cell(spec: &ExperimentSpec, p: &CellPoint) -> (RunRecord, SummaryRow) {
    let v0 = spec.reaction.v0;
    let mut row = SummaryRow {
        label: p.label.clone(),
        amplitude: p.amplitude,
        v_measured: None,
        bound_core: None,
        ratio: None,
        fitted_exponent: None,
        parameter: p.amplitude,
        tau0: spec.reaction.time(),
        tau: spec.experiment.tau_factor * spec.reaction.time(),
        short_window: false,
        under_resolved: false,
        v_final: None,
        left_truncated: false,
        status: "ok".into(),
    };
    let mut record = RunRecord { label: p.label.clone(), series: None, reports: Vec::new(), tensor: None, error: None };
    let result = homogenize(&p.problem, v0).and_then(|tensor| {
        let b = homogenized_lower_bound(tensor.kstar_min, &spec.reaction, row.tau)?;
        Ok((tensor, b))
    });
    match result {
        Ok((tensor, b)) => {
            row.bound_core = Some(b.v0_star);
            let report = BoundReport::new("homogenized_lower", b.core, row.tau0)
                .input("kstar_min", tensor.kstar_min)
                .input("v0_star", b.v0_star)
                .input("t", row.tau)
                .caveat(crate::homogenization::WEAK_REACTION_CAVEAT);
            record.reports.push(report);
            record.tensor = Some(tensor);
        }
        Err(e) => {
            warn!("{}: cell problem failed: {e}", p.label);
            row.status = format!("cell: {e}");
            record.error = Some(row.status.clone());
        }
    }
    (record, row)
}

fn execute(spec: &ExperimentSpec, opts: &RunOptions, simulate: bool) -> Result<Bundle> {
    let plan = spec.plan()?;
    if let Plan::Runs(points) = &plan {
        let issues: Vec<String> = points
            .iter()
            .flat_map(|p| p.under_resolved.iter().map(move |m| format!("{}: {m}", p.label)))
            .collect();
        if !issues.is_empty() && simulate && !opts.allow_underresolved {
            return Err(config_err(format!("resolution policy violated ({})", issues.join("; "))));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.max(1))
        .build()
        .map_err(|e| config_err(format!("thread pool: {e}")))?;
    let results: Vec<(RunRecord, SummaryRow)> = pool.install(|| match &plan {
        Plan::Runs(points) => points.par_iter().map(|p| execute_run(spec, p, simulate)).collect(),
        Plan::Cells(points) => points.par_iter().map(|p| execute_cell(spec, p)).collect(),
    });
    let (records, mut rows): (Vec<RunRecord>, Vec<SummaryRow>) = results.into_iter().unzip();
    let fitted_exponent = if spec.experiment.preset.fits_exponent() {
        let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.amplitude, r.v_measured?))).collect();
        fit_exponent(&pts)
    } else {
        None
    };
    rows.iter_mut().for_each(|r| r.fitted_exponent = fitted_exponent);
    let complete = records.iter().all(|r| r.error.is_none());
    info!("{}: {} points, complete = {complete}", spec.name(), rows.len());
    Ok(Bundle { name: spec.name(), preset: spec.experiment.preset, records, rows, fitted_exponent, complete })
}

/// Executes every run of the spec (or every cell problem for `homogenize`).
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Bundle> {
    execute(spec, opts, true)
}

/// Bound evaluation only; no strip runs.
pub fn evaluate_bounds(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Bundle> {
    execute(spec, opts, false)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl Bundle {
    pub fn write_summary<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "amplitude,V_measured,bound_core,ratio,fitted_exponent,parameter,tau0,tau,short_window,under_resolved,V_final,left_truncated,label,status"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"",
                r.amplitude,
                opt(r.v_measured),
                opt(r.bound_core),
                opt(r.ratio),
                opt(r.fitted_exponent),
                r.parameter,
                r.tau0,
                r.tau,
                r.short_window,
                r.under_resolved,
                opt(r.v_final),
                r.left_truncated,
                r.label,
                r.status.replace('"', "'"),
            )?;
        }
        Ok(())
    }

    /// Writes `summary.csv`, `status.json` and per-point series, bound
    /// reports and tensors into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_summary(fs::File::create(dir.join("summary.csv"))?)?;
        for rec in &self.records {
            if let Some(s) = &rec.series {
                s.write_csv(std::io::BufWriter::new(fs::File::create(dir.join(format!("{}.csv", rec.label)))?))?;
            }
            if !rec.reports.is_empty() {
                fs::write(dir.join(format!("{}.bounds.json", rec.label)), serde_json::to_string_pretty(&rec.reports)?)?;
            }
            if let Some(t) = &rec.tensor {
                fs::write(dir.join(format!("{}.tensor.json", rec.label)), t.to_json()?)?;
            }
        }
        let failures: Vec<_> = self
            .records
            .iter()
            .filter_map(|r| r.error.as_ref().map(|e| serde_json::json!({ "label": r.label, "error": e })))
            .collect();
        let status = serde_json::json!({
            "name": self.name,
            "preset": self.preset,
            "complete": self.complete,
            "fitted_exponent": self.fitted_exponent,
            "failures": failures,
        });
        fs::write(dir.join("status.json"), serde_json::to_string_pretty(&status)?)?;
        Ok(())
    }
}
