use serde::{Deserialize, Serialize};

use super::{BoundReport, Partition, Sign};
use crate::diagnostics::{compute_h_tilde, j_functional};
use crate::error::{invalid, Error, Result};
use crate::flows::{MetricBounds, ShearLike, ShearProfile, TimeDepKind, TimeDepShear, Tube, TubeGeometry};
use crate::reaction::ReactionModel;

fn tau0(model: &ReactionModel, length: f64) -> f64 {
    model.time().max(length / model.v0)
}

fn check_length(model: &ReactionModel, partition: &Partition) -> Result<()> {
    let l = model.length();
    if (partition.reaction_length - l).abs() > 1e-12 * l {
        return Err(invalid(format!(
            "partition built with l = {} but the model has l = {l}",
            partition.reaction_length
        )));
    }
    Ok(())
}

/// `v0 sqrt(beta / 4 alpha) (1 - exp(-alpha v0^2 t / 2 kappa))`.
pub fn universal_lower_bound(model: &ReactionModel, t: f64) -> Result<f64> {
    let (alpha, beta) = model.reaction_constants()?;
    if !(t >= 0.0) {
        return Err(invalid("time must be non-negative"));
    }
    Ok(model.v0 * (beta / (4.0 * alpha)).sqrt() * (1.0 - (-alpha * model.v0 * model.v0 * t / (2.0 * model.kappa)).exp()))
}

/// `4 C0 kappa / (v0 t) + v0 + ||u1||_inf`.
pub fn upper_bound(model: &ReactionModel, c0: f64, u_inf: f64, t: f64) -> Result<f64> {
    model.require_kpp()?;
    if !(t > 0.0) {
        return Err(invalid("upper bound needs t > 0"));
    }
    Ok(4.0 * c0 * model.kappa / (model.v0 * t) + model.v0 + u_inf)
}

fn middle_half_abs(u: &ShearProfile, lo: f64, hi: f64) -> f64 {
    let q = 0.25 * (hi - lo);
    u.abs_integral(lo + q, hi - q)
}

/// Core of the partition bound: `c+ sum_{D+} (1 + l^2/h^2)^-1 int_mid |u| / H + c- sum_{D-} (...)`.
pub(crate) fn thm4_core(u: &ShearProfile, partition: &Partition) -> f64 {
    let (cp, cm) = (partition.c_plus(), partition.c_minus());
    let l = partition.reaction_length;
    partition
        .intervals
        .iter()
        .map(|iv| {
            let w = 1.0 / (1.0 + (l / iv.half_width).powi(2));
            let flux = middle_half_abs(u, iv.lo(), iv.hi()) / u.height;
            match iv.sign {
                Sign::Plus => cp * w * flux,
                Sign::Minus => cm * w * flux,
            }
        })
        .sum()
}

pub fn shear_bound_thm4(u: &ShearProfile, partition: &Partition, model: &ReactionModel) -> Result<BoundReport> {
    model.require_kpp()?;
    check_length(model, partition)?;
    partition.validate_against(u)?;
    let core = thm4_core(u, partition);
    let h_tilde = compute_h_tilde(partition);
    let full = tau0(model, u.height);
    let refined = if h_tilde.degenerate { full } else { tau0(model, h_tilde.value) };
    Ok(BoundReport::new("shear_partition", core, refined)
        .input("height", u.height)
        .input("reaction_length", partition.reaction_length)
        .input("intervals", partition.intervals.len())
        .input("c_plus", partition.c_plus())
        .input("c_minus", partition.c_minus())
        .input("h_tilde", h_tilde.value)
        .input("tau0_full_height", full)
        .caveat("tau0 uses the refined height when the root structure is non-degenerate"))
}

pub fn shear_bound_thm1(u: &ShearProfile, model: &ReactionModel) -> Result<BoundReport> {
    model.require_kpp()?;
    let sup = u.norm_inf();
    if sup == 0.0 {
        return Err(invalid("shear bound needs a non-zero profile"));
    }
    let l1 = u.norm_l1();
    let h_u = u.h_u();
    let l = model.length();
    let core = l1 * l1 / sup / (1.0 + (l / h_u).powi(2));
    Ok(BoundReport::new("shear_wrinkling", core, tau0(model, u.height))
        .input("norm_l1", l1)
        .input("norm_inf", sup)
        .input("h_u", h_u)
        .input("reaction_length", l))
}

/// Shear flow viewed as a set of straight tubes with `rho = y`.
pub fn shear_tubes(u: &ShearProfile, partition: &Partition) -> TubeGeometry {
    let tubes = partition
        .intervals
        .iter()
        .map(|iv| Tube {
            sign: if iv.sign == Sign::Plus { 1 } else { -1 },
            half_width: iv.half_width,
            center: iv.center,
            flux: u.abs_integral(iv.lo(), iv.hi()),
            middle_half_flux: middle_half_abs(u, iv.lo(), iv.hi()),
            mean_grad: 1.0,
            level_mid: 0.0,
            flux_spread: 0.0,
        })
        .collect();
    TubeGeometry {
        tubes,
        m0: Some(partition.m0()),
        period: 0.0,
        height: u.height,
        metric: MetricBounds { e1_min: 1.0, e1_max: 1.0, constant: 1.0 },
    }
}

/// Core of the flux-form tube bound.
pub fn percolating_bound(tubes: &TubeGeometry, model: &ReactionModel) -> Result<BoundReport> {
    model.require_kpp()?;
    let m0 = tubes.m0.ok_or_else(|| invalid("tube geometry has no measure ratio; give a period or m0"))?;
    if !(m0 > 0.0) {
        return Err(invalid("measure ratio must be positive"));
    }
    let l = model.length();
    let (wp, wm) = if m0.is_infinite() { (0.0, 1.0) } else { (1.0 / (1.0 + m0), 1.0 / (1.0 + 1.0 / m0)) };
    let mut core = 0.0;
    for t in &tubes.tubes {
        if !(t.half_width > 0.0) {
            return Err(invalid(format!("tube at {} has non-positive half-width", t.center)));
        }
        let w = 1.0 / (1.0 + (l / t.half_width).powi(2)) * t.middle_half_flux / tubes.height;
        core += if t.sign > 0 { wp * w } else { wm * w };
    }
    let c = tubes.metric.constant;
    Ok(BoundReport::new("percolating", core, tau0(model, tubes.height + tubes.period))
        .input("m0", m0)
        .input("period", tubes.period)
        .input("tubes", tubes.tubes.len())
        .input("metric_constant", c)
        .caveat(format!(
            "middle-half flux stands in for the metric-weighted velocity integral; exact for E1 = 1, within a factor {c:.4} here"
        )))
}

/// `(1 + (tau0/tau)^2)^-1 J(t0, tau, u)` with the normalised kernel average of `J`.
pub fn timedep_bound<F: ShearLike + ?Sized>(
    flow: &F,
    partition: &Partition,
    t0: f64,
    tau: f64,
    model: &ReactionModel,
    family: Option<&TimeDepShear>,
) -> Result<BoundReport> {
    model.require_kpp()?;
    check_length(model, partition)?;
    let j = j_functional(flow, partition, t0, tau)?;
    let t0_scale = tau0(model, flow.height());
    let factor = 1.0 / (1.0 + (t0_scale / tau).powi(2));
    let mut report = BoundReport::new("timedep_shear", factor * j.normalized.max(0.0), t0_scale)
        .input("t0", t0)
        .input("tau", tau)
        .input("j_raw", j.raw)
        .input("j_normalized", j.normalized)
        .caveat("J is the kernel average scaled by 32 so a steady flow recovers the partition core");
    if j.normalized < 0.0 {
        report = report.caveat("J < 0: the chosen intervals cancel against the flow phase; core set to 0");
    }
    if let Some(f) = family {
        let n = f.modes as f64;
        let geom = 1.0 / (1.0 + (n * model.length() / f.height).powi(2));
        let closed = match f.kind {
            TimeDepKind::Pulsating => geom * f.amplitude / (1.0 + 4.0 * (t0_scale * f.rate).powi(2)),
            TimeDepKind::Translating => {
                geom * f.amplitude / (1.0 + (8.0 * f.rate * n * t0_scale / f.height).powi(2))
            }
        };
        report = report.input("closed_form_core", closed);
    }
    Ok(report)
}

/// `v0 [(1 + l/Lx) (U/v0)^(2/(1+m)) + Lx/(4 l)]`.
pub fn cellular_upper_bound(m: u32, amplitude: f64, model: &ReactionModel, lx: f64) -> Result<BoundReport> {
    model.require_kpp()?;
    if m < 1 || !(lx > 0.0) || !(amplitude >= 0.0) {
        return Err(invalid("cellular bound needs m >= 1, Lx > 0, U >= 0"));
    }
    let l = model.length();
    let exponent = 2.0 / (1.0 + m as f64);
    let ratio = amplitude / model.v0;
    let core = model.v0 * ((1.0 + l / lx) * ratio.powf(exponent) + lx / (4.0 * l));
    let mut r = BoundReport::new("cellular_upper", core, model.time().max(lx / model.v0))
        .input("m", m)
        .input("amplitude", amplitude)
        .input("exponent", exponent)
        .input("out_of_regime", ratio < 1.0);
    if ratio < 1.0 {
        r = r.caveat("amplitude below v0: outside the regime of the estimate");
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedBound {
    pub core: f64,
    pub v0_star: f64,
}

/// `v0 sqrt(beta k* / 4 alpha kappa) (1 - exp(-alpha v0^2 t / 2 kappa))` and `v0* = v0 sqrt(k*/kappa)`.
pub fn homogenized_lower_bound(kstar: f64, model: &ReactionModel, t: f64) -> Result<HomogenizedBound> {
    if !(kstar > 0.0) {
        return Err(Error::Indefinite(kstar));
    }
    let base = universal_lower_bound(model, t)?;
    let s = (kstar / model.kappa).sqrt();
    Ok(HomogenizedBound { core: base * s, v0_star: model.v0 * s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{partition_sign_intervals, SignedInterval};
    use crate::flows::{make_shear_sine, make_timedep_shear, ShearShape};
    use crate::reaction::ReactionKind;
    use std::f64::consts::PI;

    fn model_with_l(l: f64) -> ReactionModel {
        ReactionModel::kpp(1.0, l).unwrap()
    }

    #[test]
    fn universal_bound_examples() {
        let m = model_with_l(1.0);
        assert!((universal_lower_bound(&m, 1e6).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(universal_lower_bound(&m, 0.0).unwrap(), 0.0);
        let half = universal_lower_bound(&m, 2.0 * 2f64.ln()).unwrap();
        assert!((half - 0.5 * 0.5f64.sqrt()).abs() < 1e-12);
        let ign = ReactionModel::new(ReactionKind::Ignition { threshold: 0.2 }, 1.0, 1.0).unwrap();
        assert!(matches!(universal_lower_bound(&ign, 1.0), Err(Error::NotKpp(_))));
    }

    #[test]
    fn upper_bound_examples() {
        let m = ReactionModel::kpp(1.0, 0.01).unwrap();
        assert!((upper_bound(&m, 1.0, 3.0, 1.0).unwrap() - 4.04).abs() < 1e-12);
        assert!((upper_bound(&m, 1.0, 3.0, 1e12).unwrap() - 4.0).abs() < 1e-9);
        assert!((upper_bound(&m, 1.0, 0.0, 1e12).unwrap() - 1.0).abs() < 1e-9);
        assert!(upper_bound(&m, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn thm4_sine_examples() {
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        let tiny = model_with_l(1e-9);
        let p = partition_sign_intervals(&u, tiny.length()).unwrap();
        let r = shear_bound_thm4(&u, &p, &tiny).unwrap();
        assert!((r.core - 2f64.sqrt() / (2.0 * PI)).abs() < 1e-10);
        assert!((r.core - 0.22508).abs() < 1e-5);

        let quarter = model_with_l(0.25);
        let p = partition_sign_intervals(&u, 0.25).unwrap();
        let r = shear_bound_thm4(&u, &p, &quarter).unwrap();
        assert!((r.core - 0.5 * 2f64.sqrt() / (2.0 * PI)).abs() < 1e-10);
        assert!((r.tau0 - 1.0 / 1.0f64.max(0.25)).abs() < 1e-12);

        let zero = make_shear_sine(0.0, 1, 1.0).unwrap();
        let p0 = partition_sign_intervals(&zero, 0.25).unwrap();
        assert_eq!(shear_bound_thm4(&zero, &p0, &quarter).unwrap().core, 0.0);
    }

    #[test]
    fn thm4_rejects_sign_mismatch_and_wrong_length() {
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        let m = model_with_l(0.1);
        let mut p = partition_sign_intervals(&u, 0.1).unwrap();
        p.intervals[1].sign = Sign::Plus;
        assert!(shear_bound_thm4(&u, &p, &m).is_err());
        let p = partition_sign_intervals(&u, 0.2).unwrap();
        assert!(shear_bound_thm4(&u, &p, &m).is_err());
    }

    #[test]
    fn thm1_examples() {
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        let m = model_with_l(0.01);
        let r = shear_bound_thm1(&u, &m).unwrap();
        let h_u = 1.0 / (PI * PI);
        let expect = (2.0 / PI).powi(2) / (1.0 + (0.01 / h_u).powi(2));
        assert!((r.core - expect).abs() < 1e-9);
        assert!((r.core - 0.401375).abs() < 1e-6);

        let tiny = model_with_l(1e-12);
        let a = shear_bound_thm1(&u, &tiny).unwrap().core;
        let b = shear_bound_thm1(&u.scaled(2.0), &tiny).unwrap().core;
        assert!((b - 2.0 * a).abs() < 1e-9);
        assert!(shear_bound_thm1(&make_shear_sine(0.0, 1, 1.0).unwrap(), &m).is_err());
    }

    #[test]
    fn thm1_decays_like_inverse_square_of_modes() {
        let m = model_with_l(0.05);
        let core = |n| shear_bound_thm1(&make_shear_sine(1.0, n, 1.0).unwrap(), &m).unwrap().core;
        let ratio = core(64) / core(128);
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn percolating_matches_partition_bound_for_shear() {
        let u = ShearProfile::new(ShearShape::TwoLobe { amplitude: 2.0, split: 0.3 }, 1.0).unwrap();
        let m = model_with_l(0.05);
        let p = partition_sign_intervals(&u, 0.05).unwrap();
        let thm4 = shear_bound_thm4(&u, &p, &m).unwrap().core;
        let perc = percolating_bound(&shear_tubes(&u, &p), &m).unwrap();
        assert!((perc.core - thm4).abs() < 1e-12 * thm4);
        assert!((perc.tau0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn percolating_plug_in_and_limits() {
        let m = model_with_l(1e-9);
        let tube = |sign, flux: f64| Tube {
            sign,
            half_width: 0.2,
            center: 0.0,
            flux,
            middle_half_flux: flux,
            mean_grad: 1.0,
            level_mid: 0.0,
            flux_spread: 0.0,
        };
        let mut geo = TubeGeometry {
            tubes: vec![tube(1, 0.3), tube(-1, 0.3)],
            m0: Some(1.0),
            period: 0.5,
            height: 2.0,
            metric: MetricBounds { e1_min: 1.0, e1_max: 1.0, constant: 1.0 },
        };
        let r = percolating_bound(&geo, &m).unwrap();
        assert!((r.core - 0.3 / 2.0).abs() < 1e-12);
        geo.m0 = Some(1e12);
        let r = percolating_bound(&geo, &m).unwrap();
        assert!((r.core - 0.3 / 2.0).abs() < 1e-9);
        geo.m0 = None;
        assert!(percolating_bound(&geo, &m).is_err());
    }

    #[test]
    fn cellular_examples() {
        let m = ReactionModel::kpp(1.0, 0.1).unwrap();
        let r = cellular_upper_bound(3, 16.0, &m, 1.0).unwrap();
        assert!((r.core - 6.9).abs() < 1e-12);
        assert_eq!(r.inputs["exponent"], 0.5);
        let r1 = cellular_upper_bound(1, 16.0, &m, 1.0).unwrap();
        assert_eq!(r1.inputs["exponent"], 1.0);
        let big = cellular_upper_bound(1_000_000, 16.0, &m, 1.0).unwrap();
        assert!(big.inputs["exponent"].as_f64().unwrap() < 1e-5);
        let low = cellular_upper_bound(3, 0.5, &m, 1.0).unwrap();
        assert_eq!(low.inputs["out_of_regime"], true);
    }

    #[test]
    fn homogenized_examples() {
        let m = model_with_l(1.0);
        let t = 3.0;
        let a = homogenized_lower_bound(m.kappa, &m, t).unwrap();
        assert!((a.core - universal_lower_bound(&m, t).unwrap()).abs() < 1e-15);
        let b = homogenized_lower_bound(4.0 * m.kappa, &m, 1e9).unwrap();
        assert!((b.core - 2f64.sqrt()).abs() < 1e-12);
        assert!((b.v0_star - 2.0).abs() < 1e-15);
        assert!(homogenized_lower_bound(0.0, &m, 1.0).is_err());
    }

    #[test]
    fn timedep_steady_limit_and_phase() {
        let m = model_with_l(0.05);
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        let p = partition_sign_intervals(&u, 0.05).unwrap();
        let thm4 = shear_bound_thm4(&u, &p, &m).unwrap().core;
        let r = timedep_bound(&u, &p, 0.0, 1e4, &m, None).unwrap();
        assert!((r.core - thm4).abs() < 1e-6 * thm4);

        let omega = 2.0;
        let f = make_timedep_shear(TimeDepKind::Pulsating, 1.0, 1, 1.0, omega).unwrap();
        let good = timedep_bound(&f, &p, 0.0, 1.0 / (2.0 * omega), &m, Some(&f)).unwrap();
        assert!(good.core > 0.0);
        assert!(good.inputs.contains_key("closed_form_core"));
        let swapped = Partition::new(
            1.0,
            0.05,
            p.intervals.iter().map(|iv| SignedInterval { sign: if iv.sign == Sign::Plus { Sign::Minus } else { Sign::Plus }, ..*iv }).collect(),
        )
        .unwrap();
        let bad = timedep_bound(&f, &swapped, 0.0, 1.0 / (2.0 * omega), &m, None).unwrap();
        assert_eq!(bad.core, 0.0);
        assert!(bad.caveats.iter().any(|c| c.contains("J < 0")));
    }

    #[test]
    fn timedep_core_falls_like_inverse_square_frequency() {
        let m = model_with_l(0.05);
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        let p = partition_sign_intervals(&u, 0.05).unwrap();
        let core = |omega: f64| {
            let f = make_timedep_shear(TimeDepKind::Pulsating, 1.0, 1, 1.0, omega).unwrap();
            timedep_bound(&f, &p, 0.0, 1.0 / (2.0 * omega), &m, None).unwrap().core
        };
        let ratio = core(100.0) / core(200.0);
        assert!((ratio - 4.0).abs() < 1e-3, "{ratio}");
    }
}
