use std::f64::consts::PI;

use burnfront::bounds::{
    optimize_partition, partition_sign_intervals, percolating_bound, shear_bound_thm1, shear_bound_thm4, shear_tubes,
    timedep_bound, universal_lower_bound, BoundReport,
};
use burnfront::flows::{make_shear_sine, make_timedep_shear, ShearShape, TimeDepKind};
use burnfront::{ReactionModel, ShearProfile};

fn model(l: f64) -> ReactionModel {
    // l = kappa / v0 with v0 = 1
    ReactionModel::kpp(1.0, l).unwrap()
}

fn two_lobe(split: f64) -> ShearProfile {
    ShearProfile::new(ShearShape::TwoLobe { amplitude: 1.0, split }, 1.0).unwrap()
}

#[test]
fn stated_weight_sandwich_cannot_hold() {
    // m/M with M the larger raw weight always lies in [c, 2c], above c/4
    for split in [0.2, 0.35, 0.5, 0.8] {
        let u = two_lobe(split);
        for l in [0.01, 0.1, 0.5] {
            let p = partition_sign_intervals(&u, l).unwrap();
            let (rp, rm) = p.relative_raw_weights();
            for (r, c) in [(rp, p.c_plus()), (rm, p.c_minus())] {
                assert!(r >= c * (1.0 - 1e-12) && r <= 2.0 * c * (1.0 + 1e-12), "{r} vs c = {c}");
            }
            assert!(!p.weight_sandwich_holds());
        }
    }
}

#[test]
fn weight_sandwich_holds_relative_to_the_total() {
    for split in [0.2, 0.35, 0.5, 0.8] {
        let u = two_lobe(split);
        for l in [0.01, 0.1, 0.5] {
            let p = partition_sign_intervals(&u, l).unwrap();
            let (wp, wm) = p.weight_sums();
            let (rp, rm) = p.raw_weights();
            // the raw weights are a quarter of the c-numerators
            assert!((rp / (wp + wm) - 0.25 * p.c_plus()).abs() < 1e-15);
            assert!((rm / (wp + wm) - 0.25 * p.c_minus()).abs() < 1e-15);
        }
    }
}

#[test]
fn tube_form_reproduces_the_partition_form_for_shears() {
    for split in [0.1, 0.25, 0.4, 0.6, 0.9] {
        for l in [0.01, 0.2] {
            let u = two_lobe(split).scaled(3.0);
            let m = model(l);
            let p = partition_sign_intervals(&u, l).unwrap();
            let shear = shear_bound_thm4(&u, &p, &m).unwrap().core;
            let tubes = percolating_bound(&shear_tubes(&u, &p), &m).unwrap().core;
            assert!((tubes - shear).abs() < 1e-12 * shear, "split {split}: {tubes} vs {shear}");
        }
    }
}

#[test]
fn cores_are_homogeneous_in_the_amplitude() {
    let m = model(0.05);
    for n in [1, 3] {
        let u = make_shear_sine(1.0, n, 2.0).unwrap();
        let p = partition_sign_intervals(&u, 0.05).unwrap();
        let base = shear_bound_thm4(&u, &p, &m).unwrap().core;
        let thm1 = shear_bound_thm1(&u, &m).unwrap().core;
        for a in [0.5, 3.0, 40.0] {
            let ua = u.scaled(a);
            let pa = partition_sign_intervals(&ua, 0.05).unwrap();
            assert!((shear_bound_thm4(&ua, &pa, &m).unwrap().core - a * base).abs() < 1e-10 * a);
            assert!((shear_bound_thm1(&ua, &m).unwrap().core - a * thm1).abs() < 1e-10 * a);
        }
    }
}

#[test]
fn cores_degenerate_on_fine_scales() {
    let m = model(0.1);
    let core = |n| {
        let u = make_shear_sine(1.0, n, 1.0).unwrap();
        let p = partition_sign_intervals(&u, 0.1).unwrap();
        shear_bound_thm4(&u, &p, &m).unwrap().core
    };
    let cores: Vec<f64> = [1, 4, 16, 64].iter().map(|&n| core(n)).collect();
    assert!(cores.windows(2).all(|w| w[1] < w[0]), "{cores:?}");
    assert!(cores[3] < 1e-2 * cores[0]);
}

#[test]
fn optimized_partition_never_loses() {
    for split in [0.15, 0.3, 0.5] {
        for l in [0.02, 0.1, 0.3] {
            let u = two_lobe(split);
            let m = model(l);
            let signs = partition_sign_intervals(&u, l).unwrap();
            let best = optimize_partition(&u, l, 6).unwrap();
            let a = shear_bound_thm4(&u, &signs, &m).unwrap().core;
            let b = shear_bound_thm4(&u, &best, &m).unwrap().core;
            assert!(b >= a * (1.0 - 1e-12), "split {split}, l {l}: {b} < {a}");
        }
    }
}

#[test]
fn closed_form_cores_for_moving_shears() {
    let m = model(0.05);
    let (u0, n, h) = (3.0, 2, 1.0);
    let tau0 = 1.0f64.max(0.05 * 0.05 / 0.05).max(h);
    let geom = 1.0 / (1.0 + (n as f64 * 0.05 / h).powi(2));
    let p = partition_sign_intervals(&make_shear_sine(u0, n, h).unwrap(), 0.05).unwrap();
    for (kind, rate, expect) in [
        (TimeDepKind::Pulsating, 0.3, geom * u0 / (1.0 + 4.0 * (tau0 * 0.3f64).powi(2))),
        (TimeDepKind::Translating, 0.2, geom * u0 / (1.0 + (8.0 * 0.2 * n as f64 * tau0 / h).powi(2))),
    ] {
        let flow = make_timedep_shear(kind, u0, n, h, rate).unwrap();
        let r = timedep_bound(&flow, &p, 0.0, 4.0, &m, Some(&flow)).unwrap();
        let closed = r.inputs["closed_form_core"].as_f64().unwrap();
        assert!((closed - expect).abs() < 1e-12, "{kind:?}: {closed} vs {expect}");
    }
}

#[test]
fn reports_serialise_with_the_documented_keys() {
    let u = make_shear_sine(1.0, 1, 1.0).unwrap();
    let m = model(0.01);
    let r = shear_bound_thm1(&u, &m).unwrap();
    let json = r.to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["name", "core", "units", "tau0", "inputs", "caveats"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let back: BoundReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    assert!(r.caveats.iter().any(|c| c.contains("constant")));
}

#[test]
fn universal_bound_approaches_its_asymptote() {
    let m = model(1.0);
    let late = universal_lower_bound(&m, 1e3).unwrap();
    assert!((late - 0.5f64.sqrt()).abs() < 1e-12);
    let half = universal_lower_bound(&m, 2.0 * 2f64.ln()).unwrap();
    assert!((half - 0.5 * 0.5f64.sqrt()).abs() < 1e-12);
    assert!(universal_lower_bound(&m, 0.0).unwrap().abs() < 1e-15);
    // sanity on the sine profile's own numbers
    let u = make_shear_sine(1.0, 1, 1.0).unwrap();
    assert!((u.h_u() - 1.0 / (PI * PI)).abs() < 1e-9);
}
