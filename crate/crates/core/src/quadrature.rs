//! Fixed-order quadrature rules shared by the bound evaluators.

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Composite 8-point Gauss-Legendre rule on `panels` equal panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * w;
        let mid = lo + 0.5 * w;
        let mut s = 0.0;
        for k in 0..8 {
            s += GL_WEIGHTS[k] * f(mid + 0.5 * w * GL_NODES[k]);
        }
        total += 0.5 * w * s;
    }
    total
}

/// Composite Simpson rule with `n` subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) / 2 * 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Locate sign changes of `f` on [a, b] by dense sampling and bisection.
pub fn sign_changes<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, samples: usize, zero_tol: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = (b - a) / samples as f64;
    let sgn = |v: f64| if v > zero_tol { 1 } else if v < -zero_tol { -1 } else { 0 };
    let mut last_sign = 0;
    let mut last_x = a;
    for k in 0..=samples {
        let x = a + k as f64 * step;
        let s = sgn(f(x));
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                let (mut lo, mut hi) = (last_x, x);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let v = f(mid);
                    if (v > 0.0) == (last_sign > 0) && v != 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            last_sign = s;
            last_x = x;
        }
    }
    roots
}
