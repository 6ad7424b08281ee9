//! Restarted GMRES with right preconditioning.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) struct GmresOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// Stopping-norm residual at the end of every restart cycle.
    pub history: Vec<f64>,
}

/// Solves `A x = b` for `x` (initial guess in `x`). `apply(v, out)` computes
/// `out = A M^-1 v`, `precond(v)` replaces `v` by `M^-1 v`, and
/// `residual(x)` returns the stopping norm of `b - A x`; iteration stops once
/// it falls to `tol`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gmres(
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    max_iter: usize,
    tol: f64,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&mut [f64]),
    mut residual: impl FnMut(&[f64]) -> (f64, Vec<f64>),
) -> GmresOutcome {
    let n = b.len();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let (stop, r) = residual(x);
        history.push(stop);
        if stop <= tol {
            return GmresOutcome { converged: true, iterations, history };
        }
        if iterations >= max_iter {
            return GmresOutcome { converged: false, iterations, history };
        }
        let beta = norm(&r);
        if beta == 0.0 {
            return GmresOutcome { converged: true, iterations, history };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut w = vec![0.0; n];
        for k in 0..restart.min(max_iter - iterations) {
            apply(&basis[k], &mut w);
            iterations += 1;
            let mut h = vec![0.0; k + 2];
            for (m, v) in basis.iter().enumerate() {
                h[m] = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= h[m] * b);
            }
            h[k + 1] = norm(&w);
            for m in 0..k {
                let t = cs[m] * h[m] + sn[m] * h[m + 1];
                h[m + 1] = -sn[m] * h[m] + cs[m] * h[m + 1];
                h[m] = t;
            }
            let happy = h[k + 1] == 0.0;
            let next: Vec<f64> = if happy { Vec::new() } else { w.iter().map(|v| v / h[k + 1]).collect() };
            let r = h[k].hypot(h[k + 1]);
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (h[k] / r, h[k + 1] / r) };
            h[k] = r;
            h[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            hess.push(h);
            // the 2-norm bounds the max norm, so this is a safe early exit
            if happy || g[k + 1].abs() <= 0.5 * tol || g[k + 1].abs() < 1e-14 * beta {
                break;
            }
            basis.push(next);
        }
        // back substitution for the Krylov coefficients
        let m = hess.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut acc = g[i];
            for j in i + 1..m {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        let mut z = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            z.iter_mut().zip(v).for_each(|(a, b)| *a += yi * b);
        }
        precond(&mut z);
        x.iter_mut().zip(&z).for_each(|(a, b)| *a += b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_small_nonsymmetric_system() {
        let a = [[4.0, 1.0, 0.0], [-1.0, 3.0, 2.0], [0.5, 0.0, 2.0]];
        let b = [1.0, 2.0, 3.0];
        let mul = |v: &[f64], out: &mut [f64]| {
            for i in 0..3 {
                out[i] = (0..3).map(|j| a[i][j] * v[j]).sum();
            }
        };
        let mut x = vec![0.0; 3];
        let out = gmres(&b, &mut x, 2, 50, 1e-12, mul, |_| {}, |x| {
            let mut ax = vec![0.0; 3];
            mul(x, &mut ax);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            (norm(&r), r)
        });
        assert!(out.converged);
        let mut ax = vec![0.0; 3];
        mul(&x, &mut ax);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).abs() < 1e-11);
        }
    }
}
