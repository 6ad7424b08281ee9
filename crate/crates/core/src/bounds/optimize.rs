use super::evaluators::thm4_core;
use super::{partition_sign_intervals, Partition, SignedInterval};
use crate::error::Result;
use crate::flows::ShearProfile;

const TRIMS: [f64; 3] = [0.0, 0.125, 0.25];
const EXHAUSTIVE_LIMIT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Choice {
    pieces: usize,
    trim: f64,
}

fn expand(base: &[SignedInterval], choices: &[Choice]) -> Vec<SignedInterval> {
    let mut out = Vec::new();
    for (iv, c) in base.iter().zip(choices) {
        let width = (iv.hi() - iv.lo()) / c.pieces as f64;
        for p in 0..c.pieces {
            let lo = iv.lo() + p as f64 * width + c.trim * width;
            let hi = iv.lo() + (p + 1) as f64 * width - c.trim * width;
            out.push(SignedInterval::from_ends(lo, hi, iv.sign));
        }
    }
    out
}

fn score(u: &ShearProfile, base: &Partition, choices: &[Choice]) -> Result<(f64, Partition)> {
    let p = Partition::new(base.height, base.reaction_length, expand(&base.intervals, choices))?;
    Ok((thm4_core(u, &p), p))
}

/// Best sub-partition of the sign intervals: each is cut into `1..=budget`
/// equal pieces, optionally trimmed at both ends. Exhaustive for a few
/// intervals, coordinate ascent otherwise. Never worse than the sign intervals.
pub fn optimize_partition(u: &ShearProfile, reaction_length: f64, budget: usize) -> Result<Partition> {
    let base = partition_sign_intervals(u, reaction_length)?;
    if base.is_empty() {
        return Ok(base);
    }
    let budget = budget.max(1);
    let options: Vec<Choice> =
        (1..=budget).flat_map(|pieces| TRIMS.iter().map(move |&trim| Choice { pieces, trim })).collect();
    let n = base.intervals.len();
    let mut current = vec![Choice { pieces: 1, trim: 0.0 }; n];
    let (mut best, mut best_p) = score(u, &base, &current)?;
    let better = |a: f64, b: f64| a > b + 1e-12 * b.abs().max(1e-300);

    if n <= EXHAUSTIVE_LIMIT {
        let total = options.len().pow(n as u32);
        let mut choices = current.clone();
        for code in 0..total {
            let mut c = code;
            for slot in choices.iter_mut() {
                *slot = options[c % options.len()];
                c /= options.len();
            }
            let (s, p) = score(u, &base, &choices)?;
            if better(s, best) {
                best = s;
                best_p = p;
            }
        }
        return Ok(best_p);
    }

    loop {
        let mut improved = false;
        for k in 0..n {
            let mut keep = current[k];
            for &opt in &options {
                current[k] = opt;
                let (s, p) = score(u, &base, &current)?;
                if better(s, best) {
                    best = s;
                    best_p = p;
                    keep = opt;
                    improved = true;
                }
            }
            current[k] = keep;
        }
        if !improved {
            break;
        }
    }
    Ok(best_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{make_shear_sine, ShearShape};

    #[test]
    fn sine_keeps_sign_intervals() {
        let u = make_shear_sine(1.0, 1, 1.0).unwrap();
        for l in [0.01, 0.1, 0.25] {
            let best = optimize_partition(&u, l, 8).unwrap();
            let sign = partition_sign_intervals(&u, l).unwrap();
            assert_eq!(best.intervals.len(), sign.intervals.len(), "l = {l}");
            for (a, b) in best.intervals.iter().zip(&sign.intervals) {
                assert!((a.lo() - b.lo()).abs() < 1e-12 && (a.hi() - b.hi()).abs() < 1e-12, "l = {l}");
            }
        }
    }

    #[test]
    fn never_below_sign_partition() {
        let u = ShearProfile::new(ShearShape::TwoLobe { amplitude: 1.0, split: 0.8 }, 1.0).unwrap();
        for l in [0.02, 0.1, 0.3] {
            let best = optimize_partition(&u, l, 4).unwrap();
            let sign = partition_sign_intervals(&u, l).unwrap();
            assert!(thm4_core(&u, &best) >= thm4_core(&u, &sign) - 1e-15);
        }
    }

    #[test]
    fn coordinate_ascent_on_many_intervals() {
        let u = make_shear_sine(1.0, 3, 1.0).unwrap();
        let best = optimize_partition(&u, 0.05, 3).unwrap();
        let sign = partition_sign_intervals(&u, 0.05).unwrap();
        assert!(thm4_core(&u, &best) >= thm4_core(&u, &sign) - 1e-15);
    }

    #[test]
    fn zero_flow_is_empty() {
        let u = make_shear_sine(0.0, 1, 1.0).unwrap();
        assert!(optimize_partition(&u, 0.1, 4).unwrap().is_empty());
    }
}
