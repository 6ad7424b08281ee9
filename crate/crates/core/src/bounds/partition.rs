use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::ShearProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// `I_j = [center - half_width, center + half_width]`, assigned to `D+` or `D-`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedInterval {
    pub center: f64,
    pub half_width: f64,
    pub sign: Sign,
}

impl SignedInterval {
    pub fn from_ends(lo: f64, hi: f64, sign: Sign) -> Self {
        SignedInterval { center: 0.5 * (lo + hi), half_width: 0.5 * (hi - lo), sign }
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    /// `h^3 / (h^2 + l^2)`.
    pub fn weight(&self, l: f64) -> f64 {
        let h = self.half_width;
        h * h * h / (h * h + l * l)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub height: f64,
    pub reaction_length: f64,
    pub intervals: Vec<SignedInterval>,
    /// Set when built from a flow that vanishes identically.
    #[serde(default)]
    pub empty_flow: bool,
}

impl Partition {
    pub fn new(height: f64, reaction_length: f64, mut intervals: Vec<SignedInterval>) -> Result<Self> {
        if !(height > 0.0) || !(reaction_length >= 0.0) {
            return Err(Error::InvalidPartition("height must be positive and l non-negative".into()));
        }
        intervals.sort_by(|a, b| a.center.partial_cmp(&b.center).unwrap());
        let tol = 1e-12 * height;
        for iv in &intervals {
            if !(iv.half_width > 0.0) {
                return Err(Error::InvalidPartition(format!("interval at {} has non-positive half-width", iv.center)));
            }
            if iv.lo() < -tol || iv.hi() > height + tol {
                return Err(Error::InvalidPartition(format!("interval [{}, {}] leaves [0, {height}]", iv.lo(), iv.hi())));
            }
        }
        for w in intervals.windows(2) {
            if w[0].hi() > w[1].lo() + tol {
                return Err(Error::InvalidPartition(format!(
                    "intervals [{}, {}] and [{}, {}] overlap",
                    w[0].lo(),
                    w[0].hi(),
                    w[1].lo(),
                    w[1].hi()
                )));
            }
        }
        Ok(Partition { height, reaction_length, intervals, empty_flow: false })
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// `(sum_{D+} h^3/(h^2+l^2), sum_{D-} h^3/(h^2+l^2))`.
    pub fn weight_sums(&self) -> (f64, f64) {
        let l = self.reaction_length;
        let mut s = (0.0, 0.0);
        for iv in &self.intervals {
            match iv.sign {
                Sign::Plus => s.0 += iv.weight(l),
                Sign::Minus => s.1 += iv.weight(l),
            }
        }
        s
    }

    /// Weight of the forward intervals: the backward share of the total.
    pub fn c_plus(&self) -> f64 {
        let (p, m) = self.weight_sums();
        if p + m > 0.0 {
            m / (p + m)
        } else {
            0.0
        }
    }

    pub fn c_minus(&self) -> f64 {
        let (p, m) = self.weight_sums();
        if p + m > 0.0 {
            p / (p + m)
        } else {
            0.0
        }
    }

    /// Ratio of forward to backward measure.
    pub fn m0(&self) -> f64 {
        let (p, m) = self.weight_sums();
        p / m
    }

    /// `1 / (1 + m0)`.
    pub fn m_plus(&self) -> f64 {
        let (p, m) = self.weight_sums();
        if p + m > 0.0 {
            m / (p + m)
        } else {
            0.0
        }
    }

    /// `1 / (1 + 1/m0)`.
    pub fn m_minus(&self) -> f64 {
        let (p, m) = self.weight_sums();
        if p + m > 0.0 {
            p / (p + m)
        } else {
            0.0
        }
    }

    pub fn m_max(&self) -> f64 {
        self.m_plus().max(self.m_minus())
    }

    /// Unnormalised weights `sum_{D-/+} int G(h_j, y - c_j) / (h_j^2 + l^2) dy`.
    pub fn raw_weights(&self) -> (f64, f64) {
        let (p, m) = self.weight_sums();
        (0.25 * m, 0.25 * p)
    }

    /// Raw weights divided by their maximum, `m+/M` and `m-/M`.
    pub fn relative_raw_weights(&self) -> (f64, f64) {
        let (p, m) = self.raw_weights();
        let top = p.max(m);
        if top > 0.0 {
            (p / top, m / top)
        } else {
            (0.0, 0.0)
        }
    }

    /// Whether `c/16 <= m/M <= c/4` holds for both signs.
    pub fn weight_sandwich_holds(&self) -> bool {
        let (rp, rm) = self.relative_raw_weights();
        let inside = |r: f64, c: f64| c / 16.0 <= r * (1.0 + 1e-12) && r <= c / 4.0 * (1.0 + 1e-12);
        inside(rp, self.c_plus()) && inside(rm, self.c_minus())
    }

    pub fn min_half_width(&self) -> Option<f64> {
        self.intervals.iter().map(|iv| iv.half_width).min_by(|a, b| a.partial_cmp(b).unwrap())
    }

    /// Checks that `u` keeps the declared sign on every interval.
    pub fn validate_against(&self, u: &ShearProfile) -> Result<()> {
        if (u.height - self.height).abs() > 1e-12 * self.height {
            return Err(Error::InvalidPartition("partition and profile heights differ".into()));
        }
        let tol = 1e-9 * u.norm_inf();
        for iv in &self.intervals {
            let n = 256;
            for k in 0..=n {
                let y = iv.lo() + (iv.hi() - iv.lo()) * k as f64 / n as f64;
                let v = u.u(y);
                let bad = match iv.sign {
                    Sign::Plus => v < -tol,
                    Sign::Minus => v > tol,
                };
                if bad {
                    return Err(Error::InvalidPartition(format!(
                        "u({y}) = {v} contradicts the {:?} assignment of [{}, {}]",
                        iv.sign,
                        iv.lo(),
                        iv.hi()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Maximal intervals on which `u` keeps one sign.
pub fn partition_sign_intervals(u: &ShearProfile, reaction_length: f64) -> Result<Partition> {
    let h = u.height;
    let sup = u.norm_inf();
    if sup == 0.0 {
        let mut p = Partition::new(h, reaction_length, Vec::new())?;
        p.empty_flow = true;
        return Ok(p);
    }
    let mut cuts = vec![0.0];
    cuts.extend(u.roots());
    cuts.push(h);
    let tol = 1e-12 * sup;
    let mut intervals: Vec<SignedInterval> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 1e-14 * h {
            continue;
        }
        let n = 64;
        let peak = (0..=n).map(|k| u.u(a + (b - a) * k as f64 / n as f64)).fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if peak.abs() <= tol {
            continue;
        }
        let sign = Sign::of(peak);
        match intervals.last_mut() {
            Some(last) if last.sign == sign && (last.hi() - a).abs() <= 1e-12 * h => {
                *last = SignedInterval::from_ends(last.lo(), b, sign);
            }
            _ => intervals.push(SignedInterval::from_ends(a, b, sign)),
        }
    }
    Partition::new(h, reaction_length, intervals)
}
