//! Reaction nonlinearities and the constants the bounds depend on.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Shapes of the general concave family. Both satisfy `f(0) = f(1) = 0`, `f'(0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum KppShape {
    /// `T (1 - T) (1 + a T)`; concave on `[0, 1]` exactly when `-1/2 < a < 1`.
    Cubic { a: f64 },
    /// `sin(pi T) / pi`.
    Sine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReactionKind {
    KppQuadratic,
    KppGeneral(KppShape),
    /// `(1 - T) exp(-activation / T)`.
    Arrhenius { activation: f64 },
    /// `(T - threshold)(1 - T) / (1 - threshold)^2` on `(threshold, 1)`, zero elsewhere.
    Ignition { threshold: f64 },
    /// No reaction. Used to verify transport in isolation.
    Inert,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionModel {
    #[serde(flatten)]
    pub kind: ReactionKind,
    pub v0: f64,
    pub kappa: f64,
}

const RANGE_TOL: f64 = 1e-10;

impl ReactionModel {
    pub fn new(kind: ReactionKind, v0: f64, kappa: f64) -> Result<Self> {
        let m = ReactionModel { kind, v0, kappa };
        m.validate()?;
        Ok(m)
    }

    pub fn kpp(v0: f64, kappa: f64) -> Result<Self> {
        Self::new(ReactionKind::KppQuadratic, v0, kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0 > 0.0 && self.v0.is_finite()) || !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(invalid(format!("v0 and kappa must be positive (v0={}, kappa={})", self.v0, self.kappa)));
        }
        match self.kind {
            ReactionKind::KppGeneral(KppShape::Cubic { a }) if !(a > -0.5 && a < 1.0) => {
                Err(invalid(format!("cubic KPP parameter a={a} outside (-1/2, 1)")))
            }
            ReactionKind::Arrhenius { activation } if !(activation > 0.0) => {
                Err(invalid("Arrhenius activation must be positive"))
            }
            ReactionKind::Ignition { threshold } if !(threshold > 0.0 && threshold < 1.0) => {
                Err(invalid("ignition threshold must lie in (0, 1)"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ReactionKind::KppQuadratic => "kpp_quadratic",
            ReactionKind::KppGeneral(_) => "kpp_general",
            ReactionKind::Arrhenius { .. } => "arrhenius",
            ReactionKind::Ignition { .. } => "ignition",
            ReactionKind::Inert => "inert",
        }
    }

    pub fn is_kpp(&self) -> bool {
        matches!(self.kind, ReactionKind::KppQuadratic | ReactionKind::KppGeneral(_))
    }

    pub fn require_kpp(&self) -> Result<()> {
        if self.is_kpp() {
            Ok(())
        } else {
            Err(Error::NotKpp(self.name().into()))
        }
    }

    /// Coefficient in front of `f` in the PDE, `v0^2 / (4 kappa)`.
    pub fn rate(&self) -> f64 {
        self.v0 * self.v0 / (4.0 * self.kappa)
    }

    /// Laminar front width `kappa / v0`.
    pub fn length(&self) -> f64 {
        self.kappa / self.v0
    }

    /// Laminar burning time `kappa / v0^2`.
    pub fn time(&self) -> f64 {
        self.kappa / (self.v0 * self.v0)
    }

    /// `f(T)` without range checks; the solver's hot loop uses this.
    #[inline]
    pub fn f_raw(&self, t: f64) -> f64 {
        match self.kind {
            ReactionKind::KppQuadratic => t * (1.0 - t),
            ReactionKind::KppGeneral(KppShape::Cubic { a }) => t * (1.0 - t) * (1.0 + a * t),
            ReactionKind::KppGeneral(KppShape::Sine) => (std::f64::consts::PI * t).sin() / std::f64::consts::PI,
            ReactionKind::Arrhenius { activation } => {
                if t <= 0.0 {
                    0.0
                } else {
                    (1.0 - t) * (-activation / t).exp()
                }
            }
            ReactionKind::Ignition { threshold } => {
                if t <= threshold || t >= 1.0 {
                    0.0
                } else {
                    (t - threshold) * (1.0 - t) / ((1.0 - threshold) * (1.0 - threshold))
                }
            }
            ReactionKind::Inert => 0.0,
        }
    }

    /// `f(T)` with the range contract: values within 1e-10 of `[0, 1]` are clamped.
    pub fn evaluate_f(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < -RANGE_TOL || t > 1.0 + RANGE_TOL {
            return Err(Error::OutOfRange(t));
        }
        if !(0.0..=1.0).contains(&t) {
            log::warn!("temperature {t:e} clamped into [0, 1]");
        }
        Ok(self.f_raw(t.clamp(0.0, 1.0)))
    }

    /// Analytic `f'` where available, otherwise a centred difference.
    pub fn df(&self, t: f64) -> f64 {
        use std::f64::consts::PI;
        match self.kind {
            ReactionKind::KppQuadratic => 1.0 - 2.0 * t,
            ReactionKind::KppGeneral(KppShape::Cubic { a }) => 1.0 + 2.0 * (a - 1.0) * t - 3.0 * a * t * t,
            ReactionKind::KppGeneral(KppShape::Sine) => (PI * t).cos(),
            _ => {
                let h = 1e-6;
                let (lo, hi) = ((t - h).max(0.0), (t + h).min(1.0));
                (self.f_raw(hi) - self.f_raw(lo)) / (hi - lo)
            }
        }
    }

    /// Analytic `f''` for the KPP kinds, a second difference otherwise.
    pub fn d2f(&self, t: f64) -> f64 {
        use std::f64::consts::PI;
        match self.kind {
            ReactionKind::KppQuadratic => -2.0,
            ReactionKind::KppGeneral(KppShape::Cubic { a }) => 2.0 * (a - 1.0) - 6.0 * a * t,
            ReactionKind::KppGeneral(KppShape::Sine) => -PI * (PI * t).sin(),
            _ => {
                let h = 1e-4;
                let c = t.clamp(h, 1.0 - h);
                (self.f_raw(c + h) - 2.0 * self.f_raw(c) + self.f_raw(c - h)) / (h * h)
            }
        }
    }

    /// Lipschitz constant of `f` on `[0, 1]`, by sampling.
    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            ReactionKind::KppQuadratic => 1.0,
            ReactionKind::Inert => 0.0,
            _ => {
                let n = 10_000;
                (0..=n).map(|k| self.df(k as f64 / n as f64).abs()).fold(0.0, f64::max)
            }
        }
    }

    /// `(alpha, beta) = (-inf f', -sup f'')` over `[0, 1]`, sampled at 10^4 points
    /// plus the endpoints.
    pub fn reaction_constants(&self) -> Result<(f64, f64)> {
        self.require_kpp()?;
        if let ReactionKind::KppQuadratic = self.kind {
            return Ok((1.0, 2.0));
        }
        let n = 10_000;
        let mut min_d1 = f64::INFINITY;
        let mut max_d2 = f64::NEG_INFINITY;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            min_d1 = min_d1.min(self.df(t));
            max_d2 = max_d2.max(self.d2f(t));
        }
        let (alpha, beta) = (-min_d1, -max_d2);
        if !(beta > 1e-12) {
            return Err(Error::NotConcave(beta));
        }
        Ok((alpha, beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn model(kind: ReactionKind) -> ReactionModel {
        ReactionModel::new(kind, 1.0, 1.0).unwrap()
    }

    #[test]
    fn quadratic_values() {
        let m = model(ReactionKind::KppQuadratic);
        assert_eq!(m.evaluate_f(0.0).unwrap(), 0.0);
        assert_eq!(m.evaluate_f(0.5).unwrap(), 0.25);
        assert_eq!(m.evaluate_f(1.0).unwrap(), 0.0);
        assert_eq!(m.reaction_constants().unwrap(), (1.0, 2.0));
    }

    #[test]
    fn range_contract() {
        let m = model(ReactionKind::KppQuadratic);
        assert_eq!(m.evaluate_f(-5e-11).unwrap(), 0.0);
        assert_eq!(m.evaluate_f(1.0 + 5e-11).unwrap(), 0.0);
        assert!(m.evaluate_f(-1e-9).is_err());
        assert!(m.evaluate_f(1.01).is_err());
        assert!(m.evaluate_f(f64::NAN).is_err());
    }

    #[test]
    fn ignition_below_threshold_is_zero() {
        let m = model(ReactionKind::Ignition { threshold: 0.3 });
        assert_eq!(m.evaluate_f(0.2).unwrap(), 0.0);
        assert!(m.evaluate_f(0.6).unwrap() > 0.0);
        assert!(matches!(m.reaction_constants(), Err(Error::NotKpp(_))));
    }

    #[test]
    fn sampled_constants_match_analytic_for_cubic() {
        // f = T(1-T)(1+aT): f' = 1 + 2(a-1)T - 3aT^2, f'' = 2(a-1) - 6aT.
        let a = 0.4;
        let m = model(ReactionKind::KppGeneral(KppShape::Cubic { a }));
        let (alpha, beta) = m.reaction_constants().unwrap();
        let fp1 = 1.0 + 2.0 * (a - 1.0) - 3.0 * a;
        assert!((alpha + fp1).abs() < 1e-12);
        assert!((beta - (2.0 * (1.0 - a))).abs() < 1e-12);
        assert!((m.df(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sine_shape_is_rejected_as_not_strictly_concave() {
        // f'' = -pi sin(pi T) vanishes at both endpoints, so -sup f'' = 0.
        let m = model(ReactionKind::KppGeneral(KppShape::Sine));
        assert!((m.df(0.0) - 1.0).abs() < 1e-15);
        assert!((m.df(1.0) + 1.0).abs() < 1e-15);
        assert!((m.d2f(0.5) + PI).abs() < 1e-12);
        assert!(matches!(m.reaction_constants(), Err(Error::NotConcave(_))));
    }

    #[test]
    fn normalization_gives_laminar_speed() {
        let m = ReactionModel::kpp(2.0, 0.5).unwrap();
        let minimal_speed = 2.0 * (m.kappa * m.rate() * m.df(0.0)).sqrt();
        assert!((minimal_speed - m.v0).abs() < 1e-14);
        assert_eq!(m.length(), 0.25);
        assert_eq!(m.time(), 0.125);
    }

    #[test]
    fn lipschitz_bounds_reaction() {
        for kind in [
            ReactionKind::KppQuadratic,
            ReactionKind::Arrhenius { activation: 2.0 },
            ReactionKind::Ignition { threshold: 0.3 },
        ] {
            let m = model(kind);
            let lip = m.lipschitz();
            for k in 0..=100 {
                let t = k as f64 / 100.0;
                assert!(m.f_raw(t) <= lip * (1.0 - t) + 1e-9, "{kind:?} at {t}");
                assert!(m.f_raw(t) >= 0.0);
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(ReactionModel::new(ReactionKind::KppQuadratic, 0.0, 1.0).is_err());
        assert!(ReactionModel::new(ReactionKind::KppGeneral(KppShape::Cubic { a: 1.5 }), 1.0, 1.0).is_err());
        assert!(ReactionModel::new(ReactionKind::Ignition { threshold: 1.0 }, 1.0, 1.0).is_err());
    }
}
