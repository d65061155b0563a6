use crate::cir::CirParams;
use crate::error::{Result, VixError};
use crate::roots::{bracket_positive, newton_bisect};

use super::power::{PowerSum, Term};
use super::{log_grid, Branch, ModelClass, ModelDoc, VixModel};

/// f = f1 + f2 with f1 a decreasing power sum and f2 an increasing one.
/// With both parts present f is U-shaped with a single minimiser.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    dec: PowerSum,
    inc: PowerSum,
    y_min: Option<f64>,
}

impl MixtureModel {
    pub fn new(decreasing: &[Term], increasing: &[Term]) -> Result<Self> {
        let dec = PowerSum::decreasing(decreasing)?;
        let inc = PowerSum::increasing(increasing)?;
        if dec.is_empty() && inc.is_empty() {
            return Err(VixError::InvalidParameter("mixture model has no terms".into()));
        }
        let mut m = Self { dec, inc, y_min: None };
        if !m.dec.is_empty() && !m.inc.is_empty() {
            m.check_single_turn()?;
            let (lo, hi) = bracket_positive(|y| m.deriv(y, 1), 1.0)?;
            let y = newton_bisect(|y| m.deriv(y, 1), |y| m.deriv(y, 2), lo, hi, 1e-15)?;
            m.y_min = Some(y);
        }
        Ok(m)
    }

    /// f(y) = a/y + b y.
    pub fn three_halves_one_half(a: f64, b: f64) -> Result<Self> {
        Self::new(&[Term { weight: a, power: 1.0 }], &[Term { weight: b, power: 1.0 }])
    }

    // f' must change sign once, from - to +, on the verification grid.
    fn check_single_turn(&self) -> Result<()> {
        let mut changes = 0;
        let mut prev: Option<bool> = None;
        for y in log_grid(1e-4, 1e3, 1000) {
            let up = self.deriv(y, 1) > 0.0;
            if let Some(p) = prev {
                if p != up {
                    changes += 1;
                    if p {
                        return Err(VixError::AssumptionViolation(
                            "mixture map turns from increasing to decreasing".into(),
                        ));
                    }
                }
            }
            prev = Some(up);
        }
        if changes > 1 {
            return Err(VixError::AssumptionViolation(format!(
                "mixture derivative changes sign {changes} times"
            )));
        }
        Ok(())
    }

    pub fn has_decreasing_part(&self) -> bool {
        !self.dec.is_empty()
    }

    pub fn has_increasing_part(&self) -> bool {
        !self.inc.is_empty()
    }
}

impl VixModel for MixtureModel {
    fn class(&self) -> ModelClass {
        ModelClass::Mixture
    }

    fn deriv(&self, y: f64, k: u32) -> f64 {
        self.dec.deriv(y, k) + self.inc.deriv(y, k)
    }

    fn inverse(&self, _x: f64) -> Result<f64> {
        Err(VixError::Unsupported(
            "a mixture map has no global inverse; use mixture_inverse with a branch".into(),
        ))
    }

    fn mixture_inverse(&self, x: f64, branch: Branch) -> Result<f64> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(VixError::InvalidParameter(format!("VIX level must be > 0, got {x}")));
        }
        let (start, step) = match (self.y_min, branch) {
            (Some(m), Branch::Lower) => (m, 0.5),
            (Some(m), Branch::Upper) => (m, 2.0),
            (None, Branch::Lower) if self.has_decreasing_part() => (1.0, 0.5),
            (None, Branch::Upper) if self.has_increasing_part() => (1.0, 2.0),
            (None, b) => {
                return Err(VixError::Unsupported(format!(
                    "{b:?} branch does not exist for a one-sided mixture"
                )))
            }
        };
        if let Some(m) = self.y_min {
            let fmin = self.f(m);
            if x < fmin {
                return Err(VixError::InvalidParameter(format!(
                    "x = {x} is below the minimum {fmin} of the VIX map"
                )));
            }
            if x == fmin {
                return Ok(m);
            }
        }
        // walk away from the minimiser until f exceeds x
        let mut far = start;
        let mut near = start;
        let mut found = false;
        for _ in 0..2000 {
            far *= step;
            if self.f(far) >= x {
                found = true;
                break;
            }
            near = far;
        }
        if !found {
            return Err(VixError::RootNotFound(format!("no {branch:?} preimage of {x}")));
        }
        if self.y_min.is_none() {
            // one-sided map: the walk may have started on the wrong side of the root
            if self.f(near) >= x {
                let (lo, hi) = bracket_positive(|y| self.f(y) - x, near)?;
                return newton_bisect(|y| self.f(y) - x, |y| self.f_d1(y), lo, hi, 1e-15);
            }
        }
        newton_bisect(|y| self.f(y) - x, |y| self.f_d1(y), near, far, 1e-15)
    }

    fn y_min(&self) -> Option<f64> {
        self.y_min
    }

    fn min_exponent(&self) -> f64 {
        let a = self.dec.min_exponent().unwrap_or(f64::INFINITY);
        let b = self.inc.min_exponent().unwrap_or(f64::INFINITY);
        a.min(b)
    }

    fn check_factor_params(&self, _p: &CirParams) -> Result<()> {
        // no closed-form conditions; the sign structure of h is checked on a grid
        Ok(())
    }

    fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            class: "mixture".into(),
            terms: self.dec.terms(),
            terms_a2: self.inc.terms(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig7_map_values() {
        let m = MixtureModel::three_halves_one_half(0.07, 0.07).unwrap();
        assert!((m.f(1.0) - 0.14).abs() < 1e-15);
        assert!(m.f_d1(1.0).abs() < 1e-15);
        assert!((m.y_min().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_preimages() {
        let m = MixtureModel::three_halves_one_half(0.07, 0.07).unwrap();
        // 0.07 y^2 - 0.15 y + 0.07 = 0
        let disc = (0.15f64 * 0.15 - 4.0 * 0.07 * 0.07).sqrt();
        let lo = (0.15 - disc) / 0.14;
        let hi = (0.15 + disc) / 0.14;
        let a = m.mixture_inverse(0.15, Branch::Lower).unwrap();
        let b = m.mixture_inverse(0.15, Branch::Upper).unwrap();
        assert!((a - lo).abs() < 1e-12 && (b - hi).abs() < 1e-12);
        assert!((a - 0.6868).abs() < 1e-4 && (b - 1.4561).abs() < 1e-4);
    }

    #[test]
    fn tangency_and_below_minimum() {
        let m = MixtureModel::three_halves_one_half(0.07, 0.07).unwrap();
        let fmin = m.f(1.0);
        assert_eq!(m.mixture_inverse(fmin, Branch::Lower).unwrap(), 1.0);
        assert_eq!(m.mixture_inverse(fmin, Branch::Upper).unwrap(), 1.0);
        assert!(m.mixture_inverse(0.1, Branch::Lower).is_err());
    }

    #[test]
    fn one_sided_mixture_inverts_like_its_family() {
        let m = MixtureModel::new(&[Term { weight: 1.0, power: 1.0 }], &[]).unwrap();
        assert!(m.y_min().is_none());
        let y = m.mixture_inverse(0.2, Branch::Lower).unwrap();
        assert!((y - 5.0).abs() < 1e-12);
        assert!(m.mixture_inverse(0.2, Branch::Upper).is_err());
        let m = MixtureModel::new(&[], &[Term { weight: 1.0, power: 1.0 }]).unwrap();
        assert!((m.mixture_inverse(3.0, Branch::Upper).unwrap() - 3.0).abs() < 1e-12);
        assert!((m.mixture_inverse(0.01, Branch::Upper).unwrap() - 0.01).abs() < 1e-14);
    }
}
