use serde::{Deserialize, Serialize};

use crate::error::{Result, VixError};

/// One term `weight * y^(+-power)` of a VIX map. The sign of the exponent is
/// fixed by the family the term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub weight: f64,
    pub power: f64,
}

/// Sum of `weight * y^exponent` with the exponents already signed.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PowerSum {
    pub(crate) weights: Vec<f64>,
    pub(crate) exponents: Vec<f64>,
}

impl PowerSum {
    pub(crate) fn decreasing(terms: &[Term]) -> Result<Self> {
        for t in terms {
            if !(t.weight > 0.0 && t.weight.is_finite() && t.power > 0.0 && t.power.is_finite()) {
                return Err(VixError::InvalidParameter(format!(
                    "A1 term needs weight > 0 and power > 0, got {t:?}"
                )));
            }
        }
        Ok(Self {
            weights: terms.iter().map(|t| t.weight).collect(),
            exponents: terms.iter().map(|t| -t.power).collect(),
        })
    }

    pub(crate) fn increasing(terms: &[Term]) -> Result<Self> {
        for t in terms {
            if !(t.weight > 0.0 && t.weight.is_finite() && t.power > 0.0 && t.power <= 1.0) {
                return Err(VixError::InvalidParameter(format!(
                    "A2 term needs weight > 0 and power in (0, 1], got {t:?}"
                )));
            }
        }
        Ok(Self {
            weights: terms.iter().map(|t| t.weight).collect(),
            exponents: terms.iter().map(|t| t.power).collect(),
        })
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub(crate) fn terms(&self) -> Vec<Term> {
        self.weights
            .iter()
            .zip(&self.exponents)
            .map(|(&w, &p)| Term { weight: w, power: p.abs() })
            .collect()
    }

    /// k-th derivative at y (k = 0 is the value).
    pub(crate) fn deriv(&self, y: f64, k: u32) -> f64 {
        let ln_y = y.ln();
        let mut s = 0.0;
        for (&w, &p) in self.weights.iter().zip(&self.exponents) {
            let mut c = w;
            for i in 0..k {
                c *= p - i as f64;
            }
            if c != 0.0 {
                s += c * ((p - k as f64) * ln_y).exp();
            }
        }
        s
    }

    pub(crate) fn min_exponent(&self) -> Option<f64> {
        self.exponents.iter().copied().reduce(f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_inverse() {
        let p = PowerSum::decreasing(&[Term { weight: 1.0, power: 1.0 }]).unwrap();
        assert!((p.deriv(2.0, 0) - 0.5).abs() < 1e-15);
        assert!((p.deriv(2.0, 1) + 0.25).abs() < 1e-15);
        assert!((p.deriv(2.0, 2) - 0.25).abs() < 1e-15);
        assert!((p.deriv(2.0, 3) + 0.375).abs() < 1e-15);
        assert!((p.deriv(2.0, 4) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn linear_term_has_no_curvature() {
        let p = PowerSum::increasing(&[Term { weight: 1.0, power: 1.0 }]).unwrap();
        assert_eq!(p.deriv(3.0, 2), 0.0);
        assert!((p.deriv(3.0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_terms_rejected() {
        assert!(PowerSum::increasing(&[Term { weight: 1.0, power: 1.5 }]).is_err());
        assert!(PowerSum::decreasing(&[Term { weight: -1.0, power: 1.0 }]).is_err());
    }
}
