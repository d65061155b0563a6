//! Contract terms, the factor-space geometry of payoff and exercise regions,
//! and the waiting-benefit function h.

use serde::{Deserialize, Serialize};

use crate::cir::CirParams;
use crate::error::{Result, VixError};
use crate::models::{log_grid, Branch, DynModel, ModelClass};
use crate::quadrature::QuadratureConfig;
use crate::roots::newton_bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
    pub rate: f64,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn call(strike: f64, maturity: f64, rate: f64) -> Self {
        Self { strike, maturity, rate, kind: OptionKind::Call }
    }

    pub fn put(strike: f64, maturity: f64, rate: f64) -> Self {
        Self { strike, maturity, rate, kind: OptionKind::Put }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(VixError::InvalidParameter(format!("strike must be > 0, got {}", self.strike)));
        }
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(VixError::InvalidParameter(format!(
                "maturity must be > 0, got {}",
                self.maturity
            )));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(VixError::InvalidParameter(format!("rate must be >= 0, got {}", self.rate)));
        }
        Ok(())
    }

    /// +1 for calls, -1 for puts.
    pub fn sign(&self) -> f64 {
        match self.kind {
            OptionKind::Call => 1.0,
            OptionKind::Put => -1.0,
        }
    }
}

/// A VIX map together with the factor dynamics and the integration settings.
#[derive(Debug, Clone)]
pub struct VixMarket {
    pub model: DynModel,
    pub cir: CirParams,
    pub quad: QuadratureConfig,
}

impl VixMarket {
    pub fn new(model: DynModel, cir: CirParams, quad: QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        Ok(Self { model, cir, quad })
    }

    /// Factor level for a state quoted in the model's natural coordinate: the
    /// VIX level for monotone maps, the factor itself for mixtures.
    pub fn to_factor(&self, state: f64) -> Result<f64> {
        if !(state > 0.0 && state.is_finite()) {
            return Err(VixError::InvalidParameter(format!("state must be > 0, got {state}")));
        }
        match self.model.class() {
            ModelClass::Mixture => Ok(state),
            _ => self.model.inverse(state),
        }
    }

    pub fn from_factor(&self, y: f64) -> f64 {
        match self.model.class() {
            ModelClass::Mixture => y,
            _ => self.model.f(y),
        }
    }

    /// Generator of Y applied to f, minus r f.
    pub fn drift_of_f(&self, y: f64, r: f64) -> f64 {
        let p = &self.cir;
        (p.beta - p.alpha * y) * self.model.f_d1(y) + 0.5 * p.kappa * p.kappa * y * self.model.f_d2(y)
            - r * self.model.f(y)
    }
}

/// Thresholds of a contract. Factor-space values carry a `y` or `k` prefix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CriticalLevels {
    /// Sign change of h in VIX units (monotone maps).
    pub x_star: Option<f64>,
    /// Factor levels where a mixture map equals the strike.
    pub k_lower: Option<f64>,
    pub k_upper: Option<f64>,
    /// Sign changes of h on the two payoff regions of a mixture; `None` when h
    /// keeps one sign over the whole side.
    pub y_lower: Option<f64>,
    pub y_upper: Option<f64>,
    pub y_min: Option<f64>,
    /// Terminal exercise boundary in factor space, per side.
    pub terminal_lower: Option<f64>,
    pub terminal_upper: Option<f64>,
}

/// Contract bound to a market. Payoff region in factor space is
/// `(0, pay_lo] U [pay_hi, inf)` with missing sides empty.
#[derive(Debug, Clone)]
pub struct Problem {
    pub market: VixMarket,
    pub option: OptionSpec,
    pub pay_lo: Option<f64>,
    pub pay_hi: Option<f64>,
}

impl Problem {
    pub fn new(market: VixMarket, option: OptionSpec) -> Result<Self> {
        option.validate()?;
        let m = &market.model;
        let k = option.strike;
        let (pay_lo, pay_hi) = match (m.class(), option.kind) {
            (ModelClass::A1, OptionKind::Call) | (ModelClass::A2, OptionKind::Put) => {
                (Some(m.inverse(k)?), None)
            }
            (ModelClass::A2, OptionKind::Call) | (ModelClass::A1, OptionKind::Put) => {
                (None, Some(m.inverse(k)?))
            }
            (ModelClass::Mixture, OptionKind::Put) => {
                return Err(VixError::Unsupported("put options under a mixture map".into()))
            }
            (ModelClass::Mixture, OptionKind::Call) => {
                if let Some(ym) = m.y_min() {
                    let fmin = m.f(ym);
                    if !(fmin < k) {
                        return Err(VixError::InvalidParameter(format!(
                            "strike {k} does not exceed the minimum {fmin} of the VIX map"
                        )));
                    }
                }
                let lo = m.mixture_inverse(k, Branch::Lower).ok();
                let hi = m.mixture_inverse(k, Branch::Upper).ok();
                (lo, hi)
            }
        };
        Ok(Self { market, option, pay_lo, pay_hi })
    }

    pub fn sign(&self) -> f64 {
        self.option.sign()
    }

    pub fn in_payoff_region(&self, y: f64) -> bool {
        self.pay_lo.is_some_and(|b| y <= b) || self.pay_hi.is_some_and(|b| y >= b)
    }

    /// Payoff as a function of the factor.
    pub fn payoff(&self, y: f64) -> f64 {
        (self.sign() * (self.market.model.f(y) - self.option.strike)).max(0.0)
    }

    /// Waiting benefit h in factor space (the call-side function, whatever
    /// the contract kind).
    pub fn h(&self, y: f64) -> f64 {
        self.market.drift_of_f(y, self.option.rate) + self.option.rate * self.option.strike
    }

    /// h'(y) in factor space.
    pub fn h_d1(&self, y: f64) -> f64 {
        let p = &self.market.cir;
        let m = &self.market.model;
        let r = self.option.rate;
        let ks = 0.5 * p.kappa * p.kappa;
        -p.alpha * m.f_d1(y) + (p.beta - p.alpha * y + ks) * m.f_d2(y) + ks * y * m.f_d3(y) - r * m.f_d1(y)
    }

    /// Contract-signed waiting benefit on the payoff region, zero elsewhere.
    pub fn big_h(&self, y: f64) -> f64 {
        if self.in_payoff_region(y) {
            self.sign() * self.h(y)
        } else {
            0.0
        }
    }

    /// h at a level in the contract's state coordinate.
    pub fn h_kernel(&self, level: f64) -> Result<f64> {
        Ok(self.h(self.market.to_factor(level)?))
    }

    /// H at a level in the contract's state coordinate.
    pub fn big_h_kernel(&self, level: f64) -> Result<f64> {
        Ok(self.big_h(self.market.to_factor(level)?))
    }

    /// Thresholds and terminal boundary values, after checking the sign
    /// structure of h on a log grid over [1e-4, 1e3].
    pub fn critical_levels(&self) -> Result<CriticalLevels> {
        let m = &self.market.model;
        m.check_factor_params(&self.market.cir)?;
        let k = self.option.strike;
        let grid = log_grid(1e-4, 1e3, 1000);
        let mut out = CriticalLevels { y_min: m.y_min(), ..Default::default() };
        match m.class() {
            ModelClass::A1 | ModelClass::A2 => {
                // h in VIX units must go from + to - exactly once
                let vals: Vec<f64> = grid
                    .iter()
                    .map(|&x| m.inverse(x).map(|y| self.h(y)))
                    .collect::<Result<_>>()?;
                let changes = sign_changes(&vals);
                if changes.len() != 1 || vals[changes[0]] < 0.0 {
                    return Err(VixError::AssumptionViolation(format!(
                        "h should change sign once from + to - on [1e-4, 1e3], found {} changes",
                        changes.len()
                    )));
                }
                let i = changes[0];
                let (ya, yb) = (m.inverse(grid[i])?, m.inverse(grid[i + 1])?);
                let ys = newton_bisect(|y| self.h(y), |y| self.h_d1(y), ya, yb, 1e-15)?;
                let xs = m.f(ys);
                out.x_star = Some(xs);
                let b = match self.option.kind {
                    OptionKind::Call => k.max(xs),
                    OptionKind::Put => k.min(xs),
                };
                let yb = m.inverse(b)?;
                if self.pay_lo.is_some() {
                    out.terminal_lower = Some(yb);
                } else {
                    out.terminal_upper = Some(yb);
                }
            }
            ModelClass::Mixture => {
                out.k_lower = self.pay_lo;
                out.k_upper = self.pay_hi;
                if let Some(kl) = self.pay_lo {
                    let side = log_grid(1e-4 * kl, kl, 1000);
                    out.y_lower = self.side_root(&side, false)?;
                    out.terminal_lower = Some(out.y_lower.map_or(kl, |v| v.min(kl)));
                }
                if let Some(ku) = self.pay_hi {
                    let side = log_grid(ku, 1e3 * ku, 1000);
                    out.y_upper = self.side_root(&side, true)?;
                    out.terminal_upper = Some(out.y_upper.map_or(ku, |v| v.max(ku)));
                }
                // H >= 0 exactly between the terminal values
                for &y in &grid {
                    let inside = out.terminal_lower.map_or(true, |b| y >= b)
                        && out.terminal_upper.map_or(true, |b| y <= b);
                    let near = [out.terminal_lower, out.terminal_upper]
                        .iter()
                        .flatten()
                        .any(|&b| (y - b).abs() <= 1e-9 * b);
                    if !near && (self.big_h(y) >= 0.0) != inside {
                        return Err(VixError::AssumptionViolation(format!(
                            "sign of H at y = {y} is inconsistent with a two-sided exercise region"
                        )));
                    }
                }
            }
        }
        Ok(out)
    }

    // Sign change of h along one payoff side. `from_positive` is the sign
    // expected next to the strike level (true on the upper side).
    fn side_root(&self, grid: &[f64], from_positive: bool) -> Result<Option<f64>> {
        let vals: Vec<f64> = grid.iter().map(|&y| self.h(y)).collect();
        let ch = sign_changes(&vals);
        let expect_first_negative = !from_positive;
        match ch.len() {
            0 if vals[0] < 0.0 => Ok(None),
            0 => {
                Err(VixError::AssumptionViolation(
                    "h is non-negative over a whole payoff side: no exercise region there".into(),
                ))
            }
            1 => {
                let i = ch[0];
                if (vals[i] < 0.0) != expect_first_negative {
                    return Err(VixError::AssumptionViolation(
                        "h changes sign in the wrong direction on a payoff side".into(),
                    ));
                }
                let r = newton_bisect(|y| self.h(y), |y| self.h_d1(y), grid[i], grid[i + 1], 1e-15)?;
                Ok(Some(r))
            }
            n => Err(VixError::AssumptionViolation(format!(
                "h changes sign {n} times on a payoff side"
            ))),
        }
    }
}

// Indices i with sign(v[i]) != sign(v[i+1]), treating 0 as non-negative.
fn sign_changes(v: &[f64]) -> Vec<usize> {
    v.windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] >= 0.0) != (w[1] >= 0.0))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DecreasingModel, IncreasingModel, MixtureModel};
    use std::sync::Arc;

    fn fig1() -> Problem {
        let mk = VixMarket::new(
            Arc::new(DecreasingModel::three_halves()),
            CirParams::new(2.94, 17.10, 2.05).unwrap(),
            QuadratureConfig::default(),
        )
        .unwrap();
        Problem::new(mk, OptionSpec::call(0.15, 1.0, 0.05)).unwrap()
    }

    #[test]
    fn three_halves_h_closed_form() {
        let p = fig1();
        let h = p.h_kernel(0.1).unwrap();
        assert!((h - 0.167525).abs() < 1e-12, "{h}");
    }

    #[test]
    fn three_halves_x_star() {
        let p = fig1();
        let (a, b, r, k, kap) = (2.94f64, 17.10f64, 0.05f64, 0.15f64, 2.05f64);
        let q = b - kap * kap;
        let xs = (a - r + ((a - r).powi(2) + 4.0 * q * r * k).sqrt()) / (2.0 * q);
        let lv = p.critical_levels().unwrap();
        assert!((lv.x_star.unwrap() - xs).abs() < 1e-12);
        assert!((lv.x_star.unwrap() - 0.22664).abs() < 1e-5);
        assert!(p.h_kernel(xs).unwrap().abs() < 1e-10);
    }

    #[test]
    fn one_half_x_star() {
        let mk = VixMarket::new(
            Arc::new(IncreasingModel::one_half()),
            CirParams::new(3.0, 0.68, 1.0).unwrap(),
            QuadratureConfig::default(),
        )
        .unwrap();
        let p = Problem::new(mk, OptionSpec::call(0.15, 1.0, 0.05)).unwrap();
        let lv = p.critical_levels().unwrap();
        assert!((lv.x_star.unwrap() - 0.6875 / 3.05).abs() < 1e-12);
        assert_eq!(lv.terminal_upper, lv.x_star);
    }

    #[test]
    fn mixture_levels_fig7() {
        let mk = VixMarket::new(
            Arc::new(MixtureModel::three_halves_one_half(0.07, 0.07).unwrap()),
            CirParams::new(1.0, 2.0, 1.0).unwrap(),
            QuadratureConfig::default(),
        )
        .unwrap();
        let p = Problem::new(mk, OptionSpec::call(0.15, 1.0, 0.05)).unwrap();
        let lv = p.critical_levels().unwrap();
        assert!((lv.k_lower.unwrap() - 0.6868).abs() < 1e-4);
        assert!((lv.k_upper.unwrap() - 1.4561).abs() < 1e-4);
        assert!((lv.y_min.unwrap() - 1.0).abs() < 1e-12);
        let (yl, yu) = (lv.y_lower.unwrap(), lv.y_upper.unwrap());
        assert!(p.h(yl).abs() < 1e-10 && p.h(yu).abs() < 1e-10);
        assert!(yl < lv.k_lower.unwrap() && yu > lv.k_upper.unwrap());
    }

    #[test]
    fn mixture_strike_below_minimum_rejected() {
        let mk = VixMarket::new(
            Arc::new(MixtureModel::three_halves_one_half(0.07, 0.07).unwrap()),
            CirParams::new(1.0, 2.0, 1.0).unwrap(),
            QuadratureConfig::default(),
        )
        .unwrap();
        assert!(Problem::new(mk.clone(), OptionSpec::call(0.14, 1.0, 0.05)).is_err());
        assert!(Problem::new(mk, OptionSpec::put(0.2, 1.0, 0.05)).is_err());
    }

    #[test]
    fn nonpositive_strike_rejected() {
        assert!(OptionSpec::call(0.0, 1.0, 0.05).validate().is_err());
        assert!(OptionSpec::call(0.1, 0.0, 0.05).validate().is_err());
    }

    #[test]
    fn put_h_is_negated_call_h() {
        let p = fig1();
        let mk = p.market.clone();
        let put = Problem::new(mk, OptionSpec::put(0.15, 1.0, 0.05)).unwrap();
        let y = p.market.to_factor(0.1).unwrap();
        assert_eq!(put.big_h(y), -p.h(y));
        assert_eq!(p.big_h(y), 0.0);
    }
}
