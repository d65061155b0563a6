//! Expectations against the factor transition density: futures, European
//! prices and the early-exercise kernel.

use crate::cir::ChiSquareLaw;
use crate::contract::{Problem, VixMarket};
use crate::error::{Result, VixError};
use crate::models::ModelClass;
use crate::quadrature::integrate;

impl VixMarket {
    pub fn law(&self, tau: f64, y0: f64) -> Result<ChiSquareLaw> {
        self.cir.transition_law(tau, y0)
    }

    /// Integral of `g * q` over `[a, b]` intersected with the truncation
    /// window of the law.
    pub(crate) fn expect_on<G: Fn(f64) -> f64>(
        &self,
        law: &ChiSquareLaw,
        window: (f64, f64),
        a: f64,
        b: f64,
        g: G,
    ) -> Result<f64> {
        let lo = a.max(window.0);
        let hi = b.min(window.1);
        if !(hi > lo) {
            return Ok(0.0);
        }
        let m = law.mean();
        let (v, _) = integrate(|y| g(y) * law.density(y), lo, hi, &[m], &self.quad)?;
        Ok(v)
    }

    pub(crate) fn window(&self, law: &ChiSquareLaw) -> (f64, f64) {
        law.truncation_bounds(self.quad.tail_mass_cut)
    }

    /// Expectations of `y^(p - extra)` near zero need `p - extra > -df/2`.
    pub(crate) fn check_integrable(&self, extra: f64) -> Result<()> {
        let p = self.model.min_exponent() - extra;
        let half_df = 0.5 * self.cir.df();
        if p > -half_df || self.quad.truncate_divergent {
            Ok(())
        } else {
            Err(VixError::DivergentIntegral(format!(
                "E[Y^{p}] is infinite for a factor with df/2 = {half_df}"
            )))
        }
    }

    /// E[f(Y_tau) | Y_0 = y0].
    pub fn futures_factor(&self, tau: f64, y0: f64) -> Result<f64> {
        if tau == 0.0 {
            return Ok(self.model.f(y0));
        }
        if !(tau > 0.0) {
            return Err(VixError::InvalidParameter(format!("horizon must be >= 0, got {tau}")));
        }
        self.check_integrable(0.0)?;
        let law = self.law(tau, y0)?;
        let w = self.window(&law);
        self.expect_on(&law, w, 0.0, f64::INFINITY, |y| self.model.f(y))
    }

    /// Futures price for maturity `tau` from a state in the model's natural
    /// coordinate.
    pub fn futures_price(&self, tau: f64, state: f64) -> Result<f64> {
        let y0 = self.to_factor(state)?;
        if tau == 0.0 {
            return Ok(match self.model.class() {
                ModelClass::Mixture => self.model.f(y0),
                _ => state,
            });
        }
        self.futures_factor(tau, y0)
    }

    /// Fourth-order expansion of E[f(Y_tau)] around E[Y_tau].
    pub fn futures_taylor(&self, tau: f64, state: f64) -> Result<f64> {
        let y0 = self.to_factor(state)?;
        if tau == 0.0 {
            return Ok(self.model.f(y0));
        }
        let law = self.law(tau, y0)?;
        let m = law.mean();
        let mut v = self.model.f(m);
        let mut fact = 1.0;
        for k in 2..=4u32 {
            fact *= k as f64;
            v += law.central_moment(k)? * self.model.deriv(m, k) / fact;
        }
        Ok(v)
    }
}

impl Problem {
    /// European price at time t from factor level y.
    pub fn european_factor(&self, t: f64, y: f64) -> Result<f64> {
        let tau = self.option.maturity - t;
        if tau < 0.0 || !t.is_finite() {
            return Err(VixError::InvalidParameter(format!("valuation time {t} is after maturity")));
        }
        if tau == 0.0 {
            return Ok(self.payoff(y));
        }
        if self.pay_lo.is_some() {
            self.market.check_integrable(0.0)?;
        }
        let law = self.market.law(tau, y)?;
        let w = self.market.window(&law);
        let k = self.option.strike;
        let s = self.sign();
        let f = |v: f64| s * (self.market.model.f(v) - k);
        let mut total = 0.0;
        if let Some(b) = self.pay_lo {
            total += self.market.expect_on(&law, w, 0.0, b, f)?;
        }
        if let Some(b) = self.pay_hi {
            total += self.market.expect_on(&law, w, b, f64::INFINITY, f)?;
        }
        Ok((-self.option.rate * tau).exp() * total)
    }

    /// European price from a state in the model's natural coordinate.
    pub fn european_price(&self, t: f64, state: f64) -> Result<f64> {
        self.european_factor(t, self.market.to_factor(state)?)
    }

    /// Early-exercise kernel in factor space with exercise region
    /// `(0, lo] U [hi, inf)`. At u = 0 the value is the limit for a state off
    /// the boundary.
    pub fn kernel_factor(&self, u: f64, y: f64, lo: Option<f64>, hi: Option<f64>) -> Result<f64> {
        if u == 0.0 {
            let inside = lo.is_some_and(|b| y <= b) || hi.is_some_and(|b| y >= b);
            return Ok(if inside { -self.big_h(y) } else { 0.0 });
        }
        let lo = match (lo, self.pay_lo) {
            (Some(b), Some(p)) => Some(b.min(p)),
            _ => None,
        };
        let hi = match (hi, self.pay_hi) {
            (Some(b), Some(p)) => Some(b.max(p)),
            _ => None,
        };
        if lo.is_none() && hi.is_none() {
            return Ok(0.0);
        }
        if lo.is_some() {
            self.market.check_integrable(1.0)?;
        }
        let law = self.market.law(u, y)?;
        let w = self.market.window(&law);
        let s = self.sign();
        let g = |v: f64| s * self.h(v);
        let mut total = 0.0;
        if let Some(b) = lo {
            total += self.market.expect_on(&law, w, 0.0, b, g)?;
        }
        if let Some(b) = hi {
            total += self.market.expect_on(&law, w, b, f64::INFINITY, g)?;
        }
        Ok(-(-self.option.rate * u).exp() * total)
    }

    /// Map boundary values given in the natural coordinate to factor-space
    /// region limits `(lo, hi)`.
    pub fn region_from_levels(&self, z: &[f64]) -> Result<(Option<f64>, Option<f64>)> {
        match self.market.model.class() {
            ModelClass::Mixture => match z {
                [a, b] => Ok((Some(*a), Some(*b))),
                _ => Err(VixError::InvalidParameter(
                    "mixture kernel needs a lower and an upper boundary value".into(),
                )),
            },
            _ => match z {
                [a] => {
                    let y = self.market.to_factor(*a)?;
                    Ok(if self.pay_lo.is_some() { (Some(y), None) } else { (None, Some(y)) })
                }
                _ => Err(VixError::InvalidParameter("kernel needs one boundary value".into())),
            },
        }
    }

    /// Early-exercise kernel with the state and boundary in the natural
    /// coordinate.
    pub fn eep_kernel(&self, u: f64, state: f64, z: &[f64]) -> Result<f64> {
        let (lo, hi) = self.region_from_levels(z)?;
        self.kernel_factor(u, self.market.to_factor(state)?, lo, hi)
    }
}
