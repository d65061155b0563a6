//! Square-root (CIR) factor process `dY = (beta - alpha Y) dt - kappa sqrt(Y) dB`.
//!
//! The transition law of `Y_t` given `Y_0 = y0` is a scaled non-central
//! chi-squared distribution: `Y_t = c * X` with `X ~ chi'^2(df, lambda)` where
//!
//! ```text
//! df     = 4 beta / kappa^2
//! c      = kappa^2 (1 - e^{-alpha t}) / (4 alpha)
//! lambda = y0 e^{-alpha t} / c
//! ```

use libm::lgamma as ln_gamma;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VixError};

/// Log-density floor; anything below underflows a double.
const LOG_UNDERFLOW: f64 = -745.0;

/// Coefficients of the factor process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirParams {
    /// Mean-reversion speed (1/year).
    pub alpha: f64,
    /// Drift level (1/year).
    pub beta: f64,
    /// Diffusion scale (1/sqrt(year)).
    pub kappa: f64,
}

impl CirParams {
    /// Validated constructor; rejects parameters violating the Feller condition.
    pub fn new(alpha: f64, beta: f64, kappa: f64) -> Result<Self> {
        let p = Self::new_relaxed(alpha, beta, kappa)?;
        if !p.feller_holds() {
            return Err(VixError::FellerViolation {
                beta,
                half_kappa_sq: 0.5 * kappa * kappa,
            });
        }
        Ok(p)
    }

    /// Positivity checks only. The transition law is still a valid scaled
    /// non-central chi-squared law when `beta < kappa^2/2`, but the process
    /// can touch zero. Used for parameter sets that are published outside the
    /// Feller region.
    pub fn new_relaxed(alpha: f64, beta: f64, kappa: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta), ("kappa", kappa)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(VixError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { alpha, beta, kappa })
    }

    pub fn feller_holds(&self) -> bool {
        self.beta >= 0.5 * self.kappa * self.kappa
    }

    /// Degrees of freedom `4 beta / kappa^2` of the transition law.
    pub fn df(&self) -> f64 {
        4.0 * self.beta / (self.kappa * self.kappa)
    }

    /// `E[Y_t | Y_0 = y0]`.
    pub fn mean(&self, t: f64, y0: f64) -> f64 {
        let theta = self.beta / self.alpha;
        theta + (y0 - theta) * (-self.alpha * t).exp()
    }

    /// Transition law of `Y_t` given `Y_0 = y0`.
    pub fn transition_law(&self, t: f64, y0: f64) -> Result<ChiSquareLaw> {
        if !(t.is_finite() && t > 0.0) {
            return Err(VixError::InvalidParameter(format!(
                "transition horizon must be positive, got {t}"
            )));
        }
        if !(y0.is_finite() && y0 > 0.0) {
            return Err(VixError::InvalidParameter(format!(
                "factor level must be positive, got {y0}"
            )));
        }
        let at = self.alpha * t;
        if at > 700.0 {
            return Err(VixError::NonFinite(format!(
                "alpha*t = {at} underflows exp(-alpha t)"
            )));
        }
        let decay = (-at).exp();
        let one_minus = -(-at).exp_m1();
        let k2 = self.kappa * self.kappa;
        let scale = k2 * one_minus / (4.0 * self.alpha);
        let noncentrality = y0 * decay / scale;
        if !(scale > 0.0 && scale.is_finite() && noncentrality.is_finite()) {
            return Err(VixError::NonFinite(format!(
                "transition law degenerate for t = {t}, y0 = {y0}"
            )));
        }
        Ok(ChiSquareLaw {
            df: self.df(),
            noncentrality,
            scale,
        })
    }
}

/// Scaled non-central chi-squared law `scale * chi'^2(df, noncentrality)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareLaw {
    pub df: f64,
    pub noncentrality: f64,
    pub scale: f64,
}

impl ChiSquareLaw {
    pub fn mean(&self) -> f64 {
        self.scale * (self.df + self.noncentrality)
    }

    pub fn variance(&self) -> f64 {
        self.scale * self.scale * 2.0 * (self.df + 2.0 * self.noncentrality)
    }

    /// Density of the scaled law at `y`.
    pub fn density(&self, y: f64) -> f64 {
        if !(y > 0.0) || !y.is_finite() {
            return 0.0;
        }
        noncentral_chi2_pdf(y / self.scale, self.df, self.noncentrality) / self.scale
    }

    /// Central moment `E[(Y - EY)^k]` for `k` in 1..=4.
    pub fn central_moment(&self, k: u32) -> Result<f64> {
        // cumulants of chi'^2: 2^{n-1} (n-1)! (df + n lambda)
        let (d, l, c) = (self.df, self.noncentrality, self.scale);
        let kappa2 = 2.0 * (d + 2.0 * l);
        let kappa3 = 8.0 * (d + 3.0 * l);
        let kappa4 = 48.0 * (d + 4.0 * l);
        match k {
            1 => Ok(0.0),
            2 => Ok(c.powi(2) * kappa2),
            3 => Ok(c.powi(3) * kappa3),
            4 => Ok(c.powi(4) * (kappa4 + 3.0 * kappa2 * kappa2)),
            _ => Err(VixError::Unsupported(format!(
                "central moment of order {k} (supported: 1..=4)"
            ))),
        }
    }

    /// Integration window `[lo, hi]` outside of which each tail carries at
    /// most `tail_mass / 2` probability. Uses closed-form Chernoff bounds, so
    /// the window is conservative.
    pub fn truncation_bounds(&self, tail_mass: f64) -> (f64, f64) {
        let target = (0.5 * tail_mass).ln();
        let k = self.df;
        let lam = self.noncentrality;
        let mean = k + lam;

        // upper tail: expand then bisect on log-bound(x) = target
        let mut a = mean;
        let mut b = mean + 10.0 * (2.0 * (k + 2.0 * lam)).sqrt() + 10.0;
        while chernoff_log_bound(b, k, lam) > target {
            a = b;
            b = mean + 2.0 * (b - mean);
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if chernoff_log_bound(m, k, lam) > target {
                a = m;
            } else {
                b = m;
            }
        }
        let hi = b;

        // lower tail: bisect in log-space on (tiny, mean)
        let mut la = (1e-300f64).ln();
        let mut lb = mean.ln();
        if chernoff_log_bound(la.exp(), k, lam) > target {
            return (0.0, hi * self.scale);
        }
        for _ in 0..80 {
            let m = 0.5 * (la + lb);
            if chernoff_log_bound(m.exp(), k, lam) > target {
                lb = m;
            } else {
                la = m;
            }
        }
        (la.exp() * self.scale, hi * self.scale)
    }

    /// One exact draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = if self.noncentrality > 0.0 {
            Poisson::new(0.5 * self.noncentrality)
                .map(|p| p.sample(rng))
                .unwrap_or(0.0)
        } else {
            0.0
        };
        let shape = 0.5 * self.df + n;
        // shape > 0 and scale 2 are always valid
        let g = Gamma::new(shape, 2.0).expect("gamma parameters are positive");
        self.scale * g.sample(rng)
    }

    /// `n` i.i.d. draws, reproducible for a given seed.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Log of the Chernoff bound on `P(X > x)` for `x` above the mean, or on
/// `P(X < x)` for `x` below it, `X ~ chi'^2(k, lam)`.
fn chernoff_log_bound(x: f64, k: f64, lam: f64) -> f64 {
    // optimal tilt satisfies lam v^2 + k v - x = 0 with v = 1 / (1 - 2 s)
    // positive root in a form that keeps precision for tiny x
    let v = 2.0 * x / (k + (k * k + 4.0 * lam * x).sqrt());
    let s = 0.5 * (1.0 - 1.0 / v);
    -s * x + lam * s * v + 0.5 * k * v.ln()
}

/// Density of `chi'^2(k, lam)` at `x > 0` as a Poisson-weighted sum of central
/// chi-squared densities. Summation starts at the dominant term and walks both
/// directions until terms fall below 1e-17 of the running total.
pub(crate) fn noncentral_chi2_pdf(x: f64, k: f64, lam: f64) -> f64 {
    let a = 0.5 * k;
    if lam <= 0.0 {
        let lp = (a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a);
        return if lp < LOG_UNDERFLOW { 0.0 } else { lp.exp() };
    }
    let big_a = 0.25 * lam * x;
    // dominant index: (j + 1)(a + j) = lam x / 4
    let disc = (a + 1.0).powi(2) - 4.0 * (a - big_a);
    let jstar = if disc > 0.0 {
        (0.5 * (-(a + 1.0) + disc.sqrt())).max(0.0).floor()
    } else {
        0.0
    };
    let half_lam = 0.5 * lam;
    let log_term = |j: f64| {
        -half_lam + j * half_lam.ln() - ln_gamma(j + 1.0) + (a + j - 1.0) * x.ln()
            - 0.5 * x
            - (a + j) * std::f64::consts::LN_2
            - ln_gamma(a + j)
    };
    let log_peak = log_term(jstar);
    if log_peak < LOG_UNDERFLOW - 40.0 {
        return 0.0;
    }

    let mut sum = 1.0;
    // upward
    let mut term = 1.0;
    let mut j = jstar;
    loop {
        term *= big_a / ((j + 1.0) * (a + j));
        sum += term;
        j += 1.0;
        if term < 1e-17 * sum {
            break;
        }
    }
    // downward
    let mut term = 1.0;
    let mut j = jstar;
    while j >= 1.0 {
        term *= j * (a + j - 1.0) / big_a;
        sum += term;
        j -= 1.0;
        if term < 1e-17 * sum {
            break;
        }
    }
    let lp = log_peak + sum.ln();
    if lp < LOG_UNDERFLOW {
        0.0
    } else {
        lp.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feller_violation_rejected() {
        assert!(matches!(
            CirParams::new(0.2, 0.1, 0.7),
            Err(VixError::FellerViolation { .. })
        ));
        assert!(CirParams::new_relaxed(0.2, 0.1, 0.7).is_ok());
        assert!(CirParams::new(-1.0, 2.0, 1.0).is_err());
        assert!(CirParams::new(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn df_exact() {
        let p = CirParams::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(p.transition_law(0.5, 1.0).unwrap().df, 8.0);
    }

    #[test]
    fn noncentrality_vanishes_for_long_horizon() {
        let p = CirParams::new(1.0, 2.0, 1.0).unwrap();
        let l1 = p.transition_law(1.0, 1.0).unwrap().noncentrality;
        let l2 = p.transition_law(20.0, 1.0).unwrap().noncentrality;
        assert!(l2 < 1e-7 * l1);
    }

    #[test]
    fn transition_law_rejects_bad_input() {
        let p = CirParams::new(1.0, 2.0, 1.0).unwrap();
        assert!(p.transition_law(0.0, 1.0).is_err());
        assert!(p.transition_law(1.0, -1.0).is_err());
        assert!(p.transition_law(1000.0, 1.0).is_err());
    }

    #[test]
    fn law_mean_matches_cir_mean() {
        let p = CirParams::new(2.94, 17.10, 2.05).unwrap();
        for &(t, y0) in &[(1e-4, 5.0), (0.3, 5.0), (1.0, 0.4), (10.0, 12.0)] {
            let law = p.transition_law(t, y0).unwrap();
            let m = p.mean(t, y0);
            assert!((law.mean() - m).abs() <= 1e-12 * m, "{t} {y0}");
        }
    }

    #[test]
    fn central_moments_low_orders() {
        let law = ChiSquareLaw { df: 8.0, noncentrality: 2.0, scale: 0.1 };
        assert_eq!(law.central_moment(1).unwrap(), 0.0);
        assert!((law.central_moment(2).unwrap() - 0.01 * 2.0 * 12.0).abs() < 1e-15);
        assert!((law.central_moment(3).unwrap() - 0.001 * 8.0 * 14.0).abs() < 1e-15);
        assert!(law.central_moment(5).is_err());
    }

    #[test]
    fn density_zero_outside_support_and_in_deep_tail() {
        let law = ChiSquareLaw { df: 8.0, noncentrality: 2.0, scale: 0.1 };
        assert_eq!(law.density(0.0), 0.0);
        assert_eq!(law.density(-1.0), 0.0);
        assert_eq!(law.density(1e6), 0.0);
        assert!(law.density(1e-300).is_finite());
    }

    #[test]
    fn truncation_bounds_bracket_mass() {
        let law = ChiSquareLaw { df: 16.3, noncentrality: 1900.0, scale: 1e-3 };
        let (lo, hi) = law.truncation_bounds(1e-12);
        assert!(lo > 0.0 && lo < law.mean() && hi > law.mean());
        let sd = law.variance().sqrt();
        assert!((law.mean() - lo) > 6.0 * sd && (hi - law.mean()) > 6.0 * sd);
        assert!((hi - law.mean()) < 20.0 * sd);
    }

    #[test]
    fn samples_positive_and_reproducible() {
        let law = ChiSquareLaw { df: 0.816, noncentrality: 37.3, scale: 0.02 };
        let a = law.sample(7, 1000);
        let b = law.sample(7, 1000);
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v > 0.0));
    }
}
