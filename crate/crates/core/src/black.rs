//! Black (1976) futures-option formula, its inversion, and implied-vol skews
//! from model European prices.

use std::fmt::Write as _;

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::american::sig12;
use crate::contract::{OptionSpec, Problem, VixMarket};
use crate::error::{Result, VixError};

const VOL_LO: f64 = 1e-6;
const VOL_HI: f64 = 10.0;

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn d1(f: f64, k: f64, t: f64, sigma: f64) -> f64 {
    let sd = sigma * t.sqrt();
    ((f / k).ln() + 0.5 * sd * sd) / sd
}

pub fn black_call(f: f64, k: f64, t: f64, r: f64, sigma: f64) -> f64 {
    let sd = sigma * t.sqrt();
    let d1 = d1(f, k, t, sigma);
    let df = (-r * t).exp();
    if f > k {
        // in the money: intrinsic plus the put, so the time value is not lost
        // to cancellation
        df * ((f - k) + (k * norm_cdf(sd - d1) - f * norm_cdf(-d1)))
    } else {
        df * (f * norm_cdf(d1) - k * norm_cdf(d1 - sd))
    }
}

pub fn black_vega(f: f64, k: f64, t: f64, r: f64, sigma: f64) -> f64 {
    (-r * t).exp() * f * norm_pdf(d1(f, k, t, sigma)) * t.sqrt()
}

/// Invert `black_call` in sigma. Newton steps are kept inside a shrinking
/// bracket on [1e-6, 10]; bisection takes over when a step leaves it.
pub fn implied_vol(price: f64, f: f64, k: f64, t: f64, r: f64) -> Result<f64> {
    if !(f > 0.0 && k > 0.0 && t > 0.0 && r.is_finite() && price.is_finite()) {
        return Err(VixError::InvalidParameter(format!(
            "implied vol needs F, K, T > 0 (got F={f}, K={k}, T={t})"
        )));
    }
    let df = (-r * t).exp();
    let lower = df * (f - k).max(0.0);
    let upper = df * f;
    let out_of_band = || VixError::InversionDomain { price, lower, upper };
    if !(price > lower && price < upper) {
        return Err(out_of_band());
    }
    let (mut a, mut b) = (VOL_LO, VOL_HI);
    let (pa, pb) = (black_call(f, k, t, r, a), black_call(f, k, t, r, b));
    if price < pa || price > pb {
        return Err(out_of_band());
    }
    // start near the at-the-money approximation
    let mut s = ((2.0 * std::f64::consts::PI / t).sqrt() * price / (df * f)).clamp(0.05, 2.0);
    for _ in 0..200 {
        let diff = black_call(f, k, t, r, s) - price;
        if diff.abs() <= 1e-14 * upper.max(1e-300) {
            return Ok(s);
        }
        if diff > 0.0 {
            b = s;
        } else {
            a = s;
        }
        let v = black_vega(f, k, t, r, s);
        let newton = s - diff / v;
        s = if v > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if b - a <= 1e-15 * b {
            return Ok(s);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewPoint {
    /// log(K / F_T)
    pub moneyness: f64,
    pub strike: f64,
    pub implied_vol: Option<f64>,
    /// Why the price or the inversion failed at this point.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewCurve {
    pub maturity: f64,
    pub futures: f64,
    pub points: Vec<SkewPoint>,
}

impl SkewCurve {
    /// Least-squares slope of implied vol against moneyness over the
    /// successful points.
    pub fn slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter_map(|p| p.implied_vol.map(|v| (p.moneyness, v)))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("moneyness,implied_vol\n");
        for p in &self.points {
            let v = p.implied_vol.map_or(String::new(), sig12);
            let _ = writeln!(s, "{},{v}", sig12(p.moneyness));
        }
        s
    }
}

/// Implied vols of model call prices at strikes `F_T * exp(m)`.
pub fn skew_curve(market: &VixMarket, maturity: f64, rate: f64, state: f64, moneyness: &[f64]) -> Result<SkewCurve> {
    let fut = market.futures_price(maturity, state)?;
    let points = moneyness
        .iter()
        .map(|&m| {
            let strike = fut * m.exp();
            let vol = Problem::new(market.clone(), OptionSpec::call(strike, maturity, rate))
                .and_then(|p| p.european_price(0.0, state))
                .and_then(|c| implied_vol(c, fut, strike, maturity, rate));
            match vol {
                Ok(v) => SkewPoint { moneyness: m, strike, implied_vol: Some(v), error: None },
                Err(e) => SkewPoint { moneyness: m, strike, implied_vol: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(SkewCurve { maturity, futures: fut, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atm_value() {
        let p = black_call(1.0, 1.0, 1.0, 0.0, 0.2);
        let want = 0.079_655_674_554_057_9; // Phi(0.1) - Phi(-0.1)
        assert!((p - want).abs() < 1e-14, "{p}");
    }

    #[test]
    fn zero_vol_limit() {
        let p = black_call(1.2, 1.0, 0.5, 0.05, 1e-9);
        assert!((p - (-0.025f64).exp() * 0.2).abs() < 1e-14);
        assert!(black_call(0.8, 1.0, 0.5, 0.05, 1e-9) < 1e-300);
    }

    #[test]
    fn roundtrip() {
        let c = black_call(0.2, 0.25, 0.25, 0.03, 0.8);
        assert!((implied_vol(c, 0.2, 0.25, 0.25, 0.03).unwrap() - 0.8).abs() < 1e-8);
    }

    #[test]
    fn band_edges_rejected() {
        let df = (-0.03f64 * 0.25).exp();
        let lo = df * (0.25 - 0.2);
        assert!(matches!(implied_vol(lo, 0.25, 0.2, 0.25, 0.03), Err(VixError::InversionDomain { .. })));
        assert!(implied_vol(df * 0.25, 0.25, 0.2, 0.25, 0.03).is_err());
    }

    #[test]
    fn cdf_tails() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        let t = norm_cdf(-10.0);
        assert!((t / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12, "{t}");
    }
}
