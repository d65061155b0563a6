use serde::{Deserialize, Serialize};

use crate::contract::Problem;
use crate::error::{Result, VixError};
use crate::models::ModelClass;

use super::boundary::{Boundary, Side};

// 5-point Gauss-Legendre on [-1, 1]
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Continue,
    Exercise,
}

/// Continuation-side derivative of the price at the boundary minus the
/// payoff slope there. Both are extrapolated from points strictly inside the
/// continuation region, so `value_gap` (continuation limit minus payoff)
/// does not leak into the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothFitGap {
    pub side: Side,
    pub boundary: f64,
    pub slope: f64,
    pub derivative: f64,
    pub gap: f64,
    pub value_gap: f64,
}

impl Problem {
    fn check_boundary(&self, b: &Boundary) -> Result<()> {
        if b.class != self.market.model.class() || (b.maturity() - self.option.maturity).abs() > 1e-12 {
            return Err(VixError::InvalidParameter(
                "boundary was solved for a different model or maturity".into(),
            ));
        }
        Ok(())
    }

    /// Premium integral over elapsed time at factor level y.
    pub fn premium_factor(&self, b: &Boundary, t: f64, y: f64) -> Result<f64> {
        let big_t = self.option.maturity;
        let tau = big_t - t;
        if tau <= 0.0 {
            return Ok(0.0);
        }
        let mut cuts: Vec<f64> = b.grid.iter().map(|&g| g - t).filter(|&u| u > 1e-14 * big_t).collect();
        if cuts.is_empty() {
            cuts.push(tau);
        }
        let kernel = |u: f64| self.kernel_factor(u, y, b.lower_at(t + u), b.upper_at(t + u));
        let mut total = 0.0;
        // first panel in s = sqrt(u) to absorb the square-root onset
        let s1 = cuts[0].sqrt();
        for (x, w) in GL_X.iter().zip(GL_W) {
            let s = 0.5 * s1 * (x + 1.0);
            total += w * 0.5 * s1 * 2.0 * s * kernel(s * s)?;
        }
        for pair in cuts.windows(2) {
            let (a, c) = (pair[0], pair[1]);
            let half = 0.5 * (c - a);
            for (x, w) in GL_X.iter().zip(GL_W) {
                total += w * half * kernel(a + half * (x + 1.0))?;
            }
        }
        Ok(total)
    }

    pub fn american_factor(&self, b: &Boundary, t: f64, y: f64) -> Result<f64> {
        self.check_boundary(b)?;
        if !(t >= 0.0 && t <= self.option.maturity) {
            return Err(VixError::InvalidParameter(format!("valuation time {t} outside [0, T]")));
        }
        if t == self.option.maturity || b.exercise_factor(t, y) {
            return Ok(self.payoff(y));
        }
        Ok(self.european_factor(t, y)? + self.premium_factor(b, t, y)?)
    }

    /// American price from a state in the model's natural coordinate.
    pub fn american_price(&self, b: &Boundary, t: f64, state: f64) -> Result<f64> {
        self.american_factor(b, t, self.market.to_factor(state)?)
    }

    pub fn exercise_region_query(&self, b: &Boundary, t: f64, state: f64) -> Result<Region> {
        self.check_boundary(b)?;
        let y = self.market.to_factor(state)?;
        Ok(if b.exercise_factor(t, y) { Region::Exercise } else { Region::Continue })
    }

    /// Smooth-fit gaps at time t < T with step `rel_step * b(t)`, one per side.
    /// Monotone maps are differenced in VIX units, mixtures in factor units.
    pub fn smooth_fit_check(&self, b: &Boundary, t: f64, rel_step: f64) -> Result<Vec<SmoothFitGap>> {
        self.check_boundary(b)?;
        if !(t < self.option.maturity) {
            return Err(VixError::InvalidParameter("smooth fit needs t < T".into()));
        }
        let mut out = Vec::new();
        let model = &self.market.model;
        for side in [Side::Lower, Side::Upper] {
            let yb = match side {
                Side::Lower => b.lower_at(t),
                Side::Upper => b.upper_at(t),
            };
            let Some(yb) = yb else { continue };
            let (level, slope, cont_dir) = match model.class() {
                ModelClass::Mixture => {
                    // continuation lies between the two boundaries
                    let dir = if side == Side::Lower { 1.0 } else { -1.0 };
                    (yb, model.f_d1(yb), dir)
                }
                _ => {
                    let x = model.f(yb);
                    let s = self.sign();
                    // calls continue below b, puts above
                    (x, s, -s)
                }
            };
            let h = rel_step * level;
            let p = |k: f64| self.american_price(b, t, level + k * cont_dir * h);
            let (p1, p2, p3) = (p(1.0)?, p(2.0)?, p(3.0)?);
            // quadratic through the nodes h, 2h, 3h, evaluated at the boundary
            let derivative = (-5.0 * p1 + 8.0 * p2 - 3.0 * p3) / (2.0 * cont_dir * h);
            let limit = 3.0 * p1 - 3.0 * p2 + p3;
            let payoff = match model.class() {
                ModelClass::Mixture => self.payoff(level),
                _ => self.payoff(self.market.to_factor(level)?),
            };
            out.push(SmoothFitGap {
                side,
                boundary: level,
                slope,
                derivative,
                gap: derivative - slope,
                value_gap: limit - payoff,
            });
        }
        Ok(out)
    }
}

/// Three grid points where the middle value lies above the chord.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityWitness {
    pub x: [f64; 3],
    pub v: [f64; 3],
    /// Height of the middle value above the chord.
    pub excess: f64,
}

/// Largest violation of convexity over all ordered triples of the sample,
/// reported when it exceeds `tol`.
pub fn convexity_witness(xs: &[f64], vs: &[f64], tol: f64) -> Option<ConvexityWitness> {
    assert_eq!(xs.len(), vs.len());
    let mut best: Option<ConvexityWitness> = None;
    let n = xs.len();
    for i in 0..n {
        for k in i + 2..n {
            let slope = (vs[k] - vs[i]) / (xs[k] - xs[i]);
            for j in i + 1..k {
                let excess = vs[j] - (vs[i] + slope * (xs[j] - xs[i]));
                if excess > tol && best.map_or(true, |b| excess > b.excess) {
                    best = Some(ConvexityWitness {
                        x: [xs[i], xs[j], xs[k]],
                        v: [vs[i], vs[j], vs[k]],
                        excess,
                    });
                }
            }
        }
    }
    best
}
