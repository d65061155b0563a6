//! Monte Carlo checks with exact transition sampling of the factor.
//!
//! Paths are split into fixed-size batches; batch `b` draws from ChaCha8
//! stream `b` of the user seed, so results do not depend on thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::american::Boundary;
use crate::cir::ChiSquareLaw;
use crate::contract::{Problem, VixMarket};
use crate::error::{Result, VixError};

const BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl McEstimate {
    /// (mean - value) / std_error; zero when both the error and the gap vanish.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = self.mean - value;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

/// Policy estimate on the requested grid plus the same run on half as many
/// exercise dates; their difference indicates the time-grid bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyEstimate {
    pub estimate: McEstimate,
    pub coarse: McEstimate,
    pub bias_indicator: f64,
}

// running (count, mean, sum of squared deviations)
#[derive(Clone, Copy, Default)]
struct Moments(f64, f64, f64);

impl Moments {
    fn push(&mut self, x: f64) {
        self.0 += 1.0;
        let d = x - self.1;
        self.1 += d / self.0;
        self.2 += d * (x - self.1);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.0 == 0.0 {
            return self;
        }
        if self.0 == 0.0 {
            return o;
        }
        let n = self.0 + o.0;
        let d = o.1 - self.1;
        Moments(n, self.1 + d * o.0 / n, self.2 + o.2 + d * d * self.0 * o.0 / n)
    }
}

fn run_paths<F>(n: usize, seed: u64, path: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if n < 2 {
        return Err(VixError::InvalidParameter(format!("need at least 2 paths, got {n}")));
    }
    let batches = n.div_ceil(BATCH);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut m = Moments::default();
            for _ in 0..BATCH.min(n - b * BATCH) {
                m.push(path(&mut rng));
            }
            m
        })
        .collect();
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);
    let var = m.2 / (m.0 - 1.0);
    Ok(McEstimate { mean: m.1, std_error: (var.max(0.0) / m.0).sqrt(), n_paths: n, seed })
}

fn constant(v: f64, n: usize, seed: u64) -> McEstimate {
    McEstimate { mean: v, std_error: 0.0, n_paths: n, seed }
}

/// Factor after `steps` exact transitions of length `tau / steps`.
fn evolve(law: &StepLaw, y0: f64, steps: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut y = y0;
    for _ in 0..steps {
        y = law.draw(y, rng);
    }
    y
}

// Transition over a fixed step, reused for every starting level.
struct StepLaw {
    df: f64,
    scale: f64,
    decay: f64,
}

impl StepLaw {
    fn new(market: &VixMarket, dt: f64) -> Result<Self> {
        let law = market.law(dt, 1.0)?;
        Ok(Self { df: law.df, scale: law.scale, decay: law.noncentrality * law.scale })
    }

    fn draw(&self, y: f64, rng: &mut ChaCha8Rng) -> f64 {
        let law = ChiSquareLaw { df: self.df, noncentrality: y * self.decay / self.scale, scale: self.scale };
        law.draw(rng)
    }
}

/// Discounted European payoff at time t from a state in the natural
/// coordinate.
pub fn mc_european(p: &Problem, t: f64, state: f64, n: usize, seed: u64) -> Result<McEstimate> {
    let y0 = p.market.to_factor(state)?;
    let tau = p.option.maturity - t;
    if !(tau >= 0.0) {
        return Err(VixError::InvalidParameter(format!("valuation time {t} is after maturity")));
    }
    if tau == 0.0 {
        return Ok(constant(p.payoff(y0), n, seed));
    }
    let law = p.market.law(tau, y0)?;
    let disc = (-p.option.rate * tau).exp();
    run_paths(n, seed, |rng| disc * p.payoff(law.draw(rng)))
}

/// E[f(Y_T)] from a single exact draw per path.
pub fn mc_futures(market: &VixMarket, maturity: f64, state: f64, n: usize, seed: u64) -> Result<McEstimate> {
    mc_futures_stepped(market, maturity, state, 1, n, seed)
}

/// As `mc_futures`, chaining `steps` exact transitions per path.
pub fn mc_futures_stepped(
    market: &VixMarket,
    maturity: f64,
    state: f64,
    steps: usize,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    let y0 = market.to_factor(state)?;
    if maturity == 0.0 {
        return Ok(constant(market.model.f(y0), n, seed));
    }
    if !(maturity > 0.0) || steps == 0 {
        return Err(VixError::InvalidParameter("maturity must be >= 0 and steps > 0".into()));
    }
    let law = StepLaw::new(market, maturity / steps as f64)?;
    run_paths(n, seed, |rng| market.model.f(evolve(&law, y0, steps, rng)))
}

fn policy_run(p: &Problem, b: &Boundary, t: f64, y0: f64, n: usize, steps: usize, seed: u64) -> Result<McEstimate> {
    let tau = p.option.maturity - t;
    let dt = tau / steps as f64;
    let law = StepLaw::new(&p.market, dt)?;
    let r = p.option.rate;
    run_paths(n, seed, |rng| {
        let mut y = y0;
        for k in 1..=steps {
            y = law.draw(y, rng);
            let s = if k == steps { p.option.maturity } else { t + k as f64 * dt };
            if k == steps || b.exercise_factor(s, y) {
                return (-r * (s - t)).exp() * p.payoff(y);
            }
        }
        unreachable!("loop returns at the last step")
    })
}

/// Value of exercising at the first grid time the factor enters the
/// boundary's exercise region (or at maturity). A lower bound for the true
/// price up to the discreteness of the exercise dates.
pub fn mc_american_policy(
    p: &Problem,
    b: &Boundary,
    t: f64,
    state: f64,
    n: usize,
    n_time_steps: usize,
    seed: u64,
) -> Result<PolicyEstimate> {
    if n_time_steps < 2 {
        return Err(VixError::InvalidParameter("need at least 2 exercise dates".into()));
    }
    if !(t >= 0.0 && t <= p.option.maturity) {
        return Err(VixError::InvalidParameter(format!("valuation time {t} outside [0, T]")));
    }
    let y0 = p.market.to_factor(state)?;
    if t == p.option.maturity || b.exercise_factor(t, y0) {
        let c = constant(p.payoff(y0), n, seed);
        return Ok(PolicyEstimate { estimate: c, coarse: c, bias_indicator: 0.0 });
    }
    let fine = policy_run(p, b, t, y0, n, n_time_steps, seed)?;
    let coarse = policy_run(p, b, t, y0, n, n_time_steps / 2, seed)?;
    Ok(PolicyEstimate { estimate: fine, coarse, bias_indicator: (fine.mean - coarse.mean).abs() })
}
