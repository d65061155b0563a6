//! Free-boundary solution by backward induction on the early-exercise
//! premium equation, and prices from the premium representation.

mod boundary;
mod price;
mod strategy;

use serde::{Deserialize, Serialize};

pub use boundary::{sig12, Boundary, ClipEvent, Side, SolveDiagnostics};
pub use price::{convexity_witness, ConvexityWitness, Region, SmoothFitGap};
pub use strategy::{
    Bracketed, FixedPoint, InnerSettings, InnerSolver, RightEndpoint, StepEquation, StepOutcome,
    StrategyRegistry, TimeRule, Trapezoid,
};

use crate::contract::Problem;
use crate::error::{Result, VixError};
use crate::models::{Branch, ModelClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub n_steps: usize,
    /// Tolerance on boundary values, in factor units.
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    /// Relaxation factor of the fixed-point inner solver.
    pub damping: f64,
    pub time_rule: String,
    pub inner_solver: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_steps: 200,
            inner_tol: 1e-9,
            max_inner_iters: 100,
            damping: 1.0,
            time_rule: "trapezoid".into(),
            inner_solver: "bracketed".into(),
        }
    }
}

impl SolverConfig {
    pub fn with_steps(n_steps: usize) -> Self {
        Self { n_steps, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(VixError::Config(format!("n_steps must be >= 2, got {}", self.n_steps)));
        }
        if !(self.inner_tol > 0.0) || self.max_inner_iters == 0 {
            return Err(VixError::Config("inner_tol and max_inner_iters must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(VixError::Config(format!("damping must be in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

// One step of the induction on one side.
struct Step<'a> {
    p: &'a Problem,
    t: f64,
    dt: f64,
    w: &'a [f64],
    // boundary values at t + j dt, j = 0..=m (index 0 unused)
    lo: Option<&'a [f64]>,
    hi: Option<&'a [f64]>,
    side: Side,
    evals: usize,
}

impl StepEquation for Step<'_> {
    fn residual(&mut self, y: f64) -> Result<f64> {
        let g = self.p.sign() * (self.p.market.model.f(y) - self.p.option.strike);
        Ok(g - self.continuation(y)?)
    }

    fn continuation(&mut self, y: f64) -> Result<f64> {
        self.evals += 1;
        let mut v = self.p.european_factor(self.t, y)?;
        // on the boundary half of the mass at u -> 0 lies in the exercise region
        v += self.w[0] * (-0.5 * self.p.big_h(y));
        for j in 1..self.w.len() {
            let lo = self.lo.map(|b| b[j]);
            let hi = self.hi.map(|b| b[j]);
            v += self.w[j] * self.p.kernel_factor(j as f64 * self.dt, y, lo, hi)?;
        }
        Ok(v)
    }

    fn payoff_inverse(&self, v: f64) -> Result<f64> {
        let x = self.p.option.strike + self.p.sign() * v;
        let m = &self.p.market.model;
        match m.class() {
            ModelClass::Mixture => {
                let b = match self.side {
                    Side::Lower => Branch::Lower,
                    Side::Upper => Branch::Upper,
                };
                m.mixture_inverse(x, b)
            }
            _ => m.inverse(x),
        }
    }

    fn side(&self) -> Side {
        self.side
    }

    fn t(&self) -> f64 {
        self.t
    }
}

impl Problem {
    /// Exercise boundary on a uniform grid of `cfg.n_steps` steps.
    pub fn solve_boundary(&self, cfg: &SolverConfig) -> Result<Boundary> {
        self.solve_boundary_with(cfg, &StrategyRegistry::default())
    }

    pub fn solve_boundary_with(&self, cfg: &SolverConfig, reg: &StrategyRegistry) -> Result<Boundary> {
        cfg.validate()?;
        let rule = reg.rule(&cfg.time_rule)?;
        let solver = reg.solver(&cfg.inner_solver)?;
        let levels = self.critical_levels()?;
        if levels.terminal_lower.is_some() {
            self.market.check_integrable(1.0)?;
        }
        let n = cfg.n_steps;
        let big_t = self.option.maturity;
        let dt = big_t / n as f64;
        let grid: Vec<f64> = (0..=n).map(|k| if k == n { big_t } else { k as f64 * dt }).collect();
        let mut lo = levels.terminal_lower.map(|v| vec![v; n + 1]);
        let mut hi = levels.terminal_upper.map(|v| vec![v; n + 1]);
        let mut diag = SolveDiagnostics::default();
        let kappa = self.market.cir.kappa;

        for i in (0..n).rev() {
            let w = rule.weights(n - i, dt);
            for side in [Side::Lower, Side::Upper] {
                let arr = match side {
                    Side::Lower => &lo,
                    Side::Upper => &hi,
                };
                let Some(vals) = arr.as_ref() else { continue };
                let prev = vals[i + 1];
                let sd = kappa * (prev * dt).sqrt();
                let hint = if i + 2 <= n {
                    (vals[i + 2] - vals[i + 1]).abs().max(1e-3 * sd)
                } else {
                    0.5 * sd
                };
                let settings = InnerSettings {
                    tol: cfg.inner_tol,
                    max_iters: cfg.max_inner_iters,
                    damping: cfg.damping,
                    step_hint: hint,
                };
                let mut step = Step {
                    p: self,
                    t: grid[i],
                    dt,
                    w: &w,
                    lo: lo.as_ref().map(|v| &v[i..]),
                    hi: hi.as_ref().map(|v| &v[i..]),
                    side,
                    evals: 0,
                };
                let outcome = solver.solve(&mut step, prev, &settings)?;
                diag.residual_evaluations += step.evals;
                let value = match outcome {
                    StepOutcome::Solved(y) => y,
                    StepOutcome::Pinned { size } => {
                        diag.clips.push(ClipEvent { t: grid[i], side, size });
                        prev
                    }
                };
                let target = match side {
                    Side::Lower => lo.as_mut(),
                    Side::Upper => hi.as_mut(),
                };
                target.expect("side present")[i] = value;
            }
        }
        let b = Boundary::new(&self.market, grid, lo, hi, diag);
        b.check_shape()?;
        Ok(b)
    }
}
