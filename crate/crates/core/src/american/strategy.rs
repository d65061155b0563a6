//! Pluggable pieces of the backward induction: the quadrature rule in the
//! elapsed-time variable and the per-step root solver.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Result, VixError};
use crate::roots::brent;

use super::boundary::Side;

/// Weights `w_0..w_m` for the nodes `u_j = j dt` of the premium integral over
/// `[0, m dt]`. The `u = 0` node is evaluated at the on-boundary limit.
pub trait TimeRule: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn weights(&self, m: usize, dt: f64) -> Vec<f64>;
}

#[derive(Debug)]
pub struct RightEndpoint;

impl TimeRule for RightEndpoint {
    fn name(&self) -> &'static str {
        "right-endpoint"
    }
    fn weights(&self, m: usize, dt: f64) -> Vec<f64> {
        let mut w = vec![dt; m + 1];
        w[0] = 0.0;
        w
    }
}

#[derive(Debug)]
pub struct Trapezoid;

impl TimeRule for Trapezoid {
    fn name(&self) -> &'static str {
        "trapezoid"
    }
    fn weights(&self, m: usize, dt: f64) -> Vec<f64> {
        let mut w = vec![dt; m + 1];
        w[0] = 0.5 * dt;
        w[m] = 0.5 * dt;
        w
    }
}

/// What an inner solver sees of one time step on one side.
pub trait StepEquation {
    /// Payoff minus continuation value; negative in the continuation region.
    fn residual(&mut self, y: f64) -> Result<f64>;
    /// Continuation value (European price plus discrete premium).
    fn continuation(&mut self, y: f64) -> Result<f64>;
    /// Factor level on this side whose payoff equals `v`.
    fn payoff_inverse(&self, v: f64) -> Result<f64>;
    fn side(&self) -> Side;
    /// Time of the step, for diagnostics.
    fn t(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct InnerSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    /// Typical size of the first search step.
    pub step_hint: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Solved(f64),
    /// Residual already non-negative at the later boundary value.
    Pinned { size: f64 },
}

pub trait InnerSolver: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    /// `prev` is the boundary value at the next (later) grid time.
    fn solve(&self, eq: &mut dyn StepEquation, prev: f64, s: &InnerSettings) -> Result<StepOutcome>;
}

/// Walk from `prev` into the exercise side until the residual turns
/// non-negative, then refine with Brent's method.
#[derive(Debug)]
pub struct Bracketed;

impl InnerSolver for Bracketed {
    fn name(&self) -> &'static str {
        "bracketed"
    }

    fn solve(&self, eq: &mut dyn StepEquation, prev: f64, s: &InnerSettings) -> Result<StepOutcome> {
        let r_prev = eq.residual(prev)?;
        if r_prev >= 0.0 {
            return Ok(StepOutcome::Pinned { size: 0.0 });
        }
        let dir = match eq.side() {
            Side::Lower => -1.0,
            Side::Upper => 1.0,
        };
        let (mut a, mut ra) = (prev, r_prev);
        let mut step = s.step_hint.max(1e-12 * prev);
        for _ in 0..200 {
            let mut y = a + dir * step;
            if y <= 0.5 * a {
                y = 0.5 * a;
            }
            let ry = eq.residual(y)?;
            if ry >= 0.0 {
                let t = eq.t();
                let mut failure = None;
                let found = brent(
                    |v| match eq.residual(v) {
                        Ok(r) => r,
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    },
                    a,
                    y,
                    ra,
                    ry,
                    s.tol,
                    s.max_iters,
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                let (root, _) = found.map_err(|e| VixError::SolverFailure {
                    t,
                    residual: ry,
                    reason: e.to_string(),
                })?;
                return Ok(StepOutcome::Solved(root));
            }
            a = y;
            ra = ry;
            step *= 2.0;
        }
        Err(VixError::SolverFailure {
            t: eq.t(),
            residual: ra,
            reason: "no exercise level found on this side".into(),
        })
    }
}

/// Damped iteration `y <- payoff^-1(continuation(y))`; hands over to
/// `Bracketed` when it stalls or leaves the admissible side.
#[derive(Debug)]
pub struct FixedPoint;

impl InnerSolver for FixedPoint {
    fn name(&self) -> &'static str {
        "fixed-point"
    }

    fn solve(&self, eq: &mut dyn StepEquation, prev: f64, s: &InnerSettings) -> Result<StepOutcome> {
        let mut y = prev;
        for _ in 0..s.max_iters {
            let c = eq.continuation(y)?;
            let target = match eq.payoff_inverse(c) {
                Ok(v) => v,
                Err(_) => break,
            };
            let next = (1.0 - s.damping) * y + s.damping * target;
            let beyond = match eq.side() {
                Side::Lower => next > prev,
                Side::Upper => next < prev,
            };
            if beyond {
                break;
            }
            if (next - y).abs() <= s.tol {
                return Ok(StepOutcome::Solved(next));
            }
            y = next;
        }
        Bracketed.solve(eq, prev, s)
    }
}

/// Name -> strategy tables.
pub struct StrategyRegistry {
    rules: BTreeMap<&'static str, Arc<dyn TimeRule>>,
    solvers: BTreeMap<&'static str, Arc<dyn InnerSolver>>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = Self { rules: BTreeMap::new(), solvers: BTreeMap::new() };
        r.add_rule(Arc::new(RightEndpoint));
        r.add_rule(Arc::new(Trapezoid));
        r.add_solver(Arc::new(Bracketed));
        r.add_solver(Arc::new(FixedPoint));
        r
    }
}

impl StrategyRegistry {
    pub fn add_rule(&mut self, rule: Arc<dyn TimeRule>) {
        self.rules.insert(rule.name(), rule);
    }

    pub fn add_solver(&mut self, solver: Arc<dyn InnerSolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn rule(&self, name: &str) -> Result<Arc<dyn TimeRule>> {
        self.rules.get(name).cloned().ok_or_else(|| VixError::UnknownEntry(name.to_string()))
    }

    pub fn solver(&self, name: &str) -> Result<Arc<dyn InnerSolver>> {
        self.solvers.get(name).cloned().ok_or_else(|| VixError::UnknownEntry(name.to_string()))
    }

    pub fn rule_names(&self) -> Vec<&'static str> {
        self.rules.keys().copied().collect()
    }

    pub fn solver_names(&self) -> Vec<&'static str> {
        self.solvers.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_constants() {
        for r in [&RightEndpoint as &dyn TimeRule, &Trapezoid] {
            let s: f64 = r.weights(10, 0.1).iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "{}", r.name());
        }
    }

    // residual y - 2 on the lower side, payoff y, continuation 2
    struct Toy;
    impl StepEquation for Toy {
        fn residual(&mut self, y: f64) -> Result<f64> {
            Ok(2.0 - y)
        }
        fn continuation(&mut self, _y: f64) -> Result<f64> {
            Ok(2.0)
        }
        fn payoff_inverse(&self, v: f64) -> Result<f64> {
            Ok(v)
        }
        fn side(&self) -> Side {
            Side::Lower
        }
        fn t(&self) -> f64 {
            0.0
        }
    }

    #[test]
    fn solvers_find_toy_root() {
        let s = InnerSettings { tol: 1e-12, max_iters: 100, damping: 1.0, step_hint: 0.1 };
        for solver in [&Bracketed as &dyn InnerSolver, &FixedPoint] {
            match solver.solve(&mut Toy, 3.0, &s).unwrap() {
                StepOutcome::Solved(y) => assert!((y - 2.0).abs() < 1e-10, "{}", solver.name()),
                other => panic!("{other:?}"),
            }
        }
        assert!(matches!(Bracketed.solve(&mut Toy, 1.5, &s).unwrap(), StepOutcome::Pinned { .. }));
    }

    #[test]
    fn registry_lookup() {
        let r = StrategyRegistry::default();
        assert_eq!(r.rule_names(), vec!["right-endpoint", "trapezoid"]);
        assert_eq!(r.solver_names(), vec!["bracketed", "fixed-point"]);
        assert!(r.rule("simpson").is_err());
    }
}
