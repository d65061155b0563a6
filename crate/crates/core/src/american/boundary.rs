use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::contract::VixMarket;
use crate::error::{Result, VixError};
use crate::models::ModelClass;

/// Format with 12 significant digits, shortest representation.
pub fn sig12(v: f64) -> String {
    let s = format!("{v:.11e}");
    let parsed: f64 = s.parse().expect("float formatting roundtrips");
    let a = parsed.abs();
    if a == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{parsed}")
    } else {
        format!("{parsed:e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// A boundary value pinned to its neighbour to keep the proven monotonicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipEvent {
    pub t: f64,
    pub side: Side,
    /// Distance from the pinned value to the side of the bracket that still
    /// had a negative residual (zero if no search happened).
    pub size: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub clips: Vec<ClipEvent>,
    pub residual_evaluations: usize,
    pub fallbacks: usize,
}

/// Exercise boundary on a uniform time grid, stored in factor space. The
/// exercise region at time t is `{y <= lower(t)} U {y >= upper(t)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub class: ModelClass,
    pub grid: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// The single curve in VIX units for monotone maps.
    pub vix: Option<Vec<f64>>,
    pub diagnostics: SolveDiagnostics,
}

fn interp(grid: &[f64], v: &[f64], t: f64) -> f64 {
    let n = grid.len() - 1;
    if t <= grid[0] {
        return v[0];
    }
    if t >= grid[n] {
        return v[n];
    }
    let dt = grid[n] / n as f64;
    let mut k = ((t / dt).floor() as usize).min(n - 1);
    // guard against rounding in t / dt
    while k > 0 && grid[k] > t {
        k -= 1;
    }
    while k + 1 < n && grid[k + 1] < t {
        k += 1;
    }
    let w = (t - grid[k]) / (grid[k + 1] - grid[k]);
    v[k] + w * (v[k + 1] - v[k])
}

impl Boundary {
    pub(crate) fn new(
        market: &VixMarket,
        grid: Vec<f64>,
        lower: Option<Vec<f64>>,
        upper: Option<Vec<f64>>,
        diagnostics: SolveDiagnostics,
    ) -> Self {
        let class = market.model.class();
        let vix = match class {
            ModelClass::Mixture => None,
            _ => lower
                .as_ref()
                .or(upper.as_ref())
                .map(|v| v.iter().map(|&y| market.model.f(y)).collect()),
        };
        Self { class, grid, lower, upper, vix, diagnostics }
    }

    pub fn maturity(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    pub fn n_steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn lower_at(&self, t: f64) -> Option<f64> {
        self.lower.as_ref().map(|v| interp(&self.grid, v, t))
    }

    pub fn upper_at(&self, t: f64) -> Option<f64> {
        self.upper.as_ref().map(|v| interp(&self.grid, v, t))
    }

    /// Boundary in VIX units at time t (monotone maps only).
    pub fn vix_at(&self, t: f64) -> Option<f64> {
        self.vix.as_ref().map(|v| interp(&self.grid, v, t))
    }

    /// Closed exercise region test for a factor level.
    pub fn exercise_factor(&self, t: f64, y: f64) -> bool {
        self.lower_at(t).is_some_and(|b| y <= b) || self.upper_at(t).is_some_and(|b| y >= b)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match (&self.vix, &self.lower, &self.upper) {
            (Some(v), _, _) => {
                s.push_str("t,b\n");
                for (t, b) in self.grid.iter().zip(v) {
                    let _ = writeln!(s, "{},{}", sig12(*t), sig12(*b));
                }
            }
            (None, lo, hi) => {
                s.push_str("t,b_lower,b_upper\n");
                for (i, t) in self.grid.iter().enumerate() {
                    let a = lo.as_ref().map_or(String::new(), |v| sig12(v[i]));
                    let b = hi.as_ref().map_or(String::new(), |v| sig12(v[i]));
                    let _ = writeln!(s, "{},{a},{b}", sig12(*t));
                }
            }
        }
        s
    }

    /// Monotonicity per side (lower non-decreasing, upper non-increasing in t)
    /// and separation of the two sides.
    pub fn check_shape(&self) -> Result<()> {
        let fail = |reason: String, t: f64| VixError::SolverFailure { t, residual: 0.0, reason };
        if let Some(lo) = &self.lower {
            for i in 0..lo.len() - 1 {
                if lo[i] > lo[i + 1] {
                    return Err(fail("lower boundary decreases in time".into(), self.grid[i]));
                }
            }
        }
        if let Some(hi) = &self.upper {
            for i in 0..hi.len() - 1 {
                if hi[i] < hi[i + 1] {
                    return Err(fail("upper boundary increases in time".into(), self.grid[i]));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (&self.lower, &self.upper) {
            for i in 0..lo.len() {
                if !(lo[i] < hi[i]) {
                    return Err(fail("boundaries cross".into(), self.grid[i]));
                }
            }
        }
        Ok(())
    }
}
