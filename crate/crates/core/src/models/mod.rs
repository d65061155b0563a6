//! VIX maps `X = f(Y)`: decreasing convex power sums (A1), increasing concave
//! power sums (A2) and their U-shaped mixtures.

mod mixture;
mod power;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cir::CirParams;
use crate::error::{Result, VixError};
use crate::roots::newton_bisect;

pub use mixture::MixtureModel;
pub use power::Term;
use power::PowerSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelClass {
    A1,
    A2,
    #[serde(rename = "mixture")]
    Mixture,
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelClass::A1 => write!(f, "A1"),
            ModelClass::A2 => write!(f, "A2"),
            ModelClass::Mixture => write!(f, "mixture"),
        }
    }
}

/// Which of the two factor levels to return when inverting a U-shaped map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

impl std::str::FromStr for Branch {
    type Err = VixError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Branch::Lower),
            "upper" => Ok(Branch::Upper),
            other => Err(VixError::Config(format!("branch must be lower or upper, got '{other}'"))),
        }
    }
}

/// JSON form of a model: `{"class": .., "terms": [..], "terms_a2": [..]}`.
/// For the mixture class `terms` is the decreasing part and `terms_a2` the
/// increasing part; either may be empty but not both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub class: String,
    #[serde(default)]
    pub terms: Vec<Term>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms_a2: Vec<Term>,
}

pub trait VixModel: Send + Sync + fmt::Debug {
    fn class(&self) -> ModelClass;

    /// k-th derivative of f at y > 0 (k = 0 gives f itself). No input check.
    fn deriv(&self, y: f64, k: u32) -> f64;

    /// Factor level with f(y) = x. Only defined for monotone maps.
    fn inverse(&self, x: f64) -> Result<f64>;

    /// Factor level on the requested side of the minimiser with f(y) = x.
    fn mixture_inverse(&self, _x: f64, _branch: Branch) -> Result<f64> {
        Err(VixError::Unsupported(format!(
            "mixture_inverse on a {} model",
            self.class()
        )))
    }

    /// Minimiser of f for U-shaped maps.
    fn y_min(&self) -> Option<f64> {
        None
    }

    /// Smallest exponent over all terms; governs integrability at y = 0.
    fn min_exponent(&self) -> f64;

    /// Validity conditions on the factor coefficients attached to this
    /// family of maps.
    fn check_factor_params(&self, p: &CirParams) -> Result<()>;

    fn to_doc(&self) -> ModelDoc;

    fn f(&self, y: f64) -> f64 {
        self.deriv(y, 0)
    }
    fn f_d1(&self, y: f64) -> f64 {
        self.deriv(y, 1)
    }
    fn f_d2(&self, y: f64) -> f64 {
        self.deriv(y, 2)
    }
    fn f_d3(&self, y: f64) -> f64 {
        self.deriv(y, 3)
    }

    /// `deriv` with the `y > 0` precondition enforced.
    fn eval_checked(&self, y: f64, k: u32) -> Result<f64> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(VixError::InvalidParameter(format!("factor level must be > 0, got {y}")));
        }
        let v = self.deriv(y, k);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(VixError::NonFinite(format!("f^({k})({y}) = {v}")))
        }
    }
}

pub type DynModel = Arc<dyn VixModel>;

fn check_level(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(VixError::InvalidParameter(format!("VIX level must be > 0, got {x}")))
    }
}

// Invert a strictly monotone power sum. Each term alone bounds the root, which
// gives a bracket without any search.
fn invert_monotone(p: &PowerSum, x: f64) -> Result<f64> {
    check_level(x)?;
    let n = p.weights.len() as f64;
    let single = |w: f64, e: f64, scale: f64| (x / (scale * w)).powf(1.0 / e);
    let (lo, hi) = if p.exponents[0] < 0.0 {
        let a = p.weights.iter().zip(&p.exponents).map(|(&w, &e)| single(w, e, 1.0));
        let b = p.weights.iter().zip(&p.exponents).map(|(&w, &e)| single(w, e, n));
        (a.fold(0.0, f64::max), b.fold(0.0, f64::max))
    } else {
        let a = p.weights.iter().zip(&p.exponents).map(|(&w, &e)| single(w, e, n));
        let b = p.weights.iter().zip(&p.exponents).map(|(&w, &e)| single(w, e, 1.0));
        (a.fold(f64::INFINITY, f64::min), b.fold(f64::INFINITY, f64::min))
    };
    if p.weights.len() == 1 {
        return Ok(lo);
    }
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    newton_bisect(|y| p.deriv(y, 0) - x, |y| p.deriv(y, 1), lo, hi, 1e-15)
}

/// Generalised 3/2 family: f(y) = sum w_j y^(-nu_j).
#[derive(Debug, Clone)]
pub struct DecreasingModel {
    sum: PowerSum,
}

impl DecreasingModel {
    pub fn new(terms: &[Term]) -> Result<Self> {
        if terms.is_empty() {
            return Err(VixError::InvalidParameter("A1 model needs at least one term".into()));
        }
        Ok(Self { sum: PowerSum::decreasing(terms)? })
    }

    /// f(y) = 1/y.
    pub fn three_halves() -> Self {
        Self::new(&[Term { weight: 1.0, power: 1.0 }]).expect("valid")
    }
}

impl VixModel for DecreasingModel {
    fn class(&self) -> ModelClass {
        ModelClass::A1
    }
    fn deriv(&self, y: f64, k: u32) -> f64 {
        self.sum.deriv(y, k)
    }
    fn inverse(&self, x: f64) -> Result<f64> {
        invert_monotone(&self.sum, x)
    }
    fn min_exponent(&self) -> f64 {
        self.sum.min_exponent().unwrap_or(0.0)
    }
    fn check_factor_params(&self, p: &CirParams) -> Result<()> {
        for t in self.sum.terms() {
            let need = 0.5 * p.kappa * p.kappa * (t.power + 1.0);
            if !(p.beta > need) {
                return Err(VixError::AssumptionViolation(format!(
                    "power {} needs beta > kappa^2 (power + 1) / 2 = {need}, got beta = {}",
                    t.power, p.beta
                )));
            }
        }
        Ok(())
    }
    fn to_doc(&self) -> ModelDoc {
        ModelDoc { class: "A1".into(), terms: self.sum.terms(), terms_a2: vec![] }
    }
}

/// Generalised 1/2 family: f(y) = sum w_j y^(mu_j), mu_j in (0, 1].
#[derive(Debug, Clone)]
pub struct IncreasingModel {
    sum: PowerSum,
}

impl IncreasingModel {
    pub fn new(terms: &[Term]) -> Result<Self> {
        if terms.is_empty() {
            return Err(VixError::InvalidParameter("A2 model needs at least one term".into()));
        }
        Ok(Self { sum: PowerSum::increasing(terms)? })
    }

    /// f(y) = y.
    pub fn one_half() -> Self {
        Self::new(&[Term { weight: 1.0, power: 1.0 }]).expect("valid")
    }
}

impl VixModel for IncreasingModel {
    fn class(&self) -> ModelClass {
        ModelClass::A2
    }
    fn deriv(&self, y: f64, k: u32) -> f64 {
        self.sum.deriv(y, k)
    }
    fn inverse(&self, x: f64) -> Result<f64> {
        invert_monotone(&self.sum, x)
    }
    fn min_exponent(&self) -> f64 {
        self.sum.min_exponent().unwrap_or(0.0)
    }
    fn check_factor_params(&self, p: &CirParams) -> Result<()> {
        for t in self.sum.terms() {
            let v = p.beta + 0.5 * p.kappa * p.kappa * (t.power - 1.0);
            if !(v > 0.0) {
                return Err(VixError::AssumptionViolation(format!(
                    "power {} needs beta + kappa^2 (power - 1) / 2 > 0, got {v}",
                    t.power
                )));
            }
        }
        Ok(())
    }
    fn to_doc(&self) -> ModelDoc {
        ModelDoc { class: "A2".into(), terms: self.sum.terms(), terms_a2: vec![] }
    }
}

pub type ModelBuilder = fn(&ModelDoc) -> Result<DynModel>;

/// Name -> constructor table for VIX maps.
pub struct ModelRegistry {
    builders: BTreeMap<String, ModelBuilder>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        let mut r = Self { builders: BTreeMap::new() };
        r.register("A1", |d| Ok(Arc::new(DecreasingModel::new(&d.terms)?)));
        r.register("A2", |d| {
            // accept either field for the single-family case
            let terms = if d.terms.is_empty() { &d.terms_a2 } else { &d.terms };
            Ok(Arc::new(IncreasingModel::new(terms)?))
        });
        r.register("mixture", |d| Ok(Arc::new(MixtureModel::new(&d.terms, &d.terms_a2)?)));
        r
    }
}

impl ModelRegistry {
    pub fn register(&mut self, name: &str, builder: ModelBuilder) {
        self.builders.insert(name.to_string(), builder);
    }

    pub fn names(&self) -> Vec<&str> {
        self.builders.keys().map(|s| s.as_str()).collect()
    }

    pub fn build(&self, doc: &ModelDoc) -> Result<DynModel> {
        let b = self
            .builders
            .get(doc.class.as_str())
            .ok_or_else(|| VixError::UnknownEntry(doc.class.clone()))?;
        b(doc)
    }
}

pub fn build_model(doc: &ModelDoc) -> Result<DynModel> {
    ModelRegistry::default().build(doc)
}

/// Log-spaced grid of `n` points on [a, b].
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
