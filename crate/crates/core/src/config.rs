//! Run configuration documents and the bundled parameter sets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::american::SolverConfig;
use crate::cir::CirParams;
use crate::contract::{OptionKind, OptionSpec, Problem, VixMarket};
use crate::error::{Result, VixError};
use crate::models::{build_model, Branch, ModelClass, ModelDoc};
use crate::quadrature::QuadratureConfig;

const BUNDLED: [(&str, &str); 8] = [
    ("fig1", include_str!("../../../configs/fig1.json")),
    ("fig1_mix", include_str!("../../../configs/fig1_mix.json")),
    ("fig1_nu12", include_str!("../../../configs/fig1_nu12.json")),
    ("fig2", include_str!("../../../configs/fig2.json")),
    ("fig3", include_str!("../../../configs/fig3.json")),
    ("fig4", include_str!("../../../configs/fig4.json")),
    ("fig5", include_str!("../../../configs/fig5.json")),
    ("fig7", include_str!("../../../configs/fig7.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirDoc {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    #[serde(default)]
    pub allow_feller_violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputDoc {
    pub path: Option<String>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractDoc {
    pub strike: f64,
    pub maturity: f64,
    pub rate: f64,
    #[serde(default = "default_kind")]
    pub kind: OptionKind,
}

fn default_kind() -> OptionKind {
    OptionKind::Call
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    pub model: ModelDoc,
    pub cir: CirDoc,
    pub contract: ContractDoc,
    /// Initial state: the VIX level for monotone maps, the factor for mixtures.
    #[serde(default)]
    pub state: Option<f64>,
    /// Initial VIX level for mixtures, mapped to a factor level per branch.
    #[serde(default)]
    pub vix0: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputDoc,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| VixError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VixError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn bundled_names() -> Vec<&'static str> {
        BUNDLED.iter().map(|(n, _)| *n).collect()
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| VixError::UnknownEntry(name.to_string()))?;
        Self::from_json(text)
    }

    /// Bundled name or path to a JSON file.
    pub fn resolve(spec: &str) -> Result<Self> {
        if BUNDLED.iter().any(|(n, _)| *n == spec) {
            Self::bundled(spec)
        } else {
            Self::load(Path::new(spec))
        }
    }

    pub fn cir_params(&self) -> Result<CirParams> {
        let c = &self.cir;
        if c.allow_feller_violation {
            CirParams::new_relaxed(c.alpha, c.beta, c.kappa)
        } else {
            CirParams::new(c.alpha, c.beta, c.kappa)
        }
    }

    pub fn option(&self) -> OptionSpec {
        let c = &self.contract;
        OptionSpec { strike: c.strike, maturity: c.maturity, rate: c.rate, kind: c.kind }
    }

    pub fn market(&self) -> Result<VixMarket> {
        VixMarket::new(build_model(&self.model)?, self.cir_params()?, self.quadrature)
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(self.market()?, self.option())
    }

    /// Initial state in the natural coordinate. For mixtures a `branch`
    /// selects the factor preimage of `vix0`.
    pub fn initial_state(&self, market: &VixMarket, branch: Option<Branch>) -> Result<f64> {
        match (market.model.class(), branch, self.vix0) {
            (ModelClass::Mixture, Some(b), Some(x)) => market.model.mixture_inverse(x, b),
            (ModelClass::Mixture, Some(_), None) => {
                Err(VixError::Config("--branch needs vix0 in the config".into()))
            }
            (_, Some(_), _) => Err(VixError::Config("--branch applies to mixture models only".into())),
            (_, None, _) => self
                .state
                .ok_or_else(|| VixError::Config("config has no initial state".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: VixError| VixError::Config(e.to_string());
        self.problem().map_err(cfg)?;
        self.solver.validate()?;
        if let Some(s) = self.state {
            if !(s > 0.0 && s.is_finite()) {
                return Err(VixError::Config(format!("state must be > 0, got {s}")));
            }
        }
        if let Some(x) = self.vix0 {
            if !(x > 0.0 && x.is_finite()) {
                return Err(VixError::Config(format!("vix0 must be > 0, got {x}")));
            }
        }
        Ok(())
    }
}
