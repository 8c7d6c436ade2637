//! Experiment specifications, read from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::benchmarks::KsConfig;
use crate::error::{Error, Result};
use crate::measure::Distribution;
use crate::pooling::{AlphaGrid, AnchorSpec};
use crate::problem::CostModel;

use super::ingest::Cleaning;
use super::policy::{Policy, PolicyContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthModel {
    /// Uniform on the simplex.
    DirichletUniform,
    Dirichlet {
        concentration: Vec<f64>,
    },
    /// The same distribution for every problem.
    Fixed {
        probs: Vec<f64>,
    },
    /// `p_1 = 0`, `p_d = 1 - s` and mass `s` on an interior index drawn
    /// uniformly from `2..d-1` per problem.
    Dispersed {
        s: f64,
    },
    /// Two support points; the upper one has probability drawn from `U[lo, hi]`.
    TwoPoint {
        lo: f64,
        hi: f64,
    },
    /// Per-store full-history distribution from a demand CSV, binned into `d`
    /// bins over each store's range. Uses the first `K` stores by id.
    FromEmpirical {
        path: PathBuf,
        #[serde(default)]
        cleaning: Cleaning,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub model: TruthModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataModel {
    /// `N_k ~ Poisson(n * lambda_k)` with `lambda_k ~ U[lambda_range]` drawn
    /// once per experiment (all ones if no range is given).
    PoissonN {
        n: f64,
        #[serde(default)]
        lambda_range: Option<[f64; 2]>,
    },
    FixedN {
        n: u64,
    },
}

/// An alpha value that may be written as `"inf"` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaValue {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Linspace {
        n: usize,
        max: f64,
        #[serde(default = "yes")]
        infinity: bool,
    },
    List(Vec<AlphaValue>),
}

fn yes() -> bool {
    true
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Linspace { n: 120, max: 180.0, infinity: true }
    }
}

impl GridSpec {
    pub fn resolve(&self) -> Result<AlphaGrid> {
        match self {
            GridSpec::Linspace { n, max, infinity } => AlphaGrid::linspace(*n, *max, *infinity),
            GridSpec::List(values) => {
                let v = values
                    .iter()
                    .map(|a| match a {
                        AlphaValue::Number(x) => Ok(*x),
                        AlphaValue::Text(t) if matches!(t.as_str(), "inf" | "+inf" | "Infinity" | "infinity") => {
                            Ok(f64::INFINITY)
                        }
                        AlphaValue::Text(t) => Err(Error::InvalidGrid(format!("cannot parse {t:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                AlphaGrid::new(v)
            }
        }
    }
}

/// Settings shared by simulations and backtests that configure the policies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicySettings {
    pub fixed_anchor: Option<Vec<f64>>,
    pub beta_means: Option<Vec<f64>>,
    pub beta_shapes: Option<Vec<f64>>,
    pub ks: KsConfig,
}

impl PolicySettings {
    pub fn context(&self, grid: AlphaGrid, seed: u64, rep: usize) -> Result<PolicyContext> {
        let mut ctx = PolicyContext::new(grid, seed, rep);
        if let Some(a) = &self.fixed_anchor {
            ctx.fixed_anchor = Some(Distribution::new(a.clone())?);
        }
        if let Some(m) = &self.beta_means {
            ctx.beta_means = m.clone();
        }
        if let Some(s) = &self.beta_shapes {
            ctx.beta_shapes = s.clone();
        }
        AnchorSpec::BetaFamily { means: ctx.beta_means.clone(), shapes: ctx.beta_shapes.clone() }.validate()?;
        ctx.ks = KsConfig { seed: crate::rng::derive_seed(seed, &[], "ks"), ..self.ks.clone() };
        ctx.ks.validate()?;
        Ok(ctx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    /// Support points shared by all problems; `1..=d` when omitted.
    #[serde(default)]
    pub support: Option<Vec<f64>>,
    pub truth_model: TruthModel,
    pub data_model: DataModel,
    pub cost: CostModel,
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub alpha_grid: GridSpec,
    pub reps: usize,
    pub seed: u64,
    #[serde(default, flatten)]
    pub settings: PolicySettings,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidConfig("no policies requested".into()));
        }
        if let Some(s) = &self.support {
            if s.len() != self.d {
                return Err(Error::DimensionMismatch { expected: self.d, got: s.len() });
            }
        }
        validate_truth(&self.truth_model, self.d)?;
        match self.data_model {
            DataModel::PoissonN { n, lambda_range } => {
                if !(n >= 0.0 && n.is_finite()) {
                    return Err(Error::InvalidConfig(format!("invalid mean sample size {n}")));
                }
                if let Some([lo, hi]) = lambda_range {
                    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                        return Err(Error::InvalidConfig("lambda_range must satisfy 0 < lo <= hi".into()));
                    }
                }
            }
            DataModel::FixedN { .. } => {}
        }
        self.cost.validate(self.d)?;
        self.alpha_grid.resolve()?;
        Ok(())
    }

    pub fn support_points(&self) -> Vec<f64> {
        self.support.clone().unwrap_or_else(|| (1..=self.d).map(|i| i as f64).collect())
    }

    pub fn hash(&self) -> String {
        spec_hash(self)
    }
}

fn validate_truth(model: &TruthModel, d: usize) -> Result<()> {
    match model {
        TruthModel::Dirichlet { concentration } => {
            if concentration.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: concentration.len() });
            }
            if concentration.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
                return Err(Error::InvalidConfig("Dirichlet concentrations must be positive".into()));
            }
        }
        TruthModel::Fixed { probs } => {
            if probs.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: probs.len() });
            }
            Distribution::new(probs.clone())?;
        }
        TruthModel::Dispersed { s } => {
            if d < 4 {
                return Err(Error::InvalidConfig("the dispersed model needs d > 3".into()));
            }
            if !(*s > 0.0 && *s < 1.0) {
                return Err(Error::InvalidConfig(format!("dispersed mass {s} outside (0, 1)")));
            }
        }
        TruthModel::TwoPoint { lo, hi } => {
            if d != 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: d });
            }
            if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                return Err(Error::InvalidConfig("two-point range must lie in [0, 1]".into()));
            }
        }
        TruthModel::Mixture { components } => {
            if components.is_empty() {
                return Err(Error::InvalidConfig("mixture needs components".into()));
            }
            let total: f64 = components.iter().map(|c| c.weight).sum();
            if components.iter().any(|c| c.weight < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("mixture proportions must sum to 1, got {total}")));
            }
            for c in components {
                validate_truth(&c.model, d)?;
            }
        }
        TruthModel::DirichletUniform | TruthModel::FromEmpirical { .. } => {}
    }
    Ok(())
}

/// Number of bins for a backtest: a count or `"inf"` for continuous mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bins {
    Finite(usize),
    Continuous,
}

impl Serialize for Bins {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bins::Finite(d) => s.serialize_u64(*d as u64),
            Bins::Continuous => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Bins {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Int(d) => Ok(Bins::Finite(d as usize)),
            Raw::Float(f) if f.is_infinite() && f > 0.0 => Ok(Bins::Continuous),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => Ok(Bins::Continuous),
            _ => Err(serde::de::Error::custom("d must be a positive integer or \"inf\"")),
        }
    }
}

impl std::str::FromStr for Bins {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "Infinity" => Ok(Bins::Continuous),
            _ => s.parse().map(Bins::Finite).map_err(|_| Error::InvalidConfig(format!("bad bin count {s:?}"))),
        }
    }
}

fn default_fractile() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestSpec {
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    #[serde(default)]
    pub cleaning: Cleaning,
    pub d: Bins,
    /// Newsvendor critical fractile.
    #[serde(default = "default_fractile")]
    pub s: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub reps: usize,
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub alpha_grid: GridSpec,
    pub seed: u64,
    #[serde(default, flatten)]
    pub settings: PolicySettings,
}

impl BacktestSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("n_train and n_test must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidConfig("no policies requested".into()));
        }
        if let Bins::Finite(d) = self.d {
            if d < 2 {
                return Err(Error::InvalidConfig("d must be at least 2".into()));
            }
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidCost(format!("critical fractile {} outside (0, 1)", self.s)));
        }
        self.alpha_grid.resolve()?;
        Ok(())
    }

    pub fn hash(&self) -> String {
        spec_hash(self)
    }
}

pub fn spec_hash<T: Serialize>(spec: &T) -> String {
    let json = serde_json::to_string(spec).expect("specs serialize");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a spec from a `.json` file, or TOML otherwise.
pub fn load_spec<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML_SPEC: &str = r#"
K = 4
d = 3
reps = 2
seed = 11
policies = ["SAA", "S-SAA-GM", "JS-Fixed"]
alpha_grid = [0.0, 1.0, inf]

[truth_model]
kind = "mixture"
components = [
  { weight = 0.5, model = { kind = "dirichlet_uniform" } },
  { weight = 0.5, model = { kind = "dirichlet", concentration = [3.0, 3.0, 3.0] } },
]

[data_model]
kind = "poisson_n"
n = 5.0

[cost]
kind = "newsvendor"
s = 0.9
"#;

    #[test]
    fn toml_and_json_agree() {
        let a: SimSpec = toml::from_str(TOML_SPEC).unwrap();
        a.validate().unwrap();
        assert_eq!(a.alpha_grid.resolve().unwrap().values(), &[0.0, 1.0, f64::INFINITY]);
        let json = r#"{"K": 4, "d": 3, "reps": 2, "seed": 11,
            "policies": ["SAA", "S-SAA-GM", "JS-Fixed"],
            "alpha_grid": [0.0, 1.0, "inf"],
            "truth_model": {"kind": "mixture", "components": [
                {"weight": 0.5, "model": {"kind": "dirichlet_uniform"}},
                {"weight": 0.5, "model": {"kind": "dirichlet", "concentration": [3.0, 3.0, 3.0]}}]},
            "data_model": {"kind": "poisson_n", "n": 5.0},
            "cost": {"kind": "newsvendor", "s": 0.9}}"#;
        let b: SimSpec = serde_json::from_str(json).unwrap();
        assert_eq!(a.alpha_grid.resolve().unwrap(), b.alpha_grid.resolve().unwrap());
        assert_eq!(a.policies, b.policies);
        assert_eq!(a.truth_model, b.truth_model);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut a: SimSpec = toml::from_str(TOML_SPEC).unwrap();
        a.reps = 0;
        assert!(a.validate().is_err());
        let mut a: SimSpec = toml::from_str(TOML_SPEC).unwrap();
        a.truth_model = TruthModel::Mixture {
            components: vec![MixtureComponent { weight: 0.4, model: TruthModel::DirichletUniform }],
        };
        assert!(a.validate().is_err());
    }

    #[test]
    fn bins_parse() {
        #[derive(Deserialize)]
        struct W {
            d: Bins,
        }
        assert_eq!(toml::from_str::<W>("d = 20").unwrap().d, Bins::Finite(20));
        assert_eq!(toml::from_str::<W>("d = \"inf\"").unwrap().d, Bins::Continuous);
        assert_eq!(toml::from_str::<W>("d = inf").unwrap().d, Bins::Continuous);
    }
}
