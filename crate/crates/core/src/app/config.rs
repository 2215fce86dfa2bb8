use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::StateSpaceModel;
use crate::models;
use crate::optim::OptimizerConfig;
use crate::param::{ParamVector, Transform};
use crate::surface::Normalization;

/// A scalar grid over one parameter component, other components held at the
/// reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Parameter name, e.g. `"b"`.
    pub component: String,
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    /// Independent frozen systems, one curve each.
    #[serde(default = "one")]
    pub systems: usize,
    /// Defaults to the true parameter.
    #[serde(default)]
    pub theta_ref: Option<Vec<f64>>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdSettings {
    pub gamma0: f64,
    pub alpha: f64,
}

impl Default for SgdSettings {
    fn default() -> Self {
        Self { gamma0: 0.05, alpha: 0.75 }
    }
}

/// One experiment, read from a TOML file and then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    /// Parameter used to simulate data; defaults to the model's truth.
    pub theta_true: Option<Vec<f64>>,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    #[serde(rename = "K")]
    pub iterations: usize,
    pub repeats: usize,
    /// θ_0 is drawn uniformly per component on `[lower, upper]`.
    pub theta0_lower: Option<Vec<f64>>,
    pub theta0_upper: Option<Vec<f64>>,
    pub burn_in: usize,
    pub bins: usize,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Normalizer of the frozen surfaces.
    pub normalization: Normalization,
    pub grid: Option<GridSpec>,
    pub sgd: SgdSettings,
    /// Read data from here instead of simulating.
    pub dataset: Option<PathBuf>,
    /// Not part of the experiment's identity; left out of output preambles.
    pub out: PathBuf,
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: "example1".into(),
            theta_true: None,
            horizon: 100,
            particles: 100,
            iterations: 50,
            repeats: 20,
            theta0_lower: None,
            theta0_upper: None,
            burn_in: 25,
            bins: 50,
            seed: 1,
            optimizer: OptimizerConfig::default(),
            normalization: Normalization::default(),
            grid: None,
            sgd: SgdSettings::default(),
            dataset: None,
            out: PathBuf::from("out"),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Settings of the Example 1 replication.
    pub fn example1() -> Self {
        Self {
            grid: Some(GridSpec {
                component: "b".into(),
                lower: 10.0,
                upper: 40.0,
                points: 121,
                systems: 10,
                theta_ref: None,
            }),
            ..Self::default()
        }
    }

    /// Settings of the Example 2 replication.
    pub fn example2() -> Self {
        Self {
            model: "example2".into(),
            horizon: 1000,
            iterations: 150,
            burn_in: 50,
            theta0_lower: Some(vec![0.2, -4.0]),
            theta0_upper: Some(vec![1.5, 0.0]),
            grid: Some(GridSpec {
                component: "a".into(),
                lower: 0.2,
                upper: 1.2,
                points: 41,
                systems: 10,
                theta_ref: None,
            }),
            ..Self::default()
        }
    }

    pub fn build_model(&self) -> Result<Box<dyn StateSpaceModel>> {
        models::by_name(&self.model, self.horizon).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn theta_true(&self, model: &dyn StateSpaceModel) -> Result<ParamVector> {
        match &self.theta_true {
            Some(v) => model.param_vector(v.clone()).map_err(|e| Error::Config(format!("theta_true: {e}"))),
            None => model
                .true_theta()
                .ok_or_else(|| Error::Config(format!("model {} has no default theta_true", model.name()))),
        }
    }

    /// Sampling box for θ_0: configured, or a per-model default.
    pub fn theta0_box(&self, model: &dyn StateSpaceModel) -> Result<(Vec<f64>, Vec<f64>)> {
        let default = match self.model.as_str() {
            "example1" => (vec![10.0, 0.0], vec![40.0, 4.0]),
            "example2" => (vec![0.2, -4.0], vec![1.5, 0.0]),
            _ => {
                let truth = self.theta_true(model)?;
                let lo = truth.iter().map(|v| v - 0.5 * v.abs().max(1.0)).collect();
                let hi = truth.iter().map(|v| v + 0.5 * v.abs().max(1.0)).collect();
                (lo, hi)
            }
        };
        let lo = self.theta0_lower.clone().unwrap_or(default.0);
        let hi = self.theta0_upper.clone().unwrap_or(default.1);
        let d = model.param_transforms().len();
        if lo.len() != d || hi.len() != d {
            return Err(Error::Config(format!("theta0 bounds need {d} components")));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
            return Err(Error::Config("theta0 bounds must be finite with lower <= upper".into()));
        }
        // draws land in (lower, upper], so a log-positive lower bound may be 0
        model.param_vector(hi.clone()).map_err(|e| Error::Config(format!("theta0_upper: {e}")))?;
        for ((l, h), tag) in lo.iter().zip(&hi).zip(model.param_transforms()) {
            if tag == Transform::LogPositive && (*l < 0.0 || *h <= 0.0) {
                return Err(Error::Config("theta0 bounds of a positive component must be >= 0".into()));
            }
        }
        Ok((lo, hi))
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: &str| Err(Error::Config(m.into()));
        let model = self.build_model()?;
        if self.horizon == 0 {
            return cfg("T must be >= 1");
        }
        if self.particles == 0 {
            return cfg("N must be >= 1");
        }
        if self.iterations == 0 {
            return cfg("K must be >= 1");
        }
        if self.repeats == 0 {
            return cfg("repeats must be >= 1");
        }
        if self.bins == 0 {
            return cfg("bins must be >= 1");
        }
        if self.workers == Some(0) {
            return cfg("workers must be >= 1");
        }
        self.optimizer.validate(model.param_transforms().len())?;
        self.theta_true(model.as_ref())?;
        self.theta0_box(model.as_ref())?;
        if let Some(g) = &self.grid {
            self.grid_component(model.as_ref(), g)?;
            if g.points < 2 || g.systems == 0 || !(g.lower < g.upper) {
                return cfg("grid needs points >= 2, systems >= 1 and lower < upper");
            }
        }
        if !(self.sgd.gamma0 > 0.0 && self.sgd.alpha > 0.5 && self.sgd.alpha <= 1.0) {
            return cfg("sgd needs gamma0 > 0 and alpha in (0.5, 1]");
        }
        if let Some(p) = &self.dataset {
            if !p.is_file() {
                return Err(Error::Config(format!("dataset {} not found", p.display())));
            }
        }
        std::fs::create_dir_all(&self.out)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", self.out.display())))?;
        Ok(())
    }

    pub fn grid_component(&self, model: &dyn StateSpaceModel, g: &GridSpec) -> Result<usize> {
        model
            .param_names()
            .iter()
            .position(|n| *n == g.component)
            .ok_or_else(|| Error::Config(format!("grid component {:?} is not a parameter of {}", g.component, self.model)))
    }

    /// TOML rendering without the output location and worker count, for
    /// output preambles.
    pub fn preamble(&self) -> String {
        let shown = Self { out: PathBuf::new(), workers: None, ..self.clone() };
        let text = toml::to_string(&shown).unwrap_or_default();
        text.lines().filter(|l| !l.starts_with("out = ") && !l.is_empty()).collect::<Vec<_>>().join("\n")
    }
}
