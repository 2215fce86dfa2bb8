//! Parameter vectors and the unconstrained reparameterization used by the
//! optimizer.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a parameter component maps to the optimizer's unconstrained space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    Unconstrained,
    /// Strictly positive; optimized as `ln(value)`.
    LogPositive,
}

impl Transform {
    pub fn forward(self, value: f64) -> Result<f64> {
        match self {
            Transform::Unconstrained => Ok(value),
            Transform::LogPositive if value > 0.0 && value.is_finite() => Ok(value.ln()),
            Transform::LogPositive => Err(Error::InvalidParameter(format!(
                "log-positive component must be > 0, got {value}"
            ))),
        }
    }

    pub fn inverse(self, v: f64) -> f64 {
        match self {
            Transform::Unconstrained => v,
            Transform::LogPositive => v.exp(),
        }
    }
}

/// A parameter vector θ together with per-component transform tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    transforms: Vec<Transform>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, transforms: Vec<Transform>) -> Result<Self> {
        if values.len() != transforms.len() {
            return Err(Error::DimensionMismatch {
                what: "parameter transforms",
                expected: values.len(),
                got: transforms.len(),
            });
        }
        for (&v, &tr) in values.iter().zip(&transforms) {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite component {v}")));
            }
            tr.forward(v)?;
        }
        Ok(Self { values, transforms })
    }

    /// All components unconstrained.
    pub fn unconstrained(values: Vec<f64>) -> Self {
        let transforms = vec![Transform::Unconstrained; values.len()];
        Self { values, transforms }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Same tags, new values. Fails if a log-positive component is not > 0.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.transforms.clone())
    }

    pub fn to_unconstrained(&self) -> Vec<f64> {
        // construction already validated every component
        self.values
            .iter()
            .zip(&self.transforms)
            .map(|(&v, &tr)| tr.forward(v).expect("validated on construction"))
            .collect()
    }

    pub fn from_unconstrained(v: &[f64], transforms: &[Transform]) -> Result<Self> {
        if v.len() != transforms.len() {
            return Err(Error::DimensionMismatch {
                what: "unconstrained vector",
                expected: transforms.len(),
                got: v.len(),
            });
        }
        let values = v.iter().zip(transforms).map(|(&x, &tr)| tr.inverse(x)).collect();
        Self::new(values, transforms.to_vec())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}
