//! Observation records, optionally with the generating trajectory.
//!
//! On disk a dataset is a CSV (`t, y_1.., [x_1..], [u_1..]`, one row per
//! step t = 1..T) plus a JSON sidecar with dimensions, the initial state,
//! the generating parameters and the stream that produced it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, fmt_f64, CsvOut};
use crate::rng::RngStream;

const SIDECAR_VERSION: u32 = 1;

/// Flat `(T+1) × state_dim` storage for `x_{0:T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    data: Vec<f64>,
    dim: usize,
}

impl Trajectory {
    pub fn at(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    obs: Vec<f64>,
    obs_dim: usize,
    states: Option<Trajectory>,
    inputs: Option<(Vec<f64>, usize)>,
    pub theta_true: Option<Vec<f64>>,
    pub stream: Option<RngStream>,
    pub model: Option<String>,
}

impl Dataset {
    /// `obs` holds `y_1..y_T` back to back, each of length `obs_dim`.
    pub fn new(obs: Vec<f64>, obs_dim: usize) -> Result<Self> {
        if obs_dim == 0 || !obs.len().is_multiple_of(obs_dim) || obs.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{} observation values do not form whole vectors of dimension {obs_dim}",
                obs.len()
            )));
        }
        Ok(Self {
            obs,
            obs_dim,
            states: None,
            inputs: None,
            theta_true: None,
            stream: None,
            model: None,
        })
    }

    pub fn with_states(mut self, states: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || states.len() != (self.len() + 1) * dim {
            return Err(Error::DimensionMismatch {
                what: "trajectory length",
                expected: (self.len() + 1) * dim,
                got: states.len(),
            });
        }
        self.states = Some(Trajectory { data: states, dim });
        Ok(self)
    }

    pub fn with_inputs(mut self, inputs: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || inputs.len() != self.len() * dim {
            return Err(Error::DimensionMismatch {
                what: "input length",
                expected: self.len() * dim,
                got: inputs.len(),
            });
        }
        self.inputs = Some((inputs, dim));
        Ok(self)
    }

    /// Number of observations T.
    pub fn len(&self) -> usize {
        self.obs.len() / self.obs_dim
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    /// `y_t` for t in 1..=T.
    pub fn y(&self, t: usize) -> &[f64] {
        &self.obs[(t - 1) * self.obs_dim..t * self.obs_dim]
    }

    pub fn observations(&self) -> &[f64] {
        &self.obs
    }

    pub fn states(&self) -> Option<&Trajectory> {
        self.states.as_ref()
    }

    /// Inputs `u_1..u_T` and their dimension.
    pub fn inputs(&self) -> Option<(&[f64], usize)> {
        self.inputs.as_ref().map(|(u, d)| (u.as_slice(), *d))
    }

    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Writes the CSV and its JSON sidecar next to it.
    pub fn write(&self, csv_path: &Path, preamble: Option<&str>) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.obs_dim).map(|i| format!("y_{i}")));
        if let Some(s) = &self.states {
            header.extend((1..=s.dim).map(|i| format!("x_{i}")));
        }
        if let Some((_, d)) = &self.inputs {
            header.extend((1..=*d).map(|i| format!("u_{i}")));
        }
        let mut out = CsvOut::create(csv_path, preamble, &header)?;
        for t in 1..=self.len() {
            let mut row = vec![t.to_string()];
            row.extend(self.y(t).iter().map(|&v| fmt_f64(v)));
            if let Some(s) = &self.states {
                row.extend(s.at(t).iter().map(|&v| fmt_f64(v)));
            }
            if let Some((u, d)) = &self.inputs {
                row.extend(u[(t - 1) * d..t * d].iter().map(|&v| fmt_f64(v)));
            }
            out.row(&row)?;
        }
        out.finish()?;

        let sidecar = Sidecar {
            format_version: SIDECAR_VERSION,
            horizon: self.len(),
            obs_dim: self.obs_dim,
            state_dim: self.states.as_ref().map(|s| s.dim),
            input_dim: self.inputs.as_ref().map(|(_, d)| *d),
            initial_state: self.states.as_ref().map(|s| s.at(0).to_vec()),
            theta_true: self.theta_true.clone(),
            seed: self.stream.map(|s| s.seed),
            stream: self.stream.map(|s| s.stream),
            model: self.model.clone(),
            config: preamble.map(str::to_string),
        };
        io::write_json(&Self::sidecar_path(csv_path), &sidecar)
    }

    /// Reads a dataset written by [`Dataset::write`]. The sidecar is required
    /// only when the CSV carries state columns (it holds `x_0`).
    pub fn read(csv_path: &Path) -> Result<Self> {
        let sidecar_path = Self::sidecar_path(csv_path);
        let sidecar: Option<Sidecar> = if sidecar_path.exists() {
            Some(serde_json::from_reader(std::fs::File::open(&sidecar_path)?)?)
        } else {
            None
        };

        let mut reader = io::reader(csv_path)?;
        let header = reader.headers()?.clone();
        let cols = |prefix: &str| -> Vec<usize> {
            header
                .iter()
                .enumerate()
                .filter(|(_, h)| h.starts_with(prefix))
                .map(|(i, _)| i)
                .collect()
        };
        let (ycols, xcols, ucols) = (cols("y_"), cols("x_"), cols("u_"));
        if ycols.is_empty() {
            return Err(Error::Config(format!("{}: no y_ columns", csv_path.display())));
        }

        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{}: bad number {s:?}", csv_path.display())))
        };
        let (mut obs, mut xs, mut us) = (Vec::new(), Vec::new(), Vec::new());
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            let t: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad step index {:?}", &rec[0])))?;
            if t != row + 1 {
                return Err(Error::Config(format!("rows must be t = 1..T in order, found t={t} at row {}", row + 1)));
            }
            for &c in &ycols {
                obs.push(parse(&rec[c])?);
            }
            for &c in &xcols {
                xs.push(parse(&rec[c])?);
            }
            for &c in &ucols {
                us.push(parse(&rec[c])?);
            }
        }

        let mut data = Dataset::new(obs, ycols.len())?;
        if !xcols.is_empty() {
            let x0 = sidecar
                .as_ref()
                .and_then(|s| s.initial_state.clone())
                .ok_or_else(|| Error::Config("state columns present but sidecar lacks initial_state".into()))?;
            let mut states = x0;
            states.extend(xs);
            data = data.with_states(states, xcols.len())?;
        }
        if !ucols.is_empty() {
            data = data.with_inputs(us, ucols.len())?;
        }
        if let Some(s) = sidecar {
            if s.horizon != data.len() || s.obs_dim != data.obs_dim {
                return Err(Error::Config("sidecar dimensions disagree with CSV".into()));
            }
            data.theta_true = s.theta_true;
            data.model = s.model;
            if let (Some(seed), Some(stream)) = (s.seed, s.stream) {
                data.stream = Some(RngStream::new(seed, stream));
            }
        }
        Ok(data)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    #[serde(rename = "T")]
    horizon: usize,
    obs_dim: usize,
    state_dim: Option<usize>,
    input_dim: Option<usize>,
    initial_state: Option<Vec<f64>>,
    theta_true: Option<Vec<f64>>,
    seed: Option<u64>,
    stream: Option<u64>,
    model: Option<String>,
    #[serde(default)]
    config: Option<String>,
}
