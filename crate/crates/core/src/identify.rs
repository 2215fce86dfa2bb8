//! The outer identification loop, final-estimate extraction and the
//! stochastic-gradient baseline.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::filter::run_frozen_bootstrap;
use crate::io::{fmt_f64, CsvOut};
use crate::model::{check_theta, StateSpaceModel};
use crate::optim::{maximize, OptimizerConfig, Termination};
use crate::param::ParamVector;
use crate::rng::RngStream;
use crate::surface::{LocalLikelihoodSurface, Normalization};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentifyConfig {
    /// Outer iterations K.
    pub iterations: usize,
    /// Particles N.
    pub particles: usize,
    pub optimizer: OptimizerConfig,
    /// Iteration k draws its particle system from `master.derive(k)`.
    pub master: RngStream,
    /// If set, every frozen surface is also evaluated on these points.
    #[serde(default)]
    pub record_grid: Option<Vec<ParamVector>>,
    #[serde(default)]
    pub normalization: Normalization,
}

impl IdentifyConfig {
    pub fn new(iterations: usize, particles: usize, master: RngStream) -> Self {
        Self {
            iterations,
            particles,
            optimizer: OptimizerConfig::default(),
            master,
            record_grid: None,
            normalization: Normalization::default(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("K must be >= 1".into()));
        }
        if self.particles == 0 {
            return Err(Error::Config("N must be >= 1".into()));
        }
        self.optimizer.validate(dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMethod {
    FrozenSurface,
    StochasticGradient,
}

/// What happened in outer iteration k (producing `thetas[k]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub stream: RngStream,
    /// `log ẑ` of the frozen filter at `θ_{k-1}`.
    pub online_loglik: f64,
    /// Surface value at `θ_k` (frozen-surface method).
    pub value: Option<f64>,
    /// Surface evaluations spent in this iteration, excluding the filter run.
    pub surface_evals: usize,
    pub converged: Option<bool>,
    pub termination: Option<Termination>,
    /// SGD: step size γ_k and the unconstrained-space gradient.
    pub step_size: Option<f64>,
    pub gradient: Option<Vec<f64>>,
    /// SGD: the gradient was not finite and θ was left unchanged.
    pub skipped: bool,
    pub surface_grid: Option<Vec<f64>>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub method: TraceMethod,
    pub param_names: Vec<String>,
    /// θ_0..θ_K (shorter when aborted).
    pub thetas: Vec<ParamVector>,
    pub records: Vec<IterationRecord>,
    /// Set when the loop stopped early, with the reason.
    pub aborted: Option<String>,
    /// Set by the SGD baseline when the iterates ran away.
    pub diverged: bool,
}

impl IterationTrace {
    pub fn final_theta(&self) -> &ParamVector {
        self.thetas.last().expect("trace always holds θ_0")
    }

    /// Density-evaluation cost in units of one pass over the particle
    /// system: each filter run plus each surface evaluation.
    pub fn cost_in_passes(&self) -> usize {
        self.records.iter().map(|r| r.surface_evals + 1).sum()
    }

    /// Equality ignoring wall-clock timings.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let strip = |t: &Self| {
            let mut t = t.clone();
            t.records.iter_mut().for_each(|r| r.wall_ms = 0.0);
            t
        };
        strip(self) == strip(other)
    }

    /// `k, <names>.., value, online_loglik, evals, converged, skipped`; one
    /// row per θ_k including θ_0. Wall-clock times go to the JSON form only,
    /// so equal runs produce identical CSV bytes.
    pub fn write_csv(&self, path: &Path, preamble: Option<&str>) -> Result<()> {
        let mut header = vec!["k".to_string()];
        header.extend(self.param_names.iter().cloned());
        header.extend(["value", "online_loglik", "evals", "converged", "skipped"].map(String::from));
        let mut out = CsvOut::create(path, preamble, &header)?;
        for (k, theta) in self.thetas.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(theta.iter().map(|&v| fmt_f64(v)));
            match k.checked_sub(1).and_then(|i| self.records.get(i)) {
                Some(r) => {
                    row.push(r.value.map(fmt_f64).unwrap_or_default());
                    row.push(fmt_f64(r.online_loglik));
                    row.push(r.surface_evals.to_string());
                    row.push(r.converged.map(|c| u8::from(c).to_string()).unwrap_or_default());
                    row.push(u8::from(r.skipped).to_string());
                }
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
            out.row(&row)?;
        }
        out.finish()
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Iterates: freeze a bootstrap filter at `θ_{k-1}`, maximize the frozen
/// surface starting from `θ_{k-1}`, take the maximizer as `θ_k`.
///
/// A weight degeneracy at `θ_0` is an error. A later one stops the loop and
/// returns the trace so far with `aborted` set.
pub fn identify<M: StateSpaceModel + ?Sized>(
    model: &M,
    data: &Dataset,
    theta0: &ParamVector,
    cfg: &IdentifyConfig,
) -> Result<IterationTrace> {
    check_theta(model, theta0)?;
    cfg.validate(theta0.dim())?;
    let mut trace = IterationTrace {
        method: TraceMethod::FrozenSurface,
        param_names: model.param_names(),
        thetas: vec![theta0.clone()],
        records: Vec::with_capacity(cfg.iterations),
        aborted: None,
        diverged: false,
    };

    for k in 1..=cfg.iterations {
        let start = Instant::now();
        let stream = cfg.master.derive(k as u64);
        let theta_prev = trace.thetas[k - 1].clone();
        let system = match run_frozen_bootstrap(model, &theta_prev, cfg.particles, data, stream) {
            Ok(s) => s,
            Err(e @ Error::WeightDegeneracy { .. }) if k == 1 => {
                return Err(Error::InvalidParameter(format!("{e} at θ_0 = {:?}; choose a different θ_0", theta_prev.values())));
            }
            Err(e @ Error::WeightDegeneracy { .. }) => {
                trace.aborted = Some(format!("iteration {k}: {e} at θ = {:?}", theta_prev.values()));
                break;
            }
            Err(e) => return Err(e),
        };
        let surface = LocalLikelihoodSurface::build_with(&system, model, cfg.normalization)?;
        let result = maximize(|p| surface.loglik(p), &theta_prev, &cfg.optimizer)?;
        let surface_grid = match &cfg.record_grid {
            Some(grid) => Some(surface.eval_grid(grid)?.into_iter().map(|v| v.loglik).collect()),
            None => None,
        };
        trace.records.push(IterationRecord {
            k,
            stream,
            online_loglik: system.online_loglik(),
            value: Some(result.value),
            surface_evals: result.evals_used,
            converged: Some(result.converged),
            termination: Some(result.termination),
            step_size: None,
            gradient: None,
            skipped: false,
            surface_grid,
            wall_ms: elapsed_ms(start),
        });
        trace.thetas.push(result.argmax);
    }
    Ok(trace)
}

/// Equal-width histogram of one component with its mode bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mode_bin: usize,
}

impl Histogram {
    pub fn center(&self, bin: usize) -> f64 {
        0.5 * (self.edges[bin] + self.edges[bin + 1])
    }

    pub fn mode(&self) -> f64 {
        self.center(self.mode_bin)
    }
}

/// Histogram over `[min, max]` with `bins` equal-width bins. The mode is the
/// highest-count bin; ties go to the larger sum with the adjacent bins, then
/// to the lower index.
pub fn mode_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyPool);
    }
    if bins == 0 {
        return Err(Error::Config("bins must be >= 1".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite value in sample pool".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
        counts[idx] += 1;
    }
    let neighborhood = |i: usize| {
        counts[i] + if i > 0 { counts[i - 1] } else { 0 } + counts.get(i + 1).copied().unwrap_or(0)
    };
    let mut mode_bin = 0;
    for i in 1..bins {
        let better = counts[i] > counts[mode_bin]
            || (counts[i] == counts[mode_bin] && neighborhood(i) > neighborhood(mode_bin));
        if better {
            mode_bin = i;
        }
    }
    Ok(Histogram { edges, counts, mode_bin })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub param_names: Vec<String>,
    pub theta_hat: Vec<f64>,
    pub burn_in: usize,
    pub bins: usize,
    pub histograms: Vec<Histogram>,
    pub samples_used: usize,
}

impl EstimateSummary {
    /// `component, bin, lower, upper, center, count, is_mode`.
    pub fn write_histogram_csv(&self, path: &Path, preamble: Option<&str>) -> Result<()> {
        let header = ["component", "bin", "lower", "upper", "center", "count", "is_mode"].map(String::from);
        let mut out = CsvOut::create(path, preamble, &header)?;
        for (name, h) in self.param_names.iter().zip(&self.histograms) {
            for (b, &c) in h.counts.iter().enumerate() {
                out.row([
                    name.clone(),
                    b.to_string(),
                    fmt_f64(h.edges[b]),
                    fmt_f64(h.edges[b + 1]),
                    fmt_f64(h.center(b)),
                    c.to_string(),
                    u8::from(b == h.mode_bin).to_string(),
                ])?;
            }
        }
        out.finish()
    }
}

/// Pools `θ_k` for `k > burn_in` across traces and takes each component's
/// histogram mode as the estimate.
pub fn extract_estimate(traces: &[IterationTrace], burn_in: usize, bins: usize) -> Result<EstimateSummary> {
    let first = traces.first().ok_or(Error::EmptyPool)?;
    let dim = first.thetas[0].dim();
    let pool: Vec<&ParamVector> = traces.iter().flat_map(|t| t.thetas.iter().skip(burn_in + 1)).collect();
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if pool.len() < bins {
        return Err(Error::InsufficientSamples { samples: pool.len(), bins });
    }
    let histograms = (0..dim)
        .map(|i| mode_histogram(&pool.iter().map(|p| p[i]).collect::<Vec<_>>(), bins))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateSummary {
        param_names: first.param_names.clone(),
        theta_hat: histograms.iter().map(Histogram::mode).collect(),
        burn_in,
        bins,
        samples_used: pool.len(),
        histograms,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgdConfig {
    pub steps: usize,
    pub particles: usize,
    /// γ_k = gamma0 / k^alpha.
    pub gamma0: f64,
    pub alpha: f64,
    pub master: RngStream,
    /// Relative central-difference step in unconstrained space.
    pub fd_step: f64,
    /// Iterates beyond this magnitude count as diverged.
    pub divergence_bound: f64,
    #[serde(default)]
    pub normalization: Normalization,
}

impl SgdConfig {
    pub fn new(steps: usize, particles: usize, gamma0: f64, alpha: f64, master: RngStream) -> Self {
        Self {
            steps,
            particles,
            gamma0,
            alpha,
            master,
            fd_step: 1e-4,
            divergence_bound: 1e6,
            normalization: Normalization::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0) {
            return Err(Error::Config("gamma0 must be > 0".into()));
        }
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return Err(Error::Config("alpha must lie in (0.5, 1]".into()));
        }
        if self.particles == 0 {
            return Err(Error::Config("N must be >= 1".into()));
        }
        Ok(())
    }
}

/// Values of a local objective around `θ_{k-1}`: the value at the centre and
/// at each requested probe point.
pub struct LocalProbe {
    pub center: f64,
    pub probes: Vec<f64>,
}

/// Robbins–Monro ascent in unconstrained space, with the gradient at each
/// step taken by central differences of a local objective supplied by
/// `local(k, θ_{k-1}, probes)`.
///
/// [`sgd_identify`] plugs in the frozen surface; tests can plug in any
/// deterministic function.
pub fn sgd_ascent<F>(theta0: &ParamVector, cfg: &SgdConfig, param_names: Vec<String>, mut local: F) -> Result<IterationTrace>
where
    F: FnMut(usize, &ParamVector, &[ParamVector]) -> Result<Option<LocalProbe>>,
{
    cfg.validate()?;
    let d = theta0.dim();
    let tags = theta0.transforms().to_vec();
    let mut trace = IterationTrace {
        method: TraceMethod::StochasticGradient,
        param_names,
        thetas: vec![theta0.clone()],
        records: Vec::with_capacity(cfg.steps),
        aborted: None,
        diverged: false,
    };

    for k in 1..=cfg.steps {
        let start = Instant::now();
        let theta = trace.thetas[k - 1].clone();
        let v = theta.to_unconstrained();
        let h: Vec<f64> = v.iter().map(|x| cfg.fd_step * x.abs().max(1.0)).collect();
        let mut probes = Vec::with_capacity(2 * d);
        let mut probe_ok = true;
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut p = v.clone();
                p[i] += sign * h[i];
                match ParamVector::from_unconstrained(&p, &tags) {
                    Ok(pv) => probes.push(pv),
                    Err(_) => probe_ok = false,
                }
            }
        }
        let Some(values) = (if probe_ok { local(k, &theta, &probes)? } else { None }) else {
            trace.diverged = true;
            trace.aborted = Some(format!("step {k}: local objective unavailable at θ = {:?}", theta.values()));
            break;
        };
        let grad: Vec<f64> = (0..d).map(|i| (values.probes[2 * i] - values.probes[2 * i + 1]) / (2.0 * h[i])).collect();
        let gamma = cfg.gamma0 / (k as f64).powf(cfg.alpha);
        let skipped = grad.iter().any(|g| !g.is_finite());
        let next = if skipped {
            theta.clone()
        } else {
            let stepped: Vec<f64> = v.iter().zip(&grad).map(|(x, g)| x + gamma * g).collect();
            match ParamVector::from_unconstrained(&stepped, &tags) {
                Ok(p) if p.iter().all(|x| x.abs() <= cfg.divergence_bound) => p,
                _ => {
                    trace.diverged = true;
                    trace.aborted = Some(format!("step {k}: iterate left the bounded region"));
                    theta.clone()
                }
            }
        };
        trace.records.push(IterationRecord {
            k,
            stream: cfg.master.derive(k as u64),
            online_loglik: values.center,
            value: None,
            surface_evals: 2 * d,
            converged: None,
            termination: None,
            step_size: Some(gamma),
            gradient: Some(grad),
            skipped,
            surface_grid: None,
            wall_ms: elapsed_ms(start),
        });
        if trace.diverged {
            break;
        }
        trace.thetas.push(next);
    }
    Ok(trace)
}

/// Stochastic-gradient baseline on the frozen surface: at each step a new
/// system is frozen at `θ_{k-1}` and only a gradient step is taken.
///
/// A weight degeneracy stops the run with `diverged` set rather than
/// failing.
pub fn sgd_identify<M: StateSpaceModel + ?Sized>(
    model: &M,
    data: &Dataset,
    theta0: &ParamVector,
    cfg: &SgdConfig,
) -> Result<IterationTrace> {
    check_theta(model, theta0)?;
    sgd_ascent(theta0, cfg, model.param_names(), |k, theta, probes| {
        let stream = cfg.master.derive(k as u64);
        let system = match run_frozen_bootstrap(model, theta, cfg.particles, data, stream) {
            Ok(s) => s,
            Err(Error::WeightDegeneracy { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let surface = LocalLikelihoodSurface::build_with(&system, model, cfg.normalization)?;
        let probes = probes.iter().map(|p| surface.loglik(p)).collect::<Result<Vec<_>>>()?;
        Ok(Some(LocalProbe { center: system.online_loglik(), probes }))
    })
}
