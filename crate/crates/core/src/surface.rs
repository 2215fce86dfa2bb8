//! Deterministic re-evaluation of the likelihood estimator over a frozen
//! particle system.
//!
//! With particles and ancestors fixed by a bootstrap run at `θ_ref`, the
//! estimator at any θ is
//!
//! ```text
//! log w_t^n = log( w_{t-1}^a / Σ_j w_{t-1}^{a_t^j} ) - log ★_t^n
//!           + log f_θ(x_t^n | x_{t-1}^a) - log f_{θ_ref}(x_t^n | x_{t-1}^a)
//!           + log g_θ(y_t | x_t^n)
//! ★_t^n     = g_{θ_ref}(y_{t-1} | x_{t-1}^a) / Σ_j g_{θ_ref}(y_{t-1} | x_{t-1}^{a_t^j})
//! log ẑ     = Σ_t log( (1/N) Σ_n w_t^n )
//! ```
//!
//! where `a = a_t^n` and both normalizers sum over the resampled ancestors.
//! At step 1 the ancestor-weight and ★ terms are both uniform. At θ = θ_ref
//! the first two terms cancel, as do the transition terms, leaving
//! `w_t^n = g_{θ_ref}(y_t | x_t^n)`; the implementation reproduces the
//! online estimate bit for bit.
//!
//! Summing over resampled ancestors makes each step a ratio estimator whose
//! bias away from θ_ref does not vanish as N grows. [`Normalization::AllParticles`]
//! sums both normalizers over all N particles instead, which gives the
//! unbiased auxiliary-filter estimate for proposal `f_{θ_ref}` and
//! resampling weights `g_{θ_ref}`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Density, Error, Result};
use crate::filter::{add_log_terms, ParticleSystem};
use crate::io::{fmt_f64, CsvOut};
use crate::logspace::{log_mean_exp, log_sum_exp};
use crate::model::StateSpaceModel;
use crate::param::ParamVector;

/// `log ẑ_θ^{θ_ref}` with its per-step factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceValue {
    pub loglik: f64,
    pub per_step: Vec<f64>,
    /// First step at which every weight vanished; `loglik` is then `-inf`.
    pub degenerate_at: Option<usize>,
}

impl SurfaceValue {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate_at.is_some()
    }
}

/// What the ancestor-weight and ★ normalizers sum over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `Σ_j w_{t-1}^{a_t^j}`: the weights of the resampled ancestors. Makes
    /// the step factor a product-of-sums with weights summing to one.
    #[default]
    ResampledAncestors,
    /// `Σ_j w_{t-1}^j`: every particle at t-1.
    AllParticles,
}

pub struct LocalLikelihoodSurface<'a, M: ?Sized> {
    system: &'a ParticleSystem,
    model: &'a M,
    theta_ref: ParamVector,
    normalization: Normalization,
    /// `log f_{θ_ref}(x_t^n | x_{t-1}^{a_t^n})`, row t-1.
    ref_trans: Vec<f64>,
    /// `log ★_t^n`, row t-1.
    log_star: Vec<f64>,
}

impl<'a, M: StateSpaceModel + ?Sized> LocalLikelihoodSurface<'a, M> {
    /// Precomputes every θ-independent term, with the default normalization.
    pub fn build(system: &'a ParticleSystem, model: &'a M) -> Result<Self> {
        Self::build_with(system, model, Normalization::default())
    }

    pub fn build_with(system: &'a ParticleSystem, model: &'a M, normalization: Normalization) -> Result<Self> {
        let mismatch = |what, expected, got| Error::DimensionMismatch { what, expected, got };
        if model.state_dim() != system.state_dim() {
            return Err(mismatch("state dimension", model.state_dim(), system.state_dim()));
        }
        if model.obs_dim() != system.obs_dim() {
            return Err(mismatch("observation dimension", model.obs_dim(), system.obs_dim()));
        }
        let d = model.param_transforms().len();
        if d != system.theta_ref().dim() {
            return Err(mismatch("parameter dimension", d, system.theta_ref().dim()));
        }

        let (n, horizon) = (system.num_particles(), system.horizon());
        let theta_ref = system.theta_ref().clone();
        let mut ref_trans = Vec::with_capacity(horizon * n);
        let mut log_star = Vec::with_capacity(horizon * n);
        let mut gathered = vec![0.0; n];
        let uniform = -(n as f64).ln();

        for t in 1..=horizon {
            let anc = system.ancestors_at(t);
            for i in 0..n {
                let lf = model.trans_logdensity(&theta_ref, system.particle(t, i), system.particle(t - 1, anc[i]), t);
                if lf.is_nan() {
                    return Err(Error::BadDensity { density: Density::Transition, value: lf, t, particle: i });
                }
                ref_trans.push(lf);
            }
            if t == 1 {
                log_star.extend(std::iter::repeat_n(uniform, n));
            } else {
                // the online weights at t-1 are exactly log g_{θ_ref}(y_{t-1} | x_{t-1})
                let prev = system.logweights_at(t - 1);
                let norm = match normalization {
                    Normalization::ResampledAncestors => {
                        for (g, &a) in gathered.iter_mut().zip(anc) {
                            *g = prev[a];
                        }
                        log_sum_exp(&gathered)
                    }
                    Normalization::AllParticles => log_sum_exp(prev),
                };
                log_star.extend(anc.iter().map(|&a| prev[a] - norm));
            }
        }

        Ok(Self { system, model, theta_ref, normalization, ref_trans, log_star })
    }

    pub fn theta_ref(&self) -> &ParamVector {
        &self.theta_ref
    }

    pub fn system(&self) -> &ParticleSystem {
        self.system
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Cached `log ★_t^{1..N}`, t in 1..=T.
    pub fn log_star_at(&self, t: usize) -> &[f64] {
        let n = self.system.num_particles();
        &self.log_star[(t - 1) * n..t * n]
    }

    /// Cached `log f_{θ_ref}(x_t^n | x_{t-1}^{a_t^n})`, t in 1..=T.
    pub fn ref_trans_at(&self, t: usize) -> &[f64] {
        let n = self.system.num_particles();
        &self.ref_trans[(t - 1) * n..t * n]
    }

    /// Evaluates `log ẑ_θ^{θ_ref}`. Pure: no randomness, no interior
    /// mutability.
    pub fn eval(&self, theta: &[f64]) -> Result<SurfaceValue> {
        if theta.len() != self.theta_ref.dim() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.theta_ref.dim(),
                got: theta.len(),
            });
        }
        let sys = self.system;
        let (n, horizon) = (sys.num_particles(), sys.horizon());
        let mut prev = vec![0.0; n];
        let mut cur = vec![0.0; n];
        let mut gathered = vec![0.0; n];
        let mut per_step = Vec::with_capacity(horizon);

        for t in 1..=horizon {
            let anc = sys.ancestors_at(t);
            let star = self.log_star_at(t);
            let ref_f = self.ref_trans_at(t);
            let y = sys.y(t);
            let norm = match self.normalization {
                Normalization::ResampledAncestors => {
                    for (g, &a) in gathered.iter_mut().zip(anc) {
                        *g = prev[a];
                    }
                    log_sum_exp(&gathered)
                }
                Normalization::AllParticles => log_sum_exp(&prev),
            };
            for i in 0..n {
                let a = anc[i];
                let x = sys.particle(t, i);
                let lf = self.model.trans_logdensity(theta, x, sys.particle(t - 1, a), t);
                if lf.is_nan() || lf == f64::INFINITY {
                    return Err(Error::BadDensity { density: Density::Transition, value: lf, t, particle: i });
                }
                let lg = self.model.obs_logdensity(theta, y, x, t);
                if lg.is_nan() || lg == f64::INFINITY {
                    return Err(Error::BadDensity { density: Density::Observation, value: lg, t, particle: i });
                }
                let ancestor = prev[a] - norm;
                let reweight = if ancestor == f64::NEG_INFINITY { ancestor } else { ancestor - star[i] };
                let transition = if lf == f64::NEG_INFINITY || ref_f[i] == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    lf - ref_f[i]
                };
                cur[i] = add_log_terms(&[reweight, transition, lg]);
            }
            let log_z = log_mean_exp(&cur);
            if log_z == f64::NEG_INFINITY || log_z.is_nan() {
                per_step.push(f64::NEG_INFINITY);
                return Ok(SurfaceValue { loglik: f64::NEG_INFINITY, per_step, degenerate_at: Some(t) });
            }
            per_step.push(log_z);
            std::mem::swap(&mut prev, &mut cur);
        }

        let loglik = per_step.iter().sum();
        Ok(SurfaceValue { loglik, per_step, degenerate_at: None })
    }

    /// Log-likelihood only; `-inf` when degenerate.
    pub fn loglik(&self, theta: &[f64]) -> Result<f64> {
        self.eval(theta).map(|v| v.loglik)
    }

    /// Evaluates every grid point, in order. Points are evaluated in
    /// parallel; results do not depend on scheduling.
    pub fn eval_grid(&self, grid: &[ParamVector]) -> Result<Vec<SurfaceValue>> {
        if grid.is_empty() {
            return Err(Error::InvalidParameter("empty evaluation grid".into()));
        }
        grid.par_iter().map(|p| self.eval(p)).collect()
    }
}

/// Builds the surface; see [`LocalLikelihoodSurface::build`].
pub fn build_surface<'a, M: StateSpaceModel + ?Sized>(
    system: &'a ParticleSystem,
    model: &'a M,
) -> Result<LocalLikelihoodSurface<'a, M>> {
    LocalLikelihoodSurface::build(system, model)
}

/// One frozen system's curve, as emitted to `fig1_surfaces.csv`-style files.
pub struct GridBlock {
    pub repeat: usize,
    pub theta_ref: ParamVector,
    pub online_loglik: f64,
    pub points: Vec<ParamVector>,
    pub values: Vec<SurfaceValue>,
    /// Optional exact log-likelihood at each point (LGSS overlay).
    pub exact: Option<Vec<f64>>,
}

/// Columns: `repeat, ref_<name>.., online_loglik, <name>.., loglik,
/// degenerate[, exact_loglik]`.
pub fn write_grid_csv(path: &Path, preamble: Option<&str>, names: &[String], blocks: &[GridBlock]) -> Result<()> {
    let with_exact = blocks.iter().any(|b| b.exact.is_some());
    let mut header = vec!["repeat".to_string()];
    header.extend(names.iter().map(|n| format!("ref_{n}")));
    header.push("online_loglik".into());
    header.extend(names.iter().cloned());
    header.extend(["loglik".to_string(), "degenerate".to_string()]);
    if with_exact {
        header.push("exact_loglik".into());
    }
    let mut out = CsvOut::create(path, preamble, &header)?;
    for b in blocks {
        for (k, (p, v)) in b.points.iter().zip(&b.values).enumerate() {
            let mut row = vec![b.repeat.to_string()];
            row.extend(b.theta_ref.iter().map(|&x| fmt_f64(x)));
            row.push(fmt_f64(b.online_loglik));
            row.extend(p.iter().map(|&x| fmt_f64(x)));
            row.push(fmt_f64(v.loglik));
            row.push(u8::from(v.is_degenerate()).to_string());
            if with_exact {
                row.push(b.exact.as_ref().map(|e| fmt_f64(e[k])).unwrap_or_default());
            }
            out.row(&row)?;
        }
    }
    out.finish()
}
