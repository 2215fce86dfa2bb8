//! Auxiliary particle filter and the frozen bootstrap run.
//!
//! Both filters resample multinomially at every step and keep all weights in
//! log space. Per step the RNG is consumed in a fixed order: `N` ancestor
//! draws, then one propagation per particle in index order. Two filters fed
//! the same stream and the same resampling weights therefore produce the
//! same particle system.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Density, Error, Result};
use crate::logspace::{log_mean_exp, log_sum_exp};
use crate::model::{check_data, check_theta, StateSpaceModel};
use crate::param::{ParamVector, Transform};
use crate::rng::{RngStream, StreamRng};

/// Draws `count` i.i.d. indices with `P(j) = weights[j] / Σ weights`.
pub fn categorical_resample(weights: &[f64], count: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
    let mut out = vec![0; count];
    let mut cumulative = Vec::with_capacity(weights.len());
    categorical_resample_into(weights, rng, &mut cumulative, &mut out)?;
    Ok(out)
}

fn categorical_resample_into(
    weights: &[f64],
    rng: &mut StreamRng,
    cumulative: &mut Vec<f64>,
    out: &mut [usize],
) -> Result<()> {
    cumulative.clear();
    let mut total = 0.0;
    let mut last_positive = None;
    for (j, &w) in weights.iter().enumerate() {
        if w.is_nan() {
            return Err(Error::WeightDegeneracy { t: 0 });
        }
        if w < 0.0 || w.is_infinite() {
            return Err(Error::InvalidParameter(format!("resampling weight {w} at index {j}")));
        }
        if w > 0.0 {
            last_positive = Some(j);
        }
        total += w;
        cumulative.push(total);
    }
    let last_positive = last_positive.ok_or(Error::WeightDegeneracy { t: 0 })?;
    for slot in out.iter_mut() {
        let u = rng.random::<f64>() * total;
        // first j with cumulative[j] > u; zero-weight entries never qualify
        let j = cumulative.partition_point(|&c| c <= u);
        *slot = j.min(last_positive);
    }
    Ok(())
}

/// A user-supplied proposal `q(x_t | x_{t-1}, y_t)`. Its support must cover
/// that of the transition density.
pub trait Proposal: Send + Sync {
    fn sample(&self, theta: &[f64], prev: &[f64], y: &[f64], t: usize, rng: &mut StreamRng, out: &mut [f64]);
    fn logdensity(&self, theta: &[f64], next: &[f64], prev: &[f64], y: &[f64], t: usize) -> f64;
}

/// A user-supplied resampling-weight rule `ν_t = ν(x_t, w_t, t)`, in log
/// space.
pub trait ResamplingRule: Send + Sync {
    fn log_weight(&self, x: &[f64], log_w: f64, y: &[f64], t: usize) -> f64;
}

pub enum ProposalChoice<'a> {
    /// `q = f_θ`.
    Transition,
    /// `q = f_{θ_ref}` for a fixed reference parameter.
    ReferenceTransition(ParamVector),
    Custom(&'a dyn Proposal),
}

pub enum ResamplingChoice<'a> {
    /// `ν_t = w_t`.
    ImportanceWeights,
    /// `ν_t = g_{θ_ref}(y_t | x_t)`.
    ReferenceLikelihood(ParamVector),
    Custom(&'a dyn ResamplingRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// The bootstrap choice at a reference parameter; makes every random
    /// quantity independent of the θ being evaluated.
    BootstrapAtReference,
    Custom,
}

pub struct ApfConfig<'a> {
    pub particles: usize,
    pub proposal: ProposalChoice<'a>,
    pub resampling: ResamplingChoice<'a>,
}

impl<'a> ApfConfig<'a> {
    /// Standard bootstrap filter: `q = f_θ`, `ν = w`.
    pub fn bootstrap(particles: usize) -> Self {
        Self {
            particles,
            proposal: ProposalChoice::Transition,
            resampling: ResamplingChoice::ImportanceWeights,
        }
    }

    /// `q = f_{θ_ref}`, `ν_t = g_{θ_ref}(y_t | x_t)`.
    pub fn bootstrap_at_reference(particles: usize, theta_ref: ParamVector) -> Self {
        Self {
            particles,
            proposal: ProposalChoice::ReferenceTransition(theta_ref.clone()),
            resampling: ResamplingChoice::ReferenceLikelihood(theta_ref),
        }
    }

    pub fn weight_mode(&self) -> WeightMode {
        match (&self.proposal, &self.resampling) {
            (ProposalChoice::ReferenceTransition(_), ResamplingChoice::ReferenceLikelihood(_)) => {
                WeightMode::BootstrapAtReference
            }
            _ => WeightMode::Custom,
        }
    }
}

/// Everything a filter run generated: `x_{0:T}`, `a_{1:T}`, the weights it
/// computed online, and the stream that reproduces it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    particles: Vec<f64>,
    ancestors: Vec<usize>,
    logweights: Vec<f64>,
    observations: Vec<f64>,
    obs_dim: usize,
    state_dim: usize,
    n: usize,
    horizon: usize,
    theta_ref: ParamVector,
    online_loglik: f64,
    stream: RngStream,
}

impl ParticleSystem {
    /// Assembles a system from raw arrays, checking shapes and ancestor
    /// ranges. `online_loglik` is recomputed from `logweights`.
    ///
    /// Layouts: `particles` is `(T+1) × N × state_dim`, `ancestors` is
    /// `T × N` (row `t-1` holds `a_t`), `logweights` is `(T+1) × N`,
    /// `observations` is `T × obs_dim`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        particles: Vec<f64>,
        ancestors: Vec<usize>,
        logweights: Vec<f64>,
        observations: Vec<f64>,
        obs_dim: usize,
        state_dim: usize,
        n: usize,
        theta_ref: ParamVector,
        stream: RngStream,
    ) -> Result<Self> {
        if n == 0 || state_dim == 0 || obs_dim == 0 {
            return Err(Error::InvalidParameter("particle system dimensions must be positive".into()));
        }
        if observations.is_empty() || !observations.len().is_multiple_of(obs_dim) {
            return Err(Error::InvalidParameter("observations do not form whole vectors".into()));
        }
        let horizon = observations.len() / obs_dim;
        let expect = |what, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { what, expected, got })
            }
        };
        expect("particle array", (horizon + 1) * n * state_dim, particles.len())?;
        expect("ancestor array", horizon * n, ancestors.len())?;
        expect("log-weight array", (horizon + 1) * n, logweights.len())?;
        if let Some(&bad) = ancestors.iter().find(|&&a| a >= n) {
            return Err(Error::InvalidParameter(format!("ancestor index {bad} out of range for N={n}")));
        }
        let online_loglik = (1..=horizon)
            .map(|t| log_mean_exp(&logweights[t * n..(t + 1) * n]))
            .sum();
        Ok(Self {
            particles,
            ancestors,
            logweights,
            observations,
            obs_dim,
            state_dim,
            n,
            horizon,
            theta_ref,
            online_loglik,
            stream,
        })
    }

    pub fn num_particles(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn theta_ref(&self) -> &ParamVector {
        &self.theta_ref
    }

    pub fn online_loglik(&self) -> f64 {
        self.online_loglik
    }

    pub fn stream(&self) -> RngStream {
        self.stream
    }

    /// `x_t^n` for t in 0..=T.
    #[inline]
    pub fn particle(&self, t: usize, n: usize) -> &[f64] {
        let i = (t * self.n + n) * self.state_dim;
        &self.particles[i..i + self.state_dim]
    }

    /// `a_t^n` for t in 1..=T.
    #[inline]
    pub fn ancestor(&self, t: usize, n: usize) -> usize {
        self.ancestors[(t - 1) * self.n + n]
    }

    /// `a_t^{1..N}` for t in 1..=T.
    #[inline]
    pub fn ancestors_at(&self, t: usize) -> &[usize] {
        &self.ancestors[(t - 1) * self.n..t * self.n]
    }

    /// `log w_t^{1..N}` as computed during generation, t in 0..=T.
    #[inline]
    pub fn logweights_at(&self, t: usize) -> &[f64] {
        &self.logweights[t * self.n..(t + 1) * self.n]
    }

    /// `y_t` for t in 1..=T.
    #[inline]
    pub fn y(&self, t: usize) -> &[f64] {
        &self.observations[(t - 1) * self.obs_dim..t * self.obs_dim]
    }

    /// Per-step `log z_t = log((1/N) Σ_n w_t^n)` from the online weights.
    pub fn online_step_logliks(&self) -> Vec<f64> {
        (1..=self.horizon).map(|t| log_mean_exp(self.logweights_at(t))).collect()
    }

    const MAGIC: &'static [u8; 8] = b"PFMLSYS\0";
    const VERSION: u32 = 1;

    /// Writes the versioned little-endian binary archive.
    pub fn write_archive<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        let d = self.theta_ref.dim();
        for v in [self.n, self.horizon, self.state_dim, self.obs_dim, d] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&self.stream.seed.to_le_bytes())?;
        w.write_all(&self.stream.stream.to_le_bytes())?;
        for &tr in self.theta_ref.transforms() {
            w.write_all(&[match tr {
                Transform::Unconstrained => 0u8,
                Transform::LogPositive => 1u8,
            }])?;
        }
        let put = |w: &mut W, xs: &[f64]| -> std::io::Result<()> {
            xs.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))
        };
        put(&mut w, self.theta_ref.values())?;
        put(&mut w, &self.observations)?;
        put(&mut w, &self.particles)?;
        for &a in &self.ancestors {
            w.write_all(&(a as u64).to_le_bytes())?;
        }
        put(&mut w, &self.logweights)?;
        w.write_all(&self.online_loglik.to_le_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_archive<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Archive("not a particle-system archive".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != Self::VERSION {
            return Err(Error::Archive(format!("unsupported archive version {version}")));
        }
        let u64s = |r: &mut R, k: usize| -> Result<Vec<u64>> {
            let mut out = Vec::with_capacity(k);
            let mut b = [0u8; 8];
            for _ in 0..k {
                r.read_exact(&mut b)?;
                out.push(u64::from_le_bytes(b));
            }
            Ok(out)
        };
        let header = u64s(&mut r, 7)?;
        let [n, horizon, state_dim, obs_dim, d] = [0, 1, 2, 3, 4].map(|i| header[i] as usize);
        let stream = RngStream::new(header[5], header[6]);
        // refuse absurd sizes before allocating
        let cells = (horizon as u128 + 1) * n as u128 * state_dim.max(1) as u128;
        if cells > (1u128 << 34) || d > 1 << 16 {
            return Err(Error::Archive("archive dimensions are implausibly large".into()));
        }
        let mut tags = vec![0u8; d];
        r.read_exact(&mut tags)?;
        let transforms = tags
            .iter()
            .map(|&b| match b {
                0 => Ok(Transform::Unconstrained),
                1 => Ok(Transform::LogPositive),
                other => Err(Error::Archive(format!("unknown transform tag {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let f64s = |r: &mut R, k: usize| -> Result<Vec<f64>> {
            Ok(u64s(r, k)?.into_iter().map(f64::from_bits).collect())
        };
        let theta = ParamVector::new(f64s(&mut r, d)?, transforms)?;
        let observations = f64s(&mut r, horizon * obs_dim)?;
        let particles = f64s(&mut r, (horizon + 1) * n * state_dim)?;
        let ancestors = u64s(&mut r, horizon * n)?.into_iter().map(|a| a as usize).collect();
        let logweights = f64s(&mut r, (horizon + 1) * n)?;
        let stored = f64s(&mut r, 1)?[0];
        let system = Self::from_parts(
            particles, ancestors, logweights, observations, obs_dim, state_dim, n, theta, stream,
        )?;
        if system.online_loglik.to_bits() != stored.to_bits() {
            return Err(Error::Archive(format!(
                "stored log-likelihood {stored} disagrees with weights ({})",
                system.online_loglik
            )));
        }
        Ok(system)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_archive(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_archive(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn check_density(value: f64, density: Density, t: usize, particle: usize) -> Result<f64> {
    if value.is_nan() || value == f64::INFINITY {
        Err(Error::BadDensity { density, value, t, particle })
    } else {
        Ok(value)
    }
}

/// Adds log-terms where any `-inf` makes the whole weight zero.
#[inline]
pub(crate) fn add_log_terms(terms: &[f64]) -> f64 {
    if terms.contains(&f64::NEG_INFINITY) {
        f64::NEG_INFINITY
    } else {
        terms.iter().sum()
    }
}

fn shifted_weights(logw: &[f64], out: &mut Vec<f64>) {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(logw.iter().map(|&l| (l - max).exp()));
}

struct Buffers {
    particles: Vec<f64>,
    ancestors: Vec<usize>,
    logweights: Vec<f64>,
    shifted: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Buffers {
    fn new(horizon: usize, n: usize, dx: usize) -> Self {
        Self {
            particles: vec![0.0; (horizon + 1) * n * dx],
            ancestors: vec![0; horizon * n],
            logweights: vec![0.0; (horizon + 1) * n],
            shifted: Vec::with_capacity(n),
            cumulative: Vec::with_capacity(n),
        }
    }
}

/// Runs the auxiliary particle filter at θ and returns `log ẑ_θ` together
/// with the generated system.
///
/// With `w_0 = ν_0 = 1`, each step resamples by `ν_{t-1}`, propagates from
/// the proposal and sets
///
/// ```text
/// w_t^n = [ (w_{t-1}^a / Σ_j w_{t-1}^j) / (ν_{t-1}^a / Σ_j ν_{t-1}^j) ] · f_θ / q · g_θ
/// ```
///
/// with `a = a_t^n`; `log ẑ = Σ_t log((1/N) Σ_n w_t^n)`.
pub fn run_apf<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    cfg: &ApfConfig<'_>,
    data: &Dataset,
    stream: RngStream,
) -> Result<(f64, ParticleSystem)> {
    check_theta(model, theta)?;
    check_data(model, data)?;
    let n = cfg.particles;
    if n == 0 {
        return Err(Error::InvalidParameter("particle count must be >= 1".into()));
    }
    if let ProposalChoice::ReferenceTransition(r) = &cfg.proposal {
        check_theta(model, r)?;
    }
    if let ResamplingChoice::ReferenceLikelihood(r) = &cfg.resampling {
        check_theta(model, r)?;
    }
    let (dx, horizon) = (model.state_dim(), data.len());
    let mut rng = stream.generator();
    let mut buf = Buffers::new(horizon, n, dx);
    let mut lognu = vec![0.0; (horizon + 1) * n];

    for i in 0..n {
        model.init_sample(&mut rng, &mut buf.particles[i * dx..(i + 1) * dx]);
    }

    for t in 1..=horizon {
        let y = data.y(t);
        let prev_w = &buf.logweights[(t - 1) * n..t * n];
        let prev_nu = &lognu[(t - 1) * n..t * n];
        shifted_weights(prev_nu, &mut buf.shifted);
        let anc = &mut buf.ancestors[(t - 1) * n..t * n];
        categorical_resample_into(&buf.shifted, &mut rng, &mut buf.cumulative, anc).map_err(|e| e.at_step(t))?;
        let lse_w = log_sum_exp(prev_w);
        let lse_nu = log_sum_exp(prev_nu);

        let (past, rest) = buf.particles.split_at_mut(t * n * dx);
        let prev_layer = &past[(t - 1) * n * dx..];
        let layer = &mut rest[..n * dx];
        let (wpast, wrest) = buf.logweights.split_at_mut(t * n);
        let prev_w = &wpast[(t - 1) * n..];
        let cur_w = &mut wrest[..n];
        let (npast, nrest) = lognu.split_at_mut(t * n);
        let prev_nu = &npast[(t - 1) * n..];
        let cur_nu = &mut nrest[..n];

        for i in 0..n {
            let a = anc[i];
            let xp = &prev_layer[a * dx..(a + 1) * dx];
            let x = &mut layer[i * dx..(i + 1) * dx];
            let ratio = match &cfg.proposal {
                ProposalChoice::Transition => {
                    model.trans_sample(theta, xp, t, &mut rng, x);
                    0.0
                }
                ProposalChoice::ReferenceTransition(r) => {
                    model.trans_sample(r, xp, t, &mut rng, x);
                    let lf = check_density(model.trans_logdensity(theta, x, xp, t), Density::Transition, t, i)?;
                    let lq = model.trans_logdensity(r, x, xp, t);
                    proposal_ratio(lf, lq, x, t, i)?
                }
                ProposalChoice::Custom(q) => {
                    q.sample(theta, xp, y, t, &mut rng, x);
                    let lf = check_density(model.trans_logdensity(theta, x, xp, t), Density::Transition, t, i)?;
                    let lq = q.logdensity(theta, x, xp, y, t);
                    proposal_ratio(lf, lq, x, t, i)?
                }
            };
            let lg = check_density(model.obs_logdensity(theta, y, x, t), Density::Observation, t, i)?;
            let prefactor = (prev_w[a] - lse_w) - (prev_nu[a] - lse_nu);
            cur_w[i] = add_log_terms(&[prefactor, ratio, lg]);
            cur_nu[i] = match &cfg.resampling {
                ResamplingChoice::ImportanceWeights => cur_w[i],
                ResamplingChoice::ReferenceLikelihood(r) => {
                    check_density(model.obs_logdensity(r, y, x, t), Density::Resampling, t, i)?
                }
                ResamplingChoice::Custom(rule) => {
                    check_density(rule.log_weight(x, cur_w[i], y, t), Density::Resampling, t, i)?
                }
            };
        }
        if cur_w.iter().all(|&w| w == f64::NEG_INFINITY) {
            return Err(Error::WeightDegeneracy { t });
        }
    }

    let system = ParticleSystem::from_parts(
        buf.particles,
        buf.ancestors,
        buf.logweights,
        data.observations().to_vec(),
        data.obs_dim(),
        dx,
        n,
        theta.clone(),
        stream,
    )?;
    Ok((system.online_loglik, system))
}

fn proposal_ratio(lf: f64, lq: f64, x: &[f64], t: usize, i: usize) -> Result<f64> {
    if lq.is_nan() || lq.is_infinite() {
        if x.iter().all(|v| v.is_finite()) {
            return Err(Error::BadDensity { density: Density::Proposal, value: lq, t, particle: i });
        }
        // the proposal itself produced a non-finite state; the particle dies
        return Ok(f64::NEG_INFINITY);
    }
    Ok(if lf == f64::NEG_INFINITY { f64::NEG_INFINITY } else { lf - lq })
}

/// The bootstrap filter at a reference parameter, keeping the whole system.
///
/// Ancestors are drawn from `𝒞({w_{t-1}^j})`, particles from
/// `f_{θ_ref}(· | x_{t-1}^a)`, and `w_t^n = g_{θ_ref}(y_t | x_t^n)`.
pub fn run_frozen_bootstrap<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta_ref: &ParamVector,
    particles: usize,
    data: &Dataset,
    stream: RngStream,
) -> Result<ParticleSystem> {
    check_theta(model, theta_ref)?;
    check_data(model, data)?;
    let n = particles;
    if n == 0 {
        return Err(Error::InvalidParameter("particle count must be >= 1".into()));
    }
    let (dx, horizon) = (model.state_dim(), data.len());
    let mut rng = stream.generator();
    let mut buf = Buffers::new(horizon, n, dx);

    for i in 0..n {
        model.init_sample(&mut rng, &mut buf.particles[i * dx..(i + 1) * dx]);
    }

    for t in 1..=horizon {
        let y = data.y(t);
        shifted_weights(&buf.logweights[(t - 1) * n..t * n], &mut buf.shifted);
        let anc = &mut buf.ancestors[(t - 1) * n..t * n];
        categorical_resample_into(&buf.shifted, &mut rng, &mut buf.cumulative, anc).map_err(|e| e.at_step(t))?;

        let (past, rest) = buf.particles.split_at_mut(t * n * dx);
        let prev_layer = &past[(t - 1) * n * dx..];
        let layer = &mut rest[..n * dx];
        let cur_w = &mut buf.logweights[t * n..(t + 1) * n];
        for i in 0..n {
            let a = anc[i];
            let x = &mut layer[i * dx..(i + 1) * dx];
            model.trans_sample(theta_ref, &prev_layer[a * dx..(a + 1) * dx], t, &mut rng, x);
            cur_w[i] = check_density(model.obs_logdensity(theta_ref, y, x, t), Density::Observation, t, i)?;
        }
        if cur_w.iter().all(|&w| w == f64::NEG_INFINITY) {
            return Err(Error::WeightDegeneracy { t });
        }
    }

    ParticleSystem::from_parts(
        buf.particles,
        buf.ancestors,
        buf.logweights,
        data.observations().to_vec(),
        data.obs_dim(),
        dx,
        n,
        theta_ref.clone(),
        stream,
    )
}
