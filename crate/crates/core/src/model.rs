//! The state-space model contract and ancestral simulation.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::param::{ParamVector, Transform};
use crate::rng::{RngStream, StreamRng};

/// A Markovian state-space model
///
/// ```text
/// x_0 ~ p(x_0)
/// x_t | x_{t-1} ~ f_θ(x_t | x_{t-1})
/// y_t | x_t     ~ g_θ(y_t | x_t)
/// ```
///
/// States, observations and parameters are passed as flat slices so the
/// filters can keep particles in contiguous buffers. The step index `t`
/// runs from 1 to T; any exogenous input enters through it.
///
/// `trans_logdensity` must be the exact log-density of `trans_sample`, and
/// likewise for the observation pair. The initial distribution does not
/// depend on θ, which is why `init_sample` takes no parameters.
pub trait StateSpaceModel: Send + Sync {
    fn name(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;

    /// Transform tag for each unknown parameter; its length is the parameter
    /// dimension.
    fn param_transforms(&self) -> Vec<Transform>;

    fn param_names(&self) -> Vec<String> {
        (0..self.param_transforms().len()).map(|i| format!("theta_{}", i + 1)).collect()
    }

    fn init_sample(&self, rng: &mut StreamRng, out: &mut [f64]);

    fn trans_sample(&self, theta: &[f64], prev: &[f64], t: usize, rng: &mut StreamRng, out: &mut [f64]);

    fn trans_logdensity(&self, theta: &[f64], next: &[f64], prev: &[f64], t: usize) -> f64;

    fn obs_sample(&self, theta: &[f64], x: &[f64], t: usize, rng: &mut StreamRng, out: &mut [f64]);

    fn obs_logdensity(&self, theta: &[f64], y: &[f64], x: &[f64], t: usize) -> f64;

    /// Exogenous input applied on the transition into step `t`, if any.
    fn input(&self, _t: usize) -> Option<&[f64]> {
        None
    }

    fn input_dim(&self) -> usize {
        0
    }

    /// Data-generating parameters for shipped benchmark models.
    fn true_theta(&self) -> Option<ParamVector> {
        None
    }

    /// Checks θ has the right length and satisfies the transform tags.
    fn param_vector(&self, values: Vec<f64>) -> Result<ParamVector> {
        let tags = self.param_transforms();
        if values.len() != tags.len() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: tags.len(),
                got: values.len(),
            });
        }
        ParamVector::new(values, tags)
    }
}

pub(crate) fn check_theta<M: StateSpaceModel + ?Sized>(model: &M, theta: &ParamVector) -> Result<()> {
    let d = model.param_transforms().len();
    if theta.dim() != d {
        return Err(Error::DimensionMismatch {
            what: "parameter vector",
            expected: d,
            got: theta.dim(),
        });
    }
    Ok(())
}

pub(crate) fn check_data<M: StateSpaceModel + ?Sized>(model: &M, data: &Dataset) -> Result<()> {
    if data.obs_dim() != model.obs_dim() {
        return Err(Error::DimensionMismatch {
            what: "observation dimension",
            expected: model.obs_dim(),
            got: data.obs_dim(),
        });
    }
    if data.is_empty() {
        return Err(Error::InvalidParameter("dataset has no observations".into()));
    }
    Ok(())
}

/// Draws `x_{0:T}` and `y_{1:T}` by ancestral sampling.
pub fn simulate<M: StateSpaceModel + ?Sized>(
    model: &M,
    theta: &ParamVector,
    horizon: usize,
    stream: RngStream,
) -> Result<Dataset> {
    check_theta(model, theta)?;
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon T must be >= 1".into()));
    }
    let dx = model.state_dim();
    let dy = model.obs_dim();
    let mut rng = stream.generator();
    let mut states = vec![0.0; (horizon + 1) * dx];
    let mut obs = vec![0.0; horizon * dy];

    model.init_sample(&mut rng, &mut states[..dx]);
    for t in 1..=horizon {
        let (past, rest) = states.split_at_mut(t * dx);
        let prev = &past[(t - 1) * dx..];
        let next = &mut rest[..dx];
        model.trans_sample(theta, prev, t, &mut rng, next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t, theta: theta.values().to_vec() });
        }
        model.obs_sample(theta, next, t, &mut rng, &mut obs[(t - 1) * dy..t * dy]);
    }

    let inputs = (model.input_dim() > 0).then(|| {
        (1..=horizon)
            .flat_map(|t| model.input(t).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; model.input_dim()]))
            .collect()
    });

    let mut data = Dataset::new(obs, dy)?.with_states(states, dx)?;
    if let Some(u) = inputs {
        data = data.with_inputs(u, model.input_dim())?;
    }
    data.theta_true = Some(theta.values().to_vec());
    data.stream = Some(stream);
    data.model = Some(model.name().to_string());
    Ok(data)
}

/// `Σ_t log f_θ(x_t | x_{t-1}) + Σ_t log g_θ(y_t | x_t)` along the stored
/// trajectory.
pub fn log_joint<M: StateSpaceModel + ?Sized>(model: &M, theta: &ParamVector, data: &Dataset) -> Result<f64> {
    check_theta(model, theta)?;
    check_data(model, data)?;
    let states = data.states().ok_or(Error::MissingTrajectory)?;
    let mut total = 0.0;
    for t in 1..=data.len() {
        let x = states.at(t);
        total += model.trans_logdensity(theta, x, states.at(t - 1), t);
        total += model.obs_logdensity(theta, data.y(t), x, t);
    }
    Ok(total)
}
