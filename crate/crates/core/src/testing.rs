//! Small models used only by unit tests.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::logspace::normal_logpdf;
use crate::model::StateSpaceModel;
use crate::param::Transform;
use crate::rng::StreamRng;

/// `x_t = 0.5 x_{t-1} + w_t`, `y_t = x_t + e_t` with `e_t ~ U(-h, h)` and
/// θ = (h). Observation weights are exactly zero outside the box.
pub(crate) struct BoxObs;

impl StateSpaceModel for BoxObs {
    fn name(&self) -> &str {
        "box"
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn obs_dim(&self) -> usize {
        1
    }
    fn param_transforms(&self) -> Vec<Transform> {
        vec![Transform::LogPositive]
    }
    fn init_sample(&self, rng: &mut StreamRng, out: &mut [f64]) {
        out[0] = StandardNormal.sample(rng);
    }
    fn trans_sample(&self, _theta: &[f64], prev: &[f64], _t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let w: f64 = StandardNormal.sample(rng);
        out[0] = 0.5 * prev[0] + w;
    }
    fn trans_logdensity(&self, _theta: &[f64], next: &[f64], prev: &[f64], _t: usize) -> f64 {
        normal_logpdf(next[0], 0.5 * prev[0], 1.0)
    }
    fn obs_sample(&self, theta: &[f64], x: &[f64], _t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        out[0] = x[0] + rng.random_range(-theta[0]..theta[0]);
    }
    fn obs_logdensity(&self, theta: &[f64], y: &[f64], x: &[f64], _t: usize) -> f64 {
        if (y[0] - x[0]).abs() <= theta[0] {
            -(2.0 * theta[0]).ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Returns NaN from the observation density whenever θ_0 < 0.
pub(crate) struct NanObs;

impl StateSpaceModel for NanObs {
    fn name(&self) -> &str {
        "nan"
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn obs_dim(&self) -> usize {
        1
    }
    fn param_transforms(&self) -> Vec<Transform> {
        vec![Transform::Unconstrained]
    }
    fn init_sample(&self, rng: &mut StreamRng, out: &mut [f64]) {
        out[0] = StandardNormal.sample(rng);
    }
    fn trans_sample(&self, _theta: &[f64], prev: &[f64], _t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let w: f64 = StandardNormal.sample(rng);
        out[0] = prev[0] + w;
    }
    fn trans_logdensity(&self, _theta: &[f64], next: &[f64], prev: &[f64], _t: usize) -> f64 {
        normal_logpdf(next[0], prev[0], 1.0)
    }
    fn obs_sample(&self, _theta: &[f64], x: &[f64], _t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let e: f64 = StandardNormal.sample(rng);
        out[0] = x[0] + e;
    }
    fn obs_logdensity(&self, theta: &[f64], y: &[f64], x: &[f64], _t: usize) -> f64 {
        if theta[0] < 0.0 {
            f64::NAN
        } else {
            normal_logpdf(y[0], x[0], 1.0)
        }
    }
}
