use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::logspace::normal_logpdf;
use crate::model::StateSpaceModel;
use crate::param::{ParamVector, Transform};
use crate::rng::{RngStream, StreamRng};

/// Stream that generates Example 2's input: seed 0, stream id `0xE2`.
pub const EXAMPLE2_INPUT_STREAM: RngStream = RngStream { seed: 0, stream: 0xE2 };

const POLE_GUARD: f64 = 1e-12;

/// A model with the unknown in a denominator, θ = (a, b):
///
/// ```text
/// x_t = x_{t-1} / (a + x_{t-1}²) + b u_t + w_t
/// y_t = x_t + e_t
/// ```
///
/// `w_t, e_t ~ N(0, 1)`. The input `u_1..u_T` is i.i.d. uniform on
/// `[-1, 1]`, drawn once from [`EXAMPLE2_INPUT_STREAM`]. Data are generated
/// at `a = 0.5`, `b = -2`.
///
/// `a` is left unconstrained, so `a + x²` can vanish; the transition density
/// is `-inf` within `1e-12` of that pole.
#[derive(Debug, Clone)]
pub struct Example2 {
    input: Vec<f64>,
}

impl Example2 {
    pub fn new(horizon: usize) -> Self {
        let mut rng = EXAMPLE2_INPUT_STREAM.generator();
        let input = (0..horizon).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self { input }
    }

    /// Uses a recorded input sequence, e.g. the `u_1` column of a dataset.
    pub fn with_input(input: Vec<f64>) -> Self {
        Self { input }
    }

    pub fn input_sequence(&self) -> &[f64] {
        &self.input
    }

    #[inline]
    fn transition_mean(&self, theta: &[f64], x: f64, t: usize) -> Option<f64> {
        let denom = theta[0] + x * x;
        if denom.abs() < POLE_GUARD || !x.is_finite() {
            return None;
        }
        let u = self.input.get(t.wrapping_sub(1)).copied().unwrap_or(0.0);
        Some(x / denom + theta[1] * u)
    }
}

impl StateSpaceModel for Example2 {
    fn name(&self) -> &str {
        "example2"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn param_transforms(&self) -> Vec<Transform> {
        vec![Transform::Unconstrained, Transform::Unconstrained]
    }

    fn param_names(&self) -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    fn init_sample(&self, rng: &mut StreamRng, out: &mut [f64]) {
        out[0] = StandardNormal.sample(rng);
    }

    fn trans_sample(&self, theta: &[f64], prev: &[f64], t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let w: f64 = StandardNormal.sample(rng);
        out[0] = match self.transition_mean(theta, prev[0], t) {
            Some(m) => m + w,
            None => f64::NAN,
        };
    }

    fn trans_logdensity(&self, theta: &[f64], next: &[f64], prev: &[f64], t: usize) -> f64 {
        match self.transition_mean(theta, prev[0], t) {
            Some(m) if next[0].is_finite() && m.is_finite() => normal_logpdf(next[0], m, 1.0),
            _ => f64::NEG_INFINITY,
        }
    }

    fn obs_sample(&self, _theta: &[f64], x: &[f64], _t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let e: f64 = StandardNormal.sample(rng);
        out[0] = x[0] + e;
    }

    fn obs_logdensity(&self, _theta: &[f64], y: &[f64], x: &[f64], _t: usize) -> f64 {
        if !x[0].is_finite() {
            return f64::NEG_INFINITY;
        }
        normal_logpdf(y[0], x[0], 1.0)
    }

    fn input(&self, t: usize) -> Option<&[f64]> {
        let i = t.checked_sub(1)?;
        self.input.get(i..i + 1)
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn true_theta(&self) -> Option<ParamVector> {
        ParamVector::new(vec![0.5, -2.0], self.param_transforms()).ok()
    }
}
