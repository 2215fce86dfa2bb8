use rand_distr::{Distribution, StandardNormal};

use crate::logspace::normal_logpdf;
use crate::model::StateSpaceModel;
use crate::param::{ParamVector, Transform};
use crate::rng::StreamRng;

/// The classic nonlinear benchmark, with θ = (b, q):
///
/// ```text
/// x_t = 0.5 x_{t-1} + b x_{t-1} / (1 + x_{t-1}²) + 8 cos(1.2 t) + q w_t
/// y_t = 0.05 x_t² + e_t
/// ```
///
/// `w_t, e_t ~ N(0, 1)`; `q` is log-positive. Data are generated at
/// `b = 25`, `q² = 0.1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example1;

const DAMPING: f64 = 0.5;
const FORCING: f64 = 8.0;
const FREQUENCY: f64 = 1.2;
const OBS_GAIN: f64 = 0.05;
pub(crate) const TRUE_B: f64 = 25.0;
pub(crate) const TRUE_Q_SQUARED: f64 = 0.1;

impl Example1 {
    pub fn new() -> Self {
        Self
    }

    #[inline]
    pub fn transition_mean(b: f64, x: f64, t: usize) -> f64 {
        DAMPING * x + b * x / (1.0 + x * x) + FORCING * (FREQUENCY * t as f64).cos()
    }
}

impl StateSpaceModel for Example1 {
    fn name(&self) -> &str {
        "example1"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn param_transforms(&self) -> Vec<Transform> {
        vec![Transform::Unconstrained, Transform::LogPositive]
    }

    fn param_names(&self) -> Vec<String> {
        vec!["b".into(), "q".into()]
    }

    fn init_sample(&self, rng: &mut StreamRng, out: &mut [f64]) {
        out[0] = StandardNormal.sample(rng);
    }

    fn trans_sample(&self, theta: &[f64], prev: &[f64], t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let w: f64 = StandardNormal.sample(rng);
        out[0] = Self::transition_mean(theta[0], prev[0], t) + theta[1] * w;
    }

    fn trans_logdensity(&self, theta: &[f64], next: &[f64], prev: &[f64], t: usize) -> f64 {
        if !next[0].is_finite() || !prev[0].is_finite() || !(theta[1] > 0.0 && theta[1].is_finite()) {
            return f64::NEG_INFINITY;
        }
        normal_logpdf(next[0], Self::transition_mean(theta[0], prev[0], t), theta[1])
    }

    fn obs_sample(&self, _theta: &[f64], x: &[f64], _t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let e: f64 = StandardNormal.sample(rng);
        out[0] = OBS_GAIN * x[0] * x[0] + e;
    }

    fn obs_logdensity(&self, _theta: &[f64], y: &[f64], x: &[f64], _t: usize) -> f64 {
        if !x[0].is_finite() {
            return f64::NEG_INFINITY;
        }
        normal_logpdf(y[0], OBS_GAIN * x[0] * x[0], 1.0)
    }

    fn true_theta(&self) -> Option<ParamVector> {
        ParamVector::new(vec![TRUE_B, TRUE_Q_SQUARED.sqrt()], self.param_transforms()).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn transition_plug_in() {
        let m = Example1::new();
        let x = 1.7;
        let mean = 8.0 * 1.2f64.cos();
        let direct = -0.5 * (x - mean) * (x - mean) - 0.5 * (2.0 * PI).ln();
        let got = m.trans_logdensity(&[25.0, 1.0], &[x], &[0.0], 1);
        assert!((got - direct).abs() < 1e-13);
    }

    #[test]
    fn degenerate_noise_scale_has_no_density() {
        let m = Example1::new();
        for q in [0.0, -1.0, f64::INFINITY, f64::NAN] {
            assert_eq!(m.trans_logdensity(&[25.0, q], &[1.0], &[0.0], 1), f64::NEG_INFINITY);
        }
    }

    #[test]
    fn observation_is_even_in_state() {
        let m = Example1::new();
        for x in [0.0, 0.3, 4.0, 17.5] {
            let a = m.obs_logdensity(&[25.0, 0.3], &[1.2], &[x], 3);
            let b = m.obs_logdensity(&[25.0, 0.3], &[1.2], &[-x], 3);
            assert_eq!(a, b);
            assert!(a.is_finite());
        }
    }

    #[test]
    fn truth_is_sqrt_point_one() {
        let th = Example1::new().true_theta().unwrap();
        assert_eq!(th[0], 25.0);
        assert!((th[1] * th[1] - 0.1).abs() < 1e-16);
    }

    #[test]
    fn infinite_states_have_zero_density() {
        let m = Example1::new();
        assert_eq!(m.obs_logdensity(&[25.0, 0.3], &[1.0], &[f64::INFINITY], 1), f64::NEG_INFINITY);
        assert_eq!(
            m.trans_logdensity(&[25.0, 0.3], &[f64::INFINITY], &[1.0], 1),
            f64::NEG_INFINITY
        );
    }
}
