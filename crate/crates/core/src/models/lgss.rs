use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::logspace::{normal_logpdf, normal_logpdf_var};
use crate::model::StateSpaceModel;
use crate::param::{ParamVector, Transform};
use crate::rng::StreamRng;

/// Coefficients of the scalar linear-Gaussian model
///
/// ```text
/// x_0 ~ N(0, σ_0²)
/// x_t = a x_{t-1} + σ_w w_t
/// y_t = c x_t + σ_e e_t
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgssCoeffs {
    pub a: f64,
    pub c: f64,
    pub sigma_w: f64,
    pub sigma_e: f64,
    pub sigma0: f64,
}

impl Default for LgssCoeffs {
    fn default() -> Self {
        Self { a: 0.7, c: 1.0, sigma_w: 1.0, sigma_e: 1.0, sigma0: 1.0 }
    }
}

/// Coefficients that may be declared unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LgssParam {
    A,
    C,
    SigmaW,
    SigmaE,
}

impl LgssParam {
    fn transform(self) -> Transform {
        match self {
            LgssParam::A | LgssParam::C => Transform::Unconstrained,
            LgssParam::SigmaW | LgssParam::SigmaE => Transform::LogPositive,
        }
    }

    fn name(self) -> &'static str {
        match self {
            LgssParam::A => "a",
            LgssParam::C => "c",
            LgssParam::SigmaW => "sigma_w",
            LgssParam::SigmaE => "sigma_e",
        }
    }
}

/// Linear-Gaussian model whose likelihood is known exactly.
///
/// The `base` coefficients are fixed; θ overrides the ones listed in
/// `unknowns`, in order.
#[derive(Debug, Clone)]
pub struct Lgss {
    base: LgssCoeffs,
    unknowns: Vec<LgssParam>,
}

impl Lgss {
    pub fn with_unknowns(base: LgssCoeffs, unknowns: &[LgssParam]) -> Self {
        Self { base, unknowns: unknowns.to_vec() }
    }

    /// Default coefficients with `a` unknown.
    pub fn default_scalar() -> Self {
        Self::with_unknowns(LgssCoeffs::default(), &[LgssParam::A])
    }

    pub fn base(&self) -> LgssCoeffs {
        self.base
    }

    pub fn unknowns(&self) -> &[LgssParam] {
        &self.unknowns
    }

    #[inline]
    pub fn coeffs_at(&self, theta: &[f64]) -> LgssCoeffs {
        let mut c = self.base;
        for (p, &v) in self.unknowns.iter().zip(theta) {
            match p {
                LgssParam::A => c.a = v,
                LgssParam::C => c.c = v,
                LgssParam::SigmaW => c.sigma_w = v,
                LgssParam::SigmaE => c.sigma_e = v,
            }
        }
        c
    }

    /// Exact `log p_θ(y_{1:T})`.
    pub fn kalman_loglik(&self, theta: &[f64], data: &Dataset) -> Result<f64> {
        kalman_loglik(&self.coeffs_at(theta), data)
    }
}

impl StateSpaceModel for Lgss {
    fn name(&self) -> &str {
        "lgss"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn param_transforms(&self) -> Vec<Transform> {
        self.unknowns.iter().map(|p| p.transform()).collect()
    }

    fn param_names(&self) -> Vec<String> {
        self.unknowns.iter().map(|p| p.name().to_string()).collect()
    }

    fn init_sample(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = self.base.sigma0 * z;
    }

    fn trans_sample(&self, theta: &[f64], prev: &[f64], _t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let c = self.coeffs_at(theta);
        let w: f64 = StandardNormal.sample(rng);
        out[0] = c.a * prev[0] + c.sigma_w * w;
    }

    fn trans_logdensity(&self, theta: &[f64], next: &[f64], prev: &[f64], _t: usize) -> f64 {
        let c = self.coeffs_at(theta);
        if !next[0].is_finite() || !prev[0].is_finite() {
            return f64::NEG_INFINITY;
        }
        normal_logpdf(next[0], c.a * prev[0], c.sigma_w)
    }

    fn obs_sample(&self, theta: &[f64], x: &[f64], _t: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let c = self.coeffs_at(theta);
        let e: f64 = StandardNormal.sample(rng);
        out[0] = c.c * x[0] + c.sigma_e * e;
    }

    fn obs_logdensity(&self, theta: &[f64], y: &[f64], x: &[f64], _t: usize) -> f64 {
        let c = self.coeffs_at(theta);
        if !x[0].is_finite() {
            return f64::NEG_INFINITY;
        }
        normal_logpdf(y[0], c.c * x[0], c.sigma_e)
    }

    fn true_theta(&self) -> Option<ParamVector> {
        let values = self
            .unknowns
            .iter()
            .map(|p| match p {
                LgssParam::A => self.base.a,
                LgssParam::C => self.base.c,
                LgssParam::SigmaW => self.base.sigma_w,
                LgssParam::SigmaE => self.base.sigma_e,
            })
            .collect();
        ParamVector::new(values, self.param_transforms()).ok()
    }
}

/// Exact log-likelihood by the scalar Kalman prediction/update recursion,
/// accumulating the Gaussian log-density of each innovation.
pub fn kalman_loglik(coeffs: &LgssCoeffs, data: &Dataset) -> Result<f64> {
    let LgssCoeffs { a, c, sigma_w, sigma_e, sigma0 } = *coeffs;
    if !(sigma_w > 0.0 && sigma_e > 0.0 && sigma0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Kalman recursion needs positive standard deviations, got σ_w={sigma_w}, σ_e={sigma_e}, σ_0={sigma0}"
        )));
    }
    if data.obs_dim() != 1 {
        return Err(Error::DimensionMismatch { what: "observation dimension", expected: 1, got: data.obs_dim() });
    }
    let (q, r) = (sigma_w * sigma_w, sigma_e * sigma_e);
    let (mut mean, mut var) = (0.0, sigma0 * sigma0);
    let mut ll = 0.0;
    for t in 1..=data.len() {
        mean *= a;
        var = a * a * var + q;
        let s = c * c * var + r;
        let innovation = data.y(t)[0] - c * mean;
        ll += normal_logpdf_var(innovation, 0.0, s);
        let gain = var * c / s;
        mean += gain * innovation;
        var *= 1.0 - gain * c;
    }
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate;
    use crate::rng::RngStream;
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::PI;

    /// Exact likelihood from the joint Gaussian of y_{1:T}:
    /// Cov(x_s, x_t) = a^{|t-s|} Var(x_min), Var(x_t) = a^{2t} σ_0² + σ_w² Σ_{k<t} a^{2k}.
    fn dense_loglik(c: &LgssCoeffs, ys: &[f64]) -> f64 {
        let n = ys.len();
        let var_x = |t: usize| -> f64 {
            let mut v = c.sigma0 * c.sigma0;
            for _ in 0..t {
                v = c.a * c.a * v + c.sigma_w * c.sigma_w;
            }
            v
        };
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let (s, t) = (i.min(j) + 1, i.max(j) + 1);
            let mut v = c.c * c.c * c.a.powi((t - s) as i32) * var_x(s);
            if i == j {
                v += c.sigma_e * c.sigma_e;
            }
            v
        });
        let chol = cov.cholesky().unwrap();
        let y = DVector::from_column_slice(ys);
        let alpha = chol.solve(&y);
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        -0.5 * (y.dot(&alpha) + logdet + n as f64 * (2.0 * PI).ln())
    }

    #[test]
    fn single_step_hand_value() {
        let c = LgssCoeffs { a: 1.0, c: 1.0, sigma_w: 1.0, sigma_e: 1.0, sigma0: 1.0 };
        let d = Dataset::new(vec![0.0], 1).unwrap();
        let ll = kalman_loglik(&c, &d).unwrap();
        assert!((ll - (-0.5 * (2.0 * PI * 3.0).ln())).abs() < 1e-15);
    }

    #[test]
    fn decoupled_observation() {
        let c = LgssCoeffs { a: 0.9, c: 0.0, sigma_w: 1.3, sigma_e: 0.6, sigma0: 1.0 };
        let ys = [0.4, -1.1, 2.0, 0.0];
        let d = Dataset::new(ys.to_vec(), 1).unwrap();
        let direct: f64 = ys.iter().map(|&y| normal_logpdf(y, 0.0, 0.6)).sum();
        assert!((kalman_loglik(&c, &d).unwrap() - direct).abs() < 1e-13);
    }

    #[test]
    fn matches_dense_gaussian() {
        for (i, &(a, cc, sw, se)) in [(0.7, 1.0, 1.0, 1.0), (-0.95, 2.0, 0.3, 0.8), (1.05, 0.5, 0.1, 2.0)]
            .iter()
            .enumerate()
        {
            let coeffs = LgssCoeffs { a, c: cc, sigma_w: sw, sigma_e: se, sigma0: 1.0 };
            let m = Lgss::with_unknowns(coeffs, &[]);
            let d = simulate(&m, &ParamVector::unconstrained(vec![]), 40, RngStream::new(31, i as u64)).unwrap();
            let k = kalman_loglik(&coeffs, &d).unwrap();
            let dense = dense_loglik(&coeffs, d.observations());
            assert!(((k - dense) / dense).abs() < 1e-10, "{k} vs {dense}");
        }
    }

    #[test]
    fn rejects_bad_variances() {
        let c = LgssCoeffs { sigma_e: 0.0, ..LgssCoeffs::default() };
        let d = Dataset::new(vec![0.0], 1).unwrap();
        assert!(kalman_loglik(&c, &d).is_err());
    }

    #[test]
    fn theta_overrides_unknowns_in_order() {
        let m = Lgss::with_unknowns(LgssCoeffs::default(), &[LgssParam::SigmaE, LgssParam::A]);
        let c = m.coeffs_at(&[0.2, -0.4]);
        assert_eq!((c.sigma_e, c.a), (0.2, -0.4));
        assert_eq!(m.param_transforms(), vec![Transform::LogPositive, Transform::Unconstrained]);
    }
}
