//! Deterministic maximization over [`ParamVector`]s.
//!
//! The search runs in the unconstrained space given by each component's
//! [`Transform`](crate::param::Transform). An objective value of `-inf` is
//! ordered below every real and never enters any arithmetic on points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    SimplexSearch,
    QuasiNewtonFd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_evals: usize,
    pub x_tolerance: f64,
    pub f_tolerance: f64,
    /// Per-component initial simplex steps in unconstrained space. Defaults
    /// to `max(0.1 |v_i|, 0.1)`.
    pub initial_step: Option<Vec<f64>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::SimplexSearch,
            max_evals: 400,
            x_tolerance: 1e-6,
            f_tolerance: 1e-7,
            initial_step: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.x_tolerance > 0.0 && self.f_tolerance > 0.0) {
            return Err(Error::Config("optimizer tolerances must be > 0".into()));
        }
        if self.max_evals < dim + 1 {
            return Err(Error::Config(format!("max_evals must be at least d+1 = {}", dim + 1)));
        }
        if let Some(steps) = &self.initial_step {
            if steps.len() != dim || steps.iter().any(|s| !(s.is_finite() && *s != 0.0)) {
                return Err(Error::Config("initial_step needs one finite non-zero entry per component".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    XTolerance,
    FTolerance,
    MaxEvals,
    /// Quasi-Newton only: no ascent step could be found.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub argmax: ParamVector,
    pub value: f64,
    /// Objective at the starting point.
    pub initial_value: f64,
    pub evals_used: usize,
    pub converged: bool,
    pub termination: Termination,
}

/// Counts evaluations, maps unconstrained points back to parameters and
/// enforces the NaN / budget rules.
struct Counted<'f, F> {
    objective: &'f mut F,
    template: &'f ParamVector,
    evals: usize,
    max_evals: usize,
}

impl<F: FnMut(&ParamVector) -> Result<f64>> Counted<'_, F> {
    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }

    /// Objective at unconstrained point `v`, as a cost to minimize.
    fn cost(&mut self, v: &[f64]) -> Result<f64> {
        self.evals += 1;
        let theta = match ParamVector::from_unconstrained(v, self.template.transforms()) {
            Ok(t) => t,
            // e.g. exp overflow of a log-positive component
            Err(_) => return Ok(f64::INFINITY),
        };
        let f = (self.objective)(&theta)?;
        if f.is_nan() {
            return Err(Error::ObjectiveNaN(theta.values().to_vec()));
        }
        Ok(-f)
    }
}

/// Maximizes `objective` starting from `init`.
pub fn maximize<F>(mut objective: F, init: &ParamVector, cfg: &OptimizerConfig) -> Result<OptResult>
where
    F: FnMut(&ParamVector) -> Result<f64>,
{
    cfg.validate(init.dim())?;
    let mut counted = Counted { objective: &mut objective, template: init, evals: 0, max_evals: cfg.max_evals };
    let v0 = init.to_unconstrained();
    let c0 = counted.cost(&v0)?;
    if c0 == f64::INFINITY {
        return Err(Error::InfeasibleStart);
    }
    let (v, cost, termination) = match cfg.method {
        Method::SimplexSearch => nelder_mead(&mut counted, v0, c0, cfg)?,
        Method::QuasiNewtonFd => bfgs_fd(&mut counted, v0, c0, cfg)?,
    };
    let argmax = ParamVector::from_unconstrained(&v, init.transforms())?;
    Ok(OptResult {
        argmax,
        value: -cost,
        initial_value: -c0,
        evals_used: counted.evals,
        converged: matches!(termination, Termination::XTolerance | Termination::FTolerance),
        termination,
    })
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn nelder_mead<F: FnMut(&ParamVector) -> Result<f64>>(
    obj: &mut Counted<'_, F>,
    v0: Vec<f64>,
    c0: f64,
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, f64, Termination)> {
    let d = v0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(v0.clone(), c0)];
    for i in 0..d {
        if obj.exhausted() {
            break;
        }
        let step = match &cfg.initial_step {
            Some(s) => s[i],
            None => (0.1 * v0[i].abs()).max(0.1),
        };
        let mut v = v0.clone();
        v[i] += step;
        let c = obj.cost(&v)?;
        simplex.push((v, c));
    }
    if simplex.len() < d + 1 {
        return Ok((v0, c0, Termination::MaxEvals));
    }

    let lerp = |from: &[f64], to: &[f64], s: f64| -> Vec<f64> {
        from.iter().zip(to).map(|(&a, &b)| a + s * (b - a)).collect()
    };

    loop {
        // stable: equal costs keep their previous relative order
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;

        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        // A small f-spread alone is not enough: vertices straddling the
        // optimum symmetrically have equal cost.
        if diameter < cfg.x_tolerance && (!worst.is_finite() || worst - best < cfg.f_tolerance) {
            return Ok((simplex.swap_remove(0).0, best, Termination::XTolerance));
        }
        if obj.exhausted() {
            return Ok((simplex.swap_remove(0).0, best, Termination::MaxEvals));
        }

        let mut centroid = vec![0.0; d];
        for (v, _) in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let worst_v = simplex[d].0.clone();
        let second_worst = simplex[d - 1].1;

        let reflected = lerp(&centroid, &worst_v, -REFLECT);
        let cr = obj.cost(&reflected)?;

        if cr < best {
            if obj.exhausted() {
                simplex[d] = (reflected, cr);
                continue;
            }
            let expanded = lerp(&centroid, &reflected, EXPAND);
            let ce = obj.cost(&expanded)?;
            simplex[d] = if ce < cr { (expanded, ce) } else { (reflected, cr) };
            continue;
        }
        if cr < second_worst {
            simplex[d] = (reflected, cr);
            continue;
        }
        if obj.exhausted() {
            continue;
        }
        let (contracted, target) = if cr < worst {
            (lerp(&centroid, &reflected, CONTRACT), cr)
        } else {
            (lerp(&centroid, &worst_v, CONTRACT), worst)
        };
        let cc = obj.cost(&contracted)?;
        if cc < target || (cr < worst && cc <= cr) {
            simplex[d] = (contracted, cc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if obj.exhausted() {
                break;
            }
            let v = lerp(&anchor, &vertex.0, SHRINK);
            let c = obj.cost(&v)?;
            *vertex = (v, c);
        }
    }
}

fn bfgs_fd<F: FnMut(&ParamVector) -> Result<f64>>(
    obj: &mut Counted<'_, F>,
    mut v: Vec<f64>,
    mut cost: f64,
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, f64, Termination)> {
    let d = v.len();
    let mut h_inv: Vec<f64> = (0..d * d).map(|k| if k % (d + 1) == 0 { 1.0 } else { 0.0 }).collect();

    let gradient = |obj: &mut Counted<'_, F>, v: &[f64]| -> Result<Option<Vec<f64>>> {
        let mut g = vec![0.0; d];
        for i in 0..d {
            if obj.evals + 2 > obj.max_evals {
                return Ok(None);
            }
            let h = 1e-5 * v[i].abs().max(1.0);
            let mut p = v.to_vec();
            p[i] += h;
            let up = obj.cost(&p)?;
            p[i] = v[i] - h;
            let down = obj.cost(&p)?;
            g[i] = (up - down) / (2.0 * h);
        }
        Ok(Some(g))
    };

    let Some(mut g) = gradient(obj, &v)? else {
        return Ok((v, cost, Termination::MaxEvals));
    };
    loop {
        if g.iter().any(|x| !x.is_finite()) {
            return Ok((v, cost, Termination::Stalled));
        }
        let dir: Vec<f64> = (0..d).map(|i| -(0..d).map(|j| h_inv[i * d + j] * g[j]).sum::<f64>()).collect();
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        let (dir, slope) = if slope < 0.0 {
            (dir, slope)
        } else {
            h_inv.iter_mut().enumerate().for_each(|(k, h)| *h = if k % (d + 1) == 0 { 1.0 } else { 0.0 });
            let sd: Vec<f64> = g.iter().map(|x| -x).collect();
            let s = -g.iter().map(|x| x * x).sum::<f64>();
            (sd, s)
        };

        let mut step = 1.0;
        let accepted = loop {
            if obj.exhausted() {
                return Ok((v, cost, Termination::MaxEvals));
            }
            let trial: Vec<f64> = v.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let c = obj.cost(&trial)?;
            if c <= cost + 1e-4 * step * slope {
                break Some((trial, c));
            }
            step *= 0.5;
            if step * dir.iter().map(|x| x.abs()).fold(0.0, f64::max) < cfg.x_tolerance * 1e-3 {
                break None;
            }
        };
        let Some((next, next_cost)) = accepted else {
            return Ok((v, cost, Termination::Stalled));
        };
        let dx: Vec<f64> = next.iter().zip(&v).map(|(a, b)| a - b).collect();
        let improvement = cost - next_cost;
        v = next;
        cost = next_cost;
        if dx.iter().map(|x| x.abs()).fold(0.0, f64::max) < cfg.x_tolerance {
            return Ok((v, cost, Termination::XTolerance));
        }
        if improvement < cfg.f_tolerance {
            return Ok((v, cost, Termination::FTolerance));
        }
        let Some(g_next) = gradient(obj, &v)? else {
            return Ok((v, cost, Termination::MaxEvals));
        };
        let dg: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = dx.iter().zip(&dg).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            // BFGS inverse-Hessian update
            let hy: Vec<f64> = (0..d).map(|i| (0..d).map(|j| h_inv[i * d + j] * dg[j]).sum()).collect();
            let yhy: f64 = dg.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..d {
                for j in 0..d {
                    h_inv[i * d + j] += ((sy + yhy) * dx[i] * dx[j]) / (sy * sy) - (hy[i] * dx[j] + dx[i] * hy[j]) / sy;
                }
            }
        }
        g = g_next;
    }
}
