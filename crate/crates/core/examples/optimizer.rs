//! The maximizer on its own: a curved valley in mixed
//! unconstrained / positive coordinates, with both search methods.
//!
//!     cargo run --example optimizer

use pfml::prelude::*;

fn main() -> Result<()> {
    let init = ParamVector::new(vec![-1.0, 3.0], vec![Transform::Unconstrained, Transform::LogPositive])?;
    // maximum at (1, 1); the second coordinate must stay positive
    let f = |p: &ParamVector| Ok(-(100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2)));
    for method in [Method::SimplexSearch, Method::QuasiNewtonFd] {
        let cfg = OptimizerConfig { method, max_evals: 4000, x_tolerance: 1e-9, ..OptimizerConfig::default() };
        let r = maximize(f, &init, &cfg)?;
        println!(
            "{method:?}: argmax {:?}, value {:.3e}, {} evaluations, {:?}",
            r.argmax.values(),
            r.value,
            r.evals_used,
            r.termination
        );
    }
    Ok(())
}
