//! The frozen-surface search against a stochastic-gradient baseline given the
//! same number of passes over a particle system.
//!
//!     cargo run --release --example compare_sgd

use pfml::prelude::*;

fn distance(a: &ParamVector, b: &ParamVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn main() -> Result<()> {
    let m = Example1::new();
    let truth = m.true_theta().unwrap();
    let data = simulate(&m, &truth, 100, RngStream::new(1, 0))?;

    for (r, start) in [[15.0, 2.0], [35.0, 1.0], [28.0, 3.0]].iter().enumerate() {
        let theta0 = m.param_vector(start.to_vec())?;
        let proposed = identify(&m, &data, &theta0, &IdentifyConfig::new(20, 100, RngStream::new(7, r as u64)))?;
        // each SGD step costs one filter run plus 2d surface probes
        let steps = proposed.cost_in_passes() / (2 * theta0.dim() + 1);
        let sgd = sgd_identify(&m, &data, &theta0, &SgdConfig::new(steps, 100, 0.05, 0.75, RngStream::new(8, r as u64)))?;
        println!(
            "start {start:?}: proposed {:.3} after {} passes, sgd {:.3} after {} passes{}",
            distance(proposed.final_theta(), &truth),
            proposed.cost_in_passes(),
            distance(sgd.final_theta(), &truth),
            sgd.cost_in_passes(),
            if sgd.diverged { " (diverged)" } else { "" },
        );
    }
    Ok(())
}
