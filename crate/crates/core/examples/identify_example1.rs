//! Iterated identification of Example 1's (b, q) from random starts, pooled
//! into a histogram-mode estimate.
//!
//!     cargo run --release --example identify_example1 -- [repeats]

use pfml::prelude::*;
use rand::Rng;

fn main() -> Result<()> {
    let repeats: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let m = Example1::new();
    let truth = m.true_theta().unwrap();
    let data = simulate(&m, &truth, 100, RngStream::new(1, 0))?;

    let mut traces = Vec::new();
    for r in 0..repeats as u64 {
        let mut rng = RngStream::new(1, 2).derive(r).generator();
        let theta0 = m.param_vector(vec![rng.random_range(10.0..40.0), 4.0 - 4.0 * rng.random::<f64>()])?;
        let cfg = IdentifyConfig::new(50, 100, RngStream::new(1, 1).derive(r));
        let trace = identify(&m, &data, &theta0, &cfg)?;
        let last = trace.final_theta();
        println!("repeat {r}: {:?} -> ({:.3}, {:.4})", theta0.values(), last[0], last[1]);
        traces.push(trace);
    }
    let est = extract_estimate(&traces, 25, 50)?;
    println!("estimate {:?} = {:?} from {} iterates", est.param_names, est.theta_hat, est.samples_used);
    println!("truth    {:?}", truth.values());
    Ok(())
}
