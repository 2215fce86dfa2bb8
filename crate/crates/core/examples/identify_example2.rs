//! Identification of Example 2's (a, b), a model with a known input signal.
//! A shorter record than the full replication keeps this quick.
//!
//!     cargo run --release --example identify_example2 -- [T] [K]

use pfml::prelude::*;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let horizon = args.next().flatten().unwrap_or(300);
    let iterations = args.next().flatten().unwrap_or(40);

    let m = Example2::new(horizon);
    let truth = m.true_theta().unwrap();
    let data = simulate(&m, &truth, horizon, RngStream::new(1, 0))?;

    let mut traces = Vec::new();
    for (r, start) in [[0.3, -3.5], [1.2, -0.5], [0.8, -1.0]].iter().enumerate() {
        let theta0 = m.param_vector(start.to_vec())?;
        let cfg = IdentifyConfig::new(iterations, 100, RngStream::new(1, 1).derive(r as u64));
        let trace = identify(&m, &data, &theta0, &cfg)?;
        println!("start {start:?} -> {:?}", trace.final_theta().values());
        traces.push(trace);
    }
    let est = extract_estimate(&traces, iterations / 3, 20)?;
    println!("estimate (a, b) = {:?}, truth {:?}", est.theta_hat, truth.values());
    Ok(())
}
