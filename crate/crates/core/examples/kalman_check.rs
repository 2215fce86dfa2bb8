//! Spread of the particle log-likelihood around the exact Kalman value as N
//! grows, and the mean of ẑ / z.
//!
//!     cargo run --release --example kalman_check

use pfml::prelude::*;

fn main() -> Result<()> {
    let m = Lgss::default_scalar();
    let truth = m.true_theta().unwrap();
    let data = simulate(&m, &truth, 50, RngStream::new(2, 0))?;
    let exact = m.kalman_loglik(&truth, &data)?;

    println!("{:>6} {:>10} {:>10} {:>10}", "N", "mean err", "mean |err|", "E[ẑ/z]");
    for n in [10, 100, 1000] {
        let errs: Vec<f64> = (0..100)
            .map(|s| Ok(run_frozen_bootstrap(&m, &truth, n, &data, RngStream::new(9, s))?.online_loglik() - exact))
            .collect::<Result<_>>()?;
        let mean = errs.iter().sum::<f64>() / 100.0;
        let mae = errs.iter().map(|e| e.abs()).sum::<f64>() / 100.0;
        let ratio = errs.iter().map(|e| e.exp()).sum::<f64>() / 100.0;
        println!("{n:>6} {mean:>10.4} {mae:>10.4} {ratio:>10.4}");
    }
    Ok(())
}
