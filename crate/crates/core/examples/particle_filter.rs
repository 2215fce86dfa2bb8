//! Bootstrap and auxiliary particle filters on a linear-Gaussian model,
//! checked against the exact Kalman likelihood.
//!
//!     cargo run --release --example particle_filter

use pfml::prelude::*;

fn main() -> Result<()> {
    let m = Lgss::default_scalar();
    let truth = m.true_theta().unwrap();
    let data = simulate(&m, &truth, 100, RngStream::new(3, 0))?;
    let exact = m.kalman_loglik(&truth, &data)?;
    println!("exact log-likelihood {exact:.4}");

    for n in [10, 100, 1000, 10_000] {
        let (ll, sys) = run_apf(&m, &truth, &ApfConfig::bootstrap(n), &data, RngStream::new(3, n as u64))?;
        println!("N = {n:>6}: bootstrap log ẑ = {ll:.4}  (error {:+.4}, horizon {})", ll - exact, sys.horizon());
    }

    // propose from the dynamics at another parameter and resample by its
    // observation density; the weights correct for both
    let other = m.param_vector(vec![0.5])?;
    let cfg = ApfConfig::bootstrap_at_reference(1000, other);
    let (ll, _) = run_apf(&m, &truth, &cfg, &data, RngStream::new(3, 99))?;
    println!("reference-proposal filter at a = 0.7 from a = 0.5: {ll:.4}");
    Ok(())
}
