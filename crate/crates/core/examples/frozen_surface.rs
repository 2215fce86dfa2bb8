//! A frozen particle system turns the likelihood estimate into a smooth,
//! deterministic function of θ. Compare with fresh filter runs, which jump
//! from point to point.
//!
//!     cargo run --release --example frozen_surface

use pfml::prelude::*;

fn main() -> Result<()> {
    let m = Example1::new();
    let truth = m.true_theta().unwrap();
    let data = simulate(&m, &truth, 100, RngStream::new(1, 0))?;

    let system = run_frozen_bootstrap(&m, &truth, 100, &data, RngStream::new(1, 1))?;
    let surface = build_surface(&system, &m)?;
    println!("online estimate at θ_ref: {:.4}", system.online_loglik());
    println!("surface at θ_ref:         {:.4}", surface.loglik(&truth)?);

    println!("{:>6} {:>12} {:>12}", "b", "frozen", "fresh");
    for i in 0..=12 {
        let b = 19.0 + i as f64;
        let theta = m.param_vector(vec![b, truth[1]])?;
        let frozen = surface.loglik(&theta)?;
        let fresh = run_frozen_bootstrap(&m, &theta, 100, &data, RngStream::new(2, i))?.online_loglik();
        println!("{b:>6.1} {frozen:>12.3} {fresh:>12.3}");
    }

    // the system can be archived and the surface rebuilt later
    let path = std::env::temp_dir().join("pfml_frozen_example.bin");
    system.save(&path)?;
    let restored = ParticleSystem::load(&path)?;
    let again = build_surface(&restored, &m)?;
    assert_eq!(again.loglik(&truth)?, surface.loglik(&truth)?);
    println!("archive round trip ok ({})", path.display());
    Ok(())
}
