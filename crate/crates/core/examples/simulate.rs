//! Simulate Example 1 and Example 2 data and write them as CSV.
//!
//!     cargo run --example simulate -- [out_dir]

use std::path::PathBuf;

use pfml::prelude::*;

fn main() -> Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/simulate".into()));
    std::fs::create_dir_all(&out).map_err(|e| Error::Config(e.to_string()))?;

    let m = Example1::new();
    let truth = m.true_theta().expect("example 1 has a true θ");
    let data = simulate(&m, &truth, 100, RngStream::new(1, 0))?;
    data.write(&out.join("example1.csv"), Some("example 1, seed 1"))?;
    println!("example 1: {} steps, θ = {:?}", data.len(), truth.values());
    for t in 1..=5 {
        println!("  y_{t} = {:8.4}", data.y(t)[0]);
    }

    // the input u_t is generated with the model and stored with the data
    let m2 = Example2::new(1000);
    let data2 = simulate(&m2, &m2.true_theta().unwrap(), 1000, RngStream::new(1, 0))?;
    data2.write(&out.join("example2.csv"), None)?;
    let back = Dataset::read(&out.join("example2.csv"))?;
    assert_eq!(back.observations(), data2.observations());
    println!("example 2: {} steps with input, written to {}", back.len(), out.display());
    Ok(())
}
