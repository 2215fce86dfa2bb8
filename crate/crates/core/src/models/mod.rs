//! Benchmark models and the linear-Gaussian validation model.
//!
//! Every shipped model draws `x_0 ~ N(0, 1)` (the LGSS model allows a
//! different, still θ-independent, initial spread).

mod example1;
mod example2;
mod lgss;

pub use example1::Example1;
pub use example2::{Example2, EXAMPLE2_INPUT_STREAM};
pub use lgss::{kalman_loglik, Lgss, LgssCoeffs, LgssParam};

use crate::error::{Error, Result};
use crate::model::StateSpaceModel;

/// Model selection by name: `example1`, `example2` or `lgss`.
///
/// `horizon` sizes Example 2's input sequence. The LGSS model returned here
/// has `a` as its single unknown, with `c = 1`, `σ_w = σ_e = σ_0 = 1`.
pub fn by_name(name: &str, horizon: usize) -> Result<Box<dyn StateSpaceModel>> {
    match name {
        "example1" => Ok(Box::new(Example1::new())),
        "example2" => Ok(Box::new(Example2::new(horizon))),
        "lgss" => Ok(Box::new(Lgss::default_scalar())),
        other => Err(Error::Config(format!(
            "unknown model {other:?} (expected example1, example2 or lgss)"
        ))),
    }
}
