//! Maximum-likelihood identification of nonlinear state-space models by
//! iterating over frozen particle systems.
//!
//! A bootstrap particle filter is run at a reference parameter and all of
//! its random outcomes (particles and ancestor indices) are kept. Over that
//! fixed system the likelihood estimator becomes a smooth, deterministic
//! function of θ ([`surface`]), which an ordinary optimizer ([`optim`]) can
//! maximize. Repeating from the maximizer gives the iteration in
//! [`identify`].
//!
//! ```no_run
//! use pfml::prelude::*;
//!
//! let model = Example1::new();
//! let truth = model.true_theta().unwrap();
//! let data = simulate(&model, &truth, 100, RngStream::new(1, 0)).unwrap();
//!
//! let theta0 = model.param_vector(vec![15.0, 2.0]).unwrap();
//! let cfg = IdentifyConfig::new(50, 100, RngStream::new(1, 1));
//! let trace = identify(&model, &data, &theta0, &cfg).unwrap();
//! let estimate = extract_estimate(&[trace], 25, 10).unwrap();
//! println!("{:?}", estimate.theta_hat);
//! ```

pub mod app;
pub mod dataset;
pub mod error;
pub mod filter;
pub mod identify;
pub mod io;
pub mod logspace;
pub mod model;
pub mod models;
pub mod optim;
pub mod param;
pub mod rng;
pub mod surface;

#[cfg(test)]
mod testing;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::dataset::Dataset;
    pub use crate::error::{Error, Result};
    pub use crate::filter::{categorical_resample, run_apf, run_frozen_bootstrap, ApfConfig, ParticleSystem};
    pub use crate::identify::{
        extract_estimate, identify, sgd_identify, EstimateSummary, IdentifyConfig, IterationTrace, SgdConfig,
    };
    pub use crate::model::{log_joint, simulate, StateSpaceModel};
    pub use crate::models::{kalman_loglik, Example1, Example2, Lgss, LgssCoeffs, LgssParam};
    pub use crate::optim::{maximize, Method, OptResult, OptimizerConfig};
    pub use crate::param::{ParamVector, Transform};
    pub use crate::rng::RngStream;
    pub use crate::surface::{build_surface, LocalLikelihoodSurface, Normalization, SurfaceValue};
}
