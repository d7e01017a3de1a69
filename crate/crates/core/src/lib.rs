//! Boiling-flow phase screens: synthesis from five parameters, estimation
//! of those parameters from measured phase data, and fidelity metrics that
//! compare the two.
//!
//! ```
//! use phscrn::screens::{generate_series, BoilingParams, GenSpec};
//! use phscrn::estimation::{estimate_params, EstimateOptions};
//!
//! let params = BoilingParams { l0_m: 0.05, r0_m: 0.1, vx_px: 0.6, vy_px: 0.0, alpha: 0.95, delta_m: 2e-3 };
//! let spec = GenSpec { n_out: 16, n_steps: 200, seed: 1, lambda_m: 532e-9, fs_hz: 1e5 };
//! let series = generate_series(&params, &spec).unwrap();
//! let est = estimate_params(&series, &EstimateOptions::default()).unwrap();
//! assert!(est.params.alpha > 0.0 && est.params.alpha <= 1.0);
//! ```

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod fourier;
pub mod io;
pub mod metrics;
mod parallel;
pub mod screens;
pub mod series;

pub use error::{Error, ErrorClass, Result};
pub use series::FrameSeries;

/// Crate version, recorded in parameter files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/conventions.md")]
    struct Conventions;
    #[doc = include_str!("../../../book/src/generation.md")]
    struct Generation;
    #[doc = include_str!("../../../book/src/estimation.md")]
    struct Estimation;
    #[doc = include_str!("../../../book/src/metrics.md")]
    struct Metrics;
    #[doc = include_str!("../../../book/src/files-and-cli.md")]
    struct FilesAndCli;
}
