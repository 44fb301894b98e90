//! Simulation of longitudinal survival data under near-violations of the
//! positivity assumption, and the machinery to measure how inverse
//! probability of treatment weighted (IPTW) marginal structural models behave
//! under them.
//!
//! Two data-generating mechanisms are provided:
//!
//! * [`genmodel_one`]: discrete-time failures with a CD4-like biomarker,
//!   analysed with a logit marginal structural model;
//! * [`genmodel_two`]: continuous event times from an additive hazard,
//!   analysed with an Aalen marginal structural model.
//!
//! Both accept a [`posviol::PositivityPolicy`] that forces treatment on a
//! fraction of subjects whose biomarker falls in a poor-health region.
//! [`weights`] builds stabilised weights, [`estimators`] fits the models,
//! [`truth`] supplies the estimands and [`harness`] runs the Monte Carlo
//! study.
//!
//! ```
//! use posim::estimators::{fit_logit_msm, GForm};
//! use posim::genmodel_one::{simulate_dataset_one, StudyOneParams};
//! use posim::weights::{estimate_weights_one, truncate_weights, TruncationStrategy};
//!
//! let data = simulate_dataset_one(&StudyOneParams::benchmark(300), 0, 42).unwrap();
//! let weights = estimate_weights_one(&data).unwrap();
//! let weights = truncate_weights(&weights, TruncationStrategy::P1_99);
//! let fit = fit_logit_msm(&data, &weights, GForm::HavercroftD1AD3).unwrap();
//! assert_eq!(fit.coefficients.len(), 4);
//! ```

pub mod config;
pub mod data;
pub mod error;
pub mod estimators;
pub mod genmodel_one;
pub mod genmodel_two;
pub mod glm;
pub mod harness;
pub mod io;
pub mod numeric;
pub mod posviol;
pub mod stochastic;
pub mod truth;
pub mod weights;

pub use error::{Error, Result};

// Book chapters compile and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/streams.md")]
    mod streams {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
    #[doc = include_str!("../../../book/src/positivity.md")]
    mod positivity {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/truth.md")]
    mod truth {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
