//! Deterministic simulator of a servo destructive-test rig together with the
//! statistical machinery used to judge its reliability over operating cycles.
//!
//! The crate is organised around the stages of the pipeline:
//!
//! * [`fdr`] — flight-data-recorder log parsing, fine-unit conversion,
//!   descriptive statistics and frequency-weighted command schedules;
//! * [`dynamics`] — aerodynamic load on the aileron and sizing of the spring
//!   that stands in for it on the rig;
//! * [`testbed`] — stepped servo motion, a configurable wear model,
//!   pulse-level quadrature encoder simulation, calibration and campaign
//!   logging;
//! * [`anova`] — one-way repeated-measures ANOVA with sphericity
//!   corrections, planned contrasts, multivariate tests, pairwise
//!   comparisons and parameter estimates;
//! * [`dist`] — the F / chi-square / t distribution tails and quantiles the
//!   analysis needs;
//! * [`reconstruct`] — generation of subject matrices matched to published
//!   summary statistics, used for verification;
//! * [`report`] — the serializable analysis report bundle.
//!
//! Every operation is deterministic: all randomness flows from explicit
//! seeds, so equal inputs produce byte-identical outputs.

pub mod anova;
pub mod dist;
pub mod dynamics;
pub mod error;
pub mod fdr;
pub mod reconstruct;
pub mod report;
pub mod testbed;

mod linalg;

pub use error::{Error, Result};
