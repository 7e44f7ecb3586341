//! Glaucoma-vs-other classification of visual field perimetry.
//!
//! The crate covers the whole path from data to audited numbers:
//!
//! - [`vfdata`]: perimetry records, the dataset CSV format and stratified splitting
//! - [`synthgen`]: seeded synthetic records and a raster renderer standing in for
//!   photographed printouts
//! - [`preprocess`]: raster cleanup, grid extraction and feature standardization
//! - [`classifiers`]: logistic regression, Gaussian naive Bayes, random forest and a
//!   Pegasos-style linear SVM, all written from scratch
//! - [`eval`]: confusion matrices, per-class reports and reconstruction of confusion
//!   matrices from published, rounded metric tables
//! - [`pipeline`]: configuration and the end-to-end driver used by the CLI

pub mod classifiers;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod synthgen;
pub mod vfdata;

pub use error::{Error, Result};
