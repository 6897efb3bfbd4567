//! Gaussian-process log-likelihood-ratio similarity for sparse, possibly
//! asynchronously sampled time courses.
//!
//! The crate covers the whole analysis pipeline: fitting shared GP
//! hyperparameters, computing pairwise scores (the GP ratio plus Euclidean,
//! correlation, DTW and RKHS Bregman baselines), clustering the resulting
//! matrices, scoring clusterings, and generating synthetic benchmarks.

pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod gp;
pub mod io;
pub mod linalg;
pub mod similarity;
pub mod synth;
pub mod timecourse;

pub use error::{Error, ErrorKind, Result};
pub use timecourse::TimeCourse;
