//! Readability regression for German sentences: feature extraction,
//! two-phase encoder + MLP training with early stopping, filtered ensemble
//! averaging and a bootstrap study of ensemble size and composition.

pub mod cli;
pub mod corpus;
pub mod encoder;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod metrics;
pub mod params;
pub mod pipeline;
pub mod rng;
pub mod text;
pub mod training;

pub use error::{Error, Result};
