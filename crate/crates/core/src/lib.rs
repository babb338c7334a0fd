//! Indicator-aware relation classification over SemEval-2010 Task 8 style data.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod indicator;
pub mod model;
pub mod pipeline;
pub mod sequencing;
pub mod synthetic;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
