//! Rule-based explanations for knowledge-graph link predictors.

pub mod embedding;
pub mod error;
pub mod eval;
pub mod explain;
pub mod kg;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod rules;
pub mod scope;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
