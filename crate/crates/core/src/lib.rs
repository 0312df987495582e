pub mod cli;
pub mod commutant;
pub mod correlations;
pub mod darwinism;
pub mod degeneracy;
pub mod error;
pub mod gates;
pub mod lbf;
pub mod mcsim;
pub mod protocol;
pub mod rng;
pub mod states;
pub mod tensor;
pub mod tol;

pub use error::{ConcordiaError, Result};
