//! Exchangeable Monte Carlo significance tests driven by Markov chains.
//!
//! The samplers produce draws that are exchangeable with an observed value
//! under the null, so the rank-based Monte Carlo p-value keeps its size even
//! though the draws are dependent.

pub mod chains;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod oracle;
pub mod par;
pub mod pvalue;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
