//! Coherence structure of infinite change-of-basis matrices between a Fourier
//! sampling basis and wavelet or Legendre reconstruction bases, and the
//! compressed sensing experiments built on it.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bases;
pub mod coherence;
pub mod error;
pub mod isometry;
pub mod operator;
pub mod recovery;
pub mod special;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
