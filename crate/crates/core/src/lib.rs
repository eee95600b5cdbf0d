//! Channel-aware collaborative perception toolkit.
//!
//! Radio links, V2V graph optimization, an adaptive DCT codec, spectral
//! domain alignment and a 2D late-fusion sensing surrogate, tied together by
//! a seeded experiment harness.

// `!(x > 0.0)` is the NaN-rejecting form used throughout for domain checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codec;
pub mod error;
pub mod exec;
pub mod harness;
pub mod image;
pub mod netopt;
pub(crate) mod rng;
pub mod specalign;
pub mod worldsim;

pub use error::{Error, Result};
