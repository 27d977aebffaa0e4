//! Polar coding for arbitrarily-permuted parallel channels.
//!
//! A message is split into `S` polar codewords that travel over `S` binary-input
//! symmetric channels through an assignment known only to the receiver. The
//! crate provides:
//!
//! * [`gf`]: GF(2^m) arithmetic and bit/symbol packing,
//! * [`mds`]: generalized Reed-Solomon codes with erasure-style completion,
//! * [`channel`]: discrete channels, Bhattacharyya parameters, capacity,
//!   degradation witnesses and output merging,
//! * [`polar`]: the polar transform, split channels, information sets and
//!   successive-cancellation decoding over GF(2^m),
//! * [`compound`]: tree channels and rate bounds for non-degraded channel sets,
//! * [`parallel`]: the degraded, interleaved and non-binary parallel schemes,
//! * [`sim`]: the permuted parallel channel and the Monte Carlo harness,
//! * [`experiment`]: configuration, manifest and CSV plumbing behind the CLI.

pub mod channel;
pub mod compound;
pub mod error;
pub mod experiment;
pub mod gf;
pub mod mds;
pub mod parallel;
pub mod polar;
pub mod sim;

pub use error::{Error, Result};
