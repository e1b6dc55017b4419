//! JPEG-compression defenses against adversarial examples.
//!
//! The library covers the full loop needed to study compression as a
//! defense: an in-memory JPEG quantization round-trip ([`jpeg`]),
//! stochastic local quantization ([`slq`]), baseline denoising defenses
//! ([`denoise`]), small differentiable classifiers ([`model`]), the four
//! classic gradient attacks ([`attacks`]), vaccination and ensemble voting
//! ([`defense`]), and a reproducible benchmark harness ([`bench`]).
//!
//! Start with the runnable programs in `examples/`; each one demonstrates
//! a single capability end to end.

pub mod attacks;
pub mod bench;
pub mod defense;
pub mod denoise;
pub mod error;
pub mod image;
pub mod jpeg;
pub mod model;
pub mod rng;
pub mod slq;

pub use error::{Error, Result};
