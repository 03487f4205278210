//! Finite-alphabet laboratory for remote strong coordination with reliable
//! communication over a broadcast channel `P(y, z | x)`.
//!
//! * [`prob`]: joint distributions, information measures, total variation.
//! * [`fm`]: Fourier–Motzkin elimination over entropy-valued constants.
//! * [`region`]: numeric rate regions, membership and boundary sweeps.
//! * [`code`]: the random-binning scheme at small blocklengths, with exact
//!   coordination, reliability and secrecy metrics.
//! * [`verify`]: self-contained property suites.
//!
//! Probability code is generic over [`Scalar`] (`f32` or `f64`). Symbolic
//! constants in [`fm`] use exact rationals.

pub mod code;
pub mod error;
pub mod fm;
pub mod prob;
pub mod region;
pub mod scalar;
pub mod verify;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

/// Double-precision joint distribution.
pub type JointDistribution = prob::Joint<f64>;
/// Double-precision channel.
pub type Channel64 = prob::Channel<f64>;
/// Single-precision joint distribution.
pub type JointDistribution32 = prob::Joint<f32>;
/// Double-precision auxiliary witness.
pub type Witness = region::AuxiliaryWitness<f64>;
/// Double-precision code configuration.
pub type Config = code::CodeConfig<f64>;
/// Exact rational used for symbolic coefficients.
pub type Rational = num_rational::Rational64;
