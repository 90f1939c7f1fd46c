//! Communication and sensing limits of Gaussian fading channels observed
//! through 1-bit I/Q quantizers.
//!
//! The receiver keeps only the signs of the in-phase and quadrature
//! components, so the output alphabet has four letters (one per quadrant).
//! This crate computes, for `H ~ CN(0,1)` fading on both the data link and
//! the monostatic sensing echo:
//!
//! * the per-letter channel law and conditional output PMFs
//!   ([`quantized_channel`]),
//! * communication and sensing mutual information for arbitrary discrete
//!   inputs, and the closed-form capacities attained by constant-amplitude
//!   π/2-symmetric constellations ([`information`]),
//! * the optimal transmit power-control policy when the communication
//!   channel gain is known at the transmitter, solved by nested bisection
//!   on a water-filling-style threshold condition ([`power_control`]).
//!
//! Every analytic formula is cross-checked in the test suite against an
//! independent route: quadrature against Monte-Carlo, closed forms against
//! direct mutual-information integrals, derivatives against finite
//! differences.
//!
//! All numeric kernels are generic over the scalar type through the
//! [`Float`] trait (`f32` or `f64`); the [`Real`] alias and the concrete
//! type aliases at the crate root fix `f64` as the default precision.

use num_traits::{Float as NumFloat, FloatConst, FromPrimitive, NumAssign};

pub mod distributions;
pub mod information;
pub mod power_control;
mod quadrature;
pub mod quantized_channel;
pub mod scalar_math;

mod accum;

/// Scalar type bound for every numeric kernel in this crate.
///
/// A pure trait alias: anything that is an IEEE float with the usual
/// transcendental functions, constants, and `f64`-literal conversion works.
pub trait Float:
    NumFloat + FloatConst + FromPrimitive + NumAssign + std::iter::Sum + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl<T> Float for T where
    T: NumFloat
        + FloatConst
        + FromPrimitive
        + NumAssign
        + std::iter::Sum
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Default scalar precision for the CLI and the acceptance suite.
pub type Real = f64;

/// Discrete input constellation at default precision.
pub type Constellation = distributions::DiscreteInputDistribution<Real>;
/// Quadrature grid for the CN(0,1) fading state at default precision.
pub type Grid = distributions::FadingGrid<Real>;
/// Channel parameters at default precision.
pub type Params = quantized_channel::ChannelParams<Real>;
/// Solved power-control policy at default precision.
pub type Policy = power_control::PowerControlPolicy<Real>;

/// Errors reported by this crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structural precondition between values was violated.
    #[error("contract violation: {0}")]
    Contract(String),
    /// An iterative solver failed to converge.
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Convert an `f64` literal to the working scalar type.
pub(crate) fn lit<F: Float>(x: f64) -> F {
    F::from_f64(x).expect("f64 literal must be representable in the scalar type")
}
