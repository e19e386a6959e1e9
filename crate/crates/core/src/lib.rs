//! Numerical laboratory for a pulled KPP front coupled to a Swift-Hohenberg pattern.
//!
//! The crate is generic over the scalar type where the algebra allows it; the aliases at the
//! bottom fix `f64` for everyday use.

pub mod banded;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod fd;
pub mod front;
pub mod gl;
pub mod grid;
pub mod jet;
pub mod modefilter;
pub mod ode;
pub mod params;
pub mod poly;
pub mod roots;
pub mod scalar;
pub mod sim;
pub mod spectral;
pub mod spectrum;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub type Params = params::SystemParams<f64>;
pub type ExactParams = params::SystemParams<num_rational::Rational64>;
pub type GLData = gl::GlData<f64>;
pub type ExactGLData = gl::GlData<num_rational::Rational64>;
pub type Symbol = spectral::OperatorSymbol<f64>;
pub type ExactSymbol = spectral::OperatorSymbol<num_rational::Rational64>;
