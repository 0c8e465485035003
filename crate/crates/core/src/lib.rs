//! Numerical toolkit for compound quantum channels.
//!
//! The crate evaluates coherent information, entanglement fidelity, and
//! entropy exchange for finite sets of channels, estimates compound-capacity
//! lower bounds by max-min optimization, constructs adapted channel nets with
//! continuity bounds, and runs reproducible Monte-Carlo experiments for the
//! one-shot random-coding inequalities and the exact Haar-moment formula.
//!
//! All numerics are generic over the floating-point scalar via [`Real`];
//! the `*64` aliases below fix the default `f64` precision.

pub mod channels;
pub mod codingsim;
pub mod compound;
pub mod error;
pub mod information;
pub mod operators;
pub mod rng;
pub mod scalar;
pub mod states;

pub use error::{Error, Result};
pub use rng::SeedStream;
pub use scalar::{Real, Tolerances};

/// Default-precision aliases.
pub type Matrix64 = operators::ComplexMatrix<f64>;
pub type Eigensystem64 = operators::HermitianEigensystem<f64>;
pub type Density64 = states::DensityOperator<f64>;
pub type PureState64 = states::PureState<f64>;
pub type Subspace64 = states::Subspace<f64>;
pub type Channel64 = channels::KrausChannel<f64>;
pub type Choi64 = channels::ChoiMatrix<f64>;
pub type CompoundSet64 = compound::CompoundSet<f64>;



/// Single-precision aliases for quick, lower-accuracy experimentation.
pub type Matrix32 = operators::ComplexMatrix<f32>;
pub type Density32 = states::DensityOperator<f32>;

