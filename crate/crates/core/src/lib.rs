//! Limiting spectral distributions of general sample covariance matrices
//! `S_n = (1/n) B X X* B*`.
//!
//! The numeric core solves the self-consistent Stieltjes-transform equation for
//! a discrete population spectrum `H` and aspect ratio `c = p/n`
//! ([`stieltjes`]), derives the support of the limit law and its spectral gaps
//! ([`support`]), and the Monte Carlo side builds the observation model
//! ([`model`]), computes spectra ([`eig`]) and runs verification campaigns
//! ([`experiments`]).

pub mod eig;
pub mod error;
pub mod experiments;
pub mod model;
pub mod par;
pub mod stieltjes;
pub mod support;

pub use error::{Error, Result};

/// Field of matrix entries: `f64` or `Complex<f64>`.
pub trait Scalar: nalgebra::ComplexField<RealField = f64> + Copy {}

impl<T: nalgebra::ComplexField<RealField = f64> + Copy> Scalar for T {}
