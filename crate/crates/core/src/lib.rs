//! Associative memory in a single driven-dissipative nonlinear oscillator.
//!
//! The oscillator is driven by an n-photon squeezing term and damped by
//! linear and m-photon losses. In the metastable regime its state relaxes
//! onto one of n coherent lobes, which act as stored patterns.

pub mod dynamics;
pub mod error;
pub mod fockspace;
pub mod harness;
pub mod linalg;
pub mod meanfield;
pub mod memory;
pub mod metastable;
pub mod ode;
pub mod phasespace;
pub mod lindblad;
pub mod spectral;

pub use error::{Error, Result};
pub use linalg::C64;
