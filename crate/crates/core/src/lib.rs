//! Simulation and analysis of pulsed, cavity-enhanced SPDC photon-pair
//! sources: crystal dispersion, the cavity-modified joint spectral amplitude,
//! its Schmidt decomposition, temporal-correlation fits and pulse-length
//! studies.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dispersion;
pub mod error;
pub mod io;
pub mod rng;
pub mod scenario;
pub mod schmidt;
pub mod spectral;
pub mod svg;
pub mod sweep;
pub mod temporal;

pub use error::{Result, SpdcError};
pub use scenario::Scenario;
