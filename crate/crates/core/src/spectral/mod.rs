//! Cavity-modified joint spectral amplitude and the one-dimensional spectra
//! derived from it.

pub mod cavity;
pub mod cluster;
pub mod filter;
pub mod jsa;
pub mod pump;

pub use cavity::{airy, double_pass_factor, finesse, linewidth, nearest_resonance, CavitySpec, FacetPair};
pub use cluster::{cluster_spectrum, ClusterSpectrum};
pub use filter::{apply_filter, FilterSpec, LineShape};
pub use jsa::{build_jsa, evaluate_jsa, marginal, phase_matching, FrequencyGrid, JsaGrid, SpectralAxis};
pub use pump::{pump_envelope, PulseShape, PumpSpec};
