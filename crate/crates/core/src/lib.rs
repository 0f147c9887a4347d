//! Spectral laboratory for the cubic third-order NLS equation on the circle.
//!
//! The model is `i u_t - i u_xxx - beta u_xx = |u|^2 u` for 2*pi-periodic
//! complex `u`, Galerkin-truncated to Fourier modes `|n| <= N`. The crate
//! provides the truncated flow in four equivalent forms (original,
//! renormalized, and the interaction pictures of the once- and twice-gauged
//! unknowns), the gauge maps linking them, resonance analysis of the cubic
//! interaction phase, normal-form decompositions of the flow remainders, and
//! Monte Carlo diagnostics for Gaussian measures on Fourier coefficients.
//!
//! Everything is deterministic: random draws are counter-keyed by
//! `(seed, stream, index, mode)`, parallel reductions are order-fixed, and
//! all direct sums run in a fixed lattice order.

pub mod cubic;
pub mod dynamics;
pub mod error;
pub mod gauges;
pub mod grid;
pub mod measure;
pub mod normal_form;
pub mod params;
pub mod resonance;
pub mod state;
pub mod stats;

pub use error::{Error, Result};
pub use grid::FrequencyGrid;
pub use params::{Beta, ModelParams};
pub use state::{Representation, SpectralState};
