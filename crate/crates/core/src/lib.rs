//! Calibration of kernel-based cross-impact models.
//!
//! Pipeline: Hawkes order flow ([`hawkes`]) → binned observables ([`observables`])
//! → polynomial-matrix spectral factorization ([`polymat`]) → martingale-admissible
//! kernel K¹ and its no-statistical-arbitrage projection K² ([`kernels`]) → costs,
//! arbitrage search and price prediction ([`arbitrage`]).

pub mod arbitrage;
pub mod cli;
pub mod config;
pub mod error;
pub mod hawkes;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod observables;
pub mod polymat;

pub use error::{Error, Result};
pub use hawkes::{EventStream, HawkesSpec};
pub use kernels::{ImpactKernel, Provenance};
pub use observables::{BinnedSeries, ObservableSet, PricePath};
pub use polymat::{LaurentMatrix, SpectralFactor};

/// Default number of unit-circle grid points.
pub const DEFAULT_GRID: usize = 4096;
