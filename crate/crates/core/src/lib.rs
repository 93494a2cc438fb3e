//! Decay of a prepared level coupled to a quasi-continuum with a power-law
//! spectral function: random-matrix ensembles, exact dynamics, spectra,
//! asymptotic theory and curve analysis.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the scalar type.

pub mod analysis;
pub mod ensemble;
pub mod eigen;
pub mod error;
pub mod observables;
pub mod propagator;
pub mod quad;
pub mod scalar;
pub mod spectra;
pub mod spectral_kernel;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::Real;
pub use spectral_kernel::{CutoffKind, SpectralParams, TimeScales};

pub type SpectralParams64 = SpectralParams<f64>;
pub type SpectralParams32 = SpectralParams<f32>;
pub type TimeScales64 = TimeScales<f64>;
pub use ensemble::{EnsembleOptions, EntryDistribution, ModelKind, Realization};

pub type Realization64 = Realization<f64>;
pub type Realization32 = Realization<f32>;
pub use eigen::EigenPairs;
pub use spectra::LdosHistogram;

pub type EigenPairs64 = EigenPairs<f64>;
pub type LdosHistogram64 = LdosHistogram<f64>;
pub use observables::{EnsembleSeries, QuartileMode};

pub type EnsembleSeries64 = EnsembleSeries<f64>;
