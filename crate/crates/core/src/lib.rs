//! Communication-efficient telemetry collection and forecasting.
//!
//! Nodes buffer per-step resource-utilisation observations into fixed-size
//! batches, compress each batch by truncating its Fourier half-spectrum
//! under an energy-threshold or RMSE-bound criterion, and ship the retained
//! coefficients to a central controller. A complex-gated recurrent model
//! forecasts future utilisation directly from the truncated spectra.
//!
//! The numeric core ([`spectral`], [`fft`], [`forecast`]) is generic over
//! the scalar type through [`scalar::Real`]; the wire format, trace files
//! and simulator are pinned to `f64` (coefficients travel as IEEE-754
//! binary64).

pub mod collection;
pub mod fft;
pub mod forecast;
pub mod kv;
pub mod scalar;
pub mod spectral;
pub mod trace;

pub use scalar::Real;
pub use spectral::{
    dft, energy_profile, idft, reconstruct, signal_energy, spectral_energy, truncate_by_energy,
    truncate_by_rmse, truncation_rmse, EnergyProfile, SpectralError, Spectrum, TimeSeriesBatch,
    TruncatedSpectrum,
};

/// `f64` instantiations of the generic codec types; the collection
/// protocol, trace pipeline and CLI all operate on these.
pub type Batch64 = TimeSeriesBatch<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type TruncatedSpectrum64 = TruncatedSpectrum<f64>;
pub type EnergyProfile64 = EnergyProfile<f64>;
