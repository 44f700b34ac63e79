//! Frequency-domain batch codec: forward/inverse transforms, energy
//! accounting, and the two truncation criteria with their error guarantees.
//!
//! Conventions used throughout (and by everything downstream):
//!
//! * The forward transform is unnormalised with negative exponent; the
//!   inverse carries the 1/n factor.
//! * Real batches are stored as half-spectra (bins `0..=n/2`, DC first);
//!   the upper half is implied by conjugate symmetry.
//! * Energy of a frequency series always includes the 1/n Parseval factor
//!   and the conjugate multiplicity (2 for interior bins, 1 for DC and
//!   Nyquist), so the energy of a full half-spectrum equals the energy of
//!   the originating batch and the truncation bound is tight.

use num_complex::Complex;
use thiserror::Error;

use crate::fft;
use crate::scalar::Real;

/// Absolute tolerance on the imaginary part of the DC and Nyquist bins.
pub const REALNESS_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("batch length {0} is odd; batches must have even length")]
    OddLength(usize),
    #[error("batch length {0} is below the minimum of 2")]
    TooShort(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("sample {value} at index {index} outside the utilisation range [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("half-spectrum length {got} does not match n={n} (expected {expected})")]
    BadSpectrumLength { n: usize, expected: usize, got: usize },
    #[error("bin {bin} must be real; imaginary part {imaginary} exceeds tolerance")]
    NonRealEdgeBin { bin: usize, imaginary: f64 },
    #[error("retained term count {k} outside [1, {max}]")]
    BadTermCount { k: usize, max: usize },
    #[error("energy threshold {0} outside (0, 1]")]
    BadEnergyThreshold(f64),
    #[error("RMSE bound {0} must be positive and finite")]
    BadRmseBound(f64),
    #[error("length mismatch: batch has n={batch_n}, spectrum has n={spectrum_n}")]
    LengthMismatch { batch_n: usize, spectrum_n: usize },
}

/// One node's consecutive utilisation observations between two update times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesBatch<T: Real = f64> {
    values: Vec<T>,
}

impl<T: Real> TimeSeriesBatch<T> {
    /// Validates length (even, >= 2), finiteness and the [0, 1] range.
    pub fn new(values: Vec<T>) -> Result<Self, SpectralError> {
        if values.len() < 2 {
            return Err(SpectralError::TooShort(values.len()));
        }
        if values.len() % 2 != 0 {
            return Err(SpectralError::OddLength(values.len()));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SpectralError::NonFinite(i));
            }
            if *v < T::zero() || *v > T::one() {
                return Err(SpectralError::OutOfRange {
                    index: i,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Full half-spectrum of a batch: bins `0..=n/2`, DC first.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Real = f64> {
    coefficients: Vec<Complex<T>>,
    n: usize,
}

impl<T: Real> Spectrum<T> {
    /// Builds a spectrum from raw coefficients, enforcing the half-spectrum
    /// length and the realness of the DC and Nyquist bins.
    pub fn from_parts(coefficients: Vec<Complex<T>>, n: usize) -> Result<Self, SpectralError> {
        if n < 2 {
            return Err(SpectralError::TooShort(n));
        }
        if n % 2 != 0 {
            return Err(SpectralError::OddLength(n));
        }
        let expected = n / 2 + 1;
        if coefficients.len() != expected {
            return Err(SpectralError::BadSpectrumLength {
                n,
                expected,
                got: coefficients.len(),
            });
        }
        for (i, c) in coefficients.iter().enumerate() {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(SpectralError::NonFinite(i));
            }
        }
        for bin in [0, n / 2] {
            let im = coefficients[bin].im;
            if im.abs() > T::of(REALNESS_TOL) {
                return Err(SpectralError::NonRealEdgeBin {
                    bin,
                    imaginary: im.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { coefficients, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored bins, `n/2 + 1`.
    pub fn half_len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    /// Keeps the first `k` bins. The result is a prefix by construction.
    pub fn truncate(&self, k: usize) -> Result<TruncatedSpectrum<T>, SpectralError> {
        if k < 1 || k > self.half_len() {
            return Err(SpectralError::BadTermCount {
                k,
                max: self.half_len(),
            });
        }
        Ok(TruncatedSpectrum {
            coefficients: self.coefficients[..k].to_vec(),
            n: self.n,
        })
    }
}

/// Prefix of a half-spectrum: the `k` lowest-frequency bins plus the
/// originating batch length. This is the payload a node transmits.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSpectrum<T: Real = f64> {
    coefficients: Vec<Complex<T>>,
    n: usize,
}

impl<T: Real> TruncatedSpectrum<T> {
    /// Rebuilds a truncated spectrum from its wire representation. The
    /// prefix property (coefficients are the first `k` bins of the full
    /// half-spectrum) cannot be checked here and is trusted.
    pub fn from_parts(coefficients: Vec<Complex<T>>, n: usize) -> Result<Self, SpectralError> {
        if n < 2 {
            return Err(SpectralError::TooShort(n));
        }
        if n % 2 != 0 {
            return Err(SpectralError::OddLength(n));
        }
        let max = n / 2 + 1;
        let k = coefficients.len();
        if k < 1 || k > max {
            return Err(SpectralError::BadTermCount { k, max });
        }
        for (i, c) in coefficients.iter().enumerate() {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(SpectralError::NonFinite(i));
            }
        }
        if coefficients[0].im.abs() > T::of(REALNESS_TOL) {
            return Err(SpectralError::NonRealEdgeBin {
                bin: 0,
                imaginary: coefficients[0].im.to_f64().unwrap_or(f64::NAN),
            });
        }
        if k == max && coefficients[max - 1].im.abs() > T::of(REALNESS_TOL) {
            return Err(SpectralError::NonRealEdgeBin {
                bin: max - 1,
                imaginary: coefficients[max - 1].im.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { coefficients, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Retained term count.
    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    /// Energy captured by the retained prefix (Parseval-normalised).
    pub fn energy(&self) -> T {
        spectral_energy(&self.coefficients, self.n)
    }
}

/// Cumulative fraction of total energy captured by each half-spectrum
/// prefix; entry `k` corresponds to keeping `k` terms, so the series has
/// `n/2 + 2` entries starting at 0 and ending at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile<T: Real = f64> {
    cumulative: Vec<T>,
    total_energy: T,
}

impl<T: Real> EnergyProfile<T> {
    pub fn cumulative(&self) -> &[T] {
        &self.cumulative
    }

    /// Fraction of total energy captured by the first `k` terms.
    pub fn fraction_at(&self, k: usize) -> T {
        self.cumulative[k]
    }

    /// Total (time-domain-scale) energy of the underlying spectrum.
    pub fn total_energy(&self) -> T {
        self.total_energy
    }

    /// True when the underlying batch carried zero energy; all fractions
    /// are zero in that case.
    pub fn is_degenerate(&self) -> bool {
        self.total_energy == T::zero()
    }
}

/// Conjugate multiplicity of half-spectrum bin `i`: DC and Nyquist appear
/// once in the full spectrum, every other bin twice.
fn multiplicity<T: Real>(i: usize, n: usize) -> T {
    if i == 0 || i == n / 2 {
        T::one()
    } else {
        T::of(2.0)
    }
}

/// Forward transform of a batch into its half-spectrum. The DC and Nyquist
/// imaginary parts, which are identically zero for real input, are stored
/// as exact zeros.
pub fn dft<T: Real>(batch: &TimeSeriesBatch<T>) -> Spectrum<T> {
    let n = batch.len();
    let input: Vec<Complex<T>> = batch
        .values()
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .collect();
    let full = fft::fft_forward(&input);
    let mut coefficients: Vec<Complex<T>> = full[..=n / 2].to_vec();
    coefficients[0].im = T::zero();
    coefficients[n / 2].im = T::zero();
    Spectrum { coefficients, n }
}

/// Inverse transform of a full half-spectrum back to `n` real samples.
/// The output is unclamped; truncated reconstructions of nonnegative
/// signals may dip slightly outside [0, 1].
pub fn idft<T: Real>(spectrum: &Spectrum<T>) -> Vec<T> {
    inverse_real(&spectrum.coefficients, spectrum.n)
}

pub(crate) fn inverse_real<T: Real>(half: &[Complex<T>], n: usize) -> Vec<T> {
    let mut full = vec![Complex::new(T::zero(), T::zero()); n];
    full[..half.len()].copy_from_slice(half);
    for f in 1..n / 2 {
        full[n - f] = full[f].conj();
    }
    fft::fft_inverse(&full).into_iter().map(|c| c.re).collect()
}

/// Energy of the discrete-time signal: the sum of squared samples.
pub fn signal_energy<T: Real>(batch: &TimeSeriesBatch<T>) -> T {
    batch.values().iter().map(|&v| v * v).sum()
}

/// Energy captured by a half-spectrum prefix, on the time-domain scale:
/// `(1/n) * sum_i m_i * |U_i|^2` with conjugate multiplicity `m_i`. For the
/// full prefix this equals [`signal_energy`] of the originating batch.
pub fn spectral_energy<T: Real>(prefix: &[Complex<T>], n: usize) -> T {
    assert!(prefix.len() <= n / 2 + 1, "prefix longer than half-spectrum");
    let inv_n = T::one() / T::from_usize(n).unwrap();
    prefix
        .iter()
        .enumerate()
        .map(|(i, c)| multiplicity::<T>(i, n) * c.norm_sqr() * inv_n)
        .sum()
}

/// Per-prefix cumulative energy fractions of a spectrum.
pub fn energy_profile<T: Real>(spectrum: &Spectrum<T>) -> EnergyProfile<T> {
    let (partials, total) = energy_partials(spectrum);
    if total == T::zero() {
        return EnergyProfile {
            cumulative: vec![T::zero(); partials.len()],
            total_energy: T::zero(),
        };
    }
    let cumulative = partials.iter().map(|&p| p / total).collect();
    EnergyProfile {
        cumulative,
        total_energy: total,
    }
}

/// Running energy sums per prefix length (0..=n/2+1 terms) plus the total.
/// The final partial is bitwise equal to the total because both come from
/// the same accumulation sequence.
fn energy_partials<T: Real>(spectrum: &Spectrum<T>) -> (Vec<T>, T) {
    let n = spectrum.n;
    let inv_n = T::one() / T::from_usize(n).unwrap();
    let mut partials = Vec::with_capacity(spectrum.half_len() + 1);
    let mut acc = T::zero();
    partials.push(acc);
    for (i, c) in spectrum.coefficients.iter().enumerate() {
        acc += multiplicity::<T>(i, n) * c.norm_sqr() * inv_n;
        partials.push(acc);
    }
    (partials, acc)
}

/// Keeps the minimal prefix whose captured energy fraction reaches the
/// threshold `e`. Ties resolve to the smaller k; a zero-energy spectrum
/// degenerates to k = 1.
pub fn truncate_by_energy<T: Real>(
    spectrum: &Spectrum<T>,
    e: T,
) -> Result<TruncatedSpectrum<T>, SpectralError> {
    if !(e > T::zero() && e <= T::one()) {
        return Err(SpectralError::BadEnergyThreshold(
            e.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let profile = energy_profile(spectrum);
    if profile.is_degenerate() {
        return spectrum.truncate(1);
    }
    let k = (1..=spectrum.half_len())
        .find(|&k| profile.fraction_at(k) >= e)
        .expect("full prefix captures all energy");
    spectrum.truncate(k)
}

/// Keeps the minimal prefix whose truncation-error bound
/// `sqrt((E(U) - E(R)) / n)` is at most `eps`. The realised reconstruction
/// RMSE never exceeds this bound.
pub fn truncate_by_rmse<T: Real>(
    spectrum: &Spectrum<T>,
    eps: T,
) -> Result<TruncatedSpectrum<T>, SpectralError> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(SpectralError::BadRmseBound(eps.to_f64().unwrap_or(f64::NAN)));
    }
    let (partials, total) = energy_partials(spectrum);
    let inv_n = T::one() / T::from_usize(spectrum.n).unwrap();
    let k = (1..=spectrum.half_len())
        .find(|&k| {
            let lost = (total - partials[k]).max(T::zero());
            (lost * inv_n).sqrt() <= eps
        })
        .expect("full prefix loses no energy");
    spectrum.truncate(k)
}

/// Inverse transform of a truncated spectrum: lost bins are zero-filled,
/// then the half-spectrum is inverted. Output length is `n`, unclamped.
pub fn reconstruct<T: Real>(trunc: &TruncatedSpectrum<T>) -> Vec<T> {
    let half_len = trunc.n / 2 + 1;
    let mut half = vec![Complex::new(T::zero(), T::zero()); half_len];
    half[..trunc.k()].copy_from_slice(&trunc.coefficients);
    inverse_real(&half, trunc.n)
}

/// Root-mean-square error between a batch and the (unclamped)
/// reconstruction of its truncated spectrum.
pub fn truncation_rmse<T: Real>(
    original: &TimeSeriesBatch<T>,
    trunc: &TruncatedSpectrum<T>,
) -> Result<T, SpectralError> {
    if original.len() != trunc.n {
        return Err(SpectralError::LengthMismatch {
            batch_n: original.len(),
            spectrum_n: trunc.n,
        });
    }
    let recon = reconstruct(trunc);
    Ok(rmse(original.values(), &recon))
}

/// Plain RMSE between two equal-length slices.
pub fn rmse<T: Real>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len());
    let sum: T = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    (sum / T::from_usize(a.len()).unwrap()).sqrt()
}
