//! Frequency-domain forecasting model: a gated recurrent cell over complex
//! spectral coefficients, with a linear head producing a forecast-horizon
//! half-spectrum that is inverse transformed into time-domain predictions.
//!
//! Complex inputs are fed as (re, im) pairs of reals; cell parameters are
//! shared across the window's batches, and the per-batch final hidden
//! states are concatenated before the head.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cell::{CellGradients, GruCell, StepCache};
use super::linalg::{add_assign, scale, Matrix};
use super::{ForecastError, UpdateRule, WindowSample};
use crate::collection::SpectrumForecaster;
use crate::fft;
use crate::scalar::Real;
use crate::spectral::{inverse_real, TruncatedSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CGruConfig {
    pub hidden: usize,
    /// Batches per input window (w).
    pub window: usize,
    /// Forecast horizon in steps (s); even.
    pub horizon: usize,
    pub rule: UpdateRule,
}

impl CGruConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.hidden == 0 || self.window == 0 {
            return Err(ForecastError::BadConfig(
                "hidden size and window must be at least 1".into(),
            ));
        }
        if self.horizon < 2 || self.horizon % 2 != 0 {
            return Err(ForecastError::BadConfig(format!(
                "horizon {} must be even and at least 2",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Width of the head output: `s + 2` reals, i.e. `s/2 + 1` complex bins.
    pub fn head_out(&self) -> usize {
        self.horizon + 2
    }

    pub fn param_count(&self) -> usize {
        3 * (2 * self.hidden + self.hidden * self.hidden + self.hidden)
            + self.head_out() * (self.window * self.hidden + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CGruModel<T: Real = f64> {
    cfg: CGruConfig,
    pub(crate) cell: GruCell<T>,
    pub(crate) head_w: Matrix<T>,
    pub(crate) head_b: Vec<T>,
}

impl<T: Real> CGruModel<T> {
    pub fn zeros(cfg: CGruConfig) -> Result<Self, ForecastError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            cell: GruCell::zeros(cfg.hidden, 2, cfg.rule),
            head_w: Matrix::zeros(cfg.head_out(), cfg.window * cfg.hidden),
            head_b: vec![T::zero(); cfg.head_out()],
        })
    }

    /// Uniform init in +-sqrt(1/fan_in), biases zero, deterministic per
    /// seed.
    pub fn seeded(cfg: CGruConfig, seed: u64) -> Result<Self, ForecastError> {
        let mut model = Self::zeros(cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        model.cell.seed_from(&mut rng);
        let bound = (1.0 / (cfg.window * cfg.hidden) as f64).sqrt();
        for v in model.head_w.data_mut() {
            *v = T::of(rng.gen_range(-bound..bound));
        }
        Ok(model)
    }

    pub fn config(&self) -> &CGruConfig {
        &self.cfg
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Named parameter tensors in a fixed order shared with
    /// [`CGruGradients`], the optimiser and checkpoints.
    pub fn tensors(&self) -> Vec<(&'static str, &[T])> {
        let mut out = self.cell.tensors();
        out.push(("head_w", self.head_w.data()));
        out.push(("head_b", &self.head_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        let mut out = self.cell.tensors_mut();
        out.push(("head_w", self.head_w.data_mut()));
        out.push(("head_b", &mut self.head_b));
        out
    }

    /// One recurrence step; exposed for direct inspection and testing.
    /// `h_prev` must have the configured hidden size.
    pub fn cell_step(&self, x: Complex<T>, h_prev: &[T]) -> Result<Vec<T>, ForecastError> {
        if h_prev.len() != self.cfg.hidden {
            return Err(ForecastError::BadConfig(format!(
                "hidden state has {} components, model expects {}",
                h_prev.len(),
                self.cfg.hidden
            )));
        }
        Ok(self.cell.step(&[x.re, x.im], h_prev).h)
    }

    /// Runs the window from zero initial hidden states. Each sequence may
    /// be zero-padded beyond its true length; the hidden state is gathered
    /// at the true final index, so padding never changes the result.
    pub fn forward_views(&self, seqs: &[SeqView<'_, T>]) -> Result<ForwardPass<T>, ForecastError> {
        if seqs.len() != self.cfg.window {
            return Err(ForecastError::WrongWindowCount {
                expected: self.cfg.window,
                got: seqs.len(),
            });
        }
        for view in seqs {
            debug_assert!(view.true_len >= 1 && view.true_len <= view.coeffs.len());
        }
        let h0 = vec![T::zero(); self.cfg.hidden];
        let mut caches = Vec::with_capacity(seqs.len());
        let mut gather = Vec::with_capacity(seqs.len());
        let mut concat = Vec::with_capacity(seqs.len() * self.cfg.hidden);
        for view in seqs {
            let mut seq_caches = Vec::with_capacity(view.coeffs.len());
            let mut h = h0.clone();
            for c in view.coeffs {
                let cache = self.cell.step(&[c.re, c.im], &h);
                h = cache.h.clone();
                seq_caches.push(cache);
            }
            concat.extend_from_slice(&seq_caches[view.true_len - 1].h);
            gather.push(view.true_len);
            caches.push(seq_caches);
        }

        let mut head_out = self.head_w.matvec(&concat);
        add_assign(&mut head_out, &self.head_b);
        // DC and Nyquist bins of the forecast spectrum are real.
        let s = self.cfg.horizon;
        head_out[1] = T::zero();
        head_out[s + 1] = T::zero();

        let half: Vec<Complex<T>> = (0..=s / 2)
            .map(|f| Complex::new(head_out[2 * f], head_out[2 * f + 1]))
            .collect();
        let predictions = inverse_real(&half, s);

        Ok(ForwardPass {
            caches,
            gather,
            concat,
            head_out,
            predictions,
        })
    }

    pub fn forward(&self, sample: &WindowSample<T>) -> Result<ForwardPass<T>, ForecastError> {
        let views: Vec<SeqView<'_, T>> = sample
            .inputs
            .iter()
            .map(|spec| SeqView {
                coeffs: spec.coefficients(),
                true_len: spec.k(),
            })
            .collect();
        self.forward_views(&views)
    }

    /// Convenience wrapper returning only the time-domain predictions.
    pub fn predict(&self, inputs: &[TruncatedSpectrum<T>]) -> Result<Vec<T>, ForecastError> {
        let views: Vec<SeqView<'_, T>> = inputs
            .iter()
            .map(|spec| SeqView {
                coeffs: spec.coefficients(),
                true_len: spec.k(),
            })
            .collect();
        Ok(self.forward_views(&views)?.predictions)
    }

    /// Mean-squared-error loss against `target` and exact reverse-mode
    /// gradients for every parameter tensor.
    pub fn backward(
        &self,
        fwd: &ForwardPass<T>,
        target: &[T],
    ) -> Result<(T, CGruGradients<T>), ForecastError> {
        let s = self.cfg.horizon;
        if target.len() != s {
            return Err(ForecastError::TargetLength {
                expected: s,
                got: target.len(),
            });
        }
        let s_t = T::from_usize(s).unwrap();
        let mut loss = T::zero();
        let dpred: Vec<Complex<T>> = fwd
            .predictions
            .iter()
            .zip(target)
            .map(|(&p, &t)| {
                let diff = p - t;
                loss += diff * diff / s_t;
                Complex::new(T::of(2.0) * diff / s_t, T::zero())
            })
            .collect();

        // Gradient through the inverse transform: the head outputs are the
        // half-spectrum bins, so d(loss)/d(bin) is the forward transform of
        // d(loss)/d(prediction) scaled by multiplicity/s.
        let dspec = fft::fft_forward(&dpred);
        let mut dhead = vec![T::zero(); self.cfg.head_out()];
        for f in 0..=s / 2 {
            let m = if f == 0 || f == s / 2 { T::one() } else { T::of(2.0) };
            dhead[2 * f] = m / s_t * dspec[f].re;
            dhead[2 * f + 1] = m / s_t * dspec[f].im;
        }
        // Bins forced real in the forward pass carry no gradient.
        dhead[1] = T::zero();
        dhead[s + 1] = T::zero();

        let mut grads = CGruGradients::zeros(&self.cfg);
        add_assign(&mut grads.head_b, &dhead);
        grads.head_w.add_outer(&dhead, &fwd.concat);
        let dconcat = self.head_w.matvec_t(&dhead);

        let h = self.cfg.hidden;
        for (j, seq_caches) in fwd.caches.iter().enumerate() {
            let mut dh = dconcat[j * h..(j + 1) * h].to_vec();
            for cache in seq_caches[..fwd.gather[j]].iter().rev() {
                dh = self.cell.backward_step(cache, &dh, &mut grads.cell);
            }
        }
        Ok((loss, grads))
    }
}

impl SpectrumForecaster for CGruModel<f64> {
    fn window_batches(&self) -> usize {
        self.cfg.window
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn forecast(&self, window: &[TruncatedSpectrum<f64>]) -> Vec<f64> {
        self.predict(window)
            .expect("window incompatible with attached model")
    }
}

/// One input coefficient sequence, possibly zero-padded past `true_len`.
#[derive(Debug, Clone, Copy)]
pub struct SeqView<'a, T: Real> {
    pub coeffs: &'a [Complex<T>],
    pub true_len: usize,
}

/// Cached activations of a full forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<T: Real = f64> {
    caches: Vec<Vec<StepCache<T>>>,
    gather: Vec<usize>,
    concat: Vec<T>,
    head_out: Vec<T>,
    pub predictions: Vec<T>,
}

impl<T: Real> ForwardPass<T> {
    /// The head's raw spectral output, `s + 2` interleaved reals.
    pub fn head_out(&self) -> &[T] {
        &self.head_out
    }

    /// Concatenated per-batch final hidden states.
    pub fn concat(&self) -> &[T] {
        &self.concat
    }
}

/// Parameter gradients, tensor-for-tensor with [`CGruModel`].
#[derive(Debug, Clone)]
pub struct CGruGradients<T: Real = f64> {
    pub(crate) cell: CellGradients<T>,
    pub(crate) head_w: Matrix<T>,
    pub(crate) head_b: Vec<T>,
}

impl<T: Real> CGruGradients<T> {
    pub fn zeros(cfg: &CGruConfig) -> Self {
        Self {
            cell: CellGradients::zeros(cfg.hidden, 2),
            head_w: Matrix::zeros(cfg.head_out(), cfg.window * cfg.hidden),
            head_b: vec![T::zero(); cfg.head_out()],
        }
    }

    pub fn tensors(&self) -> Vec<(&'static str, &[T])> {
        let mut out = self.cell.tensors();
        out.push(("head_w", self.head_w.data()));
        out.push(("head_b", &self.head_b));
        out
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        let mut out = self.cell.tensors_mut();
        out.push(("head_w", self.head_w.data_mut()));
        out.push(("head_b", &mut self.head_b));
        out
    }

    pub fn accumulate(&mut self, other: &Self) {
        for ((_, dst), (_, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            add_assign(dst, src);
        }
    }

    pub fn scale_all(&mut self, by: T) {
        for (_, t) in self.tensors_mut() {
            scale(t, by);
        }
    }
}
