//! Time-domain benchmark: the same gated recurrent cell fed one raw
//! observation per step over the concatenated window, with a linear head
//! mapping the final hidden state straight to `s` predictions. Its hidden
//! size is chosen to match the frequency model's parameter count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cell::{CellGradients, GruCell, StepCache};
use super::linalg::{add_assign, scale, Matrix};
use super::{ForecastError, UpdateRule};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGruModel<T: Real = f64> {
    hidden: usize,
    horizon: usize,
    pub(crate) cell: GruCell<T>,
    pub(crate) head_w: Matrix<T>,
    pub(crate) head_b: Vec<T>,
}

/// Total parameters of a time-domain model with the given hidden size.
pub fn time_gru_param_count(hidden: usize, horizon: usize) -> usize {
    3 * (hidden + hidden * hidden + hidden) + horizon * (hidden + 1)
}

/// Hidden size whose parameter count comes closest to `target_params`.
/// Used to keep the benchmark the same size as the frequency model.
pub fn matched_hidden_size(target_params: usize, horizon: usize) -> usize {
    let mut best = 1;
    let mut best_gap = usize::MAX;
    for hidden in 1..=4096 {
        let count = time_gru_param_count(hidden, horizon);
        let gap = count.abs_diff(target_params);
        if gap < best_gap {
            best = hidden;
            best_gap = gap;
        }
        if count > target_params && gap > best_gap {
            break;
        }
    }
    best
}

impl<T: Real> TimeGruModel<T> {
    pub fn zeros(hidden: usize, horizon: usize) -> Result<Self, ForecastError> {
        if hidden == 0 {
            return Err(ForecastError::BadConfig("hidden size must be at least 1".into()));
        }
        if horizon == 0 {
            return Err(ForecastError::BadConfig("horizon must be at least 1".into()));
        }
        Ok(Self {
            hidden,
            horizon,
            cell: GruCell::zeros(hidden, 1, UpdateRule::StandardGru),
            head_w: Matrix::zeros(horizon, hidden),
            head_b: vec![T::zero(); horizon],
        })
    }

    pub fn seeded(hidden: usize, horizon: usize, seed: u64) -> Result<Self, ForecastError> {
        let mut model = Self::zeros(hidden, horizon)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        model.cell.seed_from(&mut rng);
        let bound = (1.0 / hidden as f64).sqrt();
        for v in model.head_w.data_mut() {
            *v = T::of(rng.gen_range(-bound..bound));
        }
        Ok(model)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

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

    /// Runs the raw window from a zero hidden state and maps the final
    /// hidden state to `s` predictions.
    pub fn forward(&self, window: &[T]) -> Result<TimeForwardPass<T>, ForecastError> {
        if window.is_empty() {
            return Err(ForecastError::BadConfig("empty input window".into()));
        }
        let mut caches = Vec::with_capacity(window.len());
        let mut h = vec![T::zero(); self.hidden];
        for &x in window {
            let cache = self.cell.step(&[x], &h);
            h = cache.h.clone();
            caches.push(cache);
        }
        let mut predictions = self.head_w.matvec(&h);
        add_assign(&mut predictions, &self.head_b);
        Ok(TimeForwardPass {
            caches,
            h_final: h,
            predictions,
        })
    }

    pub fn backward(
        &self,
        fwd: &TimeForwardPass<T>,
        target: &[T],
    ) -> Result<(T, TimeGruGradients<T>), ForecastError> {
        if target.len() != self.horizon {
            return Err(ForecastError::TargetLength {
                expected: self.horizon,
                got: target.len(),
            });
        }
        let s_t = T::from_usize(self.horizon).unwrap();
        let mut loss = T::zero();
        let dpred: Vec<T> = fwd
            .predictions
            .iter()
            .zip(target)
            .map(|(&p, &t)| {
                let diff = p - t;
                loss += diff * diff / s_t;
                T::of(2.0) * diff / s_t
            })
            .collect();

        let mut grads = TimeGruGradients::zeros(self.hidden, self.horizon);
        add_assign(&mut grads.head_b, &dpred);
        grads.head_w.add_outer(&dpred, &fwd.h_final);
        let mut dh = self.head_w.matvec_t(&dpred);
        for cache in fwd.caches.iter().rev() {
            dh = self.cell.backward_step(cache, &dh, &mut grads.cell);
        }
        Ok((loss, grads))
    }
}

#[derive(Debug, Clone)]
pub struct TimeForwardPass<T: Real = f64> {
    caches: Vec<StepCache<T>>,
    h_final: Vec<T>,
    pub predictions: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct TimeGruGradients<T: Real = f64> {
    pub(crate) cell: CellGradients<T>,
    pub(crate) head_w: Matrix<T>,
    pub(crate) head_b: Vec<T>,
}

impl<T: Real> TimeGruGradients<T> {
    pub fn zeros(hidden: usize, horizon: usize) -> Self {
        Self {
            cell: CellGradients::zeros(hidden, 1),
            head_w: Matrix::zeros(horizon, hidden),
            head_b: vec![T::zero(); horizon],
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

#[cfg(test)]
mod tests {
    use super::*;

    fn random_window(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(0.0..=1.0)).collect()
    }

    #[test]
    fn zero_model_predicts_zero() {
        let model = TimeGruModel::<f64>::zeros(4, 8).unwrap();
        let fwd = model.forward(&random_window(16, 1)).unwrap();
        assert_eq!(fwd.predictions, vec![0.0; 8]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut model = TimeGruModel::<f64>::seeded(3, 8, 7).unwrap();
        let window = random_window(16, 2);
        let target = random_window(8, 3);
        let fwd = model.forward(&window).unwrap();
        let (_, grads) = model.backward(&fwd, &target).unwrap();
        let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|(_, t)| t.to_vec()).collect();

        let loss_of = |m: &TimeGruModel<f64>| {
            let pred = m.forward(&window).unwrap().predictions;
            pred.iter()
                .zip(&target)
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                / 8.0
        };

        let h = 1e-5;
        for (ti, (name, _)) in grads.tensors().iter().enumerate() {
            for i in 0..analytic[ti].len() {
                let orig = model.tensors()[ti].1[i];
                model.tensors_mut()[ti].1[i] = orig + h;
                let lp = loss_of(&model);
                model.tensors_mut()[ti].1[i] = orig - h;
                let lm = loss_of(&model);
                model.tensors_mut()[ti].1[i] = orig;
                let numeric = (lp - lm) / (2.0 * h);
                let a = analytic[ti][i];
                let denom = a.abs().max(numeric.abs());
                if denom > 1e-8 {
                    assert!(
                        ((a - numeric) / denom).abs() <= 1e-4,
                        "{name}[{i}]: analytic {a} vs numeric {numeric}"
                    );
                } else {
                    assert!((a - numeric).abs() < 1e-8, "{name}[{i}]");
                }
            }
        }
    }

    #[test]
    fn matched_hidden_size_tracks_target_within_five_percent() {
        // Typical frequency-model sizes from the experiment grid. Tiny
        // gradient-check models are excluded: integer hidden sizes are too
        // coarse to land within 5% of a ~150-parameter target.
        for (hidden, window, horizon) in [(8usize, 4usize, 72usize), (16, 4, 72), (32, 4, 72), (24, 4, 72)] {
            let cfg = super::super::CGruConfig {
                hidden,
                window,
                horizon,
                rule: UpdateRule::StandardGru,
            };
            let target = cfg.param_count();
            let matched = matched_hidden_size(target, horizon);
            let got = time_gru_param_count(matched, horizon);
            let gap = got.abs_diff(target) as f64 / target as f64;
            assert!(gap <= 0.05, "target {target}, got {got} (hidden {matched})");
        }
    }

    #[test]
    fn loss_is_plain_mse() {
        let model = TimeGruModel::<f64>::seeded(3, 4, 9).unwrap();
        let window = random_window(8, 4);
        let fwd = model.forward(&window).unwrap();
        let target: Vec<f64> = fwd.predictions.iter().map(|p| p + 0.1).collect();
        let (loss, _) = model.backward(&fwd, &target).unwrap();
        assert!((loss - 0.01).abs() < 1e-12);
    }
}
