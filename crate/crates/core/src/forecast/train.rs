//! Mini-batch RMSprop training with length-bucketed batching for the
//! variable-length spectral windows.

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cgru::{CGruGradients, CGruModel, SeqView};
use super::time_gru::{TimeGruGradients, TimeGruModel};
use super::{ForecastError, TimeWindowSample, WindowSample};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// RMSprop accumulator decay (rho).
    pub decay: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            decay: 0.9,
            epsilon: 1e-8,
            batch_size: 16,
            epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(ForecastError::BadConfig("learning rate must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(ForecastError::BadConfig("decay must lie in [0, 1)".into()));
        }
        if self.epsilon <= 0.0 {
            return Err(ForecastError::BadConfig("epsilon must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(ForecastError::BadConfig("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Elementwise RMSprop: `v <- rho v + (1 - rho) g^2`,
/// `theta <- theta - lr g / (sqrt(v) + eps)`.
#[derive(Debug, Clone)]
pub struct RmsProp<T: Real> {
    lr: T,
    decay: T,
    epsilon: T,
    v: Vec<Vec<T>>,
}

impl<T: Real> RmsProp<T> {
    pub fn new(cfg: &TrainConfig, tensor_sizes: &[usize]) -> Self {
        Self {
            lr: T::of(cfg.learning_rate),
            decay: T::of(cfg.decay),
            epsilon: T::of(cfg.epsilon),
            v: tensor_sizes.iter().map(|&len| vec![T::zero(); len]).collect(),
        }
    }

    /// Applies one update. `params` and `grads` must both follow the fixed
    /// tensor order the state was built from.
    pub fn step(&mut self, params: Vec<(&'static str, &mut [T])>, grads: &[(&'static str, &[T])]) {
        debug_assert_eq!(params.len(), self.v.len());
        let one = T::one();
        for ((state, (_, theta)), (_, g)) in self.v.iter_mut().zip(params).zip(grads) {
            for i in 0..theta.len() {
                state[i] = self.decay * state[i] + (one - self.decay) * g[i] * g[i];
                theta[i] -= self.lr * g[i] / (state[i].sqrt() + self.epsilon);
            }
        }
    }
}

/// Mean squared error; the training objective.
pub fn mse<T: Real>(predictions: &[T], target: &[T]) -> Result<T, ForecastError> {
    if predictions.len() != target.len() {
        return Err(ForecastError::TargetLength {
            expected: predictions.len(),
            got: target.len(),
        });
    }
    let sum: T = predictions
        .iter()
        .zip(target)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum();
    Ok(sum / T::from_usize(predictions.len()).unwrap())
}

/// Reported prediction error: RMSE averaged over machines and horizon
/// steps, `sqrt(sum |pred - target|^2 / (s * p))`.
pub fn prediction_rmse<T: Real>(per_machine: &[(Vec<T>, Vec<T>)]) -> Result<T, ForecastError> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for (pred, target) in per_machine {
        if pred.len() != target.len() {
            return Err(ForecastError::TargetLength {
                expected: pred.len(),
                got: target.len(),
            });
        }
        for (&p, &t) in pred.iter().zip(target) {
            sum += (p - t) * (p - t);
        }
        count += pred.len();
    }
    if count == 0 {
        return Err(ForecastError::EmptyDataset);
    }
    Ok((sum / T::from_usize(count).unwrap()).sqrt())
}

/// One sample inside a mini-batch: every coefficient sequence zero-padded
/// to the bucket maximum, with its true length kept for final-state
/// gathering.
#[derive(Debug, Clone)]
pub struct PaddedSample<T: Real = f64> {
    pub inputs: Vec<Vec<Complex<T>>>,
    pub true_lens: Vec<usize>,
    pub target: Vec<T>,
}

impl<T: Real> PaddedSample<T> {
    pub fn views(&self) -> Vec<SeqView<'_, T>> {
        self.inputs
            .iter()
            .zip(&self.true_lens)
            .map(|(coeffs, &true_len)| SeqView {
                coeffs,
                true_len,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MiniBatch<T: Real = f64> {
    pub entries: Vec<PaddedSample<T>>,
    /// Padded sequence length shared by every entry.
    pub padded_len: usize,
}

/// Groups samples of similar total coefficient count into mini-batches,
/// zero-padding within each batch, and shuffles the batch order with the
/// seed. Sorting is stable on the original index, so the grouping itself
/// is deterministic.
pub fn bucketize<T: Real>(
    samples: &[WindowSample<T>],
    batch_size: usize,
    seed: u64,
) -> Vec<MiniBatch<T>> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by_key(|&i| (samples[i].total_terms(), i));

    let mut batches: Vec<MiniBatch<T>> = order
        .chunks(batch_size.max(1))
        .map(|chunk| {
            let padded_len = chunk
                .iter()
                .flat_map(|&i| samples[i].inputs.iter().map(|s| s.k()))
                .max()
                .unwrap_or(0);
            let entries = chunk
                .iter()
                .map(|&i| {
                    let sample = &samples[i];
                    let inputs: Vec<Vec<Complex<T>>> = sample
                        .inputs
                        .iter()
                        .map(|spec| {
                            let mut coeffs = spec.coefficients().to_vec();
                            coeffs.resize(padded_len, Complex::new(T::zero(), T::zero()));
                            coeffs
                        })
                        .collect();
                    PaddedSample {
                        inputs,
                        true_lens: sample.inputs.iter().map(|s| s.k()).collect(),
                        target: sample.target.clone(),
                    }
                })
                .collect();
            MiniBatch {
                entries,
                padded_len,
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    batches.shuffle(&mut rng);
    batches
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map(|e| e.train_loss).unwrap_or(f64::NAN)
    }

    /// CSV with the loss-curve schema `epoch,train_loss,val_rmse`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_rmse\n");
        for e in &self.epochs {
            let val = e
                .val_rmse
                .map(|v| format!("{v:.16e}"))
                .unwrap_or_default();
            out.push_str(&format!("{},{:.16e},{}\n", e.epoch, e.train_loss, val));
        }
        out
    }
}

/// Trains the frequency-domain model in place. Deterministic per seed;
/// fails fast if the loss goes non-finite.
pub fn train_cgru(
    model: &mut CGruModel<f64>,
    train: &[WindowSample<f64>],
    val: Option<&[WindowSample<f64>]>,
    cfg: &TrainConfig,
) -> Result<TrainReport, ForecastError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(ForecastError::EmptyDataset);
    }
    let sizes: Vec<usize> = model.tensors().iter().map(|(_, t)| t.len()).collect();
    let mut opt = RmsProp::<f64>::new(cfg, &sizes);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let buckets = bucketize(train, cfg.batch_size, cfg.seed.wrapping_add(epoch as u64));
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for bucket in &buckets {
            let mut acc = CGruGradients::<f64>::zeros(model.config());
            let mut batch_loss = 0.0;
            for entry in &bucket.entries {
                let fwd = model.forward_views(&entry.views())?;
                let (loss, grads) = model.backward(&fwd, &entry.target)?;
                batch_loss += loss;
                acc.accumulate(&grads);
            }
            let scale = 1.0 / bucket.entries.len() as f64;
            acc.scale_all(scale);
            loss_sum += batch_loss;
            seen += bucket.entries.len();
            opt.step(model.tensors_mut(), &acc.tensors());
        }
        let train_loss = loss_sum / seen as f64;
        if !train_loss.is_finite() {
            return Err(ForecastError::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        let val_rmse = match val {
            Some(samples) => Some(eval_cgru_rmse(model, samples)?),
            None => None,
        };
        epochs.push(EpochStats {
            epoch,
            train_loss,
            val_rmse,
        });
    }
    Ok(TrainReport { epochs })
}

/// Trains the time-domain benchmark; same loop shape as [`train_cgru`]
/// without bucketing (all windows share one length).
pub fn train_time_gru(
    model: &mut TimeGruModel<f64>,
    train: &[TimeWindowSample<f64>],
    val: Option<&[TimeWindowSample<f64>]>,
    cfg: &TrainConfig,
) -> Result<TrainReport, ForecastError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(ForecastError::EmptyDataset);
    }
    let sizes: Vec<usize> = model.tensors().iter().map(|(_, t)| t.len()).collect();
    let mut opt = RmsProp::<f64>::new(cfg, &sizes);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut acc = TimeGruGradients::<f64>::zeros(model.hidden(), model.horizon());
            let mut batch_loss = 0.0;
            for &i in chunk {
                let fwd = model.forward(&train[i].window)?;
                let (loss, grads) = model.backward(&fwd, &train[i].target)?;
                batch_loss += loss;
                acc.accumulate(&grads);
            }
            acc.scale_all(1.0 / chunk.len() as f64);
            loss_sum += batch_loss;
            opt.step(model.tensors_mut(), &acc.tensors());
        }
        let train_loss = loss_sum / train.len() as f64;
        if !train_loss.is_finite() {
            return Err(ForecastError::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        let val_rmse = match val {
            Some(samples) => Some(eval_time_rmse(model, samples)?),
            None => None,
        };
        epochs.push(EpochStats {
            epoch,
            train_loss,
            val_rmse,
        });
    }
    Ok(TrainReport { epochs })
}

/// Aggregated prediction RMSE of the frequency model over a dataset.
pub fn eval_cgru_rmse(
    model: &CGruModel<f64>,
    samples: &[WindowSample<f64>],
) -> Result<f64, ForecastError> {
    let mut pairs = Vec::with_capacity(samples.len());
    for sample in samples {
        let fwd = model.forward(sample)?;
        pairs.push((fwd.predictions, sample.target.clone()));
    }
    prediction_rmse(&pairs)
}

/// Aggregated prediction RMSE of the benchmark over a dataset.
pub fn eval_time_rmse(
    model: &TimeGruModel<f64>,
    samples: &[TimeWindowSample<f64>],
) -> Result<f64, ForecastError> {
    let mut pairs = Vec::with_capacity(samples.len());
    for sample in samples {
        let fwd = model.forward(&sample.window)?;
        pairs.push((fwd.predictions, sample.target.clone()));
    }
    prediction_rmse(&pairs)
}
