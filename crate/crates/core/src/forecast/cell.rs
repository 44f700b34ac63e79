//! The gated recurrent cell shared by the frequency-domain model (complex
//! coefficients fed as two reals per step) and the time-domain benchmark
//! (one real per step). Holds the gate parameters, the forward step and
//! its exact reverse-mode counterpart.

use rand::Rng;

use super::linalg::{add_assign, sigmoid, Matrix};
use super::UpdateRule;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GruCell<T: Real> {
    pub hidden: usize,
    pub input_dim: usize,
    pub rule: UpdateRule,
    pub w_z: Matrix<T>,
    pub w_r: Matrix<T>,
    pub w_h: Matrix<T>,
    pub v_z: Matrix<T>,
    pub v_r: Matrix<T>,
    pub v_h: Matrix<T>,
    pub b_z: Vec<T>,
    pub b_r: Vec<T>,
    pub b_h: Vec<T>,
}

#[derive(Debug, Clone)]
pub(crate) struct StepCache<T: Real> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub z: Vec<T>,
    pub r: Vec<T>,
    pub cand: Vec<T>,
    pub h: Vec<T>,
}

impl<T: Real> GruCell<T> {
    pub fn zeros(hidden: usize, input_dim: usize, rule: UpdateRule) -> Self {
        Self {
            hidden,
            input_dim,
            rule,
            w_z: Matrix::zeros(hidden, input_dim),
            w_r: Matrix::zeros(hidden, input_dim),
            w_h: Matrix::zeros(hidden, input_dim),
            v_z: Matrix::zeros(hidden, hidden),
            v_r: Matrix::zeros(hidden, hidden),
            v_h: Matrix::zeros(hidden, hidden),
            b_z: vec![T::zero(); hidden],
            b_r: vec![T::zero(); hidden],
            b_h: vec![T::zero(); hidden],
        }
    }

    /// Uniform fill in +-sqrt(1/fan_in); biases stay zero. Draw order is
    /// fixed so a seed fully determines the parameters.
    pub fn seed_from(&mut self, rng: &mut impl Rng) {
        let input_bound = (1.0 / self.input_dim as f64).sqrt();
        let hidden_bound = (1.0 / self.hidden as f64).sqrt();
        for m in [&mut self.w_z, &mut self.w_r, &mut self.w_h] {
            for v in m.data_mut() {
                *v = T::of(rng.gen_range(-input_bound..input_bound));
            }
        }
        for m in [&mut self.v_z, &mut self.v_r, &mut self.v_h] {
            for v in m.data_mut() {
                *v = T::of(rng.gen_range(-hidden_bound..hidden_bound));
            }
        }
    }

    pub fn tensors(&self) -> Vec<(&'static str, &[T])> {
        vec![
            ("w_z", self.w_z.data()),
            ("w_r", self.w_r.data()),
            ("w_h", self.w_h.data()),
            ("v_z", self.v_z.data()),
            ("v_r", self.v_r.data()),
            ("v_h", self.v_h.data()),
            ("b_z", &self.b_z),
            ("b_r", &self.b_r),
            ("b_h", &self.b_h),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        vec![
            ("w_z", self.w_z.data_mut()),
            ("w_r", self.w_r.data_mut()),
            ("w_h", self.w_h.data_mut()),
            ("v_z", self.v_z.data_mut()),
            ("v_r", self.v_r.data_mut()),
            ("v_h", self.v_h.data_mut()),
            ("b_z", &mut self.b_z),
            ("b_r", &mut self.b_r),
            ("b_h", &mut self.b_h),
        ]
    }

    /// z = sig(Wz x + Vz h + bz), r = sig(Wr x + Vr h + br),
    /// cand = tanh(Wh x + Vh (r.h) + bh), then either the plain convex
    /// combination or its sigmoid per the update rule.
    pub fn step(&self, x: &[T], h_prev: &[T]) -> StepCache<T> {
        debug_assert_eq!(x.len(), self.input_dim);
        debug_assert_eq!(h_prev.len(), self.hidden);

        let mut az = self.w_z.matvec(x);
        add_assign(&mut az, &self.v_z.matvec(h_prev));
        add_assign(&mut az, &self.b_z);
        let z: Vec<T> = az.into_iter().map(sigmoid).collect();

        let mut ar = self.w_r.matvec(x);
        add_assign(&mut ar, &self.v_r.matvec(h_prev));
        add_assign(&mut ar, &self.b_r);
        let r: Vec<T> = ar.into_iter().map(sigmoid).collect();

        let gated: Vec<T> = r.iter().zip(h_prev).map(|(&ri, &hi)| ri * hi).collect();
        let mut ah = self.w_h.matvec(x);
        add_assign(&mut ah, &self.v_h.matvec(&gated));
        add_assign(&mut ah, &self.b_h);
        let cand: Vec<T> = ah.into_iter().map(|v| v.tanh()).collect();

        let combined = z
            .iter()
            .zip(h_prev)
            .zip(&cand)
            .map(|((&zi, &hi), &ci)| zi * hi + (T::one() - zi) * ci);
        let h: Vec<T> = match self.rule {
            UpdateRule::StandardGru => combined.collect(),
            UpdateRule::SigmoidWrapped => combined.map(sigmoid).collect(),
        };

        StepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            z,
            r,
            cand,
            h,
        }
    }

    /// Propagates `dh` through one cached step, accumulating parameter
    /// gradients and returning the gradient w.r.t. the previous hidden
    /// state.
    pub fn backward_step(
        &self,
        cache: &StepCache<T>,
        dh: &[T],
        grads: &mut CellGradients<T>,
    ) -> Vec<T> {
        let hsize = self.hidden;
        let one = T::one();

        let dcomb: Vec<T> = match self.rule {
            UpdateRule::StandardGru => dh.to_vec(),
            UpdateRule::SigmoidWrapped => dh
                .iter()
                .zip(&cache.h)
                .map(|(&d, &hv)| d * hv * (one - hv))
                .collect(),
        };

        let mut dz = vec![T::zero(); hsize];
        let mut dcand = vec![T::zero(); hsize];
        let mut dh_prev = vec![T::zero(); hsize];
        for i in 0..hsize {
            dz[i] = dcomb[i] * (cache.h_prev[i] - cache.cand[i]);
            dcand[i] = dcomb[i] * (one - cache.z[i]);
            dh_prev[i] = dcomb[i] * cache.z[i];
        }

        // Candidate branch.
        let dah: Vec<T> = dcand
            .iter()
            .zip(&cache.cand)
            .map(|(&d, &c)| d * (one - c * c))
            .collect();
        grads.w_h.add_outer(&dah, &cache.x);
        let gated: Vec<T> = cache
            .r
            .iter()
            .zip(&cache.h_prev)
            .map(|(&ri, &hi)| ri * hi)
            .collect();
        grads.v_h.add_outer(&dah, &gated);
        add_assign(&mut grads.b_h, &dah);
        let dgated = self.v_h.matvec_t(&dah);
        let mut dr = vec![T::zero(); hsize];
        for i in 0..hsize {
            dr[i] = dgated[i] * cache.h_prev[i];
            dh_prev[i] += dgated[i] * cache.r[i];
        }

        // Reset gate.
        let dar: Vec<T> = dr
            .iter()
            .zip(&cache.r)
            .map(|(&d, &r)| d * r * (one - r))
            .collect();
        grads.w_r.add_outer(&dar, &cache.x);
        grads.v_r.add_outer(&dar, &cache.h_prev);
        add_assign(&mut grads.b_r, &dar);
        add_assign(&mut dh_prev, &self.v_r.matvec_t(&dar));

        // Update gate.
        let daz: Vec<T> = dz
            .iter()
            .zip(&cache.z)
            .map(|(&d, &z)| d * z * (one - z))
            .collect();
        grads.w_z.add_outer(&daz, &cache.x);
        grads.v_z.add_outer(&daz, &cache.h_prev);
        add_assign(&mut grads.b_z, &daz);
        add_assign(&mut dh_prev, &self.v_z.matvec_t(&daz));

        dh_prev
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CellGradients<T: Real> {
    pub w_z: Matrix<T>,
    pub w_r: Matrix<T>,
    pub w_h: Matrix<T>,
    pub v_z: Matrix<T>,
    pub v_r: Matrix<T>,
    pub v_h: Matrix<T>,
    pub b_z: Vec<T>,
    pub b_r: Vec<T>,
    pub b_h: Vec<T>,
}

impl<T: Real> CellGradients<T> {
    pub fn zeros(hidden: usize, input_dim: usize) -> Self {
        Self {
            w_z: Matrix::zeros(hidden, input_dim),
            w_r: Matrix::zeros(hidden, input_dim),
            w_h: Matrix::zeros(hidden, input_dim),
            v_z: Matrix::zeros(hidden, hidden),
            v_r: Matrix::zeros(hidden, hidden),
            v_h: Matrix::zeros(hidden, hidden),
            b_z: vec![T::zero(); hidden],
            b_r: vec![T::zero(); hidden],
            b_h: vec![T::zero(); hidden],
        }
    }

    pub fn tensors(&self) -> Vec<(&'static str, &[T])> {
        vec![
            ("w_z", self.w_z.data()),
            ("w_r", self.w_r.data()),
            ("w_h", self.w_h.data()),
            ("v_z", self.v_z.data()),
            ("v_r", self.v_r.data()),
            ("v_h", self.v_h.data()),
            ("b_z", &self.b_z),
            ("b_r", &self.b_r),
            ("b_h", &self.b_h),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        vec![
            ("w_z", self.w_z.data_mut()),
            ("w_r", self.w_r.data_mut()),
            ("w_h", self.w_h.data_mut()),
            ("v_z", self.v_z.data_mut()),
            ("v_r", self.v_r.data_mut()),
            ("v_h", self.v_h.data_mut()),
            ("b_z", &mut self.b_z),
            ("b_r", &mut self.b_r),
            ("b_h", &mut self.b_h),
        ]
    }
}
