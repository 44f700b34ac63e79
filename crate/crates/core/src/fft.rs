//! Mixed-radix Cooley-Tukey transform over [`Complex<T>`].
//!
//! Sizes are split on their smallest prime factor, giving O(n log n) for the
//! smooth batch lengths this crate uses (72, 128, 288, 512, ...). Prime
//! lengths fall back to the quadratic sum, so every size is handled
//! correctly even if slowly.

use num_complex::Complex;

use crate::scalar::Real;

/// Forward transform: `X[f] = sum_j x[j] * exp(-2*pi*i*j*f/n)`, unnormalised.
pub fn fft_forward<T: Real>(input: &[Complex<T>]) -> Vec<Complex<T>> {
    transform(input, T::of(-1.0))
}

/// Inverse transform including the 1/n factor, so
/// `fft_inverse(fft_forward(x)) == x` up to rounding.
pub fn fft_inverse<T: Real>(input: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = input.len();
    let scale = T::one() / T::from_usize(n).unwrap();
    let mut out = transform(input, T::of(1.0));
    for v in &mut out {
        *v = v.scale(scale);
    }
    out
}

fn transform<T: Real>(input: &[Complex<T>], sign: T) -> Vec<Complex<T>> {
    let n = input.len();
    assert!(n > 0, "empty transform");
    if n == 1 {
        return input.to_vec();
    }
    let p = smallest_prime_factor(n);
    if p == n {
        return naive(input, sign);
    }
    let m = n / p;

    let subs: Vec<Vec<Complex<T>>> = (0..p)
        .map(|r| {
            let decimated: Vec<Complex<T>> = (0..m).map(|j| input[j * p + r]).collect();
            transform(&decimated, sign)
        })
        .collect();

    // X[k] = sum_r w(n, r*k) * subs[r][k mod m]
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let q = k % m;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (r, sub) in subs.iter().enumerate() {
            acc = acc + sub[q] * unit_root(sign, r * k, n);
        }
        out.push(acc);
    }
    out
}

fn naive<T: Real>(input: &[Complex<T>], sign: T) -> Vec<Complex<T>> {
    let n = input.len();
    (0..n)
        .map(|f| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (j, &x) in input.iter().enumerate() {
                acc = acc + x * unit_root(sign, j * f, n);
            }
            acc
        })
        .collect()
}

/// `exp(sign * 2*pi*i * index / n)` with the index reduced mod n first,
/// keeping the trig argument small.
fn unit_root<T: Real>(sign: T, index: usize, n: usize) -> Complex<T> {
    let reduced = (index % n) as f64;
    let angle = sign * T::of(2.0 * std::f64::consts::PI * reduced / n as f64);
    Complex::from_polar(T::one(), angle)
}

fn smallest_prime_factor(n: usize) -> usize {
    if n % 2 == 0 {
        return 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n % f == 0 {
            return f;
        }
        f += 2;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_forward(x: &[Complex<f64>]) -> Vec<Complex<f64>> {
        naive(x, -1.0)
    }

    fn seeded_signal(n: usize, seed: u64) -> Vec<Complex<f64>> {
        // Small linear-congruential source; good enough to exercise the
        // butterflies without pulling rand into this module's tests.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let re = ((state >> 11) as f64) / ((1u64 << 53) as f64);
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let im = ((state >> 11) as f64) / ((1u64 << 53) as f64);
                Complex::new(re, im)
            })
            .collect()
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut x = vec![Complex::new(0.0, 0.0); 8];
        x[0] = Complex::new(1.0, 0.0);
        for c in fft_forward(&x) {
            assert!((c - Complex::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_dft_up_to_64() {
        for n in 2..=64usize {
            let x = seeded_signal(n, n as u64);
            let fast = fft_forward(&x);
            let slow = naive_forward(&x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn roundtrip_identity() {
        for &n in &[2usize, 6, 72, 128, 288, 510, 512] {
            let x = seeded_signal(n, 17);
            let back = fft_inverse(&fft_forward(&x));
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).norm() < 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn prime_sizes_roundtrip() {
        for &n in &[3usize, 7, 13, 31] {
            let x = seeded_signal(n, 3);
            let back = fft_inverse(&fft_forward(&x));
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn works_in_f32() {
        let x: Vec<Complex<f32>> = seeded_signal(16, 5)
            .into_iter()
            .map(|c| Complex::new(c.re as f32, c.im as f32))
            .collect();
        let back = fft_inverse(&fft_forward(&x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-4);
        }
    }
}
