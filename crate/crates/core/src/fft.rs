//! Multi-dimensional complex FFTs over row-major arrays.
//!
//! The forward transform is normalized by `1/N`, so the zero coefficient is
//! the arithmetic mean of the samples. The inverse is unnormalized.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("shape", &self.shape).finish()
    }
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            shape: shape.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Forward transform of every axis, scaled by `1/N`.
    pub fn forward(&self, data: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.transform_axis(data, axis, false);
        }
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.transform_axis(data, axis, true);
        }
    }

    /// Unnormalized transform along a single axis.
    pub fn transform_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool) {
        assert_eq!(data.len(), self.len(), "fft buffer length");
        let n = self.shape[axis];
        if n == 1 {
            return;
        }
        let plan = if inverse {
            &self.inverse[axis]
        } else {
            &self.forward[axis]
        };
        let inner: usize = self.shape[axis + 1..].iter().product();
        if inner == 1 {
            plan.process(data);
            return;
        }
        let block = n * inner;
        let mut scratch = vec![Complex64::default(); block];
        for chunk in data.chunks_mut(block) {
            // [n][inner] -> [inner][n]
            for i in 0..n {
                for j in 0..inner {
                    scratch[j * n + i] = chunk[i * inner + j];
                }
            }
            plan.process(&mut scratch);
            for i in 0..n {
                for j in 0..inner {
                    chunk[i * inner + j] = scratch[j * n + i];
                }
            }
        }
    }
}

/// Signed wavenumber index of position `i` in an FFT of length `n`.
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn brute_force(data: &[Complex64], shape: &[usize]) -> Vec<Complex64> {
        let total: usize = shape.iter().product();
        let mut out = vec![Complex64::default(); total];
        let unravel = |mut idx: usize| {
            let mut v = vec![0usize; shape.len()];
            for a in (0..shape.len()).rev() {
                v[a] = idx % shape[a];
                idx /= shape[a];
            }
            v
        };
        for (o, slot) in out.iter_mut().enumerate() {
            let ko = unravel(o);
            let mut acc = Complex64::default();
            for (s, val) in data.iter().enumerate() {
                let xs = unravel(s);
                let phase: f64 = (0..shape.len())
                    .map(|a| -2.0 * PI * (ko[a] * xs[a]) as f64 / shape[a] as f64)
                    .sum();
                acc += val * Complex64::from_polar(1.0, phase);
            }
            *slot = acc / total as f64;
        }
        out
    }

    #[test]
    fn matches_brute_force_dft_4d() {
        let shape = [4, 4, 4, 4];
        let data: Vec<Complex64> = (0..256)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        let plan = FftNd::new(&shape);
        plan.forward(&mut fast);
        let slow = brute_force(&data, &shape);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-13);
        }
        plan.inverse(&mut fast);
        for (a, b) in fast.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn signed_indices() {
        assert_eq!(signed_index(0, 8), 0);
        assert_eq!(signed_index(4, 8), 4);
        assert_eq!(signed_index(5, 8), -3);
    }
}
