//! FFT plumbing: cached plans, angular frequency grids, linear correlations.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Forward and inverse plans for one transform length. Cheap to clone and
/// safe to share between worker threads.
#[derive(Clone)]
pub struct Plan<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    len: usize,
}

impl<T: Real> Plan<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Unnormalized forward transform, `X_k = sum_n x_n exp(-2 pi i k n / N)`.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.forward.process(buf);
    }

    /// Unnormalized inverse transform, `x_n = sum_k X_k exp(+2 pi i k n / N)`.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.inverse.process(buf);
    }
}

/// Angular frequency of DFT bin `k` for `n` samples spaced `step` apart.
pub fn bin_frequency<T: Real>(k: usize, n: usize, step: T) -> T {
    let signed = if k <= (n - 1) / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    };
    T::lit(2.0 * std::f64::consts::PI * signed / n as f64) / step
}

/// Linear cross-correlations `c(k) = sum_t a(t) conj(b(t - k))` of equal-length
/// records, evaluated through a zero-padded transform.
pub struct Correlator<T: Real> {
    plan: Plan<T>,
    n: usize,
}

impl<T: Real> Correlator<T> {
    pub fn new(n: usize) -> Self {
        Self {
            plan: Plan::new(2 * n),
            n,
        }
    }

    pub fn record_len(&self) -> usize {
        self.n
    }

    /// Zero-padded spectrum of a record, ready for [`Correlator::correlate`].
    pub fn spectrum(&self, record: impl IntoIterator<Item = Complex<T>>) -> Vec<Complex<T>> {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); 2 * self.n];
        for (slot, v) in buf.iter_mut().zip(record) {
            *slot = v;
        }
        self.plan.forward(&mut buf);
        buf
    }

    /// Correlation of two padded spectra for lags `-max_lag..=max_lag`,
    /// returned with lag `-max_lag` first.
    pub fn correlate(&self, a: &[Complex<T>], b: &[Complex<T>], max_lag: usize) -> Vec<Complex<T>> {
        self.correlate_sum(&[(a, b)], max_lag)
    }

    /// Sum of the correlations of several spectrum pairs, with one inverse
    /// transform.
    pub fn correlate_sum(
        &self,
        pairs: &[(&[Complex<T>], &[Complex<T>])],
        max_lag: usize,
    ) -> Vec<Complex<T>> {
        assert!(max_lag < self.n, "lag beyond record");
        let len = 2 * self.n;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
        for (a, b) in pairs {
            for ((slot, x), y) in buf.iter_mut().zip(a.iter()).zip(b.iter()) {
                *slot = *slot + x * y.conj();
            }
        }
        self.plan.inverse(&mut buf);
        let scale = T::one() / T::count(len);
        (0..=2 * max_lag)
            .map(|i| {
                let lag = i as isize - max_lag as isize;
                buf[lag.rem_euclid(len as isize) as usize] * scale
            })
            .collect()
    }
}
