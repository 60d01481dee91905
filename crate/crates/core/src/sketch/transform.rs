//! Orthonormal real trigonometric transforms used by the SRTT.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    /// Discrete Hartley transform, `H_kj = cas(2 pi jk / n) / sqrt(n)`; symmetric and involutive.
    Dht,
    /// Orthonormal DCT-II.
    Dct2,
}

/// Planned forward and inverse FFTs of one length.
pub(crate) struct Plan {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Plan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// In-place orthonormal transform `x <- F x`.
    pub fn forward(&self, t: Transform, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        match t {
            Transform::Dht => self.dht(x, buf),
            Transform::Dct2 => self.dct2(x, buf),
        }
    }

    /// In-place `x <- F' x`.
    pub fn adjoint(&self, t: Transform, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        match t {
            Transform::Dht => self.dht(x, buf),
            Transform::Dct2 => self.dct3(x, buf),
        }
    }

    fn dht(&self, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        let n = self.n;
        buf.clear();
        buf.extend(x.iter().map(|&v| Complex::new(v, 0.0)));
        self.fwd.process(buf);
        let s = 1.0 / (n as f64).sqrt();
        for (xi, c) in x.iter_mut().zip(buf.iter()) {
            *xi = (c.re - c.im) * s;
        }
    }

    fn dct2(&self, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        // Makhoul: even samples ascending, odd samples descending
        let n = self.n;
        buf.clear();
        buf.resize(n, Complex::new(0.0, 0.0));
        for m in 0..n.div_ceil(2) {
            buf[m].re = x[2 * m];
        }
        for m in 0..n / 2 {
            buf[n - 1 - m].re = x[2 * m + 1];
        }
        self.fwd.process(buf);
        let s0 = (1.0 / n as f64).sqrt();
        let s = (2.0 / n as f64).sqrt();
        for k in 0..n {
            let w = Complex::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64));
            let v = (buf[k] * w).re;
            x[k] = v * if k == 0 { s0 } else { s };
        }
    }

    fn dct3(&self, x: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        // inverse of `dct2`
        let n = self.n;
        let s0 = (1.0 / n as f64).sqrt();
        let s = (2.0 / n as f64).sqrt();
        let raw: Vec<f64> = (0..n).map(|k| x[k] / if k == 0 { s0 } else { s }).collect();
        buf.clear();
        buf.resize(n, Complex::new(0.0, 0.0));
        for k in 0..n {
            let xr = raw[k];
            let xi = if k == 0 { 0.0 } else { raw[n - k] };
            let w = Complex::from_polar(1.0, PI * k as f64 / (2.0 * n as f64));
            buf[k] = w * Complex::new(xr, -xi);
        }
        self.inv.process(buf);
        let inv_n = 1.0 / n as f64;
        for m in 0..n.div_ceil(2) {
            x[2 * m] = buf[m].re * inv_n;
        }
        for m in 0..n / 2 {
            x[2 * m + 1] = buf[n - 1 - m].re * inv_n;
        }
    }
}
