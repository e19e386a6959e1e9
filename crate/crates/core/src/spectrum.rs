//! FFT helpers for periodic grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Forward/inverse transforms with the wavenumber table of a periodic grid.
pub struct Fourier {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pub n: usize,
    /// Angular wavenumber of each bin.
    pub xi: Vec<f64>,
}

impl Fourier {
    pub fn new(grid: &Grid1D) -> Result<Self> {
        if !grid.periodic {
            return Err(Error::Unsupported("Fourier transforms need a periodic grid".into()));
        }
        let mut planner = FftPlanner::new();
        let n = grid.n;
        let base = 2.0 * std::f64::consts::PI / grid.length();
        let xi = (0..n).map(|j| if j <= n / 2 { j as f64 } else { j as f64 - n as f64 } * base).collect();
        Ok(Fourier { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), n, xi })
    }

    pub fn forward(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.fwd.process(&mut buf);
        buf
    }

    pub fn forward_real(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform including the `1/n` normalisation.
    pub fn inverse(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
        buf
    }

    /// Spectral derivative of a complex field.
    pub fn derivative(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut h = self.forward(f);
        for (v, k) in h.iter_mut().zip(&self.xi) {
            *v *= Complex64::new(0.0, *k);
        }
        if self.n % 2 == 0 {
            h[self.n / 2] = Complex64::new(0.0, 0.0);
        }
        self.inverse(&h)
    }
}
