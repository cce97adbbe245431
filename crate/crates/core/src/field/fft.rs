//! Thin two-dimensional wrapper over `rustfft`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse FFT pair on a row-major `nt × ns` buffer.
///
/// Rows run along `s`, columns along `t`. Neither direction is normalized;
/// callers divide by `nt * ns` after a forward transform.
#[derive(Clone)]
pub struct Fft2 {
    nt: usize,
    ns: usize,
    fwd_t: Arc<dyn Fft<f64>>,
    inv_t: Arc<dyn Fft<f64>>,
    fwd_s: Arc<dyn Fft<f64>>,
    inv_s: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("nt", &self.nt)
            .field("ns", &self.ns)
            .finish()
    }
}

impl Fft2 {
    pub fn new(nt: usize, ns: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nt,
            ns,
            fwd_t: planner.plan_fft_forward(nt),
            inv_t: planner.plan_fft_inverse(nt),
            fwd_s: planner.plan_fft_forward(ns),
            inv_s: planner.plan_fft_inverse(ns),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nt, self.ns)
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.fwd_t, &self.fwd_s);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inv_t, &self.inv_s);
    }

    fn run(&self, buf: &mut [Complex64], along_t: &Arc<dyn Fft<f64>>, along_s: &Arc<dyn Fft<f64>>) {
        assert_eq!(buf.len(), self.nt * self.ns);
        along_s.process(buf);
        let mut column = vec![Complex64::default(); self.nt];
        for n in 0..self.ns {
            for (m, c) in column.iter_mut().enumerate() {
                *c = buf[m * self.ns + n];
            }
            along_t.process(&mut column);
            for (m, c) in column.iter().enumerate() {
                buf[m * self.ns + n] = *c;
            }
        }
    }
}

/// Storage slot of a signed wavenumber on an `n`-point periodic grid.
#[inline]
pub fn wrap(index: i64, n: usize) -> usize {
    index.rem_euclid(n as i64) as usize
}
