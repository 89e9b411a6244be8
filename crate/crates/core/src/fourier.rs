//! Two-dimensional complex FFT on a row-major `nx` by `ny` array.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft2 {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.nx, self.ny)
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            fx: planner.plan_fft_forward(nx),
            ix: planner.plan_fft_inverse(nx),
            fy: planner.plan_fft_forward(ny),
            iy: planner.plan_fft_inverse(ny),
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fy, &self.fx);
    }

    /// Inverse transform in place, normalized by `1/(nx ny)`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.iy, &self.ix);
        let s = 1.0 / (self.nx * self.ny) as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(data.len(), nx * ny);
        rows.process(data);
        let mut t = vec![Complex64::new(0.0, 0.0); nx * ny];
        transpose(data, &mut t, nx, ny);
        cols.process(&mut t);
        transpose(&t, data, ny, nx);
    }
}

/// `dst[j*r + i] = src[i*c + j]` for an `r` by `c` source.
fn transpose(src: &[Complex64], dst: &mut [Complex64], r: usize, c: usize) {
    const B: usize = 16;
    for i0 in (0..r).step_by(B) {
        for j0 in (0..c).step_by(B) {
            for i in i0..(i0 + B).min(r) {
                for j in j0..(j0 + B).min(c) {
                    dst[j * r + i] = src[i * c + j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_single_mode() {
        let (nx, ny) = (8, 12);
        let fft = Fft2::new(nx, ny);
        let mut d: Vec<Complex64> = (0..nx * ny)
            .map(|n| {
                let (i, j) = (n / ny, n % ny);
                let ph = 2.0 * std::f64::consts::PI * (i as f64 / nx as f64 + 3.0 * j as f64 / ny as f64);
                Complex64::new(ph.cos(), ph.sin())
            })
            .collect();
        let orig = d.clone();
        fft.forward(&mut d);
        for (n, v) in d.iter().enumerate() {
            let expect = if n == ny + 3 { (nx * ny) as f64 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-10 && v.im.abs() < 1e-10, "{n} {v}");
        }
        fft.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
