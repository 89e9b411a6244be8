//! Periodic horizontal grid with Chebyshev vertical collocation.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cheb::Chebyshev;
use crate::error::{Error, Result};
use crate::fourier::Fft2;

/// Serializable grid description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

/// Horizontal torus `[0, lx) x [0, ly)` sampled on `nx x ny` points (row
/// index x, column index y) and `nz` Chebyshev–Lobatto levels on `[-1, 0]`.
#[derive(Debug, Clone)]
pub struct SpectralGrid {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Wavenumbers `2 pi j / L` with `j` in `-N/2+1 ..= N/2`, in FFT order.
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    /// Same as `kx`, `ky` with the Nyquist entry set to zero.
    pub kxd: Vec<f64>,
    pub kyd: Vec<f64>,
    pub(crate) fft: Arc<Fft2>,
    pub cheb: Arc<Chebyshev>,
}

fn wavenumbers(n: usize, l: f64) -> (Vec<f64>, Vec<f64>) {
    let k: Vec<f64> = (0..n)
        .map(|j| {
            let s = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            2.0 * PI * s / l
        })
        .collect();
    let mut kd = k.clone();
    kd[n / 2] = 0.0;
    (k, kd)
}

impl SpectralGrid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidParams(format!("{name} = {n} must be even and >= 8")));
            }
        }
        if nz < 4 {
            return Err(Error::InvalidParams(format!("nz = {nz} must be >= 4")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidParams("periods must be positive".into()));
        }
        let (kx, kxd) = wavenumbers(nx, lx);
        let (ky, kyd) = wavenumbers(ny, ly);
        Ok(SpectralGrid {
            lx,
            ly,
            nx,
            ny,
            nz,
            kx,
            ky,
            kxd,
            kyd,
            fft: Arc::new(Fft2::new(nx, ny)),
            cheb: Arc::new(Chebyshev::new(nz)),
        })
    }

    pub fn from_spec(s: &GridSpec) -> Result<Self> {
        Self::new(s.lx, s.ly, s.nx, s.ny, s.nz)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            lx: self.lx,
            ly: self.ly,
            nx: self.nx,
            ny: self.ny,
            nz: self.nz,
        }
    }

    /// Same horizontal/vertical resolution with a different level count.
    pub fn with_nz(&self, nz: usize) -> Result<Self> {
        Self::new(self.lx, self.ly, self.nx, self.ny, nz)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lx * i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.ly * j as f64 / self.ny as f64
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.lx * self.ly / self.len() as f64
    }

    /// Flat index of the mode `-k` for flat index `n`.
    #[inline]
    pub fn neg(&self, n: usize) -> usize {
        let (i, j) = (n / self.ny, n % self.ny);
        ((self.nx - i) % self.nx) * self.ny + (self.ny - j) % self.ny
    }

    #[inline]
    pub fn is_nyquist(&self, n: usize) -> bool {
        n / self.ny == self.nx / 2 || n % self.ny == self.ny / 2
    }

    /// 2/3-rule retained band.
    #[inline]
    pub fn in_band(&self, n: usize) -> bool {
        let (i, j) = (n / self.ny, n % self.ny);
        let si = i.min(self.nx - i);
        let sj = j.min(self.ny - j);
        3 * si < self.nx && 3 * sj < self.ny
    }

    /// Signed mode indices of flat index `n`.
    pub fn mode(&self, n: usize) -> (i64, i64) {
        let (i, j) = (n / self.ny, n % self.ny);
        let s = |j: usize, n: usize| if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
        (s(i, self.nx), s(j, self.ny))
    }

    pub fn same_shape(&self, other: &SpectralGrid) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }
}
