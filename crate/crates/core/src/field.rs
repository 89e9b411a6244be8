//! Real grid fields on the surface torus and on the flattened strip.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;

/// Real field on the horizontal grid, row-major with index `i*ny + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl SurfaceField {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        SurfaceField {
            nx: grid.nx,
            ny: grid.ny,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &SpectralGrid, c: f64) -> Self {
        SurfaceField {
            nx: grid.nx,
            ny: grid.ny,
            data: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: &SpectralGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.ny {
                data.push(f(x, grid.y(j)));
            }
        }
        SurfaceField {
            nx: grid.nx,
            ny: grid.ny,
            data,
        }
    }

    pub fn from_vec(grid: &SpectralGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                data.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(SurfaceField {
            nx: grid.nx,
            ny: grid.ny,
            data,
        })
    }

    pub fn check(&self, grid: &SpectralGrid) -> Result<()> {
        if self.nx != grid.nx || self.ny != grid.ny || self.data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field {}x{} on grid {}x{}",
                self.nx, self.ny, grid.nx, grid.ny
            )));
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &SurfaceField) -> Result<()> {
        if self.nx != other.nx || self.ny != other.ny {
            return Err(Error::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.nx, self.ny, other.nx, other.ny
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ny + j]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SurfaceField {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &SurfaceField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.data.len(), other.data.len());
        SurfaceField {
            nx: self.nx,
            ny: self.ny,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &SurfaceField) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Pointwise values at the mirrored grid point `x -> -x`.
    pub fn reflect_x(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.nx {
            let ir = (self.nx - i) % self.nx;
            data[ir * self.ny..(ir + 1) * self.ny].copy_from_slice(&self.data[i * self.ny..(i + 1) * self.ny]);
        }
        SurfaceField {
            nx: self.nx,
            ny: self.ny,
            data,
        }
    }
}

impl Add for &SurfaceField {
    type Output = SurfaceField;
    fn add(self, rhs: &SurfaceField) -> SurfaceField {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &SurfaceField {
    type Output = SurfaceField;
    fn sub(self, rhs: &SurfaceField) -> SurfaceField {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &SurfaceField {
    type Output = SurfaceField;
    fn mul(self, rhs: &SurfaceField) -> SurfaceField {
        self.zip(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &SurfaceField {
    type Output = SurfaceField;
    fn mul(self, s: f64) -> SurfaceField {
        self.map(|a| a * s)
    }
}

impl Neg for &SurfaceField {
    type Output = SurfaceField;
    fn neg(self) -> SurfaceField {
        self.map(|a| -a)
    }
}

/// Real field on the strip, stored level-major: `data[l*nx*ny + i*ny + j]`
/// with level 0 at the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct StripField {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub data: Vec<f64>,
}

impl StripField {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        StripField {
            nx: grid.nx,
            ny: grid.ny,
            nz: grid.nz,
            data: vec![0.0; grid.len() * grid.nz],
        }
    }

    pub fn from_fn(grid: &SpectralGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len() * grid.nz);
        for &z in &grid.cheb.z {
            for i in 0..grid.nx {
                let x = grid.x(i);
                for j in 0..grid.ny {
                    data.push(f(x, grid.y(j), z));
                }
            }
        }
        StripField {
            nx: grid.nx,
            ny: grid.ny,
            nz: grid.nz,
            data,
        }
    }

    pub fn check(&self, grid: &SpectralGrid) -> Result<()> {
        if self.nx != grid.nx || self.ny != grid.ny || self.nz != grid.nz {
            return Err(Error::GridMismatch(format!(
                "strip field {}x{}x{} on grid {}x{}x{}",
                self.nx, self.ny, self.nz, grid.nx, grid.ny, grid.nz
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn level_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn level(&self, l: usize) -> &[f64] {
        let n = self.level_len();
        &self.data[l * n..(l + 1) * n]
    }

    pub fn level_mut(&mut self, l: usize) -> &mut [f64] {
        let n = self.level_len();
        &mut self.data[l * n..(l + 1) * n]
    }

    pub fn surface(&self, l: usize) -> SurfaceField {
        SurfaceField {
            nx: self.nx,
            ny: self.ny,
            data: self.level(l).to_vec(),
        }
    }

    /// `d/dz` along every vertical column.
    pub fn dz(&self, grid: &SpectralGrid) -> StripField {
        let n = self.level_len();
        let nz = self.nz;
        let d = &grid.cheb.d1;
        let mut out = vec![0.0; self.data.len()];
        for l in 0..nz {
            let dst = &mut out[l * n..(l + 1) * n];
            for m in 0..nz {
                let c = d[l * nz + m];
                if c != 0.0 {
                    let src = &self.data[m * n..(m + 1) * n];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += c * s;
                    }
                }
            }
        }
        StripField {
            nx: self.nx,
            ny: self.ny,
            nz,
            data: out,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
