//! Flattening of the fluid domain onto the strip `torus x [-1, 0]`.
//!
//! The map `(x, z) -> (x, z + sigma(x, z))` with
//! `sigma = -eps z b + eps (z + 1) zeta` sends the strip onto the fluid
//! domain. In the strip the Laplace problem becomes
//! `div_s (I + Q) grad_s u = 0` with `grad_s = (a d_x, c d_y, d_z)`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{StripField, SurfaceField};
use crate::grid::SpectralGrid;
use crate::params::ScaleParams;
use crate::spectral::gradient_scaled_by;

#[derive(Debug, Clone)]
pub struct StripTransform {
    pub params: ScaleParams,
    pub zeta: SurfaceField,
    pub b: SurfaceField,
    pub sigma: StripField,
    /// `d_z sigma = eps (zeta - b)`; independent of `z`.
    pub dz_sigma: SurfaceField,
    /// Unscaled `(d_x sigma, d_y sigma)`.
    pub grad_sigma: [StripField; 2],
    /// `Q11 = Q22 = d_z sigma`.
    pub q11: SurfaceField,
    pub q13: StripField,
    pub q23: StripField,
    pub q33: StripField,
    pub h_min: f64,
}

impl StripTransform {
    /// Entry `(i, j)` of `Q` at level `l` and horizontal index `p`.
    pub fn q(&self, i: usize, j: usize, l: usize, p: usize) -> f64 {
        let n = self.q11.data.len();
        match (i.min(j), i.max(j)) {
            (0, 0) | (1, 1) => self.q11.data[p],
            (0, 1) => 0.0,
            (0, 2) => self.q13.data[l * n + p],
            (1, 2) => self.q23.data[l * n + p],
            (2, 2) => self.q33.data[l * n + p],
            _ => panic!("Q index out of range"),
        }
    }

    pub fn is_flat(&self) -> bool {
        self.q11.max_abs() == 0.0 && self.q13.max_abs() == 0.0 && self.q23.max_abs() == 0.0 && self.q33.max_abs() == 0.0
    }
}

/// Assemble `sigma`, its derivatives and `Q`.
pub fn build_transform(
    zeta: &SurfaceField,
    b: &SurfaceField,
    params: &ScaleParams,
    grid: &SpectralGrid,
) -> Result<StripTransform> {
    zeta.check(grid)?;
    b.check(grid)?;
    if !zeta.is_finite() {
        return Err(Error::InvalidParams("non-finite surface elevation".into()));
    }
    let e = params.epsilon;
    let depth = zeta.zip(b, |z, bb| 1.0 + e * (z - bb));
    let h_min = depth.min();
    if h_min <= 0.0 {
        return Err(Error::AdmissibilityViolation { h_min, floor: 0.0 });
    }
    let (zx, zy) = gradient_scaled_by(grid, zeta, 1.0, 1.0);
    let (bx, by) = gradient_scaled_by(grid, b, 1.0, 1.0);
    let dz_sigma = depth.map(|d| d - 1.0);
    let (a, c) = (params.a(), params.c());
    let n = grid.len();
    let nz = grid.nz;
    let mut sigma = StripField::zeros(grid);
    let mut sx = StripField::zeros(grid);
    let mut sy = StripField::zeros(grid);
    let mut q13 = StripField::zeros(grid);
    let mut q23 = StripField::zeros(grid);
    let mut q33 = StripField::zeros(grid);
    for l in 0..nz {
        let z = grid.cheb.z[l];
        for p in 0..n {
            let k = l * n + p;
            sigma.data[k] = e * (-z * b.data[p] + (z + 1.0) * zeta.data[p]);
            let gx = e * (-z * bx.data[p] + (z + 1.0) * zx.data[p]);
            let gy = e * (-z * by.data[p] + (z + 1.0) * zy.data[p]);
            sx.data[k] = gx;
            sy.data[k] = gy;
            q13.data[k] = -a * gx;
            q23.data[k] = -c * gy;
            let sz = dz_sigma.data[p];
            q33.data[k] = (-sz + a * a * gx * gx + c * c * gy * gy) / (1.0 + sz);
        }
    }
    Ok(StripTransform {
        params: *params,
        zeta: zeta.clone(),
        b: b.clone(),
        sigma,
        q11: dz_sigma.clone(),
        dz_sigma,
        grad_sigma: [sx, sy],
        q13,
        q23,
        q33,
        h_min,
    })
}

/// `kappa = sqrt(mu) |k^gamma|` for the wavenumber pair `(kx, ky)`.
pub fn flat_rate(kx: f64, ky: f64, params: &ScaleParams) -> f64 {
    params.mu.sqrt() * (kx * kx + params.gamma * params.gamma * ky * ky).sqrt()
}

/// `(cosh(kappa (z+1)) / cosh(kappa), kappa sinh(kappa (z+1)) / cosh(kappa))`,
/// written with decaying exponentials so large `kappa` does not overflow.
pub fn flat_profile(kappa: f64, z: f64) -> (f64, f64) {
    if kappa == 0.0 {
        return (1.0, 0.0);
    }
    let d = 1.0 + (-2.0 * kappa).exp();
    let e0 = (kappa * z).exp();
    let e1 = (-kappa * (z + 2.0)).exp();
    ((e0 + e1) / d, kappa * (e0 - e1) / d)
}

/// Flat-strip harmonic extension of one Fourier mode with a homogeneous
/// Neumann bottom, sampled at the given depths.
pub fn solve_flat_mode(kx: f64, ky: f64, dirichlet: Complex64, params: &ScaleParams, z: &[f64]) -> Vec<Complex64> {
    let kappa = flat_rate(kx, ky, params);
    z.iter().map(|&z| dirichlet * flat_profile(kappa, z).0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(2.0 * PI, 2.0 * PI, 16, 8, 9).unwrap()
    }

    #[test]
    fn flat_strip() {
        let g = grid();
        let p = ScaleParams::standard(0.1, 0.5).unwrap();
        let t = build_transform(&SurfaceField::zeros(&g), &SurfaceField::zeros(&g), &p, &g).unwrap();
        assert!(t.is_flat());
        assert_eq!(t.h_min, 1.0);
        assert_eq!(t.sigma.max_abs(), 0.0);
    }

    #[test]
    fn constant_elevation() {
        let g = grid();
        let p = ScaleParams::standard(0.1, 0.5).unwrap();
        let t = build_transform(&SurfaceField::constant(&g, 0.5), &SurfaceField::zeros(&g), &p, &g).unwrap();
        assert!(t.dz_sigma.data.iter().all(|v| (v - 0.05).abs() < 1e-15));
        assert!(t.q13.max_abs() < 1e-15 && t.q23.max_abs() < 1e-15);
        assert!((t.h_min - 1.05).abs() < 1e-15);
    }

    #[test]
    fn q13_pointwise() {
        let g = grid();
        let p = ScaleParams::standard(0.1, 0.5).unwrap();
        let zeta = SurfaceField::from_fn(&g, |x, _| 0.1 * x.sin());
        let t = build_transform(&zeta, &SurfaceField::zeros(&g), &p, &g).unwrap();
        let n = g.len();
        for (l, pt) in [(0, 3), (2, 17), (4, 60), (7, 101), (8, 127)] {
            let z = g.cheb.z[l];
            let x = g.x(pt / g.ny);
            let want = -(0.1f64).sqrt() * 0.1 * (z + 1.0) * 0.1 * x.cos();
            assert!((t.q13.data[l * n + pt] - want).abs() < 1e-15);
            assert!((t.q(2, 0, l, pt) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn touching_bottom_is_rejected() {
        let g = grid();
        let p = ScaleParams::standard(0.5, 0.5).unwrap();
        let zeta = SurfaceField::from_fn(&g, |x, _| -3.0 * x.cos());
        assert!(matches!(
            build_transform(&zeta, &SurfaceField::zeros(&g), &p, &g),
            Err(Error::AdmissibilityViolation { .. })
        ));
    }

    #[test]
    fn flat_mode_profile() {
        let p = ScaleParams::general(1.0, 1.0, 1.0, 1.0).unwrap();
        let z = [0.0, -0.5, -1.0];
        let one = Complex64::new(1.0, 0.0);
        let prof = solve_flat_mode(0.0, 0.0, one, &p, &z);
        assert!(prof.iter().all(|v| (v - one).norm() < 1e-15));
        let prof = solve_flat_mode(1.0, 0.0, one, &p, &z);
        assert!((prof[0].re - 1.0).abs() < 1e-15);
        assert!((prof[2].re - 1.0 / 1f64.cosh()).abs() < 1e-15);
        assert!((prof[2].re - 0.6481).abs() < 1e-4);
        // the profile solves f'' = kappa^2 f
        let k = 1.7;
        let h = 1e-4;
        for zz in [-0.9, -0.5, -0.1] {
            let f = |z: f64| flat_profile(k, z).0;
            let d2 = (f(zz + h) - 2.0 * f(zz) + f(zz - h)) / (h * h);
            assert!((d2 - k * k * f(zz)).abs() < 1e-6);
            let d1 = (f(zz + h) - f(zz - h)) / (2.0 * h);
            assert!((d1 - flat_profile(k, zz).1).abs() < 1e-8);
        }
        let (v, d) = flat_profile(800.0, -0.5);
        assert!(v.is_finite() && d.is_finite());
    }
}
