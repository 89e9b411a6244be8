//! Fourier multipliers, scaled derivatives and Sobolev norms.
//!
//! Multiplier closures receive the unscaled wavenumber pair `(kx, ky)`; the
//! transverse factor `gamma` is applied by the symbol itself.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SurfaceField;
use crate::grid::SpectralGrid;
use crate::params::ScaleParams;

pub type Spectrum = Vec<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn forward(grid: &SpectralGrid, f: &SurfaceField) -> Spectrum {
    let mut s: Spectrum = f.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft.forward(&mut s);
    s
}

/// Spectra of two real fields from a single transform.
pub fn forward_pair(grid: &SpectralGrid, a: &[f64], b: &[f64]) -> (Spectrum, Spectrum) {
    let mut z: Spectrum = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    grid.fft.forward(&mut z);
    split_pair(grid, &z)
}

pub(crate) fn split_pair(grid: &SpectralGrid, z: &[Complex64]) -> (Spectrum, Spectrum) {
    let n = z.len();
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let zm = z[grid.neg(k)].conj();
        a[k] = (z[k] + zm) * 0.5;
        b[k] = (z[k] - zm) * Complex64::new(0.0, -0.5);
    }
    (a, b)
}

/// Real part of the inverse transform.
pub fn inverse_real(grid: &SpectralGrid, mut s: Spectrum) -> SurfaceField {
    grid.fft.inverse(&mut s);
    SurfaceField {
        nx: grid.nx,
        ny: grid.ny,
        data: s.iter().map(|c| c.re).collect(),
    }
}

/// Inverse of two Hermitian spectra from a single transform.
pub fn inverse_pair(grid: &SpectralGrid, a: &[Complex64], b: &[Complex64]) -> (SurfaceField, SurfaceField) {
    let mut z: Spectrum = a.iter().zip(b).map(|(x, y)| x + I * y).collect();
    grid.fft.inverse(&mut z);
    let re = z.iter().map(|c| c.re).collect();
    let im = z.iter().map(|c| c.im).collect();
    (
        SurfaceField {
            nx: grid.nx,
            ny: grid.ny,
            data: re,
        },
        SurfaceField {
            nx: grid.nx,
            ny: grid.ny,
            data: im,
        },
    )
}

/// Multiply the spectrum by `m(kx, ky)`, zeroing Nyquist modes.
///
/// Fails with [`Error::ComplexOutput`] when the result is not real, which
/// happens when `m(-k) != conj(m(k))`.
pub fn apply_multiplier(
    grid: &SpectralGrid,
    f: &SurfaceField,
    m: impl Fn(f64, f64) -> Complex64,
) -> Result<SurfaceField> {
    f.check(grid)?;
    let mut s = forward(grid, f);
    for (n, v) in s.iter_mut().enumerate() {
        if grid.is_nyquist(n) {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= m(grid.kx[n / grid.ny], grid.ky[n % grid.ny]);
        }
    }
    grid.fft.inverse(&mut s);
    let re_max = s.iter().fold(0.0f64, |a, c| a.max(c.re.abs()));
    let im_max = s.iter().fold(0.0f64, |a, c| a.max(c.im.abs()));
    let scale = re_max.max(f.max_abs());
    if im_max > 1e-10 * scale {
        return Err(Error::ComplexOutput(im_max));
    }
    Ok(SurfaceField {
        nx: grid.nx,
        ny: grid.ny,
        data: s.iter().map(|c| c.re).collect(),
    })
}

/// Real even multiplier, unchecked; Nyquist modes zeroed.
pub fn apply_real(grid: &SpectralGrid, f: &SurfaceField, m: impl Fn(f64, f64) -> f64) -> SurfaceField {
    let mut s = forward(grid, f);
    scale_spectrum(grid, &mut s, m);
    inverse_real(grid, s)
}

pub(crate) fn scale_spectrum(grid: &SpectralGrid, s: &mut [Complex64], m: impl Fn(f64, f64) -> f64) {
    for (n, v) in s.iter_mut().enumerate() {
        if grid.is_nyquist(n) {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= m(grid.kx[n / grid.ny], grid.ky[n % grid.ny]);
        }
    }
}

/// `(d/dx f, gamma d/dy f)`.
pub fn scaled_gradient(grid: &SpectralGrid, f: &SurfaceField, params: &ScaleParams) -> (SurfaceField, SurfaceField) {
    gradient_scaled_by(grid, f, 1.0, params.gamma)
}

/// `(sx d/dx f, sy d/dy f)`.
pub fn gradient_scaled_by(grid: &SpectralGrid, f: &SurfaceField, sx: f64, sy: f64) -> (SurfaceField, SurfaceField) {
    let s = forward(grid, f);
    gradient_from_spectrum(grid, &s, sx, sy)
}

pub(crate) fn gradient_from_spectrum(
    grid: &SpectralGrid,
    s: &[Complex64],
    sx: f64,
    sy: f64,
) -> (SurfaceField, SurfaceField) {
    let ny = grid.ny;
    let mut z: Spectrum = s
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let kx = sx * grid.kxd[n / ny];
            let ky = sy * grid.kyd[n % ny];
            // i kx v + i (i ky v)
            Complex64::new(-kx * v.im - ky * v.re, kx * v.re - ky * v.im)
        })
        .collect();
    grid.fft.inverse(&mut z);
    (
        SurfaceField {
            nx: grid.nx,
            ny,
            data: z.iter().map(|c| c.re).collect(),
        },
        SurfaceField {
            nx: grid.nx,
            ny,
            data: z.iter().map(|c| c.im).collect(),
        },
    )
}

/// `d/dx u + gamma d/dy v`.
pub fn scaled_divergence(grid: &SpectralGrid, u: &SurfaceField, v: &SurfaceField, params: &ScaleParams) -> SurfaceField {
    divergence_scaled_by(grid, u, v, 1.0, params.gamma)
}

pub fn divergence_scaled_by(grid: &SpectralGrid, u: &SurfaceField, v: &SurfaceField, sx: f64, sy: f64) -> SurfaceField {
    let (a, b) = forward_pair(grid, &u.data, &v.data);
    let ny = grid.ny;
    let s: Spectrum = (0..a.len())
        .map(|n| I * (a[n] * (sx * grid.kxd[n / ny]) + b[n] * (sy * grid.kyd[n % ny])))
        .collect();
    inverse_real(grid, s)
}

/// Scaled Laplacian `d_xx + gamma^2 d_yy`.
pub fn scaled_laplacian(grid: &SpectralGrid, f: &SurfaceField, params: &ScaleParams) -> SurfaceField {
    let g2 = params.gamma * params.gamma;
    apply_real(grid, f, |kx, ky| -(kx * kx + g2 * ky * ky))
}

/// 2/3-rule truncation.
pub fn dealias(grid: &SpectralGrid, f: &SurfaceField) -> SurfaceField {
    let mut s = forward(grid, f);
    for (n, v) in s.iter_mut().enumerate() {
        if !grid.in_band(n) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    inverse_real(grid, s)
}

/// `|xi^gamma|`.
pub fn abs_scaled(params: &ScaleParams) -> impl Fn(f64, f64) -> f64 {
    let g2 = params.gamma * params.gamma;
    move |kx, ky| (kx * kx + g2 * ky * ky).sqrt()
}

/// Symbol of the Poisson weight `|D| / (1 + sqrt(mu)|D|)^(1/2)`.
pub fn poisson_symbol(params: &ScaleParams) -> impl Fn(f64, f64) -> f64 {
    let g2 = params.gamma * params.gamma;
    let sm = params.mu.sqrt();
    move |kx, ky| {
        let k = (kx * kx + g2 * ky * ky).sqrt();
        k / (1.0 + sm * k).sqrt()
    }
}

/// Flat Dirichlet–Neumann symbol `sqrt(mu)|xi| tanh(sqrt(mu)|xi|)`.
pub fn flat_dn_symbol(params: &ScaleParams) -> impl Fn(f64, f64) -> f64 {
    let g2 = params.gamma * params.gamma;
    let sm = params.mu.sqrt();
    move |kx, ky| {
        let k = sm * (kx * kx + g2 * ky * ky).sqrt();
        k * k.tanh()
    }
}

pub fn inner(grid: &SpectralGrid, f: &SurfaceField, g: &SurfaceField) -> f64 {
    f.data.iter().zip(&g.data).map(|(a, b)| a * b).sum::<f64>() * grid.cell_area()
}

pub fn l2_norm(grid: &SpectralGrid, f: &SurfaceField) -> f64 {
    inner(grid, f, f).sqrt()
}

/// Which weight a Sobolev norm uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormFlavor {
    /// `(1 + |xi|^2)^(s/2)`.
    H,
    /// `(1 + |xi^gamma|^2)^(s/2)`.
    HEps,
    /// `|P f|` in the scaled space.
    Poisson,
}

/// Sobolev norm by Parseval on the discrete spectrum, all modes included.
pub fn sobolev_norm(grid: &SpectralGrid, f: &SurfaceField, s: f64, flavor: NormFlavor, params: &ScaleParams) -> f64 {
    let spec = forward(grid, f);
    spectral_norm(grid, &spec, |kx, ky| weight(flavor, params, s, kx, ky))
}

fn weight(flavor: NormFlavor, params: &ScaleParams, s: f64, kx: f64, ky: f64) -> f64 {
    let g2 = params.gamma * params.gamma;
    match flavor {
        NormFlavor::H => (1.0 + kx * kx + ky * ky).powf(s / 2.0),
        NormFlavor::HEps => (1.0 + kx * kx + g2 * ky * ky).powf(s / 2.0),
        NormFlavor::Poisson => {
            let k2 = kx * kx + g2 * ky * ky;
            let p = k2.sqrt() / (1.0 + params.mu.sqrt() * k2.sqrt()).sqrt();
            p * (1.0 + k2).powf(s / 2.0)
        }
    }
}

pub(crate) fn spectral_norm(grid: &SpectralGrid, spec: &[Complex64], w: impl Fn(f64, f64) -> f64) -> f64 {
    let ny = grid.ny;
    let mut acc = 0.0;
    for (n, v) in spec.iter().enumerate() {
        let m = w(grid.kx[n / ny], grid.ky[n % ny]);
        acc += m * m * v.norm_sqr();
    }
    let nn = grid.len() as f64;
    (acc * grid.lx * grid.ly / (nn * nn)).sqrt()
}

/// State seminorm combining the elevation and potential contributions:
/// `sqrt(mu)|z|_{H_e^{2s+1}} + |z|_{H_e^{2s}} + sqrt(mu)|grad z|_{H^s} + |z|_{H^s}
///  + |P psi|_{H_e^{2s}} + |P psi|_{H^s}`.
pub fn state_seminorm(
    grid: &SpectralGrid,
    zeta: &SurfaceField,
    psi: &SurfaceField,
    s: f64,
    params: &ScaleParams,
) -> f64 {
    let sm = params.mu.sqrt();
    let zs = forward(grid, zeta);
    let ps = forward(grid, psi);
    let g2 = params.gamma * params.gamma;
    let he = |t: f64| move |kx: f64, ky: f64| (1.0 + kx * kx + g2 * ky * ky).powf(t / 2.0);
    let h = |t: f64| move |kx: f64, ky: f64| (1.0 + kx * kx + ky * ky).powf(t / 2.0);
    let grad = move |kx: f64, ky: f64| (kx * kx + g2 * ky * ky).sqrt() * (1.0 + kx * kx + ky * ky).powf(s / 2.0);
    let pe = move |t: f64, scaled: bool| {
        move |kx: f64, ky: f64| {
            let k = (kx * kx + g2 * ky * ky).sqrt();
            let base = if scaled { 1.0 + k * k } else { 1.0 + kx * kx + ky * ky };
            k / (1.0 + sm * k).sqrt() * base.powf(t / 2.0)
        }
    };
    sm * spectral_norm(grid, &zs, he(2.0 * s + 1.0))
        + spectral_norm(grid, &zs, he(2.0 * s))
        + sm * spectral_norm(grid, &zs, grad)
        + spectral_norm(grid, &zs, h(s))
        + spectral_norm(grid, &ps, pe(2.0 * s, true))
        + spectral_norm(grid, &ps, pe(s, false))
}
