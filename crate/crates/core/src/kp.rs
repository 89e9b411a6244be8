//! Uncoupled KP equations for the counter-propagating profiles and the
//! reconstruction of the surface elevation from them.
//!
//! Each profile lives in its own moving frame `X = x -+ t`. The linear part
//! is diagonal in Fourier space and is integrated exactly; the quadratic
//! term goes through RK4 (integrating-factor RK4).

use std::f64::consts::SQRT_2;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SurfaceField;
use crate::grid::SpectralGrid;
use crate::params::ScaleParams;
use crate::spectral::{self, forward, inverse_real, Spectrum};

/// Coefficient of the quadratic term, `3 sqrt(2) / 4`.
pub const KP_BETA: f64 = 3.0 * SQRT_2 / 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KpOrder {
    Third,
    Fifth,
}

/// `+1` for the right-moving profile, `-1` for the left-moving one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KPState {
    pub zp: SurfaceField,
    pub zm: SurfaceField,
    pub tau: f64,
    /// Size of the last slow step taken, zero before the first.
    pub dtau: f64,
}

/// Third-order dispersion coefficient `1/6 - alpha/2`.
pub fn c3(params: &ScaleParams) -> f64 {
    1.0 / 6.0 - params.alpha / 2.0
}

fn check_zero_x_mean(grid: &SpectralGrid, f: &SurfaceField) -> Result<()> {
    let scale = f.max_abs().max(1.0);
    for j in 0..grid.ny {
        let m = (0..grid.nx).map(|i| f.data[i * grid.ny + j]).sum::<f64>() / grid.nx as f64;
        if m.abs() > 1e-11 * scale {
            return Err(Error::NonzeroXMean(m));
        }
    }
    Ok(())
}

/// Initial profiles `(d_x psi0 +- zeta0) / sqrt 2`.
pub fn split_initial(grid: &SpectralGrid, zeta0: &SurfaceField, psi0: &SurfaceField) -> Result<KPState> {
    zeta0.check(grid)?;
    psi0.check(grid)?;
    check_zero_x_mean(grid, zeta0)?;
    let (px, _) = spectral::gradient_scaled_by(grid, psi0, 1.0, 0.0);
    Ok(KPState {
        zp: px.zip(zeta0, |u, z| (u + z) / SQRT_2),
        zm: px.zip(zeta0, |u, z| (u - z) / SQRT_2),
        tau: 0.0,
        dtau: 0.0,
    })
}

/// Linear symbol `L` with `d_tau z^ = L z^ + N^`.
///
/// At fifth order the transverse term has the same sign on both branches,
/// unlike the third-order pair.
pub fn linear_symbol(kx: f64, ky: f64, branch: Branch, order: KpOrder, params: &ScaleParams) -> Complex64 {
    if kx == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let s = branch.sign();
    let transverse = ky * ky / (2.0 * kx);
    let im = match order {
        KpOrder::Third => s * (c3(params) * kx.powi(3) - transverse),
        KpOrder::Fifth => -transverse - s * (params.theta / 2.0 * kx.powi(3) + kx.powi(5) / 90.0),
    };
    Complex64::new(0.0, im)
}

/// Spectrum of `-beta z z_X` in the skew form
/// `-(beta/3) [P(z z_X) + d_X P(z^2)]`.
fn nonlinear(grid: &SpectralGrid, zs: &Spectrum) -> Spectrum {
    let ny = grid.ny;
    let z = inverse_real(grid, zs.clone());
    let zx_s: Spectrum = zs
        .iter()
        .enumerate()
        .map(|(n, v)| v * Complex64::new(0.0, grid.kxd[n / ny]))
        .collect();
    let zx = inverse_real(grid, zx_s);
    let a = forward(grid, &(&z * &zx));
    let b = forward(grid, &(&z * &z));
    (0..grid.len())
        .map(|n| {
            if !grid.in_band(n) || n / ny == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let d = Complex64::new(0.0, grid.kxd[n / ny]);
            -(a[n] + d * b[n]) * (KP_BETA / 3.0)
        })
        .collect()
}

/// `d_tau z` for one profile.
pub fn kp_rhs(grid: &SpectralGrid, z: &SurfaceField, branch: Branch, order: KpOrder, params: &ScaleParams) -> Result<SurfaceField> {
    z.check(grid)?;
    check_zero_x_mean(grid, z)?;
    let zs = forward(grid, z);
    let nl = nonlinear(grid, &zs);
    let out: Spectrum = (0..grid.len())
        .map(|n| {
            if grid.is_nyquist(n) {
                return Complex64::new(0.0, 0.0);
            }
            let l = linear_symbol(grid.kx[n / grid.ny], grid.ky[n % grid.ny], branch, order, params);
            l * zs[n] + nl[n]
        })
        .collect();
    Ok(inverse_real(grid, out))
}

fn l2(grid: &SpectralGrid, f: &SurfaceField) -> f64 {
    spectral::l2_norm(grid, f)
}

/// Integrating-factor RK4 for one profile over `steps` steps of `h`.
#[allow(clippy::too_many_arguments)]
fn ifrk4(grid: &SpectralGrid, z: &SurfaceField, branch: Branch, order: KpOrder, params: &ScaleParams, h: f64, steps: usize, jump_tol: f64, tau0: f64) -> Result<SurfaceField> {
    let n = grid.len();
    let ny = grid.ny;
    let lin: Vec<Complex64> = (0..n)
        .map(|k| linear_symbol(grid.kx[k / ny], grid.ky[k % ny], branch, order, params))
        .collect();
    let e1: Vec<Complex64> = lin.iter().map(|l| (l * (h / 2.0)).exp()).collect();
    let e2: Vec<Complex64> = e1.iter().map(|e| e * e).collect();
    let mut u = forward(grid, z);
    for (k, v) in u.iter_mut().enumerate() {
        if !grid.in_band(k) || k / ny == 0 {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    let mut norm = l2(grid, &inverse_real(grid, u.clone()));
    for step in 0..steps {
        let k1 = nonlinear(grid, &u);
        let a: Spectrum = (0..n).map(|k| e1[k] * (u[k] + k1[k] * (h / 2.0))).collect();
        let k2 = nonlinear(grid, &a);
        let b: Spectrum = (0..n).map(|k| e1[k] * u[k] + k2[k] * (h / 2.0)).collect();
        let k3 = nonlinear(grid, &b);
        let c: Spectrum = (0..n).map(|k| e2[k] * u[k] + e1[k] * k3[k] * h).collect();
        let k4 = nonlinear(grid, &c);
        for k in 0..n {
            u[k] = e2[k] * u[k] + (e2[k] * k1[k] + e1[k] * (k2[k] + k3[k]) * 2.0 + k4[k]) * (h / 6.0);
        }
        let next = l2(grid, &inverse_real(grid, u.clone()));
        let jump = if norm == 0.0 { next } else { (next - norm).abs() / norm };
        if !jump.is_finite() || jump > jump_tol {
            return Err(Error::StepRejected {
                t: tau0 + (step + 1) as f64 * h,
                jump,
                limit: jump_tol,
            });
        }
        norm = next;
    }
    Ok(inverse_real(grid, u))
}

/// Advance both profiles to `tau_final` with steps no larger than
/// `dtau_max`.
pub fn kp_integrate(
    grid: &SpectralGrid,
    state: &KPState,
    tau_final: f64,
    order: KpOrder,
    params: &ScaleParams,
    dtau_max: f64,
    jump_tol: f64,
) -> Result<KPState> {
    if !(dtau_max > 0.0) || !(tau_final >= state.tau) {
        return Err(Error::InvalidParams(format!(
            "cannot step from {} to {tau_final} with {dtau_max}",
            state.tau
        )));
    }
    check_zero_x_mean(grid, &state.zp)?;
    check_zero_x_mean(grid, &state.zm)?;
    let span = tau_final - state.tau;
    if span == 0.0 {
        return Ok(state.clone());
    }
    let steps = (span / dtau_max).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let zp = ifrk4(grid, &state.zp, Branch::Plus, order, params, h, steps, jump_tol, state.tau)?;
    let zm = ifrk4(grid, &state.zm, Branch::Minus, order, params, h, steps, jump_tol, state.tau)?;
    Ok(KPState {
        zp,
        zm,
        tau: tau_final,
        dtau: h,
    })
}

/// `f(x - s)` by a phase shift.
pub fn shift_x(grid: &SpectralGrid, f: &SurfaceField, s: f64) -> SurfaceField {
    let ny = grid.ny;
    let mut sp = forward(grid, f);
    for (n, v) in sp.iter_mut().enumerate() {
        *v = if grid.is_nyquist(n) {
            Complex64::new(0.0, 0.0)
        } else {
            *v * Complex64::from_polar(1.0, -grid.kx[n / ny] * s)
        };
    }
    inverse_real(grid, sp)
}

/// `(zp(x - t) - zm(x + t)) / sqrt 2`; the state must sit at slow time
/// `epsilon t`.
pub fn reconstruct_zeta_kp(grid: &SpectralGrid, state: &KPState, t: f64, params: &ScaleParams) -> Result<SurfaceField> {
    let expected = params.epsilon * t;
    let slack = state.dtau.max(1e-12 * expected.abs().max(1.0));
    if (state.tau - expected).abs() > slack {
        return Err(Error::FrameMismatch {
            tau: state.tau,
            expected,
        });
    }
    let p = shift_x(grid, &state.zp, t);
    let m = shift_x(grid, &state.zm, -t);
    Ok(p.zip(&m, |a, b| (a - b) / SQRT_2))
}

/// `max |a - b|`.
pub fn compare_sup(a: &SurfaceField, b: &SurfaceField) -> Result<f64> {
    a.same_shape(b)?;
    Ok((a - b).max_abs())
}

/// `|a - b|_2`.
pub fn compare_l2(grid: &SpectralGrid, a: &SurfaceField, b: &SurfaceField) -> Result<f64> {
    a.same_shape(b)?;
    Ok(spectral::l2_norm(grid, &(a - b)))
}

/// Line soliton of the `x`-only reduction of the right-moving third-order
/// equation with its mean removed. Returns the field and its speed.
pub fn line_soliton(grid: &SpectralGrid, amplitude: f64, x0: f64, params: &ScaleParams) -> Result<(SurfaceField, f64)> {
    let c3 = c3(params);
    if !(c3 > 0.0) || !(amplitude > 0.0) {
        return Err(Error::Unsupported(format!(
            "line soliton needs 1/6 - alpha/2 > 0 and amplitude > 0, got {c3} and {amplitude}"
        )));
    }
    let c = KP_BETA * amplitude / 3.0;
    let kappa = (KP_BETA * amplitude / (12.0 * c3)).sqrt();
    let lx = grid.lx;
    // sum over periodic images so the profile is smooth on the torus
    let raw = SurfaceField::from_fn(grid, |x, _| {
        (-3..=3)
            .map(|m| {
                let s = (kappa * (x - x0 + m as f64 * lx)).cosh();
                amplitude / (s * s)
            })
            .sum()
    });
    let m = -raw.mean();
    Ok((raw.map(|v| v + m), c + KP_BETA * m))
}
