//! Named initial-data recipes.

use crate::error::{HarnessError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use stripwaves::random::band_limited;
use stripwaves::{spectral, Complex64, ScaleParams, SpectralGrid, SurfaceField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialProfile {
    Rest,
    /// Centered Gaussian elevation, potential at rest.
    Gaussian { amplitude: f64, width: f64 },
    /// `amplitude * cos(kx x + ky y)` in units of the fundamental modes.
    Mode { amplitude: f64, kx: i32, ky: i32 },
    /// Fixed smooth pair with a few low modes in both fields.
    Smooth { amplitude: f64 },
    /// Seeded band-limited pair.
    Random { amplitude: f64, kmax: usize },
    /// Localized elevation with zero mean along every `x` line. With
    /// `right_moving` the potential is chosen so that only the right-going
    /// wave is excited.
    Pulse {
        amplitude: f64,
        width: f64,
        width_y: f64,
        right_moving: bool,
    },
    LineSoliton { amplitude: f64 },
}

impl InitialProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitialProfile::Rest => true,
            InitialProfile::Gaussian { amplitude, width } => amplitude.is_finite() && width > 0.0,
            InitialProfile::Mode { amplitude, .. } | InitialProfile::Smooth { amplitude } => amplitude.is_finite(),
            InitialProfile::Random { amplitude, kmax } => amplitude.is_finite() && kmax > 0,
            InitialProfile::Pulse {
                amplitude,
                width,
                width_y,
                ..
            } => amplitude.is_finite() && width > 0.0 && width_y > 0.0,
            InitialProfile::LineSoliton { amplitude } => amplitude > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Config(format!("bad initial profile {self:?}")))
        }
    }

    /// `(zeta, psi)` on `grid`.
    pub fn build(&self, grid: &SpectralGrid, params: &ScaleParams, seed: u64) -> Result<(SurfaceField, SurfaceField)> {
        let (lx, ly) = (grid.lx, grid.ly);
        let (k1, k2) = (2.0 * PI / lx, 2.0 * PI / ly);
        let zero = SurfaceField::zeros(grid);
        Ok(match *self {
            InitialProfile::Rest => (zero.clone(), zero),
            InitialProfile::Gaussian { amplitude, width } => (
                SurfaceField::from_fn(grid, |x, y| {
                    let r2 = (x - lx / 2.0).powi(2) + (y - ly / 2.0).powi(2);
                    amplitude * (-r2 / (width * width)).exp()
                }),
                zero,
            ),
            InitialProfile::Mode { amplitude, kx, ky } => (
                SurfaceField::from_fn(grid, |x, y| amplitude * (kx as f64 * k1 * x + ky as f64 * k2 * y).cos()),
                zero,
            ),
            InitialProfile::Smooth { amplitude } => (
                SurfaceField::from_fn(grid, |x, y| {
                    amplitude * (0.5 * (k1 * x).sin() + 0.25 * (k1 * x + k2 * y).cos())
                }),
                SurfaceField::from_fn(grid, |x, y| (2.0 * k1 * x).cos() + 0.4 * (k2 * y).sin()),
            ),
            InitialProfile::Random { amplitude, kmax } => (
                &band_limited(grid, seed, kmax, true) * amplitude,
                &band_limited(grid, seed.wrapping_add(1), kmax, true) * amplitude,
            ),
            InitialProfile::Pulse {
                amplitude,
                width,
                width_y,
                right_moving,
            } => {
                let raw = SurfaceField::from_fn(grid, |x, y| {
                    let s = (x - lx / 2.0) / width;
                    let t = (y - ly / 2.0) / width_y;
                    amplitude * (1.0 - 2.0 * s * s) * (-s * s - t * t).exp()
                });
                let zeta = remove_x_mean(grid, &raw);
                let psi = if right_moving { x_antiderivative(grid, &zeta)? } else { zero };
                (zeta, psi)
            }
            InitialProfile::LineSoliton { amplitude } => {
                let (zeta, _) = stripwaves::kp::line_soliton(grid, amplitude, lx / 2.0, params)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                let psi = x_antiderivative(grid, &zeta)?;
                (zeta, psi)
            }
        })
    }
}

/// Subtract the mean along each `x` line.
pub fn remove_x_mean(grid: &SpectralGrid, f: &SurfaceField) -> SurfaceField {
    let mut out = f.clone();
    for j in 0..grid.ny {
        let m = (0..grid.nx).map(|i| f.data[i * grid.ny + j]).sum::<f64>() / grid.nx as f64;
        for i in 0..grid.nx {
            out.data[i * grid.ny + j] -= m;
        }
    }
    out
}

/// Zero-mean `x` antiderivative of a field with zero mean along `x`.
pub fn x_antiderivative(grid: &SpectralGrid, f: &SurfaceField) -> Result<SurfaceField> {
    spectral::apply_multiplier(grid, f, |kx, _| {
        if kx == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0 / kx)
        }
    })
    .map_err(|e| HarnessError::Config(e.to_string()))
}
