//! Quantization of symbols with spatially varying coefficients.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SurfaceField;
use crate::grid::SpectralGrid;
use crate::params::ScaleParams;
use crate::spectral::{self, forward};

/// `(coefficients at x, xi1, gamma * xi2) -> value`.
pub type Evaluator = Arc<dyn Fn(&[f64], f64, f64) -> Complex64 + Send + Sync>;
/// `(xi1, gamma * xi2) -> value`.
pub type Multiplier = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// One term `c(x) m(xi)` of a separable symbol; `c = None` means `c = 1`.
#[derive(Clone)]
pub struct SeparableTerm {
    pub coefficient: Option<SurfaceField>,
    pub multiplier: Multiplier,
}

/// A symbol `sigma(v(x), xi)` whose `x`-dependence enters through a list of
/// coefficient fields.
#[derive(Clone)]
pub struct VariableSymbol {
    pub order: i32,
    pub coefficients: Vec<SurfaceField>,
    pub evaluator: Evaluator,
    pub separable: Option<Vec<SeparableTerm>>,
}

impl std::fmt::Debug for VariableSymbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VariableSymbol")
            .field("order", &self.order)
            .field("coefficients", &self.coefficients.len())
            .field("separable", &self.separable.as_ref().map(|s| s.len()))
            .finish()
    }
}

impl VariableSymbol {
    pub fn new(
        order: i32,
        coefficients: Vec<SurfaceField>,
        evaluator: impl Fn(&[f64], f64, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        VariableSymbol {
            order,
            coefficients,
            evaluator: Arc::new(evaluator),
            separable: None,
        }
    }

    /// Symbol without `x`-dependence.
    pub fn constant(order: i32, m: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        let m: Multiplier = Arc::new(m);
        let m2 = m.clone();
        VariableSymbol {
            order,
            coefficients: Vec::new(),
            evaluator: Arc::new(move |_, a, b| m2(a, b)),
            separable: Some(vec![SeparableTerm {
                coefficient: None,
                multiplier: m,
            }]),
        }
    }

    /// `sum_j c_j(x) m_j(xi)`; both quantizations are available.
    pub fn separable(order: i32, terms: Vec<SeparableTerm>) -> Self {
        let coefficients: Vec<SurfaceField> = terms.iter().filter_map(|t| t.coefficient.clone()).collect();
        let plan: Vec<(Option<usize>, Multiplier)> = {
            let mut idx = 0;
            terms
                .iter()
                .map(|t| {
                    let slot = t.coefficient.as_ref().map(|_| {
                        idx += 1;
                        idx - 1
                    });
                    (slot, t.multiplier.clone())
                })
                .collect()
        };
        VariableSymbol {
            order,
            coefficients,
            evaluator: Arc::new(move |v, a, b| {
                plan.iter()
                    .map(|(slot, m)| m(a, b) * slot.map_or(1.0, |s| v[s]))
                    .sum()
            }),
            separable: Some(terms),
        }
    }

    pub fn eval(&self, v: &[f64], xi1: f64, xi2: f64) -> Complex64 {
        (self.evaluator)(v, xi1, xi2)
    }

    /// `max |sigma(v(x), xi)| / (1 + |xi|)^order` over grid points and
    /// frequencies with `|xi| >= 1/4` on a logarithmic ladder.
    pub fn order_witness(&self) -> f64 {
        let npts = self.coefficients.first().map_or(1, |c| c.data.len());
        let stride = (npts / 16).max(1);
        let mut v = vec![0.0; self.coefficients.len()];
        let mut worst: f64 = 0.0;
        for p in (0..npts).step_by(stride) {
            for (k, c) in self.coefficients.iter().enumerate() {
                v[k] = c.data[p];
            }
            for e in -2..12 {
                let r = 2f64.powi(e);
                for a in 0..8 {
                    let th = a as f64 * std::f64::consts::PI / 4.0;
                    let s = self.eval(&v, r * th.cos(), r * th.sin()).norm();
                    worst = worst.max(s / (1.0 + r).powi(self.order));
                }
            }
        }
        worst
    }
}

/// Direct quantization: each output point sums `sigma(v(x), xi^gamma) u^(xi)
/// e^{i x.xi}` over all non-Nyquist modes.
pub fn op_eps(grid: &SpectralGrid, sigma: &VariableSymbol, u: &SurfaceField, params: &ScaleParams) -> Result<SurfaceField> {
    check_symbol(grid, sigma, u)?;
    let (nx, ny) = (grid.nx, grid.ny);
    let s = forward(grid, u);
    let smax = s.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let norm = 1.0 / grid.len() as f64;
    let modes: Vec<(usize, usize, f64, f64, Complex64)> = s
        .iter()
        .enumerate()
        .filter(|(n, c)| !grid.is_nyquist(*n) && c.norm() > 1e-15 * smax)
        .map(|(n, c)| {
            let (i, j) = (n / ny, n % ny);
            (i, j, grid.kx[i], params.gamma * grid.ky[j], c * norm)
        })
        .collect();
    let wx: Vec<Complex64> = (0..nx)
        .map(|m| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / nx as f64))
        .collect();
    let wy: Vec<Complex64> = (0..ny)
        .map(|m| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / ny as f64))
        .collect();
    let mut v = vec![0.0; sigma.coefficients.len()];
    let mut out = vec![0.0; grid.len()];
    for px in 0..nx {
        for py in 0..ny {
            let p = px * ny + py;
            for (k, c) in sigma.coefficients.iter().enumerate() {
                v[k] = c.data[p];
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for &(i, j, a, b, c) in &modes {
                let ph = wx[(i * px) % nx] * wy[(j * py) % ny];
                acc += sigma.eval(&v, a, b) * c * ph;
            }
            out[p] = acc.re;
        }
    }
    Ok(SurfaceField { nx, ny, data: out })
}

/// Quantization through the separable form `sum_j c_j(x) (m_j(D) u)(x)`.
pub fn op_eps_separable(
    grid: &SpectralGrid,
    sigma: &VariableSymbol,
    u: &SurfaceField,
    params: &ScaleParams,
) -> Result<SurfaceField> {
    check_symbol(grid, sigma, u)?;
    let terms = sigma
        .separable
        .as_ref()
        .ok_or_else(|| Error::Unsupported("symbol has no separable form".into()))?;
    let mut out = SurfaceField::zeros(grid);
    let g = params.gamma;
    for t in terms {
        let m = t.multiplier.clone();
        let mu = spectral::apply_multiplier(grid, u, move |a, b| m(a, g * b))?;
        match &t.coefficient {
            Some(c) => out = &out + &(c * &mu),
            None => out = &out + &mu,
        }
    }
    Ok(out)
}

fn check_symbol(grid: &SpectralGrid, sigma: &VariableSymbol, u: &SurfaceField) -> Result<()> {
    u.check(grid)?;
    for c in &sigma.coefficients {
        c.check(grid)
            .map_err(|_| Error::GridMismatch(format!("symbol coefficient {}x{} vs field {}x{}", c.nx, c.ny, u.nx, u.ny)))?;
    }
    Ok(())
}
