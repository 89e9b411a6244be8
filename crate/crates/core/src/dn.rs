//! The scaled Dirichlet–Neumann operator and its diagnostics.
//!
//! `G[eps zeta] psi` is the conormal derivative at the surface of the
//! harmonic extension of `psi`. The extension is split into the exact flat
//! extension (mode by mode) and a correction solved on the strip with the
//! preconditioned Krylov solver, so a flat surface costs no iterations.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::elliptic::{SolverOptions, StripSolver};
use crate::error::{Error, Result};
use crate::field::{StripField, SurfaceField};
use crate::grid::SpectralGrid;
use crate::params::ScaleParams;
use crate::spectral::{self, forward, gradient_scaled_by, sobolev_norm, NormFlavor, Spectrum};
use crate::strip::{build_transform, flat_profile, flat_rate, StripTransform};
use crate::symbol::{op_eps, VariableSymbol};

/// Builds contexts for surfaces over a fixed bottom. Holds the shared flat
/// inverses so per-surface construction only assembles `Q`.
#[derive(Debug, Clone)]
pub struct DnFactory {
    solver: Arc<StripSolver>,
    b: SurfaceField,
}

impl DnFactory {
    pub fn new(grid: &SpectralGrid, params: &ScaleParams, b: SurfaceField, opts: SolverOptions) -> Result<Self> {
        b.check(grid)?;
        Ok(DnFactory {
            solver: Arc::new(StripSolver::new(grid, params, opts)?),
            b,
        })
    }

    /// Flat bottom, default solver options.
    pub fn flat_bottom(grid: &SpectralGrid, params: &ScaleParams) -> Result<Self> {
        Self::new(grid, params, SurfaceField::zeros(grid), SolverOptions::default())
    }

    pub fn context(&self, zeta: &SurfaceField) -> Result<DNContext> {
        let solver = &self.solver;
        let transform = build_transform(zeta, &self.b, &solver.params, &solver.grid)?;
        let rho = rho_field(&solver.grid, zeta, &solver.params);
        Ok(DNContext {
            zeta: zeta.clone(),
            b: self.b.clone(),
            params: solver.params,
            transform,
            rho,
            solver: solver.clone(),
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.solver.grid
    }

    pub fn params(&self) -> &ScaleParams {
        &self.solver.params
    }

    pub fn bottom(&self) -> &SurfaceField {
        &self.b
    }

    pub fn solver(&self) -> &StripSolver {
        &self.solver
    }
}

/// Everything needed to apply `G[eps zeta]` for one surface.
#[derive(Debug, Clone)]
pub struct DNContext {
    pub zeta: SurfaceField,
    pub b: SurfaceField,
    pub params: ScaleParams,
    pub transform: StripTransform,
    /// `sqrt(1 + eps^2 mu |grad zeta|^2)`.
    pub rho: SurfaceField,
    solver: Arc<StripSolver>,
}

impl DNContext {
    pub fn grid(&self) -> &SpectralGrid {
        &self.solver.grid
    }

    pub fn solver(&self) -> &StripSolver {
        &self.solver
    }
}

/// `sqrt(1 + eps^2 mu |grad_gamma zeta|^2)`.
pub fn rho_field(grid: &SpectralGrid, zeta: &SurfaceField, params: &ScaleParams) -> SurfaceField {
    let (zx, zy) = spectral::scaled_gradient(grid, zeta, params);
    let w = params.slope_weight();
    zx.zip(&zy, |a, b| (1.0 + w * (a * a + b * b)).sqrt())
}

/// Diagnostics of one application.
#[derive(Debug, Clone)]
pub struct DnReport {
    pub value: SurfaceField,
    pub iterations: usize,
    pub residual: f64,
    /// Mean of the surface flux before it is projected out.
    pub flux_imbalance: f64,
}

/// Flat harmonic lifting: its spectrum per level and its strip gradient.
struct FlatLift {
    spectrum: Spectrum,
    grad: [Vec<f64>; 3],
}

fn flat_lift(solver: &StripSolver, psi: &SurfaceField) -> FlatLift {
    let g = &solver.grid;
    let p = &solver.params;
    let (n, nz, ny) = (g.len(), g.nz, g.ny);
    let mut s = forward(g, psi);
    for (k, v) in s.iter_mut().enumerate() {
        if g.is_nyquist(k) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    let kappa: Vec<f64> = (0..n).map(|k| flat_rate(g.kxd[k / ny], g.kyd[k % ny], p)).collect();
    let mut gx = vec![0.0; nz * n];
    let mut gy = vec![0.0; nz * n];
    let mut dz_specs = Vec::with_capacity(nz);
    for l in 0..nz {
        let z = g.cheb.z[l];
        let mut lvl: Spectrum = Vec::with_capacity(n);
        let mut dzs: Spectrum = Vec::with_capacity(n);
        for k in 0..n {
            let (v, d) = flat_profile(kappa[k], z);
            lvl.push(s[k] * v);
            dzs.push(s[k] * d);
        }
        let (fx, fy) = spectral::gradient_from_spectrum(g, &lvl, p.a(), p.c());
        gx[l * n..(l + 1) * n].copy_from_slice(&fx.data);
        gy[l * n..(l + 1) * n].copy_from_slice(&fy.data);
        dz_specs.push(dzs);
    }
    let mut gz = vec![0.0; nz * n];
    solver.levels_from_spectra(&dz_specs, &mut gz, 0);
    FlatLift {
        spectrum: s,
        grad: [gx, gy, gz],
    }
}

/// `-Q grad_s psi_flat`.
fn lift_source(tr: &StripTransform, grad: &[Vec<f64>; 3], n: usize) -> [Vec<f64>; 3] {
    let len = grad[0].len();
    let mut g1 = vec![0.0; len];
    let mut g2 = vec![0.0; len];
    let mut g3 = vec![0.0; len];
    for k in 0..len {
        let q11 = tr.q11.data[k % n];
        let (q13, q23, q33) = (tr.q13.data[k], tr.q23.data[k], tr.q33.data[k]);
        let (a, b, c) = (grad[0][k], grad[1][k], grad[2][k]);
        g1[k] = -(q11 * a + q13 * c);
        g2[k] = -(q11 * b + q23 * c);
        g3[k] = -(q13 * a + q23 * b + q33 * c);
    }
    [g1, g2, g3]
}

/// Solve for the correction `w` of the extension `psi_flat + w`.
/// Correction values, its gradient, solver iterations and residual.
type Correction = (Vec<f64>, [Vec<f64>; 3], usize, f64);

fn correction(ctx: &DNContext, lift: &FlatLift) -> Result<Correction> {
    let solver = &ctx.solver;
    let n = solver.grid.len();
    let src = lift_source(&ctx.transform, &lift.grad, n);
    if ctx.transform.is_flat() {
        return Ok((vec![0.0; n * solver.grid.nz], src, 0, 0.0));
    }
    let rows = solver.assemble(&src, None);
    let mut rows = rows;
    for v in rows[..n].iter_mut() {
        *v = 0.0;
    }
    let (w, it, res) = solver.solve_rows(&ctx.transform, &rows, None)?;
    Ok((w, src, it, res))
}

/// `G[eps zeta] psi` with solver diagnostics.
pub fn dn_apply_report(ctx: &DNContext, psi: &SurfaceField) -> Result<DnReport> {
    let solver = &ctx.solver;
    let g = &solver.grid;
    psi.check(g)?;
    let n = g.len();
    let nz = g.nz;
    let lift = flat_lift(solver, psi);
    let (w, src, iterations, residual) = correction(ctx, &lift)?;

    let flat = spectral::flat_dn_symbol(&ctx.params);
    let mut gs = lift.spectrum.clone();
    spectral::scale_spectrum(g, &mut gs, &flat);
    let mut out = spectral::inverse_real(g, gs);

    if iterations > 0 {
        let tr = &ctx.transform;
        let top = SurfaceField {
            nx: g.nx,
            ny: g.ny,
            data: w[..n].to_vec(),
        };
        let (wx, wy) = gradient_scaled_by(g, &top, ctx.params.a(), ctx.params.c());
        let d = &g.cheb.d1;
        for p in 0..n {
            let mut wz = 0.0;
            for m in 0..nz {
                wz += d[m] * w[m * n + p];
            }
            let f3 = tr.q13.data[p] * wx.data[p] + tr.q23.data[p] * wy.data[p] + (1.0 + tr.q33.data[p]) * wz;
            out.data[p] += f3 - src[2][p];
        }
    } else {
        for (o, s) in out.data.iter_mut().zip(&src[2]) {
            *o -= s;
        }
    }
    let flux_imbalance = out.mean();
    for v in out.data.iter_mut() {
        *v -= flux_imbalance;
    }
    Ok(DnReport {
        value: out,
        iterations,
        residual,
        flux_imbalance,
    })
}

/// `G[eps zeta] psi`.
pub fn dn_apply(ctx: &DNContext, psi: &SurfaceField) -> Result<SurfaceField> {
    Ok(dn_apply_report(ctx, psi)?.value)
}

/// Harmonic extension `psi_flat + w` of `psi` into the strip.
pub fn dirichlet_extension(ctx: &DNContext, psi: &SurfaceField) -> Result<StripField> {
    let solver = &ctx.solver;
    let g = &solver.grid;
    psi.check(g)?;
    let n = g.len();
    let nz = g.nz;
    let lift = flat_lift(solver, psi);
    let (w, _, _, _) = correction(ctx, &lift)?;
    let kappa: Vec<f64> = (0..n)
        .map(|k| flat_rate(g.kxd[k / g.ny], g.kyd[k % g.ny], &ctx.params))
        .collect();
    let specs: Vec<Spectrum> = (0..nz)
        .map(|l| {
            let z = g.cheb.z[l];
            (0..n).map(|k| lift.spectrum[k] * flat_profile(kappa[k], z).0).collect()
        })
        .collect();
    let mut data = vec![0.0; nz * n];
    solver.levels_from_spectra(&specs, &mut data, 0);
    // the Nyquist part of psi is constant in depth
    let nyq = psi - &spectral::inverse_real(g, {
        let mut s = forward(g, psi);
        for (k, v) in s.iter_mut().enumerate() {
            if g.is_nyquist(k) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        s
    });
    for l in 0..nz {
        for p in 0..n {
            data[l * n + p] += w[l * n + p] + nyq.data[p];
        }
    }
    Ok(StripField {
        nx: g.nx,
        ny: g.ny,
        nz,
        data,
    })
}

/// Symbol `sqrt((1 + eps^2 mu |grad zeta|^2) mu |xi|^2 - mu^2 eps^2 (xi . grad zeta)^2)`
/// with the scaled gradient of `zeta` as coefficients.
pub fn principal_symbol(ctx: &DNContext) -> VariableSymbol {
    let (zx, zy) = spectral::scaled_gradient(ctx.grid(), &ctx.zeta, &ctx.params);
    let mu = ctx.params.mu;
    let e = ctx.params.epsilon;
    VariableSymbol::new(1, vec![zx, zy], move |v, a, b| {
        let g2 = v[0] * v[0] + v[1] * v[1];
        let dot = a * v[0] + b * v[1];
        let rad = (1.0 + e * e * mu * g2) * mu * (a * a + b * b) - mu * mu * e * e * dot * dot;
        Complex64::new(rad.max(0.0).sqrt(), 0.0)
    })
}

/// Smallest radicand of the principal symbol over unit directions at every
/// grid point, normalized by `mu`.
pub fn principal_radicand_min(ctx: &DNContext) -> f64 {
    let (zx, zy) = spectral::scaled_gradient(ctx.grid(), &ctx.zeta, &ctx.params);
    let (mu, e) = (ctx.params.mu, ctx.params.epsilon);
    let mut worst = f64::INFINITY;
    for p in 0..zx.data.len() {
        let (gx, gy) = (zx.data[p], zy.data[p]);
        let gn = (gx * gx + gy * gy).sqrt();
        let mut dirs = vec![(1.0, 0.0), (0.0, 1.0), (0.5f64.sqrt(), 0.5f64.sqrt())];
        if gn > 0.0 {
            dirs.push((gx / gn, gy / gn));
        }
        for (a, b) in dirs {
            let dot = a * gx + b * gy;
            let rad = (1.0 + e * e * mu * gn * gn) * mu - mu * mu * e * e * dot * dot;
            worst = worst.min(rad / mu);
        }
    }
    worst
}

/// `Op(g) psi` by direct quantization.
pub fn dn_principal(ctx: &DNContext, psi: &SurfaceField) -> Result<SurfaceField> {
    let rmin = principal_radicand_min(ctx);
    if rmin < 0.0 {
        return Err(Error::NegativeRadicand(rmin));
    }
    op_eps(ctx.grid(), &principal_symbol(ctx), psi, &ctx.params)
}

/// `G psi - Op(g) psi`.
pub fn dn_residual(ctx: &DNContext, psi: &SurfaceField) -> Result<SurfaceField> {
    let gpsi = dn_apply(ctx, psi)?;
    let gp = dn_principal(ctx, psi)?;
    Ok(&gpsi - &gp)
}

/// `Z` and the horizontal velocity `v` at the surface.
#[derive(Debug, Clone)]
pub struct SurfaceKinematics {
    pub z: SurfaceField,
    pub v: (SurfaceField, SurfaceField),
    pub g_psi: SurfaceField,
}

/// `Z = (G psi + eps mu grad zeta . grad psi) / (1 + eps^2 mu |grad zeta|^2)`,
/// `v = grad psi - eps Z grad zeta`, from a precomputed `G psi`.
pub fn kinematics_from(ctx: &DNContext, psi: &SurfaceField, g_psi: SurfaceField) -> SurfaceKinematics {
    let g = ctx.grid();
    let p = &ctx.params;
    let (zx, zy) = spectral::scaled_gradient(g, &ctx.zeta, p);
    let (px, py) = spectral::scaled_gradient(g, psi, p);
    let (e, mu) = (p.epsilon, p.mu);
    let n = g.len();
    let mut z = vec![0.0; n];
    let mut vx = vec![0.0; n];
    let mut vy = vec![0.0; n];
    for k in 0..n {
        let num = g_psi.data[k] + e * mu * (zx.data[k] * px.data[k] + zy.data[k] * py.data[k]);
        let den = 1.0 + e * e * mu * (zx.data[k] * zx.data[k] + zy.data[k] * zy.data[k]);
        z[k] = num / den;
        vx[k] = px.data[k] - e * z[k] * zx.data[k];
        vy[k] = py.data[k] - e * z[k] * zy.data[k];
    }
    let wrap = |d| SurfaceField { nx: g.nx, ny: g.ny, data: d };
    SurfaceKinematics {
        z: wrap(z),
        v: (wrap(vx), wrap(vy)),
        g_psi,
    }
}

pub fn kinematics(ctx: &DNContext, psi: &SurfaceField) -> Result<SurfaceKinematics> {
    let gpsi = dn_apply(ctx, psi)?;
    Ok(kinematics_from(ctx, psi, gpsi))
}

/// `d/dzeta (G[eps zeta] psi) . h = -eps G(h Z) - eps mu div(h v)`.
pub fn dn_shape_derivative(ctx: &DNContext, psi: &SurfaceField, h: &SurfaceField) -> Result<SurfaceField> {
    let kin = kinematics(ctx, psi)?;
    shape_derivative_with(ctx, &kin, h)
}

pub fn shape_derivative_with(ctx: &DNContext, kin: &SurfaceKinematics, h: &SurfaceField) -> Result<SurfaceField> {
    let g = ctx.grid();
    let p = &ctx.params;
    let ghz = dn_apply(ctx, &(h * &kin.z))?;
    let div = spectral::scaled_divergence(g, &(h * &kin.v.0), &(h * &kin.v.1), p);
    Ok(ghz.zip(&div, |a, b| -p.epsilon * a - p.epsilon * p.mu * b))
}

/// `d(a)^k f` with `d(a) f = -lap_g f + w (grad a . grad)^2 f / rho(a)^2`,
/// `w = eps^2 mu`.
pub fn d_eps_apply(grid: &SpectralGrid, a: &SurfaceField, f: &SurfaceField, k: usize, params: &ScaleParams) -> SurfaceField {
    let (ax, ay) = spectral::scaled_gradient(grid, a, params);
    let w = params.slope_weight();
    let coef: Vec<(f64, f64, f64)> = (0..grid.len())
        .map(|p| {
            let (gx, gy) = (ax.data[p], ay.data[p]);
            let r2 = 1.0 + w * (gx * gx + gy * gy);
            (w * gx * gx / r2, 2.0 * w * gx * gy / r2, w * gy * gy / r2)
        })
        .collect();
    let gam = params.gamma;
    let mut out = f.clone();
    for _ in 0..k {
        let s = forward(grid, &out);
        let ny = grid.ny;
        let second = |fac: &dyn Fn(f64, f64) -> f64| {
            let sp: Spectrum = s
                .iter()
                .enumerate()
                .map(|(n, v)| v * fac(grid.kxd[n / ny], gam * grid.kyd[n % ny]))
                .collect();
            spectral::inverse_real(grid, sp)
        };
        let fxx = second(&|kx, _| -kx * kx);
        let fxy = second(&|kx, ky| -kx * ky);
        let fyy = second(&|_, ky| -ky * ky);
        out = SurfaceField {
            nx: grid.nx,
            ny: grid.ny,
            data: (0..grid.len())
                .map(|p| {
                    let (cxx, cxy, cyy) = coef[p];
                    -(fxx.data[p] + fyy.data[p]) + cxx * fxx.data[p] + cxy * fxy.data[p] + cyy * fyy.data[p]
                })
                .collect(),
        };
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutatorKind {
    /// `[(1/eps) G, d^k] u` in `L^2`, compared with `eps`.
    Raw,
    /// `[(1/eps) rho^{-1} G, d^k] u` in `H_eps^s`, compared with `sqrt(eps)`.
    RhoWeighted,
}

#[derive(Debug, Clone, Copy)]
pub struct CommutatorReport {
    pub norm: f64,
    /// `norm / eps` (raw) or `norm / sqrt(eps)` (weighted).
    pub ratio: f64,
    /// The Poisson norm of `u` the estimate is measured against.
    pub budget: f64,
    /// Expected cancellation noise from the two solver calls.
    pub noise_floor: f64,
}

/// Measure a commutator by applying both orderings and differencing.
pub fn commutator_diagnostic(
    ctx: &DNContext,
    u: &SurfaceField,
    k: usize,
    which: CommutatorKind,
    s: f64,
) -> Result<CommutatorReport> {
    let g = ctx.grid();
    let p = &ctx.params;
    let e = p.epsilon;
    let weight = |f: SurfaceField| -> SurfaceField {
        match which {
            CommutatorKind::Raw => &f * (1.0 / e),
            CommutatorKind::RhoWeighted => f.zip(&ctx.rho, |a, r| a / (e * r)),
        }
    };
    let du = d_eps_apply(g, &ctx.zeta, u, k, p);
    let first = weight(dn_apply(ctx, &du)?);
    let second = d_eps_apply(g, &ctx.zeta, &weight(dn_apply(ctx, u)?), k, p);
    let c = &first - &second;
    let (norm, scale, budget_s) = match which {
        CommutatorKind::Raw => (spectral::l2_norm(g, &c), e, 2.0 * k as f64),
        CommutatorKind::RhoWeighted => (
            sobolev_norm(g, &c, s, NormFlavor::HEps, p),
            e.sqrt(),
            2.0 * k as f64 + s - 1.0,
        ),
    };
    let tol = ctx.solver.opts.tol;
    let noise_floor = tol * (spectral::l2_norm(g, &first) + spectral::l2_norm(g, &second));
    Ok(CommutatorReport {
        norm,
        ratio: norm / scale,
        budget: sobolev_norm(g, u, budget_s, NormFlavor::Poisson, p),
        noise_floor,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct TimeCommutator {
    /// `((G(t+dt) - G(t)) u, u) / dt`.
    pub value: f64,
    /// `|value| / (eps |grad d_t zeta|_inf |P u|^2)`.
    pub ratio: f64,
}

/// Quadratic form of the time derivative of `G` along a surface motion.
pub fn dn_time_commutator(ctx_t: &DNContext, ctx_next: &DNContext, dt: f64, u: &SurfaceField) -> Result<TimeCommutator> {
    let g = ctx_t.grid();
    let p = &ctx_t.params;
    ctx_next.zeta.check(g)?;
    if dt <= 0.0 {
        return Err(Error::InvalidParams("dt must be positive".into()));
    }
    let dzeta = &(&ctx_next.zeta - &ctx_t.zeta) * (1.0 / dt);
    let (dx, dy) = spectral::scaled_gradient(g, &dzeta, p);
    let grad_inf = dx.zip(&dy, |a, b| (a * a + b * b).sqrt()).max_abs();
    let diff = &dn_apply(ctx_next, u)? - &dn_apply(ctx_t, u)?;
    let value = spectral::inner(g, &diff, u) / dt;
    let pu = sobolev_norm(g, u, 0.0, NormFlavor::Poisson, p);
    let den = p.epsilon * grad_inf * pu * pu;
    let ratio = if den > 0.0 { value.abs() / den } else { 0.0 };
    Ok(TimeCommutator { value, ratio })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Symbols `eta_+-(x, z, xi)` at depth `z` with coefficients
/// `(d_z sigma, grad_gamma sigma)` sampled at that depth.
pub fn eta_symbol(tr: &StripTransform, grid: &SpectralGrid, z: f64, plus: bool) -> VariableSymbol {
    let p = tr.params;
    let (sx, sy) = sigma_gradient_at(tr, grid, z);
    let sign = if plus { 1.0 } else { -1.0 };
    VariableSymbol::new(1, vec![tr.dz_sigma.clone(), sx, sy], move |v, a, b| {
        eta_value(&p, v[0], v[1], v[2], a, b, sign)
    })
}

fn eta_value(p: &ScaleParams, sz: f64, sx: f64, sy: f64, a: f64, b: f64, sign: f64) -> Complex64 {
    let mu = p.mu;
    let g2 = sx * sx + sy * sy;
    let dot = sx * a + sy * b;
    let rad = ((1.0 + mu * g2) * mu * (a * a + b * b) - mu * mu * dot * dot).max(0.0);
    Complex64::new(sign * rad.sqrt(), mu * dot) * ((1.0 + sz) / (1.0 + mu * g2))
}

/// `grad_gamma sigma` at depth `z` (linear in `z`).
fn sigma_gradient_at(tr: &StripTransform, grid: &SpectralGrid, z: f64) -> (SurfaceField, SurfaceField) {
    let p = &tr.params;
    let (zx, zy) = spectral::scaled_gradient(grid, &tr.zeta, p);
    let (bx, by) = spectral::scaled_gradient(grid, &tr.b, p);
    let e = p.epsilon;
    (
        zx.zip(&bx, |a, b| e * (-z * b + (z + 1.0) * a)),
        zy.zip(&by, |a, b| e * (-z * b + (z + 1.0) * a)),
    )
}

/// `sigma_app(x, z, xi) = exp(-int_z^0 eta_+(x, s, xi) ds)`, with the
/// integral by Gauss–Legendre quadrature.
pub fn sigma_app_symbol(tr: &StripTransform, grid: &SpectralGrid, z: f64, nodes: usize) -> VariableSymbol {
    let p = tr.params;
    let (gx, gw) = gauss_legendre(nodes);
    let mut coefs = vec![tr.dz_sigma.clone()];
    let mut weights = Vec::with_capacity(nodes);
    for (x, w) in gx.iter().zip(&gw) {
        // map [-1, 1] to [z, 0]
        let s = z / 2.0 * (1.0 - x);
        let (sx, sy) = sigma_gradient_at(tr, grid, s);
        coefs.push(sx);
        coefs.push(sy);
        weights.push(w * (-z) / 2.0);
    }
    VariableSymbol::new(0, coefs, move |v, a, b| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (q, w) in weights.iter().enumerate() {
            acc += eta_value(&p, v[0], v[1 + 2 * q], v[2 + 2 * q], a, b, 1.0) * *w;
        }
        (-acc).exp()
    })
}

/// Approximate extension `sigma_app(x, z, D) u` at every level.
pub fn approximate_extension(ctx: &DNContext, u: &SurfaceField, nodes: usize) -> Result<StripField> {
    let g = ctx.grid();
    let mut out = StripField::zeros(g);
    let n = g.len();
    for l in 0..g.nz {
        let z = g.cheb.z[l];
        let lvl = if z == 0.0 {
            // exact at the surface
            let mut s = forward(g, u);
            for (k, v) in s.iter_mut().enumerate() {
                if g.is_nyquist(k) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            spectral::inverse_real(g, s)
        } else {
            op_eps(g, &sigma_app_symbol(&ctx.transform, g, z, nodes), u, &ctx.params)?
        };
        out.data[l * n..(l + 1) * n].copy_from_slice(&lvl.data);
    }
    Ok(out)
}

/// Relative strip energy distance between the true and the approximate
/// extension of `u`.
pub fn extension_gap(ctx: &DNContext, u: &SurfaceField, nodes: usize) -> Result<f64> {
    let exact = dirichlet_extension(ctx, u)?;
    let approx = approximate_extension(ctx, u, nodes)?;
    let diff = StripField {
        nx: exact.nx,
        ny: exact.ny,
        nz: exact.nz,
        data: exact.data.iter().zip(&approx.data).map(|(a, b)| a - b).collect(),
    };
    let s = ctx.solver();
    let num = s.energy_form(&ctx.transform, &diff, &diff);
    let den = s.energy_form(&ctx.transform, &exact, &exact);
    Ok((num / den).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn std_setup(nx: usize, ny: usize, nz: usize, eps: f64) -> (SpectralGrid, ScaleParams, DnFactory) {
        let g = SpectralGrid::new(2.0 * PI, 2.0 * PI, nx, ny, nz).unwrap();
        let p = ScaleParams::standard(eps, 0.5).unwrap();
        let f = DnFactory::flat_bottom(&g, &p).unwrap();
        (g, p, f)
    }

    #[test]
    fn flat_surface_is_the_multiplier() {
        let (g, p, f) = std_setup(16, 8, 12, 0.1);
        let ctx = f.context(&SurfaceField::zeros(&g)).unwrap();
        let psi = SurfaceField::from_fn(&g, |x, y| x.cos() + 0.5 * (2.0 * x + y).sin());
        let r = dn_apply_report(&ctx, &psi).unwrap();
        assert_eq!(r.iterations, 0);
        let m = spectral::flat_dn_symbol(&p);
        let want = spectral::apply_real(&g, &psi, &m);
        assert!((&r.value - &want).max_abs() < 1e-13);
        // cos x: sqrt(mu) tanh(sqrt(mu))
        let one = dn_apply(&ctx, &SurfaceField::from_fn(&g, |x, _| x.cos())).unwrap();
        let k = 0.1f64.sqrt();
        assert!((one.at(0, 0) - k * k.tanh()).abs() < 1e-13);
        assert!(dn_apply(&ctx, &SurfaceField::constant(&g, 3.0)).unwrap().max_abs() < 1e-14);
    }

    // Phi = cos(x) cosh(sqrt(mu)(z+1)) is harmonic over a flat bottom for any
    // surface, so both psi and G psi are known in closed form.
    #[test]
    fn matches_exact_harmonic_function() {
        let (g, p, f) = std_setup(48, 8, 20, 0.1);
        let (e, mu) = (p.epsilon, p.mu);
        let k = mu.sqrt();
        let zeta = SurfaceField::from_fn(&g, |x, y| 0.8 * x.sin() + 0.4 * y.cos());
        let zx = SurfaceField::from_fn(&g, |x, _| 0.8 * x.cos());
        let ctx = f.context(&zeta).unwrap();
        let psi = SurfaceField::from_fn(&g, |x, _| x).zip(&zeta, |x, z| x.cos() * (k * (e * z + 1.0)).cosh());
        let mut exact = SurfaceField::zeros(&g);
        for p_ in 0..g.len() {
            let x = g.x(p_ / g.ny);
            let z = e * zeta.data[p_];
            let phi_z = x.cos() * k * (k * (z + 1.0)).sinh();
            let phi_x = -x.sin() * (k * (z + 1.0)).cosh();
            exact.data[p_] = phi_z - mu * e * zx.data[p_] * phi_x;
        }
        let r = dn_apply_report(&ctx, &psi).unwrap();
        assert!(r.iterations > 0);
        let err = (&r.value - &exact).max_abs() / exact.max_abs();
        assert!(err < 1e-8, "relative error {err}");
        assert!(r.flux_imbalance.abs() < 1e-8);
    }

    #[test]
    fn self_adjoint_and_nonnegative() {
        let (g, _, f) = std_setup(16, 8, 12, 0.3);
        let zeta = SurfaceField::from_fn(&g, |x, y| (x + y).sin() - 0.5 * (2.0 * x).cos());
        let ctx = f.context(&zeta).unwrap();
        let u = SurfaceField::from_fn(&g, |x, y| (3.0 * x).sin() + y.cos());
        let v = SurfaceField::from_fn(&g, |x, y| (x - y).cos() + 0.2 * (2.0 * y).sin());
        let a = spectral::inner(&g, &dn_apply(&ctx, &u).unwrap(), &v);
        let b = spectral::inner(&g, &u, &dn_apply(&ctx, &v).unwrap());
        assert!((a - b).abs() < 1e-7 * a.abs().max(1.0), "{a} {b}");
        assert!(spectral::inner(&g, &dn_apply(&ctx, &u).unwrap(), &u) > 0.0);
    }

    #[test]
    fn shape_derivative_matches_finite_difference() {
        let (g, _, f) = std_setup(32, 16, 14, 0.3);
        let zeta = SurfaceField::from_fn(&g, |x, y| 0.7 * x.sin() + 0.3 * (x + y).cos());
        let psi = SurfaceField::from_fn(&g, |x, y| (2.0 * x).cos() + 0.5 * y.sin());
        let h = SurfaceField::from_fn(&g, |x, y| (x - y).cos());
        let ctx = f.context(&zeta).unwrap();
        let d = dn_shape_derivative(&ctx, &psi, &h).unwrap();
        let t = 1e-4;
        let gp = dn_apply(&f.context(&(&zeta + &(&h * t))).unwrap(), &psi).unwrap();
        let gm = dn_apply(&f.context(&(&zeta - &(&h * t))).unwrap(), &psi).unwrap();
        let fd = &(&gp - &gm) * (0.5 / t);
        let err = (&fd - &d).max_abs() / d.max_abs();
        assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn d_eps_on_flat_is_minus_laplacian() {
        let (g, p, _) = std_setup(16, 8, 4, 0.2);
        let f = SurfaceField::from_fn(&g, |x, y| (2.0 * x + y).sin());
        let out = d_eps_apply(&g, &SurfaceField::zeros(&g), &f, 2, &p);
        let lam = 4.0 + p.gamma * p.gamma;
        assert!((&out - &(&f * (lam * lam))).max_abs() < 1e-11);
    }

    #[test]
    fn d_eps_symbol_for_linear_slope_direction() {
        // a = sin x: on f = cos(3y) the correction vanishes since grad a is along x
        let (g, p, _) = std_setup(16, 8, 4, 0.2);
        let a = SurfaceField::from_fn(&g, |x, _| x.sin());
        let f = SurfaceField::from_fn(&g, |_, y| (3.0 * y).cos());
        let out = d_eps_apply(&g, &a, &f, 1, &p);
        let lam = 9.0 * p.gamma * p.gamma;
        assert!((&out - &(&f * lam)).max_abs() < 1e-11);
        // on f = cos(2x) it is (4 - w a_x^2 4 / rho^2) f
        let f = SurfaceField::from_fn(&g, |x, _| (2.0 * x).cos());
        let out = d_eps_apply(&g, &a, &f, 1, &p);
        let w = p.slope_weight();
        let want = SurfaceField::from_fn(&g, |x, _| {
            let ax = x.cos();
            (4.0 - w * ax * ax * 4.0 / (1.0 + w * ax * ax)) * (2.0 * x).cos()
        });
        assert!((&out - &want).max_abs() < 1e-11);
    }

    #[test]
    fn principal_part_on_flat_surface() {
        let (g, p, f) = std_setup(16, 8, 8, 0.1);
        let ctx = f.context(&SurfaceField::zeros(&g)).unwrap();
        let u = SurfaceField::from_fn(&g, |x, y| (2.0 * x).cos() + y.sin());
        let out = dn_principal(&ctx, &u).unwrap();
        let abs = spectral::abs_scaled(&p);
        let mu = p.mu.sqrt();
        let want = spectral::apply_real(&g, &u, |a, b| mu * abs(a, b));
        assert!((&out - &want).max_abs() < 1e-12);
        assert!(principal_radicand_min(&ctx) >= 1.0 - 1e-15);
    }

    #[test]
    fn commutators_vanish_on_flat_surface() {
        let (g, _, f) = std_setup(16, 8, 8, 0.1);
        let ctx = f.context(&SurfaceField::zeros(&g)).unwrap();
        let u = SurfaceField::from_fn(&g, |x, y| (2.0 * x).cos() + y.sin());
        for kind in [CommutatorKind::Raw, CommutatorKind::RhoWeighted] {
            let r = commutator_diagnostic(&ctx, &u, 1, kind, 0.0).unwrap();
            assert!(r.norm < 1e-12, "{kind:?} {}", r.norm);
            assert!(r.budget > 0.0);
        }
        let t = dn_time_commutator(&ctx, &ctx, 0.1, &u).unwrap();
        assert_eq!(t.value, 0.0);
        assert_eq!(t.ratio, 0.0);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(6);
        let int = |f: &dyn Fn(f64) -> f64| x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum::<f64>();
        assert!((int(&|_| 1.0) - 2.0).abs() < 1e-14);
        assert!((int(&|t| t.powi(10)) - 2.0 / 11.0).abs() < 1e-14);
        assert!(int(&|t| t.powi(7)).abs() < 1e-14);
    }

    #[test]
    fn approximate_extension_is_exact_when_flat() {
        let (g, _, f) = std_setup(16, 8, 10, 0.1);
        let ctx = f.context(&SurfaceField::zeros(&g)).unwrap();
        let u = SurfaceField::from_fn(&g, |x, y| x.cos() + (x + y).sin());
        // flat: sigma_app = exp(z sqrt(mu)|xi|), the infinite-depth profile
        let ext = approximate_extension(&ctx, &u, 8).unwrap();
        let n = g.len();
        let z = g.cheb.z[3];
        let k = ctx.params.mu.sqrt();
        let kk = k * (1.0 + ctx.params.gamma.powi(2)).sqrt();
        for p_ in [0, 37, 90] {
            let (x, y) = (g.x(p_ / g.ny), g.y(p_ % g.ny));
            let expect = (z * k).exp() * x.cos() + (z * kk).exp() * (x + y).sin();
            assert!((ext.data[3 * n + p_] - expect).abs() < 1e-12);
        }
        let gap = extension_gap(&ctx, &u, 8).unwrap();
        assert!(gap.is_finite() && gap > 0.0);
    }
}
