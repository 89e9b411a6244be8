//! Variable-coefficient elliptic solver on the flattened strip.
//!
//! The unknown `w` lives on the collocation grid. Rows of the discrete
//! operator are: the Dirichlet condition at the surface level, the
//! divergence of the flux `(I + Q) grad_s w` at interior levels, and the
//! vertical flux component at the bottom level. The system is solved by
//! GMRES, left-preconditioned with the exact inverse of the `Q = 0`
//! operator, which is block diagonal in horizontal Fourier modes.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{StripField, SurfaceField};
use crate::grid::SpectralGrid;
use crate::params::ScaleParams;
use crate::spectral::{gradient_from_spectrum, split_pair, Spectrum};
use crate::strip::StripTransform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative preconditioned residual target.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 300,
            restart: 40,
        }
    }
}

/// Grid, parameters and the precomputed flat inverses. Shared by every
/// transform built on the same grid.
#[derive(Debug, Clone)]
pub struct StripSolver {
    pub grid: SpectralGrid,
    pub params: ScaleParams,
    pub opts: SolverOptions,
    flat_inv: Vec<f64>,
    d2: Vec<f64>,
}

/// Source terms of `div_s (I + Q) grad_s u = f + div_s g` with `u = 0` at the
/// surface and `-e3 . ((I + Q) grad_s u - g) = neumann` at the bottom.
#[derive(Debug, Clone)]
pub struct EllipticProblem<'a> {
    pub transform: &'a StripTransform,
    pub f: Option<StripField>,
    pub g_vec: Option<[StripField; 3]>,
    pub neumann: Option<SurfaceField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipticKind {
    /// Divergence-form source only; the bottom datum is `-e3 . g`.
    DirichletZeroDivForm,
    /// Interior source, optional divergence-form source and a bottom
    /// conormal datum.
    GeneralSource,
}

#[derive(Debug, Clone)]
pub struct EllipticSolution {
    pub u: StripField,
    pub iterations: usize,
    /// Relative preconditioned residual reached by the iteration.
    pub residual: f64,
    /// Relative residual of the unpreconditioned collocation equations.
    pub strong_residual: f64,
}

impl StripSolver {
    pub fn new(grid: &SpectralGrid, params: &ScaleParams, opts: SolverOptions) -> Result<Self> {
        params.validate()?;
        let nz = grid.nz;
        let d1 = &grid.cheb.d1;
        let mut d2 = vec![0.0; nz * nz];
        for i in 0..nz {
            for j in 0..nz {
                d2[i * nz + j] = (0..nz).map(|k| d1[i * nz + k] * d1[k * nz + j]).sum();
            }
        }
        let (cx, cy) = (grid.nx / 2 + 1, grid.ny / 2 + 1);
        let (a, c) = (params.a(), params.c());
        let mut flat_inv = vec![0.0; cx * cy * nz * nz];
        for i in 0..cx {
            for j in 0..cy {
                let lam = a * a * grid.kxd[i] * grid.kxd[i] + c * c * grid.kyd[j] * grid.kyd[j];
                let m = DMatrix::from_fn(nz, nz, |r, s| {
                    if r == 0 {
                        if s == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else if r == nz - 1 {
                        d1[r * nz + s]
                    } else {
                        d2[r * nz + s] - if r == s { lam } else { 0.0 }
                    }
                });
                let inv = m
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidParams("singular flat operator".into()))?;
                let dst = &mut flat_inv[(i * cy + j) * nz * nz..(i * cy + j + 1) * nz * nz];
                for r in 0..nz {
                    for s in 0..nz {
                        dst[r * nz + s] = inv[(r, s)];
                    }
                }
            }
        }
        Ok(StripSolver {
            grid: grid.clone(),
            params: *params,
            opts,
            flat_inv,
            d2,
        })
    }

    /// `d^2/dz^2` collocation matrix, row-major.
    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    fn class(&self, n: usize) -> usize {
        let g = &self.grid;
        let (i, j) = (n / g.ny, n % g.ny);
        i.min(g.nx - i) * (g.ny / 2 + 1) + j.min(g.ny - j)
    }

    /// Spectra of every level, two levels per transform.
    pub(crate) fn level_spectra(&self, w: &[f64], levels: std::ops::Range<usize>) -> Vec<Spectrum> {
        let n = self.grid.len();
        let ls: Vec<usize> = levels.collect();
        let mut out = Vec::with_capacity(ls.len());
        for pair in ls.chunks(2) {
            let a = &w[pair[0] * n..(pair[0] + 1) * n];
            if pair.len() == 2 {
                let b = &w[pair[1] * n..(pair[1] + 1) * n];
                let mut z: Spectrum = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
                self.grid.fft.forward(&mut z);
                let (sa, sb) = split_pair(&self.grid, &z);
                out.push(sa);
                out.push(sb);
            } else {
                let mut z: Spectrum = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                self.grid.fft.forward(&mut z);
                out.push(z);
            }
        }
        out
    }

    /// Inverse transforms of Hermitian level spectra into `dst` levels.
    pub(crate) fn levels_from_spectra(&self, specs: &[Spectrum], dst: &mut [f64], first: usize) {
        let n = self.grid.len();
        let mut l = 0;
        while l < specs.len() {
            if l + 1 < specs.len() {
                let mut z: Spectrum = specs[l]
                    .iter()
                    .zip(&specs[l + 1])
                    .map(|(x, y)| x + Complex64::new(-y.im, y.re))
                    .collect();
                self.grid.fft.inverse(&mut z);
                let (d0, d1) = dst[(first + l) * n..(first + l + 2) * n].split_at_mut(n);
                for k in 0..n {
                    d0[k] = z[k].re;
                    d1[k] = z[k].im;
                }
                l += 2;
            } else {
                let mut z = specs[l].clone();
                self.grid.fft.inverse(&mut z);
                for k in 0..n {
                    dst[(first + l) * n + k] = z[k].re;
                }
                l += 1;
            }
        }
    }

    /// `(a d_x w, c d_y w)` at every level.
    pub(crate) fn horizontal_gradient(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.len();
        let nz = self.grid.nz;
        let specs = self.level_spectra(w, 0..nz);
        let mut gx = vec![0.0; nz * n];
        let mut gy = vec![0.0; nz * n];
        for (l, s) in specs.iter().enumerate() {
            let (fx, fy) = gradient_from_spectrum(&self.grid, s, self.params.a(), self.params.c());
            gx[l * n..(l + 1) * n].copy_from_slice(&fx.data);
            gy[l * n..(l + 1) * n].copy_from_slice(&fy.data);
        }
        (gx, gy)
    }

    pub(crate) fn dz(&self, w: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let nz = self.grid.nz;
        let d = &self.grid.cheb.d1;
        let mut out = vec![0.0; nz * n];
        for l in 0..nz {
            let dst = &mut out[l * n..(l + 1) * n];
            for m in 0..nz {
                let c = d[l * nz + m];
                let src = &w[m * n..(m + 1) * n];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
        }
        out
    }

    /// Flux `(I + Q) grad_s w` from precomputed derivatives.
    pub(crate) fn flux(&self, tr: &StripTransform, gx: &[f64], gy: &[f64], wz: &[f64]) -> [Vec<f64>; 3] {
        let n = self.grid.len();
        let len = gx.len();
        let mut f1 = vec![0.0; len];
        let mut f2 = vec![0.0; len];
        let mut f3 = vec![0.0; len];
        for k in 0..len {
            let p = k % n;
            let q11 = tr.q11.data[p];
            let (q13, q23, q33) = (tr.q13.data[k], tr.q23.data[k], tr.q33.data[k]);
            f1[k] = (1.0 + q11) * gx[k] + q13 * wz[k];
            f2[k] = (1.0 + q11) * gy[k] + q23 * wz[k];
            f3[k] = q13 * gx[k] + q23 * gy[k] + (1.0 + q33) * wz[k];
        }
        [f1, f2, f3]
    }

    /// Collocation rows for a flux field: divergence at interior levels,
    /// vertical component at the bottom, `top` at the surface.
    pub(crate) fn assemble(&self, flux: &[Vec<f64>; 3], top: Option<&[f64]>) -> Vec<f64> {
        let n = self.grid.len();
        let nz = self.grid.nz;
        let ny = self.grid.ny;
        let (a, c) = (self.params.a(), self.params.c());
        let mut out = vec![0.0; nz * n];
        let mut specs = Vec::with_capacity(nz - 2);
        for l in 1..nz - 1 {
            let mut z: Spectrum = flux[0][l * n..(l + 1) * n]
                .iter()
                .zip(&flux[1][l * n..(l + 1) * n])
                .map(|(&x, &y)| Complex64::new(x, y))
                .collect();
            self.grid.fft.forward(&mut z);
            let (s1, s2) = split_pair(&self.grid, &z);
            let d: Spectrum = (0..n)
                .map(|k| {
                    let v = s1[k] * (a * self.grid.kxd[k / ny]) + s2[k] * (c * self.grid.kyd[k % ny]);
                    Complex64::new(-v.im, v.re)
                })
                .collect();
            specs.push(d);
        }
        self.levels_from_spectra(&specs, &mut out, 1);
        let d = &self.grid.cheb.d1;
        let f3 = &flux[2];
        for l in 1..nz - 1 {
            let dst = &mut out[l * n..(l + 1) * n];
            for m in 0..nz {
                let cf = d[l * nz + m];
                let src = &f3[m * n..(m + 1) * n];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += cf * s;
                }
            }
        }
        out[(nz - 1) * n..].copy_from_slice(&f3[(nz - 1) * n..]);
        if let Some(t) = top {
            out[..n].copy_from_slice(t);
        }
        out
    }

    /// The discrete operator applied to `w`.
    pub fn apply_operator(&self, tr: &StripTransform, w: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let (gx, gy) = self.horizontal_gradient(w);
        let wz = self.dz(w);
        let flux = self.flux(tr, &gx, &gy, &wz);
        self.assemble(&flux, Some(&w[..n]))
    }

    /// Exact inverse of the `Q = 0` operator.
    pub fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let nz = self.grid.nz;
        let mut specs = self.level_spectra(r, 0..nz);
        let mut col = vec![Complex64::new(0.0, 0.0); nz];
        for k in 0..n {
            let m = &self.flat_inv[self.class(k) * nz * nz..(self.class(k) + 1) * nz * nz];
            for (c, s) in col.iter_mut().zip(&specs) {
                *c = s[k];
            }
            for l in 0..nz {
                let row = &m[l * nz..(l + 1) * nz];
                let mut acc = Complex64::new(0.0, 0.0);
                for (cf, v) in row.iter().zip(&col) {
                    acc += v * *cf;
                }
                specs[l][k] = acc;
            }
        }
        let mut out = vec![0.0; nz * n];
        self.levels_from_spectra(&specs, &mut out, 0);
        out
    }

    /// Solve `A w = rhs` for an already assembled right-hand side.
    pub fn solve_rows(&self, tr: &StripTransform, rhs: &[f64], x0: Option<Vec<f64>>) -> Result<(Vec<f64>, usize, f64)> {
        let pb = self.precondition(rhs);
        let op = |v: &[f64]| self.precondition(&self.apply_operator(tr, v));
        let out = gmres(op, &pb, x0, self.opts.tol, self.opts.restart, self.opts.max_iter);
        if !out.converged {
            return Err(Error::NonConvergence {
                iterations: out.iterations,
                residual: out.residual,
            });
        }
        Ok((out.x, out.iterations, out.residual))
    }

    /// Right-hand side rows for a problem.
    pub fn problem_rows(&self, problem: &EllipticProblem) -> Result<Vec<f64>> {
        let n = self.grid.len();
        let nz = self.grid.nz;
        let mut rows = match &problem.g_vec {
            Some(g) => {
                for c in g {
                    c.check(&self.grid)?;
                }
                self.assemble(&[g[0].data.clone(), g[1].data.clone(), g[2].data.clone()], None)
            }
            None => vec![0.0; nz * n],
        };
        if let Some(f) = &problem.f {
            f.check(&self.grid)?;
            for l in 1..nz - 1 {
                for (r, v) in rows[l * n..(l + 1) * n].iter_mut().zip(&f.data[l * n..(l + 1) * n]) {
                    *r += v;
                }
            }
        }
        if let Some(h) = &problem.neumann {
            h.check(&self.grid)?;
            for (k, v) in h.data.iter().enumerate() {
                rows[(nz - 1) * n + k] -= v;
            }
        }
        for v in rows[..n].iter_mut() {
            *v = 0.0;
        }
        Ok(rows)
    }

    /// Solve one of the strip problems with a homogeneous surface condition.
    pub fn solve_elliptic(&self, problem: &EllipticProblem, kind: EllipticKind) -> Result<EllipticSolution> {
        if kind == EllipticKind::DirichletZeroDivForm && (problem.f.is_some() || problem.neumann.is_some()) {
            return Err(Error::InvalidParams(
                "divergence-form problem takes only the vector source".into(),
            ));
        }
        let tr = problem.transform;
        tr.q13.check(&self.grid)?;
        let rows = self.problem_rows(problem)?;
        let (w, iterations, residual) = self.solve_rows(tr, &rows, None)?;
        let aw = self.apply_operator(tr, &w);
        let rn = norm(&rows);
        let diff: Vec<f64> = aw.iter().zip(&rows).map(|(a, b)| a - b).collect();
        let strong_residual = if rn > 0.0 { norm(&diff) / rn } else { norm(&diff) };
        Ok(EllipticSolution {
            u: StripField {
                nx: self.grid.nx,
                ny: self.grid.ny,
                nz: self.grid.nz,
                data: w,
            },
            iterations,
            residual,
            strong_residual,
        })
    }

    /// Scaled strip gradient `(a d_x u, c d_y u, d_z u)`.
    pub fn strip_gradient(&self, u: &StripField) -> [StripField; 3] {
        let (gx, gy) = self.horizontal_gradient(&u.data);
        let gz = self.dz(&u.data);
        let wrap = |data| StripField {
            nx: u.nx,
            ny: u.ny,
            nz: u.nz,
            data,
        };
        [wrap(gx), wrap(gy), wrap(gz)]
    }

    /// `int (I + Q) grad_s u . grad_s v` over the strip (trapezoid
    /// horizontally, Clenshaw–Curtis vertically).
    pub fn energy_form(&self, tr: &StripTransform, u: &StripField, v: &StripField) -> f64 {
        let gu = self.strip_gradient(u);
        let gv = self.strip_gradient(v);
        let fu = self.flux(tr, &gu[0].data, &gu[1].data, &gu[2].data);
        self.integrate(|k| fu[0][k] * gv[0].data[k] + fu[1][k] * gv[1].data[k] + fu[2][k] * gv[2].data[k])
    }

    /// Quadrature of a pointwise strip integrand given by flat index.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let n = self.grid.len();
        let w = &self.grid.cheb.weights;
        let mut acc = 0.0;
        for (l, wl) in w.iter().enumerate() {
            let mut s = 0.0;
            for k in l * n..(l + 1) * n {
                s += f(k);
            }
            acc += wl * s;
        }
        acc * self.grid.cell_area()
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations.
pub(crate) fn gmres(
    op: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<Vec<f64>>,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let len = b.len();
    let bnorm = norm(b);
    let mut x = x0.unwrap_or_else(|| vec![0.0; len]);
    if bnorm == 0.0 {
        return GmresOutcome {
            x: vec![0.0; len],
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut iterations = 0;
    let mut residual;
    loop {
        let r: Vec<f64> = if x.iter().all(|v| *v == 0.0) {
            b.to_vec()
        } else {
            let ax = op(&x);
            b.iter().zip(&ax).map(|(p, q)| p - q).collect()
        };
        let beta = norm(&r);
        residual = beta / bnorm;
        if residual <= tol || iterations >= max_iter {
            return GmresOutcome {
                x,
                iterations,
                residual,
                converged: residual <= tol,
            };
        }
        let m = restart.min(max_iter - iterations).max(1);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            let mut w = op(&v[j]);
            iterations += 1;
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let den = (h[j][j] * h[j][j] + hn * hn).sqrt();
            if den == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / den;
                sn[j] = hn / den;
            }
            h[j][j] = den;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            residual = g[j + 1].abs() / bnorm;
            if residual <= tol || hn <= 1e-300 || iterations >= max_iter {
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (i, yi) in y.iter().enumerate() {
            for (xk, vk) in x.iter_mut().zip(&v[i]) {
                *xk += yi * vk;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gmres_solves_small_system() {
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        let op = |v: &[f64]| (0..3).map(|i| (0..3).map(|j| a[i][j] * v[j]).sum()).collect();
        let b = [1.0, 2.0, 3.0];
        let out = gmres(op, &b, None, 1e-14, 2, 50);
        assert!(out.converged);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i][j] * out.x[j]).sum();
            assert!((r - b[i]).abs() < 1e-12);
        }
    }

    use crate::strip::build_transform;
    use std::f64::consts::PI;

    type C = Complex64;

    fn setup(nx: usize, nz: usize, eps: f64) -> (SpectralGrid, ScaleParams, StripSolver) {
        let g = SpectralGrid::new(2.0 * PI, 2.0 * PI, nx, 8, nz).unwrap();
        let p = ScaleParams::standard(eps, 0.5).unwrap();
        let s = StripSolver::new(&g, &p, SolverOptions::default()).unwrap();
        (g, p, s)
    }

    /// Manufactured data for `u = (1 - cos(m z)) sin x` under `zeta = amp sin x`.
    fn manufactured(g: &SpectralGrid, p: &ScaleParams, amp: f64, m: f64) -> (StripField, StripField, SurfaceField) {
        let a = p.a();
        let e = p.epsilon;
        let flux = move |x: C, z: C| -> (C, C) {
            let u_x = (C::new(1.0, 0.0) - (z * m).cos()) * x.cos();
            let u_z = (z * m).sin() * m * x.sin();
            let sz = x.sin() * (e * amp);
            let sx = (z + 1.0) * x.cos() * (e * amp);
            let f1 = (sz + 1.0) * u_x * a - sx * u_z * a;
            let f3 = -sx * u_x * (a * a) + (sx * sx * (a * a) + 1.0) / (sz + 1.0) * u_z;
            (f1, f3)
        };
        let h = 1e-30;
        let f = StripField::from_fn(g, |x, _, z| {
            let d1 = flux(C::new(x, h), C::new(z, 0.0)).0.im / h;
            let d3 = flux(C::new(x, 0.0), C::new(z, h)).1.im / h;
            a * d1 + d3
        });
        let neumann = SurfaceField::from_fn(g, |x, _| -flux(C::new(x, 0.0), C::new(-1.0, 0.0)).1.re);
        let exact = StripField::from_fn(g, |x, _, z| (1.0 - (m * z).cos()) * x.sin());
        (f, exact, neumann)
    }

    fn rel_err(a: &StripField, b: &StripField) -> f64 {
        let d: Vec<f64> = a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
        d.iter().fold(0.0f64, |m, v| m.max(v.abs())) / b.max_abs()
    }

    #[test]
    fn manufactured_flat() {
        let (g, p, s) = setup(16, 16, 0.1);
        let z0 = SurfaceField::zeros(&g);
        let tr = build_transform(&z0, &z0, &p, &g).unwrap();
        let (f, exact, neumann) = manufactured(&g, &p, 0.0, PI);
        let prob = EllipticProblem {
            transform: &tr,
            f: Some(f),
            g_vec: None,
            neumann: Some(neumann),
        };
        let sol = s.solve_elliptic(&prob, EllipticKind::GeneralSource).unwrap();
        assert!(sol.iterations <= 2);
        assert!(rel_err(&sol.u, &exact) < 1e-10);
        assert!(sol.strong_residual < 1e-9);
    }

    #[test]
    fn manufactured_variable_coefficients() {
        let (g, p, s) = setup(32, 18, 0.1);
        let zeta = SurfaceField::from_fn(&g, |x, _| 0.5 * x.sin());
        let tr = build_transform(&zeta, &SurfaceField::zeros(&g), &p, &g).unwrap();
        let (f, exact, neumann) = manufactured(&g, &p, 0.5, PI);
        let prob = EllipticProblem {
            transform: &tr,
            f: Some(f),
            g_vec: None,
            neumann: Some(neumann),
        };
        let sol = s.solve_elliptic(&prob, EllipticKind::GeneralSource).unwrap();
        assert!(sol.iterations > 0);
        assert!(rel_err(&sol.u, &exact) < 1e-9, "{}", rel_err(&sol.u, &exact));
    }

    #[test]
    fn vertical_resolution_converges() {
        let mut errs = Vec::new();
        for nz in [12, 24] {
            let (g, p, s) = setup(16, nz, 0.1);
            let zeta = SurfaceField::from_fn(&g, |x, _| 0.5 * x.sin());
            let tr = build_transform(&zeta, &SurfaceField::zeros(&g), &p, &g).unwrap();
            let (f, exact, neumann) = manufactured(&g, &p, 0.5, 12.0);
            let prob = EllipticProblem {
                transform: &tr,
                f: Some(f),
                g_vec: None,
                neumann: Some(neumann),
            };
            let sol = s.solve_elliptic(&prob, EllipticKind::GeneralSource).unwrap();
            errs.push(rel_err(&sol.u, &exact));
        }
        assert!(errs[0] / errs[1] > 10.0, "{errs:?}");
    }

    #[test]
    fn energy_form_quadrature() {
        let (g, p, s) = setup(16, 16, 0.1);
        let z0 = SurfaceField::zeros(&g);
        let tr = build_transform(&z0, &z0, &p, &g).unwrap();
        let u = StripField::from_fn(&g, |x, _, z| (1.0 - (PI * z).cos()) * x.sin());
        let want = 2.0 * PI * PI * (p.mu * 1.5 + PI * PI / 2.0);
        assert!((s.energy_form(&tr, &u, &u) - want).abs() < 1e-9 * want);
        // coercive and bounded for a moderate surface
        let zeta = SurfaceField::from_fn(&g, |x, y| x.sin() + 0.5 * y.cos());
        let tr = build_transform(&zeta, &z0, &p, &g).unwrap();
        let r = s.energy_form(&tr, &u, &u) / want;
        assert!(r > 0.5 && r < 2.0, "{r}");
    }

    #[test]
    fn divergence_form_rejects_other_sources() {
        let (g, p, s) = setup(8, 6, 0.1);
        let z0 = SurfaceField::zeros(&g);
        let tr = build_transform(&z0, &z0, &p, &g).unwrap();
        let prob = EllipticProblem {
            transform: &tr,
            f: Some(StripField::zeros(&g)),
            g_vec: None,
            neumann: None,
        };
        assert!(matches!(
            s.solve_elliptic(&prob, EllipticKind::DirichletZeroDivForm),
            Err(Error::InvalidParams(_))
        ));
    }
}
