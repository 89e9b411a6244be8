//! Linearization of the standard system about a reference state, the
//! trigonalized operator, its energy functionals and a linear integrator.
//!
//! Perturbations are pairs `(first, second)`: `(zeta, psi)` for `L` and
//! `V = (zeta, psi - eps Z zeta)` for `M`. Both operators are the spatial
//! parts, so the linear flows are `dU/dt = -L U` and `dV/dt = -M V + eps H`.

use crate::dn::{d_eps_apply, dn_apply, kinematics_from, shape_derivative_with, DNContext, DnFactory};
use crate::error::{Error, Result};
use crate::field::SurfaceField;
use crate::grid::SpectralGrid;
use crate::params::ScaleParams;
use crate::spectral::{self, forward, spectral_norm};

pub type Pair = (SurfaceField, SurfaceField);

/// Reference state with every derived coefficient of the linearized
/// operator.
#[derive(Debug, Clone)]
pub struct ReferenceState {
    pub zeta: SurfaceField,
    pub psi: SurfaceField,
    pub dt_zeta: SurfaceField,
    pub dt_psi: SurfaceField,
    pub z: SurfaceField,
    pub v: (SurfaceField, SurfaceField),
    pub dt_z: SurfaceField,
    pub a: SurfaceField,
    pub rho: SurfaceField,
    pub div_v: SurfaceField,
    pub grad_zeta: (SurfaceField, SurfaceField),
    pub ctx: DNContext,
}

impl ReferenceState {
    pub fn grid(&self) -> &SpectralGrid {
        self.ctx.grid()
    }

    pub fn params(&self) -> &ScaleParams {
        &self.ctx.params
    }

    fn eps(&self) -> f64 {
        self.ctx.params.epsilon
    }
}

fn dot(a: &(SurfaceField, SurfaceField), b: &(SurfaceField, SurfaceField)) -> SurfaceField {
    &(&a.0 * &b.0) + &(&a.1 * &b.1)
}

/// Assemble a reference from `(zeta, psi)` and their time derivatives.
pub fn build_reference(
    factory: &DnFactory,
    zeta: &SurfaceField,
    psi: &SurfaceField,
    dt_zeta: &SurfaceField,
    dt_psi: &SurfaceField,
) -> Result<ReferenceState> {
    let params = *factory.params();
    if !params.is_standard() {
        return Err(Error::Unsupported("the linearized system is implemented for the standard scaling".into()));
    }
    let g = factory.grid();
    for f in [zeta, psi, dt_zeta, dt_psi] {
        f.check(g)?;
    }
    let e = params.epsilon;
    let ctx = factory.context(zeta)?;
    let g_psi = dn_apply(&ctx, psi)?;
    let kin = kinematics_from(&ctx, psi, g_psi.clone());
    let gz = spectral::scaled_gradient(g, zeta, &params);
    let gp = spectral::scaled_gradient(g, psi, &params);
    let gzt = spectral::scaled_gradient(g, dt_zeta, &params);
    let gpt = spectral::scaled_gradient(g, dt_psi, &params);

    // time derivative of Z = num / den through the shape derivative
    let dt_g = &dn_apply(&ctx, dt_psi)? + &shape_derivative_with(&ctx, &kin, dt_zeta)?;
    let dt_num = &dt_g + &(&(&dot(&gzt, &gp) + &dot(&gz, &gpt)) * (e * e));
    let den = dot(&gz, &gz).map(|s| 1.0 + e * e * e * s);
    let dt_den = &dot(&gz, &gzt) * (2.0 * e * e * e);
    let n = g.len();
    let dt_z = SurfaceField {
        nx: g.nx,
        ny: g.ny,
        data: (0..n)
            .map(|k| (dt_num.data[k] - kin.z.data[k] * dt_den.data[k]) / den.data[k])
            .collect(),
    };
    let grad_z = spectral::scaled_gradient(g, &kin.z, &params);
    let vgz = dot(&kin.v, &grad_z);
    let a = vgz.zip(&dt_z, |p, q| 1.0 + e * (e * p + q));
    let div_v = spectral::scaled_divergence(g, &kin.v.0, &kin.v.1, &params);
    Ok(ReferenceState {
        zeta: zeta.clone(),
        psi: psi.clone(),
        dt_zeta: dt_zeta.clone(),
        dt_psi: dt_psi.clone(),
        z: kin.z,
        v: kin.v,
        dt_z,
        a,
        rho: ctx.rho.clone(),
        div_v,
        grad_zeta: gz,
        ctx,
    })
}

/// Reference whose time derivatives are those of the nonlinear flow.
pub fn reference_on_flow(factory: &DnFactory, zeta: &SurfaceField, psi: &SurfaceField) -> Result<ReferenceState> {
    let state = crate::waterwave::SurfaceState {
        zeta: zeta.clone(),
        psi: psi.clone(),
        t: 0.0,
    };
    let config = crate::waterwave::EvolutionConfig {
        dealias: false,
        ..Default::default()
    };
    let (dz, dp) = crate::waterwave::rhs(&state, factory, &config)?;
    build_reference(factory, zeta, psi, &dz, &dp)
}

/// Frozen reference: zero time derivatives.
pub fn frozen_reference(factory: &DnFactory, zeta: &SurfaceField, psi: &SurfaceField) -> Result<ReferenceState> {
    let z = SurfaceField::zeros(factory.grid());
    build_reference(factory, zeta, psi, &z, &z)
}

/// `A f = div[grad f / rho - eps^3 grad zeta (grad zeta . grad f) / rho^3]`.
pub fn tension_operator(r: &ReferenceState, f: &SurfaceField) -> SurfaceField {
    let (fx, fy) = tension_flux(r, f);
    spectral::scaled_divergence(r.grid(), &fx, &fy, r.params())
}

fn tension_flux(r: &ReferenceState, f: &SurfaceField) -> (SurfaceField, SurfaceField) {
    let g = r.grid();
    let p = r.params();
    let e3 = p.epsilon.powi(3);
    let (fx, fy) = spectral::scaled_gradient(g, f, p);
    let (zx, zy) = &r.grad_zeta;
    let n = g.len();
    let mut ox = vec![0.0; n];
    let mut oy = vec![0.0; n];
    for k in 0..n {
        let rho = r.rho.data[k];
        let proj = zx.data[k] * fx.data[k] + zy.data[k] * fy.data[k];
        let r3 = rho * rho * rho;
        ox[k] = fx.data[k] / rho - e3 * zx.data[k] * proj / r3;
        oy[k] = fy.data[k] / rho - e3 * zy.data[k] * proj / r3;
    }
    let wrap = |d| SurfaceField { nx: g.nx, ny: g.ny, data: d };
    (wrap(ox), wrap(oy))
}

/// `(f, (1 - alpha eps A) h)` with the tension part integrated by parts.
pub fn tension_form(r: &ReferenceState, f: &SurfaceField, h: &SurfaceField) -> f64 {
    let g = r.grid();
    let p = r.params();
    let (fx, fy) = spectral::scaled_gradient(g, f, p);
    let (hx, hy) = tension_flux(r, h);
    let grad = spectral::inner(g, &fx, &hx) + spectral::inner(g, &fy, &hy);
    spectral::inner(g, f, h) + p.alpha * p.epsilon * grad
}

/// Spatial part of the linearized operator applied to `U = (zeta, psi)`.
pub fn apply_l(r: &ReferenceState, u: &Pair) -> Result<Pair> {
    let g = r.grid();
    let p = r.params();
    let e = r.eps();
    let (zeta, psi) = u;
    let gzz = dn_apply(&r.ctx, &(zeta * &r.z))?;
    let gpsi = dn_apply(&r.ctx, psi)?;
    let div = spectral::scaled_divergence(g, &(zeta * &r.v.0), &(zeta * &r.v.1), p);
    let first = SurfaceField {
        nx: g.nx,
        ny: g.ny,
        data: (0..g.len())
            .map(|k| gzz.data[k] + e * div.data[k] - gpsi.data[k] / e)
            .collect(),
    };
    let a_zeta = tension_operator(r, zeta);
    let vgp = dot(&r.v, &spectral::scaled_gradient(g, psi, p));
    let second = SurfaceField {
        nx: g.nx,
        ny: g.ny,
        data: (0..g.len())
            .map(|k| {
                let z = r.z.data[k];
                e * z * gzz.data[k] + (1.0 + e * e * z * r.div_v.data[k]) * zeta.data[k]
                    - p.alpha * e * a_zeta.data[k]
                    + e * vgp.data[k]
                    - z * gpsi.data[k]
            })
            .collect(),
    };
    Ok((first, second))
}

/// Spatial part of the trigonalized operator applied to `V`.
pub fn apply_m(r: &ReferenceState, v: &Pair) -> Result<Pair> {
    let g = r.grid();
    let p = r.params();
    let e = r.eps();
    let (v1, v2) = v;
    let div = spectral::scaled_divergence(g, &(v1 * &r.v.0), &(v1 * &r.v.1), p);
    let gv2 = dn_apply(&r.ctx, v2)?;
    let first = div.zip(&gv2, |d, q| e * d - q / e);
    let a_v1 = tension_operator(r, v1);
    let vgv = dot(&r.v, &spectral::scaled_gradient(g, v2, p));
    let second = SurfaceField {
        nx: g.nx,
        ny: g.ny,
        data: (0..g.len())
            .map(|k| r.a.data[k] * v1.data[k] - p.alpha * e * a_v1.data[k] + e * vgv.data[k])
            .collect(),
    };
    Ok((first, second))
}

/// `V = (U1, U2 - eps Z U1)`.
pub fn trigonalize(r: &ReferenceState, u: &Pair) -> Pair {
    let e = r.eps();
    (u.0.clone(), u.1.zip(&(&r.z * &u.0), |a, b| a - e * b))
}

/// Inverse of [`trigonalize`].
pub fn untrigonalize(r: &ReferenceState, v: &Pair) -> Pair {
    let e = r.eps();
    (v.0.clone(), v.1.zip(&(&r.z * &v.0), |a, b| a + e * b))
}

/// `(1 - Lap)^(s/2)` with the unscaled Laplacian.
fn lambda_pow(grid: &SpectralGrid, f: &SurfaceField, s: f64) -> SurfaceField {
    spectral::apply_real(grid, f, |kx, ky| (1.0 + kx * kx + ky * ky).powf(s / 2.0))
}

/// Squared energies. `low` and `high` are the two tiers of the
/// symmetrizer energy; `low_lower` is the `eps^2 |Lambda^{k-1} V2|^2` part
/// of `low`. `cmp_low` and `cmp_high` are the Sobolev comparison energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub low: f64,
    pub low_lower: f64,
    pub high: f64,
    pub cmp_low: f64,
    pub cmp_high: f64,
}

impl EnergyParts {
    pub fn combined(&self) -> f64 {
        self.low + self.high
    }

    pub fn comparison(&self) -> f64 {
        self.cmp_low + self.cmp_high
    }

    /// Combined energy without the lower-order `eps^2` term.
    pub fn symmetrizer(&self) -> f64 {
        self.low - self.low_lower + self.high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyTier {
    Low,
    High,
    Combined,
    Comparison,
}

struct EnergyCache {
    l1: SurfaceField,
    l2: SurfaceField,
    g_l2: SurfaceField,
    h1: SurfaceField,
    d2: SurfaceField,
    g_d2: SurfaceField,
}

fn high_first(r: &ReferenceState, v1: &SurfaceField, k: usize) -> SurfaceField {
    let g = r.grid();
    let w = d_eps_apply(g, &r.zeta, &v1.zip(&r.rho, |a, b| a / b), k, r.params());
    &w * &r.rho
}

fn energy_cache(r: &ReferenceState, v: &Pair, k: usize) -> Result<EnergyCache> {
    let g = r.grid();
    let e = r.eps();
    let l2 = lambda_pow(g, &v.1, k as f64);
    let d2 = d_eps_apply(g, &r.zeta, &v.1, k, r.params());
    Ok(EnergyCache {
        l1: lambda_pow(g, &v.0, k as f64),
        g_l2: &dn_apply(&r.ctx, &l2)? * (1.0 / e),
        l2,
        h1: high_first(r, &v.0, k),
        g_d2: &dn_apply(&r.ctx, &d2)? * (1.0 / e),
        d2,
    })
}

fn comparison(r: &ReferenceState, v: &Pair, k: usize) -> (f64, f64) {
    let g = r.grid();
    let p = r.params();
    let e = p.epsilon;
    let kf = k as f64;
    let g2 = p.gamma * p.gamma;
    let s1 = forward(g, &v.0);
    let s2 = forward(g, &v.1);
    let h = |t: f64| move |kx: f64, ky: f64| (1.0 + kx * kx + ky * ky).powf(t / 2.0);
    let he = |t: f64| move |kx: f64, ky: f64| (1.0 + kx * kx + g2 * ky * ky).powf(t / 2.0);
    let pois = spectral::poisson_symbol(p);
    let sq = |x: f64| x * x;
    let low = e * sq(spectral_norm(g, &s1, |a, b| (a * a + g2 * b * b).sqrt() * h(kf)(a, b)))
        + sq(spectral_norm(g, &s1, h(kf)))
        + sq(spectral_norm(g, &s2, |a, b| pois(a, b) * h(kf)(a, b)))
        + e * e * sq(spectral_norm(g, &s2, h(kf - 1.0)));
    let high = e * sq(spectral_norm(g, &s1, he(2.0 * kf + 1.0)))
        + sq(spectral_norm(g, &s1, he(2.0 * kf)))
        + sq(spectral_norm(g, &s2, |a, b| pois(a, b) * he(2.0 * kf)(a, b)));
    (low, high)
}

fn check_positive(value: f64, scale: f64) -> Result<f64> {
    if value < -1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NegativeEnergy(value));
    }
    Ok(value)
}

/// All energies of `V` with `k` powers of the weights.
pub fn energy_parts(r: &ReferenceState, v: &Pair, k: usize) -> Result<EnergyParts> {
    if k == 0 {
        return Err(Error::InvalidParams("energy order k must be >= 1".into()));
    }
    let g = r.grid();
    let e = r.eps();
    let c = energy_cache(r, v, k)?;
    let a1 = tension_form(r, &c.l1, &c.l1);
    let a2 = spectral::inner(g, &c.l2, &c.g_l2);
    let lower = e * e * spectral::l2_norm(g, &lambda_pow(g, &v.1, k as f64 - 1.0)).powi(2);
    let b1 = tension_form(r, &c.h1, &c.h1);
    let b2 = spectral::inner(g, &c.d2, &c.g_d2);
    let low = check_positive(a1 + a2 + lower, a1.abs() + a2.abs() + lower)?;
    let high = check_positive(b1 + b2, b1.abs() + b2.abs())?;
    let (cmp_low, cmp_high) = comparison(r, v, k);
    Ok(EnergyParts {
        low,
        low_lower: lower,
        high,
        cmp_low,
        cmp_high,
    })
}

/// One tier of the squared energy.
pub fn energy(r: &ReferenceState, v: &Pair, k: usize, tier: EnergyTier) -> Result<f64> {
    let p = energy_parts(r, v, k)?;
    Ok(match tier {
        EnergyTier::Low => p.low,
        EnergyTier::High => p.high,
        EnergyTier::Combined => p.combined(),
        EnergyTier::Comparison => p.comparison(),
    })
}

/// Energies of `V` together with the derivative of the combined energy
/// along `dV` with the coefficients frozen.
pub fn energy_and_rate(r: &ReferenceState, v: &Pair, dv: &Pair, k: usize) -> Result<(EnergyParts, f64)> {
    let parts = energy_parts(r, v, k)?;
    let g = r.grid();
    let e = r.eps();
    let c = energy_cache(r, v, k)?;
    let kf = k as f64;
    let dl1 = lambda_pow(g, &dv.0, kf);
    let dl2 = lambda_pow(g, &dv.1, kf);
    let dh1 = high_first(r, &dv.0, k);
    let dd2 = d_eps_apply(g, &r.zeta, &dv.1, k, r.params());
    let lower = e * e * spectral::inner(g, &lambda_pow(g, &dv.1, kf - 1.0), &lambda_pow(g, &v.1, kf - 1.0));
    let half = tension_form(r, &dl1, &c.l1)
        + spectral::inner(g, &dl2, &c.g_l2)
        + lower
        + tension_form(r, &dh1, &c.h1)
        + spectral::inner(g, &dd2, &c.g_d2);
    Ok((parts, 2.0 * half))
}

/// `|U|_{X^s}`.
pub fn x_norm(grid: &SpectralGrid, params: &ScaleParams, u: &Pair, s: f64) -> f64 {
    let ps = forward(grid, &u.1);
    let tail = params.epsilon * spectral_norm(grid, &ps, |kx, ky| (1.0 + kx * kx + ky * ky).powf((s - 1.0) / 2.0));
    spectral::state_seminorm(grid, &u.0, &u.1, s, params) + tail
}

/// A reference state in time.
#[derive(Debug, Clone)]
pub enum ReferenceTrajectory {
    Frozen(Box<ReferenceState>),
    /// Snapshots `(t, zeta, psi, dt_zeta, dt_psi)` interpolated linearly.
    Sampled {
        factory: DnFactory,
        samples: Vec<(f64, SurfaceField, SurfaceField, SurfaceField, SurfaceField)>,
    },
}

impl ReferenceTrajectory {
    pub fn at(&self, t: f64) -> Result<ReferenceState> {
        match self {
            ReferenceTrajectory::Frozen(r) => Ok((**r).clone()),
            ReferenceTrajectory::Sampled { factory, samples } => {
                if samples.is_empty() {
                    return Err(Error::InvalidParams("empty reference trajectory".into()));
                }
                let i = samples.partition_point(|s| s.0 <= t).clamp(1, samples.len().max(2) - 1);
                if samples.len() == 1 {
                    let s = &samples[0];
                    return build_reference(factory, &s.1, &s.2, &s.3, &s.4);
                }
                let (a, b) = (&samples[i - 1], &samples[i]);
                let w = ((t - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
                let mix = |x: &SurfaceField, y: &SurfaceField| x.zip(y, |p, q| (1.0 - w) * p + w * q);
                build_reference(factory, &mix(&a.1, &b.1), &mix(&a.2, &b.2), &mix(&a.3, &b.3), &mix(&a.4, &b.4))
            }
        }
    }

    fn is_frozen(&self) -> bool {
        matches!(self, ReferenceTrajectory::Frozen(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConfig {
    pub dt: f64,
    pub k: usize,
    /// Largest accepted relative change of the combined energy in a step.
    pub jump_tol: f64,
    pub log_every: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            dt: 0.01,
            k: 1,
            jump_tol: 0.5,
            log_every: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    pub e_low: f64,
    pub e_high: f64,
    pub e_comb: f64,
    pub lambda_running: f64,
    /// `|V0|_{X^k}^2 + eps int_0^t sup |H|_{X^k}^2`.
    pub bound: f64,
}

impl EnergyRow {
    pub const HEADER: [&'static str; 6] = ["t", "E_low", "E_high", "E_comb", "lambda_star_running", "bound"];
}

#[derive(Debug, Clone)]
pub struct LinearRun {
    pub final_v: Pair,
    pub log: Vec<EnergyRow>,
    /// Largest observed `(d/dt log E) / eps`.
    pub lambda_star: f64,
}

pub type Source<'a> = &'a dyn Fn(f64) -> Result<Pair>;

/// Integrate `dV/dt = -M(t) V + eps H(t)` with RK4.
pub fn linear_integrate(
    reference: &ReferenceTrajectory,
    v0: &Pair,
    source: Option<Source>,
    t_final: f64,
    config: &LinearConfig,
) -> Result<LinearRun> {
    if !(config.dt > 0.0) || !(t_final >= 0.0) || config.log_every == 0 {
        return Err(Error::InvalidParams("bad linear integration settings".into()));
    }
    let r0 = reference.at(0.0)?;
    let grid = r0.grid().clone();
    let params = *r0.params();
    let e = params.epsilon;
    let k = config.k;
    let steps = if t_final == 0.0 { 0 } else { (t_final / config.dt).ceil() as usize };
    let dt = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let zero = (SurfaceField::zeros(&grid), SurfaceField::zeros(&grid));
    let h_at = |t: f64| -> Result<Pair> {
        match source {
            Some(f) => f(t),
            None => Ok(zero.clone()),
        }
    };
    let field = |r: &ReferenceState, v: &Pair, t: f64| -> Result<Pair> {
        let m = apply_m(r, v)?;
        let h = h_at(t)?;
        Ok((h.0.zip(&m.0, |a, b| e * a - b), h.1.zip(&m.1, |a, b| e * a - b)))
    };
    let axpy = |v: &Pair, d: &Pair, s: f64| (v.0.zip(&d.0, |a, b| a + s * b), v.1.zip(&d.1, |a, b| a + s * b));

    let x0 = x_norm(&grid, &params, v0, k as f64).powi(2);
    let mut integral = 0.0;
    let mut sup_h: f64 = x_norm(&grid, &params, &h_at(0.0)?, k as f64).powi(2);
    let mut v = v0.clone();
    let mut log = Vec::new();
    let mut lambda_star = f64::NEG_INFINITY;
    let mut r = r0;
    let mut t = 0.0;
    let d0 = field(&r, &v, t)?;
    let (mut parts, rate) = energy_and_rate(&r, &v, &d0, k)?;
    let running = |rate: f64, en: f64, lambda_star: &mut f64| {
        if en > 0.0 {
            *lambda_star = lambda_star.max(rate / (e * en));
        }
        *lambda_star
    };
    let frozen = reference.is_frozen();
    let l0 = if frozen { running(rate, parts.combined(), &mut lambda_star) } else { f64::NEG_INFINITY };
    log.push(EnergyRow {
        t,
        e_low: parts.low,
        e_high: parts.high,
        e_comb: parts.combined(),
        lambda_running: l0,
        bound: x0,
    });
    for n in 1..=steps {
        let rh = if frozen { r.clone() } else { reference.at(t + dt / 2.0)? };
        let r1 = if frozen { r.clone() } else { reference.at(t + dt)? };
        let k1 = field(&r, &v, t)?;
        let k2 = field(&rh, &axpy(&v, &k1, dt / 2.0), t + dt / 2.0)?;
        let k3 = field(&rh, &axpy(&v, &k2, dt / 2.0), t + dt / 2.0)?;
        let k4 = field(&r1, &axpy(&v, &k3, dt), t + dt)?;
        let comb = |a: &SurfaceField, b: &SurfaceField, c: &SurfaceField, d: &SurfaceField, base: &SurfaceField| {
            let mut out = base.clone();
            for i in 0..out.data.len() {
                out.data[i] += dt / 6.0 * (a.data[i] + 2.0 * b.data[i] + 2.0 * c.data[i] + d.data[i]);
            }
            out
        };
        v = (
            comb(&k1.0, &k2.0, &k3.0, &k4.0, &v.0),
            comb(&k1.1, &k2.1, &k3.1, &k4.1, &v.1),
        );
        t = n as f64 * dt;
        r = r1;
        let dnew = field(&r, &v, t)?;
        let (new_parts, rate) = energy_and_rate(&r, &v, &dnew, k)?;
        let old = parts.combined();
        let jump = if old > 0.0 { (new_parts.combined() - old).abs() / old } else { new_parts.combined() };
        if !jump.is_finite() || jump > config.jump_tol {
            return Err(Error::StepRejected {
                t,
                jump,
                limit: config.jump_tol,
            });
        }
        let lam = if frozen {
            running(rate, new_parts.combined(), &mut lambda_star)
        } else {
            if old > 0.0 && new_parts.combined() > 0.0 {
                lambda_star = lambda_star.max((new_parts.combined() / old).ln() / (dt * e));
            }
            lambda_star
        };
        sup_h = sup_h.max(x_norm(&grid, &params, &h_at(t)?, k as f64).powi(2));
        integral += dt * sup_h;
        parts = new_parts;
        if n % config.log_every == 0 || n == steps {
            log.push(EnergyRow {
                t,
                e_low: parts.low,
                e_high: parts.high,
                e_comb: parts.combined(),
                lambda_running: lam,
                bound: x0 + e * integral,
            });
        }
    }
    Ok(LinearRun {
        final_v: v,
        log,
        lambda_star,
    })
}
