//! Time evolution of the surface variables `(zeta, psi)`.

use serde::{Deserialize, Serialize};

use crate::dn::{dn_apply, DnFactory};
use crate::error::{Error, Result};
use crate::field::SurfaceField;
use crate::grid::SpectralGrid;
use crate::params::{ScaleParams, Variant};
use crate::spectral::{self, dealias, divergence_scaled_by, gradient_scaled_by};

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceState {
    pub zeta: SurfaceField,
    pub psi: SurfaceField,
    pub t: f64,
}

impl SurfaceState {
    pub fn rest(grid: &SpectralGrid) -> Self {
        SurfaceState {
            zeta: SurfaceField::zeros(grid),
            psi: SurfaceField::zeros(grid),
            t: 0.0,
        }
    }

    /// `min(1 + eps (zeta - b))`.
    pub fn h_min(&self, b: &SurfaceField, params: &ScaleParams) -> f64 {
        self.zeta.zip(b, |z, bb| 1.0 + params.epsilon * (z - bb)).min()
    }

    /// Mirror image under `x -> -x`.
    pub fn reflect_x(&self) -> Self {
        SurfaceState {
            zeta: self.zeta.reflect_x(),
            psi: self.psi.reflect_x(),
            t: self.t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtPolicy {
    /// Fraction of the RK4 stability limit for the stiffest retained mode.
    Cfl(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub variant: Variant,
    pub dt: DtPolicy,
    pub dealias: bool,
    pub h_floor: f64,
    /// Steps between monitor samples.
    pub monitor_every: usize,
    /// Largest accepted relative change of the Hamiltonian in one step.
    pub jump_tol: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            variant: Variant::Standard,
            dt: DtPolicy::Cfl(0.5),
            dealias: true,
            h_floor: 0.1,
            monitor_every: 10,
            jump_tol: 1e-3,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self, params: &ScaleParams) -> Result<()> {
        let dt_ok = match self.dt {
            DtPolicy::Cfl(c) => c > 0.0 && c.is_finite(),
            DtPolicy::Fixed(dt) => dt > 0.0 && dt.is_finite(),
        };
        if !dt_ok {
            return Err(Error::InvalidParams(format!("bad time step policy {:?}", self.dt)));
        }
        if !(self.h_floor > 0.0) {
            return Err(Error::InvalidParams(format!("h_floor = {} must be > 0", self.h_floor)));
        }
        if self.monitor_every == 0 {
            return Err(Error::InvalidParams("monitor cadence must be >= 1".into()));
        }
        match self.variant {
            Variant::Standard if !params.is_standard() => Err(Error::InvalidParams(
                "standard variant needs mu = eps and gamma = sqrt(eps)".into(),
            )),
            Variant::Degenerate if !params.is_degenerate() => Err(Error::InvalidParams(
                "degenerate variant needs epsilon = mu^2 and gamma = mu".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Linear angular frequency of the mode `(kx, ky)` about rest.
pub fn linear_frequency(kx: f64, ky: f64, params: &ScaleParams) -> f64 {
    let k = spectral::abs_scaled(params)(kx, ky);
    let g = spectral::flat_dn_symbol(params)(kx, ky);
    (g / params.mu * (1.0 + params.alpha * params.mu * k * k)).sqrt()
}

/// Time step from the policy.
pub fn choose_dt(grid: &SpectralGrid, params: &ScaleParams, config: &EvolutionConfig) -> f64 {
    match config.dt {
        DtPolicy::Fixed(dt) => dt,
        DtPolicy::Cfl(c) => {
            let mut wmax: f64 = 0.0;
            for n in 0..grid.len() {
                let keep = if config.dealias { grid.in_band(n) } else { !grid.is_nyquist(n) };
                if keep {
                    wmax = wmax.max(linear_frequency(grid.kx[n / grid.ny], grid.ky[n % grid.ny], params));
                }
            }
            if wmax == 0.0 {
                f64::INFINITY
            } else {
                c * 2.8 / wmax
            }
        }
    }
}

fn project(grid: &SpectralGrid, f: &SurfaceField, on: bool) -> SurfaceField {
    if on {
        dealias(grid, f)
    } else {
        f.clone()
    }
}

/// Right-hand side of the standard system from `G psi`, written with the
/// single parameter `eps`.
pub fn rhs_standard(
    grid: &SpectralGrid,
    params: &ScaleParams,
    zeta: &SurfaceField,
    psi: &SurfaceField,
    g_psi: &SurfaceField,
    dealias_on: bool,
) -> (SurfaceField, SurfaceField) {
    let e = params.epsilon;
    let alpha = params.alpha;
    let sq = e.sqrt();
    let (zx, zy) = gradient_scaled_by(grid, zeta, 1.0, sq);
    let (px, py) = gradient_scaled_by(grid, psi, 1.0, sq);
    let n = grid.len();
    let mut tx = vec![0.0; n];
    let mut ty = vec![0.0; n];
    let mut rest = vec![0.0; n];
    for k in 0..n {
        let s2 = zx.data[k] * zx.data[k] + zy.data[k] * zy.data[k];
        let root = (1.0 + e * e * e * s2).sqrt();
        tx[k] = zx.data[k] / root;
        ty[k] = zy.data[k] / root;
        let quad = g_psi.data[k] / e + e * (zx.data[k] * px.data[k] + zy.data[k] * py.data[k]);
        rest[k] = -zeta.data[k] - e / 2.0 * (px.data[k] * px.data[k] + py.data[k] * py.data[k])
            + e * e / 2.0 * quad * quad / (1.0 + e * e * e * s2);
    }
    let wrap = |d| SurfaceField { nx: grid.nx, ny: grid.ny, data: d };
    let tx = project(grid, &wrap(tx), dealias_on);
    let ty = project(grid, &wrap(ty), dealias_on);
    let tension = divergence_scaled_by(grid, &tx, &ty, 1.0, sq);
    let dpsi = wrap(rest).zip(&tension, |r, t| r + alpha * e * t);
    (
        project(grid, &(g_psi * (1.0 / e)), dealias_on),
        project(grid, &dpsi, dealias_on),
    )
}

/// Right-hand side of the degenerate system, amplitude `eps^2`, transverse
/// factor `eps`, with `eps = mu`.
pub fn rhs_degenerate(
    grid: &SpectralGrid,
    params: &ScaleParams,
    zeta: &SurfaceField,
    psi: &SurfaceField,
    g_psi: &SurfaceField,
    dealias_on: bool,
) -> (SurfaceField, SurfaceField) {
    let e = params.mu;
    let alpha = params.alpha;
    let (e2, e3, e5) = (e * e, e * e * e, e * e * e * e * e);
    let (zx, zy) = gradient_scaled_by(grid, zeta, 1.0, e);
    let (px, py) = gradient_scaled_by(grid, psi, 1.0, e);
    let n = grid.len();
    let mut tx = vec![0.0; n];
    let mut ty = vec![0.0; n];
    let mut rest = vec![0.0; n];
    for k in 0..n {
        let s2 = zx.data[k] * zx.data[k] + zy.data[k] * zy.data[k];
        let root = (1.0 + e5 * s2).sqrt();
        tx[k] = zx.data[k] / root;
        ty[k] = zy.data[k] / root;
        let quad = g_psi.data[k] / e + e2 * (zx.data[k] * px.data[k] + zy.data[k] * py.data[k]);
        rest[k] = -zeta.data[k] - e2 / 2.0 * (px.data[k] * px.data[k] + py.data[k] * py.data[k])
            + e3 / 2.0 * quad * quad / (1.0 + e5 * s2);
    }
    let wrap = |d| SurfaceField { nx: grid.nx, ny: grid.ny, data: d };
    let tx = project(grid, &wrap(tx), dealias_on);
    let ty = project(grid, &wrap(ty), dealias_on);
    let tension = divergence_scaled_by(grid, &tx, &ty, 1.0, e);
    let dpsi = wrap(rest).zip(&tension, |r, t| r + alpha * e * t);
    (
        project(grid, &(g_psi * (1.0 / e)), dealias_on),
        project(grid, &dpsi, dealias_on),
    )
}

/// Right-hand side of the general system in `(epsilon, mu, gamma)`.
pub fn rhs_general(
    grid: &SpectralGrid,
    params: &ScaleParams,
    zeta: &SurfaceField,
    psi: &SurfaceField,
    g_psi: &SurfaceField,
    dealias_on: bool,
) -> (SurfaceField, SurfaceField) {
    let (ep, mu, alpha) = (params.epsilon, params.mu, params.alpha);
    let w = ep * ep * mu;
    let (zx, zy) = spectral::scaled_gradient(grid, zeta, params);
    let (px, py) = spectral::scaled_gradient(grid, psi, params);
    let n = grid.len();
    let mut tx = vec![0.0; n];
    let mut ty = vec![0.0; n];
    let mut rest = vec![0.0; n];
    for k in 0..n {
        let s2 = zx.data[k] * zx.data[k] + zy.data[k] * zy.data[k];
        let root = (1.0 + w * s2).sqrt();
        tx[k] = zx.data[k] / root;
        ty[k] = zy.data[k] / root;
        let quad = g_psi.data[k] / mu + ep * (zx.data[k] * px.data[k] + zy.data[k] * py.data[k]);
        rest[k] = -zeta.data[k] - ep / 2.0 * (px.data[k] * px.data[k] + py.data[k] * py.data[k])
            + ep * mu / 2.0 * quad * quad / (1.0 + w * s2);
    }
    let wrap = |d| SurfaceField { nx: grid.nx, ny: grid.ny, data: d };
    let tx = project(grid, &wrap(tx), dealias_on);
    let ty = project(grid, &wrap(ty), dealias_on);
    let tension = spectral::scaled_divergence(grid, &tx, &ty, params);
    let dpsi = wrap(rest).zip(&tension, |r, t| r + alpha * mu * t);
    (
        project(grid, &(g_psi * (1.0 / mu)), dealias_on),
        project(grid, &dpsi, dealias_on),
    )
}

/// One right-hand side evaluation together with the `G psi` it used.
#[derive(Debug, Clone)]
pub struct RhsEval {
    pub dzeta: SurfaceField,
    pub dpsi: SurfaceField,
    pub g_psi: SurfaceField,
}

pub fn rhs_eval(state: &SurfaceState, factory: &DnFactory, config: &EvolutionConfig) -> Result<RhsEval> {
    let grid = factory.grid();
    let params = factory.params();
    let zeta = project(grid, &state.zeta, config.dealias);
    let psi = project(grid, &state.psi, config.dealias);
    let ctx = factory.context(&zeta)?;
    let g_psi = dn_apply(&ctx, &psi)?;
    let f = match config.variant {
        Variant::Standard => rhs_standard,
        Variant::Degenerate => rhs_degenerate,
        Variant::General => rhs_general,
    };
    let (dzeta, dpsi) = f(grid, params, &zeta, &psi, &g_psi, config.dealias);
    Ok(RhsEval { dzeta, dpsi, g_psi })
}

/// `(d zeta/dt, d psi/dt)`.
pub fn rhs(state: &SurfaceState, factory: &DnFactory, config: &EvolutionConfig) -> Result<(SurfaceField, SurfaceField)> {
    let r = rhs_eval(state, factory, config)?;
    Ok((r.dzeta, r.dpsi))
}

/// Hamiltonian from a known `G psi`.
pub fn hamiltonian_with(grid: &SpectralGrid, params: &ScaleParams, state: &SurfaceState, g_psi: &SurfaceField) -> f64 {
    let (zx, zy) = spectral::scaled_gradient(grid, &state.zeta, params);
    let w = params.slope_weight();
    let c = params.alpha / (params.epsilon * params.epsilon);
    let mut acc = 0.0;
    for k in 0..grid.len() {
        let s = w * (zx.data[k] * zx.data[k] + zy.data[k] * zy.data[k]);
        // sqrt(1 + s) - 1 without cancellation
        let tension = s / ((1.0 + s).sqrt() + 1.0);
        acc += 0.5 * state.zeta.data[k] * state.zeta.data[k]
            + 0.5 / params.mu * state.psi.data[k] * g_psi.data[k]
            + c * tension;
    }
    acc * grid.cell_area()
}

pub fn hamiltonian(state: &SurfaceState, factory: &DnFactory) -> Result<f64> {
    let ctx = factory.context(&state.zeta)?;
    let g = dn_apply(&ctx, &state.psi)?;
    Ok(hamiltonian_with(factory.grid(), factory.params(), state, &g))
}

/// RK4 stepper that reuses the right-hand side at the end of a step as the
/// first stage of the next one.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub factory: DnFactory,
    pub config: EvolutionConfig,
    cache: Option<(SurfaceState, RhsEval)>,
}

impl Stepper {
    pub fn new(factory: DnFactory, config: EvolutionConfig) -> Result<Self> {
        config.validate(factory.params())?;
        Ok(Stepper {
            factory,
            config,
            cache: None,
        })
    }

    pub fn dt(&self) -> f64 {
        choose_dt(self.factory.grid(), self.factory.params(), &self.config)
    }

    pub fn eval(&mut self, state: &SurfaceState) -> Result<RhsEval> {
        if let Some((s, r)) = &self.cache {
            if s.zeta == state.zeta && s.psi == state.psi {
                return Ok(r.clone());
            }
        }
        let r = rhs_eval(state, &self.factory, &self.config)?;
        self.cache = Some((state.clone(), r.clone()));
        Ok(r)
    }

    pub fn hamiltonian(&mut self, state: &SurfaceState) -> Result<f64> {
        let r = self.eval(state)?;
        Ok(hamiltonian_with(self.factory.grid(), self.factory.params(), state, &r.g_psi))
    }

    fn check_admissible(&self, state: &SurfaceState) -> Result<f64> {
        let h = state.h_min(self.factory.bottom(), self.factory.params());
        if !(h >= self.config.h_floor) {
            return Err(Error::AdmissibilityViolation {
                h_min: h,
                floor: self.config.h_floor,
            });
        }
        Ok(h)
    }

    /// Advance by `dt` (which may be negative) without the energy check.
    pub fn advance(&mut self, state: &SurfaceState, dt: f64) -> Result<SurfaceState> {
        self.check_admissible(state)?;
        let stage = |s: &SurfaceState, k: &RhsEval, h: f64| SurfaceState {
            zeta: s.zeta.zip(&k.dzeta, |a, b| a + h * b),
            psi: s.psi.zip(&k.dpsi, |a, b| a + h * b),
            t: s.t + h,
        };
        let k1 = self.eval(state)?;
        let k2 = rhs_eval(&stage(state, &k1, dt / 2.0), &self.factory, &self.config)?;
        let k3 = rhs_eval(&stage(state, &k2, dt / 2.0), &self.factory, &self.config)?;
        let k4 = rhs_eval(&stage(state, &k3, dt), &self.factory, &self.config)?;
        let comb = |a: &SurfaceField, b: &SurfaceField, c: &SurfaceField, d: &SurfaceField, base: &SurfaceField| {
            let mut out = base.clone();
            for k in 0..out.data.len() {
                out.data[k] += dt / 6.0 * (a.data[k] + 2.0 * b.data[k] + 2.0 * c.data[k] + d.data[k]);
            }
            out
        };
        let next = SurfaceState {
            zeta: comb(&k1.dzeta, &k2.dzeta, &k3.dzeta, &k4.dzeta, &state.zeta),
            psi: comb(&k1.dpsi, &k2.dpsi, &k3.dpsi, &k4.dpsi, &state.psi),
            t: state.t + dt,
        };
        if !next.zeta.is_finite() || !next.psi.is_finite() {
            return Err(Error::StepRejected {
                t: next.t,
                jump: f64::INFINITY,
                limit: self.config.jump_tol,
            });
        }
        self.check_admissible(&next)?;
        Ok(next)
    }

    /// One checked step: admissibility before and after, and a bound on the
    /// relative Hamiltonian jump.
    pub fn step(&mut self, state: &SurfaceState, dt: f64) -> Result<SurfaceState> {
        let h0 = self.hamiltonian(state)?;
        let next = self.advance(state, dt)?;
        let h1 = self.hamiltonian(&next)?;
        let scale = h0.abs().max(1e-300);
        let jump = if h0 == h1 { 0.0 } else { (h1 - h0).abs() / scale };
        if jump > self.config.jump_tol {
            return Err(Error::StepRejected {
                t: next.t,
                jump,
                limit: self.config.jump_tol,
            });
        }
        Ok(next)
    }
}

/// One checked step with the time step chosen by the policy.
pub fn step(state: &SurfaceState, factory: &DnFactory, config: &EvolutionConfig) -> Result<SurfaceState> {
    let mut s = Stepper::new(factory.clone(), *config)?;
    let dt = s.dt();
    s.step(state, dt)
}

/// One monitor sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRow {
    pub t: f64,
    pub hamiltonian: f64,
    pub mass: f64,
    pub max_zeta: f64,
    pub h_min: f64,
    pub dt: f64,
}

impl MonitorRow {
    pub const HEADER: [&'static str; 6] = ["t", "hamiltonian", "mass", "max_abs_zeta", "h_min", "dt"];
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub final_state: SurfaceState,
    pub steps: usize,
    pub dt: f64,
    pub monitor: Vec<MonitorRow>,
}

impl Trajectory {
    /// Largest `|H(t) - H(0)| / |H(0)|` over the monitor samples.
    pub fn hamiltonian_drift(&self) -> f64 {
        let h0 = self.monitor.first().map_or(0.0, |r| r.hamiltonian);
        let d = self
            .monitor
            .iter()
            .map(|r| (r.hamiltonian - h0).abs())
            .fold(0.0, f64::max);
        if h0 == 0.0 {
            d
        } else {
            d / h0.abs()
        }
    }

    /// Largest `|mass(t) - mass(0)|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.monitor.first().map_or(0.0, |r| r.mass);
        self.monitor.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max)
    }
}

/// Advance to `t_final`, calling `observer` on the initial state, every
/// `monitor_every` steps and on the final state. With dealiasing on, the
/// initial data are first projected onto the retained band.
pub fn integrate(
    state0: &SurfaceState,
    t_final: f64,
    factory: &DnFactory,
    config: &EvolutionConfig,
    observer: &mut dyn FnMut(&MonitorRow, &SurfaceState) -> Result<()>,
) -> Result<Trajectory> {
    if !(t_final >= state0.t) {
        return Err(Error::InvalidParams(format!("t_final = {t_final} before start {}", state0.t)));
    }
    let mut stepper = Stepper::new(factory.clone(), *config)?;
    let grid = factory.grid();
    let params = *factory.params();
    let span = t_final - state0.t;
    let dt_max = stepper.dt();
    let steps = if span == 0.0 { 0 } else { (span / dt_max).ceil().max(1.0) as usize };
    let dt = if steps == 0 { 0.0 } else { span / steps as f64 };
    let mut state = if config.dealias && steps > 0 {
        SurfaceState {
            zeta: dealias(grid, &state0.zeta),
            psi: dealias(grid, &state0.psi),
            t: state0.t,
        }
    } else {
        state0.clone()
    };
    let mut monitor = Vec::new();
    let mut sample = |stepper: &mut Stepper, s: &SurfaceState, monitor: &mut Vec<MonitorRow>| -> Result<()> {
        let row = MonitorRow {
            t: s.t,
            hamiltonian: stepper.hamiltonian(s)?,
            mass: s.zeta.mean() * grid.lx * grid.ly,
            max_zeta: s.zeta.max_abs(),
            h_min: s.h_min(factory.bottom(), &params),
            dt,
        };
        monitor.push(row);
        observer(&row, s)
    };
    sample(&mut stepper, &state, &mut monitor)?;
    for n in 1..=steps {
        state = stepper.step(&state, dt)?;
        if n == steps {
            state.t = t_final;
        }
        if n % config.monitor_every == 0 || n == steps {
            sample(&mut stepper, &state, &mut monitor)?;
        }
    }
    Ok(Trajectory {
        final_state: state,
        steps,
        dt,
        monitor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::SolverOptions;
    use std::f64::consts::PI;

    fn setup(nx: usize, ny: usize, nz: usize, params: ScaleParams) -> (SpectralGrid, DnFactory) {
        let g = SpectralGrid::new(2.0 * PI, 2.0 * PI, nx, ny, nz).unwrap();
        let f = DnFactory::flat_bottom(&g, &params).unwrap();
        (g, f)
    }

    fn cfg(dealias: bool) -> EvolutionConfig {
        EvolutionConfig {
            dealias,
            ..Default::default()
        }
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let p = ScaleParams::standard(0.1, 0.5).unwrap();
        let (g, f) = setup(16, 8, 8, p);
        let s = SurfaceState::rest(&g);
        let (a, b) = rhs(&s, &f, &cfg(true)).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert_eq!(b.max_abs(), 0.0);
        assert_eq!(hamiltonian(&s, &f).unwrap(), 0.0);
        let mut st = Stepper::new(f, cfg(true)).unwrap();
        let n = st.step(&s, 0.3).unwrap();
        assert_eq!(n.zeta.max_abs() + n.psi.max_abs(), 0.0);
    }

    #[test]
    fn flat_single_mode_closed_forms() {
        let (e, k) = (0.1f64, 2.0f64);
        let p = ScaleParams::standard(e, 0.5).unwrap();
        let (g, f) = setup(16, 8, 8, p);
        let s = SurfaceState {
            zeta: SurfaceField::zeros(&g),
            psi: SurfaceField::from_fn(&g, |x, _| (k * x).cos()),
            t: 0.0,
        };
        let (dz, dp) = rhs(&s, &f, &cfg(false)).unwrap();
        let r = e.sqrt() * k;
        let gsym = r * r.tanh();
        let want_z = SurfaceField::from_fn(&g, |x, _| gsym / e * (k * x).cos());
        assert!((&dz - &want_z).max_abs() < 1e-12);
        let want_p = SurfaceField::from_fn(&g, |x, _| {
            let gp = gsym * (k * x).cos();
            -e / 2.0 * (k * (k * x).sin()).powi(2) + e * e / 2.0 * (gp / e).powi(2)
        });
        assert!((&dp - &want_p).max_abs() < 1e-12);
        let h = hamiltonian(&s, &f).unwrap();
        let want = gsym / (2.0 * e) * (2.0 * PI * 2.0 * PI / 2.0);
        assert!((h - want).abs() < 1e-12 * want);
    }

    #[test]
    fn functional_derivatives_reproduce_the_flow() {
        let p = ScaleParams::standard(0.3, 0.5).unwrap();
        let (g, f) = setup(32, 16, 14, p);
        let s = SurfaceState {
            zeta: SurfaceField::from_fn(&g, |x, y| 0.6 * x.sin() + 0.3 * (x + y).cos()),
            psi: SurfaceField::from_fn(&g, |x, y| (2.0 * x).cos() + 0.4 * y.sin()),
            t: 0.0,
        };
        let (dz, dp) = rhs(&s, &f, &cfg(false)).unwrap();
        let h = SurfaceField::from_fn(&g, |x, y| (x - y).cos() + 0.5 * (2.0 * y).sin());
        let d = 1e-4;
        let shifted = |dzeta: f64, dpsi: f64| SurfaceState {
            zeta: &s.zeta + &(&h * dzeta),
            psi: &s.psi + &(&h * dpsi),
            t: 0.0,
        };
        let hz = (hamiltonian(&shifted(d, 0.0), &f).unwrap() - hamiltonian(&shifted(-d, 0.0), &f).unwrap()) / (2.0 * d);
        let want = -spectral::inner(&g, &dp, &h);
        assert!((hz - want).abs() < 1e-6 * want.abs(), "{hz} {want}");
        let hp = (hamiltonian(&shifted(0.0, d), &f).unwrap() - hamiltonian(&shifted(0.0, -d), &f).unwrap()) / (2.0 * d);
        let want = spectral::inner(&g, &dz, &h);
        assert!((hp - want).abs() < 1e-7 * want.abs(), "{hp} {want}");
    }

    fn sample_state(g: &SpectralGrid) -> SurfaceState {
        SurfaceState {
            zeta: SurfaceField::from_fn(g, |x, y| 0.5 * x.sin() + 0.2 * (x + 2.0 * y).cos()),
            psi: SurfaceField::from_fn(g, |x, y| x.cos() - 0.3 * (x - y).sin()),
            t: 0.0,
        }
    }

    #[test]
    fn general_form_reduces_to_the_presets() {
        let e = 0.2;
        let ps = ScaleParams::standard(e, 0.4).unwrap();
        let pg = ScaleParams::general(e, e, e.sqrt(), 0.4).unwrap();
        let (g, f) = setup(16, 8, 10, ps);
        let s = sample_state(&g);
        let gp = dn_apply(&f.context(&s.zeta).unwrap(), &s.psi).unwrap();
        let a = rhs_standard(&g, &ps, &s.zeta, &s.psi, &gp, true);
        let b = rhs_general(&g, &pg, &s.zeta, &s.psi, &gp, true);
        assert!((&a.0 - &b.0).max_abs() < 1e-12);
        assert!((&a.1 - &b.1).max_abs() < 1e-12);

        let pd = ScaleParams::degenerate(e, 0.5).unwrap();
        let pg = ScaleParams::general(e * e, e, e, pd.alpha).unwrap();
        let a = rhs_degenerate(&g, &pd, &s.zeta, &s.psi, &gp, true);
        let b = rhs_general(&g, &pg, &s.zeta, &s.psi, &gp, true);
        assert!((&a.0 - &b.0).max_abs() < 1e-12);
        assert!((&a.1 - &b.1).max_abs() < 1e-12);
    }

    #[test]
    fn reflection_commutes_with_a_step() {
        let p = ScaleParams::standard(0.2, 0.4).unwrap();
        let (g, f) = setup(16, 8, 10, p);
        let s = sample_state(&g);
        let mut st = Stepper::new(f, cfg(true)).unwrap();
        let a = st.advance(&s, 0.05).unwrap().reflect_x();
        let b = st.advance(&s.reflect_x(), 0.05).unwrap();
        assert!((&a.zeta - &b.zeta).max_abs() < 1e-9);
        assert!((&a.psi - &b.psi).max_abs() < 1e-9);
    }

    #[test]
    fn reversibility_is_fourth_order() {
        let p = ScaleParams::standard(0.2, 0.4).unwrap();
        let (g, f) = setup(16, 8, 10, p);
        let mut s = sample_state(&g);
        s.zeta = dealias(&g, &s.zeta);
        s.psi = dealias(&g, &s.psi);
        let mut st = Stepper::new(f, cfg(true)).unwrap();
        let mut errs = Vec::new();
        for dt in [0.2, 0.1] {
            let fwd = st.advance(&s, dt).unwrap();
            let back = st.advance(&fwd, -dt).unwrap();
            errs.push((&back.zeta - &s.zeta).max_abs() + (&back.psi - &s.psi).max_abs());
        }
        // the round trip cancels odd orders; the error is O(dt^5) or better
        assert!(errs[1] < errs[0] / 20.0, "{errs:?}");
    }

    #[test]
    fn config_checks() {
        let p = ScaleParams::standard(0.2, 0.4).unwrap();
        let mut c = cfg(true);
        c.h_floor = 0.0;
        assert!(c.validate(&p).is_err());
        let mut c = cfg(true);
        c.variant = Variant::Degenerate;
        assert!(c.validate(&p).is_err());
        let mut c = cfg(true);
        c.dt = DtPolicy::Fixed(-1.0);
        assert!(c.validate(&p).is_err());
    }

    #[test]
    fn admissibility_is_enforced() {
        let p = ScaleParams::standard(0.5, 0.4).unwrap();
        let (g, f) = setup(16, 8, 8, p);
        let s = SurfaceState {
            zeta: SurfaceField::from_fn(&g, |x, _| -1.85 * x.cos()),
            psi: SurfaceField::zeros(&g),
            t: 0.0,
        };
        let mut st = Stepper::new(f, cfg(false)).unwrap();
        assert!(matches!(st.advance(&s, 0.01), Err(Error::AdmissibilityViolation { .. })));
    }

    #[test]
    fn zero_horizon_and_mass() {
        let p = ScaleParams::standard(0.2, 0.4).unwrap();
        let (g, f) = setup(16, 8, 8, p);
        let s = sample_state(&g);
        let mut seen = 0;
        let tr = integrate(&s, 0.0, &f, &cfg(true), &mut |_, _| {
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(tr.steps, 0);
        assert_eq!(tr.final_state, s);
        assert_eq!(seen, 1);
        let mut c = cfg(true);
        c.monitor_every = 2;
        let tr = integrate(&s, 0.5, &f, &c, &mut |_, _| Ok(())).unwrap();
        assert!(tr.mass_drift() < 1e-12);
        assert!(tr.hamiltonian_drift() < 1e-4);
        assert_eq!(tr.final_state.t, 0.5);
    }

    #[test]
    fn linear_frequency_matches_the_dispersion_relation() {
        let (e, k, alpha) = (0.1f64, 1.0f64, 0.5);
        let p = ScaleParams::standard(e, alpha).unwrap();
        let g = SpectralGrid::new(2.0 * PI, 2.0 * PI, 16, 8, 8).unwrap();
        let f = DnFactory::new(&g, &p, SurfaceField::zeros(&g), SolverOptions::default()).unwrap();
        let omega = linear_frequency(k, 0.0, &p);
        let r = e.sqrt() * k;
        let want = ((r * r.tanh()) / e * (1.0 + alpha * e * k * k)).sqrt();
        assert!((omega - want).abs() < 1e-14);
        let dt = 2.0 * PI / omega / 200.0;
        let mut st = Stepper::new(f, cfg(true)).unwrap();
        let mut s = SurfaceState {
            zeta: SurfaceField::from_fn(&g, |x, _| 1e-6 * (k * x).cos()),
            psi: SurfaceField::zeros(&g),
            t: 0.0,
        };
        let basis = SurfaceField::from_fn(&g, |x, _| (k * x).cos());
        let mut c = vec![spectral::inner(&g, &s.zeta, &basis)];
        for _ in 0..300 {
            s = st.advance(&s, dt).unwrap();
            c.push(spectral::inner(&g, &s.zeta, &basis));
        }
        let measured = fitted_frequency(&c, dt);
        assert!((measured - omega).abs() < 1e-4 * omega, "{measured} {omega}");
    }

    // c(t + h) + c(t - h) = 2 cos(w h) c(t) for a pure oscillation
    fn fitted_frequency(c: &[f64], h: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 1..c.len() - 1 {
            num += (c[i + 1] + c[i - 1]) * c[i];
            den += 2.0 * c[i] * c[i];
        }
        (num / den).acos() / h
    }
}
