//! Nonlinear evolution with monitors, plus the linear-frequency, time-order
//! and variant-consistency checks on small runs.

use super::{grid_of, Run};
use crate::checks::{Bound, Check};
use crate::error::{numerical, HarnessError, Result};
use serde::Serialize;
use std::f64::consts::PI;
use stripwaves::dn::{dn_apply, DnFactory};
use stripwaves::random::band_limited;
use stripwaves::snapshot::{dump_fields, SnapshotMeta};
use stripwaves::spectral;
use stripwaves::waterwave::{
    hamiltonian, integrate, rhs, rhs_degenerate, rhs_general, rhs_standard, DtPolicy, EvolutionConfig, Stepper,
    SurfaceState,
};
use stripwaves::{Error, ScaleParams, SpectralGrid, SurfaceField};

#[derive(Serialize)]
struct MonitorCsv {
    t: f64,
    hamiltonian: f64,
    mass: f64,
    max_abs_zeta: f64,
    h_min: f64,
    dt: f64,
}

#[derive(Serialize)]
struct FrequencyRow {
    k: f64,
    measured: f64,
    predicted: f64,
    rel_err: f64,
}

#[derive(Serialize)]
struct OrderRow {
    steps_per_period: usize,
    dt: f64,
    error: f64,
}

#[derive(Serialize)]
struct VariantRow {
    case: &'static str,
    rel_diff: f64,
}

pub(super) fn run(run: &mut Run) -> Result<()> {
    conservation(run)?;
    dispersion(run)?;
    time_order(run)?;
    variants(run)
}

fn conservation(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let p = cfg.params.build()?;
    let g = grid_of(&cfg.grid)?;
    let (zeta, psi) = cfg.initial.build(&g, &p, cfg.seed)?;
    let f = DnFactory::flat_bottom(&g, &p).map_err(HarnessError::Setup)?;
    let state = SurfaceState { zeta, psi, t: 0.0 };
    let h_min = state.h_min(f.bottom(), &p);
    if !(h_min >= cfg.h_floor) {
        return Err(HarnessError::Setup(Error::AdmissibilityViolation {
            h_min,
            floor: cfg.h_floor,
        }));
    }
    let ecfg = EvolutionConfig {
        variant: cfg.params.variant,
        dt: DtPolicy::Cfl(cfg.cfl),
        dealias: true,
        h_floor: cfg.h_floor,
        monitor_every: cfg.monitor_every,
        jump_tol: cfg.tol("step_jump", 1e-3),
    };
    ecfg.validate(&p).map_err(|e| HarnessError::Config(e.to_string()))?;

    // the Hamiltonian must generate the flow before its drift means anything
    let fd_err = hamiltonian_derivative_error(&state, &f)?;
    let delta = 1e-4;
    run.check(Check::new(6, "hamiltonian_derivative_rel_err", fd_err, Bound::AtMost { limit: 10.0 * delta }));

    let t_final = cfg.t_final.unwrap_or(1.0 / p.base_eps());
    let mut rows = Vec::new();
    let mut snaps = Vec::new();
    let meta = SnapshotMeta {
        grid: g.spec(),
        params: p,
        t: 0.0,
        fields: vec![],
        written: 0,
    };
    run.log(format!("evolving to t = {t_final}"));
    let traj = integrate(&state, t_final, &f, &ecfg, &mut |row, s| {
        rows.push(MonitorCsv {
            t: row.t,
            hamiltonian: row.hamiltonian,
            mass: row.mass,
            max_abs_zeta: row.max_zeta,
            h_min: row.h_min,
            dt: row.dt,
        });
        snaps.push(s.clone());
        Ok(())
    })
    .map_err(numerical("evolve"))?;
    run.csv("monitor.csv", &rows)?;
    for (i, s) in snaps.iter().enumerate() {
        let path = run.file(&format!("snapshots/state_{i:05}.bin"))?;
        dump_fields(&path, &[("zeta", &s.zeta), ("psi", &s.psi)], &SnapshotMeta { t: s.t, ..meta.clone() })
            .map_err(numerical("snapshot"))?;
    }
    run.log(format!(
        "{} steps of {:.4}: H drift {:.3e}, mass drift {:.3e}",
        traj.steps,
        traj.dt,
        traj.hamiltonian_drift(),
        traj.mass_drift()
    ));
    let admissible = rows.iter().all(|r| r.h_min >= cfg.h_floor);
    run.check(Check::new(
        6,
        "hamiltonian_drift",
        traj.hamiltonian_drift(),
        Bound::Below {
            limit: cfg.tol("hamiltonian_drift", 1e-6),
        },
    ));
    run.check(Check::new(
        6,
        "mass_drift",
        traj.mass_drift(),
        Bound::Below {
            limit: cfg.tol("mass_drift", 1e-10),
        },
    ));
    run.check(Check::flag(6, "admissible_throughout", admissible));
    Ok(())
}

/// Relative error of the central difference of `H` along a fixed direction
/// against `(d_t psi, h)` and `(d_t zeta, h)`.
fn hamiltonian_derivative_error(state: &SurfaceState, f: &DnFactory) -> Result<f64> {
    let g = f.grid();
    let cfg = EvolutionConfig {
        dealias: false,
        ..Default::default()
    };
    let (dz, dp) = rhs(state, f, &cfg).map_err(numerical("hamiltonian-derivative"))?;
    let scale = state.zeta.max_abs().max(state.psi.max_abs()).max(1e-3);
    let h = &band_limited(g, 77, 3, true) * scale;
    let d = 1e-4;
    let shifted = |a: f64, b: f64| SurfaceState {
        zeta: &state.zeta + &(&h * a),
        psi: &state.psi + &(&h * b),
        t: 0.0,
    };
    let ham = |s: &SurfaceState| hamiltonian(s, f).map_err(numerical("hamiltonian-derivative"));
    let hz = (ham(&shifted(d, 0.0))? - ham(&shifted(-d, 0.0))?) / (2.0 * d);
    let hp = (ham(&shifted(0.0, d))? - ham(&shifted(0.0, -d))?) / (2.0 * d);
    let wz = -spectral::inner(g, &dp, &h);
    let wp = spectral::inner(g, &dz, &h);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    Ok(rel(hz, wz).max(rel(hp, wp)))
}

fn small_setup(p: &ScaleParams) -> Result<(SpectralGrid, DnFactory)> {
    let g = SpectralGrid::new(2.0 * PI, 2.0 * PI, 16, 8, 12).map_err(HarnessError::Setup)?;
    let f = DnFactory::flat_bottom(&g, p).map_err(HarnessError::Setup)?;
    Ok((g, f))
}

/// Least-squares `w` from `c(t + h) + c(t - h) = 2 cos(w h) c(t)`.
fn fitted_frequency(c: &[f64], h: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 1..c.len() - 1 {
        num += (c[i + 1] + c[i - 1]) * c[i];
        den += 2.0 * c[i] * c[i];
    }
    (num / den).acos() / h
}

fn dispersion(run: &mut Run) -> Result<()> {
    let p = run.cfg.params.build()?;
    if p.is_degenerate() {
        return Ok(());
    }
    let (e, alpha) = (p.epsilon, p.alpha);
    let (g, f) = small_setup(&p)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for k in [1.0f64, 2.0] {
        let predicted = {
            let r = e.sqrt() * k;
            (r * r.tanh() / e * (1.0 + alpha * e * k * k)).sqrt()
        };
        let dt = 2.0 * PI / predicted / 200.0;
        let cfg = EvolutionConfig {
            dt: DtPolicy::Fixed(dt),
            ..Default::default()
        };
        let mut st = Stepper::new(f.clone(), cfg).map_err(HarnessError::Setup)?;
        let basis = SurfaceField::from_fn(&g, |x, _| (k * x).cos());
        let mut s = SurfaceState {
            zeta: &basis * 1e-6,
            psi: SurfaceField::zeros(&g),
            t: 0.0,
        };
        let mut c = vec![spectral::inner(&g, &s.zeta, &basis)];
        for _ in 0..300 {
            s = st.advance(&s, dt).map_err(numerical("dispersion"))?;
            c.push(spectral::inner(&g, &s.zeta, &basis));
        }
        let measured = fitted_frequency(&c, dt);
        let rel_err = (measured - predicted).abs() / predicted;
        worst = worst.max(rel_err);
        rows.push(FrequencyRow {
            k,
            measured,
            predicted,
            rel_err,
        });
    }
    run.csv("dispersion.csv", &rows)?;
    let lim = run.cfg.tol("dispersion_rel_err", 1e-4);
    run.check(Check::new(7, "linear_frequency_rel_err", worst, Bound::AtMost { limit: lim }));
    Ok(())
}

fn time_order(run: &mut Run) -> Result<()> {
    let p = run.cfg.params.build()?;
    let (g, f) = small_setup(&p)?;
    let s0 = SurfaceState {
        zeta: SurfaceField::from_fn(&g, |x, y| 0.05 * (x.cos() + 0.5 * (x + y).sin())),
        psi: SurfaceField::zeros(&g),
        t: 0.0,
    };
    let omega = stripwaves::waterwave::linear_frequency(1.0, 0.0, &p);
    let period = 2.0 * PI / omega;
    let cfg = EvolutionConfig::default();
    let mut st = Stepper::new(f, cfg).map_err(HarnessError::Setup)?;
    let mut advance = |n: usize| -> Result<SurfaceState> {
        let dt = period / n as f64;
        let mut s = s0.clone();
        for _ in 0..n {
            s = st.advance(&s, dt).map_err(numerical("time-order"))?;
        }
        Ok(s)
    };
    let reference = advance(640)?;
    let mut rows = Vec::new();
    for n in [20, 40] {
        let s = advance(n)?;
        let err = spectral::l2_norm(&g, &(&s.zeta - &reference.zeta)) + spectral::l2_norm(&g, &(&s.psi - &reference.psi));
        rows.push(OrderRow {
            steps_per_period: n,
            dt: period / n as f64,
            error: err,
        });
    }
    let ratio = rows[0].error / rows[1].error;
    run.csv("time_order.csv", &rows)?;
    let (lo, hi) = (run.cfg.tol("rk4_ratio_min", 12.0), run.cfg.tol("rk4_ratio_max", 20.0));
    run.check(Check::new(11, "rk4_error_ratio", ratio, Bound::Within { lo, hi }));
    Ok(())
}

fn rel_diff(a: &(SurfaceField, SurfaceField), b: &(SurfaceField, SurfaceField)) -> f64 {
    let scale = b.0.max_abs().max(b.1.max_abs());
    (&a.0 - &b.0).max_abs().max((&a.1 - &b.1).max_abs()) / scale
}

fn variants(run: &mut Run) -> Result<()> {
    let eps = run.cfg.params.epsilon;
    let seed = run.cfg.seed;
    let mut rows = Vec::new();
    let std = ScaleParams::standard(eps, run.cfg.params.alpha).map_err(HarnessError::Setup)?;
    let deg = ScaleParams::degenerate(eps, run.cfg.params.theta).map_err(HarnessError::Setup)?;
    for (case, p) in [("standard", std), ("degenerate", deg)] {
        let (g, f) = small_setup(&p)?;
        let zeta = &band_limited(&g, seed, 3, true) * 0.3;
        let psi = band_limited(&g, seed.wrapping_add(1), 3, true);
        let ctx = f.context(&zeta).map_err(numerical("variants"))?;
        let gp = dn_apply(&ctx, &psi).map_err(numerical("variants"))?;
        let general = rhs_general(&g, &p, &zeta, &psi, &gp, true);
        let preset = match case {
            "standard" => rhs_standard(&g, &p, &zeta, &psi, &gp, true),
            _ => rhs_degenerate(&g, &p, &zeta, &psi, &gp, true),
        };
        rows.push(VariantRow {
            case,
            rel_diff: rel_diff(&general, &preset),
        });
    }
    run.csv("variants.csv", &rows)?;
    let lim = run.cfg.tol("variant_rel_diff", 1e-12);
    for r in &rows {
        let name = format!("general_vs_{}", r.case);
        run.check(Check::new(12, &name, r.rel_diff, Bound::AtMost { limit: lim }));
    }
    Ok(())
}
