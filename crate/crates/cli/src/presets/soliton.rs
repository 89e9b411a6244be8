//! KP line-soliton regression.

use super::{grid_of, Run};
use crate::checks::{Bound, Check};
use crate::error::{numerical, HarnessError, Result};
use serde::Serialize;
use stripwaves::kp::{c3, kp_integrate, line_soliton, shift_x, KPState, KpOrder};
use stripwaves::spectral::l2_norm;
use stripwaves::SurfaceField;

#[derive(Serialize)]
struct SolitonRow {
    tau: f64,
    speed: f64,
    shape_err: f64,
    l2_drift: f64,
}

pub(super) fn run(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let p = cfg.params.build()?;
    let g = grid_of(&cfg.grid)?;
    if !(c3(&p) > 0.0) {
        return Err(HarnessError::Config(format!("soliton needs c3 > 0, alpha = {} gives {}", p.alpha, c3(&p))));
    }
    let amplitude = match cfg.initial {
        crate::profiles::InitialProfile::LineSoliton { amplitude } => amplitude,
        _ => return Err(HarnessError::Config("soliton preset needs the line-soliton profile".into())),
    };
    let (z0, speed) = line_soliton(&g, amplitude, g.lx / 2.0, &p).map_err(HarnessError::Setup)?;
    let start = KPState {
        zp: z0.clone(),
        zm: SurfaceField::zeros(&g),
        tau: 0.0,
        dtau: 0.0,
    };
    let dtau = cfg.tol("kp_dtau", 0.005);
    let jump = cfg.tol("kp_jump", 0.5);
    let norm0 = l2_norm(&g, &z0);
    let period = g.lx / speed;
    let mut rows = Vec::new();
    let mut state = start;
    let mut drift_1 = f64::NAN;
    for tau in [cfg.t_final.unwrap_or(1.0), period] {
        state = kp_integrate(&g, &state, tau, KpOrder::Third, &p, dtau, jump).map_err(numerical("soliton"))?;
        let moved = shift_x(&g, &z0, speed * tau);
        let shape_err = (&state.zp - &moved).max_abs();
        let l2_drift = (l2_norm(&g, &state.zp) - norm0).abs() / norm0;
        if rows.is_empty() {
            drift_1 = l2_drift;
        }
        run.log(format!("tau={tau:.4}: shape error {shape_err:.3e}, L2 drift {l2_drift:.3e}"));
        rows.push(SolitonRow {
            tau,
            speed,
            shape_err,
            l2_drift,
        });
    }
    run.csv("soliton.csv", &rows)?;
    let shape = rows.last().map_or(f64::NAN, |r| r.shape_err);
    run.check(Check::new(
        8,
        "period_shape_err",
        shape,
        Bound::Below {
            limit: cfg.tol("soliton_shape", 1e-4),
        },
    ));
    run.check(Check::new(
        8,
        "kp_l2_drift",
        drift_1,
        Bound::Below {
            limit: cfg.tol("kp_l2_drift", 1e-8),
        },
    ));
    Ok(())
}
