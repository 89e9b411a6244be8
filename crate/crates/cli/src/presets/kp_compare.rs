//! Paired water-wave and KP runs over an epsilon sweep.

use super::{grid_of, Run};
use crate::checks::{Bound, Check};
use crate::error::{numerical, HarnessError, Result};
use serde::Serialize;
use stripwaves::dn::DnFactory;
use stripwaves::kp::{compare_l2, compare_sup, kp_integrate, reconstruct_zeta_kp, split_initial, KpOrder};
use stripwaves::snapshot::{dump_fields, SnapshotMeta};
use stripwaves::spectral::dealias;
use stripwaves::waterwave::{integrate, DtPolicy, EvolutionConfig, SurfaceState};

#[derive(Serialize)]
struct GapRow {
    epsilon: f64,
    t: f64,
    sup_gap: f64,
    l2_gap: f64,
}

#[derive(Serialize)]
struct MonitorCsv {
    t: f64,
    hamiltonian: f64,
    mass: f64,
    max_abs_zeta: f64,
    h_min: f64,
    dt: f64,
}

pub(super) fn run(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let g = grid_of(&cfg.grid)?;
    let mut rows = Vec::new();
    for eps in cfg.sweep() {
        let p = cfg.params.build_at(eps)?;
        let (z0, p0) = cfg.initial.build(&g, &p, cfg.seed)?;
        let state = SurfaceState {
            zeta: dealias(&g, &z0),
            psi: dealias(&g, &p0),
            t: 0.0,
        };
        let f = DnFactory::flat_bottom(&g, &p).map_err(HarnessError::Setup)?;
        let ecfg = EvolutionConfig {
            variant: cfg.params.variant,
            dt: DtPolicy::Cfl(cfg.cfl),
            h_floor: cfg.h_floor,
            monitor_every: cfg.monitor_every,
            jump_tol: cfg.tol("step_jump", 1e-3),
            ..Default::default()
        };
        ecfg.validate(&p).map_err(|e| HarnessError::Config(e.to_string()))?;
        let kp0 = split_initial(&g, &state.zeta, &state.psi).map_err(HarnessError::Setup)?;
        let t = cfg.t_final.unwrap_or(1.0 / eps);
        run.log(format!("eps={eps}: water waves to t = {t}"));
        let mut mon = Vec::new();
        let traj = integrate(&state, t, &f, &ecfg, &mut |r, _| {
            mon.push(MonitorCsv {
                t: r.t,
                hamiltonian: r.hamiltonian,
                mass: r.mass,
                max_abs_zeta: r.max_zeta,
                h_min: r.h_min,
                dt: r.dt,
            });
            Ok(())
        })
        .map_err(numerical("kp-compare water waves"))?;
        // slow steps synchronized with the water-wave steps
        let kp = kp_integrate(&g, &kp0, eps * t, KpOrder::Third, &p, eps * traj.dt, cfg.tol("kp_jump", 0.5))
            .map_err(numerical("kp-compare kp"))?;
        let zkp = reconstruct_zeta_kp(&g, &kp, t, &p).map_err(numerical("kp-compare reconstruct"))?;
        let zww = &traj.final_state.zeta;
        let sup_gap = compare_sup(zww, &zkp).map_err(numerical("kp-compare"))?;
        let l2_gap = compare_l2(&g, zww, &zkp).map_err(numerical("kp-compare"))?;
        run.log(format!("eps={eps}: sup gap {sup_gap:.4e}, l2 gap {l2_gap:.4e}"));
        run.csv(&format!("eps_{eps}/monitor.csv"), &mon)?;
        let path = run.file(&format!("eps_{eps}/final.bin"))?;
        let meta = SnapshotMeta {
            grid: g.spec(),
            params: p,
            t,
            fields: vec![],
            written: 0,
        };
        dump_fields(&path, &[("zeta", zww), ("zeta_kp", &zkp)], &meta).map_err(numerical("snapshot"))?;
        rows.push(GapRow {
            epsilon: eps,
            t,
            sup_gap,
            l2_gap,
        });
    }
    run.csv("kp_compare.csv", &rows)?;
    let mut sorted: Vec<&GapRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let decreasing = sorted.windows(2).all(|w| w[1].sup_gap < w[0].sup_gap);
    run.check(Check::flag(9, "sup_gap_strictly_decreasing", decreasing && rows.len() > 1));
    if let (Some(first), Some(last)) = (sorted.first(), sorted.last()) {
        run.check(Check::new(
            9,
            "sup_gap_reduction",
            last.sup_gap / first.sup_gap,
            Bound::Below { limit: 1.0 },
        ));
    }
    Ok(())
}
