//! Epsilon sweeps of the DN residual and of the commutators.

use super::{grid_of, Run};
use crate::checks::{spread, Bound, Check};
use crate::error::{numerical, Result};
use serde::Serialize;
use stripwaves::dn::{commutator_diagnostic, dn_residual, CommutatorKind, DnFactory};
use stripwaves::spectral::{sobolev_norm, NormFlavor};

#[derive(Serialize)]
struct ResidualRow {
    epsilon: f64,
    residual_norm: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct CommutatorRow {
    epsilon: f64,
    raw_norm: f64,
    raw_ratio: f64,
    weighted_norm: f64,
    weighted_ratio: f64,
    noise_floor: f64,
}

pub(super) fn residual(run: &mut Run) -> Result<()> {
    let g = grid_of(&run.cfg.grid)?;
    let mut rows = Vec::new();
    for eps in run.cfg.sweep() {
        let p = run.cfg.params.build_at(eps)?;
        let (zeta, psi) = run.cfg.initial.build(&g, &p, run.cfg.seed)?;
        let f = DnFactory::flat_bottom(&g, &p).map_err(numerical("residual"))?;
        let ctx = f.context(&zeta).map_err(numerical("residual"))?;
        let r = dn_residual(&ctx, &psi).map_err(numerical("residual"))?;
        let norm = sobolev_norm(&g, &r, 0.0, NormFlavor::HEps, &p);
        run.log(format!("eps={eps}: |R psi| = {norm:.4e}, ratio {:.4}", norm / eps.sqrt()));
        rows.push(ResidualRow {
            epsilon: eps,
            residual_norm: norm,
            ratio: norm / eps.sqrt(),
        });
    }
    run.csv("residual_scaling.csv", &rows)?;
    let s = spread(&rows.iter().map(|r| r.ratio).collect::<Vec<_>>());
    let lim = run.cfg.tol("residual_spread", 2.0);
    run.check(Check::new(4, "residual_ratio_spread", s, Bound::Below { limit: lim }));
    Ok(())
}

pub(super) fn commutator(run: &mut Run) -> Result<()> {
    let g = grid_of(&run.cfg.grid)?;
    let mut rows = Vec::new();
    for eps in run.cfg.sweep() {
        let p = run.cfg.params.build_at(eps)?;
        let (zeta, psi) = run.cfg.initial.build(&g, &p, run.cfg.seed)?;
        let f = DnFactory::flat_bottom(&g, &p).map_err(numerical("commutator"))?;
        let ctx = f.context(&zeta).map_err(numerical("commutator"))?;
        let raw = commutator_diagnostic(&ctx, &psi, 1, CommutatorKind::Raw, 0.0).map_err(numerical("commutator"))?;
        let wtd =
            commutator_diagnostic(&ctx, &psi, 1, CommutatorKind::RhoWeighted, 0.0).map_err(numerical("commutator"))?;
        run.log(format!(
            "eps={eps}: raw ratio {:.4}, weighted ratio {:.4}",
            raw.ratio, wtd.ratio
        ));
        rows.push(CommutatorRow {
            epsilon: eps,
            raw_norm: raw.norm,
            raw_ratio: raw.ratio,
            weighted_norm: wtd.norm,
            weighted_ratio: wtd.ratio,
            noise_floor: raw.noise_floor.max(wtd.noise_floor),
        });
    }
    run.csv("commutator_scaling.csv", &rows)?;
    let lim = run.cfg.tol("commutator_spread", 2.0);
    let raw = spread(&rows.iter().map(|r| r.raw_ratio).collect::<Vec<_>>());
    let wtd = spread(&rows.iter().map(|r| r.weighted_ratio).collect::<Vec<_>>());
    run.check(Check::new(5, "commutator_raw_spread", raw, Bound::Below { limit: lim }));
    run.check(Check::new(5, "commutator_weighted_spread", wtd, Bound::Below { limit: lim }));
    let above_noise = rows.iter().all(|r| r.raw_norm > 10.0 * r.noise_floor && r.weighted_norm > 10.0 * r.noise_floor);
    run.check(Check::flag(5, "commutator_above_noise", above_noise));
    Ok(())
}
