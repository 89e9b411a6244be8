//! Growth of the linearized energy on a frozen reference.

use super::{grid_of, Run};
use crate::checks::{spread, Bound, Check};
use crate::error::{numerical, HarnessError, Result};
use serde::Serialize;
use stripwaves::dn::DnFactory;
use stripwaves::linearized::{energy_parts, frozen_reference, linear_integrate, LinearConfig, ReferenceTrajectory};
use stripwaves::random::{band_limited, mix};

const CORPUS: u64 = 50;

#[derive(Serialize)]
struct EnergyCsv {
    epsilon: f64,
    dt: f64,
    t: f64,
    e_low: f64,
    e_high: f64,
    e_comb: f64,
    lambda_star_running: f64,
    bound: f64,
}

#[derive(Serialize)]
struct LambdaRow {
    epsilon: f64,
    dt: f64,
    lambda_star: f64,
}

#[derive(Serialize)]
struct RatioRow {
    sample: u64,
    energy: f64,
    comparison: f64,
    ratio: f64,
}

pub(super) fn run(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let g = grid_of(&cfg.grid)?;
    let t_final = cfg.t_final.unwrap_or(1.0);
    let dt = cfg.tol("linear_dt", 0.01);
    let k = 1;
    let mut log = Vec::new();
    let mut lambdas = Vec::new();
    let mut refine = Vec::new();
    for eps in cfg.sweep() {
        let p = cfg.params.build_at(eps)?;
        let f = DnFactory::flat_bottom(&g, &p).map_err(HarnessError::Setup)?;
        let (zeta, psi) = cfg.initial.build(&g, &p, cfg.seed)?;
        let r = frozen_reference(&f, &zeta, &psi).map_err(HarnessError::Setup)?;
        let traj = ReferenceTrajectory::Frozen(Box::new(r));
        let v0 = (band_limited(&g, cfg.seed, 4, true), band_limited(&g, cfg.seed + 1, 4, true));
        let mut pair = Vec::new();
        for h in [dt, dt / 2.0] {
            let lc = LinearConfig {
                dt: h,
                k,
                jump_tol: cfg.tol("energy_jump", 0.5),
                log_every: 1,
            };
            let out = linear_integrate(&traj, &v0, None, t_final, &lc).map_err(numerical("linearized-energy"))?;
            for row in &out.log {
                log.push(EnergyCsv {
                    epsilon: eps,
                    dt: h,
                    t: row.t,
                    e_low: row.e_low,
                    e_high: row.e_high,
                    e_comb: row.e_comb,
                    lambda_star_running: row.lambda_running,
                    bound: row.bound,
                });
            }
            run.log(format!("eps={eps} dt={h}: lambda* = {:.6}", out.lambda_star));
            lambdas.push(LambdaRow {
                epsilon: eps,
                dt: h,
                lambda_star: out.lambda_star,
            });
            pair.push(out.lambda_star);
        }
        refine.push((pair[0] - pair[1]).abs() / pair[1].abs());
    }
    run.csv("energy_log.csv", &log)?;
    run.csv("lambda_star.csv", &lambdas)?;
    let finite = lambdas.iter().all(|l| l.lambda_star.is_finite());
    run.check(Check::flag(10, "lambda_star_finite", finite));
    let worst = refine.iter().copied().fold(0.0, f64::max);
    run.check(Check::new(
        10,
        "lambda_star_dt_refinement",
        worst,
        Bound::AtMost {
            limit: cfg.tol("lambda_refinement", 0.1),
        },
    ));
    let fine: Vec<f64> = lambdas.iter().skip(1).step_by(2).map(|l| l.lambda_star.abs()).collect();
    run.check(Check::new(
        10,
        "lambda_star_eps_spread",
        spread(&fine),
        Bound::Below {
            limit: cfg.tol("lambda_spread", 2.0),
        },
    ));
    ratio_corpus(run)
}

fn ratio_corpus(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let g = grid_of(&cfg.grid)?;
    let p = cfg.params.build()?;
    let f = DnFactory::flat_bottom(&g, &p).map_err(HarnessError::Setup)?;
    let (zeta, psi) = cfg.initial.build(&g, &p, cfg.seed)?;
    let r = frozen_reference(&f, &zeta, &psi).map_err(HarnessError::Setup)?;
    let mut rows = Vec::new();
    for i in 0..CORPUS {
        let v = (
            band_limited(&g, mix(cfg.seed ^ (2 * i + 1)), 4, true),
            band_limited(&g, mix(cfg.seed ^ (2 * i + 2)), 4, true),
        );
        let e = energy_parts(&r, &v, 1).map_err(numerical("energy-ratio"))?;
        rows.push(RatioRow {
            sample: i,
            energy: e.combined(),
            comparison: e.comparison(),
            ratio: e.combined() / e.comparison(),
        });
    }
    run.csv("energy_ratio.csv", &rows)?;
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    run.log(format!("energy ratio interval [{lo:.4}, {hi:.4}]"));
    run.check(Check::new(10, "energy_ratio_min", lo, Bound::Above { limit: 0.0 }));
    run.check(Check::new(10, "energy_ratio_max", hi, Bound::Below { limit: f64::INFINITY }));
    Ok(())
}
