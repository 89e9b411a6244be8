//! Flat oracle, self-adjointness and positivity, shape derivative.

use super::{grid_of, Run};
use crate::checks::{Bound, Check};
use crate::error::{numerical, Result};
use serde::Serialize;
use std::f64::consts::PI;
use stripwaves::dn::{dn_apply, dn_apply_report, dn_shape_derivative, DnFactory};
use stripwaves::elliptic::SolverOptions;
use stripwaves::random::{band_limited, mix};
use stripwaves::spectral::{self, forward, NormFlavor};
use stripwaves::{GridSpec, ScaleParams, SpectralGrid, SurfaceField};

const SAMPLES: u64 = 50;
const SAMPLE_KMAX: usize = 4;

#[derive(Serialize)]
struct FlatRow {
    epsilon: f64,
    max_rel_err: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct SampleRow {
    nx: usize,
    sample: u64,
    selfadjoint_defect: f64,
    energy: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct IntervalRow {
    nx: usize,
    ny: usize,
    nz: usize,
    r1: f64,
    r2: f64,
}

#[derive(Serialize)]
struct ShapeRow {
    direction: u64,
    err_delta: f64,
    err_half_delta: f64,
    ratio: f64,
}

pub(super) fn run(run: &mut Run) -> Result<()> {
    flat_oracle(run)?;
    self_adjoint(run)?;
    shape_derivative(run)
}

fn flat_oracle(run: &mut Run) -> Result<()> {
    let g = grid_of(&run.cfg.grid)?;
    let kmax = (g.nx.min(g.ny) / 3).max(1);
    let psi = band_limited(&g, run.cfg.seed, kmax, true);
    let ps = forward(&g, &psi);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &eps in &run.cfg.sweep() {
        let p = run.cfg.params.build_at(eps)?;
        let f = DnFactory::flat_bottom(&g, &p).map_err(numerical("flat-oracle"))?;
        let ctx = f.context(&SurfaceField::zeros(&g)).map_err(numerical("flat-oracle"))?;
        let rep = dn_apply_report(&ctx, &psi).map_err(numerical("flat-oracle"))?;
        let gs = forward(&g, &rep.value);
        let sym = spectral::flat_dn_symbol(&p);
        let want: Vec<_> = (0..g.len())
            .map(|n| ps[n] * sym(g.kx[n / g.ny], g.ky[n % g.ny]))
            .collect();
        let scale = want.iter().fold(0.0f64, |a, w| a.max(w.norm()));
        let err = (0..g.len())
            .filter(|&n| !g.is_nyquist(n) && want[n].norm() > 1e-12 * scale)
            .map(|n| (gs[n] - want[n]).norm() / want[n].norm())
            .fold(0.0, f64::max);
        worst = worst.max(err);
        run.log(format!("flat oracle eps={eps}: max mode-wise error {err:.3e}"));
        rows.push(FlatRow {
            epsilon: eps,
            max_rel_err: err,
            iterations: rep.iterations,
        });
    }
    run.csv("flat_oracle.csv", &rows)?;
    let lim = run.cfg.tol("flat_oracle", 1e-9);
    run.check(Check::new(1, "flat_oracle_rel_err", worst, Bound::AtMost { limit: lim }));
    Ok(())
}

struct Interval {
    defect: f64,
    min_energy: f64,
    r1: f64,
    r2: f64,
}

fn sample_interval(spec: GridSpec, p: &ScaleParams, seed: u64, rows: &mut Vec<SampleRow>) -> Result<Interval> {
    let g = grid_of(&spec)?;
    let f = DnFactory::flat_bottom(&g, p).map_err(numerical("self-adjointness"))?;
    let zeta = SurfaceField::from_fn(&g, |x, y| 0.05 * (x.sin() + 0.5 * y.cos()));
    let ctx = f.context(&zeta).map_err(numerical("self-adjointness"))?;
    let e = p.epsilon;
    let mut out = Interval {
        defect: 0.0,
        min_energy: f64::INFINITY,
        r1: f64::INFINITY,
        r2: f64::NEG_INFINITY,
    };
    for i in 0..SAMPLES {
        let u = band_limited(&g, mix(seed ^ (2 * i + 1)), SAMPLE_KMAX, true);
        let v = band_limited(&g, mix(seed ^ (2 * i + 2)), SAMPLE_KMAX, true);
        let gu = dn_apply(&ctx, &u).map_err(numerical("self-adjointness"))?;
        let gv = dn_apply(&ctx, &v).map_err(numerical("self-adjointness"))?;
        let nu = spectral::l2_norm(&g, &u);
        let nv = spectral::l2_norm(&g, &v);
        let defect = (spectral::inner(&g, &u, &gv) - spectral::inner(&g, &v, &gu)).abs() / (nu * nv);
        let energy = spectral::inner(&g, &u, &gu) / e;
        let pu = spectral::sobolev_norm(&g, &u, 0.0, NormFlavor::Poisson, p);
        let ratio = energy / (pu * pu);
        out.defect = out.defect.max(defect);
        out.min_energy = out.min_energy.min(energy);
        out.r1 = out.r1.min(ratio);
        out.r2 = out.r2.max(ratio);
        rows.push(SampleRow {
            nx: g.nx,
            sample: i,
            selfadjoint_defect: defect,
            energy,
            ratio,
        });
    }
    Ok(out)
}

fn self_adjoint(run: &mut Run) -> Result<()> {
    let p = run.cfg.params.build()?;
    let lx = run.cfg.grid.lx;
    let ly = run.cfg.grid.ly;
    let base = GridSpec {
        lx,
        ly,
        nx: 32,
        ny: 16,
        nz: 12,
    };
    let fine = GridSpec {
        nx: 64,
        ny: 32,
        nz: 24,
        ..base
    };
    let mut rows = Vec::new();
    let a = sample_interval(base, &p, run.cfg.seed, &mut rows)?;
    let b = sample_interval(fine, &p, run.cfg.seed, &mut rows)?;
    run.csv("selfadjoint_samples.csv", &rows)?;
    let intervals: Vec<_> = [(base, &a), (fine, &b)]
        .iter()
        .map(|(s, i)| IntervalRow {
            nx: s.nx,
            ny: s.ny,
            nz: s.nz,
            r1: i.r1,
            r2: i.r2,
        })
        .collect();
    run.csv("ratio_interval.csv", &intervals)?;
    run.log(format!("ratio interval [{:.6}, {:.6}] -> [{:.6}, {:.6}]", a.r1, a.r2, b.r1, b.r2));
    let drift = ((a.r1 - b.r1) / a.r1).abs().max(((a.r2 - b.r2) / a.r2).abs());
    let lim = run.cfg.tol("selfadjoint_defect", 1e-9);
    run.check(Check::new(2, "selfadjoint_defect", a.defect.max(b.defect), Bound::AtMost { limit: lim }));
    run.check(Check::new(2, "positivity_min", a.min_energy.min(b.min_energy), Bound::AtLeast { limit: 0.0 }));
    run.check(Check::new(2, "ratio_lower_bound", a.r1.min(b.r1), Bound::Above { limit: 0.0 }));
    let lim = run.cfg.tol("ratio_interval_drift", 0.05);
    run.check(Check::new(2, "ratio_interval_drift", drift, Bound::Below { limit: lim }));
    Ok(())
}

fn shape_derivative(run: &mut Run) -> Result<()> {
    // strong nonlinearity and a tight solver so the O(delta^2) error sits
    // well above both the solver noise and the discretization floor
    let p = ScaleParams::standard(1.0, run.cfg.params.alpha).map_err(numerical("shape-derivative"))?;
    let g = SpectralGrid::new(2.0 * PI, 2.0 * PI, 64, 32, 24).map_err(numerical("shape-derivative"))?;
    let opts = SolverOptions {
        tol: 1e-13,
        ..Default::default()
    };
    let f = DnFactory::new(&g, &p, SurfaceField::zeros(&g), opts).map_err(numerical("shape-derivative"))?;
    let zeta = SurfaceField::from_fn(&g, |x, y| 0.3 * (x.sin() + 0.5 * y.cos()));
    let psi = band_limited(&g, run.cfg.seed, 3, true);
    let ctx = f.context(&zeta).map_err(numerical("shape-derivative"))?;
    let delta = 1e-3;
    let (lo, hi) = (run.cfg.tol("shape_ratio_min", 3.5), run.cfg.tol("shape_ratio_max", 4.5));
    let mut rows = Vec::new();
    for i in 0..5u64 {
        let h = band_limited(&g, mix(run.cfg.seed.wrapping_add(1000 + i)), 3, false);
        let exact = dn_shape_derivative(&ctx, &psi, &h).map_err(numerical("shape-derivative"))?;
        let err = |d: f64| -> Result<f64> {
            let a = f.context(&(&zeta + &(&h * d))).and_then(|c| dn_apply(&c, &psi));
            let b = f.context(&(&zeta - &(&h * d))).and_then(|c| dn_apply(&c, &psi));
            let (a, b) = (a.map_err(numerical("shape-derivative"))?, b.map_err(numerical("shape-derivative"))?);
            let fd = &(&a - &b) * (0.5 / d);
            Ok((&fd - &exact).max_abs() / exact.max_abs())
        };
        let (e1, e2) = (err(delta)?, err(delta / 2.0)?);
        rows.push(ShapeRow {
            direction: i,
            err_delta: e1,
            err_half_delta: e2,
            ratio: e1 / e2,
        });
        run.check(Check::new(3, &format!("shape_fd_ratio_h{i}"), e1 / e2, Bound::Within { lo, hi }));
    }
    run.csv("shape_derivative.csv", &rows)
}
