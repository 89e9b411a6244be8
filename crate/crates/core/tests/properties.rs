use proptest::prelude::*;
use std::f64::consts::PI;
use stripwaves::dn::{dn_apply, DnFactory};
use stripwaves::kp::{kp_integrate, KPState, KpOrder};
use stripwaves::linearized::{energy_parts, frozen_reference, trigonalize, untrigonalize};
use stripwaves::random::{band_limited, SplitMix64};
use stripwaves::snapshot::{dump_fields, load_snapshot, SnapshotMeta};
use stripwaves::spectral::{self, NormFlavor};
use stripwaves::waterwave::{rhs, EvolutionConfig, SurfaceState};
use stripwaves::{Complex64, ScaleParams, SpectralGrid, SurfaceField};

fn grid(nx: usize, ny: usize, nz: usize) -> SpectralGrid {
    SpectralGrid::new(2.0 * PI, 2.0 * PI, nx, ny, nz).unwrap()
}

fn cheap() -> ProptestConfig {
    ProptestConfig::with_cases(12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(seed in any::<u64>(), kmax in 1usize..6) {
        let g = grid(16, 12, 4);
        let f = band_limited(&g, seed, kmax, false);
        let quad = (f.data.iter().map(|v| v * v).sum::<f64>() * g.cell_area()).sqrt();
        let p = ScaleParams::standard(0.1, 0.5).unwrap();
        let n = spectral::sobolev_norm(&g, &f, 0.0, NormFlavor::H, &p);
        prop_assert!((n - quad).abs() <= 1e-12 * quad);
    }

    #[test]
    fn multipliers_compose(seed in any::<u64>(), a in 0.1f64..3.0, b in -2.0f64..2.0) {
        let g = grid(16, 8, 4);
        let f = band_limited(&g, seed, 4, false);
        let m1 = move |kx: f64, _ky: f64| Complex64::new(1.0 + a * kx * kx, b * kx);
        let m2 = move |_kx: f64, ky: f64| Complex64::new((ky * ky + 1.0).sqrt(), 0.0);
        let two = spectral::apply_multiplier(&g, &spectral::apply_multiplier(&g, &f, m2).unwrap(), m1).unwrap();
        let one = spectral::apply_multiplier(&g, &f, move |x, y| m1(x, y) * m2(x, y)).unwrap();
        prop_assert!((&two - &one).max_abs() <= 1e-11 * one.max_abs().max(1.0));
    }

    #[test]
    fn poisson_sandwich(seed in any::<u64>(), eps in 0.01f64..1.0) {
        let g = grid(16, 8, 4);
        let p = ScaleParams::standard(eps, 0.5).unwrap();
        let f = band_limited(&g, seed, 5, true);
        let pf = spectral::sobolev_norm(&g, &f, 0.0, NormFlavor::Poisson, &p);
        let d = spectral::apply_real(&g, &f, spectral::abs_scaled(&p));
        let df = spectral::l2_norm(&g, &d);
        let kmax = (0..g.len())
            .filter(|&n| !g.is_nyquist(n))
            .map(|n| spectral::abs_scaled(&p)(g.kx[n / g.ny], g.ky[n % g.ny]))
            .fold(0.0, f64::max);
        prop_assert!(pf <= df * (1.0 + 1e-12));
        prop_assert!(pf * pf >= df * df / (1.0 + eps.sqrt() * kmax) * (1.0 - 1e-12));
    }

    #[test]
    fn counter_generator_is_positional(seed in any::<u64>(), n in 0u64..64) {
        let mut r = SplitMix64::new(seed);
        for _ in 0..n {
            r.next_u64();
        }
        prop_assert_eq!(r.next_u64(), SplitMix64::at(seed, n));
        let x = SplitMix64::new(seed).next_f64();
        prop_assert!((0.0..1.0).contains(&x));
    }

    #[test]
    fn kp_symbols_are_odd_and_imaginary(kx in -20.0f64..20.0, ky in -20.0f64..20.0, alpha in 0.05f64..1.0) {
        let p = ScaleParams::standard(0.1, alpha).unwrap();
        for order in [KpOrder::Third, KpOrder::Fifth] {
            for b in [stripwaves::kp::Branch::Plus, stripwaves::kp::Branch::Minus] {
                let l = stripwaves::kp::linear_symbol(kx, ky, b, order, &p);
                let m = stripwaves::kp::linear_symbol(-kx, -ky, b, order, &p);
                prop_assert_eq!(l.re, 0.0);
                prop_assert!((l + m).norm() <= 1e-12 * l.norm().max(1.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn flat_dn_single_mode(kx in 0i32..6, ky in 0i32..4, eps in 0.05f64..1.0) {
        let g = grid(16, 8, 16);
        let p = ScaleParams::standard(eps, 0.5).unwrap();
        let f = DnFactory::flat_bottom(&g, &p).unwrap();
        let ctx = f.context(&SurfaceField::zeros(&g)).unwrap();
        let (a, b) = (kx as f64, ky as f64);
        let psi = SurfaceField::from_fn(&g, |x, y| (a * x + b * y).cos());
        let r = eps.sqrt() * (a * a + eps * b * b).sqrt();
        let want = &psi * (r * r.tanh());
        prop_assert!((&dn_apply(&ctx, &psi).unwrap() - &want).max_abs() <= 1e-9);
    }

    #[test]
    fn dn_structure(seed in any::<u64>(), amp in 0.0f64..0.3) {
        let g = grid(16, 8, 12);
        let p = ScaleParams::standard(0.2, 0.5).unwrap();
        let f = DnFactory::flat_bottom(&g, &p).unwrap();
        let zeta = &band_limited(&g, seed, 2, true) * amp;
        let ctx = f.context(&zeta).unwrap();
        let u = band_limited(&g, seed ^ 1, 3, false);
        let v = band_limited(&g, seed ^ 2, 3, false);
        let gu = dn_apply(&ctx, &u).unwrap();
        let gv = dn_apply(&ctx, &v).unwrap();
        let (nu, nv) = (spectral::l2_norm(&g, &u), spectral::l2_norm(&g, &v));
        let uv = spectral::inner(&g, &u, &gv);
        let vu = spectral::inner(&g, &v, &gu);
        let uu = spectral::inner(&g, &u, &gu);
        let vv = spectral::inner(&g, &v, &gv);
        prop_assert!((uv - vu).abs() <= 1e-9 * nu * nv);
        prop_assert!(uu >= 0.0 && vv >= 0.0);
        prop_assert!(uv.abs() <= (uu * vv).sqrt() * (1.0 + 1e-8));
        prop_assert!(gu.mean().abs() <= 1e-9 * nu);
    }

    #[test]
    fn kp_conserves_l2_and_x_means(seed in any::<u64>()) {
        let g = SpectralGrid::new(4.0 * PI, 2.0 * PI, 32, 8, 4).unwrap();
        let p = ScaleParams::standard(0.1, 0.1).unwrap();
        let z = &band_limited(&g, seed, 3, true) * 0.5;
        let z = spectral::dealias(&g, &spectral::apply_real(&g, &z, |kx, _| if kx == 0.0 { 0.0 } else { 1.0 }));
        let s = KPState { zp: z.clone(), zm: &z * -1.0, tau: 0.0, dtau: 0.0 };
        let out = kp_integrate(&g, &s, 1.0, KpOrder::Third, &p, 0.002, 0.5).unwrap();
        let n0 = spectral::l2_norm(&g, &z);
        for f in [&out.zp, &out.zm] {
            prop_assert!((spectral::l2_norm(&g, f) - n0).abs() <= 1e-8 * n0);
            for j in 0..g.ny {
                let m: f64 = (0..g.nx).map(|i| f.data[i * g.ny + j]).sum::<f64>() / g.nx as f64;
                prop_assert!(m.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn snapshot_round_trip(seed in any::<u64>(), t in -1e3f64..1e3) {
        let dir = tempfile::tempdir().unwrap();
        let g = grid(8, 8, 4);
        let f = band_limited(&g, seed, 2, false);
        let meta = SnapshotMeta {
            grid: g.spec(),
            params: ScaleParams::standard(0.1, 0.5).unwrap(),
            t,
            fields: vec![],
            written: 0,
        };
        let path = dir.path().join("f.bin");
        dump_fields(&path, &[("f", &f)], &meta).unwrap();
        let back = load_snapshot(&path, Some(&g)).unwrap();
        prop_assert_eq!(back.meta.t.to_bits(), t.to_bits());
        let same = back.fields[0].data.iter().zip(&f.data).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn linearized_energy_positive_and_transform_invertible(seed in any::<u64>(), amp in 0.0f64..0.5) {
        let g = grid(16, 8, 10);
        let p = ScaleParams::standard(0.2, 0.5).unwrap();
        let f = DnFactory::flat_bottom(&g, &p).unwrap();
        let zeta = &band_limited(&g, seed, 2, true) * amp;
        let psi = band_limited(&g, seed ^ 7, 2, true);
        let r = frozen_reference(&f, &zeta, &psi).unwrap();
        let u = (band_limited(&g, seed ^ 3, 3, true), band_limited(&g, seed ^ 4, 3, true));
        let v = trigonalize(&r, &u);
        let back = untrigonalize(&r, &v);
        prop_assert!((&back.1 - &u.1).max_abs() <= 1e-12 * u.1.max_abs().max(1.0));
        let e = energy_parts(&r, &v, 1).unwrap();
        prop_assert!(e.low >= 0.0 && e.high >= 0.0 && e.comparison() > 0.0);
    }

    #[test]
    fn rhs_commutes_with_reflection(seed in any::<u64>(), amp in 0.0f64..0.5) {
        let g = grid(16, 8, 10);
        let p = ScaleParams::standard(0.2, 0.4).unwrap();
        let f = DnFactory::flat_bottom(&g, &p).unwrap();
        let s = SurfaceState {
            zeta: &band_limited(&g, seed, 3, true) * amp,
            psi: band_limited(&g, seed ^ 5, 3, true),
            t: 0.0,
        };
        let cfg = EvolutionConfig::default();
        let a = rhs(&s, &f, &cfg).unwrap();
        let b = rhs(&s.reflect_x(), &f, &cfg).unwrap();
        prop_assert!((&a.0.reflect_x() - &b.0).max_abs() <= 1e-10);
        prop_assert!((&a.1.reflect_x() - &b.1).max_abs() <= 1e-10);
    }

    #[test]
    fn kp_keeps_y_independent_data(seed in any::<u64>(), fifth in any::<bool>()) {
        let g = SpectralGrid::new(4.0 * PI, 2.0 * PI, 32, 8, 4).unwrap();
        let p = ScaleParams::standard(0.1, 0.1).unwrap();
        let row = band_limited(&g, seed, 4, true);
        let z = spectral::dealias(&g, &SurfaceField::from_fn(&g, |x, _| {
            let i = ((x / g.x(1)).round() as usize) % g.nx;
            row.at(i, 0)
        }));
        let z = spectral::apply_real(&g, &z, |kx, _| if kx == 0.0 { 0.0 } else { 1.0 });
        let order = if fifth { KpOrder::Fifth } else { KpOrder::Third };
        let s = KPState { zp: z.clone(), zm: z, tau: 0.0, dtau: 0.0 };
        let out = kp_integrate(&g, &s, 0.5, order, &p, 0.005, 0.5).unwrap();
        for f in [&out.zp, &out.zm] {
            for i in 0..g.nx {
                for j in 1..g.ny {
                    prop_assert!((f.at(i, j) - f.at(i, 0)).abs() <= 1e-12);
                }
            }
        }
    }
}
