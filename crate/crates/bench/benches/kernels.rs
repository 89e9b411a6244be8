use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use stripwaves::dn::dn_apply;
use stripwaves::kp::{kp_integrate, KPState, KpOrder};
use stripwaves::spectral;
use stripwaves::waterwave::{rhs, EvolutionConfig};
use stripwaves_bench::fixture;

fn dn(c: &mut Criterion) {
    let mut g = c.benchmark_group("dn_apply");
    for (nx, ny, nz) in [(32, 16, 12), (64, 32, 16)] {
        let f = fixture(nx, ny, nz, 0.1);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{nx}x{ny}x{nz}")), &f, |b, f| {
            b.iter(|| {
                let ctx = f.factory.context(&f.state.zeta).unwrap();
                dn_apply(&ctx, black_box(&f.state.psi)).unwrap()
            })
        });
    }
    g.finish();
}

fn water_wave_rhs(c: &mut Criterion) {
    let f = fixture(64, 32, 12, 0.1);
    let cfg = EvolutionConfig::default();
    c.bench_function("rhs_64x32x12", |b| b.iter(|| rhs(black_box(&f.state), &f.factory, &cfg).unwrap()));
}

fn kp_step(c: &mut Criterion) {
    let f = fixture(128, 32, 4, 0.1);
    let z = spectral::dealias(&f.grid, &spectral::apply_real(&f.grid, &f.state.zeta, |kx, _| if kx == 0.0 { 0.0 } else { 1.0 }));
    let s = KPState {
        zp: z.clone(),
        zm: z,
        tau: 0.0,
        dtau: 0.0,
    };
    c.bench_function("kp_10_steps_128x32", |b| {
        b.iter(|| kp_integrate(&f.grid, black_box(&s), 0.01, KpOrder::Fifth, &f.params, 0.001, 0.5).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = dn, water_wave_rhs, kp_step
}
criterion_main!(benches);
