//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;
use stripwaves::dn::DnFactory;
use stripwaves::random::band_limited;
use stripwaves::waterwave::SurfaceState;
use stripwaves::{ScaleParams, SpectralGrid};

pub struct Fixture {
    pub grid: SpectralGrid,
    pub params: ScaleParams,
    pub factory: DnFactory,
    pub state: SurfaceState,
}

/// Smooth random surface state on a `2pi x 2pi` grid.
pub fn fixture(nx: usize, ny: usize, nz: usize, eps: f64) -> Fixture {
    let grid = SpectralGrid::new(2.0 * PI, 2.0 * PI, nx, ny, nz).unwrap();
    let params = ScaleParams::standard(eps, 0.5).unwrap();
    let factory = DnFactory::flat_bottom(&grid, &params).unwrap();
    let state = SurfaceState {
        zeta: &band_limited(&grid, 1, 4, true) * 0.3,
        psi: band_limited(&grid, 2, 4, true),
        t: 0.0,
    };
    Fixture {
        grid,
        params,
        factory,
        state,
    }
}
