//! Cross-module checks on the default map: the transfer map on the
//! invariant line commutes with the dynamics, and the renderer agrees with
//! pointwise escape classification.

use implab::julia::{escape_classify, render_k_slice, GridSpec, SliceGeometry};
use implab::lavaurs::lavaurs_1d;
use implab::{c, ComplexPoint, PolyMap2, C64};

const TOL: f64 = 1e-10;

fn f0_line(map: &PolyMap2, x: C64) -> C64 {
    map.eval_f(C64::default(), ComplexPoint::new(x, C64::default())).unwrap().x
}

#[test]
fn transfer_map_commutes_with_the_dynamics() {
    let map = PolyMap2::default_regular();
    let alpha = c(-25.0, 0.0);
    for x in [-0.1, -0.08, -0.06] {
        let x = c(x, 0.0);
        let lhs = lavaurs_1d(&map, alpha, f0_line(&map, x), TOL).unwrap();
        let rhs = f0_line(&map, lavaurs_1d(&map, alpha, x, TOL).unwrap());
        assert!((lhs - rhs).norm() < 1e-7, "{lhs} vs {rhs}");
    }
}

#[test]
fn unit_phase_shift_is_one_step_of_the_dynamics() {
    let map = PolyMap2::default_regular();
    let x = c(-0.08, 0.0);
    let shifted = lavaurs_1d(&map, c(-24.0, 0.0), x, TOL).unwrap();
    let stepped = lavaurs_1d(&map, c(-25.0, 0.0), f0_line(&map, x), TOL).unwrap();
    assert!((shifted - stepped).norm() < 1e-7, "{shifted} vs {stepped}");
}

#[test]
fn rendered_slice_matches_pointwise_classification() {
    let map = PolyMap2::default_regular();
    let eps = c(std::f64::consts::PI / 400.0, 0.0);
    let slice = SliceGeometry::x_plane(c(-1.6, -1.2), c(0.8, 1.2), C64::default());
    let grid = GridSpec::new(slice, 17, 13, 50.0, 500).unwrap();
    let raster = render_k_slice(&map, eps, &grid).unwrap();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let cell = escape_classify(&map, eps, grid.point(i, j), grid.escape_radius, grid.max_iter).unwrap();
            assert_eq!(raster.cells[j * grid.nx + i], cell, "pixel ({i}, {j})");
        }
    }
}
