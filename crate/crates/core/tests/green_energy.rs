use std::f64::consts::PI;

use approx::assert_relative_eq;
use dislocore::energy::{
    circulation, energy_and_forces, extract_renormalized, near_boundary_decomposition, peach_koehler, renormalized_energy,
    Configuration,
};
use dislocore::geometry::{Domain, Vec2};
use dislocore::green::{Backend, GreenEngine};
use dislocore::quadrature::QuadratureOptions;

fn unit() -> GreenEngine {
    GreenEngine::new(Domain::unit_disk(), Backend::Image).unwrap()
}

fn ellipse_bie(panels: usize) -> GreenEngine {
    GreenEngine::new(Domain::ellipse(Vec2::zeros(), 1.5, 1.0, 256).unwrap(), Backend::BoundaryIntegral { panels }).unwrap()
}

#[test]
fn regular_part_examples() {
    let g = unit();
    assert!(g.regular_part(Vec2::zeros(), Vec2::new(0.5, 0.0)).unwrap().abs() < 1e-14);
    let x = Vec2::new(0.6, 0.0);
    assert_relative_eq!(g.regular_part(x, x).unwrap(), -0.0710, epsilon = 1e-4);
    assert_relative_eq!(g.robin_function(Vec2::new(0.8, 0.0)).unwrap(), -0.1626, epsilon = 1e-4);
    assert_eq!(g.robin_function(Vec2::zeros()).unwrap(), 0.0);
}

#[test]
fn grad_robin_examples() {
    let g = unit();
    let d = g.grad_robin(Vec2::new(0.5, 0.0)).unwrap();
    assert_relative_eq!(d.x, -0.5 / (PI * 0.75), epsilon = 1e-12);
    assert!(d.y.abs() < 1e-14);
    assert!(g.grad_robin(Vec2::zeros()).unwrap().norm() < 1e-14);
}

#[test]
fn bie_grad_robin_matches_finite_differences() {
    let g = ellipse_bie(256);
    let h = 1e-5;
    for x in [Vec2::new(0.3, 0.2), Vec2::new(-1.0, 0.4), Vec2::new(0.1, -0.8)] {
        let d = g.grad_robin(x).unwrap();
        let fd = Vec2::new(
            (g.robin_function(x + Vec2::new(h, 0.0)).unwrap() - g.robin_function(x - Vec2::new(h, 0.0)).unwrap()) / (2.0 * h),
            (g.robin_function(x + Vec2::new(0.0, h)).unwrap() - g.robin_function(x - Vec2::new(0.0, h)).unwrap()) / (2.0 * h),
        );
        assert!((d - fd).norm() / d.norm() < 1e-5, "{d:?} vs {fd:?}");
    }
}

#[test]
fn liouville_at_the_center_of_the_disk() {
    let g = unit();
    // −Δh = 2/π there; the residual is a stencil error only
    let r = g.liouville_residual(Vec2::zeros(), 1e-3).unwrap();
    assert!(r.abs() < 1e-5, "{r}");
    let target = 2.0 / PI * (-4.0 * PI * g.robin_function(Vec2::new(0.3, 0.2)).unwrap()).exp();
    assert!(g.liouville_residual(Vec2::new(0.3, 0.2), 1e-3).unwrap().abs() < 1e-3 * target);
}

#[test]
fn liouville_residual_on_ellipse_improves_with_panels() {
    // spectral convergence: by 64 panels only the stencil error is left
    let x = Vec2::new(0.4, 0.3);
    let r: Vec<f64> = [16, 32, 64, 256].iter().map(|&p| ellipse_bie(p).liouville_residual(x, 1e-3).unwrap().abs()).collect();
    assert!(r[1] < r[0] && r[2] < r[1], "{r:?}");
    assert!((r[3] - r[2]).abs() < 1e-9, "{r:?}");
}

#[test]
fn green_function_vanishes_on_the_boundary() {
    let g = unit();
    for k in 0..16 {
        let t = 2.0 * PI * k as f64 / 16.0;
        let x = (1.0 - 1e-8) * Vec2::new(t.cos(), t.sin());
        for y in [Vec2::new(0.2, -0.3), Vec2::new(-0.6, 0.1)] {
            assert!(g.green(x, y).unwrap().abs() < 1e-6);
        }
    }
}

#[test]
fn regular_part_is_harmonic_in_x() {
    for g in [unit(), ellipse_bie(256)] {
        let (x, y) = (Vec2::new(0.2, 0.1), Vec2::new(-0.3, 0.3));
        let lap = |s: f64| {
            let k = |p: Vec2| g.regular_part(p, y).unwrap();
            (k(x + Vec2::new(s, 0.0)) + k(x - Vec2::new(s, 0.0)) + k(x + Vec2::new(0.0, s)) + k(x - Vec2::new(0.0, s))
                - 4.0 * k(x))
                / (s * s)
        };
        let (a, b) = (lap(4e-2).abs(), lap(1e-2).abs());
        assert!(b < a || b < 1e-6, "{a} {b}");
    }
}

#[test]
fn symmetry_of_the_regular_part() {
    let (x, y) = (Vec2::new(0.7, -0.2), Vec2::new(-0.1, 0.5));
    let g = unit();
    assert!((g.regular_part(x, y).unwrap() - g.regular_part(y, x).unwrap()).abs() < 1e-8);
    let e = ellipse_bie(256);
    let (x, y) = (Vec2::new(1.2, -0.2), Vec2::new(-0.4, 0.7));
    assert!((e.regular_part(x, y).unwrap() - e.regular_part(y, x).unwrap()).abs() < 1e-6);
}

#[test]
fn single_dislocation_energy_and_force() {
    let g = unit();
    let c = Configuration::single(Vec2::new(0.8, 0.0), 1).unwrap();
    assert_relative_eq!(renormalized_energy(&c, &g).unwrap(), -0.08131, epsilon = 1e-5);
    let c = Configuration::single(Vec2::new(0.5, 0.0), 1).unwrap();
    let f = peach_koehler(&c, &g, 0).unwrap();
    assert_relative_eq!(f.x, 0.5 / (2.0 * PI * 0.75), epsilon = 1e-12);
    assert_relative_eq!(f.x, 0.10610, epsilon = 1e-5);
}

#[test]
fn pair_energy_matches_core_radius_fit() {
    let g = unit();
    let q = QuadratureOptions { rel_tol: 1e-10, ..QuadratureOptions::default() };
    for b in [[1, -1], [1, 1]] {
        let c = Configuration::new(vec![Vec2::new(0.1, 0.0), Vec2::new(-0.1, 0.0)], b.to_vec()).unwrap();
        let fit = extract_renormalized(&c, &g, &[2e-2, 1e-2, 5e-3, 2.5e-3], &q).unwrap();
        let e = renormalized_energy(&c, &g).unwrap();
        assert!((fit.intercept - e).abs() < 1e-2, "{} vs {e}", fit.intercept);
        assert_relative_eq!(fit.slope, 2.0 / (4.0 * PI), max_relative = 1e-2);
    }
}

#[test]
fn single_center_core_fit() {
    let g = unit();
    let c = Configuration::single(Vec2::zeros(), 1).unwrap();
    let fit = extract_renormalized(&c, &g, &[1e-1, 1e-2, 1e-3], &QuadratureOptions::default()).unwrap();
    assert_relative_eq!(fit.slope, 1.0 / (4.0 * PI), max_relative = 1e-2);
    assert!(fit.intercept.abs() < 1e-2);
}

#[test]
fn like_signs_repel_and_opposite_signs_attract() {
    let g = GreenEngine::new(Domain::disk(Vec2::zeros(), 50.0).unwrap(), Backend::Image).unwrap();
    let pos = vec![Vec2::new(0.3, 0.1), Vec2::new(-0.2, -0.1)];
    let sep = pos[0] - pos[1];
    let (_, f) = energy_and_forces(&Configuration::new(pos.clone(), vec![1, 1]).unwrap(), &g).unwrap();
    assert!(f[0].dot(&sep) > 0.0 && f[1].dot(&-sep) > 0.0);
    let (_, f) = energy_and_forces(&Configuration::new(pos, vec![1, -1]).unwrap(), &g).unwrap();
    assert!(f[0].dot(&sep) < 0.0 && f[1].dot(&-sep) < 0.0);
}

#[test]
fn energy_decreases_toward_boundary_and_collapse() {
    let g = unit();
    let path: Vec<f64> = (0..=10).map(|k| 0.9 + 0.0099 * k as f64).collect();
    let e: Vec<f64> =
        path.iter().map(|&r| renormalized_energy(&Configuration::single(Vec2::new(r, 0.0), 1).unwrap(), &g).unwrap()).collect();
    assert!(e.windows(2).all(|w| w[1] < w[0]));
    let pair = |s: f64| {
        let c = Configuration::new(vec![Vec2::new(s / 2.0, 0.0), Vec2::new(-s / 2.0, 0.0)], vec![1, -1]).unwrap();
        renormalized_energy(&c, &g).unwrap()
    };
    assert!(pair(1e-6) < pair(1e-3) && pair(1e-3) < pair(1e-1));
}

#[test]
fn near_boundary_remainder_is_bounded() {
    let g = unit();
    for d in [1e-2, 1e-3, 1e-4] {
        let c = Configuration::single(Vec2::new(1.0 - d, 0.0), 1).unwrap();
        let r = near_boundary_decomposition(&c, &g, 0).unwrap();
        assert!(r.remainder.norm() <= 0.2);
        assert_relative_eq!(r.leading.x, 1.0 / (4.0 * PI * d), max_relative = 1e-12);
    }
}

#[test]
fn circulation_of_pair() {
    let g = unit();
    let c = Configuration::new(vec![Vec2::new(0.1, 0.0), Vec2::new(-0.1, 0.0)], vec![1, -1]).unwrap();
    assert!((circulation(&c, &g, c.positions[0], 0.05, 512).unwrap() - 1.0).abs() < 1e-8);
    assert!((circulation(&c, &g, c.positions[1], 0.05, 512).unwrap() + 1.0).abs() < 1e-8);
    assert!(circulation(&c, &g, Vec2::zeros(), 0.5, 512).unwrap().abs() < 1e-8);
}
