use std::f64::consts::PI;

use dislocore::dynamics::{
    extrapolated_collision, simulate, verify_boundary_bound, verify_pair_bound, EventKind, SimulationOptions,
};
use dislocore::energy::Configuration;
use dislocore::geometry::{Domain, Vec2};
use dislocore::green::{Backend, GreenEngine};

fn unit() -> GreenEngine {
    GreenEngine::new(Domain::unit_disk(), Backend::Image).unwrap()
}

fn radial_time(r0: f64) -> f64 {
    2.0 * PI * ((1.0 / r0).ln() - (1.0 - r0 * r0) / 2.0)
}

#[test]
fn boundary_collision_matches_radial_ode() {
    let g = unit();
    let c = Configuration::single(Vec2::new(0.95, 0.0), 1).unwrap();
    let (x, tr) = extrapolated_collision(&c, &g, &SimulationOptions::default()).unwrap();
    assert!((x.time - radial_time(0.95)).abs() < 1e-5, "{}", x.time);
    assert!((x.time - 0.015980).abs() < 1e-5);
    match tr.terminal_event().kind {
        EventKind::BoundaryCollision { index, boundary_point } => {
            assert_eq!(index, 0);
            assert!((boundary_point - Vec2::new(1.0, 0.0)).norm() < 1e-6);
        }
        ref k => panic!("{k:?}"),
    }
}

#[test]
fn boundary_bound_with_spectators() {
    let g = unit();
    let c = Configuration::new(
        vec![Vec2::new(0.98, 0.0), Vec2::new(-0.35, 0.0), Vec2::new(0.15, 0.35)],
        vec![1, -1, 1],
    )
    .unwrap();
    let r = verify_boundary_bound(&g, &c, 0.02, 0.5, 1.0, &SimulationOptions::default()).unwrap();
    assert!(r.first_event_ok, "{:?}", r.first_event);
    assert!(r.passed, "{r:?}");
}

#[test]
fn boundary_time_scales_quadratically() {
    let g = unit();
    let opts = SimulationOptions::default();
    let t = |d: f64| verify_boundary_bound(&g, &Configuration::single(Vec2::new(1.0 - d, 0.0), 1).unwrap(), d, 0.5, 1.0, &opts).unwrap().time;
    let ratio = t(0.05) / t(0.025);
    assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
}

#[test]
fn dipole_examples() {
    let g = GreenEngine::new(Domain::disk(Vec2::zeros(), 50.0).unwrap(), Backend::Image).unwrap();
    let opts = SimulationOptions::default();
    let c = Configuration::new(vec![Vec2::new(-0.05, 0.0), Vec2::new(0.05, 0.0)], vec![1, -1]).unwrap();
    let r = verify_pair_bound(&g, &c, 0.1, 1.0, &opts).unwrap();
    assert!((r.bound - 0.015866).abs() < 1e-6);
    assert!(r.passed && (r.time / (PI * 0.01 / 2.0) - 1.0).abs() < 0.02, "{r:?}");
    match &r.first_event.kind {
        EventKind::PairCollision { location, .. } => assert!(location.norm() < 1e-3),
        k => panic!("{k:?}"),
    }
    let c = Configuration::new(vec![Vec2::new(-0.025, 0.0), Vec2::new(0.025, 0.0), Vec2::new(0.0, 1.0)], vec![1, -1, 1]).unwrap();
    let r = verify_pair_bound(&g, &c, 0.05, 0.95, &opts).unwrap();
    assert!(r.first_event_ok && r.passed, "{r:?}");
}

#[test]
fn energy_is_non_increasing() {
    let g = unit();
    let opts = SimulationOptions { t_max: 0.05, ..SimulationOptions::default() };
    let c = Configuration::new(vec![Vec2::new(0.5, 0.1), Vec2::new(-0.2, 0.3), Vec2::new(0.0, -0.6)], vec![1, 1, -1]).unwrap();
    let tr = simulate(&c, &g, &opts).unwrap();
    assert!(tr.samples.len() > 3);
    assert!(tr.max_energy_increase(&g).unwrap() <= 10.0 * opts.abs_tol);
}

#[test]
fn mirror_symmetric_data_stay_symmetric() {
    let g = unit();
    let opts = SimulationOptions { t_max: 0.2, ..SimulationOptions::default() };
    let c = Configuration::new(vec![Vec2::new(0.3, 0.4), Vec2::new(0.3, -0.4)], vec![1, 1]).unwrap();
    let tr = simulate(&c, &g, &opts).unwrap();
    for s in &tr.samples {
        let (a, b) = (s.positions[0].unwrap(), s.positions[1].unwrap());
        assert!((a.x - b.x).abs() < 1e-8 && (a.y + b.y).abs() < 1e-8);
    }
}

#[test]
fn tolerance_and_collision_radius_convergence() {
    let g = unit();
    let c = Configuration::single(Vec2::new(0.9, 0.1), 1).unwrap();
    let base = SimulationOptions { rel_tol: 1e-8, ..SimulationOptions::default() };
    let t1 = simulate(&c, &g, &base).unwrap().terminal_event().time;
    let t2 = simulate(&c, &g, &SimulationOptions { rel_tol: 5e-9, ..base }).unwrap().terminal_event().time;
    assert!((t1 - t2).abs() < 5.0 * 5e-9 * t1.max(1.0), "{t1} {t2}");

    // T(rc) ≈ T₀ − c·rc² near a straight boundary, so halving rc cuts the gap by four
    let t = |rc: f64| simulate(&c, &g, &SimulationOptions { collision_radius: Some(rc), ..base }).unwrap().terminal_event().time;
    let (a, b, d) = (t(4e-3), t(2e-3), t(1e-3));
    let ratio = (b - a) / (d - b);
    assert!((ratio - 4.0).abs() < 0.5, "{ratio}");
}

#[test]
fn center_stays_put() {
    let g = unit();
    let tr = simulate(&Configuration::single(Vec2::zeros(), 1).unwrap(), &g, &SimulationOptions { t_max: 0.5, ..Default::default() }).unwrap();
    assert!(matches!(tr.terminal_event().kind, EventKind::Horizon));
    assert!(tr.samples.last().unwrap().positions[0].unwrap().norm() < 1e-9);
}
