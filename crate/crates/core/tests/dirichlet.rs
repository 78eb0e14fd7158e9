use std::f64::consts::PI;

use approx::assert_relative_eq;
use dislocore::dirichlet::{BoundaryDatum, CorrectorBackend, DirichletOptions, DirichletProblem};
use dislocore::geometry::{Domain, Vec2};
use dislocore::minimize::{confinement_sweep, minimize_finite_eps, minimize_limit, MinimizeOptions};
use dislocore::quadrature::QuadratureOptions;

fn disk() -> DirichletProblem {
    DirichletProblem::uniform(Domain::unit_disk()).unwrap()
}

/// Closed form of the limit functional on the unit disk with uniform datum.
fn disk_oracle(a: &[Vec2]) -> f64 {
    let mut f = 0.0;
    for (i, p) in a.iter().enumerate() {
        f -= PI * (1.0 - p.norm_squared()).ln();
        for q in &a[i + 1..] {
            let (z, w) = (num_complex::Complex::new(p.x, p.y), num_complex::Complex::new(q.x, q.y));
            f -= 2.0 * PI * ((z - w).norm().ln() + (1.0 - z.conj() * w).norm().ln());
        }
    }
    f
}

fn q() -> QuadratureOptions {
    QuadratureOptions { rel_tol: 1e-10, ..QuadratureOptions::default() }
}

#[test]
fn limit_functional_matches_closed_form() {
    let p = disk();
    for a in [Vec2::new(0.4, 0.2), Vec2::new(-0.7, 0.1), Vec2::new(0.0, -0.85)] {
        assert_relative_eq!(p.limit_functional(a, &q()).unwrap(), disk_oracle(&[a]), max_relative = 1e-8);
    }
    let pair = [Vec2::new(0.4, 0.2), Vec2::new(-0.3, 0.1)];
    assert_relative_eq!(p.limit_functional_n(&pair, &q()).unwrap(), disk_oracle(&pair), max_relative = 1e-8);
}

#[test]
fn corrector_is_harmonic() {
    let p = disk();
    let centers = [Vec2::new(0.3, 0.0), Vec2::new(-0.2, 0.4)];
    for backend in [CorrectorBackend::Fourier, CorrectorBackend::BoundaryIntegral] {
        let p = DirichletProblem::new(
            Domain::unit_disk(),
            BoundaryDatum::uniform(p.domain()),
            DirichletOptions { backend, ..DirichletOptions::default() },
        )
        .unwrap();
        let v = p.corrector(&centers).unwrap();
        let h = 1e-3;
        for k in 0..20 {
            let t = 2.0 * PI * k as f64 / 20.0;
            let x = (0.15 + 0.035 * k as f64) * Vec2::new(t.cos(), t.sin());
            if centers.iter().any(|c| (x - c).norm() < 0.05) {
                continue;
            }
            let lap = (v.value(x + Vec2::new(h, 0.0)) + v.value(x - Vec2::new(h, 0.0)) + v.value(x + Vec2::new(0.0, h))
                + v.value(x - Vec2::new(0.0, h))
                - 4.0 * v.value(x))
                / (h * h);
            assert!(lap.abs() < 1e-6, "{backend:?} {x:?} {lap}");
        }
    }
}

#[test]
fn n_functional_reduces_to_single() {
    let p = disk();
    let a = Vec2::new(0.25, -0.45);
    let one = p.limit_functional(a, &q()).unwrap();
    assert!((p.limit_functional_n(&[a], &q()).unwrap() - one).abs() < 1e-10);
}

#[test]
fn rotation_invariance_on_the_disk() {
    let p = disk();
    let a = Vec2::new(0.5, 0.2);
    let f = p.limit_functional(a, &q()).unwrap();
    for phi in [0.3, 1.7, 4.0] {
        let r = nalgebra::Rotation2::new(phi) * a;
        assert!((p.limit_functional(r, &q()).unwrap() - f).abs() < 1e-8);
    }
}

#[test]
fn origin_is_the_single_center_minimum() {
    let p = disk();
    assert!(p.limit_functional(Vec2::new(0.5, 0.0), &q()).unwrap() > p.limit_functional(Vec2::zeros(), &q()).unwrap());
}

#[test]
fn blow_up_at_the_boundary() {
    let p = disk();
    let mut last = f64::NEG_INFINITY;
    for d in [1e-1, 1e-2, 1e-3, 1e-4] {
        let f = p.limit_functional(Vec2::new(1.0 - d, 0.0), &q()).unwrap();
        assert!(f > last);
        // F − π log d stays bounded below
        assert!(f - PI * d.ln() > -1.0);
        last = f;
    }
    assert_eq!(p.limit_functional(Vec2::new(1.0, 0.0), &q()).unwrap(), f64::INFINITY);
}

#[test]
fn continuous_convergence_along_sequences() {
    let p = disk();
    let a = Vec2::new(0.4, 0.2);
    let f = p.limit_functional(a, &q()).unwrap();
    for rate in [0.5, 1.0, 2.0] {
        let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&e: &f64| {
                let ae = a + e.powf(rate) * Vec2::new(0.3, -0.4);
                (p.renormalize(&[ae], e, &q()).unwrap() - f).abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{rate}: {gaps:?}");
        assert!(gaps[2] < 2e-2);
    }
}

#[test]
fn pair_symmetries() {
    let p = disk();
    let (a, b) = (Vec2::new(0.4, 0.0), Vec2::new(-0.4, 0.0));
    let f = p.limit_functional_n(&[a, b], &q()).unwrap();
    assert!((p.limit_functional_n(&[b, a], &q()).unwrap() - f).abs() < 1e-10);
    let (a2, b2) = (Vec2::new(0.4, 0.1), Vec2::new(-0.4, -0.1));
    let g = p.limit_functional_n(&[a2, b2], &q()).unwrap();
    let g_reflected = p.limit_functional_n(&[Vec2::new(0.4, -0.1), Vec2::new(-0.4, 0.1)], &q()).unwrap();
    assert!((g - g_reflected).abs() < 1e-9);
}

#[test]
fn nonuniform_datum_on_ellipse() {
    let domain = Domain::ellipse(Vec2::zeros(), 1.5, 1.0, 256).unwrap();
    let l = domain.perimeter();
    let datum = BoundaryDatum::from_fn(&domain, 256, |s| 1.0 + 0.3 * (2.0 * PI * s / l).sin()).unwrap();
    assert_relative_eq!(datum.circulation(), 2.0 * PI, epsilon = 1e-10);
    let p = DirichletProblem::new(domain, datum, DirichletOptions::default()).unwrap();
    let v = p.corrector(&[Vec2::new(0.3, 0.2)]).unwrap();
    // probed 1e-6·diam inside, so the floor is that inset times |∇v|
    assert!(v.trace_error(256) < 1e-5);
    assert!((v.circulation(Vec2::new(0.3, 0.2), 0.1, 512) - 2.0 * PI).abs() < 1e-6);
}

#[test]
fn minimizing_pair_is_symmetric_and_descends() {
    let p = disk();
    let r = minimize_limit(&p, 2, &MinimizeOptions::default()).unwrap();
    assert!((r.argmin[0] + r.argmin[1]).norm() < 1e-3);
    assert!((r.argmin[0].norm() - 5f64.powf(-0.25)).abs() < 1e-3);
    assert!(r.margin > 0.05 && r.min_separation > 0.0);
    assert!(r.endpoint_values.iter().all(|&v| r.value <= v));
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    assert!((r.argmin[0].x, r.argmin[0].y) <= (r.argmin[1].x, r.argmin[1].y));
}

#[test]
fn finite_eps_single_center_sweep() {
    let p = disk();
    let opts = MinimizeOptions { starts: Some(6), ..MinimizeOptions::default() };
    let s = confinement_sweep(&p, 1, &[1e-1, 3e-2, 1e-2], &opts).unwrap();
    for row in &s.rows {
        assert!(row.argmin[0].norm() < 1e-2, "{row:?}");
        assert!(row.margin >= 0.9);
    }
    assert!(s.uniform_margin);
    let r = minimize_finite_eps(&p, 1, 0.05, &opts).unwrap();
    assert!(r.value.abs() < 1e-3);
}
