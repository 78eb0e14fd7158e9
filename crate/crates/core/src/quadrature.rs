//! Area quadrature on domains with point singularities.
//!
//! Every rule is polar about one or more singular centers: radial
//! Gauss–Legendre panels (logarithmically graded toward an excised core,
//! geometrically graded toward a bare center) times the trapezoid rule in
//! angle. Several centers are blended with rational Shepard weights
//! `w_i = ρ_i^{-p} / Σ_k ρ_k^{-p}`; for even `p` these are smooth and vanish to
//! order `p` at the other centers, which cancels `1/ρ²` and `1/ρ` singularities
//! there. Cores excised around the other centers are removed by a subtraction
//! rule polar about that center.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Domain, GeometryError, Vec2};

const SHEPARD_POWER: i32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature not converged after level {level}: last change {change:e}")]
    NotConverged { level: u32, change: f64 },
    #[error("core of radius {radius} around ({x}, {y}) leaves the domain or overlaps another core")]
    CoresOverlap { x: f64, y: f64, radius: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Refinement control shared by all adaptive integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Accept when two consecutive levels agree to this relative tolerance...
    pub rel_tol: f64,
    /// ...or to this absolute tolerance.
    pub abs_tol: f64,
    pub min_level: u32,
    pub max_level: u32,
    /// Gauss–Legendre points per radial panel.
    pub order: usize,
    /// Trapezoid nodes in angle at level 0.
    pub base_angular: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-4, abs_tol: 1e-12, min_level: 0, max_level: 6, order: 12, base_angular: 32 }
    }
}

impl QuadratureOptions {
    pub fn tight() -> Self {
        Self { rel_tol: 1e-11, abs_tol: 1e-12, ..Self::default() }
    }

    /// A single non-adaptive rule at `level`.
    pub fn fixed(level: u32) -> Self {
        Self { min_level: level, max_level: level, ..Self::default() }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Point set with weights; integrates by a weighted sum.
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn push(&mut self, p: Vec2, w: f64) {
        self.points.push(p);
        self.weights.push(w);
    }

    pub fn integrate(&self, f: impl Fn(Vec2) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn integrate_many<const K: usize>(&self, f: impl Fn(Vec2) -> [f64; K]) -> [f64; K] {
        let mut acc = [0.0; K];
        for (&p, &w) in self.points.iter().zip(&self.weights) {
            let v = f(p);
            for k in 0..K {
                acc[k] += w * v[k];
            }
        }
        acc
    }
}

/// Radial nodes for `∫_{r0}^{r1} g(r) dr`.
fn radial_nodes(r0: f64, r1: f64, level: u32, gl: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let refine = 1usize << level;
    let linear = |a: f64, b: f64, panels: usize, out: &mut Vec<(f64, f64)>| {
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + h * p as f64;
            for (x, w) in gl.0.iter().zip(&gl.1) {
                out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
            }
        }
    };
    if r1 <= r0 {
        return out;
    }
    if r0 == 0.0 {
        // geometric grading toward the center
        let levels = 6;
        let mut b = r1;
        for _ in 0..levels {
            linear(0.5 * b, b, refine, &mut out);
            b *= 0.5;
        }
        linear(0.0, b, refine, &mut out);
    } else if r1 > 2.0 * r0 {
        let mid = 0.5 * r1;
        let (u0, u1) = (r0.ln(), mid.ln());
        let panels = ((u1 - u0).ceil() as usize).max(1) * refine;
        let h = (u1 - u0) / panels as f64;
        for p in 0..panels {
            let lo = u0 + h * p as f64;
            for (x, w) in gl.0.iter().zip(&gl.1) {
                let u = lo + 0.5 * h * (x + 1.0);
                let r = u.exp();
                out.push((r, 0.5 * h * w * r));
            }
        }
        linear(mid, r1, 2 * refine, &mut out);
    } else {
        linear(r0, r1, 2 * refine, &mut out);
    }
    out
}

/// Outer limit of a polar rule.
#[derive(Debug, Clone, Copy)]
pub enum Outer {
    /// Integrate out to the domain boundary along each ray.
    Boundary,
    /// Integrate out to a fixed radius.
    Radius(f64),
}

fn angular_count(opts: &QuadratureOptions, level: u32) -> usize {
    opts.base_angular << level
}

fn shepard_weight(centers: &[Vec2], i: usize, x: Vec2) -> f64 {
    if centers.len() == 1 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut own = 0.0;
    for (k, c) in centers.iter().enumerate() {
        let r2 = (x - c).norm_squared();
        if r2 == 0.0 {
            return if k == i { 1.0 } else { 0.0 };
        }
        let v = r2.powi(-SHEPARD_POWER / 2);
        total += v;
        if k == i {
            own = v;
        }
    }
    own / total
}

/// Polar rule about `center` on `r_in < ρ < outer`, with each node scaled by
/// `weight(x)`.
fn polar_into(
    rule: &mut Rule,
    domain: &Domain,
    center: Vec2,
    r_in: f64,
    outer: Outer,
    level: u32,
    opts: &QuadratureOptions,
    sign: f64,
    weight: &dyn Fn(Vec2) -> f64,
) -> Result<(), QuadratureError> {
    let gl = gauss_legendre(opts.order);
    let m = angular_count(opts, level);
    let dphi = 2.0 * PI / m as f64;
    for k in 0..m {
        let phi = dphi * k as f64;
        let dir = Vec2::new(phi.cos(), phi.sin());
        let r_out = match outer {
            Outer::Boundary => domain.ray_to_boundary(center, dir)?,
            Outer::Radius(r) => r,
        };
        for (r, w) in radial_nodes(r_in, r_out, level, &gl) {
            let x = center + dir * r;
            let wt = weight(x);
            if wt != 0.0 {
                rule.push(x, sign * dphi * r * w * wt);
            }
        }
    }
    Ok(())
}

/// Rule for `∫_{Ω \ ∪ B(c_i, r_i)} f` where `f` may be singular at each
/// center. A radius of zero keeps the center (the integrand must then be
/// integrable there, e.g. `O(1/ρ)`).
pub fn excised_rule(
    domain: &Domain,
    centers: &[Vec2],
    radii: &[f64],
    level: u32,
    opts: &QuadratureOptions,
) -> Result<Rule, QuadratureError> {
    assert_eq!(centers.len(), radii.len());
    for (i, (&c, &r)) in centers.iter().zip(radii).enumerate() {
        let bad = || QuadratureError::CoresOverlap { x: c.x, y: c.y, radius: r };
        if !domain.contains(c) || r >= domain.boundary_distance(c) {
            return Err(bad());
        }
        for (j, (&c2, &r2)) in centers.iter().zip(radii).enumerate() {
            if i != j && (c - c2).norm() <= r + r2 {
                return Err(bad());
            }
        }
    }
    let mut rule = Rule::default();
    for i in 0..centers.len() {
        let w = |x: Vec2| shepard_weight(centers, i, x);
        polar_into(&mut rule, domain, centers[i], radii[i], Outer::Boundary, level, opts, 1.0, &w)?;
        for j in 0..centers.len() {
            if j != i && radii[j] > 0.0 {
                polar_into(&mut rule, domain, centers[j], 0.0, Outer::Radius(radii[j]), level, opts, -1.0, &w)?;
            }
        }
    }
    Ok(rule)
}

/// Rule for `∫_{r_in < |x - center| < r_out} f`.
pub fn annulus_rule(center: Vec2, r_in: f64, r_out: f64, level: u32, opts: &QuadratureOptions) -> Rule {
    let mut rule = Rule::default();
    let gl = gauss_legendre(opts.order);
    let m = angular_count(opts, level);
    let dphi = 2.0 * PI / m as f64;
    for k in 0..m {
        let phi = dphi * k as f64;
        let dir = Vec2::new(phi.cos(), phi.sin());
        for (r, w) in radial_nodes(r_in, r_out, level, &gl) {
            rule.push(center + dir * r, dphi * r * w);
        }
    }
    rule
}

/// Rule for `∫_{Ω \ B(center, r_in)} f`, polar about `center`. The disk may
/// touch the boundary.
pub fn star_rule(
    domain: &Domain,
    center: Vec2,
    r_in: f64,
    level: u32,
    opts: &QuadratureOptions,
) -> Result<Rule, QuadratureError> {
    let mut rule = Rule::default();
    polar_into(&mut rule, domain, center, r_in, Outer::Boundary, level, opts, 1.0, &|_| 1.0)?;
    Ok(rule)
}

/// Converged value of an integral family together with its level history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Converged<const K: usize> {
    pub value: [f64; K],
    pub change: f64,
    pub level: u32,
}

/// Refines `eval(level)` until consecutive levels agree componentwise. With
/// `min_level == max_level` the single fixed rule is used as is, which keeps
/// the result a smooth function of the integrand's parameters.
pub fn adaptive<const K: usize, E: From<QuadratureError>>(
    opts: &QuadratureOptions,
    mut eval: impl FnMut(u32) -> Result<[f64; K], E>,
) -> Result<Converged<K>, E> {
    let mut prev = eval(opts.min_level)?;
    if opts.min_level >= opts.max_level {
        return Ok(Converged { value: prev, change: f64::NAN, level: opts.min_level });
    }
    let mut change = f64::INFINITY;
    for level in (opts.min_level + 1)..=opts.max_level {
        let cur = eval(level)?;
        change = (0..K).map(|k| (cur[k] - prev[k]).abs()).fold(0.0, f64::max);
        let ok = (0..K).all(|k| {
            let d = (cur[k] - prev[k]).abs();
            d <= opts.abs_tol || d <= opts.rel_tol * cur[k].abs()
        });
        if ok {
            return Ok(Converged { value: cur, change, level });
        }
        prev = cur;
    }
    Err(QuadratureError::NotConverged { level: opts.max_level, change }.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1, 2, 5, 12, 20] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            // exact for degree 2n-1
            let deg = 2 * n - 2;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert_relative_eq!(integral, 2.0 / (deg as f64 + 1.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn annulus_of_inverse_square() {
        // ∫_{ε<r<1} r^{-2} dA = 2π log(1/ε)
        let opts = QuadratureOptions::default();
        let rule = annulus_rule(Vec2::new(0.3, -0.2), 1e-3, 1.0, 0, &opts);
        let v = rule.integrate(|x| 1.0 / (x - Vec2::new(0.3, -0.2)).norm_squared());
        assert_relative_eq!(v, 2.0 * PI * 1e3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn excised_area_of_disk() {
        let d = Domain::unit_disk();
        let opts = QuadratureOptions::default();
        let centers = [Vec2::new(0.3, 0.1), Vec2::new(-0.4, 0.2)];
        let radii = [0.05, 0.1];
        let exact = PI * (1.0 - 0.05 * 0.05 - 0.01);
        let rule = excised_rule(&d, &centers, &radii, 2, &opts).unwrap();
        assert_relative_eq!(rule.integrate(|_| 1.0), exact, epsilon = 1e-10);
    }

    #[test]
    fn excised_log_singular_integrand() {
        // ∫_{Ω_ε} |x-a|^{-2} over the unit disk centred at a = 0 is 2π log(1/ε)
        let d = Domain::unit_disk();
        let opts = QuadratureOptions::tight();
        let c = adaptive::<1, QuadratureError>(&opts, |lvl| {
            let rule = excised_rule(&d, &[Vec2::zeros()], &[1e-3], lvl, &opts)?;
            Ok([rule.integrate(|x| 1.0 / x.norm_squared())])
        })
        .unwrap();
        assert_relative_eq!(c.value[0], 2.0 * PI * 1e3f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn two_singular_centers_with_shepard_blending() {
        // ∫_{Ω \ B_ε(a) ∪ B_ε(b)} (|x-a|^{-2} + |x-b|^{-2}) on a big disk;
        // compare with the exact value for each term computed by a single
        // center rule minus the other hole.
        let d = Domain::disk(Vec2::zeros(), 2.0).unwrap();
        let opts = QuadratureOptions::tight();
        let a = Vec2::new(0.4, 0.0);
        let b = Vec2::new(-0.5, 0.3);
        let eps = 1e-2;
        let f = |x: Vec2| 1.0 / (x - a).norm_squared() + 1.0 / (x - b).norm_squared();
        let multi = adaptive::<1, QuadratureError>(&opts, |lvl| {
            Ok([excised_rule(&d, &[a, b], &[eps, eps], lvl, &opts)?.integrate(f)])
        })
        .unwrap();
        // independent route: star rules about each center, holes subtracted by annuli
        let single = |c: Vec2, other: Vec2| {
            adaptive::<1, QuadratureError>(&opts, |lvl| {
                let g = |x: Vec2| 1.0 / (x - c).norm_squared();
                let whole = star_rule(&d, c, eps, lvl, &opts)?.integrate(g);
                let hole = annulus_rule(other, 0.0, eps, lvl, &opts).integrate(g);
                Ok([whole - hole])
            })
            .unwrap()
            .value[0]
        };
        let reference = single(a, b) + single(b, a);
        assert_relative_eq!(multi.value[0], reference, epsilon = 1e-9);
    }

    #[test]
    fn overlapping_cores_rejected() {
        let d = Domain::unit_disk();
        let opts = QuadratureOptions::default();
        let r = excised_rule(&d, &[Vec2::new(0.0, 0.0), Vec2::new(0.1, 0.0)], &[0.06, 0.06], 0, &opts);
        assert!(matches!(r, Err(QuadratureError::CoresOverlap { .. })));
        let r = excised_rule(&d, &[Vec2::new(0.95, 0.0)], &[0.06], 0, &opts);
        assert!(matches!(r, Err(QuadratureError::CoresOverlap { .. })));
    }
}
