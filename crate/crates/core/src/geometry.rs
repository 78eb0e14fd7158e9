//! Planar cross-sections and boundary-geometry queries.
//!
//! A [`Domain`] is either a disk (handled in closed form) or a smooth closed
//! curve given by uniformly spaced samples and interpolated trigonometrically.
//! Boundary parameters are angles in `[0, 2π)`; for disks the parameter is the
//! polar angle about the center.

use std::f64::consts::PI;

use nalgebra::Vector2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fourier::{dft_real, frequency, TrigInterpolant};

pub type Vec2 = Vector2<f64>;

const TWO_PI: f64 = 2.0 * PI;

/// Counterclockwise quarter turn.
#[inline]
pub fn rot90(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("boundary is degenerate: {0}")]
    DegenerateBoundary(String),
    #[error("boundary curve self-intersects between samples {0} and {1}")]
    SelfIntersecting(usize, usize),
    #[error("configuration is empty")]
    EmptyConfiguration,
    #[error("parameter order violated: {inner} must be smaller than {outer}")]
    ParameterOrder { inner: f64, outer: f64 },
    #[error("point ({0}, {1}) is not a finite point")]
    NonFinite(f64, f64),
    #[error("domain is not star-shaped about the query point")]
    NotStarShaped,
}

/// A point on the boundary with its local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub position: Vec2,
    /// Curve parameter in `[0, 2π)`.
    pub param: f64,
    pub outward_normal: Vec2,
    pub tangent: Vec2,
    pub curvature: f64,
}

/// Boundary sample carrying everything a Nyström discretization needs.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryNode {
    pub position: Vec2,
    /// Derivative of the parametrization, `dγ/dt`.
    pub velocity: Vec2,
    pub outward_normal: Vec2,
    pub curvature: f64,
}

impl BoundaryNode {
    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub distance: f64,
    pub boundary_point: BoundaryPoint,
    /// Set when another boundary point is equally close within tolerance.
    pub ambiguous: bool,
}

/// Closed smooth boundary curve from uniform parameter samples.
#[derive(Debug, Clone)]
pub struct SmoothCurve {
    samples: Vec<Vec2>,
    interp: TrigInterpolant,
    /// Dense polyline used to seed projections.
    dense: Vec<(f64, Vec2)>,
    /// Fourier coefficients of the speed `|γ'(t)|`, for arc length.
    speed_coeffs: Vec<(i64, Complex64)>,
    perimeter: f64,
}

impl SmoothCurve {
    /// Builds the interpolant from samples at `t_j = 2πj/N`. Clockwise input is
    /// reversed so that the boundary is positively oriented.
    pub fn from_samples(mut samples: Vec<Vec2>) -> Result<Self, GeometryError> {
        if samples.len() < 8 {
            return Err(GeometryError::DegenerateBoundary(format!(
                "need at least 8 samples, got {}",
                samples.len()
            )));
        }
        if let Some(p) = samples.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite(p.x, p.y));
        }
        let area: f64 = (0..samples.len())
            .map(|i| cross(samples[i], samples[(i + 1) % samples.len()]))
            .sum::<f64>()
            * 0.5;
        if area.abs() < 1e-300 {
            return Err(GeometryError::DegenerateBoundary("zero enclosed area".into()));
        }
        if area < 0.0 {
            // keep t_0 fixed, reverse the traversal
            samples[1..].reverse();
        }
        let n = samples.len();
        let cs: Vec<Complex64> = samples.iter().map(|p| Complex64::new(p.x, p.y)).collect();
        let interp = TrigInterpolant::from_samples(&cs);

        let dense_n = 4 * n;
        let dense: Vec<(f64, Vec2)> = (0..dense_n)
            .map(|j| {
                let t = TWO_PI * j as f64 / dense_n as f64;
                let z = interp.eval(t);
                (t, Vec2::new(z.re, z.im))
            })
            .collect();

        let speeds: Vec<f64> = (0..dense_n)
            .map(|j| {
                let t = TWO_PI * j as f64 / dense_n as f64;
                interp.eval2(t)[1].norm()
            })
            .collect();
        if speeds.iter().any(|&s| !(s > 1e-12)) {
            return Err(GeometryError::DegenerateBoundary("vanishing parametrization speed".into()));
        }
        let coeffs = dft_real(&speeds);
        let speed_coeffs: Vec<(i64, Complex64)> = coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| (frequency(j, dense_n), c))
            .filter(|&(k, _)| k.unsigned_abs() as usize != dense_n / 2)
            .collect();
        let perimeter = TWO_PI * coeffs[0].re;

        let curve = Self { samples, interp, dense, speed_coeffs, perimeter };
        curve.check_simple()?;
        Ok(curve)
    }

    /// Samples `f` at `n` uniform parameters.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Vec2) -> Result<Self, GeometryError> {
        Self::from_samples((0..n).map(|j| f(TWO_PI * j as f64 / n as f64)).collect())
    }

    pub fn ellipse(center: Vec2, semi_x: f64, semi_y: f64, n: usize) -> Result<Self, GeometryError> {
        Self::from_fn(n, |t| center + Vec2::new(semi_x * t.cos(), semi_y * t.sin()))
    }

    pub fn samples(&self) -> &[Vec2] {
        &self.samples
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    fn check_simple(&self) -> Result<(), GeometryError> {
        let pts: Vec<Vec2> = self.dense.iter().map(|&(_, p)| p).collect();
        let m = pts.len();
        for i in 0..m {
            let (a0, a1) = (pts[i], pts[(i + 1) % m]);
            for j in (i + 2)..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                let (b0, b1) = (pts[j], pts[(j + 1) % m]);
                if segments_cross(a0, a1, b0, b1) {
                    return Err(GeometryError::SelfIntersecting(i / 4, j / 4));
                }
            }
        }
        Ok(())
    }

    fn local(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let [z, d1, d2] = self.interp.eval2(t);
        (Vec2::new(z.re, z.im), Vec2::new(d1.re, d1.im), Vec2::new(d2.re, d2.im))
    }

    fn arc_length(&self, t: f64) -> f64 {
        let mut s = self.perimeter / TWO_PI * t;
        for &(k, c) in &self.speed_coeffs {
            if k == 0 {
                continue;
            }
            let ik = Complex64::new(0.0, k as f64);
            s += (c * ((ik * t).exp() - 1.0) / ik).re;
        }
        s
    }
}

fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = cross(a1 - a0, b0 - a0);
    let d2 = cross(a1 - a0, b1 - a0);
    let d3 = cross(b1 - b0, a0 - b0);
    let d4 = cross(b1 - b0, a1 - b0);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

#[derive(Debug, Clone)]
pub enum DomainKind {
    Disk { center: Vec2, radius: f64 },
    SmoothCurve(SmoothCurve),
}

/// Bounded simply connected planar region with a smooth boundary.
///
/// Immutable after construction; the uniform disk radius, diameter and
/// convexity are computed once.
#[derive(Debug, Clone)]
pub struct Domain {
    kind: DomainKind,
    convex: bool,
    rho_bar: f64,
    rho_bar_resolution: f64,
    diameter: f64,
    perimeter: f64,
    centroid: Vec2,
}

impl Domain {
    pub fn unit_disk() -> Self {
        Self::disk(Vec2::zeros(), 1.0).expect("unit disk is valid")
    }

    pub fn disk(center: Vec2, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::DegenerateBoundary(format!("disk radius {radius}")));
        }
        if !center.x.is_finite() || !center.y.is_finite() {
            return Err(GeometryError::NonFinite(center.x, center.y));
        }
        Ok(Self {
            kind: DomainKind::Disk { center, radius },
            convex: true,
            rho_bar: radius,
            rho_bar_resolution: 0.0,
            diameter: 2.0 * radius,
            perimeter: TWO_PI * radius,
            centroid: center,
        })
    }

    pub fn ellipse(center: Vec2, semi_x: f64, semi_y: f64, samples: usize) -> Result<Self, GeometryError> {
        Self::from_curve(SmoothCurve::ellipse(center, semi_x, semi_y, samples)?)
    }

    pub fn from_curve(curve: SmoothCurve) -> Result<Self, GeometryError> {
        let n = curve.sample_count();
        let frames: Vec<(Vec2, Vec2, f64)> = (0..n)
            .map(|j| {
                let t = TWO_PI * j as f64 / n as f64;
                let (p, d1, d2) = curve.local(t);
                let speed = d1.norm();
                let kappa = cross(d1, d2) / speed.powi(3);
                let normal = Vec2::new(d1.y, -d1.x) / speed;
                (p, normal, kappa)
            })
            .collect();
        if let Some(&(_, _, k)) = frames.iter().find(|f| !f.2.is_finite()) {
            return Err(GeometryError::DegenerateBoundary(format!("curvature estimate {k}")));
        }
        let kappa_max = frames.iter().map(|f| f.2.abs()).fold(0.0, f64::max);
        let kappa_min = frames.iter().map(|f| f.2).fold(f64::INFINITY, f64::min);
        let scale = frames.iter().map(|f| f.0.norm()).fold(0.0, f64::max).max(1e-300);
        let convex = kappa_min >= -1e-9 / scale;

        // Largest tangent disk at sample i passing through sample j has radius
        // |d|^2 / (2 |d·ν_i|); the minimum over all pairs bounds the reach.
        let mut rho = if kappa_max > 0.0 { 1.0 / kappa_max } else { f64::INFINITY };
        let mut diameter: f64 = 0.0;
        for i in 0..n {
            let (pi, ni, _) = frames[i];
            for (j, &(pj, _, _)) in frames.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = pj - pi;
                diameter = diameter.max(d.norm());
                let dn = d.dot(&ni).abs();
                if dn > 0.0 {
                    rho = rho.min(d.norm_squared() / (2.0 * dn));
                }
            }
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(GeometryError::DegenerateBoundary(format!("uniform disk radius {rho}")));
        }
        let resolution = curve.perimeter / n as f64;
        let centroid = {
            let pts = curve.samples();
            let mut a = 0.0;
            let mut c = Vec2::zeros();
            for i in 0..pts.len() {
                let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
                let w = cross(p, q);
                a += w;
                c += (p + q) * w;
            }
            c / (3.0 * a)
        };
        Ok(Self {
            perimeter: curve.perimeter,
            kind: DomainKind::SmoothCurve(curve),
            convex,
            rho_bar: rho,
            rho_bar_resolution: resolution,
            diameter,
            centroid,
        })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    /// Closed-form disk parameters when the domain is a disk.
    pub fn as_disk(&self) -> Option<(Vec2, f64)> {
        match self.kind {
            DomainKind::Disk { center, radius } => Some((center, radius)),
            DomainKind::SmoothCurve(_) => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    /// Uniform interior/exterior disk radius of the boundary.
    pub fn uniform_disk_radius(&self) -> f64 {
        self.rho_bar
    }

    /// Sampling resolution (arc length per sample) behind the reported radius;
    /// zero for closed-form disks.
    pub fn uniform_disk_radius_resolution(&self) -> f64 {
        self.rho_bar_resolution
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn centroid(&self) -> Vec2 {
        self.centroid
    }

    pub fn boundary_point(&self, param: f64) -> BoundaryPoint {
        let t = param.rem_euclid(TWO_PI);
        match &self.kind {
            DomainKind::Disk { center, radius } => {
                let n = Vec2::new(t.cos(), t.sin());
                BoundaryPoint {
                    position: center + n * *radius,
                    param: t,
                    outward_normal: n,
                    tangent: rot90(n),
                    curvature: 1.0 / radius,
                }
            }
            DomainKind::SmoothCurve(c) => {
                let (p, d1, d2) = c.local(t);
                let speed = d1.norm();
                let tangent = d1 / speed;
                BoundaryPoint {
                    position: p,
                    param: t,
                    outward_normal: Vec2::new(tangent.y, -tangent.x),
                    tangent,
                    curvature: cross(d1, d2) / speed.powi(3),
                }
            }
        }
    }

    /// Nodes at `t_k = 2πk/n` for trapezoid/Nyström discretizations.
    pub fn boundary_nodes(&self, n: usize) -> Vec<BoundaryNode> {
        (0..n)
            .map(|k| {
                let t = TWO_PI * k as f64 / n as f64;
                match &self.kind {
                    DomainKind::Disk { center, radius } => {
                        let u = Vec2::new(t.cos(), t.sin());
                        BoundaryNode {
                            position: center + u * *radius,
                            velocity: rot90(u) * *radius,
                            outward_normal: u,
                            curvature: 1.0 / radius,
                        }
                    }
                    DomainKind::SmoothCurve(c) => {
                        let (p, d1, d2) = c.local(t);
                        let speed = d1.norm();
                        BoundaryNode {
                            position: p,
                            velocity: d1,
                            outward_normal: Vec2::new(d1.y, -d1.x) / speed,
                            curvature: cross(d1, d2) / speed.powi(3),
                        }
                    }
                }
            })
            .collect()
    }

    /// Arc length from parameter 0 to `param` along the positive orientation.
    pub fn arc_length(&self, param: f64) -> f64 {
        let t = param.rem_euclid(TWO_PI);
        match &self.kind {
            DomainKind::Disk { radius, .. } => radius * t,
            DomainKind::SmoothCurve(c) => c.arc_length(t),
        }
    }

    /// Inverse of [`Domain::arc_length`].
    pub fn param_at_arc_length(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.perimeter);
        match &self.kind {
            DomainKind::Disk { radius, .. } => s / radius,
            DomainKind::SmoothCurve(c) => {
                let mut t = TWO_PI * s / self.perimeter;
                for _ in 0..50 {
                    let f = c.arc_length(t) - s;
                    let speed = c.local(t).1.norm();
                    let dt = f / speed;
                    t -= dt;
                    if dt.abs() < 1e-15 {
                        break;
                    }
                }
                t.clamp(0.0, TWO_PI)
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        if !p.x.is_finite() || !p.y.is_finite() {
            return false;
        }
        match &self.kind {
            DomainKind::Disk { center, radius } => (p - center).norm() < *radius,
            DomainKind::SmoothCurve(_) => {
                let proj = self.nearest_boundary(p);
                proj.distance > 0.0 && (p - proj.boundary_point.position).dot(&proj.boundary_point.outward_normal) < 0.0
            }
        }
    }

    /// Distance to the boundary (unsigned).
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        match &self.kind {
            DomainKind::Disk { center, radius } => ((p - center).norm() - radius).abs(),
            DomainKind::SmoothCurve(_) => self.nearest_boundary(p).distance,
        }
    }

    /// Distance from `origin` to the boundary along the unit direction `dir`.
    /// Fails when the ray crosses the boundary more than once, i.e. when the
    /// domain is not star-shaped about `origin`.
    pub fn ray_to_boundary(&self, origin: Vec2, dir: Vec2) -> Result<f64, GeometryError> {
        match &self.kind {
            DomainKind::Disk { center, radius } => {
                let q = origin - center;
                let b = q.dot(&dir);
                let disc = b * b - q.norm_squared() + radius * radius;
                if disc < 0.0 {
                    return Err(GeometryError::NotStarShaped);
                }
                Ok(-b + disc.sqrt())
            }
            DomainKind::SmoothCurve(c) => {
                let m = c.dense.len();
                let side = |p: Vec2| cross(p - origin, dir);
                let mut hit: Option<f64> = None;
                let mut crossings = 0;
                for i in 0..m {
                    let (t0, p0) = c.dense[i];
                    let (_, p1) = c.dense[(i + 1) % m];
                    let (s0, s1) = (side(p0), side(p1));
                    // half-open sign test so a ray through a vertex counts once
                    if (s0 < 0.0) != (s1 < 0.0) {
                        let mid = 0.5 * (p0 + p1);
                        if (mid - origin).dot(&dir) <= 0.0 {
                            continue;
                        }
                        crossings += 1;
                        let h = TWO_PI / m as f64;
                        let (mut lo, mut hi) = (t0, t0 + h);
                        let mut t = lo + h * s0 / (s0 - s1);
                        let sgn = if s0 < 0.0 { 1.0 } else { -1.0 };
                        for _ in 0..100 {
                            let (p, d1, _) = c.local(t);
                            let g = sgn * cross(p - origin, dir);
                            if g < 0.0 {
                                lo = t;
                            } else {
                                hi = t;
                            }
                            let gp = sgn * cross(d1, dir);
                            let mut next = if gp != 0.0 { t - g / gp } else { 0.5 * (lo + hi) };
                            if !(next > lo && next < hi) {
                                next = 0.5 * (lo + hi);
                            }
                            let step = (next - t).abs();
                            t = next;
                            if step < 1e-15 || hi - lo < 1e-15 {
                                break;
                            }
                        }
                        hit = Some((c.local(t).0 - origin).dot(&dir));
                    }
                }
                match (crossings, hit) {
                    (1, Some(r)) if r > 0.0 => Ok(r),
                    _ => Err(GeometryError::NotStarShaped),
                }
            }
        }
    }

    /// Closest boundary point. Ties (e.g. the center of a disk) resolve to the
    /// smallest parameter and set `ambiguous`.
    pub fn nearest_boundary(&self, p: Vec2) -> Projection {
        match &self.kind {
            DomainKind::Disk { center, radius } => {
                let d = p - center;
                let r = d.norm();
                let ambiguous = r <= 1e-12 * radius;
                let t = if ambiguous { 0.0 } else { d.y.atan2(d.x).rem_euclid(TWO_PI) };
                let bp = self.boundary_point(t);
                Projection { distance: (r - radius).abs(), boundary_point: bp, ambiguous }
            }
            DomainKind::SmoothCurve(c) => self.project_curve(c, p),
        }
    }

    fn project_curve(&self, c: &SmoothCurve, p: Vec2) -> Projection {
        let m = c.dense.len();
        let d2: Vec<f64> = c.dense.iter().map(|&(_, q)| (q - p).norm_squared()).collect();
        // local minima of the sampled squared distance seed Newton refinement
        let mut seeds: Vec<usize> = (0..m)
            .filter(|&i| d2[i] <= d2[(i + m - 1) % m] && d2[i] <= d2[(i + 1) % m])
            .collect();
        seeds.sort_by(|&a, &b| d2[a].total_cmp(&d2[b]));
        seeds.truncate(6);
        let h = TWO_PI / m as f64;
        let mut candidates: Vec<(f64, f64)> = seeds
            .iter()
            .map(|&i| {
                let t = refine_projection(c, p, c.dense[i].0, h);
                (t, (c.local(t).0 - p).norm())
            })
            .collect();
        candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        let (best_t, best_d) = candidates[0];
        let tol = 1e-9 * self.diameter.max(1.0);
        let mut ambiguous = false;
        let mut chosen = best_t;
        for &(t, d) in &candidates[1..] {
            let gap = (t - best_t).abs().min(TWO_PI - (t - best_t).abs());
            if (d - best_d).abs() <= tol && gap > 4.0 * h {
                ambiguous = true;
                chosen = chosen.min(t);
            }
        }
        let ambiguous = ambiguous && best_d >= self.rho_bar * (1.0 - 1e-9);
        let t = if ambiguous { chosen } else { best_t };
        Projection { distance: best_d, boundary_point: self.boundary_point(t), ambiguous }
    }
}

/// Safeguarded Newton iteration on `φ(t) = ½|γ(t) − p|²` within `t0 ± 2h`.
fn refine_projection(c: &SmoothCurve, p: Vec2, t0: f64, h: f64) -> f64 {
    let (mut lo, mut hi) = (t0 - 2.0 * h, t0 + 2.0 * h);
    let dphi = |t: f64| {
        let (q, d1, d2) = c.local(t);
        let r = q - p;
        (r.dot(&d1), d1.norm_squared() + r.dot(&d2))
    };
    let (glo, _) = dphi(lo);
    let (ghi, _) = dphi(hi);
    let bracketed = glo < 0.0 && ghi > 0.0;
    let mut t = t0;
    for _ in 0..100 {
        let (g, gp) = dphi(t);
        if bracketed {
            if g < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
        }
        let mut next = if gp > 0.0 { t - g / gp } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - t).abs();
        t = next;
        if step < 1e-15 || (bracketed && hi - lo < 1e-15) {
            break;
        }
    }
    t.rem_euclid(TWO_PI)
}

/// Minimal separation `d_n`: boundary distance for one point, otherwise the
/// smaller of all boundary distances and all pairwise distances.
pub fn separation(domain: &Domain, positions: &[Vec2]) -> Result<f64, GeometryError> {
    if positions.is_empty() {
        return Err(GeometryError::EmptyConfiguration);
    }
    let mut d = positions
        .iter()
        .map(|&p| domain.boundary_distance(p))
        .fold(f64::INFINITY, f64::min);
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            d = d.min((positions[i] - positions[j]).norm());
        }
    }
    Ok(d)
}

fn separation_or_infinite(domain: &Domain, positions: &[Vec2]) -> f64 {
    separation(domain, positions).unwrap_or(f64::INFINITY)
}

/// Relative slack on the "within" tests so that e.g. a point placed at
/// `1 - δ` in the unit disk counts as within `δ` despite rounding.
const CLOSE_TOL: f64 = 1e-12;

/// Membership in the near-boundary set: the first point is within `delta` of
/// the boundary and the remaining points have separation greater than `gamma`.
pub fn in_region_d(domain: &Domain, positions: &[Vec2], delta: f64, gamma: f64) -> Result<bool, GeometryError> {
    if positions.is_empty() {
        return Err(GeometryError::EmptyConfiguration);
    }
    if delta >= gamma {
        return Err(GeometryError::ParameterOrder { inner: delta, outer: gamma });
    }
    let all_inside = positions.iter().all(|&p| domain.contains(p));
    let near = domain.boundary_distance(positions[0]) <= delta * (1.0 + CLOSE_TOL);
    Ok(all_inside && near && separation_or_infinite(domain, &positions[1..]) > gamma)
}

/// Membership in the close-pair set: the first two points are within `zeta` of
/// each other, the rest have separation greater than `eta`, and the pair is
/// farther than `eta` from every other point and from the boundary.
pub fn in_region_c(domain: &Domain, positions: &[Vec2], zeta: f64, eta: f64) -> Result<bool, GeometryError> {
    if positions.len() < 2 {
        return Err(GeometryError::EmptyConfiguration);
    }
    if zeta >= eta {
        return Err(GeometryError::ParameterOrder { inner: zeta, outer: eta });
    }
    let all_inside = positions.iter().all(|&p| domain.contains(p));
    let close = (positions[0] - positions[1]).norm() <= zeta * (1.0 + CLOSE_TOL);
    let rest_ok = separation_or_infinite(domain, &positions[2..]) > eta;
    let pair_far = positions[..2].iter().all(|&a| {
        domain.boundary_distance(a) > eta && positions[2..].iter().all(|&b| (a - b).norm() > eta)
    });
    Ok(all_inside && close && rest_ok && pair_far)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn contains_unit_disk() {
        let d = Domain::unit_disk();
        assert!(d.contains(v(0.0, 0.0)));
        assert!(!d.contains(v(1.0, 0.0)));
        assert!(d.contains(v(0.3, 0.4)));
        assert!(!d.contains(v(f64::NAN, 0.0)));
    }

    #[test]
    fn nearest_boundary_disk() {
        let d = Domain::unit_disk();
        let p = d.nearest_boundary(v(0.9, 0.0));
        assert_relative_eq!(p.distance, 0.1, epsilon = 1e-15);
        assert_relative_eq!(p.boundary_point.position, v(1.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(p.boundary_point.outward_normal, v(1.0, 0.0), epsilon = 1e-15);
        assert!(!p.ambiguous);

        let c = d.nearest_boundary(v(0.0, 0.0));
        assert_eq!(c.distance, 1.0);
        assert!(c.ambiguous);
        assert_eq!(c.boundary_point.param, 0.0);

        let big = Domain::disk(v(1.0, 1.0), 2.0).unwrap();
        let q = big.nearest_boundary(v(1.0, 2.5));
        assert_relative_eq!(q.distance, 0.5, epsilon = 1e-15);
        assert_relative_eq!(q.boundary_point.position, v(1.0, 3.0), epsilon = 1e-14);
        assert_relative_eq!(q.boundary_point.outward_normal, v(0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn uniform_disk_radius_values() {
        assert_eq!(Domain::unit_disk().uniform_disk_radius(), 1.0);
        assert_eq!(Domain::disk(v(3.0, -1.0), 2.0).unwrap().uniform_disk_radius(), 2.0);
        // b^2/a for the (2, 1) ellipse
        let e = Domain::ellipse(Vec2::zeros(), 2.0, 1.0, 256).unwrap();
        assert!((e.uniform_disk_radius() - 0.5).abs() < 1e-6, "{}", e.uniform_disk_radius());
        assert!(e.is_convex());
        assert_relative_eq!(e.diameter(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn separation_examples() {
        let d = Domain::unit_disk();
        assert_relative_eq!(separation(&d, &[v(0.9, 0.0)]).unwrap(), 0.1, epsilon = 1e-15);
        assert_relative_eq!(separation(&d, &[v(0.5, 0.0), v(-0.5, 0.0)]).unwrap(), 0.5);
        assert_relative_eq!(separation(&d, &[v(0.1, 0.0), v(-0.1, 0.0)]).unwrap(), 0.2);
        assert_eq!(separation(&d, &[]), Err(GeometryError::EmptyConfiguration));
    }

    #[test]
    fn region_predicates() {
        let d = Domain::unit_disk();
        assert!(in_region_d(&d, &[v(0.97, 0.0), v(0.0, 0.2)], 0.05, 0.5).unwrap());
        assert!(!in_region_d(&d, &[v(0.97, 0.0), v(0.0, 0.6)], 0.05, 0.5).unwrap());
        assert!(!in_region_c(&d, &[v(0.05, 0.0), v(-0.05, 0.0), v(0.0, 0.0)], 0.2, 0.3).unwrap());
        assert!(in_region_c(&d, &[v(0.05, 0.0), v(-0.05, 0.0)], 0.2, 0.3).unwrap());
        assert!(matches!(
            in_region_d(&d, &[v(0.97, 0.0)], 0.5, 0.5),
            Err(GeometryError::ParameterOrder { .. })
        ));
        assert!(matches!(
            in_region_c(&d, &[v(0.1, 0.0), v(0.0, 0.0)], 0.4, 0.3),
            Err(GeometryError::ParameterOrder { .. })
        ));
    }

    #[test]
    fn ellipse_projection_matches_newton_tolerance() {
        let e = Domain::ellipse(Vec2::zeros(), 2.0, 1.0, 256).unwrap();
        for &p in &[v(1.7, 0.1), v(0.2, 0.85), v(-1.0, -0.5), v(0.0, 0.3)] {
            let proj = e.nearest_boundary(p);
            let bp = proj.boundary_point;
            // exact ellipse point satisfies the implicit equation
            let on = (bp.position.x / 2.0).powi(2) + bp.position.y.powi(2);
            assert!((on - 1.0).abs() < 1e-10);
            // p = s - d ν
            let back = bp.position - bp.outward_normal * proj.distance;
            assert!((back - p).norm() < 1e-9, "{:?}", back - p);
            assert!(e.contains(p));
        }
        assert!(!e.contains(v(2.1, 0.0)));
        assert!(!e.contains(v(0.0, 1.01)));
    }

    #[test]
    fn ellipse_center_projection_is_ambiguous() {
        let e = Domain::ellipse(Vec2::zeros(), 2.0, 1.0, 128).unwrap();
        let proj = e.nearest_boundary(Vec2::zeros());
        assert_relative_eq!(proj.distance, 1.0, epsilon = 1e-10);
        assert!(proj.ambiguous);
    }

    #[test]
    fn clockwise_samples_are_reoriented() {
        let c = SmoothCurve::from_fn(64, |t| v(t.cos(), -t.sin())).unwrap();
        let d = Domain::from_curve(c).unwrap();
        let bp = d.boundary_point(0.3);
        assert!(bp.position.dot(&bp.outward_normal) > 0.0);
        assert_relative_eq!(bp.curvature, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn self_intersecting_curve_rejected() {
        // figure eight
        let r = SmoothCurve::from_fn(64, |t| v(t.sin(), (2.0 * t).sin() * 0.5));
        assert!(r.is_err());
    }

    #[test]
    fn arc_length_of_circle_curve() {
        let c = SmoothCurve::from_fn(64, |t| v(2.0 * t.cos(), 2.0 * t.sin())).unwrap();
        let d = Domain::from_curve(c).unwrap();
        assert_relative_eq!(d.perimeter(), 4.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(d.arc_length(1.0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(d.param_at_arc_length(3.0), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn nonconvex_curve_flagged() {
        let c = SmoothCurve::from_fn(128, |t| {
            let r = 1.0 + 0.3 * (3.0 * t).cos();
            v(r * t.cos(), r * t.sin())
        })
        .unwrap();
        let d = Domain::from_curve(c).unwrap();
        assert!(!d.is_convex());
        assert!(d.uniform_disk_radius() < 0.5);
    }
}
