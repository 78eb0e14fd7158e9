//! Dirichlet Green's function `G(x,y) = -(1/2π) log|x-y| + k(x,y)` of a
//! planar domain, its regular part `k`, the Robin function `h(x) = k(x,x)`
//! and their gradients.
//!
//! Two backends: closed-form images for disks, and a second-kind double-layer
//! Nyström solver for smooth curves. The Nyström backend subtracts a Kelvin
//! image in the osculating circle when the source sits within a few panel
//! widths of the boundary, so the remaining boundary data stays smooth.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fourier::{dft_real, frequency, TrigInterpolant};
use crate::geometry::{BoundaryNode, BoundaryPoint, Domain, DomainKind, Vec2};

const INV_2PI: f64 = 0.5 / PI;
const UPSAMPLE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error("point ({0}, {1}) is not inside the domain")]
    OutsideDomain(f64, f64),
    #[error("boundary system could not be solved: {0}")]
    SolverFailure(String),
    #[error("finite-difference stencil of step {step} at ({x}, {y}) leaves the domain")]
    StencilOutsideDomain { x: f64, y: f64, step: f64 },
    #[error("the image backend needs a disk domain")]
    ImageNeedsDisk,
}

/// Which evaluator backs a [`GreenEngine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    Image,
    BoundaryIntegral { panels: usize },
}

impl Backend {
    /// Image form for disks, 256-panel boundary integrals otherwise.
    pub fn auto(domain: &Domain) -> Self {
        match domain.kind() {
            DomainKind::Disk { .. } => Backend::Image,
            DomainKind::SmoothCurve(_) => Backend::BoundaryIntegral { panels: 256 },
        }
    }
}

/// Discretized interior Dirichlet solver: `u = D[μ]` with `(K - ½I)μ = g`.
#[derive(Debug, Clone)]
pub struct Nystrom {
    nodes: Vec<BoundaryNode>,
    weights: Vec<f64>,
    fine_nodes: Vec<BoundaryNode>,
    fine_weights: Vec<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    panel_width: f64,
    domain: Domain,
}

#[inline]
fn dl_kernel(x: Vec2, node: &BoundaryNode) -> f64 {
    let r = x - node.position;
    INV_2PI * r.dot(&node.outward_normal) / r.norm_squared()
}

#[inline]
fn dl_kernel_grad(x: Vec2, node: &BoundaryNode) -> Vec2 {
    let r = x - node.position;
    let r2 = r.norm_squared();
    let nu = node.outward_normal;
    (nu / r2 - r * (2.0 * r.dot(&nu) / (r2 * r2))) * INV_2PI
}

impl Nystrom {
    pub fn new(domain: &Domain, panels: usize) -> Result<Self, GreenError> {
        if panels < 8 {
            return Err(GreenError::SolverFailure(format!("{panels} panels is too few")));
        }
        let nodes = domain.boundary_nodes(panels);
        let dt = 2.0 * PI / panels as f64;
        let weights: Vec<f64> = nodes.iter().map(|n| n.speed() * dt).collect();
        let fine_nodes = domain.boundary_nodes(panels * UPSAMPLE);
        let fine_weights = fine_nodes.iter().map(|n| n.speed() * dt / UPSAMPLE as f64).collect();
        let a = DMatrix::from_fn(panels, panels, |i, j| {
            if i == j {
                -nodes[i].curvature / (4.0 * PI) * weights[i] - 0.5
            } else {
                dl_kernel(nodes[i].position, &nodes[j]) * weights[j]
            }
        });
        let lu = a.lu();
        let (dmin, dmax) = lu
            .u()
            .diagonal()
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
        if !(dmin > 1e-12 * dmax) {
            return Err(GreenError::SolverFailure(format!("pivot ratio {:e}", dmin / dmax)));
        }
        Ok(Self { nodes, weights, fine_nodes, fine_weights, lu, panel_width: domain.perimeter() / panels as f64, domain: domain.clone() })
    }

    pub fn panels(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[BoundaryNode] {
        &self.nodes
    }

    pub fn panel_width(&self) -> f64 {
        self.panel_width
    }

    /// Solve for the harmonic function with the given values at the nodes.
    pub fn solve(&self, data: &[f64]) -> Result<HarmonicField, GreenError> {
        assert_eq!(data.len(), self.nodes.len());
        let b = DVector::from_column_slice(data);
        let mu = self
            .lu
            .solve(&b)
            .ok_or_else(|| GreenError::SolverFailure("singular boundary operator".into()))?;
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(GreenError::SolverFailure("non-finite density".into()));
        }
        Ok(HarmonicField { mu: mu.as_slice().to_vec(), fine: OnceLock::new(), interp: OnceLock::new() })
    }

    /// Value and gradient of the harmonic function at an interior point.
    pub fn eval(&self, field: &HarmonicField, x: Vec2) -> (f64, Vec2) {
        let (mut best, mut dmin) = (0, f64::INFINITY);
        for (j, n) in self.nodes.iter().enumerate() {
            let d = (x - n.position).norm_squared();
            if d < dmin {
                dmin = d;
                best = j;
            }
        }
        if dmin.sqrt() >= 4.0 * self.panel_width {
            return sum_eval(&self.nodes, &self.weights, &field.mu, field.mu[best], x);
        }
        let fine = field.fine();
        // nearest fine node lies within one coarse panel of the coarse one
        let c = best * UPSAMPLE;
        let m = self.fine_nodes.len();
        let best = (0..2 * UPSAMPLE + 1)
            .map(|o| (c + m + o - UPSAMPLE) % m)
            .min_by(|&a, &b| {
                let da = (x - self.fine_nodes[a].position).norm_squared();
                let db = (x - self.fine_nodes[b].position).norm_squared();
                da.total_cmp(&db)
            })
            .unwrap();
        let h = self.panel_width / UPSAMPLE as f64;
        if (x - self.fine_nodes[best].position).norm() < NEAR_SAMPLES[0] * h + h {
            let proj = self.domain.nearest_boundary(x);
            if proj.distance < NEAR_SAMPLES[0] * h && !proj.ambiguous {
                return self.eval_near(field, &proj.boundary_point, proj.distance);
            }
        }
        sum_eval(&self.fine_nodes, &self.fine_weights, fine, fine[best], x)
    }

    /// Closer than the upsampled rule resolves: the value interpolates
    /// between the boundary trace and samples further in along the normal;
    /// the gradient is extrapolated from those samples.
    fn eval_near(&self, field: &HarmonicField, foot: &BoundaryPoint, dist: f64) -> (f64, Vec2) {
        let fine = field.fine();
        let mu_star = field.interp().eval(foot.param).re;
        let h = self.panel_width / UPSAMPLE as f64;
        let inward = -foot.outward_normal;
        let mut s = [0.0; NEAR_SAMPLES.len() + 1];
        let mut u = [0.0; NEAR_SAMPLES.len() + 1];
        let mut g = [Vec2::zeros(); NEAR_SAMPLES.len()];
        // trace: the Gauss identity on the curve gives -1/2, the jump another -1/2
        u[0] = sum_eval(&self.fine_nodes, &self.fine_weights, fine, mu_star, foot.position).0;
        for (k, &c) in NEAR_SAMPLES.iter().enumerate() {
            s[k + 1] = c * h;
            let (uk, gk) = sum_eval(&self.fine_nodes, &self.fine_weights, fine, mu_star, foot.position + inward * (c * h));
            u[k + 1] = uk;
            g[k] = gk;
        }
        let value = lagrange(&s, dist).iter().zip(&u).map(|(w, v)| w * v).sum();
        let grad = lagrange(&s[1..], dist).iter().zip(&g).fold(Vec2::zeros(), |acc, (w, v)| acc + v * *w);
        (value, grad)
    }
}

/// Normal offsets, in upsampled node spacings, of the samples used by
/// [`Nystrom::eval_near`]; Chebyshev points on `[3, 12]`.
const NEAR_SAMPLES: [f64; 6] = [3.0, 3.8594235253127365, 6.109423525312737, 8.890576474687263, 11.140576474687263, 12.0];

/// Lagrange basis weights for evaluating the interpolant through `nodes` at `t`.
fn lagrange(nodes: &[f64], t: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|k| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &xj)| (t - xj) / (nodes[k] - xj))
                .product()
        })
        .collect()
}

/// Double-layer value and gradient with the Gauss identity `∫K = -1`
/// removing the near-singular part; `mu_star` approximates the density near `x`.
fn sum_eval(nodes: &[BoundaryNode], weights: &[f64], mu: &[f64], mu_star: f64, x: Vec2) -> (f64, Vec2) {
    let mut u = -mu_star;
    let mut g = Vec2::zeros();
    for ((n, &w), &m) in nodes.iter().zip(weights).zip(mu) {
        let c = (m - mu_star) * w;
        if c != 0.0 {
            let r = x - n.position;
            let r2 = r.norm_squared();
            if r2 < 1e-24 {
                // on the curve the kernel tends to -κ/4π; the density difference vanishes there
                continue;
            }
            u += c * dl_kernel(x, n);
            g += dl_kernel_grad(x, n) * c;
        }
    }
    (u, g)
}

/// Double-layer density of one solved Dirichlet problem.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    mu: Vec<f64>,
    fine: OnceLock<Vec<f64>>,
    interp: OnceLock<TrigInterpolant>,
}

impl HarmonicField {
    pub fn density(&self) -> &[f64] {
        &self.mu
    }

    fn interp(&self) -> &TrigInterpolant {
        self.interp.get_or_init(|| {
            let z: Vec<Complex64> = self.mu.iter().map(|&m| Complex64::new(m, 0.0)).collect();
            TrigInterpolant::from_samples(&z)
        })
    }

    /// Density trigonometrically interpolated onto the upsampled nodes.
    fn fine(&self) -> &[f64] {
        self.fine.get_or_init(|| {
            let n = self.mu.len();
            let m = n * UPSAMPLE;
            let c = dft_real(&self.mu);
            let mut buf = vec![Complex64::new(0.0, 0.0); m];
            for (j, &cj) in c.iter().enumerate() {
                let k = frequency(j, n);
                if n.is_multiple_of(2) && j == n / 2 {
                    buf[n / 2] += 0.5 * cj;
                    buf[m - n / 2] += 0.5 * cj;
                } else {
                    buf[k.rem_euclid(m as i64) as usize] = cj;
                }
            }
            FftPlanner::<f64>::new().plan_fft_inverse(m).process(&mut buf);
            buf.iter().map(|z| z.re).collect()
        })
    }
}

#[derive(Debug, Clone)]
enum EngineImpl {
    Image { center: Vec2, radius: f64 },
    Nystrom(Box<Nystrom>),
}

/// Evaluator of `G`, `k`, `h` and gradients on one fixed domain.
#[derive(Debug, Clone)]
pub struct GreenEngine {
    domain: Domain,
    backend: Backend,
    imp: EngineImpl,
}

/// Harmonic image `x ↦ (1/2π) log|x - y*| + c` matching the source's log
/// kernel near the closest boundary point.
#[derive(Debug, Clone, Copy)]
struct Kelvin {
    image: Vec2,
    constant: f64,
}

impl Kelvin {
    fn eval(&self, x: Vec2) -> (f64, Vec2) {
        let r = x - self.image;
        let r2 = r.norm_squared();
        (INV_2PI * 0.5 * r2.ln() + self.constant, r * (INV_2PI / r2))
    }
}

/// Reflection of an interior point across the nearby boundary.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BoundaryImage {
    pub image: Vec2,
    /// `log(|y - c|/ρ)` for the osculating circle `B(c, ρ)`, zero for a mirror
    /// reflection; `log|x - y| - log|x - y*|` equals it on that circle.
    pub log_ratio: f64,
    /// Outward normal at the nearest boundary point.
    pub normal: Vec2,
}

/// Kelvin image of `y` in the osculating circle at its nearest boundary
/// point (mirror image when the curvature is negligible), provided `y` is
/// within `max_dist` of the boundary and the image lies outside the domain.
pub(crate) fn boundary_image(domain: &Domain, y: Vec2, max_dist: f64) -> Option<BoundaryImage> {
    let proj = domain.nearest_boundary(y);
    let d = proj.distance;
    if d >= max_dist || proj.ambiguous {
        return None;
    }
    let bp = proj.boundary_point;
    let kappa = bp.curvature;
    let out = if kappa * d > 1e-6 && kappa * d < 0.5 {
        let rho = 1.0 / kappa;
        let c = bp.position - bp.outward_normal * rho;
        let yc = y - c;
        BoundaryImage {
            image: c + yc * (rho * rho / yc.norm_squared()),
            log_ratio: (yc.norm() / rho).ln(),
            normal: bp.outward_normal,
        }
    } else {
        BoundaryImage { image: bp.position + bp.outward_normal * d, log_ratio: 0.0, normal: bp.outward_normal }
    };
    let outside = !domain.contains(out.image) && domain.boundary_distance(out.image) > 0.5 * d;
    outside.then_some(out)
}

/// `x ↦ k(x, y)` for one source `y`, solved once and evaluated many times.
#[derive(Debug, Clone)]
pub struct SourceField<'a> {
    engine: &'a GreenEngine,
    source: Vec2,
    kelvin: Option<Kelvin>,
    field: Option<HarmonicField>,
}

impl SourceField<'_> {
    pub fn source(&self) -> Vec2 {
        self.source
    }

    /// `k(x, y)` and `∇ₓk(x, y)`.
    pub fn regular_with_grad(&self, x: Vec2) -> Result<(f64, Vec2), GreenError> {
        self.engine.check_inside(x)?;
        Ok(self.regular_with_grad_unchecked(x))
    }

    pub(crate) fn regular_with_grad_unchecked(&self, x: Vec2) -> (f64, Vec2) {
        match &self.engine.imp {
            EngineImpl::Image { center, radius } => image_regular(*center, *radius, x, self.source),
            EngineImpl::Nystrom(ny) => {
                let (mut v, mut g) = match &self.field {
                    Some(f) => ny.eval(f, x),
                    None => (0.0, Vec2::zeros()),
                };
                if let Some(k) = &self.kelvin {
                    let (kv, kg) = k.eval(x);
                    v += kv;
                    g += kg;
                }
                (v, g)
            }
        }
    }

    pub fn regular(&self, x: Vec2) -> Result<f64, GreenError> {
        Ok(self.regular_with_grad(x)?.0)
    }

    /// `G(x, y)` and `∇ₓG(x, y)`.
    pub fn green_with_grad(&self, x: Vec2) -> Result<(f64, Vec2), GreenError> {
        let (k, gk) = self.regular_with_grad(x)?;
        let r = x - self.source;
        let r2 = r.norm_squared();
        Ok((k - INV_2PI * 0.5 * r2.ln(), gk - r * (INV_2PI / r2)))
    }
}

/// Closed-form `k` and `∇ₓk` for the disk `B(c, R)`.
fn image_regular(c: Vec2, r: f64, x: Vec2, y: Vec2) -> (f64, Vec2) {
    let xp = x - c;
    let yp = y - c;
    let r2 = r * r;
    let x2 = xp.norm_squared();
    let y2 = yp.norm_squared();
    let q = x2 * y2 - 2.0 * r2 * xp.dot(&yp) + r2 * r2;
    let k = 0.25 / PI * (q / r2).ln();
    let g = (xp * (2.0 * y2) - yp * (2.0 * r2)) * (0.25 / PI / q);
    (k, g)
}

impl GreenEngine {
    pub fn new(domain: Domain, backend: Backend) -> Result<Self, GreenError> {
        let imp = match backend {
            Backend::Image => {
                let (center, radius) = domain.as_disk().ok_or(GreenError::ImageNeedsDisk)?;
                EngineImpl::Image { center, radius }
            }
            Backend::BoundaryIntegral { panels } => EngineImpl::Nystrom(Box::new(Nystrom::new(&domain, panels)?)),
        };
        Ok(Self { domain, backend, imp })
    }

    /// Engine with [`Backend::auto`].
    pub fn auto(domain: Domain) -> Result<Self, GreenError> {
        let b = Backend::auto(&domain);
        Self::new(domain, b)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    fn check_inside(&self, x: Vec2) -> Result<(), GreenError> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(GreenError::OutsideDomain(x.x, x.y))
        }
    }

    /// Precomputes `x ↦ k(x, y)`.
    pub fn source(&self, y: Vec2) -> Result<SourceField<'_>, GreenError> {
        self.check_inside(y)?;
        let ny = match &self.imp {
            EngineImpl::Image { .. } => {
                return Ok(SourceField { engine: self, source: y, kelvin: None, field: None });
            }
            EngineImpl::Nystrom(ny) => ny,
        };
        let kelvin = self.kelvin_image(y, ny.panel_width);
        let data: Vec<f64> = ny
            .nodes
            .iter()
            .map(|n| {
                let mut v = INV_2PI * 0.5 * (n.position - y).norm_squared().ln();
                if let Some(k) = &kelvin {
                    v -= k.eval(n.position).0;
                }
                v
            })
            .collect();
        let field = ny.solve(&data)?;
        Ok(SourceField { engine: self, source: y, kelvin, field: Some(field) })
    }

    fn kelvin_image(&self, y: Vec2, panel_width: f64) -> Option<Kelvin> {
        boundary_image(&self.domain, y, 8.0 * panel_width)
            .map(|b| Kelvin { image: b.image, constant: INV_2PI * b.log_ratio })
    }

    /// Regular part `k(x, y)`.
    pub fn regular_part(&self, x: Vec2, y: Vec2) -> Result<f64, GreenError> {
        self.check_inside(x)?;
        self.source(y)?.regular(x)
    }

    /// `∇ₓ k(x, y)`.
    pub fn grad_regular(&self, x: Vec2, y: Vec2) -> Result<Vec2, GreenError> {
        self.check_inside(x)?;
        Ok(self.source(y)?.regular_with_grad(x)?.1)
    }

    /// `G(x, y)`.
    pub fn green(&self, x: Vec2, y: Vec2) -> Result<f64, GreenError> {
        self.check_inside(x)?;
        Ok(self.source(y)?.green_with_grad(x)?.0)
    }

    /// Robin function `h(x) = k(x, x)` and its gradient `2∇ₓk(x, y)|_{y=x}`.
    pub fn robin_with_grad(&self, x: Vec2) -> Result<(f64, Vec2), GreenError> {
        self.check_inside(x)?;
        match &self.imp {
            EngineImpl::Image { center, radius } => {
                let xp = x - center;
                let s = radius * radius - xp.norm_squared();
                Ok((INV_2PI * (s / radius).ln(), -xp / (PI * s)))
            }
            EngineImpl::Nystrom(_) => {
                let (v, g) = self.source(x)?.regular_with_grad_unchecked(x);
                Ok((v, g * 2.0))
            }
        }
    }

    pub fn robin_function(&self, x: Vec2) -> Result<f64, GreenError> {
        Ok(self.robin_with_grad(x)?.0)
    }

    pub fn grad_robin(&self, x: Vec2) -> Result<Vec2, GreenError> {
        Ok(self.robin_with_grad(x)?.1)
    }

    /// `-Δh(x) - (2/π) e^{-4π h(x)}` with a five-point Laplacian of step `step`.
    pub fn liouville_residual(&self, x: Vec2, step: f64) -> Result<f64, GreenError> {
        self.check_inside(x)?;
        if !(step > 0.0) || self.domain.boundary_distance(x) <= 2.0 * step {
            return Err(GreenError::StencilOutsideDomain { x: x.x, y: x.y, step });
        }
        let h0 = self.robin_function(x)?;
        let mut lap = -4.0 * h0;
        for d in [Vec2::new(step, 0.0), Vec2::new(-step, 0.0), Vec2::new(0.0, step), Vec2::new(0.0, -step)] {
            lap += self.robin_function(x + d)?;
        }
        lap /= step * step;
        Ok(-lap - 2.0 / PI * (-4.0 * PI * h0).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> GreenEngine {
        GreenEngine::new(Domain::unit_disk(), Backend::Image).unwrap()
    }

    fn bie_disk(panels: usize) -> GreenEngine {
        GreenEngine::new(Domain::unit_disk(), Backend::BoundaryIntegral { panels }).unwrap()
    }

    #[test]
    fn image_examples() {
        let g = unit();
        assert_relative_eq!(g.regular_part(Vec2::zeros(), Vec2::new(0.5, 0.0)).unwrap(), 0.0, epsilon = 1e-15);
        let x = Vec2::new(0.6, 0.0);
        assert_relative_eq!(g.regular_part(x, x).unwrap(), INV_2PI * 0.64f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(g.robin_function(Vec2::zeros()).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(g.robin_function(Vec2::new(0.8, 0.0)).unwrap(), -0.162601, epsilon = 1e-6);
        let gh = g.grad_robin(Vec2::new(0.5, 0.0)).unwrap();
        assert_relative_eq!(gh.x, -0.21221, epsilon = 1e-5);
        assert_eq!(gh.y, 0.0);
        assert_eq!(g.grad_robin(Vec2::zeros()).unwrap(), Vec2::zeros());
    }

    #[test]
    fn image_on_shifted_disk_vanishes_on_boundary() {
        let d = Domain::disk(Vec2::new(1.0, -2.0), 3.0).unwrap();
        let g = GreenEngine::new(d, Backend::Image).unwrap();
        let y = Vec2::new(2.0, -1.0);
        for t in [0.1, 1.7, 4.0] {
            let x = Vec2::new(1.0, -2.0) + Vec2::new(f64::cos(t), f64::sin(t)) * (3.0 - 1e-9);
            assert!(g.green(x, y).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn robin_decreases_toward_boundary() {
        let g = unit();
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let h = g.robin_function(Vec2::new(0.02 * k as f64, 0.0)).unwrap();
            assert!(h < prev);
            prev = h;
        }
    }

    #[test]
    fn bie_matches_image_including_near_boundary_sources() {
        let img = unit();
        let bie = bie_disk(256);
        let pts = [
            Vec2::new(0.1, 0.2),
            Vec2::new(-0.5, 0.3),
            Vec2::new(0.0, -0.9),
            Vec2::new(0.93, 0.1),
            Vec2::new(-0.3, -0.88),
        ];
        for &x in &pts {
            for &y in &pts {
                let a = img.regular_part(x, y).unwrap();
                let b = bie.regular_part(x, y).unwrap();
                assert!((a - b).abs() < 1e-8, "{x:?} {y:?}: {a} vs {b}");
                let ga = img.grad_regular(x, y).unwrap();
                let gb = bie.grad_regular(x, y).unwrap();
                assert!((ga - gb).norm() < 1e-6, "{x:?} {y:?}: {ga:?} vs {gb:?}");
            }
        }
    }

    #[test]
    fn bie_ellipse_symmetry_and_boundary_values() {
        let d = Domain::ellipse(Vec2::zeros(), 2.0, 1.0, 256).unwrap();
        let g = GreenEngine::new(d.clone(), Backend::BoundaryIntegral { panels: 256 }).unwrap();
        let pairs = [(Vec2::new(0.3, 0.2), Vec2::new(-1.1, 0.4)), (Vec2::new(1.5, -0.3), Vec2::new(0.0, 0.7))];
        for (x, y) in pairs {
            let a = g.regular_part(x, y).unwrap();
            let b = g.regular_part(y, x).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
        // G vanishes on the boundary
        let y = Vec2::new(0.4, 0.1);
        let s = g.source(y).unwrap();
        for t in [0.3, 2.0, 4.5] {
            let bp = d.boundary_point(t);
            let x = bp.position - bp.outward_normal * 1e-3;
            let (v, _) = s.green_with_grad(x).unwrap();
            assert!(v.abs() < 2e-3, "{v}");
        }
    }

    #[test]
    fn grad_robin_matches_finite_differences() {
        let d = Domain::ellipse(Vec2::zeros(), 1.5, 1.0, 256).unwrap();
        for g in [unit(), GreenEngine::new(d, Backend::BoundaryIntegral { panels: 256 }).unwrap()] {
            for x in [Vec2::new(0.3, -0.2), Vec2::new(0.7, 0.1)] {
                let step = 1e-5;
                let fd = Vec2::new(
                    (g.robin_function(x + Vec2::new(step, 0.0)).unwrap()
                        - g.robin_function(x - Vec2::new(step, 0.0)).unwrap())
                        / (2.0 * step),
                    (g.robin_function(x + Vec2::new(0.0, step)).unwrap()
                        - g.robin_function(x - Vec2::new(0.0, step)).unwrap())
                        / (2.0 * step),
                );
                let an = g.grad_robin(x).unwrap();
                assert!((an - fd).norm() < 1e-5 * an.norm(), "{an:?} {fd:?}");
            }
        }
    }

    #[test]
    fn liouville_on_the_disk() {
        let g = unit();
        let x = Vec2::new(0.3, 0.2);
        let r = g.liouville_residual(x, 1e-3).unwrap();
        let scale = 2.0 / PI * (-4.0 * PI * g.robin_function(x).unwrap()).exp();
        assert!(r.abs() < 1e-3 * scale);
        assert!(matches!(
            g.liouville_residual(Vec2::new(0.99, 0.0), 0.01),
            Err(GreenError::StencilOutsideDomain { .. })
        ));
    }

    #[test]
    fn rejects_points_outside() {
        let g = unit();
        assert!(matches!(g.robin_function(Vec2::new(1.0, 0.0)), Err(GreenError::OutsideDomain(..))));
        assert!(matches!(
            GreenEngine::new(Domain::ellipse(Vec2::zeros(), 2.0, 1.0, 64).unwrap(), Backend::Image),
            Err(GreenError::ImageNeedsDisk)
        ));
    }
}
