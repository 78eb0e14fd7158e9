//! Boundary-datum functionals: dislocations of circulation `2π` in a convex
//! domain whose boundary carries a prescribed tangential strain `f` with
//! `∫ f ds = 2π` (applied as `n f` for `n` dislocations).
//!
//! The strain is `h = Σ K_{a_i} + ∇v` with `K_a = ρ_a⁻¹ θ̂_a` and `v` harmonic
//! with boundary values `n g - Σ θ_{a_i}`, `g` a primitive of `f` that jumps
//! where the angular coordinates `θ_{a_i}` start. Those boundary values are
//! continuous, and moving a jump point together with its angular origin only
//! shifts `v` by a constant, so every functional here is independent of the
//! jump placement.
//!
//! On a disk the center-dependent part of `v` is `Σ Im log(1 - ᾱ_i w)` in
//! the scaled coordinate `w`; only the datum's deviation from uniform needs a
//! Fourier series. Other domains use the Nyström solver, with a reflected
//! angle function absorbing the sharp part of the data for centers near the
//! boundary.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fourier::dft_real;
use crate::geometry::{cross, rot90, Domain, GeometryError, Vec2};
use crate::green::{boundary_image, GreenError, HarmonicField, Nystrom};
use crate::quadrature::{adaptive, annulus_rule, excised_rule, star_rule, QuadratureError, QuadratureOptions};

const TWO_PI: f64 = 2.0 * PI;
/// Allowed deviation of the datum's total circulation from `2π`.
pub const CIRCULATION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirichletError {
    #[error("boundary-datum functionals need a convex domain")]
    NotConvex,
    #[error("invalid boundary datum: {0}")]
    InvalidDatum(String),
    #[error("datum circulation {0} differs from 2π")]
    CirculationMismatch(f64),
    #[error("{jumps} jump points for {centers} dislocations")]
    JumpMismatch { jumps: usize, centers: usize },
    #[error("point ({0}, {1}) is outside the domain")]
    OutsideDomain(f64, f64),
    #[error("core radius {eps} is not below the smallest admissible radius {limit}")]
    CoreOverlap { eps: f64, limit: f64 },
    #[error("the Fourier backend needs a disk domain")]
    FourierNeedsDisk,
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Serializable datum description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatumSpec {
    /// `f = 2π / |∂Ω|`.
    Uniform,
    /// Periodic piecewise-linear `f` through `(arc length, value)` pairs.
    Table { arc: Vec<f64>, values: Vec<f64> },
}

/// Tangential strain `f` on the boundary, parametrized by arc length from
/// the boundary point at parameter 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDatum {
    perimeter: f64,
    table: Option<Table>,
}

#[derive(Debug, Clone, PartialEq)]
struct Table {
    s: Vec<f64>,
    f: Vec<f64>,
    /// `∫_0^{s_k} f`
    cum: Vec<f64>,
    total: f64,
}

impl BoundaryDatum {
    pub fn uniform(domain: &Domain) -> Self {
        Self { perimeter: domain.perimeter(), table: None }
    }

    pub fn from_spec(domain: &Domain, spec: &DatumSpec) -> Result<Self, DirichletError> {
        match spec {
            DatumSpec::Uniform => Ok(Self::uniform(domain)),
            DatumSpec::Table { arc, values } => Self::table(domain, arc.clone(), values.clone()),
        }
    }

    /// Piecewise-linear datum; arc positions strictly increasing in `[0, |∂Ω|)`.
    pub fn table(domain: &Domain, arc: Vec<f64>, values: Vec<f64>) -> Result<Self, DirichletError> {
        let l = domain.perimeter();
        if arc.len() != values.len() || arc.len() < 2 {
            return Err(DirichletError::InvalidDatum("need at least two (arc, value) pairs of equal length".into()));
        }
        if arc[0] < 0.0 || *arc.last().unwrap() >= l || arc.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DirichletError::InvalidDatum(format!("arc positions must increase within [0, {l})")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DirichletError::InvalidDatum("non-finite value".into()));
        }
        let n = arc.len();
        let mut cum = vec![0.0; n];
        // segment wrapping from the last node to the first
        let wrap_len = arc[0] + l - arc[n - 1];
        let slope = (values[0] - values[n - 1]) / wrap_len;
        let f_at_0 = values[n - 1] + slope * (l - arc[n - 1]);
        cum[0] = 0.5 * (f_at_0 + values[0]) * arc[0];
        for k in 1..n {
            cum[k] = cum[k - 1] + 0.5 * (values[k - 1] + values[k]) * (arc[k] - arc[k - 1]);
        }
        let total = cum[n - 1] + 0.5 * (values[n - 1] + f_at_0) * (l - arc[n - 1]);
        if (total - TWO_PI).abs() > CIRCULATION_TOL {
            return Err(DirichletError::CirculationMismatch(total));
        }
        Ok(Self { perimeter: l, table: Some(Table { s: arc, f: values, cum, total }) })
    }

    /// Samples `f` at `samples` equally spaced arc positions and rescales it
    /// to circulation `2π`.
    pub fn from_fn(domain: &Domain, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self, DirichletError> {
        let l = domain.perimeter();
        let arc: Vec<f64> = (0..samples).map(|k| l * k as f64 / samples as f64).collect();
        let vals: Vec<f64> = arc.iter().map(|&s| f(s)).collect();
        let total: f64 = vals.iter().sum::<f64>() * l / samples as f64;
        if !(total.abs() > 0.0) {
            return Err(DirichletError::InvalidDatum("datum has zero circulation".into()));
        }
        let vals = vals.iter().map(|v| v * TWO_PI / total).collect();
        Self::table(domain, arc, vals)
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn is_uniform(&self) -> bool {
        self.table.is_none()
    }

    fn locate(t: &Table, s: f64, l: f64) -> (f64, f64, f64, f64) {
        // returns (s_left, f_left, s_right, f_right) with s in [s_left, s_right]
        let n = t.s.len();
        let k = t.s.partition_point(|&x| x <= s);
        if k == 0 {
            (t.s[n - 1] - l, t.f[n - 1], t.s[0], t.f[0])
        } else if k == n {
            (t.s[n - 1], t.f[n - 1], t.s[0] + l, t.f[0])
        } else {
            (t.s[k - 1], t.f[k - 1], t.s[k], t.f[k])
        }
    }

    /// `f(s)`.
    pub fn value(&self, s: f64) -> f64 {
        let l = self.perimeter;
        let s = s.rem_euclid(l);
        match &self.table {
            None => TWO_PI / l,
            Some(t) => {
                let (s0, f0, s1, f1) = Self::locate(t, s, l);
                f0 + (f1 - f0) * (s - s0) / (s1 - s0)
            }
        }
    }

    /// `∫_0^s f`, continued so that each full turn adds `2π`.
    pub fn cumulative(&self, s: f64) -> f64 {
        let l = self.perimeter;
        let turns = (s / l).floor();
        let s = s - turns * l;
        let base = TWO_PI * turns;
        match &self.table {
            None => base + TWO_PI * s / l,
            Some(t) => {
                let (s0, f0, s1, f1) = Self::locate(t, s, l);
                let fs = f0 + (f1 - f0) * (s - s0) / (s1 - s0);
                let k = t.s.partition_point(|&x| x <= s);
                let c0 = if k == 0 { 0.0 } else { t.cum[k - 1] };
                let from = if k == 0 { 0.0 } else { s0 };
                let f_from = if k == 0 { f0 + (f1 - f0) * (0.0 - s0) / (s1 - s0) } else { f0 };
                base + c0 + 0.5 * (f_from + fs) * (s - from)
            }
        }
    }

    /// Total circulation `∫ f ds`.
    pub fn circulation(&self) -> f64 {
        self.table.as_ref().map_or(TWO_PI, |t| t.total)
    }

    /// Primitive `g` of `f` with jumps of `-2π/n` at the given arc positions,
    /// normalized by `g = 0` just after the first jump.
    pub fn primitive(&self, s: f64, jumps: &[f64]) -> f64 {
        let n = jumps.len() as f64;
        jumps.iter().map(|&b| self.primitive_from(s, b)).sum::<f64>() / n
    }

    /// `∫_b^s f` taken counterclockwise from `b`, in `[0, 2π)` for `f ≥ 0`.
    fn primitive_from(&self, s: f64, b: f64) -> f64 {
        let sigma = (s - b).rem_euclid(self.perimeter);
        self.cumulative(b + sigma) - self.cumulative(b)
    }
}

/// `K_a(x) = ρ_a⁻¹ θ̂_a(x)`.
#[inline]
pub fn singular_field(a: Vec2, x: Vec2) -> Vec2 {
    let r = x - a;
    rot90(r) / r.norm_squared()
}

/// Where the primitive `g` jumps (and where each angular coordinate starts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpPlacement {
    /// The boundary point nearest to each center.
    #[default]
    Nearest,
    /// Explicit curve parameters, one per center.
    Params { params: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrectorBackend {
    /// Fourier for disks, boundary integrals otherwise.
    #[default]
    Auto,
    Fourier,
    BoundaryIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirichletOptions {
    pub backend: CorrectorBackend,
    pub panels: usize,
    pub jumps: JumpPlacement,
}

impl Default for DirichletOptions {
    fn default() -> Self {
        Self { backend: CorrectorBackend::Auto, panels: 256, jumps: JumpPlacement::Nearest }
    }
}

#[derive(Debug, Clone)]
enum Solver {
    /// Disk `B(c, R)` with Fourier coefficients `c_k, k ≥ 0` of
    /// `P(Rt) - t`, `P` the datum's cumulative integral.
    Fourier { center: Vec2, radius: f64, coeffs: Vec<Complex64> },
    Nystrom(Box<Nystrom>),
}

/// Domain, datum and cached boundary solver.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    domain: Domain,
    datum: BoundaryDatum,
    opts: DirichletOptions,
    solver: Solver,
}

fn wrap_pi(x: f64) -> f64 {
    x - TWO_PI * (x / TWO_PI).round()
}

/// Angle of `p - a` measured counterclockwise from `b - a`, in `[0, 2π)`.
fn angle_from(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let u = b - a;
    let r = p - a;
    cross(u, r).atan2(u.dot(&r)).rem_euclid(TWO_PI)
}

impl DirichletProblem {
    pub fn new(domain: Domain, datum: BoundaryDatum, opts: DirichletOptions) -> Result<Self, DirichletError> {
        if !domain.is_convex() {
            return Err(DirichletError::NotConvex);
        }
        if (datum.perimeter - domain.perimeter()).abs() > 1e-9 * domain.perimeter() {
            return Err(DirichletError::InvalidDatum("datum was built for a different boundary".into()));
        }
        let disk = domain.as_disk();
        let solver = match (opts.backend, disk) {
            (CorrectorBackend::Auto | CorrectorBackend::Fourier, Some((center, radius))) => {
                Solver::Fourier { center, radius, coeffs: smooth_coefficients(&datum, radius) }
            }
            (CorrectorBackend::Fourier, None) => return Err(DirichletError::FourierNeedsDisk),
            _ => Solver::Nystrom(Box::new(Nystrom::new(&domain, opts.panels)?)),
        };
        Ok(Self { domain, datum, opts, solver })
    }

    /// Uniform datum with default options.
    pub fn uniform(domain: Domain) -> Result<Self, DirichletError> {
        let datum = BoundaryDatum::uniform(&domain);
        Self::new(domain, datum, DirichletOptions::default())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn datum(&self) -> &BoundaryDatum {
        &self.datum
    }

    fn jump_params(&self, centers: &[Vec2]) -> Result<Vec<f64>, DirichletError> {
        match &self.opts.jumps {
            JumpPlacement::Nearest => {
                Ok(centers.iter().map(|&a| self.domain.nearest_boundary(a).boundary_point.param).collect())
            }
            JumpPlacement::Params { params } => {
                if params.len() != centers.len() {
                    return Err(DirichletError::JumpMismatch { jumps: params.len(), centers: centers.len() });
                }
                Ok(params.clone())
            }
        }
    }

    fn check_inside(&self, a: Vec2) -> Result<(), DirichletError> {
        if self.domain.contains(a) {
            Ok(())
        } else {
            Err(DirichletError::OutsideDomain(a.x, a.y))
        }
    }

    /// Harmonic corrector `v_{a_1..a_n}` for the datum `n f`.
    pub fn corrector(&self, centers: &[Vec2]) -> Result<Corrector<'_>, DirichletError> {
        if centers.is_empty() {
            return Err(GeometryError::EmptyConfiguration.into());
        }
        for &a in centers {
            self.check_inside(a)?;
        }
        let jumps = self.jump_params(centers)?;
        let n = centers.len() as f64;
        let imp = match &self.solver {
            Solver::Fourier { center, radius, .. } => CorrectorImpl::Fourier {
                alphas: centers
                    .iter()
                    .map(|a| {
                        let w = (a - center) / *radius;
                        Complex64::new(w.x, -w.y)
                    })
                    .collect(),
            },
            Solver::Nystrom(ny) => {
                let images: Vec<Option<(Vec2, Vec2)>> = centers
                    .iter()
                    .map(|&a| boundary_image(&self.domain, a, 8.0 * ny.panel_width()).map(|b| (b.image, -b.normal)))
                    .collect();
                let mut data = Vec::with_capacity(ny.panels());
                let mut prev_raw = 0.0;
                for (j, node) in ny.nodes().iter().enumerate() {
                    let x = node.position;
                    let s = self.domain.arc_length(TWO_PI * j as f64 / ny.panels() as f64);
                    let mut raw = n * self.datum.cumulative(s);
                    for (i, &a) in centers.iter().enumerate() {
                        let r = x - a;
                        raw -= r.y.atan2(r.x);
                        if let Some((img, inward)) = images[i] {
                            raw -= reflected_angle(img, inward, x);
                        }
                    }
                    let lifted = if j == 0 { raw } else { data[j - 1] + wrap_pi(raw - prev_raw) };
                    data.push(lifted);
                    prev_raw = raw;
                }
                let field = ny.solve(&data)?;
                CorrectorImpl::Nystrom { field, images, data }
            }
        };
        let mut c = Corrector { problem: self, centers: centers.to_vec(), jumps, imp, offset: 0.0 };
        c.offset = c.reference_offset();
        Ok(c)
    }

    /// `d_i = min(dist(a_i, ∂Ω), min_{j≠i} |a_i - a_j|/2)`.
    pub fn radii(&self, centers: &[Vec2]) -> Vec<f64> {
        centers
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let mut d = self.domain.boundary_distance(a);
                for (j, &b) in centers.iter().enumerate() {
                    if j != i {
                        d = d.min(0.5 * (a - b).norm());
                    }
                }
                d
            })
            .collect()
    }

    fn admissible(&self, centers: &[Vec2]) -> bool {
        centers.iter().all(|&a| self.domain.contains(a)) && self.radii(centers).iter().all(|&d| d > 1e-12)
    }

    /// Single-dislocation limit functional
    /// `F(a) = π log d + ½∫_{Ω_d(a)} |K_a + ∇v_a|² + ½∫_{B_d(a)} |∇v_a|²`.
    /// Boundary points give `+∞`.
    pub fn limit_functional(&self, a: Vec2, q: &QuadratureOptions) -> Result<f64, DirichletError> {
        if !self.domain.contains(a) {
            return if self.domain.boundary_distance(a) <= 1e-12 * self.domain.diameter() {
                Ok(f64::INFINITY)
            } else {
                Err(DirichletError::OutsideDomain(a.x, a.y))
            };
        }
        let d = self.domain.boundary_distance(a);
        let v = self.corrector(&[a])?;
        let c = adaptive::<2, DirichletError>(q, |lvl| {
            let outer = star_rule(&self.domain, a, d, lvl, q)?;
            let inner = annulus_rule(a, 0.0, d, lvl, q);
            Ok([
                0.5 * outer.integrate(|x| (singular_field(a, x) + v.grad(x)).norm_squared()),
                0.5 * inner.integrate(|x| v.grad(x).norm_squared()),
            ])
        })?;
        Ok(PI * d.ln() + c.value[0] + c.value[1])
    }

    /// `n`-dislocation limit functional, term by term:
    /// `Σ π log d_i + ½∫|∇v|² + Σ ½∫_{Ω_{d_i}(a_i)} |K_i|² + Σ ∫_{Ω_{d_i}(a_i)} ∇v·K_i + Σ_{i<j} ∫ K_i·K_j`.
    /// Coincident centers or boundary contact give `+∞`.
    pub fn limit_functional_n(&self, centers: &[Vec2], q: &QuadratureOptions) -> Result<f64, DirichletError> {
        if centers.is_empty() {
            return Err(GeometryError::EmptyConfiguration.into());
        }
        if !self.admissible(centers) {
            return Ok(f64::INFINITY);
        }
        let d = self.radii(centers);
        let v = self.corrector(centers)?;
        let mut total: f64 = d.iter().map(|di| PI * di.ln()).sum();
        let zeros = vec![0.0; centers.len()];
        total += adaptive::<1, DirichletError>(q, |lvl| {
            let r = excised_rule(&self.domain, centers, &zeros, lvl, q)?;
            Ok([0.5 * r.integrate(|x| v.grad(x).norm_squared())])
        })?
        .value[0];
        for (i, &a) in centers.iter().enumerate() {
            total += adaptive::<1, DirichletError>(q, |lvl| {
                let r = star_rule(&self.domain, a, d[i], lvl, q)?;
                Ok([r.integrate(|x| {
                    let k = singular_field(a, x);
                    0.5 * k.norm_squared() + v.grad(x).dot(&k)
                })])
            })?
            .value[0];
        }
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                let (ai, aj) = (centers[i], centers[j]);
                total += adaptive::<1, DirichletError>(q, |lvl| {
                    let r = excised_rule(&self.domain, &[ai, aj], &[0.0, 0.0], lvl, q)?;
                    Ok([r.integrate(|x| singular_field(ai, x).dot(&singular_field(aj, x)))])
                })?
                .value[0];
            }
        }
        Ok(total)
    }

    /// `∫_Ω (K_{a} + ∇v_{a})·(K_{b} + ∇v_{b})` with single-center correctors.
    pub fn cross_term(&self, a: Vec2, b: Vec2, q: &QuadratureOptions) -> Result<f64, DirichletError> {
        let va = self.corrector(&[a])?;
        let vb = self.corrector(&[b])?;
        let c = adaptive::<1, DirichletError>(q, |lvl| {
            let r = excised_rule(&self.domain, &[a, b], &[0.0, 0.0], lvl, q)?;
            Ok([r.integrate(|x| va.field(x).dot(&vb.field(x)))])
        })?;
        Ok(c.value[0])
    }

    /// `E_ε = ½∫_{Ω_ε(a_1..a_n)} |Σ K_{a_i} + ∇v|²`, the energy of the limit
    /// field outside the cores. Requires `ε < min d_i`.
    pub fn finite_eps_energy(&self, centers: &[Vec2], eps: f64, q: &QuadratureOptions) -> Result<f64, DirichletError> {
        for &a in centers {
            self.check_inside(a)?;
        }
        let limit = self.radii(centers).into_iter().fold(f64::INFINITY, f64::min);
        if !(eps > 0.0) || eps >= limit {
            return Err(DirichletError::CoreOverlap { eps, limit });
        }
        let v = self.corrector(centers)?;
        let radii = vec![eps; centers.len()];
        let c = adaptive::<1, DirichletError>(q, |lvl| {
            let r = excised_rule(&self.domain, centers, &radii, lvl, q)?;
            Ok([0.5 * r.integrate(|x| v.field(x).norm_squared())])
        })?;
        Ok(c.value[0])
    }

    /// `F_ε = E_ε - π n |log ε|`.
    pub fn renormalize(&self, centers: &[Vec2], eps: f64, q: &QuadratureOptions) -> Result<f64, DirichletError> {
        let e = self.finite_eps_energy(centers, eps, q)?;
        Ok(e - PI * centers.len() as f64 * eps.ln().abs())
    }

    /// `F_ε`, but `+∞` wherever the configuration is not admissible for
    /// radius `ε`; used by the optimizer.
    pub fn renormalize_or_inf(&self, centers: &[Vec2], eps: f64, q: &QuadratureOptions) -> Result<f64, DirichletError> {
        if !centers.iter().all(|&a| self.domain.contains(a)) {
            return Ok(f64::INFINITY);
        }
        let limit = self.radii(centers).into_iter().fold(f64::INFINITY, f64::min);
        if eps >= limit {
            return Ok(f64::INFINITY);
        }
        self.renormalize(centers, eps, q)
    }
}

/// Angle of `x - img` from the inward direction; continuous on the closed
/// domain because its cut points away from it.
fn reflected_angle(img: Vec2, inward: Vec2, x: Vec2) -> f64 {
    let r = x - img;
    cross(inward, r).atan2(inward.dot(&r))
}

/// Fourier coefficients `c_0..c_K` of `P(Rt) - t`. Sampling starts well
/// above the table's knot count, whose kinks put harmonics near multiples of
/// it, and doubles until the discarded upper half sums below `1e-12`.
fn smooth_coefficients(datum: &BoundaryDatum, radius: f64) -> Vec<Complex64> {
    let Some(table) = &datum.table else {
        return vec![Complex64::new(0.0, 0.0)];
    };
    let mut m = (8 * table.s.len()).next_power_of_two().max(64);
    loop {
        let samples: Vec<f64> = (0..m)
            .map(|j| {
                let t = TWO_PI * j as f64 / m as f64;
                datum.cumulative(radius * t) - t
            })
            .collect();
        let c = dft_real(&samples);
        let half = m / 2;
        let tail: f64 = 2.0 * c[half / 2..half].iter().map(|z| z.norm()).sum::<f64>();
        if tail < 1e-12 || m >= MAX_SAMPLES {
            if tail >= 1e-12 {
                log::warn!("datum Fourier tail {tail:e} at {m} samples");
            }
            let scale = c[..half].iter().map(|z| z.norm()).fold(1.0f64, f64::max);
            let mut keep = half - 1;
            while keep > 0 && c[keep].norm() < 1e-16 * scale {
                keep -= 1;
            }
            return c[..=keep].to_vec();
        }
        m *= 2;
    }
}

const MAX_SAMPLES: usize = 1 << 16;

#[derive(Debug, Clone)]
enum CorrectorImpl {
    /// Conjugated scaled centers `ᾱ_i`.
    Fourier { alphas: Vec<Complex64> },
    Nystrom { field: HarmonicField, images: Vec<Option<(Vec2, Vec2)>>, data: Vec<f64> },
}

/// Harmonic corrector `v` for a set of centers, with its gradient and the
/// full strain `Σ K_{a_i} + ∇v`.
#[derive(Debug, Clone)]
pub struct Corrector<'a> {
    problem: &'a DirichletProblem,
    centers: Vec<Vec2>,
    jumps: Vec<f64>,
    imp: CorrectorImpl,
    offset: f64,
}

impl Corrector<'_> {
    pub fn centers(&self) -> &[Vec2] {
        &self.centers
    }

    /// Curve parameters of the jump points of `g`.
    pub fn jump_params(&self) -> &[f64] {
        &self.jumps
    }

    fn raw(&self, x: Vec2) -> (f64, Vec2) {
        let n = self.centers.len() as f64;
        match (&self.imp, &self.problem.solver) {
            (CorrectorImpl::Fourier { alphas }, Solver::Fourier { center, radius, coeffs }) => {
                let wv = (x - center) / *radius;
                let w = Complex64::new(wv.x, wv.y);
                // smooth part Re(c_0 + 2 Σ c_k w^k)
                let mut val = Complex64::new(0.0, 0.0);
                let mut der = Complex64::new(0.0, 0.0);
                for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
                    val = val * w + c;
                    der = der * w + c * k as f64;
                }
                let mut phi = coeffs[0] + 2.0 * val * w;
                let mut dphi = 2.0 * der;
                phi *= n;
                dphi *= n;
                let mut v = phi.re;
                for &ab in alphas {
                    let z = Complex64::new(1.0, 0.0) - ab * w;
                    v += z.arg();
                    dphi += Complex64::new(0.0, 1.0) * ab / z;
                }
                (v, Vec2::new(dphi.re, -dphi.im) / *radius)
            }
            (CorrectorImpl::Nystrom { field, images, .. }, Solver::Nystrom(ny)) => {
                let (mut v, mut g) = ny.eval(field, x);
                for &(img, inward) in images.iter().flatten() {
                    v += reflected_angle(img, inward, x);
                    let r = x - img;
                    g += rot90(r) / r.norm_squared();
                }
                (v, g)
            }
            _ => unreachable!("corrector and solver kinds always match"),
        }
    }

    /// Shift making `v` equal the boundary data at a point far from all jumps.
    fn reference_offset(&self) -> f64 {
        let d = &self.problem.domain;
        let candidates = 64;
        let t_ref = (0..candidates)
            .map(|k| TWO_PI * (k as f64 + 0.5) / candidates as f64)
            .max_by(|&t1, &t2| {
                let gap = |t: f64| {
                    self.jumps
                        .iter()
                        .map(|&b| wrap_pi(t - b).abs())
                        .fold(f64::INFINITY, f64::min)
                };
                gap(t1).total_cmp(&gap(t2))
            })
            .unwrap();
        let target = self.boundary_data(t_ref);
        let here = match &self.imp {
            CorrectorImpl::Fourier { .. } => self.raw(d.boundary_point(t_ref).position).0,
            CorrectorImpl::Nystrom { data, images, .. } => {
                // the solver reproduces its data at the nodes
                let m = data.len();
                let j = ((t_ref / TWO_PI * m as f64).round() as usize) % m;
                let x = d.boundary_point(TWO_PI * j as f64 / m as f64).position;
                let img: f64 = images.iter().flatten().map(|&(i, u)| reflected_angle(i, u, x)).sum();
                return self.boundary_data(TWO_PI * j as f64 / m as f64) - (data[j] + img);
            }
        };
        target - here
    }

    /// Boundary values `n g - Σ θ_{a_i}` at curve parameter `t`.
    pub fn boundary_data(&self, t: f64) -> f64 {
        let d = &self.problem.domain;
        let p = d.boundary_point(t).position;
        let s = d.arc_length(t);
        self.centers
            .iter()
            .zip(&self.jumps)
            .map(|(&a, &b)| {
                let g = self.problem.datum.primitive_from(s, d.arc_length(b));
                g - angle_from(a, d.boundary_point(b).position, p)
            })
            .sum()
    }

    /// `v(x)`.
    pub fn value(&self, x: Vec2) -> f64 {
        self.raw(x).0 + self.offset
    }

    /// `∇v(x)`.
    pub fn grad(&self, x: Vec2) -> Vec2 {
        self.raw(x).1
    }

    /// `Σ K_{a_i}(x) + ∇v(x)`.
    pub fn field(&self, x: Vec2) -> Vec2 {
        let mut h = self.grad(x);
        for &a in &self.centers {
            h += singular_field(a, x);
        }
        h
    }

    /// Trapezoid rule for `∮ h·t ds` on a counterclockwise circle.
    pub fn circulation(&self, center: Vec2, radius: f64, nodes: usize) -> f64 {
        let dphi = TWO_PI / nodes as f64;
        (0..nodes)
            .map(|k| {
                let phi = dphi * k as f64;
                let u = Vec2::new(phi.cos(), phi.sin());
                self.field(center + u * radius).dot(&rot90(u)) * radius * dphi
            })
            .sum()
    }

    /// Largest deviation of `v` from its boundary data over `samples` boundary
    /// points away from the jump points. Exact boundary evaluation needs the
    /// Fourier backend; the Nyström backend is probed `1e-6·diam` inside.
    pub fn trace_error(&self, samples: usize) -> f64 {
        let d = &self.problem.domain;
        let inset = match self.imp {
            CorrectorImpl::Fourier { .. } => 0.0,
            CorrectorImpl::Nystrom { .. } => 1e-6 * d.diameter(),
        };
        (0..samples)
            .filter_map(|k| {
                let t = TWO_PI * (k as f64 + 0.5) / samples as f64;
                let near_jump = self.jumps.iter().any(|&b| wrap_pi(t - b).abs() < 1e-6);
                if near_jump {
                    return None;
                }
                let bp = d.boundary_point(t);
                let v = self.value(bp.position - bp.outward_normal * inset);
                Some(wrap_pi(v - self.boundary_data(t)).abs())
            })
            .fold(0.0, f64::max)
    }
}

impl DirichletProblem {
    /// Number of retained datum Fourier modes, `None` for the boundary-integral backend.
    pub fn fourier_modes(&self) -> Option<usize> {
        match &self.solver {
            Solver::Fourier { coeffs, .. } => Some(coeffs.len()),
            Solver::Nystrom(_) => None,
        }
    }
}
