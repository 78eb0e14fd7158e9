//! Renormalized energy, Peach–Koehler forces and strain fields of signed
//! dislocations, normalized so that the strain circulates by `b_i` around
//! dislocation `i`.
//!
//! ```text
//! E_n(z) = Σ_{i<j} b_i b_j G(z_i, z_j) + ½ Σ_i h(z_i)
//! f_i    = -∇_{z_i} E_n
//! h(x)   = Σ_i b_i (∂_y G, -∂_x G)(x, z_i)
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Domain, GeometryError, Vec2};
use crate::green::{GreenEngine, GreenError, SourceField};
use crate::quadrature::{self, QuadratureError, QuadratureOptions};

/// Pairs closer than this are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("dislocations {0} and {1} coincide with opposite signs")]
    CoincidentDislocations(usize, usize),
    #[error("Burgers modulus {0} is not ±1")]
    InvalidModulus(i32),
    #[error("{positions} positions but {moduli} moduli")]
    LengthMismatch { positions: usize, moduli: usize },
    #[error("dislocation {0} is not inside the domain")]
    OutsideDomain(usize),
    #[error("dislocation {0} has no unique nearest boundary point")]
    NotInRegion(usize),
    #[error("strain field evaluated at dislocation {0}")]
    EvaluationAtSingularity(usize),
    #[error("loop passes through a dislocation or leaves the domain")]
    LoopIntersectsSingularity,
    #[error("core radius {0} is not below half the separation")]
    CoresOverlap(f64),
    #[error("core radii must be positive and strictly decreasing")]
    BadRadii,
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Positions `z_i` with immutable Burgers moduli `b_i ∈ {-1, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub positions: Vec<Vec2>,
    moduli: Vec<i8>,
}

impl Configuration {
    pub fn new(positions: Vec<Vec2>, moduli: Vec<i32>) -> Result<Self, EnergyError> {
        if positions.len() != moduli.len() {
            return Err(EnergyError::LengthMismatch { positions: positions.len(), moduli: moduli.len() });
        }
        if positions.is_empty() {
            return Err(GeometryError::EmptyConfiguration.into());
        }
        if let Some(&b) = moduli.iter().find(|&&b| b != 1 && b != -1) {
            return Err(EnergyError::InvalidModulus(b));
        }
        Ok(Self { positions, moduli: moduli.into_iter().map(|b| b as i8).collect() })
    }

    pub fn single(z: Vec2, b: i32) -> Result<Self, EnergyError> {
        Self::new(vec![z], vec![b])
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn modulus(&self, i: usize) -> f64 {
        self.moduli[i] as f64
    }

    pub fn moduli(&self) -> Vec<i32> {
        self.moduli.iter().map(|&b| b as i32).collect()
    }

    /// Same moduli, new positions.
    pub fn with_positions(&self, positions: Vec<Vec2>) -> Self {
        assert_eq!(positions.len(), self.moduli.len());
        Self { positions, moduli: self.moduli.clone() }
    }

    /// Drops dislocation `i`.
    pub fn without(&self, i: usize) -> Self {
        let mut c = self.clone();
        c.positions.remove(i);
        c.moduli.remove(i);
        c
    }

    pub fn check_inside(&self, domain: &Domain) -> Result<(), EnergyError> {
        match self.positions.iter().position(|&p| !domain.contains(p)) {
            Some(i) => Err(EnergyError::OutsideDomain(i)),
            None => Ok(()),
        }
    }

    fn coincident_pair(&self) -> Option<(usize, usize)> {
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if (self.positions[i] - self.positions[j]).norm() < COINCIDENCE_TOL {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

fn sources<'a>(config: &Configuration, engine: &'a GreenEngine) -> Result<Vec<SourceField<'a>>, EnergyError> {
    config.check_inside(engine.domain())?;
    Ok(config.positions.iter().map(|&z| engine.source(z)).collect::<Result<_, _>>()?)
}

/// Energy and forces from one boundary solve per dislocation. Coincident
/// same-sign pairs give `E = +∞` and no forces.
pub fn energy_and_forces(config: &Configuration, engine: &GreenEngine) -> Result<(f64, Vec<Vec2>), EnergyError> {
    if let Some((i, j)) = config.coincident_pair() {
        return if config.moduli[i] == config.moduli[j] {
            Ok((f64::INFINITY, Vec::new()))
        } else {
            Err(EnergyError::CoincidentDislocations(i, j))
        };
    }
    let src = sources(config, engine)?;
    let n = config.len();
    let mut e = 0.0;
    let mut grad = vec![Vec2::zeros(); n];
    for i in 0..n {
        let zi = config.positions[i];
        for j in 0..n {
            let (k, gk) = src[j].regular_with_grad(zi)?;
            if i == j {
                // h(z) = k(z,z), ∇h = 2∇ₓk by symmetry
                e += 0.5 * k;
                grad[i] += gk;
            } else {
                let r = zi - config.positions[j];
                let r2 = r.norm_squared();
                let bb = config.modulus(i) * config.modulus(j);
                if i < j {
                    e += bb * (k - 0.25 / PI * r2.ln());
                }
                grad[i] += (gk - r / (2.0 * PI * r2)) * bb;
            }
        }
    }
    Ok((e, grad.into_iter().map(|g| -g).collect()))
}

/// `E_n(z)`.
pub fn renormalized_energy(config: &Configuration, engine: &GreenEngine) -> Result<f64, EnergyError> {
    if let Some((i, j)) = config.coincident_pair() {
        return if config.moduli[i] == config.moduli[j] {
            Ok(f64::INFINITY)
        } else {
            Err(EnergyError::CoincidentDislocations(i, j))
        };
    }
    config.check_inside(engine.domain())?;
    let n = config.len();
    let mut e = 0.0;
    for j in 0..n {
        let s = engine.source(config.positions[j])?;
        e += 0.5 * s.regular(config.positions[j])?;
        for i in 0..j {
            let zi = config.positions[i];
            let r = (zi - config.positions[j]).norm();
            e += config.modulus(i) * config.modulus(j) * (s.regular(zi)? - r.ln() / (2.0 * PI));
        }
    }
    Ok(e)
}

/// Peach–Koehler force `f_i = -∇_{z_i} E_n`.
pub fn peach_koehler(config: &Configuration, engine: &GreenEngine, i: usize) -> Result<Vec2, EnergyError> {
    assert!(i < config.len());
    config.check_inside(engine.domain())?;
    let zi = config.positions[i];
    let mut g = engine.grad_robin(zi)? * 0.5;
    for j in 0..config.len() {
        if j == i {
            continue;
        }
        let zj = config.positions[j];
        let r = zi - zj;
        let r2 = r.norm_squared();
        if r2.sqrt() < COINCIDENCE_TOL {
            return Err(EnergyError::CoincidentDislocations(i.min(j), i.max(j)));
        }
        let gk = engine.grad_regular(zi, zj)?;
        g += (gk - r / (2.0 * PI * r2)) * (config.modulus(i) * config.modulus(j));
    }
    Ok(-g)
}

/// Force on dislocation `i` split as `ν(s)/(4π d) + remainder`, with `s` the
/// boundary point nearest to `z_i` and `d` its distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearBoundaryForce {
    pub force: Vec2,
    pub leading: Vec2,
    pub remainder: Vec2,
    pub distance: f64,
    pub normal: Vec2,
}

pub fn near_boundary_decomposition(
    config: &Configuration,
    engine: &GreenEngine,
    i: usize,
) -> Result<NearBoundaryForce, EnergyError> {
    let domain = engine.domain();
    let zi = config.positions[i];
    let proj = domain.nearest_boundary(zi);
    let nearest = config.positions.iter().all(|&z| domain.boundary_distance(z) >= proj.distance);
    if proj.ambiguous || proj.distance >= domain.uniform_disk_radius() || !nearest {
        return Err(EnergyError::NotInRegion(i));
    }
    let force = peach_koehler(config, engine, i)?;
    let normal = proj.boundary_point.outward_normal;
    let leading = normal / (4.0 * PI * proj.distance);
    Ok(NearBoundaryForce { force, leading, remainder: force - leading, distance: proj.distance, normal })
}

/// Strain field of a configuration, with one solved source per dislocation.
pub struct StrainField<'a> {
    config: Configuration,
    sources: Vec<SourceField<'a>>,
}

impl<'a> StrainField<'a> {
    pub fn new(config: &Configuration, engine: &'a GreenEngine) -> Result<Self, EnergyError> {
        Ok(Self { config: config.clone(), sources: sources(config, engine)? })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    /// `h(x)`.
    pub fn eval(&self, x: Vec2) -> Result<Vec2, EnergyError> {
        if let Some(i) = self.config.positions.iter().position(|&z| (x - z).norm() < COINCIDENCE_TOL) {
            return Err(EnergyError::EvaluationAtSingularity(i));
        }
        let mut h = Vec2::zeros();
        for (i, s) in self.sources.iter().enumerate() {
            let (_, g) = s.green_with_grad(x)?;
            h += Vec2::new(g.y, -g.x) * self.config.modulus(i);
        }
        Ok(h)
    }

    /// Trapezoid rule for `∮ h·t ds` on the counterclockwise circle.
    pub fn circulation(&self, center: Vec2, radius: f64, nodes: usize) -> Result<f64, EnergyError> {
        let on_loop = self.config.positions.iter().any(|&z| ((z - center).norm() - radius).abs() < 1e-9 * radius.max(1.0));
        if on_loop || !(radius > 0.0) {
            return Err(EnergyError::LoopIntersectsSingularity);
        }
        let dphi = 2.0 * PI / nodes as f64;
        let mut acc = 0.0;
        for k in 0..nodes {
            let phi = dphi * k as f64;
            let u = Vec2::new(phi.cos(), phi.sin());
            let x = center + u * radius;
            let h = self.eval(x).map_err(|e| match e {
                EnergyError::Green(GreenError::OutsideDomain(..)) => EnergyError::LoopIntersectsSingularity,
                e => e,
            })?;
            acc += h.dot(&Vec2::new(-u.y, u.x)) * radius * dphi;
        }
        Ok(acc)
    }
}

/// `h(x)` without keeping the solved field around.
pub fn strain_eval(config: &Configuration, engine: &GreenEngine, x: Vec2) -> Result<Vec2, EnergyError> {
    StrainField::new(config, engine)?.eval(x)
}

pub fn circulation(
    config: &Configuration,
    engine: &GreenEngine,
    center: Vec2,
    radius: f64,
    nodes: usize,
) -> Result<f64, EnergyError> {
    StrainField::new(config, engine)?.circulation(center, radius, nodes)
}

/// `E_ε = ½ ∫_{Ω_ε} |h|²` with `Ω_ε` the domain minus the ε-disks around
/// every dislocation.
pub fn core_energy(
    config: &Configuration,
    engine: &GreenEngine,
    eps: f64,
    opts: &QuadratureOptions,
) -> Result<f64, EnergyError> {
    let domain = engine.domain();
    let sep = crate::geometry::separation(domain, &config.positions)?;
    if !(eps > 0.0) || eps >= 0.5 * sep {
        return Err(EnergyError::CoresOverlap(eps));
    }
    let field = StrainField::new(config, engine)?;
    let radii = vec![eps; config.len()];
    let c = quadrature::adaptive::<1, EnergyError>(opts, |level| {
        let rule = quadrature::excised_rule(domain, &config.positions, &radii, level, opts)?;
        let mut acc = 0.0;
        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
            acc += w * field.eval(p)?.norm_squared();
        }
        Ok([0.5 * acc])
    })?;
    Ok(c.value[0])
}

/// Least-squares fit `E_ε ≈ slope·|log ε| + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreFit {
    pub slope: f64,
    pub intercept: f64,
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
}

/// Fits core energies over a decreasing list of radii; the intercept
/// estimates `E_n`.
pub fn extract_renormalized(
    config: &Configuration,
    engine: &GreenEngine,
    radii: &[f64],
    opts: &QuadratureOptions,
) -> Result<CoreFit, EnergyError> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(EnergyError::BadRadii);
    }
    let energies: Vec<f64> = radii.iter().map(|&e| core_energy(config, engine, e, opts)).collect::<Result<_, _>>()?;
    let xs: Vec<f64> = radii.iter().map(|r| r.ln().abs()).collect();
    let (slope, intercept) = least_squares(&xs, &energies);
    Ok(CoreFit { slope, intercept, radii: radii.to_vec(), energies })
}

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
