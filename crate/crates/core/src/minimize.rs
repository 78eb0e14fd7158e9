//! Multistart descent on the boundary-datum functionals `F` and `F_ε`.
//!
//! Gradients are central differences with one Richardson step; the line
//! search backtracks from a Barzilai–Borwein trial step and rejects
//! non-finite values, which is how boundary contact and coincidence (both
//! `+∞`) keep iterates inside the admissible set. Starts come from a Halton
//! sequence over the domain's bounding box, keeping points inside.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dirichlet::{DirichletError, DirichletProblem};
use crate::geometry::Vec2;
use crate::quadrature::QuadratureOptions;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinimizeError {
    #[error("line search found no descent at gradient norm {grad_norm:e} after {iterations} iterations")]
    NoDescentDirection { grad_norm: f64, iterations: usize, trace: Vec<f64> },
    #[error("no start produced a finite value")]
    AllStartsDiverged,
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Dirichlet(#[from] DirichletError),
}

/// Which functional to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// `F(a_1..a_n)`.
    Limit,
    /// `F_ε(a_1..a_n)`.
    FiniteEps { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    /// Number of starts; `None` means 16 for one center and 32 otherwise.
    pub starts: Option<usize>,
    /// Offset into the Halton sequence.
    pub seed: u64,
    pub max_iter: usize,
    /// Stop when the gradient norm falls below this.
    pub grad_tol: f64,
    /// Difference step relative to the domain diameter.
    pub fd_step: f64,
    /// Starts closer than this fraction of the diameter to the boundary are skipped.
    pub start_margin: f64,
    pub quadrature: QuadratureOptions,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            starts: None,
            seed: 0,
            max_iter: 200,
            grad_tol: 1e-5,
            fd_step: 1e-5,
            start_margin: 0.02,
            quadrature: QuadratureOptions::fixed(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    /// The line search could not decrease the value further.
    Stalled,
    MaxIterations,
}

/// Result of one descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descent {
    pub start: Vec<Vec2>,
    pub argmin: Vec<Vec2>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: Status,
    /// Accepted values, starting with the start value.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizationReport {
    pub objective: Objective,
    /// Lexicographically sorted centers.
    pub argmin: Vec<Vec2>,
    pub value: f64,
    pub iterations: usize,
    pub status: Status,
    pub grad_norm: f64,
    pub seed: u64,
    pub starts: usize,
    /// `min_i d_i` at the argmin.
    pub margin: f64,
    /// Smallest pairwise distance at the argmin (infinite for one center).
    pub min_separation: f64,
    pub trace: Vec<f64>,
    /// End values of every start, in start order.
    pub endpoint_values: Vec<f64>,
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// `count` start configurations of `n` centers from the Halton sequence,
/// skipping points outside or too close to the boundary.
pub fn halton_starts(problem: &DirichletProblem, n: usize, count: usize, seed: u64, margin: f64) -> Vec<Vec<Vec2>> {
    assert!(2 * n <= PRIMES.len(), "at most {} centers", PRIMES.len() / 2);
    let domain = problem.domain();
    let nodes = domain.boundary_nodes(256);
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in &nodes {
        lo = lo.inf(&p.position);
        hi = hi.sup(&p.position);
    }
    let keep = margin * domain.diameter();
    let mut out = Vec::with_capacity(count);
    let mut i = seed + 1;
    while out.len() < count {
        let pts: Vec<Vec2> = (0..n)
            .map(|k| {
                let u = radical_inverse(i, PRIMES[2 * k]);
                let v = radical_inverse(i, PRIMES[2 * k + 1]);
                Vec2::new(lo.x + u * (hi.x - lo.x), lo.y + v * (hi.y - lo.y))
            })
            .collect();
        i += 1;
        let inside = pts.iter().all(|&p| domain.contains(p) && domain.boundary_distance(p) > keep);
        let apart = (0..n).all(|a| ((a + 1)..n).all(|b| (pts[a] - pts[b]).norm() > keep));
        if inside && apart {
            out.push(pts);
        }
    }
    out
}

fn objective_value(problem: &DirichletProblem, obj: Objective, x: &[Vec2], q: &QuadratureOptions) -> Result<f64, DirichletError> {
    match obj {
        Objective::Limit => problem.limit_functional_n(x, q),
        Objective::FiniteEps { eps } => problem.renormalize_or_inf(x, eps, q),
    }
}

fn perturbed(x: &[Vec2], k: usize, h: f64) -> Vec<Vec2> {
    let mut y = x.to_vec();
    y[k / 2][k % 2] += h;
    y
}

/// Central difference with one Richardson step; the step shrinks while the
/// stencil touches a `+∞` region.
fn gradient(
    f: &impl Fn(&[Vec2]) -> Result<f64, DirichletError>,
    x: &[Vec2],
    step: f64,
) -> Result<Vec<f64>, DirichletError> {
    let mut g = vec![0.0; 2 * x.len()];
    for (k, gk) in g.iter_mut().enumerate() {
        let mut h = step;
        let mut done = false;
        for _ in 0..6 {
            let d = |h: f64| -> Result<f64, DirichletError> {
                Ok((f(&perturbed(x, k, h))? - f(&perturbed(x, k, -h))?) / (2.0 * h))
            };
            let (d1, d2) = (d(h)?, d(2.0 * h)?);
            if d1.is_finite() && d2.is_finite() {
                *gk = (4.0 * d1 - d2) / 3.0;
                done = true;
                break;
            }
            h *= 0.1;
        }
        if !done {
            *gk = f64::NAN;
        }
    }
    Ok(g)
}

/// One descent from `start`.
pub fn descend(
    problem: &DirichletProblem,
    obj: Objective,
    start: &[Vec2],
    opts: &MinimizeOptions,
) -> Result<Descent, DirichletError> {
    let q = &opts.quadrature;
    let f = |x: &[Vec2]| objective_value(problem, obj, x, q);
    let step = opts.fd_step * problem.domain().diameter();
    let mut x = start.to_vec();
    let mut fx = f(&x)?;
    let mut trace = vec![fx];
    let mut status = Status::MaxIterations;
    let mut grad_norm = f64::NAN;
    let mut iterations = 0;
    if !fx.is_finite() {
        return Ok(Descent { start: start.to_vec(), argmin: x, value: fx, grad_norm, iterations, status: Status::Stalled, trace });
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut g = gradient(&f, &x, step)?;
    let mut prev: Option<(Vec<Vec2>, Vec<f64>)> = None;
    let mut t_trial = 0.1 * problem.domain().diameter();
    while iterations < opts.max_iter {
        grad_norm = norm(&g);
        if !grad_norm.is_finite() {
            status = Status::Stalled;
            break;
        }
        if grad_norm < opts.grad_tol {
            status = Status::Converged;
            break;
        }
        // Barzilai–Borwein trial step from the last accepted move
        let mut t = match &prev {
            Some((xp, gp)) => {
                let s: Vec<f64> = x.iter().zip(xp).flat_map(|(a, b)| [a.x - b.x, a.y - b.y]).collect();
                let y: Vec<f64> = g.iter().zip(gp).map(|(a, b)| a - b).collect();
                let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                let ss: f64 = s.iter().map(|a| a * a).sum();
                if sy > 0.0 {
                    ss / sy
                } else {
                    t_trial
                }
            }
            None => t_trial / grad_norm,
        };
        // never move a center by more than a tenth of the diameter at once
        t = t.min(0.1 * problem.domain().diameter() / grad_norm);
        let mut accepted = None;
        for _ in 0..60 {
            let y: Vec<Vec2> =
                x.iter().enumerate().map(|(i, p)| Vec2::new(p.x - t * g[2 * i], p.y - t * g[2 * i + 1])).collect();
            let fy = f(&y)?;
            if fy.is_finite() && fy <= fx - 1e-4 * t * grad_norm * grad_norm {
                accepted = Some((y, fy));
                break;
            }
            t *= 0.5;
        }
        let Some((y, fy)) = accepted else {
            status = Status::Stalled;
            break;
        };
        t_trial = t * grad_norm;
        let gy = gradient(&f, &y, step)?;
        prev = Some((std::mem::replace(&mut x, y), std::mem::replace(&mut g, gy)));
        fx = fy;
        trace.push(fx);
        iterations += 1;
    }
    if status == Status::MaxIterations {
        grad_norm = norm(&g);
        if grad_norm < opts.grad_tol {
            status = Status::Converged;
        }
    }
    Ok(Descent { start: start.to_vec(), argmin: x, value: fx, grad_norm, iterations, status, trace })
}

fn canonical(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts
}

fn lex_cmp(a: &[Vec2], b: &[Vec2]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(p, q)| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Multistart minimization of `obj` over `n` centers.
pub fn minimize(
    problem: &DirichletProblem,
    n: usize,
    obj: Objective,
    opts: &MinimizeOptions,
) -> Result<MinimizationReport, MinimizeError> {
    if n == 0 || 2 * n > PRIMES.len() {
        return Err(MinimizeError::InvalidOptions(format!("{n} centers")));
    }
    if !(opts.grad_tol > 0.0 && opts.fd_step > 0.0) {
        return Err(MinimizeError::InvalidOptions("grad_tol and fd_step must be positive".into()));
    }
    if let Objective::FiniteEps { eps } = obj {
        if !(eps > 0.0) {
            return Err(MinimizeError::InvalidOptions("eps must be positive".into()));
        }
    }
    let count = opts.starts.unwrap_or(if n == 1 { 16 } else { 32 });
    let margin = match obj {
        Objective::FiniteEps { eps } => opts.start_margin.max(2.5 * eps / problem.domain().diameter()),
        Objective::Limit => opts.start_margin,
    };
    let starts = halton_starts(problem, n, count, opts.seed, margin);
    let runs: Vec<Descent> = starts
        .par_iter()
        .map(|s| descend(problem, obj, s, opts))
        .collect::<Result<_, _>>()?;
    let mut order: Vec<usize> = (0..runs.len()).filter(|&k| runs[k].value.is_finite()).collect();
    if order.is_empty() {
        return Err(MinimizeError::AllStartsDiverged);
    }
    let canon: Vec<Vec<Vec2>> = runs.iter().map(|r| canonical(r.argmin.clone())).collect();
    order.sort_by(|&a, &b| runs[a].value.total_cmp(&runs[b].value).then_with(|| lex_cmp(&canon[a], &canon[b])));
    let best = &runs[order[0]];
    if best.status == Status::Stalled && best.iterations == 0 {
        return Err(MinimizeError::NoDescentDirection {
            grad_norm: best.grad_norm,
            iterations: best.iterations,
            trace: best.trace.clone(),
        });
    }
    let argmin = canon[order[0]].clone();
    let margin = problem.radii(&argmin).into_iter().fold(f64::INFINITY, f64::min);
    let mut min_separation = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            min_separation = min_separation.min((argmin[i] - argmin[j]).norm());
        }
    }
    Ok(MinimizationReport {
        objective: obj,
        argmin,
        value: best.value,
        iterations: best.iterations,
        status: best.status,
        grad_norm: best.grad_norm,
        seed: opts.seed,
        starts: runs.len(),
        margin,
        min_separation,
        trace: best.trace.clone(),
        endpoint_values: runs.iter().map(|r| r.value).collect(),
    })
}

/// Minimizer of `F`.
pub fn minimize_limit(problem: &DirichletProblem, n: usize, opts: &MinimizeOptions) -> Result<MinimizationReport, MinimizeError> {
    minimize(problem, n, Objective::Limit, opts)
}

/// Minimizer of `F_ε`.
pub fn minimize_finite_eps(
    problem: &DirichletProblem,
    n: usize,
    eps: f64,
    opts: &MinimizeOptions,
) -> Result<MinimizationReport, MinimizeError> {
    minimize(problem, n, Objective::FiniteEps { eps }, opts)
}

/// One row of a confinement sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub argmin: Vec<Vec2>,
    pub value: f64,
    pub margin: f64,
    pub min_separation: f64,
    /// `|F_ε(a^ε) - F(a)|` against the limit minimum.
    pub value_gap: f64,
    /// Largest center displacement from the limit argmin, after matching.
    pub argmin_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementSweep {
    pub n: usize,
    pub limit: MinimizationReport,
    pub rows: Vec<SweepRow>,
    /// `margin(ε) ≥ 0.8 · margin(smallest ε)` for every row.
    pub uniform_margin: bool,
    /// Smallest margin over the sweep.
    pub min_margin: f64,
    /// Smallest pairwise distance over the sweep.
    pub min_separation: f64,
    /// Largest ε whose minimizer stayed interior (margin > 0).
    pub largest_interior_eps: Option<f64>,
}

/// Smallest over permutations of the largest displacement between two
/// center lists.
fn matched_gap(a: &[Vec2], b: &[Vec2]) -> f64 {
    fn rec(a: &[Vec2], b: &mut Vec<Vec2>, k: usize, best: &mut f64, cur: f64) {
        if k == a.len() {
            *best = best.min(cur);
            return;
        }
        for j in k..b.len() {
            b.swap(k, j);
            rec(a, b, k + 1, best, cur.max((a[k] - b[k]).norm()));
            b.swap(k, j);
        }
    }
    let mut best = f64::INFINITY;
    rec(a, &mut b.to_vec(), 0, &mut best, 0.0);
    best
}

/// Minimizers of `F_ε` over `eps_list`, compared with the minimizer of `F`.
pub fn confinement_sweep(
    problem: &DirichletProblem,
    n: usize,
    eps_list: &[f64],
    opts: &MinimizeOptions,
) -> Result<ConfinementSweep, MinimizeError> {
    if eps_list.is_empty() {
        return Err(MinimizeError::InvalidOptions("empty eps list".into()));
    }
    let limit = minimize_limit(problem, n, opts)?;
    let rows = eps_list
        .iter()
        .map(|&eps| {
            let r = minimize_finite_eps(problem, n, eps, opts)?;
            Ok(SweepRow {
                eps,
                value_gap: (r.value - limit.value).abs(),
                argmin_gap: matched_gap(&r.argmin, &limit.argmin),
                argmin: r.argmin,
                value: r.value,
                margin: r.margin,
                min_separation: r.min_separation,
            })
        })
        .collect::<Result<Vec<_>, MinimizeError>>()?;
    let smallest = rows.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)).unwrap();
    let uniform_margin = rows.iter().all(|r| r.margin >= 0.8 * smallest.margin);
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let min_separation = rows.iter().map(|r| r.min_separation).fold(f64::INFINITY, f64::min);
    let largest_interior_eps = rows.iter().filter(|r| r.margin > 0.0).map(|r| r.eps).fold(None, |m: Option<f64>, e| {
        Some(m.map_or(e, |m| m.max(e)))
    });
    Ok(ConfinementSweep { n, limit, rows, uniform_margin, min_margin, min_separation, largest_interior_eps })
}

impl ConfinementSweep {
    /// Tidy CSV: one line per ε.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, header: &str) -> std::io::Result<()> {
        writeln!(w, "# {header}")?;
        let coords: Vec<String> = (1..=self.n).flat_map(|i| [format!("x{i}"), format!("y{i}")]).collect();
        writeln!(w, "eps,value,margin,min_separation,value_gap,argmin_gap,{}", coords.join(","))?;
        for r in &self.rows {
            let c: Vec<String> = r.argmin.iter().flat_map(|p| [p.x.to_string(), p.y.to_string()]).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.eps,
                r.value,
                r.margin,
                r.min_separation,
                r.value_gap,
                r.argmin_gap,
                c.join(",")
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn halton_is_deterministic_and_inside() {
        let p = DirichletProblem::uniform(Domain::unit_disk()).unwrap();
        let a = halton_starts(&p, 2, 10, 3, 0.02);
        assert_eq!(a, halton_starts(&p, 2, 10, 3, 0.02));
        assert!(a.iter().flatten().all(|x| x.norm() < 0.98));
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(5, 3), 2.0 / 3.0 + 1.0 / 9.0);
    }

    #[test]
    fn single_center_goes_to_the_origin() {
        let p = DirichletProblem::uniform(Domain::unit_disk()).unwrap();
        let opts = MinimizeOptions { starts: Some(4), ..Default::default() };
        let r = minimize_limit(&p, 1, &opts).unwrap();
        assert!(r.argmin[0].norm() < 1e-3, "{:?}", r.argmin);
        assert!(r.value.abs() < 1e-3);
        assert!(r.endpoint_values.iter().all(|&v| r.value <= v));
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn matched_gap_ignores_order() {
        let a = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        let b = [Vec2::new(1.0, 0.1), Vec2::new(0.0, 0.0)];
        assert!((matched_gap(&a, &b) - 0.1).abs() < 1e-15);
    }
}
