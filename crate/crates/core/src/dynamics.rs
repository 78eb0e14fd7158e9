//! Gradient-flow dynamics `ż_i = f_i(z)` with boundary and annihilation
//! events, integrated by the Dormand–Prince 5(4) pair.
//!
//! Collisions are blow-ups of the flow, so integration stops when a
//! dislocation comes within `collision_radius` of the boundary or of an
//! opposite-sign partner. The crossing time is bisected on the dense output.
//! Collision times shift by `O(r_c²)`, which [`extrapolated_collision`]
//! removes with one Richardson step.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::energy::{energy_and_forces, renormalized_energy, Configuration, EnergyError};
use crate::geometry::{in_region_c, in_region_d, separation, GeometryError, Vec2};
use crate::green::GreenEngine;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("initial separation {separation} is not above twice the collision radius {radius}")]
    TooClose { separation: f64, radius: f64 },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("configuration is not in the required region: {0}")]
    NotInRegion(String),
    #[error("bound denominator {0} is not positive")]
    BoundDegenerate(f64),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    /// Defaults to `1e-4 · diam Ω` when absent.
    pub collision_radius: Option<f64>,
    pub min_step: f64,
    pub max_steps: usize,
    /// Remove absorbed dislocations and annihilated pairs and keep going.
    pub continue_after_collision: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            t_max: 1.0,
            collision_radius: None,
            min_step: 1e-14,
            max_steps: 1_000_000,
            continue_after_collision: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    BoundaryCollision { index: usize, boundary_point: Vec2 },
    PairCollision { i: usize, j: usize, location: Vec2 },
    Horizon,
    StepFailure { reason: String },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::BoundaryCollision { .. } => "boundary_collision",
            EventKind::PairCollision { .. } => "pair_collision",
            EventKind::Horizon => "horizon",
            EventKind::StepFailure { .. } => "step_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// State at one accepted step. Indices refer to the initial configuration;
/// removed dislocations are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub positions: Vec<Option<Vec2>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejections: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub moduli: Vec<i32>,
    pub samples: Vec<Sample>,
    /// All events in order; the last one ended the run.
    pub events: Vec<Event>,
    pub stats: IntegratorStats,
    pub collision_radius: f64,
}

// Dormand–Prince 5(4) tableau; the flow is autonomous so the nodes c_i are unused
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense output
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Quartic interpolant over one accepted step.
struct Dense {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Dense {
    fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        (0..self.r[0].len())
            .map(|i| {
                self.r[0][i]
                    + th * (self.r[1][i] + th1 * (self.r[2][i] + th * (self.r[3][i] + th1 * self.r[4][i])))
            })
            .collect()
    }
}

fn to_points(y: &[f64]) -> Vec<Vec2> {
    y.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect()
}

struct Flow<'a> {
    engine: &'a GreenEngine,
    config: Configuration,
    evals: usize,
}

impl Flow<'_> {
    fn rhs(&mut self, y: &[f64]) -> Result<Vec<f64>, EnergyError> {
        self.evals += 1;
        let c = self.config.with_positions(to_points(y));
        let (e, f) = energy_and_forces(&c, self.engine)?;
        if !e.is_finite() || f.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(EnergyError::CoincidentDislocations(0, 0));
        }
        Ok(f.iter().flat_map(|v| [v.x, v.y]).collect())
    }
}

/// Monitored distances: positive while no event has happened.
fn event_values(engine: &GreenEngine, config: &Configuration, y: &[f64], rc: f64) -> Vec<(EventKind, f64)> {
    let d = engine.domain();
    let z = to_points(y);
    let mut out = Vec::new();
    for (i, &p) in z.iter().enumerate() {
        let dist = d.boundary_distance(p);
        let signed = if d.contains(p) { dist } else { -dist };
        out.push((EventKind::BoundaryCollision { index: i, boundary_point: Vec2::zeros() }, signed - rc));
    }
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            let sep = (z[i] - z[j]).norm() - rc;
            if config.modulus(i) != config.modulus(j) {
                out.push((EventKind::PairCollision { i, j, location: Vec2::zeros() }, sep));
            } else {
                out.push((EventKind::StepFailure { reason: format!("same-sign dislocations {i} and {j} in contact") }, sep));
            }
        }
    }
    out
}

fn weighted_rms(err: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / err.len() as f64).sqrt()
}

/// Integrates from `initial` until the first event (or, with continuation,
/// until the horizon or until no dislocations remain).
pub fn simulate(
    initial: &Configuration,
    engine: &GreenEngine,
    opts: &SimulationOptions,
) -> Result<Trajectory, DynamicsError> {
    let domain = engine.domain();
    let rc = opts.collision_radius.unwrap_or(1e-4 * domain.diameter());
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0 && opts.t_max > 0.0 && rc > 0.0 && opts.min_step > 0.0) {
        return Err(DynamicsError::InvalidOptions("tolerances, horizon and collision radius must be positive".into()));
    }
    initial.check_inside(domain)?;
    let sep = separation(domain, &initial.positions)?;
    if sep <= 2.0 * rc {
        return Err(DynamicsError::TooClose { separation: sep, radius: rc });
    }
    let n0 = initial.len();
    let mut alive: Vec<usize> = (0..n0).collect();
    let mut flow = Flow { engine, config: initial.clone(), evals: 0 };
    let mut traj = Trajectory {
        moduli: initial.moduli(),
        samples: Vec::new(),
        events: Vec::new(),
        stats: IntegratorStats::default(),
        collision_radius: rc,
    };
    let record = |traj: &mut Trajectory, alive: &[usize], t: f64, y: &[f64]| {
        let mut positions = vec![None; n0];
        for (k, &i) in alive.iter().enumerate() {
            positions[i] = Some(Vec2::new(y[2 * k], y[2 * k + 1]));
        }
        traj.samples.push(Sample { t, positions });
    };

    let mut t = 0.0;
    let mut y: Vec<f64> = initial.positions.iter().flat_map(|p| [p.x, p.y]).collect();
    record(&mut traj, &alive, t, &y);
    let mut k1 = flow.rhs(&y)?;
    let mut h = initial_step(&y, &k1, opts).min(opts.t_max);

    'outer: loop {
        if traj.stats.steps + traj.stats.rejections >= opts.max_steps {
            let reason = format!("step budget of {} exhausted", opts.max_steps);
            traj.events.push(Event { time: t, kind: EventKind::StepFailure { reason } });
            break;
        }
        if h < opts.min_step {
            let reason = format!("step size {h:e} below minimum");
            traj.events.push(Event { time: t, kind: EventKind::StepFailure { reason } });
            break;
        }
        let last = t + h >= opts.t_max;
        if last {
            h = opts.t_max - t;
        }
        // stages
        let m = y.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        let mut ynew = y.clone();
        let mut failed = false;
        for s in 1..7 {
            let ys: Vec<f64> = (0..m).map(|i| y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>()).collect();
            match flow.rhs(&ys) {
                Ok(f) => k.push(f),
                Err(_) => {
                    failed = true;
                    break;
                }
            }
            if s == 6 {
                ynew = ys;
            }
        }
        if failed {
            traj.stats.rejections += 1;
            h *= 0.25;
            continue;
        }
        let err: Vec<f64> = (0..m).map(|i| h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>()).collect();
        let en = weighted_rms(&err, &y, &ynew, opts.rel_tol, opts.abs_tol);
        let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        if !(en <= 1.0) {
            traj.stats.rejections += 1;
            h *= factor.min(1.0);
            continue;
        }
        traj.stats.steps += 1;
        let dense = Dense {
            t0: t,
            h,
            r: {
                let r1: Vec<f64> = (0..m).map(|i| ynew[i] - y[i]).collect();
                let r2: Vec<f64> = (0..m).map(|i| h * k[0][i] - r1[i]).collect();
                let r3: Vec<f64> = (0..m).map(|i| r1[i] - h * k[6][i] - r2[i]).collect();
                let r4: Vec<f64> = (0..m).map(|i| h * (0..7).map(|s| D[s] * k[s][i]).sum::<f64>()).collect();
                [y.clone(), r1, r2, r3, r4]
            },
        };
        let t_new = if last { opts.t_max } else { t + h };

        // events: earliest sign change over the step
        let after = event_values(engine, &flow.config, &ynew, rc);
        let mut first: Option<(f64, EventKind)> = None;
        for (idx, (kind, g1)) in after.iter().enumerate() {
            if *g1 > 0.0 {
                continue;
            }
            let g = |tt: f64| event_values(engine, &flow.config, &dense.eval(tt), rc)[idx].1;
            let (mut lo, mut hi) = (t, t_new);
            while hi - lo > 1e-10 * hi.abs().max(1e-300) && hi - lo > f64::EPSILON * hi.abs() {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if first.as_ref().is_none_or(|(tf, _)| hi < *tf) {
                first = Some((hi, kind.clone()));
            }
        }
        if let Some((te, kind)) = first {
            let ye = dense.eval(te);
            let z = to_points(&ye);
            let kind = match kind {
                EventKind::BoundaryCollision { index, .. } => EventKind::BoundaryCollision {
                    index: alive[index],
                    boundary_point: engine.domain().nearest_boundary(z[index]).boundary_point.position,
                },
                EventKind::PairCollision { i, j, .. } => {
                    EventKind::PairCollision { i: alive[i], j: alive[j], location: (z[i] + z[j]) * 0.5 }
                }
                other => other,
            };
            record(&mut traj, &alive, te, &ye);
            let remove: Vec<usize> = match &kind {
                EventKind::BoundaryCollision { index, .. } => vec![*index],
                EventKind::PairCollision { i, j, .. } => vec![*i, *j],
                _ => Vec::new(),
            };
            let stop = remove.is_empty() || !opts.continue_after_collision || remove.len() == alive.len();
            traj.events.push(Event { time: te, kind });
            if stop {
                break 'outer;
            }
            // continue with the survivors
            let keep: Vec<usize> = (0..alive.len()).filter(|k| !remove.contains(&alive[*k])).collect();
            let pos: Vec<Vec2> = keep.iter().map(|&k| z[k]).collect();
            let moduli: Vec<i32> = keep.iter().map(|&k| flow.config.moduli()[k]).collect();
            alive = keep.iter().map(|&k| alive[k]).collect();
            flow.config = Configuration::new(pos.clone(), moduli)?;
            t = te;
            y = pos.iter().flat_map(|p| [p.x, p.y]).collect();
            k1 = flow.rhs(&y)?;
            h = initial_step(&y, &k1, opts).min(opts.t_max - t);
            continue;
        }

        t = t_new;
        y = ynew;
        k1 = k.swap_remove(6);
        record(&mut traj, &alive, t, &y);
        if last {
            traj.events.push(Event { time: t, kind: EventKind::Horizon });
            break;
        }
        h *= factor;
    }
    traj.stats.rhs_evaluations = flow.evals;
    Ok(traj)
}

fn initial_step(y: &[f64], f: &[f64], opts: &SimulationOptions) -> f64 {
    let sc = |v: f64| opts.abs_tol + opts.rel_tol * v.abs();
    let d0 = (y.iter().map(|v| (v / sc(*v)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let d1 = (f.iter().zip(y).map(|(fv, v)| (fv / sc(*v)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.max(opts.min_step * 10.0)
}

impl Trajectory {
    pub fn terminal_event(&self) -> &Event {
        self.events.last().expect("trajectory always ends with an event")
    }

    /// Configuration of the live dislocations at sample `k`.
    pub fn config_at(&self, k: usize) -> Configuration {
        let s = &self.samples[k];
        let (pos, mods): (Vec<Vec2>, Vec<i32>) =
            s.positions.iter().zip(&self.moduli).filter_map(|(p, &b)| p.map(|p| (p, b))).unzip();
        Configuration::new(pos, mods).expect("samples hold valid configurations")
    }

    /// `E_n` at every sample.
    pub fn energies(&self, engine: &GreenEngine) -> Result<Vec<f64>, EnergyError> {
        (0..self.samples.len()).map(|k| renormalized_energy(&self.config_at(k), engine)).collect()
    }

    /// Largest energy increase between consecutive samples with the same
    /// dislocations (zero when the energy never increases).
    pub fn max_energy_increase(&self, engine: &GreenEngine) -> Result<f64, EnergyError> {
        let e = self.energies(engine)?;
        let mut worst = 0.0f64;
        for k in 1..e.len() {
            let same = self.samples[k].positions.iter().zip(&self.samples[k - 1].positions).all(|(a, b)| a.is_some() == b.is_some());
            if same {
                worst = worst.max(e[k] - e[k - 1]);
            }
        }
        Ok(worst)
    }

    /// `t,x1,y1,...` rows after one `# header` line, ending with a commented
    /// event row. Removed dislocations leave empty fields.
    pub fn write_csv(&self, mut w: impl Write, header: &str) -> io::Result<()> {
        writeln!(w, "# {header}")?;
        let n = self.moduli.len();
        let mut cols = vec!["t".to_string()];
        for i in 1..=n {
            cols.push(format!("x{i}"));
            cols.push(format!("y{i}"));
        }
        writeln!(w, "{}", cols.join(","))?;
        for s in &self.samples {
            let mut row = vec![format!("{}", s.t)];
            for p in &s.positions {
                match p {
                    Some(p) => {
                        row.push(format!("{}", p.x));
                        row.push(format!("{}", p.y));
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        for e in &self.events {
            writeln!(w, "# event,{},t={:e}{}", e.kind.name(), e.time, event_detail(&e.kind))?;
        }
        Ok(())
    }

    /// Header record, one record per sample, event metadata on the final one.
    pub fn write_jsonl(&self, mut w: impl Write, version: &str, scenario_hash: &str) -> io::Result<()> {
        let header = json!({
            "record": "header",
            "version": version,
            "scenario": scenario_hash,
            "moduli": self.moduli,
            "collision_radius": self.collision_radius,
            "stats": self.stats,
        });
        writeln!(w, "{header}")?;
        let last = self.samples.len() - 1;
        for (k, s) in self.samples.iter().enumerate() {
            let pos: Vec<Option<[f64; 2]>> = s.positions.iter().map(|p| p.map(|p| [p.x, p.y])).collect();
            let mut rec = json!({ "record": "sample", "t": s.t, "positions": pos });
            if k == last {
                rec["events"] = serde_json::to_value(&self.events).expect("events serialize");
            }
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }
}

fn event_detail(kind: &EventKind) -> String {
    match kind {
        EventKind::BoundaryCollision { index, boundary_point } => {
            format!(",index={},x={},y={}", index + 1, boundary_point.x, boundary_point.y)
        }
        EventKind::PairCollision { i, j, location } => {
            format!(",i={},j={},x={},y={}", i + 1, j + 1, location.x, location.y)
        }
        EventKind::Horizon => String::new(),
        EventKind::StepFailure { reason } => format!(",reason={}", reason.replace(',', ";")),
    }
}

/// Collision time at radius `r_c`, at `r_c/2`, and their Richardson
/// combination `(4T(r_c/2) - T(r_c))/3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedCollision {
    pub time: f64,
    pub time_coarse: f64,
    pub time_fine: f64,
    pub event: Event,
    pub event_coarse: Event,
}

pub fn extrapolated_collision(
    initial: &Configuration,
    engine: &GreenEngine,
    opts: &SimulationOptions,
) -> Result<(ExtrapolatedCollision, Trajectory), DynamicsError> {
    let rc = opts.collision_radius.unwrap_or(1e-4 * engine.domain().diameter());
    let coarse = simulate(initial, engine, &SimulationOptions { collision_radius: Some(rc), ..*opts })?;
    let fine = simulate(initial, engine, &SimulationOptions { collision_radius: Some(0.5 * rc), ..*opts })?;
    let (ec, ef) = (coarse.terminal_event().clone(), fine.terminal_event().clone());
    let time = (4.0 * ef.time - ec.time) / 3.0;
    Ok((ExtrapolatedCollision { time, time_coarse: ec.time, time_fine: ef.time, event: ef, event_coarse: ec }, fine))
}

/// Outcome of checking the boundary-collision time estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBoundReport {
    pub delta0: f64,
    pub gamma0: f64,
    pub n: usize,
    pub time: f64,
    pub time_raw: f64,
    /// `2πδ₀²`
    pub bound: f64,
    /// `2πδ₀²(1 + Kδ₀)`
    pub bound_with_slack: f64,
    pub ratio: f64,
    pub first_event: Event,
    pub first_event_ok: bool,
    pub passed: bool,
}

/// Runs the flow from a configuration in the near-boundary set with
/// parameters `(δ₀, γ₀)` and checks that dislocation 1 reaches the boundary
/// first, within `2πδ₀²(1 + Kδ₀)`.
pub fn verify_boundary_bound(
    engine: &GreenEngine,
    initial: &Configuration,
    delta0: f64,
    gamma0: f64,
    slack: f64,
    opts: &SimulationOptions,
) -> Result<BoundaryBoundReport, DynamicsError> {
    if !in_region_d(engine.domain(), &initial.positions, delta0, gamma0)? {
        return Err(DynamicsError::NotInRegion(format!("D with delta={delta0}, gamma={gamma0}")));
    }
    let (x, _) = extrapolated_collision(initial, engine, opts)?;
    let first_event_ok = matches!(x.event.kind, EventKind::BoundaryCollision { index: 0, .. })
        && matches!(x.event_coarse.kind, EventKind::BoundaryCollision { index: 0, .. });
    let bound = 2.0 * PI * delta0 * delta0;
    let bound_with_slack = bound * (1.0 + slack * delta0);
    Ok(BoundaryBoundReport {
        delta0,
        gamma0,
        n: initial.len(),
        time: x.time,
        time_raw: x.time_fine,
        bound,
        bound_with_slack,
        ratio: x.time / bound,
        first_event: x.event,
        first_event_ok,
        passed: first_event_ok && x.time <= bound_with_slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBoundReport {
    pub zeta0: f64,
    pub eta0: f64,
    pub n: usize,
    pub time: f64,
    pub time_raw: f64,
    /// `πζ₀²η₀² / (2(η₀² - ζ₀² - 2(n-2)ζ₀η₀))`
    pub bound: f64,
    /// Free-space dipole time `πζ₀²/2` for the actual initial separation.
    pub dipole_time: f64,
    pub first_event: Event,
    pub first_event_ok: bool,
    pub passed: bool,
}

/// `πζ₀²η₀² / (2(η₀² - ζ₀² - 2(n-2)ζ₀η₀))`, or `BoundDegenerate`.
pub fn pair_bound(zeta0: f64, eta0: f64, n: usize) -> Result<f64, DynamicsError> {
    let den = eta0 * eta0 - zeta0 * zeta0 - 2.0 * (n as f64 - 2.0) * zeta0 * eta0;
    if !(den > 0.0) {
        return Err(DynamicsError::BoundDegenerate(den));
    }
    Ok(PI * zeta0 * zeta0 * eta0 * eta0 / (2.0 * den))
}

/// Runs the flow from a configuration in the close-pair set with parameters
/// `(ζ₀, η₀)`, `b₁ = +1`, `b₂ = -1`, and checks that the pair annihilates
/// first, within the pair bound.
pub fn verify_pair_bound(
    engine: &GreenEngine,
    initial: &Configuration,
    zeta0: f64,
    eta0: f64,
    opts: &SimulationOptions,
) -> Result<PairBoundReport, DynamicsError> {
    let bound = pair_bound(zeta0, eta0, initial.len())?;
    if !in_region_c(engine.domain(), &initial.positions, zeta0, eta0)? {
        return Err(DynamicsError::NotInRegion(format!("C with zeta={zeta0}, eta={eta0}")));
    }
    if initial.moduli()[..2] != [1, -1] {
        return Err(DynamicsError::NotInRegion("the pair must carry moduli +1, -1".into()));
    }
    let (x, _) = extrapolated_collision(initial, engine, opts)?;
    let is_pair = |e: &Event| matches!(e.kind, EventKind::PairCollision { i: 0, j: 1, .. });
    let first_event_ok = is_pair(&x.event) && is_pair(&x.event_coarse);
    let s0 = (initial.positions[0] - initial.positions[1]).norm();
    Ok(PairBoundReport {
        zeta0,
        eta0,
        n: initial.len(),
        time: x.time,
        time_raw: x.time_fine,
        bound,
        dipole_time: PI * s0 * s0 / 2.0,
        first_event: x.event,
        first_event_ok,
        passed: first_event_ok && x.time <= bound,
    })
}
