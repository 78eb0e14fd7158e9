//! Scenario files and the runners behind the `dislocore` binary.
//!
//! A scenario is one JSON object: a schema version, a domain, a mode with its
//! parameters, and optional seed/thread settings. Every artifact starts with
//! a header carrying the tool version and the SHA-256 of the canonical
//! scenario serialization, so outputs can be traced to their inputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dislocore::dirichlet::{BoundaryDatum, DatumSpec, DirichletOptions, DirichletProblem};
use dislocore::dynamics::{simulate, verify_boundary_bound, verify_pair_bound, SimulationOptions};
use dislocore::energy::Configuration;
use dislocore::geometry::{Domain, SmoothCurve, Vec2};
use dislocore::green::{Backend, GreenEngine};
use dislocore::minimize::{confinement_sweep, minimize, MinimizeOptions, Objective};
use dislocore::quadrature::QuadratureOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        semi_x: f64,
        semi_y: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Closed counterclockwise polygon of samples of a smooth curve.
    Curve { points: Vec<[f64; 2]> },
}

fn default_samples() -> usize {
    256
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        let v = |p: &[f64; 2]| Vec2::new(p[0], p[1]);
        Ok(match self {
            DomainSpec::Disk { center, radius } => Domain::disk(v(center), *radius)?,
            DomainSpec::Ellipse { center, semi_x, semi_y, samples } => Domain::ellipse(v(center), *semi_x, *semi_y, *samples)?,
            DomainSpec::Curve { points } => Domain::from_curve(SmoothCurve::from_samples(points.iter().map(v).collect())?)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dislocations {
    pub positions: Vec<[f64; 2]>,
    pub moduli: Vec<i32>,
}

impl Dislocations {
    fn build(&self) -> Result<Configuration> {
        let pos = self.positions.iter().map(|p| Vec2::new(p[0], p[1])).collect();
        Configuration::new(pos, self.moduli.clone()).context("field `dislocations`")
    }
}

/// Per-mode parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Mode {
    Simulate {
        dislocations: Dislocations,
        #[serde(default)]
        options: SimulationOptions,
    },
    VerifyBoundary {
        dislocations: Dislocations,
        delta0: f64,
        gamma0: f64,
        /// Bound is `2πδ₀²(1 + slack·δ₀)`.
        #[serde(default = "one")]
        slack: f64,
        #[serde(default)]
        options: SimulationOptions,
    },
    VerifyPair {
        dislocations: Dislocations,
        zeta0: f64,
        eta0: f64,
        #[serde(default)]
        options: SimulationOptions,
    },
    GreenCheck {
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default = "default_panels")]
        panels: usize,
        /// Samples are drawn uniformly from the concentric disk of this relative radius.
        #[serde(default = "default_max_radius")]
        max_radius: f64,
        #[serde(default = "default_green_tol")]
        tolerance: f64,
    },
    Minimize {
        n: usize,
        #[serde(default = "limit")]
        objective: Objective,
        #[serde(default = "uniform")]
        datum: DatumSpec,
        #[serde(default)]
        dirichlet: DirichletOptions,
        #[serde(default)]
        options: MinimizeOptions,
    },
    Converge {
        centers: Vec<[f64; 2]>,
        eps: Vec<f64>,
        #[serde(default = "uniform")]
        datum: DatumSpec,
        #[serde(default)]
        dirichlet: DirichletOptions,
        #[serde(default = "tight")]
        quadrature: QuadratureOptions,
    },
    Sweep {
        n: usize,
        eps: Vec<f64>,
        #[serde(default = "uniform")]
        datum: DatumSpec,
        #[serde(default)]
        dirichlet: DirichletOptions,
        #[serde(default)]
        options: MinimizeOptions,
    },
}

fn one() -> f64 {
    1.0
}
fn default_pairs() -> usize {
    100
}
fn default_panels() -> usize {
    256
}
fn default_max_radius() -> f64 {
    0.95
}
fn default_green_tol() -> f64 {
    1e-6
}
fn limit() -> Objective {
    Objective::Limit
}
fn uniform() -> DatumSpec {
    DatumSpec::Uniform
}
fn tight() -> QuadratureOptions {
    QuadratureOptions::tight()
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate { .. } => "simulate",
            Mode::VerifyBoundary { .. } => "verify-boundary",
            Mode::VerifyPair { .. } => "verify-pair",
            Mode::GreenCheck { .. } => "green-check",
            Mode::Minimize { .. } => "minimize",
            Mode::Converge { .. } => "converge",
            Mode::Sweep { .. } => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: u32,
    /// Output file stem; defaults to the mode name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Worker pool size; `DISLOCORE_THREADS` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub domain: DomainSpec,
    /// Green's function backend for the dynamics modes; chosen from the domain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green: Option<Backend>,
    #[serde(flatten)]
    pub mode: Mode,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        bail!("field `{field}` must be positive, got {v}")
    }
}

fn check_sim(prefix: &str, o: &SimulationOptions) -> Result<()> {
    positive(&format!("{prefix}.rel_tol"), o.rel_tol)?;
    positive(&format!("{prefix}.abs_tol"), o.abs_tol)?;
    positive(&format!("{prefix}.t_max"), o.t_max)?;
    positive(&format!("{prefix}.min_step"), o.min_step)?;
    if let Some(r) = o.collision_radius {
        positive(&format!("{prefix}.collision_radius"), r)?;
    }
    Ok(())
}

fn check_quad(prefix: &str, q: &QuadratureOptions) -> Result<()> {
    positive(&format!("{prefix}.rel_tol"), q.rel_tol)?;
    positive(&format!("{prefix}.abs_tol"), q.abs_tol)
}

fn check_min(o: &MinimizeOptions) -> Result<()> {
    positive("options.grad_tol", o.grad_tol)?;
    positive("options.fd_step", o.fd_step)?;
    check_quad("options.quadrature", &o.quadrature)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| anyhow!("invalid scenario: {e}"))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            bail!("field `version` must be {SCHEMA_VERSION}, got {}", self.version);
        }
        if self.threads == Some(0) {
            bail!("field `threads` must be at least 1");
        }
        match &self.mode {
            Mode::Simulate { options, .. } | Mode::VerifyPair { options, .. } => check_sim("options", options)?,
            Mode::VerifyBoundary { options, delta0, gamma0, slack, .. } => {
                check_sim("options", options)?;
                positive("delta0", *delta0)?;
                positive("gamma0", *gamma0)?;
                if !(*slack >= 0.0) {
                    bail!("field `slack` must be non-negative");
                }
            }
            Mode::GreenCheck { pairs, panels, max_radius, tolerance } => {
                if *pairs == 0 || *panels < 8 {
                    bail!("fields `pairs` and `panels` must be at least 1 and 8");
                }
                positive("tolerance", *tolerance)?;
                if !(*max_radius > 0.0 && *max_radius < 1.0) {
                    bail!("field `max_radius` must lie in (0, 1)");
                }
            }
            Mode::Minimize { n, options, objective, .. } => {
                if *n == 0 || *n > 8 {
                    bail!("field `n` must be between 1 and 8");
                }
                if let Objective::FiniteEps { eps } = objective {
                    positive("objective.eps", *eps)?;
                }
                check_min(options)?;
            }
            Mode::Converge { centers, eps, quadrature, .. } => {
                if centers.is_empty() {
                    bail!("field `centers` must not be empty");
                }
                if eps.is_empty() {
                    bail!("field `eps` must not be empty");
                }
                for e in eps {
                    positive("eps", *e)?;
                }
                check_quad("quadrature", quadrature)?;
            }
            Mode::Sweep { n, eps, options, .. } => {
                if *n == 0 || *n > 8 {
                    bail!("field `n` must be between 1 and 8");
                }
                if eps.is_empty() {
                    bail!("field `eps` must not be empty");
                }
                for e in eps {
                    positive("eps", *e)?;
                }
                check_min(options)?;
            }
        }
        Ok(())
    }

    /// Canonical serialization; the scenario hash is taken over it.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn stem(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.mode.name().to_string())
    }

    /// Pool size: `DISLOCORE_THREADS`, then the scenario, then all cores.
    pub fn pool_size(&self) -> Result<usize> {
        if let Ok(v) = std::env::var("DISLOCORE_THREADS") {
            let n: usize = v.trim().parse().map_err(|_| anyhow!("DISLOCORE_THREADS must be a positive integer, got {v:?}"))?;
            if n == 0 {
                bail!("DISLOCORE_THREADS must be at least 1");
            }
            return Ok(n);
        }
        Ok(self.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
    }
}

/// Result of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub mode: &'static str,
    /// One-line summary: mode, key number, verdict.
    pub summary: String,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            2
        }
    }
}

/// Report JSON wrapper with the provenance header.
#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    scenario_hash: &'a str,
    mode: &'static str,
    passed: bool,
    result: T,
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    out: &'a Path,
    hash: String,
    files: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn header(&self) -> String {
        format!("dislocore {TOOL_VERSION} scenario {}", self.hash)
    }

    fn create(&mut self, ext: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(format!("{}.{ext}", self.scenario.stem()));
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(path);
        Ok(BufWriter::new(f))
    }

    fn report<T: Serialize>(&mut self, passed: bool, result: T) -> Result<()> {
        let mut w = self.create("json")?;
        let r = Report {
            tool: "dislocore",
            version: TOOL_VERSION,
            scenario_hash: &self.hash,
            mode: self.scenario.mode.name(),
            passed,
            result,
        };
        serde_json::to_writer_pretty(&mut w, &r)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

fn engine(s: &Scenario, domain: Domain) -> Result<GreenEngine> {
    let backend = s.green.unwrap_or_else(|| Backend::auto(&domain));
    Ok(GreenEngine::new(domain, backend)?)
}

fn problem(domain: Domain, datum: &DatumSpec, opts: &DirichletOptions) -> Result<DirichletProblem> {
    let d = BoundaryDatum::from_spec(&domain, datum).context("field `datum`")?;
    Ok(DirichletProblem::new(domain, d, opts.clone())?)
}

#[derive(Serialize)]
struct GreenCheckResult {
    pairs: usize,
    panels: usize,
    max_regular_error: f64,
    max_robin_error: f64,
    max_robin_closed_form_error: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct ConvergeRow {
    eps: f64,
    renormalized: f64,
    limit: f64,
    gap: f64,
}

#[derive(Serialize)]
struct ConvergeResult {
    centers: Vec<[f64; 2]>,
    limit: f64,
    rows: Vec<ConvergeRow>,
    strictly_decreasing: bool,
}

#[derive(Serialize)]
struct SimulateResult<'a> {
    terminal_event: &'a dislocore::dynamics::Event,
    events: &'a [dislocore::dynamics::Event],
    stats: &'a dislocore::dynamics::IntegratorStats,
    max_energy_increase: f64,
    energy_tolerance: f64,
}

/// Runs a validated scenario, writing artifacts into `out`.
pub fn run(scenario: &Scenario, out: &Path) -> Result<Outcome> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(match scenario.mode {
            Mode::Sweep { .. } | Mode::Minimize { .. } => scenario.pool_size()?,
            _ => 1,
        })
        .build()?;
    pool.install(|| run_in_pool(scenario, out))
}

fn run_in_pool(scenario: &Scenario, out: &Path) -> Result<Outcome> {
    let mut ctx = Ctx { scenario, out, hash: scenario.hash(), files: Vec::new() };
    let domain = scenario.domain.build().context("field `domain`")?;
    let mode = scenario.mode.name();
    let (summary, passed) = match &scenario.mode {
        Mode::Simulate { dislocations, options } => {
            let cfg = dislocations.build()?;
            let eng = engine(scenario, domain)?;
            let tr = simulate(&cfg, &eng, options)?;
            let rise = tr.max_energy_increase(&eng)?;
            // energies are O(1); allow ten times the integrator tolerance
            let tol = 10.0 * options.rel_tol.max(options.abs_tol);
            let passed = rise <= tol;
            let header = ctx.header();
            let mut w = ctx.create("csv")?;
            tr.write_csv(&mut w, &header)?;
            w.flush()?;
            let mut w = ctx.create("jsonl")?;
            tr.write_jsonl(&mut w, TOOL_VERSION, &ctx.hash)?;
            w.flush()?;
            let ev = tr.terminal_event();
            ctx.report(
                passed,
                SimulateResult {
                    terminal_event: ev,
                    events: &tr.events,
                    stats: &tr.stats,
                    max_energy_increase: rise,
                    energy_tolerance: tol,
                },
            )?;
            (format!("{}, t={:.3e}, energy rise {:.1e} <= {:.1e}", ev.kind.name(), ev.time, rise, tol), passed)
        }
        Mode::VerifyBoundary { dislocations, delta0, gamma0, slack, options } => {
            let cfg = dislocations.build()?;
            let eng = engine(scenario, domain)?;
            let r = verify_boundary_bound(&eng, &cfg, *delta0, *gamma0, *slack, options)?;
            ctx.report(r.passed, &r)?;
            let rel = if r.time <= r.bound_with_slack { "<=" } else { ">" };
            (format!("T={:.3e} {rel} bound {:.3e}*(1+{}*delta0)", r.time, r.bound, slack), r.passed)
        }
        Mode::VerifyPair { dislocations, zeta0, eta0, options } => {
            let cfg = dislocations.build()?;
            let eng = engine(scenario, domain)?;
            let r = verify_pair_bound(&eng, &cfg, *zeta0, *eta0, options)?;
            ctx.report(r.passed, &r)?;
            let rel = if r.time <= r.bound { "<=" } else { ">" };
            (format!("T={:.3e} {rel} bound {:.3e} (dipole {:.3e})", r.time, r.bound, r.dipole_time), r.passed)
        }
        Mode::GreenCheck { pairs, panels, max_radius, tolerance } => {
            let r = green_check(&domain, scenario.seed, *pairs, *panels, *max_radius, *tolerance)?;
            let passed = r.max_regular_error < *tolerance && r.max_robin_closed_form_error < 1e-10;
            let summary = format!("max |k_BIE - k_image| = {:.2e} < {:.0e}", r.max_regular_error, tolerance);
            ctx.report(passed, r)?;
            (summary, passed)
        }
        Mode::Minimize { n, objective, datum, dirichlet, options } => {
            let p = problem(domain, datum, dirichlet)?;
            let opts = MinimizeOptions { seed: scenario.seed, ..options.clone() };
            let r = minimize(&p, *n, *objective, &opts)?;
            let passed = r.margin > 0.0 && r.min_separation > 0.0;
            let summary = format!("value {:.6e}, margin {:.4} > 0", r.value, r.margin);
            ctx.report(passed, &r)?;
            (summary, passed)
        }
        Mode::Converge { centers, eps, datum, dirichlet, quadrature } => {
            let p = problem(domain, datum, dirichlet)?;
            let a: Vec<Vec2> = centers.iter().map(|c| Vec2::new(c[0], c[1])).collect();
            let f = if a.len() == 1 { p.limit_functional(a[0], quadrature)? } else { p.limit_functional_n(&a, quadrature)? };
            let mut rows = Vec::new();
            for &e in eps {
                let fe = p.renormalize(&a, e, quadrature)?;
                rows.push(ConvergeRow { eps: e, renormalized: fe, limit: f, gap: (fe - f).abs() });
            }
            // gaps listed in decreasing ε must strictly decrease
            let mut sorted: Vec<&ConvergeRow> = rows.iter().collect();
            sorted.sort_by(|x, y| y.eps.total_cmp(&x.eps));
            let strictly_decreasing = sorted.windows(2).all(|w| w[1].gap < w[0].gap);
            let header = ctx.header();
            let mut w = ctx.create("csv")?;
            writeln!(w, "# {header}")?;
            writeln!(w, "eps,renormalized,limit,gap")?;
            for r in &rows {
                writeln!(w, "{},{},{},{}", r.eps, r.renormalized, r.limit, r.gap)?;
            }
            w.flush()?;
            let last = sorted.last().map_or(f64::NAN, |r| r.gap);
            ctx.report(strictly_decreasing, ConvergeResult { centers: centers.clone(), limit: f, rows, strictly_decreasing })?;
            (format!("|F_eps - F| = {last:.2e} at smallest eps, decreasing: {strictly_decreasing}"), strictly_decreasing)
        }
        Mode::Sweep { n, eps, datum, dirichlet, options } => {
            let p = problem(domain, datum, dirichlet)?;
            let opts = MinimizeOptions { seed: scenario.seed, ..options.clone() };
            let s = confinement_sweep(&p, *n, eps, &opts)?;
            let passed = s.uniform_margin && s.min_margin > 0.0 && s.min_separation > 0.0;
            let header = ctx.header();
            let mut w = ctx.create("csv")?;
            s.write_csv(&mut w, &header)?;
            w.flush()?;
            let summary = format!("min margin {:.4}, uniform (>= 0.8 x smallest-eps margin): {}", s.min_margin, s.uniform_margin);
            ctx.report(passed, &s)?;
            (summary, passed)
        }
    };
    Ok(Outcome { mode, summary: format!("{mode}: {summary} [{}]", if passed { "pass" } else { "FAIL" }), passed, files: ctx.files })
}

fn green_check(
    domain: &Domain,
    seed: u64,
    pairs: usize,
    panels: usize,
    max_radius: f64,
    tolerance: f64,
) -> Result<GreenCheckResult> {
    let (center, radius) = domain.as_disk().ok_or_else(|| anyhow!("field `domain`: green-check needs a disk"))?;
    let image = GreenEngine::new(domain.clone(), Backend::Image)?;
    let bie = GreenEngine::new(domain.clone(), Backend::BoundaryIntegral { panels })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = || {
        let r = radius * max_radius * rng.random::<f64>().sqrt();
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        center + Vec2::new(r * phi.cos(), r * phi.sin())
    };
    let (mut ek, mut eh, mut ec) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..pairs {
        let (x, y) = (sample(), sample());
        ek = ek.max((bie.regular_part(x, y)? - image.regular_part(x, y)?).abs());
        let h_image = image.robin_function(x)?;
        eh = eh.max((bie.robin_function(x)? - h_image).abs());
        // (1/2π) log((R² - |x - c|²)/R)
        let closed = ((radius * radius - (x - center).norm_squared()) / radius).ln() / std::f64::consts::TAU;
        ec = ec.max((h_image - closed).abs());
    }
    Ok(GreenCheckResult {
        pairs,
        panels,
        max_regular_error: ek,
        max_robin_error: eh,
        max_robin_closed_form_error: ec,
        tolerance,
    })
}

/// Writes the outcome line to stdout unless quiet.
pub fn print_summary(o: &Outcome, quiet: bool) {
    if !quiet {
        println!("{}", o.summary);
    }
}
