//! Config-driven entry point behind the `qhs` binary: load a problem
//! description from JSON, dispatch one command, and emit a deterministic
//! machine-readable report.
//!
//! Reports are split into a `body` (bit-reproducible for identical configs
//! and seeds) and a `meta` block holding wall-clock timing; determinism
//! claims apply to the body only. Schemas for both files ship in
//! `schemas/` at the repository root.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::instances::{parse_expr, IntegralFunctional, QuadRule, QuadratureSpec};
use crate::nonsmooth::ClarkeParams;
use crate::solvers::{
    best_response_solve, brute_force_solve, coercivity_check, kkm_audit, sample_family,
    truncated_solve, CoercivityReport, KkmAudit, SolveMethod, SolveOptions, TruncationSpec,
};
use crate::system::{LinearMap, QhsSystem, ResidualReport, VectorField};
use crate::linalg::substream_seed;

/// Joint sample points drawn for the covering audit.
const AUDIT_POINTS: usize = 5;
/// Convex combinations tested per audit run.
const AUDIT_COMBOS: usize = 200;
/// Exterior samples drawn by the coercivity command.
const COERCIVITY_SAMPLES: usize = 100;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    /// `lo`/`hi` entries may be null for unbounded directions.
    Box {
        lo: Vec<Option<f64>>,
        hi: Vec<Option<f64>>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Simplex {
        dim: usize,
        scale: f64,
    },
    Halfspaces {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        witness: Vec<f64>,
    },
}

impl SetConfig {
    fn build(&self, path: &str) -> Result<ConvexSet> {
        let map_err = |e: Error| Error::config(path, e.to_string());
        match self {
            SetConfig::Box { lo, hi } => {
                let lo = lo.iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect();
                let hi = hi.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
                ConvexSet::new_box(lo, hi).map_err(map_err)
            }
            SetConfig::Ball { center, radius } => {
                ConvexSet::new_ball(center.clone(), *radius).map_err(map_err)
            }
            SetConfig::Simplex { dim, scale } => {
                ConvexSet::new_simplex(*dim, *scale).map_err(map_err)
            }
            SetConfig::Halfspaces {
                normals,
                offsets,
                witness,
            } => ConvexSet::new_halfspaces(normals.clone(), offsets.clone(), witness.clone())
                .map_err(map_err),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    pub dim: usize,
    pub set: SetConfig,
    /// Payoff coupling matrix (rows x dim); identity when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<Vec<f64>>>,
    /// `J` coupling matrix (rows x dim); identity when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<Vec<f64>>>,
    /// Payoff expression over the concatenated Y coordinates (x1..xM).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    /// One expression per coordinate of this player's space, over the
    /// concatenated strategy coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<String>>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JConfig {
    /// Expression over the concatenated Z coordinates.
    Expr {
        text: String,
        #[serde(default = "default_true")]
        regular: bool,
    },
    /// Quadrature-discretized integrand over `(x, y_1..y_n)`; every player
    /// must then supply a nodes-by-dim `s` matrix.
    Integral {
        domain: [f64; 2],
        nodes: usize,
        rule: QuadRule,
        integrand: String,
        #[serde(default = "default_true")]
        regular: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub cores: Vec<SetConfig>,
    pub anchor: Vec<f64>,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Option<SolveMethod>,
    pub resolution: Option<usize>,
    pub max_iters: Option<usize>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub random_extra: Option<usize>,
}

impl SolverConfig {
    fn build(&self) -> SolveOptions {
        let d = SolveOptions::default();
        SolveOptions {
            method: self.method.unwrap_or(d.method),
            resolution: self.resolution.unwrap_or(d.resolution),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            step: self.step.unwrap_or(d.step),
            tol: self.tol.unwrap_or(d.tol),
            seed: self.seed.unwrap_or(d.seed),
            random_extra: self.random_extra.unwrap_or(d.random_extra),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClarkeConfig {
    pub delta0: Option<f64>,
    pub shrink: Option<f64>,
    pub scales: Option<u32>,
    pub samples_per_scale: Option<u32>,
    pub seed: Option<u64>,
}

impl ClarkeConfig {
    fn build(&self) -> ClarkeParams {
        let d = ClarkeParams::default();
        ClarkeParams {
            delta0: self.delta0.unwrap_or(d.delta0),
            shrink: self.shrink.unwrap_or(d.shrink),
            scales: self.scales.unwrap_or(d.scales),
            samples_per_scale: self.samples_per_scale.unwrap_or(d.samples_per_scale),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

/// A problem description as stored in a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    pub players: Vec<PlayerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<JConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub clarke: ClarkeConfig,
}

/// A validated, assembled problem.
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub system: QhsSystem,
    pub truncation: Option<TruncationSpec>,
    pub solver: SolveOptions,
}

impl ProblemConfig {
    /// Assemble and cross-validate every component, naming the offending
    /// config field on failure.
    pub fn build(&self) -> Result<BuiltProblem> {
        if self.players.is_empty() {
            return Err(Error::config("players", "at least one player is required"));
        }
        let n = self.players.len();
        let mut sets = Vec::with_capacity(n);
        let mut t_maps = Vec::with_capacity(n);
        let mut s_maps = Vec::with_capacity(n);
        for (i, player) in self.players.iter().enumerate() {
            if player.dim == 0 {
                return Err(Error::config(format!("players[{i}].dim"), "must be >= 1"));
            }
            let set = player.set.build(&format!("players[{i}].set"))?;
            if set.dim() != player.dim {
                return Err(Error::config(
                    format!("players[{i}].set"),
                    format!("set dimension {} != declared dim {}", set.dim(), player.dim),
                ));
            }
            let t = match &player.t {
                Some(rows) => LinearMap::from_rows(rows.clone())
                    .map_err(|e| Error::config(format!("players[{i}].t"), e.to_string()))?,
                None => LinearMap::identity(player.dim),
            };
            if t.cols() != player.dim {
                return Err(Error::config(
                    format!("players[{i}].t"),
                    format!("matrix has {} columns, expected {}", t.cols(), player.dim),
                ));
            }
            let s = match &player.s {
                Some(rows) => LinearMap::from_rows(rows.clone())
                    .map_err(|e| Error::config(format!("players[{i}].s"), e.to_string()))?,
                None => LinearMap::identity(player.dim),
            };
            if s.cols() != player.dim {
                return Err(Error::config(
                    format!("players[{i}].s"),
                    format!("matrix has {} columns, expected {}", s.cols(), player.dim),
                ));
            }
            sets.push(set);
            t_maps.push(t);
            s_maps.push(s);
        }
        let x_total: usize = self.players.iter().map(|p| p.dim).sum();
        let y_dims: Vec<usize> = t_maps.iter().map(|m| m.rows()).collect();
        let y_total: usize = y_dims.iter().sum();
        let z_dims: Vec<usize> = s_maps.iter().map(|m| m.rows()).collect();
        let z_total: usize = z_dims.iter().sum();

        let mut payoffs = Vec::with_capacity(n);
        for (i, player) in self.players.iter().enumerate() {
            let a = match &player.a {
                Some(text) => parse_expr(text, y_total)
                    .and_then(|e| e.to_scalar_fn(y_dims.clone()))
                    .map_err(|e| Error::config(format!("players[{i}].a"), e.to_string()))?,
                None => crate::nonsmooth::ScalarFn::constant(y_dims.clone(), 0.0),
            };
            payoffs.push(a);
        }

        let mut fields = Vec::new();
        let mut any_field = false;
        for (i, player) in self.players.iter().enumerate() {
            match &player.f {
                Some(exprs) => {
                    if exprs.len() != player.dim {
                        return Err(Error::config(
                            format!("players[{i}].f"),
                            format!("expected {} expressions, got {}", player.dim, exprs.len()),
                        ));
                    }
                    let compiled: Vec<_> = exprs
                        .iter()
                        .enumerate()
                        .map(|(c, text)| {
                            parse_expr(text, x_total).map(|e| e.compile()).map_err(|e| {
                                Error::config(format!("players[{i}].f[{c}]"), e.to_string())
                            })
                        })
                        .collect::<Result<_>>()?;
                    any_field = true;
                    fields.push(Some(compiled));
                }
                None => fields.push(None),
            }
        }
        let f = if any_field {
            Some(
                fields
                    .into_iter()
                    .enumerate()
                    .map(|(i, compiled)| {
                        let dim = self.players[i].dim;
                        match compiled {
                            Some(progs) => VectorField::new(dim, move |u: &[f64]| {
                                progs.iter().map(|p| p.eval_raw(u)).collect()
                            }),
                            // Players without a field contribute zero.
                            None => VectorField::new(dim, move |_| vec![0.0; dim]),
                        }
                    })
                    .collect(),
            )
        } else {
            None
        };

        let j = match &self.j {
            None => None,
            Some(JConfig::Expr { text, regular }) => {
                if !regular {
                    return Err(Error::config(
                        "j.regular",
                        "the coupling must be declared regular",
                    ));
                }
                Some(
                    parse_expr(text, z_total)
                        .and_then(|e| e.to_scalar_fn(z_dims.clone()))
                        .map_err(|e| Error::config("j.text", e.to_string()))?
                        .with_regular(true),
                )
            }
            Some(JConfig::Integral {
                domain,
                nodes,
                rule,
                integrand,
                regular,
            }) => {
                if !regular {
                    return Err(Error::config(
                        "j.regular",
                        "the coupling must be declared regular",
                    ));
                }
                let quad = QuadratureSpec::new(domain[0], domain[1], *nodes, *rule)
                    .map_err(|e| Error::config("j.domain", e.to_string()))?;
                for (i, map) in s_maps.iter().enumerate() {
                    if map.rows() != *nodes {
                        return Err(Error::config(
                            format!("players[{i}].s"),
                            format!(
                                "integral coupling requires a {}x{} node-evaluation matrix",
                                nodes, self.players[i].dim
                            ),
                        ));
                    }
                }
                let expr = parse_expr(integrand, 1 + n)
                    .map_err(|e| Error::config("j.integrand", e.to_string()))?;
                let functional = IntegralFunctional::new(expr, quad, s_maps.clone(), *regular)
                    .map_err(|e| Error::config("j", e.to_string()))?;
                Some(functional.scalar_fn())
            }
        };

        let system = QhsSystem::new(
            sets,
            t_maps,
            s_maps,
            payoffs,
            f,
            j,
            self.clarke.build(),
        )
        .map_err(|e| Error::config("players", e.to_string()))?;

        let truncation = match &self.truncation {
            None => None,
            Some(tc) => {
                let cores: Vec<ConvexSet> = tc
                    .cores
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.build(&format!("truncation.cores[{i}]")))
                    .collect::<Result<_>>()?;
                let spec = TruncationSpec::new(cores, tc.anchor.clone(), tc.radii.clone())
                    .map_err(|e| Error::config("truncation", e.to_string()))?;
                if spec.cores().len() != n {
                    return Err(Error::config(
                        "truncation.cores",
                        format!("expected {n} cores, got {}", spec.cores().len()),
                    ));
                }
                system
                    .admit_point(spec.anchor())
                    .map_err(|e| Error::config("truncation.anchor", e.to_string()))?;
                Some(spec)
            }
        };

        Ok(BuiltProblem {
            system,
            truncation,
            solver: self.solver.build(),
        })
    }
}

/// Parse and validate a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ProblemConfig> {
    let bytes = std::fs::read(path.as_ref())?;
    let config: ProblemConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Error::config("<config>", e.to_string()))?;
    config.build()?;
    Ok(config)
}

pub fn config_sha256(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Validate,
    Verify,
    Solve,
    Oracle,
    Audit,
    Coercivity,
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "validate" => Command::Validate,
            "verify" => Command::Verify,
            "solve" => Command::Solve,
            "oracle" => Command::Oracle,
            "audit" => Command::Audit,
            "coercivity" => Command::Coercivity,
            other => return Err(Error::invalid(format!("unknown command `{other}`"))),
        })
    }
}

/// Flag overrides applied on top of the config's solver block.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub at: Option<Vec<f64>>,
    pub method: Option<SolveMethod>,
    pub resolution: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub step: Option<f64>,
}

impl Overrides {
    fn apply(&self, opts: &mut SolveOptions) {
        if let Some(m) = self.method {
            opts.method = m;
        }
        if let Some(r) = self.resolution {
            opts.resolution = r;
        }
        if let Some(t) = self.tol {
            opts.tol = t;
        }
        if let Some(s) = self.seed {
            opts.seed = s;
        }
        if let Some(m) = self.max_iters {
            opts.max_iters = m;
        }
        if let Some(s) = self.step {
            opts.step = s;
        }
    }
}

/// Deterministic portion of a run report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBody {
    pub schema_version: String,
    pub tool_version: String,
    pub command: Command,
    pub config_name: String,
    pub config_sha256: String,
    pub solver_seed: u64,
    pub clarke_seed: u64,
    pub verdict: Option<bool>,
    pub solution: Option<Vec<f64>>,
    pub residual: Option<ResidualReport>,
    pub audit: Option<KkmAudit>,
    pub coercivity: Option<CoercivityReport>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMeta {
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub body: ReportBody,
    pub meta: ReportMeta,
}

impl RunReport {
    /// Exit code: 0 verdict true / check passed, 1 verdict false.
    pub fn exit_code(&self) -> i32 {
        match self.body.verdict {
            Some(true) | None => 0,
            Some(false) => 1,
        }
    }
}

/// Exit code for a failed run: 2 for config/usage errors, 3 for solver
/// failures and runtime breakdowns.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::Parse { .. }
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::SolverFailure(_) | Error::UnsupportedOperation(_) | Error::NumericDomain(_) => 3,
    }
}

fn default_start(system: &QhsSystem) -> Result<Vec<f64>> {
    let mut start = Vec::with_capacity(system.total_x_dim());
    for set in system.sets() {
        let (lo, hi) = set.bounding_box();
        let mid: Vec<f64> = lo.iter().zip(&hi).map(|(&l, &h)| 0.5 * (l + h)).collect();
        start.extend(set.project(&mid)?);
    }
    Ok(start)
}

/// Run one command against a validated config and produce the report.
pub fn run_command(
    command: Command,
    config: &ProblemConfig,
    config_sha256: &str,
    overrides: &Overrides,
) -> Result<RunReport> {
    let started = Instant::now();
    let built = config.build()?;
    let mut solver = built.solver;
    overrides.apply(&mut solver);
    let system = built.system;
    let truncation = built.truncation;

    let mut body = ReportBody {
        schema_version: "1".to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command,
        config_name: config.name.clone(),
        config_sha256: config_sha256.to_string(),
        solver_seed: solver.seed,
        clarke_seed: system.params().seed,
        verdict: None,
        solution: None,
        residual: None,
        audit: None,
        coercivity: None,
        iterations: None,
    };

    match command {
        Command::Validate => {
            body.verdict = Some(true);
        }
        Command::Verify => {
            let at = overrides
                .at
                .clone()
                .ok_or_else(|| Error::invalid("verify requires --at POINT"))?;
            let family = sample_family(&system, solver.resolution, solver.random_extra, solver.seed)?;
            let report = system.verify_qhs(&at, &family, solver.tol)?;
            body.verdict = Some(report.verdict);
            body.residual = Some(report);
            body.solution = Some(at);
        }
        Command::Solve => {
            let bounded = system.sets().iter().all(|s| s.bounded());
            if bounded {
                let start = match &overrides.at {
                    Some(at) => at.clone(),
                    None => default_start(&system)?,
                };
                let (u, report, trace) = best_response_solve(&system, &start, &solver)?;
                body.verdict = Some(report.verdict);
                body.iterations = Some(trace.len());
                body.solution = Some(u);
                body.residual = Some(report);
            } else {
                let trunc = truncation.as_ref().ok_or_else(|| {
                    Error::UnsupportedOperation(
                        "the constraint sets are unbounded; add a `truncation` block and use \
                         the coercive pathway"
                            .into(),
                    )
                })?;
                let (u, report) = truncated_solve(&system, trunc, &solver)?;
                body.verdict = Some(report.verdict);
                body.solution = Some(u);
                body.residual = Some(report);
            }
        }
        Command::Oracle => {
            let bounded = system.sets().iter().all(|s| s.bounded());
            let (u, report) = if bounded {
                brute_force_solve(&system, &solver)?
            } else {
                let trunc = truncation.as_ref().ok_or_else(|| {
                    Error::UnsupportedOperation(
                        "the constraint sets are unbounded; add a `truncation` block and use \
                         the coercive pathway"
                            .into(),
                    )
                })?;
                truncated_solve(&system, trunc, &solver)?
            };
            body.verdict = Some(report.verdict);
            body.solution = Some(u);
            body.residual = Some(report);
        }
        Command::Audit => {
            let mut per_player: Vec<Vec<Vec<f64>>> = Vec::new();
            for (i, set) in system.sets().iter().enumerate() {
                per_player.push(set.sample_random(
                    AUDIT_POINTS,
                    substream_seed(solver.seed, 21, i as u64),
                )?);
            }
            let v_list: Vec<Vec<f64>> = (0..AUDIT_POINTS)
                .map(|t| per_player.iter().flat_map(|list| list[t].clone()).collect())
                .collect();
            let audit = kkm_audit(&system, &v_list, AUDIT_COMBOS, solver.seed, solver.tol)?;
            body.verdict = Some(audit.pass);
            body.audit = Some(audit);
        }
        Command::Coercivity => {
            let trunc = truncation.as_ref().ok_or_else(|| {
                Error::config("truncation", "the coercivity command requires a truncation block")
            })?;
            let radius = *trunc.radii().last().unwrap();
            let report = coercivity_check(&system, trunc, COERCIVITY_SAMPLES, radius, solver.seed)?;
            body.verdict = Some(report.pass);
            body.coercivity = Some(report);
        }
    }

    Ok(RunReport {
        body,
        meta: ReportMeta {
            wall_time_ms: started.elapsed().as_millis() as u64,
        },
    })
}
