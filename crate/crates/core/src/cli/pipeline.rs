//! Relaxation, rounding and ratio measurement for one instance, plus the report records.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::instance::{Assignment, Instance, InstanceError, Nae3Instance};
use crate::oracle::{ratio_report, OracleError, OutputRecord};
use crate::rounding::{round_pd, round_simple, Branch, RoundingError, RoundingTrace, TwoSatSummary};
use crate::salp::{solve_relaxation, LiftCertificate, LpError};

use super::config::RunConfig;
use super::CliError;

pub const REPORT_SCHEMA: &str = "ccsp-report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct InstanceInfo {
    pub path: Option<String>,
    pub kind: &'static str,
    pub k: usize,
    pub n: usize,
    pub num_constraints: usize,
    pub complete: bool,
    pub hash: String,
}

impl InstanceInfo {
    pub fn new(inst: &Instance, path: Option<&str>) -> Self {
        let (kind, k, m) = match inst {
            Instance::Nae3(i) => ("nae3", 3, i.num_constraints()),
            Instance::Kcsp(i) => ("kcsp", i.k(), i.num_constraints()),
        };
        InstanceInfo {
            path: path.map(str::to_string),
            kind,
            k,
            n: inst.n(),
            num_constraints: m,
            complete: inst.is_complete(),
            hash: inst.content_hash(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LpInfo {
    pub value: f64,
    pub degree: usize,
    pub degree_solved: usize,
    /// Solved below the requested degree with no lift certificate.
    pub degraded: bool,
    pub backend: &'static str,
    pub iterations: usize,
    pub lift: Option<LiftCertificate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundingSummary {
    pub stages: usize,
    pub depth: usize,
    pub final_branch: Option<Branch>,
    pub base_case_within_n: bool,
    /// Every thresholding stage had a candidate passing the bounded-increase check.
    pub threshold_always_found: bool,
    pub stalls: usize,
    pub twosat: Option<TwoSatBrief>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoSatBrief {
    pub m: usize,
    pub clauses: usize,
    pub violated: usize,
    pub method: &'static str,
    pub c_round: Option<f64>,
}

impl From<&TwoSatSummary> for TwoSatBrief {
    fn from(t: &TwoSatSummary) -> Self {
        TwoSatBrief { m: t.m, clauses: t.clauses, violated: t.violated, method: t.method, c_round: t.c_round }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub lp_s: f64,
    pub rounding_s: f64,
    pub oracle_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub instance: InstanceInfo,
    pub seed: u64,
    pub config: RunConfig,
    pub lp: LpInfo,
    pub lp_value: f64,
    pub opt: Option<f64>,
    pub opt_assignment: Option<String>,
    /// Output of the staged rounding.
    pub assignment: String,
    pub outputs: Vec<OutputRecord>,
    pub rounding: RoundingSummary,
    pub wall_time: Timings,
}

impl SolveReport {
    pub fn output(&self, name: &str) -> Option<&OutputRecord> {
        self.outputs.iter().find(|o| o.name == name)
    }
}

pub struct SolveOutcome {
    pub report: SolveReport,
    pub assignment: Assignment,
    pub trace: RoundingTrace,
}

impl From<LpError> for CliError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Instance(_) | LpError::Budget { .. } => CliError::Input(e.to_string()),
            LpError::DegreeTooLow(_) => CliError::Usage(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<RoundingError> for CliError {
    fn from(e: RoundingError) -> Self {
        match e {
            RoundingError::Config(_) => CliError::Usage(e.to_string()),
            RoundingError::Instance(_) => CliError::Input(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Run seed split into the per-component seeds `(round_pd, round_simple)`.
pub fn component_seeds(seed: u64) -> (u64, u64) {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (master.next_u64(), master.next_u64())
}

/// Relax, round with both schemes and measure ratios.
pub fn solve_nae(inst: &Nae3Instance, cfg: &RunConfig, path: Option<&str>) -> Result<SolveOutcome, CliError> {
    let start = Instant::now();
    if !cfg.allow_incomplete {
        inst.require_complete()?;
    }
    let mut cfg = cfg.clone();
    let (round_seed, simple_seed) = component_seeds(cfg.seed);
    cfg.rounding.seed = round_seed;

    let relax = solve_relaxation(inst, &cfg.relaxation())?;
    let lp_s = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let (alpha, trace) = round_pd(inst, &relax.pd, &cfg.rounding)?;
    let simple = round_simple(inst, &relax.pd, &crate::rounding::RoundingConfig { seed: simple_seed, ..cfg.rounding.clone() })?;
    let rounding_s = t.elapsed().as_secs_f64();
    if alpha.len() != inst.n() || trace.stages.len() > inst.n().max(1) {
        return Err(CliError::Internal(format!("rounding took {} stages on {} variables", trace.stages.len(), inst.n())));
    }

    let t = Instant::now();
    let outputs = vec![("round-pd".to_string(), alpha.clone()), ("round-simple".to_string(), simple)];
    let ratios = ratio_report(inst, relax.lp_value, &outputs, cfg.opt_max_n)?;
    let oracle_s = t.elapsed().as_secs_f64();

    let summary = RoundingSummary {
        stages: trace.stages.len(),
        depth: trace.depth,
        final_branch: trace.final_branch(),
        base_case_within_n: matches!(trace.final_branch(), Some(Branch::Bruteforce | Branch::Min2sat))
            && trace.stages.len() <= inst.n(),
        threshold_always_found: trace
            .stages
            .iter()
            .filter(|s| matches!(s.branch, Branch::Threshold | Branch::Stall))
            .all(|s| s.threshold_exists),
        stalls: trace.stages.iter().filter(|s| s.branch == Branch::Stall).count(),
        twosat: trace.twosat.as_ref().map(TwoSatBrief::from),
        warnings: trace.warnings.clone(),
    };
    let report = SolveReport {
        schema: REPORT_SCHEMA,
        tool_version: TOOL_VERSION,
        command: "solve",
        instance: InstanceInfo::new(&Instance::Nae3(inst.clone()), path),
        seed: cfg.seed,
        lp: LpInfo {
            value: relax.lp_value,
            degree: relax.degree,
            degree_solved: relax.lp_degree_solved,
            degraded: relax.degraded,
            backend: relax.backend,
            iterations: relax.iterations,
            lift: relax.lift.clone(),
        },
        lp_value: relax.lp_value,
        opt: ratios.opt,
        opt_assignment: ratios.opt_assignment,
        assignment: alpha.to_string(),
        outputs: ratios.outputs,
        rounding: summary,
        wall_time: Timings { lp_s, rounding_s, oracle_s, total_s: start.elapsed().as_secs_f64() },
        config: cfg,
    };
    Ok(SolveOutcome { report, assignment: alpha, trace })
}
