//! The `ccsp` command line: `gen`, `solve`, `decide`, `bench` and `oracle`.
//!
//! Exit codes: 0 success, 2 usage, 3 input, 4 internal.

pub mod bench;
pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::instance::{
    densify_reduction, gen_planted_kcsp, gen_planted_nae3, gen_random_kcsp, gen_random_nae3, read_instance, Instance,
    DENSIFY_DEFAULT_MAX_N,
};
use crate::kcsp_decide::{decide_csp_with, CheckMode, DecideError, DecideOptions, StepStat, DEFAULT_SURVIVOR_CAP_MULTIPLE};
use crate::oracle::{brute_opt, kcsp_satisfying};
use crate::salp::{build_sa_lp_partial, LpBackend};

use config::Overrides;
use pipeline::{InstanceInfo, REPORT_SCHEMA, TOOL_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Internal(_) => "internal",
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ccsp", version, about = "Rounding and decision tools for complete constraint satisfaction problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Relax, round and report on a NAE-3-SAT instance.
    Solve(SolveArgs),
    /// Decide satisfiability of a complete k-CSP.
    Decide(DecideArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
    /// Exhaustive ground truth.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// Uniform polarities.
    Random,
    /// Hidden assignment with corruption fraction `-p`.
    Planted,
    /// Almost complete embedding of a sparse clause file.
    Dense,
    /// Random complete k-CSP truth tables.
    Kcsp,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    pub kind: GenKind,
    #[arg(short = 'n', long)]
    pub n: Option<usize>,
    /// Corruption fraction for planted instances.
    #[arg(short = 'p', long)]
    pub p: Option<f64>,
    /// Density parameter for `dense`.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Sparse NAE-3-SAT file for `dense`.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Cap on the total variable count for `dense`.
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Arity for `kcsp`.
    #[arg(short = 'k', long)]
    pub k: Option<usize>,
    /// Probability of each table bit being 0 for `kcsp`.
    #[arg(long)]
    pub zero_prob: Option<f64>,
    /// Plant a satisfying assignment in a `kcsp` instance.
    #[arg(long)]
    pub planted: bool,
    /// Write NAE-3-SAT instances as k=3 truth tables.
    #[arg(long)]
    pub as_kcsp: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instance path (stdout if absent).
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
    /// Planted sidecar path (default: `<out>.planted.json`, stderr without `--out`).
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct TuningArgs {
    /// Relaxation degree (at least 3).
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub t_pairs: Option<usize>,
    #[arg(long)]
    pub r_max: Option<usize>,
    /// Conditioning samples per stage.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest unfixed set solved exhaustively.
    #[arg(long)]
    pub n_bruteforce: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// LP backend: auto, bundled or highs.
    #[arg(long)]
    pub backend: Option<LpBackend>,
    /// Budget on LP slots.
    #[arg(long)]
    pub max_lp_variables: Option<usize>,
    #[arg(long)]
    pub lp_tol: Option<f64>,
    /// Fail instead of solving below the requested degree.
    #[arg(long)]
    pub strict_degree: bool,
    /// Largest n for which the exhaustive optimum is reported.
    #[arg(long)]
    pub opt_max_n: Option<usize>,
    /// TOML file with the same settings (snake_case keys); flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl TuningArgs {
    fn overrides(&self, allow_incomplete: bool) -> Result<Overrides, CliError> {
        let flags = Overrides {
            degree: self.degree,
            tau: self.tau,
            epsilon: self.epsilon,
            t_pairs: self.t_pairs,
            r_max: self.r_max,
            samples: self.samples,
            n_bruteforce: self.n_bruteforce,
            seed: self.seed,
            backend: self.backend,
            max_lp_variables: self.max_lp_variables,
            lp_tol: self.lp_tol,
            strict_degree: self.strict_degree.then_some(true),
            allow_incomplete: allow_incomplete.then_some(true),
            opt_max_n: self.opt_max_n,
            ..Default::default()
        };
        let file = match &self.config {
            Some(p) => Overrides::from_toml_file(p)?,
            None => Overrides::default(),
        };
        Ok(flags.over(&file))
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// JSON run report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// JSON rounding trace path.
    #[arg(long)]
    pub emit_trace: Option<PathBuf>,
    /// Free-format MPS export of the LP at the degree actually solved.
    #[arg(long)]
    pub emit_mps: Option<PathBuf>,
    /// Accept instances with missing constraints.
    #[arg(long)]
    pub allow_incomplete: bool,
}

#[derive(Args, Debug)]
pub struct DecideArgs {
    pub instance: PathBuf,
    /// Print a verified satisfying assignment.
    #[arg(long)]
    pub emit_witness: bool,
    /// Shuffle the variable order with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Re-check every prefix constraint instead of only the new ones.
    #[arg(long)]
    pub full_check: bool,
    /// Abort when survivors exceed this multiple of n^(k-1).
    #[arg(long, default_value_t = DEFAULT_SURVIVOR_CAP_MULTIPLE)]
    pub survivor_cap: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// TOML suite description.
    pub suite: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads (default: the suite's `jobs`, else 1).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    pub instance: PathBuf,
    /// Enumerate all satisfying assignments and print a yes/no verdict.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, report) = match &cli.command {
        Command::Gen(_) => ("gen", None),
        Command::Solve(a) => ("solve", a.report.clone()),
        Command::Decide(a) => ("decide", a.report.clone()),
        Command::Bench(_) => ("bench", None),
        Command::Oracle(a) => ("oracle", a.report.clone()),
    };
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a, &mut stdout),
        Command::Solve(a) => cmd_solve(&a, &mut stdout),
        Command::Decide(a) => cmd_decide(&a, &mut stdout),
        Command::Bench(a) => cmd_bench(&a, &mut stdout),
        Command::Oracle(a) => cmd_oracle(&a, &mut stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let record = json!({
                "schema": REPORT_SCHEMA,
                "tool_version": TOOL_VERSION,
                "command": name,
                "error": { "kind": e.kind(), "exit_code": e.exit_code(), "message": e.to_string() },
            });
            eprintln!("{record}");
            if let Some(path) = report {
                let _ = std::fs::write(path, format!("{record:#}\n"));
            }
            e.exit_code()
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

fn load(path: &Path) -> Result<Instance, CliError> {
    read_instance(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Internal(format!("writing output: {e}"))
}

fn require<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("gen {kind} requires {flag}")))
}

fn reject(present: bool, flag: &str, kind: &str) -> Result<(), CliError> {
    if present {
        Err(CliError::Usage(format!("{flag} does not apply to gen {kind}")))
    } else {
        Ok(())
    }
}

fn cmd_gen(a: &GenArgs, out: &mut impl Write) -> Result<(), CliError> {
    let kind = format!("{:?}", a.kind).to_lowercase();
    let k = kind.as_str();
    if a.kind != GenKind::Dense {
        reject(a.eps.is_some(), "--eps", k)?;
        reject(a.from.is_some(), "--from", k)?;
        reject(a.max_n.is_some(), "--max-n", k)?;
    }
    if a.kind != GenKind::Kcsp {
        reject(a.k.is_some(), "-k", k)?;
        reject(a.zero_prob.is_some(), "--zero-prob", k)?;
        reject(a.planted, "--planted", k)?;
    }
    if a.kind != GenKind::Planted {
        reject(a.p.is_some(), "-p", k)?;
    }
    let usage = |e: crate::instance::InstanceError| CliError::Usage(e.to_string());
    let mut sidecar = None;
    let inst: Instance = match a.kind {
        GenKind::Random => gen_random_nae3(require(a.n, "-n", k)?, a.seed).map_err(usage)?.into(),
        GenKind::Planted => {
            let (n, p) = (require(a.n, "-n", k)?, require(a.p, "-p", k)?);
            let planted = gen_planted_nae3(n, p, a.seed).map_err(usage)?;
            let m = planted.instance.num_constraints();
            sidecar = Some(json!({
                "schema": REPORT_SCHEMA,
                "kind": "planted",
                "n": n,
                "p": p,
                "seed": a.seed,
                "planted": planted.planted.to_string(),
                "violated_count": planted.violated_count,
                "val": planted.violated_count as f64 / m as f64,
            }));
            planted.instance.into()
        }
        GenKind::Dense => {
            reject(a.n.is_some(), "-n", k)?;
            let eps = require(a.eps, "--eps", k)?;
            let from = a.from.as_deref().ok_or_else(|| CliError::Usage("gen dense requires --from".into()))?;
            let sparse = match load(from)? {
                Instance::Nae3(i) => i,
                Instance::Kcsp(_) => return Err(CliError::Input("gen dense needs a NAE-3-SAT clause file".into())),
            };
            densify_reduction(&sparse, eps, a.max_n.unwrap_or(DENSIFY_DEFAULT_MAX_N)).map_err(usage)?.into()
        }
        GenKind::Kcsp => {
            reject(a.as_kcsp, "--as-kcsp", k)?;
            let (n, arity) = (require(a.n, "-n", k)?, require(a.k, "-k", k)?);
            let q = a.zero_prob.unwrap_or(0.25);
            if a.planted {
                let (inst, planted) = gen_planted_kcsp(n, arity, q, a.seed).map_err(usage)?;
                sidecar = Some(json!({
                    "schema": REPORT_SCHEMA,
                    "kind": "planted-kcsp",
                    "n": n,
                    "k": arity,
                    "zero_prob": q,
                    "seed": a.seed,
                    "planted": planted.to_string(),
                    "violated_count": 0,
                }));
                inst.into()
            } else {
                gen_random_kcsp(n, arity, q, a.seed).map_err(usage)?.into()
            }
        }
    };
    let inst = match inst {
        Instance::Nae3(i) if a.as_kcsp => Instance::Kcsp(i.to_kcsp().map_err(usage)?),
        other => other,
    };
    if let Some(s) = sidecar.as_mut() {
        s["instance_hash"] = json!(inst.content_hash());
    }
    match &a.out {
        Some(path) => std::fs::write(path, inst.to_text()).map_err(io_err(path))?,
        None => out.write_all(inst.to_text().as_bytes()).map_err(out_err)?,
    }
    if let Some(s) = sidecar {
        let path = a.sidecar.clone().or_else(|| a.out.as_ref().map(|o| PathBuf::from(format!("{}.planted.json", o.display()))));
        match path {
            Some(p) => write_json(&p, &s)?,
            None => eprintln!("{s}"),
        }
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, out: &mut impl Write) -> Result<(), CliError> {
    let overrides = a.tuning.overrides(a.allow_incomplete)?;
    let inst = match load(&a.instance)? {
        Instance::Nae3(i) => i,
        Instance::Kcsp(_) => return Err(CliError::Input("solve needs a NAE-3-SAT instance".into())),
    };
    let cfg = overrides.resolve(inst.n())?;
    let path = a.instance.display().to_string();
    let outcome = pipeline::solve_nae(&inst, &cfg, Some(&path))?;
    let r = &outcome.report;
    if let Some(p) = &a.report {
        write_json(p, r)?;
    }
    if let Some(p) = &a.emit_trace {
        write_json(p, &outcome.trace)?;
    }
    if let Some(p) = &a.emit_mps {
        let lp = build_sa_lp_partial(&inst, r.lp.degree_solved, cfg.max_lp_variables)?;
        let file = std::fs::File::create(p).map_err(io_err(p))?;
        lp.write_mps(std::io::BufWriter::new(file)).map_err(io_err(p))?;
    }
    let val = r.output("round-pd").map(|o| o.val).unwrap_or(f64::NAN);
    let opt = r.opt.map_or("-".to_string(), |o| format!("{o}"));
    writeln!(
        out,
        "val {val} lp {} opt {opt} degree {}/{} stages {} assignment {}",
        r.lp_value, r.lp.degree_solved, r.lp.degree, r.rounding.stages, r.assignment
    )
    .map_err(out_err)
}

#[derive(Serialize)]
struct DecideReport {
    schema: &'static str,
    tool_version: &'static str,
    command: &'static str,
    instance: InstanceInfo,
    check: CheckMode,
    shuffle_seed: Option<u64>,
    survivor_cap_multiple: f64,
    verdict: &'static str,
    count: usize,
    max_survivors: usize,
    max_ratio: f64,
    witness: Option<String>,
    constraint_checks: u64,
    order: Vec<usize>,
    steps: Vec<StepStat>,
    wall_time_s: f64,
}

fn cmd_decide(a: &DecideArgs, out: &mut impl Write) -> Result<(), CliError> {
    let start = Instant::now();
    let raw = load(&a.instance)?;
    let inst = match &raw {
        Instance::Kcsp(i) => i.clone(),
        Instance::Nae3(i) => i.to_kcsp()?,
    };
    let opts = DecideOptions {
        check: if a.full_check { CheckMode::Full } else { CheckMode::Incremental },
        shuffle_seed: a.seed,
        survivor_cap_multiple: a.survivor_cap,
    };
    let d = decide_csp_with(&inst, &opts).map_err(|e| match e {
        DecideError::Instance(e) => CliError::Input(e.to_string()),
        other => CliError::Internal(other.to_string()),
    })?;
    if let Some(w) = d.witness() {
        let v = inst.violations(w)?;
        if v != 0 {
            return Err(CliError::Internal(format!("witness {w} violates {v} constraints")));
        }
    }
    let verdict = if d.satisfiable() { "yes" } else { "no" };
    writeln!(out, "{verdict}").map_err(out_err)?;
    if a.emit_witness {
        if let Some(w) = d.witness() {
            writeln!(out, "{w}").map_err(out_err)?;
        }
    }
    if let Some(p) = &a.report {
        let ratios = d.steps.iter().map(|s| s.ratio);
        let report = DecideReport {
            schema: REPORT_SCHEMA,
            tool_version: TOOL_VERSION,
            command: "decide",
            instance: InstanceInfo::new(&raw, Some(&a.instance.display().to_string())),
            check: opts.check,
            shuffle_seed: opts.shuffle_seed,
            survivor_cap_multiple: opts.survivor_cap_multiple,
            verdict,
            count: d.survivors.len(),
            max_survivors: d.max_survivors(),
            max_ratio: ratios.fold(0.0, f64::max),
            witness: d.witness().map(|w| w.to_string()),
            constraint_checks: d.constraint_checks,
            order: d.order.clone(),
            steps: d.steps.clone(),
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        write_json(p, &report)?;
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs, out: &mut impl Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.suite).map_err(io_err(&a.suite))?;
    let suite = bench::Suite::from_toml(&text)?;
    let jobs = a.jobs.or(suite.jobs).unwrap_or(1);
    let agg = bench::bench_to_dir(&suite, jobs, &a.out_dir)?;
    let median = agg.median_ratio.map_or("-".to_string(), |m| format!("{m}"));
    writeln!(out, "runs {} completed {} failed {} median_ratio {median}", agg.runs, agg.completed, agg.failed)
        .map_err(out_err)?;
    if agg.failed > 0 {
        return Err(CliError::Internal(format!("{} of {} runs failed", agg.failed, agg.runs)));
    }
    Ok(())
}

fn cmd_oracle(a: &OracleArgs, out: &mut impl Write) -> Result<(), CliError> {
    let start = Instant::now();
    let raw = load(&a.instance)?;
    let info = InstanceInfo::new(&raw, Some(&a.instance.display().to_string()));
    let too_large = |e: crate::oracle::OracleError| CliError::Input(e.to_string());
    let report = if a.exhaustive {
        let inst = match &raw {
            Instance::Kcsp(i) => i.clone(),
            Instance::Nae3(i) => i.to_kcsp()?,
        };
        inst.require_complete()?;
        let sols = kcsp_satisfying(&inst).map_err(too_large)?;
        let verdict = if sols.is_empty() { "no" } else { "yes" };
        writeln!(out, "{verdict}\ncount {}", sols.len()).map_err(out_err)?;
        json!({ "verdict": verdict, "count": sols.len(), "first": sols.first().map(|s| s.to_string()) })
    } else {
        let Instance::Nae3(inst) = &raw else {
            return Err(CliError::Usage("optimum search needs a NAE-3-SAT instance; use --exhaustive for k-CSPs".into()));
        };
        let (alpha, opt) = brute_opt(inst).map_err(too_large)?;
        let violations = inst.violations(&alpha)?;
        writeln!(out, "opt {opt} violations {violations} assignment {alpha}").map_err(out_err)?;
        json!({ "opt": opt, "violations": violations, "assignment": alpha.to_string() })
    };
    if let Some(p) = &a.report {
        let mut full = json!({
            "schema": REPORT_SCHEMA,
            "tool_version": TOOL_VERSION,
            "command": "oracle",
            "instance": info,
            "wall_time_s": start.elapsed().as_secs_f64(),
        });
        for (k, v) in report.as_object().expect("object") {
            full[k] = v.clone();
        }
        write_json(p, &full)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_are_usage() {
        assert_eq!(run(["ccsp", "frobnicate"]), 2);
        assert_eq!(run(["ccsp", "gen", "random"]), 2);
        assert_eq!(run(["ccsp", "gen", "random", "-n", "5", "-p", "0.1"]), 2);
        assert_eq!(run(["ccsp", "solve", "/nonexistent/file"]), 3);
    }
}
