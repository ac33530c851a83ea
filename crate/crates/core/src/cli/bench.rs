//! Seeded benchmark suites over planted instances.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::instance::{gen_planted_nae3, Instance};
use crate::rounding::Branch;
use crate::subsets::binom;

use super::config::Overrides;
use super::pipeline::{solve_nae, REPORT_SCHEMA, TOOL_VERSION};
use super::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: Vec<usize>,
    pub p: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub degree: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub name: String,
    pub degree: Option<usize>,
    pub jobs: Option<usize>,
    pub grid: Option<Grid>,
    #[serde(default)]
    pub runs: Vec<RunSpec>,
    #[serde(default)]
    pub config: Overrides,
}

impl Suite {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("suite: {e}")))
    }

    /// Grid runs (`n`, then `p`, then seed) followed by the explicit runs.
    pub fn expand(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        if let Some(g) = &self.grid {
            for &n in &g.n {
                for &p in &g.p {
                    for &seed in &g.seeds {
                        out.push(RunSpec { n, p, seed, degree: None });
                    }
                }
            }
        }
        out.extend(self.runs.iter().cloned());
        for r in &mut out {
            r.degree = r.degree.or(self.degree);
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchRecord {
    pub index: usize,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub degree: Option<usize>,
    pub instance_hash: Option<String>,
    pub planted_val: Option<f64>,
    pub lp_value: Option<f64>,
    pub degree_solved: Option<usize>,
    pub degraded: Option<bool>,
    pub lifted: Option<bool>,
    pub val: Option<f64>,
    /// `val / max(lp_value, 1/C(n,3))`.
    pub ratio: Option<f64>,
    pub val_simple: Option<f64>,
    pub opt: Option<f64>,
    pub stages: Option<usize>,
    pub final_branch: Option<Branch>,
    pub wall_s: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub p: f64,
    pub runs: usize,
    pub median_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Aggregate {
    pub schema: String,
    pub tool_version: String,
    pub suite: String,
    pub runs: usize,
    pub completed: usize,
    pub failed: usize,
    pub median_ratio: Option<f64>,
    pub groups: Vec<GroupSummary>,
    pub mean_stages: Option<f64>,
    pub total_wall_s: f64,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

fn run_one(index: usize, spec: &RunSpec, base: &Overrides) -> BenchRecord {
    let start = Instant::now();
    let mut rec = BenchRecord {
        index,
        n: spec.n,
        p: spec.p,
        seed: spec.seed,
        degree: spec.degree,
        instance_hash: None,
        planted_val: None,
        lp_value: None,
        degree_solved: None,
        degraded: None,
        lifted: None,
        val: None,
        ratio: None,
        val_simple: None,
        opt: None,
        stages: None,
        final_branch: None,
        wall_s: 0.0,
        error: None,
    };
    let result = (|| -> Result<(), CliError> {
        let planted = gen_planted_nae3(spec.n, spec.p, spec.seed)?;
        let inst = planted.instance;
        rec.instance_hash = Some(Instance::Nae3(inst.clone()).content_hash());
        rec.planted_val = Some(planted.violated_count as f64 / inst.num_constraints() as f64);
        let flags = Overrides { degree: spec.degree, seed: Some(spec.seed), ..Default::default() };
        let cfg = flags.over(base).resolve(spec.n)?;
        let out = solve_nae(&inst, &cfg, None)?;
        let r = &out.report;
        let val = r.output("round-pd").map(|o| o.val).unwrap_or(f64::NAN);
        rec.lp_value = Some(r.lp_value);
        rec.degree_solved = Some(r.lp.degree_solved);
        rec.degraded = Some(r.lp.degraded);
        rec.lifted = Some(r.lp.lift.is_some());
        rec.val = Some(val);
        rec.ratio = Some(val / r.lp_value.max(1.0 / binom(spec.n, 3) as f64));
        rec.val_simple = r.output("round-simple").map(|o| o.val);
        rec.opt = r.opt;
        rec.stages = Some(r.rounding.stages);
        rec.final_branch = r.rounding.final_branch;
        Ok(())
    })();
    if let Err(e) = result {
        rec.error = Some(e.to_string());
    }
    rec.wall_s = start.elapsed().as_secs_f64();
    rec
}

/// Execute every run of `suite` on `jobs` worker threads; records come back in suite order.
pub fn run_suite(suite: &Suite, jobs: usize) -> Vec<BenchRecord> {
    let specs = suite.expand();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<BenchRecord>>> = Mutex::new(vec![None; specs.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(specs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= specs.len() {
                    break;
                }
                let rec = run_one(i, &specs[i], &suite.config);
                slots.lock().expect("bench worker panicked")[i] = Some(rec);
            });
        }
    });
    slots.into_inner().expect("bench worker panicked").into_iter().map(|r| r.expect("every run recorded")).collect()
}

pub fn aggregate(suite: &Suite, records: &[BenchRecord]) -> Aggregate {
    let ok: Vec<&BenchRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let ratios: Vec<f64> = ok.iter().filter_map(|r| r.ratio).collect();
    let mut groups: Vec<GroupSummary> = Vec::new();
    for r in records {
        if !groups.iter().any(|g| g.n == r.n && g.p == r.p) {
            let rs: Vec<f64> = ok.iter().filter(|o| o.n == r.n && o.p == r.p).filter_map(|o| o.ratio).collect();
            let runs = records.iter().filter(|o| o.n == r.n && o.p == r.p).count();
            groups.push(GroupSummary { n: r.n, p: r.p, runs, median_ratio: median(&rs) });
        }
    }
    let stages: Vec<f64> = ok.iter().filter_map(|r| r.stages).map(|s| s as f64).collect();
    Aggregate {
        schema: REPORT_SCHEMA.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        suite: suite.name.clone(),
        runs: records.len(),
        completed: ok.len(),
        failed: records.len() - ok.len(),
        median_ratio: median(&ratios),
        groups,
        mean_stages: (!stages.is_empty()).then(|| stages.iter().sum::<f64>() / stages.len() as f64),
        total_wall_s: records.iter().map(|r| r.wall_s).sum(),
    }
}

/// Run the suite and write `records.jsonl` and `aggregate.json` into `out_dir`.
pub fn bench_to_dir(suite: &Suite, jobs: usize, out_dir: &Path) -> Result<Aggregate, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Input(format!("{}: {e}", out_dir.display())))?;
    let records = run_suite(suite, jobs);
    let mut lines = String::new();
    for r in &records {
        lines.push_str(&serde_json::to_string(r).map_err(|e| CliError::Internal(e.to_string()))?);
        lines.push('\n');
    }
    let agg = aggregate(suite, &records);
    let write = |name: &str, text: String| {
        std::fs::write(out_dir.join(name), text).map_err(|e| CliError::Input(format!("{name}: {e}")))
    };
    write("records.jsonl", lines)?;
    write("aggregate.json", serde_json::to_string_pretty(&agg).map_err(|e| CliError::Internal(e.to_string()))? + "\n")?;
    Ok(agg)
}
