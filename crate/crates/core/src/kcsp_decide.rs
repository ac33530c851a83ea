//! Satisfiability of complete k-CSPs by extending every satisfying assignment
//! of a growing variable prefix.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::instance::{Assignment, InstanceError, KcspInstance, TruthTable};
use crate::subsets::{encode, Combinations};

/// Default multiple of `n^{k−1}` above which the survivor list is reported as anomalous.
pub const DEFAULT_SURVIVOR_CAP_MULTIPLE: f64 = 64.0;

#[derive(Debug, Error)]
pub enum DecideError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("{survivors} survivors after {step} variables exceed the cap {cap} ({multiple}·n^(k−1))")]
    SurvivorCap { step: usize, survivors: usize, cap: usize, multiple: f64 },
    #[error("invalid variable order: {0}")]
    Order(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// Only constraints containing the newest variable.
    #[default]
    Incremental,
    /// Every constraint inside the prefix.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecideOptions {
    pub check: CheckMode,
    /// Shuffle the variable order with this seed; input order otherwise.
    pub shuffle_seed: Option<u64>,
    pub survivor_cap_multiple: f64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions { check: CheckMode::Incremental, shuffle_seed: None, survivor_cap_multiple: DEFAULT_SURVIVOR_CAP_MULTIPLE }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepStat {
    /// Prefix length `i`.
    pub step: usize,
    pub variable: usize,
    pub survivors: usize,
    /// `survivors / i^{k−1}`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Decision {
    pub order: Vec<usize>,
    /// All satisfying assignments, lexicographically sorted.
    pub survivors: Vec<Assignment>,
    pub steps: Vec<StepStat>,
    pub constraint_checks: u64,
}

impl Decision {
    pub fn satisfiable(&self) -> bool {
        !self.survivors.is_empty()
    }

    pub fn witness(&self) -> Option<&Assignment> {
        self.survivors.first()
    }

    pub fn max_survivors(&self) -> usize {
        self.steps.iter().map(|s| s.survivors).max().unwrap_or(0)
    }
}

/// Constraint with its members given as prefix positions, in the table's variable order.
struct Check<'a> {
    table: &'a TruthTable,
    positions: Vec<usize>,
}

fn checks_for<'a>(inst: &'a KcspInstance, order: &[usize], i: usize, mode: CheckMode) -> Vec<Check<'a>> {
    let k = inst.k();
    let mut out = Vec::new();
    let mut push = |pos: Vec<usize>| {
        let mut members: Vec<(usize, usize)> = pos.iter().map(|&p| (order[p], p)).collect();
        members.sort_unstable();
        let vars: Vec<usize> = members.iter().map(|m| m.0).collect();
        let table = inst.table(&vars).expect("complete instance");
        out.push(Check { table, positions: members.iter().map(|m| m.1).collect() });
    };
    match mode {
        CheckMode::Incremental => {
            for mut s in Combinations::new(i - 1, k - 1) {
                s.push(i - 1);
                push(s);
            }
        }
        CheckMode::Full => {
            for s in Combinations::new(i, k) {
                push(s);
            }
        }
    }
    out
}

fn resolve_order(n: usize, opts: &DecideOptions) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = opts.shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

/// Decide with default options.
pub fn decide_csp(inst: &KcspInstance) -> Result<Decision, DecideError> {
    decide_csp_with(inst, &DecideOptions::default())
}

pub fn decide_csp_with(inst: &KcspInstance, opts: &DecideOptions) -> Result<Decision, DecideError> {
    decide_in_order(inst, &resolve_order(inst.n(), opts), opts)
}

/// Decide with an explicit variable order (a permutation of `0..n`).
pub fn decide_in_order(inst: &KcspInstance, order: &[usize], opts: &DecideOptions) -> Result<Decision, DecideError> {
    inst.require_complete()?;
    let (n, k) = (inst.n(), inst.k());
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
        return Err(DecideError::Order(format!("expected a permutation of 0..{n}")));
    }
    let cap = (opts.survivor_cap_multiple * (n as f64).powi(k as i32 - 1)).ceil() as usize;
    let start = (k - 1).min(n);
    let mut survivors: Vec<Vec<bool>> =
        (0..1usize << start).map(|c| (0..start).map(|j| c >> (start - 1 - j) & 1 == 1).collect()).collect();
    let ratio = |i: usize, s: usize| s as f64 / (i.max(1) as f64).powi(k as i32 - 1);
    let mut steps: Vec<StepStat> = (1..=start)
        .map(|i| {
            let s = 1usize << i;
            StepStat { step: i, variable: order[i - 1], survivors: s, ratio: ratio(i, s) }
        })
        .collect();
    let mut constraint_checks = 0u64;
    for i in start + 1..=n {
        let checks = checks_for(inst, order, i, opts.check);
        let mut next = Vec::with_capacity(2 * survivors.len());
        for prefix in &survivors {
            for b in [false, true] {
                let mut cand = prefix.clone();
                cand.push(b);
                let ok = checks.iter().all(|c| {
                    constraint_checks += 1;
                    c.table.satisfied(encode(c.positions.iter().map(|&p| cand[p])))
                });
                if ok {
                    next.push(cand);
                }
            }
        }
        survivors = next;
        steps.push(StepStat { step: i, variable: order[i - 1], survivors: survivors.len(), ratio: ratio(i, survivors.len()) });
        if survivors.len() > cap {
            return Err(DecideError::SurvivorCap { step: i, survivors: survivors.len(), cap, multiple: opts.survivor_cap_multiple });
        }
    }
    let mut out: Vec<Assignment> = survivors
        .into_iter()
        .map(|s| {
            let mut bits = vec![false; n];
            for (p, b) in s.into_iter().enumerate() {
                bits[order[p]] = b;
            }
            Assignment(bits)
        })
        .collect();
    out.sort_by(|a, b| a.bits().cmp(b.bits()));
    Ok(Decision { order: order.to_vec(), survivors: out, steps, constraint_checks })
}

#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub count: usize,
    pub max_survivors: usize,
    /// `survivors_i / i^{k−1}` per step.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

pub fn count_satisfying(inst: &KcspInstance) -> Result<CountReport, DecideError> {
    let d = decide_csp(inst)?;
    let ratios: Vec<f64> = d.steps.iter().map(|s| s.ratio).collect();
    Ok(CountReport {
        count: d.survivors.len(),
        max_survivors: d.max_survivors(),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
    })
}
