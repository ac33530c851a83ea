//! Conditioning-and-thresholding rounding of a pseudodistribution into an assignment.
//!
//! A stage works on the unfixed set `V_U`: it solves small residues exactly,
//! hands residues with high induced value to the Min-2-SAT rounding, and
//! otherwise conditions on a sampled tuple, fixes every variable whose bias is
//! below a threshold of bounded aggregate increase, and moves on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{nae_violated, Assignment, InstanceError, Nae3Instance, PartialAssignment, Polarity};
use crate::min2sat::{induce_2sat, kprt_round, pd_to_metric, twosat_brute_preferring, Min2SatError};
use crate::oracle::{completion_opt, OracleError, BRUTE_MAX_N};
use crate::pseudodist::{PdError, PseudoDistribution, SUPPORT_FLOOR};
use crate::subsets::{binom, project};

/// Absolute slack on the bounded-increase inequality.
pub const THRESHOLD_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RoundingError {
    #[error("invalid rounding config: {0}")]
    Config(String),
    #[error("conditioning on {needed} variables needs degree {}, have {degree}", needed + 3)]
    DegreeBudget { needed: usize, degree: usize },
    #[error(transparent)]
    Pd(#[from] PdError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Min2Sat(#[from] Min2SatError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingConfig {
    pub tau: f64,
    pub epsilon: f64,
    pub t_pairs: usize,
    pub r_max: usize,
    pub samples_per_stage: usize,
    pub n_bruteforce: usize,
    pub delta_2sat_threshold_factor: f64,
    pub log_floor: f64,
    pub twosat_brute_max: usize,
    pub seed: u64,
    /// Accept instances with missing constraints.
    #[serde(default)]
    pub allow_incomplete: bool,
}

impl RoundingConfig {
    /// Defaults for `n` variables: `τ = L²`, `ε = 1/(10L)` with `L = max(log₂ n, 2)`.
    pub fn for_n(n: usize) -> Self {
        let l = log_scale(n, 2.0);
        RoundingConfig {
            tau: l * l,
            epsilon: 1.0 / (10.0 * l),
            t_pairs: 2,
            r_max: 4,
            samples_per_stage: 200,
            n_bruteforce: 14,
            delta_2sat_threshold_factor: 0.1,
            log_floor: 2.0,
            twosat_brute_max: crate::min2sat::TWOSAT_BRUTE_MAX,
            seed: 0,
            allow_incomplete: false,
        }
    }

    pub fn validate(&self) -> Result<(), RoundingError> {
        let bad = |m: &str| Err(RoundingError::Config(m.to_string()));
        if !(self.tau >= 1.0) {
            return bad("tau must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.t_pairs < 1 {
            return bad("t_pairs must be at least 1");
        }
        if self.n_bruteforce < 3 || self.n_bruteforce > BRUTE_MAX_N {
            return Err(RoundingError::Config(format!("n_bruteforce must lie in [3, {BRUTE_MAX_N}]")));
        }
        if !(self.log_floor > 0.0) || !(self.delta_2sat_threshold_factor > 0.0) {
            return bad("log_floor and the 2-SAT factor must be positive");
        }
        Ok(())
    }

    /// `δ` above which a stage switches to the Min-2-SAT rounding.
    pub fn twosat_threshold(&self) -> f64 {
        self.delta_2sat_threshold_factor / self.tau
    }
}

/// `L = max(log₂ n, log_floor)`.
pub fn log_scale(n: usize, log_floor: f64) -> f64 {
    (n.max(1) as f64).log2().max(log_floor)
}

/// Violation mass by number of members in `V_U`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LpClassValues {
    pub lp0: f64,
    pub lp1: f64,
    pub lp2: f64,
    pub lp3: f64,
}

impl LpClassValues {
    pub fn from_array(a: [f64; 4]) -> Self {
        LpClassValues { lp0: a[0], lp1: a[1], lp2: a[2], lp3: a[3] }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.lp0, self.lp1, self.lp2, self.lp3]
    }

    pub fn total(&self) -> f64 {
        self.lp0 + self.lp1 + self.lp2 + self.lp3
    }
}

/// Variables of `W` with `min_b μ_v(b) ≤ ξ`, and their ruling values.
pub fn fixed_set(mu: &PseudoDistribution, w: &[usize], xi: f64) -> (Vec<usize>, Vec<bool>) {
    let mut f = Vec::new();
    let mut omega = Vec::new();
    for &v in w {
        let [p0, p1] = mu.single(v);
        if p0.min(p1) <= xi && p0 != p1 {
            f.push(v);
            omega.push(p1 > p0);
        }
    }
    (f, omega)
}

fn membership(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v] = true;
    }
    m
}

pub fn lp_class_values(inst: &Nae3Instance, mu: &PseudoDistribution, v_u: &[usize]) -> LpClassValues {
    let unfixed = membership(inst.n(), v_u);
    let mut lp = [0.0; 4];
    inst.for_each_constraint(|_, t, p| {
        let i = t.iter().filter(|&&v| unfixed[v]).count();
        lp[i] += mu.triple_violation(t, p);
    });
    LpClassValues::from_array(lp)
}

fn aggregate_with_scale(lpv: &LpClassValues, tau: f64, l: f64) -> f64 {
    tau * l.powi(3) * lpv.lp3 + l * l * lpv.lp2 + l * lpv.lp1 + lpv.lp0
}

/// `τ·L³·lp3 + L²·lp2 + L·lp1 + lp0` with `L = max(log₂ n, log_floor)`.
pub fn aggregate_value(lpv: &LpClassValues, tau: f64, n: usize, log_floor: f64) -> f64 {
    aggregate_with_scale(lpv, tau, log_scale(n, log_floor))
}

/// `{τδ, 2τδ}` plus every bias of `V_U` inside `[τδ, 2τδ]`, ascending and deduplicated.
pub fn threshold_candidates(mu: &PseudoDistribution, v_u: &[usize], tau: f64, delta: f64) -> Vec<f64> {
    let (lo, hi) = (tau * delta, 2.0 * tau * delta);
    let mut out = vec![lo, hi];
    for &v in v_u {
        let [p0, p1] = mu.single(v);
        let b = p0.min(p1);
        if (lo..=hi).contains(&b) {
            out.push(b);
        }
    }
    out.retain(|&x| x < 0.5);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Violation probability of the constraint on `t` after fixing the members marked in `fixed`.
fn fixed_triple_violation(mu: &PseudoDistribution, t: [usize; 3], pol: [Polarity; 3], fixed: &[Option<bool>]) -> f64 {
    let vals = [fixed[t[0]], fixed[t[1]], fixed[t[2]]];
    if vals.iter().all(Option::is_none) {
        return mu.triple_violation(t, pol);
    }
    let local = mu.local_unchecked(&t);
    let free: Vec<usize> = (0..3).filter(|&i| vals[i].is_none()).collect();
    let marg = crate::pseudodist::marginalize(&local, 3, &free);
    let mut total = 0.0;
    for a in 0..8usize {
        let bits = [a >> 2 & 1 == 1, a >> 1 & 1 == 1, a & 1 == 1];
        let agrees = (0..3).all(|i| vals[i].is_none_or(|b| b == bits[i]));
        if agrees && nae_violated(pol, bits) {
            total += marg[project(a, 3, &free)];
        }
    }
    total
}

/// `Δ[j][i]`: violation mass, after fixing `F ← ω`, of constraints with `j`
/// members in `V_U` and `i` members in `V_U ∖ F`.
fn transfer(inst: &Nae3Instance, mu: &PseudoDistribution, v_u: &[usize], f: &[usize], omega: &[bool]) -> [[f64; 4]; 4] {
    let unfixed = membership(inst.n(), v_u);
    let mut fixed = vec![None; inst.n()];
    for (&v, &b) in f.iter().zip(omega) {
        fixed[v] = Some(b);
    }
    let mut delta = [[0.0; 4]; 4];
    inst.for_each_constraint(|_, t, p| {
        let j = t.iter().filter(|&&v| unfixed[v]).count();
        let i = t.iter().filter(|&&v| unfixed[v] && fixed[v].is_none()).count();
        delta[j][i] += fixed_triple_violation(mu, t, p, &fixed);
    });
    delta
}

/// Lower-triangular `Δ_{j,i}` for the threshold `θ`; row index `j`, column index `i`.
pub fn delta_transfer_diag(inst: &Nae3Instance, mu: &PseudoDistribution, v_u: &[usize], theta: f64) -> [[f64; 4]; 4] {
    let (f, omega) = fixed_set(mu, v_u, theta);
    transfer(inst, mu, v_u, &f, &omega)
}

/// Class values after fixing, `LP'_i = Σ_{j ≥ i} Δ_{j,i}`.
pub fn transfer_column_sums(delta: &[[f64; 4]; 4]) -> LpClassValues {
    let mut out = [0.0; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = (i..4).map(|j| delta[j][i]).sum();
    }
    LpClassValues::from_array(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdCheck {
    pub theta: f64,
    pub fixed: usize,
    /// `A'(μ') − A(μ)`.
    pub increase: f64,
    /// `(6/L)·A(μ) + 12·τ·δ·L²·C(|V_U|, 3)`.
    pub bound: f64,
    pub passes: bool,
}

/// Membership of `θ` in the set of thresholds with bounded aggregate increase.
pub fn bounded_increase_check(
    inst: &Nae3Instance,
    mu: &PseudoDistribution,
    v_u: &[usize],
    theta: f64,
    tau: f64,
    delta: f64,
    l: f64,
) -> ThresholdCheck {
    let before = aggregate_with_scale(&lp_class_values(inst, mu, v_u), tau, l);
    check_with_base(inst, mu, v_u, theta, tau, delta, l, before)
}

#[allow(clippy::too_many_arguments)]
fn check_with_base(
    inst: &Nae3Instance,
    mu: &PseudoDistribution,
    v_u: &[usize],
    theta: f64,
    tau: f64,
    delta: f64,
    l: f64,
    before: f64,
) -> ThresholdCheck {
    let (f, omega) = fixed_set(mu, v_u, theta);
    let after = aggregate_with_scale(&transfer_column_sums(&transfer(inst, mu, v_u, &f, &omega)), tau, l);
    let increase = after - before;
    let bound = 6.0 / l * before + 12.0 * tau * delta * l * l * binom(v_u.len(), 3) as f64;
    ThresholdCheck { theta, fixed: f.len(), increase, bound, passes: increase <= bound + THRESHOLD_SLACK }
}

/// Outcome of the sampled conditioning search.
#[derive(Clone, Debug)]
pub struct Conditioning {
    /// Tuple as drawn, possibly with repeats.
    pub tuple: Vec<usize>,
    /// Sorted distinct members of the tuple.
    pub set: Vec<usize>,
    pub gamma: Vec<bool>,
    pub fixed_count: usize,
    pub aggregate: f64,
    /// Whether the fixed-count condition held as well as the aggregate one.
    pub both: bool,
    pub pd: PseudoDistribution,
}

fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Sampled search for a conditioning `(C, γ)` that fixes many variables without inflating the aggregate.
pub fn condition_search(
    inst: &Nae3Instance,
    mu: &PseudoDistribution,
    v_u: &[usize],
    delta: f64,
    cfg: &RoundingConfig,
    rng: &mut impl Rng,
) -> Result<Option<Conditioning>, RoundingError> {
    let sizes: Vec<usize> =
        (0..=cfg.r_max).map(|r| 2 * cfg.t_pairs + r).filter(|s| s + 3 <= mu.degree()).collect();
    if sizes.is_empty() {
        return Err(RoundingError::DegreeBudget { needed: 2 * cfg.t_pairs, degree: mu.degree() });
    }
    let l = log_scale(inst.n(), cfg.log_floor);
    let base = aggregate_with_scale(&lp_class_values(inst, mu, v_u), cfg.tau, l);
    let xi = cfg.tau * delta;
    let mut fallback: Option<Conditioning> = None;
    for s in 0..cfg.samples_per_stage {
        let size = sizes[s % sizes.len()];
        let tuple: Vec<usize> = (0..size).map(|_| v_u[rng.random_range(0..v_u.len())]).collect();
        let mut set = tuple.clone();
        set.sort_unstable();
        set.dedup();
        let local = mu.marginal(&set)?.probs;
        let g = sample_index(&local, rng);
        if local[g] <= SUPPORT_FLOOR {
            continue;
        }
        let pd = mu.condition(&set, g)?;
        let (f, _) = fixed_set(&pd, v_u, xi);
        let aggregate = aggregate_with_scale(&lp_class_values(inst, &pd, v_u), cfg.tau, l);
        if aggregate > (1.0 + cfg.epsilon) * base + THRESHOLD_SLACK {
            continue;
        }
        let k = set.len();
        let gamma = (0..k).map(|i| g >> (k - 1 - i) & 1 == 1).collect();
        let both = f.len() as f64 >= v_u.len() as f64 / 100.0;
        let cand = Conditioning { tuple, set, gamma, fixed_count: f.len(), aggregate, both, pd };
        if both {
            return Ok(Some(cand));
        }
        if fallback.as_ref().is_none_or(|b| cand.fixed_count > b.fixed_count) {
            fallback = Some(cand);
        }
    }
    Ok(fallback)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Bruteforce,
    Min2sat,
    Threshold,
    Stall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CondStatus {
    Found,
    AggregateOnly,
    None,
    DegreeBudget,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub n_unfixed: usize,
    pub delta: f64,
    pub degree: usize,
    pub cond_size: Option<usize>,
    pub cond_status: CondStatus,
    pub fixed_count: usize,
    pub theta: f64,
    pub candidates: usize,
    pub threshold_exists: bool,
    pub lp0_before: f64,
    pub lp1_before: f64,
    pub lp2_before: f64,
    pub lp3_before: f64,
    pub lp0_after: f64,
    pub lp1_after: f64,
    pub lp2_after: f64,
    pub lp3_after: f64,
    pub aggregate_before: f64,
    pub aggregate_after: f64,
    pub branch: Branch,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoSatSummary {
    pub m: usize,
    pub clauses: usize,
    pub dropped: usize,
    pub violated: usize,
    pub method: &'static str,
    pub metric_objective: Option<f64>,
    /// `violated / ((log₂ 2m)²·φ)` for the region-growing rounding when `φ > 0`.
    pub c_round: Option<f64>,
    pub dimacs: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RoundingTrace {
    pub stages: Vec<StageRecord>,
    /// Recursion depth reached (number of thresholding stages).
    pub depth: usize,
    pub twosat: Option<TwoSatSummary>,
    pub warnings: Vec<String>,
}

impl RoundingTrace {
    pub fn final_branch(&self) -> Option<Branch> {
        self.stages.last().map(|s| s.branch)
    }
}

fn record(
    stage: usize,
    v_u: &[usize],
    delta: f64,
    degree: usize,
    before: LpClassValues,
    after: LpClassValues,
    tau: f64,
    l: f64,
    branch: Branch,
) -> StageRecord {
    StageRecord {
        stage,
        n_unfixed: v_u.len(),
        delta,
        degree,
        cond_size: None,
        cond_status: CondStatus::Skipped,
        fixed_count: 0,
        theta: 0.0,
        candidates: 0,
        threshold_exists: false,
        lp0_before: before.lp0,
        lp1_before: before.lp1,
        lp2_before: before.lp2,
        lp3_before: before.lp3,
        lp0_after: after.lp0,
        lp1_after: after.lp1,
        lp2_after: after.lp2,
        lp3_after: after.lp3,
        aggregate_before: aggregate_with_scale(&before, tau, l),
        aggregate_after: aggregate_with_scale(&after, tau, l),
        branch,
    }
}

fn check_inputs(inst: &Nae3Instance, mu: &PseudoDistribution, cfg: &RoundingConfig) -> Result<(), RoundingError> {
    cfg.validate()?;
    if !cfg.allow_incomplete {
        inst.require_complete()?;
    }
    if mu.n() != inst.n() {
        return Err(PdError::Invalid("instance and pseudodistribution sizes differ".into()).into());
    }
    if mu.degree() < 3 {
        return Err(PdError::DegreeTooLow { degree: mu.degree(), required: 3 }.into());
    }
    Ok(())
}

/// Most biased variable of `w` and its ruling value (ties: lowest index, value 0).
fn most_biased(mu: &PseudoDistribution, w: &[usize]) -> (usize, bool) {
    let mut best = (w[0], false, -1.0);
    for &v in w {
        let [p0, p1] = mu.single(v);
        if p0.max(p1) > best.2 {
            best = (v, p1 > p0, p0.max(p1));
        }
    }
    (best.0, best.1)
}

/// Round `mu` into an assignment, recording one trace record per stage.
pub fn round_pd(
    inst: &Nae3Instance,
    mu: &PseudoDistribution,
    cfg: &RoundingConfig,
) -> Result<(Assignment, RoundingTrace), RoundingError> {
    check_inputs(inst, mu, cfg)?;
    let n = inst.n();
    let l = log_scale(n, cfg.log_floor);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut alpha = PartialAssignment::unfixed(n);
    let mut mu = mu.clone();
    let mut trace = RoundingTrace::default();
    for stage in 0.. {
        let v_u = alpha.unfixed_vars();
        let before = lp_class_values(inst, &mu, &v_u);
        if v_u.len() <= cfg.n_bruteforce {
            let (a, _) = completion_opt(inst, &alpha)?;
            let after = lp_class_values(inst, &PseudoDistribution::point_mass(&a, 3), &[]);
            let delta = mu.val(inst, Some(&v_u))?;
            trace.stages.push(record(stage, &v_u, delta, mu.degree(), before, after, cfg.tau, l, Branch::Bruteforce));
            return Ok((a, trace));
        }
        let delta = mu.val(inst, Some(&v_u))?;
        if delta > cfg.twosat_threshold() {
            let a = twosat_stage(inst, &mu, &v_u, &mut alpha, cfg, &mut rng, &mut trace)?;
            let after = lp_class_values(inst, &PseudoDistribution::point_mass(&a, 3), &[]);
            trace.stages.push(record(stage, &v_u, delta, mu.degree(), before, after, cfg.tau, l, Branch::Min2sat));
            return Ok((a, trace));
        }

        let (tilde, cond_size, cond_status) = match condition_search(inst, &mu, &v_u, delta, cfg, &mut rng) {
            Ok(Some(c)) => {
                let status = if c.both { CondStatus::Found } else { CondStatus::AggregateOnly };
                (c.pd, Some(c.set.len()), status)
            }
            Ok(None) => (mu.clone(), None, CondStatus::None),
            Err(RoundingError::DegreeBudget { .. }) => (mu.clone(), None, CondStatus::DegreeBudget),
            Err(e) => return Err(e),
        };
        if tilde.degree() < 3 {
            trace.warnings.push(format!("stage {stage}: degree fell to {}", tilde.degree()));
        }
        let a_tilde = aggregate_with_scale(&lp_class_values(inst, &tilde, &v_u), cfg.tau, l);
        let candidates = threshold_candidates(&tilde, &v_u, cfg.tau, delta);
        let passing: Vec<f64> = candidates
            .iter()
            .map(|&theta| check_with_base(inst, &tilde, &v_u, theta, cfg.tau, delta, l, a_tilde))
            .filter(|c| c.passes)
            .map(|c| c.theta)
            .collect();
        let theta = passing.iter().copied().fold(0.0, f64::max);
        let (mut f, mut omega) = fixed_set(&tilde, &v_u, theta);
        let mut branch = Branch::Threshold;
        if f.is_empty() {
            let (v, b) = most_biased(&tilde, &v_u);
            f = vec![v];
            omega = vec![b];
            branch = Branch::Stall;
        }
        mu = tilde.fix(&f, &omega)?;
        for (&v, &b) in f.iter().zip(&omega) {
            alpha.set(v, b);
        }
        let rest = alpha.unfixed_vars();
        let after = lp_class_values(inst, &mu, &rest);
        let mut rec = record(stage, &v_u, delta, mu.degree(), before, after, cfg.tau, l, branch);
        rec.cond_size = cond_size;
        rec.cond_status = cond_status;
        rec.fixed_count = f.len();
        rec.theta = theta;
        rec.candidates = candidates.len();
        rec.threshold_exists = !passing.is_empty();
        trace.stages.push(rec);
        trace.depth += 1;
    }
    unreachable!("every stage fixes at least one variable")
}

fn twosat_stage(
    inst: &Nae3Instance,
    mu: &PseudoDistribution,
    v_u: &[usize],
    alpha: &mut PartialAssignment,
    cfg: &RoundingConfig,
    rng: &mut ChaCha8Rng,
    trace: &mut RoundingTrace,
) -> Result<Assignment, RoundingError> {
    let ts = induce_2sat(inst, v_u, alpha)?;
    let pref: Vec<bool> = v_u.iter().map(|&v| mu.single(v)[1] > 0.5).collect();
    let (x, violated, method, metric_objective, c_round) = if ts.m() <= cfg.twosat_brute_max {
        let (x, violated) = twosat_brute_preferring(&ts, Some(&pref), cfg.twosat_brute_max)?;
        (x, violated, "exhaustive", None, None)
    } else {
        let metric = pd_to_metric(&ts, mu)?;
        let out = kprt_round(&ts, &metric, rng)?;
        let scale = ((2 * ts.m()) as f64).log2().powi(2) * metric.objective;
        let c_round = (metric.objective > 0.0).then(|| out.violated as f64 / scale);
        (out.assignment, out.violated, "region-growing", Some(metric.objective), c_round)
    };
    for (&v, &b) in v_u.iter().zip(&x) {
        alpha.set(v, b);
    }
    trace.twosat = Some(TwoSatSummary {
        m: ts.m(),
        clauses: ts.clauses.len(),
        dropped: ts.dropped,
        violated,
        method,
        metric_objective,
        c_round,
        dimacs: ts.to_dimacs(),
    });
    Ok(alpha.to_total().expect("all variables assigned"))
}

/// Pair-conditioning baseline: condition on one sampled pair, fix at `τδ` (capped below ½), repeat.
pub fn round_simple(inst: &Nae3Instance, mu: &PseudoDistribution, cfg: &RoundingConfig) -> Result<Assignment, RoundingError> {
    check_inputs(inst, mu, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mu = mu.clone();
    let n = inst.n();
    loop {
        let v_u: Vec<usize> = (0..n)
            .filter(|&v| {
                let [p0, p1] = mu.single(v);
                p0.min(p1) > SUPPORT_FLOOR
            })
            .collect();
        if v_u.is_empty() {
            return Ok(Assignment((0..n).map(|v| mu.single(v)[1] > 0.5).collect()));
        }
        let delta = mu.val(inst, Some(&v_u))?;
        let tilde = if v_u.len() >= 2 && mu.degree() >= 5 {
            let i = rng.random_range(0..v_u.len());
            let mut j = rng.random_range(0..v_u.len() - 1);
            if j >= i {
                j += 1;
            }
            let pair = if v_u[i] < v_u[j] { [v_u[i], v_u[j]] } else { [v_u[j], v_u[i]] };
            let local = mu.marginal(&pair)?.probs;
            let g = sample_index(&local, &mut rng);
            mu.condition(&pair, g)?
        } else {
            mu.clone()
        };
        let theta = (cfg.tau * delta).min(0.5 - 1e-9);
        let (mut f, mut omega) = fixed_set(&tilde, &v_u, theta);
        if f.is_empty() {
            let (v, b) = most_biased(&tilde, &v_u);
            f = vec![v];
            omega = vec![b];
        }
        mu = tilde.fix(&f, &omega)?;
    }
}

/// Number of `u ∈ W` for which at least a `γ_rate` fraction of the pairs
/// `{v, w} ⊂ W` form a triple with `u` whose constraint is violated with
/// probability at most `γ_unsat` and whose `v`, `w` mapped literals agree with
/// probability at least `γ_fix`. The fraction is taken over all `C(|W|, 2)` pairs.
pub fn count_fixable(
    inst: &Nae3Instance,
    mu: &PseudoDistribution,
    w: &[usize],
    gamma_unsat: f64,
    gamma_fix: f64,
    gamma_rate: f64,
) -> Result<usize, RoundingError> {
    const TOL: f64 = 1e-12;
    if w.len() < 3 {
        return Err(RoundingError::Config("count_fixable needs |W| ≥ 3".into()));
    }
    if mu.degree() < 3 {
        return Err(PdError::DegreeTooLow { degree: mu.degree(), required: 3 }.into());
    }
    let k = w.len();
    // equal[a][b] = Pr[x_{w_a} = x_{w_b}]
    let mut equal = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let pair = if w[a] < w[b] { [w[a], w[b]] } else { [w[b], w[a]] };
            let p = mu.marginal(&pair)?.probs;
            equal[a][b] = p[0] + p[3];
            equal[b][a] = equal[a][b];
        }
    }
    let pairs = binom(k, 2) as f64;
    let mut count = 0;
    for u in 0..k {
        let mut good = 0usize;
        for a in 0..k {
            for b in a + 1..k {
                if a == u || b == u {
                    continue;
                }
                let mut t = [(w[u], u), (w[a], a), (w[b], b)];
                t.sort_unstable();
                let triple = [t[0].0, t[1].0, t[2].0];
                let Some(pol) = inst.polarity(triple) else { continue };
                if mu.triple_violation(triple, pol) > gamma_unsat + TOL {
                    continue;
                }
                let pos = |x: usize| t.iter().position(|e| e.1 == x).expect("member");
                let same = pol[pos(a)] == pol[pos(b)];
                let agree = if same { equal[a][b] } else { 1.0 - equal[a][b] };
                if agree >= gamma_fix - TOL {
                    good += 1;
                }
            }
        }
        if good as f64 >= gamma_rate * pairs - TOL {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_planted_nae3, gen_random_nae3};
    use crate::oracle::brute_opt;

    #[test]
    fn fixed_set_examples() {
        let mu = PseudoDistribution::product(&[0.99, 0.5, 0.0, 1.0], 3).unwrap();
        assert_eq!(fixed_set(&mu, &[0, 1, 2, 3], 0.05), (vec![0, 2, 3], vec![true, false, true]));
        assert_eq!(fixed_set(&mu, &[0, 1, 2, 3], 0.0), (vec![2, 3], vec![false, true]));
        assert_eq!(fixed_set(&mu, &[1], 0.49).0, Vec::<usize>::new());
    }

    #[test]
    fn aggregate_examples() {
        let ones = LpClassValues::from_array([1.0; 4]);
        assert_eq!(aggregate_value(&ones, 2.0, 16, 2.0), 149.0);
        assert_eq!(aggregate_value(&LpClassValues::default(), 2.0, 16, 2.0), 0.0);
        let a = aggregate_value(&ones, 4.0, 16, 2.0) - aggregate_value(&ones, 2.0, 16, 2.0);
        assert_eq!(a, 2.0 * 64.0);
    }

    #[test]
    fn class_values_partition_total() {
        let inst = gen_random_nae3(8, 2).unwrap();
        let mu = PseudoDistribution::product(&[0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9], 3).unwrap();
        let total = 56.0 * mu.val(&inst, None).unwrap();
        let all = lp_class_values(&inst, &mu, &(0..8).collect::<Vec<_>>());
        assert!((all.lp3 - total).abs() < 1e-12 && all.lp0 == 0.0);
        let none = lp_class_values(&inst, &mu, &[]);
        assert!((none.lp0 - total).abs() < 1e-12);
        let split = lp_class_values(&inst, &mu, &[1, 3, 4]);
        assert!((split.total() - total).abs() < 1e-9);
    }

    #[test]
    fn candidates_and_checks() {
        let mu = PseudoDistribution::product(&[0.5; 6], 3).unwrap();
        let c = threshold_candidates(&mu, &[0, 1, 2], 4.0, 0.01);
        assert_eq!(c, vec![0.04, 0.08]);
        let mu = PseudoDistribution::product(&[0.06, 0.5, 0.5], 3).unwrap();
        let c = threshold_candidates(&mu, &[0, 1, 2], 4.0, 0.01);
        assert_eq!(c.len(), 3);
        assert!((c[1] - 0.06).abs() < 1e-15);

        let inst = gen_random_nae3(6, 1).unwrap();
        let mu = PseudoDistribution::uniform(6, 3);
        let v_u: Vec<usize> = (0..6).collect();
        assert!(bounded_increase_check(&inst, &mu, &v_u, 0.0, 4.0, 0.01, 2.0).passes);
        let point = PseudoDistribution::point_mass(&Assignment(vec![true, false, true, true, false, false]), 3);
        assert!(bounded_increase_check(&inst, &point, &v_u, 0.01, 4.0, 0.0, 2.0).passes);
    }

    #[test]
    fn transfer_matches_materialized_fix() {
        let inst = gen_random_nae3(7, 5).unwrap();
        let mu = PseudoDistribution::product(&[0.03, 0.5, 0.97, 0.2, 0.1, 0.6, 0.01], 4).unwrap();
        let v_u = [0usize, 1, 2, 3, 4, 5, 6];
        let theta = 0.1;
        let d = delta_transfer_diag(&inst, &mu, &v_u, theta);
        let (f, omega) = fixed_set(&mu, &v_u, theta);
        let fixed = mu.fix(&f, &omega).unwrap();
        let rest: Vec<usize> = v_u.iter().copied().filter(|v| !f.contains(v)).collect();
        let direct = lp_class_values(&inst, &fixed, &rest);
        let sums = transfer_column_sums(&d);
        for (a, b) in direct.as_array().iter().zip(sums.as_array()) {
            assert!((a - b).abs() < 1e-12);
        }
        let d0 = delta_transfer_diag(&inst, &mu, &[1, 5], 0.0);
        let lp = lp_class_values(&inst, &mu, &[1, 5]);
        for i in 0..4 {
            assert!((d0[i][i] - lp.as_array()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn small_instances_are_solved_exactly() {
        for seed in 0..5 {
            let inst = gen_random_nae3(10, seed).unwrap();
            let mu = PseudoDistribution::uniform(10, 3);
            let (a, trace) = round_pd(&inst, &mu, &RoundingConfig::for_n(10)).unwrap();
            assert_eq!(inst.val_assignment(&a).unwrap(), brute_opt(&inst).unwrap().1);
            assert_eq!(trace.final_branch(), Some(Branch::Bruteforce));
        }
    }

    #[test]
    fn point_mass_rounds_to_itself() {
        let p = gen_planted_nae3(20, 0.0, 3).unwrap();
        let mu = PseudoDistribution::point_mass(&p.planted, 3);
        let (a, trace) = round_pd(&p.instance, &mu, &RoundingConfig::for_n(20)).unwrap();
        assert_eq!(p.instance.violations(&a).unwrap(), 0);
        assert!(trace.stages.len() <= 20);
        let simple = round_simple(&p.instance, &mu, &RoundingConfig::for_n(20)).unwrap();
        assert_eq!(simple, p.planted);
    }

    #[test]
    fn stages_fix_monotonically_and_keep_fixed_values() {
        let p = gen_planted_nae3(22, 0.0, 8).unwrap();
        // a mixture of the planted assignment and a perturbed copy
        let mut other = p.planted.clone();
        for v in 0..5 {
            other.0[v] = !other.0[v];
        }
        let mu = PseudoDistribution::mixture(22, 6, vec![(0.97, p.planted.clone()), (0.03, other)]).unwrap();
        let mut cfg = RoundingConfig::for_n(22);
        cfg.delta_2sat_threshold_factor = 10.0;
        let (a, trace) = round_pd(&p.instance, &mu, &cfg).unwrap();
        for w in trace.stages.windows(2) {
            assert!(w[1].n_unfixed < w[0].n_unfixed);
        }
        assert!(trace.stages.iter().all(|s| s.branch != Branch::Threshold || s.threshold_exists || s.theta == 0.0));
        assert_eq!(p.instance.violations(&a).unwrap(), 0);
    }

    #[test]
    fn fixable_counts() {
        // point mass on a satisfying assignment of the all-positive n=4 instance: 0011
        let inst = Nae3Instance::complete(4, vec![[Polarity::Positive; 3]; 4]).unwrap();
        let mu = PseudoDistribution::point_mass(&Assignment(vec![false, false, true, true]), 3);
        let w = [0usize, 1, 2, 3];
        // each variable lies in 3 triples; the other two agree in exactly one of them
        assert_eq!(count_fixable(&inst, &mu, &w, 0.0, 1.0, 1.0 / 6.0).unwrap(), 4);
        assert_eq!(count_fixable(&inst, &mu, &w, 0.0, 1.0, 2.0 / 6.0).unwrap(), 0);
        assert_eq!(count_fixable(&inst, &mu, &w, 0.0, 1.0, 0.0).unwrap(), 4);
        assert_eq!(count_fixable(&inst, &mu, &w, 0.0, 1.0, 1.1).unwrap(), 0);
    }
}
