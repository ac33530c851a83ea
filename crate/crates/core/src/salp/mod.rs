//! Degree-`d` local-distribution LP for Min-NAE-3-SAT: construction, export,
//! solving and decoding into a [`PseudoDistribution`].
//!
//! The explicit problem has one variable `y_{S,α}` per slot of the
//! [`SubsetIndex`] layout. Backends solve the equivalent moment form
//! (see [`moment`]) and the solution is decoded back into slots, so callers only
//! ever see the explicit layout.

pub mod moment;
pub mod simplex;

#[cfg(feature = "highs")]
mod highs;

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::instance::{violating_assignments, Assignment, InstanceError, Nae3Instance};
use crate::pseudodist::{PdError, PseudoDistribution, SOLVER_TOL};
use crate::subsets::{slot_count, Combinations, SubsetIndex};
use moment::{build_moment_lp, decode_moments, InequalityLp};
use simplex::{solve_standard, SimplexOptions, SimplexStatus, StandardLp};

/// Default cap on `Σ_{j ≤ d} C(n,j)·2^j`.
pub const DEFAULT_MAX_LP_VARIABLES: usize = 200_000;

/// Default solver tolerance.
pub const DEFAULT_LP_TOL: f64 = 1e-7;

/// Moment-variable count up to which [`LpBackend::Auto`] uses the bundled simplex.
pub const AUTO_BUNDLED_MAX_MOMENTS: usize = 300;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("LP needs {variables} variables, budget is {budget}")]
    Budget { variables: usize, budget: usize },
    #[error("degree {0} is below the minimum of 3")]
    DegreeTooLow(usize),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("solver returned status {0:?}")]
    NotOptimal(LpStatus),
    #[error("feasibility residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("decode failed: {0}")]
    Decode(#[from] PdError),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("backend {0} is not compiled in")]
    Unavailable(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpBackend {
    /// Bundled simplex on small problems, HiGHS otherwise when compiled in.
    #[default]
    Auto,
    Bundled,
    Highs,
}

impl std::str::FromStr for LpBackend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(LpBackend::Auto),
            "bundled" => Ok(LpBackend::Bundled),
            "highs" => Ok(LpBackend::Highs),
            other => Err(format!("unknown LP backend {other:?} (auto, bundled, highs)")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    pub tol: f64,
    pub backend: LpBackend,
    pub max_iterations: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { tol: DEFAULT_LP_TOL, backend: LpBackend::Auto, max_iterations: 2_000_000 }
    }
}

/// Explicit LP over the slot layout.
///
/// Rows are generated on demand: `y_∅ = 1`, then for each `S` with `|S| < d`
/// (rank order), each `v ∉ S` (ascending) and each `α` over `S`:
/// `y_{S,α} − y_{S∪v, α⊕0} − y_{S∪v, α⊕1} = 0`. All variables are `≥ 0`.
#[derive(Clone, Debug)]
pub struct LpProblem {
    n: usize,
    degree: usize,
    index: SubsetIndex,
    objective: Vec<(usize, f64)>,
}

impl LpProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn index(&self) -> &SubsetIndex {
        &self.index
    }

    pub fn num_variables(&self) -> usize {
        self.index.slots()
    }

    pub fn num_rows(&self) -> usize {
        1 + (0..self.degree).map(|k| (self.index.count(k) * (self.n - k)) << k).sum::<usize>()
    }

    /// Sparse objective `(slot, coefficient)`, sorted by slot.
    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    /// `(S, α)` of a slot.
    pub fn variable(&self, slot: usize) -> (Vec<usize>, usize) {
        let k = (0..=self.degree).rev().find(|&k| self.index.offset(k) <= slot).unwrap_or(0);
        let rel = slot - self.index.offset(k);
        (self.index.unrank(k, rel >> k), rel & ((1 << k) - 1))
    }

    /// Readable column name, e.g. `y_1_3_4__101` (1-based variables, then bits).
    pub fn variable_name(&self, slot: usize) -> String {
        let (s, alpha) = self.variable(slot);
        if s.is_empty() {
            return "y_empty".to_string();
        }
        let vars: Vec<String> = s.iter().map(|v| (v + 1).to_string()).collect();
        let bits: String = (0..s.len()).map(|i| if alpha >> (s.len() - 1 - i) & 1 == 1 { '1' } else { '0' }).collect();
        format!("y_{}__{}", vars.join("_"), bits)
    }

    /// Calls `f(terms, rhs)` for every equality row in order.
    pub fn for_each_row(&self, mut f: impl FnMut(&[(usize, f64)], f64)) {
        f(&[(0, 1.0)], 1.0);
        let mut ext = Vec::with_capacity(self.degree);
        for k in 0..self.degree {
            for s in Combinations::new(self.n, k) {
                let base = self.index.base(&s);
                for v in (0..self.n).filter(|v| s.binary_search(v).is_err()) {
                    ext.clear();
                    ext.extend_from_slice(&s);
                    let pos = ext.partition_point(|&x| x < v);
                    ext.insert(pos, v);
                    let ext_base = self.index.base(&ext);
                    for alpha in 0..1usize << k {
                        // insert a bit at position `pos` of the extended assignment
                        let high = alpha >> (k - pos) << (k - pos);
                        let low = alpha - high;
                        let shifted = (high << 1) | low;
                        let bitv = 1usize << (k - pos);
                        f(&[(base + alpha, 1.0), (ext_base + shifted, -1.0), (ext_base + (shifted | bitv), -1.0)], 0.0);
                    }
                }
            }
        }
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * y[j]).sum()
    }

    /// Max equality violation and negativity of `y`.
    pub fn residual(&self, y: &[f64]) -> f64 {
        let mut worst = y.iter().fold(0.0f64, |a, &v| a.max(-v));
        self.for_each_row(|terms, rhs| {
            let lhs: f64 = terms.iter().map(|&(j, c)| c * y[j]).sum();
            worst = worst.max((lhs - rhs).abs());
        });
        worst
    }

    /// Export in free MPS format (see README for the layout).
    pub fn write_mps(&self, mut w: impl Write) -> io::Result<()> {
        let nrows = self.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_variables()];
        let mut rhs = Vec::with_capacity(nrows);
        let mut r = 0usize;
        self.for_each_row(|terms, b| {
            for &(j, c) in terms {
                cols[j].push((r, c));
            }
            rhs.push(b);
            r += 1;
        });
        writeln!(w, "NAME nae3_sa_n{}_d{}", self.n, self.degree)?;
        writeln!(w, "ROWS")?;
        writeln!(w, " N obj")?;
        for r in 0..nrows {
            writeln!(w, " E r{r}")?;
        }
        writeln!(w, "COLUMNS")?;
        let mut obj = self.objective.iter().peekable();
        for (j, entries) in cols.iter().enumerate() {
            let name = self.variable_name(j);
            if let Some(&&(slot, c)) = obj.peek() {
                if slot == j {
                    writeln!(w, " {name} obj {c:.17e}")?;
                    obj.next();
                }
            }
            for &(r, c) in entries {
                writeln!(w, " {name} r{r} {c}")?;
            }
        }
        writeln!(w, "RHS")?;
        for (r, &b) in rhs.iter().enumerate() {
            if b != 0.0 {
                writeln!(w, " rhs r{r} {b}")?;
            }
        }
        writeln!(w, "ENDATA")
    }
}

/// Build the degree-`d` problem; `d` is capped at `n`.
pub fn build_sa_lp(inst: &Nae3Instance, d: usize, max_variables: usize) -> Result<LpProblem, LpError> {
    inst.require_complete()?;
    build_sa_lp_partial(inst, d, max_variables)
}

/// As [`build_sa_lp`] but over whichever constraints are present; the objective averages over them.
pub fn build_sa_lp_partial(inst: &Nae3Instance, d: usize, max_variables: usize) -> Result<LpProblem, LpError> {
    if d < 3 {
        return Err(LpError::DegreeTooLow(d));
    }
    let n = inst.n();
    let degree = d.min(n);
    let variables = slot_count(n, degree);
    if variables > max_variables {
        return Err(LpError::Budget { variables, budget: max_variables });
    }
    let index = SubsetIndex::new(n, degree);
    let weight = 1.0 / inst.num_constraints().max(1) as f64;
    let mut objective = Vec::with_capacity(2 * inst.num_constraints());
    inst.for_each_constraint(|_, t, pol| {
        let base = index.base(&t);
        for a in violating_assignments(pol) {
            objective.push((base + a, weight));
        }
    });
    objective.sort_by_key(|&(j, _)| j);
    Ok(LpProblem { n, degree, index, objective })
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub residual: f64,
    pub backend: &'static str,
    pub iterations: usize,
}

pub(crate) struct RawSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub iterations: usize,
}

fn solve_bundled(lp: &InequalityLp, tol: f64, max_iterations: usize) -> RawSolution {
    // dual: max bᵀz s.t. Aᵀz = c, z ≥ 0; primal x is minus the simplex duals
    let nvars = lp.num_vars();
    let mut cols = Vec::with_capacity(lp.rows.len() + 2 * nvars);
    let mut c = Vec::with_capacity(cols.capacity());
    for (terms, b) in &lp.rows {
        cols.push(terms.clone());
        c.push(-b);
    }
    for (j, &(l, u)) in lp.bounds.iter().enumerate() {
        if l.is_finite() {
            cols.push(vec![(j, 1.0)]);
            c.push(-l);
        }
        if u.is_finite() {
            cols.push(vec![(j, -1.0)]);
            c.push(u);
        }
    }
    let std = StandardLp { num_rows: nvars, cols, b: lp.objective.clone(), c };
    let opts = SimplexOptions { opt_tol: tol.min(1e-10), max_iterations, ..Default::default() };
    let r = solve_standard(&std, opts);
    let status = match r.status {
        SimplexStatus::Optimal => LpStatus::Optimal,
        // an infeasible dual means an unbounded or infeasible primal; the primal here is bounded
        SimplexStatus::Infeasible | SimplexStatus::Unbounded => LpStatus::Infeasible,
        SimplexStatus::IterationLimit | SimplexStatus::Singular => LpStatus::IterationLimit,
    };
    let x = if status == LpStatus::Optimal { r.duals.iter().map(|p| -p).collect() } else { Vec::new() };
    RawSolution { status, x, iterations: r.iterations }
}

fn pick_backend(requested: LpBackend, moments: usize) -> Result<LpBackend, LpError> {
    match requested {
        LpBackend::Auto if moments <= AUTO_BUNDLED_MAX_MOMENTS || !cfg!(feature = "highs") => Ok(LpBackend::Bundled),
        LpBackend::Auto => Ok(LpBackend::Highs),
        LpBackend::Highs if !cfg!(feature = "highs") => Err(LpError::Unavailable("highs")),
        other => Ok(other),
    }
}

/// Solve `p`. A non-optimal status is returned as a solution with empty values.
pub fn solve_lp(p: &LpProblem, opts: &LpOptions) -> Result<LpSolution, LpError> {
    let (lp, map) = build_moment_lp(p);
    let backend = pick_backend(opts.backend, lp.num_vars())?;
    let raw = match backend {
        LpBackend::Bundled => solve_bundled(&lp, opts.tol, opts.max_iterations),
        #[cfg(feature = "highs")]
        LpBackend::Highs => highs::solve(&lp, opts.tol, opts.max_iterations)?,
        _ => return Err(LpError::Unavailable("highs")),
    };
    let name = match backend {
        LpBackend::Highs => "highs",
        _ => "bundled-simplex",
    };
    if raw.status != LpStatus::Optimal {
        return Ok(LpSolution {
            values: Vec::new(),
            objective: f64::NAN,
            status: raw.status,
            residual: f64::NAN,
            backend: name,
            iterations: raw.iterations,
        });
    }
    let values = decode_moments(p, &map, &raw.x);
    let objective = p.objective_value(&values);
    let residual = p.residual(&values);
    if residual > opts.tol {
        return Err(LpError::Residual { residual, tol: opts.tol });
    }
    Ok(LpSolution { values, objective, status: LpStatus::Optimal, residual, backend: name, iterations: raw.iterations })
}

/// Decode an optimal solution into a checked pseudodistribution.
pub fn lp_to_pd(p: &LpProblem, s: &LpSolution) -> Result<PseudoDistribution, LpError> {
    if s.status != LpStatus::Optimal {
        return Err(LpError::NotOptimal(s.status));
    }
    let residual = p.residual(&s.values);
    if residual > SOLVER_TOL {
        return Err(LpError::Residual { residual, tol: SOLVER_TOL });
    }
    let pd = PseudoDistribution::from_dense(p.n(), p.degree(), s.values.clone())?;
    let report = pd.check(SOLVER_TOL);
    if !report.passes() {
        return Err(LpError::Decode(PdError::Invalid(format!("decoded locals fail the consistency check: {report:?}"))));
    }
    Ok(pd)
}

#[derive(Clone, Copy, Debug)]
pub struct RelaxationConfig {
    pub degree: usize,
    pub max_variables: usize,
    pub lp: LpOptions,
    /// Return the base-degree solution when the requested degree is over budget and no lift certifies.
    pub allow_degree_fallback: bool,
    /// Accept instances with missing constraints.
    pub allow_incomplete: bool,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig {
            degree: 6,
            max_variables: DEFAULT_MAX_LP_VARIABLES,
            lp: LpOptions::default(),
            allow_degree_fallback: false,
            allow_incomplete: false,
        }
    }
}

/// Evidence that the degree-`d` optimum was obtained without solving at degree `d`.
///
/// The base LP value lower-bounds the degree-`d` value, and the assignment is
/// feasible at every degree, so both are within `slack` of the degree-`d` value.
#[derive(Clone, Debug, Serialize)]
pub struct LiftCertificate {
    pub base_degree: usize,
    pub base_value: f64,
    pub assignment: String,
    pub assignment_value: f64,
    pub slack: f64,
}

#[derive(Clone, Debug)]
pub struct Relaxation {
    pub pd: PseudoDistribution,
    pub lp_value: f64,
    pub degree: usize,
    pub lp_degree_solved: usize,
    pub backend: &'static str,
    pub iterations: usize,
    pub lift: Option<LiftCertificate>,
    /// The returned pseudodistribution comes from a lower degree than requested, without a lift.
    pub degraded: bool,
}

/// Slack allowed between the base LP value and a lifting assignment.
pub const LIFT_SLACK: f64 = 1e-7;

/// Solve at the requested degree, or at the largest affordable degree plus a lift certificate.
pub fn solve_relaxation(inst: &Nae3Instance, cfg: &RelaxationConfig) -> Result<Relaxation, LpError> {
    if !cfg.allow_incomplete {
        inst.require_complete()?;
    }
    if cfg.degree < 3 {
        return Err(LpError::DegreeTooLow(cfg.degree));
    }
    let n = inst.n();
    let d = cfg.degree.min(n);
    let solve_at = |deg: usize| -> Result<(PseudoDistribution, LpSolution), LpError> {
        let p = build_sa_lp_partial(inst, deg, cfg.max_variables)?;
        let s = solve_lp(&p, &cfg.lp)?;
        if s.status != LpStatus::Optimal {
            return Err(LpError::NotOptimal(s.status));
        }
        Ok((lp_to_pd(&p, &s)?, s))
    };
    if slot_count(n, d) <= cfg.max_variables {
        let (pd, s) = solve_at(d)?;
        return Ok(Relaxation {
            pd,
            lp_value: s.objective,
            degree: d,
            lp_degree_solved: d,
            backend: s.backend,
            iterations: s.iterations,
            lift: None,
            degraded: false,
        });
    }
    let budget_error = LpError::Budget { variables: slot_count(n, d), budget: cfg.max_variables };
    let Some(base) = (3..d).rev().find(|&k| slot_count(n, k) <= cfg.max_variables) else {
        return Err(budget_error);
    };
    let (pd, s) = solve_at(base)?;
    let Some((alpha, value)) = lift_candidate(inst, &pd, s.objective) else {
        if !cfg.allow_degree_fallback {
            return Err(budget_error);
        }
        return Ok(Relaxation {
            pd,
            lp_value: s.objective,
            degree: d,
            lp_degree_solved: base,
            backend: s.backend,
            iterations: s.iterations,
            lift: None,
            degraded: true,
        });
    };
    Ok(Relaxation {
        pd: PseudoDistribution::point_mass(&alpha, d),
        lp_value: value,
        degree: d,
        lp_degree_solved: base,
        backend: s.backend,
        iterations: s.iterations,
        lift: Some(LiftCertificate {
            base_degree: base,
            base_value: s.objective,
            assignment: alpha.to_string(),
            assignment_value: value,
            slack: LIFT_SLACK,
        }),
        degraded: false,
    })
}

fn lift_candidate(inst: &Nae3Instance, pd: &PseudoDistribution, base_value: f64) -> Option<(Assignment, f64)> {
    let n = inst.n();
    let p1: Vec<f64> = (0..n).map(|v| pd.single(v)[1]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut starts = vec![Assignment(p1.iter().map(|&p| p >= 0.5).collect())];
    for _ in 0..16 {
        starts.push(Assignment(p1.iter().map(|&p| rng.random::<f64>() < p).collect()));
    }
    for start in starts {
        let alpha = inst.local_search(start);
        let value = inst.val_assignment(&alpha).ok()?;
        if value <= base_value + LIFT_SLACK {
            return Some((alpha, value));
        }
    }
    None
}
