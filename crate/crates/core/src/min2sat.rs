//! Min-2-SAT base case: the 2-CNF induced by a partial assignment, the metric
//! relaxation obtained from a pseudodistribution, region-growing rounding on
//! the implication graph, and an exhaustive oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use thiserror::Error;

use crate::instance::{Nae3Instance, PartialAssignment};
use crate::pseudodist::{PdError, PseudoDistribution};

/// Default cap on exhaustive 2-SAT enumeration.
pub const TWOSAT_BRUTE_MAX: usize = 20;

/// Tolerance for metric feasibility checks.
pub const METRIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum Min2SatError {
    #[error("variable {0} is fixed to a fractional value or unfixed outside the free set")]
    Fractional(usize),
    #[error("{m} variables exceed the exhaustive cap of {cap}")]
    TooLarge { m: usize, cap: usize },
    #[error("pseudodistribution degree {0} is below 3")]
    DegreeTooLow(usize),
    #[error("metric infeasible: worst violation {0:e}")]
    InfeasibleMetric(f64),
    #[error(transparent)]
    Pd(#[from] PdError),
}

/// Literal over the re-indexed variables `0..m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

impl Lit {
    pub fn new(var: usize, positive: bool) -> Self {
        Lit { var, positive }
    }

    pub fn negate(self) -> Lit {
        Lit { var: self.var, positive: !self.positive }
    }

    /// Node id in the implication graph: `2·var` for `v`, `2·var + 1` for `¬v`.
    pub fn node(self) -> usize {
        2 * self.var + (!self.positive) as usize
    }

    pub fn from_node(node: usize) -> Lit {
        Lit { var: node / 2, positive: node.is_multiple_of(2) }
    }

    pub fn holds(self, value: bool) -> bool {
        value == self.positive
    }
}

/// Disjunction `a ∨ b`; a unit clause has `a == b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Clause {
    pub a: Lit,
    pub b: Lit,
}

impl Clause {
    pub fn satisfied(&self, x: &[bool]) -> bool {
        self.a.holds(x[self.a.var]) || self.b.holds(x[self.b.var])
    }

    pub fn is_unit(&self) -> bool {
        self.a == self.b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwoSatInstance {
    /// Original variable of each re-indexed variable.
    pub vars: Vec<usize>,
    pub clauses: Vec<Clause>,
    /// Constraints with one unfixed variable that are satisfied whatever it takes.
    pub dropped: usize,
}

impl TwoSatInstance {
    pub fn m(&self) -> usize {
        self.vars.len()
    }

    pub fn violations(&self, x: &[bool]) -> usize {
        self.clauses.iter().filter(|c| !c.satisfied(x)).count()
    }

    /// DIMACS-style block: 1-based signed literals, one clause per line, `0`-terminated.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.m(), self.clauses.len());
        let lit = |l: Lit| if l.positive { (l.var + 1) as i64 } else { -((l.var + 1) as i64) };
        for c in &self.clauses {
            if c.is_unit() {
                let _ = writeln!(out, "{} 0", lit(c.a));
            } else {
                let _ = writeln!(out, "{} {} 0", lit(c.a), lit(c.b));
            }
        }
        out
    }
}

/// The 2-CNF on `v_u` induced by the fixed part of `alpha`, from constraints with one or two free variables.
pub fn induce_2sat(inst: &Nae3Instance, v_u: &[usize], alpha: &PartialAssignment) -> Result<TwoSatInstance, Min2SatError> {
    let n = inst.n();
    let mut local = vec![usize::MAX; n];
    for (i, &v) in v_u.iter().enumerate() {
        local[v] = i;
    }
    for v in 0..n {
        if local[v] == usize::MAX && alpha.get(v).is_none() {
            return Err(Min2SatError::Fractional(v));
        }
    }
    let mut clauses = Vec::new();
    let mut dropped = 0;
    inst.for_each_constraint(|_, t, pol| {
        let free: Vec<usize> = (0..3).filter(|&i| local[t[i]] != usize::MAX).collect();
        let fixed: Vec<usize> = (0..3).filter(|&i| local[t[i]] == usize::MAX).collect();
        // mapped literal value of a fixed member
        let mapped = |i: usize| pol[i].apply(alpha.get(t[i]).expect("fixed"));
        match free.len() {
            2 => {
                let b = mapped(fixed[0]);
                // not both free mapped literals equal to b
                let lit = |i: usize| Lit::new(local[t[i]], pol[i].apply(!b));
                clauses.push(Clause { a: lit(free[0]), b: lit(free[1]) });
            }
            1 => {
                let (b0, b1) = (mapped(fixed[0]), mapped(fixed[1]));
                if b0 != b1 {
                    dropped += 1;
                } else {
                    let l = Lit::new(local[t[free[0]]], pol[free[0]].apply(!b0));
                    clauses.push(Clause { a: l, b: l });
                }
            }
            _ => {}
        }
    });
    Ok(TwoSatInstance { vars: v_u.to_vec(), clauses, dropped })
}

/// Distances between ordered literal pairs, `d(ℓ1, ℓ2) = Pr[ℓ1 = 1, ℓ2 = 0]`.
#[derive(Clone, Debug, Serialize)]
pub struct MetricSolution {
    pub m: usize,
    /// Row-major `2m × 2m` matrix indexed by [`Lit::node`].
    pub dist: Vec<f64>,
    pub objective: f64,
}

impl MetricSolution {
    pub fn d(&self, a: Lit, b: Lit) -> f64 {
        self.dist[a.node() * 2 * self.m + b.node()]
    }

    /// Largest violation of nonnegativity, antipodal sums and triangle inequalities.
    pub fn max_violation(&self) -> f64 {
        let k = 2 * self.m;
        let mut worst = self.dist.iter().fold(0.0f64, |a, &x| a.max(-x));
        for v in 0..self.m {
            let (p, q) = (Lit::new(v, true), Lit::new(v, false));
            worst = worst.max(1.0 - self.d(p, q) - self.d(q, p));
        }
        for a in 0..k {
            for b in 0..k {
                let ab = self.dist[a * k + b];
                for c in 0..k {
                    worst = worst.max(self.dist[a * k + c] - ab - self.dist[b * k + c]);
                }
            }
        }
        worst
    }
}

/// Metric solution from the pair marginals of `mu`.
pub fn pd_to_metric(ts: &TwoSatInstance, mu: &PseudoDistribution) -> Result<MetricSolution, Min2SatError> {
    if mu.degree() < 3 {
        return Err(Min2SatError::DegreeTooLow(mu.degree()));
    }
    let m = ts.m();
    let k = 2 * m;
    let mut dist = vec![0.0; k * k];
    for i in 0..m {
        let p1 = mu.single(ts.vars[i]);
        let (pos, neg) = (Lit::new(i, true).node(), Lit::new(i, false).node());
        dist[pos * k + neg] = p1[1];
        dist[neg * k + pos] = p1[0];
        for j in i + 1..m {
            let pair = mu.marginal(&sorted_pair(ts.vars[i], ts.vars[j]))?.probs;
            let swapped = ts.vars[i] > ts.vars[j];
            // joint[a][b] = Pr[x_i = a, x_j = b]
            let mut joint = [[0.0; 2]; 2];
            for (code, &p) in pair.iter().enumerate() {
                let (first, second) = (code >> 1, code & 1);
                let (a, b) = if swapped { (second, first) } else { (first, second) };
                joint[a][b] += p;
            }
            for pi in [true, false] {
                for pj in [true, false] {
                    let (li, lj) = (Lit::new(i, pi), Lit::new(j, pj));
                    // ℓ holds for value `pi as usize` on its variable
                    let ti = pi as usize;
                    let tj = pj as usize;
                    dist[li.node() * k + lj.node()] = joint[ti][1 - tj];
                    dist[lj.node() * k + li.node()] = joint[1 - ti][tj];
                }
            }
        }
    }
    let mut metric = MetricSolution { m, dist, objective: 0.0 };
    metric.objective = 0.5
        * ts.clauses.iter().map(|c| metric.d(c.a.negate(), c.b) + metric.d(c.b.negate(), c.a)).sum::<f64>();
    Ok(metric)
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KprtOutcome {
    pub assignment: Vec<bool>,
    pub violated: usize,
    pub balls: usize,
    pub conflicts_resolved: usize,
}

/// Region growing on the implication graph.
///
/// Centers are taken in variable order among unassigned variables, as the literal
/// with the larger single marginal (ties to value 0). Radii are
/// `min(Exp(4·ln(2m+2)), ¼ − 10⁻⁹)`; every literal within the radius is set true.
pub fn kprt_round(ts: &TwoSatInstance, metric: &MetricSolution, rng: &mut impl Rng) -> Result<KprtOutcome, Min2SatError> {
    let m = ts.m();
    if metric.m != m {
        return Err(Min2SatError::InfeasibleMetric(f64::NAN));
    }
    let k = 2 * m;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for c in &ts.clauses {
        // ¬a → b and ¬b → a
        adj[c.a.negate().node()].push((c.b.node(), metric.d(c.a.negate(), c.b).max(0.0)));
        if !c.is_unit() {
            adj[c.b.negate().node()].push((c.a.node(), metric.d(c.b.negate(), c.a).max(0.0)));
        }
    }
    let rate = 4.0 * ((2 * m + 2) as f64).ln();
    let exp = Exp::new(rate).expect("positive rate");
    let mut value: Vec<Option<bool>> = vec![None; m];
    let mut balls = 0;
    let mut conflicts = 0;
    let mut dist = vec![f64::INFINITY; k];
    for v in 0..m {
        if value[v].is_some() {
            continue;
        }
        let pos = Lit::new(v, true);
        let center = if metric.d(pos, pos.negate()) > 0.5 { pos } else { pos.negate() };
        let radius = exp.sample(rng).min(0.25 - 1e-9);
        balls += 1;
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        let mut reached: Vec<usize> = Vec::new();
        let mut heap = BinaryHeap::new();
        dist[center.node()] = 0.0;
        heap.push(HeapItem { dist: 0.0, node: center.node() });
        while let Some(HeapItem { dist: du, node }) = heap.pop() {
            if du > dist[node] {
                continue;
            }
            reached.push(node);
            for &(to, len) in &adj[node] {
                if value[to / 2].is_some() {
                    continue;
                }
                let nd = du + len;
                if nd <= radius && nd < dist[to] {
                    dist[to] = nd;
                    heap.push(HeapItem { dist: nd, node: to });
                }
            }
        }
        // a literal and its negation in one ball: the closer one wins, ties to value 0
        reached.sort_by(|a, b| dist[*a].total_cmp(&dist[*b]).then(a.cmp(b)));
        for node in reached {
            let lit = Lit::from_node(node);
            let want = lit.positive;
            match value[lit.var] {
                None => value[lit.var] = Some(want),
                Some(cur) if cur != want => {
                    conflicts += 1;
                    let other = lit.negate().node();
                    if dist[node] == dist[other] {
                        value[lit.var] = Some(false);
                    }
                }
                _ => {}
            }
        }
    }
    let assignment: Vec<bool> = value.into_iter().map(|b| b.expect("every variable is a center or in a ball")).collect();
    let violated = ts.violations(&assignment);
    Ok(KprtOutcome { assignment, violated, balls, conflicts_resolved: conflicts })
}

/// Exact minimum by enumeration; ties go to the lexicographically smallest assignment.
pub fn twosat_brute(ts: &TwoSatInstance, cap: usize) -> Result<(Vec<bool>, usize), Min2SatError> {
    twosat_brute_preferring(ts, None, cap)
}

/// Exact minimum; ties are broken by fewest disagreements with `pref`, then lexicographically.
pub fn twosat_brute_preferring(
    ts: &TwoSatInstance,
    pref: Option<&[bool]>,
    cap: usize,
) -> Result<(Vec<bool>, usize), Min2SatError> {
    let m = ts.m();
    if m > cap || m >= 63 {
        return Err(Min2SatError::TooLarge { m, cap });
    }
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, c) in ts.clauses.iter().enumerate() {
        incident[c.a.var].push(i);
        if c.b.var != c.a.var {
            incident[c.b.var].push(i);
        }
    }
    let mut x = vec![false; m];
    let mut violated = ts.violations(&x) as i64;
    let disagree_of = |v: usize, val: bool| pref.is_some_and(|p| p[v] != val) as i64;
    let mut disagree: i64 = (0..m).map(|v| disagree_of(v, false)).sum();
    let mut code = 0u64;
    let mut best = (violated, disagree, code);
    for i in 1u64..1 << m {
        let j = i.trailing_zeros() as usize;
        let v = m - 1 - j;
        for &ci in &incident[v] {
            violated -= !ts.clauses[ci].satisfied(&x) as i64;
        }
        disagree -= disagree_of(v, x[v]);
        x[v] = !x[v];
        disagree += disagree_of(v, x[v]);
        for &ci in &incident[v] {
            violated += !ts.clauses[ci].satisfied(&x) as i64;
        }
        code ^= 1 << j;
        if (violated, disagree, code) < best {
            best = (violated, disagree, code);
        }
    }
    let out = (0..m).map(|v| best.2 >> (m - 1 - v) & 1 == 1).collect();
    Ok((out, best.0 as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_random_nae3, nae_violated, Assignment, Polarity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_positive(n: usize) -> Nae3Instance {
        Nae3Instance::complete(n, vec![[Polarity::Positive; 3]; crate::subsets::binom(n, 3)]).unwrap()
    }

    #[test]
    fn induced_clauses_match_completions() {
        let inst = all_positive(3);
        let mut alpha = PartialAssignment::unfixed(3);
        alpha.set(0, true);
        let ts = induce_2sat(&inst, &[1, 2], &alpha).unwrap();
        assert_eq!(ts.clauses, vec![Clause { a: Lit::new(0, false), b: Lit::new(1, false) }]);
        alpha.set(1, false);
        let ts = induce_2sat(&inst, &[2], &alpha).unwrap();
        assert!(ts.clauses.is_empty());
        assert_eq!(ts.dropped, 1);
        alpha.set(1, true);
        let ts = induce_2sat(&inst, &[2], &alpha).unwrap();
        assert_eq!(ts.clauses, vec![Clause { a: Lit::new(0, false), b: Lit::new(0, false) }]);
        assert!(matches!(induce_2sat(&inst, &[], &PartialAssignment::unfixed(3)), Err(Min2SatError::Fractional(0))));
    }

    #[test]
    fn induced_instance_counts_violations_exactly() {
        // every completion violates exactly as many induced clauses as constraints with 1–2 free variables
        for seed in 0..20 {
            let inst = gen_random_nae3(8, seed).unwrap();
            let v_u = [1usize, 4, 5, 7];
            let mut alpha = PartialAssignment::unfixed(8);
            for v in [0, 2, 3, 6] {
                alpha.set(v, (seed >> v) & 1 == 1);
            }
            let ts = induce_2sat(&inst, &v_u, &alpha).unwrap();
            for code in 0..16u64 {
                let x: Vec<bool> = (0..4).map(|i| code >> i & 1 == 1).collect();
                let mut full = alpha.clone();
                for (i, &v) in v_u.iter().enumerate() {
                    full.set(v, x[i]);
                }
                let full = full.to_total().unwrap();
                let mut want = 0;
                inst.for_each_constraint(|_, t, p| {
                    let free = t.iter().filter(|v| v_u.contains(v)).count();
                    let b = full.bits();
                    if (1..=2).contains(&free) && nae_violated(p, [b[t[0]], b[t[1]], b[t[2]]]) {
                        want += 1;
                    }
                });
                assert_eq!(ts.violations(&x), want);
            }
        }
    }

    #[test]
    fn metric_examples() {
        let ts = TwoSatInstance { vars: vec![0, 1], clauses: vec![Clause { a: Lit::new(0, true), b: Lit::new(1, true) }], dropped: 0 };
        let point = PseudoDistribution::point_mass(&Assignment(vec![false, false, true]), 3);
        let metric = pd_to_metric(&ts, &point).unwrap();
        assert_eq!(metric.d(Lit::new(0, false), Lit::new(1, true)), 1.0);
        assert_eq!(metric.objective, 1.0);
        let coins = PseudoDistribution::uniform(3, 3);
        let metric = pd_to_metric(&ts, &coins).unwrap();
        assert_eq!(metric.d(Lit::new(0, false), Lit::new(1, true)), 0.25);
        assert_eq!(metric.d(Lit::new(0, true), Lit::new(0, false)) + metric.d(Lit::new(0, false), Lit::new(0, true)), 1.0);
        assert!(metric.max_violation() <= METRIC_TOL);
        assert!(matches!(pd_to_metric(&ts, &PseudoDistribution::uniform(3, 2)), Err(Min2SatError::DegreeTooLow(2))));
    }

    #[test]
    fn kprt_on_satisfiable_and_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // satisfiable chain with an exact metric from a point mass
        let inst = gen_random_nae3(9, 2).unwrap();
        let (opt, _) = crate::oracle::brute_opt(&inst).unwrap();
        let mut alpha = PartialAssignment::unfixed(9);
        for v in 0..4 {
            alpha.set(v, opt.bits()[v]);
        }
        let v_u: Vec<usize> = (4..9).collect();
        let ts = induce_2sat(&inst, &v_u, &alpha).unwrap();
        let point = PseudoDistribution::point_mass(&opt, 3);
        let metric = pd_to_metric(&ts, &point).unwrap();
        let want = ts.violations(&opt.bits()[4..]);
        assert!((metric.objective - want as f64).abs() < 1e-12);
        let out = kprt_round(&ts, &metric, &mut rng).unwrap();
        assert!(out.violated <= want);

        let unit = TwoSatInstance { vars: vec![0], clauses: vec![Clause { a: Lit::new(0, true), b: Lit::new(0, true) }], dropped: 0 };
        let zero = PseudoDistribution::point_mass(&Assignment(vec![false, false, false]), 3);
        let metric = pd_to_metric(&unit, &zero).unwrap();
        assert_eq!(metric.d(Lit::new(0, false), Lit::new(0, true)), 1.0);
        assert_eq!(kprt_round(&unit, &metric, &mut rng).unwrap().violated, 1);
    }

    #[test]
    fn brute_examples() {
        let contra = TwoSatInstance {
            vars: vec![0],
            clauses: vec![Clause { a: Lit::new(0, true), b: Lit::new(0, true) }, Clause { a: Lit::new(0, false), b: Lit::new(0, false) }],
            dropped: 0,
        };
        assert_eq!(twosat_brute(&contra, 20).unwrap().1, 1);
        let empty = TwoSatInstance { vars: vec![0, 1, 2], clauses: vec![], dropped: 0 };
        assert_eq!(twosat_brute(&empty, 20).unwrap(), (vec![false; 3], 0));
        let pref = [true, false, true];
        assert_eq!(twosat_brute_preferring(&empty, Some(&pref), 20).unwrap().0, pref.to_vec());
        assert!(matches!(twosat_brute(&TwoSatInstance { vars: vec![0; 21], clauses: vec![], dropped: 0 }, 20), Err(Min2SatError::TooLarge { .. })));
    }

    #[test]
    fn brute_matches_reverse_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let m = 10;
            let clauses: Vec<Clause> = (0..25)
                .map(|_| Clause {
                    a: Lit::new(rng.random_range(0..m), rng.random()),
                    b: Lit::new(rng.random_range(0..m), rng.random()),
                })
                .collect();
            let ts = TwoSatInstance { vars: (0..m).collect(), clauses, dropped: 0 };
            let (_, min) = twosat_brute(&ts, 20).unwrap();
            let other = (0..1u32 << m)
                .rev()
                .map(|c| ts.violations(&(0..m).map(|v| c >> v & 1 == 1).collect::<Vec<_>>()))
                .min()
                .unwrap();
            assert_eq!(min, other);
        }
    }

    #[test]
    fn dimacs_block() {
        let ts = TwoSatInstance {
            vars: vec![3, 5],
            clauses: vec![Clause { a: Lit::new(0, true), b: Lit::new(1, false) }, Clause { a: Lit::new(1, true), b: Lit::new(1, true) }],
            dropped: 2,
        };
        assert_eq!(ts.to_dimacs(), "p cnf 2 2\n1 -2 0\n2 0\n");
    }
}
