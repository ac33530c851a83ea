//! Moment form of the local-distribution LP.
//!
//! A family of locals `{μ_S : |S| ≤ d}` that agree under extension by one
//! variable is determined by its moments `m_T = Pr[x_T = 1]`, `|T| ≤ d`, via
//! Möbius inversion `μ_S(α) = Σ_{A ⊆ T ⊆ S} (−1)^{|T∖A|} m_T` where `A` is the
//! ones-set of `α`. Nonnegativity of every `μ_S` with `|S| = d` is then the
//! whole constraint system (smaller locals are marginals of those).

use super::LpProblem;
use crate::subsets::{binom, Combinations, SubsetIndex};

/// `min cᵀx + c₀ s.t. a_r·x ≥ b_r, l ≤ x ≤ u`.
#[derive(Clone, Debug, Default)]
pub struct InequalityLp {
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub bounds: Vec<(f64, f64)>,
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
}

impl InequalityLp {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Maps nonempty subsets of size `≤ d` to moment variable ids.
#[derive(Clone, Debug)]
pub struct MomentMap {
    index: SubsetIndex,
    cum: Vec<usize>,
}

impl MomentMap {
    pub fn new(n: usize, d: usize) -> Self {
        let index = SubsetIndex::new(n, d);
        let mut cum = vec![0usize; index.max_k() + 2];
        for k in 1..=index.max_k() {
            cum[k + 1] = cum[k] + binom(n, k);
        }
        MomentMap { index, cum }
    }

    pub fn len(&self) -> usize {
        self.cum[self.index.max_k() + 1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Moment id of a nonempty sorted subset.
    pub fn id(&self, t: &[usize]) -> usize {
        self.cum[t.len()] + self.index.rank(t)
    }

    /// Expansion of `μ_S(α)` as `constant + Σ coef·m_T`.
    pub fn expand(&self, s: &[usize], alpha: usize) -> (f64, Vec<(usize, f64)>) {
        let k = s.len();
        let full = (1usize << k) - 1;
        let free = full & !alpha;
        let mut constant = 0.0;
        let mut terms = Vec::with_capacity(1 << free.count_ones());
        let mut t = Vec::with_capacity(k);
        // enumerate submasks of `free`
        let mut sub = free;
        loop {
            let mask = alpha | sub;
            let sign = if sub.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            if mask == 0 {
                constant += sign;
            } else {
                t.clear();
                t.extend((0..k).filter(|&i| mask >> (k - 1 - i) & 1 == 1).map(|i| s[i]));
                terms.push((self.id(&t), sign));
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
        (constant, terms)
    }

    /// Locals of `S` from the moment vector.
    pub fn local(&self, s: &[usize], m: &[f64]) -> Vec<f64> {
        let k = s.len();
        let mut g = vec![0.0; 1 << k];
        let mut t = Vec::with_capacity(k);
        for (mask, slot) in g.iter_mut().enumerate() {
            if mask == 0 {
                *slot = 1.0;
            } else {
                t.clear();
                t.extend((0..k).filter(|&i| mask >> (k - 1 - i) & 1 == 1).map(|i| s[i]));
                *slot = m[self.id(&t)];
            }
        }
        for b in 0..k {
            let bitv = 1usize << b;
            for mask in 0..1usize << k {
                if mask & bitv == 0 {
                    g[mask] -= g[mask | bitv];
                }
            }
        }
        g
    }
}

/// The moment LP equivalent to `p`, with its moment map.
pub fn build_moment_lp(p: &LpProblem) -> (InequalityLp, MomentMap) {
    let map = MomentMap::new(p.n(), p.degree());
    let d = p.degree();
    let mut objective = vec![0.0; map.len()];
    let mut objective_constant = 0.0;
    for &(slot, coef) in p.objective() {
        let (s, alpha) = p.variable(slot);
        let (c, terms) = map.expand(&s, alpha);
        objective_constant += coef * c;
        for (j, v) in terms {
            objective[j] += coef * v;
        }
    }
    let mut rows = Vec::with_capacity(binom(p.n(), d) << d);
    for s in Combinations::new(p.n(), d) {
        for alpha in 0..1usize << d {
            let (c, terms) = map.expand(&s, alpha);
            rows.push((terms, -c));
        }
    }
    let bounds = vec![(0.0, 1.0); map.len()];
    (InequalityLp { objective, objective_constant, bounds, rows }, map)
}

/// Decode moments into the slot layout of `p`.
pub fn decode_moments(p: &LpProblem, map: &MomentMap, m: &[f64]) -> Vec<f64> {
    let index = p.index();
    let mut y = vec![0.0; index.slots()];
    for k in 0..=p.degree() {
        for s in Combinations::new(p.n(), k) {
            let base = index.base(&s);
            let local = map.local(&s, m);
            y[base..base + local.len()].copy_from_slice(&local);
        }
    }
    y
}

/// Moments of a slot-layout vector (inverse of [`decode_moments`] on consistent input).
pub fn encode_moments(p: &LpProblem, map: &MomentMap, y: &[f64]) -> Vec<f64> {
    let index = p.index();
    let mut m = vec![0.0; map.len()];
    for k in 1..=p.degree() {
        for s in Combinations::new(p.n(), k) {
            // all-ones assignment
            m[map.id(&s)] = y[index.slot(&s, (1 << k) - 1)];
        }
    }
    m
}
