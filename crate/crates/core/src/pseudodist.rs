//! Degree-d pseudodistributions: families of local distributions over all
//! variable subsets of size at most `d` that agree on shared marginals.
//!
//! Two storages are supported. `Dense` keeps one probability vector per
//! subset, laid out by [`SubsetIndex`]. `Mixture` keeps a finite weighted set
//! of global assignments, which is an actual distribution; its locals are
//! computed on demand, so it can carry any degree cheaply.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::instance::{nae_violated, Assignment, Nae3Instance};
use crate::subsets::{positions, project, union, Combinations, SubsetIndex};

/// Conditioning on events of probability at most this is refused.
pub const SUPPORT_FLOOR: f64 = 1e-9;

/// Negative entries down to this value are clamped to zero on decode.
pub const CLAMP_FLOOR: f64 = -1e-9;

/// Tolerance for pseudodistributions produced by the LP solver.
pub const SOLVER_TOL: f64 = 1e-6;

/// Tolerance for exact fixtures.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PdError {
    #[error("subset of size {requested} exceeds degree {degree}")]
    DegreeExceeded { requested: usize, degree: usize },
    #[error("degree {degree} is below the required {required}")]
    DegreeTooLow { degree: usize, required: usize },
    #[error("conditioning event has probability {prob:e}, below the support floor")]
    Unsupported { prob: f64 },
    #[error("invalid subset {0:?}")]
    InvalidSubset(Vec<usize>),
    #[error("probability {value:e} at slot {slot} is negative beyond the clamp floor")]
    NegativeProbability { slot: usize, value: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// A local distribution over the assignments of a sorted subset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalDistribution {
    pub subset: Vec<usize>,
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug)]
enum Storage {
    Dense { index: SubsetIndex, probs: Vec<f64> },
    Mixture { support: Vec<(f64, Vec<bool>)> },
}

#[derive(Clone, Debug)]
pub struct PseudoDistribution {
    n: usize,
    degree: usize,
    storage: Storage,
}

/// Result of [`PseudoDistribution::check`].
#[derive(Clone, Debug, Serialize)]
pub struct PdCheckReport {
    pub max_sum_deviation: f64,
    pub worst_sum_subset: Vec<usize>,
    pub max_consistency_deviation: f64,
    /// `(S, T, β)` with `T ⊂ S` maximizing |Pr_{μ_S}[x_T = β] − μ_T(β)|.
    pub worst_consistency: Option<(Vec<usize>, Vec<usize>, usize)>,
    pub min_probability: f64,
    pub tol: f64,
}

impl PdCheckReport {
    pub fn passes(&self) -> bool {
        self.max_sum_deviation <= self.tol
            && self.max_consistency_deviation <= self.tol
            && self.min_probability >= -self.tol
    }
}

/// Sum of `probs` (over a `k`-subset) grouped by the assignment at positions `pos`.
pub fn marginalize(probs: &[f64], k: usize, pos: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << pos.len()];
    for (a, &p) in probs.iter().enumerate() {
        out[project(a, k, pos)] += p;
    }
    out
}

impl PseudoDistribution {
    /// Product of independent bits with `Pr[x_v = 1] = p_one[v]`, stored densely.
    pub fn product(p_one: &[f64], degree: usize) -> Result<Self, PdError> {
        if p_one.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(PdError::Invalid("marginal outside [0,1]".into()));
        }
        let n = p_one.len();
        let index = SubsetIndex::new(n, degree);
        let mut probs = vec![0.0; index.slots()];
        for k in 0..=index.max_k() {
            for s in Combinations::new(n, k) {
                let base = index.base(&s);
                for a in 0..1usize << k {
                    let mut p = 1.0;
                    for (i, &v) in s.iter().enumerate() {
                        let one = (a >> (k - 1 - i)) & 1 == 1;
                        p *= if one { p_one[v] } else { 1.0 - p_one[v] };
                    }
                    probs[base + a] = p;
                }
            }
        }
        Ok(PseudoDistribution { n, degree, storage: Storage::Dense { index, probs } })
    }

    pub fn uniform(n: usize, degree: usize) -> Self {
        Self::product(&vec![0.5; n], degree).expect("valid marginals")
    }

    /// Weighted mixture of global assignments; weights are normalized.
    pub fn mixture(n: usize, degree: usize, points: Vec<(f64, Assignment)>) -> Result<Self, PdError> {
        let total: f64 = points.iter().map(|p| p.0).sum();
        if points.is_empty() || total <= 0.0 || points.iter().any(|p| p.0 < 0.0) {
            return Err(PdError::Invalid("mixture needs nonnegative weights with positive total".into()));
        }
        if points.iter().any(|p| p.1.len() != n) {
            return Err(PdError::Invalid("mixture point has wrong length".into()));
        }
        let support = points.into_iter().filter(|p| p.0 > 0.0).map(|(w, a)| (w / total, a.0)).collect();
        Ok(PseudoDistribution { n, degree, storage: Storage::Mixture { support } })
    }

    pub fn point_mass(alpha: &Assignment, degree: usize) -> Self {
        Self::mixture(alpha.len(), degree, vec![(1.0, alpha.clone())]).expect("valid point mass")
    }

    /// Dense pseudodistribution from a flat vector in [`SubsetIndex`] layout.
    /// Entries in `[CLAMP_FLOOR, 0)` are clamped and every local renormalized.
    pub fn from_dense(n: usize, degree: usize, mut probs: Vec<f64>) -> Result<Self, PdError> {
        let index = SubsetIndex::new(n, degree);
        if probs.len() != index.slots() {
            return Err(PdError::Invalid(format!("expected {} entries, got {}", index.slots(), probs.len())));
        }
        for (slot, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < CLAMP_FLOOR {
                return Err(PdError::NegativeProbability { slot, value: *p });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        for k in 0..=index.max_k() {
            let len = 1usize << k;
            for chunk in probs[index.offset(k)..index.offset(k + 1)].chunks_mut(len) {
                let s: f64 = chunk.iter().sum();
                if s > 0.0 {
                    chunk.iter_mut().for_each(|p| *p /= s);
                }
            }
        }
        Ok(PseudoDistribution { n, degree, storage: Storage::Dense { index, probs } })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense { .. })
    }

    /// Largest subset size whose local is available.
    pub fn max_local(&self) -> usize {
        self.degree.min(self.n)
    }

    /// The support of a mixture-stored pseudodistribution.
    pub fn mixture_support(&self) -> Option<Vec<(f64, Assignment)>> {
        match &self.storage {
            Storage::Mixture { support } => Some(support.iter().map(|(w, a)| (*w, Assignment(a.clone()))).collect()),
            Storage::Dense { .. } => None,
        }
    }

    /// Flat dense vector in [`SubsetIndex`] layout (materializes mixtures).
    pub fn dense_probs(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense { probs, .. } => probs.clone(),
            Storage::Mixture { .. } => {
                let index = SubsetIndex::new(self.n, self.degree);
                let mut out = vec![0.0; index.slots()];
                for k in 0..=index.max_k() {
                    for s in Combinations::new(self.n, k) {
                        let base = index.base(&s);
                        let l = self.local_unchecked(&s);
                        out[base..base + l.len()].copy_from_slice(&l);
                    }
                }
                out
            }
        }
    }

    fn validate(&self, s: &[usize]) -> Result<(), PdError> {
        if s.windows(2).any(|w| w[0] >= w[1]) || s.last().is_some_and(|&v| v >= self.n) {
            return Err(PdError::InvalidSubset(s.to_vec()));
        }
        if s.len() > self.max_local() {
            return Err(PdError::DegreeExceeded { requested: s.len(), degree: self.degree });
        }
        Ok(())
    }

    /// Local over a sorted, in-range subset of size at most [`Self::max_local`].
    pub(crate) fn local_unchecked(&self, s: &[usize]) -> Vec<f64> {
        match &self.storage {
            Storage::Dense { index, probs } => {
                let base = index.base(s);
                probs[base..base + (1 << s.len())].to_vec()
            }
            Storage::Mixture { support } => {
                let mut out = vec![0.0; 1 << s.len()];
                for (w, a) in support {
                    let code = s.iter().fold(0usize, |acc, &v| (acc << 1) | a[v] as usize);
                    out[code] += w;
                }
                out
            }
        }
    }

    /// Single-variable local `(Pr[x_v = 0], Pr[x_v = 1])`.
    #[inline]
    pub fn single(&self, v: usize) -> [f64; 2] {
        match &self.storage {
            Storage::Dense { index, probs } => {
                let base = index.offset(1) + 2 * v;
                [probs[base], probs[base + 1]]
            }
            Storage::Mixture { support } => {
                let mut out = [0.0; 2];
                for (w, a) in support {
                    out[a[v] as usize] += w;
                }
                out
            }
        }
    }

    /// Violation probability of the constraint on the sorted triple `t`.
    #[inline]
    pub fn triple_violation(&self, t: [usize; 3], pol: [crate::instance::Polarity; 3]) -> f64 {
        let bad = crate::instance::violating_assignments(pol);
        match &self.storage {
            Storage::Dense { index, probs } => {
                let base = index.base(&t);
                probs[base + bad[0]] + probs[base + bad[1]]
            }
            Storage::Mixture { support } => support
                .iter()
                .filter(|(_, a)| nae_violated(pol, [a[t[0]], a[t[1]], a[t[2]]]))
                .map(|(w, _)| w)
                .sum(),
        }
    }

    /// The local distribution of `S`.
    pub fn marginal(&self, s: &[usize]) -> Result<LocalDistribution, PdError> {
        self.validate(s)?;
        Ok(LocalDistribution { subset: s.to_vec(), probs: self.local_unchecked(s) })
    }

    /// Condition on `x_S = β`; the result has degree `d − |S|`.
    pub fn condition(&self, s: &[usize], beta: usize) -> Result<PseudoDistribution, PdError> {
        self.validate(s)?;
        if s.len() >= self.degree {
            return Err(PdError::DegreeExceeded { requested: s.len() + 1, degree: self.degree });
        }
        let k = s.len();
        match &self.storage {
            Storage::Mixture { support } => {
                let kept: Vec<(f64, Vec<bool>)> = support
                    .iter()
                    .filter(|(_, a)| s.iter().enumerate().all(|(i, &v)| a[v] == ((beta >> (k - 1 - i)) & 1 == 1)))
                    .cloned()
                    .collect();
                let mass: f64 = kept.iter().map(|p| p.0).sum();
                if mass <= SUPPORT_FLOOR {
                    return Err(PdError::Unsupported { prob: mass });
                }
                Ok(PseudoDistribution {
                    n: self.n,
                    degree: self.degree - k,
                    storage: Storage::Mixture { support: kept.into_iter().map(|(w, a)| (w / mass, a)).collect() },
                })
            }
            Storage::Dense { index, probs } => {
                let pivot = probs[index.base(s) + beta];
                if pivot <= SUPPORT_FLOOR {
                    return Err(PdError::Unsupported { prob: pivot });
                }
                let degree = self.degree - k;
                let out_index = SubsetIndex::new(self.n, degree);
                let mut out = vec![0.0; out_index.slots()];
                for tk in 0..=out_index.max_k() {
                    for t in Combinations::new(self.n, tk) {
                        let u = union(s, &t);
                        let ubase = index.base(&u);
                        let pos_t = positions(&t, &u).expect("subset of union");
                        let pos_s = positions(s, &u).expect("subset of union");
                        let obase = out_index.base(&t);
                        for a in 0..1usize << tk {
                            // assignment over u: β on S, α on T, must agree on S ∩ T
                            let mut code = 0usize;
                            let mut ok = true;
                            let ku = u.len();
                            let mut full = vec![None; ku];
                            for (i, &p) in pos_s.iter().enumerate() {
                                full[p] = Some((beta >> (k - 1 - i)) & 1 == 1);
                            }
                            for (i, &p) in pos_t.iter().enumerate() {
                                let b = (a >> (tk - 1 - i)) & 1 == 1;
                                match full[p] {
                                    Some(x) if x != b => ok = false,
                                    _ => full[p] = Some(b),
                                }
                            }
                            if !ok {
                                continue;
                            }
                            for b in full {
                                code = (code << 1) | b.expect("covered") as usize;
                            }
                            out[obase + a] = probs[ubase + code] / pivot;
                        }
                    }
                }
                Ok(PseudoDistribution { n: self.n, degree, storage: Storage::Dense { index: out_index, probs: out } })
            }
        }
    }

    /// Fix `x_S = β`: each local keeps the marginal of its unfixed part and
    /// puts its fixed part on `β`. The degree is unchanged.
    pub fn fix(&self, s: &[usize], beta: &[bool]) -> Result<PseudoDistribution, PdError> {
        if s.len() != beta.len() || s.windows(2).any(|w| w[0] >= w[1]) || s.last().is_some_and(|&v| v >= self.n) {
            return Err(PdError::InvalidSubset(s.to_vec()));
        }
        let mut value: Vec<Option<bool>> = vec![None; self.n];
        for (&v, &b) in s.iter().zip(beta) {
            value[v] = Some(b);
        }
        match &self.storage {
            Storage::Mixture { support } => {
                let support = support
                    .iter()
                    .map(|(w, a)| {
                        let mut a = a.clone();
                        for (&v, &b) in s.iter().zip(beta) {
                            a[v] = b;
                        }
                        (*w, a)
                    })
                    .collect();
                Ok(PseudoDistribution { n: self.n, degree: self.degree, storage: Storage::Mixture { support } })
            }
            Storage::Dense { index, probs } => {
                let mut out = probs.clone();
                for tk in 1..=index.max_k() {
                    for t in Combinations::new(self.n, tk) {
                        if t.iter().all(|&v| value[v].is_none()) {
                            continue;
                        }
                        let base = index.base(&t);
                        let free_pos: Vec<usize> = (0..tk).filter(|&i| value[t[i]].is_none()).collect();
                        let marg = marginalize(&probs[base..base + (1 << tk)], tk, &free_pos);
                        for a in 0..1usize << tk {
                            let agrees = (0..tk).all(|i| match value[t[i]] {
                                Some(b) => ((a >> (tk - 1 - i)) & 1 == 1) == b,
                                None => true,
                            });
                            out[base + a] = if agrees { marg[project(a, tk, &free_pos)] } else { 0.0 };
                        }
                    }
                }
                Ok(PseudoDistribution {
                    n: self.n,
                    degree: self.degree,
                    storage: Storage::Dense { index: index.clone(), probs: out },
                })
            }
        }
    }

    /// Restriction to the sorted subset `W`, re-indexed as `0..|W|`.
    pub fn restrict(&self, w: &[usize]) -> Result<PseudoDistribution, PdError> {
        if w.windows(2).any(|x| x[0] >= x[1]) || w.last().is_some_and(|&v| v >= self.n) {
            return Err(PdError::InvalidSubset(w.to_vec()));
        }
        let m = w.len();
        match &self.storage {
            Storage::Mixture { support } => Ok(PseudoDistribution {
                n: m,
                degree: self.degree,
                storage: Storage::Mixture {
                    support: support.iter().map(|(p, a)| (*p, w.iter().map(|&v| a[v]).collect())).collect(),
                },
            }),
            Storage::Dense { index, probs } => {
                let out_index = SubsetIndex::new(m, self.degree);
                let mut out = vec![0.0; out_index.slots()];
                for k in 0..=out_index.max_k() {
                    for (r, s) in Combinations::new(m, k).enumerate() {
                        let orig: Vec<usize> = s.iter().map(|&i| w[i]).collect();
                        let src = index.base(&orig);
                        let dst = out_index.offset(k) + (r << k);
                        out[dst..dst + (1 << k)].copy_from_slice(&probs[src..src + (1 << k)]);
                    }
                }
                Ok(PseudoDistribution { n: m, degree: self.degree, storage: Storage::Dense { index: out_index, probs: out } })
            }
        }
    }

    /// Average violation probability over the constraints inside `W` (all variables if `None`).
    pub fn val(&self, inst: &Nae3Instance, w: Option<&[usize]>) -> Result<f64, PdError> {
        if self.degree < 3 {
            return Err(PdError::DegreeTooLow { degree: self.degree, required: 3 });
        }
        if inst.n() != self.n {
            return Err(PdError::Invalid("instance and pseudodistribution sizes differ".into()));
        }
        let (total, count) = self.violation_mass(inst, w);
        Ok(if count == 0 { 0.0 } else { total / count as f64 })
    }

    /// Total violation probability and constraint count inside `W`.
    pub(crate) fn violation_mass(&self, inst: &Nae3Instance, w: Option<&[usize]>) -> (f64, usize) {
        let mut total = 0.0;
        let mut count = 0usize;
        match w {
            None => inst.for_each_constraint(|_, t, p| {
                total += self.triple_violation(t, p);
                count += 1;
            }),
            Some(w) => {
                for a in 0..w.len() {
                    for b in a + 1..w.len() {
                        for c in b + 1..w.len() {
                            let t = [w[a], w[b], w[c]];
                            if let Some(p) = inst.polarity(t) {
                                total += self.triple_violation(t, p);
                                count += 1;
                            }
                        }
                    }
                }
            }
        }
        (total, count)
    }

    /// Local sums, nonnegativity and consistency of every local against its
    /// sub-locals. Mixtures are consistent by construction; only their weight
    /// total is checked.
    pub fn check(&self, tol: f64) -> PdCheckReport {
        let mut rep = PdCheckReport {
            max_sum_deviation: 0.0,
            worst_sum_subset: vec![],
            max_consistency_deviation: 0.0,
            worst_consistency: None,
            min_probability: f64::INFINITY,
            tol,
        };
        match &self.storage {
            Storage::Mixture { support } => {
                let total: f64 = support.iter().map(|p| p.0).sum();
                rep.max_sum_deviation = (total - 1.0).abs();
                rep.min_probability = support.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            }
            Storage::Dense { index, probs } => {
                for k in 0..=index.max_k() {
                    for s in Combinations::new(self.n, k) {
                        let base = index.base(&s);
                        let local = &probs[base..base + (1 << k)];
                        let sum: f64 = local.iter().sum();
                        let dev = (sum - 1.0).abs();
                        if dev > rep.max_sum_deviation {
                            rep.max_sum_deviation = dev;
                            rep.worst_sum_subset = s.clone();
                        }
                        for &p in local {
                            rep.min_probability = rep.min_probability.min(p);
                        }
                        // every proper subset T ⊂ S, by position mask
                        for mask in 0..(1usize << k) - 1 {
                            let pos: Vec<usize> = (0..k).filter(|&i| (mask >> i) & 1 == 1).collect();
                            let t: Vec<usize> = pos.iter().map(|&i| s[i]).collect();
                            let marg = marginalize(local, k, &pos);
                            let tbase = index.base(&t);
                            for (b, &m) in marg.iter().enumerate() {
                                let dev = (m - probs[tbase + b]).abs();
                                if dev > rep.max_consistency_deviation {
                                    rep.max_consistency_deviation = dev;
                                    rep.worst_consistency = Some((s.clone(), t.clone(), b));
                                }
                            }
                        }
                    }
                }
            }
        }
        rep
    }

    /// KL divergence of `μ_T` from the product of its single-variable marginals
    /// (natural log). Returns `f64::INFINITY` when the joint puts mass where the product has none.
    pub fn correlation_kl(&self, t: &[usize]) -> Result<f64, PdError> {
        self.validate(t)?;
        if t.len() < 2 {
            return Err(PdError::InvalidSubset(t.to_vec()));
        }
        let joint = self.local_unchecked(t);
        let singles: Vec<[f64; 2]> = t.iter().map(|&v| self.single(v)).collect();
        let k = t.len();
        let mut kl = 0.0;
        for (a, &p) in joint.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let q: f64 = (0..k).map(|i| singles[i][(a >> (k - 1 - i)) & 1]).product();
            if q <= 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += p * (p / q).ln();
        }
        Ok(kl.max(0.0))
    }

    /// Debug dump, one line per subset: `S: p0 p1 ...`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for k in 0..=self.max_local() {
            for s in Combinations::new(self.n, k) {
                let l = self.local_unchecked(&s);
                let names: Vec<String> = s.iter().map(|v| (v + 1).to_string()).collect();
                let _ = write!(out, "{{{}}}:", names.join(","));
                for p in l {
                    let _ = write!(out, " {p}");
                }
                out.push('\n');
            }
        }
        out
    }
}
