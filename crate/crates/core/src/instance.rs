//! Complete NAE-3-SAT and complete k-CSP instances: evaluation, generators,
//! the dense reduction and the text file format.
//!
//! File format. NAE-3-SAT: header `p nae3 <n> <m>`, then `m` lines
//! `<u> <v> <w> <pu> <pv> <pw>` with 1-based ascending indices and polarity
//! bits (1 = positive). k-CSP: header `p kcsp <n> <k>`, then one line per
//! subset `<v1> ... <vk> <table>` where `table` is a `2^k`-character 0/1
//! string whose character `j` is the satisfaction of assignment `j` (first
//! variable most significant). Lines starting with `c` are comments.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::subsets::{binom, encode, Combinations, SubsetIndex};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate constraint on {}", one_based(.subset))]
    DuplicateConstraint { line: usize, subset: Vec<usize> },
    #[error("no constraint on {}", one_based(.0))]
    MissingConstraint(Vec<usize>),
    #[error("assignment has length {found}, instance has {expected} variables")]
    LengthMismatch { expected: usize, found: usize },
    #[error("instance is incomplete ({present} of {expected} constraints present)")]
    Incomplete { present: usize, expected: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn one_based(s: &[usize]) -> String {
    let parts: Vec<String> = s.iter().map(|v| (v + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// Per-member polarity of a constraint: the identity or the complement map on a bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    #[inline]
    pub fn apply(self, b: bool) -> bool {
        match self {
            Polarity::Positive => b,
            Polarity::Negative => !b,
        }
    }

    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    pub fn from_bit(positive: bool) -> Polarity {
        if positive {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Polarity::Positive
    }
}

/// True iff the three polarity-mapped bits are all equal.
#[inline]
pub fn nae_violated(pol: [Polarity; 3], bits: [bool; 3]) -> bool {
    let a = pol[0].apply(bits[0]);
    let b = pol[1].apply(bits[1]);
    let c = pol[2].apply(bits[2]);
    a == b && b == c
}

/// The two assignments (as 3-bit indices, first variable most significant)
/// that violate a constraint with the given polarities.
pub fn violating_assignments(pol: [Polarity; 3]) -> [usize; 2] {
    let mut out = [0usize; 2];
    for (slot, lit) in [false, true].into_iter().enumerate() {
        let bits = [pol[0].apply(lit), pol[1].apply(lit), pol[2].apply(lit)];
        out[slot] = encode(bits);
    }
    out
}

/// A global assignment of Boolean values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment(pub Vec<bool>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn complement(&self) -> Assignment {
        Assignment(self.0.iter().map(|b| !b).collect())
    }

    /// Assignment whose bit `i` is bit `n-1-i` of `code`.
    pub fn from_code(n: usize, code: u64) -> Assignment {
        Assignment((0..n).map(|i| (code >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn parse(s: &str) -> Option<Assignment> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<bool>>>()
            .map(Assignment)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Per-variable value in {0, ½, 1}; `None` is ½ (unfixed).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialAssignment(pub Vec<Option<bool>>);

impl PartialAssignment {
    pub fn unfixed(n: usize) -> Self {
        PartialAssignment(vec![None; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, v: usize) -> Option<bool> {
        self.0[v]
    }

    pub fn set(&mut self, v: usize, b: bool) {
        self.0[v] = Some(b);
    }

    /// Sorted unfixed set V_U.
    pub fn unfixed_vars(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&v| self.0[v].is_none()).collect()
    }

    /// Sorted fixed set V_F.
    pub fn fixed_vars(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&v| self.0[v].is_some()).collect()
    }

    /// The total assignment, if every variable is fixed.
    pub fn to_total(&self) -> Option<Assignment> {
        self.0.iter().copied().collect::<Option<Vec<bool>>>().map(Assignment)
    }
}

impl fmt::Display for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            f.write_str(match v {
                Some(false) => "0",
                Some(true) => "1",
                None => "*",
            })?;
        }
        Ok(())
    }
}

/// NAE-3-SAT instance with at most one constraint per variable triple,
/// stored in a flat array indexed by the lexicographic rank of the triple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nae3Instance {
    n: usize,
    constraints: Vec<Option<[Polarity; 3]>>,
    present: usize,
}

impl Nae3Instance {
    /// Complete instance from polarities listed in lexicographic triple order.
    pub fn complete(n: usize, polarities: Vec<[Polarity; 3]>) -> Result<Self, InstanceError> {
        check_n(n)?;
        if polarities.len() != binom(n, 3) {
            return Err(InstanceError::InvalidParameter(format!(
                "expected {} triples, got {}",
                binom(n, 3),
                polarities.len()
            )));
        }
        let present = polarities.len();
        Ok(Nae3Instance { n, constraints: polarities.into_iter().map(Some).collect(), present })
    }

    /// Instance with no constraints; fill it with [`Nae3Instance::insert`].
    pub fn empty(n: usize) -> Result<Self, InstanceError> {
        check_n(n)?;
        Ok(Nae3Instance { n, constraints: vec![None; binom(n, 3)], present: 0 })
    }

    /// Add a constraint on a strictly increasing triple. Returns false if one was already present.
    pub fn insert(&mut self, triple: [usize; 3], pol: [Polarity; 3]) -> bool {
        let r = triple_rank(self.n, triple);
        if self.constraints[r].is_some() {
            return false;
        }
        self.constraints[r] = Some(pol);
        self.present += 1;
        true
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of constraints present.
    pub fn num_constraints(&self) -> usize {
        self.present
    }

    pub fn is_complete(&self) -> bool {
        self.present == self.constraints.len()
    }

    pub fn require_complete(&self) -> Result<(), InstanceError> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(InstanceError::Incomplete { present: self.present, expected: self.constraints.len() })
        }
    }

    pub fn polarity(&self, triple: [usize; 3]) -> Option<[Polarity; 3]> {
        self.constraints[triple_rank(self.n, triple)]
    }

    pub fn polarity_by_rank(&self, rank: usize) -> Option<[Polarity; 3]> {
        self.constraints[rank]
    }

    /// Visit every present constraint as `(rank, triple, polarities)` in lexicographic order.
    pub fn for_each_constraint(&self, mut f: impl FnMut(usize, [usize; 3], [Polarity; 3])) {
        let mut rank = 0;
        for u in 0..self.n {
            for v in u + 1..self.n {
                for w in v + 1..self.n {
                    if let Some(p) = self.constraints[rank] {
                        f(rank, [u, v, w], p);
                    }
                    rank += 1;
                }
            }
        }
    }

    pub fn constraints(&self) -> Vec<([usize; 3], [Polarity; 3])> {
        let mut out = Vec::with_capacity(self.present);
        self.for_each_constraint(|_, t, p| out.push((t, p)));
        out
    }

    /// Whether `bits` (values of the triple's members, in order) satisfy the constraint.
    pub fn eval_nae(&self, triple: [usize; 3], bits: [bool; 3]) -> Result<bool, InstanceError> {
        let mut t = triple;
        t.sort_unstable();
        if t[0] == t[1] || t[1] == t[2] || t[2] >= self.n {
            return Err(InstanceError::MissingConstraint(t.to_vec()));
        }
        // bits follow the caller's order; permute them alongside the triple
        let mut pairs = [(triple[0], bits[0]), (triple[1], bits[1]), (triple[2], bits[2])];
        pairs.sort_unstable_by_key(|p| p.0);
        let pol = self.polarity(t).ok_or_else(|| InstanceError::MissingConstraint(t.to_vec()))?;
        Ok(!nae_violated(pol, [pairs[0].1, pairs[1].1, pairs[2].1]))
    }

    /// Number of present constraints violated by `alpha`.
    pub fn violations(&self, alpha: &Assignment) -> Result<usize, InstanceError> {
        self.check_len(alpha.len())?;
        let a = alpha.bits();
        let mut count = 0;
        self.for_each_constraint(|_, [u, v, w], p| {
            if nae_violated(p, [a[u], a[v], a[w]]) {
                count += 1;
            }
        });
        Ok(count)
    }

    /// Fraction of constraints violated by `alpha`.
    pub fn val_assignment(&self, alpha: &Assignment) -> Result<f64, InstanceError> {
        let v = self.violations(alpha)?;
        Ok(if self.present == 0 { 0.0 } else { v as f64 / self.present as f64 })
    }

    /// Steepest-descent single-flip local search; stops at a local minimum.
    pub fn local_search(&self, start: Assignment) -> Assignment {
        let mut a = start.0;
        assert_eq!(a.len(), self.n, "assignment length");
        let mut gain = vec![0i64; self.n];
        loop {
            gain.iter_mut().for_each(|g| *g = 0);
            self.for_each_constraint(|_, t, p| {
                let bits = [a[t[0]], a[t[1]], a[t[2]]];
                let before = nae_violated(p, bits) as i64;
                for i in 0..3 {
                    let mut b = bits;
                    b[i] = !b[i];
                    gain[t[i]] += before - nae_violated(p, b) as i64;
                }
            });
            match (0..self.n).max_by_key(|&v| (gain[v], std::cmp::Reverse(v))) {
                Some(v) if gain[v] > 0 => a[v] = !a[v],
                _ => return Assignment(a),
            }
        }
    }

    /// Instance with every polarity complemented.
    pub fn complemented(&self) -> Nae3Instance {
        Nae3Instance {
            n: self.n,
            constraints: self
                .constraints
                .iter()
                .map(|c| c.map(|p| [p[0].flip(), p[1].flip(), p[2].flip()]))
                .collect(),
            present: self.present,
        }
    }

    /// The same constraints as arity-3 truth tables.
    pub fn to_kcsp(&self) -> Result<KcspInstance, InstanceError> {
        self.require_complete()?;
        let mut tables = Vec::with_capacity(self.present);
        self.for_each_constraint(|_, _, p| {
            let bad = violating_assignments(p);
            tables.push(TruthTable::from_fn(3, |a| !bad.contains(&a)));
        });
        KcspInstance::complete(self.n, 3, tables)
    }

    fn check_len(&self, len: usize) -> Result<(), InstanceError> {
        if len != self.n {
            return Err(InstanceError::LengthMismatch { expected: self.n, found: len });
        }
        Ok(())
    }
}

fn check_n(n: usize) -> Result<(), InstanceError> {
    if n < 3 {
        return Err(InstanceError::InvalidParameter(format!("need n >= 3, got {n}")));
    }
    Ok(())
}

/// Lexicographic rank of a strictly increasing triple of `[n]`.
#[inline]
pub fn triple_rank(n: usize, t: [usize; 3]) -> usize {
    let colex = binom(n - 1 - t[0], 3) + binom(n - 1 - t[1], 2) + (n - 1 - t[2]);
    binom(n, 3) - 1 - colex
}

/// Truth table over `2^k` assignments; bit `j` is the satisfaction of assignment `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    k: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    pub fn new(k: usize, bits: Vec<bool>) -> Result<Self, InstanceError> {
        if bits.len() != 1 << k {
            return Err(InstanceError::InvalidParameter(format!(
                "table for arity {k} needs {} bits, got {}",
                1 << k,
                bits.len()
            )));
        }
        if bits.iter().all(|&b| b) {
            return Err(InstanceError::InvalidParameter("table has no unsatisfying assignment".into()));
        }
        Ok(TruthTable { k, bits })
    }

    pub fn from_fn(k: usize, f: impl Fn(usize) -> bool) -> Self {
        TruthTable { k, bits: (0..1usize << k).map(f).collect() }
    }

    pub fn parse(k: usize, s: &str) -> Result<Self, InstanceError> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(InstanceError::InvalidParameter(format!("bad table character {other:?}"))),
            })
            .collect::<Result<Vec<bool>, _>>()?;
        TruthTable::new(k, bits)
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn satisfied(&self, alpha: usize) -> bool {
        self.bits[alpha]
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// k-CSP with at most one truth table per k-subset (flat, rank indexed).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KcspInstance {
    n: usize,
    k: usize,
    index: SubsetIndex,
    tables: Vec<Option<TruthTable>>,
    present: usize,
}

impl KcspInstance {
    /// Complete instance from tables listed in lexicographic subset order.
    pub fn complete(n: usize, k: usize, tables: Vec<TruthTable>) -> Result<Self, InstanceError> {
        let mut inst = KcspInstance::empty(n, k)?;
        if tables.len() != binom(n, k) {
            return Err(InstanceError::InvalidParameter(format!(
                "expected {} tables, got {}",
                binom(n, k),
                tables.len()
            )));
        }
        for (r, t) in tables.into_iter().enumerate() {
            if t.arity() != k {
                return Err(InstanceError::InvalidParameter("table arity mismatch".into()));
            }
            inst.tables[r] = Some(t);
        }
        inst.present = inst.tables.len();
        Ok(inst)
    }

    pub fn empty(n: usize, k: usize) -> Result<Self, InstanceError> {
        if k < 2 || k > n {
            return Err(InstanceError::InvalidParameter(format!("need 2 <= k <= n, got k={k}, n={n}")));
        }
        let index = SubsetIndex::new(n, k);
        let count = index.count(k);
        Ok(KcspInstance { n, k, index, tables: vec![None; count], present: 0 })
    }

    /// Add a table on a strictly increasing subset. Returns false if one was already present.
    pub fn insert(&mut self, subset: &[usize], table: TruthTable) -> bool {
        let r = self.index.rank(subset);
        if self.tables[r].is_some() {
            return false;
        }
        self.tables[r] = Some(table);
        self.present += 1;
        true
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_constraints(&self) -> usize {
        self.present
    }

    pub fn is_complete(&self) -> bool {
        self.present == self.tables.len()
    }

    pub fn require_complete(&self) -> Result<(), InstanceError> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(InstanceError::Incomplete { present: self.present, expected: self.tables.len() })
        }
    }

    pub fn subset_index(&self) -> &SubsetIndex {
        &self.index
    }

    pub fn table(&self, subset: &[usize]) -> Option<&TruthTable> {
        self.tables[self.index.rank(subset)].as_ref()
    }

    pub fn table_by_rank(&self, rank: usize) -> Option<&TruthTable> {
        self.tables[rank].as_ref()
    }

    /// Present constraints in lexicographic order.
    pub fn constraints(&self) -> impl Iterator<Item = (Vec<usize>, &TruthTable)> + '_ {
        Combinations::new(self.n, self.k)
            .zip(self.tables.iter())
            .filter_map(|(s, t)| t.as_ref().map(|t| (s, t)))
    }

    pub fn violations(&self, alpha: &Assignment) -> Result<usize, InstanceError> {
        if alpha.len() != self.n {
            return Err(InstanceError::LengthMismatch { expected: self.n, found: alpha.len() });
        }
        let a = alpha.bits();
        Ok(self
            .constraints()
            .filter(|(s, t)| !t.satisfied(encode(s.iter().map(|&v| a[v]))))
            .count())
    }

    /// Fraction of constraints violated by `alpha`.
    pub fn val_kcsp(&self, alpha: &Assignment) -> Result<f64, InstanceError> {
        let v = self.violations(alpha)?;
        Ok(if self.present == 0 { 0.0 } else { v as f64 / self.present as f64 })
    }
}

/// Either kind of instance, as read from a file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    Nae3(Nae3Instance),
    Kcsp(KcspInstance),
}

impl Instance {
    pub fn n(&self) -> usize {
        match self {
            Instance::Nae3(i) => i.n(),
            Instance::Kcsp(i) => i.n(),
        }
    }

    pub fn is_complete(&self) -> bool {
        match self {
            Instance::Nae3(i) => i.is_complete(),
            Instance::Kcsp(i) => i.is_complete(),
        }
    }

    /// Canonical text serialization.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Instance::Nae3(inst) => {
                if !inst.is_complete() {
                    out.push_str("c incomplete\n");
                }
                out.push_str(&format!("p nae3 {} {}\n", inst.n, inst.present));
                inst.for_each_constraint(|_, [u, v, w], p| {
                    let b = |q: Polarity| if q.is_positive() { 1 } else { 0 };
                    out.push_str(&format!(
                        "{} {} {} {} {} {}\n",
                        u + 1,
                        v + 1,
                        w + 1,
                        b(p[0]),
                        b(p[1]),
                        b(p[2])
                    ));
                });
            }
            Instance::Kcsp(inst) => {
                if !inst.is_complete() {
                    out.push_str("c incomplete\n");
                }
                out.push_str(&format!("p kcsp {} {}\n", inst.n, inst.k));
                for (s, t) in inst.constraints() {
                    for v in s {
                        out.push_str(&format!("{} ", v + 1));
                    }
                    out.push_str(&format!("{t}\n"));
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

impl From<Nae3Instance> for Instance {
    fn from(i: Nae3Instance) -> Self {
        Instance::Nae3(i)
    }
}

impl From<KcspInstance> for Instance {
    fn from(i: KcspInstance) -> Self {
        Instance::Kcsp(i)
    }
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    std::fs::write(path, inst.to_text())?;
    Ok(())
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('c'));
    let (hline, header) = lines.next().ok_or(InstanceError::Parse { line: 0, message: "missing header".into() })?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let perr = |line: usize, message: String| InstanceError::Parse { line, message };
    if h.len() != 4 || h[0] != "p" {
        return Err(perr(hline, format!("malformed header {header:?}")));
    }
    let num = |s: &str, line: usize| s.parse::<usize>().map_err(|_| perr(line, format!("expected a number, got {s:?}")));
    let n = num(h[2], hline)?;
    match h[1] {
        "nae3" => {
            let m = num(h[3], hline)?;
            let mut inst = Nae3Instance::empty(n).map_err(|e| perr(hline, e.to_string()))?;
            let mut count = 0;
            for (line, l) in lines {
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 6 {
                    return Err(perr(line, format!("expected 6 fields, got {}", f.len())));
                }
                let mut t = [0usize; 3];
                for i in 0..3 {
                    let v = num(f[i], line)?;
                    if v == 0 || v > n {
                        return Err(perr(line, format!("variable {v} out of range 1..={n}")));
                    }
                    t[i] = v - 1;
                }
                if !(t[0] < t[1] && t[1] < t[2]) {
                    return Err(perr(line, "variables must be strictly ascending".into()));
                }
                let mut pol = [Polarity::Positive; 3];
                for i in 0..3 {
                    pol[i] = match f[3 + i] {
                        "1" => Polarity::Positive,
                        "0" => Polarity::Negative,
                        other => return Err(perr(line, format!("polarity must be 0 or 1, got {other:?}"))),
                    };
                }
                if !inst.insert(t, pol) {
                    return Err(InstanceError::DuplicateConstraint { line, subset: t.to_vec() });
                }
                count += 1;
            }
            if count != m {
                return Err(perr(hline, format!("header declares {m} constraints, found {count}")));
            }
            Ok(Instance::Nae3(inst))
        }
        "kcsp" => {
            let k = num(h[3], hline)?;
            let mut inst = KcspInstance::empty(n, k).map_err(|e| perr(hline, e.to_string()))?;
            for (line, l) in lines {
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != k + 1 {
                    return Err(perr(line, format!("expected {} fields, got {}", k + 1, f.len())));
                }
                let mut s = Vec::with_capacity(k);
                for field in &f[..k] {
                    let v = num(field, line)?;
                    if v == 0 || v > n {
                        return Err(perr(line, format!("variable {v} out of range 1..={n}")));
                    }
                    s.push(v - 1);
                }
                if s.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(perr(line, "variables must be strictly ascending".into()));
                }
                let table = TruthTable::parse(k, f[k]).map_err(|e| perr(line, e.to_string()))?;
                if !inst.insert(&s, table) {
                    return Err(InstanceError::DuplicateConstraint { line, subset: s });
                }
            }
            Ok(Instance::Kcsp(inst))
        }
        other => Err(perr(hline, format!("unknown instance kind {other:?}"))),
    }
}

fn random_polarities(rng: &mut ChaCha8Rng) -> [Polarity; 3] {
    [Polarity::from_bit(rng.random()), Polarity::from_bit(rng.random()), Polarity::from_bit(rng.random())]
}

/// Complete instance with independent uniform polarities.
pub fn gen_random_nae3(n: usize, seed: u64) -> Result<Nae3Instance, InstanceError> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pols = (0..binom(n, 3)).map(|_| random_polarities(&mut rng)).collect();
    Nae3Instance::complete(n, pols)
}

/// Output of [`gen_planted_nae3`].
#[derive(Clone, Debug)]
pub struct Planted {
    pub instance: Nae3Instance,
    pub planted: Assignment,
    pub violated_count: usize,
}

/// Complete instance with a hidden assignment violating each triple independently with probability `p`.
pub fn gen_planted_nae3(n: usize, p: f64, seed: u64) -> Result<Planted, InstanceError> {
    check_n(n)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(InstanceError::InvalidParameter(format!("corruption fraction {p} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    let mut pols = Vec::with_capacity(binom(n, 3));
    let mut violated_count = 0;
    for u in 0..n {
        for v in u + 1..n {
            for w in v + 1..n {
                let corrupt = rng.random::<f64>() < p;
                let bits = [planted[u], planted[v], planted[w]];
                // patterns are the 8 polarity triples; 2 violate, 6 satisfy
                let candidates: Vec<[Polarity; 3]> = (0..8usize)
                    .map(|code| [0, 1, 2].map(|i| Polarity::from_bit((code >> (2 - i)) & 1 == 1)))
                    .filter(|&pol| nae_violated(pol, bits) == corrupt)
                    .collect();
                pols.push(candidates[rng.random_range(0..candidates.len())]);
                violated_count += corrupt as usize;
            }
        }
    }
    Ok(Planted { instance: Nae3Instance::complete(n, pols)?, planted: Assignment(planted), violated_count })
}

/// Complete k-CSP whose table bits are each 0 with probability `zero_prob`,
/// with one forced 0 in any table that came out all ones.
pub fn gen_random_kcsp(n: usize, k: usize, zero_prob: f64, seed: u64) -> Result<KcspInstance, InstanceError> {
    gen_kcsp(n, k, zero_prob, seed, None)
}

/// As [`gen_random_kcsp`] but every table is satisfied by a hidden uniform assignment.
pub fn gen_planted_kcsp(
    n: usize,
    k: usize,
    zero_prob: f64,
    seed: u64,
) -> Result<(KcspInstance, Assignment), InstanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let planted = Assignment((0..n).map(|_| rng.random()).collect());
    let inst = gen_kcsp(n, k, zero_prob, seed, Some(&planted))?;
    Ok((inst, planted))
}

fn gen_kcsp(
    n: usize,
    k: usize,
    zero_prob: f64,
    seed: u64,
    planted: Option<&Assignment>,
) -> Result<KcspInstance, InstanceError> {
    if !(0.0..=1.0).contains(&zero_prob) {
        return Err(InstanceError::InvalidParameter(format!("zero probability {zero_prob} outside [0,1]")));
    }
    if k < 2 || k > n {
        return Err(InstanceError::InvalidParameter(format!("need 2 <= k <= n, got k={k}, n={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tables = Vec::with_capacity(binom(n, k));
    for s in Combinations::new(n, k) {
        let keep = planted.map(|a| encode(s.iter().map(|&v| a.bits()[v])));
        let mut bits: Vec<bool> = (0..1usize << k).map(|_| rng.random::<f64>() >= zero_prob).collect();
        if let Some(j) = keep {
            bits[j] = true;
        }
        if bits.iter().all(|&b| b) {
            let choices: Vec<usize> = (0..1usize << k).filter(|&j| Some(j) != keep).collect();
            bits[choices[rng.random_range(0..choices.len())]] = false;
        }
        tables.push(TruthTable::new(k, bits)?);
    }
    KcspInstance::complete(n, k, tables)
}

/// Default cap on the total variable count produced by [`densify_reduction`].
pub const DENSIFY_DEFAULT_MAX_N: usize = 200;

/// Embed a sparse NAE-3-SAT instance on `n₀` variables into an almost complete one.
///
/// Adds `min(⌈3·n₀/ε⌉, max_n − n₀)` dummy variables (indices after the
/// originals), the constraint `(v1, v2, ¬v3)` on every dummy triple and
/// `(v, v1, ¬v2)` for every original `v` and dummy pair `v1 < v2`. Extending
/// any original assignment by all-true dummies satisfies every added constraint.
pub fn densify_reduction(sparse: &Nae3Instance, eps: f64, max_n: usize) -> Result<Nae3Instance, InstanceError> {
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(InstanceError::InvalidParameter(format!("epsilon {eps} outside (0, 1/1000]")));
    }
    let n0 = sparse.n();
    if max_n < n0 + 2 {
        return Err(InstanceError::InvalidParameter(format!(
            "variable cap {max_n} leaves fewer than 2 dummies for {n0} originals"
        )));
    }
    let wanted = (3.0 * n0 as f64 / eps).ceil() as usize;
    let dummies = wanted.min(max_n - n0);
    let n = n0 + dummies;
    let mut dense = Nae3Instance::empty(n)?;
    for (t, p) in sparse.constraints() {
        dense.insert(t, p);
    }
    use Polarity::{Negative as N, Positive as P};
    for v1 in n0..n {
        for v2 in v1 + 1..n {
            for v in 0..n0 {
                dense.insert([v, v1, v2], [P, P, N]);
            }
            for v3 in v2 + 1..n {
                dense.insert([v1, v2, v3], [P, P, N]);
            }
        }
    }
    Ok(dense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert_eq, proptest};
    use Polarity::{Negative as N, Positive as P};

    fn single(pol: [Polarity; 3]) -> Nae3Instance {
        Nae3Instance::complete(3, vec![pol]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let inst = single([P, P, P]);
        assert!(!inst.eval_nae([0, 1, 2], [false, false, false]).unwrap());
        assert!(inst.eval_nae([0, 1, 2], [false, false, true]).unwrap());
        let inst = single([P, P, N]);
        assert!(inst.eval_nae([0, 1, 2], [true, true, true]).unwrap());
        let mut sparse = Nae3Instance::empty(4).unwrap();
        sparse.insert([0, 1, 2], [P, P, P]);
        assert!(matches!(
            sparse.eval_nae([0, 1, 3], [true, true, true]),
            Err(InstanceError::MissingConstraint(_))
        ));
    }

    #[test]
    fn eval_accepts_unsorted_triples() {
        let inst = single([P, P, N]);
        // (w, u, v) order: w=1 maps to 0, u=v=0
        assert!(inst.eval_nae([2, 0, 1], [true, false, false]).unwrap() == !nae_violated([P, P, N], [false, false, true]));
    }

    #[test]
    fn val_examples() {
        let inst = single([P, P, P]);
        assert_eq!(inst.val_assignment(&Assignment(vec![false, false, true])).unwrap(), 0.0);
        assert_eq!(inst.val_assignment(&Assignment(vec![true, true, true])).unwrap(), 1.0);
        assert!(matches!(
            inst.val_assignment(&Assignment(vec![true])),
            Err(InstanceError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn kcsp_inequality_examples() {
        let t = TruthTable::parse(2, "0110").unwrap();
        let inst = KcspInstance::complete(2, 2, vec![t]).unwrap();
        assert_eq!(inst.val_kcsp(&Assignment(vec![false, true])).unwrap(), 0.0);
        assert_eq!(inst.val_kcsp(&Assignment(vec![false, false])).unwrap(), 1.0);
        assert!(TruthTable::parse(2, "1111").is_err());
        assert!(TruthTable::parse(2, "011").is_err());
    }

    /// Evaluates a k-CSP by walking subsets in reverse lexicographic order.
    fn reverse_evaluator(inst: &KcspInstance, a: &[bool]) -> usize {
        let subsets: Vec<Vec<usize>> = Combinations::new(inst.n(), inst.k()).collect();
        let mut bad = 0;
        for s in subsets.iter().rev() {
            let mut code = 0usize;
            for (i, &v) in s.iter().enumerate() {
                if a[v] {
                    code |= 1 << (s.len() - 1 - i);
                }
            }
            if !inst.table(s).unwrap().satisfied(code) {
                bad += 1;
            }
        }
        bad
    }

    #[test]
    fn kcsp_val_matches_reverse_evaluator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20 {
            let k = 2 + (seed as usize % 3);
            let inst = gen_random_kcsp(7, k, 0.3, seed).unwrap();
            let a: Vec<bool> = (0..7).map(|_| rng.random()).collect();
            assert_eq!(inst.violations(&Assignment(a.clone())).unwrap(), reverse_evaluator(&inst, &a));
        }
    }

    #[test]
    fn random_generator_is_deterministic() {
        let a = Instance::from(gen_random_nae3(5, 1).unwrap()).to_text();
        let b = Instance::from(gen_random_nae3(5, 1).unwrap()).to_text();
        let c = Instance::from(gen_random_nae3(5, 2).unwrap()).to_text();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(gen_random_nae3(3, 9).unwrap().num_constraints(), 1);
        assert!(gen_random_nae3(2, 0).is_err());
    }

    #[test]
    fn planted_generator_edges() {
        for seed in 0..5 {
            let pl = gen_planted_nae3(8, 0.0, seed).unwrap();
            assert_eq!(pl.violated_count, 0);
            assert_eq!(pl.instance.val_assignment(&pl.planted).unwrap(), 0.0);
            let pl = gen_planted_nae3(8, 1.0, seed).unwrap();
            assert_eq!(pl.instance.val_assignment(&pl.planted).unwrap(), 1.0);
        }
        assert!(gen_planted_nae3(8, 1.5, 0).is_err());
    }

    #[test]
    fn planted_count_matches_scan() {
        let pl = gen_planted_nae3(10, 0.1, 77).unwrap();
        let mut scan = 0;
        for t in Combinations::new(10, 3) {
            let bits = [pl.planted.0[t[0]], pl.planted.0[t[1]], pl.planted.0[t[2]]];
            if !pl.instance.eval_nae([t[0], t[1], t[2]], bits).unwrap() {
                scan += 1;
            }
        }
        assert_eq!(scan, pl.violated_count);
        assert!(pl.violated_count > 0);
    }

    #[test]
    fn round_trip_and_parse_errors() {
        let inst = Instance::from(gen_random_nae3(6, 7).unwrap());
        assert_eq!(parse_instance(&inst.to_text()).unwrap(), inst);

        let kc = Instance::from(gen_random_kcsp(5, 3, 0.4, 3).unwrap());
        let text = kc.to_text();
        assert!(text.lines().nth(1).unwrap().ends_with(['0', '1']));
        assert_eq!(parse_instance(&text).unwrap(), kc);

        let dup = "c dup\np nae3 4 2\n1 2 3 1 1 1\n1 2 3 0 1 1\n";
        let err = parse_instance(dup).unwrap_err();
        assert!(matches!(err, InstanceError::DuplicateConstraint { line: 4, .. }));
        assert!(err.to_string().contains("{1,2,3}"));

        let bad = "p nae3 4 1\n1 2 9 1 1 1\n";
        assert!(matches!(parse_instance(bad), Err(InstanceError::Parse { line: 2, .. })));

        let partial = parse_instance("p nae3 4 1\n1 2 3 1 0 1\n").unwrap();
        assert!(!partial.is_complete());
        assert!(partial.to_text().starts_with("c incomplete"));
    }

    #[test]
    fn kcsp_export_of_nae_agrees() {
        let inst = gen_random_nae3(6, 3).unwrap();
        let kc = inst.to_kcsp().unwrap();
        for code in 0..64u64 {
            let a = Assignment::from_code(6, code);
            assert_eq!(inst.violations(&a).unwrap(), kc.violations(&a).unwrap());
        }
    }

    #[test]
    fn densify_examples() {
        let empty = Nae3Instance::empty(3).unwrap();
        let dense = densify_reduction(&empty, 0.001, 12).unwrap();
        assert_eq!(dense.n(), 12);
        assert_eq!(dense.violations(&Assignment(vec![true; 12])).unwrap(), 0);
        assert!(!dense.is_complete());
        assert!(densify_reduction(&empty, 0.01, 12).is_err());
        assert!(densify_reduction(&empty, 0.0, 12).is_err());
    }

    proptest! {
        #[test]
        fn nae_symmetry(p in 0usize..8, b in 0usize..8) {
            let pol = [0, 1, 2].map(|i| Polarity::from_bit((p >> i) & 1 == 1));
            let bits = [0, 1, 2].map(|i| (b >> i) & 1 == 1);
            let fp = pol.map(Polarity::flip);
            let fb = bits.map(|x| !x);
            prop_assert_eq!(nae_violated(pol, bits), nae_violated(fp, fb));
            prop_assert_eq!(nae_violated(pol, bits), nae_violated(pol, fb));
        }

        #[test]
        fn complemented_instance_value(seed in 0u64..1000, code in 0u64..256) {
            let inst = gen_random_nae3(8, seed).unwrap();
            let a = Assignment::from_code(8, code);
            prop_assert_eq!(
                inst.val_assignment(&a).unwrap(),
                inst.complemented().val_assignment(&a.complement()).unwrap()
            );
        }

        #[test]
        fn densify_preserves_violations(seed in 0u64..500, m in 0usize..12) {
            let n0 = 6;
            let base = gen_random_nae3(n0, seed).unwrap();
            let mut sparse = Nae3Instance::empty(n0).unwrap();
            for (t, p) in base.constraints().into_iter().take(m) {
                sparse.insert(t, p);
            }
            let dense = densify_reduction(&sparse, 0.0005, 10).unwrap();
            for code in 0..1u64 << n0 {
                let a = Assignment::from_code(n0, code);
                let mut ext = a.0.clone();
                ext.extend(std::iter::repeat_n(true, dense.n() - n0));
                prop_assert_eq!(sparse.violations(&a).unwrap(), dense.violations(&Assignment(ext)).unwrap());
            }
        }
    }
}
