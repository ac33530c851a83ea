//! Exhaustive optimum, constrained completion and ratio reporting.

use serde::Serialize;
use thiserror::Error;

use crate::instance::{nae_violated, Assignment, InstanceError, KcspInstance, Nae3Instance, PartialAssignment, Polarity};
use crate::subsets::encode;

/// Largest number of free variables enumerated exhaustively.
pub const BRUTE_MAX_N: usize = 24;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{free} free variables exceed the exhaustive cap of {cap}")]
    TooLarge { free: usize, cap: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Per-variable incidence lists `(other, other, polarities with this variable first)`.
struct Incidence {
    lists: Vec<Vec<(usize, usize, [Polarity; 3])>>,
}

impl Incidence {
    fn new(inst: &Nae3Instance) -> Self {
        let mut lists = vec![Vec::new(); inst.n()];
        inst.for_each_constraint(|_, [u, v, w], p| {
            lists[u].push((v, w, [p[0], p[1], p[2]]));
            lists[v].push((u, w, [p[1], p[0], p[2]]));
            lists[w].push((u, v, [p[2], p[0], p[1]]));
        });
        Incidence { lists }
    }

    /// Change in violated count if `x` is flipped under `bits`.
    fn flip_delta(&self, bits: &[bool], x: usize) -> i64 {
        let b = bits[x];
        let mut delta = 0i64;
        for &(y, z, p) in &self.lists[x] {
            let before = nae_violated(p, [b, bits[y], bits[z]]) as i64;
            let after = nae_violated(p, [!b, bits[y], bits[z]]) as i64;
            delta += after - before;
        }
        delta
    }
}

/// Minimum violated count over completions of `base` on `free` (sorted), with the
/// lexicographically smallest minimizer.
fn enumerate_min(inst: &Nae3Instance, mut bits: Vec<bool>, free: &[usize]) -> Result<(Vec<bool>, usize), OracleError> {
    let k = free.len();
    if k > BRUTE_MAX_N {
        return Err(OracleError::TooLarge { free: k, cap: BRUTE_MAX_N });
    }
    for &v in free {
        bits[v] = false;
    }
    let inc = Incidence::new(inst);
    let mut count = inst.violations(&Assignment(bits.clone()))? as i64;
    // code has the bit of free[0] as most significant, matching lexicographic order
    let mut code = 0u64;
    let mut best = (count, code);
    for i in 1u64..1 << k {
        let j = i.trailing_zeros() as usize;
        let x = free[k - 1 - j];
        count += inc.flip_delta(&bits, x);
        bits[x] = !bits[x];
        code ^= 1 << j;
        if (count, code) < best {
            best = (count, code);
        }
    }
    for (j, &v) in free.iter().enumerate() {
        bits[v] = best.1 >> (k - 1 - j) & 1 == 1;
    }
    Ok((bits, best.0 as usize))
}

/// Exact optimum `(α*, OPT)`; ties go to the lexicographically smallest assignment.
pub fn brute_opt(inst: &Nae3Instance) -> Result<(Assignment, f64), OracleError> {
    let free: Vec<usize> = (0..inst.n()).collect();
    let (bits, count) = enumerate_min(inst, vec![false; inst.n()], &free)?;
    Ok((Assignment(bits), fraction(inst, count)))
}

/// Best completion of `alpha`, keeping its fixed entries.
pub fn completion_opt(inst: &Nae3Instance, alpha: &PartialAssignment) -> Result<(Assignment, f64), OracleError> {
    if alpha.len() != inst.n() {
        return Err(InstanceError::LengthMismatch { expected: inst.n(), found: alpha.len() }.into());
    }
    let base: Vec<bool> = alpha.0.iter().map(|b| b.unwrap_or(false)).collect();
    let (bits, count) = enumerate_min(inst, base, &alpha.unfixed_vars())?;
    Ok((Assignment(bits), fraction(inst, count)))
}

/// Every satisfying assignment of a k-CSP by plain enumeration, in lexicographic order.
pub fn kcsp_satisfying(inst: &KcspInstance) -> Result<Vec<Assignment>, OracleError> {
    let n = inst.n();
    if n > BRUTE_MAX_N {
        return Err(OracleError::TooLarge { free: n, cap: BRUTE_MAX_N });
    }
    let constraints: Vec<_> = inst.constraints().collect();
    let mut out = Vec::new();
    for code in 0..1u64 << n {
        let a = Assignment::from_code(n, code);
        let bits = a.bits();
        if constraints.iter().all(|(s, t)| t.satisfied(encode(s.iter().map(|&v| bits[v])))) {
            out.push(a);
        }
    }
    Ok(out)
}

fn fraction(inst: &Nae3Instance, count: usize) -> f64 {
    if inst.num_constraints() == 0 {
        0.0
    } else {
        count as f64 / inst.num_constraints() as f64
    }
}

/// `num / den` with `0/0 = 1`; `None` when only the denominator is zero.
pub fn ratio(num: f64, den: f64) -> Option<f64> {
    const ZERO: f64 = 1e-12;
    match (num.abs() <= ZERO, den.abs() <= ZERO) {
        (true, true) => Some(1.0),
        (_, true) => None,
        _ => Some(num / den),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub name: String,
    pub val: f64,
    pub violations: usize,
    pub ratio_lp: Option<f64>,
    /// `val / max(lp_value, 1/m)` with `m` the constraint count.
    pub ratio_lp_floored: f64,
    pub ratio_opt: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioReport {
    pub n: usize,
    pub num_constraints: usize,
    pub lp_value: f64,
    pub opt: Option<f64>,
    pub opt_assignment: Option<String>,
    pub outputs: Vec<OutputRecord>,
}

/// Values and ratios of named outputs; OPT is included when `n ≤ opt_cap`.
pub fn ratio_report(
    inst: &Nae3Instance,
    lp_value: f64,
    outputs: &[(String, Assignment)],
    opt_cap: usize,
) -> Result<RatioReport, OracleError> {
    let opt = if inst.n() <= opt_cap.min(BRUTE_MAX_N) { Some(brute_opt(inst)?) } else { None };
    let m = inst.num_constraints().max(1) as f64;
    let mut records = Vec::with_capacity(outputs.len());
    for (name, alpha) in outputs {
        let violations = inst.violations(alpha)?;
        let val = violations as f64 / m;
        records.push(OutputRecord {
            name: name.clone(),
            val,
            violations,
            ratio_lp: ratio(val, lp_value),
            ratio_lp_floored: val / lp_value.max(1.0 / m),
            ratio_opt: opt.as_ref().and_then(|(_, o)| ratio(val, *o)),
        });
    }
    Ok(RatioReport {
        n: inst.n(),
        num_constraints: inst.num_constraints(),
        lp_value,
        opt: opt.as_ref().map(|(_, o)| *o),
        opt_assignment: opt.map(|(a, _)| a.to_string()),
        outputs: records,
    })
}
