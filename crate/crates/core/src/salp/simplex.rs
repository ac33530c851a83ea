//! Bundled two-phase revised simplex for `min cᵀx s.t. Ax = b, x ≥ 0`.
//!
//! The basis inverse is kept as a dense LU factorization with partial
//! pivoting plus a product-form eta file, refactorized periodically.
//! Pricing is Dantzig's rule; after a run of degenerate pivots it switches to
//! Bland's rule until the objective moves again.

/// Sparse column: `(row, value)` pairs.
pub type SparseCol = Vec<(usize, f64)>;

/// `min cᵀx s.t. Ax = b, x ≥ 0` with `A` stored by columns.
#[derive(Clone, Debug, Default)]
pub struct StandardLp {
    pub num_rows: usize,
    pub cols: Vec<SparseCol>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Reduced-cost optimality tolerance.
    pub opt_tol: f64,
    /// Primal feasibility tolerance.
    pub feas_tol: f64,
    pub max_iterations: usize,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { opt_tol: 1e-10, feas_tol: 1e-9, max_iterations: 200_000, refactor_every: 64, bland_after: 50 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    Singular,
}

#[derive(Clone, Debug)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    /// Row duals `π` with `c − Aᵀπ ≥ 0` at optimality.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct DenseLu {
    m: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn factor(m: usize, mut a: Vec<f64>) -> Option<DenseLu> {
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let mut p = k;
            let mut best = a[k * m + k].abs();
            for i in k + 1..m {
                let v = a[i * m + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-11 {
                return None;
            }
            if p != k {
                for j in 0..m {
                    a.swap(k * m + j, p * m + j);
                }
                perm.swap(k, p);
            }
            let piv = a[k * m + k];
            for i in k + 1..m {
                let f = a[i * m + k] / piv;
                if f != 0.0 {
                    a[i * m + k] = f;
                    let (top, bottom) = a.split_at_mut(i * m);
                    let row_k = &top[k * m + k + 1..k * m + m];
                    let row_i = &mut bottom[k + 1..m];
                    for (x, y) in row_i.iter_mut().zip(row_k) {
                        *x -= f * y;
                    }
                } else {
                    a[i * m + k] = 0.0;
                }
            }
        }
        Some(DenseLu { m, lu: a, perm })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..m {
            let row = &self.lu[i * m..i * m + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..m).rev() {
            let row = &self.lu[i * m + i + 1..i * m + m];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / self.lu[i * m + i];
        }
        x
    }

    fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut v = rhs.to_vec();
        // Uᵀ w = z
        for i in 0..m {
            v[i] /= self.lu[i * m + i];
            let vi = v[i];
            if vi != 0.0 {
                let row = &self.lu[i * m + i + 1..i * m + m];
                for (x, a) in v[i + 1..].iter_mut().zip(row) {
                    *x -= a * vi;
                }
            }
        }
        // Lᵀ u = w
        for i in (0..m).rev() {
            let vi = v[i];
            if vi != 0.0 {
                let row = &self.lu[i * m..i * m + i];
                for (x, a) in v[..i].iter_mut().zip(row) {
                    *x -= a * vi;
                }
            }
        }
        let mut y = vec![0.0; m];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = v[i];
        }
        y
    }
}

struct Eta {
    r: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

struct Basis {
    lu: DenseLu,
    etas: Vec<Eta>,
}

impl Basis {
    fn ftran(&self, a: &[f64]) -> Vec<f64> {
        let mut y = self.lu.solve(a);
        for e in &self.etas {
            let yr = y[e.r] / e.pivot;
            if yr != 0.0 {
                for &(i, w) in &e.entries {
                    y[i] -= w * yr;
                }
            }
            y[e.r] = yr;
        }
        y
    }

    fn btran(&self, c: &[f64]) -> Vec<f64> {
        let mut z = c.to_vec();
        for e in self.etas.iter().rev() {
            let s: f64 = e.entries.iter().map(|&(i, w)| w * z[i]).sum();
            z[e.r] = (z[e.r] - s) / e.pivot;
        }
        self.lu.solve_transpose(&z)
    }

    fn push(&mut self, r: usize, w: &[f64]) {
        let entries = w.iter().enumerate().filter(|&(i, &v)| i != r && v != 0.0).map(|(i, &v)| (i, v)).collect();
        self.etas.push(Eta { r, pivot: w[r], entries });
    }
}

struct Solver<'a> {
    lp: &'a StandardLp,
    opts: SimplexOptions,
    m: usize,
    nstruct: usize,
    sign: Vec<f64>,
    b: Vec<f64>,
    basis_vars: Vec<usize>,
    position: Vec<Option<usize>>,
    xb: Vec<f64>,
    basis: Basis,
    iterations: usize,
    artificial_upper: f64,
}

impl<'a> Solver<'a> {
    fn column_dense(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        if j < self.nstruct {
            for &(i, v) in &self.lp.cols[j] {
                out[i] += v * self.sign[i];
            }
        } else {
            out[j - self.nstruct] = 1.0;
        }
        out
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.nstruct {
            self.lp.cols[j].iter().map(|&(i, v)| v * self.sign[i] * y[i]).sum()
        } else {
            y[j - self.nstruct]
        }
    }

    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut dense = vec![0.0; m * m];
        for (pos, &j) in self.basis_vars.iter().enumerate() {
            if j < self.nstruct {
                for &(i, v) in &self.lp.cols[j] {
                    dense[i * m + pos] += v * self.sign[i];
                }
            } else {
                dense[(j - self.nstruct) * m + pos] = 1.0;
            }
        }
        match DenseLu::factor(m, dense) {
            Some(lu) => {
                self.basis = Basis { lu, etas: Vec::new() };
                self.xb = self.basis.ftran(&self.b);
                true
            }
            None => false,
        }
    }

    fn cost(&self, j: usize, phase1: bool) -> f64 {
        if phase1 {
            if j >= self.nstruct {
                1.0
            } else {
                0.0
            }
        } else if j < self.nstruct {
            self.lp.c[j]
        } else {
            0.0
        }
    }

    fn upper(&self, j: usize) -> f64 {
        if j >= self.nstruct {
            self.artificial_upper
        } else {
            f64::INFINITY
        }
    }

    fn duals(&self, phase1: bool) -> Vec<f64> {
        let cb: Vec<f64> = self.basis_vars.iter().map(|&j| self.cost(j, phase1)).collect();
        self.basis.btran(&cb)
    }

    /// Runs simplex iterations until optimal for the given phase costs.
    fn run(&mut self, phase1: bool) -> SimplexStatus {
        let mut degenerate = 0usize;
        let mut verified = false;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return SimplexStatus::IterationLimit;
            }
            if self.basis.etas.len() >= self.opts.refactor_every && !self.refactor() {
                return SimplexStatus::Singular;
            }
            let pi = self.duals(phase1);
            let bland = degenerate >= self.opts.bland_after;
            let mut entering = None;
            let mut best = -self.opts.opt_tol;
            for j in 0..self.nstruct {
                if self.position[j].is_some() {
                    continue;
                }
                let d = self.cost(j, phase1) - self.dot_column(j, &pi);
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                // confirm on a fresh factorization before declaring optimality
                if verified || self.basis.etas.is_empty() {
                    return SimplexStatus::Optimal;
                }
                if !self.refactor() {
                    return SimplexStatus::Singular;
                }
                verified = true;
                continue;
            };
            verified = false;
            let w = self.basis.ftran(&self.column_dense(q));
            let piv_tol = 1e-9;
            // Harris pass one: relaxed bound on the step
            let mut theta_max = f64::INFINITY;
            for i in 0..self.m {
                let wi = w[i];
                if wi > piv_tol {
                    theta_max = theta_max.min((self.xb[i].max(0.0) + self.opts.feas_tol) / wi);
                } else if wi < -piv_tol {
                    let u = self.upper(self.basis_vars[i]);
                    if u.is_finite() {
                        theta_max = theta_max.min((u - self.xb[i] + self.opts.feas_tol).max(0.0) / -wi);
                    }
                }
            }
            if theta_max.is_infinite() {
                return SimplexStatus::Unbounded;
            }
            let mut leave: Option<(usize, f64)> = None;
            let mut leave_key = (f64::NEG_INFINITY, 0usize);
            for i in 0..self.m {
                let wi = w[i];
                let ratio = if wi > piv_tol {
                    self.xb[i].max(0.0) / wi
                } else if wi < -piv_tol && self.upper(self.basis_vars[i]).is_finite() {
                    (self.upper(self.basis_vars[i]) - self.xb[i]).max(0.0) / -wi
                } else {
                    continue;
                };
                if ratio > theta_max {
                    continue;
                }
                // Bland: smallest ratio then smallest variable index; otherwise largest pivot
                let key = if bland {
                    (-ratio, usize::MAX - self.basis_vars[i])
                } else {
                    (wi.abs(), usize::MAX - self.basis_vars[i])
                };
                if key > leave_key {
                    leave_key = key;
                    leave = Some((i, ratio));
                }
            }
            let (r, theta) = leave.expect("pass one found a bounded step");
            for i in 0..self.m {
                self.xb[i] -= theta * w[i];
            }
            let old = self.basis_vars[r];
            self.xb[r] = theta;
            self.position[old] = None;
            self.position[q] = Some(r);
            self.basis_vars[r] = q;
            self.basis.push(r, &w);
            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
        }
    }

    /// Pivot basic artificials out where some structural column has a nonzero entry in their row.
    fn drive_out_artificials(&mut self) -> bool {
        for r in 0..self.m {
            if self.basis_vars[r] < self.nstruct {
                continue;
            }
            let mut e = vec![0.0; self.m];
            e[r] = 1.0;
            let rho = self.basis.btran(&e);
            let mut pick = None;
            let mut best = 1e-7;
            for j in 0..self.nstruct {
                if self.position[j].is_some() {
                    continue;
                }
                let v = self.dot_column(j, &rho).abs();
                if v > best {
                    best = v;
                    pick = Some(j);
                }
            }
            if let Some(q) = pick {
                let w = self.basis.ftran(&self.column_dense(q));
                let theta = self.xb[r] / w[r];
                for i in 0..self.m {
                    self.xb[i] -= theta * w[i];
                }
                self.xb[r] = theta;
                let old = self.basis_vars[r];
                self.position[old] = None;
                self.position[q] = Some(r);
                self.basis_vars[r] = q;
                self.basis.push(r, &w);
                self.iterations += 1;
                if self.basis.etas.len() >= self.opts.refactor_every && !self.refactor() {
                    return false;
                }
            }
        }
        true
    }
}

/// Solve `lp` with the two-phase revised simplex.
pub fn solve_standard(lp: &StandardLp, opts: SimplexOptions) -> SimplexResult {
    let m = lp.num_rows;
    let nstruct = lp.cols.len();
    let sign: Vec<f64> = lp.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let b: Vec<f64> = lp.b.iter().map(|v| v.abs()).collect();
    let mut position = vec![None; nstruct + m];
    for i in 0..m {
        position[nstruct + i] = Some(i);
    }
    let empty = DenseLu { m, lu: identity(m), perm: (0..m).collect() };
    let mut solver = Solver {
        lp,
        opts,
        m,
        nstruct,
        sign,
        b: b.clone(),
        basis_vars: (nstruct..nstruct + m).collect(),
        position,
        xb: b,
        basis: Basis { lu: empty, etas: Vec::new() },
        iterations: 0,
        artificial_upper: f64::INFINITY,
    };
    let fail = |solver: &Solver, status| SimplexResult {
        status,
        x: vec![0.0; nstruct],
        duals: vec![0.0; m],
        objective: f64::NAN,
        iterations: solver.iterations,
    };

    let status = solver.run(true);
    if status != SimplexStatus::Optimal {
        return fail(&solver, status);
    }
    let infeasibility: f64 = solver
        .basis_vars
        .iter()
        .zip(&solver.xb)
        .filter(|(&j, _)| j >= nstruct)
        .map(|(_, &v)| v.max(0.0))
        .sum();
    let scale = 1.0 + lp.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if infeasibility > 1e-7 * scale {
        return fail(&solver, SimplexStatus::Infeasible);
    }
    if !solver.drive_out_artificials() {
        return fail(&solver, SimplexStatus::Singular);
    }
    solver.artificial_upper = 0.0;
    let status = solver.run(false);
    if status != SimplexStatus::Optimal {
        return fail(&solver, status);
    }
    let mut x = vec![0.0; nstruct];
    for (pos, &j) in solver.basis_vars.iter().enumerate() {
        if j < nstruct {
            x[j] = solver.xb[pos].max(0.0);
        }
    }
    let pi = solver.duals(false);
    let duals = pi.iter().zip(&solver.sign).map(|(p, s)| p * s).collect();
    let objective = x.iter().zip(&lp.c).map(|(a, b)| a * b).sum();
    SimplexResult { status: SimplexStatus::Optimal, x, duals, objective, iterations: solver.iterations }
}

fn identity(m: usize) -> Vec<f64> {
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        a[i * m + i] = 1.0;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(rows: &[&[f64]], b: &[f64], c: &[f64]) -> StandardLp {
        let ncols = c.len();
        let mut cols = vec![vec![]; ncols];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    cols[j].push((i, v));
                }
            }
        }
        StandardLp { num_rows: rows.len(), cols, b: b.to_vec(), c: c.to_vec() }
    }

    #[test]
    fn small_lp_with_slacks() {
        // max 3x + 2y s.t. x + y ≤ 4, x + 3y ≤ 6, x ≤ 3  → (3, 1), value 11
        let p = lp(
            &[&[1., 1., 1., 0., 0.], &[1., 3., 0., 1., 0.], &[1., 0., 0., 0., 1.]],
            &[4., 6., 3.],
            &[-3., -2., 0., 0., 0.],
        );
        let r = solve_standard(&p, SimplexOptions::default());
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert!((r.objective + 11.0).abs() < 1e-9);
        assert!((r.x[0] - 3.0).abs() < 1e-9 && (r.x[1] - 1.0).abs() < 1e-9);
        // reduced costs nonnegative and complementary
        for j in 0..5 {
            let d = p.c[j] - p.cols[j].iter().map(|&(i, v)| v * r.duals[i]).sum::<f64>();
            assert!(d >= -1e-9);
            assert!((d * r.x[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn negative_rhs_redundant_rows_and_infeasible() {
        // x - y = -1, 2x - 2y = -2 (redundant), min x + y → x=0, y=1
        let p = lp(&[&[1., -1.], &[2., -2.]], &[-1., -2.], &[1., 1.]);
        let r = solve_standard(&p, SimplexOptions::default());
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-9);

        let p = lp(&[&[1., 1.]], &[-1.], &[1., 1.]);
        assert_eq!(solve_standard(&p, SimplexOptions::default()).status, SimplexStatus::Infeasible);

        let p = lp(&[&[1., -1.]], &[0.], &[-1., 0.]);
        assert_eq!(solve_standard(&p, SimplexOptions::default()).status, SimplexStatus::Unbounded);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, cycles under textbook Dantzig without an anti-cycling rule
        let p = lp(
            &[&[0.25, -60., -0.04, 9., 1., 0., 0.], &[0.5, -90., -0.02, 3., 0., 1., 0.], &[0., 0., 1., 0., 0., 0., 1.]],
            &[0., 0., 1.],
            &[-0.75, 150., -0.02, 6., 0., 0., 0.],
        );
        let r = solve_standard(&p, SimplexOptions { bland_after: 1, ..Default::default() });
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert!((r.objective + 0.05).abs() < 1e-9);
    }
}
