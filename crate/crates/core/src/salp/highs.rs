use super::moment::InequalityLp;
use super::{LpError, LpStatus, RawSolution};
use highs::{HighsModelStatus, RowProblem, Sense};

pub(super) fn solve(lp: &InequalityLp, tol: f64, max_iterations: usize) -> Result<RawSolution, LpError> {
    let mut pb = RowProblem::default();
    let cols: Vec<_> = lp.objective.iter().zip(&lp.bounds).map(|(&c, &(l, u))| pb.add_column(c, l..=u)).collect();
    for (terms, b) in &lp.rows {
        pb.add_row(*b.., terms.iter().map(|&(j, v)| (cols[j], v)));
    }
    let mut model = pb.try_optimise(Sense::Minimise).map_err(|e| LpError::Backend(format!("{e:?}")))?;
    model.make_quiet();
    model.set_option("threads", 1);
    model.set_option("random_seed", 0);
    model.set_option("primal_feasibility_tolerance", tol.min(1e-10));
    model.set_option("dual_feasibility_tolerance", tol.min(1e-10));
    model.set_option("simplex_iteration_limit", max_iterations.min(i32::MAX as usize) as i32);
    let solved = model.try_solve().map_err(|e| LpError::Backend(format!("{e:?}")))?;
    let status = match solved.status() {
        HighsModelStatus::Optimal => LpStatus::Optimal,
        HighsModelStatus::Infeasible => LpStatus::Infeasible,
        HighsModelStatus::ReachedIterationLimit => LpStatus::IterationLimit,
        other => return Err(LpError::Backend(format!("unexpected model status {other:?}"))),
    };
    let x = if status == LpStatus::Optimal { solved.get_solution().columns().to_vec() } else { Vec::new() };
    Ok(RawSolution { status, x, iterations: 0 })
}
