//! Induce a 2-CNF from a partial assignment and round it by region growing.

use complete_csp::instance::{gen_planted_nae3, Assignment, PartialAssignment};
use complete_csp::min2sat::{induce_2sat, kprt_round, pd_to_metric, twosat_brute};
use complete_csp::pseudodist::PseudoDistribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 16;
    let planted = gen_planted_nae3(n, 0.02, 8)?;
    let inst = planted.instance;

    // fix the first four variables to their planted values; the rest stay open
    let mut alpha = PartialAssignment::unfixed(n);
    for v in 0..4 {
        alpha.set(v, planted.planted.0[v]);
    }
    let v_u: Vec<usize> = (4..n).collect();
    let ts = induce_2sat(&inst, &v_u, &alpha)?;
    println!("{} variables, {} clauses, {} dropped", ts.m(), ts.clauses.len(), ts.dropped);

    // a mixture close to the planted assignment and its complement
    let hidden = planted.planted.clone();
    let flipped = Assignment(hidden.0.iter().enumerate().map(|(i, &b)| if i == 9 { !b } else { b }).collect());
    let mu = PseudoDistribution::mixture(n, 3, vec![(0.8, hidden), (0.2, flipped)])?;
    let metric = pd_to_metric(&ts, &mu)?;
    println!("metric objective {:.4}, max violation {:.1e}", metric.objective, metric.max_violation());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let out = kprt_round(&ts, &metric, &mut rng)?;
    let (_, exact) = twosat_brute(&ts, 20)?;
    println!("region growing: {} violated, {} balls; exact minimum {exact}", out.violated, out.balls);
    println!("{}", ts.to_dimacs().lines().next().unwrap_or(""));
    Ok(())
}
