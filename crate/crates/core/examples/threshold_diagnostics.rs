//! Threshold candidates, the bounded-increase check and the class transfer
//! matrix for a pseudodistribution spread around a planted assignment.

use complete_csp::instance::{gen_planted_nae3, Assignment};
use complete_csp::pseudodist::PseudoDistribution;
use complete_csp::rounding::{
    bounded_increase_check, delta_transfer_diag, lp_class_values, log_scale, threshold_candidates,
    transfer_column_sums, RoundingConfig,
};

fn flip(a: &Assignment, vars: &[usize]) -> Assignment {
    let mut b = a.clone();
    for &v in vars {
        b.0[v] = !b.0[v];
    }
    b
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 14;
    let planted = gen_planted_nae3(n, 0.01, 2)?;
    let (inst, hidden) = (planted.instance, planted.planted);
    let mu = PseudoDistribution::mixture(
        n,
        3,
        vec![(0.88, hidden.clone()), (0.07, flip(&hidden, &[3])), (0.05, flip(&hidden, &[5, 7, 11]))],
    )?;
    let cfg = RoundingConfig::for_n(n);
    let l = log_scale(n, cfg.log_floor);
    let v_u: Vec<usize> = (0..n).collect();
    let delta = mu.val(&inst, None)?;

    let before = lp_class_values(&inst, &mu, &v_u);
    println!("tau {:.1}, L {l:.2}, delta {delta:.4}, LP classes {:?}", cfg.tau, before.as_array());

    for theta in threshold_candidates(&mu, &v_u, cfg.tau, delta) {
        let chk = bounded_increase_check(&inst, &mu, &v_u, theta, cfg.tau, delta, l);
        println!(
            "theta {theta:.4}: fixes {:2}, increase {:+.3e}, bound {:.3e}, passes {}",
            chk.fixed, chk.increase, chk.bound, chk.passes
        );
    }

    let theta = cfg.tau * delta;
    let d = delta_transfer_diag(&inst, &mu, &v_u, theta);
    for (j, row) in d.iter().enumerate() {
        println!("from class {j}: {:?}", row.map(|x| (x * 1e4).round() / 1e4));
    }
    println!("column sums {:?}", transfer_column_sums(&d).as_array());
    Ok(())
}
