//! Relax a planted instance, round it and compare against the exact optimum.

use complete_csp::instance::gen_planted_nae3;
use complete_csp::oracle::brute_opt;
use complete_csp::rounding::{round_pd, round_simple, RoundingConfig};
use complete_csp::salp::{solve_relaxation, RelaxationConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 18;
    let planted = gen_planted_nae3(n, 0.03, 17)?;
    let inst = planted.instance;

    let relax = solve_relaxation(&inst, &RelaxationConfig { degree: 3, ..Default::default() })?;
    println!(
        "LP value {:.5} at degree {} ({} backend)",
        relax.lp_value, relax.lp_degree_solved, relax.backend
    );

    let cfg = RoundingConfig { seed: 1, ..RoundingConfig::for_n(n) };
    let (alpha, trace) = round_pd(&inst, &relax.pd, &cfg)?;
    let simple = round_simple(&inst, &relax.pd, &cfg)?;
    let (best, opt) = brute_opt(&inst)?;

    for s in &trace.stages {
        println!("stage {}: {} unfixed, delta {:.2e}, {:?}", s.stage, s.n_unfixed, s.delta, s.branch);
    }
    println!("round_pd     {alpha} val {:.5}", inst.val_assignment(&alpha)?);
    println!("round_simple {simple} val {:.5}", inst.val_assignment(&simple)?);
    println!("optimum      {best} val {opt:.5}");
    println!("planted      {} val {:.5}", planted.planted, inst.val_assignment(&planted.planted)?);
    Ok(())
}
