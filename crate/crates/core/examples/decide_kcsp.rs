//! Decide complete k-CSPs by prefix extension and compare with enumeration.

use complete_csp::instance::{gen_planted_kcsp, gen_random_kcsp};
use complete_csp::kcsp_decide::{count_satisfying, decide_csp, decide_csp_with, CheckMode, DecideOptions};
use complete_csp::oracle::kcsp_satisfying;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (inst, planted) = gen_planted_kcsp(14, 3, 0.2, 4)?;
    let d = decide_csp(&inst)?;
    println!("planted 3-CSP: satisfiable {}, witness {}", d.satisfiable(), d.witness().expect("planted"));
    println!("planted assignment {planted} among survivors: {}", d.survivors.contains(&planted));
    for s in &d.steps {
        println!("  step {:2} var {:2}: {:4} survivors, ratio {:.3}", s.step, s.variable, s.survivors, s.ratio);
    }

    let shuffled = decide_csp_with(&inst, &DecideOptions { check: CheckMode::Full, shuffle_seed: Some(9), ..Default::default() })?;
    println!("shuffled full-check run agrees: {}", shuffled.survivors == d.survivors);

    for seed in 0..4 {
        let (r, _) = gen_planted_kcsp(10, 2, 0.2, seed)?;
        let count = count_satisfying(&r)?;
        println!("planted 2-CSP seed {seed}: {} solutions (enumeration {}), max ratio {:.2}", count.count, kcsp_satisfying(&r)?.len(), count.max_ratio);
    }
    let r = gen_random_kcsp(10, 2, 0.25, 0)?;
    println!("random 2-CSP: satisfiable {}", decide_csp(&r)?.satisfiable());
    Ok(())
}
