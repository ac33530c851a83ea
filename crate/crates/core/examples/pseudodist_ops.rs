//! Marginals, conditioning and fixing on a small pseudodistribution.

use complete_csp::instance::{gen_planted_nae3, Assignment};
use complete_csp::pseudodist::PseudoDistribution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Assignment::parse("110100").expect("bit string");
    let b = Assignment::parse("011001").expect("bit string");
    let c = Assignment::parse("100111").expect("bit string");
    let mu = PseudoDistribution::mixture(6, 4, vec![(0.5, a.clone()), (0.3, b), (0.2, c)])?;

    for v in 0..3 {
        println!("Pr[x{v} = 1] = {:.2}", mu.single(v)[1]);
    }
    let pair = mu.marginal(&[0, 2])?;
    println!("marginal on {{0, 2}}: {:?}", pair.probs);

    // condition on x0 = 1, x1 = 1 (assignment index 0b11)
    let cond = mu.condition(&[0, 1], 0b11)?;
    println!("after conditioning Pr[x2 = 1] = {:.3}", cond.single(2)[1]);

    let fixed = mu.fix(&[5], &[true])?;
    println!("after fixing x5 = 1: Pr[x5 = 1] = {:.1}", fixed.single(5)[1]);
    println!("consistency check passes: {}", fixed.check(1e-9).passes());

    let inst = gen_planted_nae3(6, 0.0, 1)?.instance;
    println!("val on a planted instance: {:.4}", mu.val(&inst, None)?);
    let dense = PseudoDistribution::product(&[0.1, 0.5, 0.9, 0.5, 0.5, 0.5], 3)?;
    println!("product distribution val {:.4}, KL correlation on {{0,1,2}} {:.2e}", dense.val(&inst, None)?, dense.correlation_kl(&[0, 1, 2])?);
    println!("point mass val {:.4}", PseudoDistribution::point_mass(&a, 3).val(&inst, None)?);
    Ok(())
}
