//! Generate instances of every kind, write them out and read them back.

use complete_csp::instance::{
    densify_reduction, gen_planted_kcsp, gen_planted_nae3, gen_random_nae3, parse_instance, Instance,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let random = gen_random_nae3(6, 7)?;
    let text = Instance::Nae3(random.clone()).to_text();
    print!("{}", text.lines().take(4).map(|l| format!("{l}\n")).collect::<String>());
    println!("... {} constraints", random.num_constraints());
    assert_eq!(parse_instance(&text)?, Instance::Nae3(random));

    let planted = gen_planted_nae3(12, 0.05, 3)?;
    println!(
        "planted n=12 p=0.05: hidden {} violates {} of {} triples",
        planted.planted,
        planted.violated_count,
        planted.instance.num_constraints()
    );

    let (kcsp, witness) = gen_planted_kcsp(8, 3, 0.25, 5)?;
    println!("planted 3-CSP on 8 variables, witness {witness}, violations {}", kcsp.violations(&witness)?);

    // a sparse clause list padded with dummy variables; missing triples stay absent
    let sparse = match parse_instance("c incomplete\np nae3 5 2\n1 2 3 1 1 0\n3 4 5 0 1 1\n")? {
        Instance::Nae3(i) => i,
        Instance::Kcsp(_) => unreachable!(),
    };
    let dense = densify_reduction(&sparse, 1e-3, 40)?;
    println!(
        "densified: n {} -> {}, {} constraints present, complete {}",
        sparse.n(),
        dense.n(),
        dense.num_constraints(),
        dense.is_complete()
    );
    Ok(())
}
