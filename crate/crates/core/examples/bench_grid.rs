//! A small seeded benchmark grid, run on two worker threads.

use complete_csp::cli::bench::{aggregate, run_suite, Suite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = Suite::from_toml(
        r#"
name = "example"
degree = 3

[grid]
n = [8, 10]
p = [0.0, 0.05]
seeds = [1, 2]
"#,
    )?;
    let records = run_suite(&suite, 2);
    for r in &records {
        println!(
            "n {:2} p {:.2} seed {}: lp {:.4} val {:.4} ratio {:.3} ({:.2}s)",
            r.n,
            r.p,
            r.seed,
            r.lp_value.unwrap_or(f64::NAN),
            r.val.unwrap_or(f64::NAN),
            r.ratio.unwrap_or(f64::NAN),
            r.wall_s
        );
    }
    let agg = aggregate(&suite, &records);
    println!("{}", serde_json::to_string_pretty(&agg)?);
    Ok(())
}
