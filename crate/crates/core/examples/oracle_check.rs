//! Certifies the planner against exhaustive optima on seeded random
//! instances and prints the worst prefix ratio seen.
//!
//! ```text
//! cargo run --release -p facplan --example oracle_check -- 100
//! ```

use facplan::oracle::fixtures::certify;
use facplan::oracle::random::{random_coverage_instance, RandomSpec};
use facplan::algorithms::{multistep_planning, PlanOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> facplan::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|n| n.parse().ok()).unwrap_or(50);
    let spec = RandomSpec::default();
    let mut worst = (f64::INFINITY, String::new());
    for seed in 0..count {
        let instance = random_coverage_instance(&mut ChaCha8Rng::seed_from_u64(seed), &spec);
        let fixture = certify(&format!("random-{seed}"), &instance)?;
        let plan = multistep_planning(&instance.build()?, PlanOptions::default(), None)?;
        for (t, (got, opt)) in plan.trajectory().iter().zip(&fixture.sigma_prefix_optima).enumerate() {
            if *opt > 0.0 && got / opt < worst.0 {
                worst = (got / opt, format!("{} prefix {}", fixture.name, t + 1));
            }
        }
    }
    println!("{count} instances, worst prefix ratio {:.4} ({})", worst.0, worst.1);
    Ok(())
}
