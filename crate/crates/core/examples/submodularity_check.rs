//! Exhaustive monotonicity and submodularity checks: a random coverage
//! objective passes, `|S|^2` fails with a witness.
//!
//! ```text
//! cargo run --release -p facplan --example submodularity_check -- 11
//! ```

use facplan::objective::TableFunction;
use facplan::oracle::check_submodular_monotone;
use facplan::oracle::random::{random_coverage_instance, RandomSpec};
use facplan::ElementId;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> facplan::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let spec = RandomSpec {
        max_round_size: 4,
        ..Default::default()
    };
    let instance = random_coverage_instance(&mut ChaCha8Rng::seed_from_u64(seed), &spec).build()?;
    let ground: Vec<ElementId> = instance.elements().iter().map(|e| e.id).collect();
    let report = check_submodular_monotone(instance.objective(), &ground)?;
    println!("coverage objective on {} elements: monotone {}, submodular {}", ground.len(), report.monotone, report.submodular);

    let small: Vec<ElementId> = (0..5).map(ElementId).collect();
    let square = TableFunction::from_fn(small.clone(), |s| (s.len() * s.len()) as f64)?;
    let report = check_submodular_monotone(&square, &small)?;
    println!("|S|^2: monotone {}, submodular {}", report.monotone, report.submodular);
    if let Some(w) = report.submodularity_violation {
        println!("  adding {} to {:?} gains {}, but to {:?} gains {}", w.e, w.a, w.gain_a, w.b, w.gain_b);
    }
    Ok(())
}
