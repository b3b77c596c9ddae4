//! Refines a random advice set: every kept prefix is completed greedily and
//! the best completion wins.
//!
//! ```text
//! cargo run --release -p facplan --example advice_refinement -- 3
//! ```

use facplan::algorithms::{greedy_cardinality, la_single_step, AdviceChain, GreedyMode};
use facplan::oracle::random::random_advice_case;
use facplan::oracle::{brute_force_opt, ConstraintClass};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> facplan::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let (spec, advice) = random_advice_case(&mut ChaCha8Rng::seed_from_u64(seed), 12, 4);
    let instance = spec.build()?;
    let ground = instance.round_elements(1);
    let budget = instance.budget(1);
    let f = instance.objective();

    let refined = la_single_step(ground, budget, f, &advice, &AdviceChain::Prefixes, &[], GreedyMode::Lazy)?;
    let greedy = greedy_cardinality(ground, budget, f, &[], GreedyMode::Lazy)?;
    let optimum = brute_force_opt(&instance, &ConstraintClass::Cardinality)?;

    println!("{} elements, budget {budget}", ground.len());
    println!("advice {:?}: {}", advice, f.value(&advice));
    for (i, v) in refined.values.iter().enumerate() {
        println!("  keep {i} advice elements, complete greedily: {v}");
    }
    println!("refined {:?}: {} (kept {})", refined.selection, refined.value, refined.chosen_index);
    println!("greedy  {:?}: {}", greedy.picks, greedy.value);
    println!("optimum {:?}: {}", optimum.selection.all(), optimum.value);
    Ok(())
}
