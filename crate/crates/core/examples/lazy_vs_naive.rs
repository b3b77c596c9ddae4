//! Same plan, two greedy engines: marginal-gain evaluations and wall time.
//!
//! ```text
//! cargo run --release -p facplan --example lazy_vs_naive -- fixtures/golden_50.scn
//! ```

use std::time::Instant;

use facplan::algorithms::GreedyMode;
use facplan::pipeline::{plan, PlanRequest};
use facplan::scenario::Scenario;

fn main() -> facplan::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "fixtures/golden_50.scn".into());
    let scenario = Scenario::load(path.as_ref())?;
    let mut selections = Vec::new();
    for mode in [GreedyMode::Lazy, GreedyMode::Naive] {
        let start = Instant::now();
        let result = plan(&scenario, &PlanRequest { mode, ..Default::default() }, None)?;
        println!(
            "{mode:?}: total {:.0}, {} evaluations, {:.3}s",
            result.total,
            result.evaluations,
            start.elapsed().as_secs_f64()
        );
        selections.push(result.selection());
    }
    println!("identical plans: {}", selections[0] == selections[1]);
    Ok(())
}
