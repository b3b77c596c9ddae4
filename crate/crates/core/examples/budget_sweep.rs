//! Coverage and efficiency-loss ratios across per-year budgets.
//!
//! ```text
//! cargo run --release -p facplan --example budget_sweep -- fixtures/golden_16.scn 1 2 3 4 5
//! ```

use facplan::algorithms::GreedyMode;
use facplan::pipeline::budget_sweep;
use facplan::scenario::{PolicyMode, Scenario};

fn main() -> facplan::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixtures/golden_16.scn".into());
    let budgets: Vec<usize> = args.filter_map(|a| a.parse().ok()).collect();
    let budgets = if budgets.is_empty() { vec![1, 2, 3, 4, 5] } else { budgets };
    let scenario = Scenario::load(path.as_ref())?;
    let report = budget_sweep(&scenario, &budgets, &[PolicyMode::Dp1, PolicyMode::Dp2], GreedyMode::Lazy)?;
    print!("{}", report.to_table());
    Ok(())
}
