//! Minimum satisfaction ratio of each policy's plan, scored under the
//! home-birth and postnatal-coverage proportions.
//!
//! ```text
//! cargo run --release -p facplan --example equity_table -- fixtures/golden_16.scn
//! ```

use facplan::algorithms::GreedyMode;
use facplan::pipeline::equity;
use facplan::scenario::{PolicyMode, Scenario};

fn main() -> facplan::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "fixtures/golden_16.scn".into());
    let scenario = Scenario::load(path.as_ref())?;
    let report = equity(&scenario, &[PolicyMode::Dp0, PolicyMode::Dp1, PolicyMode::Dp2], GreedyMode::Lazy)?;
    print!("{}", report.to_table());
    for row in &report.rows {
        println!("{}: facilities per district {:?}, total {}", row.policy, row.counts, row.total);
    }
    Ok(())
}
