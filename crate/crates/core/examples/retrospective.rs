//! Compares a district's recorded sites with greedy and with the refined
//! selection built from them.
//!
//! ```text
//! cargo run --release -p facplan --example retrospective -- fixtures/retrospective_district.scn 1
//! ```

use facplan::pipeline::{refine, RefineRequest};
use facplan::scenario::Scenario;

fn main() -> facplan::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixtures/retrospective_district.scn".into());
    let district = args.next().and_then(|d| d.parse().ok()).or(Some(1));
    let scenario = Scenario::load(path.as_ref())?;
    let result = refine(
        &scenario,
        &RefineRequest {
            round: 1,
            district,
            ..Default::default()
        },
    )?;
    print!("{}", result.to_table());
    Ok(())
}
