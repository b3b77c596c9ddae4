//! Plans a scenario year by year and prints each round's picks.
//!
//! ```text
//! cargo run --release -p facplan --example plan_scenario -- fixtures/golden_16.scn dp2
//! ```

use facplan::pipeline::{plan, PlanRequest};
use facplan::scenario::{PolicyMode, Scenario};

fn main() -> facplan::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixtures/golden_16.scn".into());
    let policy: Option<PolicyMode> = args.next().map(|p| p.parse()).transpose()?;
    let scenario = Scenario::load(path.as_ref())?;
    let request = PlanRequest {
        policy,
        ..Default::default()
    };
    let mut report = |t: usize, h: usize| eprintln!("round {t}/{h} done");
    let result = plan(&scenario, &request, Some(&mut report))?;
    for round in &result.rounds {
        let sites: Vec<String> = round.selected.iter().map(|f| format!("{} (district {})", f.cell, f.type_id)).collect();
        println!(
            "year {}: quota {:?} -> {}; coverage {:.0}, alpha_min {}",
            round.round,
            round.quota,
            sites.join(", "),
            round.objective,
            round.alpha_min.map_or("unbounded".into(), |a| format!("{a:.3}"))
        );
    }
    println!("baseline {:.0}, total {:.0}, gain {:.0}", result.baseline, result.total, result.gain());
    for d in &result.diagnostics {
        println!("note: {d:?}");
    }
    Ok(())
}
