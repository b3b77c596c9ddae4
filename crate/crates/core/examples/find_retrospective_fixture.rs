//! Searches small synthetic districts for advice where refining beats
//! greedy and greedy beats the advice, then writes the first hit as a
//! scenario with an `[advice]` block.
//!
//! ```text
//! cargo run --release -p facplan --example find_retrospective_fixture [-- <out.scn>]
//! ```

use facplan::oracle::{brute_force_opt, ConstraintClass};
use facplan::pipeline::{refine, RefineRequest};
use facplan::scenario::{generate_synthetic_region, Scenario, SyntheticConfig};
use facplan::{Cell, Instance};
use itertools::Itertools;

const BUDGET: usize = 2;
const DISTRICT: usize = 1;

fn district_optimum(scenario: &Scenario) -> facplan::Result<f64> {
    let inst = &scenario.instance;
    let elements: Vec<_> = inst.elements().iter().filter(|e| e.type_id == DISTRICT).copied().collect();
    let restricted = Instance::new(1, inst.num_types(), elements, vec![BUDGET], inst.policy().clone(), inst.objective_handle());
    Ok(brute_force_opt(&restricted, &ConstraintClass::Cardinality)?.value)
}

fn main() -> facplan::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "fixtures/retrospective_district.scn".into());
    for seed in 0..200u64 {
        let file = generate_synthetic_region(&SyntheticConfig {
            seed,
            rows: 8,
            cols: 8,
            districts: 2,
            years: 1,
            budget_per_year: BUDGET,
            settlements: 4,
            existing_facilities: 1,
            threshold_minutes: 60.0,
            name: Some(format!("retrospective-district-seed{seed}")),
            ..Default::default()
        })?;
        let scenario = Scenario::build(file)?;
        let cells: Vec<Cell> = scenario.district_cells(DISTRICT).into_iter().collect();
        for advice in cells.iter().copied().combinations(BUDGET) {
            let result = refine(
                &scenario,
                &RefineRequest {
                    round: 1,
                    advice: Some(advice.clone()),
                    district: Some(DISTRICT),
                    ..Default::default()
                },
            )?;
            if result.refined_value > result.greedy_value && result.greedy_value > result.advice_value {
                let optimum = district_optimum(&scenario)?;
                let mut file = scenario.file.clone();
                file.advice.insert(1, advice);
                file.save(out.as_ref())?;
                print!("{}", result.to_table());
                println!("district optimum {optimum}");
                println!("wrote {out}");
                return Ok(());
            }
        }
    }
    Err(facplan::Error::Validation("no fixture found".into()))
}
