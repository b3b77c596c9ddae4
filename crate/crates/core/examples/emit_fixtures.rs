//! Regenerates the frozen fixtures under `fixtures/`.
//!
//! ```text
//! cargo run --release -p facplan --example emit_fixtures [-- <dir>]
//! ```
//!
//! Oracle values are computed by exhaustive enumeration. Rerunning with an
//! unchanged library must reproduce every file byte for byte.

use std::path::PathBuf;

use facplan::oracle::fixtures::{certify, write_json, AdviceFixture};
use facplan::oracle::random::{random_advice_case, random_coverage_instance, RandomSpec};
use facplan::oracle::{brute_force_opt, ConstraintClass};
use facplan::pipeline::{plan, PlanRequest};
use facplan::scenario::{generate_synthetic_region, PolicyMode, Scenario, SyntheticConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn main() -> facplan::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("fixtures"));
    std::fs::create_dir_all(&dir).map_err(|e| facplan::Error::InvalidArgument(e.to_string()))?;

    let spec = RandomSpec::default();
    let planning = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let instance = random_coverage_instance(&mut ChaCha8Rng::seed_from_u64(seed), &spec);
            certify(&format!("random-{seed}"), &instance)
        })
        .collect::<facplan::Result<Vec<_>>>()?;
    write_json(&dir.join("oracle_planning.json"), &planning)?;

    let advice = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let (instance, advice) = random_advice_case(&mut ChaCha8Rng::seed_from_u64(1000 + seed), 12, 4);
            let optimum = brute_force_opt(&instance.build()?, &ConstraintClass::Cardinality)?.value;
            Ok(AdviceFixture {
                name: format!("advice-{seed}"),
                instance,
                advice,
                optimum,
            })
        })
        .collect::<facplan::Result<Vec<_>>>()?;
    write_json(&dir.join("oracle_advice.json"), &advice)?;

    let golden = generate_synthetic_region(&SyntheticConfig {
        seed: 0,
        rows: 16,
        cols: 16,
        districts: 3,
        years: 5,
        ..Default::default()
    })?;
    golden.save(&dir.join("golden_16.scn"))?;
    let scenario = Scenario::build(golden)?;
    let request = PlanRequest {
        policy: Some(PolicyMode::Dp0),
        ..Default::default()
    };
    std::fs::write(dir.join("golden_16_dp0.json"), plan(&scenario, &request, None)?.to_json())
        .map_err(|e| facplan::Error::InvalidArgument(e.to_string()))?;

    let large = generate_synthetic_region(&SyntheticConfig {
        seed: 0,
        rows: 50,
        cols: 50,
        districts: 6,
        years: 5,
        budget_per_year: 12,
        settlements: 20,
        existing_facilities: 6,
        ..Default::default()
    })?;
    large.save(&dir.join("golden_50.scn"))?;

    println!(
        "wrote {} planning and {} advice fixtures plus golden scenarios to {}",
        planning.len(),
        advice.len(),
        dir.display()
    );
    Ok(())
}
