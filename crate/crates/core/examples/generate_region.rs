//! Synthesises a gridded region and prints a short summary.
//!
//! ```text
//! cargo run --release -p facplan --example generate_region -- 7 24x24 region.scn
//! ```

use facplan::scenario::{generate_synthetic_region, Scenario, SyntheticConfig};

fn main() -> facplan::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let (rows, cols) = args
        .next()
        .and_then(|d| d.split_once('x').map(|(r, c)| (r.parse().ok(), c.parse().ok())))
        .and_then(|(r, c)| Some((r?, c?)))
        .unwrap_or((16, 16));
    let out = args.next();

    let file = generate_synthetic_region(&SyntheticConfig {
        seed,
        rows,
        cols,
        ..Default::default()
    })?;
    if let Some(path) = &out {
        file.save(path.as_ref())?;
    }
    let scenario = Scenario::build(file)?;
    let file = &scenario.file;
    println!("{}: {}x{} cells, {} districts, {} years", file.name, file.rows, file.cols, file.districts, file.years);
    for (t, year) in file.population.iter().enumerate() {
        println!("  year {}: population {:.0}", t + 1, year.iter().sum::<f64>());
    }
    for q in 1..=file.districts {
        println!("  district {q}: {} cells", scenario.district_cells(q).len());
    }
    println!("  existing facilities: {:?}", file.existing.iter().map(|c| c.to_string()).collect::<Vec<_>>());
    println!("  baseline coverage {:.0}", scenario.model.baseline());
    if let Some(path) = out {
        println!("wrote {path}");
    }
    Ok(())
}
