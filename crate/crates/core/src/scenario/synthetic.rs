//! Seeded synthetic regions for tests and demos.
//!
//! Population is a sum of Gaussian settlements over a small background,
//! each settlement growing at its own yearly rate. Districts are Voronoi
//! cells around random seeds, so every district owns at least its seed.
//! Friction varies smoothly between roughly 20 and 40 minutes per km.
//! Home-birth rates and postnatal coverage are drawn per district.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Cell;

use super::format::{Candidates, PolicyBlock, PolicyMode, ScenarioFile};

pub const MIN_SIDE: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub districts: usize,
    pub years: usize,
    pub budget_per_year: usize,
    pub settlements: usize,
    pub existing_facilities: usize,
    pub threshold_minutes: f64,
    pub policy: PolicyMode,
    pub name: Option<String>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            rows: 16,
            cols: 16,
            districts: 3,
            years: 5,
            budget_per_year: 3,
            settlements: 6,
            existing_facilities: 2,
            threshold_minutes: 120.0,
            policy: PolicyMode::Dp1,
            name: None,
        }
    }
}

fn round_to(x: f64, places: i32) -> f64 {
    let k = 10f64.powi(places);
    (x * k).round() / k
}

struct Settlement {
    row: f64,
    col: f64,
    peak: f64,
    spread: f64,
    growth: f64,
}

/// Generates a complete scenario. The same config always yields the same
/// file.
pub fn generate_synthetic_region(config: &SyntheticConfig) -> Result<ScenarioFile> {
    let SyntheticConfig { rows, cols, districts, years, .. } = *config;
    if rows < MIN_SIDE || cols < MIN_SIDE {
        return Err(Error::InvalidArgument(format!(
            "synthetic grids must be at least {MIN_SIDE}x{MIN_SIDE}, got {rows}x{cols}"
        )));
    }
    let n = rows * cols;
    if districts == 0 || districts > n {
        return Err(Error::InvalidArgument(format!("cannot split {n} cells into {districts} districts")));
    }
    if years == 0 {
        return Err(Error::InvalidArgument("at least one year is required".into()));
    }
    if config.existing_facilities > n {
        return Err(Error::InvalidArgument(format!(
            "{} existing facilities do not fit in {n} cells",
            config.existing_facilities
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let max_spread = (rows.min(cols) as f64 / 4.0).max(1.5);
    let settlements: Vec<Settlement> = (0..config.settlements)
        .map(|_| Settlement {
            row: rng.gen_range(0.0..rows as f64),
            col: rng.gen_range(0.0..cols as f64),
            peak: rng.gen_range(50.0..400.0),
            spread: rng.gen_range(1.0..max_spread),
            growth: rng.gen_range(1.0..1.08),
        })
        .collect();
    let background: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=8) as f64).collect();
    let population: Vec<Vec<f64>> = (0..years)
        .map(|t| {
            (0..n)
                .map(|i| {
                    let c = Cell::from_index(i, cols);
                    let bumps: f64 = settlements
                        .iter()
                        .map(|s| {
                            let d2 = (c.row as f64 - s.row).powi(2) + (c.col as f64 - s.col).powi(2);
                            s.peak * (-d2 / (2.0 * s.spread * s.spread)).exp() * s.growth.powi(t as i32)
                        })
                        .sum();
                    (background[i] + bumps).round()
                })
                .collect()
        })
        .collect();

    let (fr, fc) = (rng.gen_range(0.2..0.6), rng.gen_range(0.2..0.6));
    let (pr, pc) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU));
    let friction = (0..n)
        .map(|i| {
            let c = Cell::from_index(i, cols);
            let m = 30.0 + 6.0 * (c.row as f64 * fr + pr).sin() + 4.0 * (c.col as f64 * fc + pc).cos();
            Some(round_to(m, 1))
        })
        .collect();

    let seeds: Vec<Cell> = sample(&mut rng, n, districts)
        .into_iter()
        .map(|i| Cell::from_index(i, cols))
        .collect();
    let district_grid = (0..n)
        .map(|i| {
            let c = Cell::from_index(i, cols);
            let d2 = |s: &Cell| (c.row.abs_diff(s.row)).pow(2) + (c.col.abs_diff(s.col)).pow(2);
            // min_by_key keeps the first seed on ties
            let (q, _) = seeds.iter().enumerate().min_by_key(|(_, s)| d2(s)).expect("districts > 0");
            q + 1
        })
        .collect();

    let home_birth_rates = (0..districts).map(|_| round_to(rng.gen_range(0.2..0.9), 2)).collect();
    let postnatal_coverage = (0..districts).map(|_| round_to(rng.gen_range(0.1..0.8), 2)).collect();
    let mut existing: Vec<Cell> = sample(&mut rng, n, config.existing_facilities)
        .into_iter()
        .map(|i| Cell::from_index(i, cols))
        .collect();
    existing.sort();

    Ok(ScenarioFile {
        name: config
            .name
            .clone()
            .unwrap_or_else(|| format!("synthetic-{rows}x{cols}-seed{}", config.seed)),
        rows,
        cols,
        years,
        districts,
        cell_size_km: 1.0,
        threshold_minutes: config.threshold_minutes,
        budgets: vec![config.budget_per_year; years],
        policy: PolicyBlock {
            mode: config.policy,
            mass: 0.9,
            sigma: (1..=districts).collect(),
            home_birth_rates,
            postnatal_coverage,
            proportions: Vec::new(),
        },
        existing,
        candidates: Candidates::All,
        advice: Default::default(),
        friction,
        district_grid,
        population,
    })
}
