//! Scenario files and the planning instances built from them.
//!
//! A scenario is a grid with friction, districts, yearly population,
//! existing facilities, candidate sites, budgets and a policy block. Each
//! candidate becomes one element per round it is available in; its type
//! is the district it lies in.

pub mod format;
pub mod policy;
pub mod synthetic;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

pub use format::{CandidateSite, Candidates, PolicyBlock, PolicyMode, ScenarioFile};
pub use policy::{build_policy, derive_policy_proportions, proportions_to_micro};
pub use synthetic::{generate_synthetic_region, SyntheticConfig};

use crate::coverage::{CoverageModel, CoverageObjective, FrictionGrid, PopulationSeries};
use crate::error::{Error, Result};
use crate::model::{Cell, Element, ElementId, Instance, Policy};

/// A scenario with its isochrones computed and its instance assembled.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub instance: Instance,
    pub model: Arc<CoverageModel>,
    pub objective: Arc<CoverageObjective>,
    by_site: HashMap<(Cell, usize), ElementId>,
}

impl Scenario {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::build(ScenarioFile::load(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::build(ScenarioFile::parse(text)?)
    }

    pub fn build(file: ScenarioFile) -> Result<Self> {
        file.validate()?;
        let friction = FrictionGrid::with_mask(
            file.rows,
            file.cols,
            file.friction.iter().map(|m| m.unwrap_or(0.0)).collect(),
            file.friction.iter().map(Option::is_some).collect(),
            file.cell_size_km,
        )?;
        let population = PopulationSeries::new(file.rows, file.cols, file.population.clone())?;

        // earliest round per candidate cell; impassable cells never cover anything
        let mut first_round: std::collections::BTreeMap<Cell, usize> = Default::default();
        match &file.candidates {
            Candidates::All => {
                for i in 0..file.cell_count() {
                    if file.friction[i].is_some() {
                        first_round.insert(Cell::from_index(i, file.cols), 1);
                    }
                }
            }
            Candidates::Listed(list) => {
                for site in list {
                    let slot = first_round.entry(site.cell).or_insert(site.from_round);
                    *slot = (*slot).min(site.from_round);
                }
            }
        }
        let cells: Vec<Cell> = first_round.keys().copied().collect();
        let model = CoverageModel::build(&friction, population, &cells, file.threshold_minutes)?
            .with_existing(&friction, &file.existing);
        let model = Arc::new(model);

        let mut elements = Vec::new();
        let mut by_site = HashMap::new();
        for t in 1..=file.years {
            for (&cell, &from) in &first_round {
                if from <= t {
                    let id = ElementId(elements.len() as u32);
                    by_site.insert((cell, t), id);
                    elements.push(Element {
                        id,
                        cell,
                        round: t,
                        type_id: file.district_grid[cell.index(file.cols)],
                    });
                }
            }
        }
        let objective = Arc::new(CoverageObjective::new(model.clone(), &elements)?);
        let policy = build_policy(&file.policy, file.policy.mode, file.districts)?;
        let instance = Instance::new(
            file.years,
            file.districts,
            elements,
            file.budgets.clone(),
            policy,
            objective.clone(),
        );
        Ok(Scenario {
            file,
            instance,
            model,
            objective,
            by_site,
        })
    }

    /// The element for building at `cell` in `round`.
    pub fn element_at(&self, cell: Cell, round: usize) -> Option<ElementId> {
        self.by_site.get(&(cell, round)).copied()
    }

    pub fn policy_for(&self, mode: PolicyMode) -> Result<Policy> {
        build_policy(&self.file.policy, mode, self.file.districts)
    }

    /// The instance under another policy and, optionally, other budgets.
    pub fn instance_with(&self, mode: Option<PolicyMode>, budgets: Option<Vec<usize>>) -> Result<Instance> {
        let mut instance = self.instance.clone();
        if let Some(mode) = mode {
            instance = instance.with_policy(self.policy_for(mode)?);
        }
        if let Some(budgets) = budgets {
            if budgets.len() != self.file.years {
                return Err(Error::InvalidArgument(format!(
                    "{} budgets given for {} years",
                    budgets.len(),
                    self.file.years
                )));
            }
            instance = instance.with_budgets(budgets);
        }
        Ok(instance)
    }

    /// Advice cells mapped to element ids, one entry per round.
    pub fn advice_elements(&self, advice: &std::collections::BTreeMap<usize, Vec<Cell>>) -> Result<Vec<Option<Vec<ElementId>>>> {
        let mut out = vec![None; self.file.years];
        for (&round, cells) in advice {
            if round == 0 || round > self.file.years {
                return Err(Error::InvalidAdvice(format!("round {round} is outside 1..={}", self.file.years)));
            }
            let ids = cells
                .iter()
                .map(|&c| {
                    self.element_at(c, round).ok_or_else(|| {
                        Error::InvalidAdvice(format!("cell {c} is not a candidate in round {round}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out[round - 1] = Some(ids);
        }
        Ok(out)
    }

    /// Cells of the given elements, in the given order.
    pub fn cells_of(&self, ids: &[ElementId]) -> Vec<Cell> {
        ids.iter()
            .filter_map(|&id| self.instance.element(id).map(|e| e.cell))
            .collect()
    }

    /// Candidate cells lying in `district`.
    pub fn district_cells(&self, district: usize) -> BTreeSet<Cell> {
        self.model
            .candidates()
            .iter()
            .copied()
            .filter(|c| self.file.district_grid[c.index(self.file.cols)] == district)
            .collect()
    }

    pub fn warnings(&self) -> &[String] {
        self.model.warnings()
    }
}
