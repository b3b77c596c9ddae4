//! Serializable instance descriptions and frozen oracle results.
//!
//! Fixture files are JSON arrays of [`OracleFixture`]. Each entry carries the
//! full instance (elements, budgets, policy in millionths, objective either
//! as a complete subset table or as explicit covered-cell lists) and the
//! optimum values computed when the file was emitted.

use std::path::Path;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::{brute_force_opt, ConstraintClass};
use crate::algorithms::{multistep_planning, PlanOptions};
use crate::coverage::{CoverageModel, CoverageObjective, PopulationSeries};
use crate::error::{Error, Result};
use crate::model::{Cell, Element, ElementId, Instance, Policy};
use crate::objective::{SetFunction, TableEntry, TableFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectiveSpec {
    Table {
        ground: Vec<ElementId>,
        entries: Vec<TableEntry>,
    },
    Coverage {
        rows: usize,
        cols: usize,
        candidates: Vec<Cell>,
        /// Row-major cell indices covered by each candidate.
        covered: Vec<Vec<usize>>,
        /// `population[t - 1][cell]`.
        population: Vec<Vec<f64>>,
        /// Cells already covered before planning.
        #[serde(default)]
        existing: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub horizon: usize,
    pub num_types: usize,
    pub budgets: Vec<usize>,
    pub proportions_micro: Vec<u64>,
    pub sigma: Vec<usize>,
    pub elements: Vec<Element>,
    pub objective: ObjectiveSpec,
}

impl InstanceSpec {
    pub fn policy(&self) -> Policy {
        Policy::from_micro(self.proportions_micro.clone(), self.sigma.clone())
    }

    pub fn objective(&self) -> Result<Arc<dyn SetFunction>> {
        Ok(match &self.objective {
            ObjectiveSpec::Table { ground, entries } => Arc::new(TableFunction::new(ground.clone(), entries)?),
            ObjectiveSpec::Coverage {
                rows,
                cols,
                candidates,
                covered,
                population,
                existing,
            } => {
                let n = rows * cols;
                let bitset = |cells: &[usize]| {
                    let mut s = FixedBitSet::with_capacity(n);
                    for &c in cells {
                        s.insert(c);
                    }
                    s
                };
                let sets = covered.iter().map(|c| bitset(c)).collect();
                let pop = PopulationSeries::new(*rows, *cols, population.clone())?;
                let model = CoverageModel::from_sets(*rows, *cols, candidates.clone(), sets, pop)?
                    .with_existing_cells(&bitset(existing));
                Arc::new(CoverageObjective::new(Arc::new(model), &self.elements)?)
            }
        })
    }

    pub fn build(&self) -> Result<Instance> {
        Ok(Instance::new(
            self.horizon,
            self.num_types,
            self.elements.clone(),
            self.budgets.clone(),
            self.policy(),
            self.objective()?,
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleFixture {
    pub name: String,
    pub instance: InstanceSpec,
    /// Best value with exactly `b^(t)` elements per round.
    pub cardinality_optimum: f64,
    /// Best min-ratio-feasible value with budgets truncated after round `t`.
    pub sigma_prefix_optima: Vec<f64>,
    /// Value of the round-by-round quota planner on the full instance.
    pub multistep_value: f64,
}

/// Single-round advice instance with its cardinality optimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdviceFixture {
    pub name: String,
    pub instance: InstanceSpec,
    pub advice: Vec<ElementId>,
    /// Best value of `b^(1)` elements of round 1.
    pub optimum: f64,
}

/// Runs the oracle and the quota planner on `spec`.
pub fn certify(name: &str, spec: &InstanceSpec) -> Result<OracleFixture> {
    let instance = spec.build()?;
    let cardinality_optimum = brute_force_opt(&instance, &ConstraintClass::Cardinality)?.value;
    let sigma_prefix_optima = (1..=instance.horizon())
        .map(|t| brute_force_opt(&instance.truncated(t), &ConstraintClass::SigmaTypeFeasible).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let multistep_value = multistep_planning(&instance, PlanOptions::default(), None)?.total;
    Ok(OracleFixture {
        name: name.to_string(),
        instance: spec.clone(),
        cardinality_optimum,
        sigma_prefix_optima,
        multistep_value,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_fixtures(path: &Path, fixtures: &[OracleFixture]) -> Result<()> {
    write_json(path, &fixtures)
}

pub fn read_fixtures(path: &Path) -> Result<Vec<OracleFixture>> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_spec_builds_and_evaluates() {
        let spec = InstanceSpec {
            horizon: 2,
            num_types: 1,
            budgets: vec![1, 1],
            proportions_micro: vec![0],
            sigma: vec![1],
            elements: vec![
                Element { id: ElementId(0), cell: Cell::new(0, 0), round: 1, type_id: 1 },
                Element { id: ElementId(1), cell: Cell::new(0, 1), round: 2, type_id: 1 },
            ],
            objective: ObjectiveSpec::Coverage {
                rows: 1,
                cols: 2,
                candidates: vec![Cell::new(0, 0), Cell::new(0, 1)],
                covered: vec![vec![0], vec![0, 1]],
                population: vec![vec![3.0, 4.0], vec![5.0, 6.0]],
                existing: vec![],
            },
        };
        let inst = spec.build().unwrap();
        assert!(inst.validate().is_valid());
        assert_eq!(inst.objective().value(&[ElementId(0), ElementId(1)]), 3.0 + 11.0);
        let json = serde_json::to_string(&spec).unwrap();
        let back: InstanceSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
