//! Round-by-round planning under quota partition matroids.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::greedy::{greedy_fill, Admission, GreedyMode};
use super::plan::{Diagnostic, PlanResult, PlannedFacility, RoundOutcome, PLAN_SCHEMA_VERSION};
use crate::error::Result;
use crate::model::{Cell, ElementId, Instance, Selection};
use crate::proportionality::{alpha_min_counts, min_ratio_sequence, quota_table, resolve_caps, QuotaTable};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub mode: GreedyMode,
    /// Never build twice on the same cell, across and within rounds.
    pub exclusive_cells: bool,
}

/// Called after each committed round with `(round, horizon)`.
pub type Progress<'p> = &'p mut dyn FnMut(usize, usize);

/// Per-type caps of one round plus optional cell exclusivity.
pub(crate) struct RoundAdmission<'s> {
    instance: &'s Instance,
    caps: Vec<usize>,
    counts: Vec<usize>,
    blocked: Option<&'s HashSet<Cell>>,
    cells: HashSet<Cell>,
}

impl<'s> RoundAdmission<'s> {
    pub(crate) fn caps_only(instance: &'s Instance, caps: &[usize]) -> Self {
        RoundAdmission {
            instance,
            caps: caps.to_vec(),
            counts: vec![0; instance.num_types()],
            blocked: None,
            cells: HashSet::new(),
        }
    }

    pub(crate) fn type_full(&self, e: ElementId) -> bool {
        match self.instance.type_of(e) {
            Some(q) => self.counts[q - 1] >= self.caps[q - 1],
            None => true,
        }
    }

    pub(crate) fn cell_taken(&self, e: ElementId) -> bool {
        match (self.blocked, self.instance.element(e)) {
            (Some(blocked), Some(el)) => blocked.contains(&el.cell) || self.cells.contains(&el.cell),
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

impl Admission for RoundAdmission<'_> {
    fn admits(&self, e: ElementId) -> bool {
        !self.type_full(e) && !self.cell_taken(e)
    }

    fn commit(&mut self, e: ElementId) {
        if let Some(el) = self.instance.element(e) {
            self.counts[el.type_id - 1] += 1;
            if self.blocked.is_some() {
                self.cells.insert(el.cell);
            }
        }
    }
}

pub(crate) struct RoundSetup {
    pub quota: Option<Vec<usize>>,
    pub caps: Vec<usize>,
    pub candidates: Vec<ElementId>,
}

/// Bookkeeping shared by the planners: quotas, used cells, per-round
/// outcomes and diagnostics.
pub(crate) struct PlanState<'i> {
    pub instance: &'i Instance,
    pub options: PlanOptions,
    quotas: QuotaTable,
    used_cells: HashSet<Cell>,
    selection: Selection,
    rounds: Vec<RoundOutcome>,
    pub diagnostics: Vec<Diagnostic>,
    pub evaluations: u64,
}

impl<'i> PlanState<'i> {
    pub fn new(instance: &'i Instance, options: PlanOptions) -> Result<Self> {
        instance.ensure_valid()?;
        Ok(PlanState {
            instance,
            options,
            quotas: quota_table(instance.policy(), instance.budgets()),
            used_cells: HashSet::new(),
            selection: Selection::empty(instance.horizon()),
            rounds: Vec::with_capacity(instance.horizon()),
            diagnostics: Vec::new(),
            evaluations: 0,
        })
    }

    pub fn setup_round(&mut self, round: usize) -> RoundSetup {
        let inst = self.instance;
        let num_types = inst.num_types();
        let candidates: Vec<ElementId> = inst
            .round_elements(round)
            .iter()
            .copied()
            .filter(|&id| !self.options.exclusive_cells || !self.used_cells.contains(&inst.element(id).unwrap().cell))
            .collect();
        let quota = self.quotas.row(round).map(<[usize]>::to_vec);
        let caps = match &quota {
            Some(row) => {
                let mut available = vec![0; num_types];
                for &id in &candidates {
                    available[inst.type_of(id).unwrap() - 1] += 1;
                }
                let (caps, moves) = resolve_caps(round, row, &available, inst.policy());
                self.diagnostics.extend(moves.into_iter().map(Diagnostic::from));
                caps
            }
            None => self.quotas.caps(round, num_types),
        };
        RoundSetup {
            quota,
            caps,
            candidates,
        }
    }

    pub fn admission(&self, caps: &[usize]) -> RoundAdmission<'_> {
        RoundAdmission {
            instance: self.instance,
            caps: caps.to_vec(),
            counts: vec![0; self.instance.num_types()],
            blocked: self.options.exclusive_cells.then_some(&self.used_cells),
            cells: HashSet::new(),
        }
    }

    pub fn commit_round(
        &mut self,
        round: usize,
        setup: RoundSetup,
        picks: Vec<ElementId>,
        value: f64,
        advice_prefix: Option<usize>,
    ) {
        let inst = self.instance;
        let budget = inst.budget(round);
        if picks.len() < budget {
            self.diagnostics.push(Diagnostic::BudgetShortfall {
                round,
                requested: budget,
                filled: picks.len(),
            });
        }
        let selected = picks
            .iter()
            .map(|&id| {
                let e = inst.element(id).expect("picks come from the instance");
                PlannedFacility {
                    id,
                    cell: e.cell,
                    type_id: e.type_id,
                }
            })
            .collect::<Vec<_>>();
        for f in &selected {
            self.used_cells.insert(f.cell);
        }
        self.selection.set_round(round, picks);

        let prefix = self.selection.cumulative(round);
        let counts = inst.type_counts_of(&prefix).expect("picks come from the instance");
        let alpha = if prefix.is_empty() {
            None
        } else {
            alpha_min_counts(&counts, inst.policy()).ok().and_then(|a| a.finite())
        };
        let cumulative = inst.cumulative_budget(round);
        let sigma_feasible = if inst.policy().is_constrained() {
            counts == min_ratio_sequence(inst.policy(), cumulative, cumulative).counts(inst.num_types())
        } else {
            prefix.len() == cumulative
        };
        self.rounds.push(RoundOutcome {
            round,
            budget,
            quota: setup.quota,
            caps: setup.caps,
            selected,
            objective: value,
            alpha_min: alpha,
            sigma_feasible,
            advice_prefix,
        });
    }

    pub fn finish(self, algorithm: &str, baseline: f64) -> PlanResult {
        let total = self.rounds.last().map_or(baseline, |r| r.objective);
        PlanResult {
            schema_version: PLAN_SCHEMA_VERSION,
            algorithm: algorithm.to_string(),
            rounds: self.rounds,
            baseline,
            total,
            evaluations: self.evaluations,
            diagnostics: self.diagnostics,
        }
    }
}

/// Plans every round in order: the round's quota row becomes a partition
/// matroid and greedy fills the round budget conditioned on all earlier
/// rounds. Every prefix of the output matches the min-ratio type counts.
pub fn multistep_planning(instance: &Instance, options: PlanOptions, progress: Option<Progress<'_>>) -> Result<PlanResult> {
    let mut state = PlanState::new(instance, options)?;
    let mut evaluator = instance.objective().evaluator();
    let baseline = evaluator.value();
    let mut progress = progress;
    for t in 1..=instance.horizon() {
        let setup = state.setup_round(t);
        let picks = {
            let mut admission = state.admission(&setup.caps);
            let mut evaluations = 0;
            let picks = greedy_fill(
                evaluator.as_mut(),
                &setup.candidates,
                instance.budget(t),
                &mut admission,
                options.mode,
                &mut evaluations,
            );
            state.evaluations += evaluations;
            picks
        };
        let value = evaluator.value();
        state.commit_round(t, setup, picks, value, None);
        if let Some(p) = progress.as_mut() {
            p(t, instance.horizon());
        }
    }
    Ok(state.finish("multistep", baseline))
}
