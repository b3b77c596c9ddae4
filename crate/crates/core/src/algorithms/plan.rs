//! Planner output shared by the CLI, the service and the experiments.

use serde::{Deserialize, Serialize};

use crate::model::{Cell, ElementId, Selection};
use crate::proportionality::Redistribution;

pub const PLAN_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Diagnostic {
    QuotaRedistributed {
        round: usize,
        from_type: usize,
        to_type: usize,
        amount: usize,
    },
    AdviceDropped {
        round: usize,
        element: ElementId,
        reason: String,
    },
    BudgetShortfall {
        round: usize,
        requested: usize,
        filled: usize,
    },
}

impl From<Redistribution> for Diagnostic {
    fn from(r: Redistribution) -> Self {
        Diagnostic::QuotaRedistributed {
            round: r.round,
            from_type: r.from_type,
            to_type: r.to_type,
            amount: r.amount,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedFacility {
    pub id: ElementId,
    pub cell: Cell,
    pub type_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: usize,
    pub budget: usize,
    /// Quota row before availability adjustments; `None` without proportions.
    pub quota: Option<Vec<usize>>,
    /// Per-type caps actually enforced this round.
    pub caps: Vec<usize>,
    pub selected: Vec<PlannedFacility>,
    /// `f(S^(1:t))`, existing coverage included.
    pub objective: f64,
    /// `α_min(S^(1:t))`; `None` when unbounded or the prefix is empty.
    pub alpha_min: Option<f64>,
    pub sigma_feasible: bool,
    /// For advice runs: index of the advice prefix that was kept.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub advice_prefix: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub schema_version: u32,
    pub algorithm: String,
    pub rounds: Vec<RoundOutcome>,
    /// Value of existing facilities alone.
    pub baseline: f64,
    pub total: f64,
    pub evaluations: u64,
    pub diagnostics: Vec<Diagnostic>,
}

impl PlanResult {
    pub fn selection(&self) -> Selection {
        Selection::from_rounds(
            self.rounds
                .iter()
                .map(|r| r.selected.iter().map(|f| f.id).collect())
                .collect(),
        )
    }

    /// `f(S^(1:t))` for `t = 1..=h`.
    pub fn trajectory(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.objective).collect()
    }

    /// Value above the existing-facility baseline.
    pub fn gain(&self) -> f64 {
        self.total - self.baseline
    }

    /// Canonical JSON encoding used for files and HTTP bodies alike.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("plan results always serialize");
        text.push('\n');
        text
    }
}
