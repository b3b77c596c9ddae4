//! Runs over scenarios shared by the CLI and the service: planning, budget
//! sweeps, equity tables and retrospective refinement.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    multistep_planning, multistep_planning_with_advice, retrospective_compare, GreedyMode, PlanOptions, PlanResult,
    Progress, RetrospectiveOptions,
};
use crate::error::{Error, Result};
use crate::model::{Cell, ElementId};
use crate::proportionality::alpha_min_counts;
use crate::scenario::{PolicyMode, Scenario};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[default]
    Multistep,
    MultistepAdvice,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multistep" => Ok(Algorithm::Multistep),
            "multistep-advice" => Ok(Algorithm::MultistepAdvice),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm `{other}` (expected multistep or multistep-advice)"
            ))),
        }
    }
}

/// Parameters of one planning run. Everything left unset falls back to the
/// scenario file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanRequest {
    pub policy: Option<PolicyMode>,
    pub algorithm: Algorithm,
    /// One budget per year.
    pub budgets: Option<Vec<usize>>,
    /// Advised cells per round; replaces the scenario's advice block.
    pub advice: Option<BTreeMap<usize, Vec<Cell>>>,
    pub mode: GreedyMode,
}

fn plan_options(mode: GreedyMode) -> PlanOptions {
    PlanOptions {
        mode,
        exclusive_cells: true,
    }
}

type PreparedPlan = (crate::model::Instance, Option<Vec<Option<Vec<ElementId>>>>);

fn prepare_plan(scenario: &Scenario, request: &PlanRequest) -> Result<PreparedPlan> {
    let instance = scenario.instance_with(request.policy, request.budgets.clone())?;
    instance.ensure_valid()?;
    let advice = match request.algorithm {
        Algorithm::Multistep => None,
        Algorithm::MultistepAdvice => {
            let advice = request.advice.as_ref().unwrap_or(&scenario.file.advice);
            if advice.values().all(Vec::is_empty) {
                return Err(Error::Validation(
                    "multistep-advice needs advice: the scenario has no [advice] entries and none were given".into(),
                ));
            }
            Some(scenario.advice_elements(advice)?)
        }
    };
    Ok((instance, advice))
}

/// Checks a plan request without running it.
pub fn validate_plan_request(scenario: &Scenario, request: &PlanRequest) -> Result<()> {
    prepare_plan(scenario, request).map(|_| ())
}

/// Plans `scenario` as requested. Facilities never share a cell.
pub fn plan(scenario: &Scenario, request: &PlanRequest, progress: Option<Progress<'_>>) -> Result<PlanResult> {
    let (instance, advice) = prepare_plan(scenario, request)?;
    let options = plan_options(request.mode);
    match advice {
        None => multistep_planning(&instance, options, progress),
        Some(advice) => multistep_planning_with_advice(&instance, &advice, options, progress),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub budget_per_year: usize,
    pub policy: PolicyMode,
    /// Coverage including existing facilities.
    pub total: f64,
    /// Coverage above existing facilities.
    pub gain: f64,
    /// Unconstrained gain over this policy's gain; `None` when this policy
    /// gains nothing.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub scenario: String,
    pub baseline: f64,
    pub rows: Vec<SweepRow>,
    /// Rows whose ratio falls below one.
    pub violations: Vec<String>,
    /// Per constrained policy: whether its ratio never rises with the budget.
    pub non_increasing: BTreeMap<PolicyMode, bool>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("budget_per_year,policy,total,gain,ratio\n");
        for r in &self.rows {
            let ratio = r.ratio.map_or_else(String::new, |x| x.to_string());
            let _ = writeln!(out, "{},{},{},{},{}", r.budget_per_year, r.policy, r.total, r.gain, ratio);
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:>8}  {:>8}  {:>14}  {:>14}  {:>10}\n", "budget", "policy", "total", "gain", "ratio");
        for r in &self.rows {
            let ratio = r.ratio.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
            let _ = writeln!(
                out,
                "{:>8}  {:>8}  {:>14.1}  {:>14.1}  {:>10}",
                r.budget_per_year, r.policy, r.total, r.gain, ratio
            );
        }
        for (policy, flag) in &self.non_increasing {
            let _ = writeln!(out, "{policy}: ratio non-increasing in budget: {flag}");
        }
        for v in &self.violations {
            let _ = writeln!(out, "ratio below 1: {v}");
        }
        out
    }
}

/// A matplotlib script that plots the ratio column of `csv_name`.
pub fn sweep_plot_script(csv_name: &str) -> String {
    format!(
        r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("{csv_name}")))
for policy in sorted({{r["policy"] for r in rows}}):
    pts = [(int(r["budget_per_year"]), float(r["ratio"])) for r in rows if r["policy"] == policy and r["ratio"]]
    plt.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=policy)
plt.xlabel("facilities per year")
plt.ylabel("unconstrained gain / policy gain")
plt.legend()
plt.savefig("{stem}.png", dpi=150)
"#,
        stem = csv_name.trim_end_matches(".csv")
    )
}

/// Plans every (budget, policy) pair and compares each policy's gain with
/// the unconstrained plan at the same budget.
pub fn budget_sweep(scenario: &Scenario, budgets: &[usize], policies: &[PolicyMode], mode: GreedyMode) -> Result<SweepReport> {
    if budgets.is_empty() {
        return Err(Error::InvalidArgument("budget sweep needs at least one budget".into()));
    }
    let mut all = vec![PolicyMode::Dp0];
    all.extend(policies.iter().copied().filter(|p| *p != PolicyMode::Dp0));
    let cells: Vec<(usize, PolicyMode)> = budgets
        .iter()
        .flat_map(|&b| all.iter().map(move |&p| (b, p)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(b, policy)| {
            let request = PlanRequest {
                policy: Some(policy),
                budgets: Some(vec![b; scenario.file.years]),
                mode,
                ..Default::default()
            };
            plan(scenario, &request, None)
        })
        .collect::<Result<Vec<_>>>()?;

    let baseline = scenario.objective.baseline();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (chunk, &b) in results.chunks(all.len()).zip(budgets) {
        let reference = chunk[0].gain();
        for (result, &policy) in chunk.iter().zip(&all) {
            let gain = result.gain();
            let ratio = (gain > 0.0).then(|| reference / gain);
            if let Some(x) = ratio {
                if x < 1.0 {
                    violations.push(format!("budget {b}, {policy}: {x}"));
                }
            }
            rows.push(SweepRow {
                budget_per_year: b,
                policy,
                total: result.total,
                gain,
                ratio,
            });
        }
    }
    let mut non_increasing = BTreeMap::new();
    for &policy in all.iter().skip(1) {
        let mut by_budget: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.policy == policy)
            .filter_map(|r| r.ratio.map(|x| (r.budget_per_year, x)))
            .collect();
        by_budget.sort_by_key(|&(b, _)| b);
        non_increasing.insert(policy, by_budget.windows(2).all(|w| w[1].1 <= w[0].1));
    }
    Ok(SweepReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: scenario.file.name.clone(),
        baseline,
        rows,
        violations,
        non_increasing,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquityRow {
    pub policy: PolicyMode,
    pub total: f64,
    /// Facilities per district in the final plan.
    pub counts: Vec<usize>,
    /// `α_min` of the final plan under each scoring policy; `None` when
    /// unbounded.
    pub alpha_min: BTreeMap<PolicyMode, Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquityReport {
    pub schema_version: u32,
    pub scenario: String,
    pub scored_under: Vec<PolicyMode>,
    pub rows: Vec<EquityRow>,
}

impl EquityReport {
    pub fn row(&self, policy: PolicyMode) -> Option<&EquityRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }

    /// `α_min` of `planned`'s output under `scored`.
    pub fn score(&self, planned: PolicyMode, scored: PolicyMode) -> Option<f64> {
        self.row(planned).and_then(|r| r.alpha_min.get(&scored).copied().flatten())
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:>8}", "plan");
        for s in &self.scored_under {
            let _ = write!(out, "  {:>10}", format!("under {s}"));
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:>8}", r.policy.as_str());
            for s in &self.scored_under {
                let cell = r.alpha_min[s].map_or_else(|| "inf".to_string(), |x| format!("{x:.4}"));
                let _ = write!(out, "  {cell:>10}");
            }
            out.push('\n');
        }
        out
    }
}

/// Plans under each policy and scores every final plan's `α_min` under the
/// home-birth and postnatal-coverage proportions.
pub fn equity(scenario: &Scenario, policies: &[PolicyMode], mode: GreedyMode) -> Result<EquityReport> {
    let scored_under = vec![PolicyMode::Dp1, PolicyMode::Dp2];
    let scoring = scored_under
        .iter()
        .map(|&m| scenario.policy_for(m).map(|p| (m, p)))
        .collect::<Result<Vec<_>>>()?;
    let rows = policies
        .par_iter()
        .map(|&policy| {
            let request = PlanRequest {
                policy: Some(policy),
                mode,
                ..Default::default()
            };
            let result = plan(scenario, &request, None)?;
            let counts = scenario.instance.type_counts_of(&result.selection().all())?;
            let alpha_min = scoring
                .iter()
                .map(|(m, p)| alpha_min_counts(&counts, p).map(|s| (*m, s.finite())))
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok(EquityRow {
                policy,
                total: result.total,
                counts,
                alpha_min,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquityReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: scenario.file.name.clone(),
        scored_under,
        rows,
    })
}

/// One round of advice refined against greedy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineRequest {
    pub round: usize,
    /// Advised cells; defaults to the scenario's advice for `round`.
    pub advice: Option<Vec<Cell>>,
    pub permutations: usize,
    pub seed: u64,
    /// Restrict candidates to one district.
    pub district: Option<usize>,
    /// Facilities of other rounds that stay fixed.
    pub fixed: BTreeMap<usize, Vec<Cell>>,
    pub mode: GreedyMode,
}

impl Default for RefineRequest {
    fn default() -> Self {
        let defaults = RetrospectiveOptions::default();
        RefineRequest {
            round: 1,
            advice: None,
            permutations: defaults.trials,
            seed: defaults.seed,
            district: None,
            fixed: BTreeMap::new(),
            mode: defaults.mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineResult {
    pub schema_version: u32,
    pub round: usize,
    pub district: Option<usize>,
    pub advice: Vec<Cell>,
    pub advice_value: f64,
    pub greedy: Vec<Cell>,
    pub greedy_value: f64,
    pub refined: Vec<Cell>,
    pub refined_value: f64,
    pub best_permutation: usize,
    pub kept_prefix: usize,
    pub permutation_values: Vec<f64>,
    pub ordering: String,
}

impl RefineResult {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("refine results always serialize");
        text.push('\n');
        text
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, name: &str, value: f64, cells: &[Cell]| {
            let cells: Vec<String> = cells.iter().map(Cell::to_string).collect();
            let _ = writeln!(out, "{name:>8}  {value:>14.1}  {}", cells.join(" "));
        };
        row(&mut out, "advice", self.advice_value, &self.advice);
        row(&mut out, "greedy", self.greedy_value, &self.greedy);
        row(&mut out, "refined", self.refined_value, &self.refined);
        let _ = writeln!(out, "{}", self.ordering);
        out
    }
}

struct PreparedRefine {
    cells: Vec<Cell>,
    advice: Vec<ElementId>,
    fixed: Vec<ElementId>,
    ground: Vec<ElementId>,
}

fn prepare_refine(scenario: &Scenario, request: &RefineRequest) -> Result<PreparedRefine> {
    let t = request.round;
    if t == 0 || t > scenario.file.years {
        return Err(Error::InvalidArgument(format!("round {t} is outside 1..={}", scenario.file.years)));
    }
    if request.permutations == 0 {
        return Err(Error::InvalidArgument("at least one permutation is required".into()));
    }
    let cells = match &request.advice {
        Some(cells) => cells.clone(),
        None => scenario.file.advice.get(&t).cloned().unwrap_or_default(),
    };
    if cells.is_empty() {
        return Err(Error::Validation(format!("no advice for round {t}")));
    }
    let mut round_advice = BTreeMap::new();
    round_advice.insert(t, cells.clone());
    let advice = scenario.advice_elements(&round_advice)?[t - 1].take().unwrap_or_default();
    if let Some(q) = request.district {
        if q == 0 || q > scenario.file.districts {
            return Err(Error::InvalidArgument(format!("district {q} is outside 1..={}", scenario.file.districts)));
        }
        if let Some(c) = cells.iter().find(|c| scenario.file.district_grid[c.index(scenario.file.cols)] != q) {
            return Err(Error::InvalidAdvice(format!("cell {c} is not in district {q}")));
        }
    }
    let fixed: Vec<ElementId> = scenario
        .advice_elements(&request.fixed)?
        .into_iter()
        .enumerate()
        .filter(|(i, _)| i + 1 != t)
        .flat_map(|(_, ids)| ids.unwrap_or_default())
        .collect();
    let ground: Vec<ElementId> = scenario
        .instance
        .round_elements(t)
        .iter()
        .copied()
        .filter(|&id| request.district.is_none() || scenario.instance.type_of(id) == request.district)
        .collect();
    let mut distinct = advice.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != advice.len() {
        return Err(Error::InvalidAdvice("advice lists a cell twice".into()));
    }
    Ok(PreparedRefine {
        cells,
        advice,
        fixed,
        ground,
    })
}

/// Checks a refine request without running it.
pub fn validate_refine_request(scenario: &Scenario, request: &RefineRequest) -> Result<()> {
    prepare_refine(scenario, request).map(|_| ())
}

/// Compares a round's advice, greedy with the same number of facilities,
/// and the advice refined over several orderings.
pub fn refine(scenario: &Scenario, request: &RefineRequest) -> Result<RefineResult> {
    let PreparedRefine {
        cells,
        advice,
        fixed,
        ground,
    } = prepare_refine(scenario, request)?;
    let report = retrospective_compare(
        scenario.instance.objective(),
        &ground,
        &advice,
        &fixed,
        RetrospectiveOptions {
            trials: request.permutations,
            seed: request.seed,
            mode: request.mode,
        },
    )?;
    Ok(RefineResult {
        schema_version: REPORT_SCHEMA_VERSION,
        round: request.round,
        district: request.district,
        advice: cells,
        advice_value: report.advice_value,
        greedy: scenario.cells_of(&report.greedy),
        greedy_value: report.greedy_value,
        refined: scenario.cells_of(&report.refined),
        refined_value: report.refined_value,
        best_permutation: report.best_trial,
        kept_prefix: report.kept_prefix,
        permutation_values: report.trial_values.clone(),
        ordering: report.ordering(),
    })
}
