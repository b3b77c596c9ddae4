//! Refining an advised selection: for each set in a chain of advice subsets,
//! keep the subset and complete it greedily, then return the best completion.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::greedy::{greedy_fill, Admission, GreedyMode, Unrestricted};
use super::multistep::{PlanOptions, PlanState, Progress, RoundAdmission};
use super::plan::{Diagnostic, PlanResult};
use crate::error::{Error, Result};
use crate::model::{ElementId, Instance};
use crate::objective::{MarginalEvaluator, SetFunction};

/// Which advice subsets to try.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdviceChain {
    /// The first `i` advice elements for `i = 0..=|A|`.
    #[default]
    Prefixes,
    /// Only the empty set: plain greedy.
    Empty,
    /// Caller-supplied subsets of the advice.
    Custom(Vec<Vec<ElementId>>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdviceOutcome {
    /// Kept advice subset followed by the greedy completion.
    pub selection: Vec<ElementId>,
    /// Index into the chain of the winning subset.
    pub chosen_index: usize,
    /// `f(conditioned_on ∪ U_i)` for every chain entry.
    pub values: Vec<f64>,
    pub value: f64,
    pub evaluations: u64,
}

fn chain_sets(advice: &[ElementId], chain: &AdviceChain, max_len: usize) -> Result<Vec<Vec<ElementId>>> {
    match chain {
        AdviceChain::Prefixes => Ok((0..=advice.len()).map(|i| advice[..i].to_vec()).collect()),
        AdviceChain::Empty => Ok(vec![Vec::new()]),
        AdviceChain::Custom(sets) => {
            if sets.is_empty() {
                return Err(Error::InvalidAdvice("custom chain is empty".into()));
            }
            for set in sets {
                if let Some(e) = set.iter().find(|e| !advice.contains(e)) {
                    return Err(Error::InvalidAdvice(format!("chain element {e} is not part of the advice")));
                }
                if set.len() > max_len {
                    return Err(Error::InvalidAdvice(format!(
                        "chain subset of size {} exceeds the budget {max_len}",
                        set.len()
                    )));
                }
            }
            Ok(sets.clone())
        }
    }
}

fn check_advice(ground: &[ElementId], advice: &[ElementId]) -> Result<()> {
    let ground: HashSet<&ElementId> = ground.iter().collect();
    let mut seen = HashSet::new();
    for e in advice {
        if !ground.contains(e) {
            return Err(Error::InvalidAdvice(format!("advice element {e} is not in the ground set")));
        }
        if !seen.insert(e) {
            return Err(Error::InvalidAdvice(format!("advice element {e} appears twice")));
        }
    }
    Ok(())
}

pub(crate) struct ChainResult<'a> {
    pub index: usize,
    pub picks: Vec<ElementId>,
    pub values: Vec<f64>,
    pub evaluator: Box<dyn MarginalEvaluator<'a> + 'a>,
}

/// Completes every chain set from `base` and keeps the best one; ties go to
/// the earliest chain entry.
pub(crate) fn chain_and_complete<'a, A: Admission>(
    base: &dyn MarginalEvaluator<'a>,
    candidates: &[ElementId],
    slots: usize,
    chain: &[Vec<ElementId>],
    mut admission: impl FnMut() -> A,
    mode: GreedyMode,
    evaluations: &mut u64,
) -> ChainResult<'a> {
    let mut best: Option<ChainResult<'a>> = None;
    let mut values = Vec::with_capacity(chain.len());
    for (i, kept) in chain.iter().enumerate() {
        let mut ev = base.fork();
        let mut adm = admission();
        let mut picks = Vec::with_capacity(slots);
        for &e in kept {
            ev.insert(e);
            adm.commit(e);
            picks.push(e);
        }
        let remaining = slots.saturating_sub(kept.len());
        picks.extend(greedy_fill(ev.as_mut(), candidates, remaining, &mut adm, mode, evaluations));
        let value = ev.value();
        values.push(value);
        if best.as_ref().is_none_or(|b| value > b.evaluator.value()) {
            best = Some(ChainResult {
                index: i,
                picks,
                values: Vec::new(),
                evaluator: ev,
            });
        }
    }
    let mut best = best.expect("chains are never empty");
    best.values = values;
    best
}

/// Single round, single type: refines advice `A` (`|A| = budget`) against
/// greedy completion on `ground`, conditioned on `conditioned_on`.
pub fn la_single_step(
    ground: &[ElementId],
    budget: usize,
    objective: &dyn SetFunction,
    advice: &[ElementId],
    chain: &AdviceChain,
    conditioned_on: &[ElementId],
    mode: GreedyMode,
) -> Result<AdviceOutcome> {
    check_advice(ground, advice)?;
    if advice.len() != budget {
        return Err(Error::InvalidAdvice(format!(
            "advice has {} elements, budget is {budget}",
            advice.len()
        )));
    }
    let available = ground.iter().filter(|e| !conditioned_on.contains(e)).count();
    if budget > available {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} exceeds the {available} available elements"
        )));
    }
    let sets = chain_sets(advice, chain, budget)?;
    let mut base = objective.evaluator();
    base.insert_all(conditioned_on);
    let mut evaluations = 0;
    let best = chain_and_complete(base.as_ref(), ground, budget, &sets, || Unrestricted, mode, &mut evaluations);
    Ok(AdviceOutcome {
        value: best.evaluator.value(),
        selection: best.picks,
        chosen_index: best.index,
        values: best.values,
        evaluations,
    })
}

/// Single round with per-type caps (`caps[q - 1]`): completions are
/// local-greedy under the remaining capacity.
pub fn la_many_types(
    instance: &Instance,
    ground: &[ElementId],
    caps: &[usize],
    advice: &[ElementId],
    chain: &AdviceChain,
    conditioned_on: &[ElementId],
    mode: GreedyMode,
) -> Result<AdviceOutcome> {
    check_advice(ground, advice)?;
    if caps.len() != instance.num_types() {
        return Err(Error::InvalidArgument(format!(
            "{} caps for {} types",
            caps.len(),
            instance.num_types()
        )));
    }
    let counts = instance.type_counts_of(advice)?;
    if let Some(q) = (0..caps.len()).find(|&q| counts[q] > caps[q]) {
        return Err(Error::InvalidAdvice(format!(
            "advice has {} elements of type {} but the cap is {}",
            counts[q],
            q + 1,
            caps[q]
        )));
    }
    let slots: usize = caps.iter().sum();
    let sets = chain_sets(advice, chain, slots)?;
    let mut base = instance.objective().evaluator();
    base.insert_all(conditioned_on);
    let mut evaluations = 0;
    let best = chain_and_complete(
        base.as_ref(),
        ground,
        slots,
        &sets,
        || RoundAdmission::caps_only(instance, caps),
        mode,
        &mut evaluations,
    );
    Ok(AdviceOutcome {
        value: best.evaluator.value(),
        selection: best.picks,
        chosen_index: best.index,
        values: best.values,
        evaluations,
    })
}

/// Round-by-round planning where each round refines its own advice under
/// the round's quotas. `advice[t - 1] = None` plans round `t` without advice.
///
/// Advice elements that would exceed a quota (or reuse a cell when cells
/// are exclusive) are dropped from the chain and reported.
pub fn multistep_planning_with_advice(
    instance: &Instance,
    advice: &[Option<Vec<ElementId>>],
    options: PlanOptions,
    progress: Option<Progress<'_>>,
) -> Result<PlanResult> {
    if advice.len() != instance.horizon() {
        return Err(Error::InvalidAdvice(format!(
            "advice covers {} rounds, the horizon is {}",
            advice.len(),
            instance.horizon()
        )));
    }
    let mut state = PlanState::new(instance, options)?;
    let mut evaluator = instance.objective().evaluator();
    let baseline = evaluator.value();
    let mut progress = progress;
    for t in 1..=instance.horizon() {
        let setup = state.setup_round(t);
        let (sets, dropped) = match &advice[t - 1] {
            None => (vec![Vec::new()], Vec::new()),
            Some(round_advice) => {
                let mut kept = Vec::new();
                let mut dropped = Vec::new();
                let mut adm = state.admission(&setup.caps);
                for &e in round_advice {
                    match instance.element(e) {
                        Some(el) if el.round == t => {}
                        _ => {
                            return Err(Error::InvalidAdvice(format!(
                                "advice element {e} is not available in round {t}"
                            )))
                        }
                    }
                    let reason = if kept.contains(&e) {
                        Some("duplicate advice element")
                    } else if adm.type_full(e) {
                        Some("type quota already filled")
                    } else if adm.cell_taken(e) {
                        Some("cell already used")
                    } else {
                        None
                    };
                    match reason {
                        Some(reason) => dropped.push(Diagnostic::AdviceDropped {
                            round: t,
                            element: e,
                            reason: reason.to_string(),
                        }),
                        None => {
                            adm.commit(e);
                            kept.push(e);
                        }
                    }
                }
                let sets = (0..=kept.len()).map(|i| kept[..i].to_vec()).collect();
                (sets, dropped)
            }
        };
        state.diagnostics.extend(dropped);
        let mut evaluations = 0;
        let best = chain_and_complete(
            evaluator.as_ref(),
            &setup.candidates,
            instance.budget(t),
            &sets,
            || state.admission(&setup.caps),
            options.mode,
            &mut evaluations,
        );
        state.evaluations += evaluations;
        let prefix = advice[t - 1].as_ref().map(|_| best.index);
        evaluator = best.evaluator;
        let value = evaluator.value();
        state.commit_round(t, setup, best.picks, value, prefix);
        if let Some(p) = progress.as_mut() {
            p(t, instance.horizon());
        }
    }
    Ok(state.finish("multistep-advice", baseline))
}
