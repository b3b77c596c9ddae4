//! Greedy engines. Ties are broken by larger gain first, then smaller
//! element id, so lazy and naive runs pick identical sequences.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::matroid::Matroid;
use crate::error::{Error, Result};
use crate::model::{ElementId, Selection};
use crate::objective::{MarginalEvaluator, SetFunction};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyMode {
    /// Stale gains kept in a max-heap as upper bounds and refreshed on demand.
    #[default]
    Lazy,
    /// Every admissible gain recomputed at every step.
    Naive,
}

/// Decides which elements may still join the current pick set.
///
/// Once an element is rejected it must stay rejected as picks accumulate;
/// the lazy engine drops rejected elements for good.
pub trait Admission {
    fn admits(&self, e: ElementId) -> bool;
    fn commit(&mut self, e: ElementId);
}

/// Admits everything.
pub struct Unrestricted;

impl Admission for Unrestricted {
    fn admits(&self, _: ElementId) -> bool {
        true
    }

    fn commit(&mut self, _: ElementId) {}
}

/// Intersection of matroids over the picks made through this admission.
pub struct MatroidAdmission<'m> {
    matroids: &'m [Arc<dyn Matroid>],
    picks: Vec<ElementId>,
}

impl<'m> MatroidAdmission<'m> {
    pub fn new(matroids: &'m [Arc<dyn Matroid>]) -> Self {
        MatroidAdmission {
            matroids,
            picks: Vec::new(),
        }
    }
}

impl Admission for MatroidAdmission<'_> {
    fn admits(&self, e: ElementId) -> bool {
        self.matroids.iter().all(|m| m.can_add(&self.picks, e))
    }

    fn commit(&mut self, e: ElementId) {
        self.picks.push(e);
    }
}

struct Candidate {
    gain: f64,
    id: ElementId,
    stamp: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn better(gain: f64, id: ElementId, best: Option<(f64, ElementId)>) -> bool {
    match best {
        None => true,
        Some((g, b)) => match gain.total_cmp(&g) {
            Ordering::Greater => true,
            Ordering::Equal => id < b,
            Ordering::Less => false,
        },
    }
}

/// Adds up to `limit` elements from `candidates` to `evaluator`, each time
/// the admissible element with the largest marginal gain. Elements already
/// in the evaluator are skipped. Returns the picks in order; `evaluations`
/// is increased by the number of gain computations.
pub fn greedy_fill<'a>(
    evaluator: &mut dyn MarginalEvaluator<'a>,
    candidates: &[ElementId],
    limit: usize,
    admission: &mut dyn Admission,
    mode: GreedyMode,
    evaluations: &mut u64,
) -> Vec<ElementId> {
    let present: HashSet<ElementId> = evaluator.members().iter().copied().collect();
    let mut seen = HashSet::with_capacity(candidates.len());
    let pool: Vec<ElementId> = candidates
        .iter()
        .copied()
        .filter(|e| !present.contains(e) && seen.insert(*e))
        .collect();
    match mode {
        GreedyMode::Lazy => lazy_fill(evaluator, pool, limit, admission, evaluations),
        GreedyMode::Naive => naive_fill(evaluator, pool, limit, admission, evaluations),
    }
}

fn lazy_fill<'a>(
    evaluator: &mut dyn MarginalEvaluator<'a>,
    pool: Vec<ElementId>,
    limit: usize,
    admission: &mut dyn Admission,
    evaluations: &mut u64,
) -> Vec<ElementId> {
    let mut picks = Vec::new();
    if limit == 0 {
        return picks;
    }
    let mut heap: BinaryHeap<Candidate> = pool
        .into_iter()
        .filter(|&id| admission.admits(id))
        .map(|id| {
            *evaluations += 1;
            Candidate {
                gain: evaluator.gain(id),
                id,
                stamp: 0,
            }
        })
        .collect();
    while picks.len() < limit {
        let Some(mut top) = heap.pop() else { break };
        if !admission.admits(top.id) {
            continue;
        }
        if top.stamp == picks.len() {
            evaluator.insert(top.id);
            admission.commit(top.id);
            picks.push(top.id);
            continue;
        }
        *evaluations += 1;
        top.gain = evaluator.gain(top.id);
        top.stamp = picks.len();
        heap.push(top);
    }
    picks
}

fn naive_fill<'a>(
    evaluator: &mut dyn MarginalEvaluator<'a>,
    mut pool: Vec<ElementId>,
    limit: usize,
    admission: &mut dyn Admission,
    evaluations: &mut u64,
) -> Vec<ElementId> {
    let mut picks = Vec::new();
    while picks.len() < limit {
        pool.retain(|&id| admission.admits(id));
        let mut best: Option<(f64, ElementId)> = None;
        for &id in &pool {
            *evaluations += 1;
            let gain = evaluator.gain(id);
            if better(gain, id, best) {
                best = Some((gain, id));
            }
        }
        let Some((_, id)) = best else { break };
        evaluator.insert(id);
        admission.commit(id);
        pool.retain(|&x| x != id);
        picks.push(id);
    }
    picks
}

/// Output of a standalone greedy run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyOutcome {
    pub picks: Vec<ElementId>,
    /// `f(conditioned_on ∪ picks)`.
    pub value: f64,
    pub evaluations: u64,
}

/// Cardinality-constrained greedy conditioned on `conditioned_on`.
pub fn greedy_cardinality(
    ground: &[ElementId],
    budget: usize,
    objective: &dyn SetFunction,
    conditioned_on: &[ElementId],
    mode: GreedyMode,
) -> Result<GreedyOutcome> {
    let available = ground.iter().filter(|e| !conditioned_on.contains(e)).collect::<HashSet<_>>().len();
    if budget > available {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} exceeds the {available} available elements"
        )));
    }
    let mut evaluator = objective.evaluator();
    evaluator.insert_all(conditioned_on);
    let mut evaluations = 0;
    let picks = greedy_fill(evaluator.as_mut(), ground, budget, &mut Unrestricted, mode, &mut evaluations);
    Ok(GreedyOutcome {
        picks,
        value: evaluator.value(),
        evaluations,
    })
}

/// One round of [`local_greedy`]: its ground set and the matroids that
/// constrain the elements chosen in that round.
#[derive(Clone)]
pub struct MatroidRound {
    pub ground: Vec<ElementId>,
    pub matroids: Vec<Arc<dyn Matroid>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalGreedyOutcome {
    pub selection: Selection,
    pub value: f64,
    pub evaluations: u64,
}

/// Round by round, keeps adding the feasible element with the largest gain
/// (conditioned on every earlier pick) until none is feasible.
pub fn local_greedy(objective: &dyn SetFunction, rounds: &[MatroidRound], mode: GreedyMode) -> LocalGreedyOutcome {
    let mut evaluator = objective.evaluator();
    let mut selection = Selection::empty(rounds.len());
    let mut evaluations = 0;
    for (t, round) in rounds.iter().enumerate() {
        let mut admission = MatroidAdmission::new(&round.matroids);
        let picks = greedy_fill(
            evaluator.as_mut(),
            &round.ground,
            usize::MAX,
            &mut admission,
            mode,
            &mut evaluations,
        );
        selection.set_round(t + 1, picks);
    }
    LocalGreedyOutcome {
        selection,
        value: evaluator.value(),
        evaluations,
    }
}
