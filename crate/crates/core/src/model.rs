//! Domain types shared by every planning component: elements, instances,
//! policies and per-round selections.
//!
//! Rounds and types are 1-based throughout (`round ∈ 1..=h`, `type_id ∈ 1..=r`),
//! matching how districts and planning years are numbered in scenario files.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::SetFunction;

/// Fixed-point scale used to store proportions exactly.
pub const PROPORTION_SCALE: u64 = 1_000_000;

/// Opaque element identifier. Equality of elements is equality of ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Grid cell as a (row, col) pair, with (0, 0) the top-left cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    pub fn index(self, cols: usize) -> usize {
        self.row * cols + self.col
    }

    pub fn from_index(index: usize, cols: usize) -> Self {
        Cell::new(index / cols, index % cols)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

/// A candidate facility: building at `cell` in planning round `round`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub id: ElementId,
    pub cell: Cell,
    pub round: usize,
    pub type_id: usize,
}

/// Target proportions per type together with the tie-breaking order.
///
/// Proportions are stored as integers in units of `1 / PROPORTION_SCALE` so
/// that ratio comparisons can be done by exact cross-multiplication.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    proportions: Vec<u64>,
    /// `sigma[q - 1]` is the rank of type `q`; rank 1 is the most preferred.
    sigma: Vec<usize>,
}

impl Policy {
    /// Builds a policy from decimal proportions. Values are rounded to the
    /// nearest millionth; validation happens in [`Instance::validate`].
    pub fn new(proportions: &[f64], sigma: Vec<usize>) -> Self {
        let proportions = proportions.iter().map(|&p| to_micro(p)).collect();
        Policy { proportions, sigma }
    }

    /// Proportions with the identity tie-breaking order (type 1 preferred).
    pub fn with_identity_order(proportions: &[f64]) -> Self {
        let sigma = (1..=proportions.len()).collect();
        Self::new(proportions, sigma)
    }

    /// Builds a policy directly from millionth units.
    pub fn from_micro(proportions: Vec<u64>, sigma: Vec<usize>) -> Self {
        Policy { proportions, sigma }
    }

    /// All proportions zero: no distributional constraint.
    pub fn unconstrained(num_types: usize) -> Self {
        Policy {
            proportions: vec![0; num_types],
            sigma: (1..=num_types).collect(),
        }
    }

    pub fn num_types(&self) -> usize {
        self.proportions.len()
    }

    /// Proportion of type `q` in millionths.
    pub fn micro(&self, q: usize) -> u64 {
        self.proportions[q - 1]
    }

    pub fn micros(&self) -> &[u64] {
        &self.proportions
    }

    pub fn proportion(&self, q: usize) -> f64 {
        self.proportions[q - 1] as f64 / PROPORTION_SCALE as f64
    }

    pub fn proportions(&self) -> Vec<f64> {
        (1..=self.num_types()).map(|q| self.proportion(q)).collect()
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn rank(&self, q: usize) -> usize {
        self.sigma[q - 1]
    }

    /// Types ordered from most to least preferred.
    pub fn preference_order(&self) -> Vec<usize> {
        let mut types: Vec<usize> = (1..=self.num_types()).collect();
        types.sort_by_key(|&q| self.rank(q));
        types
    }

    /// True when at least one type carries a positive proportion.
    pub fn is_constrained(&self) -> bool {
        self.proportions.iter().any(|&p| p > 0)
    }

    pub fn is_constrained_type(&self, q: usize) -> bool {
        self.proportions[q - 1] > 0
    }

    fn sigma_is_permutation(&self) -> bool {
        let r = self.sigma.len();
        let mut seen = vec![false; r + 1];
        self.sigma.iter().all(|&rank| {
            if rank == 0 || rank > r || seen[rank] {
                false
            } else {
                seen[rank] = true;
                true
            }
        })
    }
}

pub(crate) fn to_micro(p: f64) -> u64 {
    if p.is_finite() && p > 0.0 {
        (p * PROPORTION_SCALE as f64).round() as u64
    } else {
        0
    }
}

/// A single invariant violation found by [`Instance::validate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    EmptyHorizon,
    NoTypes,
    BudgetLengthMismatch { expected: usize, found: usize },
    BudgetExceedsAvailability { round: usize, budget: usize, available: usize },
    ProportionLengthMismatch { expected: usize, found: usize },
    ProportionOutOfRange { type_id: usize, value: f64 },
    ProportionSumExceedsOne { sum: f64 },
    SigmaNotPermutation { sigma: Vec<usize> },
    DuplicateElementId { id: ElementId },
    OrphanElement { id: ElementId, round: usize, type_id: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyHorizon => write!(f, "horizon must contain at least one round"),
            Violation::NoTypes => write!(f, "at least one type is required"),
            Violation::BudgetLengthMismatch { expected, found } => {
                write!(f, "expected {expected} budgets, found {found}")
            }
            Violation::BudgetExceedsAvailability { round, budget, available } => write!(
                f,
                "budget-exceeds-availability: round {round} budget {budget} > {available} elements"
            ),
            Violation::ProportionLengthMismatch { expected, found } => {
                write!(f, "expected {expected} proportions, found {found}")
            }
            Violation::ProportionOutOfRange { type_id, value } => {
                write!(f, "proportion of type {type_id} is {value}, outside [0, 1]")
            }
            Violation::ProportionSumExceedsOne { sum } => {
                write!(f, "proportion-sum-exceeds-one: proportions sum to {sum}")
            }
            Violation::SigmaNotPermutation { sigma } => {
                write!(f, "tie-breaking order {sigma:?} is not a permutation")
            }
            Violation::DuplicateElementId { id } => write!(f, "duplicate element id {id}"),
            Violation::OrphanElement { id, round, type_id } => write!(
                f,
                "element {id} has round {round} / type {type_id} outside the instance ranges"
            ),
        }
    }
}

/// Result of [`Instance::validate`]; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A planning instance: ground set partitioned by round and by type,
/// online budgets, the distributional policy and the objective.
///
/// Immutable after construction and cheap to share behind an `Arc`.
#[derive(Clone)]
pub struct Instance {
    horizon: usize,
    num_types: usize,
    elements: Vec<Element>,
    budgets: Vec<usize>,
    policy: Policy,
    objective: Arc<dyn SetFunction>,
    index: HashMap<ElementId, usize>,
    by_round: Vec<Vec<ElementId>>,
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Instance")
            .field("horizon", &self.horizon)
            .field("num_types", &self.num_types)
            .field("elements", &self.elements.len())
            .field("budgets", &self.budgets)
            .field("policy", &self.policy)
            .finish()
    }
}

impl Instance {
    /// Assembles an instance. Construction never fails; call
    /// [`Instance::validate`] (or [`Instance::ensure_valid`]) before planning.
    pub fn new(
        horizon: usize,
        num_types: usize,
        elements: Vec<Element>,
        budgets: Vec<usize>,
        policy: Policy,
        objective: Arc<dyn SetFunction>,
    ) -> Self {
        let mut index = HashMap::with_capacity(elements.len());
        let mut by_round = vec![Vec::new(); horizon];
        for (i, e) in elements.iter().enumerate() {
            if index.insert(e.id, i).is_none() && (1..=horizon).contains(&e.round) {
                by_round[e.round - 1].push(e.id);
            }
        }
        Instance {
            horizon,
            num_types,
            elements,
            budgets,
            policy,
            objective,
            index,
            by_round,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn budgets(&self) -> &[usize] {
        &self.budgets
    }

    pub fn budget(&self, round: usize) -> usize {
        self.budgets[round - 1]
    }

    /// Cumulative budget `b^(1:t)`.
    pub fn cumulative_budget(&self, round: usize) -> usize {
        self.budgets[..round].iter().sum()
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn objective(&self) -> &dyn SetFunction {
        self.objective.as_ref()
    }

    pub fn objective_handle(&self) -> Arc<dyn SetFunction> {
        Arc::clone(&self.objective)
    }

    pub fn element(&self, id: ElementId) -> Option<&Element> {
        self.index.get(&id).map(|&i| &self.elements[i])
    }

    pub fn type_of(&self, id: ElementId) -> Option<usize> {
        self.element(id).map(|e| e.type_id)
    }

    /// Element ids of `V^(t)`, in construction order.
    pub fn round_elements(&self, round: usize) -> &[ElementId] {
        &self.by_round[round - 1]
    }

    /// Elements of type `q` across all rounds (`T_q`).
    pub fn type_elements(&self, q: usize) -> Vec<ElementId> {
        self.elements
            .iter()
            .filter(|e| e.type_id == q)
            .map(|e| e.id)
            .collect()
    }

    /// Same instance with a different policy.
    pub fn with_policy(&self, policy: Policy) -> Instance {
        let mut next = self.clone();
        next.policy = policy;
        next
    }

    /// Same instance with different budgets.
    pub fn with_budgets(&self, budgets: Vec<usize>) -> Instance {
        let mut next = self.clone();
        next.budgets = budgets;
        next
    }

    /// Same instance evaluated under a different objective.
    pub fn with_objective(&self, objective: Arc<dyn SetFunction>) -> Instance {
        let mut next = self.clone();
        next.objective = objective;
        next
    }

    /// Budgets of rounds after `round` set to zero.
    pub fn truncated(&self, round: usize) -> Instance {
        let budgets = self
            .budgets
            .iter()
            .enumerate()
            .map(|(i, &b)| if i < round { b } else { 0 })
            .collect();
        self.with_budgets(budgets)
    }

    /// Reports every invariant violation. An empty report means every
    /// downstream precondition holds.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.horizon == 0 {
            violations.push(Violation::EmptyHorizon);
        }
        if self.num_types == 0 {
            violations.push(Violation::NoTypes);
        }
        if self.budgets.len() != self.horizon {
            violations.push(Violation::BudgetLengthMismatch {
                expected: self.horizon,
                found: self.budgets.len(),
            });
        }
        for (t, &budget) in self.budgets.iter().enumerate().take(self.horizon) {
            let available = self.by_round[t].len();
            if budget > available {
                violations.push(Violation::BudgetExceedsAvailability {
                    round: t + 1,
                    budget,
                    available,
                });
            }
        }

        let p = &self.policy;
        if p.num_types() != self.num_types {
            violations.push(Violation::ProportionLengthMismatch {
                expected: self.num_types,
                found: p.num_types(),
            });
        }
        for q in 1..=p.num_types() {
            if p.micro(q) > PROPORTION_SCALE {
                violations.push(Violation::ProportionOutOfRange {
                    type_id: q,
                    value: p.proportion(q),
                });
            }
        }
        let sum: u64 = p.micros().iter().sum();
        if sum > PROPORTION_SCALE {
            violations.push(Violation::ProportionSumExceedsOne {
                sum: sum as f64 / PROPORTION_SCALE as f64,
            });
        }
        if p.sigma().len() != p.num_types() || !p.sigma_is_permutation() {
            violations.push(Violation::SigmaNotPermutation {
                sigma: p.sigma().to_vec(),
            });
        }

        let mut seen = HashSet::with_capacity(self.elements.len());
        for e in &self.elements {
            if !seen.insert(e.id) {
                violations.push(Violation::DuplicateElementId { id: e.id });
            }
            if !(1..=self.horizon).contains(&e.round) || !(1..=self.num_types).contains(&e.type_id) {
                violations.push(Violation::OrphanElement {
                    id: e.id,
                    round: e.round,
                    type_id: e.type_id,
                });
            }
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(report))
        }
    }

    /// Checks that `selection` only uses known elements in their own round,
    /// respects the per-round budgets and never repeats an element.
    pub fn check_selection(&self, selection: &Selection) -> Result<()> {
        if selection.horizon() != self.horizon {
            return Err(Error::InvalidSelection(format!(
                "selection has {} rounds, instance has {}",
                selection.horizon(),
                self.horizon
            )));
        }
        let mut seen = HashSet::new();
        for t in 1..=self.horizon {
            let picks = selection.round(t);
            if picks.len() > self.budget(t) {
                return Err(Error::InvalidSelection(format!(
                    "round {t} selects {} elements with budget {}",
                    picks.len(),
                    self.budget(t)
                )));
            }
            for &id in picks {
                let e = self.element(id).ok_or(Error::UnknownElement(id))?;
                if e.round != t {
                    return Err(Error::InvalidSelection(format!(
                        "element {id} belongs to round {} but was selected in round {t}",
                        e.round
                    )));
                }
                if !seen.insert(id) {
                    return Err(Error::InvalidSelection(format!("element {id} selected twice")));
                }
            }
        }
        Ok(())
    }

    /// Per-type counts `|S ∩ T_q|` of an arbitrary id collection.
    pub fn type_counts_of(&self, ids: &[ElementId]) -> Result<Vec<usize>> {
        let mut counts = vec![0; self.num_types];
        for &id in ids {
            let q = self.type_of(id).ok_or(Error::UnknownElement(id))?;
            counts[q - 1] += 1;
        }
        Ok(counts)
    }
}

/// Per-type counts `|S ∩ T_q|` for `q = 1..=r` over the whole selection.
pub fn type_counts(selection: &Selection, instance: &Instance) -> Result<Vec<usize>> {
    instance.type_counts_of(&selection.all())
}

/// Per-round chosen elements. Each round keeps its pick order; semantically
/// the rounds are sets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    per_round: Vec<Vec<ElementId>>,
}

impl Selection {
    pub fn empty(horizon: usize) -> Self {
        Selection {
            per_round: vec![Vec::new(); horizon],
        }
    }

    pub fn from_rounds(per_round: Vec<Vec<ElementId>>) -> Self {
        Selection { per_round }
    }

    pub fn horizon(&self) -> usize {
        self.per_round.len()
    }

    pub fn round(&self, round: usize) -> &[ElementId] {
        &self.per_round[round - 1]
    }

    pub fn rounds(&self) -> &[Vec<ElementId>] {
        &self.per_round
    }

    pub fn push(&mut self, round: usize, id: ElementId) {
        self.per_round[round - 1].push(id);
    }

    pub fn set_round(&mut self, round: usize, ids: Vec<ElementId>) {
        self.per_round[round - 1] = ids;
    }

    /// `S^(1:t)` as a flat list.
    pub fn cumulative(&self, round: usize) -> Vec<ElementId> {
        self.per_round[..round].iter().flatten().copied().collect()
    }

    /// The whole selection `S^(1:h)`.
    pub fn all(&self) -> Vec<ElementId> {
        self.cumulative(self.per_round.len())
    }

    /// Selection restricted to rounds `1..=round`; later rounds emptied.
    pub fn prefix(&self, round: usize) -> Selection {
        let per_round = self
            .per_round
            .iter()
            .enumerate()
            .map(|(i, r)| if i < round { r.clone() } else { Vec::new() })
            .collect();
        Selection { per_round }
    }

    pub fn len(&self) -> usize {
        self.per_round.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.per_round.iter().any(|r| r.contains(&id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::ModularFunction;

    fn elements(spec: &[(usize, usize)]) -> Vec<Element> {
        spec.iter()
            .enumerate()
            .map(|(i, &(round, type_id))| Element {
                id: ElementId(i as u32),
                cell: Cell::new(0, i),
                round,
                type_id,
            })
            .collect()
    }

    fn instance(spec: &[(usize, usize)], h: usize, r: usize, budgets: Vec<usize>, p: &[f64]) -> Instance {
        let els = elements(spec);
        let f = ModularFunction::uniform(els.iter().map(|e| e.id));
        Instance::new(h, r, els, budgets, Policy::with_identity_order(p), Arc::new(f))
    }

    #[test]
    fn minimal_instance_is_valid() {
        let inst = instance(&[(1, 1), (1, 1), (1, 1)], 1, 1, vec![2], &[0.0]);
        assert!(inst.validate().is_valid(), "{}", inst.validate());
    }

    #[test]
    fn budget_exceeding_round_is_reported() {
        let inst = instance(&[(1, 1), (1, 1), (1, 1)], 1, 1, vec![5], &[0.0]);
        let report = inst.validate();
        assert!(report.contains(|v| matches!(
            v,
            Violation::BudgetExceedsAvailability { round: 1, budget: 5, available: 3 }
        )));
    }

    #[test]
    fn proportion_sum_over_one_is_reported() {
        let inst = instance(&[(1, 1), (1, 2)], 1, 2, vec![1], &[0.6, 0.6]);
        assert!(inst
            .validate()
            .contains(|v| matches!(v, Violation::ProportionSumExceedsOne { .. })));
    }

    #[test]
    fn bad_sigma_and_orphans_are_reported() {
        let els = elements(&[(1, 1), (3, 1), (1, 4)]);
        let f = ModularFunction::uniform(els.iter().map(|e| e.id));
        let inst = Instance::new(1, 2, els, vec![1], Policy::new(&[0.5, 0.5], vec![1, 1]), Arc::new(f));
        let report = inst.validate();
        assert!(report.contains(|v| matches!(v, Violation::SigmaNotPermutation { .. })));
        assert_eq!(
            report
                .violations
                .iter()
                .filter(|v| matches!(v, Violation::OrphanElement { .. }))
                .count(),
            2
        );
    }

    #[test]
    fn duplicate_ids_are_reported() {
        let mut els = elements(&[(1, 1), (1, 1)]);
        els[1].id = els[0].id;
        let f = ModularFunction::uniform(els.iter().map(|e| e.id));
        let inst = Instance::new(1, 1, els, vec![1], Policy::unconstrained(1), Arc::new(f));
        assert!(inst
            .validate()
            .contains(|v| matches!(v, Violation::DuplicateElementId { .. })));
    }

    #[test]
    fn zero_budget_rounds_are_allowed() {
        let inst = instance(&[(1, 1), (2, 1)], 2, 1, vec![0, 1], &[1.0]);
        assert!(inst.validate().is_valid());
    }

    #[test]
    fn type_counts_empty_and_single_type() {
        let inst = instance(&[(1, 2), (1, 2), (1, 2), (1, 1)], 1, 3, vec![3], &[0.0, 0.0, 0.0]);
        let empty = Selection::empty(1);
        assert_eq!(type_counts(&empty, &inst).unwrap(), vec![0, 0, 0]);
        let sel = Selection::from_rounds(vec![vec![ElementId(0), ElementId(1), ElementId(2)]]);
        assert_eq!(type_counts(&sel, &inst).unwrap(), vec![0, 3, 0]);
    }

    #[test]
    fn type_counts_rejects_unknown_ids() {
        let inst = instance(&[(1, 1)], 1, 1, vec![1], &[0.0]);
        let sel = Selection::from_rounds(vec![vec![ElementId(42)]]);
        assert!(matches!(
            type_counts(&sel, &inst),
            Err(Error::UnknownElement(ElementId(42)))
        ));
    }

    #[test]
    fn check_selection_catches_wrong_round_and_budget() {
        let inst = instance(&[(1, 1), (2, 1), (2, 1)], 2, 1, vec![1, 1], &[0.0]);
        let wrong_round = Selection::from_rounds(vec![vec![ElementId(1)], vec![]]);
        assert!(inst.check_selection(&wrong_round).is_err());
        let over = Selection::from_rounds(vec![vec![], vec![ElementId(1), ElementId(2)]]);
        assert!(inst.check_selection(&over).is_err());
        let ok = Selection::from_rounds(vec![vec![ElementId(0)], vec![ElementId(2)]]);
        assert!(inst.check_selection(&ok).is_ok());
    }

    #[test]
    fn selection_prefix_views() {
        let sel = Selection::from_rounds(vec![vec![ElementId(0)], vec![ElementId(1), ElementId(2)]]);
        assert_eq!(sel.cumulative(1), vec![ElementId(0)]);
        assert_eq!(sel.all().len(), 3);
        assert_eq!(sel.prefix(1).len(), 1);
        assert_eq!(sel.prefix(1).horizon(), 2);
    }

    #[test]
    fn policy_micro_rounding() {
        let p = Policy::with_identity_order(&[0.225, 0.675]);
        assert_eq!(p.micros(), &[225_000, 675_000]);
        assert_eq!(p.preference_order(), vec![1, 2]);
        let p = Policy::new(&[0.1, 0.1, 0.1], vec![3, 1, 2]);
        assert_eq!(p.preference_order(), vec![2, 3, 1]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn counts_sum_to_selection_size(types in proptest::collection::vec(1usize..=4, 1..30), mask in any::<u64>()) {
                let spec: Vec<(usize, usize)> = types.iter().map(|&q| (1, q)).collect();
                let inst = instance(&spec, 1, 4, vec![spec.len()], &[0.0; 4]);
                let picked: Vec<ElementId> = (0..spec.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| ElementId(i as u32))
                    .collect();
                let sel = Selection::from_rounds(vec![picked.clone()]);
                let counts = type_counts(&sel, &inst).unwrap();
                prop_assert_eq!(counts.iter().sum::<usize>(), sel.len());
                for q in 1..=4 {
                    let recount = picked.iter().filter(|id| types[id.0 as usize] == q).count();
                    prop_assert_eq!(counts[q - 1], recount);
                }
            }
        }
    }
}
