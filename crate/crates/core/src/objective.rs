//! Set-function interface and the small explicit objectives used by tests,
//! tightness instances and fixtures.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ElementId;

/// A normalized set function over element ids.
///
/// Planners only rely on `value` and on the incremental evaluator; whether
/// the function is monotone submodular is a property checked by
/// [`crate::oracle::check_submodular_monotone`], not assumed by the type.
pub trait SetFunction: Send + Sync {
    /// Value of the set. Order and duplicates in `set` are irrelevant.
    fn value(&self, set: &[ElementId]) -> f64;

    /// A fresh incremental evaluator positioned at the empty set.
    fn evaluator(&self) -> Box<dyn MarginalEvaluator<'_> + '_> {
        Box::new(ReplayEvaluator::new(self))
    }
}

/// Incremental state for evaluating marginal gains `f(e | S)`.
pub trait MarginalEvaluator<'a> {
    /// `f(S + e) - f(S)` for the current set `S`.
    fn gain(&self, e: ElementId) -> f64;
    /// Adds `e` to the current set.
    fn insert(&mut self, e: ElementId);
    /// `f(S)`.
    fn value(&self) -> f64;
    /// Current set in insertion order.
    fn members(&self) -> &[ElementId];
    /// Independent copy of the current state.
    fn fork(&self) -> Box<dyn MarginalEvaluator<'a> + 'a>;

    fn insert_all(&mut self, ids: &[ElementId]) {
        for &id in ids {
            self.insert(id);
        }
    }
}

/// Generic evaluator that recomputes `f` from scratch for every gain.
#[derive(Clone)]
pub struct ReplayEvaluator<'a, F: ?Sized> {
    function: &'a F,
    members: Vec<ElementId>,
    value: f64,
}

impl<'a, F: SetFunction + ?Sized> ReplayEvaluator<'a, F> {
    pub fn new(function: &'a F) -> Self {
        ReplayEvaluator {
            function,
            members: Vec::new(),
            value: function.value(&[]),
        }
    }
}

impl<'a, F: SetFunction + ?Sized> MarginalEvaluator<'a> for ReplayEvaluator<'a, F> {
    fn gain(&self, e: ElementId) -> f64 {
        if self.members.contains(&e) {
            return 0.0;
        }
        let mut with = self.members.clone();
        with.push(e);
        self.function.value(&with) - self.value
    }

    fn insert(&mut self, e: ElementId) {
        if !self.members.contains(&e) {
            self.members.push(e);
            self.value = self.function.value(&self.members);
        }
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn members(&self) -> &[ElementId] {
        &self.members
    }

    fn fork(&self) -> Box<dyn MarginalEvaluator<'a> + 'a> {
        Box::new(ReplayEvaluator {
            function: self.function,
            members: self.members.clone(),
            value: self.value,
        })
    }
}

/// Sum of per-element weights. Elements without a weight count as zero.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ModularFunction {
    weights: HashMap<ElementId, f64>,
}

impl ModularFunction {
    pub fn new(weights: impl IntoIterator<Item = (ElementId, f64)>) -> Self {
        ModularFunction {
            weights: weights.into_iter().collect(),
        }
    }

    /// `f(S) = |S|` over the given ids.
    pub fn uniform(ids: impl IntoIterator<Item = ElementId>) -> Self {
        Self::new(ids.into_iter().map(|id| (id, 1.0)))
    }

    pub fn weight(&self, id: ElementId) -> f64 {
        self.weights.get(&id).copied().unwrap_or(0.0)
    }
}

impl SetFunction for ModularFunction {
    fn value(&self, set: &[ElementId]) -> f64 {
        let mut ids = set.to_vec();
        ids.sort_unstable();
        ids.dedup();
        ids.iter().map(|&id| self.weight(id)).sum()
    }
}

/// Explicit value table over every subset of a small ground set (at most 20
/// elements). Ids outside the ground set contribute nothing.
#[derive(Clone, Debug)]
pub struct TableFunction {
    ground: Vec<ElementId>,
    position: HashMap<ElementId, usize>,
    values: Arc<Vec<f64>>,
}

/// One row of a serialized [`TableFunction`]: a canonical sorted id tuple
/// and its value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub set: Vec<ElementId>,
    pub value: f64,
}

pub const MAX_TABLE_GROUND: usize = 20;

impl TableFunction {
    /// Builds a table from explicit entries. Every subset of `ground` must
    /// appear exactly once (the empty set included).
    pub fn new(ground: Vec<ElementId>, entries: &[TableEntry]) -> Result<Self> {
        let mut table = Self::skeleton(ground)?;
        let expected = table.values.len();
        let mut filled = vec![false; expected];
        let values = Arc::make_mut(&mut table.values);
        for entry in entries {
            let mut mask = 0usize;
            for id in &entry.set {
                let bit = table.position.get(id).ok_or(Error::UnknownElement(*id))?;
                mask |= 1 << bit;
            }
            values[mask] = entry.value;
            filled[mask] = true;
        }
        let missing = filled.iter().filter(|&&f| !f).count();
        if missing > 0 {
            return Err(Error::IncompleteTable { missing, expected });
        }
        Ok(table)
    }

    /// Tabulates `f` on every subset of `ground`.
    pub fn from_fn(ground: Vec<ElementId>, f: impl Fn(&[ElementId]) -> f64) -> Result<Self> {
        let mut table = Self::skeleton(ground)?;
        let n = table.ground.len();
        let values = Arc::make_mut(&mut table.values);
        let mut subset = Vec::with_capacity(n);
        for (mask, slot) in values.iter_mut().enumerate() {
            subset.clear();
            subset.extend((0..n).filter(|b| mask >> b & 1 == 1).map(|b| table.ground[b]));
            *slot = f(&subset);
        }
        Ok(table)
    }

    fn skeleton(mut ground: Vec<ElementId>) -> Result<Self> {
        ground.sort_unstable();
        ground.dedup();
        if ground.len() > MAX_TABLE_GROUND {
            return Err(Error::EnumerationTooLarge {
                what: "set function table",
                count: 1u128 << ground.len(),
                limit: 1u128 << MAX_TABLE_GROUND,
            });
        }
        let position = ground.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let values = Arc::new(vec![0.0; 1 << ground.len()]);
        Ok(TableFunction {
            ground,
            position,
            values,
        })
    }

    pub fn ground(&self) -> &[ElementId] {
        &self.ground
    }

    fn mask(&self, set: &[ElementId]) -> usize {
        set.iter()
            .filter_map(|id| self.position.get(id))
            .fold(0, |m, &b| m | 1 << b)
    }

    /// All entries in mask order, suitable for serialization.
    pub fn entries(&self) -> Vec<TableEntry> {
        let n = self.ground.len();
        self.values
            .iter()
            .enumerate()
            .map(|(mask, &value)| TableEntry {
                set: (0..n).filter(|b| mask >> b & 1 == 1).map(|b| self.ground[b]).collect(),
                value,
            })
            .collect()
    }
}

impl SetFunction for TableFunction {
    fn value(&self, set: &[ElementId]) -> f64 {
        self.values[self.mask(set)]
    }

    fn evaluator(&self) -> Box<dyn MarginalEvaluator<'_> + '_> {
        Box::new(TableEvaluator {
            table: self,
            mask: 0,
            members: Vec::new(),
        })
    }
}

struct TableEvaluator<'a> {
    table: &'a TableFunction,
    mask: usize,
    members: Vec<ElementId>,
}

impl<'a> MarginalEvaluator<'a> for TableEvaluator<'a> {
    fn gain(&self, e: ElementId) -> f64 {
        match self.table.position.get(&e) {
            Some(&b) => self.table.values[self.mask | 1 << b] - self.table.values[self.mask],
            None => 0.0,
        }
    }

    fn insert(&mut self, e: ElementId) {
        if self.members.contains(&e) {
            return;
        }
        if let Some(&b) = self.table.position.get(&e) {
            self.mask |= 1 << b;
        }
        self.members.push(e);
    }

    fn value(&self) -> f64 {
        self.table.values[self.mask]
    }

    fn members(&self) -> &[ElementId] {
        &self.members
    }

    fn fork(&self) -> Box<dyn MarginalEvaluator<'a> + 'a> {
        Box::new(TableEvaluator {
            table: self.table,
            mask: self.mask,
            members: self.members.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: u32) -> Vec<ElementId> {
        (0..n).map(ElementId).collect()
    }

    #[test]
    fn modular_ignores_duplicates() {
        let f = ModularFunction::new([(ElementId(0), 2.0), (ElementId(1), 3.0)]);
        assert_eq!(f.value(&[ElementId(0), ElementId(0), ElementId(1)]), 5.0);
        assert_eq!(f.value(&[ElementId(9)]), 0.0);
    }

    #[test]
    fn incomplete_table_is_rejected() {
        let entries = vec![
            TableEntry { set: vec![], value: 0.0 },
            TableEntry { set: vec![ElementId(0)], value: 1.0 },
        ];
        let err = TableFunction::new(ids(2), &entries).unwrap_err();
        assert!(matches!(err, Error::IncompleteTable { missing: 2, expected: 4 }));
    }

    #[test]
    fn table_roundtrips_through_entries() {
        let f = TableFunction::from_fn(ids(3), |s| (s.len() * s.len()) as f64).unwrap();
        let g = TableFunction::new(ids(3), &f.entries()).unwrap();
        assert_eq!(g.value(&ids(3)), 9.0);
        assert_eq!(g.value(&[ElementId(2), ElementId(0)]), 4.0);
    }

    #[test]
    fn table_evaluator_matches_value() {
        let f = TableFunction::from_fn(ids(4), |s| {
            s.iter().map(|e| e.0 as f64 + 1.0).sum::<f64>().sqrt()
        })
        .unwrap();
        let mut ev = f.evaluator();
        ev.insert(ElementId(2));
        let g = ev.gain(ElementId(1));
        assert_eq!(g, f.value(&[ElementId(1), ElementId(2)]) - f.value(&[ElementId(2)]));
        let fork = ev.fork();
        ev.insert(ElementId(1));
        assert_eq!(fork.members(), &[ElementId(2)]);
        assert_eq!(ev.value(), f.value(&[ElementId(1), ElementId(2)]));
    }

    #[test]
    fn replay_evaluator_tracks_modular_sum() {
        let f = ModularFunction::new([(ElementId(0), 1.5), (ElementId(1), 2.5)]);
        let mut ev = ReplayEvaluator::new(&f);
        assert_eq!(ev.gain(ElementId(1)), 2.5);
        ev.insert(ElementId(1));
        ev.insert(ElementId(1));
        assert_eq!(ev.gain(ElementId(1)), 0.0);
        assert_eq!(ev.value(), 2.5);
    }
}
