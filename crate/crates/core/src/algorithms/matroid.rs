//! Independence oracles used by the constrained greedy variants.

use std::collections::HashMap;

use crate::model::{ElementId, Instance};

pub trait Matroid: Send + Sync {
    fn is_independent(&self, set: &[ElementId]) -> bool;

    /// Whether `set + e` stays independent, assuming `set` is independent.
    fn can_add(&self, set: &[ElementId], e: ElementId) -> bool {
        let mut with = set.to_vec();
        with.push(e);
        self.is_independent(&with)
    }
}

/// `S` is independent iff `|S ∩ block_j| ≤ caps[j]` for every block.
/// Elements outside every block are not in the ground set and never independent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionMatroid {
    block: HashMap<ElementId, usize>,
    caps: Vec<usize>,
}

impl PartitionMatroid {
    pub fn new(blocks: impl IntoIterator<Item = (ElementId, usize)>, caps: Vec<usize>) -> Self {
        PartitionMatroid {
            block: blocks.into_iter().collect(),
            caps,
        }
    }

    /// Rank-`k` uniform matroid over `ground`.
    pub fn uniform(ground: &[ElementId], k: usize) -> Self {
        Self::new(ground.iter().map(|&e| (e, 0)), vec![k])
    }

    /// Per-type caps over round `round` of the instance (`caps[q - 1]`).
    pub fn by_type(instance: &Instance, round: usize, caps: Vec<usize>) -> Self {
        let blocks = instance
            .round_elements(round)
            .iter()
            .map(|&id| (id, instance.type_of(id).unwrap_or(1) - 1));
        Self::new(blocks, caps)
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    pub fn block_of(&self, e: ElementId) -> Option<usize> {
        self.block.get(&e).copied()
    }

    fn counts(&self, set: &[ElementId]) -> Option<Vec<usize>> {
        let mut counts = vec![0; self.caps.len()];
        for e in set {
            counts[self.block_of(*e)?] += 1;
        }
        Some(counts)
    }
}

impl Matroid for PartitionMatroid {
    fn is_independent(&self, set: &[ElementId]) -> bool {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        match self.counts(set) {
            Some(counts) => counts.iter().zip(&self.caps).all(|(c, cap)| c <= cap),
            None => false,
        }
    }

    fn can_add(&self, set: &[ElementId], e: ElementId) -> bool {
        let Some(b) = self.block_of(e) else {
            return false;
        };
        if set.contains(&e) {
            return false;
        }
        let used = set.iter().filter(|x| self.block_of(**x) == Some(b)).count();
        used < self.caps[b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_independence() {
        let m = PartitionMatroid::new(
            [(ElementId(0), 0), (ElementId(1), 0), (ElementId(2), 1)],
            vec![1, 1],
        );
        assert!(m.is_independent(&[]));
        assert!(m.is_independent(&[ElementId(0), ElementId(2)]));
        assert!(!m.is_independent(&[ElementId(0), ElementId(1)]));
        assert!(!m.is_independent(&[ElementId(9)]));
        assert!(m.can_add(&[ElementId(2)], ElementId(1)));
        assert!(!m.can_add(&[ElementId(0)], ElementId(1)));
        assert!(!m.can_add(&[ElementId(0)], ElementId(0)));
    }

    #[test]
    fn uniform_matroid_caps_size() {
        let ground: Vec<ElementId> = (0..4).map(ElementId).collect();
        let m = PartitionMatroid::uniform(&ground, 2);
        assert!(m.is_independent(&ground[..2]));
        assert!(!m.is_independent(&ground[..3]));
    }
}
