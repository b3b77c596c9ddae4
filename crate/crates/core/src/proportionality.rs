//! Satisfaction ratios, min-ratio type sequences, per-round quotas and the
//! proportional feasibility check.
//!
//! All comparisons are exact: proportions are integers in millionths and
//! ratios are compared by cross-multiplication in `u128`.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Instance, Policy, Selection, PROPORTION_SCALE};

/// A satisfaction ratio `|S ∩ T_q| / (p_q |S|)`. Types with `p_q = 0` are
/// `Unbounded`, which orders above every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Satisfaction {
    Finite(Ratio<u128>),
    Unbounded,
}

impl Satisfaction {
    pub fn to_f64(self) -> f64 {
        match self {
            Satisfaction::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Satisfaction::Unbounded => f64::INFINITY,
        }
    }

    /// `None` for unbounded, matching the JSON encoding.
    pub fn finite(self) -> Option<f64> {
        match self {
            Satisfaction::Finite(_) => Some(self.to_f64()),
            Satisfaction::Unbounded => None,
        }
    }

    pub fn from_integer(n: u128) -> Self {
        Satisfaction::Finite(Ratio::from_integer(n))
    }
}

impl fmt::Display for Satisfaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Satisfaction::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Satisfaction::Finite(r) => write!(f, "{}/{} ({:.4})", r.numer(), r.denom(), self.to_f64()),
            Satisfaction::Unbounded => write!(f, "inf"),
        }
    }
}

impl Serialize for Satisfaction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.finite().serialize(s)
    }
}

/// `α_q` from per-type counts (`counts[q - 1]`).
pub fn ratio_from_counts(counts: &[usize], policy: &Policy, q: usize) -> Result<Satisfaction> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidArgument(
            "satisfaction ratio is undefined for an empty selection".into(),
        ));
    }
    let p = policy.micro(q) as u128;
    if p == 0 {
        return Ok(Satisfaction::Unbounded);
    }
    let numer = counts[q - 1] as u128 * PROPORTION_SCALE as u128;
    Ok(Satisfaction::Finite(Ratio::new(numer, p * total as u128)))
}

/// `α_min` from per-type counts: the minimum over constrained types.
pub fn alpha_min_counts(counts: &[usize], policy: &Policy) -> Result<Satisfaction> {
    let mut best = Satisfaction::Unbounded;
    for q in 1..=policy.num_types() {
        best = best.min(ratio_from_counts(counts, policy, q)?);
    }
    if counts.iter().sum::<usize>() == 0 {
        return Err(Error::InvalidArgument(
            "satisfaction ratio is undefined for an empty selection".into(),
        ));
    }
    Ok(best)
}

pub fn satisfaction_ratio(selection: &Selection, instance: &Instance, q: usize) -> Result<Satisfaction> {
    let counts = crate::model::type_counts(selection, instance)?;
    ratio_from_counts(&counts, instance.policy(), q)
}

pub fn alpha_min(selection: &Selection, instance: &Instance) -> Result<Satisfaction> {
    let counts = crate::model::type_counts(selection, instance)?;
    alpha_min_counts(&counts, instance.policy())
}

/// Ordered list of type ids produced by [`min_ratio_sequence`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeSequence {
    pub entries: Vec<usize>,
    pub denominator: usize,
}

impl TypeSequence {
    /// Occurrences of each type, `counts[q - 1]`.
    pub fn counts(&self, num_types: usize) -> Vec<usize> {
        let mut counts = vec![0; num_types];
        for &q in &self.entries {
            counts[q - 1] += 1;
        }
        counts
    }
}

/// Builds the length-`length` sequence that repeatedly appends the
/// constrained type with the smallest `count_q / (p_q · denominator)`,
/// breaking ties by preference rank. Without constrained types it cycles
/// through all types in preference order.
pub fn min_ratio_sequence(policy: &Policy, length: usize, denominator: usize) -> TypeSequence {
    let order = policy.preference_order();
    let constrained: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&q| policy.is_constrained_type(q))
        .collect();
    let mut entries = Vec::with_capacity(length);
    if constrained.is_empty() {
        entries.extend(order.iter().cycle().take(length));
        return TypeSequence { entries, denominator };
    }
    let d = denominator.max(1) as u128;
    let mut counts = vec![0u128; policy.num_types()];
    for _ in 0..length {
        // `constrained` is already in preference order, so strict `<` keeps
        // the preferred type on ties.
        let mut best = constrained[0];
        for &q in &constrained[1..] {
            let lhs = counts[q - 1] * policy.micro(best) as u128 * d;
            let rhs = counts[best - 1] * policy.micro(q) as u128 * d;
            if lhs < rhs {
                best = q;
            }
        }
        counts[best - 1] += 1;
        entries.push(best);
    }
    TypeSequence { entries, denominator }
}

/// Best achievable `α_min` over selections of size `budget`, using the count
/// multiset of the min-ratio sequence. Ignores availability; see
/// [`beta_for_instance`].
pub fn beta(policy: &Policy, budget: usize) -> Result<Satisfaction> {
    if budget == 0 {
        return Err(Error::InvalidArgument("beta needs a positive budget".into()));
    }
    let counts = min_ratio_sequence(policy, budget, budget).counts(policy.num_types());
    alpha_min_counts(&counts, policy)
}

/// A type whose sequence count exceeds the elements that exist for it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailabilityShortfall {
    pub type_id: usize,
    pub required: usize,
    pub available: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaReport {
    pub value: Satisfaction,
    pub shortfalls: Vec<AvailabilityShortfall>,
}

/// [`beta`] under the instance policy, flagging types with too few elements.
pub fn beta_for_instance(instance: &Instance, budget: usize) -> Result<BetaReport> {
    let policy = instance.policy();
    let value = beta(policy, budget)?;
    let counts = min_ratio_sequence(policy, budget, budget).counts(policy.num_types());
    let shortfalls = counts
        .iter()
        .enumerate()
        .filter_map(|(i, &required)| {
            let available = instance.type_elements(i + 1).len();
            (required > available).then_some(AvailabilityShortfall {
                type_id: i + 1,
                required,
                available,
            })
        })
        .collect();
    Ok(BetaReport { value, shortfalls })
}

/// Per-round, per-type quotas.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuotaTable {
    /// `rows[t - 1][q - 1]` elements of type `q` in round `t`.
    PerType { rows: Vec<Vec<usize>> },
    /// No proportions: only the round budget binds.
    Unconstrained { budgets: Vec<usize> },
}

impl QuotaTable {
    pub fn horizon(&self) -> usize {
        match self {
            QuotaTable::PerType { rows } => rows.len(),
            QuotaTable::Unconstrained { budgets } => budgets.len(),
        }
    }

    /// Quota row of round `t`, or `None` when unconstrained.
    pub fn row(&self, round: usize) -> Option<&[usize]> {
        match self {
            QuotaTable::PerType { rows } => Some(&rows[round - 1]),
            QuotaTable::Unconstrained { .. } => None,
        }
    }

    /// Per-type caps of round `t`; unconstrained rounds cap every type at the budget.
    pub fn caps(&self, round: usize, num_types: usize) -> Vec<usize> {
        match self {
            QuotaTable::PerType { rows } => rows[round - 1].clone(),
            QuotaTable::Unconstrained { budgets } => vec![budgets[round - 1]; num_types],
        }
    }

    pub fn round_total(&self, round: usize) -> usize {
        match self {
            QuotaTable::PerType { rows } => rows[round - 1].iter().sum(),
            QuotaTable::Unconstrained { budgets } => budgets[round - 1],
        }
    }
}

/// Quotas from prefix differences of the min-ratio sequence at the
/// cumulative budgets.
pub fn quota_table(policy: &Policy, budgets: &[usize]) -> QuotaTable {
    if !policy.is_constrained() {
        return QuotaTable::Unconstrained {
            budgets: budgets.to_vec(),
        };
    }
    let num_types = policy.num_types();
    let mut previous = vec![0usize; num_types];
    let mut cumulative = 0;
    let mut rows = Vec::with_capacity(budgets.len());
    for &b in budgets {
        cumulative += b;
        let counts = min_ratio_sequence(policy, cumulative, cumulative).counts(num_types);
        // Sequences at different denominators agree, so counts only grow.
        let row = counts.iter().zip(&previous).map(|(c, p)| c - p).collect();
        rows.push(row);
        previous = counts;
    }
    QuotaTable::PerType { rows }
}

/// Quota moved from a type that lacks elements in a round to another type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Redistribution {
    pub round: usize,
    pub from_type: usize,
    pub to_type: usize,
    pub amount: usize,
}

/// Caps a quota row by availability. Unmet quota of a type moves to the
/// following types in preference order (wrapping around) that still have
/// spare elements.
pub fn resolve_caps(
    round: usize,
    quota: &[usize],
    available: &[usize],
    policy: &Policy,
) -> (Vec<usize>, Vec<Redistribution>) {
    let order = policy.preference_order();
    let mut caps: Vec<usize> = quota.iter().zip(available).map(|(&x, &a)| x.min(a)).collect();
    let mut moves = Vec::new();
    for (pos, &q) in order.iter().enumerate() {
        let mut unmet = quota[q - 1].saturating_sub(available[q - 1]);
        for step in 1..order.len() {
            if unmet == 0 {
                break;
            }
            let to = order[(pos + step) % order.len()];
            let spare = available[to - 1] - caps[to - 1];
            let amount = spare.min(unmet);
            if amount > 0 {
                caps[to - 1] += amount;
                unmet -= amount;
                moves.push(Redistribution {
                    round,
                    from_type: q,
                    to_type: to,
                    amount,
                });
            }
        }
    }
    (caps, moves)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaFeasibility {
    pub feasible: bool,
    /// Earliest round whose cumulative type counts disagree with the sequence.
    pub first_violation: Option<usize>,
}

/// Checks that every prefix `S^(1:t)` has exactly the type counts of the
/// min-ratio sequence at the cumulative budget. Without constrained types
/// only the prefix sizes are checked.
pub fn is_sigma_type_feasible(selection: &Selection, instance: &Instance) -> Result<SigmaFeasibility> {
    let policy = instance.policy();
    let num_types = instance.num_types();
    for t in 1..=instance.horizon() {
        let cumulative = instance.cumulative_budget(t);
        let prefix = selection.cumulative(t);
        let ok = if policy.is_constrained() {
            let counts = instance.type_counts_of(&prefix)?;
            counts == min_ratio_sequence(policy, cumulative, cumulative).counts(num_types)
        } else {
            prefix.len() == cumulative
        };
        if !ok {
            return Ok(SigmaFeasibility {
                feasible: false,
                first_violation: Some(t),
            });
        }
    }
    Ok(SigmaFeasibility {
        feasible: true,
        first_violation: None,
    })
}
