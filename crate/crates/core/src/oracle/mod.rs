//! Exhaustive reference solvers for small instances. Used to certify the
//! planners and to produce frozen fixtures; never part of a planning run.
//!
//! The proportional checks here deliberately avoid the planning code path:
//! target type counts come from [`reference_type_counts`], a separate
//! rational-arithmetic implementation of the min-ratio rule.

pub mod fixtures;
pub mod random;

use std::sync::Arc;

use itertools::Itertools;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::matroid::Matroid;
use crate::error::{Error, Result};
use crate::model::{ElementId, Instance, Policy, Selection, PROPORTION_SCALE};
use crate::objective::{MarginalEvaluator, SetFunction};
use crate::proportionality::Satisfaction;

pub const MAX_SELECTIONS: u128 = 10_000_000;
pub const MAX_COMPOSITIONS: u128 = 1_000_000;
pub const MAX_CHECK_GROUND: usize = 16;

/// Feasible region searched by [`brute_force_opt`].
#[derive(Clone)]
pub enum ConstraintClass {
    /// Exactly `b^(t)` elements from each round.
    Cardinality,
    /// Any subset of each round's elements with at most `caps[t-1][q-1]` of type `q`.
    PartitionMatroid(Vec<Vec<usize>>),
    /// Any subset of each round's elements independent in every listed matroid.
    Matroids(Vec<Vec<Arc<dyn Matroid>>>),
    /// Full budgets whose every prefix has the min-ratio type counts.
    SigmaTypeFeasible,
    /// Full budgets whose every prefix reaches the best `α_min` with the
    /// fewest available types tied at that minimum.
    TypeFeasible,
}

impl ConstraintClass {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintClass::Cardinality => "cardinality",
            ConstraintClass::PartitionMatroid(_) => "partition-matroid",
            ConstraintClass::Matroids(_) => "matroid-intersection",
            ConstraintClass::SigmaTypeFeasible => "sigma-type-feasible",
            ConstraintClass::TypeFeasible => "type-feasible",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub selection: Selection,
    /// Feasible selections evaluated.
    pub enumerated: u64,
    pub class: &'static str,
}

/// Type counts of the min-ratio rule computed with exact fractions:
/// repeatedly take the constrained type minimising `count / (p · length)`,
/// the lower preference rank winning ties.
pub fn reference_type_counts(policy: &Policy, length: usize) -> Vec<usize> {
    let num_types = policy.num_types();
    let mut counts = vec![0usize; num_types];
    let ranked: Vec<(usize, usize)> = (1..=num_types).map(|q| (policy.rank(q), q)).sorted().collect();
    if !policy.is_constrained() {
        for k in 0..length {
            counts[ranked[k % num_types].1 - 1] += 1;
        }
        return counts;
    }
    let d = length.max(1) as u128;
    for _ in 0..length {
        let next = ranked
            .iter()
            .filter(|(_, q)| policy.micro(*q) > 0)
            .map(|&(rank, q)| {
                let share = Ratio::new(counts[q - 1] as u128 * PROPORTION_SCALE as u128, policy.micro(q) as u128 * d);
                (share, rank, q)
            })
            .min()
            .map(|(_, _, q)| q)
            .expect("constrained policy has a positive proportion");
        counts[next - 1] += 1;
    }
    counts
}

fn alpha_min_of(counts: &[usize], policy: &Policy) -> Satisfaction {
    let total: usize = counts.iter().sum();
    (1..=policy.num_types())
        .filter(|&q| policy.micro(q) > 0)
        .map(|q| {
            Satisfaction::Finite(Ratio::new(
                counts[q - 1] as u128 * PROPORTION_SCALE as u128,
                policy.micro(q) as u128 * total as u128,
            ))
        })
        .min()
        .unwrap_or(Satisfaction::Unbounded)
}

/// Every way to write `total` as `parts` non-negative parts, each at most
/// `caps[i]` when caps are given.
pub fn compositions(total: usize, parts: usize, caps: Option<&[usize]>) -> Vec<Vec<usize>> {
    fn go(rest: usize, i: usize, caps: Option<&[usize]>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let parts = cur.capacity();
        if i + 1 == parts {
            if caps.is_none_or(|c| rest <= c[i]) {
                cur.push(rest);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let hi = caps.map_or(rest, |c| rest.min(c[i]));
        for x in 0..=hi {
            cur.push(x);
            go(rest - x, i + 1, caps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(total, 0, caps, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Largest `α_min` over all type-count vectors summing to `budget`,
/// optionally capped per type by `availability`.
pub fn brute_force_beta(policy: &Policy, budget: usize, availability: Option<&[usize]>) -> Result<Satisfaction> {
    if budget == 0 {
        return Err(Error::InvalidArgument("beta needs a positive budget".into()));
    }
    let num_types = policy.num_types();
    let count = binomial(budget + num_types - 1, num_types - 1);
    if count > MAX_COMPOSITIONS {
        return Err(Error::EnumerationTooLarge {
            what: "type-count compositions",
            count,
            limit: MAX_COMPOSITIONS,
        });
    }
    compositions(budget, num_types, availability)
        .iter()
        .map(|c| alpha_min_of(c, policy))
        .max()
        .ok_or_else(|| Error::InvalidArgument("no composition fits the availability".into()))
}

/// Count vectors of size `cumulative` that satisfy both type-feasibility
/// conditions at a round whose available types are `present`.
pub fn type_feasible_counts(policy: &Policy, cumulative: usize, present: &[bool]) -> Vec<Vec<usize>> {
    let num_types = policy.num_types();
    let all = compositions(cumulative, num_types, None);
    if cumulative == 0 {
        return all;
    }
    let best = all.iter().map(|c| alpha_min_of(c, policy)).max().expect("at least one composition");
    let tied = |c: &Vec<usize>| -> usize {
        let total: usize = c.iter().sum();
        (1..=num_types)
            .filter(|&q| present[q - 1])
            .filter(|&q| {
                let a = if policy.micro(q) == 0 {
                    Satisfaction::Unbounded
                } else {
                    Satisfaction::Finite(Ratio::new(
                        c[q - 1] as u128 * PROPORTION_SCALE as u128,
                        policy.micro(q) as u128 * total as u128,
                    ))
                };
                a == best
            })
            .count()
    };
    let reaching: Vec<Vec<usize>> = all.into_iter().filter(|c| alpha_min_of(c, policy) == best).collect();
    let fewest = reaching.iter().map(tied).min().expect("best is reached");
    reaching.into_iter().filter(|c| tied(c) == fewest).collect()
}

enum RoundRule {
    Exactly(usize),
    Caps(Vec<usize>),
    Matroids(Vec<Arc<dyn Matroid>>),
}

struct Plan<'i> {
    instance: &'i Instance,
    rules: Vec<RoundRule>,
    /// Allowed cumulative type counts after each round; `None` = anything.
    prefixes: Vec<Option<Vec<Vec<usize>>>>,
}

impl Plan<'_> {
    fn options(&self, round: usize) -> Vec<Vec<ElementId>> {
        let pool = self.instance.round_elements(round);
        match &self.rules[round - 1] {
            RoundRule::Exactly(b) => pool.iter().copied().combinations(*b).collect(),
            RoundRule::Caps(caps) => (0..=pool.len())
                .flat_map(|k| pool.iter().copied().combinations(k))
                .filter(|s| {
                    let counts = self.instance.type_counts_of(s).expect("round elements are known");
                    counts.iter().zip(caps).all(|(c, cap)| c <= cap)
                })
                .collect(),
            RoundRule::Matroids(ms) => (0..=pool.len())
                .flat_map(|k| pool.iter().copied().combinations(k))
                .filter(|s| ms.iter().all(|m| m.is_independent(s)))
                .collect(),
        }
    }

    fn size(&self) -> u128 {
        (1..=self.instance.horizon())
            .map(|t| {
                let n = self.instance.round_elements(t).len();
                match &self.rules[t - 1] {
                    RoundRule::Exactly(b) => binomial(n, *b),
                    _ => 1u128.checked_shl(n as u32).unwrap_or(u128::MAX),
                }
            })
            .fold(1u128, |acc, x| acc.saturating_mul(x))
    }
}

struct Best {
    value: f64,
    rounds: Vec<Vec<ElementId>>,
    enumerated: u64,
}

#[allow(clippy::too_many_arguments)]
fn search<'a>(
    plan: &Plan<'_>,
    options: &[Vec<Vec<ElementId>>],
    round: usize,
    evaluator: &dyn MarginalEvaluator<'a>,
    counts: &[usize],
    chosen: &mut Vec<Vec<ElementId>>,
    best: &mut Option<Best>,
    enumerated: &mut u64,
) {
    let horizon = plan.instance.horizon();
    if round > horizon {
        *enumerated += 1;
        let value = evaluator.value();
        if best.as_ref().is_none_or(|b| value > b.value) {
            *best = Some(Best {
                value,
                rounds: chosen.clone(),
                enumerated: 0,
            });
        }
        return;
    }
    for option in &options[round - 1] {
        let mut next = counts.to_vec();
        for &e in option {
            next[plan.instance.type_of(e).expect("known element") - 1] += 1;
        }
        if let Some(allowed) = &plan.prefixes[round - 1] {
            if !allowed.contains(&next) {
                continue;
            }
        }
        let mut ev = evaluator.fork();
        ev.insert_all(option);
        chosen.push(option.clone());
        search(plan, options, round + 1, ev.as_ref(), &next, chosen, best, enumerated);
        chosen.pop();
    }
}

/// Exhaustive optimum of the instance objective over `class`.
///
/// The first round's choices are explored in parallel; among equal values
/// the first selection in enumeration order is returned.
pub fn brute_force_opt(instance: &Instance, class: &ConstraintClass) -> Result<OracleResult> {
    instance.ensure_valid()?;
    let horizon = instance.horizon();
    let num_types = instance.num_types();
    let policy = instance.policy();
    let mut rules = Vec::with_capacity(horizon);
    let mut prefixes = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let cumulative = instance.cumulative_budget(t);
        let (rule, prefix) = match class {
            ConstraintClass::Cardinality => (RoundRule::Exactly(instance.budget(t)), None),
            ConstraintClass::PartitionMatroid(caps) => {
                let row = caps.get(t - 1).ok_or_else(|| {
                    Error::InvalidArgument(format!("no partition caps for round {t}"))
                })?;
                (RoundRule::Caps(row.clone()), None)
            }
            ConstraintClass::Matroids(ms) => {
                let row = ms.get(t - 1).ok_or_else(|| {
                    Error::InvalidArgument(format!("no matroids for round {t}"))
                })?;
                (RoundRule::Matroids(row.clone()), None)
            }
            ConstraintClass::SigmaTypeFeasible => {
                let allowed = if policy.is_constrained() {
                    Some(vec![reference_type_counts(policy, cumulative)])
                } else {
                    None
                };
                (RoundRule::Exactly(instance.budget(t)), allowed)
            }
            ConstraintClass::TypeFeasible => {
                let mut present = vec![false; num_types];
                for &e in instance.round_elements(t) {
                    present[instance.type_of(e).unwrap() - 1] = true;
                }
                let count = binomial(cumulative + num_types - 1, num_types - 1);
                if count > MAX_COMPOSITIONS {
                    return Err(Error::EnumerationTooLarge {
                        what: "type-count compositions",
                        count,
                        limit: MAX_COMPOSITIONS,
                    });
                }
                let allowed = type_feasible_counts(policy, cumulative, &present);
                (RoundRule::Exactly(instance.budget(t)), Some(allowed))
            }
        };
        rules.push(rule);
        prefixes.push(prefix);
    }
    let plan = Plan {
        instance,
        rules,
        prefixes,
    };
    let size = plan.size();
    if size > MAX_SELECTIONS {
        return Err(Error::EnumerationTooLarge {
            what: "per-round selections",
            count: size,
            limit: MAX_SELECTIONS,
        });
    }
    let options: Vec<Vec<Vec<ElementId>>> = (1..=horizon).map(|t| plan.options(t)).collect();
    let objective = instance.objective();
    let per_first: Vec<(Option<Best>, u64)> = options[0]
        .par_iter()
        .map(|first| {
            let mut counts = vec![0usize; num_types];
            for &e in first {
                counts[instance.type_of(e).unwrap() - 1] += 1;
            }
            if let Some(allowed) = &plan.prefixes[0] {
                if !allowed.contains(&counts) {
                    return (None, 0);
                }
            }
            let mut ev = objective.evaluator();
            ev.insert_all(first);
            let mut chosen = vec![first.clone()];
            let mut best = None;
            let mut enumerated = 0;
            search(&plan, &options, 2, ev.as_ref(), &counts, &mut chosen, &mut best, &mut enumerated);
            (best, enumerated)
        })
        .collect();
    let mut enumerated = 0;
    let mut best: Option<Best> = None;
    for (candidate, n) in per_first {
        enumerated += n;
        if let Some(c) = candidate {
            if best.as_ref().is_none_or(|b| c.value > b.value) {
                best = Some(c);
            }
        }
    }
    let best = best.ok_or_else(|| {
        Error::InvalidArgument(format!("no feasible selection exists for class {}", class.name()))
    })?;
    Ok(OracleResult {
        value: best.value,
        selection: Selection::from_rounds(best.rounds),
        enumerated: enumerated + best.enumerated,
        class: class.name(),
    })
}

/// Where monotonicity or submodularity fails: `f(A+e) - f(A)` versus
/// `f(B+e) - f(B)` with `A ⊆ B`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub a: Vec<ElementId>,
    pub b: Vec<ElementId>,
    pub e: ElementId,
    pub gain_a: f64,
    pub gain_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub monotone: bool,
    pub submodular: bool,
    /// Negative gain `f(A+e) < f(A)`, reported with `b = a`.
    pub monotonicity_violation: Option<Counterexample>,
    pub submodularity_violation: Option<Counterexample>,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        self.monotone && self.submodular
    }
}

/// Exhaustively checks monotonicity and submodularity of `f` on `ground`
/// (at most 16 elements) using the single-element exchange condition
/// `f(A+e) - f(A) ≥ f(A+e'+e) - f(A+e')`, which is equivalent to
/// submodularity. Comparisons allow a relative slack of `1e-9` for
/// floating-point objectives.
pub fn check_submodular_monotone(f: &dyn SetFunction, ground: &[ElementId]) -> Result<PropertyReport> {
    let n = ground.len();
    if n > MAX_CHECK_GROUND {
        return Err(Error::EnumerationTooLarge {
            what: "submodularity check ground set",
            count: n as u128,
            limit: MAX_CHECK_GROUND as u128,
        });
    }
    let subset = |mask: usize| -> Vec<ElementId> { (0..n).filter(|b| mask >> b & 1 == 1).map(|b| ground[b]).collect() };
    let values: Vec<f64> = (0..1usize << n).into_par_iter().map(|m| f.value(&subset(m))).collect();
    let slack = |x: f64, y: f64| 1e-9 * x.abs().max(y.abs()).max(1.0);

    let mut monotonicity_violation = None;
    'mono: for mask in 0..1usize << n {
        for e in 0..n {
            if mask >> e & 1 == 0 {
                let (lo, hi) = (values[mask], values[mask | 1 << e]);
                if hi < lo - slack(lo, hi) {
                    monotonicity_violation = Some(Counterexample {
                        a: subset(mask),
                        b: subset(mask),
                        e: ground[e],
                        gain_a: hi - lo,
                        gain_b: hi - lo,
                    });
                    break 'mono;
                }
            }
        }
    }

    let mut submodularity_violation = None;
    'sub: for mask in 0..1usize << n {
        for e in 0..n {
            if mask >> e & 1 == 1 {
                continue;
            }
            let gain_a = values[mask | 1 << e] - values[mask];
            for other in 0..n {
                if other == e || mask >> other & 1 == 1 {
                    continue;
                }
                let with = mask | 1 << other;
                let gain_b = values[with | 1 << e] - values[with];
                if gain_b > gain_a + slack(gain_a, gain_b) {
                    submodularity_violation = Some(Counterexample {
                        a: subset(mask),
                        b: subset(with),
                        e: ground[e],
                        gain_a,
                        gain_b,
                    });
                    break 'sub;
                }
            }
        }
    }

    Ok(PropertyReport {
        monotone: monotonicity_violation.is_none(),
        submodular: submodularity_violation.is_none(),
        monotonicity_violation,
        submodularity_violation,
    })
}
