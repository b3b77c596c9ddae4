//! Comparing an expert's past selection with greedy and with the refined
//! selection obtained from several orderings of the expert's picks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::advice::{la_single_step, AdviceChain};
use super::greedy::{greedy_cardinality, GreedyMode};
use crate::error::{Error, Result};
use crate::model::ElementId;
use crate::objective::SetFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrospectiveOptions {
    /// Orderings tried; the first one keeps the advice as given.
    pub trials: usize,
    pub seed: u64,
    pub mode: GreedyMode,
}

impl Default for RetrospectiveOptions {
    fn default() -> Self {
        RetrospectiveOptions {
            trials: 10,
            seed: 0,
            mode: GreedyMode::Lazy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RetrospectiveReport {
    pub advice: Vec<ElementId>,
    pub advice_value: f64,
    pub greedy: Vec<ElementId>,
    pub greedy_value: f64,
    pub refined: Vec<ElementId>,
    pub refined_value: f64,
    /// Trial that produced `refined` (0 = advice in its given order).
    pub best_trial: usize,
    /// Advice prefix length kept by the winning trial.
    pub kept_prefix: usize,
    pub trial_values: Vec<f64>,
}

impl RetrospectiveReport {
    /// Refined strictly beats greedy, which strictly beats the advice.
    pub fn refined_beats_both(&self) -> bool {
        self.refined_value > self.greedy_value && self.greedy_value > self.advice_value
    }

    /// Human-readable ordering such as `refined > greedy > advice`.
    pub fn ordering(&self) -> String {
        let mut named = [
            ("refined", self.refined_value),
            ("greedy", self.greedy_value),
            ("advice", self.advice_value),
        ];
        named.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut out = named[0].0.to_string();
        for w in named.windows(2) {
            out.push_str(if w[0].1 > w[1].1 { " > " } else { " = " });
            out.push_str(w[1].0);
        }
        out
    }
}

/// Orders of the advice tried by [`retrospective_compare`]: the given order
/// first, then seeded shuffles.
pub fn advice_orderings(advice: &[ElementId], trials: usize, seed: u64) -> Vec<Vec<ElementId>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials.max(1))
        .map(|k| {
            let mut order = advice.to_vec();
            if k > 0 {
                order.shuffle(&mut rng);
            }
            order
        })
        .collect()
}

/// Evaluates `f(A)`, greedy `G` and the best refinement `U` over several
/// advice orderings, all conditioned on `conditioned_on`.
pub fn retrospective_compare(
    objective: &dyn SetFunction,
    ground: &[ElementId],
    advice: &[ElementId],
    conditioned_on: &[ElementId],
    options: RetrospectiveOptions,
) -> Result<RetrospectiveReport> {
    if advice.is_empty() {
        return Err(Error::InvalidAdvice("retrospective comparison needs advice".into()));
    }
    let budget = advice.len();
    let greedy = greedy_cardinality(ground, budget, objective, conditioned_on, options.mode)?;
    let mut with_advice = conditioned_on.to_vec();
    with_advice.extend_from_slice(advice);
    let advice_value = objective.value(&with_advice);

    let orders = advice_orderings(advice, options.trials, options.seed);
    let outcomes = orders
        .par_iter()
        .map(|order| la_single_step(ground, budget, objective, order, &AdviceChain::Prefixes, conditioned_on, options.mode))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best].value {
            best = k;
        }
    }
    Ok(RetrospectiveReport {
        advice: advice.to_vec(),
        advice_value,
        greedy: greedy.picks,
        greedy_value: greedy.value,
        refined: outcomes[best].selection.clone(),
        refined_value: outcomes[best].value,
        best_trial: best,
        kept_prefix: outcomes[best].chosen_index,
        trial_values: outcomes.iter().map(|o| o.value).collect(),
    })
}
