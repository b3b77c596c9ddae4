//! Greedy engines and the planners built on them.

pub mod advice;
pub mod greedy;
pub mod matroid;
pub mod multistep;
pub mod plan;
pub mod retrospective;

pub use advice::{la_many_types, la_single_step, multistep_planning_with_advice, AdviceChain, AdviceOutcome};
pub use greedy::{greedy_cardinality, local_greedy, GreedyMode, GreedyOutcome, LocalGreedyOutcome, MatroidRound};
pub use matroid::{Matroid, PartitionMatroid};
pub use multistep::{multistep_planning, PlanOptions, Progress};
pub use plan::{Diagnostic, PlanResult, PlannedFacility, RoundOutcome};
pub use retrospective::{retrospective_compare, RetrospectiveOptions, RetrospectiveReport};
