//! Sequential facility planning with per-round budgets and proportional
//! type constraints.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds elements, instances, policies and selections.
//! * [`objective`] defines the set-function interface used by every algorithm.
//! * [`coverage`] builds travel-time isochrones and the population coverage objective.
//! * [`proportionality`] computes satisfaction ratios, min-ratio type sequences and quotas.
//! * [`algorithms`] contains the greedy engines and the planners, with and without advice.
//! * [`oracle`] enumerates exact optima on small instances for certification.
//! * [`scenario`] reads, writes and synthesises scenario files.
//! * [`pipeline`] wires everything into the runs exposed by the CLI and the service.

pub mod algorithms;
pub mod coverage;
pub mod error;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod pipeline;
pub mod proportionality;
pub mod scenario;

pub use error::{Error, Result};
pub use model::{Cell, Element, ElementId, Instance, Policy, Selection};
pub use objective::{MarginalEvaluator, SetFunction};
