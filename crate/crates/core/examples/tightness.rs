//! The two adversarial instances on which the year-by-year planner loses
//! against the exhaustive optimum: an early pick that blocks a better pair,
//! and a tie-break that spends the spare slot on a worthless type.
//!
//! ```text
//! cargo run --release -p facplan --example tightness
//! ```

use std::sync::Arc;

use facplan::algorithms::{multistep_planning, PlanOptions};
use facplan::model::{Element, PROPORTION_SCALE};
use facplan::objective::{ModularFunction, TableEntry, TableFunction};
use facplan::oracle::{brute_force_opt, ConstraintClass};
use facplan::{Cell, ElementId, Instance, Policy};

fn element(id: usize, round: usize, type_id: usize) -> Element {
    Element {
        id: ElementId(id as u32),
        cell: Cell::new(type_id, id),
        round,
        type_id,
    }
}

fn budget_trap(x: f64, eps: f64) -> facplan::Result<Instance> {
    let (a, b, c) = (ElementId(0), ElementId(1), ElementId(2));
    let entries = [
        (vec![], 0.0),
        (vec![a], x + eps),
        (vec![b], x),
        (vec![c], x + 2.0 * eps),
        (vec![a, b], 2.0 * x + eps),
        (vec![a, c], x + 2.0 * eps),
        (vec![b, c], 2.0 * x + 2.0 * eps),
        (vec![a, b, c], 2.0 * x + 2.0 * eps),
    ]
    .map(|(set, value)| TableEntry { set, value });
    let f = TableFunction::new(vec![a, b, c], &entries)?;
    let elements = vec![element(0, 1, 1), element(1, 1, 1), element(2, 2, 1)];
    Ok(Instance::new(2, 1, elements, vec![1, 1], Policy::unconstrained(1), Arc::new(f)))
}

fn tie_break_trap(types: usize, k: usize) -> Instance {
    let budget = types * k + 1;
    let elements: Vec<Element> = (0..types * (budget + 1)).map(|i| element(i, 1, 1 + i / (budget + 1))).collect();
    let f = ModularFunction::new(elements.iter().map(|e| (e.id, if e.type_id == types { 1.0 } else { 0.0 })));
    let policy = Policy::from_micro(vec![PROPORTION_SCALE / types as u64; types], (1..=types).collect());
    Instance::new(1, types, elements, vec![budget], policy, Arc::new(f))
}

fn main() -> facplan::Result<()> {
    println!("budget uncertainty, x = 100:");
    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        let inst = budget_trap(100.0, eps)?;
        let got = multistep_planning(&inst, PlanOptions::default(), None)?.total;
        let best = brute_force_opt(&inst, &ConstraintClass::SigmaTypeFeasible)?.value;
        println!("  eps {eps:e}: planner {got}, optimum {best}, ratio {:.9}", got / best);
    }
    println!("tie-break ordering:");
    for (types, k) in [(2, 1), (3, 2), (2, 3)] {
        let inst = tie_break_trap(types, k);
        let got = multistep_planning(&inst, PlanOptions::default(), None)?.total;
        let best = brute_force_opt(&inst, &ConstraintClass::TypeFeasible)?.value;
        println!("  r={types} k={k}: planner {got}, optimum {best}, ratio {:.4}", got / best);
    }
    Ok(())
}
