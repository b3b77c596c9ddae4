//! Min-ratio type sequence, best achievable satisfaction and per-round
//! quotas for a policy given as proportions.
//!
//! ```text
//! cargo run --release -p facplan --example proportional_quotas -- 0.5 0.3 0.2
//! ```

use facplan::proportionality::{beta, min_ratio_sequence, quota_table};
use facplan::Policy;

fn main() -> facplan::Result<()> {
    let proportions: Vec<f64> = std::env::args().skip(1).filter_map(|p| p.parse().ok()).collect();
    let proportions = if proportions.is_empty() { vec![0.5, 0.3, 0.2] } else { proportions };
    let policy = Policy::with_identity_order(&proportions);
    let sequence = min_ratio_sequence(&policy, 12, 12);
    println!("sequence: {:?}", sequence.entries);
    for b in 1..=8 {
        println!("  budget {b}: best alpha_min {}", beta(&policy, b)?);
    }
    let budgets = [2, 3, 1, 4];
    println!("quotas for budgets {budgets:?}:");
    for t in 1..=budgets.len() {
        println!("  round {t}: {:?}", quota_table(&policy, &budgets).row(t).unwrap_or(&[]));
    }
    Ok(())
}
