//! District proportions from the scenario's policy block.

use crate::error::{Error, Result};
use crate::model::{Policy, PROPORTION_SCALE};

use super::format::{PolicyBlock, PolicyMode};

/// Proportions for `mode` over `num_types` districts, as decimals.
///
/// `dp1` normalises home-birth rates, `dp2` normalises inverse postnatal
/// coverage; both scale the result to `block.mass`. `explicit` returns the
/// listed proportions unchanged.
pub fn derive_policy_proportions(block: &PolicyBlock, mode: PolicyMode, num_types: usize) -> Result<Vec<f64>> {
    let require = |list: &[f64], key: &str| -> Result<()> {
        if list.len() != num_types {
            return Err(Error::Validation(format!(
                "policy {mode} needs {key} for {num_types} districts, found {}",
                list.len()
            )));
        }
        Ok(())
    };
    let mass = block.mass;
    match mode {
        PolicyMode::Dp0 => Ok(vec![0.0; num_types]),
        PolicyMode::Dp1 => {
            require(&block.home_birth_rates, "home_birth_rates")?;
            if let Some(q) = block.home_birth_rates.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Validation(format!(
                    "home birth rate of district {} is {}",
                    q + 1,
                    block.home_birth_rates[q]
                )));
            }
            normalise(&block.home_birth_rates, mass, "home birth rates")
        }
        PolicyMode::Dp2 => {
            require(&block.postnatal_coverage, "postnatal_coverage")?;
            let inverse = block
                .postnatal_coverage
                .iter()
                .enumerate()
                .map(|(q, &c)| {
                    if c.is_finite() && c > 0.0 {
                        Ok(1.0 / c)
                    } else {
                        Err(Error::Validation(format!(
                            "postnatal coverage of district {} is {c}; it must be positive to invert",
                            q + 1
                        )))
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            normalise(&inverse, mass, "inverse postnatal coverage")
        }
        PolicyMode::Explicit => {
            require(&block.proportions, "proportions")?;
            Ok(block.proportions.clone())
        }
    }
}

fn normalise(weights: &[f64], mass: f64, what: &str) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Validation(format!("{what} sum to zero")));
    }
    Ok(weights.iter().map(|w| w / total * mass).collect())
}

/// Rounds decimals to millionths. If rounding pushes the sum past one the
/// excess comes off the largest entry.
pub fn proportions_to_micro(proportions: &[f64]) -> Vec<u64> {
    let mut micro: Vec<u64> = proportions
        .iter()
        .map(|&p| {
            if p.is_finite() && p > 0.0 {
                (p * PROPORTION_SCALE as f64).round() as u64
            } else {
                0
            }
        })
        .collect();
    let sum: u64 = micro.iter().sum();
    if sum > PROPORTION_SCALE && sum <= PROPORTION_SCALE + micro.len() as u64 {
        let largest = (0..micro.len()).max_by_key(|&i| (micro[i], std::cmp::Reverse(i))).unwrap_or(0);
        micro[largest] -= sum - PROPORTION_SCALE;
    }
    micro
}

/// The policy for `mode` with the block's tie-breaking order.
pub fn build_policy(block: &PolicyBlock, mode: PolicyMode, num_types: usize) -> Result<Policy> {
    let proportions = derive_policy_proportions(block, mode, num_types)?;
    Ok(Policy::from_micro(proportions_to_micro(&proportions), block.sigma.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(rates: Vec<f64>, coverage: Vec<f64>, mass: f64) -> PolicyBlock {
        PolicyBlock {
            mode: PolicyMode::Dp1,
            mass,
            sigma: (1..=rates.len().max(coverage.len())).collect(),
            home_birth_rates: rates,
            postnatal_coverage: coverage,
            proportions: Vec::new(),
        }
    }

    #[test]
    fn equal_rates_split_mass_evenly() {
        let b = block(vec![0.4; 4], vec![], 0.8);
        let p = derive_policy_proportions(&b, PolicyMode::Dp1, 4).unwrap();
        for x in p {
            assert!((x - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn rates_one_and_three() {
        let b = block(vec![1.0, 3.0], vec![], 0.9);
        let p = derive_policy_proportions(&b, PolicyMode::Dp1, 2).unwrap();
        assert!((p[0] - 0.225).abs() < 1e-12);
        assert!((p[1] - 0.675).abs() < 1e-12);
        assert_eq!(proportions_to_micro(&p), vec![225_000, 675_000]);
    }

    #[test]
    fn inverse_coverage_favours_poorly_served_districts() {
        let b = block(vec![], vec![0.25, 0.5], 0.9);
        let p = derive_policy_proportions(&b, PolicyMode::Dp2, 2).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-12);
        assert!((p[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_coverage_is_an_error() {
        let b = block(vec![], vec![0.0, 0.5], 0.9);
        let err = derive_policy_proportions(&b, PolicyMode::Dp2, 2).unwrap_err();
        assert!(err.to_string().contains("district 1"));
    }

    #[test]
    fn missing_rates_are_an_error() {
        let b = block(vec![], vec![0.5, 0.5], 0.9);
        assert!(derive_policy_proportions(&b, PolicyMode::Dp1, 2).is_err());
        assert_eq!(derive_policy_proportions(&b, PolicyMode::Dp0, 2).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rounding_never_exceeds_one() {
        let third = 1.0 / 3.0;
        assert_eq!(proportions_to_micro(&[third; 3]).iter().sum::<u64>(), 999_999);
        let m = proportions_to_micro(&[0.1666667, 0.1666667, 0.6666667]);
        assert!(m.iter().sum::<u64>() <= PROPORTION_SCALE);
    }
}
