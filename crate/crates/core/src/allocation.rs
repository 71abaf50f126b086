//! Per-operator bandwidth under the exclusive-chunk and load-proportional
//! policies, and Jain's fairness index.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::compensated_sum;
use crate::scenario::ValidatedScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Baseline,
    Dynamic,
}

impl Policy {
    pub const ALL: [Policy; 2] = [Policy::Baseline, Policy::Dynamic];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::Baseline => "baseline",
            Policy::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("allocation floor {floor} times {num_operators} operators exceeds the whole band")]
    FloorTooLarge { floor: f64, num_operators: usize },
    #[error("no operators to allocate to")]
    NoOperators,
    #[error("fairness of an empty set is undefined")]
    EmptyInput,
    #[error("fairness of an all-zero set is undefined")]
    AllZero,
    #[error("throughput values must be finite and non-negative (got {0})")]
    InvalidValue(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub policy: Policy,
    /// Bandwidth of each operator, Hz.
    pub bandwidth_hz: Vec<f64>,
    /// Loads that drove the split (empty for the baseline).
    pub loads: Vec<u64>,
}

impl AllocationResult {
    pub fn total_hz(&self) -> f64 {
        compensated_sum(self.bandwidth_hz.iter().copied())
    }

    /// Contiguous `[start, end)` offsets of each operator's sub-band from the
    /// bottom of the shared band, in operator order.
    pub fn sub_bands(&self) -> Vec<(f64, f64)> {
        let mut start = 0.0;
        self.bandwidth_hz
            .iter()
            .map(|w| {
                let band = (start, start + w);
                start += w;
                band
            })
            .collect()
    }
}

/// Every operator keeps its licensed chunk.
pub fn baseline_allocation(scenario: &ValidatedScenario) -> AllocationResult {
    AllocationResult {
        policy: Policy::Baseline,
        bandwidth_hz: vec![scenario.chunk_bandwidth_hz; scenario.num_operators],
        loads: Vec::new(),
    }
}

/// Splits `total_hz` in proportion to `loads` on top of a per-operator floor
/// `floor_fraction * total_hz`. All-zero loads fall back to an equal split.
/// The last operator takes `total_hz` minus the others so the parts sum to
/// the total exactly.
pub fn dynamic_allocation(
    loads: &[u64],
    total_hz: f64,
    floor_fraction: f64,
) -> Result<AllocationResult, AllocationError> {
    let m = loads.len();
    if m == 0 {
        return Err(AllocationError::NoOperators);
    }
    if !(floor_fraction >= 0.0) || floor_fraction * m as f64 > 1.0 {
        return Err(AllocationError::FloorTooLarge { floor: floor_fraction, num_operators: m });
    }
    let load_total: u64 = loads.iter().sum();
    let mut bandwidth_hz: Vec<f64> = if load_total == 0 {
        vec![total_hz / m as f64; m]
    } else {
        let floor_hz = floor_fraction * total_hz;
        let shared_hz = (1.0 - m as f64 * floor_fraction) * total_hz;
        loads
            .iter()
            .map(|&l| floor_hz + shared_hz * (l as f64 / load_total as f64))
            .collect()
    };
    let others = compensated_sum(bandwidth_hz[..m - 1].iter().copied());
    bandwidth_hz[m - 1] = (total_hz - others).max(0.0);
    Ok(AllocationResult { policy: Policy::Dynamic, bandwidth_hz, loads: loads.to_vec() })
}

/// Jain's index `(sum x)^2 / (n * sum x^2)`, in `[1/n, 1]`.
pub fn jain_fairness(values: &[f64]) -> Result<f64, AllocationError> {
    if values.is_empty() {
        return Err(AllocationError::EmptyInput);
    }
    if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(AllocationError::InvalidValue(bad));
    }
    let sum = compensated_sum(values.iter().copied());
    if sum == 0.0 {
        return Err(AllocationError::AllZero);
    }
    // scaling by the maximum keeps squares away from overflow and is exact
    // enough to leave the ratio unchanged
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let scaled_sum = sum / max;
    let sum_sq = compensated_sum(values.iter().map(|v| (v / max) * (v / max)));
    let j = scaled_sum * scaled_sum / (values.len() as f64 * sum_sq);
    Ok(j.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub jain: f64,
    pub n: usize,
    pub mean_throughput_bps: f64,
}

pub fn fairness_report(values: &[f64]) -> Result<FairnessReport, AllocationError> {
    let jain = jain_fairness(values)?;
    let mean = compensated_sum(values.iter().copied()) / values.len() as f64;
    Ok(FairnessReport { jain, n: values.len(), mean_throughput_bps: mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{validate_config, ScenarioConfig};
    use proptest::prelude::*;

    const MHZ: f64 = 1.0e6;

    #[test]
    fn baseline_default_is_five_chunks() {
        let s = validate_config(ScenarioConfig::default()).unwrap();
        let a = baseline_allocation(&s);
        assert_eq!(a.bandwidth_hz, vec![200.0 * MHZ; 5]);
        assert_eq!(a.total_hz(), 1.0e9);
    }

    #[test]
    fn baseline_four_operators_leaves_a_chunk() {
        let s = validate_config(ScenarioConfig { num_operators: 4, ..Default::default() }).unwrap();
        let a = baseline_allocation(&s);
        assert_eq!(a.bandwidth_hz, vec![200.0 * MHZ; 4]);
        assert_eq!(a.total_hz(), 800.0 * MHZ);
    }

    #[test]
    fn baseline_single_operator() {
        let s = validate_config(ScenarioConfig { num_operators: 1, ..Default::default() }).unwrap();
        assert_eq!(baseline_allocation(&s).bandwidth_hz, vec![200.0 * MHZ]);
    }

    #[test]
    fn equal_loads_match_baseline() {
        let a = dynamic_allocation(&[1, 1, 1, 1, 1], 1.0e9, 0.0).unwrap();
        assert_eq!(a.bandwidth_hz, vec![200.0 * MHZ; 5]);
        let b = dynamic_allocation(&[7, 7, 7, 7, 7], 1.0e9, 0.0).unwrap();
        assert_eq!(b.bandwidth_hz, vec![200.0 * MHZ; 5]);
    }

    #[test]
    fn proportional_split() {
        let a = dynamic_allocation(&[2, 1, 1, 1, 0], 1.0e9, 0.0).unwrap();
        assert_eq!(a.bandwidth_hz, vec![400.0 * MHZ, 200.0 * MHZ, 200.0 * MHZ, 200.0 * MHZ, 0.0]);
        assert_eq!(
            a.sub_bands(),
            vec![(0.0, 4.0e8), (4.0e8, 6.0e8), (6.0e8, 8.0e8), (8.0e8, 1.0e9), (1.0e9, 1.0e9)]
        );
    }

    #[test]
    fn zero_loads_split_equally() {
        let a = dynamic_allocation(&[0, 0, 0, 0, 0], 1.0e9, 0.0).unwrap();
        assert_eq!(a.bandwidth_hz, vec![200.0 * MHZ; 5]);
    }

    #[test]
    fn floor_is_honoured() {
        let a = dynamic_allocation(&[1, 0, 0, 0], 1.0e9, 0.1).unwrap();
        assert_eq!(a.bandwidth_hz[1], 1.0e8);
        assert!((a.bandwidth_hz[0] - 7.0e8).abs() < 1e-6);
        assert_eq!(a.total_hz(), 1.0e9);
        assert!(matches!(
            dynamic_allocation(&[1, 2, 3], 1.0e9, 0.5),
            Err(AllocationError::FloorTooLarge { .. })
        ));
    }

    #[test]
    fn jain_reference_values() {
        assert!((jain_fairness(&[1.0, 2.0, 3.0]).unwrap() - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(jain_fairness(&[4.2; 9]).unwrap(), 1.0);
        assert!((jain_fairness(&[0.0, 0.0, 5.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(jain_fairness(&[3.0]).unwrap(), 1.0);
    }

    #[test]
    fn jain_errors() {
        assert_eq!(jain_fairness(&[]), Err(AllocationError::EmptyInput));
        assert_eq!(jain_fairness(&[0.0, 0.0]), Err(AllocationError::AllZero));
        assert!(matches!(jain_fairness(&[1.0, -1.0]), Err(AllocationError::InvalidValue(_))));
    }

    #[test]
    fn fairness_report_mean() {
        let r = fairness_report(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.n, 3);
        assert_eq!(r.mean_throughput_bps, 2.0);
    }

    proptest! {
        #[test]
        fn jain_is_scale_invariant(v in proptest::collection::vec(0.0f64..1e9, 1..50), c in 1e-6f64..1e6) {
            prop_assume!(v.iter().any(|&x| x > 0.0));
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            let a = jain_fairness(&v).unwrap();
            let b = jain_fairness(&scaled).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!(a >= 1.0 / v.len() as f64 - 1e-12 && a <= 1.0);
        }

        #[test]
        fn dynamic_sums_to_total(loads in proptest::collection::vec(0u64..500, 1..12), f in 0.0f64..1.0) {
            let f = f / loads.len() as f64;
            let a = dynamic_allocation(&loads, 1.0e9, f).unwrap();
            prop_assert!(a.bandwidth_hz.iter().all(|&w| w >= 0.0));
            prop_assert!((a.total_hz() - 1.0e9).abs() <= 1.0);
            let residue = (a.bandwidth_hz[loads.len() - 1]
                - if loads.iter().sum::<u64>() == 0 { 1.0e9 / loads.len() as f64 }
                  else { f * 1.0e9 + (1.0 - loads.len() as f64 * f) * 1.0e9 * loads[loads.len() - 1] as f64 / loads.iter().sum::<u64>() as f64 })
                .abs();
            prop_assert!(residue <= 1.0);
        }

        #[test]
        fn dynamic_is_scale_invariant_in_loads(loads in proptest::collection::vec(0u64..500, 1..12), c in 1u64..1000) {
            let a = dynamic_allocation(&loads, 1.0e9, 0.0).unwrap();
            let scaled: Vec<u64> = loads.iter().map(|l| l * c).collect();
            let b = dynamic_allocation(&scaled, 1.0e9, 0.0).unwrap();
            prop_assert_eq!(a.bandwidth_hz, b.bandwidth_hz);
        }

        #[test]
        fn more_load_never_means_less_band(loads in proptest::collection::vec(0u64..500, 2..12), idx in 0usize..12, extra in 1u64..100) {
            let idx = idx % loads.len();
            let a = dynamic_allocation(&loads, 1.0e9, 0.0).unwrap();
            let mut more = loads.clone();
            more[idx] += extra;
            let b = dynamic_allocation(&more, 1.0e9, 0.0).unwrap();
            prop_assert!(b.bandwidth_hz[idx] >= a.bandwidth_hz[idx]);
        }
    }
}
