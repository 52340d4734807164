//! Benjamini-Hochberg step-up false-discovery-rate adjustment.

use super::InferenceError;

/// Step-up adjusted p-values, returned in the original order.
///
/// Sort ascending, take `p̃₍ᵢ₎ = min over j ≥ i of (m·p₍ⱼ₎/j)` clipped to 1,
/// then scatter back.
pub fn bh_adjust(p_values: &[f64]) -> Result<Vec<f64>, InferenceError> {
    for p in p_values {
        if !(0.0..=1.0).contains(p) {
            return Err(InferenceError::Domain(format!(
                "p-value {p} outside [0, 1]"
            )));
        }
    }
    let m = p_values.len();
    if m == 0 {
        return Ok(Vec::new());
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));

    let mut adjusted = vec![0.0; m];
    let mut running_min = 1.0f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let scaled = (m as f64) * p_values[idx] / (rank + 1) as f64;
        running_min = running_min.min(scaled).min(1.0);
        // the suffix minimum is mathematically >= the raw value; guard the
        // one-ULP rounding dip so p_adj >= p_raw holds exactly
        adjusted[idx] = running_min.max(p_values[idx]);
    }
    Ok(adjusted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        // m·p/j = [0.04, 0.04, 0.0533.., 0.5]; suffix minima unchanged
        let adjusted = bh_adjust(&[0.01, 0.02, 0.04, 0.5]).unwrap();
        assert!((adjusted[0] - 0.04).abs() < 1e-12);
        assert!((adjusted[1] - 0.04).abs() < 1e-12);
        assert!((adjusted[2] - 0.04 * 4.0 / 3.0).abs() < 1e-12);
        assert!((adjusted[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn equal_inputs_are_unchanged() {
        let adjusted = bh_adjust(&[0.2; 7]).unwrap();
        assert!(adjusted.iter().all(|p| (p - 0.2).abs() < 1e-12));
    }

    #[test]
    fn single_entry_identity() {
        assert_eq!(bh_adjust(&[0.03]).unwrap(), vec![0.03]);
    }

    #[test]
    fn out_of_range_is_a_domain_error() {
        assert!(matches!(
            bh_adjust(&[0.5, 1.2]),
            Err(InferenceError::Domain(_))
        ));
        assert!(matches!(bh_adjust(&[-0.1]), Err(InferenceError::Domain(_))));
    }

    /// Independent brute-force oracle: for each i, the adjusted value is
    /// min over all j with p_j >= p_i of m*p_j/rank(j), computed without
    /// the suffix-scan trick.
    fn brute_force_bh(p_values: &[f64]) -> Vec<f64> {
        let m = p_values.len();
        let mut sorted: Vec<f64> = p_values.to_vec();
        sorted.sort_by(f64::total_cmp);
        p_values
            .iter()
            .map(|&p| {
                let rank_of_p = sorted.iter().position(|&s| s == p).unwrap();
                let mut best = 1.0f64;
                for (j, &pj) in sorted.iter().enumerate() {
                    if j >= rank_of_p {
                        best = best.min(m as f64 * pj / (j + 1) as f64);
                    }
                }
                best.min(1.0)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn matches_brute_force_oracle(
            p in proptest::collection::vec(0.0f64..=1.0, 1..50)
        ) {
            let fast = bh_adjust(&p).unwrap();
            let slow = brute_force_bh(&p);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn adjusted_never_below_raw_and_monotone(
            p in proptest::collection::vec(0.0f64..=1.0, 1..40)
        ) {
            let adjusted = bh_adjust(&p).unwrap();
            for (raw, adj) in p.iter().zip(&adjusted) {
                prop_assert!(adj >= raw);
                prop_assert!(*adj <= 1.0);
            }
            // order statistics of the adjustment respect the raw order
            let mut pairs: Vec<(f64, f64)> = p.iter().copied().zip(adjusted).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in pairs.windows(2) {
                prop_assert!(w[0].1 <= w[1].1 + 1e-15);
            }
        }
    }
}
