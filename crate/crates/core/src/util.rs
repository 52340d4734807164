//! Small numeric helpers shared across modules.

/// Kahan compensated sum over a slice, in slice order.
///
/// Every statistical accumulation in this crate runs through this (or the
/// iterator variant) so results do not depend on summation luck.
pub fn kahan_sum(values: &[f64]) -> f64 {
    kahan_sum_iter(values.iter().copied())
}

/// Kahan compensated sum over an iterator, in iteration order.
pub fn kahan_sum_iter<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Arithmetic mean with compensated summation. Returns 0.0 for empty input.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    kahan_sum(values) / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = kahan_sum_iter(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (n - 1) as f64).sqrt()
}

/// Compensated dot product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    kahan_sum_iter(a.iter().zip(b).map(|(x, y)| x * y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_adversarial_input() {
        // 1.0 followed by many tiny values that naive f64 summation drops.
        let mut values = vec![1.0];
        values.extend(std::iter::repeat_n(1e-16, 1_000_000));
        let naive: f64 = values.iter().sum();
        let compensated = kahan_sum(&values);
        let exact = 1.0 + 1e-10;
        assert!((compensated - exact).abs() < 1e-15);
        assert!((naive - exact).abs() > (compensated - exact).abs());
    }

    #[test]
    fn sd_matches_hand_computation() {
        // mean 5, squared deviations sum 32, 32/7 = 4.5714..., sd = 2.13809...
        let values = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert!((mean(&values) - 5.0).abs() < 1e-12);
        assert!((sample_sd(&values) - 2.138089935299395).abs() < 1e-12);
    }
}
