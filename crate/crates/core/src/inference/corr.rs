//! Pearson product-moment correlation with Fisher-z confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::InferenceError;
use crate::util::{kahan_sum_iter, mean};

/// Normal quantile for the 95% interval, as used by the Fisher-z formula
/// `tanh(atanh(r) ± 1.96/√(n−3))`.
pub const Z_95: f64 = 1.96;

/// A correlation estimate with its 95% interval and two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub ci: (f64, f64),
    pub p: f64,
    pub n: usize,
}

/// Product-moment correlation of two vectors; requires n ≥ 4 and both
/// inputs non-constant.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Correlation, InferenceError> {
    if x.len() != y.len() {
        return Err(InferenceError::Shape(format!(
            "pearson_r on lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 4 {
        return Err(InferenceError::SampleTooSmall { n, min: 4 });
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx = kahan_sum_iter(x.iter().map(|v| (v - mx) * (v - mx)));
    let syy = kahan_sum_iter(y.iter().map(|v| (v - my) * (v - my)));
    if sxx == 0.0 {
        return Err(InferenceError::ConstantColumn("x".into()));
    }
    if syy == 0.0 {
        return Err(InferenceError::ConstantColumn("y".into()));
    }
    let sxy = kahan_sum_iter(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);

    Ok(Correlation {
        r,
        ci: fisher_ci(r, n),
        p: r_p_value(r, n),
        n,
    })
}

/// 95% Fisher-z interval: `tanh(atanh(r) ± 1.96/√(n−3))`.
pub fn fisher_ci(r: f64, n: usize) -> (f64, f64) {
    if r >= 1.0 {
        return (1.0, 1.0);
    }
    if r <= -1.0 {
        return (-1.0, -1.0);
    }
    let z = r.atanh();
    let half = Z_95 / ((n as f64) - 3.0).sqrt();
    ((z - half).tanh(), (z + half).tanh())
}

/// Two-sided p-value for r via `t = r·√((n−2)/(1−r²))` on n − 2 df.
pub fn r_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlation() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let c = pearson_r(&x, &x).unwrap();
        assert_eq!(c.r, 1.0);
        assert_eq!(c.ci, (1.0, 1.0));
        assert_eq!(c.p, 0.0);
    }

    #[test]
    fn hand_computed_r() {
        // cov = 1.0, sd = 1.2910 each -> r = 0.6
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![2.0, 1.0, 4.0, 3.0];
        let c = pearson_r(&x, &y).unwrap();
        assert!((c.r - 0.6).abs() < 1e-12);
    }

    #[test]
    fn fisher_interval_reproduces_reference_intervals() {
        // r = 0.38, n = 75 -> approximately [0.17, 0.56]
        let (lo, hi) = fisher_ci(0.38, 75);
        assert!((lo - 0.167).abs() < 0.005, "lo = {lo}");
        assert!((hi - 0.559).abs() < 0.005, "hi = {hi}");
    }

    #[test]
    fn constant_input_rejected() {
        let x = vec![3.0, 3.0, 3.0, 3.0];
        let y = vec![1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            pearson_r(&x, &y),
            Err(InferenceError::ConstantColumn(_))
        ));
    }

    #[test]
    fn negative_correlation_flips_interval() {
        let (lo, hi) = fisher_ci(-0.36, 75);
        let (plo, phi) = fisher_ci(0.36, 75);
        assert!((lo + phi).abs() < 1e-12);
        assert!((hi + plo).abs() < 1e-12);
    }

    #[test]
    fn p_value_matches_symmetry_and_magnitude() {
        assert!((r_p_value(0.5, 20) - r_p_value(-0.5, 20)).abs() < 1e-15);
        // r = 0.38, n = 75: significant at 0.05 but not at 0.001
        let p = r_p_value(0.38, 75);
        assert!(p < 0.01 && p > 1e-4, "p = {p}");
    }

    #[test]
    fn null_draws_cover_zero_at_the_nominal_rate() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};

        let mut rng = StdRng::seed_from_u64(4242);
        let draws = 1000;
        let n = 30;
        let mut covered = 0;
        for _ in 0..draws {
            let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let c = pearson_r(&x, &y).unwrap();
            if c.ci.0 <= 0.0 && 0.0 <= c.ci.1 {
                covered += 1;
            }
        }
        let rate = covered as f64 / draws as f64;
        assert!(
            (rate - 0.95).abs() <= 0.02,
            "null coverage {rate} outside 95% ± 2%"
        );
    }
}
