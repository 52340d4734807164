//! Standardization and ordinary least squares via Householder QR.

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::InferenceError;
use crate::util::{dot, kahan_sum_iter, mean, sample_sd};

/// Relative pivot threshold below which a design column is declared
/// linearly dependent.
const RANK_TOLERANCE: f64 = 1e-10;

/// Z-scores a vector with the sample (n − 1) standard deviation.
pub fn standardize(values: &[f64]) -> Result<Vec<f64>, InferenceError> {
    standardize_named(values, "values")
}

/// [`standardize`] with a column name for error reporting.
pub fn standardize_named(values: &[f64], name: &str) -> Result<Vec<f64>, InferenceError> {
    if values.len() < 2 {
        return Err(InferenceError::SampleTooSmall {
            n: values.len(),
            min: 2,
        });
    }
    let sd = sample_sd(values);
    if sd == 0.0 {
        return Err(InferenceError::ConstantColumn(name.to_string()));
    }
    let m = mean(values);
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

/// A named regression design: predictor columns and the outcome.
///
/// [`DesignMatrix::standardized`] builds the all-variables-standardized
/// design used by the association analyses; [`DesignMatrix::raw`] leaves
/// values untouched (needed for indicator columns).
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    /// Column-major predictor values.
    pub columns: Vec<Vec<f64>>,
    pub outcome: Vec<f64>,
}

impl DesignMatrix {
    pub fn raw(
        column_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        outcome: Vec<f64>,
    ) -> Result<DesignMatrix, InferenceError> {
        if column_names.len() != columns.len() {
            return Err(InferenceError::Shape(format!(
                "{} names for {} columns",
                column_names.len(),
                columns.len()
            )));
        }
        for (name, col) in column_names.iter().zip(&columns) {
            if col.len() != outcome.len() {
                return Err(InferenceError::Shape(format!(
                    "column {name} has {} rows, outcome has {}",
                    col.len(),
                    outcome.len()
                )));
            }
        }
        Ok(DesignMatrix {
            column_names,
            columns,
            outcome,
        })
    }

    /// Standardizes every column and the outcome; a constant column is a
    /// [`InferenceError::ConstantColumn`] error naming it.
    pub fn standardized(
        column_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        outcome: Vec<f64>,
    ) -> Result<DesignMatrix, InferenceError> {
        let columns = column_names
            .iter()
            .zip(columns)
            .map(|(name, col)| standardize_named(&col, name))
            .collect::<Result<Vec<_>, _>>()?;
        let outcome = standardize_named(&outcome, "outcome")?;
        DesignMatrix::raw(column_names, columns, outcome)
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }
}

/// Fitted OLS model: coefficients with inference and residual diagnostics.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// `(intercept)` first when fitted with one.
    pub coefficient_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    /// Two-sided p-values from the t distribution on `df` degrees of freedom.
    pub p_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub df: usize,
}

impl OlsFit {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coefficient_names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.coefficients[i])
    }

    /// Two-sided confidence interval `estimate ± t(q, df) · se`.
    pub fn confidence_interval(&self, index: usize, level: f64) -> (f64, f64) {
        let q = t_quantile(1.0 - (1.0 - level) / 2.0, self.df as f64);
        let half = q * self.standard_errors[index];
        (
            self.coefficients[index] - half,
            self.coefficients[index] + half,
        )
    }
}

/// OLS with an implicit intercept column.
pub fn ols(design: &DesignMatrix) -> Result<OlsFit, InferenceError> {
    ols_with(design, true)
}

/// OLS, optionally without the intercept (for designs whose columns already
/// span it, e.g. per-subject indicators).
pub fn ols_with(design: &DesignMatrix, intercept: bool) -> Result<OlsFit, InferenceError> {
    let n = design.n_rows();
    let mut names: Vec<String> = Vec::with_capacity(design.n_columns() + 1);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(design.n_columns() + 1);
    if intercept {
        names.push("(intercept)".to_string());
        columns.push(vec![1.0; n]);
    }
    names.extend(design.column_names.iter().cloned());
    columns.extend(design.columns.iter().cloned());
    let k = columns.len();

    if n <= k {
        return Err(InferenceError::SampleTooSmall { n, min: k + 1 });
    }

    // Householder QR, in place over `columns` and a copy of the outcome.
    let mut qty = design.outcome.clone();
    let col_norms: Vec<f64> = columns.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut r = vec![vec![0.0; k]; k]; // upper triangular
    let mut dependent: Vec<String> = Vec::new();

    for j in 0..k {
        // norm of the active part of column j
        let norm = columns[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= RANK_TOLERANCE * col_norms[j].max(1.0) {
            dependent.push(names[j].clone());
            continue;
        }
        let alpha = if columns[j][j] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = columns[j][j..].to_vec();
        v[0] -= alpha;
        let v_norm_sq = v.iter().map(|x| x * x).sum::<f64>();
        if v_norm_sq > 0.0 {
            // apply H = I - 2 v vᵀ / (vᵀv) to the trailing columns and outcome
            for col in columns.iter_mut().skip(j) {
                let proj: f64 = v.iter().zip(&col[j..]).map(|(a, b)| a * b).sum();
                let scale = 2.0 * proj / v_norm_sq;
                for (vi, ci) in v.iter().zip(col[j..].iter_mut()) {
                    *ci -= scale * vi;
                }
            }
            let proj: f64 = v.iter().zip(&qty[j..]).map(|(a, b)| a * b).sum();
            let scale = 2.0 * proj / v_norm_sq;
            for (vi, yi) in v.iter().zip(qty[j..].iter_mut()) {
                *yi -= scale * vi;
            }
        }
        for i in 0..=j {
            r[i][j] = columns[j][i];
        }
        for (jj, col) in columns.iter().enumerate().skip(j + 1) {
            r[j][jj] = col[j];
        }
    }

    if !dependent.is_empty() {
        return Err(InferenceError::SingularDesign { columns: dependent });
    }

    // back-substitution: R beta = (Qᵀ y)[0..k]
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = qty[i];
        for j in (i + 1)..k {
            acc -= r[i][j] * beta[j];
        }
        beta[i] = acc / r[i][i];
    }

    // residuals against the original design, fixed accumulation order
    let residuals: Vec<f64> = (0..n)
        .map(|row| {
            let mut fitted = if intercept { beta[0] } else { 0.0 };
            let offset = usize::from(intercept);
            for (j, col) in design.columns.iter().enumerate() {
                fitted += beta[offset + j] * col[row];
            }
            design.outcome[row] - fitted
        })
        .collect();
    let rss = kahan_sum_iter(residuals.iter().map(|e| e * e));
    let df = n - k;
    let sigma_sq = rss / df as f64;

    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ; diagonal from rows of R⁻¹
    let r_inv = invert_upper_triangular(&r);
    let standard_errors: Vec<f64> = (0..k)
        .map(|i| {
            let row_ss: f64 = (i..k).map(|j| r_inv[i][j] * r_inv[i][j]).sum();
            (sigma_sq * row_ss).sqrt()
        })
        .collect();

    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let t_values: Vec<f64> = beta
        .iter()
        .zip(&standard_errors)
        .map(|(b, se)| {
            if *se > 0.0 {
                b / se
            } else {
                f64::INFINITY * b.signum()
            }
        })
        .collect();
    let p_values: Vec<f64> = t_values
        .iter()
        .map(|t| {
            if t.is_finite() {
                2.0 * (1.0 - dist.cdf(t.abs()))
            } else {
                0.0
            }
        })
        .collect();

    Ok(OlsFit {
        coefficient_names: names,
        coefficients: beta,
        standard_errors,
        t_values,
        p_values,
        residuals,
        rss,
        df,
    })
}

fn invert_upper_triangular(r: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = r.len();
    let mut inv = vec![vec![0.0; k]; k];
    for col in (0..k).rev() {
        inv[col][col] = 1.0 / r[col][col];
        for row in (0..col).rev() {
            let mut acc = 0.0;
            for m in (row + 1)..=col {
                acc += r[row][m] * inv[m][col];
            }
            inv[row][col] = -acc / r[row][row];
        }
    }
    inv
}

/// Upper-tail t quantile used for coefficient confidence intervals.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("df >= 1")
        .inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standardize_symmetric_case() {
        let z = standardize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(z, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn standardize_constant_errors() {
        let err = standardize(&[5.0, 5.0, 5.0]).unwrap_err();
        assert!(matches!(err, InferenceError::ConstantColumn(_)));
    }

    #[test]
    fn standardize_hand_case() {
        // mean 5, sd (n-1) 2.1381, first entry (2-5)/2.1381 = -1.4031
        let z = standardize(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((z[0] - (-1.403_121_520_040_228)).abs() < 1e-10);
        let m = mean(&z);
        let sd = sample_sd(&z);
        assert!(m.abs() < 1e-12);
        assert!((sd - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_linear_outcome_has_zero_residuals() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 + 2.0 * v).collect();
        let design = DesignMatrix::raw(vec!["x".into()], vec![x], y).unwrap();
        let fit = ols(&design).unwrap();
        assert!((fit.coefficient("x").unwrap() - 2.0).abs() < 1e-10);
        assert!((fit.coefficient("(intercept)").unwrap() - 3.0).abs() < 1e-10);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-10));
        assert!(fit.p_values[1] < 1e-10);
    }

    #[test]
    fn duplicate_column_is_singular_and_named() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = vec![1.0, 2.0, 2.5, 4.0, 5.5, 6.0];
        let design =
            DesignMatrix::raw(vec!["a".into(), "a_copy".into()], vec![x.clone(), x], y).unwrap();
        match ols(&design).unwrap_err() {
            InferenceError::SingularDesign { columns } => {
                assert_eq!(columns, vec!["a_copy".to_string()])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn standard_errors_match_textbook_simple_regression() {
        // se(slope) = sqrt(rss/(n-2) / Sxx)
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y = vec![2.0, 2.5, 4.5, 4.0, 6.0];
        let design = DesignMatrix::raw(vec!["x".into()], vec![x.clone()], y.clone()).unwrap();
        let fit = ols(&design).unwrap();

        let xb = mean(&x);
        let sxx: f64 = x.iter().map(|v| (v - xb) * (v - xb)).sum();
        let expected_se = (fit.rss / (5.0 - 2.0) / sxx).sqrt();
        let slope_idx = fit.index_of("x").unwrap();
        assert!((fit.standard_errors[slope_idx] - expected_se).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_to_design(
            cols in proptest::collection::vec(
                proptest::collection::vec(-10.0f64..10.0, 24), 1..4),
            noise in proptest::collection::vec(-1.0f64..1.0, 24),
        ) {
            let names: Vec<String> = (0..cols.len()).map(|i| format!("c{i}")).collect();
            let y: Vec<f64> = (0..24)
                .map(|i| 1.0 + cols.iter().map(|c| c[i]).sum::<f64>() + noise[i])
                .collect();
            let design = DesignMatrix::raw(names, cols.clone(), y);
            prop_assume!(design.is_ok());
            let fit = ols(&design.unwrap());
            prop_assume!(fit.is_ok());
            let fit = fit.unwrap();
            for col in &cols {
                let inner: f64 = col.iter().zip(&fit.residuals).map(|(a, b)| a * b).sum();
                prop_assert!(inner.abs() < 1e-8, "residual·column = {inner}");
            }
            let inner: f64 = fit.residuals.iter().sum();
            prop_assert!(inner.abs() < 1e-8);
        }

        #[test]
        fn rss_never_increases_when_a_column_is_added(
            x1 in proptest::collection::vec(-5.0f64..5.0, 20),
            x2 in proptest::collection::vec(-5.0f64..5.0, 20),
            y in proptest::collection::vec(-5.0f64..5.0, 20),
        ) {
            let small = DesignMatrix::raw(vec!["x1".into()], vec![x1.clone()], y.clone());
            let big = DesignMatrix::raw(
                vec!["x1".into(), "x2".into()],
                vec![x1, x2],
                y,
            );
            prop_assume!(small.is_ok() && big.is_ok());
            let fit_small = ols(&small.unwrap());
            let fit_big = ols(&big.unwrap());
            prop_assume!(fit_small.is_ok() && fit_big.is_ok());
            prop_assert!(fit_big.unwrap().rss <= fit_small.unwrap().rss + 1e-9);
        }
    }
}
