//! Joint growth model: per-subject intercepts with person-level predictors
//! entering through slope interactions.
//!
//! The model is `pcl_it = b0_i + (a0 + a1*x1_i + ... + ak*xk_i) * t + e_it`,
//! estimated as one OLS with subject indicator columns plus `t` and `x*t`
//! interaction columns (no global intercept; the indicators span it). The
//! person-level predictors are standardized across subjects, so `a1` is in
//! PCL-per-year units per SD of the feature.

use super::linalg::{ols_with, standardize_named, DesignMatrix};
use super::{Covariate, InferenceError, SubjectData};
use crate::assess::FeatureName;

/// Estimated slope-interaction coefficient for one feature.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct JointEffect {
    pub feature: FeatureName,
    /// PCL units per year, per SD of the feature.
    pub alpha1: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p: f64,
    pub n_subjects: usize,
    pub n_observations: usize,
}

/// Fits the joint model once per feature, with the given covariates also
/// interacting with time.
pub fn joint_model(
    rows: &[SubjectData],
    covariates: &[Covariate],
) -> Result<Vec<JointEffect>, InferenceError> {
    FeatureName::ALL
        .iter()
        .map(|f| joint_model_feature(rows, *f, covariates))
        .collect()
}

/// Fits the joint model for a single feature.
pub fn joint_model_feature(
    rows: &[SubjectData],
    feature: FeatureName,
    covariates: &[Covariate],
) -> Result<JointEffect, InferenceError> {
    let used: Vec<&SubjectData> = rows
        .iter()
        .filter(|r| r.trajectory.is_some() && covariates.iter().all(|c| c.value(r).is_some()))
        .collect();
    let n_subjects = used.len();
    if n_subjects < 3 {
        return Err(InferenceError::SampleTooSmall {
            n: n_subjects,
            min: 3,
        });
    }
    let thin: Vec<String> = used
        .iter()
        .filter(|r| r.trajectory.as_ref().unwrap().observations.len() < 2)
        .map(|r| format!("subject:{}", r.responder_id))
        .collect();
    if !thin.is_empty() {
        return Err(InferenceError::SingularDesign { columns: thin });
    }

    // standardized person-level predictors, one value per subject
    let feature_std = standardize_named(
        &used.iter().map(|r| r.score(feature)).collect::<Vec<f64>>(),
        feature.key(),
    )?;
    let mut cov_std: Vec<Vec<f64>> = Vec::with_capacity(covariates.len());
    for cov in covariates {
        cov_std.push(standardize_named(
            &used
                .iter()
                .map(|r| cov.value(r).unwrap())
                .collect::<Vec<f64>>(),
            cov.name(),
        )?);
    }

    let n_obs: usize = used
        .iter()
        .map(|r| r.trajectory.as_ref().unwrap().observations.len())
        .sum();

    let mut names: Vec<String> = Vec::with_capacity(n_subjects + 2 + covariates.len());
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for r in &used {
        names.push(format!("subject:{}", r.responder_id));
        columns.push(vec![0.0; n_obs]);
    }
    names.push("t".to_string());
    let feature_col_name = format!("{}*t", feature.key());
    names.push(feature_col_name.clone());
    for cov in covariates {
        names.push(format!("{}*t", cov.name()));
    }
    columns.extend(std::iter::repeat_with(|| vec![0.0; n_obs]).take(2 + covariates.len()));
    let mut outcome = vec![0.0; n_obs];

    let t_col = n_subjects;
    let feature_col = n_subjects + 1;
    let mut row_idx = 0;
    for (subject_idx, r) in used.iter().enumerate() {
        let traj = r.trajectory.as_ref().unwrap();
        for obs in &traj.observations {
            columns[subject_idx][row_idx] = 1.0;
            columns[t_col][row_idx] = obs.t;
            columns[feature_col][row_idx] = feature_std[subject_idx] * obs.t;
            for (c, cov_values) in cov_std.iter().enumerate() {
                columns[feature_col + 1 + c][row_idx] = cov_values[subject_idx] * obs.t;
            }
            outcome[row_idx] = obs.pcl;
            row_idx += 1;
        }
    }

    let design = DesignMatrix::raw(names, columns, outcome)?;
    let fit = ols_with(&design, false)?;
    let idx = fit.index_of(&feature_col_name).expect("interaction column");
    let ci = fit.confidence_interval(idx, 0.95);

    Ok(JointEffect {
        feature,
        alpha1: fit.coefficients[idx],
        se: fit.standard_errors[idx],
        ci_low: ci.0,
        ci_high: ci.1,
        p: fit.p_values[idx],
        n_subjects,
        n_observations: n_obs,
    })
}
