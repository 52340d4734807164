//! Statistical estimation: standardization, covariate-adjusted OLS, Pearson
//! correlations with Fisher-z intervals, the joint growth model, BH-FDR
//! correction, suppression and mediation scans, and tertile curves.

mod corr;
mod fdr;
mod joint;
mod linalg;
mod tertiles;

pub use corr::{fisher_ci, pearson_r, r_p_value, Correlation, Z_95};
pub use fdr::bh_adjust;
pub use joint::{joint_model, JointEffect};
pub use linalg::{ols, ols_with, standardize, standardize_named, t_quantile, DesignMatrix, OlsFit};
pub use tertiles::{tertile_trajectories, TertileGroup, TertileSeries};

use serde::Serialize;
use thiserror::Error;

use crate::assess::{AssessmentTable, FeatureName};
use crate::ingest::{AnalysisSample, Demographics, Gender, MaritalStatus, PclRecord, Transcript};
use crate::trajectory::{compute_time_offsets, TimedScore, TrajectoryFit};

/// Smallest sample any association analysis will run on.
pub const MIN_ANALYSIS_N: usize = 10;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("constant column: {0}")]
    ConstantColumn(String),
    #[error("singular design; dependent columns: {columns:?}")]
    SingularDesign { columns: Vec<String> },
    #[error("sample too small: {n} rows, need at least {min}")]
    SampleTooSmall { n: usize, min: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// One analysis-ready responder row: the nine assessment scores joined with
/// outcome and covariate data.
#[derive(Debug, Clone)]
pub struct SubjectData {
    pub responder_id: String,
    scores: [f64; 9],
    pub baseline_pcl: f64,
    pub age: f64,
    /// 1.0 = female, 0.0 = male.
    pub female: f64,
    /// 1.0 = police occupation.
    pub police: f64,
    pub years_since_event: f64,
    /// 1.0 = married, 0.0 = not married, `None` = unknown.
    pub married: Option<f64>,
    /// Present only for trajectory-eligible responders.
    pub trajectory: Option<TrajectoryData>,
}

/// Post-interview panel and fitted line for one responder.
#[derive(Debug, Clone)]
pub struct TrajectoryData {
    pub slope: f64,
    pub intercept: f64,
    pub observations: Vec<TimedScore>,
}

impl SubjectData {
    pub fn score(&self, feature: FeatureName) -> f64 {
        self.scores[feature.index()]
    }

    pub fn slope(&self) -> Option<f64> {
        self.trajectory.as_ref().map(|t| t.slope)
    }
}

/// Which outcome an analysis predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Baseline (interview-time) PCL score; the cross-sectional analyses.
    BaselinePcl,
    /// Fitted post-interview slope; the trajectory analyses.
    Slope,
}

impl Outcome {
    fn value(&self, row: &SubjectData) -> Option<f64> {
        match self {
            Outcome::BaselinePcl => Some(row.baseline_pcl),
            Outcome::Slope => row.slope(),
        }
    }
}

/// Adjustment covariates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    Age,
    Gender,
    Occupation,
    YearsSinceEvent,
    InterviewPcl,
    MaritalStatus,
}

impl Covariate {
    pub fn name(&self) -> &'static str {
        match self {
            Covariate::Age => "age",
            Covariate::Gender => "gender",
            Covariate::Occupation => "occupation",
            Covariate::YearsSinceEvent => "years_since_event",
            Covariate::InterviewPcl => "interview_pcl",
            Covariate::MaritalStatus => "marital_status",
        }
    }

    fn value(&self, row: &SubjectData) -> Option<f64> {
        match self {
            Covariate::Age => Some(row.age),
            Covariate::Gender => Some(row.female),
            Covariate::Occupation => Some(row.police),
            Covariate::YearsSinceEvent => Some(row.years_since_event),
            Covariate::InterviewPcl => Some(row.baseline_pcl),
            Covariate::MaritalStatus => row.married,
        }
    }
}

/// Covariate set for the cross-sectional analyses.
pub const CONCURRENT_COVARIATES: [Covariate; 4] = [
    Covariate::Age,
    Covariate::Gender,
    Covariate::Occupation,
    Covariate::YearsSinceEvent,
];

/// Covariate set for the trajectory analyses (adds interview PCL).
pub const TRAJECTORY_COVARIATES: [Covariate; 5] = [
    Covariate::Age,
    Covariate::Gender,
    Covariate::Occupation,
    Covariate::YearsSinceEvent,
    Covariate::InterviewPcl,
];

/// Single-covariate columns of the suppression scan, in table order.
pub const SUPPRESSION_COLUMNS: [Covariate; 5] = [
    Covariate::Occupation,
    Covariate::Gender,
    Covariate::YearsSinceEvent,
    Covariate::InterviewPcl,
    Covariate::Age,
];

/// A point estimate with confidence interval and (FDR-adjusted) p-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectEstimate {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_raw: f64,
    pub p_adj: f64,
    pub significant: bool,
}

impl EffectEstimate {
    fn new(estimate: f64, ci: (f64, f64), p_raw: f64) -> EffectEstimate {
        EffectEstimate {
            estimate,
            ci_low: ci.0,
            ci_high: ci.1,
            p_raw,
            p_adj: p_raw,
            significant: false,
        }
    }
}

/// Per-feature inference output: the unadjusted correlation and the
/// covariate-adjusted standardized coefficient, each with its own
/// FDR-adjusted significance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationResult {
    pub feature: FeatureName,
    pub outcome: Outcome,
    pub n: usize,
    pub r: EffectEstimate,
    pub beta: EffectEstimate,
}

/// Builds analysis rows by joining assessments, inclusion flags,
/// demographics, and trajectory fits.
///
/// Rows are produced for concurrent-eligible responders that have both an
/// assessment record and demographics; missing covariates beyond that are
/// handled listwise per analysis.
pub struct CohortArtifacts<'a> {
    pub transcripts: &'a [Transcript],
    pub assessments: &'a AssessmentTable,
    pub sample: &'a AnalysisSample,
    pub demographics: &'a [Demographics],
    pub pcl_records: &'a [PclRecord],
    pub fits: &'a [TrajectoryFit],
}

pub fn assemble_subjects(artifacts: &CohortArtifacts) -> Vec<SubjectData> {
    let demo_by_id = |id: &str| artifacts.demographics.iter().find(|d| d.responder_id == id);
    let fit_by_id = |id: &str| artifacts.fits.iter().find(|f| f.responder_id == id);
    let transcript_by_id = |id: &str| artifacts.transcripts.iter().find(|t| t.responder_id == id);

    artifacts
        .sample
        .subjects
        .iter()
        .filter(|s| s.eligible_concurrent)
        .filter_map(|subject| {
            let id = subject.responder_id.as_str();
            let record = artifacts.assessments.get(id)?;
            let demo = demo_by_id(id)?;
            let transcript = transcript_by_id(id)?;
            let baseline = subject.baseline.as_ref()?;

            let trajectory = if subject.eligible_trajectory {
                fit_by_id(id).map(|fit| {
                    let post: Vec<PclRecord> = artifacts
                        .pcl_records
                        .iter()
                        .filter(|r| r.responder_id == id)
                        .cloned()
                        .collect();
                    TrajectoryData {
                        slope: fit.slope,
                        intercept: fit.intercept,
                        observations: compute_time_offsets(&post, transcript.interview_date),
                    }
                })
            } else {
                None
            };

            let mut scores = [0.0; 9];
            for f in FeatureName::ALL {
                scores[f.index()] = record.score(f);
            }

            Some(SubjectData {
                responder_id: id.to_string(),
                scores,
                baseline_pcl: baseline.score,
                age: demo.age_at_interview,
                female: f64::from(demo.gender == Gender::Female),
                police: f64::from(demo.occupation_police),
                years_since_event: transcript.years_since_event(),
                married: match demo.marital_status {
                    MaritalStatus::Married => Some(1.0),
                    MaritalStatus::NotMarried => Some(0.0),
                    MaritalStatus::Unknown => None,
                },
                trajectory,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Association analyses
// ---------------------------------------------------------------------------

/// Listwise-filters rows for one analysis.
fn complete_rows<'a>(
    rows: &'a [SubjectData],
    outcome: Outcome,
    covariates: &[Covariate],
) -> Vec<&'a SubjectData> {
    rows.iter()
        .filter(|row| {
            outcome.value(row).is_some() && covariates.iter().all(|c| c.value(row).is_some())
        })
        .collect()
}

/// The covariate-adjusted standardized coefficient of one feature.
fn adjusted_beta(
    used: &[&SubjectData],
    feature: FeatureName,
    outcome: Outcome,
    covariates: &[Covariate],
) -> Result<EffectEstimate, InferenceError> {
    let mut names = vec![feature.key().to_string()];
    let mut columns = vec![used.iter().map(|r| r.score(feature)).collect::<Vec<f64>>()];
    for cov in covariates {
        names.push(cov.name().to_string());
        columns.push(used.iter().map(|r| cov.value(r).unwrap()).collect());
    }
    let outcome_values: Vec<f64> = used.iter().map(|r| outcome.value(r).unwrap()).collect();

    let design = DesignMatrix::standardized(names, columns, outcome_values)?;
    let fit = ols(&design)?;
    let idx = fit.index_of(feature.key()).expect("feature column present");
    Ok(EffectEstimate::new(
        fit.coefficients[idx],
        fit.confidence_interval(idx, 0.95),
        fit.p_values[idx],
    ))
}

/// Runs the r and β analyses for every feature against one outcome, then
/// FDR-adjusts each family of nine across features (the r and β columns are
/// separate families).
pub fn feature_associations(
    rows: &[SubjectData],
    outcome: Outcome,
    covariates: &[Covariate],
    alpha: f64,
) -> Result<Vec<AssociationResult>, InferenceError> {
    let used = complete_rows(rows, outcome, covariates);
    let n = used.len();
    if n < MIN_ANALYSIS_N {
        return Err(InferenceError::SampleTooSmall {
            n,
            min: MIN_ANALYSIS_N,
        });
    }
    let outcome_values: Vec<f64> = used.iter().map(|r| outcome.value(r).unwrap()).collect();

    let mut results = Vec::with_capacity(FeatureName::ALL.len());
    for feature in FeatureName::ALL {
        let feature_values: Vec<f64> = used.iter().map(|r| r.score(feature)).collect();
        let correlation = pearson_r(&feature_values, &outcome_values)?;
        let r = EffectEstimate::new(correlation.r, correlation.ci, correlation.p);
        let beta = adjusted_beta(&used, feature, outcome, covariates)?;
        results.push(AssociationResult {
            feature,
            outcome,
            n,
            r,
            beta,
        });
    }

    let r_adj = bh_adjust(&results.iter().map(|a| a.r.p_raw).collect::<Vec<f64>>())?;
    let beta_adj = bh_adjust(&results.iter().map(|a| a.beta.p_raw).collect::<Vec<f64>>())?;
    for (result, (rp, bp)) in results.iter_mut().zip(r_adj.into_iter().zip(beta_adj)) {
        result.r.p_adj = rp;
        result.r.significant = rp < alpha;
        result.beta.p_adj = bp;
        result.beta.significant = bp < alpha;
    }
    Ok(results)
}

/// Cross-sectional associations: feature vs baseline PCL, adjusted for age,
/// gender, occupation, and years since the event.
pub fn concurrent_associations(
    rows: &[SubjectData],
    alpha: f64,
) -> Result<Vec<AssociationResult>, InferenceError> {
    feature_associations(rows, Outcome::BaselinePcl, &CONCURRENT_COVARIATES, alpha)
}

/// Trajectory associations: feature vs fitted slope, additionally adjusted
/// for the interview (baseline) PCL.
pub fn trajectory_associations(
    rows: &[SubjectData],
    alpha: f64,
) -> Result<Vec<AssociationResult>, InferenceError> {
    feature_associations(rows, Outcome::Slope, &TRAJECTORY_COVARIATES, alpha)
}

// ---------------------------------------------------------------------------
// Suppression scan
// ---------------------------------------------------------------------------

/// One feature's suppression profile: unadjusted r, the β under each single
/// covariate, and the fully adjusted β.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuppressionRow {
    pub feature: FeatureName,
    pub n: usize,
    pub unadjusted: EffectEstimate,
    /// One entry per [`SUPPRESSION_COLUMNS`] covariate, in that order.
    pub single_covariate: Vec<(Covariate, EffectEstimate)>,
    pub fully_adjusted: EffectEstimate,
}

/// Suppression scan for one feature against the trajectory outcome.
///
/// Rows are filtered on the full covariate set so every model in the row
/// sees the same sample. Adjusted p-values equal raw ones here; FDR across
/// features is applied by [`suppression_table`].
pub fn suppression_scan(
    rows: &[SubjectData],
    feature: FeatureName,
) -> Result<SuppressionRow, InferenceError> {
    let used = complete_rows(rows, Outcome::Slope, &TRAJECTORY_COVARIATES);
    let n = used.len();
    if n < MIN_ANALYSIS_N {
        return Err(InferenceError::SampleTooSmall {
            n,
            min: MIN_ANALYSIS_N,
        });
    }
    let outcome_values: Vec<f64> = used
        .iter()
        .map(|r| Outcome::Slope.value(r).unwrap())
        .collect();
    let feature_values: Vec<f64> = used.iter().map(|r| r.score(feature)).collect();

    let correlation = pearson_r(&feature_values, &outcome_values)?;
    let unadjusted = EffectEstimate::new(correlation.r, correlation.ci, correlation.p);

    let mut single_covariate = Vec::with_capacity(SUPPRESSION_COLUMNS.len());
    for cov in SUPPRESSION_COLUMNS {
        let beta = adjusted_beta(&used, feature, Outcome::Slope, &[cov])?;
        single_covariate.push((cov, beta));
    }
    let fully_adjusted = adjusted_beta(&used, feature, Outcome::Slope, &TRAJECTORY_COVARIATES)?;

    Ok(SuppressionRow {
        feature,
        n,
        unadjusted,
        single_covariate,
        fully_adjusted,
    })
}

/// Suppression rows for all nine features with BH-FDR applied per column
/// (each column across the nine features is one family).
pub fn suppression_table(
    rows: &[SubjectData],
    alpha: f64,
) -> Result<Vec<SuppressionRow>, InferenceError> {
    let mut table: Vec<SuppressionRow> = FeatureName::ALL
        .iter()
        .map(|f| suppression_scan(rows, *f))
        .collect::<Result<_, _>>()?;

    let adjust_column =
        |cells: Vec<&mut EffectEstimate>, alpha: f64| -> Result<(), InferenceError> {
            let raw: Vec<f64> = cells.iter().map(|c| c.p_raw).collect();
            let adjusted = bh_adjust(&raw)?;
            for (cell, adj) in cells.into_iter().zip(adjusted) {
                cell.p_adj = adj;
                cell.significant = adj < alpha;
            }
            Ok(())
        };

    adjust_column(table.iter_mut().map(|r| &mut r.unadjusted).collect(), alpha)?;
    for i in 0..SUPPRESSION_COLUMNS.len() {
        adjust_column(
            table
                .iter_mut()
                .map(|r| &mut r.single_covariate[i].1)
                .collect(),
            alpha,
        )?;
    }
    adjust_column(
        table.iter_mut().map(|r| &mut r.fully_adjusted).collect(),
        alpha,
    )?;
    Ok(table)
}

// ---------------------------------------------------------------------------
// Marital-status mediation
// ---------------------------------------------------------------------------

/// β with and without marital status in the covariate set, on the identical
/// marital-known sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediationResult {
    pub feature: FeatureName,
    pub outcome: Outcome,
    pub n: usize,
    pub without_marital: EffectEstimate,
    pub with_marital: EffectEstimate,
}

/// Compares the covariate-adjusted β before and after adding marital status.
/// Responders with unknown status are dropped from both models, so the pair
/// shares one sample.
pub fn marital_mediation(
    rows: &[SubjectData],
    feature: FeatureName,
    outcome: Outcome,
    covariates: &[Covariate],
) -> Result<MediationResult, InferenceError> {
    let mut with_marital_covs = covariates.to_vec();
    with_marital_covs.push(Covariate::MaritalStatus);

    let used = complete_rows(rows, outcome, &with_marital_covs);
    let n = used.len();
    if n < MIN_ANALYSIS_N {
        return Err(InferenceError::SampleTooSmall {
            n,
            min: MIN_ANALYSIS_N,
        });
    }

    let without_marital = adjusted_beta(&used, feature, outcome, covariates)?;
    let with_marital = adjusted_beta(&used, feature, outcome, &with_marital_covs)?;
    Ok(MediationResult {
        feature,
        outcome,
        n,
        without_marital,
        with_marital,
    })
}

/// Mediation rows for all nine features, FDR-adjusted per column.
pub fn mediation_table(
    rows: &[SubjectData],
    outcome: Outcome,
    alpha: f64,
) -> Result<Vec<MediationResult>, InferenceError> {
    let covariates: &[Covariate] = match outcome {
        Outcome::BaselinePcl => &CONCURRENT_COVARIATES,
        Outcome::Slope => &TRAJECTORY_COVARIATES,
    };
    let mut table: Vec<MediationResult> = FeatureName::ALL
        .iter()
        .map(|f| marital_mediation(rows, *f, outcome, covariates))
        .collect::<Result<_, _>>()?;

    let without_adj = bh_adjust(
        &table
            .iter()
            .map(|r| r.without_marital.p_raw)
            .collect::<Vec<f64>>(),
    )?;
    let with_adj = bh_adjust(
        &table
            .iter()
            .map(|r| r.with_marital.p_raw)
            .collect::<Vec<f64>>(),
    )?;
    for (row, (wo, wi)) in table.iter_mut().zip(without_adj.into_iter().zip(with_adj)) {
        row.without_marital.p_adj = wo;
        row.without_marital.significant = wo < alpha;
        row.with_marital.p_adj = wi;
        row.with_marital.significant = wi < alpha;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    fn normal(rng: &mut StdRng) -> f64 {
        StandardNormal.sample(rng)
    }

    /// Builds a synthetic row set where features are independent noise except
    /// for controllable links to the two outcomes.
    fn toy_rows(
        n: usize,
        seed: u64,
        baseline_link: f64, // depression -> baseline (SD units)
        slope_link: f64,    // first-person plural -> slope (SD units)
    ) -> Vec<SubjectData> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let mut scores = [0.0; 9];
                for s in scores.iter_mut() {
                    *s = normal(&mut rng);
                }
                let baseline_noise: f64 = normal(&mut rng);
                let slope_noise: f64 = normal(&mut rng);
                let baseline = 35.0
                    + 10.0
                        * (baseline_link * scores[FeatureName::Depression.index()]
                            + (1.0 - baseline_link * baseline_link).sqrt() * baseline_noise);
                let slope = 2.0
                    * (slope_link * scores[FeatureName::FirstPersonPlural.index()]
                        + (1.0 - slope_link * slope_link).sqrt() * slope_noise);
                SubjectData {
                    responder_id: format!("r{i:04}"),
                    scores,
                    baseline_pcl: baseline,
                    age: 45.0 + 8.0 * normal(&mut rng),
                    female: f64::from(rng.random_bool(0.1)),
                    police: f64::from(rng.random_bool(0.5)),
                    years_since_event: 9.0 + 6.0 * rng.random::<f64>(),
                    married: Some(f64::from(rng.random_bool(0.6))),
                    trajectory: Some(TrajectoryData {
                        slope,
                        intercept: baseline,
                        observations: vec![
                            TimedScore {
                                t: 1.0,
                                pcl: baseline + slope,
                            },
                            TimedScore {
                                t: 2.0,
                                pcl: baseline + 2.0 * slope,
                            },
                            TimedScore {
                                t: 3.0,
                                pcl: baseline + 3.0 * slope,
                            },
                        ],
                    }),
                }
            })
            .collect()
    }

    #[test]
    fn planted_cross_sectional_effect_is_recovered_significant() {
        let rows = toy_rows(400, 7, 0.5, 0.0);
        let results = concurrent_associations(&rows, 0.05).unwrap();
        let dep = results
            .iter()
            .find(|a| a.feature == FeatureName::Depression)
            .unwrap();
        assert!(dep.beta.estimate > 0.35, "beta = {}", dep.beta.estimate);
        assert!(dep.beta.significant);
        assert!(dep.r.significant);
    }

    #[test]
    fn feature_equal_to_outcome_has_r_one() {
        let mut rows = toy_rows(50, 11, 0.0, 0.0);
        for row in &mut rows {
            rows_set_score(row, FeatureName::Anxiety, row.baseline_pcl);
        }
        let results = concurrent_associations(&rows, 0.05).unwrap();
        let anx = results
            .iter()
            .find(|a| a.feature == FeatureName::Anxiety)
            .unwrap();
        assert!((anx.r.estimate - 1.0).abs() < 1e-12);
    }

    fn rows_set_score(row: &mut SubjectData, feature: FeatureName, value: f64) {
        row.scores[feature.index()] = value;
    }

    #[test]
    fn covariate_free_beta_equals_r() {
        let rows = toy_rows(120, 3, 0.3, -0.4);
        let results = feature_associations(&rows, Outcome::Slope, &[], 0.05).unwrap();
        for a in &results {
            assert!(
                (a.beta.estimate - a.r.estimate).abs() < 1e-10,
                "{}: beta {} vs r {}",
                a.feature,
                a.beta.estimate,
                a.r.estimate
            );
        }
    }

    #[test]
    fn sample_too_small_is_reported() {
        let rows = toy_rows(6, 1, 0.0, 0.0);
        assert!(matches!(
            concurrent_associations(&rows, 0.05),
            Err(InferenceError::SampleTooSmall { .. })
        ));
    }

    #[test]
    fn affine_feature_transform_preserves_inference() {
        let rows = toy_rows(150, 23, 0.4, -0.3);
        let base = trajectory_associations(&rows, 0.05).unwrap();

        let mut scaled_rows = rows.clone();
        for row in &mut scaled_rows {
            let v = row.score(FeatureName::FirstPersonPlural);
            rows_set_score(row, FeatureName::FirstPersonPlural, 3.0 * v + 11.0);
        }
        let scaled = trajectory_associations(&scaled_rows, 0.05).unwrap();
        let a = base
            .iter()
            .find(|x| x.feature == FeatureName::FirstPersonPlural)
            .unwrap();
        let b = scaled
            .iter()
            .find(|x| x.feature == FeatureName::FirstPersonPlural)
            .unwrap();
        assert!((a.r.estimate - b.r.estimate).abs() < 1e-9);
        assert!((a.beta.estimate - b.beta.estimate).abs() < 1e-9);
        assert!((a.beta.p_raw - b.beta.p_raw).abs() < 1e-9);

        // negative scaling flips the sign of r and beta only
        let mut flipped_rows = rows.clone();
        for row in &mut flipped_rows {
            let v = row.score(FeatureName::FirstPersonPlural);
            rows_set_score(row, FeatureName::FirstPersonPlural, -2.0 * v);
        }
        let flipped = trajectory_associations(&flipped_rows, 0.05).unwrap();
        let c = flipped
            .iter()
            .find(|x| x.feature == FeatureName::FirstPersonPlural)
            .unwrap();
        assert!((a.r.estimate + c.r.estimate).abs() < 1e-9);
        assert!((a.beta.estimate + c.beta.estimate).abs() < 1e-9);
        assert!((a.beta.p_raw - c.beta.p_raw).abs() < 1e-9);
    }

    #[test]
    fn suppression_fully_adjusted_matches_trajectory_beta() {
        let rows = toy_rows(200, 5, 0.2, -0.35);
        let table = suppression_table(&rows, 0.05).unwrap();
        let assoc = trajectory_associations(&rows, 0.05).unwrap();
        for (s, a) in table.iter().zip(&assoc) {
            assert_eq!(s.feature, a.feature);
            assert!((s.fully_adjusted.estimate - a.beta.estimate).abs() < 1e-10);
        }
    }

    #[test]
    fn null_single_covariate_beta_stays_near_r() {
        // all covariates independent of everything: single-covariate beta
        // should sit close to the raw correlation
        let rows = toy_rows(500, 13, 0.0, -0.4);
        let row = suppression_scan(&rows, FeatureName::FirstPersonPlural).unwrap();
        for (cov, beta) in &row.single_covariate {
            assert!(
                (beta.estimate - row.unadjusted.estimate).abs() < 0.05,
                "{}: {} vs {}",
                cov.name(),
                beta.estimate,
                row.unadjusted.estimate
            );
        }
    }

    #[test]
    fn mediation_pair_shares_sample_and_null_marital_changes_little() {
        let mut rows = toy_rows(300, 17, 0.3, -0.3);
        // a few unknown marital statuses must drop from both models
        for row in rows.iter_mut().take(20) {
            row.married = None;
        }
        let result = marital_mediation(
            &rows,
            FeatureName::Depression,
            Outcome::BaselinePcl,
            &CONCURRENT_COVARIATES,
        )
        .unwrap();
        assert_eq!(result.n, 280);
        assert!(
            (result.without_marital.estimate - result.with_marital.estimate).abs() < 0.05,
            "{} vs {}",
            result.without_marital.estimate,
            result.with_marital.estimate
        );
    }

    #[test]
    fn mediation_with_fully_determining_marital_status_attenuates() {
        let mut rows = toy_rows(300, 29, 0.0, 0.0);
        // plant: anxiety is a noisy copy of marital status, and marital
        // status drives the baseline outcome
        let mut rng = StdRng::seed_from_u64(91);
        for row in rows.iter_mut() {
            let married = f64::from(rng.random_bool(0.5));
            row.married = Some(married);
            rows_set_score(row, FeatureName::Anxiety, married + 0.1 * normal(&mut rng));
            row.baseline_pcl = 30.0 + 12.0 * married + 2.0 * normal(&mut rng);
        }
        let result = marital_mediation(
            &rows,
            FeatureName::Anxiety,
            Outcome::BaselinePcl,
            &CONCURRENT_COVARIATES,
        )
        .unwrap();
        assert!(
            result.with_marital.estimate.abs() < 0.5 * result.without_marital.estimate.abs(),
            "{} vs {}",
            result.without_marital.estimate,
            result.with_marital.estimate
        );
    }

    #[test]
    fn listwise_deletion_recomputes_standardization() {
        let rows = toy_rows(60, 37, 0.2, 0.0);
        let full = concurrent_associations(&rows, 0.05).unwrap();
        let mut dropped = rows.clone();
        dropped.remove(0);
        let smaller = concurrent_associations(&dropped, 0.05).unwrap();
        assert_eq!(full[0].n, 60);
        assert_eq!(smaller[0].n, 59);
        // estimates move because means/SDs are recomputed, not cached
        assert_ne!(full[0].r.estimate, smaller[0].r.estimate);
    }
}
