//! Per-subject post-interview PCL trajectory slopes via closed-form simple
//! regression of score on years since interview.

use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::PclRecord;
use crate::util::{kahan_sum_iter, mean};

/// Years are 365.25 days throughout: leap-year-stable and within rounding of
/// calendar years.
pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("all time values identical; slope is undefined")]
    DegenerateDesign,
}

/// One post-interview observation: years since interview and the PCL score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimedScore {
    pub t: f64,
    pub pcl: f64,
}

/// Least-squares line through one subject's post-interview scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryFit {
    pub responder_id: String,
    /// PCL units at t = 0.
    pub intercept: f64,
    /// PCL units per year; the subject's symptom trajectory.
    pub slope: f64,
    pub n_points: usize,
    pub rss: f64,
}

/// Converts post-interview records to `(years, score)` pairs, preserving
/// order. Records dated on or before the interview are excluded; they belong
/// to the baseline / pre-interview sets.
pub fn compute_time_offsets(records: &[PclRecord], interview_date: NaiveDate) -> Vec<TimedScore> {
    records
        .iter()
        .filter(|r| r.date > interview_date)
        .map(|r| TimedScore {
            t: (r.date - interview_date).num_days() as f64 / DAYS_PER_YEAR,
            pcl: r.score,
        })
        .collect()
}

/// Fits `pcl = intercept + slope * t` by ordinary least squares.
pub fn fit_subject_trajectory(
    responder_id: &str,
    points: &[TimedScore],
) -> Result<TrajectoryFit, TrajectoryError> {
    if points.len() < 3 {
        return Err(TrajectoryError::TooFewPoints(points.len()));
    }
    let times: Vec<f64> = points.iter().map(|p| p.t).collect();
    let scores: Vec<f64> = points.iter().map(|p| p.pcl).collect();
    let t_bar = mean(&times);
    let y_bar = mean(&scores);

    let s_tt = kahan_sum_iter(times.iter().map(|t| (t - t_bar) * (t - t_bar)));
    if s_tt == 0.0 {
        return Err(TrajectoryError::DegenerateDesign);
    }
    let s_ty = kahan_sum_iter(
        times
            .iter()
            .zip(&scores)
            .map(|(t, y)| (t - t_bar) * (y - y_bar)),
    );

    let slope = s_ty / s_tt;
    let intercept = y_bar - slope * t_bar;
    let rss = kahan_sum_iter(points.iter().map(|p| {
        let r = p.pcl - intercept - slope * p.t;
        r * r
    }));

    Ok(TrajectoryFit {
        responder_id: responder_id.to_string(),
        intercept,
        slope,
        n_points: points.len(),
        rss,
    })
}

/// Writes fits as `responder_id,intercept,slope,n_points,rss`.
pub fn write_trajectory_table<W: Write>(
    writer: W,
    fits: &[TrajectoryFit],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for fit in fits {
        w.serialize(fit)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn points(pairs: &[(f64, f64)]) -> Vec<TimedScore> {
        pairs
            .iter()
            .map(|(t, pcl)| TimedScore { t: *t, pcl: *pcl })
            .collect()
    }

    #[test]
    fn exact_line_has_zero_rss() {
        let fit =
            fit_subject_trajectory("r", &points(&[(1.0, 30.0), (2.0, 32.0), (3.0, 34.0)])).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 28.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn constant_scores_have_zero_slope() {
        let fit =
            fit_subject_trajectory("r", &points(&[(1.0, 40.0), (2.0, 40.0), (3.0, 40.0)])).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn covariance_over_variance_hand_case() {
        // t_bar = 2, y_bar = 32, cov-sum = 1, var-sum = 2 -> slope 0.5, intercept 31
        let fit =
            fit_subject_trajectory("r", &points(&[(1.0, 30.0), (2.0, 35.0), (3.0, 31.0)])).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 31.0).abs() < 1e-12);
    }

    #[test]
    fn identical_times_are_degenerate() {
        let err = fit_subject_trajectory("r", &points(&[(1.0, 30.0), (1.0, 35.0), (1.0, 31.0)]))
            .unwrap_err();
        assert!(matches!(err, TrajectoryError::DegenerateDesign));
    }

    #[test]
    fn too_few_points_rejected() {
        let err = fit_subject_trajectory("r", &points(&[(1.0, 30.0), (2.0, 31.0)])).unwrap_err();
        assert!(matches!(err, TrajectoryError::TooFewPoints(2)));
    }

    fn record(days_after: i64, score: f64) -> PclRecord {
        let interview = NaiveDate::from_ymd_opt(2012, 3, 1).unwrap();
        PclRecord {
            responder_id: "r".into(),
            date: interview + chrono::Duration::days(days_after),
            score,
        }
    }

    #[test]
    fn time_offsets_in_years() {
        let interview = NaiveDate::from_ymd_opt(2012, 3, 1).unwrap();
        // 365.25-day years: 365 days is just shy of 1.0
        let offsets = compute_time_offsets(&[record(365, 30.0)], interview);
        assert!((offsets[0].t - 365.0 / 365.25).abs() < 1e-12);

        let offsets = compute_time_offsets(&[record(548, 30.0)], interview);
        assert!((offsets[0].t - 1.5).abs() < 0.01);
    }

    #[test]
    fn on_interview_date_is_excluded() {
        let interview = NaiveDate::from_ymd_opt(2012, 3, 1).unwrap();
        let offsets = compute_time_offsets(&[record(0, 30.0), record(10, 31.0)], interview);
        assert_eq!(offsets.len(), 1);
        assert!(offsets[0].t > 0.0);
    }

    proptest! {
        #[test]
        fn slope_matches_covariance_variance_oracle(
            raw in proptest::collection::vec((0.01f64..8.0, 17.0f64..85.0), 3..12)
        ) {
            // need at least two distinct times
            let mut pts = points(&raw);
            pts[0].t += 8.5;
            let fit = fit_subject_trajectory("r", &pts).unwrap();

            let n = pts.len() as f64;
            let t_bar: f64 = pts.iter().map(|p| p.t).sum::<f64>() / n;
            let y_bar: f64 = pts.iter().map(|p| p.pcl).sum::<f64>() / n;
            let cov: f64 = pts.iter().map(|p| (p.t - t_bar) * (p.pcl - y_bar)).sum();
            let var: f64 = pts.iter().map(|p| (p.t - t_bar) * (p.t - t_bar)).sum();
            prop_assert!((fit.slope - cov / var).abs() < 1e-10);
        }

        #[test]
        fn time_shift_moves_intercept_not_slope(
            raw in proptest::collection::vec((0.01f64..8.0, 17.0f64..85.0), 3..12),
            shift in -5.0f64..5.0,
        ) {
            let mut pts = points(&raw);
            pts[0].t += 8.5;
            let base = fit_subject_trajectory("r", &pts).unwrap();
            let shifted: Vec<TimedScore> = pts
                .iter()
                .map(|p| TimedScore { t: p.t + shift, pcl: p.pcl })
                .collect();
            let moved = fit_subject_trajectory("r", &shifted).unwrap();
            prop_assert!((moved.slope - base.slope).abs() < 1e-10);
            prop_assert!((moved.intercept - (base.intercept - base.slope * shift)).abs() < 1e-7);
        }

        #[test]
        fn time_scale_divides_slope(
            raw in proptest::collection::vec((0.01f64..8.0, 17.0f64..85.0), 3..12),
            k in prop::sample::select(vec![0.5f64, 2.0, 4.0]),
        ) {
            // powers of two: the rescaling is exact in floating point
            let mut pts = points(&raw);
            pts[0].t += 8.5;
            let base = fit_subject_trajectory("r", &pts).unwrap();
            let scaled: Vec<TimedScore> = pts
                .iter()
                .map(|p| TimedScore { t: p.t * k, pcl: p.pcl })
                .collect();
            let fit = fit_subject_trajectory("r", &scaled).unwrap();
            prop_assert_eq!(fit.slope, base.slope / k);
        }

        #[test]
        fn refitting_with_own_predictions_is_stable(
            raw in proptest::collection::vec((0.01f64..8.0, 17.0f64..85.0), 3..10),
        ) {
            let mut pts = points(&raw);
            pts[0].t += 8.5;
            let base = fit_subject_trajectory("r", &pts).unwrap();
            let mut augmented = pts.clone();
            for t in [0.33, 4.7, 9.1] {
                augmented.push(TimedScore { t, pcl: base.intercept + base.slope * t });
            }
            let refit = fit_subject_trajectory("r", &augmented).unwrap();
            prop_assert!((refit.slope - base.slope).abs() < 1e-9);
            prop_assert!((refit.intercept - base.intercept).abs() < 1e-8);
        }
    }
}
