//! Baseline-adjusted mean trajectory curves for the top and bottom tertiles
//! of responders on one feature.

use serde::Serialize;

use super::{InferenceError, SubjectData};
use crate::assess::FeatureName;
use crate::util::{kahan_sum_iter, mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TertileGroup {
    Top,
    Bottom,
}

impl TertileGroup {
    pub fn label(&self) -> &'static str {
        match self {
            TertileGroup::Top => "top",
            TertileGroup::Bottom => "bottom",
        }
    }
}

/// Mean adjusted-PCL curve for one tertile group on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TertileSeries {
    pub feature: FeatureName,
    pub group: TertileGroup,
    /// `(t_years, mean adjusted PCL)` pairs.
    pub points: Vec<(f64, f64)>,
    pub group_size: usize,
    pub member_ids: Vec<String>,
}

/// Splits trajectory-eligible responders into top / bottom ⌈N/3⌉ groups on a
/// feature and returns each group's mean adjusted trajectory.
///
/// Adjustment: pooled post-interview PCL observations are regressed on the
/// subject's baseline PCL (one cohort-wide simple regression); each subject's
/// fitted line minus its baseline prediction is the adjusted line, evaluated
/// on a uniform grid from 0 to the cohort's longest follow-up. Ranking ties
/// break on responder id.
pub fn tertile_trajectories(
    rows: &[SubjectData],
    feature: FeatureName,
    grid_size: usize,
) -> Result<(TertileSeries, TertileSeries), InferenceError> {
    let used: Vec<&SubjectData> = rows.iter().filter(|r| r.trajectory.is_some()).collect();
    let n = used.len();
    if n < 6 {
        return Err(InferenceError::SampleTooSmall { n, min: 6 });
    }
    if grid_size < 2 {
        return Err(InferenceError::Domain(
            "tertile grid needs at least 2 points".into(),
        ));
    }

    // cohort-wide regression of pooled observations on baseline PCL
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in &used {
        for obs in &r.trajectory.as_ref().unwrap().observations {
            xs.push(r.baseline_pcl);
            ys.push(obs.pcl);
        }
    }
    let x_bar = mean(&xs);
    let y_bar = mean(&ys);
    let sxx = kahan_sum_iter(xs.iter().map(|x| (x - x_bar) * (x - x_bar)));
    if sxx == 0.0 {
        return Err(InferenceError::ConstantColumn("baseline_pcl".into()));
    }
    let sxy = kahan_sum_iter(xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)));
    let c1 = sxy / sxx;
    let c0 = y_bar - c1 * x_bar;

    // rank by feature score, ties broken by responder id
    let mut ranked: Vec<&SubjectData> = used.clone();
    ranked.sort_by(|a, b| {
        a.score(feature)
            .total_cmp(&b.score(feature))
            .then_with(|| a.responder_id.cmp(&b.responder_id))
    });
    let k = n.div_ceil(3);
    let bottom: Vec<&SubjectData> = ranked[..k].to_vec();
    let top: Vec<&SubjectData> = ranked[n - k..].to_vec();

    let t_max = used
        .iter()
        .flat_map(|r| r.trajectory.as_ref().unwrap().observations.iter())
        .map(|o| o.t)
        .fold(0.0f64, f64::max);
    let grid: Vec<f64> = (0..grid_size)
        .map(|g| t_max * g as f64 / (grid_size - 1) as f64)
        .collect();

    let series = |members: &[&SubjectData], group: TertileGroup| {
        let points = grid
            .iter()
            .map(|&t| {
                let total = kahan_sum_iter(members.iter().map(|r| {
                    let traj = r.trajectory.as_ref().unwrap();
                    (traj.intercept + traj.slope * t) - (c0 + c1 * r.baseline_pcl)
                }));
                (t, total / members.len() as f64)
            })
            .collect();
        TertileSeries {
            feature,
            group,
            points,
            group_size: members.len(),
            member_ids: members.iter().map(|r| r.responder_id.clone()).collect(),
        }
    };

    Ok((
        series(&top, TertileGroup::Top),
        series(&bottom, TertileGroup::Bottom),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::TrajectoryData;
    use crate::trajectory::TimedScore;

    fn subject(id: &str, feature_score: f64, baseline: f64, slope: f64) -> SubjectData {
        let intercept = baseline;
        let observations = (1..=4)
            .map(|i| TimedScore {
                t: i as f64,
                pcl: intercept + slope * i as f64,
            })
            .collect();
        let mut scores = [0.0; 9];
        scores[FeatureName::FirstPersonPlural.index()] = feature_score;
        SubjectData {
            responder_id: id.into(),
            scores,
            baseline_pcl: baseline,
            age: 50.0,
            female: 0.0,
            police: 0.0,
            years_since_event: 10.0,
            married: Some(1.0),
            trajectory: Some(TrajectoryData {
                slope,
                intercept,
                observations,
            }),
        }
    }

    #[test]
    fn six_subjects_make_disjoint_pairs_of_two() {
        let rows: Vec<SubjectData> = (0..6)
            .map(|i| subject(&format!("r{i}"), i as f64, 30.0 + i as f64, 0.5))
            .collect();
        let (top, bottom) = tertile_trajectories(&rows, FeatureName::FirstPersonPlural, 5).unwrap();
        assert_eq!(top.group_size, 2);
        assert_eq!(bottom.group_size, 2);
        assert_eq!(top.member_ids, vec!["r4", "r5"]);
        assert_eq!(bottom.member_ids, vec!["r0", "r1"]);
        assert_eq!(top.points.len(), 5);
    }

    #[test]
    fn feature_tied_to_slope_separates_groups() {
        // high feature -> rising trajectories, low feature -> falling
        let rows: Vec<SubjectData> = (0..9)
            .map(|i| {
                let f = i as f64 / 8.0;
                subject(&format!("r{i}"), f, 30.0 + (i % 4) as f64, 4.0 * (f - 0.5))
            })
            .collect();
        let (top, bottom) = tertile_trajectories(&rows, FeatureName::FirstPersonPlural, 9).unwrap();
        let top_end = top.points.last().unwrap().1;
        let bottom_end = bottom.points.last().unwrap().1;
        assert!(
            top_end > bottom_end + 1.0,
            "top {top_end} vs bottom {bottom_end}"
        );
        // at t = 0 the adjusted curves start near each other
        assert!((top.points[0].1 - bottom.points[0].1).abs() < 1.0);
    }

    #[test]
    fn ranking_ties_break_on_responder_id() {
        let rows: Vec<SubjectData> = (0..6)
            .map(|i| subject(&format!("r{i}"), 1.0, 30.0 + i as f64, 0.0))
            .collect();
        let (top, bottom) = tertile_trajectories(&rows, FeatureName::FirstPersonPlural, 3).unwrap();
        assert_eq!(bottom.member_ids, vec!["r0", "r1"]);
        assert_eq!(top.member_ids, vec!["r4", "r5"]);
    }

    #[test]
    fn too_few_subjects_error() {
        let rows: Vec<SubjectData> = (0..5)
            .map(|i| subject(&format!("r{i}"), i as f64, 30.0, 0.0))
            .collect();
        assert!(matches!(
            tertile_trajectories(&rows, FeatureName::FirstPersonPlural, 5),
            Err(InferenceError::SampleTooSmall { n: 5, min: 6 })
        ));
    }
}
