//! Cohort ingestion: transcripts, symptom-score (PCL) records, demographics,
//! baseline selection, and inclusion criteria.
//!
//! File formats:
//! - transcripts: line-delimited JSON, one record per responder:
//!   `{"responder_id": "...", "interview_date": "YYYY-MM-DD",
//!     "utterances": [{"t": 12.5, "speaker": "responder", "text": "..."}]}`
//! - PCL records: CSV with header `responder_id,date,pcl`
//! - demographics: CSV with header `responder_id,age,gender,police,marital_status`

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Calendar anchor for the years-since-event covariate.
pub const EVENT_DATE: NaiveDate = match NaiveDate::from_ymd_opt(2001, 9, 11) {
    Some(d) => d,
    None => unreachable!(),
};

/// Maximum distance, in days, between a baseline PCL record and the
/// interview ("within two years").
pub const BASELINE_WINDOW_DAYS: i64 = 730;

/// Minimum days from interview to the latest post-interview record for
/// trajectory eligibility ("at least two years after the interview").
pub const FOLLOW_UP_MIN_DAYS: i64 = 730;

/// DSM-IV PCL bounds: 17 items scored 1–5.
pub const PCL_MIN: f64 = 17.0;
pub const PCL_MAX: f64 = 85.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate responder_id {id}")]
    DuplicateResponder { id: String },
    #[error("line {line}: {field} out of range: {message}")]
    InvalidValue {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("no PCL record within {BASELINE_WINDOW_DAYS} days of the interview for {id}")]
    NoBaseline { id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Responder,
    Interviewer,
}

/// One timed speech turn within an interview.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    /// Seconds from interview start; non-negative.
    pub t: f64,
    pub speaker: Speaker,
    pub text: String,
}

/// One responder's interview transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub responder_id: String,
    pub interview_date: NaiveDate,
    /// Sorted non-decreasing by `t` after parsing.
    pub utterances: Vec<Utterance>,
}

impl Transcript {
    /// Responder-speaker utterances only; interviewer turns never feed
    /// feature extraction.
    pub fn responder_utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.utterances
            .iter()
            .filter(|u| u.speaker == Speaker::Responder)
    }

    /// Years between the event anchor and the interview (365.25-day years).
    pub fn years_since_event(&self) -> f64 {
        (self.interview_date - EVENT_DATE).num_days() as f64 / 365.25
    }
}

/// A dated symptom-severity score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PclRecord {
    pub responder_id: String,
    pub date: NaiveDate,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaritalStatus {
    Married,
    NotMarried,
    Unknown,
}

/// Per-responder covariates. `years_since_911`-style offsets are derived
/// from the interview date rather than stored, so they can never disagree
/// with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub responder_id: String,
    pub age_at_interview: f64,
    pub gender: Gender,
    pub occupation_police: bool,
    pub marital_status: MaritalStatus,
}

/// Eligibility summary for one responder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectSample {
    pub responder_id: String,
    /// Closest-in-time PCL record within the baseline window, if any.
    pub baseline: Option<PclRecord>,
    pub pre_interview_count: usize,
    pub post_interview_count: usize,
    pub has_demographics: bool,
    pub eligible_concurrent: bool,
    pub eligible_trajectory: bool,
}

/// Inclusion summary for a whole cohort, in transcript input order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSample {
    pub subjects: Vec<SubjectSample>,
}

impl AnalysisSample {
    pub fn concurrent_count(&self) -> usize {
        self.subjects
            .iter()
            .filter(|s| s.eligible_concurrent)
            .count()
    }

    pub fn trajectory_count(&self) -> usize {
        self.subjects
            .iter()
            .filter(|s| s.eligible_trajectory)
            .count()
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parses line-delimited transcript records.
///
/// Utterances are sorted non-decreasing by start time. Duplicate responder
/// ids, missing fields, and negative start times are hard errors naming the
/// offending line.
pub fn parse_transcripts<R: BufRead>(reader: R) -> Result<Vec<Transcript>, IngestError> {
    let mut transcripts = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut transcript: Transcript =
            serde_json::from_str(&line).map_err(|e| IngestError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        if transcript.responder_id.is_empty() {
            return Err(IngestError::Malformed {
                line: line_no,
                message: "empty responder_id".into(),
            });
        }
        if !seen.insert(transcript.responder_id.clone()) {
            return Err(IngestError::DuplicateResponder {
                id: transcript.responder_id,
            });
        }
        for u in &transcript.utterances {
            if !u.t.is_finite() || u.t < 0.0 {
                return Err(IngestError::InvalidValue {
                    line: line_no,
                    field: "t",
                    message: format!("start time {} must be finite and >= 0", u.t),
                });
            }
        }
        transcript.utterances.sort_by(|a, b| a.t.total_cmp(&b.t));
        transcripts.push(transcript);
    }
    Ok(transcripts)
}

/// Serializes transcripts in the line-delimited format read by
/// [`parse_transcripts`].
pub fn write_transcripts<W: Write>(
    mut writer: W,
    transcripts: &[Transcript],
) -> std::io::Result<()> {
    for t in transcripts {
        serde_json::to_writer(&mut writer, t)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct PclRow {
    responder_id: String,
    date: NaiveDate,
    pcl: f64,
}

/// Parses the `responder_id,date,pcl` table. Scores outside [17, 85] are
/// hard errors (likely data corruption).
pub fn parse_pcl_records<R: std::io::Read>(reader: R) -> Result<Vec<PclRecord>, IngestError> {
    let mut out = Vec::new();
    let mut csv_reader = csv::Reader::from_reader(reader);
    for (idx, row) in csv_reader.deserialize::<PclRow>().enumerate() {
        let line = idx + 2; // header is line 1
        let row = row.map_err(|e| IngestError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if !(PCL_MIN..=PCL_MAX).contains(&row.pcl) {
            return Err(IngestError::InvalidValue {
                line,
                field: "pcl",
                message: format!("score {} outside [{PCL_MIN}, {PCL_MAX}]", row.pcl),
            });
        }
        out.push(PclRecord {
            responder_id: row.responder_id,
            date: row.date,
            score: row.pcl,
        });
    }
    Ok(out)
}

pub fn write_pcl_records<W: Write>(writer: W, records: &[PclRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(PclRow {
            responder_id: r.responder_id.clone(),
            date: r.date,
            pcl: r.score,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize, Serialize)]
struct DemographicsRow {
    responder_id: String,
    age: f64,
    gender: String,
    police: u8,
    marital_status: String,
}

/// Parses the `responder_id,age,gender,police,marital_status` table.
pub fn parse_demographics<R: std::io::Read>(reader: R) -> Result<Vec<Demographics>, IngestError> {
    let mut out = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut csv_reader = csv::Reader::from_reader(reader);
    for (idx, row) in csv_reader.deserialize::<DemographicsRow>().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| IngestError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if !row.age.is_finite() || row.age <= 0.0 {
            return Err(IngestError::InvalidValue {
                line,
                field: "age",
                message: format!("age {} must be positive", row.age),
            });
        }
        let gender = match row.gender.as_str() {
            "male" => Gender::Male,
            "female" => Gender::Female,
            other => {
                return Err(IngestError::InvalidValue {
                    line,
                    field: "gender",
                    message: format!("expected male|female, got {other:?}"),
                })
            }
        };
        let marital_status = match row.marital_status.as_str() {
            "married" => MaritalStatus::Married,
            "not_married" => MaritalStatus::NotMarried,
            "unknown" => MaritalStatus::Unknown,
            other => {
                return Err(IngestError::InvalidValue {
                    line,
                    field: "marital_status",
                    message: format!("expected married|not_married|unknown, got {other:?}"),
                })
            }
        };
        if !seen.insert(row.responder_id.clone()) {
            return Err(IngestError::DuplicateResponder {
                id: row.responder_id,
            });
        }
        out.push(Demographics {
            responder_id: row.responder_id,
            age_at_interview: row.age,
            gender,
            occupation_police: row.police != 0,
            marital_status,
        });
    }
    Ok(out)
}

pub fn write_demographics<W: Write>(
    writer: W,
    demographics: &[Demographics],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for d in demographics {
        w.serialize(DemographicsRow {
            responder_id: d.responder_id.clone(),
            age: d.age_at_interview,
            gender: match d.gender {
                Gender::Male => "male".into(),
                Gender::Female => "female".into(),
            },
            police: u8::from(d.occupation_police),
            marital_status: match d.marital_status {
                MaritalStatus::Married => "married".into(),
                MaritalStatus::NotMarried => "not_married".into(),
                MaritalStatus::Unknown => "unknown".into(),
            },
        })?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Baseline selection and inclusion
// ---------------------------------------------------------------------------

/// Selects the PCL record closest to the interview date, provided the gap
/// is at most [`BASELINE_WINDOW_DAYS`]. Ties on the gap go to the earlier
/// (pre-interview) record; remaining ties break on score so the result is
/// permutation-invariant.
pub fn select_baseline_pcl(
    records: &[PclRecord],
    interview_date: NaiveDate,
) -> Result<PclRecord, IngestError> {
    records
        .iter()
        .filter_map(|r| {
            let gap = (r.date - interview_date).num_days().abs();
            (gap <= BASELINE_WINDOW_DAYS).then_some((gap, r))
        })
        .min_by(|(ga, a), (gb, b)| {
            ga.cmp(gb)
                .then_with(|| a.date.cmp(&b.date))
                .then_with(|| a.score.total_cmp(&b.score))
        })
        .map(|(_, r)| r.clone())
        .ok_or_else(|| IngestError::NoBaseline {
            id: records
                .first()
                .map(|r| r.responder_id.clone())
                .unwrap_or_default(),
        })
}

/// Applies the cohort inclusion criteria.
///
/// - concurrent: a baseline exists and at least one record is strictly
///   pre-interview;
/// - trajectory: concurrent, at least three strictly post-interview records,
///   and the latest of them at least [`FOLLOW_UP_MIN_DAYS`] after the
///   interview.
///
/// A responder with a transcript but no PCL records is flagged ineligible,
/// not treated as an error.
pub fn apply_inclusion_criteria(
    transcripts: &[Transcript],
    pcl_records: &[PclRecord],
    demographics: &[Demographics],
) -> AnalysisSample {
    let mut by_responder: BTreeMap<&str, Vec<&PclRecord>> = BTreeMap::new();
    for r in pcl_records {
        by_responder.entry(&r.responder_id).or_default().push(r);
    }
    let demo_ids: BTreeSet<&str> = demographics
        .iter()
        .map(|d| d.responder_id.as_str())
        .collect();

    let subjects = transcripts
        .iter()
        .map(|t| {
            let records: Vec<PclRecord> = by_responder
                .get(t.responder_id.as_str())
                .map(|rs| rs.iter().map(|r| (*r).clone()).collect())
                .unwrap_or_default();

            let baseline = select_baseline_pcl(&records, t.interview_date).ok();
            let pre_interview_count = records.iter().filter(|r| r.date < t.interview_date).count();
            let post: Vec<&PclRecord> = records
                .iter()
                .filter(|r| r.date > t.interview_date)
                .collect();
            let latest_post_gap = post
                .iter()
                .map(|r| (r.date - t.interview_date).num_days())
                .max()
                .unwrap_or(0);

            let eligible_concurrent = baseline.is_some() && pre_interview_count >= 1;
            let eligible_trajectory =
                eligible_concurrent && post.len() >= 3 && latest_post_gap >= FOLLOW_UP_MIN_DAYS;

            SubjectSample {
                responder_id: t.responder_id.clone(),
                baseline,
                pre_interview_count,
                post_interview_count: post.len(),
                has_demographics: demo_ids.contains(t.responder_id.as_str()),
                eligible_concurrent,
                eligible_trajectory,
            }
        })
        .collect();

    AnalysisSample { subjects }
}
