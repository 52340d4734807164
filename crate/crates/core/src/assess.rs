//! The nine language-based assessments per responder: four trait scores,
//! three function-word category scores, and two meta features.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract_ngrams, meta_features, tokenize, FeatureMode, Token};
use crate::ingest::Transcript;
use crate::models::{apply_trait_model, score_categories, score_topics, ModelBundle, TraitName};
use crate::PIPELINE_VERSION;

/// Token counts below these thresholds trigger reliability warnings; the
/// responder is still assessed.
pub const LOW_DATA_TOKENS: u64 = 200;
pub const VERY_LOW_DATA_TOKENS: u64 = 50;

#[derive(Debug, Error)]
pub enum AssessError {
    #[error("responder {id} has no responder-speaker tokens")]
    EmptySpeech { id: String },
    #[error("no responder could be assessed")]
    CohortEmpty,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("assessment table parse error at line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// The fixed nine-assessment set, in the canonical reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureName {
    Anxiety,
    Depression,
    Neuroticism,
    Extraversion,
    FirstPersonSingular,
    FirstPersonPlural,
    Articles,
    AvgWordLength,
    WordCount,
}

impl FeatureName {
    pub const ALL: [FeatureName; 9] = [
        FeatureName::Anxiety,
        FeatureName::Depression,
        FeatureName::Neuroticism,
        FeatureName::Extraversion,
        FeatureName::FirstPersonSingular,
        FeatureName::FirstPersonPlural,
        FeatureName::Articles,
        FeatureName::AvgWordLength,
        FeatureName::WordCount,
    ];

    /// Stable machine-readable identifier (column names, config keys).
    pub fn key(&self) -> &'static str {
        match self {
            FeatureName::Anxiety => "anxiety",
            FeatureName::Depression => "depression",
            FeatureName::Neuroticism => "neuroticism",
            FeatureName::Extraversion => "extraversion",
            FeatureName::FirstPersonSingular => "first_person_singular",
            FeatureName::FirstPersonPlural => "first_person_plural",
            FeatureName::Articles => "articles",
            FeatureName::AvgWordLength => "avg_word_length",
            FeatureName::WordCount => "word_count",
        }
    }

    /// Human-readable label used in rendered tables.
    pub fn label(&self) -> &'static str {
        match self {
            FeatureName::Anxiety => "Anxiety",
            FeatureName::Depression => "Depression",
            FeatureName::Neuroticism => "Neuroticism",
            FeatureName::Extraversion => "Extraversion",
            FeatureName::FirstPersonSingular => "First-Person Singular",
            FeatureName::FirstPersonPlural => "First-Person Plural",
            FeatureName::Articles => "Articles",
            FeatureName::AvgWordLength => "AVG Word Length",
            FeatureName::WordCount => "Word Count",
        }
    }

    pub fn from_key(key: &str) -> Option<FeatureName> {
        FeatureName::ALL.into_iter().find(|f| f.key() == key)
    }

    pub(crate) fn index(&self) -> usize {
        FeatureName::ALL.iter().position(|f| f == self).unwrap()
    }
}

impl std::fmt::Display for FeatureName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// The nine scores for one responder.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentRecord {
    pub responder_id: String,
    scores: [f64; 9],
}

impl AssessmentRecord {
    pub fn new(responder_id: String, scores: [f64; 9]) -> AssessmentRecord {
        AssessmentRecord {
            responder_id,
            scores,
        }
    }

    pub fn score(&self, feature: FeatureName) -> f64 {
        self.scores[feature.index()]
    }

    pub fn word_count(&self) -> u64 {
        self.score(FeatureName::WordCount) as u64
    }
}

/// Per-responder records plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentTable {
    pub records: Vec<AssessmentRecord>,
    pub bundle_id: String,
    pub pipeline_version: String,
}

impl AssessmentTable {
    pub fn get(&self, responder_id: &str) -> Option<&AssessmentRecord> {
        self.records.iter().find(|r| r.responder_id == responder_id)
    }

    /// Median of the word-count column (cohort descriptive statistic).
    pub fn median_word_count(&self) -> f64 {
        let mut counts: Vec<f64> = self
            .records
            .iter()
            .map(|r| r.score(FeatureName::WordCount))
            .collect();
        if counts.is_empty() {
            return 0.0;
        }
        counts.sort_by(f64::total_cmp);
        let mid = counts.len() / 2;
        if counts.len().is_multiple_of(2) {
            (counts[mid - 1] + counts[mid]) / 2.0
        } else {
            counts[mid]
        }
    }
}

/// A non-fatal event recorded while assessing a cohort.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentIssue {
    pub responder_id: String,
    pub kind: IssueKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    /// No responder-speaker tokens; the responder was excluded.
    EmptySpeechExcluded,
    /// Fewer tokens than the reliability floor; assessed with a warning.
    LowData { words: u64 },
    /// Fewer than [`VERY_LOW_DATA_TOKENS`] tokens; assessed, hard-flagged.
    VeryLowData { words: u64 },
}

/// Scores one responder: tokenize -> n-grams -> topics/categories/traits,
/// plus meta features. Fails only when the responder never speaks.
pub fn assess_responder(
    transcript: &Transcript,
    bundle: &ModelBundle,
) -> Result<AssessmentRecord, AssessError> {
    let utterance_tokens: Vec<Vec<Token>> = transcript
        .responder_utterances()
        .map(|u| tokenize(&u.text))
        .collect();
    let flat: Vec<Token> = utterance_tokens.iter().flatten().cloned().collect();
    if flat.is_empty() {
        return Err(AssessError::EmptySpeech {
            id: transcript.responder_id.clone(),
        });
    }

    let features = extract_ngrams(
        &utterance_tokens,
        bundle.max_ngram_order(),
        FeatureMode::RelativeFrequency,
    );
    let topic_scores = score_topics(&features, bundle.topics());
    let categories = score_categories(&features, bundle.lexicon());
    let meta = meta_features(&flat);

    let category = |name: &str| categories.get(name).copied().unwrap_or(0.0);
    let trait_score =
        |name: TraitName| apply_trait_model(&features, &topic_scores, bundle.trait_model(name));

    let scores = [
        trait_score(TraitName::Anxiety),
        trait_score(TraitName::Depression),
        trait_score(TraitName::Neuroticism),
        trait_score(TraitName::Extraversion),
        category("first_person_singular"),
        category("first_person_plural"),
        category("articles"),
        meta.avg_word_length,
        meta.word_count as f64,
    ];

    Ok(AssessmentRecord::new(
        transcript.responder_id.clone(),
        scores,
    ))
}

/// Scores a whole cohort in parallel. Output order equals input order and is
/// independent of the worker count; per-responder failures are collected as
/// issues rather than aborting the run.
pub fn assess_cohort(
    transcripts: &[Transcript],
    bundle: &ModelBundle,
) -> Result<(AssessmentTable, Vec<AssessmentIssue>), AssessError> {
    let outcomes: Vec<Result<AssessmentRecord, AssessError>> = transcripts
        .par_iter()
        .map(|t| assess_responder(t, bundle))
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    let mut issues = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(record) => {
                let words = record.word_count();
                if words < VERY_LOW_DATA_TOKENS {
                    issues.push(AssessmentIssue {
                        responder_id: record.responder_id.clone(),
                        kind: IssueKind::VeryLowData { words },
                    });
                } else if words < LOW_DATA_TOKENS {
                    issues.push(AssessmentIssue {
                        responder_id: record.responder_id.clone(),
                        kind: IssueKind::LowData { words },
                    });
                }
                records.push(record);
            }
            Err(AssessError::EmptySpeech { id }) => issues.push(AssessmentIssue {
                responder_id: id,
                kind: IssueKind::EmptySpeechExcluded,
            }),
            Err(other) => return Err(other),
        }
    }
    if records.is_empty() {
        return Err(AssessError::CohortEmpty);
    }
    Ok((
        AssessmentTable {
            records,
            bundle_id: bundle.id().to_string(),
            pipeline_version: PIPELINE_VERSION.to_string(),
        },
        issues,
    ))
}

// ---------------------------------------------------------------------------
// Table export / import
// ---------------------------------------------------------------------------

/// Writes the table as CSV with provenance header comments.
pub fn write_assessment_table<W: Write>(
    mut writer: W,
    table: &AssessmentTable,
) -> std::io::Result<()> {
    writeln!(writer, "# bundle_id: {}", table.bundle_id)?;
    writeln!(writer, "# pipeline_version: {}", table.pipeline_version)?;
    let mut header = vec!["responder_id".to_string()];
    header.extend(FeatureName::ALL.iter().map(|f| f.key().to_string()));
    writeln!(writer, "{}", header.join(","))?;
    for record in &table.records {
        let mut row = vec![record.responder_id.clone()];
        for f in FeatureName::ALL {
            row.push(format_score(record.score(f)));
        }
        writeln!(writer, "{}", row.join(","))?;
    }
    Ok(())
}

fn format_score(v: f64) -> String {
    // shortest representation that round-trips f64
    let mut buf = ryu_format(v);
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_format(v: f64) -> String {
    let s = format!("{v:?}");
    if s == "-0.0" {
        "0".to_string()
    } else {
        s
    }
}

/// Reads a table written by [`write_assessment_table`].
pub fn read_assessment_table<R: BufRead>(reader: R) -> Result<AssessmentTable, AssessError> {
    let mut bundle_id = String::new();
    let mut pipeline_version = String::new();
    let mut records = Vec::new();
    let mut saw_header = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(rest) = comment.trim().strip_prefix("bundle_id:") {
                bundle_id = rest.trim().to_string();
            } else if let Some(rest) = comment.trim().strip_prefix("pipeline_version:") {
                pipeline_version = rest.trim().to_string();
            }
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(AssessError::Malformed {
                line: line_no,
                message: format!("expected 10 columns, found {}", fields.len()),
            });
        }
        let mut scores = [0.0; 9];
        for (i, raw) in fields[1..].iter().enumerate() {
            scores[i] = raw.parse().map_err(|e| AssessError::Malformed {
                line: line_no,
                message: format!("bad number {raw:?}: {e}"),
            })?;
        }
        records.push(AssessmentRecord::new(fields[0].to_string(), scores));
    }

    Ok(AssessmentTable {
        records,
        bundle_id,
        pipeline_version,
    })
}
