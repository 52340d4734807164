//! Language-based assessment of interview transcripts and longitudinal
//! symptom-trajectory analysis.
//!
//! The crate covers the full pipeline:
//!
//! 1. [`ingest`] — parse transcripts, symptom-score (PCL) records, and
//!    demographics; select baseline scores and apply inclusion criteria.
//! 2. [`features`] — tokenize responder speech into 1–3-gram relative
//!    frequencies, binary indicators, and meta features.
//! 3. [`models`] — load and apply scoring artifacts: categorical lexica,
//!    topic models, and pre-trained linear trait models.
//! 4. [`assess`] — produce the nine language-based assessments per responder.
//! 5. [`trajectory`] — fit per-subject post-interview PCL slopes.
//! 6. [`inference`] — standardized OLS with covariates, Pearson correlations
//!    with Fisher-z intervals, a joint growth model, BH-FDR correction,
//!    suppression/mediation scans, and tertile trajectory curves.
//! 7. [`report`] — render association tables and tertile plot data/SVG.
//! 8. [`synth`] — generate synthetic cohorts with planted effects, the
//!    independent oracle for end-to-end validation.
//! 9. [`pipeline`] — declarative run configuration and the one-shot
//!    end-to-end pipeline with a reproducibility manifest.
//!
//! All computation is deterministic: fixed-order accumulation, explicit
//! seeds, and no wall-clock dependence in any output artifact.

pub mod assess;
pub mod features;
pub mod inference;
pub mod ingest;
pub mod models;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod trajectory;

mod util;

/// Version string embedded in assessment tables and run manifests.
pub const PIPELINE_VERSION: &str = env!("CARGO_PKG_VERSION");
