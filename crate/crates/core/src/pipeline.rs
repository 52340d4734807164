//! Declarative run configuration and the one-shot end-to-end pipeline:
//! ingest → assess → trajectory → inference → report, with a
//! reproducibility manifest.
//!
//! Outputs are a pure function of the input files and the configuration: no
//! timestamps, no machine identifiers, fixed-order accumulation throughout.
//! Rerunning the same config on the same inputs is byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assess::{assess_cohort, write_assessment_table, FeatureName};
use crate::inference::{
    assemble_subjects, concurrent_associations, joint_model, mediation_table, suppression_table,
    tertile_trajectories, trajectory_associations, CohortArtifacts, MediationResult, Outcome,
    SuppressionRow, TRAJECTORY_COVARIATES,
};
use crate::ingest::{
    apply_inclusion_criteria, parse_demographics, parse_pcl_records, parse_transcripts,
    AnalysisSample, PclRecord,
};
use crate::models::load_bundle;
use crate::report::{
    render_association_table, render_mediation_table, render_suppression_table, tertile_svg,
    write_association_results, write_tertile_data,
};
use crate::trajectory::{
    compute_time_offsets, fit_subject_trajectory, write_trajectory_table, TrajectoryFit,
};
use crate::PIPELINE_VERSION;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("[{stage}] {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
}

fn stage_err<E: std::fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub transcripts: PathBuf,
    pub pcl: PathBuf,
    pub demographics: PathBuf,
    pub bundle: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisToggles {
    pub concurrent: bool,
    pub trajectory: bool,
    pub suppression: bool,
    pub mediation: bool,
    pub joint: bool,
    pub tertiles: bool,
}

impl Default for AnalysisToggles {
    fn default() -> Self {
        AnalysisToggles {
            concurrent: true,
            trajectory: true,
            suppression: true,
            mediation: true,
            joint: true,
            tertiles: true,
        }
    }
}

fn default_alpha() -> f64 {
    0.05
}

fn default_tertile_features() -> Vec<FeatureName> {
    vec![
        FeatureName::FirstPersonPlural,
        FeatureName::Anxiety,
        FeatureName::AvgWordLength,
    ]
}

fn default_tertile_grid() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: InputPaths,
    #[serde(default)]
    pub analyses: AnalysisToggles,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub out_dir: PathBuf,
    /// Recorded in artifact headers and the manifest when the inputs came
    /// from the simulator.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses the rayon default.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_tertile_features")]
    pub tertile_features: Vec<FeatureName>,
    #[serde(default = "default_tertile_grid")]
    pub tertile_grid: usize,
}

impl RunConfig {
    /// Config rooted at a directory produced by the simulator.
    pub fn for_cohort_dir(dir: &Path, out_dir: &Path) -> RunConfig {
        RunConfig {
            inputs: InputPaths {
                transcripts: dir.join("transcripts.jsonl"),
                pcl: dir.join("pcl.csv"),
                demographics: dir.join("demographics.csv"),
                bundle: dir.join("bundle"),
            },
            analyses: AnalysisToggles::default(),
            alpha: default_alpha(),
            out_dir: out_dir.to_path_buf(),
            seed: None,
            jobs: 0,
            tertile_features: default_tertile_features(),
            tertile_grid: default_tertile_grid(),
        }
    }

    /// Parses a TOML config; relative input/output paths resolve against
    /// `base_dir` (normally the config file's directory).
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<RunConfig, PipelineError> {
        let mut config: RunConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&p);
            }
        };
        anchor(&mut config.inputs.transcripts);
        anchor(&mut config.inputs.pcl);
        anchor(&mut config.inputs.demographics);
        anchor(&mut config.inputs.bundle);
        anchor(&mut config.out_dir);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        RunConfig::from_toml(&text, base)
    }

    /// Validation run before any work: alpha range and input existence.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PipelineError::Config(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if self.tertile_grid < 2 {
            return Err(PipelineError::Config("tertile_grid < 2".into()));
        }
        for (label, path) in [
            ("transcripts", &self.inputs.transcripts),
            ("pcl", &self.inputs.pcl),
            ("demographics", &self.inputs.demographics),
            ("bundle", &self.inputs.bundle),
        ] {
            if !path.exists() {
                return Err(PipelineError::Config(format!(
                    "{label} path {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: String,
}

/// The reproducibility record written at the end of every run (including
/// failed ones, with the artifacts produced so far flagged as partial).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub pipeline_version: String,
    pub status: String,
    pub failed_stage: Option<String>,
    pub alpha: f64,
    pub seed: Option<u64>,
    pub bundle_id: Option<String>,
    pub inputs: Vec<FileDigest>,
    pub artifacts: Vec<FileDigest>,
    pub stages: Vec<StageRecord>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_file(path: &Path) -> std::io::Result<FileDigest> {
    let bytes = fs::read(path)?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Collects artifacts as they are written so the manifest can record them.
struct ArtifactSink {
    out_dir: PathBuf,
    written: Vec<FileDigest>,
}

impl ArtifactSink {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(stage_err("write"))?;
        }
        fs::write(&path, bytes).map_err(stage_err("write"))?;
        self.written.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// Everything the run produced in memory, for callers that keep going after
/// the artifacts are on disk.
#[derive(Debug)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub sample: AnalysisSample,
    pub fits: Vec<TrajectoryFit>,
}

/// Executes the full pipeline per the config. On stage failure the manifest
/// is still written, with the failed stage named and completed artifacts
/// listed.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    if config.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(stage_err("setup"))?;
        pool.install(|| run_stages(config))
    } else {
        run_stages(config)
    }
}

fn run_stages(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    fs::create_dir_all(&config.out_dir).map_err(stage_err("setup"))?;
    let mut sink = ArtifactSink {
        out_dir: config.out_dir.clone(),
        written: Vec::new(),
    };
    let mut stages: Vec<StageRecord> = Vec::new();
    let mut bundle_id = None;

    let inputs = [
        &config.inputs.transcripts,
        &config.inputs.pcl,
        &config.inputs.demographics,
    ]
    .iter()
    .map(|p| digest_file(p))
    .collect::<std::io::Result<Vec<_>>>()
    .map_err(stage_err("setup"))?;

    let result = (|| -> Result<(AnalysisSample, Vec<TrajectoryFit>), PipelineError> {
        // ingest
        let transcripts = {
            let file = fs::File::open(&config.inputs.transcripts).map_err(stage_err("ingest"))?;
            parse_transcripts(std::io::BufReader::new(file)).map_err(stage_err("ingest"))?
        };
        let pcl_records = {
            let file = fs::File::open(&config.inputs.pcl).map_err(stage_err("ingest"))?;
            parse_pcl_records(file).map_err(stage_err("ingest"))?
        };
        let demographics = {
            let file = fs::File::open(&config.inputs.demographics).map_err(stage_err("ingest"))?;
            parse_demographics(file).map_err(stage_err("ingest"))?
        };
        let sample = apply_inclusion_criteria(&transcripts, &pcl_records, &demographics);
        sink.write("sample.csv", &sample_csv(&sample))?;
        stages.push(StageRecord {
            stage: "ingest".into(),
            status: "ok".into(),
        });

        // assess
        let (bundle, warnings) = load_bundle(&config.inputs.bundle).map_err(stage_err("assess"))?;
        for w in &warnings {
            log_info(&format!("bundle warning: {w}"));
        }
        bundle_id = Some(bundle.id().to_string());
        let (assessments, issues) =
            assess_cohort(&transcripts, &bundle).map_err(stage_err("assess"))?;
        for issue in &issues {
            log_info(&format!(
                "assessment issue for {}: {:?}",
                issue.responder_id, issue.kind
            ));
        }
        let mut buf = Vec::new();
        write_assessment_table(&mut buf, &assessments).map_err(stage_err("assess"))?;
        sink.write("assessments.csv", &buf)?;
        stages.push(StageRecord {
            stage: "assess".into(),
            status: "ok".into(),
        });

        // trajectory
        let mut fits = Vec::new();
        for subject in sample.subjects.iter().filter(|s| s.eligible_trajectory) {
            let transcript = transcripts
                .iter()
                .find(|t| t.responder_id == subject.responder_id)
                .expect("sample rows come from transcripts");
            let post: Vec<PclRecord> = pcl_records
                .iter()
                .filter(|r| r.responder_id == subject.responder_id)
                .cloned()
                .collect();
            let offsets = compute_time_offsets(&post, transcript.interview_date);
            let fit = fit_subject_trajectory(&subject.responder_id, &offsets)
                .map_err(stage_err("trajectory"))?;
            fits.push(fit);
        }
        let mut buf = Vec::new();
        write_trajectory_table(&mut buf, &fits).map_err(stage_err("trajectory"))?;
        sink.write("trajectories.csv", &buf)?;
        stages.push(StageRecord {
            stage: "trajectory".into(),
            status: "ok".into(),
        });

        // inference + report
        let rows = assemble_subjects(&CohortArtifacts {
            transcripts: &transcripts,
            assessments: &assessments,
            sample: &sample,
            demographics: &demographics,
            pcl_records: &pcl_records,
            fits: &fits,
        });
        let header = analysis_header(config);

        if config.analyses.concurrent {
            let results =
                concurrent_associations(&rows, config.alpha).map_err(stage_err("analyze"))?;
            let mut buf = Vec::new();
            write_association_results(&mut buf, &results, &header).map_err(stage_err("analyze"))?;
            sink.write("associations_concurrent.csv", &buf)?;
            let table = render_association_table(
                &results,
                "Cross-sectional associations with baseline PCL",
            );
            sink.write("associations_concurrent.txt", table.to_text().as_bytes())?;
        }

        if config.analyses.trajectory {
            let results =
                trajectory_associations(&rows, config.alpha).map_err(stage_err("analyze"))?;
            let mut buf = Vec::new();
            write_association_results(&mut buf, &results, &header).map_err(stage_err("analyze"))?;
            sink.write("associations_trajectory.csv", &buf)?;
            let table =
                render_association_table(&results, "Associations with PCL trajectory slope");
            sink.write("associations_trajectory.txt", table.to_text().as_bytes())?;
        }

        if config.analyses.suppression {
            let table = suppression_table(&rows, config.alpha).map_err(stage_err("analyze"))?;
            sink.write("suppression_trajectory.csv", &suppression_csv(&table))?;
            let rendered =
                render_suppression_table(&table, "Single-covariate suppression scan (slope)");
            sink.write("suppression_trajectory.txt", rendered.to_text().as_bytes())?;
        }

        if config.analyses.mediation {
            for (outcome, name, title) in [
                (
                    Outcome::BaselinePcl,
                    "mediation_concurrent",
                    "Marital-status mediation (baseline PCL)",
                ),
                (
                    Outcome::Slope,
                    "mediation_trajectory",
                    "Marital-status mediation (trajectory slope)",
                ),
            ] {
                let table =
                    mediation_table(&rows, outcome, config.alpha).map_err(stage_err("analyze"))?;
                sink.write(&format!("{name}.csv"), &mediation_csv(&table))?;
                let rendered = render_mediation_table(&table, title);
                sink.write(&format!("{name}.txt"), rendered.to_text().as_bytes())?;
            }
        }

        if config.analyses.joint {
            let effects =
                joint_model(&rows, &TRAJECTORY_COVARIATES).map_err(stage_err("analyze"))?;
            let mut buf = String::new();
            buf.push_str("feature,alpha1,se,ci_low,ci_high,p,n_subjects,n_observations\n");
            for e in &effects {
                writeln!(
                    buf,
                    "{},{:.10},{:.10},{:.10},{:.10},{:.10e},{},{}",
                    e.feature.key(),
                    e.alpha1,
                    e.se,
                    e.ci_low,
                    e.ci_high,
                    e.p,
                    e.n_subjects,
                    e.n_observations
                )
                .expect("string write");
            }
            sink.write("joint_trajectory.csv", buf.as_bytes())?;
        }

        if config.analyses.tertiles {
            for feature in &config.tertile_features {
                let (top, bottom) = tertile_trajectories(&rows, *feature, config.tertile_grid)
                    .map_err(stage_err("analyze"))?;
                let mut buf = Vec::new();
                write_tertile_data(&mut buf, &[&top, &bottom]).map_err(stage_err("report"))?;
                sink.write(&format!("tertiles_{}.csv", feature.key()), &buf)?;
                let svg = tertile_svg(
                    &top,
                    &bottom,
                    &format!("Adjusted PCL trajectories by {} tertile", feature.label()),
                );
                sink.write(&format!("tertiles_{}.svg", feature.key()), svg.as_bytes())?;
            }
        }
        stages.push(StageRecord {
            stage: "analyze".into(),
            status: "ok".into(),
        });

        Ok((sample, fits))
    })();

    let (status, failed_stage, outcome, error) = match result {
        Ok((sample, fits)) => ("ok".to_string(), None, Some((sample, fits)), None),
        Err(e) => {
            let stage_label = match &e {
                PipelineError::Stage { stage, message } => {
                    stages.push(StageRecord {
                        stage: stage.to_string(),
                        status: format!("failed: {message}"),
                    });
                    stage.to_string()
                }
                PipelineError::Config(message) => format!("config: {message}"),
            };
            ("failed".to_string(), Some(stage_label), None, Some(e))
        }
    };

    let manifest = Manifest {
        pipeline_version: PIPELINE_VERSION.to_string(),
        status,
        failed_stage,
        alpha: config.alpha,
        seed: config.seed,
        bundle_id,
        inputs,
        artifacts: sink.written.clone(),
        stages,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).map_err(stage_err("manifest"))?;
    let mut file =
        fs::File::create(config.out_dir.join("manifest.json")).map_err(stage_err("manifest"))?;
    file.write_all(manifest_json.as_bytes())
        .map_err(stage_err("manifest"))?;
    file.write_all(b"\n").map_err(stage_err("manifest"))?;

    match outcome {
        Some((sample, fits)) => Ok(RunOutput {
            manifest,
            sample,
            fits,
        }),
        None => Err(error.expect("failure path carries the error")),
    }
}

fn analysis_header(config: &RunConfig) -> Vec<String> {
    let mut header = vec![
        format!("pipeline_version: {PIPELINE_VERSION}"),
        format!("alpha: {}", config.alpha),
        format!(
            "inputs: {}, {}, {}, {}",
            config.inputs.transcripts.display(),
            config.inputs.pcl.display(),
            config.inputs.demographics.display(),
            config.inputs.bundle.display()
        ),
    ];
    if let Some(seed) = config.seed {
        header.push(format!("seed: {seed}"));
    }
    header
}

fn sample_csv(sample: &AnalysisSample) -> Vec<u8> {
    let mut out = String::from(
        "responder_id,baseline_date,baseline_pcl,pre_interview_count,post_interview_count,has_demographics,eligible_concurrent,eligible_trajectory\n",
    );
    for s in &sample.subjects {
        let (date, score) = match &s.baseline {
            Some(b) => (b.date.to_string(), format!("{}", b.score)),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.responder_id,
            date,
            score,
            s.pre_interview_count,
            s.post_interview_count,
            s.has_demographics,
            s.eligible_concurrent,
            s.eligible_trajectory
        )
        .expect("string write");
    }
    out.into_bytes()
}

fn effect_fields(e: &crate::inference::EffectEstimate) -> String {
    format!(
        "{:.10},{:.10},{:.10},{:.10e},{:.10e},{}",
        e.estimate, e.ci_low, e.ci_high, e.p_raw, e.p_adj, e.significant
    )
}

fn suppression_csv(rows: &[SuppressionRow]) -> Vec<u8> {
    let mut out = String::from("feature,n,model,estimate,ci_low,ci_high,p_raw,p_adj,significant\n");
    for row in rows {
        writeln!(
            out,
            "{},{},unadjusted_r,{}",
            row.feature.key(),
            row.n,
            effect_fields(&row.unadjusted)
        )
        .expect("string write");
        for (cov, e) in &row.single_covariate {
            writeln!(
                out,
                "{},{},{},{}",
                row.feature.key(),
                row.n,
                cov.name(),
                effect_fields(e)
            )
            .expect("string write");
        }
        writeln!(
            out,
            "{},{},fully_adjusted,{}",
            row.feature.key(),
            row.n,
            effect_fields(&row.fully_adjusted)
        )
        .expect("string write");
    }
    out.into_bytes()
}

fn mediation_csv(rows: &[MediationResult]) -> Vec<u8> {
    let mut out = String::from("feature,n,model,estimate,ci_low,ci_high,p_raw,p_adj,significant\n");
    for row in rows {
        writeln!(
            out,
            "{},{},without_marital,{}",
            row.feature.key(),
            row.n,
            effect_fields(&row.without_marital)
        )
        .expect("string write");
        writeln!(
            out,
            "{},{},with_marital,{}",
            row.feature.key(),
            row.n,
            effect_fields(&row.with_marital)
        )
        .expect("string write");
    }
    out.into_bytes()
}

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

/// Log level read once from `LANGTRAJ_LOG` (quiet | info | debug).
fn log_level() -> u8 {
    use std::sync::OnceLock;
    static LEVEL: OnceLock<u8> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("LANGTRAJ_LOG").as_deref() {
        Ok("quiet") => 0,
        Ok("debug") => 2,
        _ => 1,
    })
}

pub(crate) fn log_info(message: &str) {
    if log_level() >= 1 {
        eprintln!("[langtraj] {message}");
    }
}
