//! Command-line entry point: simulate, ingest, assess, trajectory, analyze,
//! report, and the one-shot `run` pipeline.
//!
//! Set `LANGTRAJ_LOG=quiet|info|debug` to control log verbosity.

use std::fs;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use langtraj::assess::{assess_cohort, write_assessment_table};
use langtraj::ingest::{
    apply_inclusion_criteria, parse_demographics, parse_pcl_records, parse_transcripts,
};
use langtraj::models::load_bundle;
use langtraj::pipeline::{run_pipeline, RunConfig};
use langtraj::report::{
    read_association_results, read_tertile_series, render_association_table, tertile_svg,
};
use langtraj::synth::{generate_cohort, write_cohort, SynthConfig};
use langtraj::trajectory::{compute_time_offsets, fit_subject_trajectory, write_trajectory_table};

#[derive(Parser)]
#[command(
    name = "langtraj",
    version,
    about = "Language-based assessment and symptom-trajectory analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort with planted effects.
    Simulate {
        /// TOML generator config; omitted fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the generator seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of subjects.
        #[arg(long)]
        subjects: Option<usize>,
        /// Output directory (transcripts.jsonl, pcl.csv, demographics.csv,
        /// bundle/, ground_truth.json).
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse cohort files and report inclusion eligibility.
    Ingest {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        pcl: PathBuf,
        #[arg(long)]
        demographics: PathBuf,
        /// Eligibility table destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score transcripts with a model bundle.
    Assess {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also export the raw 1-3-gram relative-frequency table
        /// (responder_id,order,ngram,value).
        #[arg(long)]
        features_out: Option<PathBuf>,
    },
    /// Fit per-subject post-interview slopes.
    Trajectory {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        pcl: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every analysis on explicit input paths.
    Analyze {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        pcl: PathBuf,
        #[arg(long)]
        demographics: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// FDR significance threshold.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Worker threads (0 = automatic).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Seed recorded in artifact headers (for simulated inputs).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render saved results as a text table or an SVG plot.
    Report {
        /// An associations CSV (table) or tertile plot-data CSV (plot).
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum)]
        format: ReportFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// End-to-end pipeline driven by a TOML run config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Plot,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            subjects,
            out,
        } => simulate(config, seed, subjects, out),
        Command::Ingest {
            transcripts,
            pcl,
            demographics,
            out,
        } => ingest(transcripts, pcl, demographics, out),
        Command::Assess {
            transcripts,
            bundle,
            out,
            features_out,
        } => assess(transcripts, bundle, out, features_out),
        Command::Trajectory {
            transcripts,
            pcl,
            out,
        } => trajectory(transcripts, pcl, out),
        Command::Analyze {
            transcripts,
            pcl,
            demographics,
            bundle,
            out,
            alpha,
            jobs,
            seed,
        } => {
            let config = RunConfig {
                inputs: langtraj::pipeline::InputPaths {
                    transcripts,
                    pcl,
                    demographics,
                    bundle,
                },
                analyses: Default::default(),
                alpha,
                out_dir: out,
                seed,
                jobs,
                tertile_features: vec![
                    langtraj::assess::FeatureName::FirstPersonPlural,
                    langtraj::assess::FeatureName::Anxiety,
                    langtraj::assess::FeatureName::AvgWordLength,
                ],
                tertile_grid: 25,
            };
            execute_pipeline(&config)
        }
        Command::Report {
            results,
            format,
            out,
        } => report(results, format, out),
        Command::Run {
            config,
            out,
            seed,
            alpha,
            jobs,
        } => {
            let mut run_config = RunConfig::load(&config)?;
            if let Some(out) = out {
                run_config.out_dir = out;
            }
            if let Some(seed) = seed {
                run_config.seed = Some(seed);
            }
            if let Some(alpha) = alpha {
                run_config.alpha = alpha;
            }
            if let Some(jobs) = jobs {
                run_config.jobs = jobs;
            }
            execute_pipeline(&run_config)
        }
    }
}

fn execute_pipeline(config: &RunConfig) -> Result<()> {
    let output = run_pipeline(config)?;
    println!(
        "pipeline ok: {} subjects concurrent, {} trajectory",
        output.sample.concurrent_count(),
        output.sample.trajectory_count()
    );
    for artifact in &output.manifest.artifacts {
        println!("  wrote {}", config.out_dir.join(&artifact.path).display());
    }
    println!("  wrote {}", config.out_dir.join("manifest.json").display());
    Ok(())
}

fn simulate(
    config: Option<PathBuf>,
    seed: Option<u64>,
    subjects: Option<usize>,
    out: PathBuf,
) -> Result<()> {
    let mut synth_config = match config {
        Some(path) => {
            let text =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<SynthConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = seed {
        synth_config.seed = seed;
    }
    if let Some(n) = subjects {
        synth_config.n_subjects = n;
    }
    let cohort = generate_cohort(&synth_config)?;
    write_cohort(&out, &cohort)?;
    println!(
        "simulated {} subjects ({} PCL records, clip rate {:.4}) -> {}",
        cohort.transcripts.len(),
        cohort.pcl_records.len(),
        cohort.ground_truth.clip_rate(),
        out.display()
    );
    Ok(())
}

fn ingest(
    transcripts: PathBuf,
    pcl: PathBuf,
    demographics: PathBuf,
    out: Option<PathBuf>,
) -> Result<()> {
    let transcripts = parse_transcripts(BufReader::new(
        fs::File::open(&transcripts).with_context(|| format!("{}", transcripts.display()))?,
    ))?;
    let pcl_records = parse_pcl_records(fs::File::open(&pcl)?)?;
    let demo = parse_demographics(fs::File::open(&demographics)?)?;
    let sample = apply_inclusion_criteria(&transcripts, &pcl_records, &demo);

    let mut table = String::from(
        "responder_id,pre_interview_count,post_interview_count,eligible_concurrent,eligible_trajectory\n",
    );
    for s in &sample.subjects {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            s.responder_id,
            s.pre_interview_count,
            s.post_interview_count,
            s.eligible_concurrent,
            s.eligible_trajectory
        ));
    }
    match out {
        Some(path) => fs::write(&path, table)?,
        None => print!("{table}"),
    }
    eprintln!(
        "{} responders: {} concurrent-eligible, {} trajectory-eligible",
        sample.subjects.len(),
        sample.concurrent_count(),
        sample.trajectory_count()
    );
    Ok(())
}

fn assess(
    transcripts: PathBuf,
    bundle: PathBuf,
    out: PathBuf,
    features_out: Option<PathBuf>,
) -> Result<()> {
    let transcripts = parse_transcripts(BufReader::new(fs::File::open(&transcripts)?))?;
    let (bundle, warnings) = load_bundle(&bundle)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let (table, issues) = assess_cohort(&transcripts, &bundle)?;
    for issue in &issues {
        eprintln!("issue: {} {:?}", issue.responder_id, issue.kind);
    }
    let mut file = fs::File::create(&out)?;
    write_assessment_table(&mut file, &table)?;

    if let Some(path) = features_out {
        use langtraj::features::{extract_ngrams, tokenize, write_feature_table, FeatureMode};
        let mut file = std::io::BufWriter::new(fs::File::create(&path)?);
        writeln!(file, "responder_id,order,ngram,value")?;
        for t in &transcripts {
            let utterances: Vec<_> = t
                .responder_utterances()
                .map(|u| tokenize(&u.text))
                .collect();
            let fv = extract_ngrams(&utterances, 3, FeatureMode::RelativeFrequency);
            write_feature_table(&mut file, &t.responder_id, &fv)?;
        }
        println!("wrote n-gram table -> {}", path.display());
    }
    println!(
        "assessed {} responders -> {}",
        table.records.len(),
        out.display()
    );
    Ok(())
}

fn trajectory(transcripts: PathBuf, pcl: PathBuf, out: PathBuf) -> Result<()> {
    let transcripts = parse_transcripts(BufReader::new(fs::File::open(&transcripts)?))?;
    let pcl_records = parse_pcl_records(fs::File::open(&pcl)?)?;
    let mut fits = Vec::new();
    for t in &transcripts {
        let records: Vec<_> = pcl_records
            .iter()
            .filter(|r| r.responder_id == t.responder_id)
            .cloned()
            .collect();
        let offsets = compute_time_offsets(&records, t.interview_date);
        if offsets.len() < 3 {
            eprintln!(
                "skipping {}: only {} post-interview points",
                t.responder_id,
                offsets.len()
            );
            continue;
        }
        fits.push(fit_subject_trajectory(&t.responder_id, &offsets)?);
    }
    if fits.is_empty() {
        bail!("no responder had enough post-interview records to fit");
    }
    let file = fs::File::create(&out)?;
    write_trajectory_table(file, &fits)?;
    println!("fitted {} trajectories -> {}", fits.len(), out.display());
    Ok(())
}

fn report(results: PathBuf, format: ReportFormat, out: PathBuf) -> Result<()> {
    let file = fs::File::open(&results).with_context(|| format!("{}", results.display()))?;
    let reader = BufReader::new(file);
    match format {
        ReportFormat::Table => {
            let parsed = read_association_results(reader)?;
            if parsed.is_empty() {
                bail!("{} contains no association rows", results.display());
            }
            let title = results
                .file_stem()
                .map(|s| s.to_string_lossy().replace('_', " "))
                .unwrap_or_else(|| "associations".into());
            let table = render_association_table(&parsed, &title);
            let mut file = fs::File::create(&out)?;
            file.write_all(table.to_text().as_bytes())?;
        }
        ReportFormat::Plot => {
            let (top, bottom) = read_tertile_series(reader)?;
            let title = format!(
                "Adjusted PCL trajectories by {} tertile",
                top.feature.label()
            );
            let svg = tertile_svg(&top, &bottom, &title);
            fs::write(&out, svg)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}
