//! Synthetic cohort generation with planted effects.
//!
//! Each subject gets nine independent standard-normal latents, one per
//! language assessment. Latents shift the emission rates of disjoint marker
//! word sets (a filler pool absorbs the slack, so marker rates stay
//! uncoupled), drive total word count and long-word usage, and — through the
//! configured effect sizes — the baseline PCL and the true slope:
//!
//! - baseline latent `u_b = Σ a_f z_f + δ_b ε`, mapped monotonically onto a
//!   moment-matched Beta distribution over [17, 85] (exact support, no
//!   clipping at the baseline itself);
//! - slope `= slope_sd · (Σ g_f z_f + h·u_b + δ_s ε)`, with `a`, `g`, `h`
//!   scaled so both composites are standard normal. `a_f` is the planted
//!   cross-sectional effect, `g_f` the planted longitudinal effect (both in
//!   SD units), `h` a baseline-to-slope path for suppressor scenarios.
//!
//! The PCL panel follows the linear growth model with i.i.d. noise and is
//! clipped to [17, 85]; the clip count is reported so configurations can be
//! checked for cleanliness. Everything derives from per-subject ChaCha12
//! streams keyed by SHA-256(seed, subject index), so generation is
//! byte-identical across runs and platforms and parallel-safe.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{Beta, ContinuousCDF, Normal};
use thiserror::Error;

use crate::assess::FeatureName;
use crate::features::FeatureMode;
use crate::inference::AssociationResult;
use crate::ingest::{
    Demographics, Gender, MaritalStatus, PclRecord, Speaker, Transcript, Utterance, EVENT_DATE,
    PCL_MAX, PCL_MIN,
};
use crate::models::{
    CategoricalLexicon, FeatureRef, ModelBundle, Pattern, TopicModel, TraitModel, TraitName,
    TraitWeight,
};
use crate::trajectory::DAYS_PER_YEAR;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible config: {0}")]
    Config(String),
    #[error(
        "provenance mismatch: ground truth has seed {expected}, results came from seed {found}"
    )]
    Provenance { expected: u64, found: u64 },
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

const FPS_MARKERS: &[&str] = &["i", "i'm", "i've", "me", "my", "mine", "myself"];
const FPP_MARKERS: &[&str] = &["we", "we're", "we've", "us", "our", "ours", "ourselves"];
const ARTICLE_MARKERS: &[&str] = &["the", "a", "an"];
// trait marker sets are kept close to the filler words' mean length so a
// trait latent does not leak into the average-word-length feature
const ANXIETY_MARKERS: &[&str] = &[
    "worried", "tense", "panic", "afraid", "uneasy", "dread", "wary", "edgy", "fear", "shaky",
];
const DEPRESSION_MARKERS: &[&str] = &[
    "sad", "hopeless", "empty", "tired", "numb", "down", "gloomy", "low", "weary", "blue",
];
const NEUROTICISM_MARKERS: &[&str] = &[
    "moody", "upset", "shaken", "cranky", "bitter", "sour", "testy", "grim",
];
const EXTRAVERSION_MARKERS: &[&str] = &[
    "crew", "friends", "social", "lively", "party", "chatty", "bold", "fun",
];
const LONG_MARKERS: &[&str] = &[
    "approximately",
    "infrastructure",
    "responsibility",
    "communication",
    "organization",
    "immediately",
    "environment",
    "coordination",
    "administration",
    "documentation",
];
const FILLER_WORDS: &[&str] = &[
    "went", "there", "was", "then", "day", "site", "work", "people", "time", "saw", "got", "came",
    "back", "still", "things", "smoke", "dust", "debris", "building", "street", "morning", "night",
    "week", "trucks", "boots", "gear", "shift", "crews", "piles", "steel", "river", "south",
    "north", "kept", "going", "looked", "found", "heard", "told", "called", "home", "family",
    "years", "later", "first", "second", "blocks", "walls", "air", "floor",
];
const INTERVIEWER_PROMPTS: &[&str] = &[
    "Can you tell me more about that?",
    "What happened next?",
    "How did that affect you?",
    "Where were you at that point?",
    "And how long did that last?",
    "What do you remember most?",
];

/// A marker set with its base emission rate and the latent that drives it.
struct MarkerSet {
    feature: FeatureName,
    words: &'static [&'static str],
    base_rate: f64,
}

const MARKER_SETS: [MarkerSet; 8] = [
    MarkerSet {
        feature: FeatureName::Anxiety,
        words: ANXIETY_MARKERS,
        base_rate: 0.05,
    },
    MarkerSet {
        feature: FeatureName::Depression,
        words: DEPRESSION_MARKERS,
        base_rate: 0.05,
    },
    MarkerSet {
        feature: FeatureName::Neuroticism,
        words: NEUROTICISM_MARKERS,
        base_rate: 0.04,
    },
    MarkerSet {
        feature: FeatureName::Extraversion,
        words: EXTRAVERSION_MARKERS,
        base_rate: 0.04,
    },
    MarkerSet {
        feature: FeatureName::FirstPersonSingular,
        words: FPS_MARKERS,
        base_rate: 0.06,
    },
    MarkerSet {
        feature: FeatureName::FirstPersonPlural,
        words: FPP_MARKERS,
        base_rate: 0.05,
    },
    MarkerSet {
        feature: FeatureName::Articles,
        words: ARTICLE_MARKERS,
        base_rate: 0.09,
    },
    MarkerSet {
        feature: FeatureName::AvgWordLength,
        words: LONG_MARKERS,
        base_rate: 0.05,
    },
];

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Planted effect sizes for one feature, in SD units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    /// Effect on the baseline PCL composite.
    #[serde(default)]
    pub cross: f64,
    /// Effect on the slope composite.
    #[serde(default)]
    pub long: f64,
}

/// How word counts are produced from the per-subject emission rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionMode {
    /// Multinomial sampling (the realistic default).
    #[default]
    Sampled,
    /// Deterministic rounded expected counts, for noise-free identification
    /// checks.
    Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_subjects: usize,
    pub words_per_subject: usize,
    /// Visits per subject: one pre-interview plus the rest post-interview.
    pub visits_per_subject: usize,
    pub follow_up_years: f64,
    /// Planted effects per feature; absent features are null.
    pub effects: BTreeMap<FeatureName, PlantedEffect>,
    /// Baseline-to-slope path `h` (SD units); negative values plant the
    /// regression-to-the-mean suppressor.
    pub baseline_to_slope: f64,
    pub baseline_mean: f64,
    pub baseline_sd: f64,
    /// SD of the true slope, PCL units per year.
    pub slope_sd: f64,
    /// SD of the per-observation PCL noise.
    pub pcl_noise_sd: f64,
    /// Relative swing of marker emission rates per latent SD.
    pub marker_gain: f64,
    /// Latents are clamped to ±this before entering emission rates.
    pub latent_clamp: f64,
    pub emission: EmissionMode,
    /// Word-count multiplier is exp(spread · z).
    pub word_count_spread: f64,
    pub female_rate: f64,
    pub police_rate: f64,
    pub married_rate: f64,
    pub marital_unknown_rate: f64,
    pub age_mean: f64,
    pub age_sd: f64,
    /// Interview offset from the anchor event, years (uniform range).
    pub interview_years_min: f64,
    pub interview_years_max: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_subjects: 75,
            words_per_subject: 10_000,
            visits_per_subject: 9,
            follow_up_years: 4.0,
            effects: BTreeMap::new(),
            baseline_to_slope: 0.0,
            baseline_mean: 42.0,
            baseline_sd: 9.0,
            slope_sd: 1.5,
            pcl_noise_sd: 1.0,
            marker_gain: 0.35,
            latent_clamp: 2.8,
            emission: EmissionMode::Sampled,
            word_count_spread: 0.15,
            female_rate: 0.10,
            police_rate: 0.49,
            married_rate: 0.60,
            marital_unknown_rate: 0.05,
            age_mean: 53.4,
            age_sd: 9.5,
            interview_years_min: 9.0,
            interview_years_max: 17.0,
        }
    }
}

impl SynthConfig {
    pub fn new(seed: u64, n_subjects: usize) -> SynthConfig {
        SynthConfig {
            seed,
            n_subjects,
            ..SynthConfig::default()
        }
    }

    pub fn with_effect(mut self, feature: FeatureName, cross: f64, long: f64) -> SynthConfig {
        self.effects.insert(feature, PlantedEffect { cross, long });
        self
    }

    /// Two planted longitudinal effects and seven nulls; the standard
    /// recovery scenario.
    pub fn planted_longitudinal(seed: u64, n_subjects: usize) -> SynthConfig {
        SynthConfig::new(seed, n_subjects)
            .with_effect(FeatureName::FirstPersonPlural, 0.0, -0.37)
            .with_effect(FeatureName::Anxiety, 0.0, 0.31)
    }

    /// Anxiety loads on baseline, baseline depresses the slope: the adjusted
    /// coefficient exceeds the raw correlation (suppression).
    pub fn with_suppressor(seed: u64, n_subjects: usize) -> SynthConfig {
        let mut config = SynthConfig::new(seed, n_subjects)
            .with_effect(FeatureName::Anxiety, 0.5, 0.31)
            .with_effect(FeatureName::FirstPersonPlural, 0.0, -0.37);
        config.baseline_to_slope = -0.3;
        config
    }

    /// Baseline distribution matched to the reference cohort moments.
    pub fn baseline_moments(seed: u64, n_subjects: usize) -> SynthConfig {
        let mut config = SynthConfig::new(seed, n_subjects);
        config.baseline_mean = 33.7;
        config.baseline_sd = 16.2;
        config.slope_sd = 0.5;
        config
    }

    fn effect(&self, feature: FeatureName) -> PlantedEffect {
        self.effects.get(&feature).copied().unwrap_or_default()
    }

    /// Expected correlation between a marker feature's assessment score and
    /// its latent, given sampling noise at the configured word volume.
    pub fn expected_marker_correlation(&self, feature: FeatureName) -> Option<f64> {
        let set = MARKER_SETS.iter().find(|s| s.feature == feature)?;
        let signal = set.base_rate * self.marker_gain;
        let noise_var = set.base_rate * (1.0 - set.base_rate) / self.words_per_subject as f64;
        Some(signal / (signal * signal + noise_var).sqrt())
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.n_subjects < 6 {
            return Err(SynthError::Config(format!(
                "n_subjects {} < 6",
                self.n_subjects
            )));
        }
        if self.visits_per_subject < 4 {
            return Err(SynthError::Config(format!(
                "visits_per_subject {} < 4 (need 1 pre + 3 post)",
                self.visits_per_subject
            )));
        }
        if self.words_per_subject < 200 {
            return Err(SynthError::Config("words_per_subject < 200".into()));
        }
        if self.follow_up_years < 2.1 {
            return Err(SynthError::Config(
                "follow_up_years < 2.1 leaves no trajectory-eligible subjects".into(),
            ));
        }
        if !(0.0..1.0).contains(&(self.marker_gain * self.latent_clamp)) {
            return Err(SynthError::Config(format!(
                "marker_gain {} x latent_clamp {} must stay below 1",
                self.marker_gain, self.latent_clamp
            )));
        }
        let max_mass: f64 = MARKER_SETS
            .iter()
            .map(|s| s.base_rate * (1.0 + self.marker_gain * self.latent_clamp))
            .sum();
        if max_mass >= 0.95 {
            return Err(SynthError::Config(format!(
                "worst-case marker rate {max_mass:.3} leaves no filler mass"
            )));
        }
        for f in FeatureName::ALL {
            let e = self.effect(f);
            if !e.cross.is_finite() || !e.long.is_finite() {
                return Err(SynthError::Config(format!("effect for {f} not finite")));
            }
        }
        let cross_ss: f64 = FeatureName::ALL
            .iter()
            .map(|f| self.effect(*f).cross.powi(2))
            .sum();
        if cross_ss > 1.0 {
            return Err(SynthError::Config(format!(
                "sum of squared cross effects {cross_ss:.3} > 1"
            )));
        }
        let long_ss: f64 = FeatureName::ALL
            .iter()
            .map(|f| self.effect(*f).long.powi(2))
            .sum();
        let cross_dot_long: f64 = FeatureName::ALL
            .iter()
            .map(|f| self.effect(*f).cross * self.effect(*f).long)
            .sum();
        let h = self.baseline_to_slope;
        let slope_var = long_ss + h * h + 2.0 * h * cross_dot_long;
        if slope_var > 1.0 {
            return Err(SynthError::Config(format!(
                "slope composite variance {slope_var:.3} > 1; shrink effects or baseline_to_slope"
            )));
        }
        beta_shape(self.baseline_mean, self.baseline_sd)?;
        Ok(())
    }

    fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn beta_shape(mean: f64, sd: f64) -> Result<(f64, f64), SynthError> {
    let span = PCL_MAX - PCL_MIN;
    let m = (mean - PCL_MIN) / span;
    let v = (sd / span).powi(2);
    if !(0.0 < m && m < 1.0) {
        return Err(SynthError::Config(format!(
            "baseline_mean {mean} outside ({PCL_MIN}, {PCL_MAX})"
        )));
    }
    if v <= 0.0 || v >= m * (1.0 - m) {
        return Err(SynthError::Config(format!(
            "baseline_sd {sd} infeasible for mean {mean} on [{PCL_MIN}, {PCL_MAX}]"
        )));
    }
    let nu = m * (1.0 - m) / v - 1.0;
    Ok((m * nu, (1.0 - m) * nu))
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// Per-subject generative state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTruth {
    pub responder_id: String,
    /// True intercept (baseline PCL) of the growth line.
    pub baseline: f64,
    /// True slope, PCL per year.
    pub slope: f64,
    /// The nine feature latents, in canonical feature order.
    pub latents: Vec<f64>,
}

/// Everything needed to audit a pipeline run against the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub config_digest: String,
    pub effects: BTreeMap<FeatureName, PlantedEffect>,
    pub subjects: Vec<SubjectTruth>,
    pub clipped_observations: usize,
    pub total_observations: usize,
}

impl GroundTruth {
    pub fn clip_rate(&self) -> f64 {
        if self.total_observations == 0 {
            0.0
        } else {
            self.clipped_observations as f64 / self.total_observations as f64
        }
    }

    pub fn long_effect(&self, feature: FeatureName) -> f64 {
        self.effects.get(&feature).map(|e| e.long).unwrap_or(0.0)
    }
}

/// A generated cohort: exactly the artifacts the ingestion layer consumes,
/// plus the generative record.
#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub transcripts: Vec<Transcript>,
    pub pcl_records: Vec<PclRecord>,
    pub demographics: Vec<Demographics>,
    pub bundle: ModelBundle,
    pub ground_truth: GroundTruth,
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

fn subject_rng(seed: u64, index: usize) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"subject");
    hasher.update(seed.to_le_bytes());
    hasher.update((index as u64).to_le_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    ChaCha12Rng::from_seed(key)
}

fn id_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(4)
}

/// Generates a full cohort. The same config (including seed) always yields
/// byte-identical output.
pub fn generate_cohort(config: &SynthConfig) -> Result<SyntheticCohort, SynthError> {
    config.validate()?;
    let bundle = demo_bundle();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let (shape_a, shape_b) = beta_shape(config.baseline_mean, config.baseline_sd)?;
    let beta_dist = Beta::new(shape_a, shape_b).expect("validated beta shape");

    let delta_b = {
        let cross_ss: f64 = FeatureName::ALL
            .iter()
            .map(|f| config.effect(*f).cross.powi(2))
            .sum();
        (1.0 - cross_ss).max(0.0).sqrt()
    };
    let delta_s = {
        let long_ss: f64 = FeatureName::ALL
            .iter()
            .map(|f| config.effect(*f).long.powi(2))
            .sum();
        let cross_dot_long: f64 = FeatureName::ALL
            .iter()
            .map(|f| config.effect(*f).cross * config.effect(*f).long)
            .sum();
        let h = config.baseline_to_slope;
        (1.0 - long_ss - h * h - 2.0 * h * cross_dot_long)
            .max(0.0)
            .sqrt()
    };

    let width = id_width(config.n_subjects);
    let mut transcripts = Vec::with_capacity(config.n_subjects);
    let mut pcl_records = Vec::new();
    let mut demographics = Vec::with_capacity(config.n_subjects);
    let mut subjects = Vec::with_capacity(config.n_subjects);
    let mut clipped = 0usize;
    let mut total_obs = 0usize;

    for index in 0..config.n_subjects {
        let mut rng = subject_rng(config.seed, index);
        let responder_id = format!("s{index:0width$}");

        // latents, in canonical feature order
        let latents: Vec<f64> = (0..9)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z
            })
            .collect();
        let eps_b: f64 = StandardNormal.sample(&mut rng);
        let eps_s: f64 = StandardNormal.sample(&mut rng);

        let u_b: f64 = FeatureName::ALL
            .iter()
            .enumerate()
            .map(|(i, f)| config.effect(*f).cross * latents[i])
            .sum::<f64>()
            + delta_b * eps_b;
        let u_s: f64 = FeatureName::ALL
            .iter()
            .enumerate()
            .map(|(i, f)| config.effect(*f).long * latents[i])
            .sum::<f64>()
            + config.baseline_to_slope * u_b
            + delta_s * eps_s;

        let baseline = PCL_MIN + (PCL_MAX - PCL_MIN) * beta_dist.inverse_cdf(normal.cdf(u_b));
        let slope = config.slope_sd * u_s;

        // demographics (independent of the latents)
        let age_noise: f64 = StandardNormal.sample(&mut rng);
        let age = (config.age_mean + config.age_sd * age_noise).clamp(22.0, 85.0);
        let female = rng.random_bool(config.female_rate);
        let police = rng.random_bool(config.police_rate);
        let marital = if rng.random_bool(config.marital_unknown_rate) {
            MaritalStatus::Unknown
        } else if rng.random_bool(config.married_rate) {
            MaritalStatus::Married
        } else {
            MaritalStatus::NotMarried
        };
        let years_offset = config.interview_years_min
            + (config.interview_years_max - config.interview_years_min) * rng.random::<f64>();
        let interview_date =
            EVENT_DATE + chrono::Duration::days((years_offset * DAYS_PER_YEAR).round() as i64);

        // visit schedule: one pre visit, the rest post
        let pre_t = -(30.0 + 30.0 * rng.random::<f64>()) / DAYS_PER_YEAR;
        let n_post = config.visits_per_subject - 1;
        let mut post_times: Vec<f64> = (0..n_post)
            .map(|j| {
                let frac = j as f64 / (n_post - 1).max(1) as f64;
                let base = 0.25 + frac * (config.follow_up_years - 0.25);
                base + 0.03 * (rng.random::<f64>() * 2.0 - 1.0)
            })
            .collect();
        post_times.sort_by(f64::total_cmp);
        // the follow-up span requirement rides on the last visit
        let last = post_times.last_mut().unwrap();
        *last = last.max(config.follow_up_years);

        let mut visit_times = vec![pre_t];
        visit_times.extend(post_times);
        for t in visit_times {
            let noise: f64 = StandardNormal.sample(&mut rng);
            let raw = baseline + slope * t + config.pcl_noise_sd * noise;
            let value = raw.clamp(PCL_MIN, PCL_MAX);
            if value != raw {
                clipped += 1;
            }
            total_obs += 1;
            pcl_records.push(PclRecord {
                responder_id: responder_id.clone(),
                date: interview_date + chrono::Duration::days((t * DAYS_PER_YEAR).round() as i64),
                score: value,
            });
        }

        // word emission
        let clamp = config.latent_clamp;
        let scaled = |z: f64| z.clamp(-clamp, clamp);
        let word_count_latent = latents[FeatureName::WordCount.index()];
        let n_words = ((config.words_per_subject as f64)
            * (config.word_count_spread * scaled(word_count_latent)).exp())
        .round()
        .max(50.0) as usize;

        let mut word_probs: Vec<(&'static str, f64)> = Vec::new();
        let mut marker_mass = 0.0;
        for set in &MARKER_SETS {
            let z = latents[set.feature.index()];
            let rate = set.base_rate * (1.0 + config.marker_gain * scaled(z));
            marker_mass += rate;
            let per_word = rate / set.words.len() as f64;
            for w in set.words {
                word_probs.push((w, per_word));
            }
        }
        let filler_mass = 1.0 - marker_mass;
        let per_filler = filler_mass / FILLER_WORDS.len() as f64;
        for w in FILLER_WORDS {
            word_probs.push((w, per_filler));
        }

        let counts = match config.emission {
            EmissionMode::Sampled => multinomial_counts(&mut rng, n_words, &word_probs),
            EmissionMode::Expected => expected_counts(n_words, &word_probs),
        };

        // build and shuffle the word stream
        let mut stream: Vec<&'static str> = Vec::with_capacity(n_words);
        for ((word, _), count) in word_probs.iter().zip(&counts) {
            stream.extend(std::iter::repeat_n(*word, *count as usize));
        }
        fisher_yates(&mut rng, &mut stream);

        transcripts.push(build_transcript(
            &responder_id,
            interview_date,
            &stream,
            &mut rng,
        ));
        demographics.push(Demographics {
            responder_id: responder_id.clone(),
            age_at_interview: (age * 10.0).round() / 10.0,
            gender: if female { Gender::Female } else { Gender::Male },
            occupation_police: police,
            marital_status: marital,
        });
        subjects.push(SubjectTruth {
            responder_id,
            baseline,
            slope,
            latents,
        });
    }

    Ok(SyntheticCohort {
        transcripts,
        pcl_records,
        demographics,
        bundle,
        ground_truth: GroundTruth {
            seed: config.seed,
            config_digest: config.digest(),
            effects: config.effects.clone(),
            subjects,
            clipped_observations: clipped,
            total_observations: total_obs,
        },
    })
}

/// Multinomial draw via conditional binomials in fixed vocabulary order.
fn multinomial_counts(rng: &mut ChaCha12Rng, n: usize, probs: &[(&str, f64)]) -> Vec<u64> {
    let mut counts = Vec::with_capacity(probs.len());
    let mut remaining_n = n as u64;
    let mut remaining_mass: f64 = probs.iter().map(|(_, p)| p).sum();
    for (i, (_, p)) in probs.iter().enumerate() {
        if remaining_n == 0 {
            counts.push(0);
            continue;
        }
        if i == probs.len() - 1 {
            counts.push(remaining_n);
            remaining_n = 0;
            continue;
        }
        let cond = (p / remaining_mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining_n, cond)
            .expect("valid binomial")
            .sample(rng);
        counts.push(draw);
        remaining_n -= draw;
        remaining_mass -= p;
    }
    counts
}

/// Rounded expected counts; the remainder lands on the largest-mass word.
fn expected_counts(n: usize, probs: &[(&str, f64)]) -> Vec<u64> {
    let mut counts: Vec<u64> = probs
        .iter()
        .map(|(_, p)| (p * n as f64).round() as u64)
        .collect();
    let assigned: u64 = counts.iter().sum();
    let biggest = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let n = n as u64;
    if assigned < n {
        counts[biggest] += n - assigned;
    } else if assigned > n {
        counts[biggest] = counts[biggest].saturating_sub(assigned - n);
    }
    counts
}

fn fisher_yates(rng: &mut ChaCha12Rng, words: &mut [&'static str]) {
    for i in (1..words.len()).rev() {
        let j = rng.random_range(0..=i);
        words.swap(i, j);
    }
}

/// Chunks the word stream into timed responder turns with interviewer
/// prompts interleaved (which the feature extractor must ignore).
fn build_transcript(
    responder_id: &str,
    interview_date: NaiveDate,
    stream: &[&'static str],
    rng: &mut ChaCha12Rng,
) -> Transcript {
    let mut utterances = Vec::new();
    let mut clock = 0.0f64;
    let mut offset = 0usize;
    let mut turn = 0usize;
    while offset < stream.len() {
        if turn % 3 == 2 {
            let prompt = INTERVIEWER_PROMPTS[rng.random_range(0..INTERVIEWER_PROMPTS.len())];
            utterances.push(Utterance {
                t: clock,
                speaker: Speaker::Interviewer,
                text: prompt.to_string(),
            });
            clock += 3.0;
        }
        let take = (30 + rng.random_range(0..12)).min(stream.len() - offset);
        let text = stream[offset..offset + take].join(" ");
        utterances.push(Utterance {
            t: clock,
            speaker: Speaker::Responder,
            text,
        });
        clock += take as f64 / 2.5 + 1.5;
        offset += take;
        turn += 1;
    }
    Transcript {
        responder_id: responder_id.to_string(),
        interview_date,
        utterances,
    }
}

/// The scoring bundle matched to the synthetic vocabulary: one topic per
/// trait marker set (trait models score their own topic), the three
/// function-word categories, and a stem wildcard to exercise prefix matching.
pub fn demo_bundle() -> ModelBundle {
    let mut lexicon = CategoricalLexicon::new();
    for w in FPS_MARKERS {
        lexicon.add("first_person_singular", Pattern::Literal(w.to_string()));
    }
    for w in FPP_MARKERS {
        if *w == "ourselves" {
            lexicon.add("first_person_plural", Pattern::Prefix("ourselv".into()));
        } else {
            lexicon.add("first_person_plural", Pattern::Literal(w.to_string()));
        }
    }
    for w in ARTICLE_MARKERS {
        lexicon.add("articles", Pattern::Literal(w.to_string()));
    }

    let mut topics = TopicModel::new();
    let trait_sets: [(TraitName, &[&str]); 4] = [
        (TraitName::Anxiety, ANXIETY_MARKERS),
        (TraitName::Depression, DEPRESSION_MARKERS),
        (TraitName::Neuroticism, NEUROTICISM_MARKERS),
        (TraitName::Extraversion, EXTRAVERSION_MARKERS),
    ];
    for (name, words) in trait_sets {
        let topic_id = format!("topic_{name}");
        for w in words {
            topics.add(&topic_id, w, 1.0);
        }
    }

    let traits = trait_sets
        .iter()
        .map(|(name, _)| {
            let mut weights = vec![TraitWeight {
                feature: FeatureRef::Topic(format!("topic_{name}")),
                weight: 5.0,
                mode: FeatureMode::RelativeFrequency,
            }];
            // one direct unigram term so the n-gram reference path is live
            if *name == TraitName::Depression {
                weights.push(TraitWeight {
                    feature: FeatureRef::NGram(
                        crate::features::NGramKey::parse("hopeless").unwrap(),
                    ),
                    weight: 2.0,
                    mode: FeatureMode::RelativeFrequency,
                });
            }
            TraitModel {
                trait_name: *name,
                intercept: 0.1,
                weights,
            }
        })
        .collect();

    ModelBundle::from_parts(traits, lexicon, topics).expect("demo bundle is valid")
}

// ---------------------------------------------------------------------------
// On-disk layout
// ---------------------------------------------------------------------------

/// Writes the cohort in the exact formats the ingestion layer reads:
/// `transcripts.jsonl`, `pcl.csv`, `demographics.csv`, `bundle/`, plus
/// `ground_truth.json`.
pub fn write_cohort(dir: &Path, cohort: &SyntheticCohort) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::fs::File::create(dir.join("transcripts.jsonl"))?;
    crate::ingest::write_transcripts(&mut f, &cohort.transcripts)?;
    let f = std::fs::File::create(dir.join("pcl.csv"))?;
    crate::ingest::write_pcl_records(f, &cohort.pcl_records).map_err(csv_to_io)?;
    let f = std::fs::File::create(dir.join("demographics.csv"))?;
    crate::ingest::write_demographics(f, &cohort.demographics).map_err(csv_to_io)?;
    crate::models::write_bundle(&dir.join("bundle"), &cohort.bundle)?;
    let mut f = std::fs::File::create(dir.join("ground_truth.json"))?;
    serde_json::to_writer_pretty(&mut f, &cohort.ground_truth)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn csv_to_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Reads a `ground_truth.json` written by [`write_cohort`].
pub fn read_ground_truth(path: &Path) -> std::io::Result<GroundTruth> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}

// ---------------------------------------------------------------------------
// Recovery report
// ---------------------------------------------------------------------------

/// One feature's planted-vs-estimated comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub feature: FeatureName,
    pub true_effect: f64,
    pub estimated: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
    pub error: f64,
    pub significant: bool,
}

/// Planted-effect audit for a whole analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub seed: u64,
    pub rows: Vec<RecoveryRow>,
    /// Fraction of features whose CI covers the true value.
    pub coverage_rate: f64,
}

/// Compares trajectory-association estimates with the planted longitudinal
/// effects. `results_seed` must match the ground truth's seed.
pub fn oracle_report(
    truth: &GroundTruth,
    results: &[AssociationResult],
    results_seed: u64,
) -> Result<RecoveryReport, SynthError> {
    if results_seed != truth.seed {
        return Err(SynthError::Provenance {
            expected: truth.seed,
            found: results_seed,
        });
    }
    let rows: Vec<RecoveryRow> = results
        .iter()
        .map(|a| {
            let true_effect = truth.long_effect(a.feature);
            RecoveryRow {
                feature: a.feature,
                true_effect,
                estimated: a.beta.estimate,
                ci_low: a.beta.ci_low,
                ci_high: a.beta.ci_high,
                covered: a.beta.ci_low <= true_effect && true_effect <= a.beta.ci_high,
                error: a.beta.estimate - true_effect,
                significant: a.beta.significant,
            }
        })
        .collect();
    let coverage_rate = if rows.is_empty() {
        0.0
    } else {
        rows.iter().filter(|r| r.covered).count() as f64 / rows.len() as f64
    };
    Ok(RecoveryReport {
        seed: truth.seed,
        rows,
        coverage_rate,
    })
}

/// Writes a recovery report as CSV.
pub fn write_recovery_report<W: Write>(
    mut writer: W,
    report: &RecoveryReport,
) -> std::io::Result<()> {
    writeln!(writer, "# seed: {}", report.seed)?;
    writeln!(writer, "# coverage_rate: {:.4}", report.coverage_rate)?;
    writeln!(
        writer,
        "feature,true_effect,estimated,ci_low,ci_high,covered,error,significant"
    )?;
    for r in &report.rows {
        writeln!(
            writer,
            "{},{:.6},{:.6},{:.6},{:.6},{},{:.6},{}",
            r.feature.key(),
            r.true_effect,
            r.estimated,
            r.ci_low,
            r.ci_high,
            r.covered,
            r.error,
            r.significant
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_byte_identical() {
        let config = SynthConfig::planted_longitudinal(1, 12);
        let a = generate_cohort(&config).unwrap();
        let b = generate_cohort(&config).unwrap();
        assert_eq!(a.transcripts, b.transcripts);
        assert_eq!(a.pcl_records, b.pcl_records);
        assert_eq!(a.demographics, b.demographics);
        assert_eq!(a.ground_truth, b.ground_truth);

        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        write_cohort(dir_a.path(), &a).unwrap();
        write_cohort(dir_b.path(), &b).unwrap();
        for file in [
            "transcripts.jsonl",
            "pcl.csv",
            "demographics.csv",
            "ground_truth.json",
            "bundle/lexicon.csv",
            "bundle/topics.csv",
            "bundle/anxiety.json",
        ] {
            let bytes_a = std::fs::read(dir_a.path().join(file)).unwrap();
            let bytes_b = std::fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{file}");
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_cohort(&SynthConfig::new(1, 8)).unwrap();
        let b = generate_cohort(&SynthConfig::new(2, 8)).unwrap();
        assert_ne!(a.pcl_records, b.pcl_records);
    }

    #[test]
    fn marker_sets_and_filler_are_disjoint() {
        let mut seen = std::collections::BTreeSet::new();
        for set in &MARKER_SETS {
            for w in set.words {
                assert!(seen.insert(*w), "duplicate marker word {w}");
            }
        }
        for w in FILLER_WORDS {
            assert!(seen.insert(*w), "filler word {w} collides with a marker");
        }
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let too_few = SynthConfig::new(1, 4);
        assert!(matches!(
            generate_cohort(&too_few),
            Err(SynthError::Config(_))
        ));

        let mut hot_markers = SynthConfig::new(1, 10);
        hot_markers.marker_gain = 0.5;
        hot_markers.latent_clamp = 2.5; // product 1.25 >= 1
        assert!(matches!(
            generate_cohort(&hot_markers),
            Err(SynthError::Config(_))
        ));

        let heavy_effects = SynthConfig::new(1, 10)
            .with_effect(FeatureName::Anxiety, 0.9, 0.9)
            .with_effect(FeatureName::Depression, 0.9, 0.9);
        assert!(matches!(
            generate_cohort(&heavy_effects),
            Err(SynthError::Config(_))
        ));

        let mut wide_baseline = SynthConfig::new(1, 10);
        wide_baseline.baseline_sd = 40.0;
        assert!(matches!(
            generate_cohort(&wide_baseline),
            Err(SynthError::Config(_))
        ));
    }

    #[test]
    fn cohort_is_fully_eligible_by_construction() {
        let mut config = SynthConfig::new(5, 10);
        config.words_per_subject = 1_000;
        let cohort = generate_cohort(&config).unwrap();
        let sample = crate::ingest::apply_inclusion_criteria(
            &cohort.transcripts,
            &cohort.pcl_records,
            &cohort.demographics,
        );
        assert_eq!(sample.concurrent_count(), 10);
        assert_eq!(sample.trajectory_count(), 10);
    }

    #[test]
    fn word_counts_track_the_configured_volume() {
        let mut config = SynthConfig::new(9, 10);
        config.words_per_subject = 2_000;
        let cohort = generate_cohort(&config).unwrap();
        for t in &cohort.transcripts {
            let words: usize = t
                .responder_utterances()
                .map(|u| u.text.split_whitespace().count())
                .sum();
            assert!(
                (1_000..=4_000).contains(&words),
                "{}: {words} words",
                t.responder_id
            );
        }
    }

    #[test]
    fn expected_emission_mode_emits_exact_volumes() {
        let mut config = SynthConfig::new(3, 8);
        config.emission = EmissionMode::Expected;
        config.word_count_spread = 0.0;
        config.words_per_subject = 1_000;
        let cohort = generate_cohort(&config).unwrap();
        for t in &cohort.transcripts {
            let words: usize = t
                .responder_utterances()
                .map(|u| u.text.split_whitespace().count())
                .sum();
            assert_eq!(words, config.words_per_subject);
        }
    }

    #[test]
    fn ground_truth_round_trips() {
        let mut config = SynthConfig::planted_longitudinal(7, 8);
        config.words_per_subject = 500;
        let cohort = generate_cohort(&config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_cohort(dir.path(), &cohort).unwrap();
        let truth = read_ground_truth(&dir.path().join("ground_truth.json")).unwrap();
        assert_eq!(truth, cohort.ground_truth);
    }

    #[test]
    fn oracle_report_checks_provenance() {
        let mut config = SynthConfig::new(11, 8);
        config.words_per_subject = 500;
        let cohort = generate_cohort(&config).unwrap();
        let err = oracle_report(&cohort.ground_truth, &[], 12).unwrap_err();
        assert!(matches!(
            err,
            SynthError::Provenance {
                expected: 11,
                found: 12
            }
        ));
        let report = oracle_report(&cohort.ground_truth, &[], 11).unwrap();
        assert!(report.rows.is_empty());
    }

    #[test]
    fn baseline_moments_match_reference_targets() {
        let mut config = SynthConfig::baseline_moments(2024, 500);
        config.words_per_subject = 200; // moments don't need text volume
        let cohort = generate_cohort(&config).unwrap();
        let baselines: Vec<f64> = cohort
            .ground_truth
            .subjects
            .iter()
            .map(|s| s.baseline)
            .collect();
        let mean = crate::util::mean(&baselines);
        let sd = crate::util::sample_sd(&baselines);
        assert!((mean - 33.7).abs() < 1.0, "mean = {mean}");
        assert!((sd - 16.2).abs() < 1.0, "sd = {sd}");
    }

    #[test]
    fn marker_rates_correlate_with_latents_as_configured() {
        let config = SynthConfig::new(77, 500);
        let cohort = generate_cohort(&config).unwrap();
        // measure the first-person-plural relative frequency directly
        let mut rates = Vec::new();
        for t in &cohort.transcripts {
            let mut total = 0usize;
            let mut hits = 0usize;
            for u in t.responder_utterances() {
                for w in u.text.split_whitespace() {
                    total += 1;
                    if FPP_MARKERS.contains(&w) {
                        hits += 1;
                    }
                }
            }
            rates.push(hits as f64 / total as f64);
        }
        let latents: Vec<f64> = cohort
            .ground_truth
            .subjects
            .iter()
            .map(|s| s.latents[FeatureName::FirstPersonPlural.index()])
            .collect();
        let observed = crate::inference::pearson_r(&rates, &latents).unwrap().r;
        let expected = config
            .expected_marker_correlation(FeatureName::FirstPersonPlural)
            .unwrap();
        assert!(
            (observed - expected).abs() < 0.05,
            "observed {observed}, expected {expected}"
        );
    }
}
