//! Scoring artifacts: categorical (function-word) lexica, topic models, and
//! pre-trained linear trait models, plus the bundle loader.
//!
//! A model bundle is a directory containing:
//! - `lexicon.csv` — rows `term,category`; a term ending in `*` is a stem
//!   wildcard matching any token with that prefix
//! - `topics.csv` — rows `topic_id,word,weight` with weight = p(topic | word)
//! - `anxiety.json`, `depression.json`, `neuroticism.json`,
//!   `extraversion.json` — one linear model per trait:
//!   `{"trait": "...", "intercept": 0.0,
//!     "weights": [{"feature": "topic:T17", "weight": 0.5},
//!                 {"feature": "1gram:nightmare", "weight": 1.2}]}`
//!
//! Feature references name either a topic (`topic:ID`) or an n-gram
//! (`1gram:word`, `2gram:two words`, `3gram:three word phrase`). Each weight
//! may carry a `mode` flag (`relative_frequency`, the default, or `binary`).
//! Unresolvable references read as 0.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{FeatureMode, FeatureVector, NGramKey};
use crate::util::kahan_sum_iter;

/// Category names every bundle must provide.
pub const REQUIRED_CATEGORIES: [&str; 3] =
    ["first_person_singular", "first_person_plural", "articles"];

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("missing trait: {0}")]
    MissingTrait(TraitName),
    #[error("{file}: trait field says {found}, expected {expected}")]
    TraitMismatch {
        file: String,
        expected: TraitName,
        found: String,
    },
    #[error("missing category: {0}")]
    MissingCategory(String),
    #[error("{file}: empty pattern in category {category}")]
    EmptyPattern { file: String, category: String },
}

/// A lexicon entry: a literal token or a stem wildcard.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern {
    Literal(String),
    /// `"abc*"` matches any token with prefix `abc`.
    Prefix(String),
}

impl Pattern {
    pub fn parse(term: &str) -> Option<Pattern> {
        if term.is_empty() || term == "*" {
            return None;
        }
        match term.strip_suffix('*') {
            Some(stem) => Some(Pattern::Prefix(stem.to_string())),
            None => Some(Pattern::Literal(term.to_string())),
        }
    }

    pub fn matches(&self, token: &str) -> bool {
        match self {
            Pattern::Literal(term) => token == term,
            Pattern::Prefix(stem) => token.starts_with(stem.as_str()),
        }
    }

    fn as_term(&self) -> String {
        match self {
            Pattern::Literal(term) => term.clone(),
            Pattern::Prefix(stem) => format!("{stem}*"),
        }
    }
}

/// Word categories scored as summed unigram relative frequencies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoricalLexicon {
    categories: BTreeMap<String, Vec<Pattern>>,
}

impl CategoricalLexicon {
    pub fn new() -> CategoricalLexicon {
        CategoricalLexicon::default()
    }

    pub fn add(&mut self, category: &str, pattern: Pattern) {
        self.categories
            .entry(category.to_string())
            .or_default()
            .push(pattern);
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }

    pub fn has_category(&self, name: &str) -> bool {
        self.categories.contains_key(name)
    }

    pub fn patterns(&self, category: &str) -> &[Pattern] {
        self.categories
            .get(category)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Topic model: per topic, p(topic | word) for each word it covers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    topics: BTreeMap<String, BTreeMap<String, f64>>,
}

impl TopicModel {
    pub fn new() -> TopicModel {
        TopicModel::default()
    }

    pub fn add(&mut self, topic_id: &str, word: &str, weight: f64) {
        self.topics
            .entry(topic_id.to_string())
            .or_default()
            .insert(word.to_string(), weight);
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(String::as_str)
    }

    pub fn words(&self, topic_id: &str) -> Option<&BTreeMap<String, f64>> {
        self.topics.get(topic_id)
    }

    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    /// Per-word total weight across topics; 1.0 everywhere for a complete
    /// model.
    pub fn word_totals(&self) -> BTreeMap<&str, f64> {
        let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
        for words in self.topics.values() {
            for (word, weight) in words {
                *totals.entry(word.as_str()).or_insert(0.0) += weight;
            }
        }
        totals
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraitName {
    Anxiety,
    Depression,
    Neuroticism,
    Extraversion,
}

impl TraitName {
    pub const ALL: [TraitName; 4] = [
        TraitName::Anxiety,
        TraitName::Depression,
        TraitName::Neuroticism,
        TraitName::Extraversion,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TraitName::Anxiety => "anxiety",
            TraitName::Depression => "depression",
            TraitName::Neuroticism => "neuroticism",
            TraitName::Extraversion => "extraversion",
        }
    }
}

impl fmt::Display for TraitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a trait-model weight attaches to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FeatureRef {
    Topic(String),
    NGram(NGramKey),
}

impl FeatureRef {
    /// Parses `topic:ID` / `1gram:woke up` / `2gram:..` / `3gram:..`.
    pub fn parse(s: &str) -> Option<FeatureRef> {
        let (kind, rest) = s.split_once(':')?;
        match kind {
            "topic" if !rest.is_empty() => Some(FeatureRef::Topic(rest.to_string())),
            "1gram" | "2gram" | "3gram" => {
                let key = NGramKey::parse(rest)?;
                let expected = kind.as_bytes()[0] - b'0';
                (key.order() == expected as usize).then_some(FeatureRef::NGram(key))
            }
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            FeatureRef::Topic(id) => format!("topic:{id}"),
            FeatureRef::NGram(key) => format!("{}gram:{}", key.order(), key.text()),
        }
    }
}

/// One weighted term of a linear trait model.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitWeight {
    pub feature: FeatureRef,
    pub weight: f64,
    /// Which feature representation the weight applies to.
    pub mode: FeatureMode,
}

/// A pre-trained linear model mapping language features to a construct score.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitModel {
    pub trait_name: TraitName,
    pub intercept: f64,
    pub weights: Vec<TraitWeight>,
}

/// The full set of scoring artifacts applied to one cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    traits: BTreeMap<TraitName, TraitModel>,
    lexicon: CategoricalLexicon,
    topics: TopicModel,
    /// Content digest over the bundle files; embedded in assessment tables.
    id: String,
}

impl ModelBundle {
    /// Assembles a bundle from parts, enforcing the four-trait /
    /// three-category invariants. The id is derived from the contents.
    pub fn from_parts(
        traits: Vec<TraitModel>,
        lexicon: CategoricalLexicon,
        topics: TopicModel,
    ) -> Result<ModelBundle, BundleError> {
        let mut map = BTreeMap::new();
        for t in traits {
            map.insert(t.trait_name, t);
        }
        for name in TraitName::ALL {
            if !map.contains_key(&name) {
                return Err(BundleError::MissingTrait(name));
            }
        }
        for cat in REQUIRED_CATEGORIES {
            if !lexicon.has_category(cat) {
                return Err(BundleError::MissingCategory(cat.to_string()));
            }
        }
        let mut bundle = ModelBundle {
            traits: map,
            lexicon,
            topics,
            id: String::new(),
        };
        bundle.id = bundle.content_digest();
        Ok(bundle)
    }

    fn content_digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (name, model) in &self.traits {
            hasher.update(name.as_str().as_bytes());
            hasher.update(model.intercept.to_le_bytes());
            for w in &model.weights {
                hasher.update(w.feature.render().as_bytes());
                hasher.update(w.weight.to_le_bytes());
            }
        }
        for cat in self.lexicon.categories() {
            hasher.update(cat.as_bytes());
            for p in self.lexicon.patterns(cat) {
                hasher.update(p.as_term().as_bytes());
            }
        }
        for topic in self.topics.topic_ids() {
            hasher.update(topic.as_bytes());
            for (word, weight) in self.topics.words(topic).unwrap() {
                hasher.update(word.as_bytes());
                hasher.update(weight.to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn lexicon(&self) -> &CategoricalLexicon {
        &self.lexicon
    }

    pub fn topics(&self) -> &TopicModel {
        &self.topics
    }

    pub fn trait_model(&self, name: TraitName) -> &TraitModel {
        &self.traits[&name]
    }

    /// Highest n-gram order any trait model references; feature extraction
    /// for assessment never needs more than this.
    pub fn max_ngram_order(&self) -> usize {
        self.traits
            .values()
            .flat_map(|m| &m.weights)
            .filter_map(|w| match &w.feature {
                FeatureRef::NGram(key) => Some(key.order()),
                FeatureRef::Topic(_) => None,
            })
            .max()
            .unwrap_or(1)
            .max(1)
    }
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// Per-category scores: summed relative frequency of unigrams matching any
/// pattern of the category. A category with no matches scores 0.
pub fn score_categories(
    features: &FeatureVector,
    lexicon: &CategoricalLexicon,
) -> BTreeMap<String, f64> {
    debug_assert_eq!(features.mode(), FeatureMode::RelativeFrequency);
    lexicon
        .categories()
        .map(|cat| {
            let patterns = lexicon.patterns(cat);
            let score = kahan_sum_iter(features.iter_order(1).filter_map(|(key, value)| {
                patterns
                    .iter()
                    .any(|p| p.matches(key.text()))
                    .then_some(value)
            }));
            (cat.to_string(), score)
        })
        .collect()
}

/// Per-topic prevalence: Σ over words of rel_freq(word) × p(topic | word).
/// Out-of-vocabulary words contribute nothing.
pub fn score_topics(features: &FeatureVector, topics: &TopicModel) -> BTreeMap<String, f64> {
    debug_assert_eq!(features.mode(), FeatureMode::RelativeFrequency);
    topics
        .topics
        .iter()
        .map(|(topic_id, words)| {
            let score = kahan_sum_iter(
                words
                    .iter()
                    .map(|(word, weight)| features.unigram_value(word) * weight),
            );
            (topic_id.clone(), score)
        })
        .collect()
}

/// Applies a linear trait model: intercept + Σ weight × feature value.
/// Binary-mode weights read the presence indicator of the feature.
pub fn apply_trait_model(
    features: &FeatureVector,
    topic_scores: &BTreeMap<String, f64>,
    model: &TraitModel,
) -> f64 {
    let contributions = model.weights.iter().map(|w| {
        let value = match &w.feature {
            FeatureRef::Topic(id) => topic_scores.get(id).copied().unwrap_or(0.0),
            FeatureRef::NGram(key) => match w.mode {
                FeatureMode::RelativeFrequency => features.get(key),
                FeatureMode::Binary => {
                    if features.get(key) > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
        };
        w.weight * value
    });
    model.intercept + kahan_sum_iter(contributions)
}

// ---------------------------------------------------------------------------
// Loading and writing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct BundleOptions {
    /// Allowed deviation of per-word topic-weight totals from 1.0 before a
    /// completeness warning is emitted.
    pub completeness_tolerance: f64,
}

impl Default for BundleOptions {
    fn default() -> Self {
        BundleOptions {
            completeness_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct LexiconRow {
    term: String,
    category: String,
}

#[derive(Debug, Deserialize, Serialize)]
struct TopicRow {
    topic_id: String,
    word: String,
    weight: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct TraitWeightDoc {
    feature: String,
    weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<FeatureMode>,
}

#[derive(Debug, Deserialize, Serialize)]
struct TraitDoc {
    #[serde(rename = "trait")]
    trait_name: String,
    intercept: f64,
    weights: Vec<TraitWeightDoc>,
}

fn read_file(path: &Path) -> Result<String, BundleError> {
    fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads and validates a bundle directory with default options.
pub fn load_bundle(dir: &Path) -> Result<(ModelBundle, Vec<String>), BundleError> {
    load_bundle_with(dir, BundleOptions::default())
}

/// Loads and validates a bundle directory. Returns the bundle plus any
/// non-fatal warnings (currently topic-completeness deviations).
pub fn load_bundle_with(
    dir: &Path,
    options: BundleOptions,
) -> Result<(ModelBundle, Vec<String>), BundleError> {
    let mut warnings = Vec::new();

    // lexicon
    let lexicon_path = dir.join("lexicon.csv");
    let lexicon_text = read_file(&lexicon_path)?;
    let mut lexicon = CategoricalLexicon::new();
    let mut reader = csv::Reader::from_reader(lexicon_text.as_bytes());
    for (idx, row) in reader.deserialize::<LexiconRow>().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| BundleError::Parse {
            file: "lexicon.csv".into(),
            line,
            message: e.to_string(),
        })?;
        let pattern = Pattern::parse(&row.term).ok_or_else(|| BundleError::EmptyPattern {
            file: "lexicon.csv".into(),
            category: row.category.clone(),
        })?;
        lexicon.add(&row.category, pattern);
    }

    // topics
    let topics_path = dir.join("topics.csv");
    let topics_text = read_file(&topics_path)?;
    let mut topics = TopicModel::new();
    let mut reader = csv::Reader::from_reader(topics_text.as_bytes());
    for (idx, row) in reader.deserialize::<TopicRow>().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| BundleError::Parse {
            file: "topics.csv".into(),
            line,
            message: e.to_string(),
        })?;
        if !row.weight.is_finite() || row.weight < 0.0 {
            return Err(BundleError::Parse {
                file: "topics.csv".into(),
                line,
                message: format!("weight {} must be finite and >= 0", row.weight),
            });
        }
        topics.add(&row.topic_id, &row.word, row.weight);
    }
    for (word, total) in topics.word_totals() {
        if (total - 1.0).abs() > options.completeness_tolerance {
            warnings.push(format!(
                "topics.csv: word {word:?} has total topic weight {total} (expected 1 ± {})",
                options.completeness_tolerance
            ));
        }
    }

    // traits
    let mut traits = Vec::new();
    for name in TraitName::ALL {
        let file = format!("{name}.json");
        let path = dir.join(&file);
        if !path.exists() {
            return Err(BundleError::MissingTrait(name));
        }
        let text = read_file(&path)?;
        let doc: TraitDoc = serde_json::from_str(&text).map_err(|e| BundleError::Parse {
            file: file.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if doc.trait_name != name.as_str() {
            return Err(BundleError::TraitMismatch {
                file,
                expected: name,
                found: doc.trait_name,
            });
        }
        let mut weights = Vec::with_capacity(doc.weights.len());
        for (i, w) in doc.weights.iter().enumerate() {
            let feature = FeatureRef::parse(&w.feature).ok_or_else(|| BundleError::Parse {
                file: file.clone(),
                line: i + 1,
                message: format!("unrecognized feature reference {:?}", w.feature),
            })?;
            if !w.weight.is_finite() {
                return Err(BundleError::Parse {
                    file: file.clone(),
                    line: i + 1,
                    message: format!("weight {} must be finite", w.weight),
                });
            }
            weights.push(TraitWeight {
                feature,
                weight: w.weight,
                mode: w.mode.unwrap_or(FeatureMode::RelativeFrequency),
            });
        }
        traits.push(TraitModel {
            trait_name: name,
            intercept: doc.intercept,
            weights,
        });
    }

    let bundle = ModelBundle::from_parts(traits, lexicon, topics)?;
    Ok((bundle, warnings))
}

/// Writes a bundle as the directory layout read by [`load_bundle`].
pub fn write_bundle(dir: &Path, bundle: &ModelBundle) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("lexicon.csv"))?;
    for cat in bundle.lexicon.categories() {
        for p in bundle.lexicon.patterns(cat) {
            w.serialize(LexiconRow {
                term: p.as_term(),
                category: cat.to_string(),
            })?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("topics.csv"))?;
    for topic_id in bundle.topics.topic_ids() {
        for (word, weight) in bundle.topics.words(topic_id).unwrap() {
            w.serialize(TopicRow {
                topic_id: topic_id.to_string(),
                word: word.clone(),
                weight: *weight,
            })?;
        }
    }
    w.flush()?;

    for (name, model) in &bundle.traits {
        let doc = TraitDoc {
            trait_name: name.as_str().to_string(),
            intercept: model.intercept,
            weights: model
                .weights
                .iter()
                .map(|w| TraitWeightDoc {
                    feature: w.feature.render(),
                    weight: w.weight,
                    mode: (w.mode != FeatureMode::RelativeFrequency).then_some(w.mode),
                })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&doc)?;
        fs::write(dir.join(format!("{name}.json")), text + "\n")?;
    }
    Ok(())
}
