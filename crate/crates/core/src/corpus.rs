//! Corpus ingestion, dataset mixing and train/dev splitting.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prefix marking a language tag as the creole under study.
pub const CREOLE_PREFIX: &str = "creole:";

pub fn is_creole_tag(tag: &str) -> bool {
    tag.starts_with(CREOLE_PREFIX)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: usize,
    pub text: String,
    pub source_language: String,
}

/// An ordered collection of sentences, in load order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub sentences: Vec<Sentence>,
    pub language_inventory: Vec<String>,
}

impl Corpus {
    /// Builds a single-language corpus from in-memory lines. Blank lines are
    /// skipped and ids follow the order of the remaining lines.
    pub fn from_lines<I, S>(name: &str, language_tag: &str, lines: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let sentences: Vec<Sentence> = lines
            .into_iter()
            .filter_map(|l| normalize_line(l.as_ref()))
            .enumerate()
            .map(|(id, text)| Sentence {
                id,
                text,
                source_language: language_tag.to_string(),
            })
            .collect();
        if sentences.is_empty() {
            return Err(Error::Empty(format!("corpus {name}")));
        }
        Ok(Corpus {
            name: name.to_string(),
            sentences,
            language_inventory: vec![language_tag.to_string()],
        })
    }

    /// Assembles a corpus from sentences, renumbering ids densely and
    /// deriving the inventory from first appearance.
    pub fn from_sentences(name: &str, sentences: Vec<Sentence>) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::Empty(format!("corpus {name}")));
        }
        let mut inventory: Vec<String> = Vec::new();
        let sentences = sentences
            .into_iter()
            .enumerate()
            .map(|(id, mut s)| {
                if !inventory.contains(&s.source_language) {
                    inventory.push(s.source_language.clone());
                }
                s.id = id;
                s
            })
            .collect();
        Ok(Corpus {
            name: name.to_string(),
            sentences,
            language_inventory: inventory,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// The creole tag carried by this corpus, if any.
    pub fn creole_tag(&self) -> Option<&str> {
        self.language_inventory
            .iter()
            .map(String::as_str)
            .find(|t| is_creole_tag(t))
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(|s| s.text.as_str())
    }

    pub fn count_language(&self, tag: &str) -> usize {
        self.sentences
            .iter()
            .filter(|s| s.source_language == tag)
            .count()
    }
}

fn normalize_line(line: &str) -> Option<String> {
    let line = line.trim();
    if line.is_empty() {
        return None;
    }
    // tabs would break the dataset TSV
    Some(line.replace('\t', " "))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(raw).map_err(|_| Error::InvalidUtf8 {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        out.push(line.trim_end_matches('\r').to_string());
    }
    if bytes.ends_with(b"\n") {
        out.pop();
    }
    Ok(out)
}

/// Loads a one-sentence-per-line UTF-8 file.
pub fn load_plaintext_corpus(path: impl AsRef<Path>, language_tag: &str) -> Result<Corpus> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| language_tag.to_string());
    Corpus::from_lines(&name, language_tag, lines).map_err(|_| Error::Empty(path.display().to_string()))
}

/// Lowercased, deduplicated word list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictionarySet {
    pub name: String,
    pub words: BTreeSet<String>,
}

impl DictionarySet {
    pub fn from_words<I, S>(name: &str, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(Error::Empty(format!("dictionary {name}")));
        }
        if let Some(w) = words.iter().find(|w| w.chars().any(char::is_whitespace)) {
            return Err(Error::invalid(format!("dictionary entry {w:?} contains whitespace")));
        }
        Ok(DictionarySet {
            name: name.to_string(),
            words,
        })
    }

    /// Case-insensitive exact match on the surface form.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<DictionarySet> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut words = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let entry = line.trim();
        if entry.is_empty() {
            continue;
        }
        if entry.chars().any(char::is_whitespace) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("dictionary entry {entry:?} contains whitespace"),
            });
        }
        words.push(entry.to_string());
    }
    if words.is_empty() {
        return Err(Error::Empty(path.display().to_string()));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    DictionarySet::from_words(&name, words)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagScheme {
    /// Universal part-of-speech tags, scored by token accuracy.
    Upos,
    /// Begin/inside/outside entity tags, scored by span F1.
    BioNer,
}

impl fmt::Display for TagScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagScheme::Upos => f.write_str("upos"),
            TagScheme::BioNer => f.write_str("bio-ner"),
        }
    }
}

impl std::str::FromStr for TagScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upos" | "pos" => Ok(TagScheme::Upos),
            "bio" | "ner" | "bio-ner" => Ok(TagScheme::BioNer),
            other => Err(Error::invalid(format!("unknown tag scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSequence {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedCorpus {
    pub sequences: Vec<TaggedSequence>,
    pub tagset: BTreeSet<String>,
    pub scheme: TagScheme,
    /// Number of orphan `I-X` labels promoted to `B-X` while loading.
    pub repairs: usize,
}

impl TaggedCorpus {
    pub fn new(mut sequences: Vec<TaggedSequence>, scheme: TagScheme) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::Empty("tagged corpus".into()));
        }
        let mut repairs = 0;
        for seq in &mut sequences {
            if seq.tokens.is_empty() {
                return Err(Error::Empty("tagged sequence".into()));
            }
            if seq.tokens.len() != seq.labels.len() {
                return Err(Error::Shape(format!(
                    "{} tokens but {} labels",
                    seq.tokens.len(),
                    seq.labels.len()
                )));
            }
            if scheme == TagScheme::BioNer {
                for l in &seq.labels {
                    if parse_bio(l).is_none() {
                        return Err(Error::invalid(format!("label {l:?} is not a BIO tag")));
                    }
                }
                repairs += repair_bio(&mut seq.labels);
            }
        }
        let tagset = sequences
            .iter()
            .flat_map(|s| s.labels.iter().cloned())
            .collect();
        Ok(TaggedCorpus {
            sequences,
            tagset,
            scheme,
            repairs,
        })
    }

    pub fn token_count(&self) -> usize {
        self.sequences.iter().map(|s| s.tokens.len()).sum()
    }
}

/// Splits a BIO label into its prefix and entity type.
pub fn parse_bio(label: &str) -> Option<(char, &str)> {
    if label == "O" {
        return Some(('O', ""));
    }
    let (prefix, ty) = label.split_once('-')?;
    match prefix {
        "B" if !ty.is_empty() => Some(('B', ty)),
        "I" if !ty.is_empty() => Some(('I', ty)),
        _ => None,
    }
}

/// Promotes every `I-X` that does not follow `B-X` or `I-X` to `B-X`.
/// Returns the number of labels changed.
pub fn repair_bio(labels: &mut [String]) -> usize {
    let mut repairs = 0;
    for i in 0..labels.len() {
        let Some(('I', ty)) = parse_bio(&labels[i]) else {
            continue;
        };
        let continues = i > 0
            && matches!(parse_bio(&labels[i - 1]), Some(('B' | 'I', prev)) if prev == ty);
        if !continues {
            labels[i] = format!("B-{ty}");
            repairs += 1;
        }
    }
    repairs
}

/// Loads a `token<TAB>label` file with blank lines between sequences.
pub fn load_tagged_corpus(path: impl AsRef<Path>, scheme: TagScheme) -> Result<TaggedCorpus> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut sequences = Vec::new();
    let mut current = TaggedSequence {
        tokens: Vec::new(),
        labels: Vec::new(),
    };
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            if !current.tokens.is_empty() {
                sequences.push(std::mem::replace(
                    &mut current,
                    TaggedSequence {
                        tokens: Vec::new(),
                        labels: Vec::new(),
                    },
                ));
            }
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let mut fields = line.split('\t');
        let (Some(token), Some(label), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err("expected exactly one tab".into()));
        };
        let (token, label) = (token.trim(), label.trim());
        if token.is_empty() || label.is_empty() {
            return Err(parse_err("empty token or label".into()));
        }
        if scheme == TagScheme::BioNer && parse_bio(label).is_none() {
            return Err(parse_err(format!("label {label:?} is not a BIO tag")));
        }
        current.tokens.push(token.to_string());
        current.labels.push(label.to_string());
    }
    if !current.tokens.is_empty() {
        sequences.push(current);
    }
    if sequences.is_empty() {
        return Err(Error::Empty(path.display().to_string()));
    }
    TaggedCorpus::new(sequences, scheme)
}

/// How auxiliary corpora are subsampled into a mixed dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPolicy {
    /// Sentences taken per auxiliary language; `None` means the creole corpus size.
    pub target_per_language: Option<usize>,
    /// Cap on the share of a scarce auxiliary corpus that may be used.
    pub scarce_fraction: f64,
    pub dev_ratio: f64,
    pub seed: u64,
}

impl Default for MixPolicy {
    fn default() -> Self {
        MixPolicy {
            target_per_language: None,
            scarce_fraction: 0.95,
            dev_ratio: 0.05,
            seed: 0,
        }
    }
}

impl MixPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.dev_ratio > 0.0 && self.dev_ratio < 1.0) {
            return Err(Error::invalid("dev_ratio must lie in (0, 1)"));
        }
        if !(self.scarce_fraction > 0.0 && self.scarce_fraction <= 1.0) {
            return Err(Error::invalid("scarce_fraction must lie in (0, 1]"));
        }
        if self.target_per_language == Some(0) {
            return Err(Error::invalid("target_per_language must be positive"));
        }
        Ok(())
    }

    /// Sentences drawn from an auxiliary corpus holding `available` sentences.
    pub fn take_count(&self, target: usize, available: usize) -> usize {
        // the epsilon keeps products such as 0.95 * 20 from flooring to 18
        let capped = (self.scarce_fraction * available as f64 + 1e-9).floor() as usize;
        target.min(capped)
    }
}

/// Combines the creole corpus with seeded samples from auxiliary corpora.
pub fn build_mixed_dataset(creole: &Corpus, aux: &[Corpus], policy: &MixPolicy) -> Result<Corpus> {
    policy.validate()?;
    let creole_tags: HashSet<&str> = creole.language_inventory.iter().map(String::as_str).collect();
    let mut seen: HashSet<&str> = HashSet::new();
    for c in aux {
        for tag in &c.language_inventory {
            if creole_tags.contains(tag.as_str()) {
                return Err(Error::invalid(format!(
                    "auxiliary language {tag:?} collides with the creole tag"
                )));
            }
            if !seen.insert(tag.as_str()) {
                return Err(Error::invalid(format!("auxiliary language {tag:?} given twice")));
            }
        }
    }
    let target = policy.target_per_language.unwrap_or(creole.len());
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut sentences: Vec<Sentence> = creole.sentences.clone();
    for c in aux {
        let take = policy.take_count(target, c.len());
        let mut picked = index::sample(&mut rng, c.len(), take).into_vec();
        picked.sort_unstable();
        sentences.extend(picked.into_iter().map(|i| c.sentences[i].clone()));
    }
    let name = format!("{}-mixed", creole.name);
    let mut out = Corpus::from_sentences(&name, sentences)?;
    let mut inventory = creole.language_inventory.clone();
    inventory.extend(aux.iter().flat_map(|c| c.language_inventory.iter().cloned()));
    out.language_inventory = inventory;
    Ok(out)
}

/// Requested size of the development split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DevSize {
    /// Fraction of the eligible sentences, rounded to the nearest count.
    Ratio(f64),
    /// Explicit number of sentences.
    Count(usize),
}

/// Seeded train/dev partition. When the corpus carries a creole tag the dev
/// set is drawn from creole sentences only and sized from that subset.
pub fn split_train_dev(corpus: &Corpus, dev: DevSize, seed: u64) -> Result<(Corpus, Corpus)> {
    if corpus.len() < 2 {
        return Err(Error::invalid("at least two sentences are needed to split"));
    }
    let eligible: Vec<usize> = match corpus.creole_tag() {
        Some(tag) => (0..corpus.len())
            .filter(|&i| corpus.sentences[i].source_language == tag)
            .collect(),
        None => (0..corpus.len()).collect(),
    };
    let dev_count = match dev {
        DevSize::Ratio(r) => {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::invalid("dev_ratio must lie in (0, 1)"));
            }
            (r * eligible.len() as f64).round() as usize
        }
        DevSize::Count(n) => n,
    };
    if dev_count == 0 {
        return Err(Error::invalid("dev split would be empty"));
    }
    if dev_count > eligible.len() || dev_count >= corpus.len() {
        return Err(Error::invalid(format!(
            "dev split of {dev_count} leaves no training data ({} eligible)",
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_dev = vec![false; corpus.len()];
    for k in index::sample(&mut rng, eligible.len(), dev_count) {
        in_dev[eligible[k]] = true;
    }
    let (mut train, mut dev) = (Vec::new(), Vec::new());
    for (s, &d) in corpus.sentences.iter().zip(&in_dev) {
        if d {
            dev.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    let part = |suffix: &str, sentences: Vec<Sentence>| Corpus {
        name: format!("{}-{suffix}", corpus.name),
        sentences,
        language_inventory: corpus.language_inventory.clone(),
    };
    Ok((part("train", train), part("dev", dev)))
}

/// A corpus whose sentences carry dense DRO group ids `0..group_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    pub corpus: Corpus,
    pub group_ids: Vec<usize>,
    pub group_count: usize,
    /// Human-readable name of each dense group id.
    pub group_labels: Vec<String>,
}

impl GroupedDataset {
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.group_count];
        for &g in &self.group_ids {
            sizes[g] += 1;
        }
        sizes
    }
}

/// Writes `text<TAB>source_language<TAB>group_id`; ungrouped rows carry -1.
pub fn write_dataset_tsv(
    path: impl AsRef<Path>,
    corpus: &Corpus,
    group_ids: Option<&[usize]>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (i, s) in corpus.sentences.iter().enumerate() {
        let g = group_ids.map_or(-1, |g| g[i] as i64);
        writeln!(out, "{}\t{}\t{}", s.text, s.source_language, g).expect("write to vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a dataset TSV back. Group ids are returned only when every row has one.
pub fn read_dataset_tsv(path: impl AsRef<Path>) -> Result<(Corpus, Option<Vec<usize>>)> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut sentences = Vec::new();
    let mut groups = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: message.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err("expected text, source_language and group_id"));
        }
        let g: i64 = fields[2].trim().parse().map_err(|_| err("bad group_id"))?;
        sentences.push(Sentence {
            id: sentences.len(),
            text: fields[0].to_string(),
            source_language: fields[1].to_string(),
        });
        groups.push(g);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let corpus = Corpus::from_sentences(&name, sentences)?;
    let groups = if groups.iter().all(|&g| g >= 0) {
        Some(groups.into_iter().map(|g| g as usize).collect())
    } else {
        None
    };
    Ok((corpus, groups))
}
