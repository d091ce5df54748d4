//! Character n-gram language identification and DRO group assignment.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, GroupedDataset, Sentence};
use crate::error::{Error, Result};
use crate::table::{fmt_f64, Table};

/// Lower bound applied to a character probability before taking its log.
pub const PROB_FLOOR: f64 = 1e-12;
/// Minimum sentences per training corpus.
pub const MIN_TRAINING_SENTENCES: usize = 50;
/// Symbol standing in for characters never seen in training.
const UNKNOWN: char = '\u{fffd}';
const PAD: char = ' ';

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct ContextCounts {
    total: u64,
    next: BTreeMap<char, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LanguageModel {
    /// `orders[n - 1]` maps a context of `n - 1` characters to its successor counts.
    orders: Vec<BTreeMap<String, ContextCounts>>,
}

/// A bank of additive-smoothed character n-gram models, one per language.
///
/// The probability of a character is the equal-weight mixture of the order
/// 1..=n_max estimates, each of which is normalized over the shared alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Identifier {
    pub language_order: Vec<String>,
    pub n_max: usize,
    pub alpha: f64,
    alphabet: Vec<char>,
    models: Vec<LanguageModel>,
}

/// Lowercases, keeps alphabetic characters and collapses everything else
/// into single spaces.
pub fn normalize_for_langid(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphabetic() {
            if pending_space && !out.is_empty() {
                out.push(PAD);
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

pub fn train_identifier(labeled: &[Corpus], n_max: usize, alpha: f64) -> Result<Identifier> {
    if labeled.len() < 2 {
        return Err(Error::invalid("language identification needs at least two languages"));
    }
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("smoothing constant must be finite and non-negative"));
    }
    let mut language_order = Vec::new();
    for c in labeled {
        let tag = c
            .language_inventory
            .first()
            .ok_or_else(|| Error::invalid("corpus without a language tag"))?;
        if language_order.contains(tag) {
            return Err(Error::invalid(format!("duplicate language {tag:?}")));
        }
        if c.len() < MIN_TRAINING_SENTENCES {
            return Err(Error::invalid(format!(
                "corpus for {tag:?} has {} sentences, need {MIN_TRAINING_SENTENCES}",
                c.len()
            )));
        }
        language_order.push(tag.clone());
    }

    let normalized: Vec<Vec<Vec<char>>> = labeled
        .iter()
        .map(|c| c.texts().map(|t| padded(&normalize_for_langid(t))).collect())
        .collect();
    let mut alphabet: Vec<char> = normalized
        .iter()
        .flatten()
        .flatten()
        .copied()
        .collect::<HashSet<char>>()
        .into_iter()
        .collect();
    alphabet.push(UNKNOWN);
    alphabet.sort_unstable();
    alphabet.dedup();

    let models = normalized
        .iter()
        .map(|sentences| {
            let mut orders = vec![BTreeMap::<String, ContextCounts>::new(); n_max];
            for chars in sentences {
                if chars.len() <= 2 {
                    continue;
                }
                for pos in 1..chars.len() {
                    for (n, table) in orders.iter_mut().enumerate() {
                        let ctx = context(chars, pos, n);
                        let entry = table.entry(ctx).or_default();
                        entry.total += 1;
                        *entry.next.entry(chars[pos]).or_default() += 1;
                    }
                }
            }
            LanguageModel { orders }
        })
        .collect();

    Ok(Identifier {
        language_order,
        n_max,
        alpha,
        alphabet,
        models,
    })
}

fn padded(normalized: &str) -> Vec<char> {
    let mut v = Vec::with_capacity(normalized.len() + 2);
    v.push(PAD);
    v.extend(normalized.chars());
    v.push(PAD);
    v
}

/// The `len` characters before `pos`, left-padded with spaces.
fn context(chars: &[char], pos: usize, len: usize) -> String {
    (0..len)
        .map(|k| {
            let back = len - k;
            if back > pos {
                PAD
            } else {
                chars[pos - back]
            }
        })
        .collect()
}

/// Per-language confidences, aligned with the identifier's language order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceMap {
    pub languages: Vec<String>,
    pub scores: Vec<f64>,
    /// Set when the input had nothing to score and the uniform fallback was used.
    pub fallback: bool,
}

impl ConfidenceMap {
    pub fn new(languages: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        if languages.len() != scores.len() || languages.is_empty() {
            return Err(Error::Shape("one score per language is required".into()));
        }
        if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::invalid("confidence scores must lie in [0, 1]"));
        }
        Ok(ConfidenceMap {
            languages,
            scores,
            fallback: false,
        })
    }

    pub fn get(&self, language: &str) -> Option<f64> {
        self.languages
            .iter()
            .position(|l| l == language)
            .map(|i| self.scores[i])
    }

    pub fn argmax(&self) -> &str {
        let mut best = 0;
        for (i, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = i;
            }
        }
        &self.languages[best]
    }
}

impl Identifier {
    fn symbol(&self, c: char) -> char {
        if self.alphabet.binary_search(&c).is_ok() {
            c
        } else {
            UNKNOWN
        }
    }

    /// Smoothed probability of `next` after `history` (most recent last)
    /// under the model for `language_order[lang]`.
    pub fn probability(&self, lang: usize, history: &str, next: char) -> f64 {
        let hist: Vec<char> = history.chars().map(|c| self.symbol(c)).collect();
        let next = self.symbol(next);
        let mut chars = hist;
        chars.push(next);
        let pos = chars.len() - 1;
        self.mixture(&self.models[lang], &chars, pos)
    }

    fn mixture(&self, model: &LanguageModel, chars: &[char], pos: usize) -> f64 {
        let a = self.alphabet.len() as f64;
        let mut p = 0.0;
        for (n, table) in model.orders.iter().enumerate() {
            let counts = table.get(&context(chars, pos, n));
            let (total, hit) = counts
                .map(|c| (c.total as f64, c.next.get(&chars[pos]).copied().unwrap_or(0) as f64))
                .unwrap_or((0.0, 0.0));
            let denom = total + self.alpha * a;
            p += if denom > 0.0 {
                (hit + self.alpha) / denom
            } else {
                1.0 / a
            };
        }
        p / model.orders.len() as f64
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> impl Iterator<Item = char> + '_ {
        self.alphabet.iter().copied()
    }

    /// Softmax over languages of the per-character mean log-likelihood.
    pub fn identify(&self, sentence: &Sentence) -> ConfidenceMap {
        self.identify_text(&sentence.text)
    }

    pub fn identify_text(&self, text: &str) -> ConfidenceMap {
        let n = self.language_order.len();
        let normalized = normalize_for_langid(text);
        if normalized.is_empty() {
            log::warn!("no scorable characters in {text:?}; using uniform confidences");
            return ConfidenceMap {
                languages: self.language_order.clone(),
                scores: vec![1.0 / n as f64; n],
                fallback: true,
            };
        }
        let chars: Vec<char> = padded(&normalized).into_iter().map(|c| self.symbol(c)).collect();
        let positions = chars.len() - 1;
        let mean_ll: Vec<f64> = self
            .models
            .iter()
            .map(|m| {
                (1..chars.len())
                    .map(|pos| self.mixture(m, &chars, pos).max(PROB_FLOOR).ln())
                    .sum::<f64>()
                    / positions as f64
            })
            .collect();
        let max = mean_ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = mean_ll.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        ConfidenceMap {
            languages: self.language_order.clone(),
            scores: exps.into_iter().map(|e| e / z).collect(),
            fallback: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupStrategy {
    /// Every example in a single group.
    One,
    /// Examples assigned uniformly at random to a fixed number of groups.
    Random,
    /// Groups derived from the languages present in each example.
    Language,
}

impl fmt::Display for GroupStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupStrategy::One => "one",
            GroupStrategy::Random => "random",
            GroupStrategy::Language => "language",
        })
    }
}

impl std::str::FromStr for GroupStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(GroupStrategy::One),
            "random" => Ok(GroupStrategy::Random),
            "language" => Ok(GroupStrategy::Language),
            other => Err(Error::invalid(format!("unknown grouping strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    pub group_id: u64,
    pub present_languages: Vec<String>,
    pub strategy: GroupStrategy,
}

/// Languages whose confidence reaches `threshold` are present; the group id
/// is the bitmask of present languages (bit i for `languages[i]`).
pub fn assign_group(conf: &ConfidenceMap, threshold: f64) -> GroupAssignment {
    let mut group_id = 0u64;
    let mut present = Vec::new();
    for (i, (lang, &score)) in conf.languages.iter().zip(&conf.scores).enumerate() {
        if score >= threshold {
            group_id |= 1 << i;
            present.push(lang.clone());
        }
    }
    GroupAssignment {
        group_id,
        present_languages: present,
        strategy: GroupStrategy::Language,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingOptions {
    pub strategy: GroupStrategy,
    /// Number of groups for the random strategy.
    pub group_count: usize,
    /// Presence threshold on normalized confidences for the language strategy.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for GroupingOptions {
    fn default() -> Self {
        GroupingOptions {
            strategy: GroupStrategy::Language,
            group_count: 4,
            threshold: 0.001,
            seed: 0,
        }
    }
}

/// Assigns every sentence a group and relabels the groups densely.
///
/// Under the language strategy, corpora with more than one source language
/// are grouped by source language; single-language (creole-only) corpora are
/// grouped by the set of languages the identifier detects.
pub fn annotate_groups(
    dataset: &Corpus,
    identifier: Option<&Identifier>,
    options: &GroupingOptions,
) -> Result<GroupedDataset> {
    let raw: Vec<(u64, String)> = match options.strategy {
        GroupStrategy::One => vec![(0, "all".to_string()); dataset.len()],
        GroupStrategy::Random => {
            if options.group_count == 0 {
                return Err(Error::invalid("group_count must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            (0..dataset.len())
                .map(|_| {
                    let g = rng.random_range(0..options.group_count) as u64;
                    (g, format!("random-{g}"))
                })
                .collect()
        }
        GroupStrategy::Language => {
            let tags: Vec<&String> = {
                let mut seen = Vec::new();
                for s in &dataset.sentences {
                    if !seen.contains(&&s.source_language) {
                        seen.push(&s.source_language);
                    }
                }
                seen
            };
            if tags.len() > 1 {
                let order: Vec<&String> = dataset
                    .language_inventory
                    .iter()
                    .filter(|t| tags.contains(t))
                    .chain(tags.iter().copied().filter(|t| !dataset.language_inventory.contains(t)))
                    .collect();
                dataset
                    .sentences
                    .iter()
                    .map(|s| {
                        let k = order.iter().position(|t| **t == s.source_language).unwrap();
                        (k as u64, s.source_language.clone())
                    })
                    .collect()
            } else {
                let id = identifier.ok_or_else(|| {
                    Error::invalid(
                        "language grouping of a single-language corpus requires a language identifier",
                    )
                })?;
                if !(0.0..1.0).contains(&options.threshold) {
                    return Err(Error::invalid("threshold must lie in [0, 1)"));
                }
                dataset
                    .sentences
                    .iter()
                    .map(|s| {
                        let a = assign_group(&id.identify(s), options.threshold);
                        let label = if a.present_languages.is_empty() {
                            "none".to_string()
                        } else {
                            a.present_languages.join("+")
                        };
                        (a.group_id, label)
                    })
                    .collect()
            }
        }
    };
    let (group_ids, group_labels) = dense_relabel(&raw);
    Ok(GroupedDataset {
        corpus: dataset.clone(),
        group_count: group_labels.len(),
        group_ids,
        group_labels,
    })
}

/// Maps raw keys to `0..G` in ascending key order, dropping unused keys.
pub fn dense_relabel(raw: &[(u64, String)]) -> (Vec<usize>, Vec<String>) {
    let keys: BTreeMap<u64, &str> = raw.iter().map(|(k, l)| (*k, l.as_str())).collect();
    let dense: BTreeMap<u64, usize> = keys.keys().enumerate().map(|(i, &k)| (k, i)).collect();
    let labels = keys.values().map(|l| l.to_string()).collect();
    (raw.iter().map(|(k, _)| dense[k]).collect(), labels)
}

pub const HISTOGRAM_BINS: usize = 20;

/// Per-language histogram of confidence scores over 20 equal bins on [0, 1].
/// Columns: language, bin_lo, bin_hi, count.
pub fn language_distribution_report(dataset: &Corpus, identifier: &Identifier) -> Result<Table> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset".into()));
    }
    let n = identifier.language_order.len();
    let mut counts = vec![[0usize; HISTOGRAM_BINS]; n];
    for s in &dataset.sentences {
        let conf = identifier.identify(s);
        for (l, &score) in conf.scores.iter().enumerate() {
            let bin = ((score * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            counts[l][bin] += 1;
        }
    }
    let mut table = Table::new(["language", "bin_lo", "bin_hi", "count"]);
    for (lang, bins) in identifier.language_order.iter().zip(&counts) {
        for (b, &c) in bins.iter().enumerate() {
            let lo = b as f64 / HISTOGRAM_BINS as f64;
            let hi = (b + 1) as f64 / HISTOGRAM_BINS as f64;
            table.push([lang.clone(), fmt_f64(lo), fmt_f64(hi), c.to_string()]);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{SyntheticLanguage, CYRILLIC, GREEK};

    fn two_languages() -> (Vec<Corpus>, Vec<SyntheticLanguage>) {
        let a = SyntheticLanguage::with_alphabet("a", GREEK, 60, 1);
        let b = SyntheticLanguage::with_alphabet("b", CYRILLIC, 60, 2);
        let corpora = vec![a.corpus(200, 10).unwrap(), b.corpus(200, 11).unwrap()];
        (corpora, vec![a, b])
    }

    #[test]
    fn distinguishes_disjoint_alphabets() {
        let (corpora, langs) = two_languages();
        let id = train_identifier(&corpora, 4, 0.5).unwrap();
        let mut correct = 0;
        let mut total = 0;
        for lang in &langs {
            for s in lang.sentences(100, 99) {
                total += 1;
                if id.identify_text(&s).argmax() == lang.tag {
                    correct += 1;
                }
            }
        }
        assert!(correct as f64 / total as f64 >= 0.99, "{correct}/{total}");
    }

    #[test]
    fn rejects_bad_training_input() {
        let (corpora, _) = two_languages();
        assert!(train_identifier(&corpora[..1], 4, 0.5).is_err());
        let dup = vec![corpora[0].clone(), corpora[0].clone()];
        assert!(train_identifier(&dup, 4, 0.5).is_err());
        let small = Corpus::from_lines("c", "c", ["x y"; 10]).unwrap();
        assert!(train_identifier(&[corpora[0].clone(), small], 4, 0.5).is_err());
    }

    #[test]
    fn zero_smoothing_stays_finite() {
        let (corpora, _) = two_languages();
        let id = train_identifier(&corpora, 3, 0.0).unwrap();
        let conf = id.identify_text("zzz qqq ∂∂");
        assert!(conf.scores.iter().all(|s| s.is_finite()));
        assert!((conf.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn context_distributions_normalize() {
        let (corpora, _) = two_languages();
        for alpha in [0.0, 0.1, 1.0] {
            let id = train_identifier(&corpora, 4, alpha).unwrap();
            let alphabet: Vec<char> = id.alphabet().collect();
            for history in ["", "α", " βγ", "абв", "xyz"] {
                for lang in 0..2 {
                    let total: f64 = alphabet.iter().map(|&c| id.probability(lang, history, c)).sum();
                    assert!((total - 1.0).abs() < 1e-9, "{history:?} {lang} {total}");
                }
            }
        }
    }

    #[test]
    fn fallback_is_uniform() {
        let (corpora, _) = two_languages();
        let id = train_identifier(&corpora, 4, 0.5).unwrap();
        let conf = id.identify_text("123 !!! ...");
        assert!(conf.fallback);
        assert_eq!(conf.scores, vec![0.5, 0.5]);
    }

    #[test]
    fn singlish_example_bitmask() {
        let langs: Vec<String> = ["en", "zh", "ms", "ta"].iter().map(|s| s.to_string()).collect();
        let conf = ConfidenceMap::new(langs, vec![0.8819, 0.0001, 0.0434, 0.0004]).unwrap();
        let a = assign_group(&conf, 0.001);
        assert_eq!(a.present_languages, ["en", "ms"]);
        assert_eq!(a.group_id, 5);
        let none = assign_group(&conf, 0.99);
        assert!(none.present_languages.is_empty());
        assert_eq!(none.group_id, 0);
        assert_eq!(assign_group(&conf, 0.0).group_id, 15);
    }

    #[test]
    fn one_and_random_strategies() {
        let (corpora, _) = two_languages();
        let one = annotate_groups(
            &corpora[0],
            None,
            &GroupingOptions {
                strategy: GroupStrategy::One,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one.group_count, 1);
        assert!(one.group_ids.iter().all(|&g| g == 0));

        let big = Corpus::from_lines("r", "r", (0..1000).map(|i| format!("s {i}"))).unwrap();
        let opts = GroupingOptions {
            strategy: GroupStrategy::Random,
            group_count: 4,
            seed: 3,
            ..Default::default()
        };
        let r1 = annotate_groups(&big, None, &opts).unwrap();
        let r2 = annotate_groups(&big, None, &opts).unwrap();
        assert_eq!(r1.group_ids, r2.group_ids);
        assert_eq!(r1.group_count, 4);
        assert!(r1.group_sizes().iter().all(|&n| n > 150));
    }

    #[test]
    fn language_strategy_on_mixed_uses_tags() {
        let tags = ["creole:pcm", "en", "pt", "yo"];
        let sentences: Vec<Sentence> = (0..40)
            .map(|i| Sentence {
                id: i,
                text: format!("w{i}"),
                source_language: tags[i % 4].to_string(),
            })
            .collect();
        let mixed = Corpus::from_sentences("mixed", sentences).unwrap();
        let g = annotate_groups(&mixed, None, &GroupingOptions::default()).unwrap();
        assert_eq!(g.group_count, 4);
        assert_eq!(g.group_labels, tags);
        for (s, &gid) in mixed.sentences.iter().zip(&g.group_ids) {
            assert_eq!(g.group_labels[gid], s.source_language);
        }
    }

    #[test]
    fn language_strategy_on_creole_needs_identifier() {
        let c = Corpus::from_lines("c", "creole:x", ["a b", "c d"]).unwrap();
        assert!(annotate_groups(&c, None, &GroupingOptions::default()).is_err());
    }

    #[test]
    fn histogram_shapes() {
        let (corpora, langs) = two_languages();
        let id = train_identifier(&corpora, 4, 0.5).unwrap();
        let same = Corpus::from_lines("s", "s", vec![langs[0].sentences(1, 5)[0].clone(); 10]).unwrap();
        let t = language_distribution_report(&same, &id).unwrap();
        assert_eq!(t.rows.len(), 2 * HISTOGRAM_BINS);
        for lang in ["a", "b"] {
            let nonzero: Vec<&Vec<String>> =
                t.rows.iter().filter(|r| r[0] == lang && r[3] != "0").collect();
            assert_eq!(nonzero.len(), 1);
            assert_eq!(nonzero[0][3], "10");
        }

        let mut lines = langs[0].sentences(50, 7);
        lines.extend(langs[1].sentences(50, 8));
        let mix = Corpus::from_lines("m", "m", lines).unwrap();
        let t = language_distribution_report(&mix, &id).unwrap();
        let a_counts: Vec<usize> = t.rows.iter().filter(|r| r[0] == "a").map(|r| r[3].parse().unwrap()).collect();
        let q = HISTOGRAM_BINS / 4;
        let low: usize = a_counts[..q].iter().sum();
        let high: usize = a_counts[HISTOGRAM_BINS - q..].iter().sum();
        assert_eq!(low + high, 100);
        assert!(low >= 45 && high >= 45);
    }

    #[test]
    fn dense_relabel_preserves_partition() {
        let raw: Vec<(u64, String)> = [9u64, 3, 9, 12, 3, 3]
            .iter()
            .map(|&k| (k, k.to_string()))
            .collect();
        let (ids, labels) = dense_relabel(&raw);
        assert_eq!(ids, [1, 0, 1, 2, 0, 0]);
        assert_eq!(labels, ["3", "9", "12"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn conf_strategy() -> impl Strategy<Value = ConfidenceMap> {
            proptest::collection::vec(0.0f64..1.0, 2..6).prop_map(|raw| {
                let z: f64 = raw.iter().sum::<f64>().max(1e-12);
                let langs = (0..raw.len()).map(|i| format!("l{i}")).collect();
                ConfidenceMap::new(langs, raw.iter().map(|r| r / z).collect()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn threshold_monotone(conf in conf_strategy(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                let a_lo = assign_group(&conf, lo);
                let a_hi = assign_group(&conf, hi);
                prop_assert!(a_hi.present_languages.iter().all(|l| a_lo.present_languages.contains(l)));
                prop_assert_eq!(a_hi.group_id & !a_lo.group_id, 0);
            }

            #[test]
            fn relabel_partition(keys in proptest::collection::vec(0u64..20, 1..60)) {
                let raw: Vec<(u64, String)> = keys.iter().map(|&k| (k, String::new())).collect();
                let (ids, labels) = dense_relabel(&raw);
                prop_assert!(ids.iter().all(|&g| g < labels.len()));
                for i in 0..keys.len() {
                    for j in 0..keys.len() {
                        prop_assert_eq!(keys[i] == keys[j], ids[i] == ids[j]);
                    }
                }
            }

            #[test]
            fn confidences_normalized(text in "[a-zαβγабв ]{0,40}") {
                let (corpora, _) = two_languages();
                let id = train_identifier(&corpora, 3, 0.5).unwrap();
                let conf = id.identify_text(&text);
                prop_assert!((conf.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(conf.scores.iter().all(|&s| s >= 0.0));
                prop_assert_eq!(assign_group(&conf, 0.01), assign_group(&id.identify_text(&text), 0.01));
            }
        }
    }
}
