//! Seeded synthetic languages for fixtures and tests.
//!
//! Each language owns a lexicon spelled over its own character inventory and
//! a sparse first-order word transition structure, so that a masked word is
//! partly predictable from its neighbours.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct SyntheticLanguage {
    pub tag: String,
    pub lexicon: Vec<String>,
    successors: Vec<Vec<usize>>,
    pub min_len: usize,
    pub max_len: usize,
}

/// Lowercase Latin letters.
pub const LATIN: &str = "abcdefghijklmnopqrstuvwxyz";
/// Greek lowercase letters.
pub const GREEK: &str = "αβγδεζηθικλμνξοπρστυφχψω";
/// Cyrillic lowercase letters.
pub const CYRILLIC: &str = "абвгдежзийклмнопрстуфхцчшщыэюя";
/// Hiragana syllables.
pub const KANA: &str = "あいうえおかきくけこさしすせそたちつてとなにぬねのはひふへほまみむめも";

/// Random words of 2..=6 characters drawn from `alphabet`, without duplicates.
pub fn random_lexicon(alphabet: &str, size: usize, seed: u64) -> Vec<String> {
    let chars: Vec<char> = alphabet.chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words: Vec<String> = Vec::with_capacity(size);
    let mut attempts = 0;
    while words.len() < size && attempts < size * 100 {
        attempts += 1;
        let len = rng.random_range(2..=6);
        let w: String = (0..len).map(|_| *chars.choose(&mut rng).unwrap()).collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    words
}

impl SyntheticLanguage {
    /// Builds a language over `lexicon` where each word is followed by one of
    /// `branching` successors fixed at construction.
    pub fn new(tag: &str, lexicon: Vec<String>, branching: usize, seed: u64) -> Self {
        assert!(!lexicon.is_empty(), "lexicon must not be empty");
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a6e);
        let n = lexicon.len();
        let successors = (0..n)
            .map(|_| (0..branching.max(1)).map(|_| rng.random_range(0..n)).collect())
            .collect();
        SyntheticLanguage {
            tag: tag.to_string(),
            lexicon,
            successors,
            min_len: 4,
            max_len: 9,
        }
    }

    pub fn with_alphabet(tag: &str, alphabet: &str, lexicon_size: usize, seed: u64) -> Self {
        Self::new(tag, random_lexicon(alphabet, lexicon_size, seed), 3, seed)
    }

    pub fn with_lengths(mut self, min_len: usize, max_len: usize) -> Self {
        assert!(min_len >= 1 && min_len <= max_len);
        self.min_len = min_len;
        self.max_len = max_len;
        self
    }

    pub fn sentence<R: Rng>(&self, rng: &mut R) -> String {
        let len = rng.random_range(self.min_len..=self.max_len);
        let mut w = rng.random_range(0..self.lexicon.len());
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            words.push(self.lexicon[w].as_str());
            w = *self.successors[w].choose(rng).unwrap();
        }
        words.join(" ")
    }

    pub fn sentences(&self, n: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sentence(&mut rng)).collect()
    }

    pub fn corpus(&self, n: usize, seed: u64) -> Result<Corpus> {
        Corpus::from_lines(&self.tag, &self.tag, self.sentences(n, seed))
    }
}

/// A creole-like language whose lexicon mixes its own words with words
/// borrowed from `sources`, `borrow` words from each.
pub fn creole_of(
    tag: &str,
    alphabet: &str,
    own_words: usize,
    sources: &[&SyntheticLanguage],
    borrow: usize,
    seed: u64,
) -> SyntheticLanguage {
    let mut lexicon = random_lexicon(alphabet, own_words, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for src in sources {
        for w in src.lexicon.choose_multiple(&mut rng, borrow) {
            if !lexicon.contains(w) {
                lexicon.push(w.clone());
            }
        }
    }
    SyntheticLanguage::new(tag, lexicon, 3, seed)
}
