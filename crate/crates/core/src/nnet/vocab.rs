use std::collections::HashMap;
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const MASK_ID: u32 = 2;
pub const RESERVED: usize = 3;
pub const SPECIAL_TOKENS: [&str; RESERVED] = ["[PAD]", "[UNK]", "[MASK]"];

/// Word-level vocabulary. Ids 0..3 are PAD, UNK and MASK.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

/// Lowercased whitespace tokens of `text`.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().map(str::to_lowercase)
}

impl Vocab {
    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { tokens, index }
    }

    /// Keeps words seen at least `min_count` times, most frequent first with
    /// lexicographic tie-breaking, up to `max_size` entries including the
    /// reserved tokens.
    pub fn build<'a, I>(texts: I, max_size: usize, min_count: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if max_size < RESERVED + 1 {
            return Err(Error::invalid(format!("vocabulary max_size {max_size} is below 4")));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for w in words(text) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut kept: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_count.max(1) && !SPECIAL_TOKENS.contains(&w.as_str()))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(max_size - RESERVED);
        let tokens = SPECIAL_TOKENS
            .iter()
            .map(|s| s.to_string())
            .chain(kept.into_iter().map(|(w, _)| w))
            .collect();
        Ok(Self::from_tokens(tokens))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(&word.to_lowercase()).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Lowercase, split on whitespace, map with UNK fallback, keep at most `max_len`.
    pub fn tokenize(&self, text: &str, max_len: usize) -> Vec<u32> {
        words(text)
            .take(max_len)
            .map(|w| self.index.get(&w).copied().unwrap_or(UNK_ID))
            .collect()
    }

    /// One token per line in id order.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut body = self.tokens.join("\n");
        body.push('\n');
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let tokens: Vec<String> = body.lines().map(str::to_string).collect();
        if tokens.len() < RESERVED || tokens[..RESERVED] != SPECIAL_TOKENS {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "vocabulary must start with [PAD], [UNK], [MASK]".into(),
            });
        }
        Ok(Self::from_tokens(tokens))
    }
}

pub fn build_vocab(corpus: &Corpus, max_size: usize, min_count: usize) -> Result<Vocab> {
    Vocab::build(corpus.texts(), max_size, min_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(texts: &[&str], max: usize, min: usize) -> Vocab {
        Vocab::build(texts.iter().copied(), max, min).unwrap()
    }

    #[test]
    fn counts_and_min_count() {
        let vocab = v(&["a a b"], 100, 1);
        assert_eq!(vocab.tokens(), ["[PAD]", "[UNK]", "[MASK]", "a", "b"]);
        assert_eq!(v(&["a a b"], 100, 2).len(), 4);
    }

    #[test]
    fn lexicographic_ties_and_truncation() {
        let vocab = v(&["y x y x x y z"], 100, 1);
        assert_eq!(&vocab.tokens()[3..], ["x", "y", "z"]);
        let vocab = v(&["y x y x x y z"], 5, 1);
        assert_eq!(&vocab.tokens()[3..], ["x", "y"]);
        assert!(Vocab::build(["a"], 3, 1).is_err());
    }

    #[test]
    fn tokenize_rules() {
        let vocab = v(&["a b"], 10, 1);
        assert_eq!(vocab.tokenize("A b", 64), [vocab.id("a").unwrap(), vocab.id("b").unwrap()]);
        assert_eq!(vocab.tokenize("zzz", 64), [UNK_ID]);
        let long = vec!["a"; 100].join(" ");
        assert_eq!(vocab.tokenize(&long, 64).len(), 64);
    }

    #[test]
    fn file_round_trip() {
        let vocab = v(&["makan lah makan"], 10, 1);
        let f = tempfile::NamedTempFile::new().unwrap();
        vocab.write(f.path()).unwrap();
        assert_eq!(Vocab::read(f.path()).unwrap(), vocab);
    }
}
