//! Order-invariant keyword-set to sentence generation.
//!
//! Table file rows look like `k1, k2 → sentence` (`->` is accepted as well);
//! blank lines and lines starting with `#` are skipped. Each row is stored
//! under its canonical key, so permutations of a keyword set share one entry.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const KEY_SEPARATOR: &str = "|";

/// Table shipped with the engine.
pub const BUNDLED_TABLE: &str = include_str!("../data/sentences.txt");

/// Lowercase, deduplicate, sort and join with `|`.
pub fn canonical_key<S: AsRef<str>>(keywords: &[S]) -> Result<String> {
    if keywords.is_empty() {
        return Err(Error::EmptyInput("keyword list"));
    }
    let mut words = Vec::with_capacity(keywords.len());
    for k in keywords {
        let w = k.as_ref().trim().to_lowercase();
        if w.is_empty() {
            return Err(Error::EmptyInput("keyword"));
        }
        words.push(w);
    }
    words.sort();
    words.dedup();
    Ok(words.join(KEY_SEPARATOR))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedSentence {
    pub text: String,
    /// Whether the keyword set was found in the table.
    pub matched: bool,
}

/// Keywords in, sentence out. Implementations must be total on non-empty input.
pub trait SentenceGenerator: Send + Sync {
    fn generate(&self, keywords: &[&str]) -> Result<GeneratedSentence>;
}

pub fn fallback_sentence(keywords: &[&str]) -> String {
    format!("I want to say: {}", keywords.join(", "))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentenceTable {
    entries: HashMap<String, String>,
}

impl SentenceTable {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLE, Path::new("<bundled>")).expect("bundled sentence table is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        // key -> (sentence, defining line)
        let mut rows: HashMap<String, (String, usize)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (keys, sentence) = line
                .split_once('→')
                .or_else(|| line.split_once("->"))
                .ok_or_else(|| Error::malformed(origin, n, "expected `k1, k2 → sentence`"))?;
            let sentence = sentence.trim();
            if sentence.is_empty() {
                return Err(Error::malformed(origin, n, "empty sentence"));
            }
            let words: Vec<&str> = keys.split(',').map(str::trim).collect();
            let key = canonical_key(&words).map_err(|_| Error::malformed(origin, n, "empty keyword"))?;
            match rows.get(&key) {
                Some((existing, first_line)) if existing != sentence => {
                    return Err(Error::SentenceConflict {
                        key,
                        first_line: *first_line,
                        first: existing.clone(),
                        second_line: n,
                        second: sentence.to_owned(),
                    });
                }
                Some(_) => {}
                None => {
                    rows.insert(key, (sentence.to_owned(), n));
                }
            }
        }
        Ok(SentenceTable {
            entries: rows.into_iter().map(|(k, (s, _))| (k, s)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Canonical keys in sorted order.
    pub fn keys(&self) -> Vec<&str> {
        let mut keys: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        keys.sort_unstable();
        keys
    }
}

impl SentenceGenerator for SentenceTable {
    fn generate(&self, keywords: &[&str]) -> Result<GeneratedSentence> {
        let key = canonical_key(keywords)?;
        Ok(match self.entries.get(&key) {
            Some(text) => GeneratedSentence {
                text: text.clone(),
                matched: true,
            },
            None => GeneratedSentence {
                text: fallback_sentence(keywords),
                matched: false,
            },
        })
    }
}
