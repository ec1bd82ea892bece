//! Tokenization, stop-word filtering and the frequency-ranked vocabulary.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Characters trimmed from both ends of every whitespace-separated token.
const PUNCTUATION: &[char] = &[
    '!', '"', '#', '$', '%', '&', '\'', '(', ')', '*', '+', ',', '-', '.', '/', ':', ';', '<', '=',
    '>', '?', '@', '[', '\\', ']', '^', '_', '`', '{', '|', '}', '~', '\u{2018}', '\u{2019}',
    '\u{201c}', '\u{201d}', '\u{00ab}', '\u{00bb}', '\u{2026}', '\u{2013}', '\u{2014}',
];

#[derive(Debug, Clone, Default)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopWords(
            words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    /// One word per line; blank lines are ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = decode(&bytes)?;
        Ok(Self::from_words(text.lines()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Validates UTF-8, reporting the offset of the first bad byte.
pub fn decode(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| Error::Encoding {
        offset: e.valid_up_to(),
    })
}

/// Lazily yields lowercased, punctuation-trimmed tokens, skipping stop words.
pub fn tokens<'a>(text: &'a str, stopwords: &'a StopWords) -> impl Iterator<Item = Cow<'a, str>> + 'a {
    text.split_whitespace().filter_map(move |raw| {
        let trimmed = raw.trim_matches(PUNCTUATION);
        if trimmed.is_empty() {
            return None;
        }
        let token = if trimmed.chars().any(char::is_uppercase) {
            Cow::Owned(trimmed.to_lowercase())
        } else {
            Cow::Borrowed(trimmed)
        };
        (!stopwords.contains(&token)).then_some(token)
    })
}

pub fn tokenize(raw: &[u8], stopwords: &StopWords) -> Result<Vec<String>> {
    let text = decode(raw)?;
    Ok(tokens(text, stopwords).map(Cow::into_owned).collect())
}

/// Ordered word list with counts. Position `p` holds the word with frequency
/// rank `p + 1`; ties in count are broken by first appearance in the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    min_count: u64,
    total_tokens: u64,
    index: HashMap<String, u32>,
}

#[derive(Default)]
struct ChunkCounts {
    // word -> (count, first local position)
    counts: HashMap<String, (u64, u64)>,
    tokens: u64,
}

impl ChunkCounts {
    fn add(&mut self, token: &str) {
        let pos = self.tokens;
        self.tokens += 1;
        match self.counts.get_mut(token) {
            Some(entry) => entry.0 += 1,
            None => {
                self.counts.insert(token.to_owned(), (1, pos));
            }
        }
    }
}

impl Vocabulary {
    /// Builds the vocabulary from an in-order token stream.
    pub fn build<I, S>(tokens: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut chunk = ChunkCounts::default();
        for t in tokens {
            chunk.add(t.as_ref());
        }
        Self::from_chunks(vec![chunk], min_count)
    }

    /// Counts tokens of `text` over `shards` chunks split at whitespace.
    /// The result does not depend on `shards`.
    pub fn build_parallel(
        text: &str,
        stopwords: &StopWords,
        min_count: u64,
        shards: usize,
    ) -> Result<Self> {
        let chunks: Vec<ChunkCounts> = split_at_whitespace(text, shards.max(1))
            .into_par_iter()
            .map(|piece| {
                let mut chunk = ChunkCounts::default();
                for t in tokens(piece, stopwords) {
                    chunk.add(&t);
                }
                chunk
            })
            .collect();
        Self::from_chunks(chunks, min_count)
    }

    fn from_chunks(chunks: Vec<ChunkCounts>, min_count: u64) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        let mut merged: HashMap<String, (u64, u64)> = HashMap::new();
        let mut offset = 0u64;
        for chunk in chunks {
            for (word, (count, first)) in chunk.counts {
                let global = offset + first;
                let entry = merged.entry(word).or_insert((0, global));
                entry.0 += count;
                entry.1 = entry.1.min(global);
            }
            offset += chunk.tokens;
        }
        if offset == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut entries: Vec<(String, u64, u64)> = merged
            .into_iter()
            .filter(|(_, (c, _))| *c >= min_count)
            .map(|(w, (c, first))| (w, c, first))
            .collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        let (words, counts) = entries.into_iter().map(|(w, c, _)| (w, c)).unzip();
        Ok(Self::assemble(words, counts, min_count, offset))
    }

    fn assemble(words: Vec<String>, counts: Vec<u64>, min_count: u64, total_tokens: u64) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocabulary {
            words,
            counts,
            min_count,
            total_tokens,
            index,
        }
    }

    /// Builds a vocabulary from already rank-ordered `(word, count)` entries.
    pub fn from_ranked(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (pos, (word, count)) in entries.iter().enumerate() {
            if !seen.insert(word.as_str()) {
                return Err(Error::Config(format!("duplicate vocabulary word `{word}`")));
            }
            if pos > 0 && entries[pos - 1].1 < *count {
                return Err(Error::Config(format!(
                    "vocabulary not in rank order at `{word}`"
                )));
            }
        }
        let min_count = entries.last().map_or(1, |e| e.1.max(1));
        let total = entries.iter().map(|e| e.1).sum();
        let (words, counts) = entries.into_iter().unzip();
        Ok(Self::assemble(words, counts, min_count, total))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    pub fn index(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Frequency rank, 1 = most frequent.
    pub fn rank(&self, idx: usize) -> usize {
        idx + 1
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Number of corpus tokens before min-count filtering. For a vocabulary
    /// read back from a file this is the sum of the stored counts.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Maps a token stream onto vocabulary indices; out-of-vocabulary tokens
    /// keep their position as `None`.
    pub fn encode<'a, I, S>(&self, tokens: I) -> Vec<Option<u32>>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str> + 'a,
    {
        tokens.into_iter().map(|t| self.index(t.as_ref())).collect()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        out.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(path, format!("line {}: expected word<TAB>count", n + 1)))?;
            let count = count
                .parse()
                .map_err(|_| Error::format(path, format!("line {}: bad count `{count}`", n + 1)))?;
            entries.push((word.to_owned(), count));
        }
        Self::from_ranked(entries).map_err(|e| Error::format(path, e.to_string()))
    }
}

fn split_at_whitespace(text: &str, pieces: usize) -> Vec<&str> {
    let mut out = Vec::with_capacity(pieces);
    let mut rest = text;
    for k in (1..=pieces).rev() {
        if k == 1 || rest.is_empty() {
            out.push(rest);
            break;
        }
        let mut cut = rest.len() / k;
        while !rest.is_char_boundary(cut) {
            cut += 1;
        }
        let cut = rest[cut..]
            .find(char::is_whitespace)
            .map_or(rest.len(), |p| cut + p);
        let (head, tail) = rest.split_at(cut);
        out.push(head);
        rest = tail;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str, stop: &[&str]) -> Vec<String> {
        tokenize(text.as_bytes(), &StopWords::from_words(stop)).unwrap()
    }

    #[test]
    fn tokenize_drops_stopwords_and_punctuation() {
        assert_eq!(toks("The cat sat.", &["the"]), ["cat", "sat"]);
        assert!(toks("", &[]).is_empty());
        assert_eq!(toks("A a A", &[]), ["a", "a", "a"]);
        assert_eq!(toks("\"Don't\" -- stop!", &[]), ["don't", "stop"]);
    }

    #[test]
    fn undecodable_input_reports_offset() {
        let err = tokenize(b"abc \xff def", &StopWords::empty()).unwrap_err();
        assert!(matches!(err, Error::Encoding { offset: 4 }));
    }

    #[test]
    fn vocabulary_threshold() {
        let stream = ["a", "a", "a", "b", "b", "c"];
        let v = Vocabulary::build(stream, 2).unwrap();
        assert_eq!(v.words(), ["a", "b"]);
        assert_eq!(v.counts(), [3, 2]);
        assert_eq!(v.total_tokens(), 6);

        let v = Vocabulary::build(stream, 1).unwrap();
        assert_eq!(v.words(), ["a", "b", "c"]);
        assert_eq!(v.counts(), [3, 2, 1]);
    }

    #[test]
    fn ties_break_by_first_appearance() {
        let v = Vocabulary::build(["z", "y", "x", "y", "z", "x"], 1).unwrap();
        assert_eq!(v.words(), ["z", "y", "x"]);
        assert_eq!(v.rank(2), 3);
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(matches!(
            Vocabulary::build(Vec::<String>::new(), 1),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = Vocabulary::build(["b", "a", "b", "c", "a", "b"], 1).unwrap();
        v.save(&path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "b\t3\na\t2\nc\t1\n");
        let back = Vocabulary::load(&path).unwrap();
        assert_eq!(back.words(), v.words());
        assert_eq!(back.counts(), v.counts());
    }

    #[test]
    fn rejects_unordered_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        fs::write(&path, "a\t1\nb\t5\n").unwrap();
        assert!(Vocabulary::load(&path).is_err());
    }

    fn word_stream() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["ab", "cd", "ef", "gh", "ij", "kl"]), 1..200)
            .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn rank_order_and_lookup(stream in word_stream(), min_count in 1u64..4) {
            match Vocabulary::build(&stream, min_count) {
                Ok(v) => {
                    for p in 1..v.len() {
                        prop_assert!(v.count(p - 1) >= v.count(p));
                    }
                    for (p, w) in v.words().iter().enumerate() {
                        prop_assert_eq!(v.index(w), Some(p as u32));
                        prop_assert!(v.count(p) >= min_count);
                    }
                    let sum: u64 = v.counts().iter().sum();
                    prop_assert!(sum <= v.total_tokens());
                    prop_assert_eq!(v.total_tokens(), stream.len() as u64);
                    let again = Vocabulary::build(&stream, min_count).unwrap();
                    prop_assert_eq!(again, v);
                }
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn shard_count_does_not_matter(stream in word_stream(), shards in 1usize..9) {
            let text = stream.join(" ");
            let serial = Vocabulary::build(&stream, 1).unwrap();
            let parallel = Vocabulary::build_parallel(&text, &StopWords::empty(), 1, shards).unwrap();
            prop_assert_eq!(serial, parallel);
        }
    }
}
