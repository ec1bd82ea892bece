use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::numfmt::format_significant;
use crate::trainer::ModelParameters;

/// Significant digits written per value in the text format.
pub const TEXT_DIGITS: usize = 9;

/// Final word vectors, one row per word in frequency-rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    words: Vec<String>,
    dims: usize,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(words: Vec<String>, dims: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != words.len() * dims {
            return Err(Error::Config(format!(
                "{} values for {} words of {dims} dimensions",
                data.len(),
                words.len()
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate embedding word `{w}`")));
            }
        }
        Ok(EmbeddingMatrix {
            words,
            dims,
            data,
            index,
        })
    }

    /// Rows are `(w_i + c_i) / 2`.
    pub fn from_params(params: &ModelParameters, vocab: &Vocabulary) -> Result<Self> {
        if params.vocab_len() != vocab.len() {
            return Err(Error::Config(format!(
                "parameters cover {} words, vocabulary has {}",
                params.vocab_len(),
                vocab.len()
            )));
        }
        Self::new(vocab.words().to_vec(), params.dims(), params.export())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn value(&self, i: usize, dim: usize) -> f64 {
        self.data[i * self.dims + dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Applies `f` to every value in column `dim`.
    pub fn map_dim(&mut self, dim: usize, f: impl Fn(f64) -> f64) {
        for i in 0..self.words.len() {
            let v = &mut self.data[i * self.dims + dim];
            *v = f(*v);
        }
    }

    /// `word v1 v2 ... vD` per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, w) in self.words.iter().enumerate() {
            out.write_all(w.as_bytes())?;
            for v in self.row(i) {
                write!(out, " {}", format_significant(*v, TEXT_DIGITS))?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut words = Vec::new();
        let mut data = Vec::new();
        let mut dims = None;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            let before = data.len();
            for p in parts {
                let v: f64 = p
                    .parse()
                    .map_err(|_| Error::format(path, format!("line {}: bad value `{p}`", n + 1)))?;
                data.push(v);
            }
            let width = data.len() - before;
            match dims {
                None => dims = Some(width),
                Some(d) if d != width => {
                    return Err(Error::format(
                        path,
                        format!("line {}: {width} values, expected {d}", n + 1),
                    ))
                }
                _ => {}
            }
            words.push(word.to_owned());
        }
        Self::new(words, dims.unwrap_or(0), data).map_err(|e| Error::format(path, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_at_nine_digits() {
        let m = EmbeddingMatrix::new(
            vec!["a".into(), "b".into()],
            2,
            vec![0.123456789123, -1.0, 2.5e-7, 12345.6789],
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "a 0.123456789 -1\nb 2.5e-07 12345.6789\n");

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        fs::write(&path, &text).unwrap();
        let back = EmbeddingMatrix::load(&path).unwrap();
        assert_eq!(back.words(), m.words());
        assert_eq!(back.value(0, 0), 0.123456789);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        fs::write(&path, "a 1 2\nb 3\n").unwrap();
        assert!(EmbeddingMatrix::load(&path).is_err());
    }
}
