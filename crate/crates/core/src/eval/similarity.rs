use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cosine;
use crate::corpus::decode;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numfmt::format_significant;

/// Word pairs with human similarity judgements.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    pub fn new(name: impl Into<String>, pairs: Vec<(String, String, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(p) = pairs.iter().find(|p| !p.2.is_finite()) {
            return Err(Error::Domain(format!("non-finite score for ({}, {})", p.0, p.1)));
        }
        Ok(SimilarityDataset {
            name: name.into(),
            pairs,
        })
    }

    /// `wordA<TAB>wordB<TAB>score` per line; lines starting with `#` are comments.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (n, line) in decode(&bytes)?.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || Error::format(path, format!("line {}: expected wordA<TAB>wordB<TAB>score", n + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let score: f64 = fields[2].trim().parse().map_err(|_| bad())?;
            pairs.push((fields[0].trim().to_lowercase(), fields[1].trim().to_lowercase(), score));
        }
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::new(name, pairs).map_err(|e| match e {
            Error::EmptyDataset => Error::format(path, "no pairs"),
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub dataset: String,
    pub correlation: f64,
    pub pairs_seen: usize,
    pub pairs_skipped: usize,
}

impl SimilarityReport {
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "dataset\tspearman\tpairs_seen\tpairs_skipped")?;
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            self.dataset,
            format_significant(self.correlation, 17),
            self.pairs_seen,
            self.pairs_skipped
        )?;
        out.flush()
    }
}

/// 1-based ranks in ascending value order; tied values share the mean of the
/// ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of tie-averaged ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Config("rank correlation over sequences of different length".into()));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData(format!("{} scored pairs; at least 2 needed", a.len())));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::InsufficientData("rank correlation undefined for constant scores".into()));
    }
    Ok(cov / (va * vb).sqrt())
}

/// Spearman correlation between embedding cosine similarities and human scores.
pub fn similarity_eval(embedding: &EmbeddingMatrix, dataset: &SimilarityDataset) -> Result<SimilarityReport> {
    let mut model = Vec::new();
    let mut human = Vec::new();
    let mut skipped = 0;
    for (a, b, score) in &dataset.pairs {
        match (embedding.index(a), embedding.index(b)) {
            (Some(i), Some(j)) => {
                model.push(cosine(embedding.row(i), embedding.row(j)));
                human.push(*score);
            }
            _ => skipped += 1,
        }
    }
    let correlation = spearman(&model, &human)?;
    Ok(SimilarityReport {
        dataset: dataset.name.clone(),
        correlation,
        pairs_seen: model.len(),
        pairs_skipped: skipped,
    })
}
