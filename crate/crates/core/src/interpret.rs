//! Category-based interpretability scores.
//!
//! For dimension `i` and category `S_j` of `n_j` words, the positive-direction
//! score is the best overlap ratio `|S_j ∩ top_i(λ n)| / n * 100` over
//! `n_min <= n <= n_j`, where `top_i(m)` holds the `m` words with the largest
//! values on dimension `i`. The overlap is capped at `n`, so each ratio scores
//! the best `n`-word subset of the category and stays within `[0, 100]`. The negative score uses the smallest values. A
//! dimension scores the best category in the better direction; the embedding
//! scores the mean over dimensions.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::decode;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numfmt::format_significant;

/// Multiplier on the category size used when fetching top words.
pub const DEFAULT_LAMBDA: usize = 5;
pub const DEFAULT_NMIN_RANGE: (usize, usize) = (5, 20);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Positive,
    Negative,
}

/// Named word sets used as interpretability references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryDataset {
    pub names: Vec<String>,
    pub categories: Vec<Vec<String>>,
}

impl CategoryDataset {
    pub fn new(names: Vec<String>, categories: Vec<Vec<String>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(Error::Config(format!("duplicate category name `{n}`")));
            }
        }
        if names.len() != categories.len() {
            return Err(Error::Config("category names and word lists differ in length".into()));
        }
        Ok(CategoryDataset { names, categories })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// `name<TAB>word1,word2,...` per line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut names = Vec::new();
        let mut categories = Vec::new();
        for (n, line) in decode(&bytes)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (name, words) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(path, format!("line {}: expected name<TAB>words", n + 1)))?;
            names.push(name.to_owned());
            categories.push(
                words
                    .split(',')
                    .map(|w| w.trim().to_lowercase())
                    .filter(|w| !w.is_empty())
                    .collect(),
            );
        }
        Self::new(names, categories).map_err(|e| Error::format(path, e.to_string()))
    }

    /// Category members present in the embedding, as row indices (deduplicated).
    pub fn resolve(&self, embedding: &EmbeddingMatrix) -> Vec<Vec<usize>> {
        self.categories
            .iter()
            .map(|c| {
                let mut idx: Vec<usize> = c.iter().filter_map(|w| embedding.index(w)).collect();
                idx.sort_unstable();
                idx.dedup();
                idx
            })
            .collect()
    }
}

/// Row order of dimension `dim`, best first for `direction`; ties go to the
/// word with the better frequency rank (smaller row index).
pub fn ranking(embedding: &EmbeddingMatrix, dim: usize, direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..embedding.len()).collect();
    // adding 0.0 folds -0.0 into 0.0 so signed zeros tie
    let value = |i: usize| embedding.value(i, dim) + 0.0;
    match direction {
        Direction::Positive => order.sort_by(|&a, &b| value(b).total_cmp(&value(a)).then(a.cmp(&b))),
        Direction::Negative => order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b))),
    }
    order
}

/// The `m` words with the largest (positive) or smallest (negative) values on `dim`.
pub fn top_words(embedding: &EmbeddingMatrix, dim: usize, m: usize, direction: Direction) -> Result<Vec<usize>> {
    if m > embedding.len() {
        return Err(Error::Bounds(format!("asked for {m} words from an embedding of {}", embedding.len())));
    }
    if dim >= embedding.dims() {
        return Err(Error::Bounds(format!("dimension {dim} of {}", embedding.dims())));
    }
    let mut order = ranking(embedding, dim, direction);
    order.truncate(m);
    Ok(order)
}

/// Best overlap ratio for one category given the position of every word in a
/// ranking. `members` are row indices; returns `None` when `n_j < n_min`.
fn directional_score(position: &[usize], members: &[usize], lambda: usize, n_min: usize) -> Option<f64> {
    let n_j = members.len();
    if n_j == 0 || n_j < n_min {
        return None;
    }
    let vocab = position.len();
    let mut ranks: Vec<usize> = members.iter().map(|&w| position[w]).collect();
    ranks.sort_unstable();
    let mut best = 0.0f64;
    let mut inside = 0;
    for n in n_min..=n_j {
        let cutoff = (lambda * n).min(vocab);
        while inside < ranks.len() && ranks[inside] < cutoff {
            inside += 1;
        }
        best = best.max(inside.min(n) as f64 / n as f64 * 100.0);
    }
    Some(best)
}

fn positions(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (p, &w) in order.iter().enumerate() {
        pos[w] = p;
    }
    pos
}

/// `(IS+, IS-)` for one dimension and one category given as row indices, or
/// `None` if the category is smaller than `n_min`.
pub fn score_dimension_category(
    embedding: &EmbeddingMatrix,
    dim: usize,
    members: &[usize],
    lambda: usize,
    n_min: usize,
) -> Option<(f64, f64)> {
    let pos = positions(&ranking(embedding, dim, Direction::Positive));
    let neg = positions(&ranking(embedding, dim, Direction::Negative));
    Some((
        directional_score(&pos, members, lambda, n_min)?,
        directional_score(&neg, members, lambda, n_min)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretabilityReport {
    pub lambda: usize,
    pub n_min: usize,
    pub categories: Vec<String>,
    /// `[dim][category]`; `None` where the category was skipped.
    pub positive: Vec<Vec<Option<f64>>>,
    pub negative: Vec<Vec<Option<f64>>>,
    /// Best category score per dimension.
    pub per_dimension: Vec<f64>,
    /// Index of the category achieving `per_dimension[i]`.
    pub best_category: Vec<usize>,
    pub skipped_categories: Vec<String>,
    pub aggregate: f64,
}

impl InterpretabilityReport {
    /// `max(IS+, IS-)` for one cell.
    pub fn cell(&self, dim: usize, category: usize) -> Option<f64> {
        Some(self.positive[dim][category]?.max(self.negative[dim][category]?))
    }

    /// Tab-separated `IS_{i,j}` matrix followed by per-dimension maxima; the
    /// first line carries the aggregate score.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# IS\t{}\tlambda\t{}\tn_min\t{}",
            format_significant(self.aggregate, 17),
            self.lambda,
            self.n_min
        )?;
        write!(out, "dim")?;
        for c in &self.categories {
            write!(out, "\t{c}")?;
        }
        writeln!(out, "\tIS_dim\tbest_category")?;
        for dim in 0..self.per_dimension.len() {
            write!(out, "{dim}")?;
            for c in 0..self.categories.len() {
                match self.cell(dim, c) {
                    Some(v) => write!(out, "\t{}", format_significant(v, 17))?,
                    None => write!(out, "\t-")?,
                }
            }
            writeln!(
                out,
                "\t{}\t{}",
                format_significant(self.per_dimension[dim], 17),
                self.categories[self.best_category[dim]]
            )?;
        }
        out.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

/// Scores every dimension against every category. Dimensions are processed
/// in parallel and merged in order.
pub fn score_embedding(
    embedding: &EmbeddingMatrix,
    dataset: &CategoryDataset,
    lambda: usize,
    n_min: usize,
) -> Result<InterpretabilityReport> {
    if lambda == 0 || n_min == 0 {
        return Err(Error::Config("lambda and n_min must be at least 1".into()));
    }
    if dataset.is_empty() || embedding.dims() == 0 {
        return Err(Error::EmptyDataset);
    }
    let members = dataset.resolve(embedding);
    let scorable: Vec<bool> = members.iter().map(|m| !m.is_empty() && m.len() >= n_min).collect();
    if !scorable.iter().any(|&s| s) {
        return Err(Error::EmptyDataset);
    }

    let rows: Vec<(Vec<Option<f64>>, Vec<Option<f64>>)> = (0..embedding.dims())
        .into_par_iter()
        .map(|dim| {
            let pos = positions(&ranking(embedding, dim, Direction::Positive));
            let neg = positions(&ranking(embedding, dim, Direction::Negative));
            members
                .iter()
                .map(|m| {
                    (
                        directional_score(&pos, m, lambda, n_min),
                        directional_score(&neg, m, lambda, n_min),
                    )
                })
                .unzip()
        })
        .collect();
    let (positive, negative): (Vec<_>, Vec<_>) = rows.into_iter().unzip();

    let mut per_dimension = Vec::with_capacity(embedding.dims());
    let mut best_category = Vec::with_capacity(embedding.dims());
    for dim in 0..embedding.dims() {
        let mut best = (0usize, f64::NEG_INFINITY);
        for c in 0..dataset.len() {
            if let (Some(p), Some(n)) = (positive[dim][c], negative[dim][c]) {
                let v = p.max(n);
                if v > best.1 {
                    best = (c, v);
                }
            }
        }
        best_category.push(best.0);
        per_dimension.push(best.1);
    }
    let aggregate = per_dimension.iter().sum::<f64>() / per_dimension.len() as f64;
    Ok(InterpretabilityReport {
        lambda,
        n_min,
        categories: dataset.names.clone(),
        positive,
        negative,
        per_dimension,
        best_category,
        skipped_categories: dataset
            .names
            .iter()
            .zip(&scorable)
            .filter(|(_, &s)| !s)
            .map(|(n, _)| n.clone())
            .collect(),
        aggregate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_min: usize,
    pub score: f64,
}

/// Aggregate score for each `n_min` in the inclusive range.
pub fn sweep_nmin(
    embedding: &EmbeddingMatrix,
    dataset: &CategoryDataset,
    lambda: usize,
    n_min_range: (usize, usize),
) -> Result<Vec<SweepRow>> {
    let (lo, hi) = n_min_range;
    if lo == 0 || lo > hi {
        return Err(Error::Config(format!("invalid n_min range {lo}..{hi}")));
    }
    (lo..=hi)
        .map(|n_min| {
            Ok(SweepRow {
                n_min,
                score: score_embedding(embedding, dataset, lambda, n_min)?.aggregate,
            })
        })
        .collect()
}

/// `n_min<TAB>IS` per line.
pub fn write_sweep<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    for r in rows {
        writeln!(out, "{}\t{}", r.n_min, format_significant(r.score, 17))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embedding(values: &[f64]) -> EmbeddingMatrix {
        let words = (0..values.len()).map(|i| format!("w{i}")).collect();
        EmbeddingMatrix::new(words, 1, values.to_vec()).unwrap()
    }

    fn dataset(cats: &[(&str, Vec<usize>)]) -> CategoryDataset {
        CategoryDataset::new(
            cats.iter().map(|c| c.0.to_string()).collect(),
            cats.iter().map(|c| c.1.iter().map(|i| format!("w{i}")).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn top_words_and_ties() {
        let e = embedding(&[0.1, 0.9, 0.5, 0.9, -0.2]);
        assert_eq!(top_words(&e, 0, 3, Direction::Positive).unwrap(), [1, 3, 2]);
        assert_eq!(top_words(&e, 0, 2, Direction::Negative).unwrap(), [4, 0]);
        assert!(top_words(&e, 0, 6, Direction::Positive).is_err());
        let mut flipped = e.clone();
        flipped.map_dim(0, |v| -v);
        assert_eq!(
            top_words(&e, 0, 5, Direction::Negative).unwrap(),
            top_words(&flipped, 0, 5, Direction::Positive).unwrap()
        );
    }

    #[test]
    fn signed_zeros_tie() {
        let e = embedding(&[0.0, -0.0, 1.0]);
        assert_eq!(top_words(&e, 0, 3, Direction::Positive).unwrap(), [2, 0, 1]);
        assert_eq!(top_words(&e, 0, 3, Direction::Negative).unwrap(), [0, 1, 2]);
    }

    #[test]
    fn full_containment_scores_100() {
        // 10 category words carry the 10 largest values among 60 words.
        let values: Vec<f64> = (0..60).map(|i| if i < 10 { 10.0 + i as f64 } else { -(i as f64) }).collect();
        let e = embedding(&values);
        let d = dataset(&[("cat", (0..10).collect())]);
        let members = d.resolve(&e);
        let (plus, _) = score_dimension_category(&e, 0, &members[0], 5, 5).unwrap();
        assert_eq!(plus, 100.0);
        let report = score_embedding(&e, &d, 5, 5).unwrap();
        assert_eq!(report.aggregate, 100.0);
    }

    #[test]
    fn disjoint_category_scores_zero() {
        // category sits in the middle, outside the top and bottom 5*n_j = 25 of 100
        let values: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let e = embedding(&values);
        let d = dataset(&[("mid", (45..50).collect())]);
        let m = d.resolve(&e);
        assert_eq!(score_dimension_category(&e, 0, &m[0], 5, 1), Some((0.0, 0.0)));
    }

    #[test]
    fn small_categories_are_skipped() {
        let e = embedding(&[1.0, 2.0, 3.0, 4.0]);
        let d = dataset(&[("tiny", vec![0, 1]), ("ok", vec![0, 1, 2])]);
        let report = score_embedding(&e, &d, 5, 3).unwrap();
        assert_eq!(report.skipped_categories, ["tiny"]);
        assert_eq!(report.cell(0, 0), None);
        let d = dataset(&[("tiny", vec![0, 1])]);
        assert!(matches!(score_embedding(&e, &d, 5, 3), Err(Error::EmptyDataset)));
    }

    #[test]
    fn sweep_single_value_matches_score() {
        let values: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
        let e = embedding(&values);
        let d = dataset(&[("a", (0..8).collect()), ("b", (10..20).collect())]);
        let rows = sweep_nmin(&e, &d, 2, (4, 4)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].score, score_embedding(&e, &d, 2, 4).unwrap().aggregate);
        assert!(sweep_nmin(&e, &d, 2, (5, 4)).is_err());
    }
}
