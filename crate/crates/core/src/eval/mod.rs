//! Intrinsic evaluation: word similarity and word analogy.

mod analogy;
mod similarity;

pub use analogy::{
    analogy_eval, partition_analogy_questions, AnalogyDataset, AnalogyQuestion, AnalogyReport, AnalogySection,
    AnalogySubsets, SectionKind, SectionResult, Subset, Tally,
};
pub use similarity::{average_ranks, similarity_eval, spearman, SimilarityDataset, SimilarityReport};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero vectors have similarity 0 with everything.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        dot(a, b) / d
    }
}
