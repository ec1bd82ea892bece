use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dot, norm};
use crate::corpus::{decode, Vocabulary};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::lexicon::ConceptAssignment;
use crate::numfmt::format_significant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionKind {
    Semantic,
    Syntactic,
}

impl SectionKind {
    /// Sections whose name starts with `gram` are syntactic.
    pub fn of(name: &str) -> Self {
        if name.starts_with("gram") {
            SectionKind::Syntactic
        } else {
            SectionKind::Semantic
        }
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SectionKind::Semantic => "semantic",
            SectionKind::Syntactic => "syntactic",
        })
    }
}

/// "`x` is to `y` as `z` is to `answer`".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogyQuestion {
    pub x: String,
    pub y: String,
    pub z: String,
    pub answer: String,
}

impl AnalogyQuestion {
    pub fn words(&self) -> [&str; 4] {
        [&self.x, &self.y, &self.z, &self.answer]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogySection {
    pub name: String,
    pub kind: SectionKind,
    pub questions: Vec<AnalogyQuestion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnalogyDataset {
    pub sections: Vec<AnalogySection>,
}

impl AnalogyDataset {
    pub fn question_count(&self) -> usize {
        self.sections.iter().map(|s| s.questions.len()).sum()
    }

    pub fn questions(&self) -> impl Iterator<Item = &AnalogyQuestion> {
        self.sections.iter().flat_map(|s| s.questions.iter())
    }

    /// Keeps the questions accepted by `keep`, preserving section structure.
    pub fn filter(&self, mut keep: impl FnMut(&AnalogyQuestion) -> bool) -> Self {
        AnalogyDataset {
            sections: self
                .sections
                .iter()
                .map(|s| AnalogySection {
                    name: s.name.clone(),
                    kind: s.kind,
                    questions: s.questions.iter().filter(|q| keep(q)).cloned().collect(),
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut sections: Vec<AnalogySection> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix(':') {
                let name = name.trim().to_owned();
                sections.push(AnalogySection {
                    kind: SectionKind::of(&name),
                    name,
                    questions: Vec::new(),
                });
                continue;
            }
            let words: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
            if words.len() != 4 {
                return Err((n + 1, format!("expected 4 words, found {}", words.len())));
            }
            let Some(section) = sections.last_mut() else {
                return Err((n + 1, "question before any `: section` header".into()));
            };
            let mut w = words.into_iter();
            section.questions.push(AnalogyQuestion {
                x: w.next().unwrap(),
                y: w.next().unwrap(),
                z: w.next().unwrap(),
                answer: w.next().unwrap(),
            });
        }
        Ok(AnalogyDataset { sections })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(decode(&bytes)?).map_err(|(line, message)| Error::Parse { line, message })
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for s in &self.sections {
            writeln!(out, ": {}", s.name)?;
            for q in &s.questions {
                writeln!(out, "{} {} {} {}", q.x, q.y, q.z, q.answer)?;
            }
        }
        out.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub attempted: usize,
    pub skipped: usize,
}

impl Tally {
    /// Percentage of attempted questions answered correctly; 0 when none were attempted.
    pub fn precision(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.correct as f64 / self.attempted as f64 * 100.0
        }
    }

    fn add(&mut self, other: Tally) {
        self.correct += other.correct;
        self.attempted += other.attempted;
        self.skipped += other.skipped;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionResult {
    pub name: String,
    pub kind: SectionKind,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogyReport {
    pub sections: Vec<SectionResult>,
    pub semantic: Tally,
    pub syntactic: Tally,
    pub overall: Tally,
}

impl AnalogyReport {
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scope\tkind\tprecision\tcorrect\tattempted\tskipped")?;
        let mut row = |scope: &str, kind: &str, t: &Tally| {
            writeln!(
                out,
                "{scope}\t{kind}\t{}\t{}\t{}\t{}",
                format_significant(t.precision(), 17),
                t.correct,
                t.attempted,
                t.skipped
            )
        };
        for s in &self.sections {
            row(&s.name, &s.kind.to_string(), &s.tally)?;
        }
        row("semantic", "semantic", &self.semantic)?;
        row("syntactic", "syntactic", &self.syntactic)?;
        row("overall", "all", &self.overall)?;
        out.flush()
    }
}

/// Best candidate for `e_y - e_x + e_z` by cosine among rows `0..limit`,
/// excluding the query rows. Ties go to the lower row (more frequent word).
fn predict(embedding: &EmbeddingMatrix, norms: &[f64], x: usize, y: usize, z: usize, limit: usize) -> Option<usize> {
    let target: Vec<f64> = (0..embedding.dims())
        .map(|d| embedding.value(y, d) - embedding.value(x, d) + embedding.value(z, d))
        .collect();
    let tnorm = norm(&target);
    let mut best: Option<(usize, f64)> = None;
    for c in 0..limit {
        if c == x || c == y || c == z {
            continue;
        }
        let denom = norms[c] * tnorm;
        let sim = if denom == 0.0 { 0.0 } else { dot(embedding.row(c), &target) / denom };
        if best.is_none_or(|(_, s)| sim > s) {
            best = Some((c, sim));
        }
    }
    best.map(|b| b.0)
}

/// Answers each question whose four words are among the candidate rows
/// (`top_k` most frequent rows, or all) and tallies precision per section,
/// per kind, and overall.
pub fn analogy_eval(embedding: &EmbeddingMatrix, dataset: &AnalogyDataset, top_k: Option<usize>) -> AnalogyReport {
    let limit = top_k.map_or(embedding.len(), |k| k.min(embedding.len()));
    let norms: Vec<f64> = (0..limit).map(|i| norm(embedding.row(i))).collect();
    let lookup = |w: &str| embedding.index(w).filter(|&i| i < limit);

    let mut sections = Vec::with_capacity(dataset.sections.len());
    let mut semantic = Tally::default();
    let mut syntactic = Tally::default();
    for section in &dataset.sections {
        let outcomes: Vec<Option<bool>> = section
            .questions
            .par_iter()
            .map(|q| {
                let [x, y, z, a] = [lookup(&q.x)?, lookup(&q.y)?, lookup(&q.z)?, lookup(&q.answer)?];
                Some(predict(embedding, &norms, x, y, z, limit) == Some(a))
            })
            .collect();
        let mut tally = Tally::default();
        for o in outcomes {
            match o {
                Some(hit) => {
                    tally.attempted += 1;
                    tally.correct += hit as usize;
                }
                None => tally.skipped += 1,
            }
        }
        match section.kind {
            SectionKind::Semantic => semantic.add(tally),
            SectionKind::Syntactic => syntactic.add(tally),
        }
        sections.push(SectionResult {
            name: section.name.clone(),
            kind: section.kind,
            tally,
        });
    }
    let mut overall = semantic;
    overall.add(syntactic);
    AnalogyReport {
        sections,
        semantic,
        syntactic,
        overall,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Subset {
    #[default]
    All,
    AnyConcept,
    AllConcept,
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Subset::All),
            "any-concept" => Ok(Subset::AnyConcept),
            "all-concept" => Ok(Subset::AllConcept),
            other => Err(Error::Config(format!(
                "unknown subset `{other}` (expected all, any-concept or all-concept)"
            ))),
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subset::All => "all",
            Subset::AnyConcept => "any-concept",
            Subset::AllConcept => "all-concept",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalogySubsets {
    pub all: AnalogyDataset,
    pub any_concept: AnalogyDataset,
    pub all_concept: AnalogyDataset,
}

impl AnalogySubsets {
    pub fn get(&self, subset: Subset) -> &AnalogyDataset {
        match subset {
            Subset::All => &self.all,
            Subset::AnyConcept => &self.any_concept,
            Subset::AllConcept => &self.all_concept,
        }
    }
}

/// Splits questions by how many of their words belong to a concept group.
/// Words outside the vocabulary are never concept words.
pub fn partition_analogy_questions(
    dataset: &AnalogyDataset,
    assignment: &ConceptAssignment,
    vocab: &Vocabulary,
) -> AnalogySubsets {
    let concept = |w: &str| {
        vocab
            .index(w)
            .is_some_and(|i| (i as usize) < assignment.vocab_len() && assignment.is_concept_word(i as usize))
    };
    AnalogySubsets {
        all: dataset.clone(),
        any_concept: dataset.filter(|q| q.words().iter().any(|w| concept(w))),
        all_concept: dataset.filter(|q| q.words().iter().all(|w| concept(w))),
    }
}
