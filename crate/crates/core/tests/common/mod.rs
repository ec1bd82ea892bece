#![allow(dead_code)]

use std::path::PathBuf;

use conceptvec::cooccur::{count_cooccurrences, CooccurrenceRecord, Weighting};
use conceptvec::corpus::{tokenize, StopWords, Vocabulary};
use conceptvec::embedding::EmbeddingMatrix;
use conceptvec::lexicon::{partition, select_groups, ConceptAssignment, ThesaurusTree, Truncation};
use conceptvec::trainer::{train, Mode, TrainerConfig};

pub fn toy_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

pub fn toy_path(name: &str) -> PathBuf {
    toy_dir().join(name)
}

pub const TOY_MIN_COUNT: u64 = 5;
pub const TOY_WINDOW: usize = 8;
pub const TOY_LAMBDA: usize = 20;
pub const TOY_MIN_SIZE: usize = 3;
pub const TOY_GROUPS: usize = 2;
pub const TOY_DIMS: usize = 4;

/// Vocabulary, cooccurrence records and 2-group assignment for the toy corpus.
pub struct Toy {
    pub vocab: Vocabulary,
    pub records: Vec<CooccurrenceRecord>,
    pub thesaurus: ThesaurusTree,
    pub assignment: ConceptAssignment,
}

pub fn toy() -> Toy {
    let stop = StopWords::load(toy_path("stopwords.txt")).unwrap();
    let raw = std::fs::read(toy_path("corpus.txt")).unwrap();
    let tokens = tokenize(&raw, &stop).unwrap();
    let vocab = Vocabulary::build(&tokens, TOY_MIN_COUNT).unwrap();
    let encoded = vocab.encode(&tokens);
    let records = count_cooccurrences(&encoded, TOY_WINDOW, Weighting::InverseDistance).unwrap();
    let thesaurus = ThesaurusTree::load(toy_path("thesaurus.txt")).unwrap().filter(&vocab);
    let raw_groups = partition(&thesaurus, TOY_LAMBDA, &vocab, Truncation::MostFrequent).unwrap();
    let assignment = select_groups(&raw_groups, &vocab, TOY_MIN_SIZE, TOY_GROUPS).unwrap().assignment;
    Toy {
        vocab,
        records,
        thesaurus,
        assignment,
    }
}

pub fn toy_config(mode: Mode, k: f64, seed: u64) -> TrainerConfig {
    TrainerConfig {
        dims: TOY_DIMS,
        mode,
        k,
        iterations: 20,
        seed,
        ..TrainerConfig::default()
    }
}

pub fn toy_embedding(toy: &Toy, config: &TrainerConfig) -> EmbeddingMatrix {
    let outcome = train(&toy.records, toy.vocab.len(), config, Some(&toy.assignment)).unwrap();
    EmbeddingMatrix::from_params(&outcome.params, &toy.vocab).unwrap()
}
