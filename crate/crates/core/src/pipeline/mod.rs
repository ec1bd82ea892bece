//! End-to-end orchestration: vocabulary, cooccurrence, lexicon, training,
//! interpretability scoring and evaluation, with a hash-chained manifest.

mod config;
mod manifest;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{PipelineConfig, OUTPUT_ROOT_ENV};
pub use manifest::{file_sha256, Artifact, Manifest, StageRecord, StageStatus, MANIFEST_FILE};
pub use report::{report, Report};

use crate::cooccur::{count_cooccurrences_sharded, load_binary, save_binary};
use crate::corpus::{tokenize, StopWords, Vocabulary};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::eval::{
    analogy_eval, partition_analogy_questions, similarity_eval, AnalogyDataset, AnalogyReport, SimilarityDataset,
    SimilarityReport, Subset,
};
use crate::interpret::{score_embedding, sweep_nmin, CategoryDataset, InterpretabilityReport, SweepRow};
use crate::lexicon::{partition, select_groups, ConceptAssignment, ThesaurusTree};
use crate::trainer::{train, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Vocab,
    Cooccur,
    Lexicon,
    Train,
    Score,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Vocab,
        Stage::Cooccur,
        Stage::Lexicon,
        Stage::Train,
        Stage::Score,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Vocab => "vocab",
            Stage::Cooccur => "cooccur",
            Stage::Lexicon => "lexicon",
            Stage::Train => "train",
            Stage::Score => "score",
            Stage::Eval => "eval",
        }
    }

    fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Vocab => &[],
            Stage::Cooccur | Stage::Lexicon => &[Stage::Vocab],
            Stage::Train => &[Stage::Cooccur, Stage::Lexicon],
            Stage::Score => &[Stage::Train],
            Stage::Eval => &[Stage::Vocab, Stage::Lexicon, Stage::Train],
        }
    }

    /// Parses a comma-separated stage list.
    pub fn parse_list(list: &str) -> Result<Vec<Stage>> {
        let mut stages: Vec<Stage> = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        stages.sort();
        stages.dedup();
        Ok(stages)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}` (expected vocab, cooccur, lexicon, train, score, eval)")))
    }
}

pub const VOCAB: &str = "vocab";
pub const COOCCUR: &str = "cooccur";
pub const ASSIGNMENT: &str = "assignment";
pub const EMBEDDINGS_CONCEPT: &str = "embeddings.concept";
pub const EMBEDDINGS_BASELINE: &str = "embeddings.baseline";
pub const INTERPRETABILITY: &str = "interpretability";
pub const EVALUATION: &str = "evaluation";

fn artifact_file(name: &str) -> &'static str {
    match name {
        VOCAB => "vocab.txt",
        COOCCUR => "cooccur.bin",
        ASSIGNMENT => "assignment.tsv",
        EMBEDDINGS_CONCEPT => "embeddings.concept.txt",
        EMBEDDINGS_BASELINE => "embeddings.baseline.txt",
        INTERPRETABILITY => "interpretability.json",
        EVALUATION => "evaluation.json",
        _ => unreachable!("unknown artifact {name}"),
    }
}

/// Interpretability results per model (`concept`, `baseline`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreArtifact {
    pub lambda: usize,
    pub nmin_range: [usize; 2],
    pub models: BTreeMap<String, ModelScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScores {
    pub sweep: Vec<SweepRow>,
    /// Full report at the lowest `n_min`.
    pub report: InterpretabilityReport,
}

/// Evaluation results per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalArtifact {
    pub models: BTreeMap<String, ModelEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub similarity: Vec<SimilarityReport>,
    /// Keyed by subset name (`all`, `any-concept`, `all-concept`).
    pub analogy: BTreeMap<String, AnalogyReport>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    artifact: &'a str,
    stage: Stage,
    stage_hash: &'a str,
    config_hash: &'a str,
    inputs: &'a [String],
}

/// Model names trained by this configuration.
fn models(config: &PipelineConfig) -> Vec<(&'static str, Mode)> {
    let mut m = vec![("concept", Mode::Concept)];
    if config.compare_baseline {
        m.push(("baseline", Mode::Baseline));
    }
    m
}

fn embedding_artifact(model: &str) -> &'static str {
    if model == "concept" {
        EMBEDDINGS_CONCEPT
    } else {
        EMBEDDINGS_BASELINE
    }
}

/// Artifacts written by `stage`.
fn outputs(stage: Stage, config: &PipelineConfig) -> Vec<&'static str> {
    match stage {
        Stage::Vocab => vec![VOCAB],
        Stage::Cooccur => vec![COOCCUR],
        Stage::Lexicon => vec![ASSIGNMENT],
        Stage::Train => models(config).iter().map(|(m, _)| embedding_artifact(m)).collect(),
        Stage::Score => vec![INTERPRETABILITY],
        Stage::Eval => vec![EVALUATION],
    }
}

fn producer(name: &str, config: &PipelineConfig) -> Stage {
    Stage::ALL
        .into_iter()
        .find(|s| outputs(*s, config).contains(&name))
        .expect("every artifact has a producing stage")
}

/// Artifacts read by `stage`.
fn inputs(stage: Stage, config: &PipelineConfig) -> Vec<&'static str> {
    let embeddings = outputs(Stage::Train, config);
    match stage {
        Stage::Vocab => vec![],
        Stage::Cooccur | Stage::Lexicon => vec![VOCAB],
        Stage::Train => vec![VOCAB, COOCCUR, ASSIGNMENT],
        Stage::Score => embeddings,
        Stage::Eval => [VOCAB, ASSIGNMENT].into_iter().chain(embeddings).collect(),
    }
}

/// Stages whose configured inputs are present: scoring needs a category
/// file and evaluation needs at least one dataset.
pub fn default_stages(config: &PipelineConfig) -> Vec<Stage> {
    Stage::ALL
        .into_iter()
        .filter(|s| match s {
            Stage::Score => config.categories.is_some(),
            Stage::Eval => !config.similarity.is_empty() || config.analogy.is_some(),
            _ => true,
        })
        .collect()
}

/// Hash of each stage's parameters, raw input files and upstream stage hashes.
fn stage_hashes(config: &PipelineConfig) -> Result<BTreeMap<Stage, String>> {
    let file = |p: &Path| file_sha256(p).map(hex::encode);
    let opt_file = |p: &Option<PathBuf>| p.as_deref().map(file).transpose();
    let mut hashes: BTreeMap<Stage, String> = BTreeMap::new();
    for stage in Stage::ALL {
        let params = match stage {
            Stage::Vocab => serde_json::json!({
                "corpus": file(&config.corpus)?,
                "stopwords": opt_file(&config.stopwords)?,
                "min_count": config.min_count,
            }),
            Stage::Cooccur => serde_json::json!({
                "corpus": file(&config.corpus)?,
                "stopwords": opt_file(&config.stopwords)?,
                "window": config.window,
                "weighting": config.weighting.to_string(),
            }),
            Stage::Lexicon => serde_json::json!({
                "thesaurus": file(&config.thesaurus)?,
                "lambda_part": config.lambda_part,
                "min_size": config.min_size,
                "groups": config.group_count(),
                "truncation": format!("{:?}", config.truncation),
            }),
            Stage::Train => serde_json::json!({
                "models": models(config)
                    .iter()
                    .map(|(name, mode)| (name.to_string(), hex::encode(config.trainer(*mode).hash())))
                    .collect::<BTreeMap<_, _>>(),
            }),
            Stage::Score => serde_json::json!({
                "categories": opt_file(&config.categories)?,
                "lambda_is": config.lambda_is,
                "nmin_range": config.nmin_range,
            }),
            Stage::Eval => serde_json::json!({
                "similarity": config.similarity.iter().map(|p| file(p)).collect::<Result<Vec<_>>>()?,
                "analogy": opt_file(&config.analogy)?,
                "analogy_top_k": config.analogy_top_k,
            }),
        };
        let mut h = Sha256::new();
        h.update(stage.name().as_bytes());
        h.update(params.to_string().as_bytes());
        for up in stage.upstream() {
            h.update(hashes[up].as_bytes());
        }
        hashes.insert(stage, hex::encode(h.finalize()));
    }
    Ok(hashes)
}

struct Run<'a> {
    config: &'a PipelineConfig,
    dir: PathBuf,
    config_hash: String,
    hashes: BTreeMap<Stage, String>,
    manifest: Manifest,
    force: bool,
}

impl Run<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(artifact_file(name))
    }

    /// Whether the manifest's record of `name` matches the expected stage hash
    /// and the file on disk.
    fn fresh(&self, name: &str, stage: Stage) -> Result<bool> {
        let Some(a) = self.manifest.artifact(name) else {
            return Ok(false);
        };
        let path = self.dir.join(&a.path);
        if a.stage_hash != self.hashes[&stage] || !path.is_file() {
            return Ok(false);
        }
        Ok(hex::encode(file_sha256(&path)?) == a.sha256)
    }

    fn check_inputs(&self, stage: Stage, ran: &[Stage]) -> Result<()> {
        for name in inputs(stage, self.config) {
            let producer = producer(name, self.config);
            if ran.contains(&producer) {
                continue;
            }
            let path = self.path(name);
            if !path.is_file() {
                return Err(Error::StaleInput {
                    stage: stage.name().into(),
                    message: format!("{name} ({}) is missing; run the {producer} stage first", path.display()),
                });
            }
            if !self.force && !self.fresh(name, producer)? {
                return Err(Error::StaleInput {
                    stage: stage.name().into(),
                    message: format!(
                        "{name} ({}) was not produced by the current configuration; rerun the {producer} stage or pass --force",
                        path.display()
                    ),
                });
            }
        }
        Ok(())
    }

    fn record(&mut self, stage: Stage, status: StageStatus, seconds: f64, details: serde_json::Value) -> Result<()> {
        let stage_hash = self.hashes[&stage].clone();
        let ins: Vec<String> = inputs(stage, self.config).iter().map(|s| s.to_string()).collect();
        let mut artifacts = Vec::new();
        for name in outputs(stage, self.config) {
            let path = self.path(name);
            let sha = hex::encode(file_sha256(&path)?);
            if status == StageStatus::Ran {
                let sidecar = Sidecar {
                    artifact: name,
                    stage,
                    stage_hash: &stage_hash,
                    config_hash: &self.config_hash,
                    inputs: &ins,
                };
                let meta = path.with_file_name(format!("{}.meta.json", artifact_file(name)));
                let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
                fs::write(&meta, text + "\n").map_err(|e| Error::io(&meta, e))?;
            }
            artifacts.push(Artifact {
                name: name.into(),
                stage,
                path: artifact_file(name).into(),
                sha256: sha,
                stage_hash: stage_hash.clone(),
                config_hash: self.config_hash.clone(),
                inputs: ins.clone(),
            });
        }
        let details = match (status, details.is_null()) {
            (StageStatus::UpToDate, true) => self
                .manifest
                .stage(stage)
                .map(|r| r.details.clone())
                .unwrap_or_default(),
            _ => details,
        };
        self.manifest.replace_stage(
            StageRecord {
                stage,
                stage_hash,
                status,
                seconds,
                details,
            },
            artifacts,
        );
        self.manifest.config_hash = self.config_hash.clone();
        self.manifest.save(self.dir.join(MANIFEST_FILE))
    }

    fn stopwords(&self) -> Result<StopWords> {
        match &self.config.stopwords {
            Some(p) => StopWords::load(p),
            None => Ok(StopWords::empty()),
        }
    }

    fn tokens(&self) -> Result<Vec<String>> {
        let p = &self.config.corpus;
        let raw = fs::read(p).map_err(|e| Error::io(p, e))?;
        tokenize(&raw, &self.stopwords()?)
    }

    fn execute(&self, stage: Stage) -> Result<serde_json::Value> {
        let c = self.config;
        match stage {
            Stage::Vocab => {
                let p = &c.corpus;
                let raw = fs::read(p).map_err(|e| Error::io(p, e))?;
                let text = crate::corpus::decode(&raw)?;
                let vocab = Vocabulary::build_parallel(text, &self.stopwords()?, c.min_count, c.threads)?;
                vocab.save(self.path(VOCAB))?;
                Ok(serde_json::json!({ "words": vocab.len(), "tokens": vocab.total_tokens() }))
            }
            Stage::Cooccur => {
                let vocab = Vocabulary::load(self.path(VOCAB))?;
                let encoded = vocab.encode(&self.tokens()?);
                let records = count_cooccurrences_sharded(&encoded, c.window, c.weighting, c.threads)?;
                save_binary(self.path(COOCCUR), &records)?;
                Ok(serde_json::json!({ "records": records.len() }))
            }
            Stage::Lexicon => {
                let vocab = Vocabulary::load(self.path(VOCAB))?;
                let tree = ThesaurusTree::load(&c.thesaurus)?.filter(&vocab);
                let raw = partition(&tree, c.lambda_part, &vocab, c.truncation)?;
                let selection = select_groups(&raw, &vocab, c.min_size, c.group_count())?;
                selection.assignment.save(self.path(ASSIGNMENT), &vocab)?;
                Ok(serde_json::json!({
                    "raw_groups": selection.raw_count,
                    "after_size_filter": selection.after_size_filter,
                    "dropped_by_rank": selection.dropped_by_rank,
                    "stats": selection.assignment.stats(),
                }))
            }
            Stage::Train => {
                let vocab = Vocabulary::load(self.path(VOCAB))?;
                let records = load_binary(self.path(COOCCUR))?;
                let assignment = ConceptAssignment::load(self.path(ASSIGNMENT), &vocab)?;
                let mut details = serde_json::Map::new();
                for (name, mode) in models(c) {
                    info!("training {name} model");
                    let outcome = train(&records, vocab.len(), &c.trainer(mode), Some(&assignment))?;
                    EmbeddingMatrix::from_params(&outcome.params, &vocab)?.save(self.path(embedding_artifact(name)))?;
                    details.insert(
                        name.into(),
                        serde_json::json!({
                            "final_cost": outcome.epoch_costs.last(),
                            "epoch_costs": outcome.epoch_costs,
                            "accounting": outcome.accounting,
                        }),
                    );
                }
                Ok(details.into())
            }
            Stage::Score => {
                let Some(cat_path) = &c.categories else {
                    return Err(Error::Config("the score stage needs a `categories` file".into()));
                };
                let categories = CategoryDataset::load(cat_path)?;
                let [lo, hi] = c.nmin_range;
                let mut models_out = BTreeMap::new();
                for (name, _) in models(c) {
                    let emb = EmbeddingMatrix::load(self.path(embedding_artifact(name)))?;
                    models_out.insert(
                        name.to_string(),
                        ModelScores {
                            sweep: sweep_nmin(&emb, &categories, c.lambda_is, (lo, hi))?,
                            report: score_embedding(&emb, &categories, c.lambda_is, lo)?,
                        },
                    );
                }
                let artifact = ScoreArtifact {
                    lambda: c.lambda_is,
                    nmin_range: c.nmin_range,
                    models: models_out,
                };
                write_json(&self.path(INTERPRETABILITY), &artifact)?;
                Ok(serde_json::Value::Null)
            }
            Stage::Eval => {
                if c.similarity.is_empty() && c.analogy.is_none() {
                    return Err(Error::Config("the eval stage needs a `similarity` or `analogy` dataset".into()));
                }
                let vocab = Vocabulary::load(self.path(VOCAB))?;
                let assignment = ConceptAssignment::load(self.path(ASSIGNMENT), &vocab)?;
                let similarity: Vec<SimilarityDataset> =
                    c.similarity.iter().map(SimilarityDataset::load).collect::<Result<_>>()?;
                let subsets = c
                    .analogy
                    .as_ref()
                    .map(|p| AnalogyDataset::load(p).map(|d| partition_analogy_questions(&d, &assignment, &vocab)))
                    .transpose()?;
                let mut models_out = BTreeMap::new();
                for (name, _) in models(c) {
                    let emb = EmbeddingMatrix::load(self.path(embedding_artifact(name)))?;
                    let mut analogy = BTreeMap::new();
                    if let Some(s) = &subsets {
                        for subset in [Subset::All, Subset::AnyConcept, Subset::AllConcept] {
                            analogy.insert(subset.to_string(), analogy_eval(&emb, s.get(subset), c.analogy_top_k));
                        }
                    }
                    models_out.insert(
                        name.to_string(),
                        ModelEval {
                            similarity: similarity.iter().map(|d| similarity_eval(&emb, d)).collect::<Result<_>>()?,
                            analogy,
                        },
                    );
                }
                write_json(&self.path(EVALUATION), &EvalArtifact { models: models_out })?;
                Ok(serde_json::Value::Null)
            }
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs `stages` in dependency order and returns the updated manifest.
///
/// A stage whose recorded artifacts already match its current hash is
/// skipped unless `force` is set. A stage whose inputs were neither produced
/// in this run nor recorded under the current configuration fails with a
/// stale-input error; `force` accepts whatever inputs exist on disk.
pub fn run_pipeline(config: &PipelineConfig, stages: &[Stage], force: bool) -> Result<Manifest> {
    config.validate()?;
    let mut stages = stages.to_vec();
    stages.sort();
    stages.dedup();
    let dir = config.output_dir().to_path_buf();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = if manifest_path.is_file() {
        Manifest::load(&manifest_path)?
    } else {
        Manifest::default()
    };
    let mut run = Run {
        config,
        config_hash: hex::encode(config.hash()?),
        hashes: stage_hashes(config)?,
        dir,
        manifest,
        force,
    };

    let mut ran: Vec<Stage> = Vec::new();
    for stage in stages {
        let up_to_date = !force
            && stage.upstream().iter().all(|u| !ran.contains(u))
            && outputs(stage, config).iter().all(|name| run.fresh(name, stage).unwrap_or(false))
            && inputs(stage, config)
                .iter()
                .all(|name| run.fresh(name, producer(name, config)).unwrap_or(false));
        if up_to_date {
            info!("{stage}: up to date");
            run.record(stage, StageStatus::UpToDate, 0.0, serde_json::Value::Null)?;
            continue;
        }
        run.check_inputs(stage, &ran)?;
        info!("{stage}: running");
        let start = Instant::now();
        let details = run.execute(stage).map_err(|e| match e {
            e @ (Error::StaleInput { .. } | Error::Config(_)) => e,
            other => Error::StageFailed {
                stage: stage.name().into(),
                source: Box::new(other),
            },
        })?;
        let seconds = start.elapsed().as_secs_f64();
        info!("{stage}: done in {seconds:.2}s");
        run.record(stage, StageStatus::Ran, seconds, details)?;
        ran.push(stage);
    }
    Ok(run.manifest)
}
