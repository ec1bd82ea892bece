use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use conceptvec::cooccur::{count_cooccurrences_sharded, load_binary, save_binary, save_text, Weighting};
use conceptvec::corpus::{decode, tokenize, StopWords, Vocabulary};
use conceptvec::embedding::EmbeddingMatrix;
use conceptvec::eval::{
    analogy_eval, partition_analogy_questions, similarity_eval, AnalogyDataset, SimilarityDataset, Subset,
};
use conceptvec::interpret::{score_embedding, sweep_nmin, write_sweep, CategoryDataset};
use conceptvec::lexicon::{partition, select_groups, ConceptAssignment, ThesaurusTree, Truncation};
use conceptvec::pipeline::{default_stages, report, run_pipeline, PipelineConfig, Stage};
use conceptvec::trainer::{train, Mode, TrainerConfig, DEFAULT_CONCEPT_WEIGHT};
use conceptvec::{Error, Result};

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "conceptvec", version, about = "Concept-anchored word embedding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Vocabulary construction
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Cooccurrence counting
    #[command(subcommand)]
    Cooccur(CooccurCmd),
    /// Concept word-groups from a thesaurus
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Train embeddings from cooccurrence records
    Train(TrainArgs),
    /// Interpretability scoring
    #[command(subcommand)]
    Interp(InterpCmd),
    /// Word similarity and analogy evaluation
    #[command(subcommand)]
    Eval(EvalCmd),
    /// End-to-end runs driven by a config file
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Count tokens and write the frequency-ranked vocabulary
    BuildVocab {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 65)]
        min_count: u64,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

#[derive(Subcommand)]
enum CooccurCmd {
    /// Count windowed cooccurrences and write binary records
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Must match the stop words used for the vocabulary
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long, default_value_t = 15)]
        window: usize,
        #[arg(long, default_value_t = Weighting::InverseDistance)]
        weighting: Weighting,
        #[arg(long)]
        output: PathBuf,
        /// Also write an `i j x` text dump
        #[arg(long)]
        text: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

#[derive(Subcommand)]
enum LexiconCmd {
    /// Partition a thesaurus into concept groups and assign them to dimensions
    Build {
        #[arg(long)]
        thesaurus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Node size threshold for the partition
        #[arg(long, default_value_t = 452)]
        lambda: usize,
        #[arg(long, default_value_t = 38)]
        min_size: usize,
        /// Number of groups to keep
        #[arg(long, default_value_t = 300)]
        dims: usize,
        /// Keep the least frequent words when truncating oversized categories
        #[arg(long)]
        least_frequent: bool,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    cooccur: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = Mode::Baseline)]
    mode: Mode,
    #[arg(long)]
    assignment: Option<PathBuf>,
    /// Anchoring weight (concept mode; defaults to 0.1)
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, default_value_t = 300)]
    dims: usize,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 75.0)]
    x_max: f64,
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long)]
    output: PathBuf,
    /// Also write a binary checkpoint of all parameters
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum InterpCmd {
    /// Score every dimension against a category dataset
    Score {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        categories: PathBuf,
        #[arg(long, default_value_t = 5)]
        lambda: usize,
        /// Inclusive range `a..b`
        #[arg(long, default_value = "5..20", value_parser = parse_range)]
        nmin: (usize, usize),
        /// Report at the lowest n_min
        #[arg(long)]
        output: PathBuf,
        /// `n_min<TAB>IS` table; defaults to the output path with a `.sweep.tsv` suffix
        #[arg(long)]
        sweep: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Spearman correlation against human similarity scores
    Similarity {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
    },
    /// Analogy precision per section, per kind and overall
    Analogy {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        assignment: Option<PathBuf>,
        /// Vocabulary the assignment was built on; defaults to the embedding rows
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long, default_value_t = Subset::All)]
        subset: Subset,
        /// Restrict candidates to the most frequent words
        #[arg(long)]
        top_k: Option<usize>,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Run stages in dependency order
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of vocab,cooccur,lexicon,train,score,eval
        #[arg(long)]
        stages: Option<String>,
        /// Rerun up-to-date stages and accept stale inputs
        #[arg(long)]
        force: bool,
        /// Override a config value, e.g. `--set k=0.2`
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Summarise a finished run
    Report {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got `{s}`"))?;
    let a = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
    Ok((a, b))
}

fn stopwords(path: &Option<PathBuf>) -> Result<StopWords> {
    path.as_ref().map_or_else(|| Ok(StopWords::empty()), StopWords::load)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn stdout_result(r: io::Result<()>) -> Result<()> {
    r.map_err(|e| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Corpus(CorpusCmd::BuildVocab {
            input,
            min_count,
            stopwords: stop,
            output,
            threads,
        }) => {
            let raw = read(&input)?;
            let vocab = Vocabulary::build_parallel(decode(&raw)?, &stopwords(&stop)?, min_count, threads)?;
            vocab.save(&output)?;
            info!("{} words from {} tokens", vocab.len(), vocab.total_tokens());
        }
        Command::Cooccur(CooccurCmd::Build {
            corpus,
            vocab,
            stopwords: stop,
            window,
            weighting,
            output,
            text,
            threads,
        }) => {
            let vocab = Vocabulary::load(&vocab)?;
            let tokens = tokenize(&read(&corpus)?, &stopwords(&stop)?)?;
            let records = count_cooccurrences_sharded(&vocab.encode(&tokens), window, weighting, threads)?;
            save_binary(&output, &records)?;
            if let Some(t) = text {
                save_text(t, &records)?;
            }
            info!("{} records", records.len());
        }
        Command::Lexicon(LexiconCmd::Build {
            thesaurus,
            vocab,
            lambda,
            min_size,
            dims,
            least_frequent,
            output,
        }) => {
            let vocab = Vocabulary::load(&vocab)?;
            let tree = ThesaurusTree::load(&thesaurus)?.filter(&vocab);
            let truncation = if least_frequent {
                Truncation::LeastFrequent
            } else {
                Truncation::MostFrequent
            };
            let raw = partition(&tree, lambda, &vocab, truncation)?;
            let selection = select_groups(&raw, &vocab, min_size, dims)?;
            selection.assignment.save(&output, &vocab)?;
            let stats = selection.assignment.stats();
            println!(
                "raw groups\t{}\nafter size filter\t{}\nkept\t{}\nconcept words\t{}\nmean memberships\t{}\nanchored coordinates\t{}\nmean pair overlap\t{}\nmax overlap\t{}",
                selection.raw_count,
                selection.after_size_filter,
                stats.groups,
                stats.unique_words,
                stats.mean_memberships,
                stats.anchored_coordinates,
                stats.mean_pair_overlap,
                stats.max_overlap
            );
        }
        Command::Train(a) => {
            let vocab = Vocabulary::load(&a.vocab)?;
            let records = load_binary(&a.cooccur)?;
            let assignment = a
                .assignment
                .as_ref()
                .map(|p| ConceptAssignment::load(p, &vocab))
                .transpose()?;
            let config = TrainerConfig {
                dims: a.dims,
                mode: a.mode,
                k: a.k.unwrap_or(match a.mode {
                    Mode::Baseline => 0.0,
                    Mode::Concept => DEFAULT_CONCEPT_WEIGHT,
                }),
                x_max: a.x_max,
                alpha: a.alpha,
                iterations: a.iters,
                learning_rate: a.learning_rate,
                seed: a.seed,
                threads: a.threads,
                ..TrainerConfig::default()
            };
            let outcome = train(&records, vocab.len(), &config, assignment.as_ref())?;
            EmbeddingMatrix::from_params(&outcome.params, &vocab)?.save(&a.output)?;
            if let Some(c) = a.checkpoint {
                outcome.params.save_checkpoint(c, &config.hash())?;
            }
            let acc = &outcome.accounting;
            println!(
                "final cost\t{}\ntotal parameters\t{}\nconcept words\t{}\nanchored coordinates\t{}",
                outcome.epoch_costs.last().copied().unwrap_or(f64::NAN),
                acc.total_parameters,
                acc.concept_words,
                acc.anchored_coordinates
            );
        }
        Command::Interp(InterpCmd::Score {
            embeddings,
            categories,
            lambda,
            nmin,
            output,
            sweep,
        }) => {
            let emb = EmbeddingMatrix::load(&embeddings)?;
            let cats = CategoryDataset::load(&categories)?;
            let rows = sweep_nmin(&emb, &cats, lambda, nmin)?;
            let report = score_embedding(&emb, &cats, lambda, nmin.0)?;
            report.save(&output)?;
            let sweep_path = sweep.unwrap_or_else(|| {
                let mut name = output.file_name().unwrap_or_default().to_os_string();
                name.push(".sweep.tsv");
                output.with_file_name(name)
            });
            let file = fs::File::create(&sweep_path).map_err(|e| Error::Io {
                path: sweep_path.clone(),
                source: e,
            })?;
            write_sweep(&rows, BufWriter::new(file)).map_err(|e| Error::Io {
                path: sweep_path.clone(),
                source: e,
            })?;
            if !report.skipped_categories.is_empty() {
                info!("skipped categories: {}", report.skipped_categories.join(", "));
            }
            stdout_result(write_sweep(&rows, io::stdout().lock()))?;
        }
        Command::Eval(EvalCmd::Similarity { embeddings, dataset }) => {
            let emb = EmbeddingMatrix::load(&embeddings)?;
            let mut out = io::stdout().lock();
            stdout_result(writeln!(out, "dataset\tspearman\tpairs_seen\tpairs_skipped"))?;
            for d in dataset {
                let r = similarity_eval(&emb, &SimilarityDataset::load(&d)?)?;
                stdout_result(writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    r.dataset, r.correlation, r.pairs_seen, r.pairs_skipped
                ))?;
            }
        }
        Command::Eval(EvalCmd::Analogy {
            embeddings,
            dataset,
            assignment,
            vocab,
            subset,
            top_k,
        }) => {
            let emb = EmbeddingMatrix::load(&embeddings)?;
            let data = AnalogyDataset::load(&dataset)?;
            let questions = match (subset, assignment) {
                (Subset::All, None) => data,
                (_, None) => {
                    return Err(Error::Config(format!("--subset {subset} needs --assignment")));
                }
                (_, Some(path)) => {
                    let vocab = match vocab {
                        Some(p) => Vocabulary::load(p)?,
                        None => Vocabulary::from_ranked(emb.words().iter().map(|w| (w.clone(), 1)).collect())?,
                    };
                    let assignment = ConceptAssignment::load(path, &vocab)?;
                    partition_analogy_questions(&data, &assignment, &vocab).get(subset).clone()
                }
            };
            let r = analogy_eval(&emb, &questions, top_k);
            stdout_result(r.write_to(io::stdout().lock()))?;
        }
        Command::Pipeline(PipelineCmd::Run {
            config,
            stages,
            force,
            mut overrides,
            threads,
        }) => {
            if let Some(t) = threads {
                overrides.push(format!("threads={t}"));
            }
            let config = PipelineConfig::load(&config, &overrides)?;
            let stages = match stages {
                Some(list) => Stage::parse_list(&list)?,
                None => default_stages(&config),
            };
            let manifest = run_pipeline(&config, &stages, force)?;
            for a in &manifest.artifacts {
                println!("{}\t{}\t{}", a.name, config.output_dir().join(&a.path).display(), a.sha256);
            }
        }
        Command::Pipeline(PipelineCmd::Report { manifest, output }) => {
            let r = report(&manifest, output.as_deref())?;
            print!("{}", r.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::from(EXIT_FAILURE),
            }
        }
    }
}
