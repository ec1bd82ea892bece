use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{EvalArtifact, Manifest, ScoreArtifact, Stage, EVALUATION, INTERPRETABILITY};
use crate::error::{Error, Result};
use crate::numfmt::format_significant;

/// Text summary plus the plot-ready files written next to it.
#[derive(Debug, Clone)]
pub struct Report {
    pub summary: String,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

fn num(x: f64) -> String {
    format_significant(x, 17)
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), num)
}

fn delta(concept: Option<f64>, baseline: Option<f64>) -> String {
    match (concept, baseline) {
        (Some(c), Some(b)) => num(c - b),
        _ => "-".to_owned(),
    }
}

fn load_json<T: serde::de::DeserializeOwned>(manifest: &Manifest, base: &Path, name: &str) -> Result<Option<T>> {
    let Some(a) = manifest.artifact(name) else {
        return Ok(None);
    };
    let path = base.join(&a.path);
    if !path.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| Error::format(&path, e.to_string()))
}

/// Summarises the artifacts listed in a manifest. Writes `summary.txt` and
/// tab-separated tables into `out_dir` (default: `report/` beside the manifest).
/// Sections whose artifacts are missing are marked absent.
pub fn report(manifest_path: impl AsRef<Path>, out_dir: Option<&Path>) -> Result<Report> {
    let manifest_path = manifest_path.as_ref();
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let dir = out_dir.map_or_else(|| base.join("report"), Path::to_path_buf);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let mut s = String::new();
    let mut files = Vec::new();
    let _ = writeln!(s, "config hash: {}", manifest.config_hash);
    let _ = writeln!(s, "\nstages:");
    for r in &manifest.stages {
        let status = match r.status {
            super::StageStatus::Ran => "ran",
            super::StageStatus::UpToDate => "up-to-date",
        };
        let _ = writeln!(s, "  {:<8} {:<10} {:.3}s", r.stage.name(), status, r.seconds);
    }

    if let Some(lex) = manifest.stage(Stage::Lexicon) {
        let d = &lex.details;
        let _ = writeln!(
            s,
            "\nlexicon: {} raw groups, {} after size filter, {} kept; {} concept words, {} anchored coordinates",
            d["raw_groups"],
            d["after_size_filter"],
            d["stats"]["groups"],
            d["stats"]["unique_words"],
            d["stats"]["anchored_coordinates"]
        );
    }
    if let Some(train) = manifest.stage(Stage::Train) {
        let _ = writeln!(s, "\ntraining:");
        if let Some(models) = train.details.as_object() {
            for (name, d) in models {
                let _ = writeln!(
                    s,
                    "  {name}: final cost {}, {} parameters, {} anchored coordinates",
                    opt_num(d["final_cost"].as_f64()),
                    d["accounting"]["total_parameters"],
                    d["accounting"]["anchored_coordinates"]
                );
            }
        }
    }

    let scores: Option<ScoreArtifact> = load_json(&manifest, base, INTERPRETABILITY)?;
    match &scores {
        None => {
            let _ = writeln!(s, "\ninterpretability: absent");
        }
        Some(sc) => {
            let _ = writeln!(s, "\ninterpretability (lambda {}):", sc.lambda);
            let _ = writeln!(s, "  n_min\tbaseline\tconcept\tdelta");
            let mut tsv = String::from("n_min\tbaseline\tconcept\n");
            let concept = sc.models.get("concept");
            let baseline = sc.models.get("baseline");
            let rows = concept.or(baseline).map_or(0, |m| m.sweep.len());
            for i in 0..rows {
                let n_min = concept.or(baseline).unwrap().sweep[i].n_min;
                let c = concept.map(|m| m.sweep[i].score);
                let b = baseline.map(|m| m.sweep[i].score);
                let _ = writeln!(s, "  {n_min}\t{}\t{}\t{}", opt_num(b), opt_num(c), delta(c, b));
                let _ = writeln!(tsv, "{n_min}\t{}\t{}", opt_num(b), opt_num(c));
            }
            let path = dir.join("is_sweep.tsv");
            fs::write(&path, tsv).map_err(|e| Error::io(&path, e))?;
            files.push(path);
        }
    }

    let evals: Option<EvalArtifact> = load_json(&manifest, base, EVALUATION)?;
    match &evals {
        None => {
            let _ = writeln!(s, "\nevaluation: absent");
        }
        Some(ev) => {
            let concept = ev.models.get("concept");
            let baseline = ev.models.get("baseline");
            let reference = concept.or(baseline);

            let _ = writeln!(s, "\nword similarity (spearman):");
            let _ = writeln!(s, "  dataset\tbaseline\tconcept\tdelta\tpairs_seen\tpairs_skipped");
            let mut tsv = String::from("dataset\tmodel\tspearman\tpairs_seen\tpairs_skipped\n");
            for (i, r) in reference.map_or(&[][..], |m| &m.similarity[..]).iter().enumerate() {
                let c = concept.map(|m| m.similarity[i].correlation);
                let b = baseline.map(|m| m.similarity[i].correlation);
                let _ = writeln!(
                    s,
                    "  {}\t{}\t{}\t{}\t{}\t{}",
                    r.dataset,
                    opt_num(b),
                    opt_num(c),
                    delta(c, b),
                    r.pairs_seen,
                    r.pairs_skipped
                );
            }
            for (model, m) in &ev.models {
                for r in &m.similarity {
                    let _ = writeln!(
                        tsv,
                        "{}\t{model}\t{}\t{}\t{}",
                        r.dataset,
                        num(r.correlation),
                        r.pairs_seen,
                        r.pairs_skipped
                    );
                }
            }
            let path = dir.join("similarity.tsv");
            fs::write(&path, tsv).map_err(|e| Error::io(&path, e))?;
            files.push(path);

            if reference.is_some_and(|m| !m.analogy.is_empty()) {
                let _ = writeln!(s, "\nanalogy precision (%):");
                let _ = writeln!(s, "  subset\tscope\tbaseline\tconcept\tdelta\tattempted");
                let mut tsv = String::from("subset\tscope\tkind\tmodel\tprecision\tcorrect\tattempted\tskipped\n");
                for subset in ["all", "any-concept", "all-concept"] {
                    let Some(r) = reference.and_then(|m| m.analogy.get(subset)) else {
                        continue;
                    };
                    let c = concept.and_then(|m| m.analogy.get(subset));
                    let b = baseline.and_then(|m| m.analogy.get(subset));
                    for (scope, pick) in [("semantic", 0), ("syntactic", 1), ("overall", 2)] {
                        let get = |a: &crate::eval::AnalogyReport| match pick {
                            0 => a.semantic,
                            1 => a.syntactic,
                            _ => a.overall,
                        };
                        let cp = c.map(|a| get(a).precision());
                        let bp = b.map(|a| get(a).precision());
                        let _ = writeln!(
                            s,
                            "  {subset}\t{scope}\t{}\t{}\t{}\t{}",
                            opt_num(bp),
                            opt_num(cp),
                            delta(cp, bp),
                            get(r).attempted
                        );
                    }
                }
                for (model, m) in &ev.models {
                    for (subset, a) in &m.analogy {
                        let rows = a
                            .sections
                            .iter()
                            .map(|sec| (sec.name.as_str(), sec.kind.to_string(), sec.tally))
                            .chain([
                                ("semantic", "semantic".to_owned(), a.semantic),
                                ("syntactic", "syntactic".to_owned(), a.syntactic),
                                ("overall", "all".to_owned(), a.overall),
                            ]);
                        for (scope, kind, t) in rows {
                            let _ = writeln!(
                                tsv,
                                "{subset}\t{scope}\t{kind}\t{model}\t{}\t{}\t{}\t{}",
                                num(t.precision()),
                                t.correct,
                                t.attempted,
                                t.skipped
                            );
                        }
                    }
                }
                let path = dir.join("analogy.tsv");
                fs::write(&path, tsv).map_err(|e| Error::io(&path, e))?;
                files.push(path);
            }
        }
    }

    let path = dir.join("summary.txt");
    fs::write(&path, &s).map_err(|e| Error::io(&path, e))?;
    files.insert(0, path);
    Ok(Report { summary: s, dir, files })
}
