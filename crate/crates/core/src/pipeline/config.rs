use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cooccur::{Weighting, MAX_WINDOW};
use crate::error::{Error, Result};
use crate::lexicon::Truncation;
use crate::trainer::{Mode, TrainerConfig};

/// Environment variable naming the directory that holds pipeline outputs
/// when the config does not set `output_dir`.
pub const OUTPUT_ROOT_ENV: &str = "CONCEPTVEC_OUTPUT_ROOT";

fn default_min_count() -> u64 {
    65
}
fn default_window() -> usize {
    15
}
fn default_lambda_part() -> usize {
    452
}
fn default_min_size() -> usize {
    38
}
fn default_dims() -> usize {
    300
}
fn default_k() -> f64 {
    crate::trainer::DEFAULT_CONCEPT_WEIGHT
}
fn default_x_max() -> f64 {
    75.0
}
fn default_alpha() -> f64 {
    0.75
}
fn default_iterations() -> usize {
    20
}
fn default_learning_rate() -> f64 {
    0.05
}
fn default_seed() -> u64 {
    1
}
fn default_threads() -> usize {
    1
}
fn default_lambda_is() -> usize {
    crate::interpret::DEFAULT_LAMBDA
}
fn default_nmin_range() -> [usize; 2] {
    let (lo, hi) = crate::interpret::DEFAULT_NMIN_RANGE;
    [lo, hi]
}
fn default_true() -> bool {
    true
}

/// Every input path and parameter of an end-to-end run.
///
/// Relative paths are resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    pub thesaurus: PathBuf,
    #[serde(default)]
    pub categories: Option<PathBuf>,
    #[serde(default)]
    pub similarity: Vec<PathBuf>,
    #[serde(default)]
    pub analogy: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,

    #[serde(default = "default_min_count")]
    pub min_count: u64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default, with = "display_fromstr")]
    pub weighting: Weighting,

    #[serde(default = "default_lambda_part")]
    pub lambda_part: usize,
    #[serde(default = "default_min_size")]
    pub min_size: usize,
    /// Number of concept groups; defaults to `dims`.
    #[serde(default)]
    pub groups: Option<usize>,
    #[serde(default, with = "truncation_name")]
    pub truncation: Truncation,

    #[serde(default = "default_dims")]
    pub dims: usize,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Also train a baseline model for comparison.
    #[serde(default = "default_true")]
    pub compare_baseline: bool,

    #[serde(default = "default_lambda_is")]
    pub lambda_is: usize,
    #[serde(default = "default_nmin_range")]
    pub nmin_range: [usize; 2],
    /// Restrict analogy candidates to this many most frequent words.
    #[serde(default)]
    pub analogy_top_k: Option<usize>,
}

mod display_fromstr {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::cooccur::Weighting;

    pub fn serialize<S: Serializer>(w: &Weighting, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(w)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Weighting, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

mod truncation_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::lexicon::Truncation;

    pub fn serialize<S: Serializer>(t: &Truncation, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match t {
            Truncation::MostFrequent => "most-frequent",
            Truncation::LeastFrequent => "least-frequent",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Truncation, D::Error> {
        match String::deserialize(d)?.as_str() {
            "most-frequent" => Ok(Truncation::MostFrequent),
            "least-frequent" => Ok(Truncation::LeastFrequent),
            other => Err(serde::de::Error::custom(format!(
                "unknown truncation `{other}` (expected most-frequent or least-frequent)"
            ))),
        }
    }
}

/// Parses the right-hand side of a `key=value` override as a TOML value,
/// falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_owned())),
        Err(_) => toml::Value::String(raw.to_owned()),
    }
}

impl PipelineConfig {
    /// Parses TOML text, applies `key=value` overrides, and resolves relative
    /// paths against `base`.
    pub fn from_toml(text: &str, overrides: &[String], base: &Path) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("config: {}", e.message())))?;
        for o in overrides {
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            table.insert(key.trim().to_owned(), override_value(value.trim()));
        }
        let mut config: PipelineConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("config: {}", e.message())))?;
        config.resolve(base);
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, overrides, base)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.corpus);
        join(&mut self.thesaurus);
        self.stopwords.iter_mut().for_each(join);
        self.categories.iter_mut().for_each(join);
        self.similarity.iter_mut().for_each(join);
        self.analogy.iter_mut().for_each(join);
        match &mut self.output_dir {
            Some(dir) => join(dir),
            None => {
                self.output_dir = Some(match std::env::var_os(OUTPUT_ROOT_ENV) {
                    Some(root) => PathBuf::from(root),
                    None => base.join("out"),
                })
            }
        }
    }

    pub fn output_dir(&self) -> &Path {
        self.output_dir.as_deref().unwrap_or(Path::new("out"))
    }

    pub fn group_count(&self) -> usize {
        self.groups.unwrap_or(self.dims)
    }

    pub fn trainer(&self, mode: Mode) -> TrainerConfig {
        TrainerConfig {
            dims: self.dims,
            mode,
            k: match mode {
                Mode::Baseline => 0.0,
                Mode::Concept => self.k,
            },
            x_max: self.x_max,
            alpha: self.alpha,
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            seed: self.seed,
            threads: self.threads,
            ..TrainerConfig::default()
        }
    }

    /// Checks that inputs exist and parameters satisfy each module's preconditions.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let mut inputs: Vec<&Path> = vec![&self.corpus, &self.thesaurus];
        inputs.extend(self.stopwords.as_deref());
        inputs.extend(self.categories.as_deref());
        inputs.extend(self.similarity.iter().map(PathBuf::as_path));
        inputs.extend(self.analogy.as_deref());
        for p in inputs {
            if !p.is_file() {
                return fail(format!("input file {} does not exist", p.display()));
            }
        }
        if self.min_count == 0 {
            return fail("min_count must be at least 1".into());
        }
        if self.window == 0 || self.window > MAX_WINDOW {
            return fail(format!("window must be in 1..={MAX_WINDOW}, got {}", self.window));
        }
        if self.lambda_part == 0 {
            return fail("lambda_part must be at least 1".into());
        }
        if self.group_count() == 0 || self.group_count() > self.dims {
            return fail(format!(
                "groups must be in 1..={} (dims), got {}",
                self.dims,
                self.group_count()
            ));
        }
        if self.lambda_is == 0 {
            return fail("lambda_is must be at least 1".into());
        }
        let [lo, hi] = self.nmin_range;
        if lo == 0 || lo > hi {
            return fail(format!("nmin_range [{lo}, {hi}] must satisfy 1 <= lo <= hi"));
        }
        if self.analogy_top_k == Some(0) {
            return fail("analogy_top_k must be at least 1".into());
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return fail(format!("k must be a non-negative number, got {}", self.k));
        }
        self.trainer(Mode::Baseline).validate(0, None)
    }

    /// SHA-256 over the parameters and the contents of every input file.
    /// Paths and the output directory do not contribute.
    pub fn hash(&self) -> Result<[u8; 32]> {
        let mut h = Sha256::new();
        let mut params = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(obj) = params.as_object_mut() {
            for key in ["corpus", "stopwords", "thesaurus", "categories", "similarity", "analogy", "output_dir"] {
                obj.remove(key);
            }
        }
        h.update(params.to_string().as_bytes());
        let mut inputs: Vec<&Path> = vec![&self.corpus, &self.thesaurus];
        inputs.extend(self.stopwords.as_deref());
        inputs.extend(self.categories.as_deref());
        inputs.extend(self.similarity.iter().map(PathBuf::as_path));
        inputs.extend(self.analogy.as_deref());
        for p in inputs {
            h.update(super::manifest::file_sha256(p)?);
        }
        Ok(h.finalize().into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_defaults() {
        let text = "corpus = \"c.txt\"\nthesaurus = \"t.txt\"\nwindow = 8\n";
        let c = PipelineConfig::from_toml(
            text,
            &["window=4".into(), "weighting=flat".into(), "similarity=[\"a\", \"b\"]".into()],
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(c.window, 4);
        assert_eq!(c.weighting, Weighting::Flat);
        assert_eq!(c.min_count, 65);
        assert_eq!(c.dims, 300);
        assert_eq!(c.group_count(), 300);
        assert_eq!(c.corpus, Path::new("/data/c.txt"));
        assert_eq!(c.similarity, [Path::new("/data/a"), Path::new("/data/b")]);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let base = Path::new(".");
        let text = "corpus = \"c\"\nthesaurus = \"t\"\n";
        assert!(matches!(
            PipelineConfig::from_toml(&format!("{text}bogus = 1\n"), &[], base),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            PipelineConfig::from_toml(text, &["weighting=cubic".into()], base),
            Err(Error::Config(_))
        ));
        assert!(matches!(PipelineConfig::from_toml(text, &["noequals".into()], base), Err(Error::Config(_))));
    }
}
