use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lexicon::ConceptAssignment;
use crate::trainer::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Plain weighted least-squares objective.
    #[default]
    Baseline,
    /// Adds the anchoring penalty for concept words.
    Concept,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "concept" => Ok(Mode::Concept),
            other => Err(Error::Config(format!("unknown mode `{other}` (expected baseline or concept)"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "baseline",
            Mode::Concept => "concept",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub dims: usize,
    pub mode: Mode,
    /// Anchoring weight. Must be 0 in baseline mode.
    pub k: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// 1 = deterministic single-shard mode.
    pub threads: usize,
    /// Per-coordinate cap on the magnitude of a single update; `None` disables it.
    pub update_clip: Option<f64>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            dims: 300,
            mode: Mode::Baseline,
            k: 0.0,
            x_max: 75.0,
            alpha: 0.75,
            iterations: 20,
            learning_rate: 0.05,
            seed: 1,
            threads: 1,
            update_clip: Some(10.0),
        }
    }
}

/// Anchoring weight used with [`Mode::Concept`] unless overridden.
pub const DEFAULT_CONCEPT_WEIGHT: f64 = 0.1;

impl TrainerConfig {
    pub fn concept(k: f64) -> Self {
        TrainerConfig {
            mode: Mode::Concept,
            k,
            ..Self::default()
        }
    }

    pub fn objective(&self) -> Objective {
        Objective {
            x_max: self.x_max,
            alpha: self.alpha,
            k: self.k,
        }
    }

    pub fn validate(&self, vocab_len: usize, assignment: Option<&ConceptAssignment>) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.dims == 0 {
            return fail("dims must be at least 1".into());
        }
        if !(self.x_max > 0.0) {
            return fail(format!("x_max must be positive, got {}", self.x_max));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if self.iterations == 0 {
            return fail("iterations must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.threads == 0 {
            return fail("threads must be at least 1".into());
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return fail(format!("k must be a non-negative number, got {}", self.k));
        }
        match self.mode {
            Mode::Baseline if self.k != 0.0 => {
                return fail(format!("k must be 0 in baseline mode, got {}", self.k));
            }
            Mode::Baseline => {}
            Mode::Concept => {
                let Some(a) = assignment else {
                    return fail("concept mode needs a concept assignment".into());
                };
                if a.dims() > self.dims {
                    return fail(format!(
                        "assignment anchors {} dimensions but the model has only {}",
                        a.dims(),
                        self.dims
                    ));
                }
                if a.vocab_len() != vocab_len {
                    return fail(format!(
                        "assignment built for {} words, vocabulary has {vocab_len}",
                        a.vocab_len()
                    ));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 over a canonical rendering of every field.
    pub fn hash(&self) -> [u8; 32] {
        let canonical = format!(
            "dims={};mode={};k={:?};x_max={:?};alpha={:?};iterations={};learning_rate={:?};seed={};threads={};update_clip={:?}",
            self.dims,
            self.mode,
            self.k,
            self.x_max,
            self.alpha,
            self.iterations,
            self.learning_rate,
            self.seed,
            self.threads,
            self.update_clip
        );
        Sha256::digest(canonical.as_bytes()).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_rejects_nonzero_k() {
        let cfg = TrainerConfig { k: 0.1, ..TrainerConfig::default() };
        assert!(cfg.validate(10, None).is_err());
        assert!(TrainerConfig::default().validate(10, None).is_ok());
    }

    #[test]
    fn concept_needs_compatible_assignment() {
        let cfg = TrainerConfig { dims: 2, ..TrainerConfig::concept(0.1) };
        assert!(cfg.validate(10, None).is_err());
        let a = ConceptAssignment::new(vec!["a".into()], vec![vec![1, 2]], 10).unwrap();
        assert!(cfg.validate(10, Some(&a)).is_ok());
        assert!(cfg.validate(11, Some(&a)).is_err());
        let wide = ConceptAssignment::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1], vec![2], vec![3]],
            10,
        )
        .unwrap();
        assert!(cfg.validate(10, Some(&wide)).is_err());
    }

    #[test]
    fn parameter_ranges() {
        for bad in [
            TrainerConfig { x_max: 0.0, ..Default::default() },
            TrainerConfig { alpha: 0.0, ..Default::default() },
            TrainerConfig { alpha: 1.5, ..Default::default() },
            TrainerConfig { iterations: 0, ..Default::default() },
            TrainerConfig { dims: 0, ..Default::default() },
            TrainerConfig { threads: 0, ..Default::default() },
        ] {
            assert!(bad.validate(5, None).is_err(), "{bad:?}");
        }
        assert!(TrainerConfig { alpha: 1.0, ..Default::default() }.validate(5, None).is_ok());
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = TrainerConfig::default();
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), TrainerConfig { seed: 2, ..a.clone() }.hash());
        assert_ne!(a.hash(), TrainerConfig { update_clip: None, ..a }.hash());
    }
}
