use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::corpus::{decode, Vocabulary};
use crate::error::{Error, Result};

/// Concept word-groups, one per anchored embedding dimension. Group `l` is
/// anchored to dimension `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptAssignment {
    labels: Vec<String>,
    groups: Vec<Vec<u32>>,
    /// word index -> dimensions whose group contains the word
    memberships: Vec<Vec<u32>>,
}

impl ConceptAssignment {
    /// An assignment with no groups over a vocabulary of `vocab_len` words.
    pub fn empty(vocab_len: usize) -> Self {
        ConceptAssignment {
            labels: Vec::new(),
            groups: Vec::new(),
            memberships: vec![Vec::new(); vocab_len],
        }
    }

    /// Duplicate indices inside a group are collapsed, keeping first occurrence.
    pub fn new(labels: Vec<String>, groups: Vec<Vec<u32>>, vocab_len: usize) -> Result<Self> {
        if labels.len() != groups.len() {
            return Err(Error::Config(format!(
                "{} labels for {} groups",
                labels.len(),
                groups.len()
            )));
        }
        let mut memberships = vec![Vec::new(); vocab_len];
        let mut deduped = Vec::with_capacity(groups.len());
        for (l, group) in groups.into_iter().enumerate() {
            let mut seen = HashSet::new();
            let group: Vec<u32> = group.into_iter().filter(|w| seen.insert(*w)).collect();
            if group.is_empty() {
                return Err(Error::Config(format!("concept group {l} (`{}`) is empty", labels[l])));
            }
            for &w in &group {
                let slot = memberships.get_mut(w as usize).ok_or_else(|| {
                    Error::Bounds(format!("group {l} holds word index {w} >= vocabulary size {vocab_len}"))
                })?;
                slot.push(l as u32);
            }
            deduped.push(group);
        }
        Ok(ConceptAssignment {
            labels,
            groups: deduped,
            memberships,
        })
    }

    /// Number of anchored dimensions.
    pub fn dims(&self) -> usize {
        self.groups.len()
    }

    pub fn vocab_len(&self) -> usize {
        self.memberships.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn groups(&self) -> &[Vec<u32>] {
        &self.groups
    }

    pub fn group(&self, dim: usize) -> &[u32] {
        &self.groups[dim]
    }

    /// Dimensions anchored for word `idx`, ascending.
    pub fn dims_of(&self, idx: usize) -> &[u32] {
        self.memberships.get(idx).map_or(&[], Vec::as_slice)
    }

    pub fn is_concept_word(&self, idx: usize) -> bool {
        !self.dims_of(idx).is_empty()
    }

    /// Total number of (word, dimension) memberships, i.e. how many coordinates
    /// of one vector matrix the anchoring term can touch.
    pub fn anchored_coordinates(&self) -> usize {
        self.memberships.iter().map(Vec::len).sum()
    }

    pub fn save(&self, path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (l, (label, group)) in self.labels.iter().zip(&self.groups).enumerate() {
            let words: Vec<&str> = group.iter().map(|&w| vocab.word(w as usize)).collect();
            writeln!(out, "{l}\t{label}\t{}", words.join(",")).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads `l<TAB>label<TAB>w1,w2,...` lines. Words missing from `vocab`
    /// are dropped; a group left empty is an error.
    pub fn load(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = decode(&bytes)?;
        let mut labels = Vec::new();
        let mut groups = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let (Some(dim), Some(label), Some(words)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::format(path, format!("line {}: expected 3 tab-separated fields", n + 1)));
            };
            if dim.parse::<usize>().ok() != Some(groups.len()) {
                return Err(Error::format(
                    path,
                    format!("line {}: expected dimension {}, found `{dim}`", n + 1, groups.len()),
                ));
            }
            labels.push(label.to_owned());
            groups.push(
                words
                    .split(',')
                    .filter_map(|w| vocab.index(w.trim()))
                    .collect(),
            );
        }
        Self::new(labels, groups, vocab.len()).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn stats(&self) -> AssignmentStats {
        AssignmentStats::of(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentStats {
    pub groups: usize,
    pub unique_words: usize,
    /// Sum over words of the number of groups containing the word.
    pub anchored_coordinates: usize,
    pub mean_memberships: f64,
    /// group size -> number of groups of that size
    pub size_histogram: BTreeMap<usize, usize>,
    /// Mean intersection size over all unordered group pairs.
    pub mean_pair_overlap: f64,
    /// Mean intersection size over pairs that share at least one word.
    pub mean_nonzero_overlap: f64,
    pub max_overlap: usize,
    pub overlapping_pairs: usize,
}

impl AssignmentStats {
    pub fn of(assignment: &ConceptAssignment) -> Self {
        let unique_words = assignment.memberships.iter().filter(|m| !m.is_empty()).count();
        let anchored = assignment.anchored_coordinates();
        let mut size_histogram = BTreeMap::new();
        for g in &assignment.groups {
            *size_histogram.entry(g.len()).or_insert(0) += 1;
        }
        let mut overlaps: BTreeMap<(u32, u32), usize> = BTreeMap::new();
        for dims in &assignment.memberships {
            for (a, &la) in dims.iter().enumerate() {
                for &lb in &dims[a + 1..] {
                    *overlaps.entry((la, lb)).or_insert(0) += 1;
                }
            }
        }
        let d = assignment.groups.len();
        let pairs = d * d.saturating_sub(1) / 2;
        let overlap_total: usize = overlaps.values().sum();
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        AssignmentStats {
            groups: d,
            unique_words,
            anchored_coordinates: anchored,
            mean_memberships: ratio(anchored, unique_words),
            size_histogram,
            mean_pair_overlap: ratio(overlap_total, pairs),
            mean_nonzero_overlap: ratio(overlap_total, overlaps.len()),
            max_overlap: overlaps.values().copied().max().unwrap_or(0),
            overlapping_pairs: overlaps.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_groups() {
        let a = ConceptAssignment::new(
            vec!["a".into(), "b".into()],
            vec![(0..10).collect(), (10..20).collect()],
            30,
        )
        .unwrap();
        let s = a.stats();
        assert_eq!(s.unique_words, 20);
        assert_eq!(s.mean_memberships, 1.0);
        assert_eq!(s.anchored_coordinates, 20);
        assert_eq!(s.max_overlap, 0);
        assert_eq!(s.mean_pair_overlap, 0.0);
    }

    #[test]
    fn identical_groups() {
        let a = ConceptAssignment::new(
            vec!["a".into(), "b".into()],
            vec![(0..10).collect(), (0..10).collect()],
            10,
        )
        .unwrap();
        let s = a.stats();
        assert_eq!(s.unique_words, 10);
        assert_eq!(s.mean_memberships, 2.0);
        assert_eq!(s.mean_pair_overlap, 10.0);
        assert_eq!(s.max_overlap, 10);
        assert_eq!(s.size_histogram, BTreeMap::from([(10, 2)]));
        assert_eq!(a.dims_of(3), [0, 1]);
    }

    #[test]
    fn rejects_invalid_groups() {
        assert!(ConceptAssignment::new(vec!["a".into()], vec![vec![]], 5).is_err());
        assert!(matches!(
            ConceptAssignment::new(vec!["a".into()], vec![vec![5]], 5),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn file_round_trip_drops_unknown_words() {
        let vocab = Vocabulary::build(["x", "x", "y", "z"], 1).unwrap();
        let a = ConceptAssignment::new(vec!["first".into(), "second".into()], vec![vec![0, 1], vec![2]], 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("assign.tsv");
        a.save(&path, &vocab).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "0\tfirst\tx,y\n1\tsecond\tz\n");
        assert_eq!(ConceptAssignment::load(&path, &vocab).unwrap(), a);

        fs::write(&path, "0\tfirst\tx,unknown\n").unwrap();
        let loaded = ConceptAssignment::load(&path, &vocab).unwrap();
        assert_eq!(loaded.group(0), [0]);
    }
}
