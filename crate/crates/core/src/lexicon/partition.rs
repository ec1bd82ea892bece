//! Breadth-first partitioning of a thesaurus into concept word-groups and the
//! size / frequency filters that select one group per dimension.

use std::collections::{HashSet, VecDeque};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::lexicon::{ConceptAssignment, ThesaurusTree};

/// Which words survive when an oversized category has to be truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Keep the words with the best (smallest) frequency rank.
    #[default]
    MostFrequent,
    LeastFrequent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawGroup {
    pub label: String,
    pub words: Vec<String>,
    /// True when the group is a truncated oversized category.
    pub truncated: bool,
}

/// Walks the tree breadth-first from the root. A node with fewer than
/// `max_size` unique descendant words becomes one group; a larger interior
/// node is replaced by its children; a larger category is cut down to
/// `max_size` words ranked by `vocab` (words missing from `vocab` rank last).
pub fn partition(
    tree: &ThesaurusTree,
    max_size: usize,
    vocab: &Vocabulary,
    truncation: Truncation,
) -> Result<Vec<RawGroup>> {
    if max_size == 0 {
        return Err(Error::Config("partition size threshold must be at least 1".into()));
    }
    let mut groups = Vec::new();
    let mut queue = VecDeque::from([ThesaurusTree::ROOT]);
    while let Some(id) = queue.pop_front() {
        let node = tree.node(id);
        let words = tree.descendant_words(id);
        if words.is_empty() {
            continue;
        }
        if words.len() < max_size {
            groups.push(RawGroup {
                label: node.name.clone(),
                words: words.into_iter().map(str::to_owned).collect(),
                truncated: false,
            });
        } else if !node.is_leaf() {
            queue.extend(node.children.iter().copied());
        } else {
            let rank = |w: &str| vocab.index(w).map_or(usize::MAX, |i| i as usize);
            let mut ranked = words;
            match truncation {
                Truncation::MostFrequent => ranked.sort_by_key(|w| rank(w)),
                Truncation::LeastFrequent => ranked.sort_by_key(|w| std::cmp::Reverse(rank(w))),
            }
            ranked.truncate(max_size);
            groups.push(RawGroup {
                label: node.name.clone(),
                words: ranked.into_iter().map(str::to_owned).collect(),
                truncated: true,
            });
        }
    }
    Ok(groups)
}

/// Median frequency rank (1-based) of a group of vocabulary indices.
pub fn median_rank(group: &[u32]) -> f64 {
    let mut ranks: Vec<u64> = group.iter().map(|&i| u64::from(i) + 1).collect();
    ranks.sort_unstable();
    let n = ranks.len();
    if n == 0 {
        return f64::INFINITY;
    }
    if n % 2 == 1 {
        ranks[n / 2] as f64
    } else {
        (ranks[n / 2 - 1] + ranks[n / 2]) as f64 / 2.0
    }
}

/// Outcome of [`select_groups`] with the counts after each filter.
#[derive(Debug, Clone)]
pub struct Selection {
    pub assignment: ConceptAssignment,
    pub raw_count: usize,
    pub after_size_filter: usize,
    pub dropped_by_rank: Vec<String>,
}

/// Maps raw groups onto vocabulary indices (dropping unknown words), discards
/// groups smaller than `min_size`, then, while more than `target` remain,
/// discards those with the worst median frequency rank. Survivors keep
/// their emission order and are assigned to dimensions `0..target`.
pub fn select_groups(
    raw: &[RawGroup],
    vocab: &Vocabulary,
    min_size: usize,
    target: usize,
) -> Result<Selection> {
    let indexed: Vec<(&str, Vec<u32>)> = raw
        .iter()
        .map(|g| {
            let mut seen = HashSet::new();
            let idx = g
                .words
                .iter()
                .filter_map(|w| vocab.index(w))
                .filter(|i| seen.insert(*i))
                .collect();
            (g.label.as_str(), idx)
        })
        .collect();
    let sized: Vec<(usize, &str, Vec<u32>)> = indexed
        .into_iter()
        .enumerate()
        .filter(|(_, (_, g))| !g.is_empty() && g.len() >= min_size)
        .map(|(pos, (label, g))| (pos, label, g))
        .collect();
    let after_size_filter = sized.len();
    if after_size_filter < target {
        return Err(Error::Config(format!(
            "only {after_size_filter} groups reach the minimum size {min_size}; {target} requested"
        )));
    }

    let excess = after_size_filter - target;
    let mut by_rank: Vec<(usize, f64)> = sized
        .iter()
        .enumerate()
        .map(|(k, (_, _, g))| (k, median_rank(g)))
        .collect();
    // worst median first; among equal medians the later-emitted group goes first
    by_rank.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
    let dropped: HashSet<usize> = by_rank.iter().take(excess).map(|&(k, _)| k).collect();

    let mut labels = Vec::with_capacity(target);
    let mut groups = Vec::with_capacity(target);
    let mut dropped_by_rank = Vec::new();
    for (k, (_, label, g)) in sized.into_iter().enumerate() {
        if dropped.contains(&k) {
            dropped_by_rank.push(label.to_owned());
        } else {
            labels.push(label.to_owned());
            groups.push(g);
        }
    }
    Ok(Selection {
        assignment: ConceptAssignment::new(labels, groups, vocab.len())?,
        raw_count: raw.len(),
        after_size_filter,
        dropped_by_rank,
    })
}
