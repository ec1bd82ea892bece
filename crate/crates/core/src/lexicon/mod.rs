//! Concept word-groups derived from a hierarchical thesaurus.

mod assignment;
mod partition;
mod thesaurus;

pub use assignment::{AssignmentStats, ConceptAssignment};
pub use partition::{median_rank, partition, select_groups, RawGroup, Selection, Truncation};
pub use thesaurus::{Node, NodeId, ThesaurusTree};
