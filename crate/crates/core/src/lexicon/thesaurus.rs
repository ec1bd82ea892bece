//! Tab-indented thesaurus trees.
//!
//! ```text
//! #root
//! 	#class
//! 		#category
//! 			word
//! 			another word
//! ```
//!
//! Node lines start with `#`; word lines sit one level below the category
//! (leaf node) that owns them. Blank lines and trailing whitespace are ignored.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::{decode, Vocabulary};
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub children: Vec<NodeId>,
    pub words: Vec<String>,
}

impl Node {
    fn new(name: &str) -> Self {
        Node {
            name: name.to_owned(),
            children: Vec::new(),
            words: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A rooted tree whose leaves (categories) hold word lists. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThesaurusTree {
    nodes: Vec<Node>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

impl ThesaurusTree {
    pub const ROOT: NodeId = 0;

    pub fn parse(source: &str) -> Result<Self> {
        let mut nodes: Vec<Node> = Vec::new();
        // (depth, node) path from the root to the most recent node line
        let mut path: Vec<(usize, NodeId)> = Vec::new();

        for (n, raw) in source.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            let depth = line.len() - line.trim_start_matches('\t').len();
            let body = &line[depth..];
            if body.starts_with(char::is_whitespace) {
                return Err(parse_error(line_no, "indentation must use tabs only"));
            }

            if let Some(name) = body.strip_prefix('#') {
                let name = name.trim();
                if name.is_empty() {
                    return Err(parse_error(line_no, "node name is empty"));
                }
                if depth == 0 {
                    if !nodes.is_empty() {
                        return Err(parse_error(line_no, "duplicate root node"));
                    }
                    nodes.push(Node::new(name));
                    path.push((0, Self::ROOT));
                    continue;
                }
                let parent = Self::parent_at(&mut path, depth, line_no)?;
                if !nodes[parent].words.is_empty() {
                    return Err(parse_error(
                        line_no,
                        format!("node `{name}` placed under category `{}` which holds words", nodes[parent].name),
                    ));
                }
                let id = nodes.len();
                nodes.push(Node::new(name));
                nodes[parent].children.push(id);
                path.push((depth, id));
            } else {
                if depth == 0 {
                    return Err(parse_error(line_no, "word outside of any category"));
                }
                let parent = Self::parent_at(&mut path, depth, line_no)?;
                if !nodes[parent].children.is_empty() {
                    return Err(parse_error(
                        line_no,
                        format!("word `{body}` attached to interior node `{}`", nodes[parent].name),
                    ));
                }
                nodes[parent].words.push(body.to_owned());
            }
        }
        if nodes.is_empty() {
            return Err(parse_error(0, "no root node"));
        }
        Ok(ThesaurusTree { nodes })
    }

    fn parent_at(path: &mut Vec<(usize, NodeId)>, depth: usize, line: usize) -> Result<NodeId> {
        while path.last().is_some_and(|&(d, _)| d >= depth) {
            path.pop();
        }
        match path.last() {
            Some(&(d, id)) if d + 1 == depth => Ok(id),
            Some(_) => Err(parse_error(line, "indentation skips a level")),
            None => Err(parse_error(line, "line is not below the root")),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(decode(&bytes)?)
    }

    /// Canonical text form: tab indentation, no blank lines, `\n` endings.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.write_node(Self::ROOT, 0, &mut out);
        out
    }

    fn write_node(&self, id: NodeId, depth: usize, out: &mut String) {
        let node = &self.nodes[id];
        let _ = writeln!(out, "{}#{}", "\t".repeat(depth), node.name);
        for w in &node.words {
            let _ = writeln!(out, "{}{}", "\t".repeat(depth + 1), w);
        }
        for &c in &node.children {
            self.write_node(c, depth + 1, out);
        }
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&id| self.nodes[id].is_leaf())
    }

    /// Unique words under `id`, in depth-first file order.
    pub fn descendant_words(&self, id: NodeId) -> Vec<&str> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            for w in &node.words {
                if seen.insert(w.as_str()) {
                    out.push(w.as_str());
                }
            }
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Number of unique words that descend from `id`.
    pub fn size(&self, id: NodeId) -> usize {
        self.descendant_words(id).len()
    }

    /// Drops multi-word entries and entries missing from `vocab`, then removes
    /// emptied categories and any interior node left without children. The
    /// root always survives. Entries are matched in lowercase.
    pub fn filter(&self, vocab: &Vocabulary) -> ThesaurusTree {
        let mut nodes = vec![Node::new(&self.nodes[Self::ROOT].name)];
        let root = &self.nodes[Self::ROOT];
        if root.is_leaf() {
            nodes[0].words = filter_words(&root.words, vocab);
        } else {
            for &c in &root.children {
                if let Some(child) = self.filter_node(c, vocab, &mut nodes) {
                    nodes[0].children.push(child);
                }
            }
        }
        ThesaurusTree { nodes }
    }

    fn filter_node(&self, id: NodeId, vocab: &Vocabulary, out: &mut Vec<Node>) -> Option<NodeId> {
        let node = &self.nodes[id];
        if node.is_leaf() {
            let words = filter_words(&node.words, vocab);
            if words.is_empty() {
                return None;
            }
            out.push(Node {
                name: node.name.clone(),
                children: Vec::new(),
                words,
            });
            return Some(out.len() - 1);
        }
        let slot = out.len();
        out.push(Node::new(&node.name));
        let mut children = Vec::new();
        for &c in &node.children {
            if let Some(child) = self.filter_node(c, vocab, out) {
                children.push(child);
            }
        }
        if children.is_empty() {
            out.truncate(slot);
            None
        } else {
            out[slot].children = children;
            Some(slot)
        }
    }
}

fn filter_words(words: &[String], vocab: &Vocabulary) -> Vec<String> {
    let mut seen = HashSet::new();
    words
        .iter()
        .filter(|w| !w.contains(char::is_whitespace))
        .map(|w| w.to_lowercase())
        .filter(|w| vocab.contains(w))
        .filter(|w| seen.insert(w.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_CATEGORIES: &str = "#root\n\t#animals\n\t\tcat\n\t\tdog\n\t\tcow\n\t#tools\n\t\tsaw\n\t\tawl\n\t\tadze\n";

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::build(words.iter().copied(), 1).unwrap()
    }

    #[test]
    fn parses_two_level_file() {
        let tree = ThesaurusTree::parse(TWO_CATEGORIES).unwrap();
        assert_eq!(tree.len(), 3);
        let leaves: Vec<_> = tree.leaves().collect();
        assert_eq!(leaves.len(), 2);
        assert_eq!(tree.node(leaves[0]).words, ["cat", "dog", "cow"]);
        assert_eq!(tree.size(ThesaurusTree::ROOT), 6);
    }

    #[test]
    fn word_on_interior_node_is_rejected() {
        let src = "#root\n\t#class\n\t\t#cat\n\t\t\tword\n\t\tstray\n";
        let err = ThesaurusTree::parse(src).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");

        let src = "#root\n\t#cat\n\t\tword\n\t\t#sub\n";
        assert!(matches!(ThesaurusTree::parse(src), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn duplicate_root_and_bad_indentation() {
        assert!(matches!(
            ThesaurusTree::parse("#a\n#b\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ThesaurusTree::parse("#a\n\t\t#b\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ThesaurusTree::parse("#a\n  #b\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(ThesaurusTree::parse("\n\n").is_err());
    }

    #[test]
    fn serialize_is_canonical() {
        let messy = "#root  \n\n\t#animals\n\t\tcat\r\n\t\tdog\n\t\tcow\n\n\t#tools\n\t\tsaw\n\t\tawl\n\t\tadze";
        let tree = ThesaurusTree::parse(messy).unwrap();
        assert_eq!(tree.serialize(), TWO_CATEGORIES);
        let again = ThesaurusTree::parse(&tree.serialize()).unwrap();
        assert_eq!(again, tree);
    }

    #[test]
    fn filter_drops_phrases_and_obscure_terms() {
        let tree = ThesaurusTree::parse("#root\n\t#cold\n\t\tice cream\n\t\tice\n\t\tzyxwv\n").unwrap();
        let filtered = tree.filter(&vocab(&["ice", "cream"]));
        assert_eq!(filtered.serialize(), "#root\n\t#cold\n\t\tice\n");
    }

    #[test]
    fn filter_identity_when_everything_survives() {
        let tree = ThesaurusTree::parse(TWO_CATEGORIES).unwrap();
        let filtered = tree.filter(&vocab(&["cat", "dog", "cow", "saw", "awl", "adze"]));
        assert_eq!(filtered, tree);
    }

    #[test]
    fn filter_prunes_emptied_branches() {
        let src = "#root\n\t#a\n\t\t#a1\n\t\t\tgone\n\t#b\n\t\tkept\n";
        let tree = ThesaurusTree::parse(src).unwrap();
        let filtered = tree.filter(&vocab(&["kept"]));
        assert_eq!(filtered.serialize(), "#root\n\t#b\n\t\tkept\n");
    }
}
