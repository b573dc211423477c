use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use super::{Docid, Token};
use crate::{Error, Result};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrieNode {
    children: [u32; 10],
    terminal: Option<usize>,
}

impl TrieNode {
    fn new() -> Self {
        TrieNode {
            children: [NONE; 10],
            terminal: None,
        }
    }
}

/// Prefix tree over the valid docids; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocidTrie {
    nodes: Vec<TrieNode>,
    len: usize,
    max_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrieStats {
    pub docids: usize,
    pub nodes: usize,
    pub max_depth: usize,
}

impl Default for DocidTrie {
    fn default() -> Self {
        DocidTrie {
            nodes: alloc::vec![TrieNode::new()],
            len: 0,
            max_depth: 0,
        }
    }
}

impl DocidTrie {
    pub const ROOT: usize = 0;

    /// Trie over `docids`, where `docids[i]` identifies scene `i`.
    pub fn build(docids: &[Docid]) -> Result<Self> {
        Self::from_pairs(docids.iter().enumerate().map(|(i, d)| (i, d.as_str())))
    }

    /// Trie over explicit `(scene_index, docid)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (usize, &'a str)>) -> Result<Self> {
        let mut trie = DocidTrie::default();
        for (scene, text) in pairs {
            trie.insert(text, scene)?;
        }
        Ok(trie)
    }

    pub fn insert(&mut self, docid: &str, scene: usize) -> Result<()> {
        if docid.is_empty() {
            return Err(Error::DocidFormat("empty docid".into()));
        }
        let mut node = Self::ROOT;
        for b in docid.bytes() {
            if !b.is_ascii_digit() {
                return Err(Error::DocidFormat(alloc::format!("non-digit in {docid:?}")));
            }
            let slot = (b - b'0') as usize;
            let next = self.nodes[node].children[slot];
            node = if next == NONE {
                self.nodes.push(TrieNode::new());
                let id = self.nodes.len() - 1;
                self.nodes[node].children[slot] = id as u32;
                id
            } else {
                next as usize
            };
        }
        if let Some(first) = self.nodes[node].terminal {
            return Err(Error::DuplicateDocid {
                docid: String::from(docid),
                first,
                second: scene,
            });
        }
        self.nodes[node].terminal = Some(scene);
        self.len += 1;
        self.max_depth = self.max_depth.max(docid.len());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stats(&self) -> TrieStats {
        TrieStats {
            docids: self.len,
            nodes: self.nodes.len(),
            max_depth: self.max_depth,
        }
    }

    /// Longest docid, in digits.
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    #[inline]
    pub fn child(&self, node: usize, digit: u8) -> Option<usize> {
        let c = self.nodes[node].children[digit as usize];
        (c != NONE).then_some(c as usize)
    }

    #[inline]
    pub fn terminal(&self, node: usize) -> Option<usize> {
        self.nodes[node].terminal
    }

    /// Node reached by following `prefix` from the root.
    pub fn walk(&self, prefix: &str) -> Option<usize> {
        let mut node = Self::ROOT;
        for b in prefix.bytes() {
            if !b.is_ascii_digit() {
                return None;
            }
            node = self.child(node, b - b'0')?;
        }
        Some(node)
    }

    /// Tokens allowed after the node: child digits ascending, then EOS when
    /// the node ends a docid.
    pub fn allowed(&self, node: usize) -> impl Iterator<Item = Token> + '_ {
        let n = &self.nodes[node];
        n.children
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != NONE)
            .map(|(d, _)| Token::Digit(d as u8))
            .chain(n.terminal.map(|_| Token::Eos))
    }

    /// [`Self::allowed`] after `prefix`; `None` when the prefix is not in the trie.
    pub fn allowed_next(&self, prefix: &str) -> Option<Vec<Token>> {
        self.walk(prefix).map(|n| self.allowed(n).collect())
    }

    pub fn lookup(&self, docid: &str) -> Option<usize> {
        self.walk(docid).and_then(|n| self.terminal(n))
    }

    /// Every `(docid, scene)` pair in lexicographic docid order.
    pub fn entries(&self) -> Vec<(String, usize)> {
        let mut out = Vec::with_capacity(self.len);
        let mut prefix = String::new();
        self.collect(Self::ROOT, &mut prefix, &mut out);
        out
    }

    fn collect(&self, node: usize, prefix: &mut String, out: &mut Vec<(String, usize)>) {
        if let Some(s) = self.nodes[node].terminal {
            out.push((prefix.clone(), s));
        }
        for d in 0..10u8 {
            if let Some(c) = self.child(node, d) {
                prefix.push(char::from(b'0' + d));
                self.collect(c, prefix, out);
                prefix.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn trie(ids: &[&str]) -> Result<DocidTrie> {
        DocidTrie::from_pairs(ids.iter().copied().enumerate())
    }

    #[test]
    fn single_docid() {
        let t = trie(&["12"]).unwrap();
        assert_eq!(t.allowed_next("").unwrap(), vec![Token::Digit(1)]);
        assert_eq!(t.allowed_next("1").unwrap(), vec![Token::Digit(2)]);
        assert_eq!(t.allowed_next("12").unwrap(), vec![Token::Eos]);
        assert!(t.allowed_next("2").is_none());
    }

    #[test]
    fn branching() {
        let t = trie(&["10", "12"]).unwrap();
        assert_eq!(t.allowed_next("1").unwrap(), vec![Token::Digit(0), Token::Digit(2)]);
        assert_eq!(t.stats().nodes, 4);
    }

    #[test]
    fn terminal_with_children() {
        let t = trie(&["1", "12"]).unwrap();
        assert_eq!(t.allowed_next("1").unwrap(), vec![Token::Digit(2), Token::Eos]);
        assert_eq!(t.lookup("1"), Some(0));
        assert_eq!(t.lookup("12"), Some(1));
    }

    #[test]
    fn duplicate_names_both_scenes() {
        match trie(&["7", "3", "7"]) {
            Err(Error::DuplicateDocid { first, second, .. }) => assert_eq!((first, second), (0, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn entries_are_sorted() {
        let t = trie(&["31", "04", "3", "20"]).unwrap();
        let e: Vec<String> = t.entries().into_iter().map(|(s, _)| s).collect();
        assert_eq!(e, vec!["04", "20", "3", "31"]);
    }
}
