//! Scene identifiers (docids): four codecs, tokenization and the prefix trie
//! that restricts decoding to identifiers that exist.

mod codec;
pub mod hilbert;
mod kmeans;
mod semantic;
mod token;
mod trie;

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use codec::{
    decode_gps, encode_dataset, encode_gps, encode_hilbert, encode_label, hilbert_width, label_width, CodecMeta,
    EncodedDocids,
};
pub use kmeans::{kmeans, KMeans};
pub use semantic::encode_semantic;
pub use token::{detokenize, tokenize, Token, TokenSeq, VOCAB_SIZE};
pub use trie::{DocidTrie, TrieNode, TrieStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    /// Zero-padded sequential scene index.
    Label,
    /// Concatenated hierarchical k-means cluster indices.
    #[serde(alias = "HIERAR")]
    Semantic,
    /// Interleaved digits of the shifted, scaled x and y coordinates.
    Gps,
    /// Decimal Hilbert-curve distance of the coordinate cell.
    Hilbert,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Label => "LABEL",
            Strategy::Semantic => "SEMANTIC",
            Strategy::Gps => "GPS",
            Strategy::Hilbert => "HILBERT",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        match s.to_ascii_uppercase().as_str() {
            "LABEL" => Some(Strategy::Label),
            "SEMANTIC" | "HIERAR" => Some(Strategy::Semantic),
            "GPS" => Some(Strategy::Gps),
            "HILBERT" => Some(Strategy::Hilbert),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A decimal identifier together with the codec that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Docid {
    pub text: String,
    pub strategy: Strategy,
}

impl Docid {
    pub fn new(text: String, strategy: Strategy) -> Self {
        Docid { text, strategy }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

impl fmt::Display for Docid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}
