use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Vocabulary size: BOS, EOS and the ten digits.
pub const VOCAB_SIZE: usize = 12;

/// One decoder token. Indices are `BOS = 0`, `EOS = 1`, digit `d = 2 + d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Token {
    Bos,
    Eos,
    Digit(u8),
}

impl Token {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Token::Bos => 0,
            Token::Eos => 1,
            Token::Digit(d) => 2 + d as usize,
        }
    }

    pub fn from_index(i: usize) -> Option<Token> {
        match i {
            0 => Some(Token::Bos),
            1 => Some(Token::Eos),
            2..=11 => Some(Token::Digit((i - 2) as u8)),
            _ => None,
        }
    }

    pub fn from_char(c: char) -> Option<Token> {
        c.to_digit(10).map(|d| Token::Digit(d as u8))
    }
}

/// `BOS d1 d2 ... dn EOS`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq(pub Vec<Token>);

impl TokenSeq {
    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0.iter().map(|t| t.index()).collect()
    }
}

pub fn tokenize(docid: &str) -> Result<TokenSeq> {
    if docid.is_empty() {
        return Err(Error::DocidFormat("empty docid".into()));
    }
    let mut tokens = Vec::with_capacity(docid.len() + 2);
    tokens.push(Token::Bos);
    for c in docid.chars() {
        tokens.push(Token::from_char(c).ok_or_else(|| Error::DocidFormat(format!("non-digit {c:?} in {docid:?}")))?);
    }
    tokens.push(Token::Eos);
    Ok(TokenSeq(tokens))
}

pub fn detokenize(seq: &TokenSeq) -> Result<String> {
    let t = seq.tokens();
    if t.len() < 3 || t[0] != Token::Bos || t[t.len() - 1] != Token::Eos {
        return Err(Error::DocidFormat("token sequence must be BOS digit+ EOS".into()));
    }
    t[1..t.len() - 1]
        .iter()
        .map(|tok| match tok {
            Token::Digit(d) => Ok(char::from(b'0' + d)),
            other => Err(Error::DocidFormat(format!("interior {other:?} token"))),
        })
        .collect()
}
