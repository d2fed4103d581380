//! Causal source code for `X^n` with causal side information `Y^i`.
//!
//! At time `i` the encoder and decoder both know `(x^{i-1}, y^i)` and use a
//! Huffman code for `p(x_i | x^{i-1}, y^i)`. That law depends on the history
//! only through the backward context and `y_i`, so codebooks are keyed by
//! `(backward context, y_i)` and shared across times.

use bitvec::prelude::BitVec;

use super::bitstream::Bits;
use super::huffman::{huffman_code, Codeword};
use crate::causal::posterior_row;
use crate::error::{Error, Result};
use crate::model::{JointProcessModel, SequencePair};

#[derive(Debug, Clone)]
pub(crate) struct Codebook {
    pub(crate) words: Vec<Option<Codeword>>,
    /// Binary decoding trie; `tree[node][bit]` is `Ok(child)` or `Err(symbol)`.
    tree: Vec<[std::result::Result<usize, usize>; 2]>,
}

impl Codebook {
    fn new(words: Vec<Option<Codeword>>) -> Self {
        let mut tree: Vec<[std::result::Result<usize, usize>; 2]> = Vec::new();
        let non_empty = words.iter().flatten().any(|w| !w.is_empty());
        if non_empty {
            tree.push([Ok(usize::MAX), Ok(usize::MAX)]);
        }
        for (sym, w) in words.iter().enumerate() {
            let Some(w) = w else { continue };
            let mut node = 0;
            for (k, &bit) in w.iter().enumerate() {
                let b = bit as usize;
                if k + 1 == w.len() {
                    tree[node][b] = Err(sym);
                } else {
                    node = match tree[node][b] {
                        Ok(usize::MAX) => {
                            tree.push([Ok(usize::MAX), Ok(usize::MAX)]);
                            tree[node][b] = Ok(tree.len() - 1);
                            tree.len() - 1
                        }
                        Ok(child) => child,
                        Err(_) => unreachable!("Huffman codes are prefix-free"),
                    };
                }
            }
        }
        Codebook { words, tree }
    }

    /// The symbol coded with no bits, if the law is a point mass.
    fn degenerate(&self) -> Option<usize> {
        match self.words.iter().flatten().count() {
            1 => self.words.iter().position(|w| w.is_some()),
            _ => None,
        }
    }

    pub(crate) fn length(&self, x: usize) -> Option<usize> {
        self.words[x].as_ref().map(|w| w.len())
    }
}

/// A complete set of per-context codebooks for one model.
#[derive(Debug, Clone)]
pub struct CausalCode {
    model: JointProcessModel,
    horizon: usize,
    /// Indexed by `backward_index * |Y| + y_i`; `None` for contexts with
    /// `p(y_i | x^{i-1}, y^{i-1}) = 0`.
    books: Vec<Option<Codebook>>,
}

/// Builds the code used for sequences of length up to `n`.
pub fn build_code(model: &JointProcessModel, n: usize) -> Result<CausalCode> {
    if n == 0 {
        return Err(Error::Argument("code horizon must be at least 1".into()));
    }
    let ny = model.y_size();
    let mut books = vec![None; model.backward_context_count() * ny];
    let mut post = Vec::new();
    let mut y_upto = Vec::new();
    let mut failure = None;
    model.for_each_backward_context(|idx, xs, ys| {
        for y in 0..ny {
            y_upto.clear();
            y_upto.extend_from_slice(ys);
            y_upto.push(y);
            if posterior_row(model, xs, &y_upto, &mut post) > 0.0 {
                match huffman_code(&post) {
                    Ok(words) => books[idx * ny + y] = Some(Codebook::new(words)),
                    Err(e) => failure = Some(e),
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(CausalCode { model: model.clone(), horizon: n, books })
}

impl CausalCode {
    pub fn model(&self) -> &JointProcessModel {
        &self.model
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub(crate) fn book(&self, x_past: &[usize], y_upto: &[usize]) -> Option<&Codebook> {
        let i = x_past.len();
        self.book_at(self.model.backward_index(x_past, &y_upto[..i]), y_upto[i])
    }

    pub(crate) fn book_at(&self, backward_index: usize, y: usize) -> Option<&Codebook> {
        self.books[backward_index * self.model.y_size() + y].as_ref()
    }

    /// The codeword for `x_i` given `(x^{i-1}, y^i)`.
    pub fn codeword(&self, x_past: &[usize], y_upto: &[usize], x: usize) -> Option<&Codeword> {
        self.book(x_past, y_upto).and_then(|b| b.words.get(x)).and_then(|w| w.as_ref())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.horizon {
            return Err(Error::Argument(format!("sequence length {n} outside 1..={}", self.horizon)));
        }
        Ok(())
    }
}

/// Encodes `x^n` given the side information `y^n`.
pub fn encode(code: &CausalCode, s: &SequencePair) -> Result<Bits> {
    code.check_len(s.len())?;
    code.model.check_pair(s)?;
    let (x, y) = (s.x(), s.y());
    let mut bits = BitVec::new();
    for i in 0..s.len() {
        let word = code.codeword(&x[..i], &y[..=i], x[i]).ok_or_else(|| {
            Error::SupportViolation(format!("symbol x_{} = {} has zero probability in its context", i + 1, x[i]))
        })?;
        bits.extend(word.iter().copied());
    }
    Ok(bits)
}

/// Decodes `x^n` from `bits` and the side information `y^n`.
///
/// Errors report the 0-based time index at which decoding failed; trailing
/// bits after the last symbol fail at index `n`.
pub fn decode(code: &CausalCode, bits: &Bits, y: &[usize]) -> Result<Vec<usize>> {
    code.check_len(y.len())?;
    for &s in y {
        code.model.y_alphabet().check(s)?;
    }
    let mut x = Vec::with_capacity(y.len());
    let mut pos = 0;
    for i in 0..y.len() {
        let fail = |reason: &str| Error::Decode { index: i, reason: reason.into() };
        let book = code.book(&x, &y[..=i]).ok_or_else(|| fail("side information has zero probability"))?;
        if let Some(sym) = book.degenerate() {
            x.push(sym);
            continue;
        }
        let mut node = 0;
        let sym = loop {
            let bit = *bits.get(pos).ok_or_else(|| fail("bitstream ended inside a codeword"))?;
            pos += 1;
            match book.tree[node][bit as usize] {
                Err(sym) => break sym,
                Ok(usize::MAX) => return Err(fail("bit pattern is not a codeword")),
                Ok(child) => node = child,
            }
        };
        x.push(sym);
    }
    if pos != bits.len() {
        return Err(Error::Decode { index: y.len(), reason: format!("{} trailing bits", bits.len() - pos) });
    }
    Ok(x)
}
