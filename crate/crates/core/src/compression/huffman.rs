//! Deterministic binary Huffman codes.
//!
//! The two lightest nodes are merged first; equal weights go to the node
//! holding the smallest symbol index, and the first node picked takes the
//! `0` branch. Zero-probability symbols get no codeword, and a lone
//! positive symbol gets the empty codeword.

use crate::error::{Error, Result};

/// A codeword as a bit sequence, most significant (first sent) bit first.
pub type Codeword = Vec<bool>;

struct Node {
    weight: f64,
    min_symbol: usize,
    children: Option<(usize, usize)>,
}

/// Builds the code for a probability row. Entry `x` is `None` when
/// `probs[x] == 0`.
pub fn huffman_code(probs: &[f64]) -> Result<Vec<Option<Codeword>>> {
    if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(Error::Domain(format!("invalid probabilities {probs:?}")));
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut leaf_of = vec![None; probs.len()];
    for (x, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            leaf_of[x] = Some(nodes.len());
            active.push(nodes.len());
            nodes.push(Node { weight: p, min_symbol: x, children: None });
        }
    }
    if active.is_empty() {
        return Err(Error::Domain("no symbol has positive probability".into()));
    }
    while active.len() > 1 {
        let first = take_lightest(&mut active, &nodes);
        let second = take_lightest(&mut active, &nodes);
        let node = Node {
            weight: nodes[first].weight + nodes[second].weight,
            min_symbol: nodes[first].min_symbol.min(nodes[second].min_symbol),
            children: Some((first, second)),
        };
        active.push(nodes.len());
        nodes.push(node);
    }
    let mut words: Vec<Codeword> = vec![Vec::new(); nodes.len()];
    let mut stack = vec![active[0]];
    while let Some(id) = stack.pop() {
        if let Some((zero, one)) = nodes[id].children {
            let mut w0 = words[id].clone();
            w0.push(false);
            let mut w1 = std::mem::take(&mut words[id]);
            w1.push(true);
            words[zero] = w0;
            words[one] = w1;
            stack.push(zero);
            stack.push(one);
        }
    }
    Ok(leaf_of.into_iter().map(|leaf| leaf.map(|id| std::mem::take(&mut words[id]))).collect())
}

fn take_lightest(active: &mut Vec<usize>, nodes: &[Node]) -> usize {
    let (pos, _) = active
        .iter()
        .enumerate()
        .min_by(|(_, &a), (_, &b)| {
            nodes[a].weight.total_cmp(&nodes[b].weight).then(nodes[a].min_symbol.cmp(&nodes[b].min_symbol))
        })
        .expect("non-empty");
    active.remove(pos)
}

/// Codeword lengths (`None` for excluded symbols).
pub fn huffman_lengths(probs: &[f64]) -> Result<Vec<Option<usize>>> {
    Ok(huffman_code(probs)?.into_iter().map(|w| w.map(|w| w.len())).collect())
}

/// `sum_x 2^{-len(x)}` over coded symbols.
pub fn kraft_sum(code: &[Option<Codeword>]) -> f64 {
    code.iter().flatten().map(|w| (-(w.len() as f64)).exp2()).sum()
}

/// Whether no codeword is a prefix of another.
pub fn is_prefix_free(code: &[Option<Codeword>]) -> bool {
    let words: Vec<&Codeword> = code.iter().flatten().collect();
    for (i, a) in words.iter().enumerate() {
        for (j, b) in words.iter().enumerate() {
            if i != j && a.len() <= b.len() && b[..a.len()] == a[..] {
                return false;
            }
        }
    }
    true
}
