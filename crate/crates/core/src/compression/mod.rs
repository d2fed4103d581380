//! Instantaneous lossless coding of `X` with causal side information `Y`,
//! and ideal-length accounting of mismatched joint codes.

pub mod bitstream;
mod code;
pub mod huffman;

use serde::Serialize;

pub use bitstream::{from_bytes, to_bytes, Bits};
pub use code::{build_code, decode, encode, CausalCode};
pub use huffman::{huffman_code, huffman_lengths, is_prefix_free, kraft_sum, Codeword};

use crate::error::{Error, Result};
use crate::model::JointProcessModel;
use crate::prob::{entropy_bits, is_dyadic, weighted_log_ratio};
use crate::walk::{walk, x_marginals, y_marginals, OnContext, OnStep};

/// Additive slack of the expected-length sandwich.
const SANDWICH_SLACK: f64 = 1e-12;
/// Gallager's constant in the Huffman redundancy bound.
pub const GALLAGER_CONSTANT: f64 = 0.086;

/// Exact expected length of the causal code over `n` symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthReport {
    pub n: usize,
    pub expected_length_bits: f64,
    /// `sum_i H(X_i | X^{i-1}, Y^i)`.
    pub entropy_bound_bits: f64,
    /// `sum_i E min(1, max_x p(x | X^{i-1}, Y^i) + 0.086)`.
    pub redundancy_bits: f64,
    /// Whether every reachable conditional is dyadic, in which case the
    /// expected length equals the entropy bound exactly.
    pub dyadic_exact: bool,
}

/// Computes the expected code length under the model and checks
/// `entropy <= length <= entropy + redundancy`, plus equality for dyadic laws.
pub fn expected_length(model: &JointProcessModel, code: &CausalCode, n: usize) -> Result<LengthReport> {
    if n > code.horizon() {
        return Err(Error::Argument(format!("horizon {n} exceeds the code horizon {}", code.horizon())));
    }
    let mut length = 0.0;
    let mut entropy = 0.0;
    let mut redundancy = 0.0;
    let mut dyadic = true;
    walk(model, n, true, OnContext(|c: &crate::walk::Context<'_>| {
        if c.prob == 0.0 {
            return Ok(());
        }
        let y = c.y[c.y.len() - 1];
        let book = code.book_at(c.backward_index, y).ok_or_else(|| {
            Error::SupportViolation(format!("code has no book for a reachable context at time {}", c.i))
        })?;
        let mut local_len = 0.0;
        let mut local_h = 0.0;
        let mut p_max: f64 = 0.0;
        for (x, &p) in c.posterior.iter().enumerate() {
            if p > 0.0 {
                let l = book.length(x).ok_or_else(|| {
                    Error::SupportViolation(format!("code omits a positive-probability symbol at time {}", c.i))
                })?;
                local_len += p * l as f64;
                local_h += crate::prob::plogp(p);
                p_max = p_max.max(p);
                dyadic &= is_dyadic(p);
            }
        }
        length += c.prob * local_len;
        entropy += c.prob * local_h;
        redundancy += c.prob * (p_max + GALLAGER_CONSTANT).min(1.0);
        Ok(())
    }))?;
    let report = LengthReport {
        n,
        expected_length_bits: length,
        entropy_bound_bits: entropy,
        redundancy_bits: redundancy,
        dyadic_exact: dyadic,
    };
    if length < entropy - SANDWICH_SLACK || length > entropy + redundancy + SANDWICH_SLACK {
        return Err(Error::Identity {
            what: "expected length outside its entropy sandwich",
            residual: (length - entropy).min(entropy + redundancy - length),
        });
    }
    if dyadic && length != entropy {
        return Err(Error::Identity { what: "dyadic code misses the entropy bound", residual: length - entropy });
    }
    Ok(report)
}

/// Expected Huffman length without side information, coding each `x_i`
/// with `p(x_i | x^{i-1})`, and the matching entropy `H(X^n)`.
pub fn expected_length_without_side_info(model: &JointProcessModel, n: usize) -> Result<(f64, f64)> {
    model.check_pair_capacity(n)?;
    let table = x_marginals(model, n)?;
    let nx = model.x_size();
    let mut length = 0.0;
    let mut entropy = 0.0;
    let mut row = vec![0.0; nx];
    for i in 1..=n {
        let (prev, cur) = (table.level(i - 1), table.level(i));
        for (ctx, &pc) in prev.iter().enumerate() {
            if pc <= 0.0 {
                continue;
            }
            for (x, slot) in row.iter_mut().enumerate() {
                *slot = cur[ctx * nx + x] / pc;
            }
            let lengths = huffman_lengths(&row)?;
            let l: f64 = row.iter().zip(&lengths).map(|(&p, l)| p * l.unwrap_or(0) as f64).sum();
            length += pc * l;
            entropy += pc * entropy_bits(&row);
        }
    }
    Ok((length, entropy))
}

/// Per-symbol saving of the causal code over the code without side
/// information, against the per-symbol directed information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SavingReport {
    pub n: usize,
    pub length_with_side_info: f64,
    pub length_without_side_info: f64,
    /// `(length_without - length_with) / n`.
    pub saving_per_symbol: f64,
    /// `I(Y^n -> X^n) / n`.
    pub di_rate: f64,
    /// `H(X^n) - sum_i H(X_i | X^{i-1}, Y^i) - I(Y^n -> X^n)`.
    pub identity_residual: f64,
}

/// Checks that side information saves `I(Y^n -> X^n) / n` bits per symbol
/// up to one bit, and that the entropy identity behind it holds.
pub fn side_info_saving(model: &JointProcessModel, n: usize) -> Result<SavingReport> {
    let code = build_code(model, n)?;
    let with = expected_length(model, &code, n)?;
    let (without, h_x) = expected_length_without_side_info(model, n)?;
    let di = crate::info::directed_info(model, n, crate::info::Direction::YToX, 0)?;
    let saving = (without - with.expected_length_bits) / n as f64;
    let report = SavingReport {
        n,
        length_with_side_info: with.expected_length_bits,
        length_without_side_info: without,
        saving_per_symbol: saving,
        di_rate: di / n as f64,
        identity_residual: h_x - with.entropy_bound_bits - di,
    };
    if report.identity_residual.abs() > 1e-9 {
        return Err(Error::Identity { what: "conditional entropy identity", residual: report.identity_residual });
    }
    if (saving - report.di_rate).abs() > 1.0 + SANDWICH_SLACK {
        return Err(Error::Identity { what: "side-information saving", residual: saving - report.di_rate });
    }
    Ok(report)
}

/// Which dependence a mismatched joint code ignores, or for the
/// independent-truth penalty, which link it wrongly assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    /// The link from `X` to `Y`: `p(y^n || x^n)`.
    Forward,
    /// The link from `Y^{n-1}` to `X`: `p(x^n || y^{n-1})`.
    Backward,
    Both,
}

impl std::str::FromStr for Link {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Link::Forward),
            "backward" => Ok(Link::Backward),
            "both" => Ok(Link::Both),
            other => Err(Error::Argument(format!("unknown link {other:?}"))),
        }
    }
}

/// Weight `w` and mismatched law `q` of one leaf, from the marginal
/// probabilities and the two causal products.
type LeafLaw = fn(joint: f64, px: f64, py: f64, x_delayed: f64, y_causal: f64) -> (f64, f64);

fn ideal_divergence(model: &JointProcessModel, n: usize, prune: bool, law: LeafLaw) -> Result<f64> {
    let xt = x_marginals(model, n)?;
    let yt = y_marginals(model, n)?;
    let mut d = 0.0;
    walk(model, n, prune, OnStep(|s: &crate::walk::Step<'_>| {
        if s.i == n {
            let (w, q) = law(s.joint, xt.prob(s.x_index), yt.prob(s.y_index), s.x_delayed, s.y_causal);
            if w > 0.0 && q <= 0.0 {
                return Err(Error::SupportViolation(format!(
                    "mismatched law gives zero probability to a positive-probability pair {:?}/{:?}",
                    s.x, s.y
                )));
            }
            d += weighted_log_ratio(w, w, q)?;
        }
        Ok(())
    }))?;
    Ok(d)
}

/// Redundancy `E[-log q] - H(X^n, Y^n)` of a joint code built for a law `q`
/// that ignores `ignored`: `I(X^n -> Y^n)`, `I(Y^{n-1} -> X^n)` or
/// `I(X^n; Y^n)`.
pub fn mismatch_redundancy(model: &JointProcessModel, n: usize, ignored: Link) -> Result<f64> {
    let law: LeafLaw = match ignored {
        Link::Forward => |j, _px, py, xd, _yc| (j, xd * py),
        Link::Backward => |j, px, _py, _xd, yc| (j, px * yc),
        Link::Both => |j, px, py, _xd, _yc| (j, px * py),
    };
    ideal_divergence(model, n, true, law)
}

/// Penalty paid when `X` and `Y` are in truth independent with the model's
/// marginals, but the code assumes the model's `assumed` link(s):
/// `L1(X^n -> Y^n)`, `L1(Y^{n-1} -> X^n)`, or the lautum information.
pub fn independent_mismatch_penalty(model: &JointProcessModel, n: usize, assumed: Link) -> Result<f64> {
    let law: LeafLaw = match assumed {
        Link::Forward => |_j, px, py, _xd, yc| (px * py, px * yc),
        Link::Backward => |_j, px, py, xd, _yc| (px * py, xd * py),
        Link::Both => |j, px, py, _xd, _yc| (px * py, j),
    };
    ideal_divergence(model, n, false, law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::info::{directed_info, directed_lautum1, lautum, mutual_info, Direction};
    use crate::model::SequencePair;
    use crate::prob::{Alphabet, Pmf};

    fn constant_x(p: Vec<f64>) -> JointProcessModel {
        let k = p.len();
        JointProcessModel::from_fns(
            Alphabet::new(k).unwrap(),
            Alphabet::new(2).unwrap(),
            0,
            move |_, _| Pmf::new(p.clone()).unwrap(),
            |_, _| Pmf::uniform(2),
        )
        .unwrap()
    }

    #[test]
    fn bernoulli_report() {
        let m = constant_x(vec![0.9, 0.1]);
        let code = build_code(&m, 1).unwrap();
        let r = expected_length(&m, &code, 1).unwrap();
        assert!((r.expected_length_bits - 1.0).abs() < 1e-15);
        assert!((r.entropy_bound_bits - 0.468_995_593_6).abs() < 1e-9);
        assert!((r.redundancy_bits - 0.986).abs() < 1e-12);
        assert!(!r.dyadic_exact);
    }

    #[test]
    fn dyadic_model_meets_the_bound() {
        let m = constant_x(vec![0.5, 0.25, 0.25]);
        let code = build_code(&m, 3).unwrap();
        let r = expected_length(&m, &code, 3).unwrap();
        assert!(r.dyadic_exact);
        assert_eq!(r.expected_length_bits, r.entropy_bound_bits);
        assert!((r.expected_length_bits - 4.5).abs() < 1e-12);
        let u = fixtures::independent_uniform(2, 2).unwrap();
        let r = expected_length(&u, &build_code(&u, 5).unwrap(), 5).unwrap();
        assert_eq!(r.expected_length_bits, 5.0);
    }

    #[test]
    fn uniform_code_and_deterministic_stream() {
        let u = fixtures::independent_uniform(2, 2).unwrap();
        let code = build_code(&u, 1).unwrap();
        let s = SequencePair::new(vec![0], vec![1]).unwrap();
        let bits = encode(&code, &s).unwrap();
        assert_eq!(bits.len(), 1);
        assert!(!bits[0]);
        let c = fixtures::deterministic_copy(2).unwrap();
        let code = build_code(&c, 3).unwrap();
        let s = SequencePair::new(vec![1, 0, 1], vec![1, 0, 1]).unwrap();
        let bits = encode(&code, &s).unwrap();
        assert!(bits.is_empty());
        assert_eq!(decode(&code, &bits, s.y()).unwrap(), s.x());
        let bad = SequencePair::new(vec![1, 0, 1], vec![1, 1, 1]).unwrap();
        assert!(matches!(encode(&code, &bad), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn decode_errors_carry_the_index() {
        let m = fixtures::example1(0.8, 0.1).unwrap();
        let code = build_code(&m, 3).unwrap();
        let s = SequencePair::new(vec![0, 1, 1], vec![0, 1, 0]).unwrap();
        let mut bits = encode(&code, &s).unwrap();
        assert_eq!(decode(&code, &bits, s.y()).unwrap(), s.x());
        bits.push(true);
        assert!(matches!(decode(&code, &bits, s.y()), Err(Error::Decode { index: 3, .. })));
        assert!(matches!(decode(&code, &Bits::new(), s.y()), Err(Error::Decode { index: 0, .. })));
    }

    #[test]
    fn redundancies_match_information() {
        let m = fixtures::example1(0.7, 0.2).unwrap();
        let n = 4;
        let f = mismatch_redundancy(&m, n, Link::Forward).unwrap();
        let b = mismatch_redundancy(&m, n, Link::Backward).unwrap();
        let both = mismatch_redundancy(&m, n, Link::Both).unwrap();
        assert!((f - directed_info(&m, n, Direction::XToY, 0).unwrap()).abs() < 1e-9);
        assert!((b - directed_info(&m, n, Direction::YToX, 1).unwrap()).abs() < 1e-9);
        assert!((both - mutual_info(&m, n).unwrap()).abs() < 1e-9);
        assert!((f + b - both).abs() < 1e-9);
        let c = fixtures::deterministic_copy(2).unwrap();
        assert!((mismatch_redundancy(&c, 2, Link::Forward).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn independent_truth_penalties() {
        let m = fixtures::iid_noisy_copy(0.1).unwrap();
        let p = independent_mismatch_penalty(&m, 1, Link::Forward).unwrap();
        assert!((p - 0.736_965_594_2).abs() < 1e-9);
        let m = fixtures::example1(0.8, 0.1).unwrap();
        let n = 3;
        let f = independent_mismatch_penalty(&m, n, Link::Forward).unwrap();
        let b = independent_mismatch_penalty(&m, n, Link::Backward).unwrap();
        let l = independent_mismatch_penalty(&m, n, Link::Both).unwrap();
        assert!((f - directed_lautum1(&m, n, Direction::XToY, 0).unwrap()).abs() < 1e-9);
        assert!((b - directed_lautum1(&m, n, Direction::YToX, 1).unwrap()).abs() < 1e-9);
        assert!((l - lautum(&m, n).unwrap()).abs() < 1e-9);
        assert!((f + b - l).abs() < 1e-9);
        let u = fixtures::independent_uniform(2, 3).unwrap();
        assert!(independent_mismatch_penalty(&u, 2, Link::Both).unwrap().abs() < 1e-12);
    }

    #[test]
    fn saving_tracks_directed_information() {
        let m = fixtures::example1(0.8, 0.1).unwrap();
        let r = side_info_saving(&m, 6).unwrap();
        assert!(r.identity_residual.abs() < 1e-9);
        // Binary Huffman spends one bit per non-degenerate symbol either way.
        assert!(r.saving_per_symbol.abs() < 1e-12);
        assert!((r.saving_per_symbol - r.di_rate).abs() <= 1.0);
    }
}
