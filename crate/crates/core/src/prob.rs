//! Finite-alphabet primitives: alphabets, probability vectors and a few
//! scalar helpers used throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on alphabet sizes.
pub const DEFAULT_MAX_ALPHABET: usize = 16;

/// Largest number of sequence (pairs) any exact enumeration may visit.
pub const ENUMERATION_LIMIT: u128 = 1 << 24;

/// Tolerance for pmf normalization.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// A finite alphabet `{0, .., size - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        Self::with_max(size, DEFAULT_MAX_ALPHABET)
    }

    pub fn with_max(size: usize, max: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Domain("alphabet size must be at least 1".into()));
        }
        if size > max {
            return Err(Error::Domain(format!(
                "alphabet size {size} exceeds the maximum {max}"
            )));
        }
        Ok(Alphabet(size))
    }

    #[inline]
    pub fn size(self) -> usize {
        self.0
    }

    pub fn check(self, symbol: usize) -> Result<()> {
        if symbol < self.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "symbol {symbol} outside alphabet of size {}",
                self.0
            )))
        }
    }

    /// Number of words of length `len`, or `None` on overflow.
    pub fn words(self, len: usize) -> Option<u128> {
        (self.0 as u128).checked_pow(len as u32)
    }
}

impl TryFrom<usize> for Alphabet {
    type Error = Error;
    fn try_from(v: usize) -> Result<Self> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for usize {
    fn from(a: Alphabet) -> usize {
        a.0
    }
}

/// A probability mass function over an alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf(Vec<f64>);

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("pmf must have at least one entry".into()));
        }
        let mut total = 0.0;
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
            }
            total += p;
        }
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::Domain(format!(
                "pmf sums to {total}, not 1 (tolerance {PMF_TOLERANCE:e})"
            )));
        }
        Ok(Pmf(probs))
    }

    /// Normalizes nonnegative weights into a pmf.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) || total <= 0.0 {
            return Err(Error::Domain(
                "weights must be finite, nonnegative and not all zero".into(),
            ));
        }
        Pmf::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(size: usize) -> Self {
        Pmf(vec![1.0 / size as f64; size])
    }

    /// All mass on `symbol`.
    pub fn point(size: usize, symbol: usize) -> Self {
        let mut v = vec![0.0; size];
        v[symbol] = 1.0;
        Pmf(v)
    }

    pub fn bernoulli(p_one: f64) -> Result<Self> {
        Pmf::new(vec![1.0 - p_one, p_one])
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, symbol: usize) -> f64 {
        self.0[symbol]
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.0)
    }

    pub fn max_prob(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Vec<f64> {
        p.0
    }
}

/// `-p log2 p` with the `0 log 0 = 0` convention.
#[inline]
pub fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

pub fn entropy_bits(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| plogp(p)).sum()
}

/// Binary entropy `h(x)` in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_unit(x, "binary_entropy")?;
    Ok(plogp(x) + plogp(1.0 - x))
}

/// Parameter of the Bernoulli variable `A xor B` for independent
/// `A ~ Bern(p)` and `B ~ Bern(q)`.
pub fn convolve_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_unit(p, "convolve_bernoulli")?;
    check_unit(q, "convolve_bernoulli")?;
    Ok((1.0 - p) * q + (1.0 - q) * p)
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: argument {x} outside [0, 1]")))
    }
}

/// Kullback-Leibler divergence `D(f || g)` in bits.
pub fn kl_divergence(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::Argument("pmfs of different lengths".into()));
    }
    let mut d = 0.0;
    for (i, (&a, &b)) in f.iter().zip(g).enumerate() {
        d += weighted_log_ratio(a, a, b).map_err(|_| {
            Error::SupportViolation(format!("f({i}) = {a} > 0 but g({i}) = 0"))
        })?;
    }
    Ok(d)
}

/// `w * log2(num / den)` with `0 * log(./.) = 0`; a positive weight against a
/// zero denominator is a support violation, a zero numerator gives `-inf`
/// unless the weight vanishes.
#[inline]
pub fn weighted_log_ratio(w: f64, num: f64, den: f64) -> Result<f64> {
    if w == 0.0 {
        return Ok(0.0);
    }
    if den <= 0.0 {
        return Err(Error::SupportViolation(format!(
            "positive weight {w:e} on a zero-probability denominator"
        )));
    }
    if num <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(w * (num / den).log2())
}

/// Fails with a capacity error when `required` exceeds the enumeration guard.
pub fn check_capacity(what: &'static str, required: Option<u128>) -> Result<u128> {
    match required {
        Some(r) if r <= ENUMERATION_LIMIT => Ok(r),
        other => Err(Error::Capacity {
            what,
            required: other.unwrap_or(u128::MAX),
            limit: ENUMERATION_LIMIT,
        }),
    }
}

/// Whether `p` is an integer power of two (a dyadic probability).
pub fn is_dyadic(p: f64) -> bool {
    if p <= 0.0 || p > 1.0 {
        return false;
    }
    let bits = p.to_bits();
    // Normal doubles: zero mantissa. Subnormals are far below any meaningful
    // desk-scale probability.
    bits & ((1u64 << 52) - 1) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn binary_entropy_of_point_nine() {
        assert!((binary_entropy(0.9).unwrap() - 0.468_995_593_589_280_9).abs() < 1e-12);
    }

    #[test]
    fn convolution_values() {
        assert!((convolve_bernoulli(0.8, 0.1).unwrap() - 0.74).abs() < 1e-15);
        for p in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert!((convolve_bernoulli(p, 0.5).unwrap() - 0.5).abs() < 1e-15);
            assert_eq!(
                convolve_bernoulli(p, 0.3).unwrap(),
                convolve_bernoulli(0.3, p).unwrap()
            );
        }
        assert!(convolve_bernoulli(0.2, 2.0).is_err());
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![0.5, 0.5]).is_ok());
        assert!(Pmf::new(vec![0.5, 0.4]).is_err());
        assert!(Pmf::new(vec![1.2, -0.2]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        let p = Pmf::from_weights(&[1.0, 3.0]).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn alphabet_bounds() {
        assert!(Alphabet::new(0).is_err());
        assert!(Alphabet::new(17).is_err());
        assert!(Alphabet::with_max(17, 32).is_ok());
        let a = Alphabet::new(3).unwrap();
        assert!(a.check(2).is_ok());
        assert!(a.check(3).is_err());
    }

    #[test]
    fn dyadic_detection() {
        assert!(is_dyadic(1.0));
        assert!(is_dyadic(0.25));
        assert!(!is_dyadic(0.3));
        assert!(!is_dyadic(0.0));
        assert!(!is_dyadic(0.75));
    }

    #[test]
    fn kl_support() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_err());
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 1.0);
    }
}
