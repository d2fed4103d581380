//! Sequence probabilities: the joint law, causally conditioned laws and marginals.

use crate::error::{Error, Result};
use crate::model::{JointProcessModel, SequencePair};
use crate::walk::{log2_marginal_x, log2_marginal_y};

/// Longest sequence evaluated by a plain linear-domain product.
pub const LINEAR_DOMAIN_MAX: usize = 32;

/// Which process a causally conditioned law is over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    /// `p(x^n || y^{n-d})`.
    X,
    /// `p(y^n || x^{n-d})`.
    Y,
}

/// Local conditionals at one time step of a realized pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTerms {
    /// `p(x_i | x^{i-1}, y^{i-1})`.
    pub backward: f64,
    /// `p(y_i | x^i, y^{i-1})`.
    pub forward: f64,
    /// `p(y_i | x^{i-1}, y^{i-1})`.
    pub y_predictive: f64,
    /// `p(x_i | x^{i-1}, y^i)`, zero when `y_predictive` is zero.
    pub x_posterior: f64,
}

impl StepTerms {
    /// The factor of `p(target^n || other^{n-delay})` contributed by this step.
    pub fn factor(&self, target: Target, delay: usize) -> f64 {
        match (target, delay) {
            (Target::X, 0) => self.x_posterior,
            (Target::X, _) => self.backward,
            (Target::Y, 0) => self.forward,
            (Target::Y, _) => self.y_predictive,
        }
    }
}

/// `p(x_i | x^{i-1}, y^i)` for every candidate `x_i`, with the predictive
/// `p(y_i | x^{i-1}, y^{i-1})` as normalizer.
pub fn posterior_row(model: &JointProcessModel, x_past: &[usize], y_upto: &[usize], out: &mut Vec<f64>) -> f64 {
    let i = x_past.len();
    let y_past = &y_upto[..i];
    let y_now = y_upto[i];
    let b = model.backward(x_past, y_past);
    out.clear();
    out.extend(b.iter().enumerate().map(|(x, &bx)| bx * model.forward_next(x_past, x, y_past)[y_now]));
    let total: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v = if total > 0.0 { *v / total } else { 0.0 };
    }
    total
}

/// Local conditionals along a sequence pair.
pub fn step_terms(model: &JointProcessModel, s: &SequencePair) -> Result<Vec<StepTerms>> {
    model.check_pair(s)?;
    let (x, y) = (s.x(), s.y());
    let mut post = Vec::with_capacity(model.x_size());
    let terms = (0..s.len())
        .map(|i| {
            let y_pred = posterior_row(model, &x[..i], &y[..=i], &mut post);
            StepTerms {
                backward: model.backward(&x[..i], &y[..i])[x[i]],
                forward: model.forward(&x[..=i], &y[..i])[y[i]],
                y_predictive: y_pred,
                x_posterior: post[x[i]],
            }
        })
        .collect();
    Ok(terms)
}

fn check_delay(delay: usize) -> Result<()> {
    if delay > 1 {
        Err(Error::UnsupportedDelay(delay))
    } else {
        Ok(())
    }
}

/// Product of factors, switching to a log-domain sum for long sequences.
fn product(factors: impl Iterator<Item = f64>, len: usize) -> f64 {
    if len <= LINEAR_DOMAIN_MAX {
        factors.product()
    } else {
        log2_product(factors).exp2()
    }
}

fn log2_product(factors: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    for f in factors {
        if f <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += f.log2();
    }
    acc
}

/// `p(x^n, y^n)` by the chain rule over both kernels.
pub fn joint_prob(model: &JointProcessModel, s: &SequencePair) -> Result<f64> {
    let terms = step_terms(model, s)?;
    Ok(product(terms.iter().map(|t| t.backward * t.forward), s.len()))
}

/// `log2 p(x^n, y^n)`; `-inf` for impossible pairs.
pub fn log2_joint_prob(model: &JointProcessModel, s: &SequencePair) -> Result<f64> {
    let terms = step_terms(model, s)?;
    Ok(log2_product(terms.iter().map(|t| t.backward * t.forward)))
}

/// `p(target^n || other^{n-delay})` for `delay` in `{0, 1}`.
///
/// With `target = X` and `delay = 0` each factor `p(x_i | x^{i-1}, y^i)` is
/// obtained by Bayes' rule from the two kernels; no future symbols enter.
pub fn causal_cond_prob(model: &JointProcessModel, s: &SequencePair, target: Target, delay: usize) -> Result<f64> {
    check_delay(delay)?;
    let terms = step_terms(model, s)?;
    Ok(product(terms.iter().map(|t| t.factor(target, delay)), s.len()))
}

/// `log2 p(target^n || other^{n-delay})`.
pub fn log2_causal_cond_prob(model: &JointProcessModel, s: &SequencePair, target: Target, delay: usize) -> Result<f64> {
    check_delay(delay)?;
    let terms = step_terms(model, s)?;
    Ok(log2_product(terms.iter().map(|t| t.factor(target, delay))))
}

fn check_symbols(alphabet: crate::prob::Alphabet, seq: &[usize]) -> Result<()> {
    seq.iter().try_for_each(|&s| alphabet.check(s))
}

/// `p(y^n)` by a forward recursion over the hidden input history.
pub fn marginal_prob(model: &JointProcessModel, y: &[usize]) -> Result<f64> {
    check_symbols(model.y_alphabet(), y)?;
    Ok(log2_marginal_y(model, y).exp2())
}

/// `p(x^n)` by a forward recursion over the hidden side-information history.
pub fn marginal_prob_x(model: &JointProcessModel, x: &[usize]) -> Result<f64> {
    check_symbols(model.x_alphabet(), x)?;
    Ok(log2_marginal_x(model, x).exp2())
}

pub fn log2_marginal_prob(model: &JointProcessModel, y: &[usize]) -> Result<f64> {
    check_symbols(model.y_alphabet(), y)?;
    Ok(log2_marginal_y(model, y))
}

pub fn log2_marginal_prob_x(model: &JointProcessModel, x: &[usize]) -> Result<f64> {
    check_symbols(model.x_alphabet(), x)?;
    Ok(log2_marginal_x(model, x))
}
