//! Exact enumeration over the joint prefix tree and forward recursions for
//! the marginal laws `p(x^n)` and `p(y^n)`.
//!
//! Prefix nodes are visited depth first in lexicographic order of the
//! interleaved sequence `x_1, y_1, x_2, y_2, ...`, which fixes the summation
//! order of every derived quantity.

use crate::error::{Error, Result};
use crate::model::JointProcessModel;
use crate::prob::check_capacity;

/// A node `(x^i, y^i)` of the joint prefix tree together with the local
/// conditionals of its last step and the running causal products.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a> {
    /// Prefix length `i` (time of the last symbol, 1-based).
    pub i: usize,
    pub x: &'a [usize],
    pub y: &'a [usize],
    /// Mixed-radix index of `x^i` with `x_1` most significant.
    pub x_index: usize,
    pub y_index: usize,
    /// `p(x^i, y^i)`.
    pub joint: f64,
    /// `p(x_i | x^{i-1}, y^{i-1})`.
    pub backward: f64,
    /// `p(y_i | x^i, y^{i-1})`.
    pub forward: f64,
    /// `p(y_i | x^{i-1}, y^{i-1})`.
    pub y_predictive: f64,
    /// `p(x_i | x^{i-1}, y^i)`, zero when `y_predictive` is zero.
    pub x_posterior: f64,
    /// `p(x^i || y^i)`.
    pub x_causal: f64,
    /// `p(x^i || y^{i-1})`.
    pub x_delayed: f64,
    /// `p(y^i || x^i)`.
    pub y_causal: f64,
    /// `p(y^i || x^{i-1})`.
    pub y_delayed: f64,
}

/// The information available to a causal decision maker at time `i`:
/// `(x^{i-1}, y^i)`, before `x_i` is revealed.
#[derive(Debug, Clone, Copy)]
pub struct Context<'a> {
    pub i: usize,
    pub x_past: &'a [usize],
    /// `y^i`, including the current side information.
    pub y: &'a [usize],
    pub x_index: usize,
    /// `p(x^{i-1}, y^i)`.
    pub prob: f64,
    /// `p(x^{i-1} || y^{i-1})`, the stimulus product up to the previous step.
    pub x_delayed: f64,
    /// `p(y^i || x^{i-1})`.
    pub y_delayed: f64,
    /// `p(x_i | x^{i-1}, y^i)` for every `x_i` (all zero if `prob` is zero).
    pub posterior: &'a [f64],
    /// Dense index of the backward context, so `(backward_index, y_i)`
    /// identifies the local conditional.
    pub backward_index: usize,
}

pub trait Visitor {
    fn context(&mut self, _c: &Context<'_>) -> Result<()> {
        Ok(())
    }
    fn step(&mut self, _s: &Step<'_>) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Acc {
    joint: f64,
    x_causal: f64,
    x_delayed: f64,
    y_causal: f64,
    y_delayed: f64,
    x_index: usize,
    y_index: usize,
}

struct Walker<'m, V> {
    model: &'m JointProcessModel,
    /// Absolute length at which the walk stops.
    end: usize,
    prune: bool,
    xs: Vec<usize>,
    ys: Vec<usize>,
    /// Per-depth scratch: forward rows for every `x_i`, and `p(y_i | past)`.
    f_rows: Vec<&'m [f64]>,
    y_pred: Vec<f64>,
    posterior: Vec<f64>,
    visitor: V,
}

impl<'m, V: Visitor> Walker<'m, V> {
    fn rec(&mut self, acc: Acc) -> Result<()> {
        let i = self.xs.len();
        if i == self.end {
            return Ok(());
        }
        let model = self.model;
        let (nx, ny) = (model.x_size(), model.y_size());
        let bidx = model.backward_index(&self.xs, &self.ys);
        let b = model.backward(&self.xs, &self.ys);
        let (fo, yo) = (i * nx, i * ny);
        for x in 0..nx {
            self.f_rows[fo + x] = model.forward_next(&self.xs, x, &self.ys);
        }
        for y in 0..ny {
            self.y_pred[yo + y] = (0..nx).map(|x| b[x] * self.f_rows[fo + x][y]).sum();
        }
        for y in 0..ny {
            let py = self.y_pred[yo + y];
            let prob = acc.joint * py;
            if self.prune && prob == 0.0 {
                continue;
            }
            for x in 0..nx {
                self.posterior[x] = if py > 0.0 { b[x] * self.f_rows[fo + x][y] / py } else { 0.0 };
            }
            self.ys.push(y);
            let ctx = Context {
                i: i + 1,
                x_past: &self.xs,
                y: &self.ys,
                x_index: acc.x_index,
                prob,
                x_delayed: acc.x_delayed,
                y_delayed: acc.y_delayed * py,
                posterior: &self.posterior,
                backward_index: bidx,
            };
            let r = self.visitor.context(&ctx);
            self.ys.pop();
            r?;
        }
        for x in 0..nx {
            let f = self.f_rows[fo + x];
            for y in 0..ny {
                let bf = b[x] * f[y];
                let joint = acc.joint * bf;
                if self.prune && joint == 0.0 {
                    continue;
                }
                let py = self.y_pred[yo + y];
                let post = if py > 0.0 { bf / py } else { 0.0 };
                let next = Acc {
                    joint,
                    x_causal: acc.x_causal * post,
                    x_delayed: acc.x_delayed * b[x],
                    y_causal: acc.y_causal * f[y],
                    y_delayed: acc.y_delayed * py,
                    x_index: acc.x_index * nx + x,
                    y_index: acc.y_index * ny + y,
                };
                self.xs.push(x);
                self.ys.push(y);
                let step = Step {
                    i: i + 1,
                    x: &self.xs,
                    y: &self.ys,
                    x_index: next.x_index,
                    y_index: next.y_index,
                    joint,
                    backward: b[x],
                    forward: f[y],
                    y_predictive: py,
                    x_posterior: post,
                    x_causal: next.x_causal,
                    x_delayed: next.x_delayed,
                    y_causal: next.y_causal,
                    y_delayed: next.y_delayed,
                };
                let r = self.visitor.step(&step).and_then(|_| self.rec(next));
                self.xs.pop();
                self.ys.pop();
                r?;
            }
        }
        Ok(())
    }
}

/// Visits every prefix node up to length `n`.
///
/// With `prune` set, subtrees of zero joint probability are skipped; leave
/// it unset when the visitor weighs nodes by a law other than the joint one.
pub fn walk<V: Visitor>(model: &JointProcessModel, n: usize, prune: bool, visitor: V) -> Result<V> {
    walk_from(model, &[], &[], n, prune, visitor)
}

/// Like [`walk`], but conditioned on a known prefix `(x^w, y^w)`.
///
/// The `n` further steps are enumerated; probabilities, causal products and
/// indices all refer to the new symbols only, while `Step::i`, `Step::x` and
/// `Step::y` are absolute.
pub fn walk_from<V: Visitor>(
    model: &JointProcessModel,
    x_prefix: &[usize],
    y_prefix: &[usize],
    n: usize,
    prune: bool,
    visitor: V,
) -> Result<V> {
    model.check_pair_capacity(n)?;
    check_prefix(model, x_prefix, y_prefix)?;
    let mut xs = Vec::with_capacity(x_prefix.len() + n);
    let mut ys = Vec::with_capacity(x_prefix.len() + n);
    xs.extend_from_slice(x_prefix);
    ys.extend_from_slice(y_prefix);
    let end = x_prefix.len() + n;
    let (nx, ny) = (model.x_size(), model.y_size());
    let mut w = Walker {
        model,
        end,
        prune,
        xs,
        ys,
        f_rows: vec![&[][..]; end * nx],
        y_pred: vec![0.0; end * ny],
        posterior: vec![0.0; nx],
        visitor,
    };
    let root = Acc {
        joint: 1.0,
        x_causal: 1.0,
        x_delayed: 1.0,
        y_causal: 1.0,
        y_delayed: 1.0,
        x_index: 0,
        y_index: 0,
    };
    w.rec(root)?;
    Ok(w.visitor)
}

/// Runs two visitors in one traversal.
impl<A: Visitor, B: Visitor> Visitor for (A, B) {
    fn context(&mut self, c: &Context<'_>) -> Result<()> {
        self.0.context(c)?;
        self.1.context(c)
    }
    fn step(&mut self, s: &Step<'_>) -> Result<()> {
        self.0.step(s)?;
        self.1.step(s)
    }
}

/// Adapter turning a closure into a step-only visitor.
pub struct OnStep<F>(pub F);

impl<F: FnMut(&Step<'_>) -> Result<()>> Visitor for OnStep<F> {
    fn step(&mut self, s: &Step<'_>) -> Result<()> {
        (self.0)(s)
    }
}

/// Adapter turning a closure into a context-only visitor.
pub struct OnContext<F>(pub F);

impl<F: FnMut(&Context<'_>) -> Result<()>> Visitor for OnContext<F> {
    fn context(&mut self, c: &Context<'_>) -> Result<()> {
        (self.0)(c)
    }
}

fn check_prefix(model: &JointProcessModel, x: &[usize], y: &[usize]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Domain("prefix lengths differ".into()));
    }
    for &s in x {
        model.x_alphabet().check(s)?;
    }
    for &s in y {
        model.y_alphabet().check(s)?;
    }
    Ok(())
}

/// Visits only the leaves `(x^n, y^n)`.
pub fn for_each_pair<F>(model: &JointProcessModel, n: usize, prune: bool, mut f: F) -> Result<()>
where
    F: FnMut(&Step<'_>) -> Result<()>,
{
    walk(model, n, prune, OnStep(|s: &Step<'_>| if s.i == n { f(s) } else { Ok(()) }))?;
    Ok(())
}

/// Leaf-only visit below a known prefix.
pub fn for_each_pair_from<F>(
    model: &JointProcessModel,
    x_prefix: &[usize],
    y_prefix: &[usize],
    n: usize,
    prune: bool,
    mut f: F,
) -> Result<()>
where
    F: FnMut(&Step<'_>) -> Result<()>,
{
    let end = x_prefix.len() + n;
    walk_from(model, x_prefix, y_prefix, n, prune, OnStep(|s: &Step<'_>| {
        if s.i == end {
            f(s)
        } else {
            Ok(())
        }
    }))?;
    Ok(())
}

/// Prefix marginals `levels[i][index(x^i)] = p(x^i)` for `i = 0..=n`.
#[derive(Debug, Clone)]
pub struct MarginalTable {
    radix: usize,
    levels: Vec<Vec<f64>>,
}

impl MarginalTable {
    pub fn horizon(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, i: usize) -> &[f64] {
        &self.levels[i]
    }

    /// `p(s^n)` for the full-horizon index.
    pub fn prob(&self, index: usize) -> f64 {
        self.levels[self.horizon()][index]
    }

    pub fn prob_of(&self, seq: &[usize]) -> f64 {
        self.levels[seq.len()][seq_index(seq, self.radix)]
    }

    /// `p(s_i | s^{i-1})` where `seq = s^i`.
    pub fn conditional(&self, seq: &[usize]) -> f64 {
        let i = seq.len();
        let idx = seq_index(seq, self.radix);
        let parent = self.levels[i - 1][idx / self.radix];
        if parent > 0.0 {
            self.levels[i][idx] / parent
        } else {
            0.0
        }
    }
}

pub fn seq_index(seq: &[usize], radix: usize) -> usize {
    seq.iter().fold(0, |acc, &s| acc * radix + s)
}

/// Decode `index` into `len` digits (most significant first).
pub fn index_digits(mut index: usize, radix: usize, len: usize, out: &mut Vec<usize>) {
    out.clear();
    out.resize(len, 0);
    for slot in out.iter_mut().rev() {
        *slot = index % radix;
        index /= radix;
    }
}

/// Hidden-state forward recursion for the `x` marginal.
///
/// `alpha[c]` holds `p(x^i, y-history = c)` where the history is the last
/// `min(i, order)` side symbols. Returns the updated vector after `x_next`.
pub(crate) fn x_filter_step(
    model: &JointProcessModel,
    x_past: &[usize],
    alpha: &[f64],
    x_next: usize,
    xbuf: &mut Vec<usize>,
    ybuf: &mut Vec<usize>,
) -> Vec<f64> {
    let k = model.order();
    let ny = model.y_size();
    let i = x_past.len();
    let l = i.min(k);
    let l_next = (i + 1).min(k);
    let modulus = ny.pow(l_next as u32);
    let mut out = vec![0.0; modulus];
    xbuf.clear();
    xbuf.extend_from_slice(&x_past[i - l..]);
    for (code, &a) in alpha.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        index_digits(code, ny, l, ybuf);
        let b = model.backward(&xbuf[..l], ybuf)[x_next];
        if b == 0.0 {
            continue;
        }
        xbuf.truncate(l);
        xbuf.push(x_next);
        let f = model.forward(xbuf, ybuf);
        for (y, &fy) in f.iter().enumerate() {
            out[(code * ny + y) % modulus] += a * b * fy;
        }
        xbuf.truncate(l);
    }
    out
}

/// Hidden-state forward recursion for the `y` marginal; `alpha` is indexed
/// by the last `min(i, order)` input symbols.
pub(crate) fn y_filter_step(
    model: &JointProcessModel,
    y_past: &[usize],
    alpha: &[f64],
    y_next: usize,
    xbuf: &mut Vec<usize>,
) -> Vec<f64> {
    let k = model.order();
    let nx = model.x_size();
    let i = y_past.len();
    let l = i.min(k);
    let l_next = (i + 1).min(k);
    let modulus = nx.pow(l_next as u32);
    let mut out = vec![0.0; modulus];
    let ys = &y_past[i - l..];
    for (code, &a) in alpha.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        index_digits(code, nx, l, xbuf);
        let b = model.backward(xbuf, ys);
        for (x, &bx) in b.iter().enumerate() {
            if bx == 0.0 {
                continue;
            }
            xbuf.push(x);
            let fy = model.forward(xbuf, ys)[y_next];
            xbuf.pop();
            out[(code * nx + x) % modulus] += a * bx * fy;
        }
    }
    out
}

/// All prefix marginals `p(x^i)`, `i <= n`.
pub fn x_marginals(model: &JointProcessModel, n: usize) -> Result<MarginalTable> {
    x_marginals_from(model, &[], &[], n)
}

/// Marginals of the next `n` inputs given a known prefix `(x^w, y^w)`.
pub fn x_marginals_from(
    model: &JointProcessModel,
    x_prefix: &[usize],
    y_prefix: &[usize],
    n: usize,
) -> Result<MarginalTable> {
    check_capacity("x sequences", model.x_alphabet().words(n))?;
    check_prefix(model, x_prefix, y_prefix)?;
    let nx = model.x_size();
    let mut levels: Vec<Vec<f64>> = (0..=n).map(|i| vec![0.0; nx.pow(i as u32)]).collect();
    levels[0][0] = 1.0;
    let mut xs = x_prefix.to_vec();
    let (mut xb, mut yb) = (Vec::new(), Vec::new());
    let alpha = prefix_state(y_prefix, model.order(), model.y_size());
    x_rec(model, x_prefix.len() + n, &mut xs, &alpha, 0, &mut levels, x_prefix.len(), &mut xb, &mut yb);
    Ok(MarginalTable { radix: nx, levels })
}

/// Point-mass filter state on the last `min(w, order)` symbols.
fn prefix_state(past: &[usize], order: usize, radix: usize) -> Vec<f64> {
    let l = past.len().min(order);
    let mut alpha = vec![0.0; radix.pow(l as u32)];
    alpha[seq_index(&past[past.len() - l..], radix)] = 1.0;
    alpha
}

#[allow(clippy::too_many_arguments)]
fn x_rec(
    model: &JointProcessModel,
    end: usize,
    xs: &mut Vec<usize>,
    alpha: &[f64],
    index: usize,
    levels: &mut [Vec<f64>],
    base: usize,
    xb: &mut Vec<usize>,
    yb: &mut Vec<usize>,
) {
    let i = xs.len();
    if i == end {
        return;
    }
    for x in 0..model.x_size() {
        let next = x_filter_step(model, xs, alpha, x, xb, yb);
        let p: f64 = next.iter().sum();
        let idx = index * model.x_size() + x;
        levels[i + 1 - base][idx] = p;
        if p > 0.0 {
            xs.push(x);
            x_rec(model, end, xs, &next, idx, levels, base, xb, yb);
            xs.pop();
        }
    }
}

/// All prefix marginals `p(y^i)`, `i <= n`.
pub fn y_marginals(model: &JointProcessModel, n: usize) -> Result<MarginalTable> {
    y_marginals_from(model, &[], &[], n)
}

/// Marginals of the next `n` outputs given a known prefix `(x^w, y^w)`.
pub fn y_marginals_from(
    model: &JointProcessModel,
    x_prefix: &[usize],
    y_prefix: &[usize],
    n: usize,
) -> Result<MarginalTable> {
    check_capacity("y sequences", model.y_alphabet().words(n))?;
    check_prefix(model, x_prefix, y_prefix)?;
    let ny = model.y_size();
    let mut levels: Vec<Vec<f64>> = (0..=n).map(|i| vec![0.0; ny.pow(i as u32)]).collect();
    levels[0][0] = 1.0;
    let mut ys = y_prefix.to_vec();
    let mut xb = Vec::new();
    let alpha = prefix_state(x_prefix, model.order(), model.x_size());
    y_rec(model, y_prefix.len() + n, &mut ys, &alpha, 0, &mut levels, y_prefix.len(), &mut xb);
    Ok(MarginalTable { radix: ny, levels })
}

#[allow(clippy::too_many_arguments)]
fn y_rec(
    model: &JointProcessModel,
    end: usize,
    ys: &mut Vec<usize>,
    alpha: &[f64],
    index: usize,
    levels: &mut [Vec<f64>],
    base: usize,
    xb: &mut Vec<usize>,
) {
    let i = ys.len();
    if i == end {
        return;
    }
    for y in 0..model.y_size() {
        let next = y_filter_step(model, ys, alpha, y, xb);
        let p: f64 = next.iter().sum();
        let idx = index * model.y_size() + y;
        levels[i + 1 - base][idx] = p;
        if p > 0.0 {
            ys.push(y);
            y_rec(model, end, ys, &next, idx, levels, base, xb);
            ys.pop();
        }
    }
}

/// `log2 p(x^n)` by a normalized forward recursion (any length).
pub fn log2_marginal_x(model: &JointProcessModel, x: &[usize]) -> f64 {
    let (mut xb, mut yb) = (Vec::new(), Vec::new());
    let mut alpha = vec![1.0];
    let mut log_p = 0.0;
    for i in 0..x.len() {
        let next = x_filter_step(model, &x[..i], &alpha, x[i], &mut xb, &mut yb);
        let z: f64 = next.iter().sum();
        if z == 0.0 {
            return f64::NEG_INFINITY;
        }
        log_p += z.log2();
        alpha = next.into_iter().map(|a| a / z).collect();
    }
    log_p
}

/// `log2 p(y^n)` by a normalized forward recursion (any length).
pub fn log2_marginal_y(model: &JointProcessModel, y: &[usize]) -> f64 {
    let mut xb = Vec::new();
    let mut alpha = vec![1.0];
    let mut log_p = 0.0;
    for i in 0..y.len() {
        let next = y_filter_step(model, &y[..i], &alpha, y[i], &mut xb);
        let z: f64 = next.iter().sum();
        if z == 0.0 {
            return f64::NEG_INFINITY;
        }
        log_p += z.log2();
        alpha = next.into_iter().map(|a| a / z).collect();
    }
    log_p
}

/// Predictive probabilities `p(x_i | x^{i-1})` along a sequence.
pub fn x_predictive_path(model: &JointProcessModel, x: &[usize]) -> Vec<f64> {
    let (mut xb, mut yb) = (Vec::new(), Vec::new());
    let mut alpha = vec![1.0];
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let next = x_filter_step(model, &x[..i], &alpha, x[i], &mut xb, &mut yb);
        let z: f64 = next.iter().sum();
        out.push(z);
        if z == 0.0 {
            out.resize(x.len(), 0.0);
            break;
        }
        alpha = next.into_iter().map(|a| a / z).collect();
    }
    out
}
