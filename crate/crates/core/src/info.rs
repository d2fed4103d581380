//! Exact information measures over the first `n` symbols: entropies, causal
//! entropies, directed and mutual information, lautum and directed lautum
//! information, and their per-symbol rates.

use serde::{Deserialize, Serialize};

use crate::causal::Target;
use crate::error::{Error, Result};
use crate::model::JointProcessModel;
use crate::prob::plogp;
use crate::walk::{self, for_each_pair, MarginalTable, Step, Visitor};

/// Orientation of a directed measure, written `source -> target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XToY,
    YToX,
}

impl Direction {
    pub fn target(self) -> Target {
        match self {
            Direction::XToY => Target::Y,
            Direction::YToX => Target::X,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Need {
    entropies: bool,
    mi: bool,
    lautum: bool,
}

/// A sum that may hit a zero-probability denominator with positive weight.
#[derive(Debug, Clone, Default)]
struct Guarded {
    value: f64,
    violation: Option<String>,
}

impl Guarded {
    fn add(&mut self, weight: f64, num: f64, den: f64, what: &str) {
        if weight == 0.0 || self.violation.is_some() {
            return;
        }
        if den <= 0.0 {
            self.violation = Some(format!("{what}: positive weight {weight:e} on a pair with zero denominator"));
            return;
        }
        self.value += weight * (num / den).log2();
    }

    fn into_result(self) -> Result<f64> {
        match self.violation {
            Some(v) => Err(Error::SupportViolation(v)),
            None => Ok(self.value),
        }
    }
}

/// Raw sums of one enumeration.
#[derive(Debug, Clone, Default)]
struct Sums {
    h_joint: f64,
    /// `H(X^n || Y^{n-d})` for d = 0, 1.
    hx: [f64; 2],
    /// `H(Y^n || X^{n-d})` for d = 0, 1.
    hy: [f64; 2],
    h_x: f64,
    h_y: f64,
    mi: f64,
    lautum: Guarded,
    /// Indexed `[direction][delay]` with direction 0 = X->Y.
    l1: [[Guarded; 2]; 2],
    l2: [[Guarded; 2]; 2],
}

struct SumVisitor<'a> {
    end: usize,
    need: Need,
    px: Option<&'a MarginalTable>,
    py: Option<&'a MarginalTable>,
    sums: Sums,
}

impl Visitor for SumVisitor<'_> {
    fn step(&mut self, s: &Step<'_>) -> Result<()> {
        let w = s.joint;
        if self.need.entropies && w > 0.0 {
            let sums = &mut self.sums;
            sums.hx[0] -= w * s.x_posterior.log2();
            sums.hx[1] -= w * s.backward.log2();
            sums.hy[0] -= w * s.forward.log2();
            sums.hy[1] -= w * s.y_predictive.log2();
        }
        if s.i != self.end {
            return Ok(());
        }
        if self.need.entropies {
            self.sums.h_joint += plogp(w);
        }
        if !(self.need.mi || self.need.lautum) {
            return Ok(());
        }
        let px = self.px.expect("x marginals").prob(s.x_index);
        let py = self.py.expect("y marginals").prob(s.y_index);
        if self.need.mi && w > 0.0 {
            self.sums.mi += w * (w / (px * py)).log2();
        }
        if self.need.lautum {
            let indep = px * py;
            let sums = &mut self.sums;
            sums.lautum.add(indep, indep, w, "lautum");
            // [target][delay] causal products: p(x||y^{n-d}), p(y||x^{n-d}).
            let x_c = [s.x_causal, s.x_delayed];
            let y_c = [s.y_causal, s.y_delayed];
            for d in 0..2 {
                // X -> Y: target y, source x with the complementary delay.
                sums.l1[0][d].add(indep, py, y_c[d], "directed lautum L1(X->Y)");
                sums.l2[0][d].add(x_c[1 - d] * py, py, y_c[d], "directed lautum L2(X->Y)");
                sums.l1[1][d].add(indep, px, x_c[d], "directed lautum L1(Y->X)");
                sums.l2[1][d].add(y_c[1 - d] * px, px, x_c[d], "directed lautum L2(Y->X)");
            }
        }
        Ok(())
    }
}

fn table_entropy(t: &MarginalTable) -> f64 {
    t.level(t.horizon()).iter().map(|&p| plogp(p)).sum()
}

fn compute(model: &JointProcessModel, x_prefix: &[usize], y_prefix: &[usize], n: usize, need: Need) -> Result<Sums> {
    model.check_pair_capacity(n)?;
    let tables = need.mi || need.lautum || need.entropies;
    let (px, py) = if tables {
        (
            Some(walk::x_marginals_from(model, x_prefix, y_prefix, n)?),
            Some(walk::y_marginals_from(model, x_prefix, y_prefix, n)?),
        )
    } else {
        (None, None)
    };
    let visitor = SumVisitor { end: x_prefix.len() + n, need, px: px.as_ref(), py: py.as_ref(), sums: Sums::default() };
    // Lautum sums weigh pairs by laws other than the joint one: no pruning.
    let mut sums = walk::walk_from(model, x_prefix, y_prefix, n, !need.lautum, visitor)?.sums;
    if let (Some(px), Some(py)) = (&px, &py) {
        sums.h_x = table_entropy(px);
        sums.h_y = table_entropy(py);
    }
    Ok(sums)
}

const ENTROPIES: Need = Need { entropies: true, mi: false, lautum: false };

/// Full set of measures at horizon `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub n: usize,
    #[serde(rename = "H_x")]
    pub h_x: f64,
    #[serde(rename = "H_y")]
    pub h_y: f64,
    #[serde(rename = "H_joint")]
    pub h_joint: f64,
    /// `H(X^n || Y^n)`.
    #[serde(rename = "H_x_given_y_causal")]
    pub h_x_given_y_causal: f64,
    /// `H(X^n || Y^{n-1})`.
    #[serde(rename = "H_x_given_y_delayed")]
    pub h_x_given_y_delayed: f64,
    /// `I(Y^n -> X^n)`.
    pub di_y_to_x: f64,
    /// `I(X^n -> Y^n)`.
    pub di_x_to_y: f64,
    /// `I(Y^{n-1} -> X^n)`.
    pub di_y_delayed_to_x: f64,
    /// `I(X^n; Y^n)`, computed directly as a divergence.
    pub mi: f64,
    /// `L(X^n; Y^n)`; `None` when the product law is not absolutely
    /// continuous with respect to the joint law.
    pub lautum: Option<f64>,
    /// `L1(X^n -> Y^n)`.
    pub lautum_dir1: Option<f64>,
    /// `L2(X^n -> Y^n)`.
    pub lautum_dir2: Option<f64>,
}

impl InfoReport {
    /// `|I(X;Y) - I(X->Y) - I(Y^{n-1}->X)|`.
    pub fn conservation_residual(&self) -> f64 {
        (self.mi - self.di_x_to_y - self.di_y_delayed_to_x).abs()
    }
}

pub fn info_report(model: &JointProcessModel, n: usize) -> Result<InfoReport> {
    let s = compute(model, &[], &[], n, Need { entropies: true, mi: true, lautum: true })?;
    Ok(report_from(n, s))
}

fn report_from(n: usize, s: Sums) -> InfoReport {
    let ok = |g: Guarded| g.into_result().ok();
    let l1 = pick(s.l1, Direction::XToY, 0);
    let l2 = pick(s.l2, Direction::XToY, 0);
    InfoReport {
        n,
        h_x: s.h_x,
        h_y: s.h_y,
        h_joint: s.h_joint,
        h_x_given_y_causal: s.hx[0],
        h_x_given_y_delayed: s.hx[1],
        di_y_to_x: s.h_x - s.hx[0],
        di_x_to_y: s.h_y - s.hy[0],
        di_y_delayed_to_x: s.h_x - s.hx[1],
        mi: s.mi,
        lautum: ok(s.lautum),
        lautum_dir1: ok(l1),
        lautum_dir2: ok(l2),
    }
}

fn check_delay(delay: usize) -> Result<usize> {
    if delay > 1 {
        Err(Error::UnsupportedDelay(delay))
    } else {
        Ok(delay)
    }
}

/// `H(X^n || Y^{n-delay})`.
pub fn causal_entropy(model: &JointProcessModel, n: usize, delay: usize) -> Result<f64> {
    causal_entropy_of(model, n, Target::X, delay)
}

/// `H(target^n || other^{n-delay})`.
pub fn causal_entropy_of(model: &JointProcessModel, n: usize, target: Target, delay: usize) -> Result<f64> {
    let d = check_delay(delay)?;
    let s = compute(model, &[], &[], n, ENTROPIES)?;
    Ok(match target {
        Target::X => s.hx[d],
        Target::Y => s.hy[d],
    })
}

/// `H(X^n)`.
pub fn entropy_x(model: &JointProcessModel, n: usize) -> Result<f64> {
    Ok(table_entropy(&walk::x_marginals(model, n)?))
}

/// `H(Y^n)`.
pub fn entropy_y(model: &JointProcessModel, n: usize) -> Result<f64> {
    Ok(table_entropy(&walk::y_marginals(model, n)?))
}

fn di_from(s: &Sums, direction: Direction, d: usize) -> f64 {
    match direction {
        Direction::YToX => s.h_x - s.hx[d],
        Direction::XToY => s.h_y - s.hy[d],
    }
}

/// Directed information by entropy difference: `I(Y^{n-d} -> X^n) =
/// H(X^n) - H(X^n || Y^{n-d})` and symmetrically for `X -> Y`.
pub fn directed_info(model: &JointProcessModel, n: usize, direction: Direction, delay: usize) -> Result<f64> {
    let d = check_delay(delay)?;
    let s = compute(model, &[], &[], n, ENTROPIES)?;
    Ok(di_from(&s, direction, d))
}

/// Directed information conditioned on a known prefix `(x^w, y^w)`, over
/// the `n` symbols that follow it.
pub fn directed_info_from(
    model: &JointProcessModel,
    x_prefix: &[usize],
    y_prefix: &[usize],
    n: usize,
    direction: Direction,
    delay: usize,
) -> Result<f64> {
    let d = check_delay(delay)?;
    let s = compute(model, x_prefix, y_prefix, n, ENTROPIES)?;
    Ok(di_from(&s, direction, d))
}

/// `I(X^n; Y^n) = D(p_{XY} || p_X p_Y)`.
pub fn mutual_info(model: &JointProcessModel, n: usize) -> Result<f64> {
    Ok(compute(model, &[], &[], n, Need { entropies: false, mi: true, lautum: false })?.mi)
}

/// Residual of `I(X^n;Y^n) = I(X^n -> Y^n) + I(Y^{n-1} -> X^n)`, with the
/// left side computed directly as a divergence.
pub fn conservation_check(model: &JointProcessModel, n: usize) -> Result<f64> {
    let s = compute(model, &[], &[], n, Need { entropies: true, mi: true, lautum: false })?;
    Ok((s.mi - di_from(&s, Direction::XToY, 0) - di_from(&s, Direction::YToX, 1)).abs())
}

fn lautum_sums(model: &JointProcessModel, n: usize) -> Result<Sums> {
    compute(model, &[], &[], n, Need { entropies: false, mi: false, lautum: true })
}

fn pick(table: [[Guarded; 2]; 2], direction: Direction, delay: usize) -> Guarded {
    let [xy, yx] = table;
    let [d0, d1] = match direction {
        Direction::XToY => xy,
        Direction::YToX => yx,
    };
    if delay == 0 {
        d0
    } else {
        d1
    }
}

/// `L(X^n; Y^n) = D(p_X p_Y || p_{XY})`.
pub fn lautum(model: &JointProcessModel, n: usize) -> Result<f64> {
    lautum_sums(model, n)?.lautum.into_result()
}

/// Directed lautum information of the first kind, weighted by `p(x^n) p(y^n)`.
///
/// For `X^{n-d} -> Y^n` this is `E log p(y^n) / p(y^n || x^{n-d})`; the
/// `Y -> X` orientation swaps the roles.
pub fn directed_lautum1(model: &JointProcessModel, n: usize, direction: Direction, delay: usize) -> Result<f64> {
    let d = check_delay(delay)?;
    pick(lautum_sums(model, n)?.l1, direction, d).into_result()
}

/// Directed lautum information of the second kind.
///
/// For `X^{n-d} -> Y^n` the weighting law is `p(x^n || y^{n-1+d}) p(y^n)`:
/// the source keeps its causal dependence on the target while the target is
/// drawn from its marginal. `d = 0, X -> Y` is the usual `L2(X^n -> Y^n)`.
pub fn directed_lautum2(model: &JointProcessModel, n: usize, direction: Direction, delay: usize) -> Result<f64> {
    let d = check_delay(delay)?;
    pick(lautum_sums(model, n)?.l2, direction, d).into_result()
}

/// Dense joint table `p(x^n, y^n)` used for the term-sum forms of the
/// identities. Independent of the walker's local conditionals: it only
/// stores leaf probabilities and marginalizes them.
#[derive(Debug, Clone)]
pub struct JointTable {
    nx: usize,
    ny: usize,
    n: usize,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn build(model: &JointProcessModel, n: usize) -> Result<Self> {
        let (nx, ny) = (model.x_size(), model.y_size());
        let size = nx.pow(n as u32) * ny.pow(n as u32);
        model.check_pair_capacity(n)?;
        let mut probs = vec![0.0; size];
        let stride = ny.pow(n as u32);
        for_each_pair(model, n, true, |s| {
            probs[s.x_index * stride + s.y_index] = s.joint;
            Ok(())
        })?;
        Ok(JointTable { nx, ny, n, probs })
    }

    pub fn horizon(&self) -> usize {
        self.n
    }

    /// `H(X^a, Y^b)` for `a, b <= n`.
    pub fn entropy(&self, a: usize, b: usize) -> f64 {
        let n = self.n as u32;
        let stride = self.ny.pow(n);
        let x_div = self.nx.pow(n - a as u32);
        let y_div = self.ny.pow(n - b as u32);
        let y_cells = self.ny.pow(b as u32);
        let mut cells = vec![0.0; self.nx.pow(a as u32) * y_cells];
        for (idx, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                let (xi, yi) = (idx / stride, idx % stride);
                cells[(xi / x_div) * y_cells + yi / y_div] += p;
            }
        }
        cells.iter().map(|&p| plogp(p)).sum()
    }

    /// `I(X^a; Y^b | ...)` style helper: `H(A,C) + H(B,C) - H(A,B,C) - H(C)`
    /// for prefix-shaped sets given as `(x_len, y_len)`.
    pub fn conditional_mi(&self, ac: (usize, usize), bc: (usize, usize), abc: (usize, usize), c: (usize, usize)) -> f64 {
        self.entropy(ac.0, ac.1) + self.entropy(bc.0, bc.1) - self.entropy(abc.0, abc.1) - self.entropy(c.0, c.1)
    }
}

/// Directed information as the sum of per-step conditional mutual
/// informations, e.g. `sum_i I(X^{i-d}; Y_i | Y^{i-1})` for `X -> Y`.
pub fn directed_info_term_sum(model: &JointProcessModel, n: usize, direction: Direction, delay: usize) -> Result<f64> {
    let d = check_delay(delay)?;
    let t = JointTable::build(model, n)?;
    Ok(term_sum(&t, direction, d))
}

pub fn term_sum(t: &JointTable, direction: Direction, d: usize) -> f64 {
    (1..=t.horizon())
        .map(|i| {
            let lag = i - d.min(i);
            match direction {
                // I(X_i; Y^{i-d} | X^{i-1})
                Direction::YToX => t.conditional_mi((i, 0), (i - 1, lag), (i, lag), (i - 1, 0)),
                // I(Y_i; X^{i-d} | Y^{i-1})
                Direction::XToY => t.conditional_mi((0, i), (lag, i - 1), (lag, i), (0, i - 1)),
            }
        })
        .sum()
}

/// A per-symbol quantity whose rate can be extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    DirectedInfo { direction: Direction, delay: usize },
    CausalEntropy { target: TargetName, delay: usize },
    MutualInfo,
    Lautum,
    Lautum1 { direction: Direction, delay: usize },
    Lautum2 { direction: Direction, delay: usize },
}

/// Serializable mirror of [`Target`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetName {
    X,
    Y,
}

impl From<TargetName> for Target {
    fn from(t: TargetName) -> Target {
        match t {
            TargetName::X => Target::X,
            TargetName::Y => Target::Y,
        }
    }
}

impl Quantity {
    /// Parses CLI names such as `directed`, `causal_entropy` or `lautum2`,
    /// with the direction and delay given separately.
    pub fn parse(name: &str, direction: Direction, delay: usize) -> Result<Quantity> {
        check_delay(delay)?;
        Ok(match name {
            "directed" | "directed_info" | "di" => Quantity::DirectedInfo { direction, delay },
            "causal_entropy" | "entropy" => Quantity::CausalEntropy {
                target: match direction.target() {
                    Target::X => TargetName::X,
                    Target::Y => TargetName::Y,
                },
                delay,
            },
            "mi" | "mutual_info" => Quantity::MutualInfo,
            "lautum" => Quantity::Lautum,
            "lautum1" => Quantity::Lautum1 { direction, delay },
            "lautum2" => Quantity::Lautum2 { direction, delay },
            other => return Err(Error::Argument(format!("unknown quantity {other:?}"))),
        })
    }

    fn need(self) -> Need {
        match self {
            Quantity::DirectedInfo { .. } | Quantity::CausalEntropy { .. } => ENTROPIES,
            Quantity::MutualInfo => Need { entropies: false, mi: true, lautum: false },
            _ => Need { entropies: false, mi: false, lautum: true },
        }
    }

    fn extract(self, s: Sums) -> Result<f64> {
        match self {
            Quantity::DirectedInfo { direction, delay } => Ok(di_from(&s, direction, check_delay(delay)?)),
            Quantity::CausalEntropy { target, delay } => {
                let d = check_delay(delay)?;
                Ok(match Target::from(target) {
                    Target::X => s.hx[d],
                    Target::Y => s.hy[d],
                })
            }
            Quantity::MutualInfo => Ok(s.mi),
            Quantity::Lautum => s.lautum.into_result(),
            Quantity::Lautum1 { direction, delay } => {
                pick(s.l1, direction, check_delay(delay)?).into_result()
            }
            Quantity::Lautum2 { direction, delay } => {
                pick(s.l2, direction, check_delay(delay)?).into_result()
            }
        }
    }

    /// Value of the quantity at horizon `n` (not normalized).
    pub fn evaluate(self, model: &JointProcessModel, n: usize) -> Result<f64> {
        self.extract(compute(model, &[], &[], n, self.need())?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RateOptions {
    /// Stop once successive increments differ by less than this.
    pub tol: f64,
    /// Largest horizon tried; the enumeration guard also applies.
    pub max_n: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions { tol: 1e-6, max_n: 64 }
    }
}

/// Per-symbol rate estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Last increment `Q(n) - Q(n-1)`.
    pub value: f64,
    /// Horizon at which the estimate was taken.
    pub n: usize,
    /// `|increment(n) - increment(n-1)|`, infinite if only one was computed.
    pub achieved_tol: f64,
    pub converged: bool,
}

/// Rate of `quantity` from increments `Q(n) - Q(n-1)`, which converge
/// geometrically for ergodic finite-memory models.
pub fn rate(model: &JointProcessModel, quantity: Quantity, opts: RateOptions) -> Result<RateEstimate> {
    let mut prev_q = 0.0;
    let mut prev_inc: Option<f64> = None;
    let mut best: Option<RateEstimate> = None;
    for n in 1..=opts.max_n.max(1) {
        if model.check_pair_capacity(n).is_err() {
            break;
        }
        let q = quantity.evaluate(model, n)?;
        let inc = q - prev_q;
        let achieved = prev_inc.map_or(f64::INFINITY, |p| (inc - p).abs());
        let est = RateEstimate { value: inc, n, achieved_tol: achieved, converged: achieved < opts.tol };
        if est.converged {
            return Ok(est);
        }
        best = Some(est);
        prev_q = q;
        prev_inc = Some(inc);
    }
    match best {
        Some(b) => Ok(b),
        // Only reachable when even n = 1 exceeds the guard.
        None => Err(model.check_pair_capacity(1).expect_err("n = 1 was rejected")),
    }
}
