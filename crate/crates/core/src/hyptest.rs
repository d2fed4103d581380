//! Testing whether `Y` is causally generated by `X`.
//!
//! H0 is the model's joint law `p(x^n || y^{n-1}) p(y^n || x^n)`. H1 keeps
//! the stimulation kernel but makes the output independent of the input:
//! `p(x^n || y^{n-1}) p(y^n)`, with `p(y^n)` the H0 marginal. The
//! log-likelihood ratio of a pair is `log p(y^n || x^n) - log p(y^n)`.

use rand::Rng;
use serde::Serialize;

use crate::causal::{log2_causal_cond_prob, log2_marginal_prob, Target};
use crate::error::{Error, Result};
use crate::info::{self, Direction, Quantity, RateEstimate, RateOptions};
use crate::model::{JointProcessModel, SequencePair};
use crate::sample::{draw, replica_rng, sample_with};
use crate::walk::{for_each_pair, y_marginals};

/// Log-likelihood ratios closer than this form one level of the test.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Default half-width of the typical region, in bits per symbol.
pub const DEFAULT_DELTA: f64 = 0.05;

/// `log2 p(y^n || x^n) - log2 p(y^n)`.
pub fn llr(model: &JointProcessModel, s: &SequencePair) -> Result<f64> {
    let num = log2_causal_cond_prob(model, s, Target::Y, 0)?;
    let den = log2_marginal_prob(model, s.y())?;
    if den == f64::NEG_INFINITY {
        if num == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        return Err(Error::SupportViolation(format!("p(y^n) = 0 for y = {:?}", s.y())));
    }
    Ok(num - den)
}

/// The directed-information rate `I(X -> Y)` used to centre the region.
pub fn di_rate(model: &JointProcessModel, tol: f64) -> Result<RateEstimate> {
    let q = Quantity::DirectedInfo { direction: Direction::XToY, delay: 0 };
    info::rate(model, q, RateOptions { tol, ..RateOptions::default() })
}

/// Whether the pair lies in the typical region `|llr / n - rate| < delta`
/// (accept H0).
pub fn aep_region_test(model: &JointProcessModel, s: &SequencePair, rate: f64, delta: f64) -> Result<bool> {
    check_delta(delta)?;
    let l = llr(model, s)?;
    Ok(in_region(l, s.len(), rate, delta))
}

fn in_region(llr: f64, n: usize, rate: f64, delta: f64) -> bool {
    (llr / n as f64 - rate).abs() < delta
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("delta must be positive, got {delta}")))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 0.5 {
        Ok(())
    } else {
        Err(Error::Argument(format!("epsilon must lie in (0, 1/2), got {epsilon}")))
    }
}

/// One enumerated pair: its ratio and its probabilities under both laws.
#[derive(Debug, Clone, Copy)]
pub struct Outcome {
    pub llr: f64,
    pub p0: f64,
    pub p1: f64,
}

/// Every pair of length `n` with positive probability under either law.
pub fn outcomes(model: &JointProcessModel, n: usize) -> Result<Vec<Outcome>> {
    model.check_pair_capacity(n)?;
    let yt = y_marginals(model, n)?;
    let mut out = Vec::new();
    for_each_pair(model, n, false, |s| {
        let p0 = s.joint;
        let p1 = s.x_delayed * yt.prob(s.y_index);
        if p0 > 0.0 || p1 > 0.0 {
            let llr = match (p0 > 0.0, p1 > 0.0) {
                (true, true) => (p0 / p1).log2(),
                (true, false) => f64::INFINITY,
                _ => f64::NEG_INFINITY,
            };
            out.push(Outcome { llr, p0, p1 });
        }
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

/// Error probabilities of the typical-region test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestReport {
    pub n: usize,
    pub delta: f64,
    pub rate: f64,
    /// `Pr(A^c | H0)`.
    pub alpha: f64,
    /// `Pr(A | H1)`.
    pub beta: f64,
    pub exponent_beta: f64,
    pub exponent_alpha: f64,
    /// Whether the rate estimate converged.
    pub converged: bool,
    pub mode: Mode,
    /// Standard errors, Monte Carlo only.
    pub alpha_std_error: Option<f64>,
    pub beta_std_error: Option<f64>,
    /// `2^{-n (rate - delta)} (1 - alpha)`.
    pub achievability_bound: f64,
}

impl TestReport {
    fn new(n: usize, delta: f64, rate: &RateEstimate, alpha: f64, beta: f64, mode: Mode) -> Self {
        let nf = n as f64;
        // Sums of many terms can overshoot 1 by an ulp or two.
        let (alpha, beta) = (alpha.clamp(0.0, 1.0), beta.clamp(0.0, 1.0));
        TestReport {
            n,
            delta,
            rate: rate.value,
            alpha,
            beta,
            exponent_beta: -beta.log2() / nf,
            exponent_alpha: -alpha.log2() / nf,
            converged: rate.converged,
            mode,
            alpha_std_error: None,
            beta_std_error: None,
            achievability_bound: (-nf * (rate.value - delta)).exp2() * (1.0 - alpha),
        }
    }

    /// `beta <= 2^{-n (rate - delta)} (1 - alpha)`, up to rounding.
    pub fn achievability_holds(&self) -> bool {
        self.beta <= self.achievability_bound * (1.0 + 1e-12) + 1e-300
    }
}

/// Exact error probabilities of the typical region, by enumeration.
pub fn error_probs(model: &JointProcessModel, n: usize, delta: f64, rate: &RateEstimate) -> Result<TestReport> {
    check_delta(delta)?;
    let (mut alpha, mut beta) = (0.0, 0.0);
    for o in outcomes(model, n)? {
        if in_region(o.llr, n, rate.value, delta) {
            beta += o.p1;
        } else {
            alpha += o.p0;
        }
    }
    Ok(TestReport::new(n, delta, rate, alpha, beta, Mode::Exact))
}

/// Draws `(x^n, y^n)` from H1: `y^n` from the H0 marginal, then each `x_i`
/// from the stimulation kernel given the pasts.
pub fn sample_h1<R: Rng + ?Sized>(model: &JointProcessModel, n: usize, rng: &mut R) -> Result<SequencePair> {
    let y = sample_with(model, n, rng)?.y().to_vec();
    let mut x = Vec::with_capacity(n);
    for i in 0..n {
        let xi = draw(rng, model.backward(&x, &y[..i]));
        x.push(xi);
    }
    SequencePair::new(x, y)
}

/// Monte Carlo error probabilities from `samples` draws under each law.
/// Replica `2r` feeds H0 and `2r + 1` feeds H1.
pub fn error_probs_mc(
    model: &JointProcessModel,
    n: usize,
    delta: f64,
    rate: &RateEstimate,
    samples: usize,
    seed: u64,
) -> Result<TestReport> {
    check_delta(delta)?;
    if samples == 0 {
        return Err(Error::Argument("sample count must be positive".into()));
    }
    let (mut rejected0, mut accepted1) = (0usize, 0usize);
    for r in 0..samples as u64 {
        let s0 = sample_with(model, n, &mut replica_rng(seed, 2 * r))?;
        if !in_region(llr(model, &s0)?, n, rate.value, delta) {
            rejected0 += 1;
        }
        let s1 = sample_h1(model, n, &mut replica_rng(seed, 2 * r + 1))?;
        if in_region(llr(model, &s1)?, n, rate.value, delta) {
            accepted1 += 1;
        }
    }
    let m = samples as f64;
    let (alpha, beta) = (rejected0 as f64 / m, accepted1 as f64 / m);
    let mut report = TestReport::new(n, delta, rate, alpha, beta, Mode::Mc);
    report.alpha_std_error = Some((alpha * (1.0 - alpha) / m).sqrt());
    report.beta_std_error = Some((beta * (1.0 - beta) / m).sqrt());
    Ok(report)
}

/// Pairs sharing one log-likelihood ratio (within [`TIE_TOLERANCE`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub llr: f64,
    pub p0: f64,
    pub p1: f64,
}

/// Ratio levels in decreasing `llr` order.
pub fn levels(mut outcomes: Vec<Outcome>) -> Vec<Level> {
    outcomes.sort_by(|a, b| b.llr.total_cmp(&a.llr));
    let mut out: Vec<Level> = Vec::new();
    for o in outcomes {
        match out.last_mut() {
            Some(l) if l.llr == o.llr || (l.llr - o.llr).abs() <= TIE_TOLERANCE => {
                l.p0 += o.p0;
                l.p1 += o.p1;
            }
            _ => out.push(Level { llr: o.llr, p0: o.p0, p1: o.p1 }),
        }
    }
    out
}

/// Optimal likelihood-ratio test for one constrained error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NpResult {
    pub n: usize,
    pub epsilon: f64,
    /// The minimized error of the deterministic test.
    pub optimum: f64,
    /// The same for the randomized test, which splits the threshold level.
    pub optimum_randomized: f64,
    /// The realized value of the constrained error (below `epsilon`).
    pub constrained: f64,
    /// `log2 p0 / p1` at the threshold level.
    pub threshold_llr: f64,
    /// Probability, under the minimized error's law, of the threshold level.
    pub atom: f64,
}

/// `min beta` subject to `alpha < epsilon`.
///
/// Whole levels are admitted to the acceptance region in decreasing ratio
/// order until the rejected H0 mass drops below `epsilon`.
pub fn neyman_pearson_beta(model: &JointProcessModel, n: usize, epsilon: f64) -> Result<NpResult> {
    check_epsilon(epsilon)?;
    Ok(np_from_levels(&levels(outcomes(model, n)?), n, epsilon))
}

/// `min alpha` subject to `beta < epsilon`; the mirror of
/// [`neyman_pearson_beta`] with the laws exchanged.
pub fn neyman_pearson_alpha(model: &JointProcessModel, n: usize, epsilon: f64) -> Result<NpResult> {
    check_epsilon(epsilon)?;
    let mirrored: Vec<Level> = levels(outcomes(model, n)?)
        .into_iter()
        .rev()
        .map(|l| Level { llr: -l.llr, p0: l.p1, p1: l.p0 })
        .collect();
    let mut r = np_from_levels(&mirrored, n, epsilon);
    r.threshold_llr = -r.threshold_llr;
    Ok(r)
}

/// Admits levels (sorted by decreasing `p0 / p1`) until the `p0` mass
/// left out is below `epsilon`; the minimized error is the admitted `p1`.
fn np_from_levels(levels: &[Level], n: usize, epsilon: f64) -> NpResult {
    let total0: f64 = levels.iter().map(|l| l.p0).sum();
    let mut in0 = 0.0;
    let mut in1 = 0.0;
    for l in levels {
        let before0 = in0;
        let before1 = in1;
        in0 += l.p0;
        in1 += l.p1;
        let left = (total0 - in0).max(0.0);
        if left < epsilon {
            // Randomizing on this level lets the left-out mass reach epsilon.
            let need = (total0 - epsilon - before0).max(0.0);
            let gamma = if l.p0 > 0.0 { (need / l.p0).min(1.0) } else { 0.0 };
            return NpResult {
                n,
                epsilon,
                optimum: in1,
                optimum_randomized: before1 + gamma * l.p1,
                constrained: left,
                threshold_llr: l.llr,
                atom: l.p1,
            };
        }
    }
    NpResult {
        n,
        epsilon,
        optimum: in1,
        optimum_randomized: in1,
        constrained: 0.0,
        threshold_llr: f64::NEG_INFINITY,
        atom: 0.0,
    }
}

/// One horizon of an exponent sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPoint {
    pub n: usize,
    pub beta_np: f64,
    pub beta_np_randomized: f64,
    pub alpha_np: f64,
    pub alpha_np_randomized: f64,
}

/// Fitted error exponents and their model-based targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentReport {
    pub epsilon: f64,
    /// Least-squares slope of `-log2 beta` against `n`.
    pub beta_exponent: f64,
    /// The same for `alpha`; infinite when `alpha` vanishes.
    pub alpha_exponent: f64,
    pub target_di_rate: f64,
    /// `None` when some pair has H1 mass but no H0 mass, so the rate is infinite.
    pub target_l2_rate: Option<f64>,
    /// Horizons entering the fit.
    pub fit_ns: Vec<usize>,
    pub points: Vec<ExponentPoint>,
}

/// Slope of the least-squares line through `(x, y)`.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Estimates the two Neyman-Pearson exponents over `n_list`.
///
/// The slopes are fitted on the largest half of the horizons (at least
/// two), using the randomized optima so the staircase of the discrete
/// test does not bias the slope.
pub fn exponent_estimates(
    model: &JointProcessModel,
    n_list: &[usize],
    epsilon: f64,
    rate_tol: f64,
) -> Result<ExponentReport> {
    check_epsilon(epsilon)?;
    let mut ns: Vec<usize> = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 || ns[0] == 0 {
        return Err(Error::Argument("need at least two distinct positive horizons".into()));
    }
    let mut points = Vec::with_capacity(ns.len());
    for &n in &ns {
        let b = neyman_pearson_beta(model, n, epsilon)?;
        let a = neyman_pearson_alpha(model, n, epsilon)?;
        points.push(ExponentPoint {
            n,
            beta_np: b.optimum,
            beta_np_randomized: b.optimum_randomized,
            alpha_np: a.optimum,
            alpha_np_randomized: a.optimum_randomized,
        });
    }
    let keep = ns.len().div_ceil(2).max(2);
    let fit = &points[points.len() - keep..];
    let slope = |f: fn(&ExponentPoint) -> f64| {
        let pts: Vec<(f64, f64)> = fit.iter().map(|p| (p.n as f64, -f(p).log2())).collect();
        if pts.iter().any(|p| p.1.is_infinite()) {
            f64::INFINITY
        } else {
            ls_slope(&pts)
        }
    };
    let target_di = di_rate(model, rate_tol)?.value;
    let l2 = Quantity::Lautum2 { direction: Direction::XToY, delay: 0 };
    let target_l2 = match info::rate(model, l2, RateOptions { tol: rate_tol, ..RateOptions::default() }) {
        Ok(r) => Some(r.value),
        Err(Error::SupportViolation(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ExponentReport {
        epsilon,
        beta_exponent: slope(|p| p.beta_np_randomized),
        alpha_exponent: slope(|p| p.alpha_np_randomized),
        target_di_rate: target_di,
        target_l2_rate: target_l2,
        fit_ns: fit.iter().map(|p| p.n).collect(),
        points,
    })
}
