//! Log-optimal portfolios over finite-support stock markets.
//!
//! A market outcome is a vector of price relatives (closing over opening
//! price). A portfolio `b` on the simplex multiplies wealth by `b^T x`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{self, Direction};
use crate::model::{JointProcessModel, ModelFile};
use crate::prob::{kl_divergence, Alphabet, Pmf};
use crate::walk::{self, OnContext};

/// Largest number of support vectors (the symbol alphabet of the market).
pub const MAX_SUPPORT: usize = crate::prob::DEFAULT_MAX_ALPHABET;

/// Tolerance of the KKT certificate.
pub const KKT_TOLERANCE: f64 = 1e-6;

/// Simplex tolerance for portfolio weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `max_k E[X_k / b^T X] - 1`, an upper bound on the
    /// optimality gap in nats, falls below this.
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { gap_tol: 1e-13, max_iter: 100_000 }
    }
}

/// A point on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    weights: Vec<f64>,
}

impl Portfolio {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Domain(format!("portfolio {weights:?} is not on the simplex")));
        }
        Ok(Portfolio { weights })
    }

    pub fn uniform(m: usize) -> Self {
        Portfolio { weights: vec![1.0 / m as f64; m] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Result of a log-optimal solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogOptimal {
    pub portfolio: Portfolio,
    /// `E log2 b^T X` in bits.
    pub growth: f64,
    pub iterations: usize,
    /// Worst violation of `E[X_k / b^T X] <= 1` (all k) and `= 1` (b_k > 0).
    pub kkt_residual: f64,
    /// Growth after every accepted step, in bits.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn check_market(pmf: &[f64], support: &[Vec<f64>]) -> Result<usize> {
    let m = support.first().map(Vec::len).unwrap_or(0);
    if support.is_empty() || m == 0 {
        return Err(Error::Domain("market needs at least one outcome and one stock".into()));
    }
    if pmf.len() != support.len() {
        return Err(Error::Domain(format!("pmf has {} entries for {} outcomes", pmf.len(), support.len())));
    }
    for (j, x) in support.iter().enumerate() {
        if x.len() != m {
            return Err(Error::Domain(format!("outcome {j} has {} components, expected {m}", x.len())));
        }
        if x.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!("outcome {j} has a negative or non-finite price relative")));
        }
        if pmf[j] > 0.0 && x.iter().all(|&v| v == 0.0) {
            return Err(Error::Domain(format!("outcome {j} wipes out every portfolio but has positive probability")));
        }
    }
    Ok(m)
}

/// `E ln b^T X` and the gradient `E[X / b^T X]`.
fn objective(pmf: &[f64], support: &[Vec<f64>], b: &[f64], grad: Option<&mut Vec<f64>>) -> f64 {
    let mut f = 0.0;
    let mut g = grad;
    if let Some(g) = g.as_deref_mut() {
        g.clear();
        g.resize(b.len(), 0.0);
    }
    for (p, x) in pmf.iter().zip(support) {
        if *p == 0.0 {
            continue;
        }
        let r: f64 = b.iter().zip(x).map(|(bi, xi)| bi * xi).sum();
        if r <= 0.0 {
            return f64::NEG_INFINITY;
        }
        f += p * r.ln();
        if let Some(g) = g.as_deref_mut() {
            for (gk, xk) in g.iter_mut().zip(x) {
                *gk += p * xk / r;
            }
        }
    }
    f
}

fn kkt_residual(b: &[f64], g: &[f64]) -> f64 {
    b.iter().zip(g).fold(0.0f64, |acc, (&bk, &gk)| {
        let v = if bk > 0.0 { (gk - 1.0).abs() } else { (gk - 1.0).max(0.0) };
        acc.max(v)
    })
}

/// Maximizes `E log b^T X` by projected gradient ascent with a backtracking
/// (Armijo) line search, started from the uniform portfolio.
pub fn log_optimal_with(pmf: &Pmf, support: &[Vec<f64>], opts: SolverOptions) -> Result<LogOptimal> {
    let p = pmf.probs();
    let m = check_market(p, support)?;
    let mut b = vec![1.0 / m as f64; m];
    let mut g = Vec::with_capacity(m);
    let mut f = objective(p, support, &b, Some(&mut g));
    let mut trace = vec![f / std::f64::consts::LN_2];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut gtrial = Vec::with_capacity(m);
    loop {
        let gap = g.iter().copied().fold(f64::NEG_INFINITY, f64::max) - 1.0;
        let kkt = kkt_residual(&b, &g);
        if gap <= opts.gap_tol && kkt <= KKT_TOLERANCE {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence { iterations, residual: gap.max(kkt) });
        }
        iterations += 1;
        let mut accepted = false;
        while step > 1e-30 {
            let trial: Vec<f64> = project_simplex(&b.iter().zip(&g).map(|(bi, gi)| bi + step * gi).collect::<Vec<_>>());
            let ft = objective(p, support, &trial, Some(&mut gtrial));
            let ascent: f64 = g.iter().zip(trial.iter().zip(&b)).map(|(gi, (ti, bi))| gi * (ti - bi)).sum();
            if ft.is_finite() && ft >= f + 1e-4 * ascent && ft >= f {
                // Moving along a zero ascent direction means we are at a
                // stationary point of the projected step.
                let stalled = trial == b;
                b = trial;
                f = ft;
                std::mem::swap(&mut g, &mut gtrial);
                step = (step * 2.0).min(1e12);
                accepted = !stalled;
                break;
            }
            step *= 0.5;
        }
        trace.push(f / std::f64::consts::LN_2);
        if !accepted {
            // No further ascent possible at machine precision.
            let kkt = kkt_residual(&b, &g);
            if kkt <= KKT_TOLERANCE {
                break;
            }
            return Err(Error::NonConvergence { iterations, residual: kkt });
        }
    }
    Ok(LogOptimal {
        kkt_residual: kkt_residual(&b, &g),
        portfolio: Portfolio { weights: b },
        growth: f / std::f64::consts::LN_2,
        iterations,
        trace,
    })
}

pub fn log_optimal(pmf: &Pmf, support: &[Vec<f64>]) -> Result<LogOptimal> {
    log_optimal_with(pmf, support, SolverOptions::default())
}

/// `E_f log2 b^T X` for a given portfolio; `-inf` if some likely outcome
/// wipes the portfolio out.
pub fn expected_growth(pmf: &[f64], support: &[Vec<f64>], b: &[f64]) -> f64 {
    objective(pmf, support, b, None) / std::f64::consts::LN_2
}

/// Loss from optimizing for `g` when outcomes follow `f`, with its
/// divergence bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlBound {
    /// `E_f log b_f^T X - E_f log b_g^T X`.
    pub delta_w: f64,
    /// `D(f || g)`.
    pub divergence: f64,
}

/// Checks `0 <= delta_w <= D(f||g)` (slack 1e-8).
pub fn kl_mismatch_bound_check(f: &Pmf, g: &Pmf, support: &[Vec<f64>]) -> Result<KlBound> {
    let divergence = kl_divergence(f.probs(), g.probs())?;
    let bf = log_optimal(f, support)?;
    let bg = log_optimal(g, support)?;
    let delta_w = bf.growth - expected_growth(f.probs(), support, bg.portfolio.weights());
    if !(delta_w >= -1e-8 && delta_w <= divergence + 1e-8) {
        return Err(Error::Identity { what: "0 <= growth loss <= D(f||g)", residual: delta_w - divergence });
    }
    Ok(KlBound { delta_w, divergence })
}

/// A market whose outcome at each period is one of finitely many price
/// relative vectors, indexed jointly with side information by a
/// [`JointProcessModel`] over support indices.
#[derive(Debug, Clone, PartialEq)]
pub struct StockMarketModel {
    support: Vec<Vec<f64>>,
    model: JointProcessModel,
}

impl StockMarketModel {
    pub fn new(support: Vec<Vec<f64>>, model: JointProcessModel) -> Result<Self> {
        if support.len() != model.x_size() {
            return Err(Error::Domain(format!(
                "{} support vectors but the index process has {} symbols",
                support.len(),
                model.x_size()
            )));
        }
        check_market(&vec![1.0; support.len()], &support)?;
        Ok(StockMarketModel { support, model })
    }

    /// Horse race with payout `odds[k]` on horse `k`: outcome `k` is the
    /// basis vector scaled by its payout.
    pub fn horse_race(model: JointProcessModel, odds: &[f64]) -> Result<Self> {
        let m = model.x_size();
        if odds.len() != m {
            return Err(Error::Domain("one payout per horse is required".into()));
        }
        let support = (0..m).map(|k| (0..m).map(|j| if j == k { odds[k] } else { 0.0 }).collect()).collect();
        Self::new(support, model)
    }

    pub fn stocks(&self) -> usize {
        self.support[0].len()
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn model(&self) -> &JointProcessModel {
        &self.model
    }

    pub fn from_file(file: &MarketFile) -> Result<Self> {
        let mf = ModelFile {
            x_alphabet: file.support.len(),
            y_alphabet: file.y_alphabet,
            order: file.order,
            backward: file.kernel.clone(),
            forward: file.side_info.clone(),
            meta: None,
        };
        Alphabet::with_max(file.support.len(), MAX_SUPPORT)?;
        Self::new(file.support.clone(), JointProcessModel::from_file(&mf)?)
    }

    pub fn to_file(&self) -> MarketFile {
        let mf = self.model.to_file();
        MarketFile {
            support: self.support.clone(),
            y_alphabet: mf.y_alphabet,
            order: mf.order,
            kernel: mf.backward,
            side_info: mf.forward,
            meta: None,
        }
    }
}

/// JSON form of a [`StockMarketModel`]. `kernel` and `side_info` use the
/// model file's context keys with `x` ranging over support indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketFile {
    pub support: Vec<Vec<f64>>,
    pub y_alphabet: usize,
    pub order: usize,
    pub kernel: BTreeMap<String, Vec<f64>>,
    pub side_info: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

/// Optimal growth with and without side information and the directed
/// information bound on their gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n: usize,
    /// `W*(X^n || Y^n)` in bits.
    pub w_with_si: f64,
    /// `W*(X^n)` in bits.
    pub w_no_si: f64,
    pub gap: f64,
    /// `I(Y^n -> X^n)` over the support-index process.
    pub directed_info: f64,
    /// `gap <= directed_info + 1e-6`.
    pub bound_ok: bool,
    pub kkt_max: f64,
    pub solves: usize,
}

/// Memoized per-context solver keyed by the exact conditional pmf.
struct Solver<'a> {
    support: &'a [Vec<f64>],
    cache: HashMap<Vec<u64>, f64>,
    kkt_max: f64,
    solves: usize,
}

impl Solver<'_> {
    fn growth(&mut self, pmf: &[f64]) -> Result<f64> {
        let key: Vec<u64> = pmf.iter().map(|p| p.to_bits()).collect();
        if let Some(&g) = self.cache.get(&key) {
            return Ok(g);
        }
        let sol = log_optimal(&Pmf::from_weights(pmf)?, self.support)?;
        self.kkt_max = self.kkt_max.max(sol.kkt_residual);
        self.solves += 1;
        self.cache.insert(key, sol.growth);
        Ok(sol.growth)
    }
}

/// `W*(X^n||Y^n) - W*(X^n)` from per-context log-optimal portfolios,
/// compared with `I(Y^n -> X^n)`.
pub fn growth_gap_vs_directed_info(market: &StockMarketModel, n: usize) -> Result<GapReport> {
    let model = &market.model;
    model.check_pair_capacity(n)?;
    let mut solver = Solver { support: &market.support, cache: HashMap::new(), kkt_max: 0.0, solves: 0 };
    let mut with = 0.0;
    walk::walk(
        model,
        n,
        true,
        OnContext(|c: &walk::Context<'_>| {
            if c.prob > 0.0 {
                with += c.prob * solver.growth(c.posterior)?;
            }
            Ok(())
        }),
    )?;
    let px = walk::x_marginals(model, n)?;
    let nx = model.x_size();
    let mut without = 0.0;
    let mut row = vec![0.0; nx];
    for i in 0..n {
        for (idx, &p) in px.level(i).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (x, slot) in row.iter_mut().enumerate() {
                *slot = px.level(i + 1)[idx * nx + x] / p;
            }
            without += p * solver.growth(&row)?;
        }
    }
    let di = info::directed_info(model, n, Direction::YToX, 0)?;
    let gap = with - without;
    Ok(GapReport {
        n,
        w_with_si: with,
        w_no_si: without,
        gap,
        directed_info: di,
        bound_ok: gap <= di + 1e-6,
        kkt_max: solver.kkt_max,
        solves: solver.solves,
    })
}
