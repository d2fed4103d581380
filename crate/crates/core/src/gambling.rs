//! Horse-race gambling with causal side information.
//!
//! At race `i` the gambler has seen the past winners `x^{i-1}` and the side
//! information `y^i`, splits all wealth across the horses with fractions
//! `b(x_i | x^{i-1}, y^i)` and is paid `o(x_i | x^{i-1})` per unit on the
//! winner.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::causal::{posterior_row, step_terms};
use crate::error::{Error, Result};
use crate::info::{self, Direction};
use crate::model::{JointProcessModel, SequencePair};
use crate::prob::{check_capacity, plogp, Pmf};
use crate::sample::{replica_rng, sample_with};
use crate::walk::{self, for_each_pair, Context, MarginalTable, Step, Visitor};

/// Tolerance for checking that a bet vector lies on the simplex.
const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Payouts `o(x_i | x^{i-1}) > 0` per unit bet, depending on the last
/// `order` winners.
#[derive(Debug, Clone, PartialEq)]
pub struct Odds {
    size: usize,
    order: usize,
    offsets: Vec<usize>,
    table: Vec<f64>,
}

impl Odds {
    /// Fair odds: every horse pays `m` per unit, so uniform betting keeps
    /// wealth constant.
    pub fn fair(m: usize) -> Self {
        Odds { size: m, order: 0, offsets: vec![0], table: vec![m as f64; m] }
    }

    /// Builds odds from `f(x_history, x)` where the history holds the last
    /// `min(i - 1, order)` winners.
    pub fn from_fn(size: usize, order: usize, mut f: impl FnMut(&[usize], usize) -> f64) -> Result<Self> {
        let mut offsets = Vec::with_capacity(order + 1);
        let mut table = Vec::new();
        let mut hist = Vec::new();
        for len in 0..=order {
            offsets.push(table.len() / size);
            let count = size.checked_pow(len as u32).filter(|&c| c <= 1 << 20).ok_or(Error::Capacity {
                what: "odds contexts",
                required: u128::MAX,
                limit: 1 << 20,
            })?;
            for code in 0..count {
                walk::index_digits(code, size, len, &mut hist);
                for x in 0..size {
                    let o = f(&hist, x);
                    if !(o > 0.0 && o.is_finite()) {
                        return Err(Error::Domain(format!("odds {o} for horse {x} are not strictly positive")));
                    }
                    table.push(o);
                }
            }
        }
        Ok(Odds { size, order, offsets, table })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn payout(&self, x_past: &[usize], x: usize) -> f64 {
        let l = x_past.len().min(self.order);
        let ctx = walk::seq_index(&x_past[x_past.len() - l..], self.size);
        self.table[(self.offsets[l] + ctx) * self.size + x]
    }

    pub fn from_file(file: &OddsFile) -> Result<Self> {
        let mut rows: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        for (key, row) in &file.odds {
            let body = key
                .trim()
                .strip_prefix("x:")
                .ok_or_else(|| Error::Parse(format!("odds key {key:?} must start with 'x:'")))?;
            let hist: Vec<usize> = if body.trim().is_empty() {
                Vec::new()
            } else {
                body.split(',')
                    .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad symbol in odds key {key:?}"))))
                    .collect::<Result<_>>()?
            };
            if row.len() != file.size || hist.len() > file.order || hist.iter().any(|&h| h >= file.size) {
                return Err(Error::Parse(format!("odds row {key:?} does not fit size {} order {}", file.size, file.order)));
            }
            rows.insert(hist, row.clone());
        }
        let mut missing = None;
        let odds = Odds::from_fn(file.size, file.order, |h, x| match rows.get(h) {
            Some(r) => r[x],
            None => {
                missing.get_or_insert_with(|| h.to_vec());
                1.0
            }
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
        match missing {
            Some(h) => Err(Error::Parse(format!("odds table lacks history {h:?}"))),
            None => Ok(odds),
        }
    }
}

/// JSON form of a payout table, keyed by `"x:<history>"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddsFile {
    pub size: usize,
    pub order: usize,
    pub odds: BTreeMap<String, Vec<f64>>,
}

/// A causal betting rule `b(x_i | x^{i-1}, y^i)`.
pub trait BetStrategy {
    /// Writes the bet fractions for every horse given `x^{i-1}` and `y^i`.
    fn bets(&self, x_past: &[usize], y_upto: &[usize], out: &mut Vec<f64>);

    /// Same as [`bets`](Self::bets), given the walker's context at that node.
    fn context_bets(&self, c: &Context<'_>, out: &mut Vec<f64>) {
        self.bets(c.x_past, c.y, out)
    }

    /// `b(x_i | x^{i-1}, y^i)` for the realized winners of a whole path.
    fn path_bets(&self, s: &SequencePair) -> Vec<f64> {
        let mut row = Vec::new();
        (0..s.len())
            .map(|i| {
                self.bets(&s.x()[..i], &s.y()[..=i], &mut row);
                row[s.x()[i]]
            })
            .collect()
    }
}

/// Log-optimal strategy: bet the causally conditioned law `p(x_i | x^{i-1}, y^i)`.
#[derive(Debug, Clone, Copy)]
pub struct OptimalBets<'m> {
    model: &'m JointProcessModel,
}

pub fn optimal_bets(model: &JointProcessModel) -> OptimalBets<'_> {
    OptimalBets { model }
}

impl BetStrategy for OptimalBets<'_> {
    fn bets(&self, x_past: &[usize], y_upto: &[usize], out: &mut Vec<f64>) {
        let total = posterior_row(self.model, x_past, y_upto, out);
        if total == 0.0 {
            // Unreachable context: any simplex point is optimal.
            out.iter_mut().for_each(|v| *v = 1.0 / self.model.x_size() as f64);
        }
    }

    fn context_bets(&self, c: &Context<'_>, out: &mut Vec<f64>) {
        out.clear();
        if c.posterior.iter().sum::<f64>() > 0.0 {
            out.extend_from_slice(c.posterior);
        } else {
            out.resize(self.model.x_size(), 1.0 / self.model.x_size() as f64);
        }
    }

    fn path_bets(&self, s: &SequencePair) -> Vec<f64> {
        step_terms(self.model, s).expect("path within model alphabets").iter().map(|t| t.x_posterior).collect()
    }
}

/// Bet the same fraction on every horse.
#[derive(Debug, Clone, Copy)]
pub struct UniformBets {
    pub size: usize,
}

impl BetStrategy for UniformBets {
    fn bets(&self, _: &[usize], _: &[usize], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.size, 1.0 / self.size as f64);
    }
}

/// Log-optimal gambler without side information: `b = p(x_i | x^{i-1})`.
#[derive(Debug, Clone)]
pub struct MarginalBets<'m> {
    model: &'m JointProcessModel,
    /// Prefix marginals below a known start of length `base`, if tabulated.
    table: Option<(usize, MarginalTable)>,
}

impl<'m> MarginalBets<'m> {
    /// Exact prefix tables for horizons up to `n`.
    pub fn exact(model: &'m JointProcessModel, n: usize) -> Result<Self> {
        Ok(MarginalBets { model, table: Some((0, walk::x_marginals(model, n)?)) })
    }

    /// Tables conditioned on a known start `(x^w, y^w)`.
    pub fn exact_from(model: &'m JointProcessModel, x_prefix: &[usize], y_prefix: &[usize], n: usize) -> Result<Self> {
        let t = walk::x_marginals_from(model, x_prefix, y_prefix, n)?;
        Ok(MarginalBets { model, table: Some((x_prefix.len(), t)) })
    }

    /// Forward-filter evaluation, usable at any horizon.
    pub fn filtered(model: &'m JointProcessModel) -> Self {
        MarginalBets { model, table: None }
    }
}

impl BetStrategy for MarginalBets<'_> {
    fn bets(&self, x_past: &[usize], _: &[usize], out: &mut Vec<f64>) {
        let nx = self.model.x_size();
        out.clear();
        if let Some((base, t)) = &self.table {
            let rel = &x_past[*base..];
            if rel.len() < t.horizon() {
                let idx = walk::seq_index(rel, nx);
                let parent = t.level(rel.len())[idx];
                if parent > 0.0 {
                    out.extend((0..nx).map(|x| t.level(rel.len() + 1)[idx * nx + x] / parent));
                } else {
                    out.resize(nx, 1.0 / nx as f64);
                }
                return;
            }
        }
        let mut seq = x_past.to_vec();
        let base = walk::log2_marginal_x(self.model, &seq);
        for x in 0..nx {
            seq.push(x);
            let p = if base.is_finite() { (walk::log2_marginal_x(self.model, &seq) - base).exp2() } else { 0.0 };
            out.push(p);
            seq.pop();
        }
        if out.iter().sum::<f64>() == 0.0 {
            out.iter_mut().for_each(|v| *v = 1.0 / nx as f64);
        }
    }

    fn path_bets(&self, s: &SequencePair) -> Vec<f64> {
        walk::x_predictive_path(self.model, s.x())
    }
}

/// A base strategy with one context's bet on `symbol` shifted by `eps` and
/// the row renormalized.
#[derive(Debug, Clone)]
pub struct PerturbedBets<B> {
    pub base: B,
    pub x_past: Vec<usize>,
    pub y_upto: Vec<usize>,
    pub symbol: usize,
    pub eps: f64,
}

impl<B: BetStrategy> BetStrategy for PerturbedBets<B> {
    fn bets(&self, x_past: &[usize], y_upto: &[usize], out: &mut Vec<f64>) {
        self.base.bets(x_past, y_upto, out);
        if x_past == self.x_past.as_slice() && y_upto == self.y_upto.as_slice() {
            out[self.symbol] = (out[self.symbol] + self.eps).clamp(0.0, 1.0);
            let total: f64 = out.iter().sum();
            out.iter_mut().for_each(|v| *v /= total);
        }
    }
}

/// Closure-backed strategy.
pub struct FnBets<F>(pub F);

impl<F: Fn(&[usize], &[usize], &mut Vec<f64>)> BetStrategy for FnBets<F> {
    fn bets(&self, x_past: &[usize], y_upto: &[usize], out: &mut Vec<f64>) {
        (self.0)(x_past, y_upto, out)
    }
}

/// Law under which an expected log-wealth is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// The model's own joint law.
    Joint,
    /// `p(x^n) p(y^n || x^{n-1})`: side information generated from past
    /// winners only, so it carries nothing about the current race.
    MarginalXCausalY,
    /// `p(x^n) p(y^n)`: independent processes with the model's marginals.
    Product,
}

/// Expected or simulated log-wealth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub n: usize,
    /// `E log2 S_n` in bits; `-inf` on ruin.
    pub growth: f64,
    pub per_race: f64,
    /// A bet of zero was placed on an outcome of positive probability.
    pub ruin: bool,
    /// Standard error of `growth` (Monte Carlo only).
    pub std_error: Option<f64>,
}

impl GrowthReport {
    fn exact(n: usize, value: f64, ruin: bool) -> Self {
        let growth = if ruin { f64::NEG_INFINITY } else { value };
        GrowthReport { n, growth, per_race: growth / n as f64, ruin, std_error: None }
    }
}

struct GrowthVisitor<'a, B> {
    bets: &'a B,
    odds: &'a Odds,
    law: Law,
    px: Option<MarginalTable>,
    py: Option<MarginalTable>,
    base: usize,
    nx: usize,
    ny: usize,
    /// Bet rows per relative depth and current side symbol.
    cache: Vec<f64>,
    row: Vec<f64>,
    value: f64,
    ruin: bool,
}

impl<B> GrowthVisitor<'_, B> {
    fn report(&self, n: usize) -> GrowthReport {
        GrowthReport::exact(n, self.value, self.ruin)
    }
}

impl<B: BetStrategy> Visitor for GrowthVisitor<'_, B> {
    fn context(&mut self, c: &Context<'_>) -> Result<()> {
        self.bets.context_bets(c, &mut self.row);
        if self.row.len() != self.nx {
            return Err(Error::Domain(format!("bet vector has {} entries, expected {}", self.row.len(), self.nx)));
        }
        let total: f64 = self.row.iter().sum();
        if self.row.iter().any(|&b| !(b >= 0.0)) || (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Domain(format!("bets {:?} are not on the simplex", self.row)));
        }
        let depth = c.i - 1 - self.base;
        let y = c.y[c.i - 1];
        let at = (depth * self.ny + y) * self.nx;
        self.cache[at..at + self.nx].copy_from_slice(&self.row);
        Ok(())
    }

    fn step(&mut self, s: &Step<'_>) -> Result<()> {
        let depth = s.i - 1 - self.base;
        let weight = match self.law {
            Law::Joint => s.joint,
            Law::MarginalXCausalY => self.px.as_ref().expect("x table").level(depth + 1)[s.x_index] * s.y_delayed,
            Law::Product => {
                self.px.as_ref().expect("x table").level(depth + 1)[s.x_index] * self.py.as_ref().expect("y table").level(depth + 1)[s.y_index]
            }
        };
        if weight == 0.0 {
            return Ok(());
        }
        let (x, y) = (s.x[s.i - 1], s.y[s.i - 1]);
        let b = self.cache[(depth * self.ny + y) * self.nx + x];
        if b == 0.0 {
            self.ruin = true;
        } else {
            self.value += weight * (b * self.odds.payout(&s.x[..s.i - 1], x)).log2();
        }
        Ok(())
    }
}

fn check_odds(model: &JointProcessModel, odds: &Odds) -> Result<()> {
    if odds.size() != model.x_size() {
        return Err(Error::Argument(format!("odds cover {} horses, model has {}", odds.size(), model.x_size())));
    }
    Ok(())
}

/// Exact `E log2 S_n` under `law`, for races following a known start.
pub fn growth_under_from<B: BetStrategy>(
    model: &JointProcessModel,
    x_prefix: &[usize],
    y_prefix: &[usize],
    bets: &B,
    odds: &Odds,
    n: usize,
    law: Law,
) -> Result<GrowthReport> {
    let v = growth_visitor(model, x_prefix, y_prefix, bets, odds, n, law)?;
    let v = walk::walk_from(model, x_prefix, y_prefix, n, law == Law::Joint, v)?;
    Ok(v.report(n))
}

fn growth_visitor<'a, B: BetStrategy>(
    model: &JointProcessModel,
    x_prefix: &[usize],
    y_prefix: &[usize],
    bets: &'a B,
    odds: &'a Odds,
    n: usize,
    law: Law,
) -> Result<GrowthVisitor<'a, B>> {
    check_odds(model, odds)?;
    model.check_pair_capacity(n)?;
    let px = match law {
        Law::Joint => None,
        _ => Some(walk::x_marginals_from(model, x_prefix, y_prefix, n)?),
    };
    let py = match law {
        Law::Product => Some(walk::y_marginals_from(model, x_prefix, y_prefix, n)?),
        _ => None,
    };
    let (nx, ny) = (model.x_size(), model.y_size());
    Ok(GrowthVisitor {
        bets,
        odds,
        law,
        px,
        py,
        base: x_prefix.len(),
        nx,
        ny,
        cache: vec![0.0; n * nx * ny],
        row: Vec::with_capacity(nx),
        value: 0.0,
        ruin: false,
    })
}

/// Exact `E log2 S_n` under `law` from the first race.
pub fn growth_under<B: BetStrategy>(model: &JointProcessModel, bets: &B, odds: &Odds, n: usize, law: Law) -> Result<GrowthReport> {
    growth_under_from(model, &[], &[], bets, odds, n, law)
}

/// Exact expected log-wealth `W = E log2 S(X^n || Y^n)` under the model.
pub fn growth<B: BetStrategy>(model: &JointProcessModel, bets: &B, odds: &Odds, n: usize) -> Result<GrowthReport> {
    growth_under(model, bets, odds, n, Law::Joint)
}

/// Log-wealth `sum_i log2 b(x_i|x^{i-1},y^i) o(x_i|x^{i-1})` of one path;
/// the recursion `S_i = b o S_{i-1}` in log form.
pub fn log_wealth<B: BetStrategy>(bets: &B, odds: &Odds, s: &SequencePair) -> WealthTrace {
    let b = bets.path_bets(s);
    let mut log_wealth = Vec::with_capacity(s.len() + 1);
    let mut acc = 0.0;
    log_wealth.push(acc);
    let mut increments = Vec::with_capacity(s.len());
    for (i, &bi) in b.iter().enumerate() {
        let inc = if bi > 0.0 { (bi * odds.payout(&s.x()[..i], s.x()[i])).log2() } else { f64::NEG_INFINITY };
        increments.push(inc);
        acc += inc;
        log_wealth.push(acc);
    }
    WealthTrace { log_wealth, increments }
}

/// Wealth along a path: `log_wealth[0] = 0` (unit initial wealth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthTrace {
    pub log_wealth: Vec<f64>,
    pub increments: Vec<f64>,
}

impl WealthTrace {
    pub fn final_log_wealth(&self) -> f64 {
        *self.log_wealth.last().expect("trace holds S_0")
    }

    /// Wealth `S_i` in linear units (may underflow for long paths).
    pub fn wealth(&self, i: usize) -> f64 {
        self.log_wealth[i].exp2()
    }
}

/// Mean and standard error over replicas.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

fn check_replicas(n: usize, replicas: usize) -> Result<()> {
    if n == 0 || replicas == 0 {
        return Err(Error::Argument("Monte Carlo needs n >= 1 and at least one replica".into()));
    }
    Ok(())
}

/// Monte Carlo estimate of `E log2 S_n` from `replicas` independent paths.
pub fn growth_mc<B: BetStrategy>(
    model: &JointProcessModel,
    bets: &B,
    odds: &Odds,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<GrowthReport> {
    check_odds(model, odds)?;
    check_replicas(n, replicas)?;
    let mut finals = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let s = sample_with(model, n, &mut replica_rng(seed, r as u64))?;
        finals.push(log_wealth(bets, odds, &s).final_log_wealth());
    }
    if finals.iter().any(|v| v.is_infinite()) {
        return Ok(GrowthReport { n, growth: f64::NEG_INFINITY, per_race: f64::NEG_INFINITY, ruin: true, std_error: None });
    }
    let (mean, se) = mean_se(&finals);
    Ok(GrowthReport { n, growth: mean, per_race: mean / n as f64, ruin: false, std_error: Some(se) })
}

/// Growth gained from causal side information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthIncrease {
    pub n: usize,
    /// `W*(X^n || Y^n)` in bits.
    pub w_star_with_si: f64,
    /// `W*(X^n)` in bits.
    pub w_star_no_si: f64,
    /// `(W*(X^n||Y^n) - W*(X^n)) / n`.
    pub delta_w: f64,
    /// `I(Y^n -> X^n) / n`.
    pub di_rate: f64,
}

/// Tolerance of the growth-increase identity.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// `(W*(X^n||Y^n) - W*(X^n)) / n` under fair odds, checked against
/// `I(Y^n -> X^n) / n`.
pub fn growth_increase(model: &JointProcessModel, n: usize) -> Result<GrowthIncrease> {
    growth_increase_after(model, 0, n)
}

/// Growth increase over `n` races that follow `warmup` races whose outcomes
/// and side information are known to the gambler, averaged over the law of
/// that start. With `warmup = 1` the first symbol plays the part of an
/// observed initial state before the first race.
pub fn growth_increase_after(model: &JointProcessModel, warmup: usize, n: usize) -> Result<GrowthIncrease> {
    if n == 0 {
        return Err(Error::Argument("growth increase needs n >= 1".into()));
    }
    let odds = Odds::fair(model.x_size());
    let mut acc = GrowthIncrease { n, w_star_with_si: 0.0, w_star_no_si: 0.0, delta_w: 0.0, di_rate: 0.0 };
    let mut starts = Vec::new();
    if warmup == 0 {
        starts.push((Vec::new(), Vec::new(), 1.0));
    } else {
        for_each_pair(model, warmup, true, |s| {
            starts.push((s.x.to_vec(), s.y.to_vec(), s.joint));
            Ok(())
        })?;
    }
    let optimal = optimal_bets(model);
    for (xp, yp, w) in &starts {
        // One traversal feeds both gamblers and the causal entropy.
        let marginal = MarginalBets::exact_from(model, xp, yp, n)?;
        let with = growth_visitor(model, xp, yp, &optimal, &odds, n, Law::Joint)?;
        let without = growth_visitor(model, xp, yp, &marginal, &odds, n, Law::Joint)?;
        let (with, (without, h_causal)) =
            walk::walk_from(model, xp, yp, n, true, (with, (without, CausalEntropyX(0.0))))?;
        let h_x: f64 = {
            let t = walk::x_marginals_from(model, xp, yp, n)?;
            t.level(n).iter().map(|&p| plogp(p)).sum()
        };
        acc.w_star_with_si += w * with.report(n).growth;
        acc.w_star_no_si += w * without.report(n).growth;
        acc.di_rate += w * (h_x - h_causal.0) / n as f64;
    }
    acc.delta_w = (acc.w_star_with_si - acc.w_star_no_si) / n as f64;
    let residual = (acc.delta_w - acc.di_rate).abs();
    if !(residual <= IDENTITY_TOLERANCE) {
        return Err(Error::Identity { what: "growth increase equals the directed information rate", residual });
    }
    Ok(acc)
}

/// Accumulates `H(X^n || Y^n) = -E log2 p(X_i | X^{i-1}, Y^i)`.
struct CausalEntropyX(f64);

impl Visitor for CausalEntropyX {
    fn step(&mut self, s: &Step<'_>) -> Result<()> {
        if s.joint > 0.0 {
            self.0 -= s.joint * s.x_posterior.log2();
        }
        Ok(())
    }
}

/// Monte Carlo growth increase per race on common sampled paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McIncrease {
    pub races: usize,
    pub replicas: usize,
    pub per_race: f64,
    pub std_error: f64,
}

/// Simulates `replicas` paths of `n` races under fair odds and compares the
/// log-wealth of the side-information gambler with the one without.
pub fn growth_increase_mc(model: &JointProcessModel, n: usize, replicas: usize, seed: u64) -> Result<McIncrease> {
    check_replicas(n, replicas)?;
    let odds = Odds::fair(model.x_size());
    let with = optimal_bets(model);
    let without = MarginalBets::filtered(model);
    let mut diffs = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let s = sample_with(model, n, &mut replica_rng(seed, r as u64))?;
        let a = log_wealth(&with, &odds, &s).final_log_wealth();
        let b = log_wealth(&without, &odds, &s).final_log_wealth();
        diffs.push((a - b) / n as f64);
    }
    let (per_race, std_error) = mean_se(&diffs);
    Ok(McIncrease { races: n * replicas, replicas, per_race, std_error })
}

/// Growth lost by betting the causal conditional of `assumed` when the
/// truth is `p(x^n) p(y^n || x^{n-1})` of the same model, where the side
/// information is useless; compared with `L2(Y^n -> X^n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchPenalty {
    pub n: usize,
    /// `W*(X^n)` under the truth.
    pub w_star: f64,
    /// Growth of the mismatched bets under the truth (`-inf` on ruin).
    pub w_mismatched: f64,
    pub penalty: f64,
    pub ruin: bool,
    /// `L2(Y^n -> X^n)` of the assumed model.
    pub lautum2: f64,
    /// `L1(Y^n -> X^n)`, reported when the assumed side information is
    /// independent of the outcomes under the truth (order-0 models where
    /// the truth is the product law).
    pub lautum1: Option<f64>,
}

pub fn mismatched_growth_penalty(assumed: &JointProcessModel, n: usize) -> Result<MismatchPenalty> {
    let odds = Odds::fair(assumed.x_size());
    let truth = Law::MarginalXCausalY;
    let best = growth_under(assumed, &MarginalBets::exact(assumed, n)?, &odds, n, truth)?;
    let mism = growth_under(assumed, &optimal_bets(assumed), &odds, n, truth)?;
    let l2 = info::directed_lautum2(assumed, n, Direction::YToX, 0)?;
    // With no memory the truth p(x) p(y || x^{n-1}) is the product law.
    let l1 = if assumed.order() == 0 { Some(info::directed_lautum1(assumed, n, Direction::YToX, 0)?) } else { None };
    Ok(MismatchPenalty {
        n,
        w_star: best.growth,
        w_mismatched: mism.growth,
        penalty: best.growth - mism.growth,
        ruin: mism.ruin,
        lautum2: l2,
        lautum1: l1,
    })
}

/// Penalty of betting `p(x_i | x^{i-1}, y^i)` of `assumed` when pairs are
/// drawn from `truth`, relative to the truth's own no-side-information
/// optimum `W*(X^n)`. Meaningful when the truth's side information is
/// useless, so that `W*(X^n)` is the best achievable.
pub fn mismatched_growth_penalty_against(truth: &JointProcessModel, assumed: &JointProcessModel, n: usize) -> Result<f64> {
    if truth.x_size() != assumed.x_size() || truth.y_size() != assumed.y_size() {
        return Err(Error::Argument("truth and assumed models use different alphabets".into()));
    }
    let odds = Odds::fair(truth.x_size());
    let best = growth(truth, &MarginalBets::exact(truth, n)?, &odds, n)?;
    let mism = growth(truth, &optimal_bets(assumed), &odds, n)?;
    Ok(best.growth - mism.growth)
}

/// Conditions under which the lookahead formulas hold.
fn check_hidden_markov(model: &JointProcessModel) -> Result<()> {
    if model.order() > 1 {
        return Err(Error::Unsupported(format!("lookahead needs order <= 1, model has order {}", model.order())));
    }
    if !model.backward_ignores_y() {
        return Err(Error::Unsupported("lookahead needs a backward kernel free of side-information feedback".into()));
    }
    if !model.forward_memoryless() {
        return Err(Error::Unsupported("lookahead needs side information that depends on the current winner only".into()));
    }
    Ok(())
}

/// Transition matrix `P[a][b] = p(x_i = b | x_{i-1} = a)` of the winners.
fn transition(model: &JointProcessModel) -> Vec<Vec<f64>> {
    let nx = model.x_size();
    (0..nx)
        .map(|a| {
            if model.order() == 0 {
                model.backward(&[], &[]).to_vec()
            } else {
                model.backward(&[a], &[0]).to_vec()
            }
        })
        .collect()
}

/// Stationary distribution of a row-stochastic matrix (unique for an
/// irreducible chain).
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = p.len();
    // Solve pi (P - I) = 0 with one equation replaced by sum(pi) = 1.
    let a = nalgebra::DMatrix::from_fn(m, m, |r, c| if r == m - 1 { 1.0 } else { p[c][r] - if r == c { 1.0 } else { 0.0 } });
    let mut b = nalgebra::DVector::zeros(m);
    b[m - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Unsupported("winner chain has no unique stationary distribution".into()))?;
    let pi: Vec<f64> = pi.iter().map(|&v| v.max(0.0)).collect();
    Ok(Pmf::from_weights(&pi)?.probs().to_vec())
}

/// Entropies `H(Y^j | X_0)` (with `x0 = Some`) or `H(Y^j)` for
/// `j = 0..=len`, where `X_0` is stationary and `Y_j` observes `X_j`.
fn output_block_entropies(model: &JointProcessModel, len: usize, know_x0: bool) -> Result<Vec<f64>> {
    check_capacity("side-information blocks", model.y_alphabet().words(len))?;
    let p = transition(model);
    let pi = stationary_distribution(&p)?;
    let nx = model.x_size();
    let emit: Vec<Vec<f64>> = (0..nx).map(|x| model.forward(&[x], &[]).to_vec()).collect();
    let mut h = vec![0.0; len + 1];
    let starts: Vec<(f64, Vec<f64>)> = if know_x0 {
        (0..nx).filter(|&x| pi[x] > 0.0).map(|x| (pi[x], (0..nx).map(|b| if b == x { 1.0 } else { 0.0 }).collect())).collect()
    } else {
        vec![(1.0, pi.clone())]
    };
    for (w, alpha) in starts {
        let mut acc = vec![0.0; len + 1];
        block_rec(&p, &emit, &alpha, 1.0, len, 0, &mut acc);
        for (slot, v) in h.iter_mut().zip(acc) {
            *slot += w * v;
        }
    }
    Ok(h)
}

/// `alpha[x]` is `p(x_{j}, y^j)/mass`-style unnormalized state; accumulates
/// `-p log p` of every block probability by depth.
fn block_rec(p: &[Vec<f64>], emit: &[Vec<f64>], alpha: &[f64], mass: f64, len: usize, depth: usize, acc: &mut [f64]) {
    if depth == len {
        return;
    }
    let nx = alpha.len();
    // predicted state of the next winner
    let pred: Vec<f64> = (0..nx).map(|b| (0..nx).map(|a| alpha[a] * p[a][b]).sum()).collect();
    for y in 0..emit[0].len() {
        let next: Vec<f64> = (0..nx).map(|x| pred[x] * emit[x][y]).collect();
        let z: f64 = next.iter().sum();
        if z <= 0.0 {
            continue;
        }
        let m = mass * z;
        acc[depth + 1] += plogp(m);
        let normed: Vec<f64> = next.iter().map(|v| v / z).collect();
        block_rec(p, emit, &normed, m, len, depth + 1, acc);
    }
}

/// `H(Y_1 | X_1)` under the stationary law.
fn noise_entropy(model: &JointProcessModel) -> Result<f64> {
    let pi = stationary_distribution(&transition(model))?;
    Ok((0..model.x_size()).map(|x| pi[x] * crate::prob::entropy_bits(model.forward(&[x], &[]))).sum())
}

/// Growth increase per race when the gambler sees the side information of
/// the next `k` races as well: `H(Y_{k+1} | Y^k, X_0) - H(Y_1 | X_1)` in
/// the stationary regime.
pub fn lookahead_delta(model: &JointProcessModel, k: usize) -> Result<f64> {
    check_hidden_markov(model)?;
    let h = output_block_entropies(model, k + 1, true)?;
    Ok(h[k + 1] - h[k] - noise_entropy(model)?)
}

/// Bracket for the infinite-lookahead limit `lim H(Y^n)/n - H(Y_1|X_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookaheadLimit {
    /// `H(Y_{k+1} | Y^k, X_0) - H(Y_1|X_1)`, nondecreasing in `k`.
    pub lower: f64,
    /// `H(Y_{k+1} | Y^k) - H(Y_1|X_1)`, nonincreasing in `k`.
    pub upper: f64,
    pub k: usize,
    pub converged: bool,
}

impl LookaheadLimit {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Sandwiches the entropy rate of the side information between a lower
/// and an upper conditional entropy and stops once they meet within `tol`.
pub fn lookahead_limit(model: &JointProcessModel, tol: f64) -> Result<LookaheadLimit> {
    check_hidden_markov(model)?;
    let noise = noise_entropy(model)?;
    let mut best = None;
    for k in 0.. {
        if check_capacity("side-information blocks", model.y_alphabet().words(k + 1)).is_err() {
            break;
        }
        let lo = output_block_entropies(model, k + 1, true)?;
        let hi = output_block_entropies(model, k + 1, false)?;
        let r = LookaheadLimit {
            lower: lo[k + 1] - lo[k] - noise,
            upper: hi[k + 1] - hi[k] - noise,
            k,
            converged: false,
        };
        if r.upper - r.lower < tol {
            return Ok(LookaheadLimit { converged: true, ..r });
        }
        best = Some(r);
    }
    best.ok_or(Error::Capacity { what: "side-information blocks", required: u128::MAX, limit: crate::prob::ENUMERATION_LIMIT })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::prob::binary_entropy;

    #[test]
    fn example1_bet_after_a_win() {
        let m = fixtures::example1(0.8, 0.1).unwrap();
        let mut row = Vec::new();
        optimal_bets(&m).bets(&[0], &[1, 0], &mut row);
        assert!((row[0] - 0.72 / 0.74).abs() < 1e-12);
        // perfect side information
        let p = fixtures::example1(0.8, 0.0).unwrap();
        optimal_bets(&p).bets(&[0, 1], &[0, 1, 0], &mut row);
        assert_eq!(row, vec![1.0, 0.0]);
    }

    #[test]
    fn one_race_growth() {
        let m = fixtures::example1(0.8, 0.1).unwrap();
        let w = growth(&m, &optimal_bets(&m), &Odds::fair(2), 1).unwrap();
        assert!((w.growth - (1.0 - binary_entropy(0.9).unwrap())).abs() < 1e-12);
        let u = growth(&m, &UniformBets { size: 2 }, &Odds::fair(2), 4).unwrap();
        assert!(u.growth.abs() < 1e-12);
    }

    #[test]
    fn ruin_is_flagged() {
        let m = fixtures::independent_uniform(2, 2).unwrap();
        let all_on_zero = FnBets(|_: &[usize], _: &[usize], out: &mut Vec<f64>| {
            out.clear();
            out.extend([1.0, 0.0]);
        });
        let w = growth(&m, &all_on_zero, &Odds::fair(2), 2).unwrap();
        assert!(w.ruin && w.growth == f64::NEG_INFINITY);
    }

    #[test]
    fn warm_start_removes_the_first_race_transient() {
        let m = fixtures::example1(0.8, 0.1).unwrap();
        let target = fixtures::example1_rate(0.8, 0.1).unwrap();
        let cold = growth_increase(&m, 4).unwrap();
        let warm = growth_increase_after(&m, 1, 4).unwrap();
        assert!((warm.delta_w - target).abs() < 1e-12);
        assert!(cold.delta_w > target + 1e-3);
    }

    #[test]
    fn lookahead_zero_is_the_rate() {
        let m = fixtures::example1(0.8, 0.1).unwrap();
        let d = lookahead_delta(&m, 0).unwrap();
        assert!((d - fixtures::example1_rate(0.8, 0.1).unwrap()).abs() < 1e-12);
        let useless = fixtures::example1(0.8, 0.5).unwrap();
        for k in 0..4 {
            assert!(lookahead_delta(&useless, k).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn lookahead_needs_hidden_markov_structure() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let m = fixtures::random_model(&mut rng, 2, 2, 1).unwrap();
        assert!(matches!(lookahead_delta(&m, 1), Err(Error::Unsupported(_))));
        let m2 = fixtures::random_no_feedback(&mut rng, 2, 2, 2).unwrap();
        assert!(matches!(lookahead_delta(&m2, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn odds_tables() {
        let o = Odds::from_fn(2, 1, |h, x| if h.last() == Some(&x) { 1.5 } else { 3.0 }).unwrap();
        assert_eq!(o.payout(&[], 0), 3.0);
        assert_eq!(o.payout(&[1, 0], 0), 1.5);
        assert!(Odds::from_fn(2, 0, |_, _| 0.0).is_err());
        let file = OddsFile {
            size: 2,
            order: 0,
            odds: [("x:".to_string(), vec![2.0, 2.0])].into_iter().collect(),
        };
        assert_eq!(Odds::from_file(&file).unwrap(), Odds::fair(2));
    }
}
