//! Stationary finite-order Markov laws for a pair process `(X, Y)`.
//!
//! The joint law is factored into a backward kernel `p(x_i | x^{i-1}, y^{i-1})`
//! and a forward kernel `p(y_i | x^i, y^{i-1})`. Both kernels look at the last
//! `order` symbols of each history. Near the start the histories are shorter
//! than `order`, and those truncated histories are distinct contexts with
//! their own entries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{check_capacity, Alphabet, Pmf, PMF_TOLERANCE};

/// Upper bound on the number of kernel contexts a model may declare.
pub const MAX_CONTEXTS: u128 = 1 << 20;

/// Dense conditional table `context -> pmf`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Kernel {
    out: usize,
    x_size: usize,
    y_size: usize,
    /// 0 for the backward kernel, 1 for the forward kernel (which also sees x_i).
    x_extra: usize,
    offsets: Vec<usize>,
    probs: Vec<f64>,
}

impl Kernel {
    fn contexts_at(x_size: usize, y_size: usize, x_extra: usize, len: usize) -> usize {
        x_size.pow((len + x_extra) as u32) * y_size.pow(len as u32)
    }

    fn build<F>(x_size: usize, y_size: usize, out: usize, order: usize, x_extra: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize], &[usize]) -> Result<Pmf>,
    {
        let mut offsets = Vec::with_capacity(order + 1);
        let mut total = 0usize;
        for len in 0..=order {
            offsets.push(total);
            total += Self::contexts_at(x_size, y_size, x_extra, len);
        }
        let mut probs = Vec::with_capacity(total * out);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for len in 0..=order {
            let n_ctx = Self::contexts_at(x_size, y_size, x_extra, len);
            for code in 0..n_ctx {
                decode_context(code, x_size, y_size, len + x_extra, len, &mut xs, &mut ys);
                let pmf = f(&xs, &ys)?;
                if pmf.len() != out {
                    return Err(Error::Domain(format!(
                        "pmf for context {} has {} entries, expected {out}",
                        context_key(&xs, &ys),
                        pmf.len()
                    )));
                }
                probs.extend_from_slice(pmf.probs());
            }
        }
        Ok(Kernel { out, x_size, y_size, x_extra, offsets, probs })
    }

    #[inline]
    fn index(&self, xs: &[usize], ys: &[usize]) -> usize {
        debug_assert_eq!(xs.len(), ys.len() + self.x_extra);
        let mut code = 0usize;
        for &x in xs {
            code = code * self.x_size + x;
        }
        for &y in ys {
            code = code * self.y_size + y;
        }
        self.offsets[ys.len()] + code
    }

    /// Index of the context `xs ++ [last]`, `ys` (forward kernel only).
    #[inline]
    fn index_with(&self, xs: &[usize], last: usize, ys: &[usize]) -> usize {
        debug_assert_eq!(xs.len() + 1, ys.len() + self.x_extra);
        let mut code = 0usize;
        for &x in xs {
            code = code * self.x_size + x;
        }
        code = code * self.x_size + last;
        for &y in ys {
            code = code * self.y_size + y;
        }
        self.offsets[ys.len()] + code
    }

    #[inline]
    fn row(&self, index: usize) -> &[f64] {
        &self.probs[index * self.out..(index + 1) * self.out]
    }

    fn context_count(&self) -> usize {
        self.probs.len() / self.out
    }

    /// Visits every context as `(index, x-history, y-history, pmf)`.
    fn for_each(&self, order: usize, mut f: impl FnMut(usize, &[usize], &[usize], &[f64])) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for len in 0..=order {
            let n_ctx = Self::contexts_at(self.x_size, self.y_size, self.x_extra, len);
            for code in 0..n_ctx {
                decode_context(code, self.x_size, self.y_size, len + self.x_extra, len, &mut xs, &mut ys);
                let idx = self.offsets[len] + code;
                f(idx, &xs, &ys, self.row(idx));
            }
        }
    }
}

fn decode_context(
    mut code: usize,
    x_size: usize,
    y_size: usize,
    x_len: usize,
    y_len: usize,
    xs: &mut Vec<usize>,
    ys: &mut Vec<usize>,
) {
    ys.clear();
    ys.resize(y_len, 0);
    for slot in ys.iter_mut().rev() {
        *slot = code % y_size;
        code /= y_size;
    }
    xs.clear();
    xs.resize(x_len, 0);
    for slot in xs.iter_mut().rev() {
        *slot = code % x_size;
        code /= x_size;
    }
}

/// Joint law of a pair process with finite memory.
#[derive(Debug, Clone, PartialEq)]
pub struct JointProcessModel {
    x_alphabet: Alphabet,
    y_alphabet: Alphabet,
    order: usize,
    backward: Kernel,
    forward: Kernel,
}

impl JointProcessModel {
    /// Builds a model from two kernel functions.
    ///
    /// `backward(xs, ys)` receives the truncated pasts `x_{i-L..i-1}` and
    /// `y_{i-L..i-1}` with `L = min(i - 1, order)`; `forward(xs, ys)` receives
    /// `x_{i-L..i}` (ending with the current symbol) and the same `y` past.
    pub fn from_fns<B, F>(
        x_alphabet: Alphabet,
        y_alphabet: Alphabet,
        order: usize,
        mut backward: B,
        mut forward: F,
    ) -> Result<Self>
    where
        B: FnMut(&[usize], &[usize]) -> Pmf,
        F: FnMut(&[usize], &[usize]) -> Pmf,
    {
        Self::try_from_fns(x_alphabet, y_alphabet, order, |x, y| Ok(backward(x, y)), |x, y| {
            Ok(forward(x, y))
        })
    }

    pub fn try_from_fns<B, F>(
        x_alphabet: Alphabet,
        y_alphabet: Alphabet,
        order: usize,
        backward: B,
        forward: F,
    ) -> Result<Self>
    where
        B: FnMut(&[usize], &[usize]) -> Result<Pmf>,
        F: FnMut(&[usize], &[usize]) -> Result<Pmf>,
    {
        let (xs, ys) = (x_alphabet.size(), y_alphabet.size());
        let forward_contexts = x_alphabet
            .words(order + 1)
            .and_then(|a| y_alphabet.words(order).and_then(|b| a.checked_mul(b)));
        match forward_contexts {
            Some(c) if c <= MAX_CONTEXTS => {}
            other => {
                return Err(Error::Capacity {
                    what: "kernel contexts",
                    required: other.unwrap_or(u128::MAX),
                    limit: MAX_CONTEXTS,
                })
            }
        }
        let backward = Kernel::build(xs, ys, xs, order, 0, backward)?;
        let forward = Kernel::build(xs, ys, ys, order, 1, forward)?;
        Ok(JointProcessModel { x_alphabet, y_alphabet, order, backward, forward })
    }

    pub fn x_alphabet(&self) -> Alphabet {
        self.x_alphabet
    }

    pub fn y_alphabet(&self) -> Alphabet {
        self.y_alphabet
    }

    #[inline]
    pub fn x_size(&self) -> usize {
        self.x_alphabet.size()
    }

    #[inline]
    pub fn y_size(&self) -> usize {
        self.y_alphabet.size()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `p(x_i | x^{i-1}, y^{i-1})`; the pasts may be full prefixes.
    #[inline]
    pub fn backward(&self, x_past: &[usize], y_past: &[usize]) -> &[f64] {
        self.backward.row(self.backward_index(x_past, y_past))
    }

    /// `p(y_i | x^i, y^{i-1})`; `x_upto` ends with the current symbol `x_i`.
    #[inline]
    pub fn forward(&self, x_upto: &[usize], y_past: &[usize]) -> &[f64] {
        debug_assert_eq!(x_upto.len(), y_past.len() + 1);
        let l = y_past.len().min(self.order);
        let xs = &x_upto[x_upto.len() - l - 1..];
        let ys = &y_past[y_past.len() - l..];
        self.forward.row(self.forward.index(xs, ys))
    }

    /// Same as [`Self::forward`] with the current symbol `x` passed apart
    /// from the past `x^{i-1}`.
    #[inline]
    pub fn forward_next(&self, x_past: &[usize], x: usize, y_past: &[usize]) -> &[f64] {
        debug_assert_eq!(x_past.len(), y_past.len());
        let l = y_past.len().min(self.order);
        let idx = self.forward.index_with(&x_past[x_past.len() - l..], x, &y_past[y_past.len() - l..]);
        self.forward.row(idx)
    }

    /// Dense index of the backward context of a (possibly full) past.
    #[inline]
    pub fn backward_index(&self, x_past: &[usize], y_past: &[usize]) -> usize {
        debug_assert_eq!(x_past.len(), y_past.len());
        let l = x_past.len().min(self.order);
        self.backward
            .index(&x_past[x_past.len() - l..], &y_past[y_past.len() - l..])
    }

    pub fn backward_context_count(&self) -> usize {
        self.backward.context_count()
    }

    /// Visits every backward context as `(index, x-history, y-history)`.
    pub fn for_each_backward_context(&self, mut f: impl FnMut(usize, &[usize], &[usize])) {
        self.backward.for_each(self.order, |idx, xs, ys, _| f(idx, xs, ys));
    }

    /// Whether `p(x_i | x^{i-1}, y^{i-1})` ignores the `y` past.
    pub fn backward_ignores_y(&self) -> bool {
        let mut first: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        let mut ok = true;
        self.backward.for_each(self.order, |_, xs, _, row| {
            let entry = first.entry(xs.to_vec()).or_insert_with(|| row.to_vec());
            if entry.iter().zip(row).any(|(a, b)| (a - b).abs() > PMF_TOLERANCE) {
                ok = false;
            }
        });
        ok
    }

    /// Whether `p(y_i | x^i, y^{i-1})` depends on `x_i` alone.
    pub fn forward_memoryless(&self) -> bool {
        let mut first: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut ok = true;
        self.forward.for_each(self.order, |_, xs, _, row| {
            let current = *xs.last().expect("forward context holds x_i");
            let entry = first.entry(current).or_insert_with(|| row.to_vec());
            if entry.iter().zip(row).any(|(a, b)| (a - b).abs() > PMF_TOLERANCE) {
                ok = false;
            }
        });
        ok
    }

    /// Checks a sequence pair against the alphabets.
    pub fn check_pair(&self, s: &SequencePair) -> Result<()> {
        for &x in s.x() {
            self.x_alphabet.check(x)?;
        }
        for &y in s.y() {
            self.y_alphabet.check(y)?;
        }
        Ok(())
    }

    /// Fails unless `|X|^n |Y|^n` fits the enumeration guard.
    pub fn check_pair_capacity(&self, n: usize) -> Result<u128> {
        let count = self
            .x_alphabet
            .words(n)
            .and_then(|a| self.y_alphabet.words(n).and_then(|b| a.checked_mul(b)));
        check_capacity("sequence pairs", count)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            x_alphabet: self.x_size(),
            y_alphabet: self.y_size(),
            order: self.order,
            backward: table_to_map(&self.backward, self.order),
            forward: table_to_map(&self.forward, self.order),
            meta: None,
        }
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        let x_alphabet = Alphabet::new(file.x_alphabet)?;
        let y_alphabet = Alphabet::new(file.y_alphabet)?;
        let backward = parse_table(&file.backward, "backward", file.x_alphabet, file.y_alphabet, 0, file.order)?;
        let forward = parse_table(&file.forward, "forward", file.x_alphabet, file.y_alphabet, 1, file.order)?;
        let model = Self::try_from_fns(
            x_alphabet,
            y_alphabet,
            file.order,
            |xs, ys| lookup(&backward, "backward", xs, ys),
            |xs, ys| lookup(&forward, "forward", xs, ys),
        )?;
        let expected_b = model.backward.context_count();
        let expected_f = model.forward.context_count();
        if backward.len() != expected_b || forward.len() != expected_f {
            return Err(Error::Parse(format!(
                "kernel tables declare {} backward and {} forward contexts, expected {expected_b} and {expected_f}",
                backward.len(),
                forward.len()
            )));
        }
        Ok(model)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("model JSON: {e}")))?;
        Self::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serialization")
    }
}

type ParsedTable = BTreeMap<(Vec<usize>, Vec<usize>), Pmf>;

fn table_to_map(kernel: &Kernel, order: usize) -> BTreeMap<String, Vec<f64>> {
    let mut map = BTreeMap::new();
    kernel.for_each(order, |_, xs, ys, row| {
        map.insert(context_key(xs, ys), row.to_vec());
    });
    map
}

fn parse_table(
    map: &BTreeMap<String, Vec<f64>>,
    name: &str,
    x_size: usize,
    y_size: usize,
    x_extra: usize,
    order: usize,
) -> Result<ParsedTable> {
    let mut out = BTreeMap::new();
    for (key, probs) in map {
        let (xs, ys) = parse_context_key(key)?;
        if ys.len() > order || xs.len() != ys.len() + x_extra {
            return Err(Error::Parse(format!(
                "{name} context {key:?} has the wrong history lengths for order {order}"
            )));
        }
        if xs.iter().any(|&x| x >= x_size) || ys.iter().any(|&y| y >= y_size) {
            return Err(Error::Parse(format!("{name} context {key:?} has out-of-alphabet symbols")));
        }
        let pmf = Pmf::new(probs.clone())
            .map_err(|e| Error::Parse(format!("{name} context {key:?}: {e}")))?;
        if out.insert((xs, ys), pmf).is_some() {
            return Err(Error::Parse(format!("{name} context {key:?} given twice")));
        }
    }
    Ok(out)
}

fn lookup(table: &ParsedTable, name: &str, xs: &[usize], ys: &[usize]) -> Result<Pmf> {
    table
        .get(&(xs.to_vec(), ys.to_vec()))
        .cloned()
        .ok_or_else(|| Error::Parse(format!("{name} kernel is missing context {:?}", context_key(xs, ys))))
}

/// Canonical context key such as `"x:0,1|y:1"`.
pub fn context_key(xs: &[usize], ys: &[usize]) -> String {
    let mut s = String::from("x:");
    join_into(&mut s, xs);
    s.push_str("|y:");
    join_into(&mut s, ys);
    s
}

fn join_into(s: &mut String, symbols: &[usize]) {
    for (i, v) in symbols.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").unwrap();
    }
}

/// Parses `"x:0,1|y:1"` into its two symbol lists. Whitespace is ignored.
pub fn parse_context_key(key: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let compact: String = key.chars().filter(|c| !c.is_whitespace()).collect();
    let (xpart, ypart) = compact
        .split_once('|')
        .ok_or_else(|| Error::Parse(format!("context key {key:?} lacks '|'")))?;
    let xs = xpart
        .strip_prefix("x:")
        .ok_or_else(|| Error::Parse(format!("context key {key:?} must start with 'x:'")))?;
    let ys = ypart
        .strip_prefix("y:")
        .ok_or_else(|| Error::Parse(format!("context key {key:?} lacks 'y:'")))?;
    Ok((parse_symbols(xs, key)?, parse_symbols(ys, key)?))
}

fn parse_symbols(part: &str, key: &str) -> Result<Vec<usize>> {
    if part.is_empty() {
        return Ok(Vec::new());
    }
    part.split(',')
        .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad symbol {t:?} in {key:?}"))))
        .collect()
}

/// JSON form of a [`JointProcessModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub x_alphabet: usize,
    pub y_alphabet: usize,
    pub order: usize,
    pub backward: BTreeMap<String, Vec<f64>>,
    pub forward: BTreeMap<String, Vec<f64>>,
    /// Free-form annotations (e.g. generator parameters and targets).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl ModelFile {
    /// Re-renders all keys canonically, keeping `meta`.
    pub fn canonicalize(&self) -> Result<ModelFile> {
        let model = JointProcessModel::from_file(self)?;
        let mut file = model.to_file();
        file.meta = self.meta.clone();
        Ok(file)
    }
}

/// A realized pair `(x^n, y^n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SequencePair {
    x: Vec<usize>,
    y: Vec<usize>,
}

impl SequencePair {
    pub fn new(x: Vec<usize>, y: Vec<usize>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Domain(format!(
                "sequence lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Ok(SequencePair { x, y })
    }

    pub fn x(&self) -> &[usize] {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}
