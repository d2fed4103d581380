//! Brute-force oracle: the joint table of all pairs of length `n`, with every
//! conditional obtained by summing that table over prefixes. It shares no
//! code with the library beyond reading the kernels.
#![allow(dead_code)]

use std::collections::HashMap;

use dirinfo::JointProcessModel;

pub struct Brute {
    pub n: usize,
    pub nx: usize,
    pub ny: usize,
    /// `(x^n, y^n, p(x^n, y^n))` for every pair, zero-probability ones included.
    pub pairs: Vec<(Vec<usize>, Vec<usize>, f64)>,
    /// `p(x^a, y^b)` keyed by the two prefixes.
    prefix: HashMap<(Vec<usize>, Vec<usize>), f64>,
}

fn digits(mut code: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut v = vec![0; len];
    for slot in v.iter_mut().rev() {
        *slot = code % radix;
        code /= radix;
    }
    v
}

impl Brute {
    pub fn new(model: &JointProcessModel, n: usize) -> Self {
        let (nx, ny) = (model.x_size(), model.y_size());
        let mut pairs = Vec::new();
        for xc in 0..nx.pow(n as u32) {
            let x = digits(xc, nx, n);
            for yc in 0..ny.pow(n as u32) {
                let y = digits(yc, ny, n);
                let mut p = 1.0;
                for i in 0..n {
                    p *= model.backward(&x[..i], &y[..i])[x[i]];
                    p *= model.forward(&x[..=i], &y[..i])[y[i]];
                }
                pairs.push((x.clone(), y, p));
            }
        }
        let mut prefix = HashMap::new();
        for (x, y, p) in &pairs {
            for a in 0..=n {
                for b in 0..=n {
                    *prefix.entry((x[..a].to_vec(), y[..b].to_vec())).or_insert(0.0) += p;
                }
            }
        }
        Brute { n, nx, ny, pairs, prefix }
    }

    pub fn p(&self, x: &[usize], y: &[usize]) -> f64 {
        self.prefix[&(x.to_vec(), y.to_vec())]
    }

    pub fn px(&self, x: &[usize]) -> f64 {
        self.p(x, &[])
    }

    pub fn py(&self, y: &[usize]) -> f64 {
        self.p(&[], y)
    }

    /// `p(y^n || x^{n-d})`.
    pub fn y_given_x(&self, x: &[usize], y: &[usize], d: usize) -> f64 {
        (1..=y.len())
            .map(|i| {
                let xs = &x[..i.saturating_sub(d)];
                ratio(self.p(xs, &y[..i]), self.p(xs, &y[..i - 1]))
            })
            .product()
    }

    /// `p(x^n || y^{n-d})`.
    pub fn x_given_y(&self, x: &[usize], y: &[usize], d: usize) -> f64 {
        (1..=x.len())
            .map(|i| {
                let ys = &y[..i.saturating_sub(d)];
                ratio(self.p(&x[..i], ys), self.p(&x[..i - 1], ys))
            })
            .product()
    }

    fn sum(&self, mut f: impl FnMut(&[usize], &[usize], f64) -> f64) -> f64 {
        self.pairs.iter().map(|(x, y, p)| f(x, y, *p)).sum()
    }

    pub fn entropy(&self) -> f64 {
        self.sum(|_, _, p| h(p))
    }

    pub fn mi(&self) -> f64 {
        self.sum(|x, y, p| wlog(p, p, self.px(x) * self.py(y)))
    }

    /// `I(X^n -> Y^n)`.
    pub fn di_xy(&self) -> f64 {
        self.sum(|x, y, p| wlog(p, self.y_given_x(x, y, 0), self.py(y)))
    }

    /// `I(Y^{n-d} -> X^n)`.
    pub fn di_yx(&self, d: usize) -> f64 {
        self.sum(|x, y, p| wlog(p, self.x_given_y(x, y, d), self.px(x)))
    }

    pub fn lautum(&self) -> f64 {
        self.sum(|x, y, p| wlog(self.px(x) * self.py(y), self.px(x) * self.py(y), p))
    }

    /// `L1(X^n -> Y^n)`.
    pub fn l1_xy(&self) -> f64 {
        self.sum(|x, y, _| wlog(self.px(x) * self.py(y), self.py(y), self.y_given_x(x, y, 0)))
    }

    /// `L1(Y^{n-1} -> X^n)`.
    pub fn l1_yx_delayed(&self) -> f64 {
        self.l1_yx(1)
    }

    /// `L1(Y^{n-d} -> X^n)`.
    pub fn l1_yx(&self, d: usize) -> f64 {
        self.sum(|x, y, _| wlog(self.px(x) * self.py(y), self.px(x), self.x_given_y(x, y, d)))
    }

    /// `L2(X^n -> Y^n)`: weight `p(x^n || y^{n-1}) p(y^n)`.
    pub fn l2_xy(&self) -> f64 {
        self.sum(|x, y, _| wlog(self.x_given_y(x, y, 1) * self.py(y), self.py(y), self.y_given_x(x, y, 0)))
    }

    /// `L2(Y^n -> X^n)`: weight `p(y^n || x^{n-1}) p(x^n)`.
    pub fn l2_yx(&self) -> f64 {
        self.sum(|x, y, _| wlog(self.y_given_x(x, y, 1) * self.px(x), self.px(x), self.x_given_y(x, y, 0)))
    }

    /// `H(X^n || Y^n)`.
    pub fn causal_entropy_x(&self) -> f64 {
        self.sum(|x, y, p| if p > 0.0 { -p * self.x_given_y(x, y, 0).log2() } else { 0.0 })
    }

    pub fn entropy_x(&self) -> f64 {
        let mut seen = HashMap::new();
        for (x, _, p) in &self.pairs {
            *seen.entry(x.clone()).or_insert(0.0) += p;
        }
        seen.values().map(|&p| h(p)).sum()
    }
}

/// `L2(X^n -> Y^n)` for larger `n`, from direct kernel products and a
/// summed `p(y^n)` table, without the prefix map.
pub fn lean_l2(model: &JointProcessModel, n: usize) -> f64 {
    let (nx, ny) = (model.x_size(), model.y_size());
    let (cx, cy) = (nx.pow(n as u32), ny.pow(n as u32));
    let xs: Vec<Vec<usize>> = (0..cx).map(|c| digits(c, nx, n)).collect();
    let ys: Vec<Vec<usize>> = (0..cy).map(|c| digits(c, ny, n)).collect();
    let mut x_causal = vec![0.0; cx * cy];
    let mut y_causal = vec![0.0; cx * cy];
    let mut py = vec![0.0; cy];
    for (a, x) in xs.iter().enumerate() {
        for (b, y) in ys.iter().enumerate() {
            let (mut px, mut pyx) = (1.0, 1.0);
            for i in 0..n {
                px *= model.backward(&x[..i], &y[..i])[x[i]];
                pyx *= model.forward(&x[..=i], &y[..i])[y[i]];
            }
            x_causal[a * cy + b] = px;
            y_causal[a * cy + b] = pyx;
            py[b] += px * pyx;
        }
    }
    let mut total = 0.0;
    for a in 0..cx {
        for b in 0..cy {
            let k = a * cy + b;
            total += wlog(x_causal[k] * py[b], py[b], y_causal[k]);
        }
    }
    total
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

pub fn h(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// `w log2(a / b)` with `0 log = 0`; panics on a support violation.
pub fn wlog(w: f64, a: f64, b: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    assert!(a > 0.0 && b > 0.0, "support violation in the oracle");
    w * (a / b).log2()
}

/// `h(a * b)` for Bernoulli convolution, written out by hand.
pub fn binary_h(p: f64) -> f64 {
    h(p) + h(1.0 - p)
}
