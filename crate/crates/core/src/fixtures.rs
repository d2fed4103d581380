//! Ready-made models: the noisy-observation Markov horse race, copy channels
//! and random kernels for property tests.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::JointProcessModel;
use crate::prob::{binary_entropy, convolve_bernoulli, Alphabet, Pmf};

/// Two-horse Markov race observed through a binary symmetric channel.
///
/// The winner repeats with probability `stay`, the side information equals
/// the winner with probability `1 - noise`, and the state before the first
/// race is uniform.
pub fn example1(stay: f64, noise: f64) -> Result<JointProcessModel> {
    for (name, v) in [("p", stay), ("q", noise)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let two = Alphabet::new(2)?;
    JointProcessModel::from_fns(
        two,
        two,
        1,
        |xs, _| match xs.last() {
            None => Pmf::uniform(2),
            Some(&prev) => binary_toward(prev, stay),
        },
        |xs, _| binary_toward(*xs.last().unwrap(), 1.0 - noise),
    )
}

/// Closed-form growth increase `h(p * q) - h(q)` for [`example1`].
pub fn example1_rate(stay: f64, noise: f64) -> Result<f64> {
    Ok(binary_entropy(convolve_bernoulli(stay, noise)?)? - binary_entropy(noise)?)
}

/// Pmf over `{0, 1}` putting `p_same` on `symbol`.
fn binary_toward(symbol: usize, p_same: f64) -> Pmf {
    let mut v = [1.0 - p_same; 2];
    v[symbol] = p_same;
    Pmf::new(v.to_vec()).expect("valid binary pmf")
}

/// i.i.d. uniform `X` and `Y = X xor Bern(noise)`.
pub fn iid_noisy_copy(noise: f64) -> Result<JointProcessModel> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Domain(format!("noise {noise} outside [0, 1]")));
    }
    let two = Alphabet::new(2)?;
    JointProcessModel::from_fns(two, two, 0, |_, _| Pmf::uniform(2), |xs, _| {
        binary_toward(xs[0], 1.0 - noise)
    })
}

/// i.i.d. uniform `X` over `size` symbols and `Y_i = X_i`.
pub fn deterministic_copy(size: usize) -> Result<JointProcessModel> {
    let a = Alphabet::new(size)?;
    JointProcessModel::from_fns(a, a, 0, move |_, _| Pmf::uniform(size), move |xs, _| {
        Pmf::point(size, xs[0])
    })
}

/// i.i.d. pairs with an arbitrary single-letter joint pmf (row-major `x, y`).
pub fn iid_pairs(x_size: usize, y_size: usize, joint: &[f64]) -> Result<JointProcessModel> {
    let joint = Pmf::new(joint.to_vec())?;
    if joint.len() != x_size * y_size {
        return Err(Error::Domain("joint pmf has the wrong size".into()));
    }
    let px: Vec<f64> = (0..x_size)
        .map(|x| (0..y_size).map(|y| joint.get(x * y_size + y)).sum())
        .collect();
    let px = Pmf::from_weights(&px)?;
    let rows: Vec<Pmf> = (0..x_size)
        .map(|x| {
            let row: Vec<f64> = (0..y_size).map(|y| joint.get(x * y_size + y)).collect();
            if row.iter().sum::<f64>() > 0.0 {
                Pmf::from_weights(&row).expect("positive row")
            } else {
                Pmf::uniform(y_size)
            }
        })
        .collect();
    JointProcessModel::from_fns(
        Alphabet::new(x_size)?,
        Alphabet::new(y_size)?,
        0,
        |_, _| px.clone(),
        |xs, _| rows[xs[0]].clone(),
    )
}

/// Independent uniform processes.
pub fn independent_uniform(x_size: usize, y_size: usize) -> Result<JointProcessModel> {
    JointProcessModel::from_fns(
        Alphabet::new(x_size)?,
        Alphabet::new(y_size)?,
        0,
        move |_, _| Pmf::uniform(x_size),
        move |_, _| Pmf::uniform(y_size),
    )
}

/// Uniform random pmf (flat Dirichlet) with every entry strictly positive.
pub fn random_pmf<R: Rng + ?Sized>(rng: &mut R, size: usize) -> Pmf {
    let w: Vec<f64> = (0..size).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-9).collect();
    Pmf::from_weights(&w).expect("positive weights")
}

/// Random model with fully general kernels (feedback included).
pub fn random_model<R: Rng + ?Sized>(
    rng: &mut R,
    x_size: usize,
    y_size: usize,
    order: usize,
) -> Result<JointProcessModel> {
    let rng = RefCell::new(rng);
    JointProcessModel::from_fns(
        Alphabet::new(x_size)?,
        Alphabet::new(y_size)?,
        order,
        |_, _| random_pmf(&mut **rng.borrow_mut(), x_size),
        |_, _| random_pmf(&mut **rng.borrow_mut(), y_size),
    )
}

/// Random model whose backward kernel ignores the `y` past, so that
/// `p(x^n || y^{n-1}) = p(x^n)`.
pub fn random_no_feedback<R: Rng + ?Sized>(
    rng: &mut R,
    x_size: usize,
    y_size: usize,
    order: usize,
) -> Result<JointProcessModel> {
    let rng = RefCell::new(rng);
    let mut by_x_past: HashMap<Vec<usize>, Pmf> = HashMap::new();
    JointProcessModel::from_fns(
        Alphabet::new(x_size)?,
        Alphabet::new(y_size)?,
        order,
        |xs, _| {
            by_x_past
                .entry(xs.to_vec())
                .or_insert_with(|| random_pmf(&mut **rng.borrow_mut(), x_size))
                .clone()
        },
        |_, _| random_pmf(&mut **rng.borrow_mut(), y_size),
    )
}

/// Model with `Y` independent of `X`: both i.i.d. with random marginals.
pub fn random_independent<R: Rng + ?Sized>(rng: &mut R, x_size: usize, y_size: usize) -> Result<JointProcessModel> {
    let px = random_pmf(rng, x_size);
    let py = random_pmf(rng, y_size);
    JointProcessModel::from_fns(
        Alphabet::new(x_size)?,
        Alphabet::new(y_size)?,
        0,
        |_, _| px.clone(),
        |_, _| py.clone(),
    )
}
