//! Ancestral sampling in interleaved order `x_1, y_1, x_2, y_2, ...`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{JointProcessModel, SequencePair};

/// Generator for replica `index` of a run seeded with `seed`. Replicas use
/// distinct ChaCha streams, so they are independent and order-free.
pub fn replica_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF draw; the last positive entry absorbs rounding slack.
pub fn draw<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Draws one pair of length `n` from `rng`.
pub fn sample_with<R: Rng + ?Sized>(model: &JointProcessModel, n: usize, rng: &mut R) -> Result<SequencePair> {
    if n == 0 {
        return Err(Error::Argument("sample length must be at least 1".into()));
    }
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let xi = draw(rng, model.backward(&x, &y));
        x.push(xi);
        let yi = draw(rng, model.forward(&x, &y[..i]));
        y.push(yi);
    }
    SequencePair::new(x, y)
}

/// Draws one pair of length `n`; identical seeds give identical pairs.
pub fn sample(model: &JointProcessModel, n: usize, seed: u64) -> Result<SequencePair> {
    sample_with(model, n, &mut ChaCha8Rng::seed_from_u64(seed))
}
