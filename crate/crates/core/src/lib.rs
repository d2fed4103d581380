//! Directed information and its operational meanings for finite-alphabet
//! pair processes: causal conditioning, information measures, gambling with
//! causal side information, log-optimal portfolios, causal compression and
//! causal-dependence hypothesis tests.
//!
//! All logarithms are base 2. Exact results come from enumerating the joint
//! prefix tree, which is bounded by [`prob::ENUMERATION_LIMIT`].

pub mod causal;
pub mod compression;
pub mod error;
pub mod fixtures;
pub mod gambling;
pub mod hyptest;
pub mod info;
pub mod model;
pub mod portfolio;
pub mod prob;
pub mod sample;
pub mod walk;

pub use causal::{causal_cond_prob, joint_prob, marginal_prob, marginal_prob_x, Target};
pub use error::{Error, Result};
pub use model::{JointProcessModel, ModelFile, SequencePair};
pub use prob::{binary_entropy, convolve_bernoulli, Alphabet, Pmf};
pub use sample::sample;
