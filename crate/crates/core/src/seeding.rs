//! Named random streams derived from one master seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STREAM_ENV: u64 = 1;
pub const STREAM_NOISE: u64 = 2;
pub const STREAM_REPLAY: u64 = 3;
pub const STREAM_INIT_Q1: u64 = 4;
pub const STREAM_INIT_Q2: u64 = 5;
pub const STREAM_INIT_ACTOR: u64 = 6;
pub const STREAM_EVAL: u64 = 7;
pub const STREAM_REINIT: u64 = 8;

/// Independent generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The `index`-th value of `stream`, without generating the ones before it.
pub fn indexed_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut rng = stream_rng(seed, stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Environment reset seed of training episode `episode`.
pub fn episode_seed(seed: u64, episode: u64) -> u64 {
    indexed_seed(seed, STREAM_ENV, episode)
}

/// Reset seed of evaluation trial `trial` in block `block`.
pub fn eval_seed(block: u64, trial: u64) -> u64 {
    indexed_seed(block, STREAM_EVAL, trial)
}
