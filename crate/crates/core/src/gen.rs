//! Seeded generators for random slaloms, paths and traces.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::levelset::LevelSet;
use crate::slalom::{PathReal, Slalom};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniformly sized random subset of level `level` with at most `max_len`
/// columns, never saturated.
pub fn level_set<R: Rng>(rng: &mut R, level: u32, max_len: u64) -> LevelSet {
    let width = 1u64 << level;
    let k = rng.gen_range(0..=max_len.min(width - 1));
    let cols = sample(rng, width as usize, k as usize).into_iter().map(|c| c as u64);
    LevelSet::from_columns(level, cols).expect("sampled columns are in range")
}

/// A random empty-tail slalom with unsaturated levels `1..horizon` of at
/// most `max_len` columns each; level 0 stays empty.
pub fn slalom<R: Rng>(rng: &mut R, horizon: u32, max_len: u64) -> Slalom {
    let levels = (0..horizon).map(|j| if j == 0 { LevelSet::empty(0) } else { level_set(rng, j, max_len) }).collect();
    Slalom::from_levels(levels).expect("levels indexed in order")
}

/// Like [`slalom`], but saturates one random level `≥ 1` with probability
/// `p_saturate`.
pub fn slalom_maybe_saturated<R: Rng>(rng: &mut R, horizon: u32, max_len: u64, p_saturate: f64) -> Slalom {
    let s = slalom(rng, horizon, max_len);
    if horizon > 1 && rng.gen_bool(p_saturate) {
        let j = rng.gen_range(1..horizon);
        s.with_level(LevelSet::full(j)).expect("level below horizon")
    } else {
        s
    }
}

/// Each column of `s` kept independently with probability 1/2.
pub fn subslalom<R: Rng>(rng: &mut R, s: &Slalom) -> Slalom {
    let levels = s
        .levels()
        .iter()
        .map(|l| LevelSet::from_columns(l.level(), l.iter().filter(|_| rng.gen_bool(0.5))).expect("subset"))
        .collect();
    Slalom::from_levels(levels).expect("levels indexed in order")
}

pub fn path<R: Rng>(rng: &mut R, horizon: u32) -> PathReal {
    PathReal::new((0..horizon).map(|n| rng.gen_range(0..1u64 << n)).collect()).expect("values in range")
}
