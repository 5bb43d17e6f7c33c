//! Desk-scale versions of the family constructions: one step of the
//! ⊆*-chain in `W`, independent families built from two disjoint block
//! selections, and the minimal bounding slalom of a family.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::ideal::{status_of, Ideal, Status};
use crate::levelset::LevelSet;
use crate::omega::{eval_term, Generator, OmegaPoint, Term};
use crate::rational::{density, inv_pow2, ratio, Rational};
use crate::slalom::{almost_subset, graph_of, PathReal, Slalom};

/// `Σ_{i ≥ from} |s(i)| / 2^i` for an empty-tail slalom.
fn tail_from(s: &Slalom, from: u32) -> Rational {
    (from..s.support_end()).map(|i| density(s.count(i), i)).sum()
}

/// A piece of a slalom on the level interval `[start, start + levels.len())`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub start: u32,
    pub levels: Vec<LevelSet>,
}

impl Block {
    fn of(s: &Slalom, start: u32, end: u32) -> Block {
        Block { start, levels: (start..end).map(|i| s.level_or_empty(i).into_owned()).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(LevelSet::is_empty)
    }

    pub fn weight(&self) -> Rational {
        self.levels.iter().zip(self.start..).map(|(l, i)| density(l.len(), i)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainConfig {
    /// Extra tail mass the new path may add on top of the merged slalom.
    pub extra_budget: Rational,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { extra_budget: Rational::one() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStepReport {
    pub horizon: u32,
    /// `g_α(n)`: the least level from which input α has tail mass below `2^-n`.
    pub g_alphas: Vec<Vec<u32>>,
    /// Strictly increasing, dominating every `g_α` from 0 on.
    pub g: Vec<u32>,
    /// `F_α(n)`: input α on `[g(n), g(n+1))`.
    pub blocks: Vec<Vec<Block>>,
    /// `Φ(n)`: at most `n` distinct nonempty blocks, by input priority.
    pub phi: Vec<Vec<Block>>,
    /// The first index from which each input's blocks all sit in `Φ`;
    /// `None` if that never happens inside the horizon.
    pub settle: Vec<Option<u32>>,
    pub merged: Slalom,
    pub cutoff: u32,
    pub extended: Slalom,
    /// `Σ_{g(n) ≤ i < g(n+1)} |A(i)| / 2^i`.
    pub window_sums: Vec<Rational>,
    pub failures: Vec<String>,
}

impl ChainStepReport {
    pub fn verified(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Merges the inputs into one `W` member that almost contains each of them,
/// then adds the graph of `f_beta` above a cutoff.
pub fn chain_step(
    existing: &[Slalom],
    f_beta: &PathReal,
    horizon: u32,
    config: &ChainConfig,
) -> Result<ChainStepReport> {
    for (i, a) in existing.iter().enumerate() {
        if !a.tail().is_empty() {
            return Err(Error::RuleTail);
        }
        if status_of(a, Ideal::W) != Status::Yes {
            return Err(Error::NotInW(format!("input {i}")));
        }
    }
    // g(n) for n = 0.. until a window starts at or past the horizon
    let mut g_alphas: Vec<Vec<u32>> = vec![Vec::new(); existing.len()];
    let mut g: Vec<u32> = Vec::new();
    loop {
        let n = g.len() as u32;
        let bound = inv_pow2(n);
        let mut top = 0;
        for (a, row) in existing.iter().zip(g_alphas.iter_mut()) {
            let ga = (0..=a.support_end()).find(|&l| tail_from(a, l) < bound).expect("zero past the support");
            row.push(ga);
            top = top.max(ga);
        }
        let next = g.last().map_or(top + 1, |&prev| (top + 1).max(prev + 1));
        g.push(next);
        if next >= horizon {
            break;
        }
    }
    let windows = g.len() - 1;
    let end_of = |n: usize| g.get(n + 1).copied().unwrap_or(horizon).min(horizon);

    let blocks: Vec<Vec<Block>> =
        existing.iter().map(|a| (0..windows).map(|n| Block::of(a, g[n], end_of(n))).collect()).collect();
    let phi: Vec<Vec<Block>> = (0..windows)
        .map(|n| {
            let mut chosen: Vec<Block> = Vec::new();
            for row in &blocks {
                let b = &row[n];
                if chosen.len() < n && !b.is_empty() && !chosen.contains(b) {
                    chosen.push(b.clone());
                }
            }
            chosen
        })
        .collect();
    let settle: Vec<Option<u32>> = blocks
        .iter()
        .map(|row| {
            let bad = (0..windows).rev().find(|&n| !row[n].is_empty() && !phi[n].contains(&row[n]));
            let m = bad.map_or(0, |n| n + 1);
            (m < windows).then_some(m as u32)
        })
        .collect();

    let mut merged_levels: Vec<LevelSet> = (0..horizon).map(LevelSet::empty).collect();
    for b in phi.iter().flatten() {
        for (l, i) in b.levels.iter().zip(b.start..) {
            merged_levels[i as usize] = merged_levels[i as usize].union(l);
        }
    }
    let merged = Slalom::from_levels(merged_levels)?;
    let window_sums: Vec<Rational> =
        (0..windows).map(|n| (g[n]..end_of(n)).map(|i| density(merged.count(i), i)).sum()).collect();

    let graph = graph_of(f_beta).below(horizon);
    let joined = merged.union(&graph)?.below(horizon);
    let cutoff = (1..=horizon)
        .find(|&k| {
            (k..horizon).all(|i| !joined.level_or_empty(i).is_saturated())
                && tail_from(&joined, k) <= tail_from(&merged, k) + &config.extra_budget
        })
        .expect("the empty tail at the horizon qualifies");
    let extended = joined.from_level(cutoff);

    let mut report = ChainStepReport {
        horizon,
        g_alphas,
        g,
        blocks,
        phi,
        settle,
        merged,
        cutoff,
        extended,
        window_sums,
        failures: Vec::new(),
    };
    report.failures = verify_chain_step(existing, f_beta, &report);
    Ok(report)
}

fn verify_chain_step(existing: &[Slalom], f_beta: &PathReal, r: &ChainStepReport) -> Vec<String> {
    let mut failures = Vec::new();
    let windows = r.g.len() - 1;
    for (a, (input, (row, ga))) in existing.iter().zip(r.blocks.iter().zip(&r.g_alphas)).enumerate() {
        for (n, &l) in ga.iter().enumerate() {
            if tail_from(input, l) >= inv_pow2(n as u32) {
                failures.push(format!("input {a}: tail from g_α({n}) = {l} is not below 2^-{n}"));
            }
            if r.g[n] < l {
                failures.push(format!("g({n}) does not dominate input {a}"));
            }
        }
        for (n, b) in row.iter().enumerate() {
            if b.weight() >= inv_pow2(n as u32) {
                failures.push(format!("input {a}: block at window {n} is too heavy"));
            }
        }
        match r.settle[a] {
            Some(m) => {
                let from = r.g[m as usize];
                if let Some(i) =
                    (from..r.horizon).find(|&i| !input.level_or_empty(i).is_subset(&r.merged.level_or_empty(i)))
                {
                    failures.push(format!("input {a} leaves the merged slalom at level {i} past g({m})"));
                }
            }
            None => failures.push(format!("input {a} does not settle inside the horizon")),
        }
        if !almost_subset(input, &r.merged).is_yes() {
            failures.push(format!("input {a} is not almost contained in the merged slalom"));
        }
    }
    if r.g.windows(2).any(|p| p[1] <= p[0]) {
        failures.push("g is not strictly increasing".into());
    }
    for n in 0..windows {
        if r.phi[n].len() > n {
            failures.push(format!("Φ({n}) has {} blocks", r.phi[n].len()));
        }
        if r.phi[n].iter().any(|b| !r.blocks.iter().any(|row| &row[n] == b)) {
            failures.push(format!("Φ({n}) holds a block that is no input's"));
        }
        let bound = ratio(n as i64, 1) * inv_pow2(n as u32);
        let sum = &r.window_sums[n];
        if !(sum < &bound || (n == 0 && sum.is_zero())) {
            failures.push(format!("window {n} carries {sum}, not below n/2^n"));
        }
    }
    let total: Rational = r.window_sums.iter().sum();
    if total > Rational::from_integer(2.into()) {
        failures.push(format!("merged slalom carries {total} > 2"));
    }
    if status_of(&r.merged, Ideal::W) != Status::Yes {
        failures.push("merged slalom is not in W".into());
    }
    if status_of(&r.extended, Ideal::W) != Status::Yes {
        failures.push("extended slalom is not in W".into());
    }
    if !almost_subset(&graph_of(f_beta).below(r.horizon), &r.extended).is_yes() {
        failures.push("graph of the new path is not almost contained in the result".into());
    }
    failures
}

/// `r` subsets of `[0, m)`: `x` joins set `i` iff bit `i` of `x mod 2^r` is
/// set. Every sign pattern then recurs with period `2^r`, so the sets are
/// independent modulo finite and each pattern has `⌊m / 2^r⌋` or more
/// witnesses below `m`.
pub fn independent_subsets(r: u32, witnesses: u64, m: u64) -> Result<Vec<BTreeSet<u64>>> {
    if r > 20 {
        return Err(Error::SearchTooLarge(format!("{r} sets")));
    }
    let period = 1u64 << r;
    let needed = witnesses.saturating_mul(period);
    if m < needed {
        return Err(Error::UniverseTooSmall { size: m, detail: format!("need {needed} = {witnesses}·2^{r}") });
    }
    Ok((0..r).map(|i| (0..m).filter(|x| (x % period) >> i & 1 == 1).collect()).collect())
}

/// Number of members of `[0, m)` realizing each sign pattern (bit `i` set =
/// inside set `i`).
pub fn pattern_counts(sets: &[BTreeSet<u64>], m: u64) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << sets.len()];
    for x in 0..m {
        let p = sets.iter().enumerate().fold(0usize, |acc, (i, s)| acc | (s.contains(&x) as usize) << i);
        counts[p] += 1;
    }
    counts
}

/// A base slalom with two disjoint nonempty selections at every level `≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPair {
    base: Slalom,
    zero: Slalom,
    one: Slalom,
}

impl BlockPair {
    pub fn new(base: Slalom, zero: Slalom, one: Slalom) -> Result<Self> {
        let h = base.horizon();
        if zero.horizon() != h || one.horizon() != h {
            return Err(Error::Precondition("selections must share the base horizon".into()));
        }
        if !base.tail().is_empty() || status_of(&base, Ideal::W) != Status::Yes {
            return Err(Error::NotInW("block pair base".into()));
        }
        for n in 0..h {
            let (s, z0, z1) = (base.level_or_empty(n), zero.level_or_empty(n), one.level_or_empty(n));
            let ok = if n < 2 {
                s.is_empty() && z0.is_empty() && z1.is_empty()
            } else {
                s.len() >= 2
                    && !z0.is_empty()
                    && !z1.is_empty()
                    && z0.intersection(&z1).is_empty()
                    && z0.is_subset(&s)
                    && z1.is_subset(&s)
            };
            if !ok {
                return Err(Error::Precondition(format!("block pair is malformed at level {n}")));
            }
        }
        Ok(BlockPair { base, zero, one })
    }

    /// `S(n) = {0, 1}`, `Z0(n) = {0}`, `Z1(n) = {1}` for `2 ≤ n < horizon`.
    pub fn standard(horizon: u32) -> Self {
        let rows = |cols: &'static [u64]| (2..horizon).map(move |n| (n, cols.to_vec()));
        let base = Slalom::from_table(horizon, rows(&[0, 1])).expect("two columns fit from level 1");
        let zero = Slalom::from_table(horizon, rows(&[0])).expect("in range");
        let one = Slalom::from_table(horizon, rows(&[1])).expect("in range");
        BlockPair::new(base, zero, one).expect("standard pair is well formed")
    }

    pub fn base(&self) -> &Slalom {
        &self.base
    }

    pub fn zero(&self) -> &Slalom {
        &self.zero
    }

    pub fn one(&self) -> &Slalom {
        &self.one
    }

    pub fn horizon(&self) -> u32 {
        self.base.horizon()
    }
}

/// Level `n` is `Z1(n)` if `n ∈ x`, else `Z0(n)`.
pub fn build_s_alpha(bp: &BlockPair, x: &BTreeSet<u64>) -> Slalom {
    let levels = (0..bp.horizon())
        .map(|n| {
            let pick = if x.contains(&(n as u64)) { &bp.one } else { &bp.zero };
            pick.level_or_empty(n).into_owned()
        })
        .collect();
    Slalom::from_levels(levels).expect("selections are unsaturated")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceWitness {
    pub point: OmegaPoint,
    pub passes: bool,
}

/// Points `(T ∩ (k × 2^k), k)` for `min (y ∖ 2) < k ≤ H`, where `T(n)` is `Z1(n)`
/// on `y` and `S(n)` elsewhere, each checked against the signed meet of the
/// chosen members.
pub fn independence_check(
    bp: &BlockPair,
    alphas: &[Slalom],
    positive: &[usize],
    negative: &[usize],
    y: &BTreeSet<u64>,
) -> Result<Vec<IndependenceWitness>> {
    let h = bp.horizon();
    // the selections are empty below level 2, so only later levels separate them
    let Some(&low) = y.iter().find(|&&n| (2..h as u64).contains(&n)) else {
        return Err(Error::Precondition("witness set has no level in [2, horizon)".into()));
    };
    if positive.iter().any(|i| negative.contains(i)) {
        return Err(Error::Precondition("an index is both positive and negative".into()));
    }
    for &n in y.iter().filter(|&&n| n < h as u64) {
        let n = n as u32;
        let one = bp.one.level_or_empty(n);
        let zero = bp.zero.level_or_empty(n);
        if positive.iter().any(|&i| alphas[i].level_or_empty(n) != one)
            || negative.iter().any(|&i| alphas[i].level_or_empty(n) != zero)
        {
            return Err(Error::Precondition(format!("level {n} of the witness set does not fit the pattern")));
        }
    }
    let levels = (0..h)
        .map(|n| if y.contains(&(n as u64)) { &bp.one } else { &bp.base }.level_or_empty(n).into_owned())
        .collect();
    let t = Slalom::from_levels(levels)?;
    let term = positive
        .iter()
        .map(|&i| Term::generator(Generator::Set(alphas[i].clone())))
        .chain(negative.iter().map(|&i| Term::not_generator(Generator::Set(alphas[i].clone()))))
        .fold(Term::one(), |acc, x| acc.and(&x));
    (low as u32 + 1..=h)
        .map(|k| {
            let point = OmegaPoint::new(t.below(k))?;
            let passes = eval_term(&term, &point);
            Ok(IndependenceWitness { point, passes })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bounding {
    Bound(Slalom),
    /// The union saturates this level, so nothing in `S` bounds the family.
    Saturated {
        level: u32,
    },
}

/// The levelwise union, which is the least candidate bound.
pub fn bounding_search(family: &[Slalom], horizon: u32) -> Result<Bounding> {
    let union = Slalom::union_all(horizon, family)?.below(horizon);
    Ok(match union.first_saturated() {
        Some(level) => Bounding::Saturated { level },
        None => Bounding::Bound(union),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::saturation_witness;
    use crate::gen;

    fn slalom(rows: &[(u32, &[u64])], h: u32) -> Slalom {
        Slalom::from_table(h, rows.iter().map(|(n, c)| (*n, c.to_vec()))).unwrap()
    }

    #[test]
    fn empty_chain_takes_the_graph() {
        let f = PathReal::new(vec![0; 10]).unwrap();
        let r = chain_step(&[], &f, 10, &ChainConfig::default()).unwrap();
        assert!(r.verified(), "{:?}", r.failures);
        assert!(r.merged.is_table_empty());
        assert_eq!(r.cutoff, 1);
        assert!(r.extended.same_sets(&graph_of(&f)));
    }

    #[test]
    fn graph_input_is_absorbed() {
        let f0 = PathReal::new(vec![0, 1, 2, 5, 9, 30, 7, 100, 3, 200, 11, 1000]).unwrap();
        let a0 = graph_of(&f0);
        let r = chain_step(std::slice::from_ref(&a0), &f0, 12, &ChainConfig::default()).unwrap();
        assert!(r.verified(), "{:?}", r.failures);
        assert!(almost_subset(&a0, &r.extended).is_yes());
        assert!(almost_subset(&a0, &r.merged).is_yes());
    }

    #[test]
    fn random_inputs_pass_every_invariant() {
        let mut rng = gen::rng(7);
        for _ in 0..5 {
            let h = 14;
            let inputs: Vec<Slalom> = (0..3).map(|_| gen::slalom(&mut rng, h, 2)).collect();
            let f = gen::path(&mut rng, h);
            let r = chain_step(&inputs, &f, h, &ChainConfig::default()).unwrap();
            assert!(r.verified(), "{:?}", r.failures);
            // exact recount of the merged mass against the constant 2
            let recount: Rational = (0..h).map(|i| density(r.merged.count(i), i)).sum();
            assert!(recount <= Rational::from_integer(2.into()));
            let inputs_mass: Rational = inputs.iter().map(|a| tail_from(a, 0)).sum();
            assert!(recount <= inputs_mass + Rational::from_integer(2.into()));
        }
    }

    #[test]
    fn saturated_input_is_rejected() {
        let s = slalom(&[(1, &[0, 1])], 3);
        let f = PathReal::new(vec![0, 0, 0]).unwrap();
        assert!(matches!(chain_step(&[s], &f, 3, &ChainConfig::default()), Err(Error::NotInW(_))));
    }

    #[test]
    fn independent_patterns_are_witnessed() {
        let one = independent_subsets(1, 3, 6).unwrap();
        assert_eq!(pattern_counts(&one, 6), vec![3, 3]);
        let two = independent_subsets(2, 2, 9).unwrap();
        assert_eq!(pattern_counts(&two, 9), vec![3, 2, 2, 2]);
        let five = independent_subsets(5, 4, 128).unwrap();
        assert!(pattern_counts(&five, 128).iter().all(|&c| c == 4));
        assert!(matches!(independent_subsets(5, 4, 127), Err(Error::UniverseTooSmall { .. })));
    }

    #[test]
    fn selections_follow_the_index_set() {
        let bp = BlockPair::standard(8);
        assert!(build_s_alpha(&bp, &BTreeSet::new()).same_sets(bp.zero()));
        let all: BTreeSet<u64> = (0..8).collect();
        assert!(build_s_alpha(&bp, &all).same_sets(bp.one()));
        let evens: BTreeSet<u64> = (0..8).step_by(2).collect();
        let s = build_s_alpha(&bp, &evens);
        assert!(s.is_levelwise_subset(bp.base()));
        assert_eq!(s.level_or_empty(4).columns(), vec![1]);
        assert_eq!(s.level_or_empty(5).columns(), vec![0]);
        assert_eq!(status_of(&s, Ideal::W), Status::Yes);
        let bad = BlockPair::new(bp.base().clone(), bp.zero().clone(), bp.zero().clone());
        assert!(bad.is_err());
    }

    #[test]
    fn signed_meets_are_witnessed() {
        let h = 9;
        let bp = BlockPair::standard(h);
        let sets = independent_subsets(3, 1, 16).unwrap();
        let alphas: Vec<Slalom> = sets.iter().map(|x| build_s_alpha(&bp, x)).collect();
        // single positive index: Y = X_0 ∩ [0, H)
        let y: BTreeSet<u64> = sets[0].iter().copied().filter(|&n| n < h as u64).collect();
        let ws = independence_check(&bp, &alphas, &[0], &[], &y).unwrap();
        let low = y.iter().find(|&&n| n >= 2).unwrap();
        assert_eq!(ws.len() as u64, h as u64 - low);
        assert!(ws.iter().all(|w| w.passes));
        // X_0 ∖ X_1 ∩ X_2 ∖ ...: pattern bits (1, 0, 1) recur at x ≡ 5 mod 8
        let y: BTreeSet<u64> = (0..h as u64).filter(|x| x % 8 == 5).collect();
        let ws = independence_check(&bp, &alphas, &[0, 2], &[1], &y).unwrap();
        assert_eq!(ws.len(), 4);
        assert!(ws.iter().all(|w| w.passes));
        let empty: BTreeSet<u64> = [20].into_iter().collect();
        assert!(independence_check(&bp, &alphas, &[0], &[], &empty).is_err());
        // levels 0 and 1 carry empty selections and witness nothing
        let blind: BTreeSet<u64> = [0].into_iter().collect();
        assert!(independence_check(&bp, &alphas, &[], &[0, 1, 2], &blind).is_err());
    }

    #[test]
    fn bounding_examples() {
        let a = slalom(&[(2, &[1]), (3, &[0, 4])], 5);
        assert_eq!(bounding_search(std::slice::from_ref(&a), 5).unwrap(), Bounding::Bound(a.clone()));
        let b = slalom(&[(2, &[1, 2]), (3, &[0, 4, 6])], 5);
        assert_eq!(bounding_search(&[a.clone(), b.clone()], 5).unwrap(), Bounding::Bound(b.clone()));
        let fam: Vec<Slalom> = (0..4).map(|c| slalom(&[(2, &[c])], 5)).collect();
        let level = saturation_witness(&fam).unwrap().level;
        assert_eq!(bounding_search(&fam, 5).unwrap(), Bounding::Saturated { level });
    }
}
