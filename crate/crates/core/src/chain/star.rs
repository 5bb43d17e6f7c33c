//! Bucketing by (cutoff, prefix) and the finite-scale refinement that pulls a
//! subfamily with union in `S` out of a bucket of density-< 1/9 members.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::ideal::{status_of, Ideal, Status};
use crate::levelset::LevelSet;
use crate::rational::{ratio, Rational};
use crate::slalom::Slalom;

const SUBSET_BUDGET: u64 = 2_000_000;
const EXHAUSTIVE_CLAIM: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketKey {
    pub cutoff: u32,
    /// The member below `cutoff`, with horizon `cutoff`.
    pub prefix: Slalom,
    pub threshold: Rational,
}

/// `count · den < num · 2^level`, i.e. the level density is below `num/den`.
fn below_threshold(count: u64, level: u32, num: u128, den: u128) -> bool {
    (count as u128) * den < num << level
}

/// The least cutoff `k ≥ min_cutoff` with level density below `1/den` at
/// every level `≥ k`.
fn least_cutoff(member: &Slalom, den: u128, min_cutoff: u32) -> u32 {
    (min_cutoff..member.support_end())
        .rev()
        .find(|&j| !below_threshold(member.count(j), j, 1, den))
        .map_or(min_cutoff, |j| j + 1)
}

/// Key of a member for threshold `1/den`.
pub fn bucket_key(member: &Slalom, den: u32, min_cutoff: u32) -> Result<BucketKey> {
    if den < 2 {
        return Err(Error::Precondition(format!("threshold 1/{den} is not below 1")));
    }
    if !member.tail().is_empty() {
        return Err(Error::RuleTail);
    }
    let cutoff = least_cutoff(member, den as u128, min_cutoff);
    Ok(BucketKey { cutoff, prefix: member.below(cutoff), threshold: ratio(1, den as i64) })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkedPartition {
    pub arity: u32,
    pub keys: Vec<BucketKey>,
    /// Member indices per distinct key, in order of first appearance.
    pub buckets: Vec<(BucketKey, Vec<usize>)>,
    pub subsets_checked: u64,
    /// Subsets of size ≤ arity whose union left `S`.
    pub failures: Vec<Vec<usize>>,
}

impl LinkedPartition {
    pub fn verified(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Buckets a family of `Z` members so that any `n` members sharing a bucket
/// have union in `S`, and checks every subset of size ≤ `n` exactly.
pub fn linked_partition(family: &[Slalom], n: u32) -> Result<LinkedPartition> {
    if n < 2 {
        return Err(Error::Precondition(format!("arity {n} below 2")));
    }
    let mut keys = Vec::with_capacity(family.len());
    for (i, a) in family.iter().enumerate() {
        if !a.tail().is_empty() {
            return Err(Error::RuleTail);
        }
        if status_of(a, Ideal::Z) != Status::Yes {
            return Err(Error::NotInZ(format!("member {i}")));
        }
        keys.push(bucket_key(a, n, 0)?);
    }
    let mut buckets: Vec<(BucketKey, Vec<usize>)> = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        match buckets.iter_mut().find(|(k, _)| k == key) {
            Some((_, members)) => members.push(i),
            None => buckets.push((key.clone(), vec![i])),
        }
    }
    let mut subsets_checked = 0;
    let mut failures = Vec::new();
    for (_, members) in &buckets {
        let mut chosen = Vec::new();
        check_subsets(family, members, 0, n as usize, None, &mut chosen, &mut subsets_checked, &mut failures)?;
    }
    Ok(LinkedPartition { arity: n, keys, buckets, subsets_checked, failures })
}

#[allow(clippy::too_many_arguments)]
fn check_subsets(
    family: &[Slalom],
    members: &[usize],
    start: usize,
    room: usize,
    union: Option<&Slalom>,
    chosen: &mut Vec<usize>,
    checked: &mut u64,
    failures: &mut Vec<Vec<usize>>,
) -> Result<()> {
    if room == 0 {
        return Ok(());
    }
    for pos in start..members.len() {
        let i = members[pos];
        let next = match union {
            Some(u) => u.union(&family[i])?,
            None => family[i].clone(),
        };
        *checked += 1;
        if *checked > SUBSET_BUDGET {
            return Err(Error::SearchTooLarge(format!("more than {SUBSET_BUDGET} subsets")));
        }
        chosen.push(i);
        if status_of(&next, Ideal::S) != Status::Yes {
            failures.push(chosen.clone());
        }
        check_subsets(family, members, pos + 1, room - 1, Some(&next), chosen, checked, failures)?;
        chosen.pop();
    }
    Ok(())
}

/// One round of the refinement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarStep {
    /// `n_i`, the member committed in this round.
    pub member: usize,
    /// `k_i`; the block covers `[k_i, k_{i+1})`.
    pub start: u32,
    pub end: u32,
    /// `T_i`, levels `start..end`.
    pub block: Vec<LevelSet>,
    /// `Q_{i+1}`: the members contained in the block on its interval.
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelBound {
    pub level: u32,
    pub total: u64,
    /// Columns of members committed at or after the round owning this level.
    pub block: u64,
    /// Columns of members committed in earlier rounds.
    pub history: u64,
    /// `Σ_{m<i} 3^{-(m+1)}`, the history density budget.
    pub history_budget: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarRefinement {
    pub cutoff: u32,
    pub indices: Vec<usize>,
    pub union: Slalom,
    pub steps: Vec<StarStep>,
    pub bounds: Vec<LevelBound>,
    pub failures: Vec<String>,
}

impl StarRefinement {
    pub fn verified(&self) -> bool {
        self.failures.is_empty()
    }
}

fn pow3(e: u32) -> Option<u128> {
    3u128.checked_pow(e)
}

/// `|A(j)| / 2^j < 1/3^e`.
fn below_pow3(count: u64, level: u32, e: u32) -> bool {
    match pow3(e) {
        Some(p) if p < 1 << 100 => below_threshold(count, level, 1, p),
        _ => count == 0,
    }
}

fn union_on(members: &[&Slalom], start: u32, end: u32) -> Vec<LevelSet> {
    (start..end).map(|j| members.iter().fold(LevelSet::empty(j), |acc, s| acc.union(&s.level_or_empty(j)))).collect()
}

fn block_admissible(block: &[LevelSet], start: u32) -> bool {
    block.iter().zip(start..).all(|(set, j)| below_threshold(set.len(), j, 1, 3))
}

fn cmp_blocks(a: &[LevelSet], b: &[LevelSet]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.cmp_lex(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Largest `Q' ⊆ Q` containing `n` whose union on `[start, end)` stays below
/// density 1/3, with ties broken by the lexicographically least block.
fn claim(bucket: &[Slalom], q: &[usize], n: usize, start: u32, end: u32) -> (Vec<usize>, Vec<LevelSet>) {
    let others: Vec<usize> = q.iter().copied().filter(|&i| i != n).collect();
    let base = union_on(&[&bucket[n]], start, end);
    let add = |block: &[LevelSet], i: usize| -> Vec<LevelSet> {
        block.iter().zip(start..).map(|(set, j)| set.union(&bucket[i].level_or_empty(j))).collect()
    };
    let mut best = (vec![n], base.clone());
    if others.len() < EXHAUSTIVE_CLAIM {
        // depth-first over subsets; admissibility is monotone, so a failing
        // union prunes every extension
        fn dfs(
            others: &[usize],
            pos: usize,
            chosen: &mut Vec<usize>,
            block: &[LevelSet],
            start: u32,
            add: &dyn Fn(&[LevelSet], usize) -> Vec<LevelSet>,
            best: &mut (Vec<usize>, Vec<LevelSet>),
        ) {
            let better = chosen.len() > best.0.len()
                || (chosen.len() == best.0.len() && cmp_blocks(block, &best.1) == Ordering::Less);
            if better {
                *best = (chosen.clone(), block.to_vec());
            }
            for k in pos..others.len() {
                let next = add(block, others[k]);
                if block_admissible(&next, start) {
                    chosen.push(others[k]);
                    dfs(others, k + 1, chosen, &next, start, add, best);
                    chosen.pop();
                }
            }
        }
        let mut chosen = vec![n];
        dfs(&others, 0, &mut chosen, &base, start, &add, &mut best);
    } else {
        let mut block = base;
        for &i in &others {
            let next = add(&block, i);
            if block_admissible(&next, start) {
                best.0.push(i);
                block = next;
            }
        }
        best.1 = block;
    }
    best.0.sort_unstable();
    best
}

/// Runs the refinement on a bucket whose members lie in `V`, have density
/// below 1/9 from a common cutoff on, and agree below it.
pub fn star_refine(bucket: &[Slalom], horizon: u32) -> Result<StarRefinement> {
    if bucket.len() < 2 {
        return Err(Error::Precondition(format!("bucket of size {} (need at least 2)", bucket.len())));
    }
    let mut problems = Vec::new();
    let mut cutoff = 1;
    for (i, a) in bucket.iter().enumerate() {
        if !a.tail().is_empty() {
            problems.push(format!("member {i} has a rule tail"));
        } else if status_of(a, Ideal::V) != Status::Yes {
            problems.push(format!("member {i} is not in V"));
        } else {
            cutoff = cutoff.max(least_cutoff(a, 9, 1));
        }
    }
    if problems.is_empty() {
        let prefix = bucket[0].below(cutoff);
        for (i, a) in bucket.iter().enumerate().skip(1) {
            if let Some(j) = (0..cutoff).find(|&j| a.level_or_empty(j) != prefix.level_or_empty(j)) {
                problems.push(format!("member {i} differs from member 0 below the cutoff at level {j}"));
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Precondition(problems.join("; ")));
    }

    let mut steps = Vec::new();
    let mut q: Vec<usize> = (0..bucket.len()).collect();
    let mut n = 0;
    let mut start = cutoff;
    loop {
        let i = steps.len() as u32;
        let member = &bucket[n];
        let end = (start + 1..horizon.max(start + 1))
            .rev()
            .find(|&j| !below_pow3(member.count(j), j, i + 1))
            .map_or(start + 1, |j| j + 1);
        let (survivors, block) = claim(bucket, &q, n, start, end);
        let next = survivors.iter().copied().find(|&m| m > n);
        steps.push(StarStep { member: n, start, end, block, survivors: survivors.clone() });
        q = survivors;
        match next {
            Some(m) => {
                n = m;
                start = end;
            }
            None => break,
        }
    }

    let indices: Vec<usize> = steps.iter().map(|s| s.member).collect();
    let union = Slalom::union_all(horizon, indices.iter().map(|&i| &bucket[i]))?.below(horizon);
    let mut refinement = StarRefinement { cutoff, indices, union, steps, bounds: Vec::new(), failures: Vec::new() };
    verify(bucket, horizon, &mut refinement);
    Ok(refinement)
}

/// Rechecks the stepwise conditions and the levelwise three-part bound.
fn verify(bucket: &[Slalom], horizon: u32, r: &mut StarRefinement) {
    let steps = &r.steps;
    let mut failures = Vec::new();
    let mut previous: Vec<usize> = (0..bucket.len()).collect();
    for (i, s) in steps.iter().enumerate() {
        if s.end <= s.start {
            failures.push(format!("round {i}: interval [{}, {}) is empty", s.start, s.end));
        }
        if i > 0 && (s.start != steps[i - 1].end || s.member <= steps[i - 1].member) {
            failures.push(format!("round {i}: does not continue the previous round"));
        }
        if !block_admissible(&s.block, s.start) {
            failures.push(format!("round {i}: block density reaches 1/3"));
        }
        if !s.survivors.iter().all(|m| previous.contains(m)) || !s.survivors.contains(&s.member) {
            failures.push(format!("round {i}: survivors are not a subset containing the member"));
        }
        for &m in &s.survivors {
            for (set, j) in s.block.iter().zip(s.start..) {
                if !bucket[m].level_or_empty(j).is_subset(set) {
                    failures.push(format!("round {i}: member {m} leaves the block at level {j}"));
                }
            }
        }
        let e = i as u32 + 1;
        if let Some(j) = (s.end..horizon).find(|&j| !below_pow3(bucket[s.member].count(j), j, e)) {
            failures.push(format!("round {i}: member {} has density ≥ 3^-{e} at level {j}", s.member));
        }
        previous = s.survivors.clone();
    }

    let third = ratio(1, 3);
    for j in 0..horizon {
        let total = r.union.count(j);
        if total >= 1u64 << j.min(63) && j < 64 {
            failures.push(format!("union saturates level {j}"));
        }
        if j < r.cutoff {
            continue;
        }
        // round owning level j: the last one starting at or below it
        let owner = steps.iter().rposition(|s| s.start <= j).expect("cutoff is the first start");
        let owner = if j >= steps[owner].end { steps.len() } else { owner };
        let gather = |range: std::ops::Range<usize>| {
            steps[range].iter().fold(LevelSet::empty(j), |acc, s| acc.union(&bucket[s.member].level_or_empty(j)))
        };
        let history = gather(0..owner.min(steps.len()));
        let block = gather(owner.min(steps.len())..steps.len());
        let budget: Rational = (0..owner as u32).map(|m| pow3_rational(m + 1).recip()).sum();
        let width = Rational::from_integer((1u64 << j).into());
        if Rational::from_integer(block.len().into()) >= &width * &third {
            failures.push(format!("block part at level {j} reaches 2^{j}/3"));
        }
        if !history.is_empty() && Rational::from_integer(history.len().into()) >= &width * &budget {
            failures.push(format!("history part at level {j} exceeds its budget"));
        }
        r.bounds.push(LevelBound {
            level: j,
            total,
            block: block.len(),
            history: history.len(),
            history_budget: budget,
        });
    }
    r.failures = failures;
}

fn pow3_rational(e: u32) -> Rational {
    Rational::from_integer(num_bigint::BigInt::from(3u8).pow(e))
}
