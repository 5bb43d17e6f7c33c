//! Finite shadows of chain conditions on the generated algebra: centered
//! families, intersection numbers, linked partitions, the property (*)
//! refinement, and diagonal witnesses against σ-centeredness.

mod star;

pub use star::{bucket_key, linked_partition, star_refine, BucketKey, LinkedPartition, StarRefinement, StarStep};

use std::collections::HashMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::omega::{
    conjunct_infinitude, count_term, term_is_infinite, Conjunct, Generator, MeetVerdict, OmegaPoint, Term, COUNT_CAP,
};
use crate::rational::{ratio, Rational};
use crate::slalom::{graph_of, PathReal, Slalom};

/// A finite family is centered (modulo finite sets) iff its meet is infinite.
pub fn is_centered(terms: &[Term]) -> Result<bool> {
    let meet = terms.iter().fold(Term::one(), |acc, t| acc.and(t));
    term_is_infinite(&meet)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationWitness {
    pub level: u32,
    /// Members whose union covers the level, at most one per column.
    pub indices: Vec<usize>,
}

/// The least level saturated by the union of the family, with members
/// covering it: for each column in order, the first member containing it.
pub fn saturation_witness(family: &[Slalom]) -> Option<SaturationWitness> {
    let top = family.iter().map(Slalom::horizon).max().unwrap_or(0);
    for m in 0..top {
        let width = 1u64 << m;
        if m > 20 {
            // a union of finitely many sparse members cannot cover 2^21 columns
            // without some member being dense; check exactly via counts
            let total: u64 = family.iter().map(|s| s.count(m)).sum();
            if total < width {
                continue;
            }
        }
        let union = family.iter().fold(crate::levelset::LevelSet::empty(m), |acc, s| acc.union(&s.level_or_empty(m)));
        if union.is_saturated() {
            let mut indices: Vec<usize> = (0..width)
                .map(|c| family.iter().position(|s| s.level_or_empty(m).contains(c)).expect("covered"))
                .collect();
            indices.sort_unstable();
            indices.dedup();
            return Some(SaturationWitness { level: m, indices });
        }
    }
    None
}

/// `min over multisets M of size ≤ L of (largest centered sub-multiset) / |M|`.
pub fn kelley_number(terms: &[Term], max_len: u32, exec: Exec) -> Result<Rational> {
    if max_len == 0 || max_len > 8 {
        return Err(Error::Precondition(format!("multiset length {max_len} outside 1..=8")));
    }
    if terms.len() > 24 {
        return Err(Error::SearchTooLarge(format!("{} terms", terms.len())));
    }
    for (i, t) in terms.iter().enumerate() {
        if !term_is_infinite(t)? {
            return Err(Error::ZeroTerm(format!("term {i}")));
        }
    }
    let t = terms.len();
    if t == 0 {
        return Ok(Rational::zero());
    }
    // Centeredness of every support of size ≤ L.
    let supports: Vec<u32> = (1u32..1 << t).filter(|s| s.count_ones() <= max_len).collect();
    let flags: Vec<Result<bool>> = exec.map(&supports, |&s| {
        let chosen: Vec<Term> = (0..t).filter(|i| s >> i & 1 == 1).map(|i| terms[i].clone()).collect();
        is_centered(&chosen)
    });
    let mut centered = HashMap::with_capacity(supports.len());
    for (s, f) in supports.iter().zip(flags) {
        centered.insert(*s, f?);
    }

    let multisets = multisets_up_to(t, max_len);
    let ratios: Vec<Rational> = exec.map(&multisets, |counts| {
        let size: u32 = counts.iter().sum();
        let support: u32 = (0..t).filter(|&i| counts[i] > 0).fold(0, |acc, i| acc | 1 << i);
        let mut best = 0;
        let mut sub = support;
        while sub != 0 {
            if centered[&sub] {
                let weight: u32 = (0..t).filter(|i| sub >> i & 1 == 1).map(|i| counts[i]).sum();
                best = best.max(weight);
            }
            sub = (sub - 1) & support;
        }
        ratio(best as i64, size as i64)
    });
    Ok(ratios.into_iter().min().expect("at least one multiset"))
}

/// Count vectors of every multiset of size `1..=max_len` over `t` items.
fn multisets_up_to(t: usize, max_len: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut counts = vec![0u32; t];
    fn rec(i: usize, left: u32, counts: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == counts.len() {
            if counts.iter().any(|&c| c > 0) {
                out.push(counts.clone());
            }
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, out);
        }
        counts[i] = 0;
    }
    rec(0, max_len, &mut counts, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Escape {
    pub index: usize,
    pub value: u64,
    /// `graph(f) ⊄ C_n`, witnessed at level `n`. Level 0 is outside every
    /// graph, so the escape of index 0 is only `f(0) ∉ C_0(0)`.
    pub graph_escapes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalWitness {
    pub path: PathReal,
    pub escapes: Vec<Escape>,
}

/// `f(n) ∉ C_n(n)` for every `n` below the length of the list, choosing the
/// least excluded column.
pub fn diagonal_witness(class_unions: &[Slalom]) -> Result<DiagonalWitness> {
    let values = class_unions
        .iter()
        .enumerate()
        .map(|(n, c)| c.level_or_empty(n as u32).min_excluded().ok_or(Error::Saturated { level: n as u32 }))
        .collect::<Result<Vec<_>>>()?;
    let path = PathReal::new(values)?;
    let graph = graph_of(&path);
    let escapes = class_unions
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let level = n as u32;
            let value = path.at(level);
            Escape {
                index: n,
                value,
                graph_escapes: level > 0 && graph.level(level).is_some_and(|g| !g.is_subset(&c.level_or_empty(level))),
            }
        })
        .collect();
    Ok(DiagonalWitness { path, escapes })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCheck {
    pub window: OmegaPoint,
    pub members: Vec<usize>,
    pub centered: bool,
    /// Points of the class meet at the check depth, as a decimal string.
    pub points_at_depth: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenteredDecomposition {
    /// `(member, window, class)` for every element `T_B ∩ T_(T,n)`.
    pub assignments: Vec<(usize, usize, usize)>,
    pub classes: Vec<ClassCheck>,
}

impl CenteredDecomposition {
    pub fn all_centered(&self) -> bool {
        self.classes.iter().all(|c| c.centered)
    }
}

/// Groups the elements `T_B ∩ T_(T,n)` for members `B ⊆ S` by window. Each
/// class sits above `T_S ∩ T_(T,n)`, so it is centered; this is checked
/// with the meet decision and with an exact count at `depth`.
pub fn centered_decomposition(
    bound: &Slalom,
    family: &[Slalom],
    windows: &[OmegaPoint],
    depth: u32,
) -> Result<CenteredDecomposition> {
    for (i, b) in family.iter().enumerate() {
        if let Some(level) = (0..b.support_end()).find(|&j| !b.level_or_empty(j).is_subset(&bound.level_or_empty(j))) {
            return Err(Error::Precondition(format!("member {i} is not below the bound at level {level}")));
        }
    }
    for w in windows {
        let c = Conjunct::new(vec![Generator::Set(bound.clone()), Generator::Window(w.clone())], vec![]);
        if !conjunct_infinitude(&c)?.is_infinite() {
            return Err(Error::FiniteMeet);
        }
    }
    let depth = depth.min(COUNT_CAP);
    let mut assignments = Vec::new();
    let mut classes = Vec::new();
    for (wi, w) in windows.iter().enumerate() {
        let members: Vec<usize> = (0..family.len()).collect();
        for &b in &members {
            assignments.push((b, wi, wi));
        }
        let mut positives: Vec<Generator> = family.iter().cloned().map(Generator::Set).collect();
        positives.push(Generator::Window(w.clone()));
        let c = Conjunct::new(positives, vec![]);
        let verdict = conjunct_infinitude(&c)?;
        let count = count_term(&Term::conjunct(c), depth, Exec::Sequential)?;
        let centered = matches!(verdict, MeetVerdict::Infinite(ref s) if s.start() > depth || !count.is_zero());
        classes.push(ClassCheck { window: w.clone(), members, centered, points_at_depth: count.to_string() });
    }
    Ok(CenteredDecomposition { assignments, classes })
}
