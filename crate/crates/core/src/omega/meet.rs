//! Deciding whether a conjunction of generators and negated generators is
//! infinite.
//!
//! All generator slaloms have empty tails, so above `M0` (the largest level
//! any literal mentions) set-parts are empty and windows are closed. A point
//! `(T, m)` with `m ≥ M0` satisfies the conjunction iff its restriction to
//! `M0` does, with the levels in `[M0, m)` free. Hence either every level from
//! `M0` on carries points (infinite), or none does and the points sit at the
//! finitely many levels below `M0`.
//!
//! Existence at a level is a search over traces: fixed levels copy the
//! window, free levels range over unsaturated supersets of the positive
//! union, and each negated literal must be escaped at some level (a negated
//! `T_B` needs `B(j) ⊄ T(j)`, a negated window needs `T(j) ≠ S'(j)` below its
//! level). The search is a dynamic program over the set of escaped literals.

use std::collections::HashMap;

use super::count::{reduce, Reduced};
use super::{Conjunct, Generator, OmegaPoint, Term};
use crate::error::{Error, Result};
use crate::levelset::LevelSet;
use crate::slalom::Slalom;

const NEGATIVE_CAP: usize = 20;
const CANDIDATE_CAP: u64 = 200_000;

/// Candidate sets at one level, each tagged with the negatives it escapes,
/// and the reachable escape masks with a back-pointer.
type Layer = (Vec<(LevelSet, u32)>, HashMap<u32, (u32, usize)>);

/// Points `(R ∪ ∅ on [start, m), m)` for every `m ≥ start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessSchema {
    low: OmegaPoint,
}

impl WitnessSchema {
    pub fn start(&self) -> u32 {
        self.low.level()
    }

    pub fn low_trace(&self) -> &OmegaPoint {
        &self.low
    }

    pub fn point(&self, m: u32) -> Result<OmegaPoint> {
        self.low.lifted(m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeetVerdict {
    Infinite(WitnessSchema),
    /// Points exist, and `bound` is the highest level carrying one.
    Finite {
        bound: u32,
    },
    Empty,
}

impl MeetVerdict {
    pub fn is_infinite(&self) -> bool {
        matches!(self, MeetVerdict::Infinite(_))
    }
}

/// Decides `⋂ T_{A_i} ∩ T_(S,n) ∖ ⋃ negatives`.
pub fn meet_infinitude(
    positives: &[Slalom],
    window: Option<&OmegaPoint>,
    negatives: &[Generator],
) -> Result<MeetVerdict> {
    let mut pos: Vec<Generator> = positives.iter().cloned().map(Generator::Set).collect();
    pos.extend(window.cloned().map(Generator::Window));
    conjunct_infinitude(&Conjunct::new(pos, negatives.to_vec()))
}

pub fn conjunct_infinitude(c: &Conjunct) -> Result<MeetVerdict> {
    c.check_tails()?;
    if c.negatives.len() > NEGATIVE_CAP {
        return Err(Error::TooManyNegatives { count: c.negatives.len(), cap: NEGATIVE_CAP });
    }
    let Some(reduced) = reduce(&c.positives)? else {
        return Ok(MeetVerdict::Empty);
    };
    Search::new(reduced, &c.negatives).decide()
}

/// A term is infinite iff one of its disjuncts is.
pub fn term_is_infinite(t: &Term) -> Result<bool> {
    for c in &t.disjuncts {
        if conjunct_infinitude(c)?.is_infinite() {
            return Ok(true);
        }
    }
    Ok(false)
}

struct Search<'a> {
    reduced: Reduced,
    negatives: &'a [Generator],
    n: u32,
    m0: u32,
}

impl<'a> Search<'a> {
    fn new(reduced: Reduced, negatives: &'a [Generator]) -> Self {
        let n = reduced.window.as_ref().map_or(0, OmegaPoint::level);
        let m0 = negatives.iter().map(Generator::reach).chain([reduced.union.support_end(), n]).max().unwrap_or(0);
        Search { reduced, negatives, n, m0 }
    }

    fn fixed(&self, j: u32) -> Option<&LevelSet> {
        self.reduced.window.as_ref().filter(|w| j < w.level()).map(|w| &w.trace().levels()[j as usize])
    }

    fn decide(&self) -> Result<MeetVerdict> {
        for j in 0..self.n {
            let s = self.fixed(j).expect("below window level");
            if !self.reduced.union.level_or_empty(j).is_subset(s) {
                return Ok(MeetVerdict::Empty);
            }
        }
        let saturated =
            (self.n..self.reduced.union.support_end()).find(|&j| self.reduced.union.level_or_empty(j).is_saturated());
        if saturated.is_none() {
            if let Some(low) = self.find_trace(self.m0)? {
                return Ok(MeetVerdict::Infinite(WitnessSchema { low }));
            }
        }
        let top = saturated.unwrap_or(self.m0);
        for m in (self.n..=top).rev() {
            if self.find_trace(m)?.is_some() {
                return Ok(MeetVerdict::Finite { bound: m });
            }
        }
        Ok(MeetVerdict::Empty)
    }

    /// Bits of the negatives escaped by choosing `r` at level `j` of a
    /// level-`m` point.
    fn escape_mask(&self, j: u32, r: &LevelSet, m: u32) -> u32 {
        let mut mask = 0u32;
        for (i, g) in self.negatives.iter().enumerate() {
            let hit = match g {
                Generator::Set(b) => !b.level_or_empty(j).is_subset(r),
                Generator::Window(w) => w.level() > m || (j < w.level() && w.trace().levels()[j as usize] != *r),
            };
            if hit {
                mask |= 1 << i;
            }
        }
        mask
    }

    fn candidates(&self, j: u32, m: u32) -> Result<Vec<(LevelSet, u32)>> {
        if let Some(s) = self.fixed(j) {
            return Ok(vec![(s.clone(), self.escape_mask(j, s, m))]);
        }
        let u = self.reduced.union.level_or_empty(j).into_owned();
        if u.is_saturated() {
            return Ok(Vec::new());
        }
        let mut sets = vec![u.clone()];
        if u.len() + 1 < u.width() {
            let mut relevant = u.clone();
            let mut avoids = 0u64;
            for g in self.negatives {
                match g {
                    Generator::Set(b) => relevant = relevant.union(&b.level_or_empty(j)),
                    Generator::Window(w) if j < w.level() && w.level() <= m => {
                        relevant = relevant.union(&w.trace().levels()[j as usize]);
                        avoids += 1;
                    }
                    Generator::Window(_) => {}
                }
            }
            match relevant.min_excluded() {
                // A column no literal mentions escapes every window and
                // costs no escape of a negated set-part.
                Some(fresh) => sets.push(u.with(fresh)?),
                None => sets.extend(small_extensions(&u, avoids)?),
            }
        }
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for r in sets {
            let mask = self.escape_mask(j, &r, m);
            if seen.insert(mask, ()).is_none() {
                out.push((r, mask));
            }
        }
        Ok(out)
    }

    /// A level-`m` trace satisfying every literal, if one exists.
    fn find_trace(&self, m: u32) -> Result<Option<OmegaPoint>> {
        if m < self.n {
            return Ok(None);
        }
        let k = self.negatives.len();
        let full: u32 = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
        let mut layers: Vec<Layer> = Vec::new();
        let mut frontier: Vec<u32> = vec![0];
        for j in 0..m {
            let cands = self.candidates(j, m)?;
            if cands.is_empty() {
                return Ok(None);
            }
            let mut next: HashMap<u32, (u32, usize)> = HashMap::new();
            for &prev in &frontier {
                for (idx, (_, mask)) in cands.iter().enumerate() {
                    next.entry(prev | mask).or_insert((prev, idx));
                }
            }
            frontier = {
                let mut f: Vec<u32> = next.keys().copied().collect();
                f.sort_unstable();
                f
            };
            layers.push((cands, next));
        }
        // A level-0 point has no levels to escape at; windows above it are
        // escaped vacuously.
        let target = if m == 0 {
            let vacuous = self
                .negatives
                .iter()
                .enumerate()
                .filter(|(_, g)| matches!(g, Generator::Window(w) if w.level() > 0))
                .fold(0u32, |acc, (i, _)| acc | 1 << i);
            if vacuous != full {
                return Ok(None);
            }
            return Ok(Some(OmegaPoint::new(Slalom::empty(0))?));
        } else {
            full
        };
        if !frontier.contains(&target) {
            return Ok(None);
        }
        let mut levels = vec![LevelSet::empty(0); m as usize];
        let mut mask = target;
        for j in (0..m as usize).rev() {
            let (cands, back) = &layers[j];
            let (prev, idx) = back[&mask];
            levels[j] = cands[idx].0.clone();
            mask = prev;
        }
        Ok(Some(OmegaPoint::new(Slalom::from_levels(levels)?)?))
    }
}

/// `u ∪ C` for every non-empty `C` of at most `size` columns outside `u`
/// that leaves the level unsaturated. Enough to escape `size` windows: each
/// added column can be forced only by a window equal to the current set.
fn small_extensions(u: &LevelSet, size: u64) -> Result<Vec<LevelSet>> {
    let free = u.complement().columns();
    let mut total = 0u64;
    let mut binom = 1u64;
    for i in 1..=size.min(free.len() as u64) {
        binom = binom.saturating_mul(free.len() as u64 - i + 1) / i;
        total = total.saturating_add(binom);
    }
    if total > CANDIDATE_CAP {
        return Err(Error::SearchTooLarge(format!("{total} candidate sets at level {}", u.level())));
    }
    let mut out = Vec::new();
    let mut stack: Vec<(usize, LevelSet, u64)> = vec![(0, u.clone(), 0)];
    while let Some((start, set, used)) = stack.pop() {
        if used == size {
            continue;
        }
        for (i, &c) in free.iter().enumerate().skip(start) {
            let bigger = set.with(c)?;
            if bigger.is_saturated() {
                continue;
            }
            out.push(bigger.clone());
            stack.push((i + 1, bigger, used + 1));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::omega::{count_conjunct, enum_omega, eval_conjunct};
    use num_traits::Zero;

    fn slalom(rows: &[(u32, &[u64])], h: u32) -> Slalom {
        Slalom::from_table(h, rows.iter().map(|(n, c)| (*n, c.to_vec()))).unwrap()
    }

    fn pt(rows: &[(u32, &[u64])], level: u32) -> OmegaPoint {
        OmegaPoint::new(slalom(rows, level)).unwrap()
    }

    #[test]
    fn saturating_union_is_finite_at_that_level() {
        let a = slalom(&[(2, &[0, 1])], 3);
        let b = slalom(&[(2, &[2, 3])], 3);
        let v = meet_infinitude(&[a.clone(), b.clone()], None, &[]).unwrap();
        assert_eq!(v, MeetVerdict::Finite { bound: 2 });
        let c = Conjunct::new(vec![Generator::Set(a), Generator::Set(b)], vec![]);
        for m in 3..=6 {
            assert!(count_conjunct(&c, m, Exec::Sequential).unwrap().is_zero());
        }
    }

    #[test]
    fn self_negation_is_empty() {
        let a = slalom(&[(1, &[0]), (3, &[5])], 4);
        let v = meet_infinitude(std::slice::from_ref(&a), None, &[Generator::Set(a.clone())]).unwrap();
        assert_eq!(v, MeetVerdict::Empty);
    }

    #[test]
    fn unsaturated_union_is_infinite_with_growing_counts() {
        let a = slalom(&[(1, &[0]), (2, &[1])], 3);
        let b = slalom(&[(2, &[2]), (3, &[0, 1, 2])], 4);
        let v = meet_infinitude(&[a.clone(), b.clone()], None, &[]).unwrap();
        let MeetVerdict::Infinite(w) = v else { panic!("expected infinite") };
        assert_eq!(w.start(), 4);
        let c = Conjunct::new(vec![Generator::Set(a), Generator::Set(b)], vec![]);
        let counts: Vec<_> = (0..=12).map(|m| count_conjunct(&c, m, Exec::Sequential).unwrap()).collect();
        assert!(counts.windows(2).skip(4).all(|p| p[1] > p[0]));
        for m in 4..=10 {
            assert!(eval_conjunct(&c, &w.point(m).unwrap()));
        }
    }

    #[test]
    fn negated_windows_need_escapes() {
        // window (∅ on 1, level 2) minus every window at level 3 extending it
        let base = pt(&[], 2);
        let negs: Vec<Generator> = [0u64, 1, 2]
            .iter()
            .flat_map(|&x| [vec![], vec![x]])
            .map(|cols| Generator::Window(pt(&[(2, &cols)], 3)))
            .collect();
        let v = meet_infinitude(&[], Some(&base), &negs).unwrap();
        let MeetVerdict::Infinite(w) = v else { panic!("expected infinite") };
        let c = Conjunct::new(vec![Generator::Window(base.clone())], negs.clone());
        assert!(eval_conjunct(&c, &w.point(5).unwrap()));
        // every unsaturated level-2 set excluded: only the level-2 point is left
        let all: Vec<Generator> = (0u64..15)
            .map(|mask| {
                Generator::Window(
                    OmegaPoint::new(
                        Slalom::from_levels(vec![LevelSet::empty(0), LevelSet::empty(1), LevelSet::from_mask(2, mask)])
                            .unwrap(),
                    )
                    .unwrap(),
                )
            })
            .collect();
        assert_eq!(meet_infinitude(&[], Some(&base), &all).unwrap(), MeetVerdict::Finite { bound: 2 });
    }

    #[test]
    fn agrees_with_enumeration_on_small_cases() {
        let pts = enum_omega(4, Exec::Parallel).unwrap();
        let a = slalom(&[(1, &[1]), (2, &[0, 3])], 3);
        let b = slalom(&[(2, &[0, 1, 2])], 3);
        let w = pt(&[(1, &[1])], 2);
        let cases = vec![
            Conjunct::new(vec![Generator::Set(a.clone())], vec![Generator::Set(b.clone())]),
            Conjunct::new(vec![Generator::Set(a.clone()), Generator::Set(b.clone())], vec![]),
            Conjunct::new(vec![Generator::Window(w.clone())], vec![Generator::Set(a.clone())]),
            Conjunct::new(vec![Generator::Set(b.clone()), Generator::Window(w)], vec![Generator::Set(a)]),
        ];
        for c in cases {
            let v = conjunct_infinitude(&c).unwrap();
            let top = pts.iter().filter(|p| eval_conjunct(&c, p)).map(|p| p.level()).max();
            match v {
                MeetVerdict::Infinite(_) => assert_eq!(top, Some(4), "{c:?}"),
                MeetVerdict::Finite { bound } => assert_eq!(top, Some(bound), "{c:?}"),
                MeetVerdict::Empty => assert_eq!(top, None, "{c:?}"),
            }
        }
    }

    #[test]
    fn rule_tails_rejected() {
        use crate::rational::ratio;
        use crate::slalom::{Tail, TailRule};
        let r = Slalom::empty(2).with_tail(Tail::Rule(TailRule::geometric(2, ratio(1, 2)).unwrap())).unwrap();
        assert_eq!(meet_infinitude(&[r], None, &[]), Err(Error::RuleTail));
    }
}
