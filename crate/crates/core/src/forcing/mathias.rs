use std::collections::BTreeSet;

use super::QCondition;
use crate::ideal::{status_of, Ideal, Status};
use crate::levelset::LevelSet;
use crate::slalom::{enum_bijection_inverse, Slalom};

/// `(s, F)` with `s` finite and `F = [2^floor, ∞) ∖ f[removed]`, where `f`
/// sends `(n, i)` to `2^n + i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MathiasCondition {
    pub s: BTreeSet<u64>,
    pub floor: u32,
    /// Levels `≥ floor` of the excluded slalom; empty below `floor`.
    pub removed: Slalom,
}

impl MathiasCondition {
    /// Columns of `F` at level `k`, i.e. `F ∩ [2^k, 2^(k+1))` shifted down.
    pub fn f_level(&self, k: u32) -> LevelSet {
        if k < self.floor {
            LevelSet::empty(k)
        } else {
            self.removed.level_or_empty(k).complement()
        }
    }

    pub fn f_contains(&self, x: u64) -> bool {
        match enum_bijection_inverse(x) {
            Ok((k, i)) => self.f_level(k).contains(i),
            Err(_) => false,
        }
    }

    /// Failures of the poset conditions below `horizon`: `F` above `max s`,
    /// the complement of `F` in the density-zero ideal, and every dyadic
    /// interval meeting `s ∪ F`.
    pub fn violations(&self, horizon: u32) -> Vec<String> {
        let mut out = Vec::new();
        if self.s.iter().any(|&x| x >= 1u64 << self.floor) {
            out.push(format!("s reaches past 2^{}", self.floor));
        }
        if status_of(&self.filter_complement(), Ideal::J) != Status::Yes {
            out.push("complement of F is not density zero".into());
        }
        for k in 0..horizon {
            let lo = 1u64 << k;
            let hits_s = self.s.range(lo..lo << 1).next().is_some();
            if !hits_s && self.f_level(k).is_empty() {
                out.push(format!("s ∪ F misses [2^{k}, 2^{})", k + 1));
            }
        }
        out
    }

    /// `s ⊆ 2^n`, `F ⊆ [2^n, ∞)` and `|F ∩ [2^n, 2^(n+1))| > 1`.
    pub fn in_range(&self) -> bool {
        let n = self.floor;
        self.s.iter().all(|&x| x < 1u64 << n) && self.f_level(n).len() > 1
    }

    /// The complement of `F` as a slalom: every level below `floor`, then
    /// the removed columns.
    pub fn filter_complement(&self) -> Slalom {
        let h = self.removed.horizon().max(self.floor);
        let levels = (0..h)
            .map(|k| if k < self.floor { LevelSet::full(k) } else { self.removed.level_or_empty(k).into_owned() })
            .collect();
        Slalom::from_levels(levels).expect("levels are in range")
    }
}

/// `(2^n ∖ f[S], f[A]^c ∖ 2^n)` for the canonical `T_A ∩ T_(S,n)`.
pub fn mathias_embed(p: &QCondition) -> MathiasCondition {
    let n = p.window().level();
    let trace = p.window().trace();
    let mut s: BTreeSet<u64> = [0].into_iter().collect();
    for j in 0..n {
        s.extend(trace.levels()[j as usize].complement().iter().map(|i| (1u64 << j) + i));
    }
    MathiasCondition { s, floor: n, removed: p.set_part().from_level(n).trimmed() }
}

/// `p ≤ q` in the Mathias order: `s_q ⊆ s_p`, `F_p ⊆ F_q`, `s_p ∖ s_q ⊆ F_q`.
pub fn mathias_le(p: &MathiasCondition, q: &MathiasCondition) -> bool {
    if !q.s.is_subset(&p.s) {
        return false;
    }
    if !p.s.difference(&q.s).all(|&x| q.f_contains(x)) {
        return false;
    }
    // past both horizons both F-levels are full from their floors
    let top = p.removed.horizon().max(q.removed.horizon()).max(p.floor).max(q.floor) + 1;
    (p.floor..top).all(|k| p.f_level(k).is_subset(&q.f_level(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omega::{canonicalize, OmegaPoint};

    fn slalom(rows: &[(u32, &[u64])], h: u32) -> Slalom {
        Slalom::from_table(h, rows.iter().map(|(n, c)| (*n, c.to_vec()))).unwrap()
    }

    #[test]
    fn embedding_examples() {
        let w = OmegaPoint::new(Slalom::empty(2)).unwrap();
        let p = canonicalize(&Slalom::empty(0), &w).unwrap();
        let e = mathias_embed(&p);
        assert_eq!(e.s, [0, 1, 2, 3].into_iter().collect());
        assert!((4..64).all(|x| e.f_contains(x)));
        assert!(!e.f_contains(3));

        let w = OmegaPoint::new(slalom(&[(1, &[0])], 2)).unwrap();
        let a = slalom(&[(2, &[1]), (3, &[0, 2])], 4);
        let p = canonicalize(&a, &w).unwrap();
        let e = mathias_embed(&p);
        assert_eq!(e.s, [0, 1, 3].into_iter().collect());
        let missing: Vec<u64> = (4..32).filter(|&x| !e.f_contains(x)).collect();
        assert_eq!(missing, vec![5, 8, 10]);
        assert!(e.violations(8).is_empty());
        assert!(e.in_range());
        assert_eq!(status_of(&e.filter_complement(), Ideal::J), Status::Yes);
    }

    #[test]
    fn order_matches_on_a_chain() {
        let w2 = OmegaPoint::new(slalom(&[(1, &[1])], 2)).unwrap();
        let w3 = OmegaPoint::new(slalom(&[(1, &[1]), (2, &[2])], 3)).unwrap();
        let a = slalom(&[(2, &[2]), (3, &[7])], 4);
        let p = mathias_embed(&canonicalize(&a, &w2).unwrap());
        let q = mathias_embed(&canonicalize(&a, &w3).unwrap());
        assert!(mathias_le(&q, &p));
        assert!(!mathias_le(&p, &q));
        assert!(mathias_le(&p, &p));
    }
}
