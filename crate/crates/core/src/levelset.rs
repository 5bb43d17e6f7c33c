//! Horizontal sections `S(n) ⊆ 2^n` of a slalom.
//!
//! Levels up to [`DENSE_MAX_LEVEL`] are stored as bitsets of width `2^n`;
//! higher levels are stored as sorted column lists, since sets of bounded
//! density at level 31 cannot be materialized as bitsets. The representation
//! is a function of the level alone, so structural equality is set equality.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Highest level stored densely (`2^12` bits, 64 words).
pub const DENSE_MAX_LEVEL: u32 = 12;
/// Columns are `u64`, so levels must stay below 64.
pub const MAX_LEVEL: u32 = 62;

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Dense(Vec<u64>),
    Sparse(Vec<u64>),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LevelSet {
    level: u32,
    repr: Repr,
}

impl LevelSet {
    pub fn empty(level: u32) -> Self {
        assert!(level <= MAX_LEVEL, "level {level} above {MAX_LEVEL}");
        let repr =
            if level <= DENSE_MAX_LEVEL { Repr::Dense(vec![0; words_for(level)]) } else { Repr::Sparse(Vec::new()) };
        LevelSet { level, repr }
    }

    /// The whole level `2^n`. Only sensible for dense levels.
    pub fn full(level: u32) -> Self {
        let width = 1u64 << level;
        LevelSet::from_columns(level, 0..width).expect("columns in range")
    }

    pub fn from_columns<I: IntoIterator<Item = u64>>(level: u32, columns: I) -> Result<Self> {
        let mut set = LevelSet::empty(level);
        let width = set.width();
        match &mut set.repr {
            Repr::Dense(words) => {
                for c in columns {
                    if c >= width {
                        return Err(Error::ColumnOutOfRange { level, column: c });
                    }
                    words[(c / 64) as usize] |= 1 << (c % 64);
                }
            }
            Repr::Sparse(cols) => {
                for c in columns {
                    if c >= width {
                        return Err(Error::ColumnOutOfRange { level, column: c });
                    }
                    cols.push(c);
                }
                cols.sort_unstable();
                cols.dedup();
            }
        }
        Ok(set)
    }

    /// Builds a set from the low `2^level` bits of `mask` (levels ≤ 6).
    pub fn from_mask(level: u32, mask: u64) -> Self {
        assert!(level <= 6);
        let width = 1u64 << level;
        let m = if width == 64 { mask } else { mask & ((1u64 << width) - 1) };
        LevelSet { level, repr: Repr::Dense(vec![m]) }
    }

    /// Low-level bitmask of the set (levels ≤ 6).
    pub fn mask(&self) -> u64 {
        assert!(self.level <= 6);
        match &self.repr {
            Repr::Dense(w) => w[0],
            Repr::Sparse(_) => unreachable!(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn width(&self) -> u64 {
        1u64 << self.level
    }

    pub fn len(&self) -> u64 {
        match &self.repr {
            Repr::Dense(w) => w.iter().map(|x| x.count_ones() as u64).sum(),
            Repr::Sparse(c) => c.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.repr {
            Repr::Dense(w) => w.iter().all(|&x| x == 0),
            Repr::Sparse(c) => c.is_empty(),
        }
    }

    pub fn is_saturated(&self) -> bool {
        self.len() >= self.width()
    }

    pub fn contains(&self, column: u64) -> bool {
        match &self.repr {
            Repr::Dense(w) => column < self.width() && w[(column / 64) as usize] >> (column % 64) & 1 == 1,
            Repr::Sparse(c) => c.binary_search(&column).is_ok(),
        }
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.repr {
            Repr::Dense(words) => Box::new(words.iter().enumerate().flat_map(|(i, &w)| {
                let base = i as u64 * 64;
                BitIter(w).map(move |b| base + b)
            })),
            Repr::Sparse(c) => Box::new(c.iter().copied()),
        }
    }

    pub fn columns(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn is_subset(&self, other: &LevelSet) -> bool {
        debug_assert_eq!(self.level, other.level);
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => a.iter().zip(b).all(|(x, y)| x & !y == 0),
            _ => self.iter().all(|c| other.contains(c)),
        }
    }

    pub fn union(&self, other: &LevelSet) -> LevelSet {
        debug_assert_eq!(self.level, other.level);
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => {
                LevelSet { level: self.level, repr: Repr::Dense(a.iter().zip(b).map(|(x, y)| x | y).collect()) }
            }
            (Repr::Sparse(a), Repr::Sparse(b)) => {
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() || j < b.len() {
                    let next = match (a.get(i), b.get(j)) {
                        (Some(&x), Some(&y)) if x == y => {
                            i += 1;
                            j += 1;
                            x
                        }
                        (Some(&x), Some(&y)) if x < y => {
                            i += 1;
                            x
                        }
                        (Some(_), Some(&y)) => {
                            j += 1;
                            y
                        }
                        (Some(&x), None) => {
                            i += 1;
                            x
                        }
                        (None, Some(&y)) => {
                            j += 1;
                            y
                        }
                        (None, None) => unreachable!(),
                    };
                    out.push(next);
                }
                LevelSet { level: self.level, repr: Repr::Sparse(out) }
            }
            _ => unreachable!("representation is determined by level"),
        }
    }

    pub fn intersection(&self, other: &LevelSet) -> LevelSet {
        debug_assert_eq!(self.level, other.level);
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => {
                LevelSet { level: self.level, repr: Repr::Dense(a.iter().zip(b).map(|(x, y)| x & y).collect()) }
            }
            _ => LevelSet::from_columns(self.level, self.iter().filter(|&c| other.contains(c)))
                .expect("subset of a valid set"),
        }
    }

    pub fn difference(&self, other: &LevelSet) -> LevelSet {
        debug_assert_eq!(self.level, other.level);
        match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => {
                LevelSet { level: self.level, repr: Repr::Dense(a.iter().zip(b).map(|(x, y)| x & !y).collect()) }
            }
            _ => LevelSet::from_columns(self.level, self.iter().filter(|&c| !other.contains(c)))
                .expect("subset of a valid set"),
        }
    }

    /// `2^n ∖ self`. Only sensible for dense levels or very full sets.
    pub fn complement(&self) -> LevelSet {
        LevelSet::from_columns(self.level, (0..self.width()).filter(|&c| !self.contains(c))).expect("columns in range")
    }

    pub fn with(&self, column: u64) -> Result<LevelSet> {
        if column >= self.width() {
            return Err(Error::ColumnOutOfRange { level: self.level, column });
        }
        let mut out = self.clone();
        match &mut out.repr {
            Repr::Dense(w) => w[(column / 64) as usize] |= 1 << (column % 64),
            Repr::Sparse(c) => {
                if let Err(pos) = c.binary_search(&column) {
                    c.insert(pos, column);
                }
            }
        }
        Ok(out)
    }

    /// Smallest column not in the set.
    pub fn min_excluded(&self) -> Option<u64> {
        match &self.repr {
            Repr::Dense(words) => {
                for (i, &w) in words.iter().enumerate() {
                    if w != u64::MAX {
                        let c = i as u64 * 64 + (!w).trailing_zeros() as u64;
                        return (c < self.width()).then_some(c);
                    }
                }
                None
            }
            Repr::Sparse(cols) => {
                let mut expect = 0u64;
                for &c in cols {
                    if c != expect {
                        break;
                    }
                    expect += 1;
                }
                (expect < self.width()).then_some(expect)
            }
        }
    }

    /// Lexicographic comparison of the ascending column lists.
    pub fn cmp_lex(&self, other: &LevelSet) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

fn words_for(level: u32) -> usize {
    (1u64 << level).div_ceil(64) as usize
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as u64;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.level)?;
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_agree() {
        for level in [3u32, DENSE_MAX_LEVEL, DENSE_MAX_LEVEL + 1, 31] {
            let width = 1u64 << level;
            let a = LevelSet::from_columns(level, [0, 1, width - 1]).unwrap();
            let b = LevelSet::from_columns(level, [1, 2]).unwrap();
            assert_eq!(a.union(&b).columns(), vec![0, 1, 2, width - 1]);
            assert_eq!(a.intersection(&b).columns(), vec![1]);
            assert_eq!(a.difference(&b).columns(), vec![0, width - 1]);
            assert_eq!(a.min_excluded(), Some(2));
            assert!(!a.is_subset(&b));
            assert!(a.intersection(&b).is_subset(&b));
            assert_eq!(a.len(), 3);
        }
    }

    #[test]
    fn saturation_and_range() {
        let full = LevelSet::full(2);
        assert!(full.is_saturated());
        assert_eq!(full.min_excluded(), None);
        assert!(LevelSet::from_columns(2, [4]).is_err());
        assert!(LevelSet::empty(0).min_excluded() == Some(0));
        assert_eq!(LevelSet::from_mask(2, 0b1011).columns(), vec![0, 1, 3]);
    }
}
