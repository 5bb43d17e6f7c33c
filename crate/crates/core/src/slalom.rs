//! Slaloms and paths at finite horizon.
//!
//! A [`Slalom`] is an explicit table of level sets below its horizon `H`
//! together with a [`Tail`] describing every level `≥ H`. An empty tail means
//! the object has no data at or above `H`, so every asymptotic question about
//! it has an exact answer. A rule tail only bounds the densities of the unseen
//! levels; questions it cannot settle are reported as undetermined.

use std::borrow::Cow;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::levelset::{LevelSet, MAX_LEVEL};
use crate::rational::{density, pow, Rational};

/// Largest horizon accepted by constructors.
pub const MAX_HORIZON: u32 = 48;

/// One summand of a density rule: at every level `n ≥ H` the density
/// `|S(n)| / 2^n` is bounded by `ratio^(n - first_level + 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeometricTerm {
    pub first_level: u32,
    pub ratio: Rational,
}

/// Density bound for the levels above the horizon: the sum of its terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TailRule {
    terms: Vec<GeometricTerm>,
}

impl TailRule {
    pub fn geometric(first_level: u32, ratio: Rational) -> Result<Self> {
        if ratio < Rational::zero() || ratio >= Rational::one() {
            return Err(Error::InvalidTail(format!("ratio {ratio} outside [0,1)")));
        }
        Ok(TailRule { terms: vec![GeometricTerm { first_level, ratio }] })
    }

    pub fn terms(&self) -> &[GeometricTerm] {
        &self.terms
    }

    /// Bound on `|S(n)| / 2^n` for a level `n ≥ H`.
    pub fn density_bound(&self, level: u32) -> Rational {
        self.terms.iter().map(|t| pow(&t.ratio, level + 1 - t.first_level)).sum()
    }

    /// Closed-form bound on `Σ_{n ≥ from} |S(n)| / 2^n`, for `from ≥ H`.
    pub fn tail_sum_bound(&self, from: u32) -> Rational {
        self.terms.iter().map(|t| pow(&t.ratio, from + 1 - t.first_level) / (Rational::one() - &t.ratio)).sum()
    }

    /// True when every term vanishes, i.e. the unseen levels are empty.
    pub fn is_trivial(&self) -> bool {
        self.terms.iter().all(|t| t.ratio.is_zero())
    }

    fn merged(&self, other: &TailRule) -> TailRule {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        TailRule { terms }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tail {
    Empty,
    Rule(TailRule),
}

impl Tail {
    pub fn is_empty(&self) -> bool {
        matches!(self, Tail::Empty)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Slalom {
    horizon: u32,
    levels: Vec<LevelSet>,
    tail: Tail,
}

/// Exact finite part of a tail sum plus the rule's closed-form allowance; the
/// true value lies in `[finite, finite + rule_bound]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailSum {
    pub finite: Rational,
    pub rule_bound: Rational,
}

impl TailSum {
    pub fn upper(&self) -> Rational {
        &self.finite + &self.rule_bound
    }
    pub fn is_exact(&self) -> bool {
        self.rule_bound.is_zero()
    }
}

impl Slalom {
    pub fn empty(horizon: u32) -> Self {
        Self::check_horizon(horizon).expect("horizon within cap");
        Slalom { horizon, levels: (0..horizon).map(LevelSet::empty).collect(), tail: Tail::Empty }
    }

    fn check_horizon(horizon: u32) -> Result<()> {
        if horizon > MAX_HORIZON || horizon > MAX_LEVEL + 1 {
            return Err(Error::HorizonTooLarge { horizon, max: MAX_HORIZON });
        }
        Ok(())
    }

    /// Builds a slalom from `(level, columns)` rows; unlisted levels are empty.
    pub fn from_table<I, C>(horizon: u32, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, C)>,
        C: IntoIterator<Item = u64>,
    {
        Self::check_horizon(horizon)?;
        let mut s = Slalom::empty(horizon);
        for (level, cols) in rows {
            if level >= horizon {
                return Err(Error::LevelOutsideHorizon { level, horizon });
            }
            let extra = LevelSet::from_columns(level, cols)?;
            s.levels[level as usize] = s.levels[level as usize].union(&extra);
        }
        Ok(s)
    }

    pub fn from_levels(levels: Vec<LevelSet>) -> Result<Self> {
        let horizon = levels.len() as u32;
        Self::check_horizon(horizon)?;
        for (i, l) in levels.iter().enumerate() {
            if l.level() != i as u32 {
                return Err(Error::Precondition(format!("level set for level {} stored at index {i}", l.level())));
            }
        }
        Ok(Slalom { horizon, levels, tail: Tail::Empty })
    }

    pub fn with_tail(mut self, tail: Tail) -> Result<Self> {
        if let Tail::Rule(rule) = &tail {
            for t in rule.terms() {
                if t.first_level > self.horizon {
                    return Err(Error::InvalidTail(format!(
                        "rule starts at level {} above horizon {}",
                        t.first_level, self.horizon
                    )));
                }
            }
        }
        self.tail = tail;
        Ok(self)
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn levels(&self) -> &[LevelSet] {
        &self.levels
    }

    /// Level `n` if it lies below the horizon.
    pub fn level(&self, n: u32) -> Option<&LevelSet> {
        self.levels.get(n as usize)
    }

    /// Level `n`, reading levels at or above the horizon as empty. Callers are
    /// responsible for only doing this on empty-tail slaloms.
    pub fn level_or_empty(&self, n: u32) -> Cow<'_, LevelSet> {
        match self.levels.get(n as usize) {
            Some(l) => Cow::Borrowed(l),
            None => Cow::Owned(LevelSet::empty(n)),
        }
    }

    pub fn count(&self, n: u32) -> u64 {
        self.level(n).map_or(0, LevelSet::len)
    }

    /// One past the highest non-empty level (0 for the empty table).
    pub fn support_end(&self) -> u32 {
        self.levels.iter().rposition(|l| !l.is_empty()).map_or(0, |p| p as u32 + 1)
    }

    pub fn is_table_empty(&self) -> bool {
        self.support_end() == 0
    }

    /// Same data read with a larger horizon. Fails for rule tails, whose
    /// intermediate levels are unknown.
    pub fn extend_to(&self, horizon: u32) -> Result<Slalom> {
        if horizon <= self.horizon {
            return Ok(self.clone());
        }
        if !self.tail.is_empty() {
            return Err(Error::RuleTail);
        }
        Self::check_horizon(horizon)?;
        let mut levels = self.levels.clone();
        levels.extend((self.horizon..horizon).map(LevelSet::empty));
        Ok(Slalom { horizon, levels, tail: Tail::Empty })
    }

    /// Trims an empty-tail slalom to the shortest horizon carrying its data.
    pub fn trimmed(&self) -> Slalom {
        if !self.tail.is_empty() {
            return self.clone();
        }
        let end = self.support_end();
        Slalom { horizon: end, levels: self.levels[..end as usize].to_vec(), tail: Tail::Empty }
    }

    /// Same data with any horizon: equality of the underlying sets for
    /// empty-tail slaloms.
    pub fn same_sets(&self, other: &Slalom) -> bool {
        if self.tail.is_empty() && other.tail.is_empty() {
            let end = self.support_end().max(other.support_end());
            (0..end).all(|n| self.level_or_empty(n) == other.level_or_empty(n))
        } else {
            self == other
        }
    }

    /// `S ∩ (k × ω)`: the data below level `k`, with an empty tail.
    pub fn below(&self, k: u32) -> Slalom {
        let mut levels = self.levels.clone();
        for (n, l) in levels.iter_mut().enumerate() {
            if n as u32 >= k {
                *l = LevelSet::empty(n as u32);
            }
        }
        levels.truncate(k.min(self.horizon) as usize);
        Slalom { horizon: k.min(self.horizon), levels, tail: Tail::Empty }
    }

    /// `S ∩ ([k, ∞) × ω)`.
    pub fn from_level(&self, k: u32) -> Slalom {
        let mut out = self.clone();
        for (n, l) in out.levels.iter_mut().enumerate() {
            if (n as u32) < k {
                *l = LevelSet::empty(n as u32);
            }
        }
        out
    }

    /// Replaces level `n` (which must lie below the horizon).
    pub fn with_level(&self, set: LevelSet) -> Result<Slalom> {
        let n = set.level();
        if n >= self.horizon {
            return Err(Error::LevelOutsideHorizon { level: n, horizon: self.horizon });
        }
        let mut out = self.clone();
        out.levels[n as usize] = set;
        Ok(out)
    }

    /// Levelwise containment `self(n) ⊆ other(n)` for every level of the
    /// tables (empty-tail reading).
    pub fn is_levelwise_subset(&self, other: &Slalom) -> bool {
        (0..self.support_end()).all(|n| self.level_or_empty(n).is_subset(&other.level_or_empty(n)))
    }

    /// First saturated level of the table, if any.
    pub fn first_saturated(&self) -> Option<u32> {
        self.levels.iter().position(LevelSet::is_saturated).map(|p| p as u32)
    }

    /// `Σ_{n<H} |S(n)| / 2^n`.
    pub fn partial_sum(&self) -> Rational {
        self.levels.iter().filter(|l| !l.is_empty()).map(|l| density(l.len(), l.level())).sum()
    }

    /// `Σ_{n ≥ from} |S(n)| / 2^n`, exact on the table plus the rule allowance.
    pub fn tail_sum(&self, from: u32) -> TailSum {
        let finite =
            self.levels.iter().skip(from as usize).filter(|l| !l.is_empty()).map(|l| density(l.len(), l.level())).sum();
        let rule_bound = match &self.tail {
            Tail::Empty => Rational::zero(),
            Tail::Rule(r) => r.tail_sum_bound(from.max(self.horizon)),
        };
        TailSum { finite, rule_bound }
    }

    /// Upper bound on the density of level `n` (exact inside the table).
    pub fn density_bound(&self, n: u32) -> Rational {
        match self.level(n) {
            Some(l) => density(l.len(), n),
            None => match &self.tail {
                Tail::Empty => Rational::zero(),
                Tail::Rule(r) => r.density_bound(n),
            },
        }
    }

    fn aligned(a: &Slalom, b: &Slalom) -> Option<(Slalom, Slalom)> {
        let h = a.horizon.max(b.horizon);
        Some((a.extend_to(h).ok()?, b.extend_to(h).ok()?))
    }

    /// Levelwise union. Rule tails add up, since the union's density is at
    /// most the sum of the densities.
    pub fn union(&self, other: &Slalom) -> Result<Slalom> {
        let (a, b) = Self::aligned(self, other).ok_or(Error::RuleTail)?;
        let levels = a.levels.iter().zip(&b.levels).map(|(x, y)| x.union(y)).collect();
        let tail = match (&a.tail, &b.tail) {
            (Tail::Empty, Tail::Empty) => Tail::Empty,
            (Tail::Rule(r), Tail::Empty) | (Tail::Empty, Tail::Rule(r)) => Tail::Rule(r.clone()),
            (Tail::Rule(r), Tail::Rule(s)) => Tail::Rule(r.merged(s)),
        };
        Ok(Slalom { horizon: a.horizon, levels, tail })
    }

    pub fn union_all<'a, I: IntoIterator<Item = &'a Slalom>>(horizon: u32, items: I) -> Result<Slalom> {
        items.into_iter().try_fold(Slalom::empty(horizon), |acc, s| acc.union(s))
    }
}

impl std::fmt::Debug for Slalom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<_> = self.levels.iter().filter(|l| !l.is_empty()).map(|l| (l.level(), l.columns())).collect();
        f.debug_struct("Slalom")
            .field("horizon", &self.horizon)
            .field("levels", &rows)
            .field("tail", &self.tail)
            .finish()
    }
}

/// A real `f ∈ ∏ 2^n` observed below its horizon.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathReal {
    values: Vec<u64>,
}

impl PathReal {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        Slalom::check_horizon(values.len() as u32)?;
        for (n, &v) in values.iter().enumerate() {
            if v >= 1u64 << n {
                return Err(Error::PathOutOfRange { level: n as u32, value: v });
            }
        }
        Ok(PathReal { values })
    }

    pub fn horizon(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn at(&self, n: u32) -> u64 {
        self.values[n as usize]
    }
}

/// `{(n, f(n)) : 1 ≤ n < H}` with an empty tail. Level 0 is left out: the
/// single column there would saturate it.
pub fn graph_of(f: &PathReal) -> Slalom {
    let rows = (1..f.horizon()).map(|n| (n, [f.at(n)]));
    Slalom::from_table(f.horizon(), rows).expect("path values are in range")
}

/// Mod-finite inclusion verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlmostSubset {
    /// `a(n) ⊆ b(n)` for every `n` in `[witness, H)`; `witness < H`.
    Yes {
        witness: u32,
    },
    /// Inclusion fails at the last observed level; all violating levels.
    No {
        violations: Vec<u32>,
    },
    UndeterminedAtHorizon,
}

impl AlmostSubset {
    pub fn is_yes(&self) -> bool {
        matches!(self, AlmostSubset::Yes { .. })
    }
}

/// `a ⊆* b` at finite horizon: the least witness level past every violation,
/// which must itself be observed (lie below the horizon).
pub fn almost_subset(a: &Slalom, b: &Slalom) -> AlmostSubset {
    let Some((a, b)) = Slalom::aligned(a, b) else {
        return AlmostSubset::UndeterminedAtHorizon;
    };
    let tails_ok = match &a.tail {
        Tail::Empty => true,
        Tail::Rule(r) => r.is_trivial(),
    };
    if !tails_ok {
        return AlmostSubset::UndeterminedAtHorizon;
    }
    let violations: Vec<u32> =
        (0..a.horizon).filter(|&n| !a.levels[n as usize].is_subset(&b.levels[n as usize])).collect();
    let witness = violations.last().map_or(0, |v| v + 1);
    if witness < a.horizon || a.horizon == 0 {
        AlmostSubset::Yes { witness }
    } else {
        AlmostSubset::No { violations }
    }
}

/// The level enumeration `(n, i) ↦ 2^n + i`, mapping level `n` onto
/// `[2^n, 2^{n+1})`.
pub fn enum_bijection(level: u32, column: u64) -> Result<u64> {
    if level > MAX_LEVEL {
        return Err(Error::HorizonTooLarge { horizon: level, max: MAX_LEVEL });
    }
    if column >= 1u64 << level {
        return Err(Error::ColumnOutOfRange { level, column });
    }
    Ok((1u64 << level) + column)
}

pub fn enum_bijection_inverse(x: u64) -> Result<(u32, u64)> {
    if x == 0 {
        return Err(Error::NoPreimage(0));
    }
    let level = 63 - x.leading_zeros();
    Ok((level, x - (1u64 << level)))
}

/// A real avoiding `s` at every observed level: the smallest excluded column.
pub fn diagonal_real(s: &Slalom) -> Result<PathReal> {
    let values = s
        .levels()
        .iter()
        .map(|l| l.min_excluded().ok_or(Error::Saturated { level: l.level() }))
        .collect::<Result<Vec<_>>>()?;
    PathReal::new(values)
}

/// Per path, whether `s` localizes it (`graph(f) ⊆* s`).
pub fn localizes(s: &Slalom, family: &[PathReal]) -> Vec<AlmostSubset> {
    family.iter().map(|f| almost_subset(&graph_of(f), s)).collect()
}
