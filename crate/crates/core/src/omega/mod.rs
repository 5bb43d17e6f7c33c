//! The point space `Ω` of pairs `(T, n)` with `T` a trace on `n × 2^n` that
//! saturates no level, and the algebra generated by the sets
//!
//! * `T_A = {(T, n) : A ∩ (n × 2^n) ⊆ T}` for slaloms `A`, and
//! * `T_(S,n) = {(T, m) : m ≥ n, T ∩ (n × 2^n) = S}` for points `(S, n)`.

mod count;
mod meet;
mod pibase;

pub use count::{count_conjunct, count_term, count_term_by_enumeration, omega_count, COUNT_CAP};
pub(crate) use count::{reduce, Reduced};
pub use meet::{conjunct_infinitude, meet_infinitude, term_is_infinite, MeetVerdict, WitnessSchema};
pub use pibase::{
    canonicalize, fact_check, highest_populated_level, pibase_enum, verdict_agrees_with_counts, FactReport,
    PiBaseElement,
};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::levelset::LevelSet;
use crate::slalom::Slalom;

/// Default cap on literal enumeration of `Ω`. Level 5 alone holds
/// `1·1·3·15·255·65535 ≈ 7.5·10^8` points.
pub const ENUM_CAP: u32 = 4;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OmegaPoint {
    trace: Slalom,
}

impl OmegaPoint {
    /// A point at level `trace.horizon()`; every level must be unsaturated and
    /// the tail empty.
    pub fn new(trace: Slalom) -> Result<Self> {
        if !trace.tail().is_empty() {
            return Err(Error::MalformedWindow("trace has a rule tail".into()));
        }
        if let Some(level) = trace.first_saturated() {
            return Err(Error::MalformedWindow(format!("trace saturates level {level}")));
        }
        Ok(OmegaPoint { trace })
    }

    /// The trace of `s` below `level`, padded with empty levels.
    pub fn from_slalom(s: &Slalom, level: u32) -> Result<Self> {
        let padded = s.extend_to(level)?;
        OmegaPoint::new(padded.below(level))
    }

    pub fn level(&self) -> u32 {
        self.trace.horizon()
    }

    pub fn trace(&self) -> &Slalom {
        &self.trace
    }

    /// The same trace viewed at a higher level, with empty levels added.
    pub fn lifted(&self, level: u32) -> Result<OmegaPoint> {
        if level < self.level() {
            return Err(Error::Precondition(format!("cannot lift a level-{} point to level {level}", self.level())));
        }
        OmegaPoint::new(self.trace.extend_to(level)?)
    }

    /// The trace truncated to `level ≤ self.level()`.
    pub fn restrict(&self, level: u32) -> OmegaPoint {
        OmegaPoint { trace: self.trace.below(level) }
    }
}

impl std::fmt::Debug for OmegaPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<_> =
            self.trace.levels().iter().filter(|l| !l.is_empty()).map(|l| (l.level(), l.columns())).collect();
        write!(f, "({rows:?}, {})", self.level())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `T_A`.
    Set(Slalom),
    /// `T_(S,n)`.
    Window(OmegaPoint),
}

impl Generator {
    fn check_tail(&self) -> Result<()> {
        match self {
            Generator::Set(a) if !a.tail().is_empty() => Err(Error::RuleTail),
            _ => Ok(()),
        }
    }

    /// Highest level at which the generator carries information.
    fn reach(&self) -> u32 {
        match self {
            Generator::Set(a) => a.support_end(),
            Generator::Window(w) => w.level(),
        }
    }
}

/// A conjunction of generators and negated generators.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Conjunct {
    pub positives: Vec<Generator>,
    pub negatives: Vec<Generator>,
}

impl Conjunct {
    pub fn new(positives: Vec<Generator>, negatives: Vec<Generator>) -> Self {
        Conjunct { positives, negatives }
    }

    pub(crate) fn and(&self, other: &Conjunct) -> Conjunct {
        let mut out = self.clone();
        out.positives.extend(other.positives.iter().cloned());
        out.negatives.extend(other.negatives.iter().cloned());
        out
    }

    pub(crate) fn check_tails(&self) -> Result<()> {
        self.positives.iter().chain(&self.negatives).try_for_each(Generator::check_tail)
    }
}

/// A disjunction of conjuncts. No disjuncts is the zero element; a conjunct
/// without literals is the whole space.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Term {
    pub disjuncts: Vec<Conjunct>,
}

impl Term {
    pub fn zero() -> Self {
        Term { disjuncts: Vec::new() }
    }

    pub fn one() -> Self {
        Term { disjuncts: vec![Conjunct::default()] }
    }

    pub fn conjunct(c: Conjunct) -> Self {
        Term { disjuncts: vec![c] }
    }

    pub fn generator(g: Generator) -> Self {
        Term::conjunct(Conjunct::new(vec![g], vec![]))
    }

    pub fn not_generator(g: Generator) -> Self {
        Term::conjunct(Conjunct::new(vec![], vec![g]))
    }

    pub fn or(&self, other: &Term) -> Term {
        let mut disjuncts = self.disjuncts.clone();
        disjuncts.extend(other.disjuncts.iter().cloned());
        Term { disjuncts }
    }

    /// Conjunction, distributed back into disjunctive form.
    pub fn and(&self, other: &Term) -> Term {
        let disjuncts = self.disjuncts.iter().flat_map(|a| other.disjuncts.iter().map(move |b| a.and(b))).collect();
        Term { disjuncts }
    }
}

pub fn member(g: &Generator, p: &OmegaPoint) -> bool {
    match g {
        Generator::Set(a) => (0..p.level()).all(|j| a.level_or_empty(j).is_subset(&p.trace.levels()[j as usize])),
        Generator::Window(w) => {
            p.level() >= w.level()
                && (0..w.level()).all(|j| w.trace.levels()[j as usize] == p.trace.levels()[j as usize])
        }
    }
}

pub fn eval_conjunct(c: &Conjunct, p: &OmegaPoint) -> bool {
    c.positives.iter().all(|g| member(g, p)) && !c.negatives.iter().any(|g| member(g, p))
}

pub fn eval_term(t: &Term, p: &OmegaPoint) -> bool {
    t.disjuncts.iter().any(|c| eval_conjunct(c, p))
}

/// Every point of `Ω` with level `≤ depth`, ordered by level and then by
/// trace code.
pub fn enum_omega(depth: u32, exec: Exec) -> Result<Vec<OmegaPoint>> {
    enum_omega_capped(depth, ENUM_CAP, exec)
}

pub fn enum_omega_capped(depth: u32, cap: u32, exec: Exec) -> Result<Vec<OmegaPoint>> {
    if depth > cap {
        return Err(Error::DepthCap { depth, cap });
    }
    let mut out = Vec::new();
    for level in 0..=depth {
        out.extend(points_at_level(level, exec));
    }
    Ok(out)
}

/// Points at exactly `level`, as a mixed-radix enumeration over the
/// unsaturated subsets of each level below it (levels ≤ 5 here).
pub fn points_at_level(level: u32, exec: Exec) -> Vec<OmegaPoint> {
    assert!(level <= 6, "literal enumeration of level {level} is infeasible");
    // Unsaturated masks at level j: 0 .. 2^(2^j) - 1, excluding the full mask.
    let radices: Vec<u64> = (0..level).map(|j| (1u64 << (1u64 << j)) - 1).collect();
    let total: u64 = radices.iter().product();
    exec.map_range(0..total, |mut code| {
        let levels = radices
            .iter()
            .enumerate()
            .map(|(j, &r)| {
                let mask = code % r;
                code /= r;
                LevelSet::from_mask(j as u32, mask)
            })
            .collect();
        OmegaPoint { trace: Slalom::from_levels(levels).expect("levels indexed in order") }
    })
}

/// Position of `p` in the fixed enumeration of `Ω`: by level, then by the
/// trace code with level `j` occupying bits `[2^j − 1, 2^{j+1} − 1)` and
/// higher levels more significant. `None` past `u64` (levels ≥ 7).
pub fn phi(p: &OmegaPoint) -> Option<u64> {
    let m = p.level();
    if m > 6 {
        return None;
    }
    let mut below = 0u64;
    for l in 0..m {
        below = below.checked_add(level_size(l)?)?;
    }
    // Mixed radix over unsaturated masks; numeric order agrees with the code.
    let mut code = 0u64;
    for j in (0..m).rev() {
        let radix = (1u64 << (1u64 << j)) - 1;
        code = code.checked_mul(radix)?.checked_add(p.trace.levels()[j as usize].mask())?;
    }
    below.checked_add(code)
}

/// Inverse of [`phi`].
pub fn point_at_index(mut index: u64) -> Result<OmegaPoint> {
    let mut level = 0;
    loop {
        let size = level_size(level).ok_or_else(|| Error::SearchTooLarge(format!("index {index}")))?;
        if index < size {
            break;
        }
        index -= size;
        level += 1;
    }
    let levels = (0..level)
        .map(|j| {
            let radix = (1u64 << (1u64 << j)) - 1;
            let mask = index % radix;
            index /= radix;
            LevelSet::from_mask(j, mask)
        })
        .collect();
    OmegaPoint::new(Slalom::from_levels(levels)?)
}

fn level_size(m: u32) -> Option<u64> {
    (0..m).try_fold(1u64, |acc, j| acc.checked_mul((1u64 << (1u64 << j).min(63)) - 1).filter(|_| j < 6))
}
