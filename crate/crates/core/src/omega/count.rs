//! Exact point counts per level, by product formula and inclusion–exclusion.
//!
//! For a conjunction of positive generators with set-part union `U` and
//! window `(S, n)` the points at level `m ≥ n` factor over levels: a fixed
//! level `j < n` contributes 1 if `U(j) ⊆ S(j)` and 0 otherwise, and a free
//! level contributes the number of unsaturated supersets of `U(j)`,
//! `2^(2^j - |U(j)|) - 1`. Negations and disjunctions are expanded by
//! inclusion–exclusion, so the oracle shares no code with the decision
//! procedure in `meet`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::{eval_term, points_at_level, Conjunct, Generator, OmegaPoint, Term, ENUM_CAP};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::slalom::Slalom;

/// Highest level the counting oracle accepts.
pub const COUNT_CAP: u32 = 14;
const NEGATIVE_CAP: usize = 20;
const DISJUNCT_CAP: usize = 12;

/// Positive literals collapsed to one set-part and at most one window.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub union: Slalom,
    pub window: Option<OmegaPoint>,
}

/// `None` when two windows disagree, making the conjunction empty.
pub(crate) fn reduce<'a, I: IntoIterator<Item = &'a Generator>>(positives: I) -> Result<Option<Reduced>> {
    let mut union = Slalom::empty(0);
    let mut window: Option<OmegaPoint> = None;
    for g in positives {
        match g {
            Generator::Set(a) => {
                if !a.tail().is_empty() {
                    return Err(Error::RuleTail);
                }
                union = union.union(a)?;
            }
            Generator::Window(w) => {
                window = match window {
                    None => Some(w.clone()),
                    Some(v) => {
                        let (lo, hi) = if v.level() <= w.level() { (v, w.clone()) } else { (w.clone(), v) };
                        if hi.restrict(lo.level()) != lo {
                            return Ok(None);
                        }
                        Some(hi)
                    }
                }
            }
        }
    }
    Ok(Some(Reduced { union, window }))
}

fn count_reduced(r: &Reduced, m: u32) -> BigUint {
    let n = r.window.as_ref().map_or(0, OmegaPoint::level);
    if m < n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for j in 0..m {
        let u = r.union.level_or_empty(j);
        if j < n {
            let s = &r.window.as_ref().expect("n > 0 implies a window").trace().levels()[j as usize];
            if !u.is_subset(s) {
                return BigUint::zero();
            }
        } else {
            let free = (1u64 << j) - u.len();
            if free == 0 {
                return BigUint::zero();
            }
            acc *= (BigUint::one() << free as usize) - BigUint::one();
        }
    }
    acc
}

/// `|Ω ∩ level m| = ∏_{j<m} (2^(2^j) − 1)`.
pub fn omega_count(m: u32) -> BigUint {
    (0..m).map(|j| (BigUint::one() << (1usize << j)) - BigUint::one()).product()
}

fn check_level(m: u32) -> Result<()> {
    if m > COUNT_CAP {
        return Err(Error::DepthCap { depth: m, cap: COUNT_CAP });
    }
    Ok(())
}

/// Number of level-`m` points satisfying the conjunct.
pub fn count_conjunct(c: &Conjunct, m: u32, exec: Exec) -> Result<BigUint> {
    check_level(m)?;
    c.check_tails()?;
    let k = c.negatives.len();
    if k > NEGATIVE_CAP {
        return Err(Error::TooManyNegatives { count: k, cap: NEGATIVE_CAP });
    }
    let terms: Vec<Result<BigInt>> = exec.map_range(0..1u64 << k, |subset| {
        let chosen = (0..k).filter(|i| subset >> i & 1 == 1).map(|i| &c.negatives[i]);
        let value = match reduce(c.positives.iter().chain(chosen))? {
            Some(r) => BigInt::from(count_reduced(&r, m)),
            None => BigInt::zero(),
        };
        Ok(if subset.count_ones() % 2 == 0 { value } else { -value })
    });
    let total: BigInt = terms.into_iter().sum::<Result<BigInt>>()?;
    Ok(total.to_biguint().expect("inclusion–exclusion count is non-negative"))
}

/// Number of level-`m` points satisfying the term.
pub fn count_term(t: &Term, m: u32, exec: Exec) -> Result<BigUint> {
    check_level(m)?;
    let d = t.disjuncts.len();
    if d > DISJUNCT_CAP {
        return Err(Error::SearchTooLarge(format!("{d} disjuncts (cap {DISJUNCT_CAP})")));
    }
    let mut total = BigInt::zero();
    for subset in 1u64..1 << d {
        let joined =
            (0..d).filter(|i| subset >> i & 1 == 1).fold(Conjunct::default(), |acc, i| acc.and(&t.disjuncts[i]));
        let value = BigInt::from(count_conjunct(&joined, m, exec)?);
        if subset.count_ones() % 2 == 1 {
            total += value;
        } else {
            total -= value;
        }
    }
    Ok(total.to_biguint().expect("inclusion–exclusion count is non-negative"))
}

/// The same count by literal enumeration of level `m` (levels ≤ 4).
pub fn count_term_by_enumeration(t: &Term, m: u32, exec: Exec) -> Result<u64> {
    if m > ENUM_CAP {
        return Err(Error::DepthCap { depth: m, cap: ENUM_CAP });
    }
    Ok(points_at_level(m, exec).iter().filter(|p| eval_term(t, p)).count() as u64)
}
