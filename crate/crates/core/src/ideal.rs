//! Ideal membership for slaloms at finite horizon.
//!
//! * `S`: every level non-saturated.
//! * `I`: summable, `Σ |S(n)| / 2^n < ∞`.
//! * `J`: density zero, `|S(n)| / 2^n → 0`.
//! * `W = I ∩ S`, `V = J ∩ S`, and `Z` (members of `S` with density tending
//!   to zero, the same set as `V` read through its defining limit).

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::Result;
use crate::levelset::LevelSet;
use crate::rational::{ratio, Rational};
use crate::slalom::{enum_bijection, enum_bijection_inverse, Slalom, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ideal {
    S,
    I,
    W,
    J,
    V,
    Z,
}

impl Ideal {
    pub const ALL: [Ideal; 6] = [Ideal::S, Ideal::I, Ideal::W, Ideal::J, Ideal::V, Ideal::Z];
}

impl fmt::Display for Ideal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Yes,
    No,
    UndeterminedAtHorizon,
}

impl Status {
    fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::No, _) | (_, Status::No) => Status::No,
            (Status::Yes, Status::Yes) => Status::Yes,
            _ => Status::UndeterminedAtHorizon,
        }
    }
}

/// Evidence attached to a verdict. Every certificate carries the exact
/// partial sum over the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub partial_sum: Rational,
    /// First saturated level of the table.
    pub saturated_level: Option<u32>,
    /// Bound on the tail sum `Σ_{n≥H}` (zero for an empty tail).
    pub tail_sum_bound: Rational,
    /// Bound on the density of the first unseen level (zero for an empty tail).
    pub tail_density_bound: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealVerdict {
    pub ideal: Ideal,
    pub status: Status,
    pub certificate: Certificate,
}

/// Verdicts for every ideal, in [`Ideal::ALL`] order.
pub fn classify(s: &Slalom) -> Vec<IdealVerdict> {
    let h = s.horizon();
    let (tail_sum_bound, tail_density_bound) = match s.tail() {
        Tail::Empty => (Rational::zero(), Rational::zero()),
        Tail::Rule(r) => (r.tail_sum_bound(h), r.density_bound(h)),
    };
    let certificate = Certificate {
        partial_sum: s.partial_sum(),
        saturated_level: s.first_saturated(),
        tail_sum_bound,
        tail_density_bound,
    };

    // Every rule term is geometric: the tail density is decreasing and tends
    // to zero, and the tail sum is finite.
    let in_s = if certificate.saturated_level.is_some() {
        Status::No
    } else if certificate.tail_density_bound < Rational::one() {
        Status::Yes
    } else {
        Status::UndeterminedAtHorizon
    };
    let in_i = Status::Yes;
    let in_j = Status::Yes;

    [
        (Ideal::S, in_s),
        (Ideal::I, in_i),
        (Ideal::W, in_i.and(in_s)),
        (Ideal::J, in_j),
        (Ideal::V, in_j.and(in_s)),
        (Ideal::Z, in_s.and(in_j)),
    ]
    .into_iter()
    .map(|(ideal, status)| IdealVerdict { ideal, status, certificate: certificate.clone() })
    .collect()
}

pub fn status_of(s: &Slalom, ideal: Ideal) -> Status {
    classify(s).into_iter().find(|v| v.ideal == ideal).map(|v| v.status).expect("every ideal is classified")
}

/// The table transported to a set of positive naturals by the level
/// enumeration `(n, i) ↦ 2^n + i`.
pub fn to_naturals(s: &Slalom) -> BTreeSet<u64> {
    s.levels().iter().flat_map(|l| l.iter().map(move |c| enum_bijection(l.level(), c).expect("valid column"))).collect()
}

/// Inverse transport; every natural must be positive and land below `horizon`.
pub fn from_naturals(horizon: u32, set: &BTreeSet<u64>) -> Result<Slalom> {
    let mut rows: Vec<Vec<u64>> = vec![Vec::new(); horizon as usize];
    for &x in set {
        let (n, i) = enum_bijection_inverse(x)?;
        if n >= horizon {
            return Err(crate::error::Error::LevelOutsideHorizon { level: n, horizon });
        }
        rows[n as usize].push(i);
    }
    let levels = rows
        .into_iter()
        .enumerate()
        .map(|(n, cols)| LevelSet::from_columns(n as u32, cols))
        .collect::<Result<Vec<_>>>()?;
    Slalom::from_levels(levels)
}

/// `Σ_{k ∈ X} 1/k`, the harmonic weight used by the classical summable ideal.
pub fn harmonic_weight(set: &BTreeSet<u64>) -> Rational {
    set.iter().map(|&k| ratio(1, k as i64)).sum()
}

/// Largest `|X ∩ [1, k]| / k` over `k ≤ bound`, the finite shadow of the
/// upper density of `X`.
pub fn max_prefix_density(set: &BTreeSet<u64>, from: u64, bound: u64) -> Rational {
    let mut best = Rational::zero();
    let mut count = 0i64;
    let mut iter = set.iter().peekable();
    for k in 1..=bound {
        while iter.peek().is_some_and(|&&x| x <= k) {
            iter.next();
            count += 1;
        }
        if k >= from {
            let d = ratio(count, k as i64);
            if d > best {
                best = d;
            }
        }
    }
    best
}
