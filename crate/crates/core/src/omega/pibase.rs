//! Canonical forms of basic meets `T_A ∩ T_(S,n)` and the identities relating
//! set-generators to unions and inclusions.

use std::collections::HashSet;

use num_traits::Zero;

use super::{
    conjunct_infinitude, count_term, enum_omega, eval_term, member, points_at_level, Conjunct, Generator, MeetVerdict,
    OmegaPoint, Term, COUNT_CAP, ENUM_CAP,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gen;
use crate::ideal::{status_of, Ideal, Status};
use crate::levelset::LevelSet;
use crate::slalom::Slalom;

/// `T_A ∩ T_(T,m)` with `|A(m)| < 2^m − 1` and `A ∩ (m × 2^m) = T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PiBaseElement {
    set_part: Slalom,
    window: OmegaPoint,
}

impl PiBaseElement {
    pub fn set_part(&self) -> &Slalom {
        &self.set_part
    }

    pub fn window(&self) -> &OmegaPoint {
        &self.window
    }

    pub fn conjunct(&self) -> Conjunct {
        Conjunct::new(vec![Generator::Set(self.set_part.clone()), Generator::Window(self.window.clone())], vec![])
    }

    pub fn term(&self) -> Term {
        Term::conjunct(self.conjunct())
    }

    /// For callers that built the pair canonically by construction.
    pub(crate) fn from_canonical_parts(set_part: Slalom, window: OmegaPoint) -> Self {
        PiBaseElement { set_part: set_part.trimmed(), window }
    }

    /// Accepts an already canonical pair, rejecting anything else.
    pub fn from_parts(set_part: Slalom, window: OmegaPoint) -> Result<Self> {
        let c = canonicalize(&set_part, &window)?;
        if c.set_part.same_sets(&set_part) && c.window == window {
            Ok(c)
        } else {
            Err(Error::NonCanonical(format!("{set_part:?} with window {window:?}")))
        }
    }
}

/// The canonical representative of `T_A ∩ T_(S,n)` modulo finite sets: the
/// window moves up to the least `m ≥ n` (and `≥ 1`) with `|A(m)| < 2^m − 1`,
/// absorbing the levels of `A` it passes, which are forced; `A` is then
/// overwritten by the window below `m`.
pub fn canonicalize(a: &Slalom, window: &OmegaPoint) -> Result<PiBaseElement> {
    if !a.tail().is_empty() {
        return Err(Error::RuleTail);
    }
    let verdict = conjunct_infinitude(&Conjunct::new(
        vec![Generator::Set(a.clone()), Generator::Window(window.clone())],
        vec![],
    ))?;
    if !verdict.is_infinite() {
        return Err(Error::FiniteMeet);
    }
    let n = window.level();
    let m = (n.max(1)..).find(|&j| a.level_or_empty(j).len() + 1 < 1u64 << j).expect("empty-tail slaloms thin out");
    let trace: Vec<LevelSet> = (0..m)
        .map(|j| if j < n { window.trace().levels()[j as usize].clone() } else { a.level_or_empty(j).into_owned() })
        .collect();
    let horizon = a.horizon().max(m);
    let padded = a.extend_to(horizon)?;
    let set_levels = (0..horizon)
        .map(|j| if j < m { trace[j as usize].clone() } else { padded.levels()[j as usize].clone() })
        .collect();
    Ok(PiBaseElement {
        set_part: Slalom::from_levels(set_levels)?.trimmed(),
        window: OmegaPoint::new(Slalom::from_levels(trace)?)?,
    })
}

/// Every canonical infinite meet `T_B ∩ T_(S,n)` with `B` in the family and
/// window level `≤ depth`, without repetitions, in discovery order.
pub fn pibase_enum(family: &[Slalom], depth: u32, exec: Exec) -> Result<Vec<PiBaseElement>> {
    let windows = enum_omega(depth, exec)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for b in family {
        if !b.tail().is_empty() {
            return Err(Error::RuleTail);
        }
        let found: Vec<Result<Option<PiBaseElement>>> = exec.map(&windows, |w| match canonicalize(b, w) {
            Ok(e) => Ok(Some(e)),
            Err(Error::FiniteMeet) => Ok(None),
            Err(e) => Err(e),
        });
        for e in found {
            if let Some(e) = e? {
                if seen.insert(e.clone()) {
                    out.push(e);
                }
            }
        }
    }
    Ok(out)
}

/// Outcome of checking the three generator identities on random slaloms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactReport {
    pub depth: u32,
    pub trials: u32,
    /// Points checked by literal enumeration.
    pub points_checked: u64,
    /// Levels checked by exact counting.
    pub levels_counted: u64,
    pub failures: Vec<String>,
}

impl FactReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks, for `trials` random slaloms each:
///
/// 1. `T_S` has points at level `m` iff no level below `m` of `S` saturates,
///    and the meet decision calls `T_S` infinite iff `S` saturates nothing;
/// 2. `T_{A∪B} = T_A ∩ T_B`;
/// 3. `A ⊆ B` implies `T_B ⊆ T_A`.
///
/// Identities 2 and 3 are checked pointwise on `Ω` up to level
/// `min(depth, 4)` and by exact counting of the symmetric difference at every
/// level up to `depth`.
pub fn fact_check(depth: u32, trials: u32, seed: u64, exec: Exec) -> Result<FactReport> {
    if depth > COUNT_CAP {
        return Err(Error::DepthCap { depth, cap: COUNT_CAP });
    }
    let mut rng = gen::rng(seed);
    let points: Vec<OmegaPoint> = (0..=depth.min(ENUM_CAP)).flat_map(|m| points_at_level(m, exec)).collect();
    let mut report = FactReport { depth, trials, ..FactReport::default() };
    let horizon = depth + 1;
    for trial in 0..trials {
        let s = gen::slalom_maybe_saturated(&mut rng, horizon, 3, 0.5);
        let a = gen::slalom(&mut rng, horizon, 3);
        let b = gen::slalom(&mut rng, horizon, 3);
        let sub = gen::subslalom(&mut rng, &b);

        // 1
        let ts = Term::generator(Generator::Set(s.clone()));
        for m in 0..=depth {
            let has_points = !count_term(&ts, m, exec)?.is_zero();
            let unsaturated_below = s.first_saturated().is_none_or(|j| j >= m);
            report.levels_counted += 1;
            if has_points != unsaturated_below {
                report.failures.push(format!("trial {trial}: T_S level {m} has points = {has_points}"));
            }
        }
        let infinite = conjunct_infinitude(&Conjunct::new(vec![Generator::Set(s.clone())], vec![]))?.is_infinite();
        if infinite != (status_of(&s, Ideal::S) == Status::Yes) {
            report.failures.push(format!("trial {trial}: T_S infinite = {infinite}"));
        }

        // 2
        let ga = Generator::Set(a.clone());
        let gb = Generator::Set(b.clone());
        let gu = Generator::Set(a.union(&b)?);
        let meet = Term::generator(ga.clone()).and(&Term::generator(gb.clone()));
        let lhs_not_rhs =
            Term::generator(gu.clone()).and(&Term::not_generator(ga.clone()).or(&Term::not_generator(gb.clone())));
        let rhs_not_lhs = meet.and(&Term::not_generator(gu.clone()));
        // 3
        let gsub = Generator::Set(sub.clone());
        let escapes = Term::generator(gb.clone()).and(&Term::not_generator(gsub.clone()));

        for p in &points {
            report.points_checked += 1;
            if member(&gu, p) != eval_term(&meet, p) {
                report.failures.push(format!("trial {trial}: union identity fails at {p:?}"));
            }
            if member(&gb, p) && !member(&gsub, p) {
                report.failures.push(format!("trial {trial}: inclusion reversal fails at {p:?}"));
            }
        }
        for m in 0..=depth {
            report.levels_counted += 1;
            for (name, t) in [("union", &lhs_not_rhs), ("union", &rhs_not_lhs), ("inclusion", &escapes)] {
                let c = count_term(t, m, exec)?;
                if !c.is_zero() {
                    report.failures.push(format!("trial {trial}: {name} identity: {c} stray points at level {m}"));
                }
            }
        }
    }
    Ok(report)
}

/// Convenience for checking verdicts against counts in tests and sweeps:
/// the highest level `≤ depth` where the conjunct has points.
pub fn highest_populated_level(c: &Conjunct, depth: u32, exec: Exec) -> Result<Option<u32>> {
    let t = Term::conjunct(c.clone());
    for m in (0..=depth).rev() {
        if !count_term(&t, m, exec)?.is_zero() {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// Checks a meet verdict against exact counts up to `depth`: finite bounds
/// must match the highest populated level, and infinite meets must have
/// strictly growing cumulative counts from the witness start on.
pub fn verdict_agrees_with_counts(c: &Conjunct, verdict: &MeetVerdict, depth: u32, exec: Exec) -> Result<bool> {
    let t = Term::conjunct(c.clone());
    Ok(match verdict {
        MeetVerdict::Empty => highest_populated_level(c, depth, exec)?.is_none(),
        MeetVerdict::Finite { bound } => *bound <= depth && highest_populated_level(c, depth, exec)? == Some(*bound),
        MeetVerdict::Infinite(w) => {
            let mut ok = true;
            for m in w.start()..=depth {
                ok &= !count_term(&t, m, exec)?.is_zero();
                ok &= eval_term(&t, &w.point(m)?);
            }
            ok
        }
    })
}
