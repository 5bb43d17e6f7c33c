//! Product measure on paths and the measures it induces on the algebra.
//!
//! A path `f ∈ ∏ 2^n` is uniformly random, level by level. The generic name
//! realizes the slalom `N(n) = 2^n ∖ {f(n)}`; the windowed name for a point
//! `(T, m)` copies `T` below `m` and agrees with the generic name from `m` on.
//! A generator measures the probability that the realized slalom lies in it
//! eventually: `T_A` when `A ⊆ N`, and `T_(S,n)` when `N ∩ (n × 2^n) = S`.
//! Since every literal constrains each level separately, positive
//! conjunctions factor into per-level probabilities; negations and
//! disjunctions go through inclusion–exclusion.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ideal::{status_of, Ideal, Status};
use crate::levelset::LevelSet;
use crate::omega::{conjunct_infinitude, phi, point_at_index, reduce, Conjunct, Generator, OmegaPoint, Reduced, Term};
use crate::rational::{clamp_unit, density, inv_pow2, Rational};
use crate::slalom::{PathReal, Slalom, Tail};

const NEGATIVE_CAP: usize = 20;
const DISJUNCT_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SlalomName {
    Generic,
    Windowed(OmegaPoint),
}

impl SlalomName {
    /// First level at which the name is random.
    pub fn start(&self) -> u32 {
        match self {
            SlalomName::Generic => 0,
            SlalomName::Windowed(p) => p.level(),
        }
    }

    fn fixed(&self, j: u32) -> Option<&LevelSet> {
        match self {
            SlalomName::Windowed(p) if j < p.level() => Some(&p.trace().levels()[j as usize]),
            _ => None,
        }
    }

    /// The slalom realized by the path `f`, as a point at level `f.horizon()`.
    pub fn realize(&self, f: &PathReal) -> Result<OmegaPoint> {
        let levels = (0..f.horizon())
            .map(|j| match self.fixed(j) {
                Some(t) => t.clone(),
                None => LevelSet::full(j).difference(&LevelSet::from_columns(j, [f.at(j)]).expect("path value")),
            })
            .collect();
        OmegaPoint::new(Slalom::from_levels(levels)?)
    }

    /// `λ(⟦k ∈ N(n)⟧)` for every `k < 2^n`, `n < horizon`.
    pub fn value_table(&self, horizon: u32) -> Vec<Vec<Rational>> {
        (0..horizon)
            .map(|n| {
                let width = 1u64 << n;
                match self.fixed(n) {
                    Some(t) => {
                        (0..width).map(|k| if t.contains(k) { Rational::one() } else { Rational::zero() }).collect()
                    }
                    None => vec![Rational::one() - inv_pow2(n); width as usize],
                }
            })
            .collect()
    }
}

/// An exact value together with an interval certified to contain the value
/// of the untruncated quantity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureValue {
    pub value: Rational,
    pub lo: Rational,
    pub hi: Rational,
}

impl MeasureValue {
    pub fn exact(value: Rational) -> Self {
        MeasureValue { lo: value.clone(), hi: value.clone(), value }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }
}

/// `1 − |w(n)| / 2^n`, the chance that a random `f(n)` avoids `w(n)`.
pub fn level_factor(w: &Slalom, n: u32) -> Result<Rational> {
    if n == 0 {
        return Err(Error::LevelZero);
    }
    Ok(Rational::one() - density(w.count(n), n))
}

/// `λ(⟦w ⊆ N⟧)`. Rule tails give `[P·(1 − tail sum), P]` with `P` the
/// product over the table.
pub fn containment_measure(w: &Slalom, name: &SlalomName) -> MeasureValue {
    let table = Slalom::from_levels(w.levels().to_vec()).expect("levels indexed in order");
    let r = Reduced { union: table, window: None };
    let p = reduced_measure(&r, name);
    match w.tail() {
        Tail::Empty => MeasureValue::exact(p),
        Tail::Rule(rule) => {
            let slack = clamp_unit(Rational::one() - rule.tail_sum_bound(w.horizon()));
            MeasureValue { lo: &p * slack, hi: p.clone(), value: p }
        }
    }
}

/// Probability that the name satisfies every positive literal.
fn reduced_measure(r: &Reduced, name: &SlalomName) -> Rational {
    let n = r.window.as_ref().map_or(0, OmegaPoint::level);
    let top = n.max(name.start()).max(r.union.support_end());
    let mut acc = Rational::one();
    for j in 0..top {
        let u = r.union.level_or_empty(j);
        let s = r.window.as_ref().filter(|_| j < n).map(|w| &w.trace().levels()[j as usize]);
        match name.fixed(j) {
            Some(t) => {
                if !u.is_subset(t) || s.is_some_and(|s| s != t) {
                    return Rational::zero();
                }
            }
            None => {
                let width = 1u64 << j;
                let allowed = match s {
                    // N(j) = S(j) forces f(j) to be the one column S(j) misses
                    Some(s) if s.len() + 1 == width && u.is_subset(s) => 1,
                    Some(_) => 0,
                    None => width - u.len(),
                };
                if allowed == 0 {
                    return Rational::zero();
                }
                acc *= density(allowed, j);
            }
        }
    }
    acc
}

pub fn conjunct_measure(c: &Conjunct, name: &SlalomName, exec: Exec) -> Result<Rational> {
    c.check_tails()?;
    let k = c.negatives.len();
    if k > NEGATIVE_CAP {
        return Err(Error::TooManyNegatives { count: k, cap: NEGATIVE_CAP });
    }
    let parts: Vec<Result<Rational>> = exec.map_range(0..1u64 << k, |subset| {
        let chosen = (0..k).filter(|i| subset >> i & 1 == 1).map(|i| &c.negatives[i]);
        let v = match reduce(c.positives.iter().chain(chosen))? {
            Some(r) => reduced_measure(&r, name),
            None => Rational::zero(),
        };
        Ok(if subset.count_ones() % 2 == 0 { v } else { -v })
    });
    parts.into_iter().sum()
}

/// Measure of a term under the name, by inclusion–exclusion over disjuncts.
pub fn term_value(t: &Term, name: &SlalomName, exec: Exec) -> Result<Rational> {
    let d = t.disjuncts.len();
    if d > DISJUNCT_CAP {
        return Err(Error::SearchTooLarge(format!("{d} disjuncts (cap {DISJUNCT_CAP})")));
    }
    let mut total = Rational::zero();
    for subset in 1u64..1 << d {
        let joined =
            (0..d).filter(|i| subset >> i & 1 == 1).fold(Conjunct::default(), |acc, i| acc.and(&t.disjuncts[i]));
        let v = conjunct_measure(&joined, name, exec)?;
        if subset.count_ones() % 2 == 1 {
            total += v;
        } else {
            total -= v;
        }
    }
    Ok(total)
}

/// `λ(⟦⋂ positives ⊆ N⟧ ∖ ⋃ ⟦negative ⊆ N⟧)`.
pub fn term_measure(positives: &[Slalom], negatives: &[Slalom], name: &SlalomName) -> Result<MeasureValue> {
    let c = Conjunct::new(
        positives.iter().cloned().map(Generator::Set).collect(),
        negatives.iter().cloned().map(Generator::Set).collect(),
    );
    Ok(MeasureValue::exact(conjunct_measure(&c, name, Exec::Sequential)?))
}

/// `ν_(T,m)` on a term.
pub fn nu(point: &OmegaPoint, t: &Term, exec: Exec) -> Result<MeasureValue> {
    Ok(MeasureValue::exact(term_value(t, &SlalomName::Windowed(point.clone()), exec)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaRow {
    pub point: OmegaPoint,
    pub nu: Rational,
    /// 1 if the point lies in `T_w`, else 0.
    pub delta: Rational,
    /// `Σ_{i ≥ m} |w(i)| / 2^i`.
    pub tail_bound: Rational,
    /// `1 − ν ≤ tail_bound` inside `T_w`, `ν = 0` outside.
    pub within_bound: bool,
}

impl DeltaRow {
    pub fn difference(&self) -> Rational {
        &self.nu - &self.delta
    }
}

/// `ν_(T,m)(T_w)` against the point mass `δ_(T,m)(T_w)`.
pub fn delta_compare(w: &Slalom, points: &[OmegaPoint], exec: Exec) -> Result<Vec<DeltaRow>> {
    if status_of(w, Ideal::W) != Status::Yes || !w.tail().is_empty() {
        return Err(Error::NotInW(format!("{w:?}")));
    }
    let g = Generator::Set(w.clone());
    Ok(exec.map(points, |p| {
        let nu = containment_measure(w, &SlalomName::Windowed(p.clone())).value;
        let inside = crate::omega::member(&g, p);
        let tail_bound = w.tail_sum(p.level()).upper();
        let within_bound = if inside { Rational::one() - &nu <= tail_bound } else { nu.is_zero() };
        DeltaRow {
            point: p.clone(),
            nu,
            delta: if inside { Rational::one() } else { Rational::zero() },
            tail_bound,
            within_bound,
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuValue {
    pub value: MeasureValue,
    pub series_length: u64,
    /// Certified lower bound is positive.
    pub strictly_positive: bool,
}

/// `μ = Σ_i 2^{−(i+1)} ν_{φ^{-1}(i)}`, summed over the first `k` points. The
/// rest of the series lies in `[0, 2^{−k}]`; it is exactly 0 when the term
/// is not infinite, since every `ν` vanishes on finite sets.
pub fn mu(t: &Term, k: u64, exec: Exec) -> Result<MuValue> {
    let mut infinite = false;
    for c in &t.disjuncts {
        infinite |= conjunct_infinitude(c)?.is_infinite();
    }
    if !infinite {
        return Ok(MuValue {
            value: MeasureValue::exact(Rational::zero()),
            series_length: k,
            strictly_positive: false,
        });
    }
    let summands: Vec<Result<Rational>> = exec.map_range(0..k, |i| {
        let p = point_at_index(i)?;
        let v = term_value(t, &SlalomName::Windowed(p), Exec::Sequential)?;
        Ok(v * inv_pow2((i + 1) as u32))
    });
    let partial: Rational = summands.into_iter().sum::<Result<Rational>>()?;
    let hi = &partial + inv_pow2(k as u32);
    let strictly_positive = partial > Rational::zero();
    Ok(MuValue { value: MeasureValue { value: partial.clone(), lo: partial, hi }, series_length: k, strictly_positive })
}

/// The single summand of `μ` at `point`, a certified lower bound for `μ`.
pub fn mu_summand(t: &Term, point: &OmegaPoint, exec: Exec) -> Result<Rational> {
    let i = phi(point).ok_or_else(|| Error::SearchTooLarge(format!("index of {point:?}")))?;
    if i >= u32::MAX as u64 {
        return Err(Error::SearchTooLarge(format!("weight 2^-{}", i + 1)));
    }
    Ok(term_value(t, &SlalomName::Windowed(point.clone()), exec)? * inv_pow2((i + 1) as u32))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Destructibility {
    pub level: u32,
    /// `Σ_{i > level} |w(i)| / 2^i`, which bounds the measure of the
    /// condition forcing `w ⊄* N` past `level`.
    pub bound: Rational,
}

/// Least `n` with `Σ_{i>n} |w(i)| / 2^i < ε`.
pub fn destructibility_certificate(w: &Slalom, eps: &Rational) -> Result<Destructibility> {
    if *eps <= Rational::zero() {
        return Err(Error::Precondition("ε must be positive".into()));
    }
    if status_of(w, Ideal::W) != Status::Yes {
        return Err(Error::NotInW(format!("{w:?}")));
    }
    const SEARCH_CAP: u32 = 10_000;
    for n in 0..SEARCH_CAP {
        let bound = w.tail_sum(n + 1).upper();
        if bound < *eps {
            return Ok(Destructibility { level: n, bound });
        }
    }
    Err(Error::SearchTooLarge(format!("no level below {SEARCH_CAP} brings the tail under ε")))
}

/// `λ(⋃_{n≥m} {f : f(n) ∈ w(n)}) ≤ Σ_{n≥m} |w(n)| / 2^n`.
pub fn borel_cantelli_bound(w: &Slalom, m: u32) -> Result<Rational> {
    if status_of(w, Ideal::W) != Status::Yes {
        return Err(Error::NotInW(format!("{w:?}")));
    }
    Ok(w.tail_sum(m).upper())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub slalom: Slalom,
    /// Levels with `|A(n)| ≥ g(n)`. Empty whenever the budget holds.
    pub size_violations: Vec<u32>,
    /// `g(n) / 2^n` for the levels `n ≥ 1` of the table.
    pub growth: Vec<Rational>,
    /// Whether `g(n) / 2^n` grows over the table, the finite shadow of
    /// `g(n) / 2^n → ∞`.
    pub growth_observed: bool,
}

/// `A(n) = {k : value(n,k) > 2^n / g(n)}` for `n ≥ 1`, with the budget
/// `Σ_k value(n,k) ≤ 2^n − 1` enforced and `|A(n)| < g(n)` checked.
pub fn majority_extract(table: &[Vec<Rational>], g: &dyn Fn(u32) -> BigUint) -> Result<Extraction> {
    let mut levels = Vec::with_capacity(table.len());
    let mut size_violations = Vec::new();
    let mut growth = Vec::new();
    for (n, row) in table.iter().enumerate() {
        let n = n as u32;
        let width = 1u64 << n;
        if row.len() as u64 != width {
            return Err(Error::Precondition(format!("level {n} has {} values, expected {width}", row.len())));
        }
        if row.iter().any(|v| *v < Rational::zero() || *v > Rational::one()) {
            return Err(Error::Precondition(format!("level {n} has a value outside [0,1]")));
        }
        let total: Rational = row.iter().sum();
        if total > Rational::from_integer((width - 1).into()) {
            return Err(Error::Budget { level: n, detail: format!("values sum to {total} > {}", width - 1) });
        }
        if n == 0 {
            levels.push(LevelSet::empty(0));
            continue;
        }
        let gn = g(n);
        if gn.is_zero() {
            return Err(Error::Precondition(format!("g({n}) = 0")));
        }
        let threshold = Rational::new(BigUint::from(width).into(), gn.clone().into());
        growth.push(threshold.recip());
        let set = LevelSet::from_columns(n, (0..width).filter(|&k| row[k as usize] > threshold))?;
        if BigUint::from(set.len()) >= gn {
            size_violations.push(n);
        }
        levels.push(set);
    }
    let growth_observed = growth.len() >= 2 && growth.last() > growth.first();
    Ok(Extraction { slalom: Slalom::from_levels(levels)?, size_violations, growth, growth_observed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omega::{enum_omega, eval_term};
    use crate::rational::ratio;
    use crate::slalom::{graph_of, TailRule};

    fn slalom(rows: &[(u32, &[u64])], h: u32) -> Slalom {
        Slalom::from_table(h, rows.iter().map(|(n, c)| (*n, c.to_vec()))).unwrap()
    }

    /// Fraction of paths on levels `< depth` whose realized name satisfies
    /// the term, by literal enumeration.
    fn path_oracle(t: &Term, name: &SlalomName, depth: u32) -> Rational {
        let total: u64 = 1 << (depth * (depth - 1) / 2);
        let mut hits = 0u64;
        for mut code in 0..total {
            let values = (0..depth)
                .map(|j| {
                    let v = code % (1 << j);
                    code >>= j;
                    v
                })
                .collect();
            let f = PathReal::new(values).unwrap();
            if eval_term(t, &name.realize(&f).unwrap()) {
                hits += 1;
            }
        }
        ratio(hits as i64, total as i64)
    }

    #[test]
    fn level_factors() {
        let w = slalom(&[(2, &[0, 1, 2, 3]), (3, &[5])], 4);
        assert_eq!(level_factor(&w, 1).unwrap(), Rational::one());
        assert_eq!(level_factor(&w, 2).unwrap(), Rational::zero());
        assert_eq!(level_factor(&w, 3).unwrap(), ratio(7, 8));
        assert_eq!(level_factor(&w, 0), Err(Error::LevelZero));
    }

    #[test]
    fn containment_examples() {
        assert_eq!(containment_measure(&Slalom::empty(5), &SlalomName::Generic).value, Rational::one());
        let w = slalom(&[(2, &[0]), (3, &[0])], 4);
        assert_eq!(containment_measure(&w, &SlalomName::Generic), MeasureValue::exact(ratio(21, 32)));
        let t = Term::generator(Generator::Set(w.clone()));
        assert_eq!(path_oracle(&t, &SlalomName::Generic, 4), ratio(21, 32));
        let bad = OmegaPoint::new(slalom(&[(2, &[1])], 3)).unwrap();
        assert_eq!(containment_measure(&w, &SlalomName::Windowed(bad)).value, Rational::zero());
    }

    #[test]
    fn containment_with_rule_tail() {
        let w = slalom(&[(2, &[0])], 3).with_tail(Tail::Rule(TailRule::geometric(3, ratio(1, 4)).unwrap())).unwrap();
        let v = containment_measure(&w, &SlalomName::Generic);
        assert_eq!(v.hi, ratio(3, 4));
        // tail sum (1/4)/(3/4) = 1/3
        assert_eq!(v.lo, ratio(1, 2));
        assert!(!v.is_exact());
    }

    #[test]
    fn term_examples() {
        let a = slalom(&[(1, &[0]), (3, &[1, 2])], 4);
        assert_eq!(
            term_measure(std::slice::from_ref(&a), std::slice::from_ref(&a), &SlalomName::Generic).unwrap().value,
            Rational::zero()
        );
        let sub = slalom(&[(3, &[2])], 4);
        let b = slalom(&[(2, &[3])], 4);
        assert_eq!(term_measure(&[a.clone(), b], &[sub], &SlalomName::Generic).unwrap().value, Rational::zero());
        let w = slalom(&[(2, &[0])], 3);
        let v = slalom(&[(3, &[0])], 4);
        assert_eq!(term_measure(&[w], &[v], &SlalomName::Generic).unwrap().value, ratio(3, 32));
    }

    #[test]
    fn terms_match_path_oracle() {
        let a = Generator::Set(slalom(&[(1, &[0]), (2, &[1])], 3));
        let b = Generator::Set(slalom(&[(2, &[1, 2]), (3, &[4])], 4));
        let full3 = OmegaPoint::new(slalom(&[(1, &[0]), (2, &[0, 1, 3])], 3)).unwrap();
        let win = Generator::Window(full3.clone());
        let terms = vec![
            Term::generator(a.clone()).and(&Term::not_generator(b.clone())),
            Term::generator(win.clone()).or(&Term::generator(b.clone())),
            Term::not_generator(win.clone()).and(&Term::not_generator(a.clone())),
            Term::generator(a.clone()).and(&Term::generator(win.clone())),
        ];
        let names = vec![
            SlalomName::Generic,
            SlalomName::Windowed(OmegaPoint::new(slalom(&[(1, &[0])], 2)).unwrap()),
            SlalomName::Windowed(full3),
        ];
        for t in &terms {
            for name in &names {
                let exact = term_value(t, name, Exec::Parallel).unwrap();
                assert_eq!(exact, path_oracle(t, name, 5), "{t:?} under {name:?}");
            }
        }
    }

    #[test]
    fn delta_examples() {
        let pts = enum_omega(3, Exec::Sequential).unwrap();
        let empty = delta_compare(&Slalom::empty(3), &pts, Exec::Sequential).unwrap();
        assert!(empty.iter().all(|r| r.nu == Rational::one() && r.within_bound));
        let w = slalom(&[(2, &[0]), (3, &[0])], 4);
        let rows = delta_compare(&w, &pts, Exec::Parallel).unwrap();
        assert!(rows.iter().all(|r| r.within_bound));
        let inside = OmegaPoint::new(slalom(&[(2, &[0, 2])], 3)).unwrap();
        let row = rows.iter().find(|r| r.point == inside).unwrap();
        assert_eq!(row.nu, ratio(7, 8));
        assert_eq!(row.tail_bound, ratio(1, 8));
        let outside = OmegaPoint::new(slalom(&[(2, &[1])], 3)).unwrap();
        assert_eq!(rows.iter().find(|r| r.point == outside).unwrap().nu, Rational::zero());
    }

    #[test]
    fn mu_examples() {
        let zero = mu(&Term::zero(), 10, Exec::Sequential).unwrap();
        assert_eq!(zero.value, MeasureValue::exact(Rational::zero()));
        let one = mu(&Term::one(), 10, Exec::Sequential).unwrap();
        assert_eq!(one.value.lo, Rational::one() - inv_pow2(10));
        assert_eq!(one.value.hi, Rational::one());
        assert!(one.strictly_positive);
        let a = slalom(&[(2, &[1])], 3);
        let t = Term::generator(Generator::Set(a))
            .and(&Term::generator(Generator::Window(OmegaPoint::new(slalom(&[(1, &[1]), (2, &[1, 3])], 3)).unwrap())));
        let p = OmegaPoint::new(slalom(&[(1, &[1]), (2, &[1, 3])], 3)).unwrap();
        let single = mu_summand(&t, &p, Exec::Sequential).unwrap();
        assert!(single > Rational::zero());
        let k = phi(&p).unwrap() + 1;
        let m = mu(&t, k, Exec::Parallel).unwrap();
        assert!(m.strictly_positive && m.value.lo >= single);
        let seq = mu(&t, k, Exec::Sequential).unwrap();
        assert_eq!(seq, m);
    }

    #[test]
    fn destructibility_examples() {
        let d = destructibility_certificate(&Slalom::empty(4), &ratio(1, 100)).unwrap();
        assert_eq!(d, Destructibility { level: 0, bound: Rational::zero() });
        let g = graph_of(&PathReal::new(vec![0, 1, 2, 3, 4, 5]).unwrap());
        let d = destructibility_certificate(&g, &ratio(1, 4)).unwrap();
        assert_eq!(d.level, 2);
        assert_eq!(d.bound, ratio(7, 32));
        assert_eq!(destructibility_certificate(&g, &int2()).unwrap().level, 0);
        let sat = slalom(&[(1, &[0, 1])], 2);
        assert!(matches!(destructibility_certificate(&sat, &ratio(1, 2)), Err(Error::NotInW(_))));
    }

    fn int2() -> Rational {
        Rational::from_integer(2.into())
    }

    #[test]
    fn borel_cantelli_examples() {
        assert_eq!(borel_cantelli_bound(&Slalom::empty(4), 0).unwrap(), Rational::zero());
        let g = graph_of(&PathReal::new(vec![0, 0, 0, 0, 0]).unwrap());
        assert_eq!(borel_cantelli_bound(&g, 1).unwrap(), ratio(15, 16));
        assert_eq!(borel_cantelli_bound(&g, 9).unwrap(), Rational::zero());
    }

    #[test]
    fn majority_examples() {
        let g = |n: u32| BigUint::from(n) << n as usize;
        let table = SlalomName::Generic.value_table(6);
        let e = majority_extract(&table, &g).unwrap();
        assert!(e.slalom.level(1).unwrap().is_empty());
        for n in 2..6 {
            assert!(e.slalom.level(n).unwrap().is_saturated());
        }
        assert!(e.size_violations.is_empty() && e.growth_observed);
        let low: Vec<Vec<Rational>> = (0..5).map(|n| vec![Rational::zero(); 1 << n]).collect();
        assert!(majority_extract(&low, &g).unwrap().slalom.is_table_empty());
        let tight = |n: u32| BigUint::one() << n as usize;
        let e = majority_extract(&table, &tight).unwrap();
        // the budget alone keeps |A(n)| < g(n); only the growth hypothesis fails
        assert!(e.size_violations.is_empty() && !e.growth_observed);
        let mut over = table.clone();
        over[3][0] = Rational::one();
        assert!(matches!(majority_extract(&over, &g), Err(Error::Budget { level: 3, .. })));
    }
}
