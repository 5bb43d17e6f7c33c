//! Exhaustive sweeps over canonical conditions whose set parts above the
//! window are drawn, level by level, from `{∅, lower half, upper half}`.
//!
//! Conditions are visited along the tree of window traces. Either order
//! between two conditions forces one window to be a prefix of the other, so
//! each node is compared with its own conditions and those of its ancestors.

use std::collections::BTreeSet;

use super::{
    lift, lower_half, mathias_embed, mathias_le, q_order, upper_half, CohenCondition, MathiasCondition,
    ProjectionOracle, QCondition,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::levelset::LevelSet;
use crate::omega::{points_at_level, OmegaPoint, PiBaseElement};
use crate::slalom::Slalom;

const FAILURE_CAP: usize = 20;

/// Trace choices at level `j`: every unsaturated set up to level 3, the
/// menu above that.
fn trace_choices(j: u32) -> Vec<LevelSet> {
    if j <= 3 {
        (0..(1u64 << (1u64 << j)) - 1).map(|m| LevelSet::from_mask(j, m)).collect()
    } else {
        menu(j)
    }
}

fn menu(j: u32) -> Vec<LevelSet> {
    if j < 2 {
        vec![LevelSet::empty(j)]
    } else {
        vec![LevelSet::empty(j), lower_half(j), upper_half(j)]
    }
}

/// Canonical conditions with window `w` and set part supported below
/// `depth + 1`.
fn conditions_at(w: &OmegaPoint, depth: u32) -> Vec<QCondition> {
    let n = w.level();
    let mut parts: Vec<Vec<LevelSet>> = vec![w.trace().levels().to_vec()];
    for j in n..=depth {
        parts = parts
            .into_iter()
            .flat_map(|prefix| {
                menu(j).into_iter().filter(move |c| j != n || c.len() + 1 < 1u64 << j).map(move |c| {
                    let mut next = prefix.clone();
                    next.push(c);
                    next
                })
            })
            .collect();
    }
    parts
        .into_iter()
        .map(|levels| {
            let a = Slalom::from_levels(levels).expect("unsaturated menu");
            PiBaseElement::from_canonical_parts(a, w.clone())
        })
        .collect()
}

/// Every condition of the sweep at `depth`, windows from `min_level`.
pub fn canonical_conditions(depth: u32, min_level: u32) -> Result<Vec<QCondition>> {
    check_depth(depth)?;
    let mut out = Vec::new();
    for n in min_level..=depth {
        for w in windows_at(n) {
            out.extend(conditions_at(&w, depth));
        }
    }
    Ok(out)
}

fn check_depth(depth: u32) -> Result<()> {
    if depth > 5 {
        return Err(Error::DepthCap { depth, cap: 5 });
    }
    Ok(())
}

fn windows_at(n: u32) -> Vec<OmegaPoint> {
    if n <= 4 {
        return points_at_level(n, Exec::Sequential);
    }
    windows_at(n - 1)
        .into_iter()
        .flat_map(|w| {
            trace_choices(n - 1).into_iter().map(move |c| {
                let mut levels = w.trace().levels().to_vec();
                levels.push(c);
                OmegaPoint::new(Slalom::from_levels(levels).expect("in range")).expect("unsaturated")
            })
        })
        .collect()
}

trait Worker {
    type Item;
    fn make(&mut self, p: QCondition) -> Self::Item;
    fn visit(&mut self, ancestors: &[Vec<Self::Item>], own: &[Self::Item]);
}

fn walk<W: Worker>(w: &mut W, window: &OmegaPoint, depth: u32, ancestors: &mut Vec<Vec<W::Item>>) {
    let own: Vec<W::Item> = conditions_at(window, depth).into_iter().map(|p| w.make(p)).collect();
    w.visit(ancestors, &own);
    let n = window.level();
    if n < depth {
        ancestors.push(own);
        for c in trace_choices(n) {
            let mut levels = window.trace().levels().to_vec();
            levels.push(c);
            let child = OmegaPoint::new(Slalom::from_levels(levels).expect("in range")).expect("unsaturated");
            walk(w, &child, depth, ancestors);
        }
        ancestors.pop();
    }
}

/// Visits every node once: nodes below the split level sequentially, each
/// subtree rooted at the split level as its own task.
fn sweep<W, F>(depth: u32, min_level: u32, exec: Exec, new_worker: F) -> Vec<W>
where
    W: Worker + Send,
    F: Fn() -> W + Sync + Send,
{
    let split = depth.min(3).max(min_level);
    let mut head = new_worker();
    for n in min_level..split {
        for w in windows_at(n) {
            let mut anc: Vec<Vec<W::Item>> = (min_level..n)
                .map(|j| conditions_at(&w.restrict(j), depth).into_iter().map(|p| head.make(p)).collect())
                .collect();
            let own: Vec<W::Item> = conditions_at(&w, depth).into_iter().map(|p| head.make(p)).collect();
            head.visit(&anc, &own);
            anc.clear();
        }
    }
    let roots = windows_at(split);
    let mut workers = exec.map(&roots, |root| {
        let mut w = new_worker();
        let mut anc: Vec<Vec<W::Item>> = (min_level..split)
            .map(|j| conditions_at(&root.restrict(j), depth).into_iter().map(|p| w.make(p)).collect())
            .collect();
        walk(&mut w, root, depth, &mut anc);
        w
    });
    workers.insert(0, head);
    workers
}

fn push_failure(failures: &mut Vec<String>, dropped: &mut u64, msg: String) {
    if failures.len() < FAILURE_CAP {
        failures.push(msg);
    } else {
        *dropped += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProjectionReport {
    pub depth: u32,
    pub conditions: u64,
    pub pairs: u64,
    pub lifts: u64,
    pub images: BTreeSet<CohenCondition>,
    /// Cohen conditions with domain inside `[2, depth + 1)`.
    pub cohen_total: u64,
    pub failures: Vec<String>,
    pub dropped_failures: u64,
}

impl ProjectionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.images.len() as u64 == self.cohen_total
    }
}

struct ProjectionWorker {
    depth: u32,
    oracle: ProjectionOracle,
    report: ProjectionReport,
}

struct Projected {
    p: QCondition,
    phi: Option<CohenCondition>,
}

impl Worker for ProjectionWorker {
    type Item = Projected;

    fn make(&mut self, p: QCondition) -> Projected {
        let phi = match self.oracle.project(&p, self.depth + 1) {
            Ok(phi) => Some(phi),
            Err(e) => {
                push_failure(&mut self.report.failures, &mut self.report.dropped_failures, format!("{p:?}: {e}"));
                None
            }
        };
        Projected { p, phi }
    }

    fn visit(&mut self, ancestors: &[Vec<Projected>], own: &[Projected]) {
        let r = &mut self.report;
        for x in own {
            r.conditions += 1;
            let Some(phi) = &x.phi else { continue };
            if phi.entries().keys().all(|&k| k <= self.depth) {
                r.images.insert(phi.clone());
            }
            // (2): order preservation against every condition that can lie above
            for y in ancestors.iter().flatten().chain(own) {
                if q_order(&x.p, &y.p) {
                    r.pairs += 1;
                    if let Some(psi) = &y.phi {
                        if !phi.extends(psi) {
                            let msg = format!("order not preserved: {:?} ≤ {:?}", x.p, y.p);
                            push_failure(&mut r.failures, &mut r.dropped_failures, msg);
                        }
                    }
                }
            }
            // (3): every τ ≤ Φ(p) inside the sweep's domain lifts below p
            let n = x.p.window().level();
            let free: Vec<u32> = (n..=self.depth).filter(|k| phi.get(*k).is_none()).collect();
            let mut taus = vec![phi.clone()];
            for &k in &free {
                taus = taus
                    .into_iter()
                    .flat_map(|t| {
                        let mut e0 = t.entries().clone();
                        let mut e1 = e0.clone();
                        e0.insert(k, false);
                        e1.insert(k, true);
                        [t, CohenCondition(e0), CohenCondition(e1)]
                    })
                    .collect();
            }
            for tau in taus {
                r.lifts += 1;
                let outcome = lift(&x.p, &tau).and_then(|q| {
                    let image = self.oracle.project(&q, self.depth + 1)?;
                    Ok((image == tau, q_order(&q, &x.p)))
                });
                match outcome {
                    Ok((true, true)) => {}
                    Ok(bad) => {
                        let msg = format!("lift of {:?} to {tau:?} fails (image, below) = {bad:?}", x.p);
                        push_failure(&mut r.failures, &mut r.dropped_failures, msg);
                    }
                    Err(e) => push_failure(&mut r.failures, &mut r.dropped_failures, format!("lift to {tau:?}: {e}")),
                }
            }
        }
    }
}

/// Checks that `Φ` is a projection on the sweep at `depth` (window levels
/// `2..=depth`, Cohen domains inside `[2, depth + 1)`): the image is all of
/// those Cohen conditions, `Φ` preserves order, and every `τ ≤ Φ(p)` is the
/// exact image of a lift below `p`. Every image is confirmed by the
/// extension oracle.
pub fn verify_projection(depth: u32, exec: Exec) -> Result<ProjectionReport> {
    check_depth(depth)?;
    if depth < 2 {
        return Err(Error::Precondition(format!("depth {depth} has no window above level 1")));
    }
    let workers = sweep(depth, 2, exec, || ProjectionWorker {
        depth,
        oracle: ProjectionOracle::new(),
        report: ProjectionReport::default(),
    });
    let mut report = ProjectionReport {
        depth,
        cohen_total: CohenCondition::all_within(2, depth + 1).len() as u64,
        ..Default::default()
    };
    for w in workers {
        let r = w.report;
        report.conditions += r.conditions;
        report.pairs += r.pairs;
        report.lifts += r.lifts;
        report.images.extend(r.images);
        report.dropped_failures += r.dropped_failures;
        for f in r.failures {
            push_failure(&mut report.failures, &mut report.dropped_failures, f);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MathiasReport {
    pub depth: u32,
    pub conditions: u64,
    pub pairs: u64,
    pub failures: Vec<String>,
    pub dropped_failures: u64,
}

impl MathiasReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct MathiasWorker {
    depth: u32,
    report: MathiasReport,
    previous: Vec<(QCondition, MathiasCondition)>,
}

impl MathiasWorker {
    fn compare(&mut self, x: &(QCondition, MathiasCondition), y: &(QCondition, MathiasCondition)) {
        let r = &mut self.report;
        r.pairs += 1;
        for (a, b) in [(x, y), (y, x)] {
            let (q, m) = (q_order(&a.0, &b.0), mathias_le(&a.1, &b.1));
            if q != m {
                let msg = format!("{:?} vs {:?}: order {q}, Mathias {m}", a.0, b.0);
                push_failure(&mut r.failures, &mut r.dropped_failures, msg);
            }
        }
    }
}

impl Worker for MathiasWorker {
    type Item = (QCondition, MathiasCondition);

    fn make(&mut self, p: QCondition) -> Self::Item {
        let e = mathias_embed(&p);
        (p, e)
    }

    fn visit(&mut self, ancestors: &[Vec<Self::Item>], own: &[Self::Item]) {
        for (i, x) in own.iter().enumerate() {
            self.report.conditions += 1;
            let mut problems = x.1.violations(self.depth + 2);
            if !x.1.in_range() {
                problems.push("outside the range".into());
            }
            for msg in problems {
                push_failure(&mut self.report.failures, &mut self.report.dropped_failures, format!("{:?}: {msg}", x.0));
            }
            if own[..i].iter().any(|y| y.1 == x.1) {
                let msg = format!("{:?}: embedding is not injective", x.0);
                push_failure(&mut self.report.failures, &mut self.report.dropped_failures, msg);
            }
            for y in ancestors.iter().flatten().chain(&own[..=i]) {
                self.compare(x, y);
            }
        }
        // a neighbouring node that is not an ancestor: both orders must fail
        let previous = std::mem::take(&mut self.previous);
        let is_ancestor = |y: &Self::Item| ancestors.iter().flatten().any(|a| a.0 == y.0);
        if let (Some(x), Some(y)) = (own.first(), previous.first()) {
            if !is_ancestor(y) {
                for z in &previous {
                    self.compare(x, z);
                }
                let _ = y;
            }
        }
        self.previous = own.to_vec();
    }
}

/// Checks on the sweep at `depth` (window levels `1..=depth`) that the
/// embedding lands in the poset and its range, is injective, and matches
/// the order in both directions. Below depth 4 every pair is compared;
/// at depth 4, pairs with a common window prefix plus neighbouring nodes.
pub fn mathias_order_check(depth: u32, exec: Exec) -> Result<MathiasReport> {
    check_depth(depth)?;
    if depth > 4 {
        return Err(Error::DepthCap { depth, cap: 4 });
    }
    let workers =
        sweep(depth, 1, exec, || MathiasWorker { depth, report: MathiasReport::default(), previous: Vec::new() });
    let mut report = MathiasReport { depth, ..Default::default() };
    for w in workers {
        let r = w.report;
        report.conditions += r.conditions;
        report.pairs += r.pairs;
        report.dropped_failures += r.dropped_failures;
        for f in r.failures {
            push_failure(&mut report.failures, &mut report.dropped_failures, f);
        }
    }
    if depth <= 3 {
        let all: Vec<(QCondition, MathiasCondition)> = canonical_conditions(depth, 1)?
            .into_iter()
            .map(|p| {
                let e = mathias_embed(&p);
                (p, e)
            })
            .collect();
        let embeds: BTreeSet<String> = all.iter().map(|x| format!("{:?}", x.1)).collect();
        if embeds.len() != all.len() {
            report.failures.push("embedding is not injective".into());
        }
        for (i, x) in all.iter().enumerate() {
            for y in &all[..i] {
                report.pairs += 1;
                for (a, b) in [(x, y), (y, x)] {
                    if q_order(&a.0, &b.0) != mathias_le(&a.1, &b.1) {
                        push_failure(
                            &mut report.failures,
                            &mut report.dropped_failures,
                            format!("{:?} vs {:?}", a.0, b.0),
                        );
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_sizes() {
        // windows at level 2: 3 traces; set part levels 2 and 3 from the menu
        assert_eq!(canonical_conditions(3, 2).unwrap().len(), 3 * 9 + 45 * 3);
        assert_eq!(windows_at(5).len(), 11475 * 3);
    }

    #[test]
    fn projection_sweep_depth_3() {
        let r = verify_projection(3, Exec::Parallel).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!(r.cohen_total, 9);
        assert_eq!(r.conditions, 3 * 9 + 45 * 3);
    }

    #[test]
    fn mathias_sweep_depth_3() {
        let r = mathias_order_check(3, Exec::Sequential).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert!(r.pairs > 0);
    }
}
