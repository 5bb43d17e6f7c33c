//! One handler per subcommand. Each returns its JSON result and whether a
//! checked property failed.

use std::collections::{BTreeMap, BTreeSet};

use clap::ValueEnum;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};
use slalom_core::chain::{centered_decomposition, diagonal_witness, kelley_number, linked_partition, star_refine};
use slalom_core::construct::{
    bounding_search, build_s_alpha, chain_step, independence_check, independent_subsets, pattern_counts, BlockPair,
    Bounding, ChainConfig,
};
use slalom_core::forcing::{cohen_project, mathias_embed, mathias_order_check, verify_projection};
use slalom_core::ideal::classify;
use slalom_core::measure::{
    borel_cantelli_bound, containment_measure, delta_compare, destructibility_certificate, mu, nu, term_measure,
    MeasureValue, SlalomName,
};
use slalom_core::omega::{
    canonicalize, conjunct_infinitude, fact_check, omega_count, pibase_enum, points_at_level, Conjunct, Generator,
    MeetVerdict, OmegaPoint, Term, COUNT_CAP, ENUM_CAP,
};
use slalom_core::rational::parse_rational;
use slalom_core::slalom::{localizes, AlmostSubset};
use slalom_core::{Exec, PathReal, Rational, Slalom};

use crate::config::{table_rows, LevelTable, RunParams};
use crate::error::{CliError, Result};
use crate::family::Family;
use crate::report::{columns, levels, point, rat, slalom};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Classify,
    Localize,
    OmegaEnum,
    FactCheck,
    Meet,
    Pibase,
    Measure,
    Converge,
    DestructCert,
    BorelCantelli,
    Kelley,
    LinkedPartition,
    StarRefine,
    Diagonal,
    CenteredDecomp,
    ChainStep,
    Independent,
    SAlpha,
    IndependenceCheck,
    BoundingSearch,
    CohenProject,
    VerifyProjection,
    MathiasEmbed,
    MathiasOrderCheck,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

pub struct Outcome {
    pub result: Value,
    /// A checked property failed.
    pub finding: bool,
}

fn ok(result: Value) -> Result<Outcome> {
    Ok(Outcome { result, finding: false })
}

struct Ctx<'a> {
    run: RunParams<'a>,
    families: &'a BTreeMap<String, Family>,
}

impl Ctx<'_> {
    fn family(&self, key: &str) -> Result<&Family> {
        let name = self.run.str_req(key)?;
        self.families.get(name).ok_or_else(|| CliError::UnknownFamily(name.into()))
    }

    fn optional_family(&self, key: &str) -> Result<Option<&Family>> {
        match self.run.str_opt(key)? {
            None => Ok(None),
            Some(name) => self.families.get(name).map(Some).ok_or_else(|| CliError::UnknownFamily(name.into())),
        }
    }

    fn slaloms(&self, key: &str) -> Result<Vec<Slalom>> {
        Ok(self.family(key)?.slaloms())
    }

    fn optional_slaloms(&self, key: &str) -> Result<Vec<Slalom>> {
        Ok(self.optional_family(key)?.map(Family::slaloms).unwrap_or_default())
    }

    fn member(&self, key: &str) -> Result<Slalom> {
        let fam = self.family(key)?;
        let i = self.run.u64_or("member", 0)? as usize;
        fam.members
            .get(i)
            .map(|m| m.slalom.clone())
            .ok_or_else(|| CliError::Config(format!("family {:?} has no member {i}", fam.name)))
    }

    fn horizon(&self, fallback_family: Option<&str>) -> Result<u32> {
        if self.run.has("horizon") {
            return self.run.u32_or("horizon", 0);
        }
        match fallback_family {
            Some(key) => Ok(self.family(key)?.horizon),
            None => Err(CliError::Config("run.horizon is required".into())),
        }
    }

    fn rational(&self, key: &str, default: &str) -> Result<Rational> {
        let text = self.run.str_opt(key)?.unwrap_or(default);
        parse_rational(text).ok_or_else(|| CliError::Config(format!("run.{key} = {text:?} is not a rational")))
    }

    fn window(&self, key: &str) -> Result<Option<OmegaPoint>> {
        self.run.value(key).map(parse_window).transpose()
    }

    fn windows(&self, key: &str) -> Result<Vec<OmegaPoint>> {
        match self.run.value(key) {
            None => Ok(Vec::new()),
            Some(toml::Value::Array(items)) => items.iter().map(parse_window).collect(),
            Some(_) => Err(CliError::Config(format!("run.{key} must be an array of windows"))),
        }
    }

    fn name(&self) -> Result<SlalomName> {
        Ok(self.window("window")?.map_or(SlalomName::Generic, SlalomName::Windowed))
    }

    fn path(&self, horizon: u32) -> Result<PathReal> {
        if self.run.has("path") {
            return Ok(PathReal::new(self.run.u64_list("path")?)?);
        }
        match self.optional_family("paths")?.and_then(|f| f.paths.first()) {
            Some(p) => Ok(p.clone()),
            None => Ok(PathReal::new(vec![0; horizon as usize])?),
        }
    }
}

/// `{ level = m, levels = { "j" = [...] } }`, the trace below `m`.
fn parse_window(v: &toml::Value) -> Result<OmegaPoint> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Window {
        level: u32,
        #[serde(default)]
        levels: LevelTable,
    }
    let w: Window = v.clone().try_into().map_err(|e: toml::de::Error| CliError::Config(format!("window: {e}")))?;
    Ok(OmegaPoint::new(Slalom::from_table(w.level, table_rows(&w.levels)?)?)?)
}

fn measure_value(m: &MeasureValue) -> Value {
    json!({ "value": rat(&m.value), "lo": rat(&m.lo), "hi": rat(&m.hi), "exact": m.is_exact() })
}

fn almost(a: &AlmostSubset) -> Value {
    match a {
        AlmostSubset::Yes { witness } => json!({ "verdict": "yes", "witness": witness }),
        AlmostSubset::No { violations } => json!({ "verdict": "no", "violations": violations }),
        AlmostSubset::UndeterminedAtHorizon => json!({ "verdict": "undetermined" }),
    }
}

fn verdict(v: &MeetVerdict) -> Value {
    match v {
        MeetVerdict::Infinite(w) => {
            json!({ "verdict": "infinite", "start": w.start(), "low_trace": point(w.low_trace()) })
        }
        MeetVerdict::Finite { bound } => json!({ "verdict": "finite", "bound": bound }),
        MeetVerdict::Empty => json!({ "verdict": "empty" }),
    }
}

/// Set generators from `positive`, negated ones from `negative`, and the
/// optional `window`.
fn signed_term(ctx: &Ctx) -> Result<Term> {
    let mut positives: Vec<Generator> = ctx.slaloms("family")?.into_iter().map(Generator::Set).collect();
    positives.extend(ctx.window("window")?.map(Generator::Window));
    let negatives = ctx.optional_slaloms("negative")?.into_iter().map(Generator::Set).collect();
    Ok(Term::conjunct(Conjunct::new(positives, negatives)))
}

pub fn dispatch(cmd: Command, run: &toml::Table, families: &BTreeMap<String, Family>) -> Result<Outcome> {
    let ctx = Ctx { run: RunParams(run), families };
    let exec = Exec::Parallel;
    match cmd {
        Command::Classify => {
            let fam = ctx.family("family")?;
            let rows: Vec<Value> = fam
                .members
                .iter()
                .map(|m| {
                    let verdicts: serde_json::Map<String, Value> = classify(&m.slalom)
                        .into_iter()
                        .map(|v| {
                            let c = &v.certificate;
                            let body = json!({
                                "status": format!("{:?}", v.status),
                                "saturated_level": c.saturated_level,
                                "tail_sum_bound": rat(&c.tail_sum_bound),
                                "tail_density_bound": rat(&c.tail_density_bound),
                            });
                            (v.ideal.to_string(), body)
                        })
                        .collect();
                    json!({ "member": m.name, "partial_sum": rat(&m.slalom.partial_sum()), "ideals": verdicts })
                })
                .collect();
            ok(json!({ "members": rows }))
        }
        Command::Localize => {
            let s = ctx.member("family")?;
            let paths = &ctx.family("paths")?.paths;
            let rows: Vec<Value> = localizes(&s, paths).iter().map(almost).collect();
            ok(json!({ "slalom": slalom(&s), "paths": rows }))
        }
        Command::OmegaEnum => {
            let depth = ctx.run.u32_or("depth", 3)?;
            if depth > COUNT_CAP {
                return Err(slalom_core::Error::DepthCap { depth, cap: COUNT_CAP }.into());
            }
            let mut finding = false;
            let mut rows = Vec::new();
            for m in 0..=depth {
                let count = omega_count(m);
                let mut row = json!({ "level": m, "count": count.to_string() });
                if m <= ENUM_CAP {
                    let points = points_at_level(m, exec);
                    finding |= count != (points.len() as u64).into();
                    row["enumerated"] = points.len().into();
                    if m <= 2 {
                        row["points"] = points.iter().map(point).collect::<Vec<_>>().into();
                    }
                }
                rows.push(row);
            }
            Ok(Outcome { result: json!({ "levels": rows }), finding })
        }
        Command::FactCheck => {
            let r = fact_check(
                ctx.run.u32_or("depth", 8)?,
                ctx.run.u32_or("trials", 100)?,
                ctx.run.u64_or("seed", 0)?,
                exec,
            )?;
            Ok(Outcome {
                result: json!({
                    "depth": r.depth, "trials": r.trials, "points_checked": r.points_checked,
                    "levels_counted": r.levels_counted, "failures": r.failures,
                }),
                finding: !r.passed(),
            })
        }
        Command::Meet => {
            let mut positives: Vec<Generator> = ctx.slaloms("family")?.into_iter().map(Generator::Set).collect();
            positives.extend(ctx.window("window")?.map(Generator::Window));
            let mut negatives: Vec<Generator> =
                ctx.optional_slaloms("negative")?.into_iter().map(Generator::Set).collect();
            negatives.extend(ctx.windows("negative_windows")?.into_iter().map(Generator::Window));
            ok(verdict(&conjunct_infinitude(&Conjunct::new(positives, negatives))?))
        }
        Command::Pibase => {
            let elems = pibase_enum(&ctx.slaloms("family")?, ctx.run.u32_or("depth", 3)?, exec)?;
            let rows: Vec<Value> = elems
                .iter()
                .map(|p| json!({ "set_part": slalom(p.set_part()), "window": point(p.window()) }))
                .collect();
            ok(json!({ "count": rows.len(), "elements": rows }))
        }
        Command::Measure => {
            let name = ctx.name()?;
            match ctx.run.str_opt("kind")?.unwrap_or("containment") {
                "containment" => {
                    let rows: Vec<Value> = ctx
                        .family("family")?
                        .members
                        .iter()
                        .map(|m| json!({ "member": m.name, "measure": measure_value(&containment_measure(&m.slalom, &name)) }))
                        .collect();
                    ok(json!({ "kind": "containment", "members": rows }))
                }
                "term" => {
                    let m = term_measure(&ctx.slaloms("family")?, &ctx.optional_slaloms("negative")?, &name)?;
                    ok(json!({ "kind": "term", "measure": measure_value(&m) }))
                }
                "nu" => {
                    let p =
                        ctx.window("point")?.ok_or_else(|| CliError::Config("run.point is required for nu".into()))?;
                    let m = nu(&p, &signed_term(&ctx)?, exec)?;
                    ok(json!({ "kind": "nu", "point": point(&p), "measure": measure_value(&m) }))
                }
                "mu" => {
                    let k = ctx.run.u64_or("k", 64)?;
                    let m = mu(&signed_term(&ctx)?, k, exec)?;
                    ok(json!({
                        "kind": "mu", "k": k, "measure": measure_value(&m.value),
                        "strictly_positive": m.strictly_positive,
                    }))
                }
                other => Err(CliError::Config(format!("run.kind {other:?} is not containment, term, nu or mu"))),
            }
        }
        Command::Converge => {
            let depth = ctx.run.u32_or("depth", 3)?;
            if depth > ENUM_CAP {
                return Err(slalom_core::Error::DepthCap { depth, cap: ENUM_CAP }.into());
            }
            let points: Vec<OmegaPoint> = (0..=depth).flat_map(|m| points_at_level(m, exec)).collect();
            let mut violations = 0usize;
            let mut rows = Vec::new();
            for m in &ctx.family("family")?.members {
                let table = delta_compare(&m.slalom, &points, exec)?;
                let bad = table.iter().filter(|r| !r.within_bound).count();
                let inside = table.iter().filter(|r| !r.delta.is_zero()).count();
                let worst = table.iter().map(|r| (&r.delta - &r.nu).abs()).max().unwrap_or_else(Rational::zero);
                violations += bad;
                rows.push(json!({
                    "member": m.name, "points": table.len(), "inside": inside,
                    "max_gap": rat(&worst), "violations": bad,
                }));
            }
            Ok(Outcome { result: json!({ "depth": depth, "members": rows }), finding: violations > 0 })
        }
        Command::DestructCert => {
            let eps = ctx.rational("eps", "1/8")?;
            let rows = ctx
                .family("family")?
                .members
                .iter()
                .map(|m| {
                    let c = destructibility_certificate(&m.slalom, &eps)?;
                    Ok(json!({ "member": m.name, "level": c.level, "bound": rat(&c.bound) }))
                })
                .collect::<Result<Vec<_>>>()?;
            ok(json!({ "eps": rat(&eps), "members": rows }))
        }
        Command::BorelCantelli => {
            let from = ctx.run.u32_or("m", 1)?;
            let rows = ctx
                .family("family")?
                .members
                .iter()
                .map(|m| Ok(json!({ "member": m.name, "bound": rat(&borel_cantelli_bound(&m.slalom, from)?) })))
                .collect::<Result<Vec<_>>>()?;
            ok(json!({ "m": from, "members": rows }))
        }
        Command::Kelley => {
            let mut terms: Vec<Term> =
                ctx.optional_slaloms("family")?.into_iter().map(|s| Term::generator(Generator::Set(s))).collect();
            terms.extend(ctx.optional_slaloms("negative")?.into_iter().map(|s| Term::not_generator(Generator::Set(s))));
            terms.extend(ctx.windows("windows")?.into_iter().map(|w| Term::generator(Generator::Window(w))));
            let max_len = ctx.run.u32_or("max_len", 4)?;
            let k = kelley_number(&terms, max_len, exec)?;
            ok(json!({ "terms": terms.len(), "max_len": max_len, "intersection_number": rat(&k) }))
        }
        Command::LinkedPartition => {
            let p = linked_partition(&ctx.slaloms("family")?, ctx.run.u32_or("n", 2)?)?;
            let buckets: Vec<Value> = p
                .buckets
                .iter()
                .map(|(key, members)| {
                    json!({
                        "cutoff": key.cutoff, "threshold": rat(&key.threshold),
                        "prefix": levels(&key.prefix), "members": members,
                    })
                })
                .collect();
            Ok(Outcome {
                result: json!({
                    "arity": p.arity, "buckets": buckets, "subsets_checked": p.subsets_checked,
                    "failures": p.failures,
                }),
                finding: !p.verified(),
            })
        }
        Command::StarRefine => {
            let horizon = ctx.horizon(Some("family"))?;
            let r = star_refine(&ctx.slaloms("family")?, horizon)?;
            let steps: Vec<Value> = r
                .steps
                .iter()
                .map(|s| json!({ "member": s.member, "start": s.start, "end": s.end, "survivors": s.survivors }))
                .collect();
            Ok(Outcome {
                result: json!({
                    "cutoff": r.cutoff, "indices": r.indices, "union": slalom(&r.union),
                    "steps": steps, "levels_bounded": r.bounds.len(), "failures": r.failures,
                }),
                finding: !r.verified(),
            })
        }
        Command::Diagonal => {
            let w = diagonal_witness(&ctx.slaloms("family")?)?;
            let escapes: Vec<Value> = w
                .escapes
                .iter()
                .map(|e| json!({ "index": e.index, "value": e.value, "graph_escapes": e.graph_escapes }))
                .collect();
            ok(json!({ "path": w.path.values(), "escapes": escapes }))
        }
        Command::CenteredDecomp => {
            let bound = ctx.member("bound")?;
            let windows = ctx.windows("windows")?;
            let d = centered_decomposition(&bound, &ctx.slaloms("family")?, &windows, ctx.run.u32_or("depth", 8)?)?;
            let classes: Vec<Value> = d
                .classes
                .iter()
                .map(|c| {
                    json!({
                        "window": point(&c.window), "members": c.members,
                        "centered": c.centered, "points_at_depth": c.points_at_depth,
                    })
                })
                .collect();
            Ok(Outcome {
                result: json!({ "assignments": d.assignments, "classes": classes }),
                finding: !d.all_centered(),
            })
        }
        Command::ChainStep => {
            let horizon = ctx.horizon(None)?;
            let f = ctx.path(horizon)?;
            let config = ChainConfig { extra_budget: ctx.rational("extra_budget", "1")? };
            let r = chain_step(&ctx.optional_slaloms("family")?, &f, horizon, &config)?;
            Ok(Outcome {
                result: json!({
                    "horizon": r.horizon, "g": r.g, "settle": r.settle,
                    "window_sums": r.window_sums.iter().map(rat).collect::<Vec<_>>(),
                    "merged": slalom(&r.merged), "cutoff": r.cutoff, "extended": slalom(&r.extended),
                    "failures": r.failures,
                }),
                finding: !r.verified(),
            })
        }
        Command::Independent => {
            let r = ctx.run.u32_or("r", 3)?;
            let t = ctx.run.u64_or("witnesses", 1)?;
            let m = ctx.run.u64_or("m", t.saturating_mul(1u64 << r.min(20)))?;
            let sets = independent_subsets(r, t, m)?;
            let counts = pattern_counts(&sets, m);
            let finding = counts.iter().any(|&c| c < t);
            let sets: Vec<Vec<u64>> = sets.iter().map(|s| s.iter().copied().collect()).collect();
            Ok(Outcome { result: json!({ "r": r, "m": m, "sets": sets, "pattern_counts": counts }), finding })
        }
        Command::SAlpha => {
            let horizon = ctx.run.u32_or("horizon", 16)?;
            let r = ctx.run.u32_or("r", 3)?;
            let bp = BlockPair::standard(horizon);
            let sets = independent_subsets(r, 1, (1u64 << r.min(20)).max(horizon as u64))?;
            let members: Vec<Value> = sets.iter().map(|x| slalom(&build_s_alpha(&bp, x))).collect();
            ok(json!({ "horizon": horizon, "base": slalom(bp.base()), "members": members }))
        }
        Command::IndependenceCheck => {
            let horizon = ctx.run.u32_or("horizon", 20)?;
            let r = ctx.run.u32_or("r", 5)?;
            let y_bound = ctx.run.u64_or("y_bound", horizon as u64)?;
            let bp = BlockPair::standard(horizon);
            let sets = independent_subsets(r, 1, (1u64 << r.min(20)).max(horizon as u64))?;
            let alphas: Vec<Slalom> = sets.iter().map(|x| build_s_alpha(&bp, x)).collect();
            let index = |key: &str| -> Result<Vec<usize>> {
                ctx.run
                    .u64_list(key)?
                    .into_iter()
                    .map(|i| {
                        if i < r as u64 {
                            Ok(i as usize)
                        } else {
                            Err(CliError::Config(format!("run.{key}: index {i} is not below r = {r}")))
                        }
                    })
                    .collect()
            };
            let (positive, negative) = (index("positive")?, index("negative")?);
            let y: BTreeSet<u64> = (2..y_bound)
                .filter(|x| {
                    positive.iter().all(|&i| sets[i].contains(x)) && negative.iter().all(|&i| !sets[i].contains(x))
                })
                .collect();
            let ws = independence_check(&bp, &alphas, &positive, &negative, &y)?;
            let rows: Vec<Value> = ws.iter().map(|w| json!({ "point": point(&w.point), "passes": w.passes })).collect();
            Ok(Outcome { result: json!({ "y": y, "witnesses": rows }), finding: !ws.iter().all(|w| w.passes) })
        }
        Command::BoundingSearch => {
            let horizon = ctx.horizon(Some("family"))?;
            ok(match bounding_search(&ctx.slaloms("family")?, horizon)? {
                Bounding::Bound(s) => json!({ "verdict": "bound", "bound": slalom(&s) }),
                Bounding::Saturated { level } => json!({ "verdict": "saturated", "level": level }),
            })
        }
        Command::CohenProject => {
            let window = ctx.window("window")?.ok_or_else(|| CliError::Config("run.window is required".into()))?;
            let depth = ctx.run.u32_or("search_depth", 7)?;
            let rows = ctx
                .family("family")?
                .members
                .iter()
                .map(|m| match canonicalize(&m.slalom, &window) {
                    Err(slalom_core::Error::FiniteMeet) => Ok(json!({ "member": m.name, "finite": true })),
                    Err(e) => Err(e.into()),
                    Ok(p) => {
                        let image: BTreeMap<String, u8> = cohen_project(&p, depth)?
                            .entries()
                            .iter()
                            .map(|(k, v)| (k.to_string(), *v as u8))
                            .collect();
                        Ok(json!({ "member": m.name, "window": point(p.window()), "image": image }))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            ok(json!({ "members": rows }))
        }
        Command::VerifyProjection => {
            let r = verify_projection(ctx.run.u32_or("depth", 4)?, exec)?;
            Ok(Outcome {
                result: json!({
                    "depth": r.depth, "conditions": r.conditions, "pairs": r.pairs, "lifts": r.lifts,
                    "images_hit": r.images.len(), "cohen_total": r.cohen_total,
                    "failures": r.failures, "dropped_failures": r.dropped_failures,
                }),
                finding: !r.passed(),
            })
        }
        Command::MathiasEmbed => {
            let window = ctx.window("window")?.ok_or_else(|| CliError::Config("run.window is required".into()))?;
            let horizon = ctx.horizon(Some("family"))?;
            let mut finding = false;
            let rows = ctx
                .family("family")?
                .members
                .iter()
                .map(|m| {
                    let e = mathias_embed(&canonicalize(&m.slalom, &window)?);
                    let violations = e.violations(horizon);
                    finding |= !violations.is_empty() || !e.in_range();
                    Ok(json!({
                        "member": m.name, "s": e.s, "floor": e.floor, "removed": levels(&e.removed),
                        "first_f_level": columns(&e.f_level(e.floor)), "violations": violations,
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome { result: json!({ "members": rows }), finding })
        }
        Command::MathiasOrderCheck => {
            let r = mathias_order_check(ctx.run.u32_or("depth", 3)?, exec)?;
            Ok(Outcome {
                result: json!({
                    "depth": r.depth, "conditions": r.conditions, "pairs": r.pairs,
                    "failures": r.failures, "dropped_failures": r.dropped_failures,
                }),
                finding: !r.passed(),
            })
        }
    }
}
