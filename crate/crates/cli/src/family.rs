//! Turns family specs into concrete members and digests them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use slalom_core::construct::{build_s_alpha, chain_step, independent_subsets, BlockPair, ChainConfig};
use slalom_core::rational::{parse_rational, to_fraction_string};
use slalom_core::slalom::graph_of;
use slalom_core::{gen, PathReal, Slalom, Tail, TailRule};

use crate::config::{table_rows, Config, FamilySpec, LevelTable, Provenance};
use crate::error::{CliError, Result};

const DEFAULT_COUNT: usize = 4;
const DEFAULT_MAX_LEN: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub name: String,
    pub slalom: Slalom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub name: String,
    pub kind: Provenance,
    pub horizon: u32,
    pub members: Vec<Member>,
    /// The underlying paths of a graph family.
    pub paths: Vec<PathReal>,
}

impl Family {
    pub fn slaloms(&self) -> Vec<Slalom> {
        self.members.iter().map(|m| m.slalom.clone()).collect()
    }

    /// SHA-256 over the canonical text of every member, in order.
    pub fn digest(&self) -> String {
        let mut text = String::new();
        for m in &self.members {
            writeln!(text, "{} {}", m.name, canonical_text(&m.slalom)).expect("writing to a string");
        }
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}

/// `H;tail;n:c,c|n:c` listing the nonempty levels.
pub fn canonical_text(s: &Slalom) -> String {
    let levels: Vec<String> = s
        .levels()
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let cols: Vec<String> = l.iter().map(|c| c.to_string()).collect();
            format!("{}:{}", l.level(), cols.join(","))
        })
        .collect();
    format!("{};{};{}", s.horizon(), tail_text(s.tail()), levels.join("|"))
}

pub fn tail_text(t: &Tail) -> String {
    match t {
        Tail::Empty => "empty".into(),
        Tail::Rule(rule) => rule
            .terms()
            .iter()
            .map(|g| format!("geometric {} {}", g.first_level, to_fraction_string(&g.ratio)))
            .collect::<Vec<_>>()
            .join(" + "),
    }
}

pub fn parse_tail(text: &str) -> std::result::Result<Tail, String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    match words.as_slice() {
        ["empty"] => Ok(Tail::Empty),
        ["geometric", first, ratio] => {
            let first: u32 = first.parse().map_err(|_| format!("bad first level {first:?}"))?;
            let ratio = parse_rational(ratio).ok_or_else(|| format!("bad ratio {ratio:?}"))?;
            TailRule::geometric(first, ratio).map(Tail::Rule).map_err(|e| e.to_string())
        }
        _ => Err(format!("tail must be \"empty\" or \"geometric <first_level> <ratio>\", got {text:?}")),
    }
}

/// Every family in the config, resolving chain-step inputs first.
/// `default_horizon` fills in families that leave their horizon open.
pub fn materialize(config: &Config, default_horizon: Option<u32>) -> Result<BTreeMap<String, Family>> {
    let mut done = BTreeMap::new();
    for name in config.family.keys() {
        resolve(config, name, default_horizon, &mut done, &mut BTreeSet::new())?;
    }
    Ok(done)
}

fn resolve(
    config: &Config,
    name: &str,
    default_horizon: Option<u32>,
    done: &mut BTreeMap<String, Family>,
    visiting: &mut BTreeSet<String>,
) -> Result<()> {
    if done.contains_key(name) {
        return Ok(());
    }
    let spec = config.family.get(name).ok_or_else(|| CliError::UnknownFamily(name.into()))?;
    if !visiting.insert(name.to_string()) {
        return Err(family_error(name, "chain-step inputs form a cycle"));
    }
    if let Some(input) = &spec.inputs {
        resolve(config, input, default_horizon, done, visiting)?;
    }
    let family = build(name, spec, default_horizon, done)?;
    done.insert(name.to_string(), family);
    Ok(())
}

fn family_error(name: &str, detail: impl Into<String>) -> CliError {
    CliError::Family { name: name.into(), detail: detail.into() }
}

fn table_horizon(tables: &[LevelTable]) -> Result<u32> {
    let mut top = 0;
    for t in tables {
        for (level, _) in table_rows(t)? {
            top = top.max(level + 1);
        }
    }
    Ok(top)
}

fn build(
    name: &str,
    spec: &FamilySpec,
    default_horizon: Option<u32>,
    done: &BTreeMap<String, Family>,
) -> Result<Family> {
    let err = |d: String| family_error(name, d);
    let tables: Vec<LevelTable> = match (&spec.levels, &spec.members) {
        (Some(_), Some(_)) => return Err(err("give either levels or members, not both".into())),
        (Some(l), None) => vec![l.clone()],
        (None, Some(ms)) => ms.clone(),
        (None, None) => Vec::new(),
    };
    let horizon = match spec.horizon.or(default_horizon) {
        Some(h) => h,
        None if !tables.is_empty() => table_horizon(&tables)?,
        None => match &spec.paths {
            Some(ps) => ps.iter().map(|p| p.len() as u32).max().unwrap_or(0),
            None => return Err(err("horizon is required".into())),
        },
    };
    let tail = match &spec.tail {
        Some(t) => parse_tail(t).map_err(err)?,
        None => Tail::Empty,
    };
    if spec.kind == Provenance::Rule && tail.is_empty() {
        return Err(err("a rule family needs a geometric tail".into()));
    }
    let mut rng = gen::rng(spec.seed.unwrap_or(0));
    let count = spec.count.unwrap_or(DEFAULT_COUNT);
    let max_len = spec.max_len.unwrap_or(DEFAULT_MAX_LEN);

    let mut paths = Vec::new();
    let slaloms: Vec<Slalom> = match spec.kind {
        Provenance::Table | Provenance::Rule => {
            let base: Vec<Slalom> = if tables.is_empty() {
                if spec.seed.is_none() {
                    return Err(err("list levels or members, or give a seed".into()));
                }
                (0..count).map(|_| gen::slalom(&mut rng, horizon, max_len)).collect()
            } else {
                tables.iter().map(|t| Ok(Slalom::from_table(horizon, table_rows(t)?)?)).collect::<Result<_>>()?
            };
            base.into_iter().map(|s| Ok(s.with_tail(tail.clone())?)).collect::<Result<_>>()?
        }
        Provenance::Graph => {
            paths = match &spec.paths {
                Some(ps) => ps.iter().map(|p| PathReal::new(p.clone())).collect::<slalom_core::Result<_>>()?,
                None if spec.seed.is_some() => (0..count).map(|_| gen::path(&mut rng, horizon)).collect(),
                None => return Err(err("list paths or give a seed".into())),
            };
            paths.iter().map(|p| graph_of(p).extend_to(horizon)).collect::<slalom_core::Result<_>>()?
        }
        Provenance::ChainStep => {
            let input = spec.inputs.as_deref().ok_or_else(|| err("chain-step needs inputs".into()))?;
            let existing = done[input].slaloms();
            let f = match spec.paths.as_ref().and_then(|ps| ps.first()) {
                Some(p) => PathReal::new(p.clone())?,
                None => gen::path(&mut rng, horizon),
            };
            vec![chain_step(&existing, &f, horizon, &ChainConfig::default())?.extended]
        }
        Provenance::Block => {
            let bp = BlockPair::standard(horizon);
            let sets: Vec<BTreeSet<u64>> = match (&spec.sets, spec.r) {
                (Some(sets), _) => sets.iter().map(|s| s.iter().copied().collect()).collect(),
                (None, Some(r)) => independent_subsets(r, 1, (1u64 << r).max(horizon as u64))?,
                (None, None) => return Err(err("block families need sets or r".into())),
            };
            sets.iter().map(|x| build_s_alpha(&bp, x)).collect()
        }
    };
    if let Some(s) = slaloms.iter().find(|s| s.horizon() != horizon) {
        return Err(err(format!("member horizon {} differs from the family horizon {horizon}", s.horizon())));
    }
    let members =
        slaloms.into_iter().enumerate().map(|(i, slalom)| Member { name: format!("{name}[{i}]"), slalom }).collect();
    Ok(Family { name: name.into(), kind: spec.kind, horizon, members, paths })
}
