//! Config files: TOML with `[family.<name>]` sections and one `[run]` table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// How a family's members come about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Explicit level tables, or seeded random tables.
    Table,
    /// Graphs of explicit or seeded paths.
    Graph,
    /// A level table with a geometric density rule above the horizon.
    Rule,
    /// The extended output of one chain step over another family.
    ChainStep,
    /// `S_α` members built from a block pair and independent level sets.
    Block,
}

/// Level → columns, with levels written as keys (`2 = [0, 1]`).
pub type LevelTable = BTreeMap<String, Vec<u64>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u32>,
    /// A single member.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<LevelTable>,
    /// Several members.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<LevelTable>>,
    /// `"empty"` or `"geometric <first_level> <ratio>"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<u64>>>,
    /// Seed for generated members when none are listed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<u64>,
    /// Chain step: the family holding the existing members.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<String>,
    /// Block construction: explicit index sets, one member each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<Vec<u64>>>,
    /// Block construction: number of independent sets when `sets` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub family: BTreeMap<String, FamilySpec>,
    #[serde(default)]
    pub run: toml::Table,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Typed access to `[run]` keys.
pub struct RunParams<'a>(pub &'a toml::Table);

impl RunParams<'_> {
    pub fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(v) => Err(CliError::Config(format!("run.{key} must be a non-negative integer, got {v}"))),
        }
    }

    pub fn u32_or(&self, key: &str, default: u32) -> Result<u32> {
        let v = self.u64_or(key, default as u64)?;
        u32::try_from(v).map_err(|_| CliError::Config(format!("run.{key} = {v} is too large")))
    }

    pub fn str_opt(&self, key: &str) -> Result<Option<&str>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(CliError::Config(format!("run.{key} must be a string, got {v}"))),
        }
    }

    pub fn str_req(&self, key: &str) -> Result<&str> {
        self.str_opt(key)?.ok_or_else(|| CliError::Config(format!("run.{key} is required")))
    }

    pub fn u64_list(&self, key: &str) -> Result<Vec<u64>> {
        match self.0.get(key) {
            None => Ok(Vec::new()),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    _ => Err(CliError::Config(format!("run.{key} must list non-negative integers"))),
                })
                .collect(),
            Some(v) => Err(CliError::Config(format!("run.{key} must be an array, got {v}"))),
        }
    }

    pub fn value(&self, key: &str) -> Option<&toml::Value> {
        self.0.get(key)
    }
}

/// Parses a level table into `(level, columns)` rows.
pub fn table_rows(table: &LevelTable) -> Result<Vec<(u32, Vec<u64>)>> {
    table
        .iter()
        .map(|(k, cols)| {
            let level: u32 =
                k.trim().parse().map_err(|_| CliError::Config(format!("level key {k:?} is not a number")))?;
            Ok((level, cols.clone()))
        })
        .collect()
}
