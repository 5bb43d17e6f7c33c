//! JSON encodings. Rationals are always `"num/den"` strings.

use serde_json::{json, Map, Value};
use slalom_core::omega::OmegaPoint;
use slalom_core::rational::to_fraction_string;
use slalom_core::{LevelSet, Rational, Slalom};

use crate::family::tail_text;

pub const SCHEMA_VERSION: u32 = 1;

pub fn rat(r: &Rational) -> Value {
    Value::String(to_fraction_string(r))
}

pub fn columns(l: &LevelSet) -> Value {
    l.iter().collect::<Vec<u64>>().into()
}

/// Nonempty levels keyed by level number.
pub fn levels(s: &Slalom) -> Value {
    let map: Map<String, Value> =
        s.levels().iter().filter(|l| !l.is_empty()).map(|l| (l.level().to_string(), columns(l))).collect();
    Value::Object(map)
}

pub fn slalom(s: &Slalom) -> Value {
    json!({ "horizon": s.horizon(), "levels": levels(s), "tail": tail_text(s.tail()) })
}

pub fn point(p: &OmegaPoint) -> Value {
    json!({ "level": p.level(), "trace": levels(p.trace()) })
}
