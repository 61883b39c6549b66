//! `polyvar gen`: seeded instance files.

use polyvar::generate::{GenConfig, Generator};
use polyvar::limits::Limits;
use serde_json::{json, Map, Value};

use crate::encode;
use crate::instance::{InputError, InputResult};

/// Builds an instance with `count` sets and `count` maps plus a cone,
/// verify, check and figure1 query for each. The same seed gives the same
/// file byte for byte.
pub fn instance(
    seed: u64,
    count: usize,
    max_dim: Option<usize>,
    max_pieces: Option<usize>,
    limits: Limits,
) -> InputResult<Value> {
    let defaults = GenConfig::default();
    let cfg = GenConfig {
        max_dim: max_dim.unwrap_or(defaults.max_dim),
        max_pieces: max_pieces.unwrap_or(defaults.max_pieces),
        ..defaults
    };
    if cfg.max_dim < 2 {
        return Err(InputError::new("--max-dim", "gen needs a dimension of at least 2 for maps"));
    }
    if cfg.max_pieces == 0 {
        return Err(InputError::new("--max-pieces", "gen needs at least one piece"));
    }
    if cfg.max_dim > limits.max_dim || cfg.max_pieces > limits.max_pieces {
        return Err(InputError::new("gen", "requested sizes exceed the active limits"));
    }
    let mut g = Generator::new(seed, cfg);
    let mut objects = Map::new();
    let mut queries = Vec::new();
    for i in 0..count {
        let s = g.set();
        let name = format!("S{i}");
        objects.insert(name.clone(), encode::set(&s.set));
        let point = encode::vector(&s.point);
        queries.push(json!({
            "name": format!("tangent_{name}"),
            "op": "cone",
            "args": { "set": name, "point": point, "kind": "tangent" },
        }));
        queries.push(json!({
            "name": format!("verify_{name}"),
            "op": "verify",
            "args": { "set": name, "point": point },
        }));
    }
    for i in 0..count {
        let m = g.map();
        let name = format!("M{i}");
        objects.insert(name.clone(), encode::map(&m.map));
        let (y, x) = (encode::vector(&m.y), encode::vector(&m.x));
        queries.push(json!({
            "name": format!("check_{name}"),
            "op": "check",
            "args": { "map": name, "y": y, "x": x },
        }));
        queries.push(json!({
            "name": format!("figure1_{name}"),
            "op": "figure1",
            "args": { "map": name, "y": y, "x": x },
        }));
    }
    Ok(json!({ "objects": objects, "queries": queries }))
}
