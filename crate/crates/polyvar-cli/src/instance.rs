//! Instance files: named objects and a list of queries.

use std::collections::BTreeMap;
use std::fmt;

use polyvar::limits::Limits;
use polyvar::maps::{PLFunction, PolyMap};
use polyvar::{ConvexPolyhedron, Matrix, PolyhedralSet, RVector, Rational};
use serde_json::Value;

/// An input problem, tagged with the object or query it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError {
    pub context: String,
    pub message: String,
}

impl InputError {
    pub fn new(context: impl Into<String>, message: impl fmt::Display) -> Self {
        InputError {
            context: context.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}

pub type InputResult<T> = std::result::Result<T, InputError>;

#[derive(Clone, Debug)]
pub enum Object {
    Set(PolyhedralSet),
    Map(PolyMap),
    Function(PLFunction),
}

impl Object {
    pub fn kind(&self) -> &'static str {
        match self {
            Object::Set(_) => "set",
            Object::Map(_) => "map",
            Object::Function(_) => "function",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Query {
    pub name: String,
    pub op: String,
    pub args: Value,
    pub expected: Option<Value>,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub objects: BTreeMap<String, Object>,
    pub queries: Vec<Query>,
}

/// Parsing context: the desk-scale caps and the name used in messages.
pub struct Parser<'a> {
    pub limits: Limits,
    pub ctx: &'a str,
}

impl Parser<'_> {
    fn err(&self, msg: impl fmt::Display) -> InputError {
        InputError::new(self.ctx, msg)
    }

    pub fn rational(&self, v: &Value) -> InputResult<Rational> {
        match v {
            Value::String(s) => s.parse().map_err(|e| self.err(e)),
            Value::Number(n) => n
                .as_i64()
                .map(Rational::from_int)
                .ok_or_else(|| self.err(format!("number {n} is not an integer; write rationals as \"p/q\""))),
            other => Err(self.err(format!("expected a rational, found {other}"))),
        }
    }

    pub fn vector(&self, v: &Value) -> InputResult<RVector> {
        let items = v.as_array().ok_or_else(|| self.err(format!("expected a vector, found {v}")))?;
        Ok(RVector(items.iter().map(|x| self.rational(x)).collect::<InputResult<_>>()?))
    }

    pub fn vector_of_dim(&self, v: &Value, dim: usize, what: &str) -> InputResult<RVector> {
        let out = self.vector(v)?;
        if out.dim() != dim {
            return Err(self.err(format!("{what} has dimension {}, expected {dim}", out.dim())));
        }
        Ok(out)
    }

    pub fn matrix(&self, v: &Value) -> InputResult<Matrix> {
        let rows = v.as_array().ok_or_else(|| self.err("expected a matrix (list of rows)"))?;
        let rows: Vec<RVector> = rows.iter().map(|r| self.vector(r)).collect::<InputResult<_>>()?;
        let cols = rows.first().map_or(0, RVector::dim);
        if rows.iter().any(|r| r.dim() != cols) {
            return Err(self.err("matrix rows have different lengths"));
        }
        Ok(Matrix::from_rows(rows.into_iter().map(|r| r.0).collect(), cols))
    }

    fn rows(&self, v: Option<&Value>, what: &str) -> InputResult<Vec<(RVector, Rational)>> {
        let Some(v) = v else { return Ok(Vec::new()) };
        let rows = v.as_array().ok_or_else(|| self.err(format!("`{what}` must be a list of rows")))?;
        rows.iter()
            .map(|r| {
                let full = self.vector(r)?;
                if full.dim() == 0 {
                    return Err(self.err(format!("empty `{what}` row")));
                }
                let d = full.dim() - 1;
                Ok((full.slice(0, d), full[d].clone()))
            })
            .collect()
    }

    pub fn polyhedron(&self, v: &Value, dim: Option<usize>) -> InputResult<ConvexPolyhedron> {
        let obj = v.as_object().ok_or_else(|| self.err("a polyhedron is an object with `ineq` and `eq`"))?;
        if let Some(k) = obj.keys().find(|k| *k != "ineq" && *k != "eq") {
            return Err(self.err(format!("unknown polyhedron key `{k}`")));
        }
        let ineqs = self.rows(obj.get("ineq"), "ineq")?;
        let eqs = self.rows(obj.get("eq"), "eq")?;
        let dim = dim
            .or_else(|| ineqs.iter().chain(&eqs).next().map(|(a, _)| a.dim()))
            .ok_or_else(|| self.err("cannot infer the dimension of a polyhedron without rows; add `dim`"))?;
        if ineqs.len() + eqs.len() > self.limits.max_constraints {
            return Err(self.err(format!(
                "{} constraints exceed the limit {}",
                ineqs.len() + eqs.len(),
                self.limits.max_constraints
            )));
        }
        ConvexPolyhedron::new(dim, ineqs, eqs).map_err(|e| self.err(e))
    }

    pub fn set(&self, v: &Value) -> InputResult<PolyhedralSet> {
        let obj = v.as_object().ok_or_else(|| self.err("a set is an object with `pieces`"))?;
        if let Some(k) = obj.keys().find(|k| *k != "pieces" && *k != "dim") {
            return Err(self.err(format!("unknown set key `{k}`")));
        }
        let declared = match obj.get("dim") {
            Some(d) => Some(d.as_u64().ok_or_else(|| self.err("`dim` must be a nonnegative integer"))? as usize),
            None => None,
        };
        let raw = obj
            .get("pieces")
            .and_then(Value::as_array)
            .ok_or_else(|| self.err("`pieces` must be a list"))?;
        let mut pieces = Vec::new();
        let mut dim = declared;
        for p in raw {
            let piece = self.polyhedron(p, dim)?;
            dim = Some(piece.dim());
            pieces.push(piece);
        }
        let dim = dim.ok_or_else(|| self.err("an empty set needs `dim`"))?;
        if dim > self.limits.max_dim {
            return Err(self.err(format!("dimension {dim} exceeds the limit {}", self.limits.max_dim)));
        }
        if pieces.len() > self.limits.max_pieces {
            return Err(self.err(format!("{} pieces exceed the limit {}", pieces.len(), self.limits.max_pieces)));
        }
        Ok(PolyhedralSet::from_pieces(dim, pieces))
    }

    fn usize_field(&self, obj: &serde_json::Map<String, Value>, key: &str) -> InputResult<usize> {
        obj.get(key)
            .and_then(Value::as_u64)
            .map(|x| x as usize)
            .ok_or_else(|| self.err(format!("missing integer field `{key}`")))
    }

    pub fn object(&self, v: &Value) -> InputResult<Object> {
        let obj = v.as_object().ok_or_else(|| self.err("an object must be a JSON object"))?;
        if let Some(g) = obj.get("graph") {
            let graph = self.set(g)?;
            let m = self.usize_field(obj, "m")?;
            let n = self.usize_field(obj, "n")?;
            if graph.dim() != m + n {
                return Err(self.err(format!("graph has dimension {}, expected m + n = {}", graph.dim(), m + n)));
            }
            Ok(Object::Map(PolyMap::from_graph(graph, m)))
        } else if let Some(e) = obj.get("epi") {
            let epi = self.set(e)?;
            let n = self.usize_field(obj, "n")?;
            PLFunction::new(epi, n).map(Object::Function).map_err(|e| self.err(e))
        } else if obj.contains_key("pieces") {
            self.set(v).map(Object::Set)
        } else {
            Err(self.err("expected a set (`pieces`), a map (`graph`) or a function (`epi`)"))
        }
    }
}

pub fn parse_instance(text: &str, limits: Limits) -> InputResult<Instance> {
    let root: Value = serde_json::from_str(text).map_err(|e| InputError::new("instance", e))?;
    let root = root.as_object().ok_or_else(|| InputError::new("instance", "top level must be an object"))?;
    if let Some(k) = root.keys().find(|k| *k != "objects" && *k != "queries") {
        return Err(InputError::new("instance", format!("unknown top-level key `{k}`")));
    }
    let mut objects = BTreeMap::new();
    if let Some(objs) = root.get("objects") {
        let objs = objs
            .as_object()
            .ok_or_else(|| InputError::new("objects", "must map names to objects"))?;
        for (name, v) in objs {
            let ctx = format!("object `{name}`");
            let p = Parser { limits, ctx: &ctx };
            objects.insert(name.clone(), p.object(v)?);
        }
    }
    let mut queries = Vec::new();
    if let Some(qs) = root.get("queries") {
        let qs = qs.as_array().ok_or_else(|| InputError::new("queries", "must be a list"))?;
        for (i, q) in qs.iter().enumerate() {
            let obj = q
                .as_object()
                .ok_or_else(|| InputError::new(format!("query #{i}"), "must be an object"))?;
            let name = match obj.get("name") {
                Some(Value::String(s)) => s.clone(),
                None => format!("q{i}"),
                Some(_) => return Err(InputError::new(format!("query #{i}"), "`name` must be a string")),
            };
            let op = obj
                .get("op")
                .and_then(Value::as_str)
                .ok_or_else(|| InputError::new(format!("query `{name}`"), "missing `op`"))?
                .to_string();
            if let Some(k) = obj.keys().find(|k| !["name", "op", "args", "expected"].contains(&k.as_str())) {
                return Err(InputError::new(format!("query `{name}`"), format!("unknown key `{k}`")));
            }
            queries.push(Query {
                name,
                op,
                args: obj.get("args").cloned().unwrap_or(Value::Object(Default::default())),
                expected: obj.get("expected").cloned(),
            });
        }
    }
    Ok(Instance { objects, queries })
}
