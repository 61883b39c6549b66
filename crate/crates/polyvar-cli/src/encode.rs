//! Report encoding. Objects use the instance-file schema so reports re-parse.

use polyvar::calculus::{Check, Estimate, RuleReport};
use polyvar::criteria::CriterionReport;
use polyvar::maps::{ExtReal, PLFunction, PolyMap};
use polyvar::{ConvexPolyhedron, PolyhedralSet, RVector, Rational};
use serde_json::{json, Value};

pub fn rational(r: &Rational) -> Value {
    Value::String(r.to_string())
}

pub fn vector(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(rational).collect())
}

fn rows(rs: &[(RVector, Rational)]) -> Value {
    Value::Array(
        rs.iter()
            .map(|(a, b)| {
                let mut row: Vec<Value> = a.iter().map(rational).collect();
                row.push(rational(b));
                Value::Array(row)
            })
            .collect(),
    )
}

pub fn polyhedron(p: &ConvexPolyhedron) -> Value {
    json!({ "ineq": rows(p.ineqs()), "eq": rows(p.eqs()) })
}

pub fn set(s: &PolyhedralSet) -> Value {
    json!({ "dim": s.dim(), "pieces": s.pieces().iter().map(polyhedron).collect::<Vec<_>>() })
}

pub fn map(m: &PolyMap) -> Value {
    json!({ "graph": set(m.graph()), "m": m.m(), "n": m.n() })
}

pub fn function(f: &PLFunction) -> Value {
    json!({ "epi": set(f.epigraph()), "n": f.n() })
}

pub fn ext_real(x: &ExtReal) -> Value {
    match x {
        ExtReal::Finite(r) => rational(r),
        other => Value::String(other.to_string()),
    }
}

fn witness(w: &Option<Vec<RVector>>) -> Value {
    match w {
        Some(vs) => Value::Array(vs.iter().map(|v| vector(v)).collect()),
        None => Value::Null,
    }
}

fn opt_vector(v: &Option<RVector>) -> Value {
    v.as_ref().map_or(Value::Null, |v| vector(v))
}

pub fn criterion(c: &CriterionReport) -> Value {
    json!({
        "criterion": c.criterion.name(),
        "verdict": c.verdict,
        "witness": witness(&c.witness),
        "modulus_bound": c.modulus_bound.as_ref().map_or(Value::Null, rational),
    })
}

fn estimate(e: &Estimate) -> Value {
    json!({
        "name": e.name,
        "lhs": set(&e.lhs),
        "rhs": set(&e.rhs),
        "relation": e.relation.name(),
        "claimed": e.claimed.map_or(Value::Null, |c| Value::String(c.name().into())),
        "consistent": e.consistent(),
        "lhs_witness": opt_vector(&e.lhs_witness),
        "rhs_witness": opt_vector(&e.rhs_witness),
    })
}

fn check(c: &Check) -> Value {
    json!({ "name": c.name, "holds": c.holds, "witness": witness(&c.witness) })
}

pub fn rule_report(r: &RuleReport) -> Value {
    json!({
        "rule": r.rule,
        "kind": r.kind.name(),
        "hypotheses": r.hypotheses.iter().map(criterion).collect::<Vec<_>>(),
        "estimates": r.estimates.iter().map(estimate).collect::<Vec<_>>(),
        "checks": r.checks.iter().map(check).collect::<Vec<_>>(),
        "modulus_bound": r.modulus_bound.as_ref().map_or(Value::Null, rational),
        "consistent": r.consistent(),
    })
}

fn text_vector(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(Rational::to_string).collect();
    format!("({})", parts.join(", "))
}

fn text_row(a: &RVector, b: &Rational, op: &str) -> String {
    let terms: Vec<String> = a
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| format!("{c}*z{}", i + 1))
        .collect();
    let lhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
    format!("{lhs} {op} {b}")
}

/// One line per piece, constraints joined by `and`.
pub fn text_set(s: &PolyhedralSet) -> Vec<String> {
    if s.is_empty() {
        return vec!["empty".into()];
    }
    s.pieces()
        .iter()
        .map(|p| {
            let cons: Vec<String> = p
                .eqs()
                .iter()
                .map(|(a, b)| text_row(a, b, "="))
                .chain(p.ineqs().iter().map(|(a, b)| text_row(a, b, "<=")))
                .collect();
            if cons.is_empty() {
                format!("R^{}", s.dim())
            } else {
                cons.join(" and ")
            }
        })
        .collect()
}

pub fn text_criterion(c: &CriterionReport) -> String {
    let mut line = format!("{}: {}", c.criterion.name(), if c.verdict { "holds" } else { "fails" });
    if let Some(w) = &c.witness {
        let ws: Vec<String> = w.iter().map(|v| text_vector(v)).collect();
        line.push_str(&format!(" witness {}", ws.join(" ")));
    }
    if let Some(m) = &c.modulus_bound {
        line.push_str(&format!(" modulus <= {m}"));
    }
    line
}

pub fn text_rule_report(r: &RuleReport) -> Vec<String> {
    let mut out = vec![format!("rule {} ({})", r.rule, r.kind.name())];
    for h in &r.hypotheses {
        out.push(format!("  hypothesis {}", text_criterion(h)));
    }
    for e in &r.estimates {
        let claim = e.claimed.map_or("observed".to_string(), |c| format!("claimed {}", c.name()));
        out.push(format!(
            "  estimate {}: {} ({claim}, {})",
            e.name,
            e.relation.name(),
            if e.consistent() { "consistent" } else { "INCONSISTENT" }
        ));
        if let Some(w) = &e.lhs_witness {
            out.push(format!("    lhs witness {}", text_vector(w)));
        }
        if let Some(w) = &e.rhs_witness {
            out.push(format!("    rhs witness {}", text_vector(w)));
        }
    }
    for c in &r.checks {
        out.push(format!("  check {}: {}", c.name, if c.holds { "holds" } else { "FAILS" }));
    }
    if let Some(m) = &r.modulus_bound {
        out.push(format!("  modulus bound {m}"));
    }
    out
}

pub fn text_point(v: &[Rational]) -> String {
    text_vector(v)
}
