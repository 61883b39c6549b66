//! Query evaluation.

use polyvar::calculus::{
    chain_rule, image_rule, intersection_rule, marginal_function, minimax_certificate, preimage_rule, product_rule,
    semismooth_star_check, sum_rule, Relation, RuleReport, SemismoothTarget,
};
use polyvar::cones::{cone_of, tangent_directions, ConeKind};
use polyvar::criteria::{check_fosc_clm, check_fuzzy_inner_calmness_star, check_lrc, check_mc, figure1_report, CriterionReport};
use polyvar::maps::{join, PLFunction, PolyMap};
use polyvar::oracle::compare_with_exact;
use polyvar::{PolyError, PolyhedralSet, RVector, Rational};
use serde_json::{json, Map, Value};

use crate::encode;
use crate::instance::{InputError, InputResult, Instance, Object, Parser, Query};

/// Oracle tolerance used by `verify`.
pub const VERIFY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Certified,
    /// The result is weaker than, or differs from, the expected block.
    Unexpected,
    /// A report contradicts its own theory claims or the oracle.
    Inconsistent,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Certified => "certified",
            Status::Unexpected => "unexpected",
            Status::Inconsistent => "inconsistent",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Status::Certified => 0,
            Status::Unexpected => 2,
            Status::Inconsistent => 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub name: String,
    pub op: String,
    pub status: Status,
    pub result: Value,
    pub notes: Vec<String>,
    pub text: Vec<String>,
}

/// Subcommand-level settings: `kind` selects queries that name a kind and
/// fills it in for queries that do not; `criteria` replaces the criterion list.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub kind: Option<ConeKind>,
    pub criteria: Vec<String>,
}

pub struct Evaluator<'a> {
    pub instance: &'a Instance,
    pub parser: Parser<'a>,
    pub query: &'a Query,
    pub overrides: &'a Overrides,
}

fn kernel(ctx: &str) -> impl Fn(PolyError) -> InputError + '_ {
    move |e| InputError::new(ctx, e)
}

impl Evaluator<'_> {
    fn ctx(&self) -> String {
        format!("query `{}`", self.query.name)
    }

    fn err(&self, msg: impl std::fmt::Display) -> InputError {
        InputError::new(self.ctx(), msg)
    }

    fn arg(&self, key: &str) -> InputResult<&Value> {
        self.query
            .args
            .get(key)
            .ok_or_else(|| self.err(format!("missing argument `{key}`")))
    }

    fn opt(&self, key: &str) -> Option<&Value> {
        self.query.args.get(key).filter(|v| !v.is_null())
    }

    fn name_arg(&self, key: &str) -> InputResult<&str> {
        self.arg(key)?
            .as_str()
            .ok_or_else(|| self.err(format!("argument `{key}` must name an object")))
    }

    fn object(&self, name: &str) -> InputResult<&Object> {
        self.instance
            .objects
            .get(name)
            .ok_or_else(|| self.err(format!("unknown object `{name}`")))
    }

    fn set(&self, key: &str) -> InputResult<&PolyhedralSet> {
        let name = self.name_arg(key)?;
        match self.object(name)? {
            Object::Set(s) => Ok(s),
            o => Err(self.err(format!("object `{name}` is a {}, expected a set", o.kind()))),
        }
    }

    fn map(&self, key: &str) -> InputResult<&PolyMap> {
        let name = self.name_arg(key)?;
        match self.object(name)? {
            Object::Map(m) => Ok(m),
            o => Err(self.err(format!("object `{name}` is a {}, expected a map", o.kind()))),
        }
    }

    fn function(&self, key: &str) -> InputResult<&PLFunction> {
        let name = self.name_arg(key)?;
        match self.object(name)? {
            Object::Function(f) => Ok(f),
            o => Err(self.err(format!("object `{name}` is a {}, expected a function", o.kind()))),
        }
    }

    fn named_list(&self, key: &str) -> InputResult<Vec<&Object>> {
        let arr = self
            .arg(key)?
            .as_array()
            .ok_or_else(|| self.err(format!("argument `{key}` must be a list of names")))?;
        arr.iter()
            .map(|v| {
                let name = v.as_str().ok_or_else(|| self.err(format!("`{key}` entries must be names")))?;
                self.object(name)
            })
            .collect()
    }

    fn sets(&self, key: &str) -> InputResult<Vec<PolyhedralSet>> {
        self.named_list(key)?
            .into_iter()
            .map(|o| match o {
                Object::Set(s) => Ok(s.clone()),
                o => Err(self.err(format!("`{key}` entries must be sets, found a {}", o.kind()))),
            })
            .collect()
    }

    fn maps(&self, key: &str, count: usize) -> InputResult<Vec<PolyMap>> {
        let out: Vec<PolyMap> = self
            .named_list(key)?
            .into_iter()
            .map(|o| match o {
                Object::Map(m) => Ok(m.clone()),
                o => Err(self.err(format!("`{key}` entries must be maps, found a {}", o.kind()))),
            })
            .collect::<InputResult<_>>()?;
        if out.len() != count {
            return Err(self.err(format!("`{key}` must name exactly {count} maps")));
        }
        Ok(out)
    }

    fn vec_arg(&self, key: &str, dim: usize) -> InputResult<RVector> {
        self.parser.vector_of_dim(self.arg(key)?, dim, key)
    }

    fn opt_vec(&self, key: &str, dim: usize) -> InputResult<Option<RVector>> {
        self.opt(key).map(|v| self.parser.vector_of_dim(v, dim, key)).transpose()
    }

    /// The query's own kind, else the subcommand's `--kind`, else `default`.
    fn kind(&self, default: ConeKind) -> InputResult<ConeKind> {
        match self.opt("kind") {
            None => Ok(self.overrides.kind.unwrap_or(default)),
            Some(v) => {
                let s = v.as_str().ok_or_else(|| self.err("`kind` must be a string"))?;
                ConeKind::parse(s).ok_or_else(|| self.err(format!("unknown cone kind `{s}`")))
            }
        }
    }

    fn expected_set(&self, key: &str) -> InputResult<Option<PolyhedralSet>> {
        match self.query.expected.as_ref().and_then(|e| e.get(key)) {
            Some(v) => self.parser.set(v).map(Some),
            None => Ok(None),
        }
    }

    fn expected_bool(&self, key: &str) -> InputResult<Option<bool>> {
        match self.query.expected.as_ref().and_then(|e| e.get(key)) {
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(_) => Err(self.err(format!("expected `{key}` must be a boolean"))),
            None => Ok(None),
        }
    }

    fn outcome(&self, result: Value, text: Vec<String>) -> Outcome {
        Outcome {
            name: self.query.name.clone(),
            op: self.query.op.clone(),
            status: Status::Certified,
            result,
            notes: Vec::new(),
            text,
        }
    }

    pub fn run(&self) -> InputResult<Outcome> {
        match self.query.op.as_str() {
            "cone" => self.cone(),
            "derivative" => self.derivative(),
            "check" => self.check(),
            "rule" => self.rule(),
            "semismooth" => self.semismooth(),
            "minimax" => self.minimax(),
            "verify" => self.verify(),
            "figure1" => self.figure1(),
            other => Err(self.err(format!("unknown op `{other}`"))),
        }
    }

    fn compare_set(&self, out: &mut Outcome, key: &str, actual: &PolyhedralSet) -> InputResult<()> {
        if let Some(exp) = self.expected_set(key)? {
            if exp.dim() != actual.dim() || !exp.set_equal(actual) {
                out.status = out.status.max(Status::Unexpected);
                out.notes.push(format!("{key} differs from the expected set"));
            }
        }
        Ok(())
    }

    fn compare_bool(&self, out: &mut Outcome, key: &str, actual: bool) -> InputResult<()> {
        if let Some(exp) = self.expected_bool(key)? {
            if exp != actual {
                out.status = out.status.max(Status::Unexpected);
                out.notes.push(format!("{key} is {actual}, expected {exp}"));
            }
        }
        Ok(())
    }

    fn cone(&self) -> InputResult<Outcome> {
        let s = self.set("set")?;
        let p = self.vec_arg("point", s.dim())?;
        let kind = self.kind(ConeKind::Tangent)?;
        let dir = self.opt_vec("dir", s.dim())?;
        if !s.contains(&p) {
            return Err(self.err(PolyError::NotInSet {
                distance: s.distance_inf(&p).map_err(kernel(&self.ctx()))?,
            }));
        }
        let res = cone_of(s, &p, kind, dir.as_ref().map(|d| &d.0[..]));
        let mut text = vec![format!("{} cone at {}", kind.name(), encode::text_point(&p))];
        text.extend(encode::text_set(&res.cone).into_iter().map(|l| format!("  {l}")));
        let mut out = self.outcome(json!({ "kind": kind.name(), "cone": encode::set(&res.cone) }), text);
        self.compare_set(&mut out, "cone", &res.cone)?;
        Ok(out)
    }

    fn derivative(&self) -> InputResult<Outcome> {
        let ctx = self.ctx();
        let object = self
            .opt("object")
            .and_then(Value::as_str)
            .unwrap_or("graphical")
            .to_string();
        if self.opt("function").is_some() {
            let f = self.function("function")?;
            let x = self.vec_arg("x", f.n())?;
            let set = match object.as_str() {
                "subderivative" => f.subderivative(&x).map(|d| d.epigraph().clone()),
                "regular_subdifferential" => f.regular_subdifferential(&x),
                "limiting_subdifferential" => f.limiting_subdifferential(&x),
                "singular_subdifferential" => f.singular_subdifferential(&x),
                "directional_subdifferential" => {
                    let u = self.vec_arg("u", f.n())?;
                    let mu = self.parser.rational(self.arg("mu")?)?;
                    f.directional_subdifferential(&x, &u, &mu)
                }
                other => return Err(self.err(format!("unknown function derivative `{other}`"))),
            }
            .map_err(kernel(&ctx))?;
            let mut text = vec![format!("{object} at {}", encode::text_point(&x))];
            text.extend(encode::text_set(&set).into_iter().map(|l| format!("  {l}")));
            let mut result = json!({ "object": object, "set": encode::set(&set), "value": encode::ext_real(&f.value(&x)) });
            if object == "subderivative" {
                let d = f.subderivative(&x).map_err(kernel(&ctx))?;
                result["function"] = encode::function(&d);
            }
            let mut out = self.outcome(result, text);
            self.compare_set(&mut out, "set", &set)?;
            return Ok(out);
        }
        let m = self.map("map")?;
        let y = self.vec_arg("y", m.m())?;
        let x = self.vec_arg("x", m.n())?;
        let d = match object.as_str() {
            "graphical" => m.graphical_derivative(&y, &x),
            "regular" => m.regular_coderivative(&y, &x),
            "limiting" => m.limiting_coderivative(&y, &x),
            "directional" => {
                let v = self.vec_arg("v", m.m())?;
                let u = self.vec_arg("u", m.n())?;
                m.directional_limiting_coderivative(&y, &x, &v, &u)
            }
            other => return Err(self.err(format!("unknown map derivative `{other}`"))),
        }
        .map_err(kernel(&ctx))?;
        let at_zero = d.image_at(&RVector::zeros(d.m()));
        let domain = d.domain();
        let mut text = vec![format!("{object} derivative at {} {}", encode::text_point(&y), encode::text_point(&x))];
        text.extend(encode::text_set(d.graph()).into_iter().map(|l| format!("  graph {l}")));
        text.extend(encode::text_set(&at_zero).into_iter().map(|l| format!("  value at 0: {l}")));
        text.extend(encode::text_set(&domain).into_iter().map(|l| format!("  domain: {l}")));
        let mut out = self.outcome(
            json!({
                "object": object,
                "map": encode::map(&d),
                "image_at_zero": encode::set(&at_zero),
                "domain": encode::set(&domain),
            }),
            text,
        );
        self.compare_set(&mut out, "graph", d.graph())?;
        self.compare_set(&mut out, "image_at_zero", &at_zero)?;
        self.compare_set(&mut out, "domain", &domain)?;
        Ok(out)
    }

    fn check(&self) -> InputResult<Outcome> {
        let ctx = self.ctx();
        let m = self.map("map")?;
        let y = self.vec_arg("y", m.m())?;
        let x = self.vec_arg("x", m.n())?;
        let criteria: Vec<String> = if !self.overrides.criteria.is_empty() {
            self.overrides.criteria.clone()
        } else {
            match self.opt("criterion") {
                Some(Value::String(s)) => vec![s.clone()],
                Some(_) => return Err(self.err("`criterion` must be a string")),
                None => ["lrc", "mc", "fosc_clm", "fuzzy_inner_calm_star"].map(String::from).to_vec(),
            }
        };
        let mut reports = Vec::new();
        for c in &criteria {
            let rep: CriterionReport = match c.as_str() {
                "lrc" => check_lrc(m, &y, &x),
                "mc" => check_mc(m, &y, &x),
                "fosc_clm" => {
                    let dir = self.opt_vec("dir", m.n())?;
                    check_fosc_clm(m, &y, &x, dir.as_ref().map(|d| &d.0[..]))
                }
                "fuzzy_inner_calm_star" => {
                    let dir = self.opt_vec("dir", m.m())?;
                    check_fuzzy_inner_calmness_star(m, &y, dir.as_ref().map(|d| &d.0[..]))
                }
                other => return Err(self.err(format!("unknown criterion `{other}`"))),
            }
            .map_err(kernel(&ctx))?;
            reports.push((c.clone(), rep));
        }
        let text = reports.iter().map(|(_, r)| encode::text_criterion(r)).collect();
        let result = Value::Object(reports.iter().map(|(c, r)| (c.clone(), encode::criterion(r))).collect::<Map<_, _>>());
        let mut out = self.outcome(result, text);
        if reports.len() == 1 {
            self.compare_bool(&mut out, "verdict", reports[0].1.verdict)?;
        }
        for (c, r) in &reports {
            self.compare_bool(&mut out, c, r.verdict)?;
        }
        Ok(out)
    }

    fn rule_report(&self, rule: &str) -> InputResult<RuleReport> {
        let ctx = self.ctx();
        let kind = self.kind(ConeKind::Tangent)?;
        let k = kernel(&ctx);
        match rule {
            "sum" => {
                let sets = self.sets("sets")?;
                let dim = sets.first().map_or(0, PolyhedralSet::dim);
                let y = self.vec_arg("y", dim)?;
                let parts = self
                    .arg("decomposition")?
                    .as_array()
                    .ok_or_else(|| self.err("`decomposition` must be a list of points"))?
                    .iter()
                    .map(|v| self.parser.vector_of_dim(v, dim, "decomposition"))
                    .collect::<InputResult<Vec<_>>>()?;
                let dir = self.opt_vec("dir", dim)?;
                sum_rule(&sets, &y, &parts, kind, dir.as_ref().map(|d| &d.0[..])).map_err(k)
            }
            "intersection" => {
                let sets = self.sets("sets")?;
                let dim = sets.first().map_or(0, PolyhedralSet::dim);
                let x = self.vec_arg("x", dim)?;
                let dir = self.opt_vec("dir", dim)?;
                intersection_rule(&sets, &x, kind, dir.as_ref().map(|d| &d.0[..])).map_err(k)
            }
            "image" | "preimage" => {
                let a = self.parser.matrix(self.arg("matrix")?)?;
                let c = self.set("set")?;
                let shift = match self.opt("shift") {
                    Some(v) => self.parser.vector(v)?,
                    None => RVector::zeros(if rule == "image" { a.rows } else { c.dim() }),
                };
                if rule == "image" {
                    let y = self.vec_arg("y", a.rows)?;
                    let dir = self.opt_vec("dir", a.rows)?;
                    image_rule(&a, &shift, c, &y, kind, dir.as_ref().map(|d| &d.0[..])).map_err(k)
                } else {
                    let x = self.vec_arg("x", a.cols)?;
                    let dir = self.opt_vec("dir", a.cols)?;
                    preimage_rule(&a, &shift, c, &x, kind, dir.as_ref().map(|d| &d.0[..])).map_err(k)
                }
            }
            "chain" => {
                let maps = self.maps("maps", 2)?;
                let x = self.vec_arg("x", maps[0].m())?;
                let z = self.vec_arg("z", maps[1].n())?;
                let u = self.opt_vec("u", maps[0].m())?;
                let w = self.opt_vec("w", maps[1].n())?;
                let dir = match (&u, &w) {
                    (Some(u), Some(w)) => Some((&u.0[..], &w.0[..])),
                    (None, None) => None,
                    _ => return Err(self.err("give both `u` and `w` or neither")),
                };
                chain_rule(&maps[0], &maps[1], &x, &z, kind, dir).map_err(k)
            }
            "product" => {
                let maps = self.maps("maps", 2)?;
                let x = self.vec_arg("x", maps[0].m())?;
                let z1 = self.vec_arg("z1", maps[0].n())?;
                let z2 = self.vec_arg("z2", maps[1].n())?;
                let dir = self.opt_vec("dir", maps[0].m() + maps[0].n() + maps[1].n())?;
                product_rule(&maps[0], &maps[1], &x, &z1, &z2, kind, dir.as_ref().map(|d| &d.0[..])).map_err(k)
            }
            "marginal" => {
                let f = self.function("function")?;
                let y = self.parser.vector(self.arg("y")?)?;
                let v = self.opt_vec("v", y.dim())?;
                let mu = self.opt("mu").map(|m| self.parser.rational(m)).transpose()?;
                let zero = Rational::zero();
                let dir = v.as_ref().map(|v| (&v.0[..], mu.as_ref().unwrap_or(&zero)));
                marginal_function(f, &y, kind, dir).map_err(k)
            }
            other => Err(self.err(format!("unknown rule `{other}`"))),
        }
    }

    fn rule(&self) -> InputResult<Outcome> {
        let rule = self
            .arg("rule")?
            .as_str()
            .ok_or_else(|| self.err("`rule` must be a string"))?
            .to_string();
        let rep = self.rule_report(&rule)?;
        let mut out = self.report_outcome(&rep);
        if let Some(exp) = self.query.expected.as_ref().and_then(|e| e.get("relation")) {
            let name = exp.as_str().ok_or_else(|| self.err("expected `relation` must be a string"))?;
            let want = [Relation::Equal, Relation::LhsSubsetRhs, Relation::RhsSubsetLhs, Relation::Incomparable]
                .into_iter()
                .find(|r| r.name() == name)
                .ok_or_else(|| self.err(format!("unknown relation `{name}`")))?;
            match rep.relation() {
                Some(r) if r.implies(want) => {}
                r => {
                    out.status = out.status.max(Status::Unexpected);
                    out.notes.push(format!(
                        "relation {} is weaker than expected {name}",
                        r.map_or("none", Relation::name)
                    ));
                }
            }
        }
        self.compare_bool(&mut out, "hypotheses_hold", rep.hypotheses_hold())?;
        Ok(out)
    }

    fn report_outcome(&self, rep: &RuleReport) -> Outcome {
        let mut out = self.outcome(encode::rule_report(rep), encode::text_rule_report(rep));
        if !rep.consistent() {
            out.status = Status::Inconsistent;
            out.notes.push("report contradicts its certified claims".into());
        }
        out
    }

    fn semismooth(&self) -> InputResult<Outcome> {
        let ctx = self.ctx();
        let (target, dim) = if self.opt("map").is_some() {
            let m = self.map("map")?;
            (SemismoothTarget::Map(m), m.m() + m.n())
        } else {
            let s = self.set("set")?;
            (SemismoothTarget::Set(s), s.dim())
        };
        let p = self.vec_arg("point", dim)?;
        let dir = self.opt_vec("dir", dim)?;
        let rep = semismooth_star_check(target, &p, dir.as_ref().map(|d| &d.0[..])).map_err(kernel(&ctx))?;
        let mut out = self.report_outcome(&rep);
        if rep.checks.iter().any(|c| !c.holds) {
            out.status = Status::Inconsistent;
        }
        self.compare_bool(&mut out, "verdict", rep.hypotheses[0].verdict)?;
        Ok(out)
    }

    fn minimax(&self) -> InputResult<Outcome> {
        let ctx = self.ctx();
        let phi = self.function("phi")?;
        let g = self.map("map")?;
        let omega = self.set("omega")?;
        let x = self.vec_arg("x", g.n())?;
        let y = self.vec_arg("y", g.m())?;
        let rep = minimax_certificate(phi, g, omega, &x, &y).map_err(kernel(&ctx))?;
        let mut out = self.report_outcome(&rep);
        self.compare_bool(&mut out, "verdict", rep.hypotheses[0].verdict)?;
        Ok(out)
    }

    fn verify(&self) -> InputResult<Outcome> {
        let ctx = self.ctx();
        let set = if self.opt("map").is_some() {
            self.map("map")?.graph().clone()
        } else {
            self.set("set")?.clone()
        };
        let p = self.vec_arg("point", set.dim())?;
        if !set.contains(&p) {
            return Err(self.err(PolyError::NotInSet {
                distance: set.distance_inf(&p).map_err(kernel(&ctx))?,
            }));
        }
        let dir = match self.opt_vec("dir", set.dim())? {
            Some(d) => Some(d),
            None => tangent_directions(&set, &p).into_iter().next(),
        };
        let kinds = match self.overrides.kind {
            Some(k) => vec![k],
            None => ConeKind::ALL.to_vec(),
        };
        let mut result = Map::new();
        let mut text = vec![format!("oracle comparison at {}", encode::text_point(&p))];
        let mut all = true;
        for kind in kinds {
            let d = (kind == ConeKind::DirectionalLimitingNormal).then_some(()).and(dir.as_ref().map(|d| &d.0[..]));
            let exact = cone_of(&set, &p, kind, d);
            let rep = compare_with_exact(&exact, &set, VERIFY_TOL).map_err(kernel(&ctx))?;
            all &= rep.passed();
            text.push(format!(
                "  {}: {} ({} sampled, {} generators, {} mismatches)",
                kind.name(),
                if rep.passed() { "agrees" } else { "DISAGREES" },
                rep.sampled,
                rep.generators_checked,
                rep.mismatches.len()
            ));
            let mismatches: Vec<Value> = rep
                .mismatches
                .iter()
                .map(|m| json!({ "reason": format!("{:?}", m.reason), "direction": m.direction }))
                .collect();
            result.insert(
                kind.name().to_string(),
                json!({
                    "passed": rep.passed(),
                    "sampled": rep.sampled,
                    "generators_checked": rep.generators_checked,
                    "mismatches": mismatches,
                    "tol": VERIFY_TOL,
                }),
            );
        }
        let mut out = self.outcome(Value::Object(result), text);
        if !all {
            out.status = Status::Inconsistent;
            out.notes.push("exact kernel and oracle disagree".into());
        }
        Ok(out)
    }

    fn figure1(&self) -> InputResult<Outcome> {
        let ctx = self.ctx();
        let m = self.map("map")?;
        let y = self.vec_arg("y", m.m())?;
        let x = self.vec_arg("x", m.n())?;
        let r = figure1_report(m, &y, &x).map_err(kernel(&ctx))?;
        let result = json!({
            "lrc": encode::criterion(&r.lrc),
            "mc": encode::criterion(&r.mc),
            "fosc_clm": encode::criterion(&r.fosc_clm),
            "isolated_calm": r.isolated_calm,
            "aubin": r.aubin,
            "calm": r.calm,
            "inner_calm_star": r.inner_calm_star,
            "consistent": r.consistent,
            "point": encode::vector(&join(&y, &x)),
        });
        let mut out = self.outcome(result, r.lines());
        if !r.consistent {
            out.status = Status::Inconsistent;
        }
        self.compare_bool(&mut out, "lrc", r.lrc.verdict)?;
        self.compare_bool(&mut out, "mc", r.mc.verdict)?;
        self.compare_bool(&mut out, "fosc_clm", r.fosc_clm.verdict)?;
        Ok(out)
    }
}
