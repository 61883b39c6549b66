//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use polyvar::calculus::{
    chain_rule, domain_cones, image_cones, marginal_function, product_rule, semismooth_star_check, Relation,
    RuleReport, SemismoothTarget,
};
use polyvar::cones::{
    cone_of, limiting_normal_set, regular_normal_set, tangent_directions, tangent_set, ConeKind,
};
use polyvar::criteria::{check_fosc_clm, check_lrc, check_mc, Criterion};
use polyvar::generate::{GenConfig, Generator, MapInstance, SetInstance};
use polyvar::maps::{ExtReal, PLFunction, PolyMap};
use polyvar::oracle::{self, calmness_search, compare_with_exact, sample_regular_normals, Decision};
use polyvar::{ConvexPolyhedron, PolyhedralSet, RVector, Rational};

type Outcome = std::result::Result<String, String>;

const SET_SEED: u64 = 2024;
const MAP_SEED: u64 = 4048;

fn cone(dim: usize, ineqs: &[&[i64]], eqs: &[&[i64]]) -> ConvexPolyhedron {
    ConvexPolyhedron::cone(
        dim,
        ineqs.iter().map(|v| RVector::from_ints(v)).collect(),
        eqs.iter().map(|v| RVector::from_ints(v)).collect(),
    )
}

/// `M₁(y) = [−|y|, |y|]`, graph in `(y, x)`.
fn m1() -> PolyMap {
    PolyMap::from_graph(
        PolyhedralSet::from_pieces(2, vec![cone(2, &[&[-1, 1], &[-1, -1]], &[]), cone(2, &[&[1, 1], &[1, -1]], &[])]),
        1,
    )
}

fn zeros(n: usize) -> RVector {
    RVector::zeros(n)
}

fn set_corpus(count: usize) -> Vec<SetInstance> {
    let mut g = Generator::new(SET_SEED, GenConfig::default());
    (0..count).map(|_| g.set()).collect()
}

fn map_corpus(count: usize) -> Vec<MapInstance> {
    let mut g = Generator::new(MAP_SEED, GenConfig::default());
    (0..count).map(|_| g.map()).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    ensure(took <= budget, || format!("took {took:?}, budget {budget:?}"))?;
    Ok(format!("{out} in {:.2}s", took.as_secs_f64()))
}

fn criterion_1() -> Outcome {
    timed(Duration::from_secs(1), || {
        let m = m1();
        let z = zeros(1);
        let d = m.graphical_derivative(&z, &z).map_err(|e| e.to_string())?;
        let slice = d.image_at(&z);
        ensure(slice.set_equal(&PolyhedralSet::origin(1)), || format!("DM1(0,0)(0) = {slice:?}"))?;
        let dom = m.regular_coderivative(&z, &z).map_err(|e| e.to_string())?.domain();
        ensure(dom.set_equal(&PolyhedralSet::origin(1)), || format!("dom regular coderivative = {dom:?}"))?;
        Ok("DM1(0,0)(0) = {0}, dom regular D*M1(0,0) = {0}".into())
    })
}

fn criterion_2() -> Outcome {
    timed(Duration::from_secs(30), || {
        let band = oracle::examples::quadratic_band();
        let candidates: Vec<Vec<f64>> = (0..720)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 360.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let rays = sample_regular_normals(&band, &[0.0, 0.0], &candidates, &oracle::NORMAL_SCHEDULE)
            .map_err(|e| e.to_string())?;
        let pos = rays.iter().any(|r| r[1] > oracle::ANGLE_TOL);
        let neg = rays.iter().any(|r| r[1] < -oracle::ANGLE_TOL);
        ensure(pos && neg, || format!("sampled regular normals {rays:?}"))?;
        Ok(format!("{} regular normal rays of gph M2 at (0,0), x* of both signs", rays.len()))
    })
}

fn criterion_3() -> Outcome {
    timed(Duration::from_secs(30), || {
        let v = calmness_search(&oracle::examples::root_halfline(), 1, &[0.0], &[0.0], 30).map_err(|e| e.to_string())?;
        ensure(v.decision == Decision::NonMember && v.max_ratio() > oracle::NON_CALM_RATIO, || {
            format!("verdict {:?}, max ratio {:.3e}", v.decision, v.max_ratio())
        })?;
        Ok(format!("non-calm evidence, max ratio {:.3e}", v.max_ratio()))
    })
}

/// Union over a refined set of tangent-cell representatives of the regular
/// normal cones of the tangent cone.
fn union_decomposition(t: &PolyhedralSet) -> PolyhedralSet {
    let mut reps = t.direction_representatives(&[]);
    reps.push(zeros(t.dim()));
    let parts: Vec<PolyhedralSet> = reps.iter().map(|w| regular_normal_set(t, w)).collect();
    PolyhedralSet::union_all(t.dim(), &parts)
}

fn criterion_4() -> Outcome {
    timed(Duration::from_secs(300), || {
        let corpus = set_corpus(200);
        for (i, s) in corpus.iter().enumerate() {
            let t = tangent_set(&s.set, &s.point);
            let polar = t.polar_cone().map_err(|e| format!("instance {i}: {e}"))?;
            let reg = regular_normal_set(&s.set, &s.point);
            ensure(reg.set_equal(&polar), || format!("instance {i}: regular normal cone differs from the polar of T"))?;
            let lim = limiting_normal_set(&s.set, &s.point);
            ensure(lim.set_equal(&union_decomposition(&t)), || {
                format!("instance {i}: limiting normal cone differs from the union decomposition")
            })?;
        }
        Ok(format!("{} sets", corpus.len()))
    })
}

fn check_report(label: &str, rep: &RuleReport) -> std::result::Result<(), String> {
    ensure(rep.consistent(), || {
        let bad: Vec<String> = rep
            .estimates
            .iter()
            .filter(|e| !e.consistent())
            .map(|e| format!("{} {:?} vs claim {:?}", e.name, e.relation, e.claimed))
            .chain(rep.checks.iter().filter(|c| !c.holds).map(|c| c.name.clone()))
            .collect();
        format!("{label}: {}", bad.join("; "))
    })
}

fn directional_probe(set: &PolyhedralSet, p: &[Rational]) -> Option<RVector> {
    tangent_directions(set, p).into_iter().next()
}

fn criterion_5() -> Outcome {
    timed(Duration::from_secs(300), || {
        let corpus = map_corpus(100);
        for (i, inst) in corpus.iter().enumerate() {
            let dom_dir = directional_probe(&inst.map.domain(), &inst.y);
            for kind in ConeKind::ALL {
                let dir = (kind == ConeKind::DirectionalLimitingNormal).then_some(()).and(dom_dir.as_ref().map(|v| &v.0[..]));
                let rep = domain_cones(&inst.map, &inst.y, kind, dir).map_err(|e| format!("map {i} {kind}: {e}"))?;
                check_report(&format!("map {i} domain {kind}"), &rep)?;
                let fuzzy = rep.hypothesis(Criterion::FuzzyInnerCalmStar);
                ensure(fuzzy.map_or(false, |h| h.verdict), || format!("map {i}: fuzzy inner calmness* reported false"))?;
                if kind == ConeKind::Tangent {
                    ensure(rep.relation() == Some(Relation::Equal), || format!("map {i}: domain tangent not equal"))?;
                }
                let rep = image_cones(&inst.map, &inst.y, &inst.x, kind, None).map_err(|e| format!("map {i} {kind}: {e}"))?;
                check_report(&format!("map {i} image {kind}"), &rep)?;
                if kind == ConeKind::Tangent {
                    ensure(rep.relation() == Some(Relation::Equal), || format!("map {i}: image tangent not equal"))?;
                }
            }
        }
        Ok(format!("{} maps, domain and image statements for all four kinds", corpus.len()))
    })
}

fn criterion_6() -> Outcome {
    timed(Duration::from_secs(300), || {
        let corpus = map_corpus(100);
        let (mut mc, mut lrc) = (0, 0);
        for (i, inst) in corpus.iter().enumerate() {
            let err = |e: polyvar::PolyError| format!("map {i}: {e}");
            let fosc = check_fosc_clm(&inst.map, &inst.y, &inst.x, None).map_err(err)?.verdict;
            let mcv = check_mc(&inst.map, &inst.y, &inst.x).map_err(err)?.verdict;
            let lrcv = check_lrc(&inst.map, &inst.y, &inst.x).map_err(err)?.verdict;
            ensure(!mcv || fosc, || format!("map {i}: MC holds but FOSCclm fails"))?;
            ensure(!lrcv || fosc, || format!("map {i}: LRC holds but FOSCclm fails"))?;
            mc += mcv as usize;
            lrc += lrcv as usize;
        }
        Ok(format!("{} maps ({mc} with MC, {lrc} with LRC), no violations", corpus.len()))
    })
}

fn criterion_7() -> Outcome {
    timed(Duration::from_secs(300), || {
        let corpus = map_corpus(60);
        let mut g = Generator::new(MAP_SEED + 1, GenConfig::default());
        for (i, inst) in corpus.iter().enumerate() {
            let (s1, x, z) = (&inst.map, &inst.y, &inst.x);
            let id = PolyMap::identity(s1.n());
            for kind in ConeKind::ALL {
                let rep = chain_rule(s1, &id, x, z, kind, None).map_err(|e| format!("chain {i} {kind}: {e}"))?;
                let own = match kind {
                    ConeKind::Tangent => s1.graphical_derivative(x, z),
                    _ => s1.coderivative(x, z, kind, None),
                }
                .map_err(|e| format!("chain {i} {kind}: {e}"))?;
                ensure(&rep.estimates[0].lhs == own.graph(), || format!("chain {i} {kind}: lhs differs from the factor"))?;
                check_report(&format!("chain {i} {kind}"), &rep)?;
            }
            let affine = g.affine_map(s1.m(), 1);
            let za = affine.image_at(x).pieces()[0].relative_interior_point();
            let rep = product_rule(s1, &affine, x, z, &za, ConeKind::LimitingNormal, None)
                .map_err(|e| format!("product {i}: {e}"))?;
            ensure(rep.hypothesis(Criterion::ProductCq).map_or(false, |h| h.verdict), || {
                format!("product {i}: CQ fails with an affine factor")
            })?;
            ensure(rep.relation().map_or(false, |r| r.implies(Relation::LhsSubsetRhs)), || {
                format!("product {i}: limiting coderivative inclusion fails")
            })?;
            check_report(&format!("product {i}"), &rep)?;
        }
        Ok(format!("{} chain instances (four objects each), {} products with an affine factor", corpus.len(), corpus.len()))
    })
}

fn abs_difference() -> PLFunction {
    PLFunction::max_affine(
        2,
        &[(RVector::from_ints(&[1, -1]), Rational::zero()), (RVector::from_ints(&[-1, 1]), Rational::zero())],
        None,
    )
}

fn criterion_8() -> Outcome {
    timed(Duration::from_secs(300), || {
        let mut g = Generator::new(MAP_SEED + 2, GenConfig::default());
        let mut count = 0;
        for i in 0..30 {
            let (n, m) = if i % 3 == 2 { (2, 1) } else { (1, 1) };
            let inst = g.marginal(n, m);
            for kind in [ConeKind::Tangent, ConeKind::RegularNormal, ConeKind::LimitingNormal] {
                let rep = marginal_function(&inst.f, &inst.y, kind, None).map_err(|e| format!("marginal {i} {kind}: {e}"))?;
                check_report(&format!("marginal {i} {kind}"), &rep)?;
                let rel = rep.relation().ok_or_else(|| format!("marginal {i}: no estimate"))?;
                match kind {
                    ConeKind::LimitingNormal => ensure(rel.implies(Relation::LhsSubsetRhs), || {
                        format!("marginal {i}: limiting estimate {rel:?}")
                    })?,
                    _ => ensure(rel == Relation::Equal, || format!("marginal {i} {kind}: {rel:?}"))?,
                }
            }
            count += 1;
        }
        let f = abs_difference();
        let y = [Rational::zero()];
        let rep = marginal_function(&f, &y, ConeKind::Tangent, None).map_err(|e| e.to_string())?;
        check_report("|x - y|", &rep)?;
        let est = rep.estimate("d").ok_or("missing d estimate")?;
        let lhs = PLFunction::new(est.lhs.clone(), 1).map_err(|e| e.to_string())?;
        let rhs = PLFunction::new(est.rhs.clone(), 1).map_err(|e| e.to_string())?;
        for v in [-2, -1, 1, 3] {
            let v = [Rational::from_int(v)];
            ensure(lhs.value(&v) == ExtReal::Finite(Rational::zero()), || format!("d theta(0)({}) = {:?}", v[0], lhs.value(&v)))?;
            ensure(rhs.value(&v) == ExtReal::Finite(Rational::zero()), || format!("rhs infimum at {} = {:?}", v[0], rhs.value(&v)))?;
        }
        Ok(format!("{count} generated instances and f(x, y) = |x - y|"))
    })
}

fn criterion_9() -> Outcome {
    timed(Duration::from_secs(300), || {
        let sets = set_corpus(50);
        let maps = map_corpus(50);
        for (i, s) in sets.iter().enumerate() {
            let rep = semismooth_star_check(SemismoothTarget::Set(&s.set), &s.point, None).map_err(|e| format!("set {i}: {e}"))?;
            ensure(rep.hypotheses[0].verdict, || format!("set {i}: not semismooth*, witness {:?}", rep.hypotheses[0].witness))?;
            check_report(&format!("set {i}"), &rep)?;
        }
        for (i, inst) in maps.iter().enumerate() {
            let point = polyvar::maps::join(&inst.y, &inst.x);
            let rep = semismooth_star_check(SemismoothTarget::Map(&inst.map), &point, None).map_err(|e| format!("map {i}: {e}"))?;
            ensure(rep.hypotheses[0].verdict, || format!("map {i}: not semismooth*"))?;
            ensure(rep.checks.iter().all(|c| c.holds), || format!("map {i}: transfer check failed"))?;
        }
        Ok(format!("{} sets and {} maps, transfer checks hold", sets.len(), maps.len()))
    })
}

fn regression_corpus() -> Vec<SetInstance> {
    let o = zeros(2);
    let mut out = vec![
        SetInstance { set: m1().graph().clone(), point: o.clone() },
        SetInstance {
            set: PolyhedralSet::from_pieces(2, vec![cone(2, &[], &[&[0, 1]]), cone(2, &[], &[&[1, 0]])]),
            point: o.clone(),
        },
        SetInstance {
            set: PolyhedralSet::from_pieces(2, vec![cone(2, &[&[-1, 0], &[0, -1]], &[])]),
            point: o,
        },
    ];
    let mut g = Generator::new(SET_SEED + 7, GenConfig { max_dim: 3, ..GenConfig::default() });
    out.extend((0..40).map(|_| g.set()));
    out
}

fn criterion_10() -> Outcome {
    timed(Duration::from_secs(600), || {
        let corpus = regression_corpus();
        let mut compared = 0;
        for (i, s) in corpus.iter().enumerate() {
            let dir = directional_probe(&s.set, &s.point);
            for kind in ConeKind::ALL {
                let d = (kind == ConeKind::DirectionalLimitingNormal).then_some(()).and(dir.as_ref().map(|v| &v.0[..]));
                let exact = cone_of(&s.set, &s.point, kind, d);
                let rep = compare_with_exact(&exact, &s.set, 1e-6).map_err(|e| format!("instance {i} {kind}: {e}"))?;
                ensure(rep.passed(), || format!("instance {i} {kind}: {:?}", rep.mismatches))?;
                compared += 1;
            }
        }
        Ok(format!("{compared} cone comparisons on {} instances", corpus.len()))
    })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("M1 derivative slice and regular coderivative domain", criterion_1),
        ("M2 sampled regular normals of both signs", criterion_2),
        ("square-root map is not calm at the origin", criterion_3),
        ("polarity and union decomposition on generated sets", criterion_4),
        ("domain and image cone statements on generated maps", criterion_5),
        ("MC and LRC imply FOSCclm", criterion_6),
        ("chain rule with identity and product with affine factor", criterion_7),
        ("marginal function estimates", criterion_8),
        ("semismoothness* and transfer", criterion_9),
        ("oracle agreement for all cone kinds", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({why})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
