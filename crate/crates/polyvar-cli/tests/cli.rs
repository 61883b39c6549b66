use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polyvar"));
    c.env_remove("POLYVAR_LIMITS");
    c
}

fn instance(name: &str) -> String {
    format!("{}/instances/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("polyvar-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_instance(name: &str, v: &Value) -> String {
    let p = scratch(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad report ({e}): {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn m1_lrc_holds() {
    let out = run(&["check", "--lrc", &instance("m1.json")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = report(&out);
    for q in r["queries"].as_array().unwrap() {
        assert_eq!(q["result"]["lrc"]["verdict"], json!(true));
        assert_eq!(q["status"], "certified");
    }
    assert_eq!(r["summary"]["exit_code"], 0);
}

#[test]
fn m1_text_report() {
    let out = run(&["run", "--format", "text", &instance("m1.json")]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("LRC: holds"));
    assert!(text.contains("consistent: true"));
}

#[test]
fn orthant_tangent_cone_is_the_orthant() {
    let out = run(&["cone", "--kind", "tangent", &instance("orthant.json")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = report(&out);
    let first = &r["queries"][0];
    assert_eq!(first["name"], "orthant_tangent");
    assert_eq!(first["result"]["kind"], "tangent");
    let pieces = first["result"]["cone"]["pieces"].as_array().unwrap();
    assert_eq!(pieces.len(), 1);
    let mut rows: Vec<Value> = pieces[0]["ineq"].as_array().unwrap().clone();
    rows.sort_by_key(|r| r.to_string());
    assert_eq!(rows, vec![json!(["-1", "0", "0"]), json!(["0", "-1", "0"])]);
    assert_eq!(pieces[0]["eq"], json!([]));
}

#[test]
fn kind_flag_selects_and_fills_in() {
    let out = run(&["cone", "--kind", "regular_normal", &instance("orthant.json")]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let names: Vec<&str> = r["queries"].as_array().unwrap().iter().map(|q| q["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["orthant_regular_normal"]);

    let inst = json!({
        "objects": { "half": { "pieces": [{ "ineq": [[1, 0, 0]] }] } },
        "queries": [{ "name": "open", "op": "cone", "args": { "set": "half", "point": [0, 0] } }]
    });
    let file = write_instance("kindless.json", &inst);
    let out = run(&["cone", "--kind", "limiting_normal", &file]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out)["queries"][0]["result"]["kind"], "limiting_normal");
    let out = run(&["cone", &file]);
    assert_eq!(report(&out)["queries"][0]["result"]["kind"], "tangent");
}

#[test]
fn bundled_corpus_verifies() {
    let out = run(&["verify", &instance("bowtie_corpus.json")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = report(&out);
    let qs = r["queries"].as_array().unwrap();
    assert_eq!(qs.len(), 8);
    for q in qs {
        for kind in ["tangent", "regular_normal", "limiting_normal", "directional_limiting_normal"] {
            assert_eq!(q["result"][kind]["passed"], json!(true), "{} {kind}", q["name"]);
        }
    }
}

#[test]
fn bundled_rules_and_functions_certify() {
    for file in ["rules.json", "functions.json"] {
        let out = run(&["run", &instance(file)]);
        assert_eq!(code(&out), 0, "{file}: {}", String::from_utf8_lossy(&out.stdout));
        let r = report(&out);
        for q in r["queries"].as_array().unwrap() {
            if q["op"] == "rule" {
                assert_eq!(q["result"]["consistent"], json!(true));
            }
        }
    }
}

#[test]
fn rule_subcommand_filters_by_rule() {
    let out = run(&["rule", "product", &instance("rules.json")]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let names: Vec<&str> = r["queries"].as_array().unwrap().iter().map(|q| q["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["product_m1_double", "product_pinned_cq_fails"]);
    let pinned = &r["queries"][1]["result"];
    let cq = pinned["hypotheses"].as_array().unwrap().iter().find(|h| h["criterion"] == "ProductCQ").unwrap();
    assert_eq!(cq["verdict"], json!(false));
    assert!(cq["witness"].is_array());
}

#[test]
fn output_is_byte_identical_across_runs_and_out_file() {
    let a = run(&["run", &instance("rules.json")]);
    let b = run(&["run", &instance("rules.json")]);
    assert_eq!(a.stdout, b.stdout);
    let path = scratch("rules_report.json");
    let c = run(&["run", "--out", path.to_str().unwrap(), &instance("rules.json")]);
    assert_eq!(code(&c), 0);
    assert!(c.stdout.is_empty());
    assert_eq!(fs::read(&path).unwrap(), a.stdout);
}

#[test]
fn reported_objects_reparse() {
    let out = run(&["derivative", &instance("m1.json")]);
    let r = report(&out);
    let deriv = &r["queries"][0]["result"];
    let graph = deriv["map"].clone();
    let domain = deriv["domain"].clone();
    let inst = json!({
        "objects": { "D": graph, "dom": domain },
        "queries": [
            {
                "name": "again",
                "op": "cone",
                "args": { "set": "dom", "point": ["0"], "kind": "tangent" },
                "expected": { "cone": domain }
            },
            { "name": "lrc", "op": "check", "args": { "map": "D", "y": ["0"], "x": ["0"] } }
        ]
    });
    let file = write_instance("roundtrip.json", &inst);
    let again = run(&["run", &file]);
    assert_eq!(code(&again), 0, "{}", stderr(&again));
}

#[test]
fn weaker_relation_than_expected_exits_2() {
    let inst = json!({
        "objects": { "pinned": { "graph": { "dim": 2, "pieces": [{ "eq": [[1, 0, 0]] }] }, "m": 1, "n": 1 } },
        "queries": [{
            "name": "too_hopeful",
            "op": "rule",
            "args": { "rule": "product", "maps": ["pinned", "pinned"], "x": [0], "z1": [0], "z2": [0], "kind": "limiting_normal" },
            "expected": { "hypotheses_hold": true }
        }]
    });
    let out = run(&["run", &write_instance("weaker.json", &inst)]);
    assert_eq!(code(&out), 2);
    let r = report(&out);
    assert_eq!(r["queries"][0]["status"], "unexpected");
    assert!(!r["queries"][0]["notes"].as_array().unwrap().is_empty());
}

#[test]
fn wrong_expected_cone_exits_2() {
    let inst = json!({
        "objects": { "half": { "pieces": [{ "ineq": [[1, 0, 0]] }] } },
        "queries": [{
            "name": "claims_plane",
            "op": "cone",
            "args": { "set": "half", "point": [0, 0] },
            "expected": { "cone": { "dim": 2, "pieces": [{}] } }
        }]
    });
    let out = run(&["cone", &write_instance("wrong_cone.json", &inst)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn input_errors_exit_3_and_name_the_culprit() {
    let unknown = json!({
        "objects": {},
        "queries": [{ "name": "lost", "op": "cone", "args": { "set": "nowhere", "point": [0] } }]
    });
    let out = run(&["run", &write_instance("unknown.json", &unknown)]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("query `lost`") && stderr(&out).contains("nowhere"), "{}", stderr(&out));

    let bad_object = json!({ "objects": { "broken": { "pieces": [{ "ineq": [[1, "x"]] }] } }, "queries": [] });
    let out = run(&["run", &write_instance("broken.json", &bad_object)]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("object `broken`"), "{}", stderr(&out));

    let off_set = json!({
        "objects": { "half": { "pieces": [{ "ineq": [[1, 0, 0]] }] } },
        "queries": [{ "name": "outside", "op": "cone", "args": { "set": "half", "point": [1, 0] } }]
    });
    let out = run(&["run", &write_instance("outside.json", &off_set)]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("query `outside`"));

    let out = run(&["cone", "--kind", "sideways", &instance("orthant.json")]);
    assert_eq!(code(&out), 3);

    let out = run(&["run", "/definitely/not/here.json"]);
    assert_eq!(code(&out), 3);

    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 3);

    let out = run(&["minimax", &instance("orthant.json")]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("no `minimax` queries"));
}

#[test]
fn limits_are_enforced() {
    let out = run(&["--max-dim", "1", "cone", &instance("orthant.json")]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("limit"), "{}", stderr(&out));
    let out = bin()
        .env("POLYVAR_LIMITS", "pieces=1")
        .args(["verify", &instance("bowtie_corpus.json")])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn gen_is_deterministic_and_runs() {
    let a = run(&["gen", "--seed", "11", "--count", "2", "--max-dim", "3"]);
    let b = run(&["gen", "--seed", "11", "--count", "2", "--max-dim", "3"]);
    let c = run(&["gen", "--seed", "12", "--count", "2", "--max-dim", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let path = scratch("gen.json");
    fs::write(&path, &a.stdout).unwrap();
    let p = path.to_str().unwrap();
    for sub in ["cone", "check", "figure1", "verify"] {
        let out = run(&[sub, p]);
        assert_eq!(code(&out), 0, "{sub}: {}{}", String::from_utf8_lossy(&out.stdout), stderr(&out));
    }
}
