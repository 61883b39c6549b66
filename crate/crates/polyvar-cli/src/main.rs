//! `polyvar`: batch evaluation of instance files.
//!
//! Exit codes: 0 when every selected query is certified and matches its
//! `expected` block, 2 when a result is weaker than expected, 3 on input
//! errors, 4 when a report is internally inconsistent or the oracle disagrees.

mod encode;
mod gen;
mod instance;
mod query;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser as ClapParser, Subcommand, ValueEnum};
use polyvar::cones::ConeKind;
use polyvar::limits::Limits;
use serde_json::{json, Value};

use instance::{parse_instance, InputError, InputResult, Parser};
use query::{Evaluator, Outcome, Overrides, Status};

const INPUT_ERROR: u8 = 3;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(ClapParser, Debug)]
#[command(name = "polyvar", version, about = "Exact variational analysis of polyhedral sets and maps")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the dimension cap (default from POLYVAR_LIMITS, else 8).
    #[arg(long, global = true)]
    max_dim: Option<usize>,
    /// Override the piece cap (default from POLYVAR_LIMITS, else 16).
    #[arg(long, global = true)]
    max_pieces: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Tangent and normal cones.
    Cone {
        file: PathBuf,
        /// tangent, regular_normal, limiting_normal or directional_limiting_normal.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Graphical derivatives, coderivatives and subdifferentials.
    Derivative { file: PathBuf },
    /// Sufficient conditions for metric subregularity.
    Check {
        file: PathBuf,
        #[arg(long)]
        lrc: bool,
        #[arg(long)]
        mc: bool,
        #[arg(long)]
        fosc: bool,
        #[arg(long)]
        fuzzy: bool,
    },
    /// Calculus rules with certified hypotheses.
    Rule {
        #[arg(value_parser = ["sum", "intersection", "image", "preimage", "chain", "product", "marginal"])]
        rule: String,
        file: PathBuf,
        #[arg(long)]
        kind: Option<String>,
    },
    /// SCD semismoothness* checks.
    Semismooth { file: PathBuf },
    /// Minimax optimality certificates.
    Minimax { file: PathBuf },
    /// Compare exact cones with the sampling oracle.
    Verify {
        file: PathBuf,
        #[arg(long)]
        kind: Option<String>,
    },
    /// The implication diagram between regularity properties.
    Figure1 { file: PathBuf },
    /// Emit a random instance file.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of sets and of maps.
        #[arg(long, default_value_t = 3)]
        count: usize,
    },
    /// Every query in the file.
    Run { file: PathBuf },
}

fn parse_kind(k: &Option<String>) -> InputResult<Option<ConeKind>> {
    k.as_deref()
        .map(|s| ConeKind::parse(s).ok_or_else(|| InputError::new("--kind", format!("unknown cone kind `{s}`"))))
        .transpose()
}

struct Selection {
    file: PathBuf,
    op: Option<&'static str>,
    rule: Option<String>,
    overrides: Overrides,
}

fn selection(cmd: &Cmd) -> InputResult<Option<Selection>> {
    let sel = |file: &PathBuf, op: Option<&'static str>| Selection {
        file: file.clone(),
        op,
        rule: None,
        overrides: Overrides::default(),
    };
    Ok(Some(match cmd {
        Cmd::Cone { file, kind } => Selection {
            overrides: Overrides {
                kind: parse_kind(kind)?,
                criteria: Vec::new(),
            },
            ..sel(file, Some("cone"))
        },
        Cmd::Derivative { file } => sel(file, Some("derivative")),
        Cmd::Check { file, lrc, mc, fosc, fuzzy } => {
            let criteria = [(lrc, "lrc"), (mc, "mc"), (fosc, "fosc_clm"), (fuzzy, "fuzzy_inner_calm_star")]
                .into_iter()
                .filter(|(on, _)| **on)
                .map(|(_, c)| c.to_string())
                .collect();
            Selection {
                overrides: Overrides { kind: None, criteria },
                ..sel(file, Some("check"))
            }
        }
        Cmd::Rule { rule, file, kind } => Selection {
            rule: Some(rule.clone()),
            overrides: Overrides {
                kind: parse_kind(kind)?,
                criteria: Vec::new(),
            },
            ..sel(file, Some("rule"))
        },
        Cmd::Semismooth { file } => sel(file, Some("semismooth")),
        Cmd::Minimax { file } => sel(file, Some("minimax")),
        Cmd::Verify { file, kind } => Selection {
            overrides: Overrides {
                kind: parse_kind(kind)?,
                criteria: Vec::new(),
            },
            ..sel(file, Some("verify"))
        },
        Cmd::Figure1 { file } => sel(file, Some("figure1")),
        Cmd::Run { file } => sel(file, None),
        Cmd::Gen { .. } => return Ok(None),
    }))
}

fn evaluate(sel: &Selection, limits: Limits) -> InputResult<Vec<Outcome>> {
    let path = sel.file.display().to_string();
    let text = fs::read_to_string(&sel.file).map_err(|e| InputError::new(path.clone(), e))?;
    let inst = parse_instance(&text, limits).map_err(|e| InputError::new(format!("{path}: {}", e.context), e.message))?;
    let mut out = Vec::new();
    for q in &inst.queries {
        if sel.op.is_some_and(|op| op != q.op) {
            continue;
        }
        if let (Some(kind), Some(own)) = (sel.overrides.kind, q.args.get("kind").and_then(Value::as_str)) {
            if q.op != "verify" && ConeKind::parse(own) != Some(kind) {
                continue;
            }
        }
        if let Some(rule) = &sel.rule {
            if q.args.get("rule").and_then(Value::as_str) != Some(rule.as_str()) {
                continue;
            }
        }
        let ctx = format!("query `{}`", q.name);
        let ev = Evaluator {
            instance: &inst,
            parser: Parser { limits, ctx: &ctx },
            query: q,
            overrides: &sel.overrides,
        };
        out.push(ev.run()?);
    }
    if out.is_empty() {
        let what = match (&sel.op, &sel.rule) {
            (Some(op), Some(rule)) => format!("no `{op}` queries with rule `{rule}`"),
            (Some(op), None) => format!("no `{op}` queries"),
            _ => "no queries".to_string(),
        };
        return Err(InputError::new(path, what));
    }
    Ok(out)
}

fn report_json(outcomes: &[Outcome], status: Status) -> Value {
    let queries: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "name": o.name,
                "op": o.op,
                "status": o.status.name(),
                "notes": o.notes,
                "result": o.result,
            })
        })
        .collect();
    let count = |s: Status| outcomes.iter().filter(|o| o.status == s).count();
    json!({
        "queries": queries,
        "summary": {
            "total": outcomes.len(),
            "certified": count(Status::Certified),
            "unexpected": count(Status::Unexpected),
            "inconsistent": count(Status::Inconsistent),
            "status": status.name(),
            "exit_code": status.exit_code(),
        },
    })
}

fn report_text(outcomes: &[Outcome], status: Status) -> String {
    let mut s = String::new();
    for o in outcomes {
        s.push_str(&format!("[{}] {}: {}\n", o.name, o.op, o.status.name()));
        for l in &o.text {
            s.push_str(&format!("  {l}\n"));
        }
        for n in &o.notes {
            s.push_str(&format!("  note: {n}\n"));
        }
    }
    s.push_str(&format!("{} queries, status {}\n", outcomes.len(), status.name()));
    s
}

fn emit(body: &str, out: &Option<PathBuf>) -> InputResult<()> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| InputError::new(p.display().to_string(), e)),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| InputError::new("stdout", e)),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> InputResult<u8> {
    let mut limits = Limits::from_env();
    if let Some(d) = cli.max_dim {
        limits.max_dim = d;
    }
    if let Some(p) = cli.max_pieces {
        limits.max_pieces = p;
    }
    let Some(sel) = selection(&cli.cmd)? else {
        let Cmd::Gen { seed, count } = &cli.cmd else { unreachable!() };
        let doc = gen::instance(*seed, *count, cli.max_dim, cli.max_pieces, limits)?;
        emit(&pretty(&doc), &cli.out)?;
        return Ok(0);
    };
    let outcomes = evaluate(&sel, limits)?;
    let status = outcomes.iter().map(|o| o.status).max().unwrap_or(Status::Certified);
    let body = match cli.format {
        Format::Json => pretty(&report_json(&outcomes, status)),
        Format::Text => report_text(&outcomes, status),
    };
    emit(&body, &cli.out)?;
    Ok(status.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
