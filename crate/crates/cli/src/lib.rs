//! Command-line front end.
//!
//! One JSON object per line on stdout; errors on stderr with a
//! machine-readable code. Exit status: 0 pass/member, 1 fail/non-member,
//! 2 input error, 3 budget exceeded, 4 unsupported operation (for example
//! the solver on a non-simple model).

pub mod fixtures;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ck_core::axec::{graphof, validate_execution, ExecutionLike};
use ck_core::codec::{CodecError, Document, DocumentKind};
use ck_core::depgraph::{CriticalCycle, DependencyGraph, RobustModel};
use ck_core::history::TxId;
use ck_core::oracle::{
    audit_laws, enumerate_executions, enumerate_graphs, oracle_graph_membership, oracle_membership,
    EnumerationBudget, LawStatus, Membership, OracleError,
};
use ck_core::sessions::{audit_session_laws, conforms, lift_spec, ExtendedExecution};
use ck_core::solver::{decide_membership, MembershipVerdict, SolverError};
use ck_core::spec::Model;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_UNSUPPORTED: i32 = 4;

/// Consistency checking for weakly consistent transactional histories.
///
/// The enumeration budget defaults to 6 transactions (about 720 arbitration
/// orders times at most 2^15 visibility subsets per order); the CK_BUDGET
/// environment variable overrides the transaction cap.
#[derive(Parser)]
#[command(name = "ck", version)]
struct Cli {
    /// Also print human-readable renderings of reports and cycles.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    /// Exhaustive enumeration; ground truth for small inputs.
    Oracle,
    /// Least-fixpoint solver over dependency graphs; simple models only.
    Solver,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a history (or dependency graph) is admitted by a model.
    ///
    /// Models: cc, ccser (alias redblue), psi, si, si+ser, ser, cp. The
    /// engine defaults to the oracle when the history fits the enumeration
    /// budget and to the solver otherwise.
    Check {
        model: String,
        file: PathBuf,
        #[arg(long, value_enum)]
        engine: Option<EngineArg>,
    },
    /// Evaluate a model's critical-cycle criteria on a dependency graph.
    ///
    /// Models: ser, si, psi, ccser, cp. Exit 0 means robust-certified: no
    /// critical cycle of the model's shape exists.
    Robust { model: String, file: PathBuf },
    /// Synthesize a witness execution for a dependency graph under a simple
    /// model, or report the cycle precluding one.
    Witness { model: String, file: PathBuf },
    /// Extract the dependency graph underlying an execution.
    Graphof { file: PathBuf },
    /// Evaluate the algebraic laws on an execution; with a sessions key the
    /// extended (session-aware) law set is used.
    AuditLaws {
        file: PathBuf,
        #[arg(long)]
        model: String,
    },
    /// Stream every valid execution of a small history, one JSON per line.
    Enumerate { file: PathBuf },
    /// List the shipped fixture corpus; --emit writes the files to a
    /// directory.
    Fixtures {
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Validate a history, execution, or graph file and report every
    /// violation.
    Validate { file: PathBuf },
}

pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Render clap's own help/version on stdout with success.
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{e}");
            return EXIT_PASS;
        }
    };
    let pretty = cli.pretty;
    match cli.command {
        Command::Check {
            model,
            file,
            engine,
        } => check(&model, &file, engine, pretty, out, err),
        Command::Robust { model, file } => robust(&model, &file, pretty, out, err),
        Command::Witness { model, file } => witness(&model, &file, pretty, out, err),
        Command::Graphof { file } => graphof_cmd(&file, pretty, out, err),
        Command::AuditLaws { file, model } => audit_cmd(&file, &model, out, err),
        Command::Enumerate { file } => enumerate_cmd(&file, out, err),
        Command::Fixtures { emit } => fixtures_cmd(emit.as_deref(), out, err),
        Command::Validate { file } => validate_cmd(&file, out, err),
    }
}

pub fn budget_from_env() -> EnumerationBudget {
    match std::env::var("CK_BUDGET").ok().and_then(|v| v.parse().ok()) {
        Some(n) => EnumerationBudget::with_max_transactions(n),
        None => EnumerationBudget::default(),
    }
}

fn fail(err: &mut dyn Write, code: &str, message: impl std::fmt::Display) -> i32 {
    let _ = writeln!(
        err,
        "{}",
        json!({ "error": message.to_string(), "code": code })
    );
    match code {
        "budget-exceeded" => EXIT_BUDGET,
        "unsupported" => EXIT_UNSUPPORTED,
        _ => EXIT_INPUT,
    }
}

fn emit(out: &mut dyn Write, value: Value) {
    let _ = writeln!(out, "{value}");
}

fn load(path: &Path, err: &mut dyn Write) -> Result<Document, i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(err, "io-error", format!("{}: {e}", path.display())))?;
    Document::parse(&text).map_err(|e| fail(err, "parse-error", e))
}

fn parse_model(name: &str, err: &mut dyn Write) -> Result<Model, i32> {
    Model::parse(name).ok_or_else(|| {
        fail(
            err,
            "unknown-model",
            format!("unknown model {name:?} (known: cc, ccser, redblue, psi, si, si+ser, ser, cp)"),
        )
    })
}

fn codec_exit(e: &CodecError) -> &'static str {
    match e {
        CodecError::Json(_) => "parse-error",
        _ => "invalid-input",
    }
}

fn oracle_exit(e: &OracleError) -> &'static str {
    match e {
        OracleError::BudgetExceeded { .. } => "budget-exceeded",
        OracleError::InvalidHistory(_) => "invalid-input",
    }
}

fn cycle_json(cycle: &CriticalCycle) -> Value {
    Value::Array(
        cycle
            .edges
            .iter()
            .map(|e| {
                let kind = if e.fenced {
                    format!("{}!", e.kind)
                } else {
                    e.kind.to_string()
                };
                json!([e.from.as_str(), kind, e.object.as_str(), e.to.as_str()])
            })
            .collect(),
    )
}

/// Labels a vertex cycle from the solver with the graph's edge families
/// where possible; derived arbitration edges get kind "ar".
fn vertex_cycle_json(cycle: &[TxId], g: &DependencyGraph) -> Value {
    let u = g.universe();
    let mut edges = Vec::new();
    for w in cycle.windows(2) {
        let (a, b) = (u.expect_index(&w[0]), u.expect_index(&w[1]));
        let mut labeled = None;
        'families: for (kind, family) in [("wr", 0), ("ww", 1), ("rw", 2)] {
            for x in g.history().objects() {
                let rel = match family {
                    0 => g.wr(&x),
                    1 => g.ww(&x),
                    _ => g.rw(&x),
                };
                if rel.contains(a, b) {
                    labeled = Some(json!([w[0].as_str(), kind, x.as_str(), w[1].as_str()]));
                    break 'families;
                }
            }
        }
        edges.push(
            labeled.unwrap_or_else(|| json!([w[0].as_str(), "ar", Value::Null, w[1].as_str()])),
        );
    }
    Value::Array(edges)
}

fn render_cycle_pretty(cycle: &Value) -> String {
    let Some(edges) = cycle.as_array() else {
        return String::new();
    };
    let parts: Vec<String> = edges
        .iter()
        .filter_map(|e| {
            let e = e.as_array()?;
            let obj = e[2].as_str().unwrap_or("_");
            Some(format!(
                "{} -{}({})-> {}",
                e[0].as_str()?,
                e[1].as_str()?,
                obj,
                e[3].as_str()?
            ))
        })
        .collect();
    parts.join(" ; ")
}

fn check(
    model_name: &str,
    file: &Path,
    engine: Option<EngineArg>,
    pretty: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let model = match parse_model(model_name, err) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let doc = match load(file, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let budget = budget_from_env();
    let is_graph_doc = doc.kind() == DocumentKind::Graph;
    let history = match doc.to_history() {
        Ok(h) => h,
        Err(e) => return fail(err, codec_exit(&e), e),
    };
    let engine = engine.unwrap_or(if history.len() <= budget.max_transactions {
        EngineArg::Oracle
    } else {
        EngineArg::Solver
    });
    let sigma = model.spec(&history.objects());

    let (verdict, witness, cycle): (bool, Option<Document>, Option<Value>) = if is_graph_doc {
        let graph = match doc.to_graph() {
            Ok(g) => g,
            Err(e) => return fail(err, codec_exit(&e), e),
        };
        match engine {
            EngineArg::Oracle => match oracle_graph_membership(&sigma, &graph, &budget) {
                Ok(Membership::Member(w)) => (true, Some(Document::from_execution(&w)), None),
                Ok(Membership::NonMember) => (false, None, None),
                Err(e) => return fail(err, oracle_exit(&e), e),
            },
            EngineArg::Solver => match decide_membership(&sigma, &graph) {
                Ok(MembershipVerdict::Member(w)) => {
                    (true, Some(Document::from_execution(&w)), None)
                }
                Ok(MembershipVerdict::NonMember { cycle }) => {
                    (false, None, Some(vertex_cycle_json(&cycle, &graph)))
                }
                Err(e @ SolverError::NotSimple { .. }) => return fail(err, "unsupported", e),
            },
        }
    } else {
        match engine {
            EngineArg::Oracle => match oracle_membership(&sigma, &history, &budget) {
                Ok(Membership::Member(w)) => (true, Some(Document::from_execution(&w)), None),
                Ok(Membership::NonMember) => (false, None, None),
                Err(e) => return fail(err, oracle_exit(&e), e),
            },
            EngineArg::Solver => {
                if !sigma.is_simple() {
                    return fail(
                        err,
                        "unsupported",
                        format!("model {model_name} is not simple; the solver refuses it"),
                    );
                }
                let graphs = match enumerate_graphs(&history, &budget) {
                    Ok(g) => g,
                    Err(e) => return fail(err, oracle_exit(&e), e),
                };
                let mut found = None;
                for g in &graphs {
                    if let Ok(MembershipVerdict::Member(w)) = decide_membership(&sigma, g) {
                        found = Some(w);
                        break;
                    }
                }
                match found {
                    Some(w) => (true, Some(Document::from_execution(&w)), None),
                    None => (false, None, None),
                }
            }
        }
    };

    let mut output = json!({
        "model": model.name(),
        "engine": match engine { EngineArg::Oracle => "oracle", EngineArg::Solver => "solver" },
        "verdict": if verdict { "member" } else { "non-member" },
    });
    if let Some(w) = witness {
        output["witness"] = serde_json::to_value(&w).expect("documents serialize");
    }
    if let Some(c) = &cycle {
        output["cycle"] = c.clone();
    }
    emit(out, output);
    if pretty {
        if let Some(c) = &cycle {
            let _ = writeln!(out, "cycle: {}", render_cycle_pretty(c));
        }
    }
    if verdict {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn robust(
    model_name: &str,
    file: &Path,
    pretty: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(model) = RobustModel::parse(model_name) else {
        return fail(
            err,
            "unknown-model",
            format!("unknown robustness model {model_name:?} (known: ser, si, psi, ccser, cp)"),
        );
    };
    let doc = match load(file, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let graph = match doc.to_graph() {
        Ok(g) => g,
        Err(e) => return fail(err, codec_exit(&e), e),
    };
    let report = ck_core::depgraph::robustness_check(model, &graph);
    let criteria: Vec<Value> = report
        .criteria
        .iter()
        .map(|c| {
            let mut v = json!({ "name": c.name, "acyclic": c.acyclic });
            if let Some(cycle) = &c.cycle {
                v["cycle"] = cycle_json(cycle);
            }
            v
        })
        .collect();
    emit(
        out,
        json!({
            "model": model.name(),
            "verdict": if report.certified { "robust-certified" } else { "not-certified" },
            "criteria": criteria,
        }),
    );
    if pretty {
        for c in &report.criteria {
            if let Some(cycle) = &c.cycle {
                let _ = writeln!(out, "critical cycle ({}): {cycle}", c.name);
            }
        }
    }
    if report.certified {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn witness(
    model_name: &str,
    file: &Path,
    pretty: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let model = match parse_model(model_name, err) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let doc = match load(file, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let graph = match doc.to_graph() {
        Ok(g) => g,
        Err(e) => return fail(err, codec_exit(&e), e),
    };
    let sigma = model.spec(&graph.history().objects());
    match decide_membership(&sigma, &graph) {
        Ok(MembershipVerdict::Member(w)) => {
            emit(
                out,
                json!({
                    "verdict": "member",
                    "witness": serde_json::to_value(Document::from_execution(&w))
                        .expect("documents serialize"),
                }),
            );
            EXIT_PASS
        }
        Ok(MembershipVerdict::NonMember { cycle }) => {
            let cycle = vertex_cycle_json(&cycle, &graph);
            emit(out, json!({ "verdict": "non-member", "cycle": cycle }));
            if pretty {
                let _ = writeln!(out, "cycle: {}", render_cycle_pretty(&cycle));
            }
            EXIT_FAIL
        }
        Err(e @ SolverError::NotSimple { .. }) => fail(err, "unsupported", e),
    }
}

fn graphof_cmd(file: &Path, pretty: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let doc = match load(file, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let execution = match doc.to_execution() {
        Ok(e) => e,
        Err(e) => return fail(err, codec_exit(&e), e),
    };
    match graphof(&execution) {
        Ok(g) => {
            let doc = Document::from_graph(&g);
            if pretty {
                let _ = writeln!(out, "{}", doc.to_pretty_json());
            } else {
                emit(
                    out,
                    serde_json::to_value(&doc).expect("documents serialize"),
                );
            }
            EXIT_PASS
        }
        Err(e) => fail(err, "invalid-input", e),
    }
}

fn audit_cmd(file: &Path, model_name: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let model = match parse_model(model_name, err) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let doc = match load(file, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let report = if doc.sessions.is_some() {
        let eh = match doc.to_extended_history() {
            Ok(eh) => eh,
            Err(e) => return fail(err, codec_exit(&e), e),
        };
        let execution = match doc.to_execution() {
            Ok(e) => e,
            Err(e) => return fail(err, codec_exit(&e), e),
        };
        let extended = ExtendedExecution::new(eh, execution.vis().clone(), execution.ar().clone());
        let spec = lift_spec(&model.spec(&execution.history().objects()));
        let violations = conforms(&extended, &spec);
        if !violations.is_empty() {
            let rendered: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            emit(out, json!({ "conforms": false, "violations": rendered }));
            return EXIT_FAIL;
        }
        audit_session_laws(&extended, &spec)
    } else {
        let execution = match doc.to_execution() {
            Ok(e) => e,
            Err(e) => return fail(err, codec_exit(&e), e),
        };
        if !validate_execution(&execution).is_empty() {
            return fail(err, "invalid-input", "execution is not valid; run validate");
        }
        audit_laws(&execution, &model.spec(&execution.history().objects()))
    };
    let mut laws = serde_json::Map::new();
    let mut failures = serde_json::Map::new();
    for (id, status) in &report.entries {
        let s = match status {
            LawStatus::Pass => "pass",
            LawStatus::NotApplicable => "not-applicable",
            LawStatus::Fail(detail) => {
                failures.insert(id.clone(), Value::String(detail.clone()));
                "fail"
            }
        };
        laws.insert(id.clone(), Value::String(s.to_owned()));
    }
    let mut output = json!({ "laws": Value::Object(laws) });
    if !failures.is_empty() {
        output["failures"] = Value::Object(failures);
    }
    emit(out, output);
    if report.all_pass() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn enumerate_cmd(file: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let doc = match load(file, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let history = match doc.to_history() {
        Ok(h) => h,
        Err(e) => return fail(err, codec_exit(&e), e),
    };
    let budget = budget_from_env();
    let stream = match enumerate_executions(&history, &budget) {
        Ok(s) => s,
        Err(e) => return fail(err, oracle_exit(&e), e),
    };
    for (index, e) in stream.enumerate() {
        let doc = Document::from_execution(&e);
        emit(out, json!({ "index": index, "vis": doc.vis, "ar": doc.ar }));
    }
    EXIT_PASS
}

fn fixtures_cmd(dir: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Some(dir) = dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            return fail(err, "io-error", format!("{}: {e}", dir.display()));
        }
    }
    for fixture in fixtures::all() {
        let expected: serde_json::Map<String, Value> = fixture
            .expected
            .iter()
            .map(|(m, e)| (m.name().to_owned(), Value::String(e.as_str().to_owned())))
            .collect();
        let mut line = json!({
            "name": fixture.name,
            "kind": fixture.kind.as_str(),
            "expected": Value::Object(expected),
        });
        if let Some(dir) = dir {
            let path = dir.join(format!("{}.json", fixture.name));
            if let Err(e) = std::fs::write(&path, fixture.doc.to_pretty_json()) {
                return fail(err, "io-error", format!("{}: {e}", path.display()));
            }
            line["path"] = Value::String(path.display().to_string());
        }
        emit(out, line);
    }
    EXIT_PASS
}

fn validate_cmd(file: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let doc = match load(file, err) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let kind = doc.kind();
    let violations: Vec<String> = match kind {
        DocumentKind::History => match doc.to_history() {
            Ok(h) => h.validate().iter().map(|v| v.to_string()).collect(),
            Err(e) => return fail(err, codec_exit(&e), e),
        },
        DocumentKind::Execution => match doc.to_execution() {
            Ok(e) => validate_execution(&e)
                .iter()
                .map(|v| v.to_string())
                .collect(),
            Err(e) => return fail(err, codec_exit(&e), e),
        },
        DocumentKind::Graph => match doc.to_graph() {
            Ok(_) => Vec::new(),
            Err(e) => match e {
                CodecError::Graph(ck_core::depgraph::GraphError::Invalid(v)) => {
                    v.iter().map(|x| x.to_string()).collect()
                }
                CodecError::Graph(ck_core::depgraph::GraphError::InvalidHistory(v)) => {
                    v.iter().map(|x| x.to_string()).collect()
                }
                other => return fail(err, codec_exit(&other), other),
            },
        },
    };
    let valid = violations.is_empty();
    emit(
        out,
        json!({
            "kind": match kind {
                DocumentKind::History => "history",
                DocumentKind::Execution => "execution",
                DocumentKind::Graph => "graph",
            },
            "valid": valid,
            "violations": violations,
        }),
    );
    if valid {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
