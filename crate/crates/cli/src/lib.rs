//! The `rccs` command: parsing, reversible stepping, encodings and
//! equivalence checks. Exit codes: 0 success or equivalent, 1 distinguished
//! or invalid, 2 usage or input error.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rccs::ccs::Term;
use rccs::confstruct::{AxiomCheck, ConfJson, ConfStruct};
use rccs::encode;
use rccs::equiv::{self, Verdict, VerdictKind};
use rccs::process::{self, Process};

#[derive(Parser, Debug)]
#[command(name = "rccs", version, about = "Reversible CCS and configuration structure workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the syntax tree of a CCS term or RCCS process as JSON.
    Parse { term: Option<String> },
    /// Pretty-print a CCS term or RCCS process.
    Fmt { term: Option<String> },
    /// Interactive stepping; reads `do <n>`, `undo <id>`, `origin`, `mem`, `quit` from stdin.
    Step { term: String },
    /// Encode a term as a configuration structure.
    Encode {
        term: String,
        /// Treat the input as an RCCS process and report its configuration.
        #[arg(long)]
        rccs: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Check the configuration structure axioms of a JSON file.
    Axioms { file: String },
    /// Compare two terms, processes, or structures.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        a: String,
        b: String,
        #[arg(long, default_value_t = 2)]
        context_depth: usize,
    },
    /// Print the forward and backward level families of two structures.
    Levels { a: String, b: String },
    /// Replay a trace file of `+ i:label` / `- i:label` lines.
    Replay { term: String, tracefile: String },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckKind {
    Hhpb,
    Bfb,
    BarbedCcs,
    Congruence,
}

/// Failure with an exit code and a message for stderr.
struct Fail(i32, String);

fn input_error(msg: impl std::fmt::Display) -> Fail {
    Fail(2, msg.to_string())
}

enum Input {
    Structure(ConfStruct),
    Text(String),
}

/// The concrete syntax of a term or process, also accepting the JSON that
/// `parse` prints.
fn syntax_text(src: &str) -> Result<Option<String>, Fail> {
    let Ok(Value::Object(map)) = serde_json::from_str::<Value>(src) else { return Ok(None) };
    if let Some(t) = map.get("term") {
        let t: Term = serde_json::from_value(t.clone()).map_err(|e| input_error(format!("bad term JSON: {e}")))?;
        Ok(Some(t.to_string()))
    } else if let Some(r) = map.get("process") {
        let r: Process =
            serde_json::from_value(r.clone()).map_err(|e| input_error(format!("bad process JSON: {e}")))?;
        Ok(Some(r.to_string()))
    } else {
        Ok(None)
    }
}

/// A file path is read; structure JSON becomes a structure; anything else
/// is a term or process.
fn resolve(arg: &str) -> Result<Input, Fail> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).map_err(|e| input_error(format!("{arg}: {e}")))?
    } else {
        arg.to_string()
    };
    if let Some(t) = syntax_text(&text)? {
        return Ok(Input::Text(t));
    }
    match serde_json::from_str::<Value>(&text) {
        Ok(v @ Value::Object(_)) => {
            let j: ConfJson = serde_json::from_value(v).map_err(|e| input_error(format!("bad structure JSON: {e}")))?;
            Ok(Input::Structure(ConfStruct::from_json(&j).map_err(input_error)?))
        }
        _ => Ok(Input::Text(text.trim().to_string())),
    }
}

fn term_of(src: &str) -> Result<Term, Fail> {
    Term::parse(src).map_err(input_error)
}

fn process_of(src: &str) -> Result<Process, Fail> {
    Process::parse_lenient(src).map_err(input_error)
}

fn structure_of(input: Input) -> Result<ConfStruct, Fail> {
    match input {
        Input::Structure(c) => Ok(c),
        Input::Text(t) => {
            let r = process_of(&t)?;
            let term = process::erase(&process::origin(&r).map_err(input_error)?);
            encode::encode_ccs(&term).map_err(input_error)
        }
    }
}

fn text_of(input: Input, what: &str) -> Result<String, Fail> {
    match input {
        Input::Text(t) => Ok(t),
        Input::Structure(_) => Err(input_error(format!("{what} expects a term, not structure JSON"))),
    }
}

fn read_all(stdin: &mut dyn BufRead) -> Result<String, Fail> {
    let mut s = String::new();
    stdin.read_to_string(&mut s).map_err(input_error)?;
    Ok(s.trim().to_string())
}

enum Syntax {
    Term(Term),
    Process(Process),
}

fn read_syntax(arg: Option<String>, stdin: &mut dyn BufRead) -> Result<Syntax, Fail> {
    let src = match arg {
        Some(t) => t,
        None => read_all(stdin)?,
    };
    let src = syntax_text(&src)?.unwrap_or(src);
    match Term::parse(&src) {
        Ok(t) => Ok(Syntax::Term(t)),
        Err(_) => Process::parse_lenient(&src).map(Syntax::Process).map_err(input_error),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serialisable")
}

fn verdict_exit(v: &Verdict) -> i32 {
    match v.verdict {
        VerdictKind::Distinguished => 1,
        _ => 0,
    }
}

fn axiom_json(c: &ConfStruct, check: &AxiomCheck) -> Value {
    match check {
        AxiomCheck::Pass => json!("pass"),
        AxiomCheck::Fail { configs, events } => json!({
            "fail": {
                "configs": configs.iter().map(|x| c.names(*x)).collect::<Vec<_>>(),
                "events": events.iter().map(|e| c.events[*e].ident.to_string()).collect::<Vec<_>>(),
            }
        }),
    }
}

fn address_json(addr: &encode::Address) -> Value {
    let c = &addr.structure;
    let mut v = serde_json::to_value(c.to_json()).expect("serialisable");
    v["at"] = json!(c.names(addr.at));
    let ids: BTreeMap<String, String> =
        addr.id_match.iter().map(|(i, e)| (i.to_string(), c.events[*e].ident.to_string())).collect();
    v["id_match"] = json!(ids);
    v
}

fn check(kind: CheckKind, a: &str, b: &str, depth: usize, out: &mut dyn Write) -> Result<i32, Fail> {
    let (ia, ib) = (resolve(a)?, resolve(b)?);
    let verdict = match kind {
        CheckKind::Hhpb => {
            let (ca, cb) = (structure_of(ia)?, structure_of(ib)?);
            let mut v = equiv::hhpb(&ca, &cb).verdict(&ca, &cb);
            v.evidence["levels"] = equiv::forw_backw_levels(&ca, &cb).sizes();
            v
        }
        CheckKind::Bfb => match (ia, ib) {
            (Input::Text(x), Input::Text(y)) => equiv::rccs_bfb_bisim(&process_of(&x)?, &process_of(&y)?).verdict(),
            (x, y) => equiv::cs_bfb_barbed_bisim(&structure_of(x)?, &structure_of(y)?).verdict(),
        },
        CheckKind::BarbedCcs => {
            let (p, q) = (term_of(&text_of(ia, "barbed-ccs")?)?, term_of(&text_of(ib, "barbed-ccs")?)?);
            equiv::ccs_barbed_bisim(&p, &q).verdict()
        }
        CheckKind::Congruence => {
            let (r, s) = (process_of(&text_of(ia, "congruence")?)?, process_of(&text_of(ib, "congruence")?)?);
            let p = process::erase(&process::origin(&r).map_err(input_error)?);
            let q = process::erase(&process::origin(&s).map_err(input_error)?);
            let contexts = equiv::theorem_contexts(&p, &q, depth).map_err(input_error)?;
            let outcome = equiv::bounded_congruence(&r, &s, &contexts).map_err(input_error)?;
            let mut v = outcome.verdict();
            let singly = encode::term_is_singly_labelled(&p).unwrap_or(false)
                && encode::term_is_singly_labelled(&q).unwrap_or(false);
            if singly {
                let h =
                    equiv::hhpb(&structure_of(Input::Text(p.to_string()))?, &structure_of(Input::Text(q.to_string()))?);
                v.evidence["hhpb"] = json!(if h.equivalent { "equivalent" } else { "distinguished" });
                v.evidence["agree"] = json!(h.equivalent == outcome.equivalent_on_all);
            }
            v
        }
    };
    writeln!(out, "{}", pretty(&serde_json::to_value(&verdict).expect("serialisable"))).map_err(input_error)?;
    Ok(verdict_exit(&verdict))
}

fn repl(start: Process, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Fail> {
    let io = |e: std::io::Error| input_error(e);
    let mut state = start;
    let mut line = String::new();
    let mut show = true;
    loop {
        let fwd = process::fwd_steps(&state);
        let bwd = process::bwd_steps(&state);
        if show {
            writeln!(out, "state: {state}").map_err(io)?;
            for (k, t) in fwd.iter().enumerate() {
                writeln!(out, "  [{k}] + {}:{} -> {}", t.id, t.label, t.target).map_err(io)?;
            }
            for t in &bwd {
                writeln!(out, "  undo {} ({}) -> {}", t.id, t.label, t.target).map_err(io)?;
            }
        }
        show = false;
        line.clear();
        if stdin.read_line(&mut line).map_err(io)? == 0 {
            return Ok(0);
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [] => {}
            ["quit"] | ["q"] => return Ok(0),
            ["do", n] => match n.parse::<usize>().ok().and_then(|k| fwd.get(k)) {
                Some(t) => {
                    state = t.target.clone();
                    show = true;
                }
                None => writeln!(err, "no forward transition [{n}]").map_err(io)?,
            },
            ["undo", n] => match n.parse::<u32>().ok().and_then(|id| bwd.iter().find(|t| t.id == id)) {
                Some(t) => {
                    state = t.target.clone();
                    show = true;
                }
                None => writeln!(err, "event {n} cannot be undone now").map_err(io)?,
            },
            ["origin"] => match process::origin(&state) {
                Ok(o) => writeln!(out, "origin: {o}").map_err(io)?,
                Err(e) => writeln!(err, "{e}").map_err(io)?,
            },
            ["mem"] => {
                for (k, m) in state.memories().iter().enumerate() {
                    writeln!(out, "  thread {k}: {m}").map_err(io)?;
                }
            }
            _ => writeln!(err, "commands: do <n>, undo <id>, origin, mem, quit").map_err(io)?,
        }
    }
}

fn dispatch(cmd: Command, stdin: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Fail> {
    let io = |e: std::io::Error| input_error(e);
    match cmd {
        Command::Parse { term } => {
            let v = match read_syntax(term, stdin)? {
                Syntax::Term(t) => json!({ "term": t }),
                Syntax::Process(r) => json!({ "process": r }),
            };
            writeln!(out, "{}", pretty(&v)).map_err(io)?;
            Ok(0)
        }
        Command::Fmt { term } => {
            let text = match read_syntax(term, stdin)? {
                Syntax::Term(t) => t.to_string(),
                Syntax::Process(r) => r.to_string(),
            };
            writeln!(out, "{text}").map_err(io)?;
            Ok(0)
        }
        Command::Step { term } => repl(process_of(&term)?, stdin, out, err),
        Command::Encode { term, rccs, format } => {
            let (structure, json) = if rccs {
                let addr = encode::encode_rccs(&process_of(&term)?).map_err(|e| Fail(1, e.to_string()))?;
                let j = address_json(&addr);
                (addr.structure, j)
            } else {
                let c = encode::encode_ccs(&term_of(&term)?).map_err(input_error)?;
                let j = serde_json::to_value(c.to_json()).expect("serialisable");
                (c, j)
            };
            match format {
                Format::Json => writeln!(out, "{}", pretty(&json)).map_err(io)?,
                Format::Dot => write!(out, "{}", structure.to_dot()).map_err(io)?,
            }
            Ok(0)
        }
        Command::Axioms { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| input_error(format!("{file}: {e}")))?;
            let j: ConfJson =
                serde_json::from_str(&text).map_err(|e| input_error(format!("bad structure JSON: {e}")))?;
            let c = ConfStruct::from_json(&j).map_err(input_error)?;
            let report = c.validate_axioms();
            let mut v = serde_json::Map::new();
            for (name, check) in report.entries() {
                v.insert(name.to_string(), axiom_json(&c, check));
            }
            writeln!(out, "{}", pretty(&Value::Object(v))).map_err(io)?;
            for (name, check) in report.entries() {
                if !check.passed() {
                    writeln!(err, "axiom violated: {name}").map_err(io)?;
                }
            }
            Ok(if report.all_pass() { 0 } else { 1 })
        }
        Command::Check { kind, a, b, context_depth } => check(kind, &a, &b, context_depth, out),
        Command::Levels { a, b } => {
            let (ca, cb) = (structure_of(resolve(&a)?)?, structure_of(resolve(&b)?)?);
            let lv = equiv::forw_backw_levels(&ca, &cb);
            let v = json!({ "sizes": lv.sizes(), "families": lv.to_json(&ca, &cb) });
            writeln!(out, "{}", pretty(&v)).map_err(io)?;
            Ok(0)
        }
        Command::Replay { term, tracefile } => {
            let r = process_of(&term)?;
            let text = std::fs::read_to_string(&tracefile).map_err(|e| input_error(format!("{tracefile}: {e}")))?;
            let trace = process::parse_trace(&text).map_err(input_error)?;
            match process::replay(&r, &trace) {
                Ok(end) => {
                    let v = json!({
                        "final": end.to_string(),
                        "normal_form": process::normal_form(&end).to_string(),
                        "steps": trace.len(),
                    });
                    writeln!(out, "{}", pretty(&v)).map_err(io)?;
                    Ok(0)
                }
                Err(e) => {
                    let step = match &e {
                        process::RccsError::Replay { step, .. } => Some(*step),
                        _ => None,
                    };
                    writeln!(out, "{}", pretty(&json!({ "error": e.to_string(), "step": step }))).map_err(io)?;
                    Ok(1)
                }
            }
        }
    }
}

/// Runs the command line `args` (including the program name).
pub fn run(args: &[String], stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    match dispatch(cli.command, stdin, stdout, stderr) {
        Ok(code) => code,
        Err(Fail(code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}
