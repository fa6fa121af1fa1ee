//! Command-line driver: `check`, `elab`, `run` and the corpus runner `test`.
//!
//! Exit codes: 0 success, 1 rejection or expectation mismatch, 2 usage
//! error, 3 metatheory violation (a step check or the elaboration oracle
//! failed, which indicates a soundness bug).

use crate::eval::{Evaluator, Outcome, TraceMode, DEFAULT_FUEL};
use crate::infer::{build_sigs, check_program, Checked, Options};
use crate::ir::{pretty_value, print_ir};
use crate::ir_check;
use crate::parser::{parse_program, pretty_ty, Diagnostic};
use crate::syntax::{NameGen, Program, SigTable};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Json,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub fuel: usize,
    pub check_steps: bool,
    pub trace: TraceMode,
    pub format: Format,
    pub unsound_resume: bool,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            fuel: DEFAULT_FUEL,
            check_steps: false,
            trace: TraceMode::Off,
            format: Format::Human,
            unsound_resume: false,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_METATHEORY: i32 = 3;

const USAGE: &str = "usage: polyeff <check|elab|run|test> <path>... [options]

options:
  --fuel N          step budget for evaluation (default 100000,
                    or the POLYEFF_FUEL environment variable)
  --check-steps     typecheck after every evaluation step and assert
                    type preservation and effect shrinkage
  --trace[=full]    print one line per step (capped unless =full)
  --format FMT      human | json
  --unsound-resume  disable the per-resumption renaming (negative control)
";

pub fn main_with(args: &[String], out: &mut dyn std::io::Write) -> i32 {
    match parse_args(args) {
        Err(msg) => {
            let _ = writeln!(out, "{msg}");
            let _ = write!(out, "{USAGE}");
            EXIT_USAGE
        }
        Ok((cmd, paths, cfg)) => dispatch(&cmd, &paths, &cfg, out),
    }
}

fn parse_args(args: &[String]) -> Result<(String, Vec<PathBuf>, RunConfig), String> {
    let mut cfg = RunConfig::default();
    if let Ok(v) = std::env::var("POLYEFF_FUEL") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => cfg.fuel = n,
            _ => return Err(format!("POLYEFF_FUEL must be a positive integer, got `{v}`")),
        }
    }
    let mut it = args.iter().peekable();
    let cmd = it.next().ok_or("missing subcommand")?.clone();
    if !matches!(cmd.as_str(), "check" | "elab" | "run" | "test") {
        return Err(format!("unknown subcommand `{cmd}`"));
    }
    let mut paths = Vec::new();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--fuel" => {
                let v = it.next().ok_or("--fuel needs a value")?;
                let n: usize = v.parse().map_err(|_| format!("bad fuel `{v}`"))?;
                if n == 0 {
                    return Err("fuel must be positive".to_string());
                }
                cfg.fuel = n;
            }
            "--check-steps" => cfg.check_steps = true,
            "--trace" => cfg.trace = TraceMode::Capped,
            "--trace=full" => cfg.trace = TraceMode::Full,
            "--format" => {
                let v = it.next().ok_or("--format needs a value")?;
                cfg.format = match v.as_str() {
                    "human" => Format::Human,
                    "json" => Format::Json,
                    other => return Err(format!("unknown format `{other}`")),
                };
            }
            "--unsound-resume" => cfg.unsound_resume = true,
            other if other.starts_with('-') => return Err(format!("unknown flag `{other}`")),
            path => paths.push(PathBuf::from(path)),
        }
    }
    if paths.is_empty() {
        return Err("missing input path".to_string());
    }
    Ok((cmd, paths, cfg))
}

fn dispatch(cmd: &str, paths: &[PathBuf], cfg: &RunConfig, out: &mut dyn std::io::Write) -> i32 {
    match cmd {
        "test" => run_corpus(&paths[0], cfg, out),
        _ => {
            let mut worst = EXIT_OK;
            for p in paths {
                let code = run_one(cmd, p, cfg, out);
                worst = worst.max(code);
            }
            worst
        }
    }
}

struct Loaded {
    checked: Checked,
    sigs: SigTable,
    gen: NameGen,
}

fn load(path: &Path, cfg: &RunConfig) -> Result<Loaded, (String, i32)> {
    let display = path.display().to_string();
    let src = std::fs::read_to_string(path)
        .map_err(|e| (format!("{display}: error: {e}"), EXIT_USAGE))?;
    load_src(&src, &display, cfg)
}

fn load_src(src: &str, display: &str, cfg: &RunConfig) -> Result<Loaded, (String, i32)> {
    let prog: Program = parse_program(src).map_err(|ds| {
        let msg = ds
            .iter()
            .map(|d| d.render(display))
            .collect::<Vec<_>>()
            .join("\n");
        (msg, EXIT_FAIL)
    })?;
    let render = |d: Diagnostic| (d.render(display), EXIT_FAIL);
    let sigs = build_sigs(&prog).map_err(render)?;
    let opts = Options { unsound_shared_resume: cfg.unsound_resume };
    let (checked, gen) = check_program(&prog, &sigs, opts).map_err(render)?;
    // The elaboration oracle: every accepted program's image typechecks in
    // the intermediate language at the inferred type, with a smaller or
    // equal effect. Skipped in the unsound mode, whose entire point is that
    // this fails.
    if !cfg.unsound_resume {
        match ir_check::typecheck(&sigs, &checked.ir) {
            Ok((ty, eff)) => {
                if ty != checked.ty || !eff.subset_of(&checked.eff) {
                    return Err((
                        format!(
                            "{display}: metatheory violation: elaboration changed the type \
                             from {} to {} (effect {} vs {})",
                            pretty_ty(&checked.ty),
                            pretty_ty(&ty),
                            checked.eff,
                            eff
                        ),
                        EXIT_METATHEORY,
                    ));
                }
            }
            Err(e) => {
                return Err((
                    format!(
                        "{display}: metatheory violation: elaboration is not type-preserving: {e}"
                    ),
                    EXIT_METATHEORY,
                ))
            }
        }
    }
    Ok(Loaded { checked, sigs, gen })
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn run_one(cmd: &str, path: &Path, cfg: &RunConfig, out: &mut dyn std::io::Write) -> i32 {
    let display = path.display().to_string();
    let loaded = match load(path, cfg) {
        Ok(l) => l,
        Err((msg, code)) => {
            let _ = writeln!(out, "{msg}");
            return code;
        }
    };
    match cmd {
        "check" => {
            match cfg.format {
                Format::Human => {
                    let _ = writeln!(
                        out,
                        "{} | {}",
                        pretty_ty(&loaded.checked.ty),
                        loaded.checked.eff
                    );
                }
                Format::Json => {
                    let _ = writeln!(
                        out,
                        "{{\"path\":\"{}\",\"type\":\"{}\",\"effect\":\"{}\"}}",
                        json_escape(&display),
                        json_escape(&pretty_ty(&loaded.checked.ty)),
                        json_escape(&loaded.checked.eff.to_string())
                    );
                }
            }
            EXIT_OK
        }
        "elab" => {
            let _ = writeln!(out, "{}", print_ir(&loaded.checked.ir));
            EXIT_OK
        }
        "run" => {
            let mut ev = Evaluator::new(&loaded.sigs, loaded.gen);
            let r = ev.run(&loaded.checked.ir, cfg.fuel, cfg.check_steps, cfg.trace);
            if cfg.trace != TraceMode::Off {
                for (i, (rule, snap)) in r.trace.entries.iter().enumerate() {
                    let _ = writeln!(out, "[{i}] {rule} : {snap}");
                }
                if r.trace.truncated {
                    let _ = writeln!(out, "[...] trace truncated");
                }
            }
            if let Some(f) = &r.check_failure {
                let _ = writeln!(
                    out,
                    "{display}: metatheory violation at step {} ({}): {}",
                    f.step, f.rule, f.detail
                );
                return EXIT_METATHEORY;
            }
            match &r.outcome {
                Outcome::Value(v) => {
                    match cfg.format {
                        Format::Human => {
                            let _ = writeln!(
                                out,
                                "{} : {}",
                                pretty_value(v),
                                pretty_ty(&loaded.checked.ty)
                            );
                        }
                        Format::Json => {
                            let _ = writeln!(
                                out,
                                "{{\"path\":\"{}\",\"outcome\":\"value\",\"value\":\"{}\",\"type\":\"{}\",\"steps\":{}}}",
                                json_escape(&display),
                                json_escape(&pretty_value(v)),
                                json_escape(&pretty_ty(&loaded.checked.ty)),
                                r.stats.steps
                            );
                        }
                    }
                    EXIT_OK
                }
                Outcome::UnhandledOp { op, .. } => {
                    let _ = writeln!(out, "unhandled operation {op}");
                    EXIT_OK
                }
                Outcome::Stuck { reason, term } => {
                    let _ = writeln!(out, "{display}: stuck: {reason}");
                    let _ = writeln!(out, "  at: {}", print_ir(term));
                    EXIT_FAIL
                }
                Outcome::FuelExhausted(_) => {
                    let _ = writeln!(out, "{display}: fuel exhausted after {} steps", r.stats.steps);
                    EXIT_FAIL
                }
            }
        }
        _ => unreachable!("dispatch covers the subcommands"),
    }
}

// ---------------------------------------------------------------------------
// Corpus runner
// ---------------------------------------------------------------------------

/// What a corpus file promises about itself, read from its first
/// `(* EXPECT: ... *)` comment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expectation {
    Accept(String),
    Reject(String),
    Value(String),
    Unhandled(String),
}

impl std::fmt::Display for Expectation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expectation::Accept(t) => write!(f, "accept {t}"),
            Expectation::Reject(s) => write!(f, "reject {s}"),
            Expectation::Value(v) => write!(f, "value {v}"),
            Expectation::Unhandled(op) => write!(f, "unhandled {op}"),
        }
    }
}

pub fn parse_expectation(src: &str) -> Result<Expectation, String> {
    let start = src.find("(* EXPECT:").ok_or("no `(* EXPECT: ... *)` header")?;
    let rest = &src[start + "(* EXPECT:".len()..];
    let end = rest.find("*)").ok_or("unterminated EXPECT header")?;
    let body = rest[..end].trim();
    let (kind, arg) = match body.split_once(char::is_whitespace) {
        Some((k, a)) => (k, a.trim().to_string()),
        None => (body, String::new()),
    };
    match kind {
        "accept" if !arg.is_empty() => Ok(Expectation::Accept(arg)),
        "reject" if !arg.is_empty() => Ok(Expectation::Reject(arg)),
        "value" if !arg.is_empty() => Ok(Expectation::Value(arg)),
        "unhandled" if !arg.is_empty() => Ok(Expectation::Unhandled(arg)),
        _ => Err(format!("bad EXPECT header `{body}`")),
    }
}

#[derive(Debug)]
pub struct CaseResult {
    pub path: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
    pub metatheory_violation: bool,
}

/// Run one corpus case against its expectation.
pub fn run_case(path_display: &str, src: &str, cfg: &RunConfig) -> CaseResult {
    let mk = |expected: String, actual: String, pass: bool, meta: bool| CaseResult {
        path: path_display.to_string(),
        expected,
        actual,
        pass,
        metatheory_violation: meta,
    };
    let exp = match parse_expectation(src) {
        Ok(e) => e,
        Err(msg) => return mk("<expectation>".into(), msg, false, false),
    };
    let loaded = load_src(src, path_display, cfg);
    match (&exp, loaded) {
        (Expectation::Reject(needle), Err((msg, code))) => {
            let meta = code == EXIT_METATHEORY;
            mk(exp.to_string(), format!("rejected: {msg}"), !meta && msg.contains(needle.as_str()), meta)
        }
        (Expectation::Reject(_), Ok(l)) => mk(
            exp.to_string(),
            format!("accepted at {}", pretty_ty(&l.checked.ty)),
            false,
            false,
        ),
        (_, Err((msg, code))) => {
            mk(exp.to_string(), format!("rejected: {msg}"), false, code == EXIT_METATHEORY)
        }
        (Expectation::Accept(ty_text), Ok(l)) => {
            let actual = pretty_ty(&l.checked.ty);
            mk(exp.to_string(), format!("accept {actual}"), &actual == ty_text, false)
        }
        (Expectation::Value(want), Ok(l)) => {
            let mut ev = Evaluator::new(&l.sigs, l.gen);
            let r = ev.run(&l.checked.ir, cfg.fuel, cfg.check_steps, TraceMode::Off);
            if let Some(f) = &r.check_failure {
                return mk(
                    exp.to_string(),
                    format!("metatheory violation at step {}: {}", f.step, f.detail),
                    false,
                    true,
                );
            }
            match &r.outcome {
                Outcome::Value(v) => {
                    let actual = pretty_value(v);
                    mk(exp.to_string(), format!("value {actual}"), &actual == want, false)
                }
                other => mk(exp.to_string(), other.describe(), false, false),
            }
        }
        (Expectation::Unhandled(op), Ok(l)) => {
            let mut ev = Evaluator::new(&l.sigs, l.gen);
            let r = ev.run(&l.checked.ir, cfg.fuel, cfg.check_steps, TraceMode::Off);
            if let Some(f) = &r.check_failure {
                return mk(
                    exp.to_string(),
                    format!("metatheory violation at step {}: {}", f.step, f.detail),
                    false,
                    true,
                );
            }
            match &r.outcome {
                Outcome::UnhandledOp { op: actual, .. } => mk(
                    exp.to_string(),
                    format!("unhandled {actual}"),
                    actual.as_str() == op,
                    false,
                ),
                other => mk(exp.to_string(), other.describe(), false, false),
            }
        }
    }
}

fn collect_pef(dir: &Path, acc: &mut Vec<PathBuf>) {
    let Ok(rd) = std::fs::read_dir(dir) else { return };
    for entry in rd.flatten() {
        let p = entry.path();
        if p.is_dir() {
            collect_pef(&p, acc);
        } else if p.extension().map(|e| e == "pef").unwrap_or(false) {
            acc.push(p);
        }
    }
}

pub fn run_corpus(dir: &Path, cfg: &RunConfig, out: &mut dyn std::io::Write) -> i32 {
    let mut files = Vec::new();
    collect_pef(dir, &mut files);
    files.sort();
    let mut pass = 0usize;
    let mut fail = 0usize;
    let mut metatheory = false;
    for f in &files {
        let display = f.display().to_string();
        let result = match std::fs::read_to_string(f) {
            Ok(src) => run_case(&display, &src, cfg),
            Err(e) => CaseResult {
                path: display.clone(),
                expected: "<readable file>".into(),
                actual: format!("io error: {e}"),
                pass: false,
                metatheory_violation: false,
            },
        };
        metatheory |= result.metatheory_violation;
        if result.pass {
            pass += 1;
        } else {
            fail += 1;
        }
        match cfg.format {
            Format::Human => {
                let mark = if result.pass { "ok" } else { "FAIL" };
                let _ = writeln!(out, "{mark:4} {}: expected [{}]", result.path, result.expected);
                if !result.pass {
                    let _ = writeln!(out, "     got      [{}]", result.actual);
                }
            }
            Format::Json => {
                let _ = writeln!(
                    out,
                    "{{\"path\":\"{}\",\"expected\":\"{}\",\"actual\":\"{}\",\"pass\":{}}}",
                    json_escape(&result.path),
                    json_escape(&result.expected),
                    json_escape(&result.actual),
                    result.pass
                );
            }
        }
    }
    if cfg.format == Format::Human {
        let _ = writeln!(out, "{pass} passed, {fail} failed, {} total", pass + fail);
    }
    if metatheory {
        EXIT_METATHEORY
    } else if fail > 0 {
        EXIT_FAIL
    } else {
        EXIT_OK
    }
}
