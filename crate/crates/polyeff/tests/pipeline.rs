//! Whole-pipeline properties over the shipped corpus: parse/pretty round
//! trips, the elaboration oracle, decomposition consistency, and driver
//! behavior.

use polyeff::cli::{self, Format, RunConfig};
use polyeff::eval::{Evaluator, Outcome, TraceMode, DEFAULT_FUEL};
use polyeff::infer::{build_sigs, check_program, Options};
use polyeff::ir::{print_ir, IrTerm};
use polyeff::ir_check;
use polyeff::parser::{parse_program, pretty_program, term_eq};
use polyeff::syntax::Name;
use std::path::PathBuf;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn corpus_files(sub: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir().join(sub))
        .expect("corpus dir")
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().map(|e| e == "pef").unwrap_or(false))
        .collect();
    v.sort();
    v
}

fn all_corpus_files() -> Vec<PathBuf> {
    let mut v = corpus_files("accept");
    v.extend(corpus_files("eval"));
    v.extend(corpus_files("reject"));
    v.sort();
    v
}

#[test]
fn corpus_programs_round_trip_through_the_pretty_printer() {
    let mut count = 0;
    for path in all_corpus_files() {
        let src = std::fs::read_to_string(&path).unwrap();
        let Ok(p1) = parse_program(&src) else {
            continue; // some reject cases fail at parse time by design
        };
        let printed = pretty_program(&p1);
        let p2 = parse_program(&printed)
            .unwrap_or_else(|e| panic!("{}: reparse failed: {e:?}\n{printed}", path.display()));
        assert!(
            term_eq(&p1.main, &p2.main),
            "{}: pretty-printing changed the program\n{printed}",
            path.display()
        );
        assert_eq!(p1.sigs.len(), p2.sigs.len());
        for (a, b) in p1.sigs.iter().zip(&p2.sigs) {
            assert_eq!(a.op, b.op);
            assert_eq!(a.bound, b.bound);
            assert_eq!(a.dom, b.dom);
            assert_eq!(a.cod, b.cod);
        }
        count += 1;
    }
    assert!(count >= 20, "round-tripped only {count} programs");
}

#[test]
fn elaboration_passes_the_intermediate_checker_on_every_accepted_program() {
    let mut accepted = 0;
    for path in corpus_files("accept").into_iter().chain(corpus_files("eval")) {
        let src = std::fs::read_to_string(&path).unwrap();
        let prog = parse_program(&src).unwrap();
        let sigs = build_sigs(&prog).unwrap();
        let (checked, _) = check_program(&prog, &sigs, Options::default())
            .unwrap_or_else(|e| panic!("{}: rejected: {e}", path.display()));
        let (ty, eff) = ir_check::typecheck(&sigs, &checked.ir)
            .unwrap_or_else(|e| panic!("{}: elaboration ill typed: {e}", path.display()));
        assert_eq!(ty, checked.ty, "{}: type changed by elaboration", path.display());
        assert!(
            eff.subset_of(&checked.eff),
            "{}: elaboration grew the effect: {} vs {}",
            path.display(),
            eff,
            checked.eff
        );
        accepted += 1;
    }
    assert!(accepted >= 15, "only {accepted} accepted corpus programs");
}

#[test]
fn elaboration_goldens() {
    let cases = [
        (";; fun x -> x", "(lam x%0 : bot -> bot . (var x%0 []))"),
        (
            ";; let id = fun z -> z in id 1",
            "(let id%2 = Λ[t1]. (lam z%0 : t1 -> t1 . (var z%0 [])) : t1 -> t1 in \
             (app (var id%2 [int]) (const 1)))",
        ),
        (
            "effect choose : forall a . (a * a) => a ;;\n\
             handle #choose((1, 2)) + #choose((10, 20)) with { return x -> x ; choose(y) -> resume (fst y) }",
            "(handle (app (app (const +) (op choose [int] (pair (const 1) (const 2)))) \
             (op choose [int] (pair (const 10) (const 20)))) \
             {return x%0 -> (var x%0 []); Λ[a%1].choose(y%2) -> \
             (resume [a%3] y%4. (fst (var y%4 [])))})",
        ),
    ];
    for (src, want) in cases {
        let prog = parse_program(src).unwrap();
        let sigs = build_sigs(&prog).unwrap();
        let (checked, _) = check_program(&prog, &sigs, Options::default()).unwrap();
        assert_eq!(print_ir(&checked.ir), want, "for program: {src}");
    }
}

#[test]
fn capture_decomposition_is_invertible() {
    // bubble `#fail(()) + 1` to its normal form and rebuild the original
    // term by filling the captured context with the original invocation;
    // nothing reduces before the capture, so the frames preserve the source
    let src = "effect fail : forall a . unit => a ;; #fail(()) + 1";
    let prog = parse_program(src).unwrap();
    let sigs = build_sigs(&prog).unwrap();
    let (checked, gen) = check_program(&prog, &sigs, Options::default()).unwrap();
    let mut ev = Evaluator::new(&sigs, gen);
    let r = ev.run(&checked.ir, DEFAULT_FUEL, false, TraceMode::Off);
    match r.outcome {
        Outcome::UnhandledOp { op, schemes, pv, ctx } => {
            assert_eq!(op, Name::new("fail"));
            assert!(pv.binders.is_empty(), "no let frame was crossed");
            let rebuilt = ctx.plug(IrTerm::OpCall(
                op,
                schemes.iter().map(|s| s.body.clone()).collect(),
                pv.body.clone(),
            ));
            assert_eq!(rebuilt, checked.ir, "plug is the inverse of capture");
        }
        other => panic!("expected an unhandled operation, got {other:?}"),
    }
}

#[test]
fn each_resumption_gets_its_own_renaming() {
    // the two resumptions of the accepted nested clause elaborate with
    // distinct bound variables, and each lambda annotation mentions its own
    let src = std::fs::read_to_string(corpus_dir().join("eval").join("getid_nested_ok.pef"))
        .unwrap();
    let prog = parse_program(&src).unwrap();
    let sigs = build_sigs(&prog).unwrap();
    let (checked, _) = check_program(&prog, &sigs, Options::default()).unwrap();
    let printed = print_ir(&checked.ir);
    let binders: Vec<&str> = printed
        .match_indices("(resume [")
        .map(|(i, _)| {
            let rest = &printed[i + "(resume [".len()..];
            &rest[..rest.find(']').unwrap()]
        })
        .collect();
    assert_eq!(binders.len(), 2, "two resumptions in {printed}");
    assert_ne!(binders[0], binders[1], "renamings must be fresh per resumption");
    for b in &binders {
        assert!(
            printed.contains(&format!(": {b} -> {b} ")),
            "the rebound parameter is used at {b} in {printed}"
        );
    }
}

#[test]
fn parser_never_panics_on_garbage() {
    // deterministic pseudo-random printable soup, plus mutations of a real
    // program; the parser must return diagnostics, never crash
    let mut state: u64 = 0x9e3779b97f4a7c15;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let alphabet: Vec<char> =
        "abcxyz_01 (){};:#*+-=,.<>'\"\\\n\tfunleteffecthandlewithresumeforall".chars().collect();
    for _ in 0..500 {
        let len = (next() % 60) as usize;
        let src: String =
            (0..len).map(|_| alphabet[(next() as usize) % alphabet.len()]).collect();
        let _ = parse_program(&src);
    }
    let base = "effect choose : forall a . (a * a) => a ;;\n\
                handle #choose((1, 2)) with { return x -> x ; choose(y) -> resume (fst y) }";
    for cut in 0..base.len() {
        if base.is_char_boundary(cut) {
            let _ = parse_program(&base[..cut]);
        }
    }
}

#[test]
fn corpus_runner_handles_edge_cases() {
    let cfg = RunConfig::default();
    // empty directory: empty report, success
    let empty = std::env::temp_dir().join("polyeff-empty-corpus");
    let _ = std::fs::create_dir_all(&empty);
    let mut out = Vec::new();
    let code = cli::run_corpus(&empty, &cfg, &mut out);
    assert_eq!(code, 0);
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("0 passed, 0 failed"));

    // a single passing case
    let one = cli::run_case(
        "mem.pef",
        "(* EXPECT: value 3 *)\n;;\n1 + 2",
        &cfg,
    );
    assert!(one.pass, "got: {}", one.actual);

    // a reject case whose program actually typechecks fails with both sides
    let bad = cli::run_case(
        "mem.pef",
        "(* EXPECT: reject TS-App *)\n;;\n1 + 2",
        &cfg,
    );
    assert!(!bad.pass);
    assert!(bad.expected.contains("reject"));
    assert!(bad.actual.contains("accepted"));

    // expectation mismatch on values prints the actual value
    let off = cli::run_case("mem.pef", "(* EXPECT: value 4 *)\n;;\n1 + 2", &cfg);
    assert!(!off.pass);
    assert!(off.actual.contains("value 3"));
}

#[test]
fn json_corpus_output_is_stable_across_runs() {
    let cfg = RunConfig { format: Format::Json, check_steps: true, ..RunConfig::default() };
    let render = || {
        let mut out = Vec::new();
        let code = cli::run_corpus(&corpus_dir(), &cfg, &mut out);
        (code, String::from_utf8(out).unwrap())
    };
    let (c1, a) = render();
    let (c2, b) = render();
    assert_eq!(c1, 0);
    assert_eq!(c2, 0);
    assert_eq!(a, b, "json lines must be identical run to run");
    for line in a.lines() {
        assert!(line.starts_with('{') && line.ends_with('}'), "not a json line: {line}");
        assert!(line.contains("\"pass\":true"), "corpus case failed: {line}");
    }
}

#[test]
fn run_prints_value_and_type() {
    let path = corpus_dir().join("eval").join("choose_first.pef");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_polyeff"))
        .args(["run", path.to_str().unwrap()])
        .output()
        .expect("spawn");
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "11 : int");
}

#[test]
fn fuel_env_var_overrides_the_default_and_flags_override_it() {
    let path = corpus_dir().join("eval").join("choose_first.pef");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_polyeff"))
        .args(["run", path.to_str().unwrap()])
        .env("POLYEFF_FUEL", "1")
        .output()
        .expect("spawn");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("fuel exhausted"));
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_polyeff"))
        .args(["run", path.to_str().unwrap(), "--fuel", "500"])
        .env("POLYEFF_FUEL", "1")
        .output()
        .expect("spawn");
    assert!(out.status.success(), "the flag wins over the environment");
}

#[test]
fn cli_usage_errors_exit_with_code_two() {
    let mut out = Vec::new();
    let code = cli::main_with(&["frobnicate".to_string()], &mut out);
    assert_eq!(code, 2);
    let code = cli::main_with(&["run".to_string()], &mut out);
    assert_eq!(code, 2);
    let code = cli::main_with(
        &["run".to_string(), "x.pef".to_string(), "--fuel".to_string(), "0".to_string()],
        &mut out,
    );
    assert_eq!(code, 2);
}

#[test]
fn step_checking_an_unsound_run_exits_with_the_metatheory_code() {
    // without the renaming the elaboration is ill typed, so checked
    // evaluation reports a violation before the first step
    let path = corpus_dir().join("reject").join("counterexample.pef");
    let mut out = Vec::new();
    let code = cli::main_with(
        &[
            "run".to_string(),
            path.to_string_lossy().to_string(),
            "--unsound-resume".to_string(),
            "--check-steps".to_string(),
        ],
        &mut out,
    );
    assert_eq!(code, 3);
    assert!(String::from_utf8(out).unwrap().contains("metatheory violation"));
}

#[test]
fn unsound_flag_skips_renaming_end_to_end() {
    let counterexample = corpus_dir().join("reject").join("counterexample.pef");
    let path = counterexample.to_string_lossy().to_string();
    // sound: rejected
    let mut out = Vec::new();
    let code = cli::main_with(&["check".to_string(), path.clone()], &mut out);
    assert_eq!(code, 1);
    assert!(String::from_utf8(out).unwrap().contains("TS-Resume"));
    // unsound: accepted, then stuck at true + 1
    let mut out = Vec::new();
    let code = cli::main_with(
        &["run".to_string(), path, "--unsound-resume".to_string()],
        &mut out,
    );
    assert_eq!(code, 1);
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("stuck"), "got: {text}");
    assert!(text.contains("delta undefined on (+, true)"), "got: {text}");
}
