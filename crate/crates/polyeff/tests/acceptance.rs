//! Acceptance suite. Each test is one criterion, checked at its stated
//! tolerance and reported with one pass line. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use polyeff::eval::{Evaluator, Outcome, TraceMode, DEFAULT_FUEL};
use polyeff::infer::{build_sigs, check_program, Checked, Options};
use polyeff::ir::pretty_value;
use polyeff::ir_check;
use polyeff::parser::parse_program;
use polyeff::syntax::{Base, NameGen, SigTable, Ty};
use std::path::PathBuf;
use std::process::Command;

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

fn check_src(src: &str, opts: Options) -> Result<(Checked, SigTable, NameGen), String> {
    let prog = parse_program(src).map_err(|e| format!("{e:?}"))?;
    let sigs = build_sigs(&prog).map_err(|e| e.to_string())?;
    let (checked, gen) = check_program(&prog, &sigs, opts).map_err(|e| e.to_string())?;
    Ok((checked, sigs, gen))
}

fn check_file(path: &PathBuf) -> Result<(Checked, SigTable, NameGen), String> {
    let src = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    check_src(&src, Options::default())
}

const COUNTEREXAMPLE: &str = "effect get_id : forall a . unit => (a -> a) ;;\n\
    handle (let g = #get_id(()) in if g true then g 0 + 1 else 2) with\n\
    { return x -> x ; get_id(y) -> resume (fun z1 -> (resume (fun z2 -> z1)); z1) }";

#[test]
fn c01_choose_evaluates_to_eleven() {
    let path = corpus_dir().join("eval").join("choose_first.pef");
    let (checked, sigs, gen) = check_file(&path).expect("accepted");
    let mut ev = Evaluator::new(&sigs, gen);
    let r = ev.run(&checked.ir, DEFAULT_FUEL, true, TraceMode::Off);
    assert!(r.check_failure.is_none());
    match &r.outcome {
        Outcome::Value(v) => {
            assert_eq!(pretty_value(v), "11");
            assert_eq!(checked.ty, Ty::Base(Base::Int));
        }
        other => panic!("expected a value, got: {}", other.describe()),
    }
    assert!(r.stats.steps <= 200, "took {} steps", r.stats.steps);
    println!(
        "criterion  1 (choose evaluates to 11 : int in {} steps): PASS",
        r.stats.steps
    );
}

#[test]
fn c02_counterexample_rejected_with_ts_resume() {
    // through the real binary, as a user would see it
    let path = corpus_dir().join("reject").join("counterexample.pef");
    let out = Command::new(env!("CARGO_BIN_EXE_polyeff"))
        .args(["check", path.to_str().unwrap()])
        .output()
        .expect("spawn");
    assert!(!out.status.success(), "the counterexample must be rejected");
    let text = String::from_utf8_lossy(&out.stdout).to_string()
        + &String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("TS-Resume"), "diagnostic was: {text}");
    println!("criterion  2 (interfering counterexample rejected, TS-Resume blamed): PASS");
}

#[test]
fn c03_safe_get_id_runs_to_one() {
    let path = corpus_dir().join("eval").join("getid_safe.pef");
    let (checked, sigs, gen) = check_file(&path).expect("accepted");
    let mut ev = Evaluator::new(&sigs, gen);
    let r = ev.run(&checked.ir, DEFAULT_FUEL, true, TraceMode::Off);
    assert!(r.check_failure.is_none());
    match &r.outcome {
        Outcome::Value(v) => assert_eq!(pretty_value(v), "1"),
        other => panic!("expected a value, got: {}", other.describe()),
    }
    println!("criterion  3 (safe get_id handler returns 1): PASS");
}

#[test]
fn c04_non_interfering_nested_resume_accepted() {
    let src = "effect get_id : forall a . unit => (a -> a) ;;\n\
        handle (let g = #get_id(()) in if g true then g 0 + 1 else 2) with\n\
        { return x -> x ; get_id(y) -> resume (fun z1 -> (resume (fun z2 -> z2)); z1) }";
    check_src(src, Options::default()).expect("the non-interfering clause typechecks");
    println!("criterion  4 (non-interfering nested resumption accepted): PASS");
}

#[test]
fn c05_remark_pair_on_let_placement() {
    let rejected = "effect choose : forall a . (a * a) => a ;;\n\
        handle #choose((1, 2)) with { return x -> x ; choose(y) -> let z = fst y in resume z }";
    let err = check_src(rejected, Options::default())
        .expect_err("let outside resume must be rejected");
    assert!(err.contains("TS-Resume"), "got: {err}");
    let accepted = "effect choose : forall a . (a * a) => a ;;\n\
        handle #choose((1, 2)) with { return x -> x ; choose(y) -> resume (let z = fst y in z) }";
    check_src(accepted, Options::default()).expect("let inside resume is accepted");
    println!("criterion  5 (let placement around resume: reject outside, accept inside): PASS");
}

#[test]
fn c06_exception_adaptation_div100() {
    for (file, want) in [("div100_five.pef", "(true, 20)"), ("div100_zero.pef", "(false, 0)")] {
        let path = corpus_dir().join("eval").join(file);
        let (checked, sigs, gen) = check_file(&path).expect("accepted");
        let mut ev = Evaluator::new(&sigs, gen);
        let r = ev.run(&checked.ir, DEFAULT_FUEL, true, TraceMode::Off);
        assert!(r.check_failure.is_none());
        match &r.outcome {
            Outcome::Value(v) => assert_eq!(pretty_value(v), want, "{file}"),
            other => panic!("{file}: expected a value, got: {}", other.describe()),
        }
    }
    println!("criterion  6 (div100 returns (true, 20) and (false, 0)): PASS");
}

#[test]
fn c07_elaboration_is_type_preserving_over_the_corpus() {
    let mut strict = 0;
    let mut total = 0;
    for path in corpus_files("accept").into_iter().chain(corpus_files("eval")) {
        let (checked, sigs, _) = check_file(&path)
            .unwrap_or_else(|e| panic!("{}: rejected: {e}", path.display()));
        let (ty, eff) = ir_check::typecheck(&sigs, &checked.ir)
            .unwrap_or_else(|e| panic!("{}: elaboration ill typed: {e}", path.display()));
        assert_eq!(ty, checked.ty, "{}", path.display());
        assert!(eff.subset_of(&checked.eff), "{}", path.display());
        total += 1;
        // programs with no residual effect must check at the empty effect
        if checked.eff.is_empty() {
            assert!(eff.is_empty(), "{}", path.display());
            strict += 1;
        }
    }
    assert!(strict >= 15, "only {strict} corpus programs check at the empty effect");
    println!(
        "criterion  7 (elaboration type-preserving on {total}/{total} accepted programs, \
         {strict} at the empty effect): PASS"
    );
}

#[test]
fn c08_subject_reduction_and_progress_over_the_corpus() {
    let mut programs = 0;
    let mut steps = 0;
    for path in corpus_files("eval").into_iter().chain(corpus_files("accept")) {
        let (checked, sigs, gen) = check_file(&path).expect("accepted");
        let mut ev = Evaluator::new(&sigs, gen);
        let r = ev.run(&checked.ir, DEFAULT_FUEL, true, TraceMode::Off);
        assert!(
            r.check_failure.is_none(),
            "{}: step check failed: {:?}",
            path.display(),
            r.check_failure
        );
        match &r.outcome {
            Outcome::Value(_) | Outcome::UnhandledOp { .. } => {}
            other => panic!(
                "{}: normal form is neither a value nor an unhandled operation: {}",
                path.display(),
                other.describe()
            ),
        }
        programs += 1;
        steps += r.stats.checked_steps;
        assert_eq!(r.stats.checked_steps, r.stats.steps);
    }
    assert!(programs >= 10);
    println!(
        "criterion  8 (type preserved and effect shrank across {steps} checked steps \
         in {programs} programs; all normal forms classified): PASS"
    );
}

#[test]
fn c09_bottom_erasure_holds_at_every_handling_step() {
    let mut firings = 0;
    let mut checks = 0;
    for path in corpus_files("eval") {
        let (checked, sigs, gen) = check_file(&path).expect("accepted");
        let mut ev = Evaluator::new(&sigs, gen);
        let r = ev.run(&checked.ir, DEFAULT_FUEL, true, TraceMode::Off);
        if let Outcome::Stuck { reason, .. } = &r.outcome {
            panic!("{}: stuck: {reason}", path.display());
        }
        firings += r.stats.handle_firings;
        checks += r.stats.erasure_checks;
    }
    assert!(firings > 0, "the corpus must exercise handling");
    assert_eq!(
        firings, checks,
        "every handling step checks that no captured variable survives erasure"
    );
    println!("criterion  9 (erasure to ⊥ verified at {checks}/{firings} handling steps): PASS");
}

#[test]
fn c10_unsound_mode_accepts_the_counterexample_and_gets_stuck() {
    let opts = Options { unsound_shared_resume: true };
    let (checked, sigs, gen) =
        check_src(COUNTEREXAMPLE, opts).expect("unsound mode must accept the counterexample");
    // the renaming is load-bearing: without it the elaboration no longer
    // passes the intermediate checker
    assert!(
        ir_check::typecheck(&sigs, &checked.ir).is_err(),
        "the unsound elaboration must fail the oracle"
    );
    let mut ev = Evaluator::new(&sigs, gen);
    let r = ev.run(&checked.ir, DEFAULT_FUEL, false, TraceMode::Off);
    match &r.outcome {
        Outcome::Stuck { reason, .. } => {
            assert!(
                reason.contains("delta undefined on (+, true)"),
                "stuck for the wrong reason: {reason}"
            );
        }
        other => panic!("expected stuck at true + 1, got: {}", other.describe()),
    }
    // sound mode rejects the same program
    assert!(check_src(COUNTEREXAMPLE, Options::default()).is_err());
    println!(
        "criterion 10 (without renaming the counterexample typechecks and then \
         sticks at true + 1): PASS"
    );
}
