//! Small-step evaluator for the intermediate language.
//!
//! Continuation capture is implemented literally as the bubbling rewrite
//! rules: an invocation wraps itself in an empty context and swallows one
//! surrounding frame per step until it meets a handler for its operation.
//! The let-capture step keeps the binder bookkeeping explicit: the let's
//! type binders are prepended to every captured scheme and to the captured
//! value. Handling performs the three substitutions in order: continuation
//! substitution into the clause body, then the type instantiation with the
//! captured variables erased to ⊥, then the value substitution.

use crate::ir::*;
use crate::ir_check;
use crate::syntax::*;

/// Where evaluation ended.
#[derive(Clone, Debug)]
pub enum Outcome {
    Value(IrTerm),
    UnhandledOp {
        op: Name,
        schemes: Vec<Scheme>,
        pv: PolyValue,
        ctx: EvalCtx,
    },
    Stuck {
        reason: String,
        term: IrTerm,
    },
    FuelExhausted(IrTerm),
}

impl Outcome {
    pub fn describe(&self) -> String {
        match self {
            Outcome::Value(v) => format!("value {}", pretty_value(v)),
            Outcome::UnhandledOp { op, .. } => format!("unhandled operation {op}"),
            Outcome::Stuck { reason, .. } => format!("stuck: {reason}"),
            Outcome::FuelExhausted(_) => "fuel exhausted".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceMode {
    #[default]
    Off,
    Capped,
    Full,
}

pub const DEFAULT_FUEL: usize = 100_000;
const TRACE_CAP: usize = 10_000;
const SNIPPET_LEN: usize = 200;

/// One line per step: the rule that fired and a snapshot of the term.
#[derive(Clone, Debug, Default)]
pub struct StepTrace {
    pub entries: Vec<(&'static str, String)>,
    pub truncated: bool,
}

impl StepTrace {
    fn record(&mut self, mode: TraceMode, rule: &'static str, term: &IrTerm) {
        match mode {
            TraceMode::Off => {}
            TraceMode::Capped => {
                if self.entries.len() >= TRACE_CAP {
                    self.truncated = true;
                    return;
                }
                let mut s = print_ir(term);
                if s.chars().count() > SNIPPET_LEN {
                    s = s.chars().take(SNIPPET_LEN).collect::<String>() + "…";
                }
                self.entries.push((rule, s));
            }
            TraceMode::Full => self.entries.push((rule, print_ir(term))),
        }
    }
}

/// A violated run-time oracle: the step that broke preservation, progress
/// or the erasure property, with both sides for the report.
#[derive(Clone, Debug)]
pub struct StepCheckFailure {
    pub step: usize,
    pub rule: String,
    pub before: String,
    pub after: String,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct RunStats {
    pub steps: usize,
    pub handle_firings: usize,
    pub erasure_checks: usize,
    pub checked_steps: usize,
}

#[derive(Debug)]
pub struct RunOutput {
    pub outcome: Outcome,
    pub trace: StepTrace,
    pub stats: RunStats,
    pub check_failure: Option<StepCheckFailure>,
}

enum Step {
    Did(IrTerm, &'static str),
    Value,
    Op,
    Stuck(String),
}

pub struct Evaluator<'a> {
    sigs: &'a SigTable,
    gen: NameGen,
    erasure_checks: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(sigs: &'a SigTable, gen: NameGen) -> Evaluator<'a> {
        Evaluator { sigs, gen, erasure_checks: 0 }
    }

    /// Reduce a redex at the root. Returns `None` when no rule applies.
    pub fn reduce(&mut self, e: &IrTerm) -> Option<(IrTerm, &'static str)> {
        match self.reduce_step(e) {
            Step::Did(t, rule) => Some((t, rule)),
            _ => None,
        }
    }

    fn reduce_step(&mut self, e: &IrTerm) -> Step {
        match e {
            IrTerm::App(f, a) => match &**f {
                IrTerm::OpCont { op, schemes, pv, ctx } => Step::Did(
                    IrTerm::OpCont {
                        op: op.clone(),
                        schemes: schemes.clone(),
                        pv: pv.clone(),
                        ctx: ctx.extend_outer(Frame::AppL((**a).clone())),
                    },
                    "R-OpApp1",
                ),
                v1 if v1.is_value() => match &**a {
                    IrTerm::OpCont { op, schemes, pv, ctx } => Step::Did(
                        IrTerm::OpCont {
                            op: op.clone(),
                            schemes: schemes.clone(),
                            pv: pv.clone(),
                            ctx: ctx.extend_outer(Frame::AppR(v1.clone())),
                        },
                        "R-OpApp2",
                    ),
                    v2 if v2.is_value() => self.reduce_app(v1, v2),
                    _ => Step::Stuck("no reduction applies".to_string()),
                },
                _ => Step::Stuck("no reduction applies".to_string()),
            },
            IrTerm::Let { name, binders, annot, bound, body } => match &**bound {
                v if v.is_value() => Step::Did(
                    subst_val(
                        body,
                        name,
                        &PolyValue { binders: binders.clone(), body: Box::new(v.clone()) },
                        &mut self.gen,
                    ),
                    "R-Let",
                ),
                IrTerm::OpCont { op, schemes, pv, ctx } => {
                    let schemes = schemes
                        .iter()
                        .map(|s| {
                            let mut bound = binders.clone();
                            bound.extend(s.bound.iter().cloned());
                            Scheme { bound, body: s.body.clone() }
                        })
                        .collect();
                    let mut pv_binders = binders.clone();
                    pv_binders.extend(pv.binders.iter().cloned());
                    Step::Did(
                        IrTerm::OpCont {
                            op: op.clone(),
                            schemes,
                            pv: PolyValue { binders: pv_binders, body: pv.body.clone() },
                            ctx: ctx.extend_outer(Frame::Let {
                                name: name.clone(),
                                binders: binders.clone(),
                                annot: annot.clone(),
                                body: (**body).clone(),
                            }),
                        },
                        "R-OpLet",
                    )
                }
                _ => Step::Stuck("no reduction applies".to_string()),
            },
            IrTerm::OpCall(op, tys, arg) => match &**arg {
                v if v.is_value() => Step::Did(
                    IrTerm::OpCont {
                        op: op.clone(),
                        schemes: tys.iter().cloned().map(Scheme::mono).collect(),
                        pv: PolyValue { binders: Vec::new(), body: Box::new(v.clone()) },
                        ctx: EvalCtx::hole(),
                    },
                    "R-Op",
                ),
                IrTerm::OpCont { op: inner, schemes, pv, ctx } => Step::Did(
                    IrTerm::OpCont {
                        op: inner.clone(),
                        schemes: schemes.clone(),
                        pv: pv.clone(),
                        ctx: ctx.extend_outer(Frame::OpArg(op.clone(), tys.clone())),
                    },
                    "R-OpOp",
                ),
                _ => Step::Stuck("no reduction applies".to_string()),
            },
            IrTerm::Handle(scrut, h) => match &**scrut {
                v if v.is_value() => Step::Did(
                    subst_val(
                        &h.ret_body,
                        &h.ret_var,
                        &PolyValue { binders: Vec::new(), body: Box::new(v.clone()) },
                        &mut self.gen,
                    ),
                    "R-Return",
                ),
                IrTerm::OpCont { op, schemes, pv, ctx } => {
                    if h.ops().contains(op) {
                        self.reduce_handle(op, schemes, pv, ctx, h)
                    } else {
                        Step::Did(
                            IrTerm::OpCont {
                                op: op.clone(),
                                schemes: schemes.clone(),
                                pv: pv.clone(),
                                ctx: ctx.extend_outer(Frame::Handle(h.clone())),
                            },
                            "R-OpHandle",
                        )
                    }
                }
                _ => Step::Stuck("no reduction applies".to_string()),
            },
            IrTerm::Pair(l, r) => match &**l {
                IrTerm::OpCont { op, schemes, pv, ctx } => Step::Did(
                    IrTerm::OpCont {
                        op: op.clone(),
                        schemes: schemes.clone(),
                        pv: pv.clone(),
                        ctx: ctx.extend_outer(Frame::PairL((**r).clone())),
                    },
                    "R-OpPair1",
                ),
                v1 if v1.is_value() => match &**r {
                    IrTerm::OpCont { op, schemes, pv, ctx } => Step::Did(
                        IrTerm::OpCont {
                            op: op.clone(),
                            schemes: schemes.clone(),
                            pv: pv.clone(),
                            ctx: ctx.extend_outer(Frame::PairR(v1.clone())),
                        },
                        "R-OpPair2",
                    ),
                    _ => Step::Stuck("no reduction applies".to_string()),
                },
                _ => Step::Stuck("no reduction applies".to_string()),
            },
            IrTerm::Proj(ix, inner) => match &**inner {
                IrTerm::OpCont { op, schemes, pv, ctx } => Step::Did(
                    IrTerm::OpCont {
                        op: op.clone(),
                        schemes: schemes.clone(),
                        pv: pv.clone(),
                        ctx: ctx.extend_outer(Frame::Proj(*ix)),
                    },
                    "R-OpProj",
                ),
                IrTerm::Pair(l, r) if inner.is_value() => Step::Did(
                    match ix {
                        ProjIx::Fst => (**l).clone(),
                        ProjIx::Snd => (**r).clone(),
                    },
                    "R-Proj",
                ),
                v if v.is_value() => {
                    Step::Stuck("projection from a non-pair value".to_string())
                }
                _ => Step::Stuck("no reduction applies".to_string()),
            },
            IrTerm::If(c, a, b) => match &**c {
                IrTerm::OpCont { op, schemes, pv, ctx } => Step::Did(
                    IrTerm::OpCont {
                        op: op.clone(),
                        schemes: schemes.clone(),
                        pv: pv.clone(),
                        ctx: ctx.extend_outer(Frame::If((**a).clone(), (**b).clone())),
                    },
                    "R-OpIf",
                ),
                IrTerm::Const(Const::Bool(true)) => Step::Did((**a).clone(), "R-IfTrue"),
                IrTerm::Const(Const::Bool(false)) => Step::Did((**b).clone(), "R-IfFalse"),
                v if v.is_value() => Step::Stuck("if on a non-boolean value".to_string()),
                _ => Step::Stuck("no reduction applies".to_string()),
            },
            _ => Step::Stuck("no reduction applies".to_string()),
        }
    }

    fn reduce_app(&mut self, f: &IrTerm, a: &IrTerm) -> Step {
        match f {
            IrTerm::Abs(x, _, body) => Step::Did(
                subst_val(
                    body,
                    x,
                    &PolyValue { binders: Vec::new(), body: Box::new(a.clone()) },
                    &mut self.gen,
                ),
                "R-Beta",
            ),
            IrTerm::Const(c1) => match a {
                IrTerm::Const(c2) => match delta(c1, c2) {
                    Some(c) => Step::Did(IrTerm::Const(c), "R-Const"),
                    None => Step::Stuck(format!("delta undefined on ({c1}, {c2})")),
                },
                _ => Step::Stuck(format!("constant {c1} applied to a non-constant")),
            },
            _ => Step::Stuck("applying a non-function value".to_string()),
        }
    }

    /// The handling step: continuation substitution with the handler
    /// re-wrapped around the captured context (deep handlers), then erasure
    /// of the captured type variables to ⊥ in the instantiation types and
    /// the argument value, substituted for the clause binders and parameter.
    fn reduce_handle(
        &mut self,
        op: &Name,
        schemes: &[Scheme],
        pv: &PolyValue,
        ctx: &EvalCtx,
        h: &IrHandler,
    ) -> Step {
        let clause = h.clause(op).expect("clause present").clone();
        let Some(sig) = self.sigs.lookup(op) else {
            return Step::Stuck(format!("operation {op} has no signature"));
        };
        let captured = pv.binders.clone();
        if ctx.binders() != captured || schemes.iter().any(|s| s.bound != captured) {
            return Step::Stuck(format!(
                "R-Handle: captured binders for {op} lost synchronization"
            ));
        }
        if clause.binders.len() != schemes.len() {
            return Step::Stuck(format!("R-Handle: clause arity mismatch for {op}"));
        }
        let bodies: Vec<Ty> = schemes.iter().map(|s| s.body.clone()).collect();
        let sig_pairs: Vec<(Name, Ty)> =
            sig.bound.iter().cloned().zip(bodies.iter().cloned()).collect();
        let result_ty = sig.cod.subst(&sig_pairs);

        let wrapped = ctx.extend_outer(Frame::Handle(h.clone()));
        let cs = ContSubst {
            ctx: &wrapped,
            binders: &captured,
            scheme_bodies: &bodies,
            value: &pv.body,
            result_ty: &result_ty,
        };
        let substituted = cs.apply(&clause.body, &mut self.gen);

        // erase the captured variables to ⊥
        let bot: Vec<(Name, Ty)> =
            captured.iter().map(|b| (b.clone(), Ty::Base(Base::Bot))).collect();
        let erased_tys: Vec<Ty> = bodies.iter().map(|t| t.subst(&bot)).collect();
        let erased_val = subst_ty_term(&pv.body, &bot);
        self.erasure_checks += 1;
        let leaked = erased_tys
            .iter()
            .flat_map(|t| t.ftv())
            .chain(erased_val.ftv())
            .find(|a| captured.contains(a));
        if let Some(a) = leaked {
            return Step::Stuck(format!(
                "R-Handle: erasure failed, captured variable {a} survives"
            ));
        }

        let ty_pairs: Vec<(Name, Ty)> =
            clause.binders.iter().cloned().zip(erased_tys).collect();
        let instantiated = subst_ty_term(&substituted, &ty_pairs);
        let finished = subst_val(
            &instantiated,
            &clause.param,
            &PolyValue { binders: Vec::new(), body: Box::new(erased_val) },
            &mut self.gen,
        );
        Step::Did(finished, "R-Handle")
    }

    /// One evaluation step: unique leftmost-innermost decomposition, with
    /// the bubbling rules deciding how capture states move outward.
    fn step(&mut self, e: &IrTerm) -> Step {
        match e {
            IrTerm::Const(_) | IrTerm::Abs(..) => Step::Value,
            IrTerm::OpCont { .. } => Step::Op,
            IrTerm::Var(x, _) => Step::Stuck(format!("free variable {x}")),
            IrTerm::Resume { .. } => {
                Step::Stuck("resumption outside any operation clause".to_string())
            }
            IrTerm::App(f, a) => match self.step(f) {
                Step::Did(f2, rule) => {
                    Step::Did(IrTerm::App(Box::new(f2), a.clone()), rule)
                }
                Step::Op => self.reduce_step(e),
                Step::Value => match self.step(a) {
                    Step::Did(a2, rule) => {
                        Step::Did(IrTerm::App(f.clone(), Box::new(a2)), rule)
                    }
                    Step::Op | Step::Value => self.reduce_step(e),
                    stuck => stuck,
                },
                stuck => stuck,
            },
            IrTerm::Let { name, binders, annot, bound, body } => match self.step(bound) {
                Step::Did(b2, rule) => Step::Did(
                    IrTerm::Let {
                        name: name.clone(),
                        binders: binders.clone(),
                        annot: annot.clone(),
                        bound: Box::new(b2),
                        body: body.clone(),
                    },
                    rule,
                ),
                Step::Op | Step::Value => self.reduce_step(e),
                stuck => stuck,
            },
            IrTerm::OpCall(op, tys, arg) => match self.step(arg) {
                Step::Did(a2, rule) => {
                    Step::Did(IrTerm::OpCall(op.clone(), tys.clone(), Box::new(a2)), rule)
                }
                Step::Op | Step::Value => self.reduce_step(e),
                stuck => stuck,
            },
            IrTerm::Handle(scrut, h) => match self.step(scrut) {
                Step::Did(s2, rule) => {
                    Step::Did(IrTerm::Handle(Box::new(s2), h.clone()), rule)
                }
                Step::Op | Step::Value => self.reduce_step(e),
                stuck => stuck,
            },
            IrTerm::Pair(l, r) => match self.step(l) {
                Step::Did(l2, rule) => {
                    Step::Did(IrTerm::Pair(Box::new(l2), r.clone()), rule)
                }
                Step::Op => self.reduce_step(e),
                Step::Value => match self.step(r) {
                    Step::Did(r2, rule) => {
                        Step::Did(IrTerm::Pair(l.clone(), Box::new(r2)), rule)
                    }
                    Step::Op => self.reduce_step(e),
                    Step::Value => Step::Value,
                    stuck => stuck,
                },
                stuck => stuck,
            },
            IrTerm::Proj(ix, inner) => match self.step(inner) {
                Step::Did(i2, rule) => Step::Did(IrTerm::Proj(*ix, Box::new(i2)), rule),
                Step::Op | Step::Value => self.reduce_step(e),
                stuck => stuck,
            },
            IrTerm::If(c, a, b) => match self.step(c) {
                Step::Did(c2, rule) => Step::Did(
                    IrTerm::If(Box::new(c2), a.clone(), b.clone()),
                    rule,
                ),
                Step::Op | Step::Value => self.reduce_step(e),
                stuck => stuck,
            },
        }
    }

    /// Public single-step view: the next term and the rule that produced it.
    pub fn step_once(&mut self, e: &IrTerm) -> Option<(IrTerm, &'static str)> {
        match self.step(e) {
            Step::Did(t, rule) => Some((t, rule)),
            _ => None,
        }
    }

    /// Iterate steps up to `fuel`, optionally typechecking after every step
    /// and asserting preservation of the type and shrinkage of the effect.
    pub fn run(&mut self, e: &IrTerm, fuel: usize, check_steps: bool, trace: TraceMode) -> RunOutput {
        let mut stats = RunStats::default();
        let mut trace_out = StepTrace::default();
        let mut cur = e.clone();
        let mut tracked: Option<(Ty, Effect)> = None;

        if check_steps {
            match ir_check::typecheck(self.sigs, &cur) {
                Ok(te) => tracked = Some(te),
                Err(err) => {
                    return RunOutput {
                        outcome: Outcome::Stuck {
                            reason: "initial term is ill typed".to_string(),
                            term: cur.clone(),
                        },
                        trace: trace_out,
                        stats,
                        check_failure: Some(StepCheckFailure {
                            step: 0,
                            rule: "initial".to_string(),
                            before: print_ir(&cur),
                            after: String::new(),
                            detail: err.to_string(),
                        }),
                    }
                }
            }
        }

        for _ in 0..fuel {
            match self.step(&cur) {
                Step::Value => {
                    stats.erasure_checks = self.erasure_checks;
                    return RunOutput {
                        outcome: Outcome::Value(cur),
                        trace: trace_out,
                        stats,
                        check_failure: None,
                    };
                }
                Step::Op => {
                    stats.erasure_checks = self.erasure_checks;
                    let IrTerm::OpCont { op, schemes, pv, ctx } = cur else {
                        unreachable!()
                    };
                    return RunOutput {
                        outcome: Outcome::UnhandledOp { op, schemes, pv, ctx },
                        trace: trace_out,
                        stats,
                        check_failure: None,
                    };
                }
                Step::Stuck(reason) => {
                    stats.erasure_checks = self.erasure_checks;
                    return RunOutput {
                        outcome: Outcome::Stuck { reason, term: cur },
                        trace: trace_out,
                        stats,
                        check_failure: None,
                    };
                }
                Step::Did(next, rule) => {
                    stats.steps += 1;
                    if rule == "R-Handle" {
                        stats.handle_firings += 1;
                    }
                    trace_out.record(trace, rule, &next);
                    if let Some((ty, eff)) = &tracked {
                        stats.checked_steps += 1;
                        match ir_check::typecheck(self.sigs, &next) {
                            Ok((ty2, eff2)) => {
                                if &ty2 != ty {
                                    return self.check_failed(
                                        stats, trace_out, cur, next, rule,
                                        format!(
                                            "type not preserved: {} became {}",
                                            crate::parser::pretty_ty(ty),
                                            crate::parser::pretty_ty(&ty2)
                                        ),
                                    );
                                }
                                if !eff2.subset_of(eff) {
                                    return self.check_failed(
                                        stats, trace_out, cur, next, rule,
                                        format!("effect grew: {eff} became {eff2}"),
                                    );
                                }
                                tracked = Some((ty2, eff2));
                            }
                            Err(err) => {
                                return self.check_failed(
                                    stats, trace_out, cur, next, rule,
                                    format!("term became ill typed: {err}"),
                                );
                            }
                        }
                    }
                    cur = next;
                }
            }
        }
        stats.erasure_checks = self.erasure_checks;
        RunOutput {
            outcome: Outcome::FuelExhausted(cur),
            trace: trace_out,
            stats,
            check_failure: None,
        }
    }

    fn check_failed(
        &self,
        mut stats: RunStats,
        trace: StepTrace,
        before: IrTerm,
        after: IrTerm,
        rule: &'static str,
        detail: String,
    ) -> RunOutput {
        stats.erasure_checks = self.erasure_checks;
        let failure = StepCheckFailure {
            step: stats.steps,
            rule: rule.to_string(),
            before: print_ir(&before),
            after: print_ir(&after),
            detail: detail.clone(),
        };
        RunOutput {
            outcome: Outcome::Stuck {
                reason: format!("metatheory violation: {detail}"),
                term: after,
            },
            trace,
            stats,
            check_failure: Some(failure),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::{build_sigs, check_program, Options};
    use crate::parser::parse_program;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    fn prepare(src: &str) -> (SigTable, crate::infer::Checked, NameGen) {
        let prog = parse_program(src).expect("parse");
        let sigs = build_sigs(&prog).expect("sigs");
        let (checked, gen) =
            check_program(&prog, &sigs, Options::default()).expect("typecheck");
        (sigs, checked, gen)
    }

    #[test]
    fn reduce_beta_and_return() {
        let sigs = SigTable::new();
        let mut ev = Evaluator::new(&sigs, NameGen::new());
        // (λx. x []) 5 reduces to 5
        let e = IrTerm::App(
            Box::new(IrTerm::Abs(
                n("x"),
                Ty::arrow(Ty::Base(Base::Int), Eff::empty(), Ty::Base(Base::Int)),
                Box::new(IrTerm::var0(n("x"))),
            )),
            Box::new(IrTerm::Const(Const::Int(5))),
        );
        let (r, rule) = ev.reduce(&e).expect("reduces");
        assert_eq!(rule, "R-Beta");
        assert_eq!(r, IrTerm::Const(Const::Int(5)));
        // handle 5 with { return x -> x [] + 1 } lands in the return clause
        let plus_one = IrTerm::App(
            Box::new(IrTerm::App(
                Box::new(IrTerm::Const(Const::Add)),
                Box::new(IrTerm::var0(n("x"))),
            )),
            Box::new(IrTerm::Const(Const::Int(1))),
        );
        let e = IrTerm::Handle(
            Box::new(IrTerm::Const(Const::Int(5))),
            IrHandler { ret_var: n("x"), ret_body: Box::new(plus_one), clauses: vec![] },
        );
        let (r, rule) = ev.reduce(&e).expect("reduces");
        assert_eq!(rule, "R-Return");
        // the residual `5 + 1` is not a root redex; the context search finds it
        assert!(ev.reduce(&r).is_none());
        let (r2, rule2) = ev.step_once(&r).expect("then R-Const inside");
        assert_eq!(rule2, "R-Const");
        assert_eq!(ev.step_once(&r2).map(|p| p.1), Some("R-Const"));
    }

    #[test]
    fn step_is_leftmost_innermost() {
        // (1 + 2) + (3 + 4): the first step happens in the left summand
        let (sigs, checked, gen) = prepare(";; (1 + 2) + (3 + 4)");
        let mut ev = Evaluator::new(&sigs, gen);
        let (next, rule) = ev.step_once(&checked.ir).expect("steps");
        assert_eq!(rule, "R-Const");
        // the right summand is untouched
        match &next {
            IrTerm::App(f, right) => {
                assert!(matches!(&**right, IrTerm::App(..)));
                match &**f {
                    IrTerm::App(_, left) => match &**left {
                        IrTerm::App(inner, _) => {
                            assert_eq!(**inner, IrTerm::Const(Const::Add1(1)))
                        }
                        other => panic!("unexpected {other:?}"),
                    },
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
        // values do not step
        assert!(ev.step_once(&IrTerm::Const(Const::Int(7))).is_none());
        // a top-level capture state is a normal form
        let opcont = IrTerm::OpCont {
            op: n("fail"),
            schemes: vec![Scheme::mono(Ty::Base(Base::Int))],
            pv: PolyValue { binders: vec![], body: Box::new(IrTerm::Const(Const::Unit)) },
            ctx: EvalCtx::hole(),
        };
        assert!(ev.step_once(&opcont).is_none());
    }

    #[test]
    fn unhandled_operation_is_a_normal_form() {
        let (sigs, checked, gen) =
            prepare("effect fail : forall a . unit => a ;; 1 + #fail(())");
        let mut ev = Evaluator::new(&sigs, gen);
        let r = ev.run(&checked.ir, 100, true, TraceMode::Off);
        match r.outcome {
            Outcome::UnhandledOp { op, ref ctx, .. } => {
                assert_eq!(op, n("fail"));
                assert!(!ctx.frames.is_empty(), "the addition frame is captured");
            }
            other => panic!("expected an unhandled operation, got {other:?}"),
        }
        assert!(r.check_failure.is_none());
    }

    #[test]
    fn fuel_exhaustion_and_monotonicity() {
        let src = "effect choose : forall a . (a * a) => a ;;\n\
                   handle #choose((1, 2)) + #choose((10, 20)) with { return x -> x ; choose(y) -> resume (fst y) }";
        let (sigs, checked, gen) = prepare(src);
        let mut ev = Evaluator::new(&sigs, gen);
        let r = ev.run(&checked.ir, 3, false, TraceMode::Off);
        assert!(matches!(r.outcome, Outcome::FuelExhausted(_)));

        let (sigs, checked, gen) = prepare(src);
        let mut ev = Evaluator::new(&sigs, gen);
        let full = ev.run(&checked.ir, DEFAULT_FUEL, false, TraceMode::Off);
        let steps = full.stats.steps;
        let v1 = full.outcome.describe();
        // increasing fuel never changes an already-final outcome
        let (sigs, checked, gen) = prepare(src);
        let mut ev = Evaluator::new(&sigs, gen);
        let more = ev.run(&checked.ir, steps * 2 + 7, false, TraceMode::Off);
        assert_eq!(v1, more.outcome.describe());
        assert_eq!(steps, more.stats.steps);
    }

    #[test]
    fn traces_are_deterministic_across_runs() {
        let src = "effect choose : forall a . (a * a) => a ;;\n\
                   handle #choose((1, 2)) + #choose((10, 20)) with { return x -> x ; choose(y) -> resume (fst y) }";
        let render = |src: &str| {
            let (sigs, checked, gen) = prepare(src);
            let mut ev = Evaluator::new(&sigs, gen);
            let r = ev.run(&checked.ir, DEFAULT_FUEL, false, TraceMode::Full);
            r.trace
                .entries
                .iter()
                .map(|(rule, snap)| format!("{rule} {snap}"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(render(src), render(src));
    }

    #[test]
    fn division_by_zero_is_stuck_outside_the_guarantees() {
        let (sigs, checked, gen) = prepare(";; div 1 0");
        let mut ev = Evaluator::new(&sigs, gen);
        let r = ev.run(&checked.ir, 100, false, TraceMode::Off);
        match r.outcome {
            Outcome::Stuck { reason, .. } => assert!(reason.contains("delta undefined")),
            other => panic!("expected stuck, got {other:?}"),
        }
    }
}
