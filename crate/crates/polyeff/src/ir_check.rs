//! Checker for the intermediate language. Term typing, handler typing and
//! continuation typing; used as the oracle for type preservation of
//! elaboration and for subject reduction during checked evaluation.
//!
//! The checker returns the minimal effect of a term; callers test inclusion
//! wherever the declarative weakening rule would fire. Value forms always
//! check at the empty effect, which realizes the convention that values can
//! be given any effect.

use crate::ir::{Frame, IrHandler, IrTerm};
use crate::syntax::*;
use std::fmt;

#[derive(Clone, Debug)]
pub struct IrTypeError(pub String);

impl fmt::Display for IrTypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for IrTypeError {}

fn err<T>(msg: String) -> Result<T, IrTypeError> {
    Err(IrTypeError(msg))
}

/// Resumption typing information: the clause's type variables, the parameter
/// and continuation types, and the effect a resumption may invoke. Unlike
/// the surface counterpart it carries no variable component.
#[derive(Clone, Debug)]
pub struct IrResumeInfo {
    pub tyvars: Vec<Name>,
    pub param_ty: Ty,
    pub cont_dom: Ty,
    pub cont_eff: Effect,
    pub cont_cod: Ty,
}

pub struct IrCheck<'a> {
    sigs: &'a SigTable,
}

impl<'a> IrCheck<'a> {
    pub fn new(sigs: &'a SigTable) -> IrCheck<'a> {
        IrCheck { sigs }
    }

    fn wf_ty(&self, ctx: &TyCtx, t: &Ty, rule: &str) -> Result<(), IrTypeError> {
        if t.has_meta() {
            return err(format!("{rule}: type {t:?} contains unsolved metavariables"));
        }
        for a in t.ftv() {
            if !ctx.has_tyvar(&a) {
                return err(format!("{rule}: type variable {a} is not bound in the context"));
            }
        }
        Ok(())
    }

    fn push_tyvars(&self, ctx: &mut TyCtx, binders: &[Name], rule: &str) -> Result<(), IrTypeError> {
        for b in binders {
            if ctx.has_tyvar(b) {
                return err(format!(
                    "{rule}: context is not well formed, type variable {b} is already bound"
                ));
            }
            ctx.push_tyvar(b.clone());
        }
        Ok(())
    }

    pub fn tc_term(
        &self,
        ctx: &mut TyCtx,
        r: Option<&IrResumeInfo>,
        e: &IrTerm,
    ) -> Result<(Ty, Effect), IrTypeError> {
        match e {
            IrTerm::Var(x, tys) => {
                let scheme = ctx
                    .lookup_var(x)
                    .ok_or_else(|| IrTypeError(format!("T-Var: unbound variable {x}")))?
                    .clone();
                if scheme.bound.len() != tys.len() {
                    return err(format!(
                        "T-Var: {x} expects {} type arguments, got {}",
                        scheme.bound.len(),
                        tys.len()
                    ));
                }
                for t in tys {
                    self.wf_ty(ctx, t, "T-Var")?;
                }
                Ok((scheme.instantiate_with(tys), Effect::empty()))
            }
            IrTerm::Const(c) => Ok((ty_const(c), Effect::empty())),
            IrTerm::Abs(x, annot, body) => {
                self.wf_ty(ctx, annot, "T-Abs")?;
                let Ty::Arrow(dom, eff, cod) = annot else {
                    return err("T-Abs: annotation is not an arrow type".to_string());
                };
                let latent = eff.as_set().clone();
                let mark = ctx.len();
                ctx.push_var(x.clone(), Scheme::mono((**dom).clone()));
                let res = self.tc_term(ctx, r, body);
                ctx.truncate(mark);
                let (t_body, e_body) = res?;
                if t_body != **cod {
                    return err(format!(
                        "T-Abs: body has type {} but the annotation promises {}",
                        crate::parser::pretty_ty(&t_body),
                        crate::parser::pretty_ty(cod)
                    ));
                }
                if !e_body.subset_of(&latent) {
                    return err(format!(
                        "T-Abs: body effect {e_body} exceeds the annotated latent effect {latent}"
                    ));
                }
                Ok((annot.clone(), Effect::empty()))
            }
            IrTerm::App(f, a) => {
                let (tf, ef) = self.tc_term(ctx, r, f)?;
                let (ta, ea) = self.tc_term(ctx, r, a)?;
                let Ty::Arrow(dom, latent, cod) = tf else {
                    return err(format!(
                        "T-App: applying a non-function of type {}",
                        crate::parser::pretty_ty(&tf)
                    ));
                };
                if *dom != ta {
                    return err(format!(
                        "T-App: argument has type {} but the function expects {}",
                        crate::parser::pretty_ty(&ta),
                        crate::parser::pretty_ty(&dom)
                    ));
                }
                let eff = ef.union(&ea).union(latent.as_set());
                Ok(((*cod).clone(), eff))
            }
            IrTerm::Let { name, binders, annot, bound, body } => {
                let mark = ctx.len();
                self.push_tyvars(ctx, binders, "T-Let")?;
                let res = self.wf_ty(ctx, annot, "T-Let").and_then(|()| {
                    self.tc_term(ctx, r, bound)
                });
                ctx.truncate(mark);
                let (t1, e1) = res?;
                if &t1 != annot {
                    return err(format!(
                        "T-Let: bound term has type {} but the annotation says {}",
                        crate::parser::pretty_ty(&t1),
                        crate::parser::pretty_ty(annot)
                    ));
                }
                ctx.push_var(
                    name.clone(),
                    Scheme { bound: binders.clone(), body: annot.clone() },
                );
                let res = self.tc_term(ctx, r, body);
                ctx.truncate(mark);
                let (t2, e2) = res?;
                Ok((t2, e1.union(&e2)))
            }
            IrTerm::OpCall(op, tys, arg) => {
                let sig = self
                    .sigs
                    .lookup(op)
                    .ok_or_else(|| IrTypeError(format!("T-Op: undeclared operation {op}")))?;
                if sig.bound.len() != tys.len() {
                    return err(format!(
                        "T-Op: {op} expects {} type arguments, got {}",
                        sig.bound.len(),
                        tys.len()
                    ));
                }
                for t in tys {
                    self.wf_ty(ctx, t, "T-Op")?;
                }
                let pairs: Vec<(Name, Ty)> =
                    sig.bound.iter().cloned().zip(tys.iter().cloned()).collect();
                let dom = sig.dom.subst(&pairs);
                let cod = sig.cod.subst(&pairs);
                let (ta, ea) = self.tc_term(ctx, r, arg)?;
                if ta != dom {
                    return err(format!(
                        "T-Op: argument has type {} but {op} takes {}",
                        crate::parser::pretty_ty(&ta),
                        crate::parser::pretty_ty(&dom)
                    ));
                }
                let mut eff = ea;
                eff.insert(op.clone());
                Ok((cod, eff))
            }
            IrTerm::OpCont { op, schemes, pv, ctx: k } => {
                let sig = self
                    .sigs
                    .lookup(op)
                    .ok_or_else(|| IrTypeError(format!("T-OpCont: undeclared operation {op}")))?;
                if sig.bound.len() != schemes.len() {
                    return err(format!(
                        "T-OpCont: {op} expects {} type arguments, got {}",
                        sig.bound.len(),
                        schemes.len()
                    ));
                }
                let captured = k.binders();
                if pv.binders != captured {
                    return err(format!(
                        "T-OpCont: value binders {:?} differ from the context binders {:?}",
                        pv.binders, captured
                    ));
                }
                for s in schemes {
                    if s.bound != captured {
                        return err(format!(
                            "T-OpCont: scheme binders {:?} differ from the context binders {:?}",
                            s.bound, captured
                        ));
                    }
                }
                if !pv.body.is_value() {
                    return err("T-OpCont: the captured argument is not a value".to_string());
                }
                let bodies: Vec<Ty> = schemes.iter().map(|s| s.body.clone()).collect();
                let pairs: Vec<(Name, Ty)> =
                    sig.bound.iter().cloned().zip(bodies.iter().cloned()).collect();
                let dom = sig.dom.subst(&pairs);
                let cod = sig.cod.subst(&pairs);
                let mark = ctx.len();
                self.push_tyvars(ctx, &captured, "T-OpCont")?;
                let res = (|| {
                    for s in schemes {
                        self.wf_ty(ctx, &s.body, "T-OpCont")?;
                    }
                    self.tc_term(ctx, r, &pv.body)
                })();
                ctx.truncate(mark);
                let (tv, _ev) = res?;
                if tv != dom {
                    return err(format!(
                        "T-OpCont: captured argument has type {} but {op} takes {}",
                        crate::parser::pretty_ty(&tv),
                        crate::parser::pretty_ty(&dom)
                    ));
                }
                let (t_res, e_k) = self.tc_ectx(ctx, &k.frames, &captured, &cod)?;
                let mut eff = e_k;
                eff.insert(op.clone());
                Ok((t_res, eff))
            }
            IrTerm::Handle(scrut, h) => {
                let (ts, es) = self.tc_term(ctx, r, scrut)?;
                self.tc_handler(ctx, r, h, &ts, &es)
            }
            IrTerm::Resume { binders, param, body } => {
                let info = r.ok_or_else(|| {
                    IrTypeError("T-Resume: no resumption is available here".to_string())
                })?;
                if binders.len() != info.tyvars.len() {
                    return err(format!(
                        "T-Resume: {} binders against {} clause type variables",
                        binders.len(),
                        info.tyvars.len()
                    ));
                }
                for a in &info.tyvars {
                    if !ctx.has_tyvar(a) {
                        return err(format!("T-Resume: clause type variable {a} is not bound"));
                    }
                }
                let ren: Vec<(Name, Ty)> = info
                    .tyvars
                    .iter()
                    .cloned()
                    .zip(binders.iter().map(|b| Ty::Var(b.clone())))
                    .collect();
                let mark = ctx.len();
                self.push_tyvars(ctx, binders, "T-Resume")?;
                ctx.push_var(param.clone(), Scheme::mono(info.param_ty.subst(&ren)));
                let res = self.tc_term(ctx, r, body);
                ctx.truncate(mark);
                let (tb, eb) = res?;
                let want = info.cont_dom.subst(&ren);
                if tb != want {
                    return err(format!(
                        "T-Resume: argument has type {} but the resumption takes {}",
                        crate::parser::pretty_ty(&tb),
                        crate::parser::pretty_ty(&want)
                    ));
                }
                Ok((info.cont_cod.clone(), eb.union(&info.cont_eff)))
            }
            IrTerm::Pair(l, rr) => {
                let (tl, el) = self.tc_term(ctx, r, l)?;
                let (tr, er) = self.tc_term(ctx, r, rr)?;
                Ok((Ty::prod(tl, tr), el.union(&er)))
            }
            IrTerm::Proj(ix, e) => {
                let (t, eff) = self.tc_term(ctx, r, e)?;
                let Ty::Prod(l, rr) = t else {
                    return err(format!(
                        "T-Proj: projecting from a non-pair of type {}",
                        crate::parser::pretty_ty(&t)
                    ));
                };
                let picked = match ix {
                    ProjIx::Fst => *l,
                    ProjIx::Snd => *rr,
                };
                Ok((picked, eff))
            }
            IrTerm::If(c, a, b) => {
                let (tc, ec) = self.tc_term(ctx, r, c)?;
                if tc != Ty::Base(Base::Bool) {
                    return err(format!(
                        "T-If: condition has type {}, not bool",
                        crate::parser::pretty_ty(&tc)
                    ));
                }
                let (ta, ea) = self.tc_term(ctx, r, a)?;
                let (tb, eb) = self.tc_term(ctx, r, b)?;
                if ta != tb {
                    return err(format!(
                        "T-If: branches have types {} and {}",
                        crate::parser::pretty_ty(&ta),
                        crate::parser::pretty_ty(&tb)
                    ));
                }
                Ok((ta, ec.union(&ea).union(&eb)))
            }
        }
    }

    /// Handler typing: the return clause under the outer resumption context,
    /// each operation clause under its own. The output effect is the least
    /// fixpoint of residual ∪ return-clause ∪ clause bodies, the clause
    /// bodies being rechecked because a resumption's effect is the output
    /// effect itself (deep handlers).
    pub fn tc_handler(
        &self,
        ctx: &mut TyCtx,
        r_outer: Option<&IrResumeInfo>,
        h: &IrHandler,
        scrut_ty: &Ty,
        scrut_eff: &Effect,
    ) -> Result<(Ty, Effect), IrTypeError> {
        let mut seen = Effect::empty();
        for c in &h.clauses {
            if seen.contains(&c.op) {
                return err(format!("TH-Op: duplicate clause for {}", c.op));
            }
            seen.insert(c.op.clone());
            if self.sigs.lookup(&c.op).is_none() {
                return err(format!("TH-Op: undeclared operation {}", c.op));
            }
        }
        let residual = scrut_eff.minus(&h.ops());

        let mark = ctx.len();
        ctx.push_var(h.ret_var.clone(), Scheme::mono(scrut_ty.clone()));
        let res = self.tc_term(ctx, r_outer, &h.ret_body);
        ctx.truncate(mark);
        let (t_ret, e_ret) = res?;

        let mut out = residual.union(&e_ret);
        loop {
            let mut next = out.clone();
            for c in &h.clauses {
                let sig = self.sigs.lookup(&c.op).expect("checked above");
                if sig.bound.len() != c.binders.len() {
                    return err(format!(
                        "TH-Op: clause for {} binds {} type variables, signature has {}",
                        c.op,
                        c.binders.len(),
                        sig.bound.len()
                    ));
                }
                let pairs: Vec<(Name, Ty)> = sig
                    .bound
                    .iter()
                    .cloned()
                    .zip(c.binders.iter().map(|b| Ty::Var(b.clone())))
                    .collect();
                let dom = sig.dom.subst(&pairs);
                let cod = sig.cod.subst(&pairs);
                if t_ret.ftv().iter().any(|a| c.binders.contains(a)) {
                    return err(format!(
                        "TH-Op: clause type variables of {} escape through the return type",
                        c.op
                    ));
                }
                let info = IrResumeInfo {
                    tyvars: c.binders.clone(),
                    param_ty: dom.clone(),
                    cont_dom: cod,
                    cont_eff: out.clone(),
                    cont_cod: t_ret.clone(),
                };
                let mark = ctx.len();
                self.push_tyvars(ctx, &c.binders, "TH-Op")?;
                ctx.push_var(c.param.clone(), Scheme::mono(dom));
                let res = self.tc_term(ctx, Some(&info), &c.body);
                ctx.truncate(mark);
                let (tb, eb) = res?;
                if tb != t_ret {
                    return err(format!(
                        "TH-Op: clause for {} has type {} but the return clause has {}",
                        c.op,
                        crate::parser::pretty_ty(&tb),
                        crate::parser::pretty_ty(&t_ret)
                    ));
                }
                next.union_in_place(&eb);
            }
            if next == out {
                break;
            }
            out = next;
        }
        Ok((t_ret, out))
    }

    /// Continuation typing `Γ ⊢ E : ∀ᾱ.A ⊸ B | ε`: `rem_binders` is the
    /// quantifier prefix still to be consumed by let frames on the way to
    /// the hole and `hole_ty` the type expected there.
    pub fn tc_ectx(
        &self,
        ctx: &mut TyCtx,
        frames: &[Frame],
        rem_binders: &[Name],
        hole_ty: &Ty,
    ) -> Result<(Ty, Effect), IrTypeError> {
        let Some((f, rest)) = frames.split_first() else {
            if !rem_binders.is_empty() {
                return err(format!(
                    "TE-Hole: binders {rem_binders:?} not consumed by any let frame"
                ));
            }
            self.wf_ty(ctx, hole_ty, "TE-Hole")?;
            return Ok((hole_ty.clone(), Effect::empty()));
        };
        match f {
            Frame::AppL(e2) => {
                let (tf, ef) = self.tc_ectx(ctx, rest, rem_binders, hole_ty)?;
                let Ty::Arrow(dom, latent, cod) = tf else {
                    return err("TE-App1: the hole does not produce a function".to_string());
                };
                let (t2, e2eff) = self.tc_term(ctx, None, e2)?;
                if *dom != t2 {
                    return err(format!(
                        "TE-App1: argument has type {} but the function expects {}",
                        crate::parser::pretty_ty(&t2),
                        crate::parser::pretty_ty(&dom)
                    ));
                }
                Ok(((*cod).clone(), ef.union(&e2eff).union(latent.as_set())))
            }
            Frame::AppR(v) => {
                if !v.is_value() {
                    return err("TE-App2: the function position holds a non-value".to_string());
                }
                let (tv, _) = self.tc_term(ctx, None, v)?;
                let Ty::Arrow(dom, latent, cod) = tv else {
                    return err("TE-App2: applying a non-function".to_string());
                };
                let (ta, ea) = self.tc_ectx(ctx, rest, rem_binders, hole_ty)?;
                if *dom != ta {
                    return err(format!(
                        "TE-App2: the hole produces {} but the function expects {}",
                        crate::parser::pretty_ty(&ta),
                        crate::parser::pretty_ty(&dom)
                    ));
                }
                Ok(((*cod).clone(), ea.union(latent.as_set())))
            }
            Frame::Let { name, binders, annot, body } => {
                if rem_binders.len() < binders.len()
                    || &rem_binders[..binders.len()] != binders.as_slice()
                {
                    return err(format!(
                        "TE-Let: frame binds {binders:?} but the pending binders are {rem_binders:?}"
                    ));
                }
                let mark = ctx.len();
                self.push_tyvars(ctx, binders, "TE-Let")?;
                let res = self.wf_ty(ctx, annot, "TE-Let").and_then(|()| {
                    self.tc_ectx(ctx, rest, &rem_binders[binders.len()..], hole_ty)
                });
                ctx.truncate(mark);
                let (t1, e1) = res?;
                if &t1 != annot {
                    return err(format!(
                        "TE-Let: the hole produces {} but the annotation says {}",
                        crate::parser::pretty_ty(&t1),
                        crate::parser::pretty_ty(annot)
                    ));
                }
                ctx.push_var(
                    name.clone(),
                    Scheme { bound: binders.clone(), body: annot.clone() },
                );
                let res = self.tc_term(ctx, None, body);
                ctx.truncate(mark);
                let (t2, e2) = res?;
                Ok((t2, e1.union(&e2)))
            }
            Frame::OpArg(op, tys) => {
                let sig = self
                    .sigs
                    .lookup(op)
                    .ok_or_else(|| IrTypeError(format!("TE-Op: undeclared operation {op}")))?;
                if sig.bound.len() != tys.len() {
                    return err(format!("TE-Op: wrong number of type arguments for {op}"));
                }
                for t in tys {
                    self.wf_ty(ctx, t, "TE-Op")?;
                }
                let pairs: Vec<(Name, Ty)> =
                    sig.bound.iter().cloned().zip(tys.iter().cloned()).collect();
                let (t, e) = self.tc_ectx(ctx, rest, rem_binders, hole_ty)?;
                let dom = sig.dom.subst(&pairs);
                if t != dom {
                    return err(format!(
                        "TE-Op: the hole produces {} but {op} takes {}",
                        crate::parser::pretty_ty(&t),
                        crate::parser::pretty_ty(&dom)
                    ));
                }
                let mut eff = e;
                eff.insert(op.clone());
                Ok((sig.cod.subst(&pairs), eff))
            }
            Frame::Handle(h) => {
                let (t, e) = self.tc_ectx(ctx, rest, rem_binders, hole_ty)?;
                self.tc_handler(ctx, None, h, &t, &e)
            }
            Frame::PairL(e2) => {
                let (tl, el) = self.tc_ectx(ctx, rest, rem_binders, hole_ty)?;
                let (tr, er) = self.tc_term(ctx, None, e2)?;
                Ok((Ty::prod(tl, tr), el.union(&er)))
            }
            Frame::PairR(v) => {
                if !v.is_value() {
                    return err("TE-Pair2: the first component holds a non-value".to_string());
                }
                let (tv, _) = self.tc_term(ctx, None, v)?;
                let (tr, er) = self.tc_ectx(ctx, rest, rem_binders, hole_ty)?;
                Ok((Ty::prod(tv, tr), er))
            }
            Frame::Proj(ix) => {
                let (t, e) = self.tc_ectx(ctx, rest, rem_binders, hole_ty)?;
                let Ty::Prod(l, r) = t else {
                    return err("TE-Proj: projecting from a non-pair".to_string());
                };
                let picked = match ix {
                    ProjIx::Fst => *l,
                    ProjIx::Snd => *r,
                };
                Ok((picked, e))
            }
            Frame::If(a, b) => {
                let (tc, ec) = self.tc_ectx(ctx, rest, rem_binders, hole_ty)?;
                if tc != Ty::Base(Base::Bool) {
                    return err("TE-If: the hole does not produce a bool".to_string());
                }
                let (ta, ea) = self.tc_term(ctx, None, a)?;
                let (tb, eb) = self.tc_term(ctx, None, b)?;
                if ta != tb {
                    return err("TE-If: branch types differ".to_string());
                }
                Ok((ta, ec.union(&ea).union(&eb)))
            }
        }
    }
}

/// Check a closed term against the empty context and no resumption.
pub fn typecheck(sigs: &SigTable, e: &IrTerm) -> Result<(Ty, Effect), IrTypeError> {
    let mut ctx = TyCtx::new();
    IrCheck::new(sigs).tc_term(&mut ctx, None, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{EvalCtx, IrClause, PolyValue};

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    fn sigs_choose_fail() -> SigTable {
        let mut sigs = SigTable::new();
        sigs.insert(OpSig {
            op: n("choose"),
            bound: vec![n("a")],
            dom: Ty::prod(Ty::var("a"), Ty::var("a")),
            cod: Ty::var("a"),
        })
        .unwrap();
        sigs.insert(OpSig {
            op: n("fail"),
            bound: vec![n("a")],
            dom: Ty::Base(Base::Unit),
            cod: Ty::var("a"),
        })
        .unwrap();
        sigs
    }

    #[test]
    fn constants_check_at_empty_effect() {
        let sigs = SigTable::new();
        let (t, e) = typecheck(&sigs, &IrTerm::Const(Const::Int(1))).unwrap();
        assert_eq!(t, Ty::Base(Base::Int));
        assert!(e.is_empty());
    }

    #[test]
    fn unhandled_op_checks_at_its_operation() {
        let sigs = sigs_choose_fail();
        let e = IrTerm::OpCall(
            n("fail"),
            vec![Ty::Base(Base::Int)],
            Box::new(IrTerm::Const(Const::Unit)),
        );
        let (t, eff) = typecheck(&sigs, &e).unwrap();
        assert_eq!(t, Ty::Base(Base::Int));
        assert!(eff.contains(&n("fail")));
    }

    #[test]
    fn identity_handler_passes_the_scrutinee_through() {
        let sigs = SigTable::new();
        let h = IrHandler {
            ret_var: n("x"),
            ret_body: Box::new(IrTerm::var0(n("x"))),
            clauses: vec![],
        };
        let chk = IrCheck::new(&sigs);
        let mut ctx = TyCtx::new();
        let (t, eff) = chk
            .tc_handler(&mut ctx, None, &h, &Ty::Base(Base::Int), &Effect::empty())
            .unwrap();
        assert_eq!(t, Ty::Base(Base::Int));
        assert!(eff.is_empty());
        // a residual effect flows through an identity handler
        let (_, eff) = chk
            .tc_handler(&mut ctx, None, &h, &Ty::Base(Base::Int), &Effect::singleton(n("fail")))
            .unwrap();
        assert!(eff.contains(&n("fail")));
    }

    #[test]
    fn choose_clause_checks_by_hand() {
        // Λa.choose(x) → resume [b] y. (fst y), at scrutinee int
        let sigs = sigs_choose_fail();
        let h = IrHandler {
            ret_var: n("x"),
            ret_body: Box::new(IrTerm::var0(n("x"))),
            clauses: vec![IrClause {
                binders: vec![n("a")],
                op: n("choose"),
                param: n("x"),
                body: IrTerm::Resume {
                    binders: vec![n("b")],
                    param: n("y"),
                    body: Box::new(IrTerm::Proj(ProjIx::Fst, Box::new(IrTerm::var0(n("y"))))),
                },
            }],
        };
        let chk = IrCheck::new(&sigs);
        let mut ctx = TyCtx::new();
        let (t, eff) = chk
            .tc_handler(
                &mut ctx,
                None,
                &h,
                &Ty::Base(Base::Int),
                &Effect::singleton(n("choose")),
            )
            .unwrap();
        assert_eq!(t, Ty::Base(Base::Int));
        assert!(eff.is_empty(), "handled effect must not leak, got {eff}");
    }

    #[test]
    fn duplicate_clause_is_rejected() {
        let sigs = sigs_choose_fail();
        let clause = IrClause {
            binders: vec![n("a")],
            op: n("choose"),
            param: n("y"),
            body: IrTerm::var0(n("x")),
        };
        let h = IrHandler {
            ret_var: n("x"),
            ret_body: Box::new(IrTerm::var0(n("x"))),
            clauses: vec![clause.clone(), clause],
        };
        let chk = IrCheck::new(&sigs);
        let mut ctx = TyCtx::new();
        let e = chk
            .tc_handler(&mut ctx, None, &h, &Ty::Base(Base::Int), &Effect::empty())
            .unwrap_err();
        assert!(e.0.contains("duplicate"));
    }

    #[test]
    fn hole_context_types_at_the_hole_type() {
        let sigs = SigTable::new();
        let chk = IrCheck::new(&sigs);
        let mut ctx = TyCtx::new();
        let (t, e) = chk.tc_ectx(&mut ctx, &[], &[], &Ty::Base(Base::Int)).unwrap();
        assert_eq!(t, Ty::Base(Base::Int));
        assert!(e.is_empty());
    }

    #[test]
    fn let_frame_consumes_binders_per_te_let() {
        // E = let x = Λ[a].[·] in (x [int]) + 1, hole type a. Hand derivation:
        // the hole scheme is ∀a.a, x gets scheme ∀a.a, x [int] : int, the
        // whole context produces int at the empty effect.
        let sigs = SigTable::new();
        let chk = IrCheck::new(&sigs);
        let mut ctx = TyCtx::new();
        let body = IrTerm::App(
            Box::new(IrTerm::App(
                Box::new(IrTerm::Const(Const::Add)),
                Box::new(IrTerm::Var(n("x"), vec![Ty::Base(Base::Int)])),
            )),
            Box::new(IrTerm::Const(Const::Int(1))),
        );
        let frames = vec![Frame::Let {
            name: n("x"),
            binders: vec![n("a")],
            annot: Ty::var("a"),
            body,
        }];
        let (t, e) = chk.tc_ectx(&mut ctx, &frames, &[n("a")], &Ty::var("a")).unwrap();
        assert_eq!(t, Ty::Base(Base::Int));
        assert!(e.is_empty());
    }

    #[test]
    fn handle_frame_wraps_the_hole() {
        let sigs = SigTable::new();
        let chk = IrCheck::new(&sigs);
        let mut ctx = TyCtx::new();
        let frames = vec![Frame::Handle(IrHandler {
            ret_var: n("x"),
            ret_body: Box::new(IrTerm::var0(n("x"))),
            clauses: vec![],
        })];
        let (t, e) = chk.tc_ectx(&mut ctx, &frames, &[], &Ty::Base(Base::Int)).unwrap();
        assert_eq!(t, Ty::Base(Base::Int));
        assert!(e.is_empty());
    }

    #[test]
    fn opcont_types_the_captured_pieces() {
        // #fail{[∀[].int]; Λ[].(); [(app-l 1)]} applies the resumed hole to 1:
        // the hole has type int -> int … actually the captured context is
        // `[·] 1`, so the hole expects an int function. Use cod = a with
        // C = int -{}-> int.
        let sigs = sigs_choose_fail();
        let chk = IrCheck::new(&sigs);
        let mut ctx = TyCtx::new();
        let e = IrTerm::OpCont {
            op: n("fail"),
            schemes: vec![Scheme::mono(Ty::arrow(
                Ty::Base(Base::Int),
                Eff::empty(),
                Ty::Base(Base::Int),
            ))],
            pv: PolyValue { binders: vec![], body: Box::new(IrTerm::Const(Const::Unit)) },
            ctx: EvalCtx { frames: vec![Frame::AppL(IrTerm::Const(Const::Int(1)))] },
        };
        let (t, eff) = chk.tc_term(&mut ctx, None, &e).unwrap();
        assert_eq!(t, Ty::Base(Base::Int));
        assert!(eff.contains(&n("fail")));
    }
}
