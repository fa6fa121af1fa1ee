//! Type inference and elaboration for the surface language.
//!
//! Inference is algorithm-J style with levels: metavariables remember the
//! level they were created at, let-generalization quantifies exactly the
//! metavariables above the current level, and rigid variables (signature
//! binders inside operation clauses and the per-resumption renamings) carry
//! the level of the scope that introduced them. Unifying a metavariable with
//! a rigid variable from a deeper scope is an escape error; this is what
//! rejects interfering resumptions.
//!
//! Effects are inferred as inclusion constraints between effect variables
//! and ground operation sets, solved to the least fixpoint afterwards.
//! Inference simultaneously emits the explicitly-typed term; decorations are
//! resolved once constraint solving finishes.

use crate::ir::{IrClause, IrHandler, IrTerm};
use crate::parser::{pretty_ty, Diagnostic, Span};
use crate::syntax::*;

#[derive(Clone, Debug)]
pub enum EffAtom {
    Set(Effect),
    Var(EffVarId),
}

#[derive(Clone, Debug)]
struct EffConstraint {
    lhs: EffAtom,
    /// Ground operations removed from the left side before inclusion; used
    /// by handling, where the handled operations do not flow out.
    minus: Option<Effect>,
    rhs: EffAtom,
    span: Span,
    rule: &'static str,
}

#[derive(Debug)]
struct MetaState {
    level: u32,
    solution: Option<Ty>,
}

/// What `resume` may assume at the current program point.
#[derive(Clone, Debug)]
pub struct ResumeInfo {
    pub tyvars: Vec<Name>,
    pub param_name: Name,
    /// Environment depth of the binding a resumption is allowed to rebind;
    /// if the name has been shadowed since, no rebinding happens.
    param_depth: usize,
    pub param_ty: Ty,
    pub cont_dom: Ty,
    pub cont_eff: EffVarId,
    pub cont_cod: Ty,
}

/// A term binding together with the name its occurrences translate to; the
/// map from surface to intermediate names lives in these entries, extended
/// at every binder and injective because the targets are fresh.
struct EnvEntry {
    name: Name,
    scheme: Scheme,
    ir: Name,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    /// Disables the per-resumption renaming: every resumption in a clause
    /// shares the clause's own type variables. Unsound; kept as a negative
    /// control to show the renaming is load-bearing.
    pub unsound_shared_resume: bool,
}

/// Result of checking a whole program.
#[derive(Debug)]
pub struct Checked {
    pub ty: Ty,
    pub eff: Effect,
    pub ir: IrTerm,
}

pub struct Infer<'a> {
    sigs: &'a SigTable,
    opts: Options,
    metas: Vec<MetaState>,
    eff_count: u32,
    constraints: Vec<EffConstraint>,
    eff_solution: Vec<Effect>,
    rigid_levels: std::collections::HashMap<Name, u32>,
    level: u32,
    env: Vec<EnvEntry>,
    gen: NameGen,
}

impl<'a> Infer<'a> {
    pub fn new(sigs: &'a SigTable, opts: Options) -> Infer<'a> {
        Infer {
            sigs,
            opts,
            metas: Vec::new(),
            eff_count: 0,
            constraints: Vec::new(),
            eff_solution: Vec::new(),
            rigid_levels: std::collections::HashMap::new(),
            level: 0,
            env: Vec::new(),
            gen: NameGen::new(),
        }
    }

    pub fn into_name_gen(self) -> NameGen {
        self.gen
    }

    // -- metavariables ------------------------------------------------------

    fn fresh_meta(&mut self) -> Ty {
        let id = self.metas.len() as MetaId;
        self.metas.push(MetaState { level: self.level, solution: None });
        Ty::Meta(id)
    }

    fn fresh_eff(&mut self) -> EffVarId {
        let id = self.eff_count;
        self.eff_count += 1;
        id
    }

    fn flow(&mut self, lhs: EffAtom, rhs: EffVarId, span: Span, rule: &'static str) {
        self.constraints.push(EffConstraint {
            lhs,
            minus: None,
            rhs: EffAtom::Var(rhs),
            span,
            rule,
        });
    }

    fn resolve_shallow(&self, t: &Ty) -> Ty {
        let mut t = t.clone();
        while let Ty::Meta(m) = t {
            match &self.metas[m as usize].solution {
                Some(s) => t = s.clone(),
                None => return Ty::Meta(m),
            }
        }
        t
    }

    /// Deep resolution; unsolved metavariables stay in place.
    pub fn resolve_deep(&self, t: &Ty) -> Ty {
        match self.resolve_shallow(t) {
            Ty::Arrow(d, e, c) => Ty::arrow(self.resolve_deep(&d), e, self.resolve_deep(&c)),
            Ty::Prod(l, r) => Ty::prod(self.resolve_deep(&l), self.resolve_deep(&r)),
            other => other,
        }
    }

    // -- unification --------------------------------------------------------

    pub fn unify(&mut self, a: &Ty, b: &Ty, span: Span, rule: &'static str) -> Result<(), Diagnostic> {
        let a = self.resolve_shallow(a);
        let b = self.resolve_shallow(b);
        match (&a, &b) {
            (Ty::Meta(m), Ty::Meta(n)) if m == n => Ok(()),
            (Ty::Meta(m), _) => self.solve_meta(*m, &b, span, rule),
            (_, Ty::Meta(m)) => self.solve_meta(*m, &a, span, rule),
            (Ty::Var(x), Ty::Var(y)) if x == y => Ok(()),
            (Ty::Var(_), Ty::Var(_)) => Err(self.mismatch(&a, &b, span, rule)),
            (Ty::Base(x), Ty::Base(y)) if x == y => Ok(()),
            (Ty::Arrow(d1, e1, c1), Ty::Arrow(d2, e2, c2)) => {
                self.unify(d1, d2, span, rule)?;
                // arrows agree up to equal solved effects
                self.eff_include(e1.clone(), e2.clone(), span, rule);
                self.eff_include(e2.clone(), e1.clone(), span, rule);
                self.unify(c1, c2, span, rule)
            }
            (Ty::Prod(l1, r1), Ty::Prod(l2, r2)) => {
                self.unify(l1, l2, span, rule)?;
                self.unify(r1, r2, span, rule)
            }
            _ => Err(self.mismatch(&a, &b, span, rule)),
        }
    }

    fn eff_include(&mut self, lhs: Eff, rhs: Eff, span: Span, rule: &'static str) {
        let lhs = match lhs {
            Eff::Set(s) => EffAtom::Set(s),
            Eff::Var(v) => EffAtom::Var(v),
        };
        let rhs = match rhs {
            Eff::Set(s) => EffAtom::Set(s),
            Eff::Var(v) => EffAtom::Var(v),
        };
        self.constraints.push(EffConstraint { lhs, minus: None, rhs, span, rule });
    }

    fn mismatch(&self, a: &Ty, b: &Ty, span: Span, rule: &'static str) -> Diagnostic {
        let sa = pretty_ty(&self.resolve_deep(a));
        let sb = pretty_ty(&self.resolve_deep(b));
        let rigid = |t: &Ty| matches!(t, Ty::Var(v) if self.rigid_levels.contains_key(v));
        let note = if rigid(a) || rigid(b) {
            " (a rigid type variable unifies only with itself)"
        } else {
            ""
        };
        Diagnostic::error(format!("{rule}: type mismatch: {sa} vs {sb}{note}"), span)
    }

    /// Solve `?m := t` after the occurs check, demoting deeper metavariables
    /// and rejecting rigid variables from scopes deeper than `?m`.
    fn solve_meta(&mut self, m: MetaId, t: &Ty, span: Span, rule: &'static str) -> Result<(), Diagnostic> {
        let level = self.metas[m as usize].level;
        self.occurs_adjust(m, level, t, span, rule)?;
        self.metas[m as usize].solution = Some(t.clone());
        Ok(())
    }

    fn occurs_adjust(
        &mut self,
        m: MetaId,
        level: u32,
        t: &Ty,
        span: Span,
        rule: &'static str,
    ) -> Result<(), Diagnostic> {
        match self.resolve_shallow(t) {
            Ty::Meta(n) => {
                if n == m {
                    return Err(Diagnostic::error(
                        format!("{rule}: occurs check failed, the type would be infinite"),
                        span,
                    ));
                }
                if self.metas[n as usize].level > level {
                    self.metas[n as usize].level = level;
                }
                Ok(())
            }
            Ty::Var(a) => {
                if let Some(&rl) = self.rigid_levels.get(&a) {
                    if rl > level {
                        return Err(Diagnostic::error(
                            format!("{rule}: rigid type variable {a} escapes its scope"),
                            span,
                        ));
                    }
                }
                Ok(())
            }
            Ty::Base(_) => Ok(()),
            Ty::Arrow(d, _, c) => {
                self.occurs_adjust(m, level, &d, span, rule)?;
                self.occurs_adjust(m, level, &c, span, rule)
            }
            Ty::Prod(l, r) => {
                self.occurs_adjust(m, level, &l, span, rule)?;
                self.occurs_adjust(m, level, &r, span, rule)
            }
        }
    }

    // -- schemes ------------------------------------------------------------

    /// Replace the scheme's binders by fresh metavariables; returns the body
    /// and the instantiation list (the type arguments the variable use is
    /// elaborated with).
    pub fn instantiate(&mut self, s: &Scheme) -> (Ty, Vec<Ty>) {
        let args: Vec<Ty> = s.bound.iter().map(|_| self.fresh_meta()).collect();
        (s.instantiate_with(&args), args)
    }

    /// Name every metavariable of the type that lives above the current
    /// level. Not blocked by effects: any let-bound expression generalizes.
    fn generalize(&mut self, t: &Ty) -> (Vec<Name>, Ty) {
        let resolved = self.resolve_deep(t);
        let mut binders = Vec::new();
        self.name_deep_metas(&resolved, &mut binders);
        (binders, self.resolve_deep(&resolved))
    }

    fn name_deep_metas(&mut self, t: &Ty, binders: &mut Vec<Name>) {
        match t {
            Ty::Meta(m) => {
                let st = &self.metas[*m as usize];
                if st.solution.is_none() && st.level > self.level {
                    let name = self.gen.fresh_tyvar();
                    self.metas[*m as usize].solution = Some(Ty::Var(name.clone()));
                    binders.push(name);
                }
            }
            Ty::Arrow(d, _, c) => {
                self.name_deep_metas(d, binders);
                self.name_deep_metas(c, binders);
            }
            Ty::Prod(l, r) => {
                self.name_deep_metas(l, binders);
                self.name_deep_metas(r, binders);
            }
            Ty::Var(_) | Ty::Base(_) => {}
        }
    }

    // -- environment --------------------------------------------------------

    fn push_var(&mut self, name: Name, scheme: Scheme) -> Name {
        let ir = self.gen.fresh(name.as_str());
        self.env.push(EnvEntry { name, scheme, ir: ir.clone() });
        ir
    }

    fn lookup_var(&self, name: &Name) -> Option<(usize, &Scheme, &Name)> {
        self.env
            .iter()
            .enumerate()
            .rev()
            .find(|(_, e)| &e.name == name)
            .map(|(i, e)| (i, &e.scheme, &e.ir))
    }

    /// Fresh rigid variables for the given binders, registered at the
    /// current level. Unification never solves them.
    fn enter_rigid(&mut self, bound: &[Name]) -> Vec<Name> {
        bound
            .iter()
            .map(|b| {
                let name = self.gen.fresh(b.as_str());
                self.rigid_levels.insert(name.clone(), self.level);
                name
            })
            .collect()
    }

    // -- inference ----------------------------------------------------------

    pub fn infer(&mut self, r: Option<&ResumeInfo>, t: &Term) -> Result<(Ty, EffVarId, IrTerm), Diagnostic> {
        match &t.kind {
            TermKind::Var(x) => {
                let (_, scheme, ir) = self
                    .lookup_var(x)
                    .ok_or_else(|| Diagnostic::error(format!("unbound variable {x}"), t.span))?;
                let (scheme, ir) = (scheme.clone(), ir.clone());
                let (ty, args) = self.instantiate(&scheme);
                Ok((ty, self.fresh_eff(), IrTerm::Var(ir, args)))
            }
            TermKind::Const(c) => Ok((ty_const(c), self.fresh_eff(), IrTerm::Const(*c))),
            TermKind::Abs(x, body) => {
                let dom = self.fresh_meta();
                let ir = self.push_var(x.clone(), Scheme::mono(dom.clone()));
                let res = self.infer(r, body);
                self.env.pop();
                let (cod, body_eff, body_ir) = res?;
                let latent = self.fresh_eff();
                self.flow(EffAtom::Var(body_eff), latent, t.span, "TS-Abs");
                let arrow = Ty::arrow(dom, Eff::Var(latent), cod);
                Ok((
                    arrow.clone(),
                    self.fresh_eff(),
                    IrTerm::Abs(ir, arrow, Box::new(body_ir)),
                ))
            }
            TermKind::App(f, a) => {
                let (tf, ef, irf) = self.infer(r, f)?;
                let (ta, ea, ira) = self.infer(r, a)?;
                let cod = self.fresh_meta();
                let latent = self.fresh_eff();
                let want = Ty::arrow(ta, Eff::Var(latent), cod.clone());
                self.unify(&tf, &want, t.span, "TS-App")?;
                let eff = self.fresh_eff();
                self.flow(EffAtom::Var(ef), eff, t.span, "TS-App");
                self.flow(EffAtom::Var(ea), eff, t.span, "TS-App");
                self.flow(EffAtom::Var(latent), eff, t.span, "TS-App");
                Ok((cod, eff, IrTerm::App(Box::new(irf), Box::new(ira))))
            }
            TermKind::Let(x, bound, body) => {
                self.level += 1;
                let res = self.infer(r, bound);
                self.level -= 1;
                let (t1, e1, ir1) = res?;
                let (binders, body_ty) = self.generalize(&t1);
                let ir_name =
                    self.push_var(x.clone(), Scheme { bound: binders.clone(), body: body_ty.clone() });
                let res = self.infer(r, body);
                self.env.pop();
                let (t2, e2, ir2) = res?;
                let eff = self.fresh_eff();
                self.flow(EffAtom::Var(e1), eff, t.span, "TS-Let");
                self.flow(EffAtom::Var(e2), eff, t.span, "TS-Let");
                Ok((
                    t2,
                    eff,
                    IrTerm::Let {
                        name: ir_name,
                        binders,
                        annot: body_ty,
                        bound: Box::new(ir1),
                        body: Box::new(ir2),
                    },
                ))
            }
            TermKind::OpCall(op, arg) => {
                let sig = self
                    .sigs
                    .lookup(op)
                    .ok_or_else(|| {
                        Diagnostic::error(format!("TS-Op: undeclared effect operation {op}"), t.span)
                    })?
                    .clone();
                let args: Vec<Ty> = sig.bound.iter().map(|_| self.fresh_meta()).collect();
                let pairs: Vec<(Name, Ty)> =
                    sig.bound.iter().cloned().zip(args.iter().cloned()).collect();
                let dom = sig.dom.subst(&pairs);
                let cod = sig.cod.subst(&pairs);
                let (ta, ea, ira) = self.infer(r, arg)?;
                self.unify(&ta, &dom, arg.span, "TS-Op")?;
                let eff = self.fresh_eff();
                self.flow(EffAtom::Set(Effect::singleton(op.clone())), eff, t.span, "TS-Op");
                self.flow(EffAtom::Var(ea), eff, t.span, "TS-Op");
                Ok((cod, eff, IrTerm::OpCall(op.clone(), args, Box::new(ira))))
            }
            TermKind::Handle(scrut, handler) => self.infer_handle(r, scrut, handler, t.span),
            TermKind::Resume(arg) => self.infer_resume(r, arg, t.span),
            TermKind::Pair(l, rr) => {
                let (tl, el, irl) = self.infer(r, l)?;
                let (tr, er, irr) = self.infer(r, rr)?;
                let eff = self.fresh_eff();
                self.flow(EffAtom::Var(el), eff, t.span, "TS-Pair");
                self.flow(EffAtom::Var(er), eff, t.span, "TS-Pair");
                Ok((Ty::prod(tl, tr), eff, IrTerm::Pair(Box::new(irl), Box::new(irr))))
            }
            TermKind::Proj(ix, e) => {
                let (te, ee, ire) = self.infer(r, e)?;
                let l = self.fresh_meta();
                let rty = self.fresh_meta();
                self.unify(&te, &Ty::prod(l.clone(), rty.clone()), e.span, "TS-Proj")?;
                let picked = match ix {
                    ProjIx::Fst => l,
                    ProjIx::Snd => rty,
                };
                Ok((picked, ee, IrTerm::Proj(*ix, Box::new(ire))))
            }
            TermKind::If(c, a, b) => {
                let (tc, ec, irc) = self.infer(r, c)?;
                self.unify(&tc, &Ty::Base(Base::Bool), c.span, "TS-If")?;
                let (ta, ea, ira) = self.infer(r, a)?;
                let (tb, eb, irb) = self.infer(r, b)?;
                self.unify(&ta, &tb, t.span, "TS-If: both branches must have one type")?;
                let eff = self.fresh_eff();
                self.flow(EffAtom::Var(ec), eff, t.span, "TS-If");
                self.flow(EffAtom::Var(ea), eff, t.span, "TS-If");
                self.flow(EffAtom::Var(eb), eff, t.span, "TS-If");
                Ok((ta, eff, IrTerm::If(Box::new(irc), Box::new(ira), Box::new(irb))))
            }
        }
    }

    fn infer_handle(
        &mut self,
        r_outer: Option<&ResumeInfo>,
        scrut: &Term,
        handler: &Handler,
        span: Span,
    ) -> Result<(Ty, EffVarId, IrTerm), Diagnostic> {
        let (t_scrut, e_scrut, ir_scrut) = self.infer(r_outer, scrut)?;

        let mut handled = Effect::empty();
        for c in &handler.clauses {
            if self.sigs.lookup(&c.op).is_none() {
                return Err(Diagnostic::error(
                    format!("THS-Op: undeclared effect operation {} in handler", c.op),
                    c.span,
                ));
            }
            handled.insert(c.op.clone());
        }

        let out_eff = self.fresh_eff();

        // return clause, checked under the enclosing resumption context
        let ret_ir = self.push_var(handler.ret_var.clone(), Scheme::mono(t_scrut.clone()));
        let ret_res = self.infer(r_outer, &handler.ret_body);
        self.env.pop();
        let (t_ret, e_ret, ir_ret) = ret_res?;
        self.flow(EffAtom::Var(e_ret), out_eff, span, "THS-Return");
        // unhandled operations of the scrutinee flow to the output effect
        self.constraints.push(EffConstraint {
            lhs: EffAtom::Var(e_scrut),
            minus: Some(handled),
            rhs: EffAtom::Var(out_eff),
            span,
            rule: "TS-Handle",
        });

        let mut clauses = Vec::new();
        for c in &handler.clauses {
            let sig = self.sigs.lookup(&c.op).expect("checked above").clone();
            let env_mark = self.env.len();
            self.level += 1;
            let binders = self.enter_rigid(&sig.bound);
            let pairs: Vec<(Name, Ty)> = sig
                .bound
                .iter()
                .cloned()
                .zip(binders.iter().map(|b| Ty::Var(b.clone())))
                .collect();
            let dom = sig.dom.subst(&pairs);
            let cod = sig.cod.subst(&pairs);
            let param_ir = self.push_var(c.param.clone(), Scheme::mono(dom.clone()));
            let info = ResumeInfo {
                tyvars: binders.clone(),
                param_name: c.param.clone(),
                param_depth: self.env.len() - 1,
                param_ty: dom,
                cont_dom: cod,
                cont_eff: out_eff,
                cont_cod: t_ret.clone(),
            };
            debug_assert!(
                info.cont_dom.ftv().iter().all(|a| binders.contains(a))
                    && info.param_ty.ftv().iter().all(|a| binders.contains(a)),
                "signature types mention only their binders"
            );
            let res = self.infer(Some(&info), &c.body);
            self.env.truncate(env_mark);
            self.level -= 1;
            let (t_body, e_body, ir_body) = res?;
            self.unify(
                &t_body,
                &t_ret,
                c.span,
                "THS-Op: an operation clause must produce the return clause's type",
            )?;
            self.flow(EffAtom::Var(e_body), out_eff, c.span, "THS-Op");
            clauses.push(IrClause {
                binders,
                op: c.op.clone(),
                param: param_ir,
                body: ir_body,
            });
        }

        Ok((
            t_ret,
            out_eff,
            IrTerm::Handle(
                Box::new(ir_scrut),
                IrHandler { ret_var: ret_ir, ret_body: Box::new(ir_ret), clauses },
            ),
        ))
    }

    fn infer_resume(
        &mut self,
        r: Option<&ResumeInfo>,
        arg: &Term,
        span: Span,
    ) -> Result<(Ty, EffVarId, IrTerm), Diagnostic> {
        let info = r.ok_or_else(|| {
            Diagnostic::error(
                "TS-Resume: resume used outside of an operation clause",
                span,
            )
        })?;
        let env_mark = self.env.len();
        let renaming_scope = !self.opts.unsound_shared_resume;
        let (binders, ren): (Vec<Name>, Vec<(Name, Ty)>) = if renaming_scope {
            self.level += 1;
            let bs = self.enter_rigid(&info.tyvars);
            let ren = info
                .tyvars
                .iter()
                .cloned()
                .zip(bs.iter().map(|b| Ty::Var(b.clone())))
                .collect();
            (bs, ren)
        } else {
            (info.tyvars.clone(), Vec::new())
        };
        let expected = info.cont_dom.subst(&ren);
        let param_ty = info.param_ty.subst(&ren);
        // Rebind the clause parameter at its renamed type, unless another
        // binder shadows it here; the rebinding is what lets the parameter
        // be used at the resumption's own type variables.
        let param_ir = self.gen.fresh(info.param_name.as_str());
        let rebinds = self
            .lookup_var(&info.param_name)
            .map(|(depth, _, _)| depth == info.param_depth)
            .unwrap_or(false);
        let mut inner = info.clone();
        if rebinds {
            self.env.push(EnvEntry {
                name: info.param_name.clone(),
                scheme: Scheme::mono(param_ty),
                ir: param_ir.clone(),
            });
            inner.param_depth = self.env.len() - 1;
        }
        let res = self.infer(Some(&inner), arg);
        self.env.truncate(env_mark);
        if renaming_scope {
            self.level -= 1;
        }
        let (t_arg, e_arg, ir_arg) = res?;
        self.unify(
            &t_arg,
            &expected,
            arg.span,
            "TS-Resume: the argument must have the answer type renamed with fresh variables",
        )?;
        let eff = self.fresh_eff();
        self.flow(EffAtom::Var(info.cont_eff), eff, span, "TS-Resume");
        self.flow(EffAtom::Var(e_arg), eff, span, "TS-Resume");
        Ok((
            info.cont_cod.clone(),
            eff,
            IrTerm::Resume { binders, param: param_ir, body: Box::new(ir_arg) },
        ))
    }

    // -- effect solving -----------------------------------------------------

    /// Least solution of the inclusion constraints: effect variables start
    /// empty and grow from ground lower bounds until the fixpoint, then the
    /// ground upper bounds are checked.
    pub fn solve_effects(&mut self) -> Result<(), Diagnostic> {
        let mut sol = vec![Effect::empty(); self.eff_count as usize];
        let eval = |atom: &EffAtom, minus: &Option<Effect>, sol: &[Effect]| -> Effect {
            let base = match atom {
                EffAtom::Set(s) => s.clone(),
                EffAtom::Var(v) => sol[*v as usize].clone(),
            };
            match minus {
                Some(m) => base.minus(m),
                None => base,
            }
        };
        loop {
            let mut changed = false;
            for c in &self.constraints {
                if let EffAtom::Var(v) = c.rhs {
                    let l = eval(&c.lhs, &c.minus, &sol);
                    changed |= sol[v as usize].union_in_place(&l);
                }
            }
            if !changed {
                break;
            }
        }
        for c in &self.constraints {
            if let EffAtom::Set(bound) = &c.rhs {
                let l = eval(&c.lhs, &c.minus, &sol);
                if !l.subset_of(bound) {
                    return Err(Diagnostic::error(
                        format!(
                            "{}: effect {} is not included in the required effect {}",
                            c.rule,
                            l.minus(bound),
                            bound
                        ),
                        c.span,
                    ));
                }
            }
        }
        self.eff_solution = sol;
        Ok(())
    }

    pub fn solved_eff(&self, v: EffVarId) -> Effect {
        self.eff_solution[v as usize].clone()
    }

    // -- finalization -------------------------------------------------------

    /// Resolve every metavariable (unconstrained ones default to the empty
    /// base type ⊥) and replace effect variables by their least solution.
    pub fn finalize_ty(&self, t: &Ty) -> Ty {
        match self.resolve_shallow(t) {
            Ty::Meta(_) => Ty::Base(Base::Bot),
            Ty::Var(a) => Ty::Var(a),
            Ty::Base(b) => Ty::Base(b),
            Ty::Arrow(d, e, c) => {
                let eff = match e {
                    Eff::Set(s) => Eff::Set(s),
                    Eff::Var(v) => Eff::Set(self.solved_eff(v)),
                };
                Ty::arrow(self.finalize_ty(&d), eff, self.finalize_ty(&c))
            }
            Ty::Prod(l, r) => Ty::prod(self.finalize_ty(&l), self.finalize_ty(&r)),
        }
    }

    pub fn finalize_ir(&self, e: &IrTerm) -> IrTerm {
        match e {
            IrTerm::Var(x, tys) => {
                IrTerm::Var(x.clone(), tys.iter().map(|t| self.finalize_ty(t)).collect())
            }
            IrTerm::Const(c) => IrTerm::Const(*c),
            IrTerm::Abs(x, annot, body) => IrTerm::Abs(
                x.clone(),
                self.finalize_ty(annot),
                Box::new(self.finalize_ir(body)),
            ),
            IrTerm::App(f, a) => {
                IrTerm::App(Box::new(self.finalize_ir(f)), Box::new(self.finalize_ir(a)))
            }
            IrTerm::Let { name, binders, annot, bound, body } => IrTerm::Let {
                name: name.clone(),
                binders: binders.clone(),
                annot: self.finalize_ty(annot),
                bound: Box::new(self.finalize_ir(bound)),
                body: Box::new(self.finalize_ir(body)),
            },
            IrTerm::OpCall(op, tys, arg) => IrTerm::OpCall(
                op.clone(),
                tys.iter().map(|t| self.finalize_ty(t)).collect(),
                Box::new(self.finalize_ir(arg)),
            ),
            IrTerm::OpCont { .. } => {
                unreachable!("elaboration never produces a capturing operation node")
            }
            IrTerm::Handle(scrut, h) => IrTerm::Handle(
                Box::new(self.finalize_ir(scrut)),
                IrHandler {
                    ret_var: h.ret_var.clone(),
                    ret_body: Box::new(self.finalize_ir(&h.ret_body)),
                    clauses: h
                        .clauses
                        .iter()
                        .map(|c| IrClause {
                            binders: c.binders.clone(),
                            op: c.op.clone(),
                            param: c.param.clone(),
                            body: self.finalize_ir(&c.body),
                        })
                        .collect(),
                },
            ),
            IrTerm::Resume { binders, param, body } => IrTerm::Resume {
                binders: binders.clone(),
                param: param.clone(),
                body: Box::new(self.finalize_ir(body)),
            },
            IrTerm::Pair(l, r) => {
                IrTerm::Pair(Box::new(self.finalize_ir(l)), Box::new(self.finalize_ir(r)))
            }
            IrTerm::Proj(ix, e) => IrTerm::Proj(*ix, Box::new(self.finalize_ir(e))),
            IrTerm::If(c, a, b) => IrTerm::If(
                Box::new(self.finalize_ir(c)),
                Box::new(self.finalize_ir(a)),
                Box::new(self.finalize_ir(b)),
            ),
        }
    }
}

/// Typecheck and elaborate a whole program.
pub fn check_program(
    prog: &Program,
    sigs: &SigTable,
    opts: Options,
) -> Result<(Checked, NameGen), Diagnostic> {
    let mut infer = Infer::new(sigs, opts);
    let (ty, eff, ir) = infer.infer(None, &prog.main)?;
    infer.solve_effects()?;
    let checked = Checked {
        ty: infer.finalize_ty(&ty),
        eff: infer.solved_eff(eff),
        ir: infer.finalize_ir(&ir),
    };
    Ok((checked, infer.into_name_gen()))
}

/// Build the signature table for a program.
pub fn build_sigs(prog: &Program) -> Result<SigTable, Diagnostic> {
    let mut sigs = SigTable::new();
    for s in &prog.sigs {
        sigs.insert(s.clone())
            .map_err(|msg| Diagnostic::error(msg, prog.main.span))?;
    }
    Ok(sigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn check(src: &str) -> Result<Checked, Diagnostic> {
        let prog = parse_program(src).map_err(|mut e| e.remove(0))?;
        let sigs = build_sigs(&prog)?;
        check_program(&prog, &sigs, Options::default()).map(|(c, _)| c)
    }

    fn check_unsound(src: &str) -> Result<Checked, Diagnostic> {
        let prog = parse_program(src).map_err(|mut e| e.remove(0))?;
        let sigs = build_sigs(&prog)?;
        check_program(&prog, &sigs, Options { unsound_shared_resume: true }).map(|(c, _)| c)
    }

    #[test]
    fn instantiate_replaces_binders_with_distinct_metas() {
        let sigs = SigTable::new();
        let mut inf = Infer::new(&sigs, Options::default());
        let s = Scheme {
            bound: vec![Name::new("a")],
            body: Ty::arrow(Ty::var("a"), Eff::empty(), Ty::var("a")),
        };
        let (t, args) = inf.instantiate(&s);
        match t {
            Ty::Arrow(d, _, c) => {
                assert!(matches!(*d, Ty::Meta(_)));
                assert_eq!(*d, *c);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(args.len(), 1);
        // monotype: empty binder list
        let (t, args) = inf.instantiate(&Scheme::mono(Ty::Base(Base::Int)));
        assert_eq!(t, Ty::Base(Base::Int));
        assert!(args.is_empty());
        // two binders instantiate to distinct metas
        let s = Scheme {
            bound: vec![Name::new("a"), Name::new("b")],
            body: Ty::arrow(Ty::var("a"), Eff::empty(), Ty::var("b")),
        };
        let (t, _) = inf.instantiate(&s);
        match t {
            Ty::Arrow(d, _, c) => assert_ne!(*d, *c),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unify_examples() {
        let sigs = SigTable::new();
        let mut inf = Infer::new(&sigs, Options::default());
        let sp = Span::dummy();
        let m = inf.fresh_meta();
        inf.unify(&m, &Ty::Base(Base::Bool), sp, "test").expect("solves");
        assert_eq!(inf.resolve_deep(&m), Ty::Base(Base::Bool));
        // constructor clash
        let err = inf
            .unify(&Ty::Base(Base::Int), &Ty::Base(Base::Bool), sp, "test")
            .unwrap_err();
        assert!(err.message.contains("mismatch"));
        // occurs check
        let m = inf.fresh_meta();
        let arrow = Ty::arrow(m.clone(), Eff::empty(), Ty::Base(Base::Int));
        let err = inf.unify(&m, &arrow, sp, "test").unwrap_err();
        assert!(err.message.contains("occurs"));
    }

    #[test]
    fn solve_effects_examples() {
        let sigs = SigTable::new();
        let mut inf = Infer::new(&sigs, Options::default());
        let sp = Span::dummy();
        // {?e ⊒ {op}, ?e ⊒ {op'}} has least solution {op, op'}
        let e = inf.fresh_eff();
        inf.flow(EffAtom::Set(Effect::singleton(Name::new("op"))), e, sp, "test");
        inf.flow(EffAtom::Set(Effect::singleton(Name::new("op2"))), e, sp, "test");
        inf.solve_effects().expect("solvable");
        let sol = inf.solved_eff(e);
        assert!(sol.contains(&Name::new("op")) && sol.contains(&Name::new("op2")));
        // no constraints: everything empty
        let mut inf = Infer::new(&sigs, Options::default());
        let e = inf.fresh_eff();
        inf.solve_effects().expect("solvable");
        assert!(inf.solved_eff(e).is_empty());
        // {fail} ⊑ ⟨⟩ is unsatisfiable
        let mut inf = Infer::new(&sigs, Options::default());
        inf.constraints.push(EffConstraint {
            lhs: EffAtom::Set(Effect::singleton(Name::new("fail"))),
            minus: None,
            rhs: EffAtom::Set(Effect::empty()),
            span: sp,
            rule: "test",
        });
        let err = inf.solve_effects().unwrap_err();
        assert!(err.message.contains("not included"));
    }

    #[test]
    fn let_generalizes_without_value_restriction() {
        // let-bound identity used at two types
        let c = check(";; let id = fun z -> z in (id 1, id true)").expect("accepted");
        assert_eq!(c.ty, Ty::prod(Ty::Base(Base::Int), Ty::Base(Base::Bool)));
        assert!(c.eff.is_empty());
        // scheme of x equals the full generalization of v's type
        let c = check(
            "effect choose : forall a. (a * a) => a ;;\n\
             handle (let g = #choose(((fun p -> fst p), (fun p -> snd p))) in (g (1, 2)) + (g (10, 20))) \
             with { return x -> x ; choose(y) -> resume (fst y) }",
        )
        .expect("accepted: effectful let generalizes");
        assert_eq!(c.ty, Ty::Base(Base::Int));
        assert!(c.eff.is_empty());
    }

    #[test]
    fn non_value_let_bindings_generalize() {
        // the bound expression is an application, not a value
        let c = check(";; let p = (fun u -> fun v -> u) 1 in (p true, p ())").expect("accepted");
        assert_eq!(c.ty, Ty::prod(Ty::Base(Base::Int), Ty::Base(Base::Int)));
    }

    #[test]
    fn choose_program_types_at_int_with_no_residual_effect() {
        let c = check(
            "effect choose : forall a. (a * a) => a ;;\n\
             handle #choose((1, 2)) + #choose((10, 20)) with { return x -> x ; choose(y) -> resume (fst y) }",
        )
        .expect("accepted");
        assert_eq!(c.ty, Ty::Base(Base::Int));
        assert!(c.eff.is_empty());
    }

    #[test]
    fn interfering_double_resume_is_rejected() {
        let err = check(
            "effect get_id : forall a. unit => (a -> a) ;;\n\
             handle (let g = #get_id(()) in if g true then g 0 + 1 else 2) with\n\
             { return x -> x ; get_id(y) -> resume (fun z1 -> (resume (fun z2 -> z1)); z1) }",
        )
        .unwrap_err();
        assert!(
            err.message.contains("TS-Resume"),
            "diagnostic should blame TS-Resume, got: {}",
            err.message
        );
    }

    #[test]
    fn non_interfering_double_resume_is_accepted() {
        check(
            "effect get_id : forall a. unit => (a -> a) ;;\n\
             handle (let g = #get_id(()) in if g true then g 0 + 1 else 2) with\n\
             { return x -> x ; get_id(y) -> resume (fun z1 -> (resume (fun z2 -> z2)); z1) }",
        )
        .expect("accepted");
    }

    #[test]
    fn unsound_mode_accepts_the_counterexample() {
        check_unsound(
            "effect get_id : forall a. unit => (a -> a) ;;\n\
             handle (let g = #get_id(()) in if g true then g 0 + 1 else 2) with\n\
             { return x -> x ; get_id(y) -> resume (fun z1 -> (resume (fun z2 -> z1)); z1) }",
        )
        .expect("unsound mode shares the clause variables, so this typechecks");
    }

    #[test]
    fn remark_let_placement() {
        // let outside resume pins y at the clause variable: rejected
        let err = check(
            "effect choose : forall a. (a * a) => a ;;\n\
             handle #choose((1, 2)) with { return x -> x ; choose(y) -> let z = fst y in resume z }",
        )
        .unwrap_err();
        assert!(err.message.contains("TS-Resume"), "got: {}", err.message);
        // let inside resume sees the rebound parameter: accepted
        check(
            "effect choose : forall a. (a * a) => a ;;\n\
             handle #choose((1, 2)) with { return x -> x ; choose(y) -> resume (let z = fst y in z) }",
        )
        .expect("accepted");
    }

    #[test]
    fn resume_outside_clause_is_rejected() {
        let err = check(";; resume 1").unwrap_err();
        assert!(err.message.contains("outside"));
    }

    #[test]
    fn undeclared_operation_is_rejected() {
        let err = check(";; #nope(1)").unwrap_err();
        assert!(err.message.contains("undeclared"));
        let err = check(";; handle 1 with { return x -> x ; nope(y) -> 2 }").unwrap_err();
        assert!(err.message.contains("undeclared"));
    }

    #[test]
    fn unbound_variable_is_rejected() {
        let err = check(";; nope").unwrap_err();
        assert!(err.message.contains("unbound"));
    }

    #[test]
    fn ground_effect_violation_is_rejected() {
        // hof takes a pure thunk; passing an effectful one must fail
        let err = check(
            "effect hof : forall a. (unit -> a) => a\n\
             effect fail : forall a. unit => a ;;\n\
             #hof((fun u -> #fail(())))",
        )
        .unwrap_err();
        assert!(err.message.contains("not included"), "got: {}", err.message);
    }

    #[test]
    fn lambda_shadowing_blocks_the_rebinding() {
        // here the resume argument's `y` is the lambda's parameter, which is
        // not renamed, so its type stays pinned to the clause variable
        let err = check(
            "effect choose : forall a. (a * a) => a ;;\n\
             handle #choose((1, 2)) with { return x -> x ; choose(y) -> (fun y -> resume y) (fst y) }",
        )
        .unwrap_err();
        assert!(err.message.contains("TS-Resume"), "got: {}", err.message);
    }

    #[test]
    fn determinism_two_runs_print_identical_ir() {
        let src = "effect choose : forall a. (a * a) => a ;;\n\
                   handle #choose((1, 2)) + #choose((10, 20)) with { return x -> x ; choose(y) -> resume (fst y) }";
        let a = check(src).unwrap();
        let b = check(src).unwrap();
        assert_eq!(crate::ir::print_ir(&a.ir), crate::ir::print_ir(&b.ir));
        assert!(crate::ir::alpha_eq(&a.ir, &b.ir));
    }
}
