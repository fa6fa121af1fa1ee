//! The explicitly-typed intermediate language: terms with type abstraction
//! and application, handlers with type-binding clauses, bubbling-state
//! operation nodes, and binder-indexed evaluation contexts.

use crate::syntax::*;
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub enum IrTerm {
    /// `x Ā`: a variable applied to the type arguments of its binding site.
    Var(Name, Vec<Ty>),
    Const(Const),
    /// The annotation is the full arrow type of the abstraction.
    Abs(Name, Ty, Box<IrTerm>),
    App(Box<IrTerm>, Box<IrTerm>),
    /// `let x = Λᾱ. e₁ in e₂`, annotated with the scheme `∀ᾱ.A` of `x`.
    Let {
        name: Name,
        binders: Vec<Name>,
        annot: Ty,
        bound: Box<IrTerm>,
        body: Box<IrTerm>,
    },
    /// `#op(Ā, e)`: an operation invocation.
    OpCall(Name, Vec<Ty>, Box<IrTerm>),
    /// `#op(σ̄, w, E)`: an invocation capturing its context.
    OpCont {
        op: Name,
        schemes: Vec<Scheme>,
        pv: PolyValue,
        ctx: EvalCtx,
    },
    Handle(Box<IrTerm>, IrHandler),
    /// `resume ᾱ x. e`.
    Resume {
        binders: Vec<Name>,
        param: Name,
        body: Box<IrTerm>,
    },
    Pair(Box<IrTerm>, Box<IrTerm>),
    Proj(ProjIx, Box<IrTerm>),
    If(Box<IrTerm>, Box<IrTerm>, Box<IrTerm>),
}

/// A polymorphic value `Λᾱ.v`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyValue {
    pub binders: Vec<Name>,
    pub body: Box<IrTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrHandler {
    pub ret_var: Name,
    pub ret_body: Box<IrTerm>,
    pub clauses: Vec<IrClause>,
}

/// `Λᾱ.op(x) → e`.
#[derive(Clone, Debug, PartialEq)]
pub struct IrClause {
    pub binders: Vec<Name>,
    pub op: Name,
    pub param: Name,
    pub body: IrTerm,
}

impl IrHandler {
    pub fn ops(&self) -> Effect {
        Effect::from_ops(self.clauses.iter().map(|c| c.op.clone()))
    }

    pub fn clause(&self, op: &Name) -> Option<&IrClause> {
        self.clauses.iter().find(|c| &c.op == op)
    }
}

/// One frame of an evaluation context. Frames are stored outermost first,
/// innermost last; the hole sits past the final frame.
#[derive(Clone, Debug, PartialEq)]
pub enum Frame {
    /// `[·] e`
    AppL(IrTerm),
    /// `v [·]`
    AppR(IrTerm),
    /// `let x = Λᾱ.[·] in e`, the only frame that binds type variables.
    Let {
        name: Name,
        binders: Vec<Name>,
        annot: Ty,
        body: IrTerm,
    },
    /// `#op(Ā, [·])`
    OpArg(Name, Vec<Ty>),
    /// `handle [·] with h`
    Handle(IrHandler),
    /// `([·], e)`
    PairL(IrTerm),
    /// `(v, [·])`
    PairR(IrTerm),
    /// `fst [·]` / `snd [·]`
    Proj(ProjIx),
    /// `if [·] then e₁ else e₂`
    If(IrTerm, IrTerm),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct EvalCtx {
    pub frames: Vec<Frame>,
}

impl EvalCtx {
    pub fn hole() -> EvalCtx {
        EvalCtx { frames: Vec::new() }
    }

    /// The type variables bound between the root and the hole, outside-in.
    /// This is the `ᾱ` index of `E^ᾱ`.
    pub fn binders(&self) -> Vec<Name> {
        let mut out = Vec::new();
        for f in &self.frames {
            if let Frame::Let { binders, .. } = f {
                out.extend(binders.iter().cloned());
            }
        }
        out
    }

    /// Wrap one more frame around the whole context.
    pub fn extend_outer(&self, f: Frame) -> EvalCtx {
        let mut frames = Vec::with_capacity(self.frames.len() + 1);
        frames.push(f);
        frames.extend(self.frames.iter().cloned());
        EvalCtx { frames }
    }

    /// `E[e]`: rebuild the term with `e` in the hole.
    pub fn plug(&self, e: IrTerm) -> IrTerm {
        let mut t = e;
        for f in self.frames.iter().rev() {
            t = match f.clone() {
                Frame::AppL(arg) => IrTerm::App(Box::new(t), Box::new(arg)),
                Frame::AppR(fun) => IrTerm::App(Box::new(fun), Box::new(t)),
                Frame::Let { name, binders, annot, body } => IrTerm::Let {
                    name,
                    binders,
                    annot,
                    bound: Box::new(t),
                    body: Box::new(body),
                },
                Frame::OpArg(op, tys) => IrTerm::OpCall(op, tys, Box::new(t)),
                Frame::Handle(h) => IrTerm::Handle(Box::new(t), h),
                Frame::PairL(r) => IrTerm::Pair(Box::new(t), Box::new(r)),
                Frame::PairR(l) => IrTerm::Pair(Box::new(l), Box::new(t)),
                Frame::Proj(ix) => IrTerm::Proj(ix, Box::new(t)),
                Frame::If(a, b) => IrTerm::If(Box::new(t), Box::new(a), Box::new(b)),
            };
        }
        t
    }
}

impl IrTerm {
    pub fn is_value(&self) -> bool {
        match self {
            IrTerm::Const(_) | IrTerm::Abs(..) => true,
            IrTerm::Pair(l, r) => l.is_value() && r.is_value(),
            _ => false,
        }
    }

    pub fn var0(name: Name) -> IrTerm {
        IrTerm::Var(name, Vec::new())
    }

    /// Free type variables of a term.
    pub fn ftv(&self) -> BTreeSet<Name> {
        let mut acc = BTreeSet::new();
        collect_ftv_term(self, &mut acc);
        acc
    }
}

fn remove_bound(acc: &mut BTreeSet<Name>, inner: BTreeSet<Name>, binders: &[Name]) {
    for v in inner {
        if !binders.contains(&v) {
            acc.insert(v);
        }
    }
}

fn collect_ftv_term(e: &IrTerm, acc: &mut BTreeSet<Name>) {
    match e {
        IrTerm::Var(_, tys) => {
            for t in tys {
                t.collect_ftv(acc);
            }
        }
        IrTerm::Const(_) => {}
        IrTerm::Abs(_, annot, body) => {
            annot.collect_ftv(acc);
            collect_ftv_term(body, acc);
        }
        IrTerm::App(f, a) => {
            collect_ftv_term(f, acc);
            collect_ftv_term(a, acc);
        }
        IrTerm::Let { binders, annot, bound, body, .. } => {
            let mut inner = BTreeSet::new();
            annot.collect_ftv(&mut inner);
            collect_ftv_term(bound, &mut inner);
            remove_bound(acc, inner, binders);
            collect_ftv_term(body, acc);
        }
        IrTerm::OpCall(_, tys, arg) => {
            for t in tys {
                t.collect_ftv(acc);
            }
            collect_ftv_term(arg, acc);
        }
        IrTerm::OpCont { schemes, pv, ctx, .. } => {
            for s in schemes {
                for v in s.ftv() {
                    acc.insert(v);
                }
            }
            let mut inner = BTreeSet::new();
            collect_ftv_term(&pv.body, &mut inner);
            remove_bound(acc, inner, &pv.binders);
            collect_ftv_ctx(ctx, acc);
        }
        IrTerm::Handle(e, h) => {
            collect_ftv_term(e, acc);
            collect_ftv_handler(h, acc);
        }
        IrTerm::Resume { binders, body, .. } => {
            let mut inner = BTreeSet::new();
            collect_ftv_term(body, &mut inner);
            remove_bound(acc, inner, binders);
        }
        IrTerm::Pair(l, r) => {
            collect_ftv_term(l, acc);
            collect_ftv_term(r, acc);
        }
        IrTerm::Proj(_, e) => collect_ftv_term(e, acc),
        IrTerm::If(c, a, b) => {
            collect_ftv_term(c, acc);
            collect_ftv_term(a, acc);
            collect_ftv_term(b, acc);
        }
    }
}

fn collect_ftv_handler(h: &IrHandler, acc: &mut BTreeSet<Name>) {
    collect_ftv_term(&h.ret_body, acc);
    for c in &h.clauses {
        let mut inner = BTreeSet::new();
        collect_ftv_term(&c.body, &mut inner);
        remove_bound(acc, inner, &c.binders);
    }
}

/// Free type variables of a context. Let frames bind their variables in the
/// hole-ward remainder, not in their own body.
fn collect_ftv_ctx(ctx: &EvalCtx, acc: &mut BTreeSet<Name>) {
    fn go(frames: &[Frame], acc: &mut BTreeSet<Name>) {
        let Some((f, rest)) = frames.split_first() else { return };
        match f {
            Frame::AppL(e) | Frame::AppR(e) | Frame::PairL(e) | Frame::PairR(e) => {
                collect_ftv_term(e, acc);
                go(rest, acc);
            }
            Frame::Let { binders, annot, body, .. } => {
                collect_ftv_term(body, acc);
                let mut inner = BTreeSet::new();
                annot.collect_ftv(&mut inner);
                go(rest, &mut inner);
                remove_bound(acc, inner, binders);
            }
            Frame::OpArg(_, tys) => {
                for t in tys {
                    t.collect_ftv(acc);
                }
                go(rest, acc);
            }
            Frame::Handle(h) => {
                collect_ftv_handler(h, acc);
                go(rest, acc);
            }
            Frame::Proj(_) => go(rest, acc),
            Frame::If(a, b) => {
                collect_ftv_term(a, acc);
                collect_ftv_term(b, acc);
                go(rest, acc);
            }
        }
    }
    go(&ctx.frames, acc);
}

pub fn ftv_ctx(ctx: &EvalCtx) -> BTreeSet<Name> {
    let mut acc = BTreeSet::new();
    collect_ftv_ctx(ctx, &mut acc);
    acc
}

// ---------------------------------------------------------------------------
// Type substitution
// ---------------------------------------------------------------------------

/// Simultaneous, capture-avoiding substitution of types for type variables.
/// Generated names are globally fresh so binder collisions do not arise in
/// practice; shadowed variables are still dropped for correctness.
pub fn subst_ty_term(e: &IrTerm, pairs: &[(Name, Ty)]) -> IrTerm {
    if pairs.is_empty() {
        return e.clone();
    }
    match e {
        IrTerm::Var(x, tys) => {
            IrTerm::Var(x.clone(), tys.iter().map(|t| t.subst(pairs)).collect())
        }
        IrTerm::Const(_) => e.clone(),
        IrTerm::Abs(x, annot, body) => IrTerm::Abs(
            x.clone(),
            annot.subst(pairs),
            Box::new(subst_ty_term(body, pairs)),
        ),
        IrTerm::App(f, a) => IrTerm::App(
            Box::new(subst_ty_term(f, pairs)),
            Box::new(subst_ty_term(a, pairs)),
        ),
        IrTerm::Let { name, binders, annot, bound, body } => {
            let inner = shadow(pairs, binders);
            IrTerm::Let {
                name: name.clone(),
                binders: binders.clone(),
                annot: annot.subst(&inner),
                bound: Box::new(subst_ty_term(bound, &inner)),
                body: Box::new(subst_ty_term(body, pairs)),
            }
        }
        IrTerm::OpCall(op, tys, arg) => IrTerm::OpCall(
            op.clone(),
            tys.iter().map(|t| t.subst(pairs)).collect(),
            Box::new(subst_ty_term(arg, pairs)),
        ),
        IrTerm::OpCont { op, schemes, pv, ctx } => IrTerm::OpCont {
            op: op.clone(),
            schemes: schemes.iter().map(|s| subst_ty_scheme(s, pairs)).collect(),
            pv: subst_ty_pv(pv, pairs),
            ctx: subst_ty_ctx(ctx, pairs),
        },
        IrTerm::Handle(e, h) => IrTerm::Handle(
            Box::new(subst_ty_term(e, pairs)),
            subst_ty_handler(h, pairs),
        ),
        IrTerm::Resume { binders, param, body } => {
            let inner = shadow(pairs, binders);
            IrTerm::Resume {
                binders: binders.clone(),
                param: param.clone(),
                body: Box::new(subst_ty_term(body, &inner)),
            }
        }
        IrTerm::Pair(l, r) => IrTerm::Pair(
            Box::new(subst_ty_term(l, pairs)),
            Box::new(subst_ty_term(r, pairs)),
        ),
        IrTerm::Proj(ix, e) => IrTerm::Proj(*ix, Box::new(subst_ty_term(e, pairs))),
        IrTerm::If(c, a, b) => IrTerm::If(
            Box::new(subst_ty_term(c, pairs)),
            Box::new(subst_ty_term(a, pairs)),
            Box::new(subst_ty_term(b, pairs)),
        ),
    }
}

fn shadow(pairs: &[(Name, Ty)], binders: &[Name]) -> Vec<(Name, Ty)> {
    pairs
        .iter()
        .filter(|(a, _)| !binders.contains(a))
        .cloned()
        .collect()
}

pub fn subst_ty_scheme(s: &Scheme, pairs: &[(Name, Ty)]) -> Scheme {
    let inner = shadow(pairs, &s.bound);
    Scheme { bound: s.bound.clone(), body: s.body.subst(&inner) }
}

fn subst_ty_pv(pv: &PolyValue, pairs: &[(Name, Ty)]) -> PolyValue {
    let inner = shadow(pairs, &pv.binders);
    PolyValue {
        binders: pv.binders.clone(),
        body: Box::new(subst_ty_term(&pv.body, &inner)),
    }
}

pub fn subst_ty_handler(h: &IrHandler, pairs: &[(Name, Ty)]) -> IrHandler {
    IrHandler {
        ret_var: h.ret_var.clone(),
        ret_body: Box::new(subst_ty_term(&h.ret_body, pairs)),
        clauses: h
            .clauses
            .iter()
            .map(|c| {
                let inner = shadow(pairs, &c.binders);
                IrClause {
                    binders: c.binders.clone(),
                    op: c.op.clone(),
                    param: c.param.clone(),
                    body: subst_ty_term(&c.body, &inner),
                }
            })
            .collect(),
    }
}

pub fn subst_ty_ctx(ctx: &EvalCtx, pairs: &[(Name, Ty)]) -> EvalCtx {
    fn go(frames: &[Frame], pairs: &[(Name, Ty)]) -> Vec<Frame> {
        let Some((f, rest)) = frames.split_first() else { return Vec::new() };
        match f {
            Frame::Let { name, binders, annot, body } => {
                let inner = shadow(pairs, binders);
                let mut out = vec![Frame::Let {
                    name: name.clone(),
                    binders: binders.clone(),
                    annot: annot.subst(&inner),
                    body: subst_ty_term(body, pairs),
                }];
                out.extend(go(rest, &inner));
                out
            }
            other => {
                let head = match other {
                    Frame::AppL(e) => Frame::AppL(subst_ty_term(e, pairs)),
                    Frame::AppR(e) => Frame::AppR(subst_ty_term(e, pairs)),
                    Frame::OpArg(op, tys) => Frame::OpArg(
                        op.clone(),
                        tys.iter().map(|t| t.subst(pairs)).collect(),
                    ),
                    Frame::Handle(h) => Frame::Handle(subst_ty_handler(h, pairs)),
                    Frame::PairL(e) => Frame::PairL(subst_ty_term(e, pairs)),
                    Frame::PairR(e) => Frame::PairR(subst_ty_term(e, pairs)),
                    Frame::Proj(ix) => Frame::Proj(*ix),
                    Frame::If(a, b) => {
                        Frame::If(subst_ty_term(a, pairs), subst_ty_term(b, pairs))
                    }
                    Frame::Let { .. } => unreachable!(),
                };
                let mut out = vec![head];
                out.extend(go(rest, pairs));
                out
            }
        }
    }
    EvalCtx { frames: go(&ctx.frames, pairs) }
}

// ---------------------------------------------------------------------------
// Alpha-freshening
// ---------------------------------------------------------------------------

/// Rename every type binder in the term to a fresh name. Splicing a term in
/// several places (value substitution, continuation substitution) would
/// otherwise duplicate binders, and later steps could nest such duplicates;
/// freshening each copy keeps all bound type variables of an evaluated term
/// distinct, which the checker's well-formed contexts rely on.
pub fn freshen_ty_binders(e: &IrTerm, gen: &mut NameGen) -> IrTerm {
    let mut map: Vec<(Name, Name)> = Vec::new();
    fresh_term(e, &mut map, gen)
}

fn map_ty(t: &Ty, map: &[(Name, Name)]) -> Ty {
    match t {
        Ty::Var(a) => {
            for (from, to) in map.iter().rev() {
                if from == a {
                    return Ty::Var(to.clone());
                }
            }
            t.clone()
        }
        Ty::Base(_) | Ty::Meta(_) => t.clone(),
        Ty::Arrow(d, e, c) => Ty::arrow(map_ty(d, map), e.clone(), map_ty(c, map)),
        Ty::Prod(l, r) => Ty::prod(map_ty(l, map), map_ty(r, map)),
    }
}

fn fresh_binders(
    binders: &[Name],
    map: &mut Vec<(Name, Name)>,
    gen: &mut NameGen,
) -> Vec<Name> {
    binders
        .iter()
        .map(|b| {
            let nb = gen.fresh(b.as_str());
            map.push((b.clone(), nb.clone()));
            nb
        })
        .collect()
}

fn fresh_term(e: &IrTerm, map: &mut Vec<(Name, Name)>, gen: &mut NameGen) -> IrTerm {
    match e {
        IrTerm::Var(x, tys) => {
            IrTerm::Var(x.clone(), tys.iter().map(|t| map_ty(t, map)).collect())
        }
        IrTerm::Const(_) => e.clone(),
        IrTerm::Abs(x, annot, body) => IrTerm::Abs(
            x.clone(),
            map_ty(annot, map),
            Box::new(fresh_term(body, map, gen)),
        ),
        IrTerm::App(f, a) => IrTerm::App(
            Box::new(fresh_term(f, map, gen)),
            Box::new(fresh_term(a, map, gen)),
        ),
        IrTerm::Let { name, binders, annot, bound, body } => {
            let mark = map.len();
            let nb = fresh_binders(binders, map, gen);
            let annot = map_ty(annot, map);
            let bound = fresh_term(bound, map, gen);
            map.truncate(mark);
            IrTerm::Let {
                name: name.clone(),
                binders: nb,
                annot,
                bound: Box::new(bound),
                body: Box::new(fresh_term(body, map, gen)),
            }
        }
        IrTerm::OpCall(op, tys, arg) => IrTerm::OpCall(
            op.clone(),
            tys.iter().map(|t| map_ty(t, map)).collect(),
            Box::new(fresh_term(arg, map, gen)),
        ),
        IrTerm::OpCont { op, schemes, pv, ctx } => {
            // The captured binders are shared between the schemes, the value
            // and the context's let frames; rename them as one group so the
            // linkage survives. Inconsistent groups are left inconsistent
            // for the checker to reject.
            let captured = ctx.binders();
            let consistent = pv.binders == captured
                && schemes.iter().all(|s| s.bound == captured);
            if consistent {
                let mark = map.len();
                let nb = fresh_binders(&captured, map, gen);
                let schemes = schemes
                    .iter()
                    .map(|s| Scheme { bound: nb.clone(), body: map_ty(&s.body, map) })
                    .collect();
                let pv = PolyValue {
                    binders: nb.clone(),
                    body: Box::new(fresh_term(&pv.body, map, gen)),
                };
                // the context consumes the shared names segment by segment,
                // so walk it under the same mapping
                let ctx = fresh_ctx(&ctx.frames, map, gen, &mut nb.iter().cloned());
                map.truncate(mark);
                IrTerm::OpCont { op: op.clone(), schemes, pv, ctx }
            } else {
                let schemes = schemes
                    .iter()
                    .map(|s| {
                        let mark = map.len();
                        let nb = fresh_binders(&s.bound, map, gen);
                        let body = map_ty(&s.body, map);
                        map.truncate(mark);
                        Scheme { bound: nb, body }
                    })
                    .collect();
                let mark = map.len();
                let nb = fresh_binders(&pv.binders, map, gen);
                let pv = PolyValue {
                    binders: nb,
                    body: Box::new(fresh_term(&pv.body, map, gen)),
                };
                map.truncate(mark);
                let mut none = std::iter::empty();
                let ctx = fresh_ctx(&ctx.frames, map, gen, &mut none);
                IrTerm::OpCont { op: op.clone(), schemes, pv, ctx }
            }
        }
        IrTerm::Handle(scrut, h) => IrTerm::Handle(
            Box::new(fresh_term(scrut, map, gen)),
            fresh_handler(h, map, gen),
        ),
        IrTerm::Resume { binders, param, body } => {
            let mark = map.len();
            let nb = fresh_binders(binders, map, gen);
            let body = fresh_term(body, map, gen);
            map.truncate(mark);
            IrTerm::Resume { binders: nb, param: param.clone(), body: Box::new(body) }
        }
        IrTerm::Pair(l, r) => IrTerm::Pair(
            Box::new(fresh_term(l, map, gen)),
            Box::new(fresh_term(r, map, gen)),
        ),
        IrTerm::Proj(ix, e) => IrTerm::Proj(*ix, Box::new(fresh_term(e, map, gen))),
        IrTerm::If(c, a, b) => IrTerm::If(
            Box::new(fresh_term(c, map, gen)),
            Box::new(fresh_term(a, map, gen)),
            Box::new(fresh_term(b, map, gen)),
        ),
    }
}

fn fresh_handler(h: &IrHandler, map: &mut Vec<(Name, Name)>, gen: &mut NameGen) -> IrHandler {
    IrHandler {
        ret_var: h.ret_var.clone(),
        ret_body: Box::new(fresh_term(&h.ret_body, map, gen)),
        clauses: h
            .clauses
            .iter()
            .map(|c| {
                let mark = map.len();
                let nb = fresh_binders(&c.binders, map, gen);
                let body = fresh_term(&c.body, map, gen);
                map.truncate(mark);
                IrClause { binders: nb, op: c.op.clone(), param: c.param.clone(), body }
            })
            .collect(),
    }
}

/// Frames share the OpCont group names: when `shared` yields names, each let
/// frame takes its binders from that stream instead of minting new ones.
fn fresh_ctx(
    frames: &[Frame],
    map: &mut Vec<(Name, Name)>,
    gen: &mut NameGen,
    shared: &mut dyn Iterator<Item = Name>,
) -> EvalCtx {
    fn go(
        frames: &[Frame],
        map: &mut Vec<(Name, Name)>,
        gen: &mut NameGen,
        shared: &mut dyn Iterator<Item = Name>,
    ) -> Vec<Frame> {
        let Some((f, rest)) = frames.split_first() else { return Vec::new() };
        match f {
            Frame::Let { name, binders, annot, body } => {
                let body = fresh_term(body, map, gen);
                let mark = map.len();
                let nb: Vec<Name> = binders
                    .iter()
                    .map(|b| {
                        let nb = shared.next().unwrap_or_else(|| gen.fresh(b.as_str()));
                        map.push((b.clone(), nb.clone()));
                        nb
                    })
                    .collect();
                let annot = map_ty(annot, map);
                let mut out = vec![Frame::Let { name: name.clone(), binders: nb, annot, body }];
                out.extend(go(rest, map, gen, shared));
                map.truncate(mark);
                out
            }
            other => {
                let head = match other {
                    Frame::AppL(e) => Frame::AppL(fresh_term(e, map, gen)),
                    Frame::AppR(e) => Frame::AppR(fresh_term(e, map, gen)),
                    Frame::OpArg(op, tys) => Frame::OpArg(
                        op.clone(),
                        tys.iter().map(|t| map_ty(t, map)).collect(),
                    ),
                    Frame::Handle(h) => Frame::Handle(fresh_handler(h, map, gen)),
                    Frame::PairL(e) => Frame::PairL(fresh_term(e, map, gen)),
                    Frame::PairR(e) => Frame::PairR(fresh_term(e, map, gen)),
                    Frame::Proj(ix) => Frame::Proj(*ix),
                    Frame::If(a, b) => {
                        Frame::If(fresh_term(a, map, gen), fresh_term(b, map, gen))
                    }
                    Frame::Let { .. } => unreachable!(),
                };
                let mut out = vec![head];
                out.extend(go(rest, map, gen, shared));
                out
            }
        }
    }
    EvalCtx { frames: go(frames, map, gen, shared) }
}

// ---------------------------------------------------------------------------
// Value substitution
// ---------------------------------------------------------------------------

/// `e[Λᾱ.v / x]`. At each occurrence `x Ā` the body is instantiated:
/// `(x Ā)[Λᾱ.v/x] = v[Ā/ᾱ]`, with the copy's own type binders freshened.
/// Occurrences must match the binder arity.
pub fn subst_val(e: &IrTerm, x: &Name, w: &PolyValue, gen: &mut NameGen) -> IrTerm {
    match e {
        IrTerm::Var(y, tys) => {
            if y == x {
                assert_eq!(
                    tys.len(),
                    w.binders.len(),
                    "substitution arity mismatch at {y}: {} type arguments against {} binders",
                    tys.len(),
                    w.binders.len()
                );
                let pairs: Vec<(Name, Ty)> =
                    w.binders.iter().cloned().zip(tys.iter().cloned()).collect();
                freshen_ty_binders(&subst_ty_term(&w.body, &pairs), gen)
            } else {
                e.clone()
            }
        }
        IrTerm::Const(_) => e.clone(),
        IrTerm::Abs(y, annot, body) => {
            if y == x {
                e.clone()
            } else {
                IrTerm::Abs(y.clone(), annot.clone(), Box::new(subst_val(body, x, w, gen)))
            }
        }
        IrTerm::App(f, a) => IrTerm::App(
            Box::new(subst_val(f, x, w, gen)),
            Box::new(subst_val(a, x, w, gen)),
        ),
        IrTerm::Let { name, binders, annot, bound, body } => IrTerm::Let {
            name: name.clone(),
            binders: binders.clone(),
            annot: annot.clone(),
            bound: Box::new(subst_val(bound, x, w, gen)),
            body: if name == x {
                body.clone()
            } else {
                Box::new(subst_val(body, x, w, gen))
            },
        },
        IrTerm::OpCall(op, tys, arg) => {
            IrTerm::OpCall(op.clone(), tys.clone(), Box::new(subst_val(arg, x, w, gen)))
        }
        IrTerm::OpCont { op, schemes, pv, ctx } => IrTerm::OpCont {
            op: op.clone(),
            schemes: schemes.clone(),
            pv: PolyValue {
                binders: pv.binders.clone(),
                body: Box::new(subst_val(&pv.body, x, w, gen)),
            },
            ctx: subst_val_ctx(ctx, x, w, gen),
        },
        IrTerm::Handle(e, h) => {
            IrTerm::Handle(Box::new(subst_val(e, x, w, gen)), subst_val_handler(h, x, w, gen))
        }
        IrTerm::Resume { binders, param, body } => IrTerm::Resume {
            binders: binders.clone(),
            param: param.clone(),
            body: if param == x {
                body.clone()
            } else {
                Box::new(subst_val(body, x, w, gen))
            },
        },
        IrTerm::Pair(l, r) => IrTerm::Pair(
            Box::new(subst_val(l, x, w, gen)),
            Box::new(subst_val(r, x, w, gen)),
        ),
        IrTerm::Proj(ix, e) => IrTerm::Proj(*ix, Box::new(subst_val(e, x, w, gen))),
        IrTerm::If(c, a, b) => IrTerm::If(
            Box::new(subst_val(c, x, w, gen)),
            Box::new(subst_val(a, x, w, gen)),
            Box::new(subst_val(b, x, w, gen)),
        ),
    }
}

fn subst_val_handler(h: &IrHandler, x: &Name, w: &PolyValue, gen: &mut NameGen) -> IrHandler {
    IrHandler {
        ret_var: h.ret_var.clone(),
        ret_body: if h.ret_var == *x {
            h.ret_body.clone()
        } else {
            Box::new(subst_val(&h.ret_body, x, w, gen))
        },
        clauses: h
            .clauses
            .iter()
            .map(|c| IrClause {
                binders: c.binders.clone(),
                op: c.op.clone(),
                param: c.param.clone(),
                body: if c.param == *x {
                    c.body.clone()
                } else {
                    subst_val(&c.body, x, w, gen)
                },
            })
            .collect(),
    }
}

fn subst_val_ctx(ctx: &EvalCtx, x: &Name, w: &PolyValue, gen: &mut NameGen) -> EvalCtx {
    // A let frame's binder scopes over its body, never toward the hole, so
    // frames are independent of one another here.
    let frames = ctx
        .frames
        .iter()
        .map(|f| match f {
            Frame::AppL(e) => Frame::AppL(subst_val(e, x, w, gen)),
            Frame::AppR(e) => Frame::AppR(subst_val(e, x, w, gen)),
            Frame::Let { name, binders, annot, body } => Frame::Let {
                name: name.clone(),
                binders: binders.clone(),
                annot: annot.clone(),
                body: if name == x {
                    body.clone()
                } else {
                    subst_val(body, x, w, gen)
                },
            },
            Frame::OpArg(op, tys) => Frame::OpArg(op.clone(), tys.clone()),
            Frame::Handle(h) => Frame::Handle(subst_val_handler(h, x, w, gen)),
            Frame::PairL(e) => Frame::PairL(subst_val(e, x, w, gen)),
            Frame::PairR(e) => Frame::PairR(subst_val(e, x, w, gen)),
            Frame::Proj(ix) => Frame::Proj(*ix),
            Frame::If(a, b) => Frame::If(subst_val(a, x, w, gen), subst_val(b, x, w, gen)),
        })
        .collect();
    EvalCtx { frames }
}

// ---------------------------------------------------------------------------
// Continuation substitution
// ---------------------------------------------------------------------------

/// Substitution of continuation `E^β̄` for resumptions:
/// `e[E^β̄ / resume]^(∀β̄.C̄)_{Λβ̄.v}`. Each resumption node
/// `resume γ̄ z. e′` becomes
/// `let y = Λβ̄. e′⟨recursed⟩[C̄/γ̄][v/z] in E[y β̄]` with `y` fresh.
/// On handlers the substitution reaches return clauses only.
pub struct ContSubst<'a> {
    pub ctx: &'a EvalCtx,
    /// Binders β̄ shared by the context, the schemes and the value.
    pub binders: &'a [Name],
    /// Bodies C̄ of the schemes `∀β̄.Cᵢ`, substituted per resume binder.
    pub scheme_bodies: &'a [Ty],
    /// Body `v` of the captured `Λβ̄.v`.
    pub value: &'a IrTerm,
    /// Result type of a resumption, `B[C̄/ᾱ]`; annotates the generated lets.
    pub result_ty: &'a Ty,
}

impl<'a> ContSubst<'a> {
    pub fn apply(&self, e: &IrTerm, gen: &mut NameGen) -> IrTerm {
        debug_assert!(
            e.ftv().iter().all(|a| !self.binders.contains(a))
                && ftv_ctx(self.ctx).iter().all(|a| !self.binders.contains(a)),
            "continuation substitution requires the captured binders fresh for the clause body"
        );
        self.go(e, gen)
    }

    fn go(&self, e: &IrTerm, gen: &mut NameGen) -> IrTerm {
        match e {
            IrTerm::Resume { binders, param, body } => {
                assert_eq!(
                    binders.len(),
                    self.scheme_bodies.len(),
                    "resume arity mismatch against captured schemes"
                );
                let recursed = self.go(body, gen);
                let ty_pairs: Vec<(Name, Ty)> = binders
                    .iter()
                    .cloned()
                    .zip(self.scheme_bodies.iter().cloned())
                    .collect();
                let retyped = subst_ty_term(&recursed, &ty_pairs);
                let arg = subst_val(
                    &retyped,
                    param,
                    &PolyValue { binders: Vec::new(), body: Box::new(self.value.clone()) },
                    gen,
                );
                // The generated let abstracts over the captured β̄. Each
                // resumption gets its own alpha-copy so that sibling and
                // nested rewrites never bind the same names twice; the use
                // site keeps the original names, which the context's own
                // frames bind.
                let fresh: Vec<Name> =
                    self.binders.iter().map(|b| gen.fresh(b.as_str())).collect();
                let rename: Vec<(Name, Ty)> = self
                    .binders
                    .iter()
                    .cloned()
                    .zip(fresh.iter().map(|b| Ty::Var(b.clone())))
                    .collect();
                let y = gen.fresh("r");
                let use_site = IrTerm::Var(
                    y.clone(),
                    self.binders.iter().map(|b| Ty::Var(b.clone())).collect(),
                );
                IrTerm::Let {
                    name: y,
                    binders: fresh,
                    annot: self.result_ty.subst(&rename),
                    bound: Box::new(subst_ty_term(&arg, &rename)),
                    body: Box::new(self.ctx.plug(use_site)),
                }
            }
            IrTerm::Var(..) | IrTerm::Const(_) => e.clone(),
            IrTerm::Abs(x, annot, body) => {
                IrTerm::Abs(x.clone(), annot.clone(), Box::new(self.go(body, gen)))
            }
            IrTerm::App(f, a) => {
                IrTerm::App(Box::new(self.go(f, gen)), Box::new(self.go(a, gen)))
            }
            IrTerm::Let { name, binders, annot, bound, body } => IrTerm::Let {
                name: name.clone(),
                binders: binders.clone(),
                annot: annot.clone(),
                bound: Box::new(self.go(bound, gen)),
                body: Box::new(self.go(body, gen)),
            },
            IrTerm::OpCall(op, tys, arg) => {
                IrTerm::OpCall(op.clone(), tys.clone(), Box::new(self.go(arg, gen)))
            }
            IrTerm::OpCont { op, schemes, pv, ctx } => IrTerm::OpCont {
                op: op.clone(),
                schemes: schemes.clone(),
                pv: PolyValue {
                    binders: pv.binders.clone(),
                    body: Box::new(self.go(&pv.body, gen)),
                },
                ctx: self.go_ctx(ctx, gen),
            },
            IrTerm::Handle(scrut, h) => {
                IrTerm::Handle(Box::new(self.go(scrut, gen)), self.go_handler(h, gen))
            }
            IrTerm::Pair(l, r) => {
                IrTerm::Pair(Box::new(self.go(l, gen)), Box::new(self.go(r, gen)))
            }
            IrTerm::Proj(ix, e) => IrTerm::Proj(*ix, Box::new(self.go(e, gen))),
            IrTerm::If(c, a, b) => IrTerm::If(
                Box::new(self.go(c, gen)),
                Box::new(self.go(a, gen)),
                Box::new(self.go(b, gen)),
            ),
        }
    }

    /// Handlers: the return clause is rewritten, operation clauses are left
    /// untouched (their resumptions belong to the nested handler).
    fn go_handler(&self, h: &IrHandler, gen: &mut NameGen) -> IrHandler {
        IrHandler {
            ret_var: h.ret_var.clone(),
            ret_body: Box::new(self.go(&h.ret_body, gen)),
            clauses: h.clauses.clone(),
        }
    }

    fn go_ctx(&self, ctx: &EvalCtx, gen: &mut NameGen) -> EvalCtx {
        let frames = ctx
            .frames
            .iter()
            .map(|f| match f {
                Frame::AppL(e) => Frame::AppL(self.go(e, gen)),
                Frame::AppR(e) => Frame::AppR(self.go(e, gen)),
                Frame::Let { name, binders, annot, body } => Frame::Let {
                    name: name.clone(),
                    binders: binders.clone(),
                    annot: annot.clone(),
                    body: self.go(body, gen),
                },
                Frame::OpArg(op, tys) => Frame::OpArg(op.clone(), tys.clone()),
                Frame::Handle(h) => Frame::Handle(self.go_handler(h, gen)),
                Frame::PairL(e) => Frame::PairL(self.go(e, gen)),
                Frame::PairR(e) => Frame::PairR(self.go(e, gen)),
                Frame::Proj(ix) => Frame::Proj(*ix),
                Frame::If(a, b) => Frame::If(self.go(a, gen), self.go(b, gen)),
            })
            .collect();
        EvalCtx { frames }
    }
}

// ---------------------------------------------------------------------------
// Alpha equivalence
// ---------------------------------------------------------------------------

/// Alpha equivalence of terms, identifying both term and type binders.
pub fn alpha_eq(a: &IrTerm, b: &IrTerm) -> bool {
    let mut env = AlphaEnv::default();
    env.term(a, b)
}

#[derive(Default)]
struct AlphaEnv {
    // pairs of identified binder names, innermost last
    terms: Vec<(Name, Name)>,
    tys: Vec<(Name, Name)>,
}

impl AlphaEnv {
    fn with_terms<R>(&mut self, xs: &[(Name, Name)], f: impl FnOnce(&mut Self) -> R) -> R {
        let n = self.terms.len();
        self.terms.extend(xs.iter().cloned());
        let r = f(self);
        self.terms.truncate(n);
        r
    }

    fn with_tys<R>(&mut self, xs: &[(Name, Name)], f: impl FnOnce(&mut Self) -> R) -> R {
        let n = self.tys.len();
        self.tys.extend(xs.iter().cloned());
        let r = f(self);
        self.tys.truncate(n);
        r
    }

    fn term_var(&self, x: &Name, y: &Name) -> bool {
        for (a, b) in self.terms.iter().rev() {
            if a == x || b == y {
                return a == x && b == y;
            }
        }
        x == y
    }

    fn ty_var(&self, x: &Name, y: &Name) -> bool {
        for (a, b) in self.tys.iter().rev() {
            if a == x || b == y {
                return a == x && b == y;
            }
        }
        x == y
    }

    fn ty(&self, a: &Ty, b: &Ty) -> bool {
        match (a, b) {
            (Ty::Var(x), Ty::Var(y)) => self.ty_var(x, y),
            (Ty::Base(x), Ty::Base(y)) => x == y,
            (Ty::Meta(x), Ty::Meta(y)) => x == y,
            (Ty::Arrow(d1, e1, c1), Ty::Arrow(d2, e2, c2)) => {
                self.ty(d1, d2) && e1 == e2 && self.ty(c1, c2)
            }
            (Ty::Prod(l1, r1), Ty::Prod(l2, r2)) => self.ty(l1, l2) && self.ty(r1, r2),
            _ => false,
        }
    }

    fn tys_eq(&self, a: &[Ty], b: &[Ty]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| self.ty(x, y))
    }

    fn scheme(&mut self, a: &Scheme, b: &Scheme) -> bool {
        if a.bound.len() != b.bound.len() {
            return false;
        }
        let pairs: Vec<(Name, Name)> =
            a.bound.iter().cloned().zip(b.bound.iter().cloned()).collect();
        self.with_tys(&pairs, |env| env.ty(&a.body, &b.body))
    }

    fn term(&mut self, a: &IrTerm, b: &IrTerm) -> bool {
        use IrTerm::*;
        match (a, b) {
            (Var(x, ts), Var(y, us)) => self.term_var(x, y) && self.tys_eq(ts, us),
            (Const(c), Const(d)) => c == d,
            (Abs(x, t1, e1), Abs(y, t2, e2)) => {
                self.ty(t1, t2)
                    && self.with_terms(&[(x.clone(), y.clone())], |env| env.term(e1, e2))
            }
            (App(f1, a1), App(f2, a2)) => self.term(f1, f2) && self.term(a1, a2),
            (
                Let { name: x, binders: bs1, annot: t1, bound: e1, body: k1 },
                Let { name: y, binders: bs2, annot: t2, bound: e2, body: k2 },
            ) => {
                if bs1.len() != bs2.len() {
                    return false;
                }
                let typairs: Vec<(Name, Name)> =
                    bs1.iter().cloned().zip(bs2.iter().cloned()).collect();
                self.with_tys(&typairs, |env| env.ty(t1, t2) && env.term(e1, e2))
                    && self.with_terms(&[(x.clone(), y.clone())], |env| env.term(k1, k2))
            }
            (OpCall(o1, ts, e1), OpCall(o2, us, e2)) => {
                o1 == o2 && self.tys_eq(ts, us) && self.term(e1, e2)
            }
            (
                OpCont { op: o1, schemes: s1, pv: p1, ctx: c1 },
                OpCont { op: o2, schemes: s2, pv: p2, ctx: c2 },
            ) => {
                o1 == o2
                    && s1.len() == s2.len()
                    && s1.iter().zip(s2).all(|(x, y)| self.scheme(x, y))
                    && {
                        if p1.binders.len() != p2.binders.len() {
                            return false;
                        }
                        let typairs: Vec<(Name, Name)> = p1
                            .binders
                            .iter()
                            .cloned()
                            .zip(p2.binders.iter().cloned())
                            .collect();
                        self.with_tys(&typairs, |env| env.term(&p1.body, &p2.body))
                    }
                    && self.ctx(&c1.frames, &c2.frames)
            }
            (Handle(e1, h1), Handle(e2, h2)) => self.term(e1, e2) && self.handler(h1, h2),
            (
                Resume { binders: bs1, param: x, body: e1 },
                Resume { binders: bs2, param: y, body: e2 },
            ) => {
                if bs1.len() != bs2.len() {
                    return false;
                }
                let typairs: Vec<(Name, Name)> =
                    bs1.iter().cloned().zip(bs2.iter().cloned()).collect();
                self.with_tys(&typairs, |env| {
                    env.with_terms(&[(x.clone(), y.clone())], |env| env.term(e1, e2))
                })
            }
            (Pair(l1, r1), Pair(l2, r2)) => self.term(l1, l2) && self.term(r1, r2),
            (Proj(i, e1), Proj(j, e2)) => i == j && self.term(e1, e2),
            (If(c1, a1, b1), If(c2, a2, b2)) => {
                self.term(c1, c2) && self.term(a1, a2) && self.term(b1, b2)
            }
            _ => false,
        }
    }

    fn handler(&mut self, h1: &IrHandler, h2: &IrHandler) -> bool {
        if h1.clauses.len() != h2.clauses.len() {
            return false;
        }
        self.with_terms(&[(h1.ret_var.clone(), h2.ret_var.clone())], |env| {
            env.term(&h1.ret_body, &h2.ret_body)
        }) && h1.clauses.iter().zip(&h2.clauses).all(|(c1, c2)| {
            c1.op == c2.op && c1.binders.len() == c2.binders.len() && {
                let typairs: Vec<(Name, Name)> =
                    c1.binders.iter().cloned().zip(c2.binders.iter().cloned()).collect();
                self.with_tys(&typairs, |env| {
                    env.with_terms(&[(c1.param.clone(), c2.param.clone())], |env| {
                        env.term(&c1.body, &c2.body)
                    })
                })
            }
        })
    }

    fn ctx(&mut self, f1: &[Frame], f2: &[Frame]) -> bool {
        match (f1.split_first(), f2.split_first()) {
            (None, None) => true,
            (Some((a, r1)), Some((b, r2))) => match (a, b) {
                (Frame::AppL(e1), Frame::AppL(e2)) => self.term(e1, e2) && self.ctx(r1, r2),
                (Frame::AppR(e1), Frame::AppR(e2)) => self.term(e1, e2) && self.ctx(r1, r2),
                (
                    Frame::Let { name: x, binders: bs1, annot: t1, body: e1 },
                    Frame::Let { name: y, binders: bs2, annot: t2, body: e2 },
                ) => {
                    if bs1.len() != bs2.len() {
                        return false;
                    }
                    let typairs: Vec<(Name, Name)> =
                        bs1.iter().cloned().zip(bs2.iter().cloned()).collect();
                    self.with_terms(&[(x.clone(), y.clone())], |env| env.term(e1, e2))
                        && self.with_tys(&typairs, |env| {
                            env.ty(t1, t2) && env.ctx(r1, r2)
                        })
                }
                (Frame::OpArg(o1, ts), Frame::OpArg(o2, us)) => {
                    o1 == o2 && self.tys_eq(ts, us) && self.ctx(r1, r2)
                }
                (Frame::Handle(h1), Frame::Handle(h2)) => {
                    self.handler(h1, h2) && self.ctx(r1, r2)
                }
                (Frame::PairL(e1), Frame::PairL(e2)) => self.term(e1, e2) && self.ctx(r1, r2),
                (Frame::PairR(e1), Frame::PairR(e2)) => self.term(e1, e2) && self.ctx(r1, r2),
                (Frame::Proj(i), Frame::Proj(j)) => i == j && self.ctx(r1, r2),
                (Frame::If(a1, b1), Frame::If(a2, b2)) => {
                    self.term(a1, a2) && self.term(b1, b2) && self.ctx(r1, r2)
                }
                _ => false,
            },
            _ => false,
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Stable, fully parenthesized prefix rendering of a term; one construct per
/// node. Used by `elab` output and golden tests.
pub fn print_ir(e: &IrTerm) -> String {
    let mut out = String::new();
    write_term(e, &mut out);
    out
}

fn write_names(ns: &[Name], out: &mut String) {
    out.push('[');
    for (i, n) in ns.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(n.as_str());
    }
    out.push(']');
}

fn write_tys(ts: &[Ty], out: &mut String) {
    out.push('[');
    for (i, t) in ts.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&crate::parser::pretty_ty(t));
    }
    out.push(']');
}

fn write_scheme(s: &Scheme, out: &mut String) {
    out.push('∀');
    write_names(&s.bound, out);
    out.push('.');
    out.push_str(&crate::parser::pretty_ty(&s.body));
}

fn write_term(e: &IrTerm, out: &mut String) {
    match e {
        IrTerm::Var(x, tys) => {
            let _ = write!(out, "(var {x} ");
            write_tys(tys, out);
            out.push(')');
        }
        IrTerm::Const(c) => {
            let _ = write!(out, "(const {c})");
        }
        IrTerm::Abs(x, annot, body) => {
            let _ = write!(out, "(lam {x} : {} . ", crate::parser::pretty_ty(annot));
            write_term(body, out);
            out.push(')');
        }
        IrTerm::App(f, a) => {
            out.push_str("(app ");
            write_term(f, out);
            out.push(' ');
            write_term(a, out);
            out.push(')');
        }
        IrTerm::Let { name, binders, annot, bound, body } => {
            let _ = write!(out, "(let {name} = Λ");
            write_names(binders, out);
            out.push_str(". ");
            write_term(bound, out);
            let _ = write!(out, " : {} in ", crate::parser::pretty_ty(annot));
            write_term(body, out);
            out.push(')');
        }
        IrTerm::OpCall(op, tys, arg) => {
            let _ = write!(out, "(op {op} ");
            write_tys(tys, out);
            out.push(' ');
            write_term(arg, out);
            out.push(')');
        }
        IrTerm::OpCont { op, schemes, pv, ctx } => {
            let _ = write!(out, "#{op}{{[");
            for (i, s) in schemes.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_scheme(s, out);
            }
            out.push_str("]; Λ");
            write_names(&pv.binders, out);
            out.push_str(". ");
            write_term(&pv.body, out);
            out.push_str("; [");
            for (i, f) in ctx.frames.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_frame(f, out);
            }
            out.push_str("]}");
        }
        IrTerm::Handle(scrut, h) => {
            out.push_str("(handle ");
            write_term(scrut, out);
            out.push(' ');
            write_handler(h, out);
            out.push(')');
        }
        IrTerm::Resume { binders, param, body } => {
            out.push_str("(resume ");
            write_names(binders, out);
            let _ = write!(out, " {param}. ");
            write_term(body, out);
            out.push(')');
        }
        IrTerm::Pair(l, r) => {
            out.push_str("(pair ");
            write_term(l, out);
            out.push(' ');
            write_term(r, out);
            out.push(')');
        }
        IrTerm::Proj(ix, e) => {
            out.push_str(match ix {
                ProjIx::Fst => "(fst ",
                ProjIx::Snd => "(snd ",
            });
            write_term(e, out);
            out.push(')');
        }
        IrTerm::If(c, a, b) => {
            out.push_str("(if ");
            write_term(c, out);
            out.push(' ');
            write_term(a, out);
            out.push(' ');
            write_term(b, out);
            out.push(')');
        }
    }
}

fn write_handler(h: &IrHandler, out: &mut String) {
    let _ = write!(out, "{{return {} -> ", h.ret_var);
    write_term(&h.ret_body, out);
    for c in &h.clauses {
        out.push_str("; Λ");
        write_names(&c.binders, out);
        let _ = write!(out, ".{}({}) -> ", c.op, c.param);
        write_term(&c.body, out);
    }
    out.push('}');
}

fn write_frame(f: &Frame, out: &mut String) {
    match f {
        Frame::AppL(e) => {
            out.push_str("(app-l ");
            write_term(e, out);
            out.push(')');
        }
        Frame::AppR(e) => {
            out.push_str("(app-r ");
            write_term(e, out);
            out.push(')');
        }
        Frame::Let { name, binders, annot, body } => {
            let _ = write!(out, "(let-f {name} Λ");
            write_names(binders, out);
            let _ = write!(out, " : {} ", crate::parser::pretty_ty(annot));
            write_term(body, out);
            out.push(')');
        }
        Frame::OpArg(op, tys) => {
            let _ = write!(out, "(op-f {op} ");
            write_tys(tys, out);
            out.push(')');
        }
        Frame::Handle(h) => {
            out.push_str("(handle-f ");
            write_handler(h, out);
            out.push(')');
        }
        Frame::PairL(e) => {
            out.push_str("(pair-l ");
            write_term(e, out);
            out.push(')');
        }
        Frame::PairR(e) => {
            out.push_str("(pair-r ");
            write_term(e, out);
            out.push(')');
        }
        Frame::Proj(ix) => {
            out.push_str(match ix {
                ProjIx::Fst => "(proj-f 1)",
                ProjIx::Snd => "(proj-f 2)",
            });
        }
        Frame::If(a, b) => {
            out.push_str("(if-f ");
            write_term(a, out);
            out.push(' ');
            write_term(b, out);
            out.push(')');
        }
    }
}

/// Human-oriented rendering of a normal-form value (`run` output).
pub fn pretty_value(e: &IrTerm) -> String {
    match e {
        IrTerm::Const(c) => c.to_string(),
        IrTerm::Abs(..) => "<fun>".to_string(),
        IrTerm::Pair(l, r) => format!("({}, {})", pretty_value(l), pretty_value(r)),
        other => print_ir(other),
    }
}
