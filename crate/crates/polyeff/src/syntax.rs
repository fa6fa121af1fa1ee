//! Surface syntax: names, effects, types, schemes, typing contexts, effect
//! signatures and the constant table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// An interned identifier. Cheap to clone, compared by content.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Name {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::new(s)
    }
}

/// Source of alpha-fresh names. The `%` separator cannot appear in source
/// identifiers, so generated names never collide with user names.
#[derive(Debug, Default)]
pub struct NameGen {
    counter: u64,
}

impl NameGen {
    pub fn new() -> NameGen {
        NameGen { counter: 0 }
    }

    pub fn fresh(&mut self, base: &str) -> Name {
        let base = base.split('%').next().unwrap_or(base);
        let n = self.counter;
        self.counter += 1;
        Name::new(&format!("{base}%{n}"))
    }

    /// Fresh type-variable name for let-generalization.
    pub fn fresh_tyvar(&mut self) -> Name {
        let n = self.counter;
        self.counter += 1;
        Name::new(&format!("t{n}"))
    }
}

/// A finite set of effect operation names.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Effect(BTreeSet<Name>);

impl Effect {
    pub fn empty() -> Effect {
        Effect(BTreeSet::new())
    }

    pub fn singleton(op: Name) -> Effect {
        let mut s = BTreeSet::new();
        s.insert(op);
        Effect(s)
    }

    pub fn from_ops<I: IntoIterator<Item = Name>>(ops: I) -> Effect {
        Effect(ops.into_iter().collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, op: &Name) -> bool {
        self.0.contains(op)
    }

    pub fn insert(&mut self, op: Name) {
        self.0.insert(op);
    }

    pub fn union(&self, other: &Effect) -> Effect {
        Effect(self.0.union(&other.0).cloned().collect())
    }

    pub fn union_in_place(&mut self, other: &Effect) -> bool {
        let before = self.0.len();
        self.0.extend(other.0.iter().cloned());
        self.0.len() != before
    }

    pub fn minus(&self, other: &Effect) -> Effect {
        Effect(self.0.difference(&other.0).cloned().collect())
    }

    pub fn subset_of(&self, other: &Effect) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Name> {
        self.0.iter()
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, op) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{op}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Base {
    Bool,
    Int,
    Unit,
    /// The designated uninhabited base type used by handling to erase
    /// captured type variables.
    Bot,
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Base::Bool => "bool",
            Base::Int => "int",
            Base::Unit => "unit",
            Base::Bot => "bot",
        };
        write!(f, "{s}")
    }
}

pub type MetaId = u32;
pub type EffVarId = u32;

/// An effect position on an arrow: ground set, or a unification variable
/// during inference. Checked and evaluated code only ever sees `Set`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Eff {
    Set(Effect),
    Var(EffVarId),
}

impl Eff {
    pub fn empty() -> Eff {
        Eff::Set(Effect::empty())
    }

    pub fn as_set(&self) -> &Effect {
        match self {
            Eff::Set(s) => s,
            Eff::Var(v) => panic!("unsolved effect variable ?e{v} in a checked type"),
        }
    }
}

/// Types. `Meta` only occurs during inference; every other consumer works
/// with fully solved types.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Ty {
    Var(Name),
    Base(Base),
    Arrow(Box<Ty>, Eff, Box<Ty>),
    Prod(Box<Ty>, Box<Ty>),
    Meta(MetaId),
}

impl Ty {
    pub fn arrow(dom: Ty, eff: Eff, cod: Ty) -> Ty {
        Ty::Arrow(Box::new(dom), eff, Box::new(cod))
    }

    pub fn prod(l: Ty, r: Ty) -> Ty {
        Ty::Prod(Box::new(l), Box::new(r))
    }

    pub fn var(name: &str) -> Ty {
        Ty::Var(Name::new(name))
    }

    /// Free type variables. Plain types have no binders so every named
    /// variable is free.
    pub fn ftv(&self) -> BTreeSet<Name> {
        let mut acc = BTreeSet::new();
        self.collect_ftv(&mut acc);
        acc
    }

    pub fn collect_ftv(&self, acc: &mut BTreeSet<Name>) {
        match self {
            Ty::Var(a) => {
                acc.insert(a.clone());
            }
            Ty::Base(_) | Ty::Meta(_) => {}
            Ty::Arrow(d, _, c) => {
                d.collect_ftv(acc);
                c.collect_ftv(acc);
            }
            Ty::Prod(l, r) => {
                l.collect_ftv(acc);
                r.collect_ftv(acc);
            }
        }
    }

    pub fn has_meta(&self) -> bool {
        match self {
            Ty::Meta(_) => true,
            Ty::Var(_) | Ty::Base(_) => false,
            Ty::Arrow(d, e, c) => d.has_meta() || matches!(e, Eff::Var(_)) || c.has_meta(),
            Ty::Prod(l, r) => l.has_meta() || r.has_meta(),
        }
    }

    /// Simultaneous substitution of types for type variables. Capture cannot
    /// occur: plain types have no binders.
    pub fn subst(&self, pairs: &[(Name, Ty)]) -> Ty {
        match self {
            Ty::Var(a) => pairs
                .iter()
                .find(|(b, _)| b == a)
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| self.clone()),
            Ty::Base(_) | Ty::Meta(_) => self.clone(),
            Ty::Arrow(d, e, c) => Ty::arrow(d.subst(pairs), e.clone(), c.subst(pairs)),
            Ty::Prod(l, r) => Ty::prod(l.subst(pairs), r.subst(pairs)),
        }
    }
}

/// A type scheme `∀ᾱ.A`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Scheme {
    pub bound: Vec<Name>,
    pub body: Ty,
}

impl Scheme {
    pub fn mono(ty: Ty) -> Scheme {
        Scheme { bound: Vec::new(), body: ty }
    }

    pub fn ftv(&self) -> BTreeSet<Name> {
        let mut acc = self.body.ftv();
        for b in &self.bound {
            acc.remove(b);
        }
        acc
    }

    pub fn instantiate_with(&self, args: &[Ty]) -> Ty {
        assert_eq!(self.bound.len(), args.len(), "scheme instantiation arity mismatch");
        let pairs: Vec<(Name, Ty)> =
            self.bound.iter().cloned().zip(args.iter().cloned()).collect();
        self.body.subst(&pairs)
    }
}

/// One entry of a typing context.
#[derive(Clone, Debug)]
pub enum Binding {
    Var(Name, Scheme),
    TyVar(Name),
}

/// An ordered typing context `Γ`.
#[derive(Clone, Debug, Default)]
pub struct TyCtx {
    pub entries: Vec<Binding>,
}

impl TyCtx {
    pub fn new() -> TyCtx {
        TyCtx { entries: Vec::new() }
    }

    pub fn push_var(&mut self, x: Name, s: Scheme) {
        self.entries.push(Binding::Var(x, s));
    }

    pub fn push_tyvar(&mut self, a: Name) {
        self.entries.push(Binding::TyVar(a));
    }

    pub fn pop(&mut self) {
        self.entries.pop();
    }

    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Innermost binding wins, as usual.
    pub fn lookup_var(&self, x: &Name) -> Option<&Scheme> {
        self.entries.iter().rev().find_map(|b| match b {
            Binding::Var(y, s) if y == x => Some(s),
            _ => None,
        })
    }

    pub fn has_tyvar(&self, a: &Name) -> bool {
        self.entries
            .iter()
            .any(|b| matches!(b, Binding::TyVar(b) if b == a))
    }

    pub fn tyvars(&self) -> BTreeSet<Name> {
        self.entries
            .iter()
            .filter_map(|b| match b {
                Binding::TyVar(a) => Some(a.clone()),
                _ => None,
            })
            .collect()
    }

    /// The set of term and type variables declared in the context.
    pub fn dom(&self) -> BTreeSet<Name> {
        self.entries
            .iter()
            .map(|b| match b {
                Binding::Var(x, _) => x.clone(),
                Binding::TyVar(a) => a.clone(),
            })
            .collect()
    }

    /// `⊢ Γ`: every scheme's free type variables are bound to the left and
    /// type variables are not redeclared.
    pub fn wf(&self) -> bool {
        let mut tyvars: BTreeSet<Name> = BTreeSet::new();
        for b in &self.entries {
            match b {
                Binding::Var(_, s) => {
                    if !s.ftv().iter().all(|a| tyvars.contains(a)) {
                        return false;
                    }
                }
                Binding::TyVar(a) => {
                    if !tyvars.insert(a.clone()) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// An effect-operation signature `op : ∀ᾱ. A ↪ B`.
#[derive(Clone, Debug)]
pub struct OpSig {
    pub op: Name,
    pub bound: Vec<Name>,
    pub dom: Ty,
    pub cod: Ty,
}

impl OpSig {
    /// Signatures may mention only their own binders.
    pub fn closed(&self) -> bool {
        let bound: BTreeSet<Name> = self.bound.iter().cloned().collect();
        self.dom.ftv().is_subset(&bound) && self.cod.ftv().is_subset(&bound)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SigTable {
    map: BTreeMap<Name, OpSig>,
}

impl SigTable {
    pub fn new() -> SigTable {
        SigTable { map: BTreeMap::new() }
    }

    pub fn insert(&mut self, sig: OpSig) -> Result<(), String> {
        if !sig.closed() {
            return Err(format!(
                "signature of {} mentions type variables outside its binders",
                sig.op
            ));
        }
        let op = sig.op.clone();
        if self.map.insert(op.clone(), sig).is_some() {
            return Err(format!("effect operation {op} declared twice"));
        }
        Ok(())
    }

    pub fn lookup(&self, op: &Name) -> Option<&OpSig> {
        self.map.get(op)
    }
}

/// Constants, including partially applied primitives so that the δ-function
/// stays a map over pairs of constants.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Const {
    Unit,
    Bool(bool),
    Int(i64),
    Add,
    Sub,
    Mul,
    Div,
    EqInt,
    Add1(i64),
    Sub1(i64),
    Mul1(i64),
    Div1(i64),
    EqInt1(i64),
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Unit => write!(f, "()"),
            Const::Bool(b) => write!(f, "{b}"),
            Const::Int(n) => write!(f, "{n}"),
            Const::Add => write!(f, "+"),
            Const::Sub => write!(f, "-"),
            Const::Mul => write!(f, "*"),
            Const::Div => write!(f, "div"),
            Const::EqInt => write!(f, "="),
            Const::Add1(n) => write!(f, "+{n}"),
            Const::Sub1(n) => write!(f, "-{n}"),
            Const::Mul1(n) => write!(f, "*{n}"),
            Const::Div1(n) => write!(f, "div{n}"),
            Const::EqInt1(n) => write!(f, "={n}"),
        }
    }
}

fn int() -> Ty {
    Ty::Base(Base::Int)
}

/// `ty(c)`: every constant has a first-order closed type whose arrows all
/// carry the empty effect.
pub fn ty_const(c: &Const) -> Ty {
    match c {
        Const::Unit => Ty::Base(Base::Unit),
        Const::Bool(_) => Ty::Base(Base::Bool),
        Const::Int(_) => int(),
        Const::Add | Const::Sub | Const::Mul | Const::Div => {
            Ty::arrow(int(), Eff::empty(), Ty::arrow(int(), Eff::empty(), int()))
        }
        Const::EqInt => Ty::arrow(
            int(),
            Eff::empty(),
            Ty::arrow(int(), Eff::empty(), Ty::Base(Base::Bool)),
        ),
        Const::Add1(_) | Const::Sub1(_) | Const::Mul1(_) | Const::Div1(_) => {
            Ty::arrow(int(), Eff::empty(), int())
        }
        Const::EqInt1(_) => Ty::arrow(int(), Eff::empty(), Ty::Base(Base::Bool)),
    }
}

/// `ζ(c₁, c₂)`: the denotation of applying constant `c₁` to constant `c₂`.
/// Partial: undefined off the typed fragment and on division by zero.
pub fn delta(c1: &Const, c2: &Const) -> Option<Const> {
    match (c1, c2) {
        (Const::Add, Const::Int(n)) => Some(Const::Add1(*n)),
        (Const::Sub, Const::Int(n)) => Some(Const::Sub1(*n)),
        (Const::Mul, Const::Int(n)) => Some(Const::Mul1(*n)),
        (Const::Div, Const::Int(n)) => Some(Const::Div1(*n)),
        (Const::EqInt, Const::Int(n)) => Some(Const::EqInt1(*n)),
        (Const::Add1(n), Const::Int(m)) => Some(Const::Int(n.wrapping_add(*m))),
        (Const::Sub1(n), Const::Int(m)) => Some(Const::Int(n.wrapping_sub(*m))),
        (Const::Mul1(n), Const::Int(m)) => Some(Const::Int(n.wrapping_mul(*m))),
        (Const::Div1(_), Const::Int(0)) => None,
        (Const::Div1(n), Const::Int(m)) => Some(Const::Int(n.wrapping_div(*m))),
        (Const::EqInt1(n), Const::Int(m)) => Some(Const::Bool(n == m)),
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ProjIx {
    Fst,
    Snd,
}

/// Surface terms. Every node carries the source span it was parsed from.
#[derive(Clone, Debug)]
pub struct Term {
    pub kind: TermKind,
    pub span: crate::parser::Span,
}

#[derive(Clone, Debug)]
pub enum TermKind {
    Var(Name),
    Const(Const),
    Abs(Name, Box<Term>),
    App(Box<Term>, Box<Term>),
    Let(Name, Box<Term>, Box<Term>),
    OpCall(Name, Box<Term>),
    Handle(Box<Term>, Handler),
    Resume(Box<Term>),
    Pair(Box<Term>, Box<Term>),
    Proj(ProjIx, Box<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
}

/// A handler: one return clause plus operation clauses with distinct names.
#[derive(Clone, Debug)]
pub struct Handler {
    pub ret_var: Name,
    pub ret_body: Box<Term>,
    pub clauses: Vec<SurfaceClause>,
}

#[derive(Clone, Debug)]
pub struct SurfaceClause {
    pub op: Name,
    pub param: Name,
    pub body: Term,
    pub span: crate::parser::Span,
}

/// A parsed compilation unit: effect declarations and a main term.
#[derive(Clone, Debug)]
pub struct Program {
    pub sigs: Vec<OpSig>,
    pub main: Term,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    #[test]
    fn ftv_scheme_excludes_binders() {
        // ftv(∀α. α →⟨⟩ β) = {β}
        let s = Scheme {
            bound: vec![n("a")],
            body: Ty::arrow(Ty::var("a"), Eff::empty(), Ty::var("b")),
        };
        let ftv = s.ftv();
        assert_eq!(ftv.into_iter().collect::<Vec<_>>(), vec![n("b")]);
        assert!(Ty::Base(Base::Bool).ftv().is_empty());
        let t = Ty::arrow(
            Ty::var("a"),
            Eff::Set(Effect::singleton(n("op"))),
            Ty::prod(Ty::var("a"), Ty::var("c")),
        );
        assert_eq!(t.ftv().into_iter().collect::<Vec<_>>(), vec![n("a"), n("c")]);
    }

    #[test]
    fn subst_ty_examples() {
        // (α →⟨⟩ α)[bool/α] = bool →⟨⟩ bool
        let t = Ty::arrow(Ty::var("a"), Eff::empty(), Ty::var("a"));
        let r = t.subst(&[(n("a"), Ty::Base(Base::Bool))]);
        assert_eq!(r, Ty::arrow(Ty::Base(Base::Bool), Eff::empty(), Ty::Base(Base::Bool)));
        // α[int/β] = α
        assert_eq!(Ty::var("a").subst(&[(n("b"), Ty::Base(Base::Int))]), Ty::var("a"));
        // (α × β)[int/α, bool/β] = int × bool
        let p = Ty::prod(Ty::var("a"), Ty::var("b"));
        let r = p.subst(&[(n("a"), Ty::Base(Base::Int)), (n("b"), Ty::Base(Base::Bool))]);
        assert_eq!(r, Ty::prod(Ty::Base(Base::Int), Ty::Base(Base::Bool)));
    }

    #[test]
    fn subst_ty_is_homomorphic_and_identity_on_disjoint_vars() {
        let samples = vec![
            Ty::var("x"),
            Ty::Base(Base::Int),
            Ty::arrow(Ty::var("x"), Eff::empty(), Ty::var("y")),
            Ty::prod(Ty::var("y"), Ty::arrow(Ty::var("x"), Eff::empty(), Ty::var("x"))),
        ];
        let pairs = vec![(n("x"), Ty::Base(Base::Bool))];
        for t in &samples {
            // identity on variables not mentioned by the substitution
            let untouched = t.subst(&[(n("zz"), Ty::Base(Base::Unit))]);
            assert_eq!(&untouched, t);
            // homomorphic over constructors
            if let Ty::Prod(l, r) = t {
                let whole = t.subst(&pairs);
                assert_eq!(whole, Ty::prod(l.subst(&pairs), r.subst(&pairs)));
            }
        }
    }

    #[test]
    fn ctx_wf_examples() {
        // ∅ well formed
        assert!(TyCtx::new().wf());
        // (α, x: α →⟨⟩ α) well formed
        let mut g = TyCtx::new();
        g.push_tyvar(n("a"));
        g.push_var(n("x"), Scheme::mono(Ty::arrow(Ty::var("a"), Eff::empty(), Ty::var("a"))));
        assert!(g.wf());
        // (x: β →⟨⟩ β) is not: β unbound
        let mut g = TyCtx::new();
        g.push_var(n("x"), Scheme::mono(Ty::arrow(Ty::var("b"), Eff::empty(), Ty::var("b"))));
        assert!(!g.wf());
        // duplicate type variable
        let mut g = TyCtx::new();
        g.push_tyvar(n("a"));
        g.push_tyvar(n("a"));
        assert!(!g.wf());
    }

    #[test]
    fn ctx_wf_prefix_closed() {
        let mut g = TyCtx::new();
        g.push_tyvar(n("a"));
        g.push_var(n("x"), Scheme::mono(Ty::var("a")));
        g.push_tyvar(n("b"));
        g.push_var(n("y"), Scheme::mono(Ty::prod(Ty::var("a"), Ty::var("b"))));
        assert!(g.wf());
        while !g.is_empty() {
            g.pop();
            assert!(g.wf());
        }
    }

    #[test]
    fn ctx_dom_examples() {
        assert!(TyCtx::new().dom().is_empty());
        let mut g = TyCtx::new();
        g.push_tyvar(n("a"));
        g.push_var(n("x"), Scheme::mono(Ty::var("a")));
        assert_eq!(g.dom().into_iter().collect::<Vec<_>>(), vec![n("a"), n("x")]);
        let mut g = TyCtx::new();
        g.push_var(n("x"), Scheme::mono(Ty::Base(Base::Int)));
        g.push_var(n("y"), Scheme::mono(Ty::Base(Base::Bool)));
        assert_eq!(g.dom().into_iter().collect::<Vec<_>>(), vec![n("x"), n("y")]);
    }

    #[test]
    fn constant_types_are_first_order_chains_of_pure_arrows() {
        fn check_shape(t: &Ty) {
            match t {
                Ty::Base(_) => {}
                Ty::Arrow(d, e, c) => {
                    assert!(matches!(**d, Ty::Base(_)));
                    assert!(e.as_set().is_empty());
                    check_shape(c);
                }
                other => panic!("constant type is not first-order: {other:?}"),
            }
        }
        let reps = [
            Const::Unit,
            Const::Bool(true),
            Const::Int(7),
            Const::Add,
            Const::Sub,
            Const::Mul,
            Const::Div,
            Const::EqInt,
            Const::Add1(1),
            Const::Sub1(1),
            Const::Mul1(1),
            Const::Div1(1),
            Const::EqInt1(1),
        ];
        for c in &reps {
            check_shape(&ty_const(c));
        }
    }

    #[test]
    fn delta_respects_constant_typing() {
        // if δ(c₁,c₂) is defined, ty(c₁) = ι →⟨⟩ A, ty(c₂) = ι, ty(δ(c₁,c₂)) = A
        let pairs = [
            (Const::Add, Const::Int(3)),
            (Const::Add1(3), Const::Int(4)),
            (Const::Div1(100), Const::Int(5)),
            (Const::EqInt1(1), Const::Int(1)),
        ];
        for (c1, c2) in &pairs {
            let r = delta(c1, c2).expect("delta defined");
            match ty_const(c1) {
                Ty::Arrow(d, _, c) => {
                    assert_eq!(*d, ty_const(c2));
                    assert_eq!(*c, ty_const(&r));
                }
                _ => panic!("applied constant is not a function"),
            }
        }
        assert_eq!(delta(&Const::Div1(1), &Const::Int(0)), None);
        assert_eq!(delta(&Const::Int(1), &Const::Int(0)), None);
        assert_eq!(delta(&Const::Add1(1), &Const::Bool(true)), None);
        // no constant has type ⊥
        for c in [Const::Unit, Const::Bool(false), Const::Int(0)] {
            assert_ne!(ty_const(&c), Ty::Base(Base::Bot));
        }
    }

    #[test]
    fn fresh_names_are_distinct_and_marked() {
        let mut g = NameGen::new();
        let a = g.fresh("x");
        let b = g.fresh("x");
        assert_ne!(a, b);
        assert!(a.as_str().contains('%'));
        // rebasing an already-fresh name does not stack suffixes
        let c = g.fresh(a.as_str());
        assert!(c.as_str().starts_with("x%"));
    }
}
