//! Lexer, parser and pretty printer for the surface language.
//!
//! Grammar sketch:
//! ```text
//! program := decl* ";;" term
//! decl    := "effect" IDENT ":" ("forall" IDENT+ ".")? type "=>" type
//! type    := atype ("-{" effset "}->" type | "->" type)?
//! atype   := "bool" | "int" | "unit" | "bot" | IDENT | "(" type ("*" type)? ")"
//! term    := "fun" IDENT "->" term | "let" IDENT "=" term "in" term
//!          | "handle" term "with" handler | "if" term "then" term "else" term
//!          | seq
//! seq     := cmp (";" term)?            (sequencing sugars to let _ = ... in ...)
//! cmp     := add ("=" add)?
//! add     := mul (("+" | "-") mul)*
//! mul     := app ("*" app)*
//! app     := app aterm | "resume" aterm | aterm
//! aterm   := IDENT | INT | "true" | "false" | "div" | "#" IDENT "(" term ")"
//!          | "fst" aterm | "snd" aterm | "(" ")" | "(" term ("," term)? ")"
//! handler := "{" "return" IDENT "->" term (";" IDENT "(" IDENT ")" "->" term)* "}"
//! ```
//! Comments `(* ... *)` nest. Application binds tighter than the infix
//! operators; arrows in types associate to the right. Inside a handler the
//! clause bodies do not take top-level `;`, which is the clause separator.

use crate::syntax::*;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn dummy() -> Span {
        Span { start: 0, end: 0, line: 1, col: 1 }
    }

    fn merge(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: self.line,
            col: self.col,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, span: Span) -> Diagnostic {
        Diagnostic { severity: Severity::Error, message: message.into(), span }
    }

    /// Rendered as `line:col: error: message`; the driver prepends the path.
    pub fn render(&self, path: &str) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!("{path}:{}:{}: {sev}: {}", self.span.line, self.span.col, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Hash,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    SemiSemi,
    Colon,
    Dot,
    Arrow,     // ->
    EffArrowL, // -{
    EffArrowR, // }->
    DArrow,    // =>
    Star,
    Plus,
    Minus,
    Eq,
    Kw(&'static str),
    Eof,
}

const KEYWORDS: &[&str] = &[
    "effect", "forall", "fun", "let", "in", "handle", "with", "return", "resume", "if", "then",
    "else", "fst", "snd", "div", "true", "false", "bool", "int", "unit", "bot",
];

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

struct SpannedTok {
    tok: Tok,
    span: Span,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (usize, u32, u32) {
        (self.pos, self.line, self.col)
    }

    fn skip_trivia(&mut self) -> Result<(), Diagnostic> {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'(') if self.peek2() == Some(b'*') => {
                    let (start, line, col) = self.here();
                    self.bump();
                    self.bump();
                    let mut depth = 1usize;
                    loop {
                        match self.peek() {
                            None => {
                                return Err(Diagnostic::error(
                                    "unterminated comment",
                                    Span { start, end: self.pos, line, col },
                                ))
                            }
                            Some(b'(') if self.peek2() == Some(b'*') => {
                                self.bump();
                                self.bump();
                                depth += 1;
                            }
                            Some(b'*') if self.peek2() == Some(b')') => {
                                self.bump();
                                self.bump();
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                            }
                            _ => {
                                self.bump();
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_tok(&mut self) -> Result<SpannedTok, Diagnostic> {
        self.skip_trivia()?;
        let (start, line, col) = self.here();
        let mk = |tok, lex: &Lexer| SpannedTok {
            tok,
            span: Span { start, end: lex.pos, line, col },
        };
        let c = match self.peek() {
            None => {
                // give end-of-input a nonempty span over the last byte so
                // diagnostics always point somewhere
                let start = self.src.len().saturating_sub(1);
                return Ok(SpannedTok {
                    tok: Tok::Eof,
                    span: Span { start, end: self.src.len().max(1), line, col },
                });
            }
            Some(c) => c,
        };
        match c {
            b'(' => {
                self.bump();
                Ok(mk(Tok::LParen, self))
            }
            b')' => {
                self.bump();
                Ok(mk(Tok::RParen, self))
            }
            b'{' => {
                self.bump();
                Ok(mk(Tok::LBrace, self))
            }
            b'}' => {
                self.bump();
                if self.peek() == Some(b'-') && self.peek2() == Some(b'>') {
                    self.bump();
                    self.bump();
                    Ok(mk(Tok::EffArrowR, self))
                } else {
                    Ok(mk(Tok::RBrace, self))
                }
            }
            b',' => {
                self.bump();
                Ok(mk(Tok::Comma, self))
            }
            b';' => {
                self.bump();
                if self.peek() == Some(b';') {
                    self.bump();
                    Ok(mk(Tok::SemiSemi, self))
                } else {
                    Ok(mk(Tok::Semi, self))
                }
            }
            b':' => {
                self.bump();
                Ok(mk(Tok::Colon, self))
            }
            b'.' => {
                self.bump();
                Ok(mk(Tok::Dot, self))
            }
            b'#' => {
                self.bump();
                Ok(mk(Tok::Hash, self))
            }
            b'*' => {
                self.bump();
                Ok(mk(Tok::Star, self))
            }
            b'+' => {
                self.bump();
                Ok(mk(Tok::Plus, self))
            }
            b'=' => {
                self.bump();
                if self.peek() == Some(b'>') {
                    self.bump();
                    Ok(mk(Tok::DArrow, self))
                } else {
                    Ok(mk(Tok::Eq, self))
                }
            }
            b'-' => {
                self.bump();
                match self.peek() {
                    Some(b'>') => {
                        self.bump();
                        Ok(mk(Tok::Arrow, self))
                    }
                    Some(b'{') => {
                        self.bump();
                        Ok(mk(Tok::EffArrowL, self))
                    }
                    _ => Ok(mk(Tok::Minus, self)),
                }
            }
            b'0'..=b'9' => {
                let mut n: i64 = 0;
                while let Some(d @ b'0'..=b'9') = self.peek() {
                    n = n * 10 + i64::from(d - b'0');
                    self.bump();
                }
                Ok(mk(Tok::Int(n), self))
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let s = start;
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.src[s..self.pos]).unwrap().to_string();
                if let Some(kw) = KEYWORDS.iter().find(|k| **k == text) {
                    Ok(mk(Tok::Kw(kw), self))
                } else {
                    Ok(mk(Tok::Ident(text), self))
                }
            }
            other => Err(Diagnostic::error(
                format!("unexpected character {:?}", other as char),
                Span { start, end: start + 1, line, col },
            )),
        }
    }
}

fn lex(src: &str) -> Result<Vec<SpannedTok>, Diagnostic> {
    let mut lx = Lexer::new(src);
    let mut toks = Vec::new();
    loop {
        let t = lx.next_tok()?;
        let eof = t.tok == Tok::Eof;
        toks.push(t);
        if eof {
            return Ok(toks);
        }
    }
}

struct Parser {
    toks: Vec<SpannedTok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, want: &Tok, what: &str) -> Result<Span, Diagnostic> {
        if self.peek() == want {
            let sp = self.span();
            self.bump();
            Ok(sp)
        } else {
            Err(Diagnostic::error(
                format!("expected {what}, found {}", describe(self.peek())),
                self.span(),
            ))
        }
    }

    fn eat_ident(&mut self, what: &str) -> Result<(Name, Span), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.span();
                self.bump();
                Ok((Name::new(&s), sp))
            }
            other => Err(Diagnostic::error(
                format!("expected {what}, found {}", describe(&other)),
                self.span(),
            )),
        }
    }

    fn parse_program(&mut self) -> Result<Program, Diagnostic> {
        let mut sigs: Vec<OpSig> = Vec::new();
        while matches!(self.peek(), Tok::Kw("effect")) {
            let decl = self.parse_decl()?;
            if sigs.iter().any(|s| s.op == decl.op) {
                return Err(Diagnostic::error(
                    format!("effect operation {} declared twice", decl.op),
                    self.prev_span(),
                ));
            }
            sigs.push(decl);
        }
        self.eat(&Tok::SemiSemi, "`;;` between declarations and the main term")?;
        let main = self.parse_term(true)?;
        if self.peek() != &Tok::Eof {
            return Err(Diagnostic::error(
                format!("unexpected {} after the main term", describe(self.peek())),
                self.span(),
            ));
        }
        Ok(Program { sigs, main })
    }

    fn parse_decl(&mut self) -> Result<OpSig, Diagnostic> {
        self.eat(&Tok::Kw("effect"), "`effect`")?;
        let (op, _) = self.eat_ident("an operation name")?;
        self.eat(&Tok::Colon, "`:`")?;
        let mut bound = Vec::new();
        if matches!(self.peek(), Tok::Kw("forall")) {
            self.bump();
            loop {
                match self.peek().clone() {
                    Tok::Ident(_) => {
                        let (a, sp) = self.eat_ident("a type variable")?;
                        if bound.contains(&a) {
                            return Err(Diagnostic::error(
                                format!("duplicate binder {a} in signature"),
                                sp,
                            ));
                        }
                        bound.push(a);
                    }
                    Tok::Dot => {
                        self.bump();
                        break;
                    }
                    other => {
                        return Err(Diagnostic::error(
                            format!("expected a type variable or `.`, found {}", describe(&other)),
                            self.span(),
                        ))
                    }
                }
            }
        }
        let dom = self.parse_type()?;
        self.eat(&Tok::DArrow, "`=>`")?;
        let cod = self.parse_type()?;
        let sig = OpSig { op, bound, dom, cod };
        if !sig.closed() {
            return Err(Diagnostic::error(
                format!("signature of {} mentions type variables outside its binders", sig.op),
                self.prev_span(),
            ));
        }
        Ok(sig)
    }

    fn parse_type(&mut self) -> Result<Ty, Diagnostic> {
        let lhs = self.parse_atype()?;
        match self.peek() {
            Tok::Arrow => {
                self.bump();
                let rhs = self.parse_type()?;
                Ok(Ty::arrow(lhs, Eff::empty(), rhs))
            }
            Tok::EffArrowL => {
                self.bump();
                let mut ops = Vec::new();
                if !matches!(self.peek(), Tok::EffArrowR | Tok::RBrace) {
                    loop {
                        let (op, _) = self.eat_ident("an operation name")?;
                        ops.push(op);
                        if self.peek() == &Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.eat(&Tok::EffArrowR, "`}->`")?;
                let rhs = self.parse_type()?;
                Ok(Ty::arrow(lhs, Eff::Set(Effect::from_ops(ops)), rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn parse_atype(&mut self) -> Result<Ty, Diagnostic> {
        match self.peek().clone() {
            Tok::Kw("bool") => {
                self.bump();
                Ok(Ty::Base(Base::Bool))
            }
            Tok::Kw("int") => {
                self.bump();
                Ok(Ty::Base(Base::Int))
            }
            Tok::Kw("unit") => {
                self.bump();
                Ok(Ty::Base(Base::Unit))
            }
            Tok::Kw("bot") => {
                self.bump();
                Ok(Ty::Base(Base::Bot))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Ty::Var(Name::new(&s)))
            }
            Tok::LParen => {
                self.bump();
                let t = self.parse_type()?;
                if self.peek() == &Tok::Star {
                    self.bump();
                    let r = self.parse_type()?;
                    self.eat(&Tok::RParen, "`)`")?;
                    Ok(Ty::prod(t, r))
                } else {
                    self.eat(&Tok::RParen, "`)`")?;
                    Ok(t)
                }
            }
            other => Err(Diagnostic::error(
                format!("expected a type, found {}", describe(&other)),
                self.span(),
            )),
        }
    }

    /// `allow_seq` is false inside handler clause bodies, where `;` separates
    /// clauses instead of sequencing.
    fn parse_term(&mut self, allow_seq: bool) -> Result<Term, Diagnostic> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Kw("fun") => {
                self.bump();
                let (x, _) = self.eat_ident("a parameter name")?;
                self.eat(&Tok::Arrow, "`->`")?;
                let body = self.parse_term(allow_seq)?;
                let span = start.merge(body.span);
                Ok(Term { kind: TermKind::Abs(x, Box::new(body)), span })
            }
            Tok::Kw("let") => {
                self.bump();
                let (x, _) = self.eat_ident("a binder name")?;
                self.eat(&Tok::Eq, "`=`")?;
                let bound = self.parse_term(true)?;
                self.eat(&Tok::Kw("in"), "`in`")?;
                let body = self.parse_term(allow_seq)?;
                let span = start.merge(body.span);
                Ok(Term { kind: TermKind::Let(x, Box::new(bound), Box::new(body)), span })
            }
            Tok::Kw("handle") => {
                self.bump();
                let scrut = self.parse_term(true)?;
                self.eat(&Tok::Kw("with"), "`with`")?;
                let handler = self.parse_handler()?;
                let span = start.merge(self.prev_span());
                Ok(Term { kind: TermKind::Handle(Box::new(scrut), handler), span })
            }
            Tok::Kw("if") => {
                self.bump();
                let cond = self.parse_term(true)?;
                self.eat(&Tok::Kw("then"), "`then`")?;
                let then = self.parse_term(true)?;
                self.eat(&Tok::Kw("else"), "`else`")?;
                let els = self.parse_term(allow_seq)?;
                let span = start.merge(els.span);
                Ok(Term {
                    kind: TermKind::If(Box::new(cond), Box::new(then), Box::new(els)),
                    span,
                })
            }
            _ => self.parse_seq(allow_seq),
        }
    }

    fn parse_seq(&mut self, allow_seq: bool) -> Result<Term, Diagnostic> {
        let lhs = self.parse_cmp()?;
        if allow_seq && self.peek() == &Tok::Semi {
            self.bump();
            let rhs = self.parse_term(true)?;
            let span = lhs.span.merge(rhs.span);
            // M1; M2 is let _ = M1 in M2 with an unused binder
            Ok(Term {
                kind: TermKind::Let(Name::new("_"), Box::new(lhs), Box::new(rhs)),
                span,
            })
        } else {
            Ok(lhs)
        }
    }

    fn parse_cmp(&mut self) -> Result<Term, Diagnostic> {
        let lhs = self.parse_add()?;
        if self.peek() == &Tok::Eq {
            let opspan = self.span();
            self.bump();
            let rhs = self.parse_add()?;
            Ok(binop(Const::EqInt, lhs, rhs, opspan))
        } else {
            Ok(lhs)
        }
    }

    fn parse_add(&mut self) -> Result<Term, Diagnostic> {
        let mut lhs = self.parse_mul()?;
        loop {
            let c = match self.peek() {
                Tok::Plus => Const::Add,
                Tok::Minus => Const::Sub,
                _ => return Ok(lhs),
            };
            let opspan = self.span();
            self.bump();
            let rhs = self.parse_mul()?;
            lhs = binop(c, lhs, rhs, opspan);
        }
    }

    fn parse_mul(&mut self) -> Result<Term, Diagnostic> {
        let mut lhs = self.parse_app()?;
        while self.peek() == &Tok::Star {
            let opspan = self.span();
            self.bump();
            let rhs = self.parse_app()?;
            lhs = binop(Const::Mul, lhs, rhs, opspan);
        }
        Ok(lhs)
    }

    fn parse_app(&mut self) -> Result<Term, Diagnostic> {
        if matches!(self.peek(), Tok::Kw("resume")) {
            let start = self.span();
            self.bump();
            let arg = self.parse_aterm()?;
            let span = start.merge(arg.span);
            return Ok(Term { kind: TermKind::Resume(Box::new(arg)), span });
        }
        let mut head = self.parse_aterm()?;
        while self.starts_aterm() {
            let arg = self.parse_aterm()?;
            let span = head.span.merge(arg.span);
            head = Term { kind: TermKind::App(Box::new(head), Box::new(arg)), span };
        }
        Ok(head)
    }

    fn starts_aterm(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::Int(_)
                | Tok::Hash
                | Tok::LParen
                | Tok::Kw("true")
                | Tok::Kw("false")
                | Tok::Kw("div")
                | Tok::Kw("fst")
                | Tok::Kw("snd")
        )
    }

    fn parse_aterm(&mut self) -> Result<Term, Diagnostic> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Term { kind: TermKind::Var(Name::new(&s)), span: start })
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Term { kind: TermKind::Const(Const::Int(n)), span: start })
            }
            Tok::Kw("true") => {
                self.bump();
                Ok(Term { kind: TermKind::Const(Const::Bool(true)), span: start })
            }
            Tok::Kw("false") => {
                self.bump();
                Ok(Term { kind: TermKind::Const(Const::Bool(false)), span: start })
            }
            Tok::Kw("div") => {
                self.bump();
                Ok(Term { kind: TermKind::Const(Const::Div), span: start })
            }
            Tok::Kw("fst") => {
                self.bump();
                let e = self.parse_aterm()?;
                let span = start.merge(e.span);
                Ok(Term { kind: TermKind::Proj(ProjIx::Fst, Box::new(e)), span })
            }
            Tok::Kw("snd") => {
                self.bump();
                let e = self.parse_aterm()?;
                let span = start.merge(e.span);
                Ok(Term { kind: TermKind::Proj(ProjIx::Snd, Box::new(e)), span })
            }
            Tok::Hash => {
                self.bump();
                let (op, _) = self.eat_ident("an operation name")?;
                self.eat(&Tok::LParen, "`(`")?;
                let arg = self.parse_term(true)?;
                let end = self.eat(&Tok::RParen, "`)`")?;
                Ok(Term { kind: TermKind::OpCall(op, Box::new(arg)), span: start.merge(end) })
            }
            Tok::LParen => {
                self.bump();
                if self.peek() == &Tok::RParen {
                    let end = self.span();
                    self.bump();
                    return Ok(Term {
                        kind: TermKind::Const(Const::Unit),
                        span: start.merge(end),
                    });
                }
                let e = self.parse_term(true)?;
                if self.peek() == &Tok::Comma {
                    self.bump();
                    let r = self.parse_term(true)?;
                    let end = self.eat(&Tok::RParen, "`)`")?;
                    Ok(Term {
                        kind: TermKind::Pair(Box::new(e), Box::new(r)),
                        span: start.merge(end),
                    })
                } else {
                    self.eat(&Tok::RParen, "`)`")?;
                    Ok(e)
                }
            }
            other => Err(Diagnostic::error(
                format!("expected a term, found {}", describe(&other)),
                self.span(),
            )),
        }
    }

    fn parse_handler(&mut self) -> Result<Handler, Diagnostic> {
        self.eat(&Tok::LBrace, "`{`")?;
        self.eat(&Tok::Kw("return"), "`return`")?;
        let (ret_var, _) = self.eat_ident("a binder name")?;
        self.eat(&Tok::Arrow, "`->`")?;
        let ret_body = self.parse_term(false)?;
        let mut clauses = Vec::new();
        while self.peek() == &Tok::Semi {
            self.bump();
            let start = self.span();
            let (op, _) = self.eat_ident("an operation name")?;
            self.eat(&Tok::LParen, "`(`")?;
            let (param, _) = self.eat_ident("a parameter name")?;
            self.eat(&Tok::RParen, "`)`")?;
            self.eat(&Tok::Arrow, "`->`")?;
            let body = self.parse_term(false)?;
            let span = start.merge(body.span);
            if clauses.iter().any(|c: &SurfaceClause| c.op == op) {
                return Err(Diagnostic::error(
                    format!("duplicate operation clause for {op}"),
                    span,
                ));
            }
            clauses.push(SurfaceClause { op, param, body, span });
        }
        self.eat(&Tok::RBrace, "`}`")?;
        Ok(Handler { ret_var, ret_body: Box::new(ret_body), clauses })
    }
}

fn binop(c: Const, lhs: Term, rhs: Term, opspan: Span) -> Term {
    let span = lhs.span.merge(rhs.span);
    let prim = Term { kind: TermKind::Const(c), span: opspan };
    let partial = Term {
        kind: TermKind::App(Box::new(prim), Box::new(lhs)),
        span: span.merge(opspan),
    };
    Term { kind: TermKind::App(Box::new(partial), Box::new(rhs)), span }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Int(n) => format!("integer `{n}`"),
        Tok::Hash => "`#`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Semi => "`;`".into(),
        Tok::SemiSemi => "`;;`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::EffArrowL => "`-{`".into(),
        Tok::EffArrowR => "`}->`".into(),
        Tok::DArrow => "`=>`".into(),
        Tok::Star => "`*`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Kw(k) => format!("keyword `{k}`"),
        Tok::Eof => "end of input".into(),
    }
}

pub fn parse_program(src: &str) -> Result<Program, Vec<Diagnostic>> {
    let toks = lex(src).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0 };
    p.parse_program().map_err(|d| vec![d])
}

/// Parse a standalone term (used by tests).
pub fn parse_term(src: &str) -> Result<Term, Vec<Diagnostic>> {
    let toks = lex(src).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0 };
    let t = p.parse_term(true).map_err(|d| vec![d])?;
    if p.peek() != &Tok::Eof {
        return Err(vec![Diagnostic::error(
            format!("unexpected {} after term", describe(p.peek())),
            p.span(),
        )]);
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Pretty printing
// ---------------------------------------------------------------------------

/// Prints a type in the concrete syntax; parseable when the type is ground.
pub fn pretty_ty(t: &Ty) -> String {
    match t {
        Ty::Var(a) => a.to_string(),
        Ty::Base(b) => b.to_string(),
        Ty::Meta(m) => format!("?{m}"),
        Ty::Prod(l, r) => format!("({} * {})", pretty_ty(l), pretty_ty(r)),
        Ty::Arrow(d, e, c) => {
            let dom = match **d {
                Ty::Arrow(..) => format!("({})", pretty_ty(d)),
                _ => pretty_ty(d),
            };
            match e {
                Eff::Set(s) if s.is_empty() => format!("{dom} -> {}", pretty_ty(c)),
                Eff::Set(s) => {
                    let ops: Vec<String> = s.iter().map(|o| o.to_string()).collect();
                    format!("{dom} -{{{}}}-> {}", ops.join(", "), pretty_ty(c))
                }
                Eff::Var(v) => format!("{dom} -{{?e{v}}}-> {}", pretty_ty(c)),
            }
        }
    }
}

pub fn pretty_scheme(s: &Scheme) -> String {
    if s.bound.is_empty() {
        pretty_ty(&s.body)
    } else {
        let bs: Vec<String> = s.bound.iter().map(|b| b.to_string()).collect();
        format!("forall {} . {}", bs.join(" "), pretty_ty(&s.body))
    }
}

// Precedence levels, loosest to tightest. `pretty_term` re-parses to the same
// AST, which the round-trip tests check for the whole corpus.
const PREC_TERM: u8 = 0; // fun / let / handle / if / sequencing
const PREC_CMP: u8 = 1;
const PREC_ADD: u8 = 2;
const PREC_MUL: u8 = 3;
const PREC_APP: u8 = 4;
const PREC_ATOM: u8 = 5;

pub fn pretty_term(t: &Term) -> String {
    let mut out = String::new();
    fmt_term(t, PREC_TERM, true, &mut out);
    out
}

fn paren(cond: bool, body: String) -> String {
    if cond {
        format!("({body})")
    } else {
        body
    }
}

/// `infix_of` recognizes the application spine of a binary primitive so it
/// can be printed back in infix form.
fn infix_of(t: &Term) -> Option<(Const, &Term, &Term, u8)> {
    if let TermKind::App(f, rhs) = &t.kind {
        if let TermKind::App(g, lhs) = &f.kind {
            if let TermKind::Const(c) = &g.kind {
                let prec = match c {
                    Const::Add | Const::Sub => PREC_ADD,
                    Const::Mul => PREC_MUL,
                    Const::EqInt => PREC_CMP,
                    _ => return None,
                };
                return Some((*c, lhs, rhs, prec));
            }
        }
    }
    None
}

fn fmt_term(t: &Term, prec: u8, allow_seq: bool, out: &mut String) {
    match &t.kind {
        TermKind::Var(x) => out.push_str(x.as_str()),
        TermKind::Const(c) => out.push_str(&c.to_string()),
        TermKind::Abs(x, body) => {
            let s = format!("fun {x} -> {}", pretty_at(body, PREC_TERM, allow_seq));
            out.push_str(&paren(prec > PREC_TERM, s));
        }
        TermKind::Let(x, bound, body) => {
            let s = format!(
                "let {x} = {} in {}",
                pretty_at(bound, PREC_TERM, true),
                pretty_at(body, PREC_TERM, allow_seq)
            );
            out.push_str(&paren(prec > PREC_TERM, s));
        }
        TermKind::If(c, a, b) => {
            let s = format!(
                "if {} then {} else {}",
                pretty_at(c, PREC_TERM, true),
                pretty_at(a, PREC_TERM, true),
                pretty_at(b, PREC_TERM, allow_seq)
            );
            out.push_str(&paren(prec > PREC_TERM, s));
        }
        TermKind::Handle(scrut, h) => {
            let mut s = format!(
                "handle {} with {{ return {} -> {}",
                pretty_at(scrut, PREC_TERM, true),
                h.ret_var,
                pretty_at(&h.ret_body, PREC_TERM, false)
            );
            for c in &h.clauses {
                s.push_str(&format!(
                    " ; {}({}) -> {}",
                    c.op,
                    c.param,
                    pretty_at(&c.body, PREC_TERM, false)
                ));
            }
            s.push_str(" }");
            out.push_str(&paren(prec > PREC_TERM, s));
        }
        TermKind::Resume(arg) => {
            let s = format!("resume {}", pretty_at(arg, PREC_ATOM, true));
            out.push_str(&paren(prec > PREC_APP, s));
        }
        TermKind::App(f, a) => {
            if let Some((c, lhs, rhs, opprec)) = infix_of(t) {
                let s = format!(
                    "{} {} {}",
                    pretty_at(lhs, opprec + 1, false),
                    infix_symbol(c),
                    // + and - associate to the left
                    pretty_at(rhs, opprec + 1, false)
                );
                out.push_str(&paren(prec > opprec, s));
            } else {
                let s = format!(
                    "{} {}",
                    pretty_at(f, PREC_APP, false),
                    pretty_at(a, PREC_ATOM, false)
                );
                out.push_str(&paren(prec > PREC_APP, s));
            }
        }
        TermKind::OpCall(op, arg) => {
            out.push_str(&format!("#{op}({})", pretty_at(arg, PREC_TERM, true)));
        }
        TermKind::Pair(l, r) => {
            out.push_str(&format!(
                "({}, {})",
                pretty_at(l, PREC_TERM, true),
                pretty_at(r, PREC_TERM, true)
            ));
        }
        TermKind::Proj(ix, e) => {
            let kw = match ix {
                ProjIx::Fst => "fst",
                ProjIx::Snd => "snd",
            };
            let s = format!("{kw} {}", pretty_at(e, PREC_ATOM, true));
            out.push_str(&paren(prec > PREC_APP, s));
        }
    }
}

fn infix_symbol(c: Const) -> &'static str {
    match c {
        Const::Add => "+",
        Const::Sub => "-",
        Const::Mul => "*",
        Const::EqInt => "=",
        _ => unreachable!("not an infix primitive"),
    }
}

fn pretty_at(t: &Term, prec: u8, allow_seq: bool) -> String {
    // Sequencing sugar reads back as `let _ = ... in ...`, which re-parses to
    // the same tree; when `;` is unavailable the let form needs no parens
    // since `let` is already a closed prefix form.
    let mut s = String::new();
    fmt_term(t, prec, allow_seq, &mut s);
    s
}

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for sig in &p.sigs {
        out.push_str(&format!("effect {} : ", sig.op));
        if !sig.bound.is_empty() {
            let bs: Vec<String> = sig.bound.iter().map(|b| b.to_string()).collect();
            out.push_str(&format!("forall {} . ", bs.join(" ")));
        }
        out.push_str(&format!("{} => {}\n", pretty_ty(&sig.dom), pretty_ty(&sig.cod)));
    }
    out.push_str(";;\n");
    out.push_str(&pretty_term(&p.main));
    out.push('\n');
    out
}

/// Structural equality on terms ignoring spans; names are compared exactly.
pub fn term_eq(a: &Term, b: &Term) -> bool {
    use TermKind::*;
    match (&a.kind, &b.kind) {
        (Var(x), Var(y)) => x == y,
        (Const(c), Const(d)) => c == d,
        (Abs(x, e), Abs(y, f)) => x == y && term_eq(e, f),
        (App(f, a1), App(g, a2)) => term_eq(f, g) && term_eq(a1, a2),
        (Let(x, e1, e2), Let(y, f1, f2)) => x == y && term_eq(e1, f1) && term_eq(e2, f2),
        (OpCall(o, e), OpCall(p, f)) => o == p && term_eq(e, f),
        (Handle(e, h), Handle(f, i)) => {
            term_eq(e, f)
                && h.ret_var == i.ret_var
                && term_eq(&h.ret_body, &i.ret_body)
                && h.clauses.len() == i.clauses.len()
                && h.clauses.iter().zip(&i.clauses).all(|(c, d)| {
                    c.op == d.op && c.param == d.param && term_eq(&c.body, &d.body)
                })
        }
        (Resume(e), Resume(f)) => term_eq(e, f),
        (Pair(l1, r1), Pair(l2, r2)) => term_eq(l1, l2) && term_eq(r1, r2),
        (Proj(i, e), Proj(j, f)) => i == j && term_eq(e, f),
        (If(c1, a1, b1), If(c2, a2, b2)) => {
            term_eq(c1, c2) && term_eq(a1, a2) && term_eq(b1, b2)
        }
        _ => false,
    }
}
