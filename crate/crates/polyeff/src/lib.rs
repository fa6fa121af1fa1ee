//! A call-by-value language with let-polymorphism and polymorphic algebraic
//! effect handlers. The pipeline: parse, typecheck under the
//! non-interfering-resumption discipline, elaborate to an explicitly-typed
//! intermediate language, evaluate with small-step bubbling semantics. Type
//! preservation of elaboration, progress and subject reduction are wired in
//! as runtime-checkable oracles.

pub mod cli;
pub mod eval;
pub mod infer;
pub mod ir;
pub mod ir_check;
pub mod parser;
pub mod syntax;
