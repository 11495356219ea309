//! Quill: a linear functional calculus with qualified types.
//!
//! Linearity is tracked by arrow types: `a -o b` functions may be used at
//! most once, `a ->* b` functions freely, and arrow variables with `Fun`
//! constraints abstract over both. The crate provides parsing, principal
//! type inference, an independent syntax-directed checker for elaborated
//! terms and an instrumented evaluator that audits linear resource use.

pub mod canonical;
pub mod entail;
pub mod eval;
pub mod generate;
pub mod infer;
pub mod parser;
pub mod pretty;
pub mod sdcheck;
pub mod syntax;
pub mod unify;

pub use canonical::canonicalize;
pub use entail::{EntailEnv, EntailError};
pub use infer::{infer_program, instance_of, Elaboration, TypeError};
pub use parser::{parse_program, parse_scheme, parse_term, ParseError};
pub use syntax::*;
