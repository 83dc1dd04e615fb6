//! Exact symbolic expressions over named coordinates.

mod calc;
mod expr;
mod parse;
mod symbol;
mod zero;

use thiserror::Error;

pub use calc::Compiled;
pub use expr::{Expr, Func, Node, Rational};
pub use parse::parse_expr;
pub use symbol::{Role, Sym, SymbolTable};
pub use zero::{symbols_of, Evidence, ZeroCheck, ZeroTest, DEFAULT_SEED};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol '{name}' at offset {offset}{}", if *known_shape { " (index out of range for this theory)" } else { "" })]
    UnknownSymbol {
        offset: usize,
        name: String,
        known_shape: bool,
    },
    #[error("function '{function}' at offset {offset} takes 1 argument, found {found}")]
    Arity {
        offset: usize,
        function: String,
        found: usize,
    },
    #[error("no value bound for symbol {0}")]
    Unbound(Sym),
    #[error("non-finite value in subexpression {subtree}")]
    NonFinite { subtree: Expr },
    #[error("expression is non-finite at {nonfinite} of {total} sample points")]
    Domain { nonfinite: usize, total: usize },
}
