//! Symbolic machinery: canonical multivariate rational functions, formula
//! manipulation, combinator axioms, and restricted existential elimination
//! over conjunctions of polynomial equalities.

pub mod axioms;
pub mod elim;
pub mod formula;
pub mod poly;
pub mod ratfun;
pub mod term;
pub mod unroll;

use crate::ir::OfflineExpr;
use std::fmt;

/// Indeterminates of the symbolic layer. The `Ord` drives the fixed monomial
/// order, so keep accumulators first: residues then display `y`-heavy terms
/// in a stable way.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// Accumulator `y_i` of the online program (1-based).
    Accum(usize),
    /// The incoming stream element `x`.
    NewElem,
    /// An extra scalar program argument.
    Arg(String),
    /// The distinguished unknown of an implicate template.
    Boxvar,
    /// Fresh variable introduced by `replace_list_exprs` (1-based).
    Fresh(u32),
    /// Symbolic list element introduced by unrolling.
    Elem(String, u32),
    /// An opaque offline list computation, uninterpreted by the polynomial
    /// layer. Must be closed apart from `xs`, `x` and extra arguments.
    List(OfflineExpr),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Accum(i) => write!(f, "y{i}"),
            Atom::NewElem => write!(f, "x"),
            Atom::Arg(a) => write!(f, "{a}"),
            Atom::Boxvar => write!(f, "[]"),
            Atom::Fresh(i) => write!(f, "v{i}"),
            Atom::Elem(p, i) => write!(f, "{p}_{i}"),
            Atom::List(e) => write!(f, "<{}>", crate::ir::print_offline_expr(e)),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SymError {
    #[error("term budget exceeded while building symbolic form")]
    NodeBudget,
    #[error("unsupported symbolic form: {0}")]
    Unsupported(String),
    #[error("axiom validation failed for `{0}`")]
    AxiomInvalid(String),
}
