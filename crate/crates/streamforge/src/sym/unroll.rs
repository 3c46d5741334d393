//! Symbolic unrolling: instantiates `xs` with a fixed-length symbolic list and
//! evaluates all combinators, producing a canonical term. Filters introduce
//! guarded elements, which surface as conditional nodes.

use super::term::{apply_func_sym, apply_pred_sym, offline_to_sym, Cond, SymEnv, SymTerm, TermCtx};
use super::{Atom, SymError};
use crate::ir::OfflineExpr;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum UnrollError {
    #[error("symbolic term budget exceeded (control-flow blowup)")]
    NodeBudget,
    #[error("cannot unroll: {0}")]
    Unsupported(String),
}

impl From<SymError> for UnrollError {
    fn from(e: SymError) -> Self {
        match e {
            SymError::NodeBudget => UnrollError::NodeBudget,
            other => UnrollError::Unsupported(other.to_string()),
        }
    }
}

/// A symbolic list: elements with optional presence guards (from filters).
type SymList = Vec<(Option<Cond>, SymTerm)>;

/// Unrolls an offline expression over a symbolic list of length `k` whose
/// elements are fresh indeterminates named from `elem_prefix`. Returns the
/// canonical term and the introduced indeterminates. Extra scalar arguments
/// stay free.
pub fn unroll(
    e: &OfflineExpr,
    k: u32,
    elem_prefix: &str,
) -> Result<(SymTerm, Vec<Atom>), UnrollError> {
    let mut ctx = TermCtx::new(10_000);
    let atoms: Vec<Atom> = (1..=k).map(|i| Atom::Elem(elem_prefix.to_string(), i)).collect();
    let elems: Vec<SymTerm> = atoms.iter().cloned().map(SymTerm::var).collect();
    let t = unroll_with_elems(e, &elems, &mut ctx)?;
    Ok((t, atoms))
}

/// Unrolls with explicit symbolic elements (mining appends the new element
/// `x` as the final entry). Side conditions accumulate in `ctx`.
pub fn unroll_with_elems(
    e: &OfflineExpr,
    elems: &[SymTerm],
    ctx: &mut TermCtx,
) -> Result<SymTerm, UnrollError> {
    let env = SymEnv::new();
    unroll_scalar(e, elems, &env, ctx)
}

fn unroll_scalar(
    e: &OfflineExpr,
    elems: &[SymTerm],
    env: &SymEnv,
    ctx: &mut TermCtx,
) -> Result<SymTerm, UnrollError> {
    match e {
        OfflineExpr::Foldl(f, init, l) => {
            let list = unroll_list(l, elems, env, ctx)?;
            let mut acc = unroll_scalar(init, elems, env, ctx)?;
            for (guard, elem) in list {
                let applied = unroll_apply(f, &[acc.clone(), elem], elems, env, ctx)?;
                acc = match guard {
                    None => applied,
                    Some(c) => match ctx.cond_const(&c) {
                        Some(true) => applied,
                        Some(false) => acc,
                        None => ctx.ite(c, applied, acc)?,
                    },
                };
            }
            Ok(acc)
        }
        OfflineExpr::Length(l) => {
            let list = unroll_list(l, elems, env, ctx)?;
            let mut acc = SymTerm::zero();
            let one = SymTerm::constant(crate::rat::rat_int(1));
            for (guard, _) in list {
                let inc = match guard {
                    None => one.clone(),
                    Some(c) => match ctx.cond_const(&c) {
                        Some(true) => one.clone(),
                        Some(false) => SymTerm::zero(),
                        None => ctx.ite(c, one.clone(), SymTerm::zero())?,
                    },
                };
                acc = ctx.add(&acc, &inc)?;
            }
            Ok(acc)
        }
        OfflineExpr::Ite(c, t, el) => {
            let cond = unroll_cond(c, elems, env, ctx)?;
            let tt = unroll_scalar(t, elems, env, ctx)?;
            let ee = unroll_scalar(el, elems, env, ctx)?;
            match ctx.cond_const(&cond) {
                Some(true) => Ok(tt),
                Some(false) => Ok(ee),
                None => Ok(ctx.ite(cond, tt, ee)?),
            }
        }
        OfflineExpr::Apply(f, args) => {
            let vals: Vec<SymTerm> = args
                .iter()
                .map(|a| unroll_scalar(a, elems, env, ctx))
                .collect::<Result<_, _>>()?;
            Ok(unroll_apply(f, &vals, elems, env, ctx)?)
        }
        OfflineExpr::Const(_) | OfflineExpr::Var(_) | OfflineExpr::NewElem => {
            Ok(offline_to_sym(e, env, ctx)?)
        }
        OfflineExpr::ListVar | OfflineExpr::Snoc(_) | OfflineExpr::Map(..)
        | OfflineExpr::Filter(..) => {
            Err(UnrollError::Unsupported("list value in scalar position".into()))
        }
    }
}

/// Applies a function during unrolling. Lambda bodies are themselves unrolled
/// (they may contain further list expressions over `xs`).
fn unroll_apply(
    f: &crate::ir::Func,
    args: &[SymTerm],
    elems: &[SymTerm],
    env: &SymEnv,
    ctx: &mut TermCtx,
) -> Result<SymTerm, UnrollError> {
    match f {
        crate::ir::Func::Builtin(_) => Ok(apply_func_sym(f, args, env, ctx)?),
        crate::ir::Func::Lambda(params, body) => {
            let mut inner = env.clone();
            for (p, a) in params.iter().zip(args) {
                inner.insert(p.clone(), a.clone());
            }
            unroll_scalar(body, elems, &inner, ctx)
        }
    }
}

fn unroll_pred(
    f: &crate::ir::Func,
    arg: SymTerm,
    elems: &[SymTerm],
    env: &SymEnv,
    ctx: &mut TermCtx,
) -> Result<Cond, UnrollError> {
    match f {
        crate::ir::Func::Builtin(_) => Ok(apply_pred_sym(f, &[arg], env, ctx)?),
        crate::ir::Func::Lambda(params, body) => {
            if params.len() != 1 {
                return Err(UnrollError::Unsupported("filter predicate arity".into()));
            }
            let mut inner = env.clone();
            inner.insert(params[0].clone(), arg);
            unroll_cond(body, elems, &inner, ctx)
        }
    }
}

fn unroll_cond(
    e: &OfflineExpr,
    elems: &[SymTerm],
    env: &SymEnv,
    ctx: &mut TermCtx,
) -> Result<Cond, UnrollError> {
    use crate::ir::{Builtin, Func};
    match e {
        OfflineExpr::Apply(Func::Builtin(b), args) if b.is_predicate() => match b {
            Builtin::And | Builtin::Or => {
                let l = unroll_cond(&args[0], elems, env, ctx)?;
                let r = unroll_cond(&args[1], elems, env, ctx)?;
                Ok(if *b == Builtin::And {
                    Cond::And(Box::new(l), Box::new(r))
                } else {
                    Cond::Or(Box::new(l), Box::new(r))
                })
            }
            Builtin::Not => Ok(Cond::Not(Box::new(unroll_cond(&args[0], elems, env, ctx)?))),
            _ => {
                let l = unroll_scalar(&args[0], elems, env, ctx)?;
                let r = unroll_scalar(&args[1], elems, env, ctx)?;
                let op = match b {
                    Builtin::Lt => super::term::CmpOp::Lt,
                    Builtin::Le => super::term::CmpOp::Le,
                    Builtin::Gt => super::term::CmpOp::Gt,
                    Builtin::Ge => super::term::CmpOp::Ge,
                    _ => super::term::CmpOp::Eq,
                };
                Ok(ctx.cmp(op, &l, &r)?)
            }
        },
        OfflineExpr::Apply(Func::Lambda(params, body), args) => {
            let mut inner = env.clone();
            for (p, a) in params.iter().zip(args) {
                let v = unroll_scalar(a, elems, env, ctx)?;
                inner.insert(p.clone(), v);
            }
            unroll_cond(body, elems, &inner, ctx)
        }
        _ => Err(UnrollError::Unsupported("expected boolean expression".into())),
    }
}

fn unroll_list(
    e: &OfflineExpr,
    elems: &[SymTerm],
    env: &SymEnv,
    ctx: &mut TermCtx,
) -> Result<SymList, UnrollError> {
    match e {
        OfflineExpr::ListVar => Ok(elems.iter().map(|t| (None, t.clone())).collect()),
        OfflineExpr::Snoc(l) => {
            let mut base = unroll_list(l, elems, env, ctx)?;
            base.push((None, SymTerm::var(Atom::NewElem)));
            Ok(base)
        }
        OfflineExpr::Map(f, l) => {
            let base = unroll_list(l, elems, env, ctx)?;
            base.into_iter()
                .map(|(g, t)| Ok((g, unroll_apply(f, &[t], elems, env, ctx)?)))
                .collect()
        }
        OfflineExpr::Filter(f, l) => {
            let base = unroll_list(l, elems, env, ctx)?;
            let mut out = SymList::new();
            for (g, t) in base {
                let c = unroll_pred(f, t.clone(), elems, env, ctx)?;
                match ctx.cond_const(&c) {
                    Some(true) => out.push((g, t)),
                    Some(false) => {} // statically excluded
                    None => {
                        let combined = match g {
                            None => c,
                            Some(g) => Cond::And(Box::new(g), Box::new(c)),
                        };
                        out.push((Some(combined), t));
                    }
                }
            }
            Ok(out)
        }
        _ => Err(UnrollError::Unsupported("expected a list expression".into())),
    }
}
