//! Exact-rational big-step interpreter for offline programs and online
//! schemes. All arithmetic is exact; division by zero yields zero.

use crate::ir::{Builtin, Func, OfflineExpr, OnlineExpr, OnlineFunc, OnlineScheme};
use crate::rat::{safe_div, Rat};
use num_traits::{Signed, ToPrimitive};
use std::collections::BTreeMap;
use thiserror::Error;

pub use crate::sym::unroll::{unroll, UnrollError};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Rational(Rat),
    Boolean(bool),
    Tuple(Vec<Value>),
    FiniteList(Vec<Rat>),
}

impl Value {
    pub fn as_rat(&self) -> Result<&Rat, EvalError> {
        match self {
            Value::Rational(r) => Ok(r),
            other => Err(EvalError::TypeError(format!("expected rational, got {other:?}"))),
        }
    }
    pub fn as_bool(&self) -> Result<bool, EvalError> {
        match self {
            Value::Boolean(b) => Ok(*b),
            other => Err(EvalError::TypeError(format!("expected boolean, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("type error: {0}")]
    TypeError(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("update produced a tuple of width {got}, expected {want}")]
    BadTupleWidth { got: usize, want: usize },
}

#[derive(Debug, Clone, Default)]
struct Env {
    scalars: BTreeMap<String, Rat>,
    new_elem: Option<Rat>,
}

fn builtin_scalar(b: Builtin, args: &[Rat]) -> Result<Value, EvalError> {
    let r = |v: Rat| Ok(Value::Rational(v));
    match b {
        Builtin::Add => r(&args[0] + &args[1]),
        Builtin::Sub => r(&args[0] - &args[1]),
        Builtin::Mul => r(&args[0] * &args[1]),
        Builtin::Div => r(safe_div(&args[0], &args[1])),
        Builtin::Neg => r(-args[0].clone()),
        Builtin::Min => r(args[0].clone().min(args[1].clone())),
        Builtin::Max => r(args[0].clone().max(args[1].clone())),
        Builtin::Abs => r(args[0].abs()),
        Builtin::Pow => {
            let exp = args[1]
                .to_integer()
                .to_u32()
                .ok_or_else(|| EvalError::TypeError("pow exponent out of range".into()))?;
            let mut acc = Rat::from_integer(1.into());
            for _ in 0..exp {
                acc *= &args[0];
            }
            r(acc)
        }
        Builtin::Lt => Ok(Value::Boolean(args[0] < args[1])),
        Builtin::Le => Ok(Value::Boolean(args[0] <= args[1])),
        Builtin::Gt => Ok(Value::Boolean(args[0] > args[1])),
        Builtin::Ge => Ok(Value::Boolean(args[0] >= args[1])),
        Builtin::EqOp => Ok(Value::Boolean(args[0] == args[1])),
        Builtin::And | Builtin::Or | Builtin::Not => {
            Err(EvalError::TypeError("boolean operator applied to rationals".into()))
        }
    }
}

fn eval_expr(e: &OfflineExpr, list: &[Rat], env: &Env) -> Result<Value, EvalError> {
    match e {
        OfflineExpr::Const(c) => Ok(Value::Rational(c.clone())),
        OfflineExpr::Var(n) => env
            .scalars
            .get(n)
            .cloned()
            .map(Value::Rational)
            .ok_or_else(|| EvalError::Unbound(n.clone())),
        OfflineExpr::ListVar => Ok(Value::FiniteList(list.to_vec())),
        OfflineExpr::NewElem => env
            .new_elem
            .clone()
            .map(Value::Rational)
            .ok_or_else(|| EvalError::Unbound("x (new element)".into())),
        OfflineExpr::Snoc(l) => {
            let mut base = match eval_expr(l, list, env)? {
                Value::FiniteList(v) => v,
                other => return Err(EvalError::TypeError(format!("snoc of non-list {other:?}"))),
            };
            let x = env
                .new_elem
                .clone()
                .ok_or_else(|| EvalError::Unbound("x (new element)".into()))?;
            base.push(x);
            Ok(Value::FiniteList(base))
        }
        OfflineExpr::Map(f, l) => {
            let elems = eval_list(l, list, env)?;
            let mapped = elems
                .iter()
                .map(|v| apply_func(f, &[v.clone()], list, env)?.as_rat().cloned())
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Value::FiniteList(mapped))
        }
        OfflineExpr::Filter(f, l) => {
            let elems = eval_list(l, list, env)?;
            let mut kept = Vec::new();
            for v in elems {
                if apply_func(f, &[v.clone()], list, env)?.as_bool()? {
                    kept.push(v);
                }
            }
            Ok(Value::FiniteList(kept))
        }
        OfflineExpr::Foldl(f, init, l) => {
            let elems = eval_list(l, list, env)?;
            let mut acc = eval_expr(init, list, env)?.as_rat().cloned()?;
            for v in elems {
                acc = apply_func(f, &[acc, v], list, env)?.as_rat().cloned()?;
            }
            Ok(Value::Rational(acc))
        }
        OfflineExpr::Length(l) => {
            let elems = eval_list(l, list, env)?;
            Ok(Value::Rational(Rat::from_integer((elems.len() as i64).into())))
        }
        OfflineExpr::Apply(f, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_expr(a, list, env)?);
            }
            match f {
                Func::Builtin(b) => apply_builtin(*b, &vals),
                Func::Lambda(..) => {
                    let rats = vals
                        .iter()
                        .map(|v| v.as_rat().cloned())
                        .collect::<Result<Vec<_>, _>>()?;
                    apply_func(f, &rats, list, env)
                }
            }
        }
        OfflineExpr::Ite(c, t, el) => {
            if eval_expr(c, list, env)?.as_bool()? {
                eval_expr(t, list, env)
            } else {
                eval_expr(el, list, env)
            }
        }
    }
}

fn apply_builtin(b: Builtin, vals: &[Value]) -> Result<Value, EvalError> {
    if vals.len() != b.arity() {
        return Err(EvalError::ArityMismatch(format!("`{}`", b.name())));
    }
    match b {
        Builtin::And => Ok(Value::Boolean(vals[0].as_bool()? && vals[1].as_bool()?)),
        Builtin::Or => Ok(Value::Boolean(vals[0].as_bool()? || vals[1].as_bool()?)),
        Builtin::Not => Ok(Value::Boolean(!vals[0].as_bool()?)),
        _ => {
            let rats = vals.iter().map(|v| v.as_rat().cloned()).collect::<Result<Vec<_>, _>>()?;
            builtin_scalar(b, &rats)
        }
    }
}

fn apply_func(f: &Func, args: &[Rat], list: &[Rat], env: &Env) -> Result<Value, EvalError> {
    match f {
        Func::Builtin(b) => {
            let vals: Vec<Value> = args.iter().cloned().map(Value::Rational).collect();
            apply_builtin(*b, &vals)
        }
        Func::Lambda(params, body) => {
            if params.len() != args.len() {
                return Err(EvalError::ArityMismatch(format!(
                    "lambda expects {} args, got {}",
                    params.len(),
                    args.len()
                )));
            }
            let mut inner = env.clone();
            for (p, a) in params.iter().zip(args) {
                inner.scalars.insert(p.clone(), a.clone());
            }
            eval_expr(body, list, &inner)
        }
    }
}

fn eval_list(e: &OfflineExpr, list: &[Rat], env: &Env) -> Result<Vec<Rat>, EvalError> {
    match eval_expr(e, list, env)? {
        Value::FiniteList(v) => Ok(v),
        other => Err(EvalError::TypeError(format!("expected list, got {other:?}"))),
    }
}

/// Evaluates an offline program on a concrete list and extra-argument values.
pub fn eval_offline(
    p: &crate::ir::OfflineProgram,
    xs: &[Rat],
    extra_args: &[Rat],
) -> Result<Rat, EvalError> {
    if extra_args.len() != p.extra_args.len() {
        return Err(EvalError::ArityMismatch(format!(
            "program takes {} extra args, got {}",
            p.extra_args.len(),
            extra_args.len()
        )));
    }
    let mut env = Env::default();
    for (n, v) in p.extra_args.iter().zip(extra_args) {
        env.scalars.insert(n.clone(), v.clone());
    }
    eval_expr(&p.body, xs, &env)?.as_rat().cloned()
}

/// Evaluates a bare offline expression (used for RFS entries and hole specs).
/// `new_elem` supplies the value of the distinguished `x` when the expression
/// contains snoc markers.
pub fn eval_offline_expr(
    e: &OfflineExpr,
    xs: &[Rat],
    args: &BTreeMap<String, Rat>,
    new_elem: Option<&Rat>,
) -> Result<Rat, EvalError> {
    let env = Env { scalars: args.clone(), new_elem: new_elem.cloned() };
    eval_expr(e, xs, &env)?.as_rat().cloned()
}

/// Evaluates an online expression given accumulator values, the new element
/// and extra-argument values.
pub fn eval_online_expr(
    e: &OnlineExpr,
    accums: &[Rat],
    x: &Rat,
    args: &BTreeMap<String, Rat>,
) -> Result<Value, EvalError> {
    let mut locals: BTreeMap<String, Rat> = BTreeMap::new();
    eval_online(e, accums, x, args, &mut locals)
}

fn eval_online(
    e: &OnlineExpr,
    accums: &[Rat],
    x: &Rat,
    args: &BTreeMap<String, Rat>,
    locals: &mut BTreeMap<String, Rat>,
) -> Result<Value, EvalError> {
    match e {
        OnlineExpr::Const(c) => Ok(Value::Rational(c.clone())),
        OnlineExpr::Accum(i) => accums
            .get(i - 1)
            .cloned()
            .map(Value::Rational)
            .ok_or_else(|| EvalError::Unbound(format!("y{i}"))),
        OnlineExpr::NewElem => Ok(Value::Rational(x.clone())),
        OnlineExpr::Arg(a) => args
            .get(a)
            .cloned()
            .map(Value::Rational)
            .ok_or_else(|| EvalError::Unbound(a.clone())),
        OnlineExpr::Var(v) => locals
            .get(v)
            .cloned()
            .map(Value::Rational)
            .ok_or_else(|| EvalError::Unbound(v.clone())),
        OnlineExpr::Apply(f, fargs) => {
            let mut vals = Vec::with_capacity(fargs.len());
            for a in fargs {
                vals.push(eval_online(a, accums, x, args, locals)?);
            }
            match f {
                OnlineFunc::Builtin(b) => apply_builtin(*b, &vals),
                OnlineFunc::Lambda(params, body) => {
                    if params.len() != vals.len() {
                        return Err(EvalError::ArityMismatch("online lambda".into()));
                    }
                    let saved: Vec<Option<Rat>> =
                        params.iter().map(|p| locals.get(p).cloned()).collect();
                    for (p, v) in params.iter().zip(&vals) {
                        locals.insert(p.clone(), v.as_rat().cloned()?);
                    }
                    let out = eval_online(body, accums, x, args, locals);
                    for (p, old) in params.iter().zip(saved) {
                        match old {
                            Some(v) => locals.insert(p.clone(), v),
                            None => locals.remove(p),
                        };
                    }
                    out
                }
            }
        }
        OnlineExpr::Ite(c, t, el) => {
            if eval_online(c, accums, x, args, locals)?.as_bool()? {
                eval_online(t, accums, x, args, locals)
            } else {
                eval_online(el, accums, x, args, locals)
            }
        }
    }
}

/// One update step: applies the online program to the current accumulator
/// tuple and the new element.
pub fn step_scheme(
    s: &OnlineScheme,
    accums: &[Rat],
    x: &Rat,
    args: &BTreeMap<String, Rat>,
) -> Result<Vec<Rat>, EvalError> {
    let mut next = Vec::with_capacity(s.program.arity);
    for e in &s.program.body {
        next.push(eval_online_expr(e, accums, x, args)?.as_rat().cloned()?);
    }
    if next.len() != s.program.arity {
        return Err(EvalError::BadTupleWidth { got: next.len(), want: s.program.arity });
    }
    Ok(next)
}

/// Runs a scheme over a finite stream. The empty stream yields `[fst(I)]`;
/// otherwise the first tuple component is emitted after each element.
pub fn run_scheme(
    s: &OnlineScheme,
    stream: &[Rat],
    extra_args: &[Rat],
) -> Result<Vec<Rat>, EvalError> {
    if extra_args.len() != s.program.extra_args.len() {
        return Err(EvalError::ArityMismatch(format!(
            "scheme takes {} extra args, got {}",
            s.program.extra_args.len(),
            extra_args.len()
        )));
    }
    let args: BTreeMap<String, Rat> =
        s.program.extra_args.iter().cloned().zip(extra_args.iter().cloned()).collect();
    if stream.is_empty() {
        return Ok(vec![s.init[0].clone()]);
    }
    let mut acc = s.init.clone();
    let mut out = Vec::with_capacity(stream.len());
    for x in stream {
        acc = step_scheme(s, &acc, x, &args)?;
        out.push(acc[0].clone());
    }
    Ok(out)
}
