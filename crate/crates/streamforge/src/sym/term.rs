//! Symbolic terms: canonical rational functions extended with conditional
//! nodes for control flow that cannot be resolved symbolically.

use super::ratfun::RatFun;
use super::{Atom, SymError};
use crate::ir::{Builtin, Func, OfflineExpr, OnlineExpr, OnlineFunc};
use crate::rat::Rat;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

/// Boolean conditions over polynomial comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cond {
    Cmp(CmpOp, RatFun, RatFun),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

impl Cond {
    pub fn atoms(&self) -> BTreeSet<Atom> {
        match self {
            Cond::Cmp(_, a, b) => {
                let mut s = a.atoms();
                s.extend(b.atoms());
                s
            }
            Cond::And(a, b) | Cond::Or(a, b) => {
                let mut s = a.atoms();
                s.extend(b.atoms());
                s
            }
            Cond::Not(a) => a.atoms(),
        }
    }

    pub fn eval(&self, vals: &BTreeMap<Atom, Rat>) -> Option<bool> {
        Some(match self {
            Cond::Cmp(op, a, b) => {
                let a = a.eval(vals)?;
                let b = b.eval(vals)?;
                match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Eq => a == b,
                }
            }
            Cond::And(a, b) => a.eval(vals)? && b.eval(vals)?,
            Cond::Or(a, b) => a.eval(vals)? || b.eval(vals)?,
            Cond::Not(a) => !a.eval(vals)?,
        })
    }

    pub fn rename_atoms(&self, map: &BTreeMap<Atom, Atom>) -> Cond {
        match self {
            Cond::Cmp(op, a, b) => {
                Cond::Cmp(op.clone(), a.rename_atoms(map), b.rename_atoms(map))
            }
            Cond::And(a, b) => {
                Cond::And(Box::new(a.rename_atoms(map)), Box::new(b.rename_atoms(map)))
            }
            Cond::Or(a, b) => {
                Cond::Or(Box::new(a.rename_atoms(map)), Box::new(b.rename_atoms(map)))
            }
            Cond::Not(a) => Cond::Not(Box::new(a.rename_atoms(map))),
        }
    }

    pub fn subst(&self, map: &BTreeMap<Atom, RatFun>) -> Cond {
        match self {
            Cond::Cmp(op, a, b) => Cond::Cmp(op.clone(), a.subst(map), b.subst(map)),
            Cond::And(a, b) => Cond::And(Box::new(a.subst(map)), Box::new(b.subst(map))),
            Cond::Or(a, b) => Cond::Or(Box::new(a.subst(map)), Box::new(b.subst(map))),
            Cond::Not(a) => Cond::Not(Box::new(a.subst(map))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymTerm {
    Rat(RatFun),
    Ite(Cond, Box<SymTerm>, Box<SymTerm>),
}

impl SymTerm {
    pub fn constant(c: Rat) -> SymTerm {
        SymTerm::Rat(RatFun::constant(c))
    }

    pub fn var(a: Atom) -> SymTerm {
        SymTerm::Rat(RatFun::var(a))
    }

    pub fn zero() -> SymTerm {
        SymTerm::Rat(RatFun::zero())
    }

    pub fn as_ratfun(&self) -> Option<&RatFun> {
        match self {
            SymTerm::Rat(r) => Some(r),
            SymTerm::Ite(..) => None,
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        match self {
            SymTerm::Rat(r) => r.atoms(),
            SymTerm::Ite(c, t, e) => {
                let mut s = c.atoms();
                s.extend(t.atoms());
                s.extend(e.atoms());
                s
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            SymTerm::Rat(_) => 1,
            SymTerm::Ite(_, t, e) => 1 + t.node_count() + e.node_count(),
        }
    }

    pub fn eval(&self, vals: &BTreeMap<Atom, Rat>) -> Option<Rat> {
        match self {
            SymTerm::Rat(r) => r.eval(vals),
            SymTerm::Ite(c, t, e) => {
                if c.eval(vals)? {
                    t.eval(vals)
                } else {
                    e.eval(vals)
                }
            }
        }
    }

    pub fn rename_atoms(&self, map: &BTreeMap<Atom, Atom>) -> SymTerm {
        match self {
            SymTerm::Rat(r) => SymTerm::Rat(r.rename_atoms(map)),
            SymTerm::Ite(c, t, e) => SymTerm::Ite(
                c.rename_atoms(map),
                Box::new(t.rename_atoms(map)),
                Box::new(e.rename_atoms(map)),
            ),
        }
    }
}

/// Builder for symbolic terms. Tracks a node budget (conditionals multiply
/// term size) and the side conditions accumulated by symbolic division.
pub struct TermCtx {
    pub budget: usize,
    pub used: usize,
    pub side_conditions: Vec<RatFun>,
}

impl TermCtx {
    pub fn new(budget: usize) -> TermCtx {
        TermCtx { budget, used: 0, side_conditions: Vec::new() }
    }

    fn charge(&mut self, n: usize) -> Result<(), SymError> {
        self.used += n;
        if self.used > self.budget {
            Err(SymError::NodeBudget)
        } else {
            Ok(())
        }
    }

    fn record_den(&mut self, den: &RatFun) {
        if den.as_constant().is_none() {
            // b != 0 where b = nb/db: record nb (db was recorded when b was built).
            let nb = den.num().clone();
            let cond = RatFun::from_poly(nb);
            if !self.side_conditions.contains(&cond) {
                self.side_conditions.push(cond);
            }
        }
    }

    pub fn binop<F>(&mut self, a: &SymTerm, b: &SymTerm, f: &F) -> Result<SymTerm, SymError>
    where
        F: Fn(&RatFun, &RatFun) -> RatFun,
    {
        self.charge(1)?;
        match (a, b) {
            (SymTerm::Rat(x), SymTerm::Rat(y)) => Ok(SymTerm::Rat(f(x, y))),
            (SymTerm::Ite(c, t, e), other) => Ok(SymTerm::Ite(
                c.clone(),
                Box::new(self.binop(t, other, f)?),
                Box::new(self.binop(e, other, f)?),
            )),
            (other, SymTerm::Ite(c, t, e)) => Ok(SymTerm::Ite(
                c.clone(),
                Box::new(self.binop(other, t, f)?),
                Box::new(self.binop(other, e, f)?),
            )),
        }
    }

    pub fn add(&mut self, a: &SymTerm, b: &SymTerm) -> Result<SymTerm, SymError> {
        self.binop(a, b, &|x, y| x.add(y))
    }

    pub fn sub(&mut self, a: &SymTerm, b: &SymTerm) -> Result<SymTerm, SymError> {
        self.binop(a, b, &|x, y| x.sub(y))
    }

    pub fn mul(&mut self, a: &SymTerm, b: &SymTerm) -> Result<SymTerm, SymError> {
        self.binop(a, b, &|x, y| x.mul(y))
    }

    pub fn div(&mut self, a: &SymTerm, b: &SymTerm) -> Result<SymTerm, SymError> {
        if let SymTerm::Rat(d) = b {
            self.record_den(d);
        }
        self.binop(a, b, &|x, y| x.div(y))
    }

    pub fn neg(&mut self, a: &SymTerm) -> Result<SymTerm, SymError> {
        self.binop(a, &SymTerm::zero(), &|x, _| x.neg())
    }

    pub fn pow(&mut self, a: &SymTerm, e: u32) -> Result<SymTerm, SymError> {
        self.charge(1)?;
        match a {
            SymTerm::Rat(x) => Ok(SymTerm::Rat(x.pow(e))),
            SymTerm::Ite(c, t, el) => Ok(SymTerm::Ite(
                c.clone(),
                Box::new(self.pow(t, e)?),
                Box::new(self.pow(el, e)?),
            )),
        }
    }

    pub fn ite(&mut self, c: Cond, t: SymTerm, e: SymTerm) -> Result<SymTerm, SymError> {
        self.charge(1)?;
        if t == e {
            return Ok(t);
        }
        Ok(SymTerm::Ite(c, Box::new(t), Box::new(e)))
    }

    /// min/max/abs expand to conditionals.
    pub fn min(&mut self, a: &SymTerm, b: &SymTerm) -> Result<SymTerm, SymError> {
        if a == b {
            return Ok(a.clone());
        }
        let c = self.cmp(CmpOp::Le, a, b)?;
        self.ite(c, a.clone(), b.clone())
    }

    pub fn max(&mut self, a: &SymTerm, b: &SymTerm) -> Result<SymTerm, SymError> {
        if a == b {
            return Ok(a.clone());
        }
        let c = self.cmp(CmpOp::Ge, a, b)?;
        self.ite(c, a.clone(), b.clone())
    }

    pub fn abs(&mut self, a: &SymTerm) -> Result<SymTerm, SymError> {
        let c = self.cmp(CmpOp::Ge, a, &SymTerm::zero())?;
        let n = self.neg(a)?;
        self.ite(c, a.clone(), n)
    }

    /// Builds a comparison condition; conditional operands are not supported
    /// (conditions stay polynomial per the formula class).
    pub fn cmp(&mut self, op: CmpOp, a: &SymTerm, b: &SymTerm) -> Result<Cond, SymError> {
        match (a, b) {
            (SymTerm::Rat(x), SymTerm::Rat(y)) => Ok(Cond::Cmp(op, x.clone(), y.clone())),
            _ => Err(SymError::Unsupported(
                "comparison over conditional terms".into(),
            )),
        }
    }

    /// Constant-folds a condition when possible.
    pub fn cond_const(&self, c: &Cond) -> Option<bool> {
        match c {
            Cond::Cmp(op, a, b) => {
                let a = a.as_constant()?;
                let b = b.as_constant()?;
                Some(match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Eq => a == b,
                })
            }
            Cond::And(a, b) => match (self.cond_const(a), self.cond_const(b)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            Cond::Or(a, b) => match (self.cond_const(a), self.cond_const(b)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            Cond::Not(a) => self.cond_const(a).map(|v| !v),
        }
    }
}

/// Environment for converting offline expressions to symbolic terms: lambda
/// parameters bound to terms, everything else resolved to atoms.
pub type SymEnv = BTreeMap<String, SymTerm>;

/// Converts a scalar offline expression into a symbolic term, leaving list
/// computations as opaque `Atom::List` indeterminates. Lambda applications are
/// beta-reduced. Fails when a list expression captures a lambda parameter.
pub fn offline_to_sym(
    e: &OfflineExpr,
    env: &SymEnv,
    ctx: &mut TermCtx,
) -> Result<SymTerm, SymError> {
    if e.is_list_expression() {
        return atomize(e, env, ctx);
    }
    match e {
        OfflineExpr::Const(c) => Ok(SymTerm::constant(c.clone())),
        OfflineExpr::Var(n) => match env.get(n) {
            Some(t) => Ok(t.clone()),
            None => Ok(SymTerm::var(Atom::Arg(n.clone()))),
        },
        OfflineExpr::NewElem => Ok(SymTerm::var(Atom::NewElem)),
        OfflineExpr::ListVar | OfflineExpr::Snoc(_) => Err(SymError::Unsupported(
            "bare list value in scalar position".into(),
        )),
        OfflineExpr::Map(..) | OfflineExpr::Filter(..) => Err(SymError::Unsupported(
            "list-typed combinator in scalar position".into(),
        )),
        OfflineExpr::Foldl(..) | OfflineExpr::Length(_) => {
            // A fold/length whose chain does not reach xs (dead combinator
            // over snoc-free material) still needs atomization.
            atomize(e, env, ctx)
        }
        OfflineExpr::Apply(f, args) => apply_to_sym(f, args, env, ctx),
        OfflineExpr::Ite(c, t, el) => {
            let cond = offline_to_cond(c, env, ctx)?;
            let t = offline_to_sym(t, env, ctx)?;
            let el = offline_to_sym(el, env, ctx)?;
            if let Some(b) = ctx.cond_const(&cond) {
                return Ok(if b { t } else { el });
            }
            ctx.ite(cond, t, el)
        }
    }
}

fn apply_to_sym(
    f: &Func,
    args: &[OfflineExpr],
    env: &SymEnv,
    ctx: &mut TermCtx,
) -> Result<SymTerm, SymError> {
    match f {
        Func::Builtin(b) => {
            let vals: Vec<SymTerm> =
                args.iter().map(|a| offline_to_sym(a, env, ctx)).collect::<Result<_, _>>()?;
            builtin_sym(*b, &vals, ctx)
        }
        Func::Lambda(params, body) => {
            let mut inner = env.clone();
            for (p, a) in params.iter().zip(args) {
                let v = offline_to_sym(a, env, ctx)?;
                inner.insert(p.clone(), v);
            }
            offline_to_sym(body, &inner, ctx)
        }
    }
}

/// Beta-reduces a function applied to already-symbolic arguments.
pub fn apply_func_sym(
    f: &Func,
    args: &[SymTerm],
    env: &SymEnv,
    ctx: &mut TermCtx,
) -> Result<SymTerm, SymError> {
    match f {
        Func::Builtin(b) => builtin_sym(*b, args, ctx),
        Func::Lambda(params, body) => {
            if params.len() != args.len() {
                return Err(SymError::Unsupported("lambda arity mismatch".into()));
            }
            let mut inner = env.clone();
            for (p, a) in params.iter().zip(args) {
                inner.insert(p.clone(), a.clone());
            }
            offline_to_sym(body, &inner, ctx)
        }
    }
}

/// Beta-reduces a predicate applied to symbolic arguments into a condition.
pub fn apply_pred_sym(
    f: &Func,
    args: &[SymTerm],
    env: &SymEnv,
    ctx: &mut TermCtx,
) -> Result<Cond, SymError> {
    match f {
        Func::Builtin(b) => {
            if args.len() != 2 || !b.is_predicate() {
                return Err(SymError::Unsupported(format!(
                    "`{}` is not a binary predicate",
                    b.name()
                )));
            }
            let op = match b {
                Builtin::Lt => CmpOp::Lt,
                Builtin::Le => CmpOp::Le,
                Builtin::Gt => CmpOp::Gt,
                Builtin::Ge => CmpOp::Ge,
                Builtin::EqOp => CmpOp::Eq,
                _ => return Err(SymError::Unsupported("boolean combinator as predicate".into())),
            };
            ctx.cmp(op, &args[0], &args[1])
        }
        Func::Lambda(params, body) => {
            if params.len() != args.len() {
                return Err(SymError::Unsupported("lambda arity mismatch".into()));
            }
            let mut inner = env.clone();
            for (p, a) in params.iter().zip(args) {
                inner.insert(p.clone(), a.clone());
            }
            offline_to_cond(body, &inner, ctx)
        }
    }
}

fn builtin_sym(b: Builtin, vals: &[SymTerm], ctx: &mut TermCtx) -> Result<SymTerm, SymError> {
    match b {
        Builtin::Add => ctx.add(&vals[0], &vals[1]),
        Builtin::Sub => ctx.sub(&vals[0], &vals[1]),
        Builtin::Mul => ctx.mul(&vals[0], &vals[1]),
        Builtin::Div => ctx.div(&vals[0], &vals[1]),
        Builtin::Neg => ctx.neg(&vals[0]),
        Builtin::Min => ctx.min(&vals[0], &vals[1]),
        Builtin::Max => ctx.max(&vals[0], &vals[1]),
        Builtin::Abs => ctx.abs(&vals[0]),
        Builtin::Pow => {
            let e = vals[1]
                .as_ratfun()
                .and_then(|r| r.as_constant())
                .and_then(|c| if c.denom().is_one() { c.numer().to_u32() } else { None })
                .ok_or_else(|| {
                    SymError::Unsupported("pow exponent must be a nonnegative constant".into())
                })?;
            ctx.pow(&vals[0], e)
        }
        _ => Err(SymError::Unsupported(format!(
            "boolean operator `{}` in scalar position",
            b.name()
        ))),
    }
}

pub fn offline_to_cond(e: &OfflineExpr, env: &SymEnv, ctx: &mut TermCtx) -> Result<Cond, SymError> {
    match e {
        OfflineExpr::Apply(Func::Builtin(b), args) if b.is_predicate() => match b {
            Builtin::And | Builtin::Or => {
                let l = offline_to_cond(&args[0], env, ctx)?;
                let r = offline_to_cond(&args[1], env, ctx)?;
                Ok(if *b == Builtin::And {
                    Cond::And(Box::new(l), Box::new(r))
                } else {
                    Cond::Or(Box::new(l), Box::new(r))
                })
            }
            Builtin::Not => Ok(Cond::Not(Box::new(offline_to_cond(&args[0], env, ctx)?))),
            _ => {
                let l = offline_to_sym(&args[0], env, ctx)?;
                let r = offline_to_sym(&args[1], env, ctx)?;
                let op = match b {
                    Builtin::Lt => CmpOp::Lt,
                    Builtin::Le => CmpOp::Le,
                    Builtin::Gt => CmpOp::Gt,
                    Builtin::Ge => CmpOp::Ge,
                    _ => CmpOp::Eq,
                };
                ctx.cmp(op, &l, &r)
            }
        },
        OfflineExpr::Apply(Func::Lambda(params, body), args) => {
            let mut inner = env.clone();
            for (p, a) in params.iter().zip(args) {
                let v = offline_to_sym(a, env, ctx)?;
                inner.insert(p.clone(), v);
            }
            offline_to_cond(body, &inner, ctx)
        }
        _ => Err(SymError::Unsupported("expected a boolean expression".into())),
    }
}

/// Wraps a list computation as an opaque atom. The subtree must not capture
/// lambda parameters bound in the surrounding conversion.
fn atomize(e: &OfflineExpr, env: &SymEnv, ctx: &mut TermCtx) -> Result<SymTerm, SymError> {
    let _ = ctx;
    let free = e.free_vars();
    if let Some(captured) = free.iter().find(|v| env.contains_key(*v)) {
        return Err(SymError::Unsupported(format!(
            "list expression captures lambda parameter `{captured}`"
        )));
    }
    Ok(SymTerm::var(Atom::List(e.clone())))
}

/// Converts an online expression over accumulators into a symbolic term.
pub fn online_to_sym(e: &OnlineExpr, ctx: &mut TermCtx) -> Result<SymTerm, SymError> {
    online_to_sym_env(e, &SymEnv::new(), ctx)
}

fn online_to_sym_env(e: &OnlineExpr, env: &SymEnv, ctx: &mut TermCtx) -> Result<SymTerm, SymError> {
    match e {
        OnlineExpr::Const(c) => Ok(SymTerm::constant(c.clone())),
        OnlineExpr::Accum(i) => Ok(SymTerm::var(Atom::Accum(*i))),
        OnlineExpr::NewElem => Ok(SymTerm::var(Atom::NewElem)),
        OnlineExpr::Arg(a) => Ok(SymTerm::var(Atom::Arg(a.clone()))),
        OnlineExpr::Var(v) => env
            .get(v)
            .cloned()
            .ok_or_else(|| SymError::Unsupported(format!("unbound variable `{v}`"))),
        OnlineExpr::Apply(f, args) => match f {
            OnlineFunc::Builtin(b) => {
                let vals: Vec<SymTerm> = args
                    .iter()
                    .map(|a| online_to_sym_env(a, env, ctx))
                    .collect::<Result<_, _>>()?;
                builtin_sym(*b, &vals, ctx)
            }
            OnlineFunc::Lambda(params, body) => {
                let mut inner = env.clone();
                for (p, a) in params.iter().zip(args) {
                    let v = online_to_sym_env(a, env, ctx)?;
                    inner.insert(p.clone(), v);
                }
                online_to_sym_env(body, &inner, ctx)
            }
        },
        OnlineExpr::Ite(c, t, el) => {
            let cond = online_to_cond(c, env, ctx)?;
            let t = online_to_sym_env(t, env, ctx)?;
            let el = online_to_sym_env(el, env, ctx)?;
            ctx.ite(cond, t, el)
        }
    }
}

fn online_to_cond(e: &OnlineExpr, env: &SymEnv, ctx: &mut TermCtx) -> Result<Cond, SymError> {
    match e {
        OnlineExpr::Apply(OnlineFunc::Builtin(b), args) if b.is_predicate() => match b {
            Builtin::And | Builtin::Or => {
                let l = online_to_cond(&args[0], env, ctx)?;
                let r = online_to_cond(&args[1], env, ctx)?;
                Ok(if *b == Builtin::And {
                    Cond::And(Box::new(l), Box::new(r))
                } else {
                    Cond::Or(Box::new(l), Box::new(r))
                })
            }
            Builtin::Not => Ok(Cond::Not(Box::new(online_to_cond(&args[0], env, ctx)?))),
            _ => {
                let l = online_to_sym_env(&args[0], env, ctx)?;
                let r = online_to_sym_env(&args[1], env, ctx)?;
                let op = match b {
                    Builtin::Lt => CmpOp::Lt,
                    Builtin::Le => CmpOp::Le,
                    Builtin::Gt => CmpOp::Gt,
                    Builtin::Ge => CmpOp::Ge,
                    _ => CmpOp::Eq,
                };
                ctx.cmp(op, &l, &r)
            }
        },
        _ => Err(SymError::Unsupported("expected a boolean online expression".into())),
    }
}

/// Substitutes atoms by symbolic terms, distributing over conditionals.
pub fn subst_sym(
    t: &SymTerm,
    map: &BTreeMap<Atom, SymTerm>,
    ctx: &mut TermCtx,
) -> Result<SymTerm, SymError> {
    match t {
        SymTerm::Rat(r) => {
            // If every mapped image is a plain rational function, use the
            // cheap path; otherwise rebuild with term arithmetic.
            if map.values().all(|v| matches!(v, SymTerm::Rat(_))) {
                let flat: BTreeMap<Atom, RatFun> = map
                    .iter()
                    .map(|(k, v)| (k.clone(), v.as_ratfun().unwrap().clone()))
                    .collect();
                return Ok(SymTerm::Rat(r.subst(&flat)));
            }
            let den_sub = subst_poly_sym(r.den(), map, ctx)?;
            let num_sub = subst_poly_sym(r.num(), map, ctx)?;
            ctx.div(&num_sub, &den_sub)
        }
        SymTerm::Ite(c, a, b) => {
            let ca = subst_sym(a, map, ctx)?;
            let cb = subst_sym(b, map, ctx)?;
            let cond = subst_cond_sym(c, map)?;
            ctx.ite(cond, ca, cb)
        }
    }
}

fn subst_poly_sym(
    p: &super::poly::Poly,
    map: &BTreeMap<Atom, SymTerm>,
    ctx: &mut TermCtx,
) -> Result<SymTerm, SymError> {
    let mut acc = SymTerm::zero();
    for (m, c) in &p.terms {
        let mut term = SymTerm::constant(c.clone());
        for (a, e) in &m.0 {
            let base = map.get(a).cloned().unwrap_or_else(|| SymTerm::var(a.clone()));
            let powed = ctx.pow(&base, *e)?;
            term = ctx.mul(&term, &powed)?;
        }
        acc = ctx.add(&acc, &term)?;
    }
    Ok(acc)
}

fn subst_cond_sym(c: &Cond, map: &BTreeMap<Atom, SymTerm>) -> Result<Cond, SymError> {
    let flat: Option<BTreeMap<Atom, RatFun>> = map
        .iter()
        .map(|(k, v)| v.as_ratfun().map(|r| (k.clone(), r.clone())))
        .collect();
    match flat {
        Some(flat) => Ok(c.subst(&flat)),
        None => Err(SymError::Unsupported("conditional under condition substitution".into())),
    }
}

/// Renders a symbolic term as an online expression. Only accumulator, new
/// element and argument atoms may occur.
pub fn symterm_to_online(t: &SymTerm) -> Result<OnlineExpr, SymError> {
    match t {
        SymTerm::Rat(r) => ratfun_to_online(r),
        SymTerm::Ite(c, a, b) => Ok(OnlineExpr::Ite(
            Box::new(cond_to_online(c)?),
            Box::new(symterm_to_online(a)?),
            Box::new(symterm_to_online(b)?),
        )),
    }
}

fn atom_to_online(a: &Atom) -> Result<OnlineExpr, SymError> {
    match a {
        Atom::Accum(i) => Ok(OnlineExpr::Accum(*i)),
        Atom::NewElem => Ok(OnlineExpr::NewElem),
        Atom::Arg(n) => Ok(OnlineExpr::Arg(n.clone())),
        other => Err(SymError::Unsupported(format!("atom `{other}` in online expression"))),
    }
}

pub fn poly_to_online(p: &super::poly::Poly) -> Result<OnlineExpr, SymError> {
    if p.is_zero() {
        return Ok(OnlineExpr::int(0));
    }
    let mut acc: Option<OnlineExpr> = None;
    // Descending monomial order gives the familiar leading-term-first shape.
    for (m, c) in p.terms.iter().rev() {
        let (term, positive) = mono_term_to_online(m, c)?;
        acc = Some(match acc {
            None => {
                if positive {
                    term
                } else {
                    OnlineExpr::Apply(OnlineFunc::Builtin(Builtin::Neg), vec![term])
                }
            }
            Some(prev) => {
                let op = if positive { Builtin::Add } else { Builtin::Sub };
                OnlineExpr::apply2(op, prev, term)
            }
        });
    }
    Ok(acc.unwrap())
}

fn mono_term_to_online(
    m: &super::poly::Monomial,
    c: &Rat,
) -> Result<(OnlineExpr, bool), SymError> {
    let positive = !c.is_negative();
    let mag = c.abs();
    let mut factors: Vec<OnlineExpr> = Vec::new();
    for (a, e) in &m.0 {
        let base = atom_to_online(a)?;
        factors.push(if *e == 1 {
            base
        } else {
            OnlineExpr::apply2(Builtin::Pow, base, OnlineExpr::Const(Rat::from_integer((*e).into())))
        });
    }
    let mono = factors.into_iter().reduce(|a, b| OnlineExpr::apply2(Builtin::Mul, a, b));
    let term = match mono {
        None => OnlineExpr::Const(mag),
        Some(mexpr) => {
            if mag.is_one() {
                mexpr
            } else {
                OnlineExpr::apply2(Builtin::Mul, OnlineExpr::Const(mag), mexpr)
            }
        }
    };
    Ok((term, positive))
}

fn ratfun_to_online(r: &RatFun) -> Result<OnlineExpr, SymError> {
    // Render over integer coefficients: scale numerator and denominator
    // jointly to primitive integer form.
    let (num, den) = primitive_pair(r);
    let n = poly_to_online(&num)?;
    if den.as_constant().map(|c| c.is_one()).unwrap_or(false) {
        return Ok(n);
    }
    let d = poly_to_online(&den)?;
    Ok(OnlineExpr::apply2(Builtin::Div, n, d))
}

/// Scales num/den by a common rational so both have integer coefficients with
/// overall content 1 and a positive leading denominator coefficient.
pub fn primitive_pair(r: &RatFun) -> (super::poly::Poly, super::poly::Poly) {
    use num_bigint::BigInt;
    use num_integer::Integer;
    let num = r.num();
    let den = r.den();
    if num.is_zero() {
        return (super::poly::Poly::zero(), super::poly::Poly::one());
    }
    let mut lcm = BigInt::one();
    for c in num.terms.values().chain(den.terms.values()) {
        lcm = lcm.lcm(c.denom());
    }
    let mut g = BigInt::zero();
    for c in num.terms.values().chain(den.terms.values()) {
        g = g.gcd(&(c.numer() * (&lcm / c.denom())));
    }
    if g.is_zero() {
        g = BigInt::one();
    }
    let scale = |p: &super::poly::Poly| super::poly::Poly {
        terms: p
            .terms
            .iter()
            .map(|(m, c)| {
                (m.clone(), Rat::from_integer(c.numer() * (&lcm / c.denom()) / &g))
            })
            .collect(),
    };
    let mut num = scale(num);
    let mut den = scale(den);
    if den.leading().map(|(_, c)| c.is_negative()).unwrap_or(false) {
        num = num.neg();
        den = den.neg();
    }
    (num, den)
}

fn cond_to_online(c: &Cond) -> Result<OnlineExpr, SymError> {
    match c {
        Cond::Cmp(op, a, b) => {
            let l = ratfun_to_online(a)?;
            let r = ratfun_to_online(b)?;
            let bop = match op {
                CmpOp::Lt => Builtin::Lt,
                CmpOp::Le => Builtin::Le,
                CmpOp::Gt => Builtin::Gt,
                CmpOp::Ge => Builtin::Ge,
                CmpOp::Eq => Builtin::EqOp,
            };
            Ok(OnlineExpr::apply2(bop, l, r))
        }
        Cond::And(a, b) => Ok(OnlineExpr::apply2(
            Builtin::And,
            cond_to_online(a)?,
            cond_to_online(b)?,
        )),
        Cond::Or(a, b) => Ok(OnlineExpr::apply2(
            Builtin::Or,
            cond_to_online(a)?,
            cond_to_online(b)?,
        )),
        Cond::Not(a) => Ok(OnlineExpr::Apply(
            OnlineFunc::Builtin(Builtin::Not),
            vec![cond_to_online(a)?],
        )),
    }
}
