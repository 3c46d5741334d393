//! Abstract syntax for offline (batch) programs and online schemes, plus the
//! structural utilities the synthesizer relies on: substitution, list-expression
//! enumeration and hole-bearing sketches.

mod parse;
mod print;

pub use parse::{parse_program, parse_scheme, ParseError};
pub use print::{print_offline_expr, print_online_expr, print_program, print_scheme};

use crate::rat::Rat;
use std::collections::BTreeSet;

/// Built-in scalar operators. Division is safe: a zero denominator yields 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Min,
    Max,
    Abs,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    EqOp,
    And,
    Or,
    Not,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Add => "+",
            Builtin::Sub => "-",
            Builtin::Mul => "*",
            Builtin::Div => "/",
            Builtin::Neg => "neg",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Abs => "abs",
            Builtin::Pow => "pow",
            Builtin::Lt => "<",
            Builtin::Le => "<=",
            Builtin::Gt => ">",
            Builtin::Ge => ">=",
            Builtin::EqOp => "=",
            Builtin::And => "and",
            Builtin::Or => "or",
            Builtin::Not => "not",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        Some(match s {
            "+" => Builtin::Add,
            "-" => Builtin::Sub,
            "*" => Builtin::Mul,
            "/" => Builtin::Div,
            "neg" => Builtin::Neg,
            "min" => Builtin::Min,
            "max" => Builtin::Max,
            "abs" => Builtin::Abs,
            "pow" => Builtin::Pow,
            "<" => Builtin::Lt,
            "<=" => Builtin::Le,
            ">" => Builtin::Gt,
            ">=" => Builtin::Ge,
            "=" => Builtin::EqOp,
            "and" => Builtin::And,
            "or" => Builtin::Or,
            "not" => Builtin::Not,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Neg | Builtin::Abs | Builtin::Not => 1,
            _ => 2,
        }
    }

    /// Operators yielding a boolean.
    pub fn is_predicate(self) -> bool {
        matches!(
            self,
            Builtin::Lt
                | Builtin::Le
                | Builtin::Gt
                | Builtin::Ge
                | Builtin::EqOp
                | Builtin::And
                | Builtin::Or
                | Builtin::Not
        )
    }
}

/// A function position: a built-in operator or a lambda abstraction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Builtin(Builtin),
    Lambda(Vec<String>, Box<OfflineExpr>),
}

/// Offline (batch) expressions over the single input list `xs`.
///
/// `Snoc` is an internal marker for `xs ++ [x]` (the new element is always the
/// distinguished `NewElem`); it is produced by substitution and never parsed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OfflineExpr {
    Const(Rat),
    Var(String),
    ListVar,
    NewElem,
    Snoc(Box<OfflineExpr>),
    Map(Func, Box<OfflineExpr>),
    Filter(Func, Box<OfflineExpr>),
    Foldl(Func, Box<OfflineExpr>, Box<OfflineExpr>),
    Length(Box<OfflineExpr>),
    Apply(Func, Vec<OfflineExpr>),
    Ite(Box<OfflineExpr>, Box<OfflineExpr>, Box<OfflineExpr>),
}

impl OfflineExpr {
    pub fn apply2(op: Builtin, a: OfflineExpr, b: OfflineExpr) -> OfflineExpr {
        OfflineExpr::Apply(Func::Builtin(op), vec![a, b])
    }

    pub fn int(n: i64) -> OfflineExpr {
        OfflineExpr::Const(crate::rat::rat_int(n))
    }

    /// True when this node is a scalar-valued list computation: a `foldl` or
    /// `length` whose list argument is a map/filter chain bottoming out at `xs`.
    pub fn is_list_expression(&self) -> bool {
        fn chain_hits_xs(e: &OfflineExpr) -> bool {
            match e {
                OfflineExpr::ListVar => true,
                OfflineExpr::Snoc(l) => chain_hits_xs(l),
                OfflineExpr::Map(_, l) | OfflineExpr::Filter(_, l) => chain_hits_xs(l),
                _ => false,
            }
        }
        match self {
            OfflineExpr::Foldl(_, _, l) | OfflineExpr::Length(l) => chain_hits_xs(l),
            _ => false,
        }
    }

    /// Does `xs` occur anywhere in this expression?
    pub fn mentions_list(&self) -> bool {
        match self {
            OfflineExpr::ListVar => true,
            OfflineExpr::Const(_) | OfflineExpr::Var(_) | OfflineExpr::NewElem => false,
            OfflineExpr::Snoc(l) | OfflineExpr::Length(l) => l.mentions_list(),
            OfflineExpr::Map(f, l) | OfflineExpr::Filter(f, l) => {
                func_mentions_list(f) || l.mentions_list()
            }
            OfflineExpr::Foldl(f, i, l) => {
                func_mentions_list(f) || i.mentions_list() || l.mentions_list()
            }
            OfflineExpr::Apply(f, args) => {
                func_mentions_list(f) || args.iter().any(|a| a.mentions_list())
            }
            OfflineExpr::Ite(c, t, e) => {
                c.mentions_list() || t.mentions_list() || e.mentions_list()
            }
        }
    }

    /// Free scalar variable names (lambda parameters are bound).
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn node_count(&self) -> usize {
        let inner: usize = match self {
            OfflineExpr::Const(_)
            | OfflineExpr::Var(_)
            | OfflineExpr::ListVar
            | OfflineExpr::NewElem => 0,
            OfflineExpr::Snoc(l) | OfflineExpr::Length(l) => l.node_count(),
            OfflineExpr::Map(f, l) | OfflineExpr::Filter(f, l) => {
                func_node_count(f) + l.node_count()
            }
            OfflineExpr::Foldl(f, i, l) => func_node_count(f) + i.node_count() + l.node_count(),
            OfflineExpr::Apply(f, args) => {
                func_node_count(f) + args.iter().map(|a| a.node_count()).sum::<usize>()
            }
            OfflineExpr::Ite(c, t, e) => c.node_count() + t.node_count() + e.node_count(),
        };
        1 + inner
    }
}

fn func_mentions_list(f: &Func) -> bool {
    match f {
        Func::Builtin(_) => false,
        Func::Lambda(_, body) => body.mentions_list(),
    }
}

fn func_node_count(f: &Func) -> usize {
    match f {
        Func::Builtin(_) => 1,
        Func::Lambda(_, body) => 1 + body.node_count(),
    }
}

fn collect_free(e: &OfflineExpr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match e {
        OfflineExpr::Var(n) => {
            if !bound.iter().any(|b| b == n) {
                out.insert(n.clone());
            }
        }
        OfflineExpr::Const(_) | OfflineExpr::ListVar | OfflineExpr::NewElem => {}
        OfflineExpr::Snoc(l) | OfflineExpr::Length(l) => collect_free(l, bound, out),
        OfflineExpr::Map(f, l) | OfflineExpr::Filter(f, l) => {
            collect_free_func(f, bound, out);
            collect_free(l, bound, out);
        }
        OfflineExpr::Foldl(f, i, l) => {
            collect_free_func(f, bound, out);
            collect_free(i, bound, out);
            collect_free(l, bound, out);
        }
        OfflineExpr::Apply(f, args) => {
            collect_free_func(f, bound, out);
            for a in args {
                collect_free(a, bound, out);
            }
        }
        OfflineExpr::Ite(c, t, el) => {
            collect_free(c, bound, out);
            collect_free(t, bound, out);
            collect_free(el, bound, out);
        }
    }
}

fn collect_free_func(f: &Func, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    if let Func::Lambda(params, body) = f {
        let depth = bound.len();
        bound.extend(params.iter().cloned());
        collect_free(body, bound, out);
        bound.truncate(depth);
    }
}

/// An offline program: `λ xs [extra scalar args]. body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OfflineProgram {
    pub extra_args: Vec<String>,
    pub body: OfflineExpr,
}

impl OfflineProgram {
    /// Every sub-expression of the body that computes a scalar directly over
    /// `xs` (a foldl or length whose combinator chain reaches `xs`), collected
    /// innermost-first with children visited left to right; structural
    /// duplicates keep their first occurrence.
    pub fn list_expressions(&self) -> Vec<OfflineExpr> {
        let mut out: Vec<OfflineExpr> = Vec::new();
        walk_list_exprs(&self.body, &mut out);
        out
    }
}

fn walk_list_exprs(e: &OfflineExpr, out: &mut Vec<OfflineExpr>) {
    match e {
        OfflineExpr::Const(_)
        | OfflineExpr::Var(_)
        | OfflineExpr::ListVar
        | OfflineExpr::NewElem => {}
        OfflineExpr::Snoc(l) | OfflineExpr::Length(l) => walk_list_exprs(l, out),
        OfflineExpr::Map(f, l) | OfflineExpr::Filter(f, l) => {
            walk_list_exprs_func(f, out);
            walk_list_exprs(l, out);
        }
        OfflineExpr::Foldl(f, i, l) => {
            walk_list_exprs_func(f, out);
            walk_list_exprs(i, out);
            walk_list_exprs(l, out);
        }
        OfflineExpr::Apply(f, args) => {
            walk_list_exprs_func(f, out);
            for a in args {
                walk_list_exprs(a, out);
            }
        }
        OfflineExpr::Ite(c, t, el) => {
            walk_list_exprs(c, out);
            walk_list_exprs(t, out);
            walk_list_exprs(el, out);
        }
    }
    if e.is_list_expression() && !out.contains(e) {
        out.push(e.clone());
    }
}

fn walk_list_exprs_func(f: &Func, out: &mut Vec<OfflineExpr>) {
    if let Func::Lambda(_, body) = f {
        walk_list_exprs(body, out);
    }
}

/// Capture-avoiding substitution of a free scalar variable. Lambda parameters
/// shadow the target; parameters clashing with the replacement's free
/// variables are renamed first.
pub fn substitute_var(e: &OfflineExpr, name: &str, replacement: &OfflineExpr) -> OfflineExpr {
    let repl_free = replacement.free_vars();
    subst_var(e, name, replacement, &repl_free)
}

fn subst_var(
    e: &OfflineExpr,
    name: &str,
    repl: &OfflineExpr,
    repl_free: &BTreeSet<String>,
) -> OfflineExpr {
    match e {
        OfflineExpr::Var(n) if n == name => repl.clone(),
        OfflineExpr::Const(_)
        | OfflineExpr::Var(_)
        | OfflineExpr::ListVar
        | OfflineExpr::NewElem => e.clone(),
        OfflineExpr::Snoc(l) => OfflineExpr::Snoc(Box::new(subst_var(l, name, repl, repl_free))),
        OfflineExpr::Length(l) => {
            OfflineExpr::Length(Box::new(subst_var(l, name, repl, repl_free)))
        }
        OfflineExpr::Map(f, l) => OfflineExpr::Map(
            subst_var_func(f, name, repl, repl_free),
            Box::new(subst_var(l, name, repl, repl_free)),
        ),
        OfflineExpr::Filter(f, l) => OfflineExpr::Filter(
            subst_var_func(f, name, repl, repl_free),
            Box::new(subst_var(l, name, repl, repl_free)),
        ),
        OfflineExpr::Foldl(f, i, l) => OfflineExpr::Foldl(
            subst_var_func(f, name, repl, repl_free),
            Box::new(subst_var(i, name, repl, repl_free)),
            Box::new(subst_var(l, name, repl, repl_free)),
        ),
        OfflineExpr::Apply(f, args) => OfflineExpr::Apply(
            subst_var_func(f, name, repl, repl_free),
            args.iter()
                .map(|a| subst_var(a, name, repl, repl_free))
                .collect(),
        ),
        OfflineExpr::Ite(c, t, el) => OfflineExpr::Ite(
            Box::new(subst_var(c, name, repl, repl_free)),
            Box::new(subst_var(t, name, repl, repl_free)),
            Box::new(subst_var(el, name, repl, repl_free)),
        ),
    }
}

fn subst_var_func(f: &Func, name: &str, repl: &OfflineExpr, repl_free: &BTreeSet<String>) -> Func {
    match f {
        Func::Builtin(b) => Func::Builtin(*b),
        Func::Lambda(params, body) => {
            if params.iter().any(|p| p == name) {
                // Shadowed: occurrences under this lambda stay intact.
                return Func::Lambda(params.clone(), body.clone());
            }
            let mut params = params.clone();
            let mut body = (**body).clone();
            for p in params.iter_mut() {
                if repl_free.contains(p) {
                    // Rename the parameter to avoid capturing the replacement.
                    let fresh = fresh_name(p, &body, repl_free);
                    body = substitute_var(&body, p, &OfflineExpr::Var(fresh.clone()));
                    *p = fresh;
                }
            }
            Func::Lambda(params, Box::new(subst_var(&body, name, repl, repl_free)))
        }
    }
}

fn fresh_name(base: &str, body: &OfflineExpr, avoid: &BTreeSet<String>) -> String {
    let body_free = body.free_vars();
    let mut i = 0u32;
    loop {
        let cand = format!("{base}_{i}");
        if !avoid.contains(&cand) && !body_free.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Replaces every occurrence of the list variable `xs` by the given list
/// expression (most commonly `Snoc(ListVar)`, i.e. `xs ++ [x]`). Scalar lambda
/// binders cannot shadow `xs`, so no renaming is needed.
pub fn substitute_list(e: &OfflineExpr, replacement: &OfflineExpr) -> OfflineExpr {
    match e {
        OfflineExpr::ListVar => replacement.clone(),
        OfflineExpr::Const(_) | OfflineExpr::Var(_) | OfflineExpr::NewElem => e.clone(),
        OfflineExpr::Snoc(l) => OfflineExpr::Snoc(Box::new(substitute_list(l, replacement))),
        OfflineExpr::Length(l) => OfflineExpr::Length(Box::new(substitute_list(l, replacement))),
        OfflineExpr::Map(f, l) => OfflineExpr::Map(
            substitute_list_func(f, replacement),
            Box::new(substitute_list(l, replacement)),
        ),
        OfflineExpr::Filter(f, l) => OfflineExpr::Filter(
            substitute_list_func(f, replacement),
            Box::new(substitute_list(l, replacement)),
        ),
        OfflineExpr::Foldl(f, i, l) => OfflineExpr::Foldl(
            substitute_list_func(f, replacement),
            Box::new(substitute_list(i, replacement)),
            Box::new(substitute_list(l, replacement)),
        ),
        OfflineExpr::Apply(f, args) => OfflineExpr::Apply(
            substitute_list_func(f, replacement),
            args.iter().map(|a| substitute_list(a, replacement)).collect(),
        ),
        OfflineExpr::Ite(c, t, el) => OfflineExpr::Ite(
            Box::new(substitute_list(c, replacement)),
            Box::new(substitute_list(t, replacement)),
            Box::new(substitute_list(el, replacement)),
        ),
    }
}

fn substitute_list_func(f: &Func, replacement: &OfflineExpr) -> Func {
    match f {
        Func::Builtin(b) => Func::Builtin(*b),
        Func::Lambda(params, body) => {
            Func::Lambda(params.clone(), Box::new(substitute_list(body, replacement)))
        }
    }
}

/// The spec of a hole: the offline expression with `xs` replaced by `xs ++ [x]`.
pub fn snoc_spec(e: &OfflineExpr) -> OfflineExpr {
    substitute_list(e, &OfflineExpr::Snoc(Box::new(OfflineExpr::ListVar)))
}

/// Online expressions: no list combinators, by construction. `Accum(i)` is the
/// accumulator `y_i` (1-based), `NewElem` is the incoming element `x`, and
/// `Arg` is a pass-through scalar program argument.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OnlineExpr {
    Const(Rat),
    Accum(usize),
    NewElem,
    Arg(String),
    Var(String),
    Apply(OnlineFunc, Vec<OnlineExpr>),
    Ite(Box<OnlineExpr>, Box<OnlineExpr>, Box<OnlineExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OnlineFunc {
    Builtin(Builtin),
    Lambda(Vec<String>, Box<OnlineExpr>),
}

impl OnlineExpr {
    pub fn apply2(op: Builtin, a: OnlineExpr, b: OnlineExpr) -> OnlineExpr {
        OnlineExpr::Apply(OnlineFunc::Builtin(op), vec![a, b])
    }

    pub fn int(n: i64) -> OnlineExpr {
        OnlineExpr::Const(crate::rat::rat_int(n))
    }

    pub fn node_count(&self) -> usize {
        match self {
            OnlineExpr::Const(_)
            | OnlineExpr::Accum(_)
            | OnlineExpr::NewElem
            | OnlineExpr::Arg(_)
            | OnlineExpr::Var(_) => 1,
            OnlineExpr::Apply(f, args) => {
                let fc = match f {
                    OnlineFunc::Builtin(_) => 0,
                    OnlineFunc::Lambda(_, body) => body.node_count(),
                };
                1 + fc + args.iter().map(|a| a.node_count()).sum::<usize>()
            }
            OnlineExpr::Ite(c, t, e) => 1 + c.node_count() + t.node_count() + e.node_count(),
        }
    }

    /// Accumulator indices referenced anywhere in the expression.
    pub fn accums_used(&self, out: &mut BTreeSet<usize>) {
        match self {
            OnlineExpr::Accum(i) => {
                out.insert(*i);
            }
            OnlineExpr::Const(_)
            | OnlineExpr::NewElem
            | OnlineExpr::Arg(_)
            | OnlineExpr::Var(_) => {}
            OnlineExpr::Apply(f, args) => {
                if let OnlineFunc::Lambda(_, body) = f {
                    body.accums_used(out);
                }
                for a in args {
                    a.accums_used(out);
                }
            }
            OnlineExpr::Ite(c, t, e) => {
                c.accums_used(out);
                t.accums_used(out);
                e.accums_used(out);
            }
        }
    }

    /// Renumber accumulators through `map[old-1] = Some(new)`; unused entries
    /// must not occur.
    pub fn reindex_accums(&self, map: &[Option<usize>]) -> OnlineExpr {
        match self {
            OnlineExpr::Accum(i) => OnlineExpr::Accum(
                map[*i - 1].expect("reindex: accumulator still referenced after pruning"),
            ),
            OnlineExpr::Const(_)
            | OnlineExpr::NewElem
            | OnlineExpr::Arg(_)
            | OnlineExpr::Var(_) => self.clone(),
            OnlineExpr::Apply(f, args) => {
                let f = match f {
                    OnlineFunc::Builtin(b) => OnlineFunc::Builtin(*b),
                    OnlineFunc::Lambda(ps, body) => {
                        OnlineFunc::Lambda(ps.clone(), Box::new(body.reindex_accums(map)))
                    }
                };
                OnlineExpr::Apply(f, args.iter().map(|a| a.reindex_accums(map)).collect())
            }
            OnlineExpr::Ite(c, t, e) => OnlineExpr::Ite(
                Box::new(c.reindex_accums(map)),
                Box::new(t.reindex_accums(map)),
                Box::new(e.reindex_accums(map)),
            ),
        }
    }
}

/// Converts an offline expression that is already free of list material into an
/// online expression. Fails on any list combinator or `xs` occurrence.
pub fn offline_to_online(e: &OfflineExpr) -> Result<OnlineExpr, String> {
    match e {
        OfflineExpr::Const(c) => Ok(OnlineExpr::Const(c.clone())),
        OfflineExpr::Var(n) => Ok(OnlineExpr::Var(n.clone())),
        OfflineExpr::NewElem => Ok(OnlineExpr::NewElem),
        OfflineExpr::ListVar
        | OfflineExpr::Snoc(_)
        | OfflineExpr::Map(..)
        | OfflineExpr::Filter(..)
        | OfflineExpr::Foldl(..)
        | OfflineExpr::Length(_) => Err(format!(
            "list expression cannot appear in an online program: {}",
            print_offline_expr(e)
        )),
        OfflineExpr::Apply(f, args) => {
            let f = match f {
                Func::Builtin(b) => OnlineFunc::Builtin(*b),
                Func::Lambda(ps, body) => {
                    OnlineFunc::Lambda(ps.clone(), Box::new(offline_to_online(body)?))
                }
            };
            let args = args.iter().map(offline_to_online).collect::<Result<_, _>>()?;
            Ok(OnlineExpr::Apply(f, args))
        }
        OfflineExpr::Ite(c, t, el) => Ok(OnlineExpr::Ite(
            Box::new(offline_to_online(c)?),
            Box::new(offline_to_online(t)?),
            Box::new(offline_to_online(el)?),
        )),
    }
}

/// An online program: `λ(y_1..y_n). λx. (e_1, ..., e_n)` plus pass-through args.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnlineProgram {
    pub arity: usize,
    pub extra_args: Vec<String>,
    pub body: Vec<OnlineExpr>,
}

/// An online scheme: initializer constants plus the update program. Component 1
/// of the tuple is the designated output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnlineScheme {
    pub init: Vec<Rat>,
    pub program: OnlineProgram,
}

impl OnlineScheme {
    pub fn new(init: Vec<Rat>, program: OnlineProgram) -> Result<OnlineScheme, String> {
        if init.len() != program.arity || program.body.len() != program.arity {
            return Err(format!(
                "scheme width mismatch: init {}, arity {}, body {}",
                init.len(),
                program.arity,
                program.body.len()
            ));
        }
        Ok(OnlineScheme { init, program })
    }
}

/// Sketch expressions: online expressions extended with numbered holes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SketchExpr {
    Const(Rat),
    Accum(usize),
    NewElem,
    Arg(String),
    Var(String),
    Hole(u32),
    Apply(SketchFunc, Vec<SketchExpr>),
    Ite(Box<SketchExpr>, Box<SketchExpr>, Box<SketchExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SketchFunc {
    Builtin(Builtin),
    Lambda(Vec<String>, Box<SketchExpr>),
}

impl SketchExpr {
    pub fn holes(&self, out: &mut BTreeSet<u32>) {
        match self {
            SketchExpr::Hole(h) => {
                out.insert(*h);
            }
            SketchExpr::Apply(f, args) => {
                if let SketchFunc::Lambda(_, body) = f {
                    body.holes(out);
                }
                for a in args {
                    a.holes(out);
                }
            }
            SketchExpr::Ite(c, t, e) => {
                c.holes(out);
                t.holes(out);
                e.holes(out);
            }
            _ => {}
        }
    }

    /// Replaces every hole using `fill`; fails if a hole has no entry.
    pub fn complete(
        &self,
        fill: &std::collections::BTreeMap<u32, OnlineExpr>,
    ) -> Result<OnlineExpr, String> {
        Ok(match self {
            SketchExpr::Const(c) => OnlineExpr::Const(c.clone()),
            SketchExpr::Accum(i) => OnlineExpr::Accum(*i),
            SketchExpr::NewElem => OnlineExpr::NewElem,
            SketchExpr::Arg(a) => OnlineExpr::Arg(a.clone()),
            SketchExpr::Var(v) => OnlineExpr::Var(v.clone()),
            SketchExpr::Hole(h) => fill
                .get(h)
                .cloned()
                .ok_or_else(|| format!("hole {h} has no solution"))?,
            SketchExpr::Apply(f, args) => {
                let f = match f {
                    SketchFunc::Builtin(b) => OnlineFunc::Builtin(*b),
                    SketchFunc::Lambda(ps, body) => {
                        OnlineFunc::Lambda(ps.clone(), Box::new(body.complete(fill)?))
                    }
                };
                OnlineExpr::Apply(
                    f,
                    args.iter().map(|a| a.complete(fill)).collect::<Result<_, _>>()?,
                )
            }
            SketchExpr::Ite(c, t, e) => OnlineExpr::Ite(
                Box::new(c.complete(fill)?),
                Box::new(t.complete(fill)?),
                Box::new(e.complete(fill)?),
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;

    pub(crate) fn mean_program() -> OfflineProgram {
        parse_program("(program (xs) (/ (foldl + 0 xs) (length xs)))").unwrap()
    }

    /// Hand-encoded two-pass variance in the surface syntax.
    pub(crate) fn variance_program() -> OfflineProgram {
        parse_program(
            "(program (xs) \
               (let (s (foldl + 0 xs)) \
                 (let (avg (/ s (length xs))) \
                   (/ (foldl (lambda (acc v) (+ acc (pow (- v avg) 2))) 0 xs) (length xs)))))",
        )
        .unwrap()
    }

    fn fold_sum() -> OfflineExpr {
        OfflineExpr::Foldl(
            Func::Builtin(Builtin::Add),
            Box::new(OfflineExpr::int(0)),
            Box::new(OfflineExpr::ListVar),
        )
    }

    #[test]
    fn list_expressions_mean() {
        let p = mean_program();
        let les = p.list_expressions();
        assert_eq!(les.len(), 2);
        assert_eq!(les[0], fold_sum());
        assert_eq!(les[1], OfflineExpr::Length(Box::new(OfflineExpr::ListVar)));
    }

    #[test]
    fn list_expressions_unused_xs() {
        let p = parse_program("(program (xs) 42)").unwrap();
        assert!(p.list_expressions().is_empty());
    }

    #[test]
    fn list_expressions_variance_order_and_dedup() {
        // Innermost-first walk over the hand-encoded AST; the duplicated
        // `length xs` is kept only once.
        let p = variance_program();
        let les = p.list_expressions();
        assert_eq!(les.len(), 3);
        assert_eq!(les[0], fold_sum());
        assert_eq!(les[1], OfflineExpr::Length(Box::new(OfflineExpr::ListVar)));
        assert!(matches!(&les[2], OfflineExpr::Foldl(Func::Lambda(..), _, _)));
    }

    #[test]
    fn list_expressions_stable_across_calls() {
        let p = variance_program();
        assert_eq!(p.list_expressions(), p.list_expressions());
    }

    #[test]
    fn substitute_list_snoc() {
        let e = fold_sum();
        let got = snoc_spec(&e);
        assert_eq!(
            got,
            OfflineExpr::Foldl(
                Func::Builtin(Builtin::Add),
                Box::new(OfflineExpr::int(0)),
                Box::new(OfflineExpr::Snoc(Box::new(OfflineExpr::ListVar))),
            )
        );
    }

    #[test]
    fn substitute_constant_unchanged() {
        let c = OfflineExpr::Const(rat_int(5));
        assert_eq!(substitute_var(&c, "a", &OfflineExpr::int(1)), c);
        assert_eq!(snoc_spec(&c), c);
    }

    #[test]
    fn substitute_respects_shadowing() {
        // (lambda (a) (+ a b)) with substitution b := a must rename the binder,
        // and substitution a := 1 must leave the shadowed body intact.
        let lam = OfflineExpr::Apply(
            Func::Lambda(
                vec!["a".into()],
                Box::new(OfflineExpr::apply2(
                    Builtin::Add,
                    OfflineExpr::Var("a".into()),
                    OfflineExpr::Var("b".into()),
                )),
            ),
            vec![OfflineExpr::int(3)],
        );
        let shadowed = substitute_var(&lam, "a", &OfflineExpr::int(1));
        assert_eq!(shadowed, lam, "shadowed occurrences stay intact");

        let renamed = substitute_var(&lam, "b", &OfflineExpr::Var("a".into()));
        if let OfflineExpr::Apply(Func::Lambda(params, body), _) = &renamed {
            assert_ne!(params[0], "a", "binder renamed to avoid capture");
            let free = body.free_vars();
            assert!(free.contains("a"), "replacement variable stays free");
        } else {
            panic!("expected lambda application");
        }
    }

    #[test]
    fn online_rejects_list_material() {
        assert!(offline_to_online(&fold_sum()).is_err());
        assert!(offline_to_online(&OfflineExpr::ListVar).is_err());
        let ok = offline_to_online(&OfflineExpr::apply2(
            Builtin::Add,
            OfflineExpr::NewElem,
            OfflineExpr::int(1),
        ));
        assert!(ok.is_ok());
    }
}
