//! S-expression surface syntax for offline programs and online schemes.

use super::*;
use crate::rat;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown operator or builtin `{name}`")]
    UnknownBuiltin { line: usize, col: usize, name: String },
    #[error("{line}:{col}: free variable `{name}` is not a program argument")]
    FreeVariable { line: usize, col: usize, name: String },
    #[error("{line}:{col}: {msg}")]
    Type { line: usize, col: usize, msg: String },
}

impl ParseError {
    fn syntax(pos: (usize, usize), msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: pos.0, col: pos.1, msg: msg.into() }
    }
    fn ty(pos: (usize, usize), msg: impl Into<String>) -> ParseError {
        ParseError::Type { line: pos.0, col: pos.1, msg: msg.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String, (usize, usize)),
    List(Vec<Sexp>, (usize, usize)),
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

#[derive(Debug, Clone)]
enum Token {
    Open((usize, usize)),
    Close((usize, usize)),
    Atom(String, (usize, usize)),
}

fn tokenize(src: &str) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let bump = |i: &mut usize, line: &mut usize, col: &mut usize| {
        if bytes[*i] == b'\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };
    while i < bytes.len() {
        match bytes[i] {
            b' ' | b'\t' | b'\r' | b'\n' => bump(&mut i, &mut line, &mut col),
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    bump(&mut i, &mut line, &mut col);
                }
            }
            b'(' => {
                out.push(Token::Open((line, col)));
                bump(&mut i, &mut line, &mut col);
            }
            b')' => {
                out.push(Token::Close((line, col)));
                bump(&mut i, &mut line, &mut col);
            }
            _ => {
                let pos = (line, col);
                let start = i;
                while i < bytes.len()
                    && !matches!(bytes[i], b' ' | b'\t' | b'\r' | b'\n' | b'(' | b')' | b';')
                {
                    bump(&mut i, &mut line, &mut col);
                }
                out.push(Token::Atom(src[start..i].to_string(), pos));
            }
        }
    }
    out
}

fn read_sexp(tokens: &[Token], at: &mut usize) -> Result<Sexp, ParseError> {
    match tokens.get(*at) {
        None => Err(ParseError::syntax((0, 0), "unexpected end of input")),
        Some(Token::Atom(s, p)) => {
            *at += 1;
            Ok(Sexp::Atom(s.clone(), *p))
        }
        Some(Token::Close(p)) => Err(ParseError::syntax(*p, "unexpected `)`")),
        Some(Token::Open(p)) => {
            let open = *p;
            *at += 1;
            let mut items = Vec::new();
            loop {
                match tokens.get(*at) {
                    None => return Err(ParseError::syntax(open, "unclosed `(`")),
                    Some(Token::Close(_)) => {
                        *at += 1;
                        return Ok(Sexp::List(items, open));
                    }
                    _ => items.push(read_sexp(tokens, at)?),
                }
            }
        }
    }
}

fn read_single(src: &str) -> Result<Sexp, ParseError> {
    let tokens = tokenize(src);
    if tokens.is_empty() {
        return Err(ParseError::syntax((1, 1), "empty input"));
    }
    let mut at = 0;
    let sexp = read_sexp(&tokens, &mut at)?;
    if at != tokens.len() {
        let pos = match &tokens[at] {
            Token::Open(p) | Token::Close(p) | Token::Atom(_, p) => *p,
        };
        return Err(ParseError::syntax(pos, "trailing input after expression"));
    }
    Ok(sexp)
}

fn is_reserved(name: &str) -> bool {
    name == "xs"
        || name == "x"
        || (name.starts_with('y') && name.len() > 1 && name[1..].bytes().all(|b| b.is_ascii_digit()))
}

fn atom_name(s: &Sexp) -> Result<(&str, (usize, usize)), ParseError> {
    match s {
        Sexp::Atom(a, p) => Ok((a.as_str(), *p)),
        Sexp::List(_, p) => Err(ParseError::syntax(*p, "expected a name")),
    }
}

/// Simple value types used to reject ill-formed programs at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Scalar,
    Bool,
    List,
}

#[derive(Default)]
struct Scope {
    vars: Vec<String>,
    funcs: Vec<(String, Func)>,
}

struct ProgramParser {
    extra_args: Vec<String>,
}

impl ProgramParser {
    fn parse_expr(&self, s: &Sexp, scope: &mut Scope) -> Result<OfflineExpr, ParseError> {
        match s {
            Sexp::Atom(a, p) => {
                if let Some(r) = rat::parse(a) {
                    return Ok(OfflineExpr::Const(r));
                }
                if a == "xs" {
                    return Ok(OfflineExpr::ListVar);
                }
                if a.len() > 1
                    && a.chars().next().is_some_and(|c| c.is_ascii_digit())
                {
                    return Err(ParseError::syntax(*p, format!("malformed rational literal `{a}`")));
                }
                if scope.vars.iter().any(|v| v == a) || self.extra_args.iter().any(|v| v == a) {
                    return Ok(OfflineExpr::Var(a.clone()));
                }
                if Builtin::from_name(a).is_some() {
                    return Err(ParseError::syntax(
                        *p,
                        format!("operator `{a}` used outside application position"),
                    ));
                }
                Err(ParseError::FreeVariable { line: p.0, col: p.1, name: a.clone() })
            }
            Sexp::List(items, p) => {
                if items.is_empty() {
                    return Err(ParseError::syntax(*p, "empty application"));
                }
                if let Sexp::List(..) = &items[0] {
                    // Inline lambda application: ((lambda (a b) e) e1 e2).
                    let f = self.parse_func(&items[0], scope)?;
                    let args = items[1..]
                        .iter()
                        .map(|a| self.parse_expr(a, scope))
                        .collect::<Result<Vec<_>, _>>()?;
                    if let Func::Lambda(params, _) = &f {
                        if params.len() != args.len() {
                            return Err(ParseError::ty(
                                *p,
                                format!("lambda expects {} arguments, got {}", params.len(), args.len()),
                            ));
                        }
                    }
                    return Ok(OfflineExpr::Apply(f, args));
                }
                let (head, hpos) = atom_name(&items[0])?;
                match head {
                    "let" => self.parse_let(items, *p, scope),
                    "ite" => {
                        if items.len() != 4 {
                            return Err(ParseError::syntax(*p, "ite expects 3 arguments"));
                        }
                        Ok(OfflineExpr::Ite(
                            Box::new(self.parse_expr(&items[1], scope)?),
                            Box::new(self.parse_expr(&items[2], scope)?),
                            Box::new(self.parse_expr(&items[3], scope)?),
                        ))
                    }
                    "foldl" => {
                        if items.len() != 4 {
                            return Err(ParseError::syntax(*p, "foldl expects (foldl fn init lexpr)"));
                        }
                        let f = self.parse_func(&items[1], scope)?;
                        let init = self.parse_expr(&items[2], scope)?;
                        let list = self.parse_expr(&items[3], scope)?;
                        Ok(OfflineExpr::Foldl(f, Box::new(init), Box::new(list)))
                    }
                    "map" | "filter" => {
                        if items.len() != 3 {
                            return Err(ParseError::syntax(*p, format!("{head} expects (fn lexpr)")));
                        }
                        let f = self.parse_func(&items[1], scope)?;
                        let list = Box::new(self.parse_expr(&items[2], scope)?);
                        Ok(if head == "map" {
                            OfflineExpr::Map(f, list)
                        } else {
                            OfflineExpr::Filter(f, list)
                        })
                    }
                    "length" => {
                        if items.len() != 2 {
                            return Err(ParseError::syntax(*p, "length expects one list argument"));
                        }
                        Ok(OfflineExpr::Length(Box::new(self.parse_expr(&items[1], scope)?)))
                    }
                    "lambda" => {
                        Err(ParseError::syntax(*p, "lambda is only allowed in function position"))
                    }
                    _ => {
                        let Some(b) = Builtin::from_name(head) else {
                            return Err(ParseError::UnknownBuiltin {
                                line: hpos.0,
                                col: hpos.1,
                                name: head.to_string(),
                            });
                        };
                        let args = items[1..]
                            .iter()
                            .map(|a| self.parse_expr(a, scope))
                            .collect::<Result<Vec<_>, _>>()?;
                        if args.len() != b.arity() {
                            return Err(ParseError::syntax(
                                *p,
                                format!("`{head}` expects {} arguments, got {}", b.arity(), args.len()),
                            ));
                        }
                        if b == Builtin::Pow {
                            match &args[1] {
                                OfflineExpr::Const(c) if rat::is_nonneg_integer(c) => {}
                                _ => {
                                    return Err(ParseError::ty(
                                        *p,
                                        "pow exponent must be a nonnegative integer literal",
                                    ))
                                }
                            }
                        }
                        Ok(OfflineExpr::Apply(Func::Builtin(b), args))
                    }
                }
            }
        }
    }

    /// Let bindings are desugared at parse time: scalar bindings are inlined
    /// by substitution, lambda bindings are inlined where used in function
    /// positions.
    fn parse_let(
        &self,
        items: &[Sexp],
        pos: (usize, usize),
        scope: &mut Scope,
    ) -> Result<OfflineExpr, ParseError> {
        if items.len() != 3 {
            return Err(ParseError::syntax(pos, "let expects (let (name expr) body)"));
        }
        let binding = match &items[1] {
            Sexp::List(b, _) if b.len() == 2 => b,
            other => return Err(ParseError::syntax(other.pos(), "let binding must be (name expr)")),
        };
        let (name, npos) = atom_name(&binding[0])?;
        if is_reserved(name) {
            return Err(ParseError::syntax(npos, format!("`{name}` is reserved and cannot be bound")));
        }
        let binds_lambda = matches!(&binding[1], Sexp::List(bs, _)
            if matches!(bs.first(), Some(Sexp::Atom(a, _)) if a == "lambda"));
        if binds_lambda {
            let f = self.parse_func(&binding[1], scope)?;
            scope.funcs.push((name.to_string(), f));
            let body = self.parse_expr(&items[2], scope);
            scope.funcs.pop();
            body
        } else {
            let bound = self.parse_expr(&binding[1], scope)?;
            scope.vars.push(name.to_string());
            let body = self.parse_expr(&items[2], scope);
            scope.vars.pop();
            Ok(substitute_var(&body?, name, &bound))
        }
    }

    fn parse_func(&self, s: &Sexp, scope: &mut Scope) -> Result<Func, ParseError> {
        match s {
            Sexp::Atom(a, p) => {
                if let Some(b) = Builtin::from_name(a) {
                    return Ok(Func::Builtin(b));
                }
                if let Some((_, f)) = scope.funcs.iter().rev().find(|(n, _)| n == a) {
                    return Ok(f.clone());
                }
                Err(ParseError::UnknownBuiltin { line: p.0, col: p.1, name: a.clone() })
            }
            Sexp::List(items, p) => {
                match items.first() {
                    Some(Sexp::Atom(k, _)) if k == "lambda" => {}
                    _ => return Err(ParseError::syntax(*p, "expected operator or (lambda ...)")),
                }
                if items.len() != 3 {
                    return Err(ParseError::syntax(*p, "lambda expects (lambda (params) body)"));
                }
                let params = match &items[1] {
                    Sexp::List(ps, _) if !ps.is_empty() => ps
                        .iter()
                        .map(|a| {
                            let (n, np) = atom_name(a)?;
                            if is_reserved(n) {
                                return Err(ParseError::syntax(
                                    np,
                                    format!("`{n}` is reserved and cannot be a parameter"),
                                ));
                            }
                            Ok(n.to_string())
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    other => return Err(ParseError::syntax(other.pos(), "expected parameter list")),
                };
                let depth = scope.vars.len();
                scope.vars.extend(params.iter().cloned());
                let body = self.parse_expr(&items[2], scope);
                scope.vars.truncate(depth);
                Ok(Func::Lambda(params, Box::new(body?)))
            }
        }
    }
}

fn infer_type(e: &OfflineExpr, pos: (usize, usize)) -> Result<Ty, ParseError> {
    match e {
        OfflineExpr::Const(_) | OfflineExpr::Var(_) | OfflineExpr::NewElem => Ok(Ty::Scalar),
        OfflineExpr::ListVar | OfflineExpr::Snoc(_) => Ok(Ty::List),
        OfflineExpr::Map(f, l) | OfflineExpr::Filter(f, l) => {
            if infer_type(l, pos)? != Ty::List {
                return Err(ParseError::ty(pos, "map/filter expects a list argument"));
            }
            let want = if matches!(e, OfflineExpr::Filter(..)) { Ty::Bool } else { Ty::Scalar };
            check_func(f, 1, want, pos)?;
            Ok(Ty::List)
        }
        OfflineExpr::Foldl(f, i, l) => {
            if infer_type(l, pos)? != Ty::List {
                return Err(ParseError::ty(pos, "foldl expects a list argument"));
            }
            if infer_type(i, pos)? != Ty::Scalar {
                return Err(ParseError::ty(pos, "foldl initializer must be scalar"));
            }
            check_func(f, 2, Ty::Scalar, pos)?;
            Ok(Ty::Scalar)
        }
        OfflineExpr::Length(l) => {
            if infer_type(l, pos)? != Ty::List {
                return Err(ParseError::ty(pos, "length expects a list argument"));
            }
            Ok(Ty::Scalar)
        }
        OfflineExpr::Apply(f, args) => match f {
            Func::Builtin(b) => {
                for a in args {
                    let want = if matches!(b, Builtin::And | Builtin::Or | Builtin::Not) {
                        Ty::Bool
                    } else {
                        Ty::Scalar
                    };
                    let got = infer_type(a, pos)?;
                    if got != want {
                        return Err(ParseError::ty(
                            pos,
                            format!("`{}` expects {want:?} arguments, got {got:?}", b.name()),
                        ));
                    }
                }
                Ok(if b.is_predicate() { Ty::Bool } else { Ty::Scalar })
            }
            Func::Lambda(params, body) => {
                if params.len() != args.len() {
                    return Err(ParseError::ty(pos, "lambda arity mismatch"));
                }
                for a in args {
                    if infer_type(a, pos)? != Ty::Scalar {
                        return Err(ParseError::ty(pos, "lambda arguments must be scalar"));
                    }
                }
                infer_type(body, pos)
            }
        },
        OfflineExpr::Ite(c, t, el) => {
            if infer_type(c, pos)? != Ty::Bool {
                return Err(ParseError::ty(pos, "ite condition must be boolean"));
            }
            let tt = infer_type(t, pos)?;
            let et = infer_type(el, pos)?;
            if tt != et || tt == Ty::List {
                return Err(ParseError::ty(pos, "ite branches must agree and be scalar or boolean"));
            }
            Ok(tt)
        }
    }
}

fn check_func(f: &Func, arity: usize, ret: Ty, pos: (usize, usize)) -> Result<(), ParseError> {
    match f {
        Func::Builtin(b) => {
            if b.arity() != arity {
                return Err(ParseError::ty(pos, format!("`{}` has wrong arity here", b.name())));
            }
            let produces = if b.is_predicate() { Ty::Bool } else { Ty::Scalar };
            if produces != ret {
                return Err(ParseError::ty(
                    pos,
                    format!("`{}` produces {produces:?}, expected {ret:?}", b.name()),
                ));
            }
            Ok(())
        }
        Func::Lambda(params, body) => {
            if params.len() != arity {
                return Err(ParseError::ty(
                    pos,
                    format!("lambda takes {} parameters, expected {arity}", params.len()),
                ));
            }
            let got = infer_type(body, pos)?;
            if got != ret {
                return Err(ParseError::ty(pos, format!("lambda body is {got:?}, expected {ret:?}")));
            }
            Ok(())
        }
    }
}

/// Parses an offline program from its surface syntax. Let bindings are inlined.
pub fn parse_program(src: &str) -> Result<OfflineProgram, ParseError> {
    let sexp = read_single(src)?;
    let (items, pos) = match &sexp {
        Sexp::List(items, pos) => (items, *pos),
        Sexp::Atom(_, pos) => return Err(ParseError::syntax(*pos, "expected (program ...)")),
    };
    if items.len() != 3 || !matches!(&items[0], Sexp::Atom(k, _) if k == "program") {
        return Err(ParseError::syntax(pos, "expected (program (xs ...) expr)"));
    }
    let arglist = match &items[1] {
        Sexp::List(a, _) if !a.is_empty() => a,
        other => return Err(ParseError::syntax(other.pos(), "expected argument list (xs ...)")),
    };
    let (first, fpos) = atom_name(&arglist[0])?;
    if first != "xs" {
        return Err(ParseError::syntax(fpos, "first program argument must be `xs`"));
    }
    let mut extra_args = Vec::new();
    for a in &arglist[1..] {
        let (n, np) = atom_name(a)?;
        if is_reserved(n) || extra_args.iter().any(|e| e == n) {
            return Err(ParseError::syntax(np, format!("invalid or duplicate argument `{n}`")));
        }
        extra_args.push(n.to_string());
    }
    let parser = ProgramParser { extra_args: extra_args.clone() };
    let body = parser.parse_expr(&items[2], &mut Scope::default())?;
    let bpos = items[2].pos();
    match infer_type(&body, bpos)? {
        Ty::Scalar => {}
        Ty::List => return Err(ParseError::ty(bpos, "program body must be scalar-typed")),
        Ty::Bool => return Err(ParseError::ty(bpos, "program body must be rational-valued")),
    }
    let free = body.free_vars();
    if let Some(bad) = free.iter().find(|v| !extra_args.contains(v)) {
        return Err(ParseError::FreeVariable { line: bpos.0, col: bpos.1, name: bad.clone() });
    }
    Ok(OfflineProgram { extra_args, body })
}

/// Parses a printed online scheme:
/// `(scheme (init c..) (update (y1..yn) x [(args a..)] (tuple e..)))`.
pub fn parse_scheme(src: &str) -> Result<OnlineScheme, ParseError> {
    let sexp = read_single(src)?;
    let (items, pos) = match &sexp {
        Sexp::List(items, pos) => (items, *pos),
        Sexp::Atom(_, pos) => return Err(ParseError::syntax(*pos, "expected (scheme ...)")),
    };
    if items.len() != 3 || !matches!(&items[0], Sexp::Atom(k, _) if k == "scheme") {
        return Err(ParseError::syntax(pos, "expected (scheme (init ...) (update ...))"));
    }
    let init = match &items[1] {
        Sexp::List(parts, _) if matches!(parts.first(), Some(Sexp::Atom(k, _)) if k == "init") => {
            parts[1..]
                .iter()
                .map(|a| {
                    let (s, ap) = atom_name(a)?;
                    rat::parse(s).ok_or_else(|| ParseError::syntax(ap, "expected rational constant"))
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        other => return Err(ParseError::syntax(other.pos(), "expected (init c ...)")),
    };
    let update = match &items[2] {
        Sexp::List(parts, p) if matches!(parts.first(), Some(Sexp::Atom(k, _)) if k == "update") => {
            parse_update(parts, *p)?
        }
        other => return Err(ParseError::syntax(other.pos(), "expected (update ...)")),
    };
    OnlineScheme::new(init, update).map_err(|msg| ParseError::ty(pos, msg))
}

fn parse_update(parts: &[Sexp], pos: (usize, usize)) -> Result<OnlineProgram, ParseError> {
    if parts.len() < 4 {
        return Err(ParseError::syntax(pos, "update expects (update (y..) x [(args ..)] (tuple ..))"));
    }
    let accums = match &parts[1] {
        Sexp::List(ys, _) => ys
            .iter()
            .map(|a| atom_name(a).map(|(n, _)| n.to_string()))
            .collect::<Result<Vec<_>, _>>()?,
        other => return Err(ParseError::syntax(other.pos(), "expected accumulator list")),
    };
    let (xname, xpos) = atom_name(&parts[2])?;
    if xname != "x" {
        return Err(ParseError::syntax(xpos, "new-element binder must be `x`"));
    }
    let mut idx = 3;
    let mut extra_args = Vec::new();
    if let Sexp::List(ps, _) = &parts[idx] {
        if matches!(ps.first(), Some(Sexp::Atom(k, _)) if k == "args") {
            for a in &ps[1..] {
                extra_args.push(atom_name(a)?.0.to_string());
            }
            idx += 1;
        }
    }
    let tuple = match parts.get(idx) {
        Some(Sexp::List(ts, _)) if matches!(ts.first(), Some(Sexp::Atom(k, _)) if k == "tuple") => {
            &ts[1..]
        }
        other => {
            let p = other.map_or(pos, |s| s.pos());
            return Err(ParseError::syntax(p, "expected (tuple e ...)"));
        }
    };
    if parts.len() != idx + 1 {
        return Err(ParseError::syntax(pos, "unexpected extra items in update"));
    }
    let body = tuple
        .iter()
        .map(|e| parse_online_expr(e, &accums, &extra_args, &mut Vec::new()))
        .collect::<Result<Vec<_>, _>>()?;
    if body.len() != accums.len() {
        return Err(ParseError::ty(pos, "tuple width must equal accumulator count"));
    }
    Ok(OnlineProgram { arity: accums.len(), extra_args, body })
}

fn parse_online_expr(
    s: &Sexp,
    accums: &[String],
    args: &[String],
    scope: &mut Vec<String>,
) -> Result<OnlineExpr, ParseError> {
    match s {
        Sexp::Atom(a, p) => {
            if let Some(r) = rat::parse(a) {
                return Ok(OnlineExpr::Const(r));
            }
            if a == "x" {
                return Ok(OnlineExpr::NewElem);
            }
            if scope.iter().any(|v| v == a) {
                return Ok(OnlineExpr::Var(a.clone()));
            }
            if let Some(i) = accums.iter().position(|n| n == a) {
                return Ok(OnlineExpr::Accum(i + 1));
            }
            if args.iter().any(|v| v == a) {
                return Ok(OnlineExpr::Arg(a.clone()));
            }
            Err(ParseError::FreeVariable { line: p.0, col: p.1, name: a.clone() })
        }
        Sexp::List(items, p) => {
            if items.is_empty() {
                return Err(ParseError::syntax(*p, "empty application"));
            }
            match &items[0] {
                Sexp::Atom(h, hp) if h == "ite" => {
                    if items.len() != 4 {
                        return Err(ParseError::syntax(*hp, "ite expects 3 arguments"));
                    }
                    Ok(OnlineExpr::Ite(
                        Box::new(parse_online_expr(&items[1], accums, args, scope)?),
                        Box::new(parse_online_expr(&items[2], accums, args, scope)?),
                        Box::new(parse_online_expr(&items[3], accums, args, scope)?),
                    ))
                }
                Sexp::Atom(h, hp) => {
                    let Some(b) = Builtin::from_name(h) else {
                        return Err(ParseError::UnknownBuiltin {
                            line: hp.0,
                            col: hp.1,
                            name: h.clone(),
                        });
                    };
                    let parsed = items[1..]
                        .iter()
                        .map(|a| parse_online_expr(a, accums, args, scope))
                        .collect::<Result<Vec<_>, _>>()?;
                    if parsed.len() != b.arity() {
                        return Err(ParseError::syntax(*p, format!("`{h}` arity mismatch")));
                    }
                    Ok(OnlineExpr::Apply(OnlineFunc::Builtin(b), parsed))
                }
                Sexp::List(lam_items, lp) => {
                    if !matches!(lam_items.first(), Some(Sexp::Atom(k, _)) if k == "lambda") {
                        return Err(ParseError::syntax(*lp, "expected operator or lambda"));
                    }
                    if lam_items.len() != 3 {
                        return Err(ParseError::syntax(*lp, "lambda expects (lambda (params) body)"));
                    }
                    let params = match &lam_items[1] {
                        Sexp::List(ps, _) => ps
                            .iter()
                            .map(|a| atom_name(a).map(|(n, _)| n.to_string()))
                            .collect::<Result<Vec<_>, _>>()?,
                        other => return Err(ParseError::syntax(other.pos(), "expected parameters")),
                    };
                    let depth = scope.len();
                    scope.extend(params.iter().cloned());
                    let body = parse_online_expr(&lam_items[2], accums, args, scope)?;
                    scope.truncate(depth);
                    let parsed = items[1..]
                        .iter()
                        .map(|a| parse_online_expr(a, accums, args, scope))
                        .collect::<Result<Vec<_>, _>>()?;
                    if params.len() != parsed.len() {
                        return Err(ParseError::ty(*lp, "lambda arity mismatch"));
                    }
                    Ok(OnlineExpr::Apply(OnlineFunc::Lambda(params, Box::new(body)), parsed))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mean_program() {
        let p = parse_program("(program (xs) (/ (foldl + 0 xs) (length xs)))").unwrap();
        assert!(p.extra_args.is_empty());
        assert_eq!(
            p.body,
            OfflineExpr::apply2(
                Builtin::Div,
                OfflineExpr::Foldl(
                    Func::Builtin(Builtin::Add),
                    Box::new(OfflineExpr::int(0)),
                    Box::new(OfflineExpr::ListVar),
                ),
                OfflineExpr::Length(Box::new(OfflineExpr::ListVar)),
            )
        );
    }

    #[test]
    fn rejects_list_typed_body() {
        let err = parse_program("(program (xs) xs)").unwrap_err();
        assert!(matches!(err, ParseError::Type { .. }), "got {err}");
        assert!(err.to_string().contains("scalar"));
    }

    #[test]
    fn rejects_unknown_builtin_with_position() {
        let err = parse_program("(program (xs) (sort xs))").unwrap_err();
        match err {
            ParseError::UnknownBuiltin { name, line, col } => {
                assert_eq!(name, "sort");
                assert_eq!(line, 1);
                assert!(col > 1);
            }
            other => panic!("expected UnknownBuiltin, got {other}"),
        }
    }

    #[test]
    fn rejects_free_variable() {
        let err = parse_program("(program (xs) (+ t 1))").unwrap_err();
        assert!(matches!(err, ParseError::FreeVariable { ref name, .. } if name == "t"));
    }

    #[test]
    fn accepts_extra_args() {
        let p = parse_program("(program (xs t) (length (filter (lambda (v) (> v t)) xs)))").unwrap();
        assert_eq!(p.extra_args, vec!["t".to_string()]);
    }

    #[test]
    fn desugars_let_by_inlining() {
        let p = parse_program("(program (xs) (let (s (foldl + 0 xs)) (/ s (length xs))))").unwrap();
        let direct = parse_program("(program (xs) (/ (foldl + 0 xs) (length xs)))").unwrap();
        assert_eq!(p, direct);
    }

    #[test]
    fn desugars_let_bound_lambda() {
        let p = parse_program(
            "(program (xs) (let (f (lambda (acc v) (+ acc v))) (foldl f 0 xs)))",
        )
        .unwrap();
        let direct =
            parse_program("(program (xs) (foldl (lambda (acc v) (+ acc v)) 0 xs))").unwrap();
        assert_eq!(p, direct);
    }

    #[test]
    fn rejects_pow_with_non_literal_exponent() {
        let err = parse_program("(program (xs) (pow 2 (length xs)))").unwrap_err();
        assert!(err.to_string().contains("exponent"));
    }

    #[test]
    fn rejects_reserved_binders() {
        assert!(parse_program("(program (xs) (foldl (lambda (y1 v) v) 0 xs))").is_err());
        assert!(parse_program("(program (xs x) x)").is_err());
    }

    #[test]
    fn syntax_error_is_position_annotated() {
        let err = parse_program("(program (xs)\n  (+ 1 2").unwrap_err();
        assert!(err.to_string().starts_with("2:3:"), "got {err}");
        let err = parse_program(")").unwrap_err();
        assert!(err.to_string().starts_with("1:1:"), "got {err}");
    }
}
