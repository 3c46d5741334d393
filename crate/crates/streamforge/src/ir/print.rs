//! Canonical text rendering. Printing then parsing yields a structurally
//! equal AST (lets are already inlined, so no sugar survives).

use super::*;
use crate::rat::render;

pub fn print_offline_expr(e: &OfflineExpr) -> String {
    let mut s = String::new();
    write_offline(e, &mut s);
    s
}

fn write_offline(e: &OfflineExpr, out: &mut String) {
    match e {
        OfflineExpr::Const(c) => out.push_str(&render(c)),
        OfflineExpr::Var(n) => out.push_str(n),
        OfflineExpr::ListVar => out.push_str("xs"),
        OfflineExpr::NewElem => out.push('x'),
        OfflineExpr::Snoc(l) => {
            // Internal marker; rendered only in diagnostics.
            out.push_str("(snoc ");
            write_offline(l, out);
            out.push_str(" x)");
        }
        OfflineExpr::Map(f, l) => {
            out.push_str("(map ");
            write_func(f, out);
            out.push(' ');
            write_offline(l, out);
            out.push(')');
        }
        OfflineExpr::Filter(f, l) => {
            out.push_str("(filter ");
            write_func(f, out);
            out.push(' ');
            write_offline(l, out);
            out.push(')');
        }
        OfflineExpr::Foldl(f, i, l) => {
            out.push_str("(foldl ");
            write_func(f, out);
            out.push(' ');
            write_offline(i, out);
            out.push(' ');
            write_offline(l, out);
            out.push(')');
        }
        OfflineExpr::Length(l) => {
            out.push_str("(length ");
            write_offline(l, out);
            out.push(')');
        }
        OfflineExpr::Apply(f, args) => {
            out.push('(');
            write_func(f, out);
            for a in args {
                out.push(' ');
                write_offline(a, out);
            }
            out.push(')');
        }
        OfflineExpr::Ite(c, t, el) => {
            out.push_str("(ite ");
            write_offline(c, out);
            out.push(' ');
            write_offline(t, out);
            out.push(' ');
            write_offline(el, out);
            out.push(')');
        }
    }
}

fn write_func(f: &Func, out: &mut String) {
    match f {
        Func::Builtin(b) => out.push_str(b.name()),
        Func::Lambda(params, body) => {
            out.push_str("(lambda (");
            out.push_str(&params.join(" "));
            out.push_str(") ");
            write_offline(body, out);
            out.push(')');
        }
    }
}

pub fn print_program(p: &OfflineProgram) -> String {
    let mut args = String::from("xs");
    for a in &p.extra_args {
        args.push(' ');
        args.push_str(a);
    }
    format!("(program ({args}) {})", print_offline_expr(&p.body))
}

pub fn print_online_expr(e: &OnlineExpr) -> String {
    let mut s = String::new();
    write_online(e, &mut s);
    s
}

fn write_online(e: &OnlineExpr, out: &mut String) {
    match e {
        OnlineExpr::Const(c) => out.push_str(&render(c)),
        OnlineExpr::Accum(i) => out.push_str(&format!("y{i}")),
        OnlineExpr::NewElem => out.push('x'),
        OnlineExpr::Arg(a) => out.push_str(a),
        OnlineExpr::Var(v) => out.push_str(v),
        OnlineExpr::Apply(f, args) => {
            out.push('(');
            match f {
                OnlineFunc::Builtin(b) => out.push_str(b.name()),
                OnlineFunc::Lambda(params, body) => {
                    out.push_str("(lambda (");
                    out.push_str(&params.join(" "));
                    out.push_str(") ");
                    write_online(body, out);
                    out.push(')');
                }
            }
            for a in args {
                out.push(' ');
                write_online(a, out);
            }
            out.push(')');
        }
        OnlineExpr::Ite(c, t, el) => {
            out.push_str("(ite ");
            write_online(c, out);
            out.push(' ');
            write_online(t, out);
            out.push(' ');
            write_online(el, out);
            out.push(')');
        }
    }
}

pub fn print_scheme(s: &OnlineScheme) -> String {
    let init = s.init.iter().map(render).collect::<Vec<_>>().join(" ");
    let ys = (1..=s.program.arity).map(|i| format!("y{i}")).collect::<Vec<_>>().join(" ");
    let tuple = s
        .program
        .body
        .iter()
        .map(print_online_expr)
        .collect::<Vec<_>>()
        .join(" ");
    if s.program.extra_args.is_empty() {
        format!("(scheme (init {init}) (update ({ys}) x (tuple {tuple})))")
    } else {
        let args = s.program.extra_args.join(" ");
        format!("(scheme (init {init}) (update ({ys}) x (args {args}) (tuple {tuple})))")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use crate::rat::rat_int;

    #[test]
    fn mean_prints_canonically() {
        let p = parse_program("(program (xs) (/ (foldl + 0 xs) (length xs)))").unwrap();
        assert_eq!(print_program(&p), "(program (xs) (/ (foldl + 0 xs) (length xs)))");
    }

    #[test]
    fn parse_print_round_trip_variance() {
        let src = "(program (xs) \
            (let (s (foldl + 0 xs)) \
              (let (avg (/ s (length xs))) \
                (/ (foldl (lambda (acc v) (+ acc (pow (- v avg) 2))) 0 xs) (length xs)))))";
        let p = parse_program(src).unwrap();
        let back = parse_program(&print_program(&p)).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn scheme_round_trip() {
        let prog = OnlineProgram {
            arity: 2,
            extra_args: vec![],
            body: vec![
                OnlineExpr::apply2(
                    Builtin::Div,
                    OnlineExpr::apply2(
                        Builtin::Add,
                        OnlineExpr::apply2(Builtin::Mul, OnlineExpr::Accum(1), OnlineExpr::Accum(2)),
                        OnlineExpr::NewElem,
                    ),
                    OnlineExpr::apply2(Builtin::Add, OnlineExpr::Accum(2), OnlineExpr::int(1)),
                ),
                OnlineExpr::apply2(Builtin::Add, OnlineExpr::Accum(2), OnlineExpr::int(1)),
            ],
        };
        let scheme = OnlineScheme::new(vec![rat_int(0), rat_int(0)], prog).unwrap();
        let text = print_scheme(&scheme);
        assert_eq!(
            text,
            "(scheme (init 0 0) (update (y1 y2) x (tuple (/ (+ (* y1 y2) x) (+ y2 1)) (+ y2 1))))"
        );
        let back = crate::ir::parse_scheme(&text).unwrap();
        assert_eq!(scheme, back);
    }

    #[test]
    fn print_injective_on_distinct_asts() {
        // 20 distinct programs; canonical printing must render them distinctly.
        let sources = [
            "(program (xs) 0)",
            "(program (xs) 1)",
            "(program (xs) 1/2)",
            "(program (xs) -1/2)",
            "(program (xs) (length xs))",
            "(program (xs) (foldl + 0 xs))",
            "(program (xs) (foldl + 1 xs))",
            "(program (xs) (foldl - 0 xs))",
            "(program (xs) (foldl * 1 xs))",
            "(program (xs) (foldl min 0 xs))",
            "(program (xs) (foldl max 0 xs))",
            "(program (xs) (/ (foldl + 0 xs) (length xs)))",
            "(program (xs) (* (foldl + 0 xs) (length xs)))",
            "(program (xs) (foldl (lambda (a v) (+ a (* v v))) 0 xs))",
            "(program (xs) (foldl (lambda (a v) (+ a (pow v 2))) 0 xs))",
            "(program (xs) (foldl + 0 (map neg xs)))",
            "(program (xs) (foldl + 0 (map abs xs)))",
            "(program (xs) (length (filter (lambda (v) (> v 0)) xs)))",
            "(program (xs) (length (filter (lambda (v) (< v 0)) xs)))",
            "(program (xs t) (length (filter (lambda (v) (> v t)) xs)))",
        ];
        let printed: Vec<String> =
            sources.iter().map(|s| print_program(&parse_program(s).unwrap())).collect();
        for i in 0..printed.len() {
            for j in (i + 1)..printed.len() {
                assert_ne!(printed[i], printed[j], "programs {i} and {j} collide");
            }
        }
    }
}
