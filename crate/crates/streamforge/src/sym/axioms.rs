//! Combinator axiom schemas: each relates a combinator applied to `xs ++ [x]`
//! to its application on `xs`. Instantiated axioms are validated by random
//! concrete testing before use.

use super::term::{apply_func_sym, apply_pred_sym, SymEnv, SymTerm, TermCtx};
use super::{Atom, SymError};
use crate::eval::eval_offline_expr;
use crate::ir::{print_offline_expr, Func, OfflineExpr};
use crate::rat::{value_grid, Rat};
use num_traits::Zero;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;

const MAX_AXIOMS: usize = 64;
const VALIDATION_SAMPLES: usize = 50;

/// An instantiated axiom: `lhs` is a snoc-rooted list expression, `rhs` an
/// equal term over base list atoms, `x` and extra arguments.
#[derive(Debug, Clone)]
pub struct Axiom {
    pub lhs: OfflineExpr,
    pub rhs: SymTerm,
}

pub fn contains_snoc(e: &OfflineExpr) -> bool {
    match e {
        OfflineExpr::Snoc(_) => true,
        OfflineExpr::Const(_) | OfflineExpr::Var(_) | OfflineExpr::ListVar
        | OfflineExpr::NewElem => false,
        OfflineExpr::Length(l) => contains_snoc(l),
        OfflineExpr::Map(f, l) | OfflineExpr::Filter(f, l) => {
            func_contains_snoc(f) || contains_snoc(l)
        }
        OfflineExpr::Foldl(f, i, l) => {
            func_contains_snoc(f) || contains_snoc(i) || contains_snoc(l)
        }
        OfflineExpr::Apply(f, args) => {
            func_contains_snoc(f) || args.iter().any(contains_snoc)
        }
        OfflineExpr::Ite(c, t, e) => contains_snoc(c) || contains_snoc(t) || contains_snoc(e),
    }
}

fn func_contains_snoc(f: &Func) -> bool {
    match f {
        Func::Builtin(_) => false,
        Func::Lambda(_, body) => contains_snoc(body),
    }
}

fn is_snoc_of_xs(e: &OfflineExpr) -> bool {
    matches!(e, OfflineExpr::Snoc(inner) if matches!(**inner, OfflineExpr::ListVar))
}

/// True when the combinator is applied to `xs ++ [x]` (possibly through a
/// map/filter chain). A fold whose *function* mentions the snoc but whose
/// list argument is plain `xs` has no axiom: it stays an un-tied opaque term.
pub fn snoc_on_spine(e: &OfflineExpr) -> bool {
    fn chain(l: &OfflineExpr) -> bool {
        match l {
            OfflineExpr::Snoc(_) => true,
            OfflineExpr::Map(_, inner) | OfflineExpr::Filter(_, inner) => chain(inner),
            _ => false,
        }
    }
    match e {
        OfflineExpr::Foldl(_, _, l) | OfflineExpr::Length(l) => chain(l),
        _ => false,
    }
}

/// Builds the right-hand side for one snoc-rooted list expression, or reports
/// the combinator nesting as unsupported.
fn axiom_rhs(atom: &OfflineExpr, ctx: &mut TermCtx) -> Result<SymTerm, SymError> {
    let env = SymEnv::new();
    let base_var = |e: OfflineExpr| SymTerm::var(Atom::List(e));
    let x = SymTerm::var(Atom::NewElem);
    let one = SymTerm::constant(crate::rat::rat_int(1));
    match atom {
        OfflineExpr::Foldl(g, init, list) => match &**list {
            // foldl(g, I, xs ++ [x]) = g(foldl(g, I, xs), x)
            l if is_snoc_of_xs(l) => {
                let base = base_var(OfflineExpr::Foldl(
                    g.clone(),
                    init.clone(),
                    Box::new(OfflineExpr::ListVar),
                ));
                apply_func_sym(g, &[base, x], &env, ctx)
            }
            // foldl(g, I, map(h, xs ++ [x])) = g(foldl(g, I, map(h, xs)), h(x))
            OfflineExpr::Map(h, inner) if is_snoc_of_xs(inner) => {
                let base = base_var(OfflineExpr::Foldl(
                    g.clone(),
                    init.clone(),
                    Box::new(OfflineExpr::Map(h.clone(), Box::new(OfflineExpr::ListVar))),
                ));
                let hx = apply_func_sym(h, &[x], &env, ctx)?;
                apply_func_sym(g, &[base, hx], &env, ctx)
            }
            // foldl(g, I, filter(h, xs ++ [x])) =
            //   ite(h(x), g(foldl(g, I, filter(h, xs)), x), foldl(...))
            OfflineExpr::Filter(h, inner) if is_snoc_of_xs(inner) => {
                let base = base_var(OfflineExpr::Foldl(
                    g.clone(),
                    init.clone(),
                    Box::new(OfflineExpr::Filter(h.clone(), Box::new(OfflineExpr::ListVar))),
                ));
                let cond = apply_pred_sym(h, &[x.clone()], &env, ctx)?;
                let kept = apply_func_sym(g, &[base.clone(), x], &env, ctx)?;
                ctx.ite(cond, kept, base)
            }
            other => Err(SymError::Unsupported(format!(
                "no axiom schema for foldl over `{}`",
                print_offline_expr(other)
            ))),
        },
        OfflineExpr::Length(list) => match &**list {
            // length(xs ++ [x]) = length(xs) + 1
            l if is_snoc_of_xs(l) => {
                let base = base_var(OfflineExpr::Length(Box::new(OfflineExpr::ListVar)));
                ctx.add(&base, &one)
            }
            // length(map(h, xs ++ [x])) = length(map(h, xs)) + 1
            OfflineExpr::Map(h, inner) if is_snoc_of_xs(inner) => {
                let base = base_var(OfflineExpr::Length(Box::new(OfflineExpr::Map(
                    h.clone(),
                    Box::new(OfflineExpr::ListVar),
                ))));
                ctx.add(&base, &one)
            }
            // length(filter(h, xs ++ [x])) = length(filter(h, xs)) + ite(h(x), 1, 0)
            OfflineExpr::Filter(h, inner) if is_snoc_of_xs(inner) => {
                let base = base_var(OfflineExpr::Length(Box::new(OfflineExpr::Filter(
                    h.clone(),
                    Box::new(OfflineExpr::ListVar),
                ))));
                let cond = apply_pred_sym(h, &[x], &env, ctx)?;
                let inc = ctx.ite(cond, one, SymTerm::zero())?;
                ctx.add(&base, &inc)
            }
            other => Err(SymError::Unsupported(format!(
                "no axiom schema for length over `{}`",
                print_offline_expr(other)
            ))),
        },
        other => Err(SymError::Unsupported(format!(
            "no axiom schema for `{}`",
            print_offline_expr(other)
        ))),
    }
}

/// Instantiates axioms for every snoc-rooted list atom reachable from the
/// seeds (axiom right-hand sides can surface further snoc atoms). Each axiom
/// is validated on random concrete lists before being returned.
pub fn instantiate_axioms(
    seeds: &[OfflineExpr],
    ctx: &mut TermCtx,
    extra_args: &[String],
) -> Result<Vec<Axiom>, SymError> {
    let mut queue: Vec<OfflineExpr> =
        seeds.iter().filter(|e| snoc_on_spine(e)).cloned().collect();
    let mut done: Vec<OfflineExpr> = Vec::new();
    let mut axioms = Vec::new();
    while let Some(atom) = queue.pop() {
        if done.contains(&atom) {
            continue;
        }
        done.push(atom.clone());
        if axioms.len() >= MAX_AXIOMS {
            return Err(SymError::Unsupported("axiom budget exceeded".into()));
        }
        let before = ctx.side_conditions.len();
        let rhs = axiom_rhs(&atom, ctx)?;
        let new_sides = ctx.side_conditions[before..].to_vec();
        let axiom = Axiom { lhs: atom, rhs };
        validate_axiom(&axiom, &new_sides, extra_args)?;
        for a in axiom.rhs.atoms() {
            if let Atom::List(e) = a {
                if snoc_on_spine(&e) && !done.contains(&e) {
                    queue.push(e);
                }
            }
        }
        axioms.push(axiom);
    }
    // Deterministic order regardless of worklist dynamics.
    axioms.sort_by(|a, b| a.lhs.cmp(&b.lhs));
    Ok(axioms)
}

/// Checks an axiom on random concrete lists, skipping sample points that
/// violate the side conditions introduced while building its right-hand side.
fn validate_axiom(
    axiom: &Axiom,
    side_conditions: &[super::ratfun::RatFun],
    extra_args: &[String],
) -> Result<(), SymError> {
    let mut rng = StdRng::seed_from_u64(0x5f3759df);
    let grid = value_grid();
    let mut valid = 0usize;
    let mut tries = 0usize;
    while valid < VALIDATION_SAMPLES && tries < VALIDATION_SAMPLES * 8 {
        tries += 1;
        let len = rng.gen_range(0..=6);
        let xs: Vec<Rat> = (0..len).map(|_| grid[rng.gen_range(0..grid.len())].clone()).collect();
        let x = grid[rng.gen_range(0..grid.len())].clone();
        let args: BTreeMap<String, Rat> = extra_args
            .iter()
            .map(|a| (a.clone(), grid[rng.gen_range(0..grid.len())].clone()))
            .collect();

        let value_of_atom = |e: &OfflineExpr| eval_offline_expr(e, &xs, &args, Some(&x));

        // Atom valuation for the symbolic side.
        let mut vals: BTreeMap<Atom, Rat> = BTreeMap::new();
        vals.insert(Atom::NewElem, x.clone());
        for (name, v) in &args {
            vals.insert(Atom::Arg(name.clone()), v.clone());
        }
        let mut needed = axiom.rhs.atoms();
        for c in side_conditions {
            needed.extend(c.atoms());
        }
        let mut ok = true;
        for a in needed {
            if let Atom::List(e) = &a {
                match value_of_atom(e) {
                    Ok(v) => {
                        vals.insert(a.clone(), v);
                    }
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        if side_conditions.iter().any(|c| c.eval(&vals).map(|v| v.is_zero()).unwrap_or(true)) {
            continue;
        }
        let lhs_val = match value_of_atom(&axiom.lhs) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let rhs_val = match axiom.rhs.eval(&vals) {
            Some(v) => v,
            None => continue,
        };
        if lhs_val != rhs_val {
            return Err(SymError::AxiomInvalid(print_offline_expr(&axiom.lhs)));
        }
        valid += 1;
    }
    if valid < VALIDATION_SAMPLES.min(20) {
        return Err(SymError::AxiomInvalid(format!(
            "could not gather enough valid samples for `{}`",
            print_offline_expr(&axiom.lhs)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, snoc_spec};

    fn snoc_atoms_of(p: &str) -> Vec<OfflineExpr> {
        let prog = parse_program(p).unwrap();
        vec![snoc_spec(&prog.body)]
    }

    #[test]
    fn fold_axiom_for_sum() {
        // foldl(+, 0, xs++[x]) = foldl(+, 0, xs) + x
        let seeds = snoc_atoms_of("(program (xs) (foldl + 0 xs))");
        let mut ctx = TermCtx::new(10_000);
        let axioms = instantiate_axioms(&seeds, &mut ctx, &[]).unwrap();
        assert_eq!(axioms.len(), 1);
        let base = Atom::List(parse_program("(program (xs) (foldl + 0 xs))").unwrap().body);
        let expect = {
            let mut c = TermCtx::new(100);
            c.add(&SymTerm::var(base), &SymTerm::var(Atom::NewElem)).unwrap()
        };
        assert_eq!(axioms[0].rhs, expect);
    }

    #[test]
    fn length_axiom() {
        let seeds = snoc_atoms_of("(program (xs) (length xs))");
        let mut ctx = TermCtx::new(10_000);
        let axioms = instantiate_axioms(&seeds, &mut ctx, &[]).unwrap();
        assert_eq!(axioms.len(), 1);
        let base = Atom::List(parse_program("(program (xs) (length xs))").unwrap().body);
        let expect = {
            let mut c = TermCtx::new(100);
            c.add(&SymTerm::var(base), &SymTerm::constant(crate::rat::rat_int(1))).unwrap()
        };
        assert_eq!(axioms[0].rhs, expect);
    }

    #[test]
    fn variance_sq_fold_closure() {
        // The snoc'd sq-fold's lambda mentions further snoc'd list
        // expressions; the worklist must produce their axioms too.
        let src = "(program (xs) \
            (foldl (lambda (acc v) (+ acc (pow (- v (/ (foldl + 0 xs) (length xs))) 2))) 0 xs))";
        let seeds = snoc_atoms_of(src);
        let mut ctx = TermCtx::new(10_000);
        let axioms = instantiate_axioms(&seeds, &mut ctx, &[]).unwrap();
        // sq-fold over snoc, plus foldl(+) and length reached through avg'.
        assert_eq!(axioms.len(), 3);
    }

    #[test]
    fn filter_axiom_with_extra_arg() {
        let seeds = snoc_atoms_of("(program (xs t) (length (filter (lambda (v) (> v t)) xs)))");
        let mut ctx = TermCtx::new(10_000);
        let axioms = instantiate_axioms(&seeds, &mut ctx, &["t".into()]).unwrap();
        assert_eq!(axioms.len(), 1);
        assert!(matches!(axioms[0].rhs, SymTerm::Ite(..) | SymTerm::Rat(_)));
    }

    #[test]
    fn nested_combinators_unsupported() {
        // map over map has no schema.
        let seeds = snoc_atoms_of("(program (xs) (foldl + 0 (map neg (map abs xs))))");
        let mut ctx = TermCtx::new(10_000);
        assert!(matches!(
            instantiate_axioms(&seeds, &mut ctx, &[]),
            Err(SymError::Unsupported(_))
        ));
    }
}
