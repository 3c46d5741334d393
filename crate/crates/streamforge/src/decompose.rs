//! Syntax-directed sketch generation: copies the reusable structure of each
//! RFS entry and replaces list computations with holes, each carrying the
//! original expression as its specification. Structurally equal list
//! expressions share a hole, so a sub-solution is reused everywhere.

use crate::ir::{Func, OfflineExpr, SketchExpr, SketchFunc};
use crate::rfs::Rfs;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch {
    pub arity: usize,
    pub extra_args: Vec<String>,
    pub body: Vec<SketchExpr>,
}

pub type HoleSpecs = BTreeMap<u32, OfflineExpr>;

struct Holes {
    next: u32,
    by_expr: Vec<(OfflineExpr, u32)>,
    specs: HoleSpecs,
}

impl Holes {
    fn hole_for(&mut self, e: &OfflineExpr) -> u32 {
        if let Some((_, id)) = self.by_expr.iter().find(|(k, _)| k == e) {
            return *id;
        }
        let id = self.next;
        self.next += 1;
        self.by_expr.push((e.clone(), id));
        self.specs.insert(id, e.clone());
        id
    }
}

/// Decomposes the synthesis problem: returns the online-program sketch and
/// the per-hole specifications. Hole ids are numbered by first appearance.
pub fn decompose(phi: &Rfs, _p: &crate::ir::OfflineProgram) -> (Sketch, HoleSpecs) {
    let mut holes = Holes { next: 1, by_expr: Vec::new(), specs: HoleSpecs::new() };
    let body: Vec<SketchExpr> = phi
        .entries
        .iter()
        .map(|e| translate(e, &mut holes, &mut Vec::new()))
        .collect();
    (
        Sketch { arity: phi.arity(), extra_args: phi.extra_args.clone(), body },
        holes.specs,
    )
}

fn translate(e: &OfflineExpr, holes: &mut Holes, bound: &mut Vec<String>) -> SketchExpr {
    if e.is_list_expression() {
        return SketchExpr::Hole(holes.hole_for(e));
    }
    match e {
        OfflineExpr::Const(c) => SketchExpr::Const(c.clone()),
        OfflineExpr::Var(n) => {
            if bound.iter().any(|b| b == n) {
                SketchExpr::Var(n.clone())
            } else {
                SketchExpr::Arg(n.clone())
            }
        }
        OfflineExpr::NewElem => SketchExpr::NewElem,
        OfflineExpr::Apply(f, args) => {
            match f {
                Func::Builtin(b) => SketchExpr::Apply(
                    SketchFunc::Builtin(*b),
                    args.iter().map(|a| translate(a, holes, bound)).collect(),
                ),
                Func::Lambda(params, lam_body) => {
                    if lam_body.mentions_list() {
                        // No decomposition rule descends into lambda bodies:
                        // the whole application becomes one synthesis task.
                        return SketchExpr::Hole(holes.hole_for(e));
                    }
                    let depth = bound.len();
                    bound.extend(params.iter().cloned());
                    let lam = SketchFunc::Lambda(
                        params.clone(),
                        Box::new(translate(lam_body, holes, bound)),
                    );
                    bound.truncate(depth);
                    SketchExpr::Apply(
                        lam,
                        args.iter().map(|a| translate(a, holes, bound)).collect(),
                    )
                }
            }
        }
        OfflineExpr::Ite(c, t, el) => SketchExpr::Ite(
            Box::new(translate(c, holes, bound)),
            Box::new(translate(t, holes, bound)),
            Box::new(translate(el, holes, bound)),
        ),
        // Scalar positions cannot hold bare lists; list-rooted scalars were
        // already holed above.
        OfflineExpr::ListVar
        | OfflineExpr::Snoc(_)
        | OfflineExpr::Map(..)
        | OfflineExpr::Filter(..)
        | OfflineExpr::Foldl(..)
        | OfflineExpr::Length(_) => SketchExpr::Hole(holes.hole_for(e)),
    }
}

/// Renders a sketch in the surface syntax with holes printed as `(hole k)`.
pub fn print_sketch(s: &Sketch) -> String {
    let ys = (1..=s.arity).map(|i| format!("y{i}")).collect::<Vec<_>>().join(" ");
    let tuple =
        s.body.iter().map(print_sketch_expr).collect::<Vec<_>>().join(" ");
    format!("(sketch ({ys}) x (tuple {tuple}))")
}

pub fn print_sketch_expr(e: &SketchExpr) -> String {
    match e {
        SketchExpr::Const(c) => crate::rat::render(c),
        SketchExpr::Accum(i) => format!("y{i}"),
        SketchExpr::NewElem => "x".into(),
        SketchExpr::Arg(a) => a.clone(),
        SketchExpr::Var(v) => v.clone(),
        SketchExpr::Hole(h) => format!("(hole {h})"),
        SketchExpr::Apply(f, args) => {
            let fs = match f {
                SketchFunc::Builtin(b) => b.name().to_string(),
                SketchFunc::Lambda(ps, body) => {
                    format!("(lambda ({}) {})", ps.join(" "), print_sketch_expr(body))
                }
            };
            let args = args.iter().map(print_sketch_expr).collect::<Vec<_>>().join(" ");
            format!("({fs} {args})")
        }
        SketchExpr::Ite(c, t, el) => format!(
            "(ite {} {} {})",
            print_sketch_expr(c),
            print_sketch_expr(t),
            print_sketch_expr(el)
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use crate::rfs::construct_rfs;

    #[test]
    fn mean_sketch_shares_holes() {
        let p = parse_program("(program (xs) (/ (foldl + 0 xs) (length xs)))").unwrap();
        let phi = construct_rfs(&p);
        let (sketch, specs) = decompose(&phi, &p);
        assert_eq!(sketch.arity, 3);
        assert_eq!(specs.len(), 2, "two independent synthesis tasks");
        // (hole1 / hole2, hole2, hole1) with hole1 = fold, hole2 = length.
        assert_eq!(print_sketch_expr(&sketch.body[0]), "(/ (hole 1) (hole 2))");
        assert_eq!(print_sketch_expr(&sketch.body[1]), "(hole 2)");
        assert_eq!(print_sketch_expr(&sketch.body[2]), "(hole 1)");
        assert_eq!(
            specs.get(&1),
            Some(&parse_program("(program (xs) (foldl + 0 xs))").unwrap().body)
        );
        assert_eq!(
            specs.get(&2),
            Some(&parse_program("(program (xs) (length xs))").unwrap().body)
        );
    }

    #[test]
    fn variance_sketch_has_three_holes() {
        let p = parse_program(
            "(program (xs) \
               (let (s (foldl + 0 xs)) \
                 (let (avg (/ s (length xs))) \
                   (/ (foldl (lambda (acc v) (+ acc (pow (- v avg) 2))) 0 xs) (length xs)))))",
        )
        .unwrap();
        let phi = construct_rfs(&p);
        let (sketch, specs) = decompose(&phi, &p);
        assert_eq!(sketch.arity, 4);
        assert_eq!(specs.len(), 3);
        assert_eq!(print_sketch_expr(&sketch.body[0]), "(/ (hole 1) (hole 2))");
        assert_eq!(print_sketch_expr(&sketch.body[1]), "(hole 1)");
        assert_eq!(print_sketch_expr(&sketch.body[2]), "(hole 2)");
        assert_eq!(print_sketch_expr(&sketch.body[3]), "(hole 3)");
    }

    #[test]
    fn constant_program_sketch_is_hole_free() {
        let p = parse_program("(program (xs) 7)").unwrap();
        let phi = construct_rfs(&p);
        let (sketch, specs) = decompose(&phi, &p);
        assert!(specs.is_empty());
        assert_eq!(print_sketch_expr(&sketch.body[0]), "7");
    }

    #[test]
    fn arguments_are_copied_through() {
        let p = parse_program("(program (xs t) (+ t (length (filter (lambda (v) (> v t)) xs))))")
            .unwrap();
        let phi = construct_rfs(&p);
        let (sketch, specs) = decompose(&phi, &p);
        assert_eq!(specs.len(), 1);
        assert_eq!(print_sketch_expr(&sketch.body[0]), "(+ t (hole 1))");
    }

    #[test]
    fn lambda_with_list_body_becomes_one_hole() {
        // ((lambda (a) (+ a (foldl + 0 xs))) 3): the lambda body mentions xs,
        // so the entire application is a single task.
        let p = parse_program("(program (xs) ((lambda (a) (+ a (foldl + 0 xs))) 3))").unwrap();
        let phi = construct_rfs(&p);
        let (sketch, specs) = decompose(&phi, &p);
        // Entries: body, fold. Body translates to a single hole.
        assert!(matches!(sketch.body[0], SketchExpr::Hole(_)));
        assert_eq!(specs.len(), 2);
    }

    #[test]
    fn sketch_resubstitution_evaluates_to_entry_on_extended_list() {
        // Filling each hole with its snoc'd spec and replacing accumulators
        // by their entries reproduces each entry on xs ++ [x].
        use crate::eval::eval_offline_expr;
        use crate::ir::snoc_spec;
        use crate::rat::rat;
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};

        let p = parse_program("(program (xs) (/ (foldl + 0 xs) (length xs)))").unwrap();
        let phi = construct_rfs(&p);
        let (sketch, specs) = decompose(&phi, &p);
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..50 {
            let len = rng.gen_range(0..8);
            let xs: Vec<_> = (0..len).map(|_| rat(rng.gen_range(-10..=10), 2)).collect();
            let x = rat(rng.gen_range(-10..=10), 2);
            let mut extended = xs.clone();
            extended.push(x.clone());
            for (i, comp) in sketch.body.iter().enumerate() {
                let filled = sketch_to_offline(comp, &specs, &phi);
                let got =
                    eval_offline_expr(&filled, &xs, &Default::default(), Some(&x)).unwrap();
                let want =
                    eval_offline_expr(phi.entry(i + 1), &extended, &Default::default(), None)
                        .unwrap();
                assert_eq!(got, want, "component {}", i + 1);
            }
        }

        // Test-only re-substitution: holes get their snoc'd specs, accumulator
        // references get the RFS entries.
        fn sketch_to_offline(e: &SketchExpr, specs: &HoleSpecs, phi: &crate::rfs::Rfs) -> OfflineExpr {
            match e {
                SketchExpr::Const(c) => OfflineExpr::Const(c.clone()),
                SketchExpr::Accum(i) => phi.entry(*i).clone(),
                SketchExpr::NewElem => OfflineExpr::NewElem,
                SketchExpr::Arg(a) | SketchExpr::Var(a) => OfflineExpr::Var(a.clone()),
                SketchExpr::Hole(h) => snoc_spec(&specs[h]),
                SketchExpr::Apply(f, args) => {
                    let f = match f {
                        SketchFunc::Builtin(b) => Func::Builtin(*b),
                        SketchFunc::Lambda(ps, body) => Func::Lambda(
                            ps.clone(),
                            Box::new(sketch_to_offline(body, specs, phi)),
                        ),
                    };
                    OfflineExpr::Apply(
                        f,
                        args.iter().map(|a| sketch_to_offline(a, specs, phi)).collect(),
                    )
                }
                SketchExpr::Ite(c, t, el) => OfflineExpr::Ite(
                    Box::new(sketch_to_offline(c, specs, phi)),
                    Box::new(sketch_to_offline(t, specs, phi)),
                    Box::new(sketch_to_offline(el, specs, phi)),
                ),
            }
        }
    }
}
