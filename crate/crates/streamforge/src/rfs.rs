//! Relational function signatures: one offline expression per accumulator,
//! with entry 1 always the program body. Also builds the initializer and
//! prunes accumulators the synthesized updates never read.

use crate::eval;
use crate::ir::{OfflineExpr, OfflineProgram, OnlineProgram, OnlineScheme};
use crate::rat::Rat;
use crate::sym::formula::SymFormula;
use crate::sym::term::{offline_to_sym, SymEnv, SymTerm, TermCtx};
use crate::sym::{Atom, SymError};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rfs {
    /// Entry i (0-based) is the specification of accumulator `y_{i+1}`.
    pub entries: Vec<OfflineExpr>,
    pub extra_args: Vec<String>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InitError {
    #[error("initializer for y{0} is not a constant: {1}")]
    NotConstant(usize, String),
    #[error("initializer evaluation failed for y{0}: {1}")]
    Eval(usize, String),
}

impl Rfs {
    pub fn arity(&self) -> usize {
        self.entries.len()
    }

    /// 1-based accumulator lookup.
    pub fn entry(&self, i: usize) -> &OfflineExpr {
        &self.entries[i - 1]
    }

    /// The accumulator holding `length(xs)`, if any.
    pub fn length_accum(&self) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| matches!(e, OfflineExpr::Length(l) if matches!(**l, OfflineExpr::ListVar)))
            .map(|i| i + 1)
    }

    /// The formula `⋀ y_i = Φ[y_i]` with entries left as opaque list terms.
    pub fn formula(&self, budget: usize) -> Result<SymFormula, SymError> {
        let mut ctx = TermCtx::new(budget);
        let mut equalities = Vec::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            let t = offline_to_sym(e, &SymEnv::new(), &mut ctx)?;
            equalities.push((SymTerm::var(Atom::Accum(i + 1)), t));
        }
        Ok(SymFormula {
            equalities,
            side_conditions: ctx.side_conditions,
            incomplete: false,
        })
    }
}

/// Builds the RFS: `y_1` is the program body, followed by one accumulator per
/// distinct list expression (outermost first), skipping any equal to the body.
pub fn construct_rfs(p: &OfflineProgram) -> Rfs {
    let mut entries = vec![p.body.clone()];
    for le in p.list_expressions().into_iter().rev() {
        if le != p.body {
            entries.push(le);
        }
    }
    Rfs { entries, extra_args: p.extra_args.clone() }
}

/// The initializer: each entry evaluated on the empty list. Evaluation is a
/// complete model finder here because every conjunct is a directed equality
/// once `xs := Nil`. Entries whose empty-list value depends on a program
/// argument have no constant initializer and are rejected.
pub fn synth_initializer(phi: &Rfs) -> Result<Vec<Rat>, InitError> {
    let mut out = Vec::with_capacity(phi.entries.len());
    for (i, e) in phi.entries.iter().enumerate() {
        let (t, _) = eval::unroll(e, 0, "e")
            .map_err(|err| InitError::Eval(i + 1, err.to_string()))?;
        let c = t
            .as_ratfun()
            .and_then(|r| r.as_constant())
            .ok_or_else(|| {
                InitError::NotConstant(i + 1, crate::ir::print_offline_expr(e))
            })?;
        out.push(c);
    }
    Ok(out)
}

/// Removes accumulators (never position 1) that are not transitively read
/// from the designated output component, reindexing the survivors. Returns
/// the pruned scheme and the removed 1-based positions.
pub fn prune_unused(s: &OnlineScheme) -> (OnlineScheme, Vec<usize>) {
    let arity = s.program.arity;
    let mut live: BTreeSet<usize> = BTreeSet::from([1]);
    loop {
        let mut grew = false;
        for i in live.clone() {
            let mut used = BTreeSet::new();
            s.program.body[i - 1].accums_used(&mut used);
            for u in used {
                if u <= arity && live.insert(u) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    if live.len() == arity {
        return (s.clone(), Vec::new());
    }
    let mut map: Vec<Option<usize>> = vec![None; arity];
    for (new_idx, old) in live.iter().enumerate() {
        map[*old - 1] = Some(new_idx + 1);
    }
    let removed: Vec<usize> = (1..=arity).filter(|i| !live.contains(i)).collect();
    let body: Vec<_> = live
        .iter()
        .map(|i| s.program.body[*i - 1].reindex_accums(&map))
        .collect();
    let init: Vec<Rat> = live.iter().map(|i| s.init[*i - 1].clone()).collect();
    let program = OnlineProgram {
        arity: live.len(),
        extra_args: s.program.extra_args.clone(),
        body,
    };
    (OnlineScheme { init, program }, removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, parse_scheme, Builtin, Func};
    use crate::rat::{rat_int, Rat};
    use num_traits::Zero;

    fn mean() -> OfflineProgram {
        parse_program("(program (xs) (/ (foldl + 0 xs) (length xs)))").unwrap()
    }

    fn variance() -> OfflineProgram {
        parse_program(
            "(program (xs) \
               (let (s (foldl + 0 xs)) \
                 (let (avg (/ s (length xs))) \
                   (/ (foldl (lambda (acc v) (+ acc (pow (- v avg) 2))) 0 xs) (length xs)))))",
        )
        .unwrap()
    }

    #[test]
    fn mean_rfs_matches_known_numbering() {
        // y1 = body, y2 = length(xs), y3 = foldl(+,0,xs).
        let phi = construct_rfs(&mean());
        assert_eq!(phi.arity(), 3);
        assert_eq!(phi.entry(1), &mean().body);
        assert_eq!(
            phi.entry(2),
            &OfflineExpr::Length(Box::new(OfflineExpr::ListVar))
        );
        assert_eq!(
            phi.entry(3),
            &OfflineExpr::Foldl(
                Func::Builtin(Builtin::Add),
                Box::new(OfflineExpr::int(0)),
                Box::new(OfflineExpr::ListVar)
            )
        );
        assert_eq!(phi.length_accum(), Some(2));
    }

    #[test]
    fn variance_rfs_has_four_entries() {
        let phi = construct_rfs(&variance());
        assert_eq!(phi.arity(), 4);
        assert_eq!(phi.entry(1), &variance().body);
        // Entries: body, sq-fold, length, sum-fold (outermost first).
        assert!(matches!(phi.entry(2), OfflineExpr::Foldl(Func::Lambda(..), _, _)));
        assert_eq!(phi.length_accum(), Some(3));
        assert!(matches!(phi.entry(4), OfflineExpr::Foldl(Func::Builtin(Builtin::Add), _, _)));
    }

    #[test]
    fn constant_program_rfs_is_singleton() {
        let p = parse_program("(program (xs) 7)").unwrap();
        let phi = construct_rfs(&p);
        assert_eq!(phi.arity(), 1);
        assert_eq!(phi.entry(1), &OfflineExpr::int(7));
    }

    #[test]
    fn initializer_variance_all_zero() {
        let phi = construct_rfs(&variance());
        assert_eq!(synth_initializer(&phi).unwrap(), vec![Rat::zero(); 4]);
    }

    #[test]
    fn initializer_mean_all_zero() {
        let phi = construct_rfs(&mean());
        assert_eq!(synth_initializer(&phi).unwrap(), vec![Rat::zero(); 3]);
    }

    #[test]
    fn initializer_fold_min_keeps_base() {
        let p = parse_program("(program (xs) (foldl min 5 xs))").unwrap();
        let phi = construct_rfs(&p);
        assert_eq!(synth_initializer(&phi).unwrap(), vec![rat_int(5)]);
    }

    #[test]
    fn initializer_satisfies_formula_on_nil() {
        // Model-of-RFS condition (1): evaluating each entry on [] gives the
        // initializer component.
        for p in [mean(), variance()] {
            let phi = construct_rfs(&p);
            let init = synth_initializer(&phi).unwrap();
            for (i, e) in phi.entries.iter().enumerate() {
                let v = crate::eval::eval_offline_expr(e, &[], &Default::default(), None).unwrap();
                assert_eq!(v, init[i]);
            }
        }
    }

    #[test]
    fn initializer_rejects_argument_dependence() {
        let p = parse_program("(program (xs c) (foldl + c xs))").unwrap();
        let phi = construct_rfs(&p);
        assert!(matches!(synth_initializer(&phi), Err(InitError::NotConstant(..))));
    }

    #[test]
    fn rfs_formula_variables() {
        let phi = construct_rfs(&mean());
        let f = phi.formula(10_000).unwrap();
        assert_eq!(f.equalities.len(), 3);
        let atoms = f.atoms();
        for i in 1..=3 {
            assert!(atoms.contains(&Atom::Accum(i)));
        }
        assert!(atoms.iter().any(|a| matches!(a, Atom::List(_))));
    }

    #[test]
    fn prune_removes_transitively_dead_accumulator() {
        // Mean-style scheme where y3 is read only by its own update.
        let s = parse_scheme(
            "(scheme (init 0 0 0) (update (y1 y2 y3) x \
               (tuple (/ (+ (* y1 y2) x) (+ y2 1)) (+ y2 1) (+ y3 x))))",
        )
        .unwrap();
        let (pruned, removed) = prune_unused(&s);
        assert_eq!(removed, vec![3]);
        assert_eq!(pruned.program.arity, 2);
        assert_eq!(pruned.init.len(), 2);
        // Behavior is preserved on random streams.
        let mut rng = <rand::rngs::StdRng as rand::SeedableRng>::seed_from_u64(3);
        for _ in 0..100 {
            use rand::Rng;
            let len = rng.gen_range(0..10);
            let xs: Vec<Rat> = (0..len).map(|_| rat_int(rng.gen_range(-5..5))).collect();
            assert_eq!(
                crate::eval::run_scheme(&s, &xs, &[]).unwrap(),
                crate::eval::run_scheme(&pruned, &xs, &[]).unwrap()
            );
        }
    }

    #[test]
    fn prune_keeps_fully_used_scheme() {
        let s = parse_scheme(
            "(scheme (init 0 0) (update (y1 y2) x \
               (tuple (/ (+ (* y1 y2) x) (+ y2 1)) (+ y2 1))))",
        )
        .unwrap();
        let (pruned, removed) = prune_unused(&s);
        assert!(removed.is_empty());
        assert_eq!(pruned, s);
    }

    #[test]
    fn prune_never_removes_position_one() {
        // y1 unused by anything (constant updates) still stays.
        let s = parse_scheme("(scheme (init 7 0) (update (y1 y2) x (tuple 7 (+ y2 1))))").unwrap();
        let (pruned, removed) = prune_unused(&s);
        assert_eq!(removed, vec![2]);
        assert_eq!(pruned.program.arity, 1);
    }
}
