//! Template mining: unrolls the RFS and the hole specification at a fixed
//! list length, eliminates the symbolic elements, and turns the surviving
//! box-rooted residues into search templates by replacing constants with
//! unknowns.

use crate::ir::{Builtin, OnlineExpr};
use crate::rat::Rat;
use crate::rfs::Rfs;
use crate::sym::elim::{eliminate, solve_linear};
use crate::sym::poly::{Monomial, Poly};
use crate::sym::ratfun::RatFun;
use crate::sym::term::{poly_to_online, SymTerm, TermCtx};
use crate::sym::unroll::{unroll_with_elems, UnrollError};
use crate::sym::Atom;
use num_traits::{One, Signed};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coeff {
    Known(Rat),
    Unknown { id: u32, negated: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateTerm {
    pub coeff: Coeff,
    pub mono: Monomial,
}

/// A mined template in `Σ coeff_i · mono_i / Σ coeff_j · mono_j` form, where
/// some coefficients are unknowns to be synthesized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub num: Vec<TemplateTerm>,
    pub den: Vec<TemplateTerm>,
}

impl Template {
    pub fn unknown_count(&self) -> usize {
        self.unknown_ids().len()
    }

    pub fn unknown_ids(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for t in self.num.iter().chain(self.den.iter()) {
            if let Coeff::Unknown { id, .. } = t.coeff {
                if !out.contains(&id) {
                    out.push(id);
                }
            }
        }
        out
    }

    pub fn is_exact(&self) -> bool {
        self.unknown_count() == 0
    }

    /// Instantiates unknowns with rational functions.
    pub fn instantiate_ratfun(&self, assign: &BTreeMap<u32, RatFun>) -> Option<RatFun> {
        let side = |terms: &[TemplateTerm]| -> Option<RatFun> {
            let mut acc = RatFun::zero();
            for t in terms {
                let mono = RatFun::from_poly(Poly {
                    terms: BTreeMap::from([(t.mono.clone(), Rat::one())]),
                });
                let factor = match &t.coeff {
                    Coeff::Known(c) => RatFun::constant(c.clone()),
                    Coeff::Unknown { id, negated } => {
                        let v = assign.get(id)?.clone();
                        if *negated {
                            v.neg()
                        } else {
                            v
                        }
                    }
                };
                acc = acc.add(&factor.mul(&mono));
            }
            Some(acc)
        };
        let n = side(&self.num)?;
        let d = side(&self.den)?;
        Some(n.div(&d))
    }

    /// Instantiates unknowns with online sub-expressions, building the
    /// expression tree directly.
    pub fn instantiate_online(&self, assign: &BTreeMap<u32, OnlineExpr>) -> Option<OnlineExpr> {
        let side = |terms: &[TemplateTerm]| -> Option<OnlineExpr> {
            let mut acc: Option<(OnlineExpr, bool)> = None;
            for t in terms {
                let mono = poly_to_online(&Poly {
                    terms: BTreeMap::from([(t.mono.clone(), Rat::one())]),
                })
                .ok()?;
                let (factor, positive): (OnlineExpr, bool) = match &t.coeff {
                    Coeff::Known(c) => {
                        let mag = OnlineExpr::Const(c.abs());
                        (mag, !c.is_negative())
                    }
                    Coeff::Unknown { id, negated } => (assign.get(id)?.clone(), !negated),
                };
                let is_unit_factor = matches!(&factor, OnlineExpr::Const(c) if c.is_one());
                let term = if t.mono.is_one() {
                    factor
                } else if is_unit_factor {
                    mono
                } else {
                    OnlineExpr::apply2(Builtin::Mul, factor, mono)
                };
                acc = Some(match acc {
                    None => {
                        if positive {
                            (term, true)
                        } else {
                            (
                                OnlineExpr::Apply(
                                    crate::ir::OnlineFunc::Builtin(Builtin::Neg),
                                    vec![term],
                                ),
                                true,
                            )
                        }
                    }
                    Some((prev, _)) => {
                        let op = if positive { Builtin::Add } else { Builtin::Sub };
                        (OnlineExpr::apply2(op, prev, term), true)
                    }
                });
            }
            acc.map(|(e, _)| e)
        };
        let n = side(&self.num)?;
        if self.den.len() == 1
            && self.den[0].mono.is_one()
            && matches!(&self.den[0].coeff, Coeff::Known(c) if c.is_one())
        {
            return Some(n);
        }
        let d = side(&self.den)?;
        Some(OnlineExpr::apply2(Builtin::Div, n, d))
    }
}

/// Replaces constants with unknowns: multiplicative coefficients whose
/// magnitude is not 1 and every standalone additive constant. Sign structure
/// is preserved. Terms come out in descending monomial order; unknown ids are
/// assigned in that order, numerator first.
pub fn templatize(t: &RatFun) -> Template {
    let (num, den) = crate::sym::term::primitive_pair(t);
    let mut next = 1u32;
    let num_terms = templatize_poly(&num, &mut next, false);
    let den_terms = templatize_poly(&den, &mut next, true);
    Template { num: num_terms, den: den_terms }
}

fn templatize_poly(p: &Poly, next: &mut u32, is_den: bool) -> Vec<TemplateTerm> {
    let trivial_den = is_den && p.as_constant().map(|c| c.is_one()).unwrap_or(false);
    let mut out = Vec::new();
    for (mono, c) in p.terms.iter().rev() {
        let keep = if mono.is_one() {
            // Additive constants are templatized even when they are ±1; the
            // only exception is the trivial denominator 1.
            trivial_den
        } else {
            c.abs().is_one()
        };
        let coeff = if keep {
            Coeff::Known(c.clone())
        } else {
            let id = *next;
            *next += 1;
            Coeff::Unknown { id, negated: c.is_negative() }
        };
        out.push(TemplateTerm { coeff, mono: mono.clone() });
    }
    out
}

/// Re-applies the templatization rules to a template (unknowns stay as they
/// are). Templatize is idempotent in this sense.
pub fn retemplatize(t: &Template) -> Template {
    let mut next = t.unknown_ids().iter().copied().max().unwrap_or(0) + 1;
    let redo = |terms: &[TemplateTerm], next: &mut u32, is_den: bool| -> Vec<TemplateTerm> {
        let trivial_den = is_den
            && terms.len() == 1
            && terms[0].mono.is_one()
            && matches!(&terms[0].coeff, Coeff::Known(c) if c.is_one());
        terms
            .iter()
            .map(|term| match &term.coeff {
                Coeff::Unknown { .. } => term.clone(),
                Coeff::Known(c) => {
                    let keep = if term.mono.is_one() {
                        trivial_den
                    } else {
                        c.abs().is_one()
                    };
                    if keep {
                        term.clone()
                    } else {
                        let id = *next;
                        *next += 1;
                        TemplateTerm {
                            coeff: Coeff::Unknown { id, negated: c.is_negative() },
                            mono: term.mono.clone(),
                        }
                    }
                }
            })
            .collect()
    };
    let num = redo(&t.num, &mut next, false);
    let den = redo(&t.den, &mut next, true);
    Template { num, den }
}

/// Mines templates for a hole: unrolls the RFS at length `k` and the spec at
/// `k+1` (the extra element being `x`), eliminates the symbolic elements, and
/// templatizes each box-rooted residue. Deterministic for fixed inputs.
pub fn mine_expressions(
    phi: &Rfs,
    spec: &crate::ir::OfflineExpr,
    k: u32,
    budget: usize,
) -> Result<Vec<Template>, UnrollError> {
    let mut ctx = TermCtx::new(budget);
    let elem_atoms: Vec<Atom> = (1..=k).map(|i| Atom::Elem("x".into(), i)).collect();
    let elems: Vec<SymTerm> = elem_atoms.iter().cloned().map(SymTerm::var).collect();

    let mut eqs = Vec::new();
    for (i, entry) in phi.entries.iter().enumerate() {
        let t = unroll_with_elems(entry, &elems, &mut ctx)?;
        eqs.push((SymTerm::var(Atom::Accum(i + 1)), t));
    }
    let mut extended = elems.clone();
    extended.push(SymTerm::var(Atom::NewElem));
    let spec_unrolled = unroll_with_elems(spec, &extended, &mut ctx)?;
    eqs.push((SymTerm::var(Atom::Boxvar), spec_unrolled));

    let vars: BTreeSet<Atom> = elem_atoms.into_iter().collect();
    let res = match eliminate(&eqs, &vars, ctx.side_conditions.clone()) {
        Ok(r) => r,
        Err(_) => return Ok(Vec::new()),
    };
    if !res.conditions.is_empty() {
        // Guarded mining is not supported; the enumeration proceeds bare.
        return Ok(Vec::new());
    }
    let mut out: Vec<Template> = Vec::new();
    // Residues appear in accumulator-row order; take them in reverse so
    // templates read through later rows (more primitive sub-computations,
    // e.g. sq rather than the variance itself) are tried first.
    for p in res.branches[0].residues.iter().rev() {
        if p.degree_in(&Atom::Boxvar) == 0 {
            continue;
        }
        let Some((sol, _)) = solve_linear(p, &Atom::Boxvar) else { continue };
        if sol.atoms().contains(&Atom::Boxvar) {
            continue;
        }
        let t = templatize(&sol);
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use crate::rat::{rat, rat_int};
    use crate::rfs::construct_rfs;

    fn variance_rfs() -> Rfs {
        construct_rfs(
            &parse_program(
                "(program (xs) \
                   (let (s (foldl + 0 xs)) \
                     (let (avg (/ s (length xs))) \
                       (/ (foldl (lambda (acc v) (+ acc (pow (- v avg) 2))) 0 xs) (length xs)))))",
            )
            .unwrap(),
        )
    }

    /// The variance residue at k=3 over accumulators sq (=y2) and s (=y4):
    /// (s^2 - 6sx + 12sq + 9x^2)/12.
    fn paper_residue() -> RatFun {
        let s = RatFun::var(Atom::Accum(4));
        let sq = RatFun::var(Atom::Accum(2));
        let x = RatFun::var(Atom::NewElem);
        let c = |n: i64| RatFun::constant(rat_int(n));
        s.pow(2)
            .sub(&c(6).mul(&s).mul(&x))
            .add(&c(12).mul(&sq))
            .add(&c(9).mul(&x.pow(2)))
            .div(&c(12))
    }

    #[test]
    fn variance_sq_mining_reproduces_known_residue() {
        let phi = variance_rfs();
        let spec = phi.entry(2).clone(); // the sq fold
        let templates = mine_expressions(&phi, &spec, 3, 20_000).unwrap();
        assert!(!templates.is_empty());
        // One of the mined templates instantiated with (6, 12, 9, 12) must
        // reproduce the residue exactly (round-trip check).
        let target = paper_residue();
        let found = templates.iter().any(|t| {
            if t.unknown_count() != 4 {
                return false;
            }
            let ids = t.unknown_ids();
            let vals = [6, 12, 9, 12];
            // Try the canonical assignment order; the ids are in term order.
            let assign: BTreeMap<u32, RatFun> = ids
                .iter()
                .zip(vals.iter())
                .map(|(id, v)| (*id, RatFun::constant(rat_int(*v))))
                .collect();
            t.instantiate_ratfun(&assign) == Some(target.clone())
        });
        // Term order differs from the paper's presentation, so try all
        // magnitude assignments consistent with the known residue.
        let found = found
            || templates.iter().any(|t| {
                t.unknown_count() == 4 && instantiates_to(t, &target)
            });
        assert!(found, "no template reproduces the residue: {templates:?}");
    }

    fn instantiates_to(t: &Template, target: &RatFun) -> bool {
        // The residue's unknown magnitudes in descending-monomial order.
        // num terms: sq (12), s^2 (1, kept), s*x (6), x^2 (9); den: 12.
        let perms: [[i64; 4]; 4] = [
            [12, 6, 9, 12],
            [6, 12, 9, 12],
            [12, 9, 6, 12],
            [9, 6, 12, 12],
        ];
        perms.iter().any(|vals| {
            let assign: BTreeMap<u32, RatFun> = t
                .unknown_ids()
                .iter()
                .zip(vals.iter())
                .map(|(id, v)| (*id, RatFun::constant(rat_int(*v))))
                .collect();
            t.instantiate_ratfun(&assign) == Some(target.clone())
        })
    }

    #[test]
    fn variance_template_shape_matches_expectation() {
        // Exactly four unknowns; the s^2 coefficient stays a known unit; the
        // denominator is a single unknown constant.
        let phi = variance_rfs();
        let spec = phi.entry(2).clone();
        let templates = mine_expressions(&phi, &spec, 3, 20_000).unwrap();
        let shaped = templates.iter().find(|t| {
            t.unknown_count() == 4
                && t.den.len() == 1
                && t.den[0].mono.is_one()
                && matches!(t.den[0].coeff, Coeff::Unknown { .. })
                && t.num.iter().any(|term| {
                    matches!(&term.coeff, Coeff::Known(c) if c.is_one())
                        && term.mono.degree_in(&Atom::Accum(4)) == 2
                })
                && t.num
                    .iter()
                    .any(|term| term.mono.degree_in(&Atom::Accum(2)) == 1)
        });
        assert!(shaped.is_some(), "templates: {templates:?}");
    }

    #[test]
    fn length_spec_mines_constant_template() {
        // At k=3 the length residue is [] = 4 (= n+1 with n = 3): a single
        // unknown constant, to be solved as a polynomial in n.
        let phi = variance_rfs();
        let spec = phi.entry(3).clone(); // length(xs)
        let templates = mine_expressions(&phi, &spec, 3, 20_000).unwrap();
        assert!(templates
            .iter()
            .any(|t| t.unknown_count() == 1 && t.num.len() == 1 && t.num[0].mono.is_one()));
    }

    #[test]
    fn templatize_keeps_unit_coefficients() {
        // y1 + x has no constants to abstract: zero unknowns.
        let y1 = RatFun::var(Atom::Accum(1));
        let x = RatFun::var(Atom::NewElem);
        let t = templatize(&y1.add(&x));
        assert!(t.is_exact());
    }

    #[test]
    fn templatize_is_idempotent() {
        let r = paper_residue();
        let t = templatize(&r);
        assert_eq!(retemplatize(&t), t);
        let exact = templatize(&RatFun::var(Atom::Accum(1)).add(&RatFun::var(Atom::NewElem)));
        assert_eq!(retemplatize(&exact), exact);
    }

    #[test]
    fn templatize_abstracts_additive_unit_constant() {
        // y1 + 1: the additive 1 becomes an unknown.
        let y1 = RatFun::var(Atom::Accum(1));
        let t = templatize(&y1.add(&RatFun::one()));
        assert_eq!(t.unknown_count(), 1);
    }

    #[test]
    fn mining_is_deterministic() {
        let phi = variance_rfs();
        let spec = phi.entry(2).clone();
        let a = mine_expressions(&phi, &spec, 3, 20_000).unwrap();
        let b = mine_expressions(&phi, &spec, 3, 20_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mined_residue_valid_at_its_own_length() {
        // Evaluating the residue at y_i := Φ[y_i] over random length-3 lists
        // matches the spec on the length-4 extension.
        use crate::eval::eval_offline_expr;
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let phi = variance_rfs();
        let spec = phi.entry(2).clone();
        let residue = paper_residue();
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let xs: Vec<_> = (0..3).map(|_| rat(rng.gen_range(-10..=10), 2)).collect();
            let x = rat(rng.gen_range(-10..=10), 2);
            let mut vals: BTreeMap<Atom, _> = BTreeMap::new();
            for (i, e) in phi.entries.iter().enumerate() {
                vals.insert(
                    Atom::Accum(i + 1),
                    eval_offline_expr(e, &xs, &Default::default(), None).unwrap(),
                );
            }
            vals.insert(Atom::NewElem, x.clone());
            let mut extended = xs.clone();
            extended.push(x);
            let want = eval_offline_expr(&spec, &extended, &Default::default(), None).unwrap();
            assert_eq!(residue.eval(&vals).unwrap(), want);
        }
    }
}
