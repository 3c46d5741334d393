//! Existential elimination restricted to conjunctions of polynomial
//! equalities. Variables with a linear occurrence are substituted away;
//! anything left is reduced by fraction-free Gaussian elimination treating
//! monomials over the eliminated variables as opaque unknowns, which yields
//! residual equalities implied by the original conjunction.

use super::poly::{Monomial, Poly};
use super::ratfun::{poly_subst, RatFun};
use super::term::{Cond, SymTerm};
use super::{Atom, SymError};
use std::collections::{BTreeMap, BTreeSet};

const MAX_CONDITIONS: usize = 6;

#[derive(Debug, Clone)]
pub struct ElimBranch {
    /// Truth assignment for the lifted conditions, in condition order.
    pub assignment: Vec<bool>,
    /// Variable-free residual polynomials, each equal to zero.
    pub residues: Vec<Poly>,
}

#[derive(Debug, Clone)]
pub struct ElimResult {
    /// Conditions lifted out of the formula, in first-occurrence order.
    pub conditions: Vec<Cond>,
    /// One branch per assignment (a single branch when no conditions).
    pub branches: Vec<ElimBranch>,
    pub side_conditions: Vec<RatFun>,
    /// True when some variable-bearing equations had to be dropped: the
    /// residual is then an implicate of the existential formula rather than
    /// an equivalent.
    pub incomplete: bool,
}

/// Eliminates `vars` from the conjunction of `lhs = rhs` equalities.
pub fn eliminate(
    equalities: &[(SymTerm, SymTerm)],
    vars: &BTreeSet<Atom>,
    mut side_conditions: Vec<RatFun>,
) -> Result<ElimResult, SymError> {
    let mut conditions = Vec::new();
    for (l, r) in equalities {
        collect_conds(l, vars, &mut conditions)?;
        collect_conds(r, vars, &mut conditions)?;
    }
    if conditions.len() > MAX_CONDITIONS {
        return Err(SymError::Unsupported(format!(
            "too many conditional branches ({} conditions)",
            conditions.len()
        )));
    }
    let mut branches = Vec::new();
    let mut incomplete = false;
    for mask in 0..(1u32 << conditions.len()) {
        let assignment: Vec<bool> =
            (0..conditions.len()).map(|i| mask & (1 << i) != 0).collect();
        let mut polys = Vec::new();
        for (l, r) in equalities {
            let lv = specialize(l, &conditions, &assignment);
            let rv = specialize(r, &conditions, &assignment);
            let diff = lv.sub(&rv);
            if diff.den().as_constant().is_none() {
                push_side(&mut side_conditions, RatFun::from_poly(diff.den().clone()));
            }
            let p = diff.num().clone();
            if !p.is_zero() {
                polys.push(p);
            }
        }
        let (residues, dropped) = eliminate_polys(polys, vars, &mut side_conditions);
        incomplete |= dropped;
        branches.push(ElimBranch { assignment, residues });
    }
    Ok(ElimResult { conditions, branches, side_conditions, incomplete })
}

fn push_side(conds: &mut Vec<RatFun>, c: RatFun) {
    if c.as_constant().is_none() && !conds.contains(&c) {
        conds.push(c);
    }
}

fn collect_conds(t: &SymTerm, vars: &BTreeSet<Atom>, out: &mut Vec<Cond>) -> Result<(), SymError> {
    if let SymTerm::Ite(c, a, b) = t {
        if c.atoms().iter().any(|a| vars.contains(a)) {
            return Err(SymError::Unsupported(
                "conditional guard mentions an eliminated variable".into(),
            ));
        }
        if !out.contains(c) {
            out.push(c.clone());
        }
        collect_conds(a, vars, out)?;
        collect_conds(b, vars, out)?;
    }
    Ok(())
}

fn specialize(t: &SymTerm, conds: &[Cond], assignment: &[bool]) -> RatFun {
    match t {
        SymTerm::Rat(r) => r.clone(),
        SymTerm::Ite(c, a, b) => {
            let idx = conds.iter().position(|k| k == c).expect("condition was collected");
            if assignment[idx] {
                specialize(a, conds, assignment)
            } else {
                specialize(b, conds, assignment)
            }
        }
    }
}

/// Core elimination over plain polynomial equations. Returns the variable-free
/// residues and whether any variable-bearing equations had to be dropped.
fn eliminate_polys(
    mut eqs: Vec<Poly>,
    vars: &BTreeSet<Atom>,
    side_conditions: &mut Vec<RatFun>,
) -> (Vec<Poly>, bool) {
    let mut residues: Vec<Poly> = Vec::new();

    fn harvest(eqs: &mut Vec<Poly>, residues: &mut Vec<Poly>, vars: &BTreeSet<Atom>) {
        eqs.retain(|p| {
            if p.mentions_any(vars) {
                true
            } else {
                if !p.is_zero() {
                    let norm = p.primitive_int();
                    if !residues.contains(&norm) {
                        residues.push(norm);
                    }
                }
                false
            }
        });
    }

    // Phase 1: substitute variables that occur linearly with a coefficient
    // free of eliminated variables. Fewest occurrences first, ties by atom;
    // equations with a constant coefficient are preferred (no side condition).
    loop {
        harvest(&mut eqs, &mut residues, vars);
        let mut order: Vec<(&Atom, usize)> = Vec::new();
        for v in vars {
            let c = eqs.iter().filter(|p| p.degree_in(v) > 0).count();
            if c > 0 {
                order.push((v, c));
            }
        }
        if order.is_empty() {
            return (residues, false);
        }
        order.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));

        let mut picked: Option<(usize, Atom)> = None;
        for (v, _) in order {
            let mut best: Option<(usize, bool)> = None;
            for (idx, p) in eqs.iter().enumerate() {
                if p.degree_in(v) != 1 {
                    continue;
                }
                let coeff = &p.as_univariate(v)[1];
                if coeff.mentions_any(vars) {
                    continue;
                }
                let is_const = coeff.as_constant().is_some();
                if best.map_or(true, |(_, c)| is_const && !c) {
                    best = Some((idx, is_const));
                }
                if is_const {
                    break;
                }
            }
            if let Some((idx, _)) = best {
                picked = Some((idx, v.clone()));
                break;
            }
        }
        let Some((idx, v)) = picked else { break };
        let uni = eqs[idx].as_univariate(&v);
        let sol = RatFun::new(uni[0].neg(), uni[1].clone());
        if uni[1].as_constant().is_none() {
            push_side(side_conditions, RatFun::from_poly(uni[1].clone()));
        }
        eqs.remove(idx);
        let map = BTreeMap::from([(v, sol)]);
        for q in eqs.iter_mut() {
            let r = poly_subst(q, &map);
            if r.den().as_constant().is_none() {
                push_side(side_conditions, RatFun::from_poly(r.den().clone()));
            }
            *q = r.num().clone();
        }
    }

    // Phase 2: fraction-free Gaussian elimination over monomials in the
    // eliminated variables. Rows whose monomial part cancels become residues.
    harvest(&mut eqs, &mut residues, vars);
    if eqs.is_empty() {
        return (residues, false);
    }
    let mut columns: BTreeSet<Monomial> = BTreeSet::new();
    let mut rows: Vec<(BTreeMap<Monomial, Poly>, Poly)> = Vec::new();
    for p in &eqs {
        let mut coeffs: BTreeMap<Monomial, Poly> = BTreeMap::new();
        let mut rem = Poly::zero();
        for (m, c) in &p.terms {
            let (inside, outside) = m.split(vars);
            let contrib = Poly { terms: BTreeMap::from([(outside, c.clone())]) };
            if inside.is_one() {
                rem = rem.add(&contrib);
            } else {
                columns.insert(inside.clone());
                let slot = coeffs.entry(inside).or_insert_with(Poly::zero);
                *slot = slot.add(&contrib);
            }
        }
        coeffs.retain(|_, c| !c.is_zero());
        rows.push((coeffs, rem));
    }
    let mut is_pivot = vec![false; rows.len()];
    for col in columns.iter().rev() {
        // Pick the last eligible row as pivot: the implicate-template
        // equation sits at the end of the formula, so residues come out
        // expressed through the accumulator equations.
        let Some(pi) = (0..rows.len())
            .rev()
            .find(|&i| !is_pivot[i] && rows[i].0.contains_key(col))
        else {
            continue;
        };
        is_pivot[pi] = true;
        let (pcoeffs, prem) = rows[pi].clone();
        let pc = pcoeffs.get(col).cloned().expect("pivot column present");
        for i in 0..rows.len() {
            if i == pi || is_pivot[i] {
                continue;
            }
            let Some(ac) = rows[i].0.get(col).cloned() else { continue };
            let mut next: BTreeMap<Monomial, Poly> = BTreeMap::new();
            for (m, c) in &rows[i].0 {
                next.insert(m.clone(), c.mul(&pc));
            }
            for (m, c) in &pcoeffs {
                let sub = c.mul(&ac);
                let slot = next.entry(m.clone()).or_insert_with(Poly::zero);
                *slot = slot.sub(&sub);
            }
            next.retain(|_, c| !c.is_zero());
            let rem = rows[i].1.mul(&pc).sub(&prem.mul(&ac));
            rows[i] = (next, rem);
        }
    }
    let mut dropped = false;
    for (i, (coeffs, rem)) in rows.iter().enumerate() {
        if is_pivot[i] || !coeffs.is_empty() {
            dropped = true;
            continue;
        }
        if !rem.is_zero() {
            let norm = rem.primitive_int();
            if !residues.contains(&norm) {
                residues.push(norm);
            }
        }
    }
    (residues, dropped)
}

/// Solves a residual polynomial for an atom occurring linearly. Returns the
/// solution and, when the coefficient is not constant, the nonzero guard.
pub fn solve_linear(p: &Poly, atom: &Atom) -> Option<(RatFun, Option<Poly>)> {
    if p.degree_in(atom) != 1 {
        return None;
    }
    let uni = p.as_univariate(atom);
    let coeff = uni[1].clone();
    if coeff.degree_in(atom) > 0 {
        return None;
    }
    let sol = RatFun::new(uni[0].neg(), coeff.clone());
    let guard = if coeff.as_constant().is_none() { Some(coeff) } else { None };
    Some((sol, guard))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;

    fn fresh(i: u32) -> Atom {
        Atom::Fresh(i)
    }

    fn var(a: Atom) -> SymTerm {
        SymTerm::var(a)
    }

    fn rf(a: Atom) -> RatFun {
        RatFun::var(a)
    }

    #[test]
    fn mean_style_substitution_chain() {
        // y1 = v1/v2, y2 = v2, [] = v3, v3 = v1 + x  with V = {v1,v2,v3}
        // must leave [] = y1*y2 + x.
        let y1 = rf(Atom::Accum(1));
        let y2 = rf(Atom::Accum(2));
        let x = rf(Atom::NewElem);
        let eqs = vec![
            (var(Atom::Accum(1)), SymTerm::Rat(rf(fresh(1)).div(&rf(fresh(2))))),
            (var(Atom::Accum(2)), var(fresh(2))),
            (var(Atom::Boxvar), var(fresh(3))),
            (var(fresh(3)), SymTerm::Rat(rf(fresh(1)).add(&x))),
        ];
        let vars: BTreeSet<Atom> = [fresh(1), fresh(2), fresh(3)].into();
        let res = eliminate(&eqs, &vars, vec![]).unwrap();
        assert!(!res.incomplete);
        assert_eq!(res.branches.len(), 1);
        let residues = &res.branches[0].residues;
        assert_eq!(residues.len(), 1);
        let (sol, guard) = solve_linear(&residues[0], &Atom::Boxvar).unwrap();
        assert!(guard.is_none());
        assert_eq!(sol, y1.mul(&y2).add(&rf(Atom::NewElem)));
    }

    #[test]
    fn eliminate_nothing_keeps_equalities() {
        let eqs = vec![(var(Atom::Accum(1)), SymTerm::constant(rat_int(3)))];
        let res = eliminate(&eqs, &BTreeSet::new(), vec![]).unwrap();
        assert!(!res.incomplete);
        assert_eq!(res.branches[0].residues.len(), 1);
    }

    #[test]
    fn linear_occurrence_beats_monomial_phase() {
        // y = u^2 + w and [] = u^2 + w + 1: w is linear, so substitution
        // alone reaches [] = y + 1 with nothing dropped.
        let u2 = RatFun::from_poly(Poly::var(fresh(1)).pow(2));
        let w = rf(fresh(2));
        let y = var(Atom::Accum(1));
        let one = RatFun::constant(rat_int(1));
        let eqs = vec![
            (y.clone(), SymTerm::Rat(u2.add(&w))),
            (var(Atom::Boxvar), SymTerm::Rat(u2.add(&w).add(&one))),
        ];
        let vars: BTreeSet<Atom> = [fresh(1), fresh(2)].into();
        let res = eliminate(&eqs, &vars, vec![]).unwrap();
        assert!(!res.incomplete);
        let residues = &res.branches[0].residues;
        let with_box: Vec<_> =
            residues.iter().filter(|p| p.degree_in(&Atom::Boxvar) > 0).collect();
        assert_eq!(with_box.len(), 1);
        let (sol, _) = solve_linear(with_box[0], &Atom::Boxvar).unwrap();
        assert_eq!(sol, rf(Atom::Accum(1)).add(&RatFun::constant(rat_int(1))));
    }

    #[test]
    fn monomial_phase_finds_quadratic_residue() {
        // y = u^2 + w^2 and [] = u^2 + w^2 + 1: both variables occur only
        // nonlinearly, so the fraction-free monomial phase must cancel the
        // shared quadratic part, leaving [] = y + 1 (flagged incomplete).
        let u2 = RatFun::from_poly(Poly::var(fresh(1)).pow(2));
        let w2 = RatFun::from_poly(Poly::var(fresh(2)).pow(2));
        let y = var(Atom::Accum(1));
        let one = RatFun::constant(rat_int(1));
        let eqs = vec![
            (y.clone(), SymTerm::Rat(u2.add(&w2))),
            (var(Atom::Boxvar), SymTerm::Rat(u2.add(&w2).add(&one))),
        ];
        let vars: BTreeSet<Atom> = [fresh(1), fresh(2)].into();
        let res = eliminate(&eqs, &vars, vec![]).unwrap();
        assert!(res.incomplete, "pivot rows are dropped");
        let residues = &res.branches[0].residues;
        let with_box: Vec<_> =
            residues.iter().filter(|p| p.degree_in(&Atom::Boxvar) > 0).collect();
        assert_eq!(with_box.len(), 1);
        let (sol, _) = solve_linear(with_box[0], &Atom::Boxvar).unwrap();
        assert_eq!(sol, rf(Atom::Accum(1)).add(&RatFun::constant(rat_int(1))));
    }

    #[test]
    fn conditional_guards_split_branches() {
        // [] = v + ite(x > 0, 1, 0), y = v.
        let cond = Cond::Cmp(
            super::super::term::CmpOp::Gt,
            rf(Atom::NewElem),
            RatFun::zero(),
        );
        let ite = SymTerm::Ite(
            cond.clone(),
            Box::new(SymTerm::constant(rat_int(1))),
            Box::new(SymTerm::zero()),
        );
        let mut ctx = super::super::term::TermCtx::new(100);
        let rhs = ctx.add(&var(fresh(1)), &ite).unwrap();
        let eqs = vec![
            (var(Atom::Accum(1)), var(fresh(1))),
            (var(Atom::Boxvar), rhs),
        ];
        let vars: BTreeSet<Atom> = [fresh(1)].into();
        let res = eliminate(&eqs, &vars, vec![]).unwrap();
        assert_eq!(res.conditions.len(), 1);
        assert_eq!(res.branches.len(), 2);
        for b in &res.branches {
            let with_box: Vec<_> =
                b.residues.iter().filter(|p| p.degree_in(&Atom::Boxvar) > 0).collect();
            assert_eq!(with_box.len(), 1);
            let (sol, _) = solve_linear(with_box[0], &Atom::Boxvar).unwrap();
            let expect = if b.assignment[0] {
                rf(Atom::Accum(1)).add(&RatFun::constant(rat_int(1)))
            } else {
                rf(Atom::Accum(1))
            };
            assert_eq!(sol, expect);
        }
    }

    #[test]
    fn guard_on_eliminated_variable_is_stuck() {
        let cond = Cond::Cmp(super::super::term::CmpOp::Gt, rf(fresh(1)), RatFun::zero());
        let ite = SymTerm::Ite(
            cond,
            Box::new(SymTerm::constant(rat_int(1))),
            Box::new(SymTerm::zero()),
        );
        let eqs = vec![(var(Atom::Boxvar), ite)];
        let vars: BTreeSet<Atom> = [fresh(1)].into();
        assert!(matches!(eliminate(&eqs, &vars, vec![]), Err(SymError::Unsupported(_))));
    }
}
