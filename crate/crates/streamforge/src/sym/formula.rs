//! Conjunctive equality formulas over symbolic terms, list-term abstraction,
//! and the implicate-finding pipeline.

use super::axioms::instantiate_axioms;
use super::elim::{eliminate, solve_linear, ElimResult};
use super::ratfun::RatFun;
use super::term::{offline_to_sym, SymEnv, SymTerm, TermCtx};
use super::{Atom, SymError};
use crate::ir::OfflineExpr;
use std::collections::{BTreeMap, BTreeSet};

/// A conjunction of equalities with side conditions (each listed rational
/// function is asserted nonzero). `incomplete` marks residues produced by a
/// lossy elimination.
#[derive(Debug, Clone, Default)]
pub struct SymFormula {
    pub equalities: Vec<(SymTerm, SymTerm)>,
    pub side_conditions: Vec<RatFun>,
    pub incomplete: bool,
}

impl SymFormula {
    pub fn is_true(&self) -> bool {
        self.equalities.is_empty()
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for (l, r) in &self.equalities {
            out.extend(l.atoms());
            out.extend(r.atoms());
        }
        for c in &self.side_conditions {
            out.extend(c.atoms());
        }
        out
    }

    pub fn render(&self) -> String {
        if self.is_true() {
            return "true".into();
        }
        self.equalities
            .iter()
            .map(|(l, r)| format!("(= {} {})", render_term(l), render_term(r)))
            .collect::<Vec<_>>()
            .join(" ∧ ")
    }
}

pub fn render_term(t: &SymTerm) -> String {
    match t {
        SymTerm::Rat(r) => format!("{r}"),
        SymTerm::Ite(c, a, b) => {
            format!("(ite {c:?} {} {})", render_term(a), render_term(b))
        }
    }
}

/// Replaces each structurally distinct opaque list term by a fresh variable
/// (equal terms share one). Returns the rewritten formula and the fresh
/// variables, numbered in first-occurrence order.
pub fn replace_list_exprs(f: &SymFormula) -> (SymFormula, Vec<Atom>, BTreeMap<Atom, OfflineExpr>) {
    let mut mapping: BTreeMap<Atom, Atom> = BTreeMap::new();
    let mut fresh: Vec<Atom> = Vec::new();
    let mut origin: BTreeMap<Atom, OfflineExpr> = BTreeMap::new();
    let mut next = 1u32;
    {
        let mut visit = |t: &SymTerm| {
            for a in ordered_list_atoms(t) {
                if let Atom::List(e) = &a {
                    if !mapping.contains_key(&a) {
                        let v = Atom::Fresh(next);
                        next += 1;
                        fresh.push(v.clone());
                        origin.insert(v.clone(), e.clone());
                        mapping.insert(a.clone(), v);
                    }
                }
            }
        };
        for (l, r) in &f.equalities {
            visit(l);
            visit(r);
        }
    }
    let out = SymFormula {
        equalities: f
            .equalities
            .iter()
            .map(|(l, r)| (l.rename_atoms(&mapping), r.rename_atoms(&mapping)))
            .collect(),
        side_conditions: f.side_conditions.iter().map(|c| c.rename_atoms(&mapping)).collect(),
        incomplete: f.incomplete,
    };
    (out, fresh, origin)
}

/// List atoms of a term in a deterministic traversal order: conditions first,
/// then branches, with polynomial atoms in monomial order.
fn ordered_list_atoms(t: &SymTerm) -> Vec<Atom> {
    let mut out = Vec::new();
    fn go(t: &SymTerm, out: &mut Vec<Atom>) {
        match t {
            SymTerm::Rat(r) => {
                for a in r.atoms() {
                    if matches!(a, Atom::List(_)) && !out.contains(&a) {
                        out.push(a);
                    }
                }
            }
            SymTerm::Ite(c, a, b) => {
                for at in c.atoms() {
                    if matches!(at, Atom::List(_)) && !out.contains(&at) {
                        out.push(at);
                    }
                }
                go(a, out);
                go(b, out);
            }
        }
    }
    go(t, &mut out);
    out
}

/// The implicate template `E[(xs++[x])/xs] = []`.
#[derive(Debug, Clone)]
pub struct ImplicateTemplate {
    pub snoc_spec: OfflineExpr,
}

/// Runs the symbolic pipeline: axiom instantiation, conjunction, list-term
/// abstraction and elimination of the fresh variables. Returns the residual
/// formula restricted to its box-rooted literals, each solved for the box
/// (an empty result is `true`).
pub fn find_implicate(
    rfs_formula: &SymFormula,
    template: &ImplicateTemplate,
    extra_args: &[String],
    budget: usize,
) -> Result<SymFormula, SymError> {
    let mut ctx = TermCtx::new(budget);
    ctx.side_conditions = rfs_formula.side_conditions.clone();

    let mut psi = rfs_formula.equalities.clone();
    let rhs = offline_to_sym(&template.snoc_spec, &SymEnv::new(), &mut ctx)?;
    psi.push((SymTerm::var(Atom::Boxvar), rhs));

    // Axioms for every snoc-rooted list term in the conjunction.
    let mut seeds: Vec<OfflineExpr> = Vec::new();
    for (l, r) in &psi {
        for t in [l, r] {
            for a in ordered_list_atoms(t) {
                if let Atom::List(e) = a {
                    if !seeds.contains(&e) {
                        seeds.push(e);
                    }
                }
            }
        }
    }
    let axioms = instantiate_axioms(&seeds, &mut ctx, extra_args)?;
    log::debug!("axioms:");
    for ax in &axioms {
        log::debug!("  (= {} {})", crate::ir::print_offline_expr(&ax.lhs), render_term(&ax.rhs));
    }
    for ax in &axioms {
        psi.push((SymTerm::var(Atom::List(ax.lhs.clone())), ax.rhs.clone()));
    }

    let formula = SymFormula {
        equalities: psi,
        side_conditions: ctx.side_conditions.clone(),
        incomplete: false,
    };
    log::debug!("psi: {}", formula.render());
    let (abstracted, fresh, _origin) = replace_list_exprs(&formula);
    log::debug!("psi': {}", abstracted.render());

    let vars: BTreeSet<Atom> = fresh.into_iter().collect();
    let res = eliminate(&abstracted.equalities, &vars, abstracted.side_conditions.clone())?;
    let out = box_literals(&res);
    log::debug!("residual: {}", out.render());
    Ok(out)
}

/// Extracts the box-rooted literals from an elimination result, merging
/// guarded branches into conditional right-hand sides. Literals without the
/// box are dropped (they are implied by the input and carry no completion).
pub fn box_literals(res: &ElimResult) -> SymFormula {
    let mut side_conditions = res.side_conditions.clone();
    let mut equalities = Vec::new();

    if res.conditions.is_empty() {
        let branch = &res.branches[0];
        for p in &branch.residues {
            if p.degree_in(&Atom::Boxvar) == 0 {
                continue;
            }
            if let Some((sol, guard)) = solve_linear(p, &Atom::Boxvar) {
                if sol.atoms().contains(&Atom::Boxvar) {
                    continue;
                }
                if let Some(g) = guard {
                    let g = RatFun::from_poly(g);
                    if !side_conditions.contains(&g) {
                        side_conditions.push(g);
                    }
                }
                equalities.push((SymTerm::var(Atom::Boxvar), SymTerm::Rat(sol)));
            }
        }
    } else {
        // Every branch must contribute a solution for a merged conditional.
        let mut per_mask: Vec<Option<RatFun>> = Vec::new();
        for branch in &res.branches {
            let sol = branch
                .residues
                .iter()
                .filter(|p| p.degree_in(&Atom::Boxvar) > 0)
                .find_map(|p| {
                    solve_linear(p, &Atom::Boxvar)
                        .filter(|(s, _)| !s.atoms().contains(&Atom::Boxvar))
                });
            per_mask.push(sol.map(|(s, g)| {
                if let Some(g) = g {
                    let g = RatFun::from_poly(g);
                    if !side_conditions.contains(&g) {
                        side_conditions.push(g);
                    }
                }
                s
            }));
        }
        if let Some(merged) = merge_branches(&res.conditions, &per_mask, 0, 0) {
            equalities.push((SymTerm::var(Atom::Boxvar), merged));
        }
    }
    SymFormula { equalities, side_conditions, incomplete: res.incomplete }
}

fn merge_branches(
    conds: &[super::term::Cond],
    per_mask: &[Option<RatFun>],
    idx: usize,
    mask: usize,
) -> Option<SymTerm> {
    if idx == conds.len() {
        return per_mask[mask].clone().map(SymTerm::Rat);
    }
    let t = merge_branches(conds, per_mask, idx + 1, mask | (1 << idx))?;
    let e = merge_branches(conds, per_mask, idx + 1, mask)?;
    if t == e {
        return Some(t);
    }
    Some(SymTerm::Ite(conds[idx].clone(), Box::new(t), Box::new(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, snoc_spec};
    use crate::rat::rat_int;

    fn term_of(src: &str, ctx: &mut TermCtx) -> SymTerm {
        let p = parse_program(src).unwrap();
        offline_to_sym(&p.body, &SymEnv::new(), ctx).unwrap()
    }

    /// The paper-style two-entry mean RFS as a formula:
    /// y1 = foldl(+,0,xs)/length(xs)  ∧  y2 = length(xs).
    fn mean_formula2(ctx: &mut TermCtx) -> SymFormula {
        let body = term_of("(program (xs) (/ (foldl + 0 xs) (length xs)))", ctx);
        let len = term_of("(program (xs) (length xs))", ctx);
        SymFormula {
            equalities: vec![
                (SymTerm::var(Atom::Accum(1)), body),
                (SymTerm::var(Atom::Accum(2)), len),
            ],
            side_conditions: ctx.side_conditions.clone(),
            incomplete: false,
        }
    }

    #[test]
    fn replace_list_exprs_numbers_by_first_occurrence() {
        let mut ctx = TermCtx::new(10_000);
        let f = mean_formula2(&mut ctx);
        let (out, fresh, origin) = replace_list_exprs(&f);
        assert_eq!(fresh.len(), 2);
        // v1 = fold (first in y1's term), v2 = length; y2's term shares v2.
        let fold = parse_program("(program (xs) (foldl + 0 xs))").unwrap().body;
        let len = parse_program("(program (xs) (length xs))").unwrap().body;
        assert_eq!(origin.get(&Atom::Fresh(1)), Some(&fold));
        assert_eq!(origin.get(&Atom::Fresh(2)), Some(&len));
        let atoms = out.atoms();
        assert!(atoms.iter().all(|a| !matches!(a, Atom::List(_))));
    }

    #[test]
    fn replace_shares_equal_terms() {
        let mut ctx = TermCtx::new(10_000);
        let a = term_of("(program (xs) (foldl + 0 xs))", &mut ctx);
        let b = term_of("(program (xs) (foldl + 0 xs))", &mut ctx);
        let f = SymFormula {
            equalities: vec![
                (SymTerm::var(Atom::Accum(1)), a),
                (SymTerm::var(Atom::Accum(2)), b),
            ],
            side_conditions: vec![],
            incomplete: false,
        };
        let (_, fresh, _) = replace_list_exprs(&f);
        assert_eq!(fresh.len(), 1, "equal list terms share one variable");
    }

    #[test]
    fn replace_no_list_terms_is_identity() {
        let f = SymFormula {
            equalities: vec![(
                SymTerm::var(Atom::Accum(1)),
                SymTerm::constant(rat_int(4)),
            )],
            side_conditions: vec![],
            incomplete: false,
        };
        let (out, fresh, _) = replace_list_exprs(&f);
        assert!(fresh.is_empty());
        assert_eq!(out.equalities, f.equalities);
    }

    #[test]
    fn mean_implicate_is_product_form() {
        // find_implicate over the 2-entry mean RFS yields [] = y1*y2 + x.
        let mut ctx = TermCtx::new(10_000);
        let phi = mean_formula2(&mut ctx);
        let spec = parse_program("(program (xs) (foldl + 0 xs))").unwrap().body;
        let t = ImplicateTemplate { snoc_spec: snoc_spec(&spec) };
        let out = find_implicate(&phi, &t, &[], 10_000).unwrap();
        assert_eq!(out.equalities.len(), 1);
        let y1 = RatFun::var(Atom::Accum(1));
        let y2 = RatFun::var(Atom::Accum(2));
        let x = RatFun::var(Atom::NewElem);
        let expect = SymTerm::Rat(y1.mul(&y2).add(&x));
        assert_eq!(out.equalities[0].1, expect);
        assert_eq!(out.equalities[0].0, SymTerm::var(Atom::Boxvar));
    }

    #[test]
    fn implicate_of_count_filter_is_guarded() {
        // Φ: y1 = length(filter(>0, xs)); spec the same expression.
        let mut ctx = TermCtx::new(10_000);
        let cnt = term_of(
            "(program (xs) (length (filter (lambda (v) (> v 0)) xs)))",
            &mut ctx,
        );
        let phi = SymFormula {
            equalities: vec![(SymTerm::var(Atom::Accum(1)), cnt)],
            side_conditions: vec![],
            incomplete: false,
        };
        let spec = parse_program("(program (xs) (length (filter (lambda (v) (> v 0)) xs)))")
            .unwrap()
            .body;
        let t = ImplicateTemplate { snoc_spec: snoc_spec(&spec) };
        let out = find_implicate(&phi, &t, &[], 10_000).unwrap();
        assert_eq!(out.equalities.len(), 1);
        match &out.equalities[0].1 {
            SymTerm::Ite(_, a, b) => {
                let y1 = RatFun::var(Atom::Accum(1));
                let one = RatFun::constant(rat_int(1));
                assert_eq!(**a, SymTerm::Rat(y1.add(&one)));
                assert_eq!(**b, SymTerm::Rat(y1));
            }
            other => panic!("expected conditional, got {other:?}"),
        }
    }
}
