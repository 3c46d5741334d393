//! Fallback enumerative synthesis with testing-based equivalence checking.
//! Candidates are enumerated in strictly nondecreasing size with
//! observational-equivalence pruning on a shared test set; mined templates
//! join the grammar as macro productions.

use crate::eval::eval_online_expr;
use crate::ir::{Builtin, Func, OfflineExpr, OnlineExpr, OnlineFunc};
use crate::mine::Template;
use crate::rat::{value_grid, Rat};
use crate::rfs::Rfs;
use crate::sym::term::{online_to_sym, subst_sym, SymTerm, TermCtx};
use crate::sym::unroll::unroll_with_elems;
use crate::sym::Atom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

/// Search and testing hyperparameters. Deterministic given the seed.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub max_size: usize,
    pub timeout: Duration,
    pub test_count: usize,
    pub list_len_range: (usize, usize),
    pub rng_seed: u64,
    pub unroll_depth: u32,
    pub node_budget: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_size: 25,
            timeout: Duration::from_secs(600),
            test_count: 200,
            list_len_range: (0, 12),
            rng_seed: 0x517e_a11c_e0f5,
            unroll_depth: 3,
            node_budget: 10_000,
        }
    }
}

/// Splitmix-style seed derivation so per-hole streams are independent of
/// scheduling and of each other.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One concrete test: a prior stream `xs`, the new element, extra-argument
/// values, the accumulator values implied by the RFS, and the expected value
/// of the spec on `xs ++ [x]`.
#[derive(Debug, Clone)]
pub struct TestPoint {
    pub xs: Vec<Rat>,
    pub x: Rat,
    pub args: BTreeMap<String, Rat>,
    pub accums: Vec<Rat>,
    pub expected: Rat,
}

/// Deterministic random test points; the first two always exercise the
/// empty and singleton prior streams (safe-division corners).
pub fn make_test_points(
    phi: &Rfs,
    spec: &OfflineExpr,
    cfg: &SearchConfig,
    seed: u64,
    count: usize,
) -> Vec<TestPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = value_grid();
    let pick = |rng: &mut ChaCha8Rng| grid[rng.gen_range(0..grid.len())].clone();
    let (lo, hi) = cfg.list_len_range;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < count * 8 {
        attempts += 1;
        let len = match out.len() {
            0 => 0,
            1 => 1,
            _ => rng.gen_range(lo..=hi.max(lo)),
        };
        let xs: Vec<Rat> = (0..len).map(|_| pick(&mut rng)).collect();
        let x = pick(&mut rng);
        let args: BTreeMap<String, Rat> =
            phi.extra_args.iter().map(|a| (a.clone(), pick(&mut rng))).collect();
        let accums: Option<Vec<Rat>> = phi
            .entries
            .iter()
            .map(|e| crate::eval::eval_offline_expr(e, &xs, &args, None).ok())
            .collect();
        let Some(accums) = accums else { continue };
        let mut extended = xs.clone();
        extended.push(x.clone());
        let Ok(expected) = crate::eval::eval_offline_expr(spec, &extended, &args, None) else {
            continue;
        };
        out.push(TestPoint { xs, x, args, accums, expected });
    }
    out
}

fn candidate_value(cand: &OnlineExpr, p: &TestPoint) -> Option<Rat> {
    match eval_online_expr(cand, &p.accums, &p.x, &p.args) {
        Ok(crate::eval::Value::Rational(r)) => Some(r),
        _ => None,
    }
}

/// Equivalence modulo the RFS, checked by random testing plus bounded
/// symbolic verification at prior lengths 0..=3 (lengths where either side
/// fails to canonicalize to a plain rational function are skipped).
pub fn check_equiv_mod_rfs(
    phi: &Rfs,
    candidate: &OnlineExpr,
    spec: &OfflineExpr,
    cfg: &SearchConfig,
    seed: u64,
) -> bool {
    let points = make_test_points(phi, spec, cfg, seed, cfg.test_count);
    if points.is_empty() {
        return false;
    }
    for p in &points {
        match candidate_value(candidate, p) {
            Some(v) if v == p.expected => {}
            _ => return false,
        }
    }
    // Bounded verification.
    for len in 0..=3u32 {
        let mut ctx = TermCtx::new(cfg.node_budget);
        let elems: Vec<SymTerm> =
            (1..=len).map(|i| SymTerm::var(Atom::Elem("b".into(), i))).collect();
        let entries: Option<Vec<SymTerm>> = phi
            .entries
            .iter()
            .map(|e| unroll_with_elems(e, &elems, &mut ctx).ok())
            .collect();
        let Some(entries) = entries else { continue };
        let mut extended = elems.clone();
        extended.push(SymTerm::var(Atom::NewElem));
        let Ok(rhs) = unroll_with_elems(spec, &extended, &mut ctx) else { continue };
        let Ok(lhs_raw) = online_to_sym(candidate, &mut ctx) else { continue };
        let map: BTreeMap<Atom, SymTerm> = entries
            .into_iter()
            .enumerate()
            .map(|(i, t)| (Atom::Accum(i + 1), t))
            .collect();
        let Ok(lhs) = subst_sym(&lhs_raw, &map, &mut ctx) else { continue };
        match (&lhs, &rhs) {
            (SymTerm::Rat(a), SymTerm::Rat(b)) => {
                if a != b {
                    return false;
                }
            }
            // Conditional forms have no canonical representative here.
            _ => continue,
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Implicate,
    TemplateInterp,
    TemplateEnum,
    Enumeration,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Implicate => "implicate",
            Method::TemplateInterp => "template+interp",
            Method::TemplateEnum => "template+enum",
            Method::Enumeration => "enum",
        }
    }
}

/// Failure report: the best candidates seen, ranked by test passes.
#[derive(Debug, Clone)]
pub struct FailureDiag {
    pub reason: String,
    pub best: Vec<(String, usize, usize)>,
}

impl std::fmt::Display for FailureDiag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.reason)?;
        for (expr, passes, total) in &self.best {
            write!(f, "\n  candidate {expr} passed {passes}/{total} tests")?;
        }
        Ok(())
    }
}

struct Bank {
    by_size: Vec<Vec<(OnlineExpr, Vec<Rat>)>>,
    seen: HashSet<Vec<Rat>>,
}

fn collect_builtins(e: &OfflineExpr, out: &mut BTreeSet<Builtin>) {
    match e {
        OfflineExpr::Apply(f, args) => {
            if let Func::Builtin(b) = f {
                out.insert(*b);
            }
            collect_builtins_func(f, out);
            for a in args {
                collect_builtins(a, out);
            }
        }
        OfflineExpr::Map(f, l) | OfflineExpr::Filter(f, l) => {
            collect_builtins_func(f, out);
            collect_builtins(l, out);
        }
        OfflineExpr::Foldl(f, i, l) => {
            collect_builtins_func(f, out);
            collect_builtins(i, out);
            collect_builtins(l, out);
        }
        OfflineExpr::Length(l) | OfflineExpr::Snoc(l) => collect_builtins(l, out),
        OfflineExpr::Ite(c, t, el) => {
            collect_builtins(c, out);
            collect_builtins(t, out);
            collect_builtins(el, out);
        }
        _ => {}
    }
}

fn collect_builtins_func(f: &Func, out: &mut BTreeSet<Builtin>) {
    match f {
        Func::Builtin(b) => {
            out.insert(*b);
        }
        Func::Lambda(_, body) => collect_builtins(body, out),
    }
}

/// Top-level fallback synthesis: exact templates first, then template solving
/// via polynomial interpolation, then size-ordered enumeration. Any returned
/// expression has passed a fresh-seed equivalence check.
pub fn enum_synthesize(
    phi: &Rfs,
    spec: &OfflineExpr,
    templates: &[Template],
    cfg: &SearchConfig,
    salt: u64,
) -> Result<(OnlineExpr, Method), FailureDiag> {
    let deadline = Instant::now() + cfg.timeout;
    let seed = derive_seed(cfg.rng_seed, salt);
    let fresh_seed = derive_seed(seed, 0xFEED);

    // Phase 0: exact (zero-unknown) templates go straight to the verifier.
    for t in templates.iter().filter(|t| t.is_exact()) {
        if let Some(cand) = t.instantiate_online(&BTreeMap::new()) {
            if check_equiv_mod_rfs(phi, &cand, spec, cfg, fresh_seed) {
                return Ok((cand, Method::TemplateEnum));
            }
        }
    }

    // Phase 1: unknowns as univariate polynomials in the length accumulator.
    for t in templates.iter().filter(|t| !t.is_exact()) {
        if let Some(cand) =
            crate::polyinterp::solve_template(spec, phi, t, &Default::default(), cfg, salt)
        {
            return Ok((cand, Method::TemplateInterp));
        }
    }

    // Phase 2: enumeration.
    let points = make_test_points(phi, spec, cfg, derive_seed(seed, 0x7e57), 60.min(cfg.test_count.max(8)));
    if points.is_empty() {
        return Err(FailureDiag { reason: "could not build a test set".into(), best: vec![] });
    }
    let target: Vec<Rat> = points.iter().map(|p| p.expected.clone()).collect();

    let mut builtins = BTreeSet::new();
    for e in &phi.entries {
        collect_builtins(e, &mut builtins);
    }
    collect_builtins(spec, &mut builtins);
    let binary_ops: Vec<Builtin> = [Builtin::Add, Builtin::Sub, Builtin::Mul, Builtin::Div, Builtin::Min, Builtin::Max]
        .into_iter()
        .filter(|b| builtins.contains(b))
        .collect();
    let unary_ops: Vec<Builtin> = [Builtin::Neg, Builtin::Abs]
        .into_iter()
        .filter(|b| builtins.contains(b))
        .collect();
    let square = builtins.contains(&Builtin::Pow);
    let cmp_ops: Vec<Builtin> = [Builtin::Lt, Builtin::Le, Builtin::Gt, Builtin::Ge]
        .into_iter()
        .filter(|b| builtins.contains(b))
        .collect();
    let ite_enabled = !cmp_ops.is_empty();

    let mut terminals: Vec<OnlineExpr> = Vec::new();
    for i in 1..=phi.arity() {
        terminals.push(OnlineExpr::Accum(i));
    }
    terminals.push(OnlineExpr::NewElem);
    for a in &phi.extra_args {
        terminals.push(OnlineExpr::Arg(a.clone()));
    }
    for c in [0i64, 1, 2] {
        terminals.push(OnlineExpr::int(c));
    }

    let mut bank = Bank { by_size: vec![Vec::new()], seen: HashSet::new() };
    let mut best: Vec<(OnlineExpr, usize)> = Vec::new();
    let total = target.len();
    let mut tick = 0usize;

    macro_rules! consider {
        ($expr:expr, $method:expr) => {{
            let cand: OnlineExpr = $expr;
            tick += 1;
            if tick % 256 == 0 && Instant::now() > deadline {
                return Err(timeout_diag(&best, total));
            }
            let outs: Option<Vec<Rat>> =
                points.iter().map(|p| candidate_value(&cand, p)).collect();
            if let Some(outs) = outs {
                if outs == target {
                    if check_equiv_mod_rfs(phi, &cand, spec, cfg, fresh_seed) {
                        return Ok((cand, $method));
                    }
                } else {
                    let passes = outs.iter().zip(&target).filter(|(a, b)| a == b).count();
                    note_best(&mut best, &cand, passes);
                    if bank.seen.insert(outs.clone()) {
                        let size = cand.node_count();
                        while bank.by_size.len() <= size {
                            bank.by_size.push(Vec::new());
                        }
                        bank.by_size[size].push((cand, outs));
                    }
                }
            }
        }};
    }

    for t in &terminals {
        consider!(t.clone(), Method::Enumeration);
    }

    for size in 2..=cfg.max_size {
        if Instant::now() > deadline {
            return Err(timeout_diag(&best, total));
        }
        while bank.by_size.len() <= size {
            bank.by_size.push(Vec::new());
        }
        // Unary operators and squaring.
        if size >= 2 {
            for i in 0..bank.by_size[size - 1].len() {
                let child = bank.by_size[size - 1][i].0.clone();
                for op in &unary_ops {
                    consider!(
                        OnlineExpr::Apply(OnlineFunc::Builtin(*op), vec![child.clone()]),
                        Method::Enumeration
                    );
                }
                if square {
                    consider!(
                        OnlineExpr::apply2(Builtin::Pow, child.clone(), OnlineExpr::int(2)),
                        Method::Enumeration
                    );
                }
            }
        }
        // Binary operators.
        for sa in 1..size.saturating_sub(1) {
            let sb = size - 1 - sa;
            if sb < 1 || sb >= bank.by_size.len() || sa >= bank.by_size.len() {
                continue;
            }
            for i in 0..bank.by_size[sa].len() {
                for j in 0..bank.by_size[sb].len() {
                    let a = bank.by_size[sa][i].0.clone();
                    let b = bank.by_size[sb][j].0.clone();
                    for op in &binary_ops {
                        consider!(OnlineExpr::apply2(*op, a.clone(), b.clone()), Method::Enumeration);
                    }
                }
            }
        }
        // Conditionals over small comparison guards.
        if ite_enabled && size >= 6 {
            let cond_sizes = 3usize; // cmp node + two operands of size 1
            let rest = size - 1 - cond_sizes;
            for sa in 1..rest {
                let sb = rest - sa;
                if sa >= bank.by_size.len() || sb >= bank.by_size.len() {
                    continue;
                }
                for ci in 0..bank.by_size[1].len() {
                    for cj in 0..bank.by_size[1].len() {
                        for op in &cmp_ops {
                            let cond = OnlineExpr::apply2(
                                *op,
                                bank.by_size[1][ci].0.clone(),
                                bank.by_size[1][cj].0.clone(),
                            );
                            for i in 0..bank.by_size[sa].len() {
                                for j in 0..bank.by_size[sb].len() {
                                    consider!(
                                        OnlineExpr::Ite(
                                            Box::new(cond.clone()),
                                            Box::new(bank.by_size[sa][i].0.clone()),
                                            Box::new(bank.by_size[sb][j].0.clone()),
                                        ),
                                        Method::Enumeration
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        // Template instantiations with enumerated sub-expressions.
        for t in templates.iter().filter(|t| !t.is_exact()) {
            let ids = t.unknown_ids();
            let budget = size.saturating_sub(1);
            let mut assignments: Vec<BTreeMap<u32, OnlineExpr>> = Vec::new();
            fill_assignments(&ids, budget, &bank, &mut BTreeMap::new(), &mut assignments, 512);
            for assign in assignments {
                if let Some(cand) = t.instantiate_online(&assign) {
                    consider!(cand, Method::TemplateEnum);
                }
            }
        }
    }

    Err(FailureDiag {
        reason: format!("search budget exhausted (max size {})", cfg.max_size),
        best: render_best(&best, total),
    })
}

fn fill_assignments(
    ids: &[u32],
    budget: usize,
    bank: &Bank,
    current: &mut BTreeMap<u32, OnlineExpr>,
    out: &mut Vec<BTreeMap<u32, OnlineExpr>>,
    cap: usize,
) {
    if out.len() >= cap {
        return;
    }
    let Some((first, rest)) = ids.split_first() else {
        if budget == 0 {
            out.push(current.clone());
        }
        return;
    };
    let reserve = rest.len(); // each remaining slot needs at least size 1
    if budget < 1 + reserve {
        return;
    }
    for s in 1..=(budget - reserve) {
        if s >= bank.by_size.len() {
            break;
        }
        for (expr, _) in &bank.by_size[s] {
            current.insert(*first, expr.clone());
            fill_assignments(rest, budget - s, bank, current, out, cap);
            current.remove(first);
            if out.len() >= cap {
                return;
            }
        }
    }
}

fn note_best(best: &mut Vec<(OnlineExpr, usize)>, cand: &OnlineExpr, passes: usize) {
    if best.len() < 3 {
        best.push((cand.clone(), passes));
        best.sort_by(|a, b| b.1.cmp(&a.1));
        return;
    }
    if passes > best.last().map(|(_, p)| *p).unwrap_or(0) {
        best.pop();
        best.push((cand.clone(), passes));
        best.sort_by(|a, b| b.1.cmp(&a.1));
    }
}

fn render_best(best: &[(OnlineExpr, usize)], total: usize) -> Vec<(String, usize, usize)> {
    best.iter()
        .map(|(e, p)| (crate::ir::print_online_expr(e), *p, total))
        .collect()
}

fn timeout_diag(best: &[(OnlineExpr, usize)], total: usize) -> FailureDiag {
    FailureDiag { reason: "per-hole timeout exceeded".into(), best: render_best(best, total) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use crate::rfs::construct_rfs;

    fn cfg() -> SearchConfig {
        SearchConfig { test_count: 120, timeout: Duration::from_secs(20), ..Default::default() }
    }

    fn mean_rfs() -> Rfs {
        construct_rfs(&parse_program("(program (xs) (/ (foldl + 0 xs) (length xs)))").unwrap())
    }

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

    #[test]
    fn product_form_is_equivalent_for_mean() {
        // (y1*y2 + x) vs foldl(+,0,xs) under the mean RFS (paper's 3-entry).
        let phi = mean_rfs();
        let spec = parse_program("(program (xs) (foldl + 0 xs))").unwrap().body;
        let cand = OnlineExpr::apply2(
            Builtin::Add,
            OnlineExpr::apply2(Builtin::Mul, OnlineExpr::Accum(1), OnlineExpr::Accum(2)),
            OnlineExpr::NewElem,
        );
        assert!(check_equiv_mod_rfs(&phi, &cand, &spec, &cfg(), 7));
    }

    #[test]
    fn sum_accumulator_form_is_equivalent_for_variance() {
        // (s + x) with s = y4 under the variance RFS.
        let phi = variance_rfs();
        let spec = parse_program("(program (xs) (foldl + 0 xs))").unwrap().body;
        let cand = OnlineExpr::apply2(Builtin::Add, OnlineExpr::Accum(4), OnlineExpr::NewElem);
        assert!(check_equiv_mod_rfs(&phi, &cand, &spec, &cfg(), 7));
    }

    #[test]
    fn wrong_candidate_is_rejected() {
        // (y1 + x) vs foldl(+,0,xs) under mean: y1 is the mean, not the sum.
        let phi = mean_rfs();
        let spec = parse_program("(program (xs) (foldl + 0 xs))").unwrap().body;
        let cand = OnlineExpr::apply2(Builtin::Add, OnlineExpr::Accum(1), OnlineExpr::NewElem);
        assert!(!check_equiv_mod_rfs(&phi, &cand, &spec, &cfg(), 7));
    }

    #[test]
    fn enumeration_finds_sum_update() {
        let phi = variance_rfs();
        let spec = parse_program("(program (xs) (foldl + 0 xs))").unwrap().body;
        let (expr, method) = enum_synthesize(&phi, &spec, &[], &cfg(), 1).unwrap();
        assert_eq!(method, Method::Enumeration);
        // Verified with a fresh seed as well.
        assert!(check_equiv_mod_rfs(&phi, &expr, &spec, &cfg(), derive_seed(99, 4)));
    }

    #[test]
    fn unsatisfiable_budget_fails_with_diagnostics() {
        // A fourth-moment spec with no third-moment accumulator cannot be
        // completed; a tiny budget fails fast and reports candidates.
        let p = parse_program(
            "(program (xs) \
               (foldl (lambda (a v) (+ a (pow (- v (/ (foldl + 0 xs) (length xs))) 4))) 0 xs))",
        )
        .unwrap();
        let phi = construct_rfs(&p);
        let spec = phi.entry(1).clone();
        let small = SearchConfig {
            max_size: 4,
            timeout: Duration::from_secs(5),
            test_count: 40,
            ..Default::default()
        };
        let err = enum_synthesize(&phi, &spec, &[], &small, 2).unwrap_err();
        assert!(err.reason.contains("exhausted") || err.reason.contains("timeout"));
    }

    #[test]
    fn determinism_same_seed_same_result() {
        let phi = variance_rfs();
        let spec = parse_program("(program (xs) (foldl + 0 xs))").unwrap().body;
        let a = enum_synthesize(&phi, &spec, &[], &cfg(), 5).unwrap();
        let b = enum_synthesize(&phi, &spec, &[], &cfg(), 5).unwrap();
        assert_eq!(a.0, b.0);
    }
}
