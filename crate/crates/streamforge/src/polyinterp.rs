//! Template completion by polynomial interpolation: when the RFS carries a
//! length accumulator `n`, template unknowns are recovered as univariate
//! polynomials in `n` by solving an exact linear system per sampled length
//! and interpolating across lengths.

use crate::enumsynth::{check_equiv_mod_rfs, derive_seed, SearchConfig};
use crate::ir::{OfflineExpr, OnlineExpr};
use crate::mine::{Coeff, Template};
use crate::rat::{rat_int, value_grid, Rat};
use crate::rfs::Rfs;
use crate::sym::ratfun::RatFun;
use crate::sym::term::{symterm_to_online, SymTerm};
use crate::sym::Atom;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

/// Sampling plan: how many lengths to sample (11, so recovered polynomials
/// can reach degree 10), where to start, retries per length on singular
/// systems, and how far the plan may extend past structurally degenerate
/// lengths before giving up.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    pub length_count: usize,
    pub first_length: u32,
    pub retries: usize,
    pub max_length: u32,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan { length_count: 11, first_length: 1, retries: 5, max_length: 33 }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InterpError {
    #[error("template solving is not applicable (no length accumulator or no unknowns)")]
    NotApplicable,
    #[error("points cannot be sampled: persistent singular systems")]
    CannotSample,
    #[error("duplicate abscissae in interpolation input")]
    DuplicateAbscissae,
    #[error("need at least two points to interpolate")]
    TooFewPoints,
}

/// Points on each unknown's polynomial: unknown id -> [(length, value)].
pub type UnknownPoints = BTreeMap<u32, Vec<(u32, Rat)>>;

fn mono_value(
    mono: &crate::sym::poly::Monomial,
    accums: &[Rat],
    x: &Rat,
    args: &BTreeMap<String, Rat>,
) -> Option<Rat> {
    let mut acc = Rat::one();
    for (a, e) in &mono.0 {
        let base = match a {
            Atom::Accum(i) => accums.get(*i - 1)?.clone(),
            Atom::NewElem => x.clone(),
            Atom::Arg(name) => args.get(name)?.clone(),
            _ => return None,
        };
        for _ in 0..*e {
            acc *= &base;
        }
    }
    Some(acc)
}

/// Solves the per-length linear systems and returns interpolation points for
/// each unknown. Requires a length accumulator in the RFS.
pub fn sample_points(
    spec: &OfflineExpr,
    phi: &Rfs,
    template: &Template,
    plan: &SamplePlan,
    seed: u64,
) -> Result<UnknownPoints, InterpError> {
    if phi.length_accum().is_none() {
        return Err(InterpError::NotApplicable);
    }
    let ids = template.unknown_ids();
    let m = ids.len();
    if m == 0 {
        return Err(InterpError::NotApplicable);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = value_grid();
    let mut points: UnknownPoints = ids.iter().map(|id| (*id, Vec::new())).collect();
    let mut collected = 0usize;
    let mut length = plan.first_length;
    while collected < plan.length_count {
        if length > plan.max_length {
            return Err(InterpError::CannotSample);
        }
        let mut solved = None;
        for _ in 0..plan.retries {
            if let Some(sol) = try_length(spec, phi, template, &ids, length, &grid, &mut rng) {
                solved = Some(sol);
                break;
            }
        }
        if let Some(sol) = solved {
            for (id, v) in ids.iter().zip(sol) {
                points.get_mut(id).expect("id present").push((length, v));
            }
            collected += 1;
        }
        length += 1;
    }
    Ok(points)
}

/// One length: sample `m` distinct lists, build the m x m system over the
/// unknowns, solve exactly. None when the draw is singular or evaluation
/// fails.
fn try_length(
    spec: &OfflineExpr,
    phi: &Rfs,
    template: &Template,
    ids: &[u32],
    length: u32,
    grid: &[Rat],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Rat>> {
    let m = ids.len();
    let mut lists: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut tries = 0;
    while lists.len() < m && tries < m * 20 {
        tries += 1;
        let xs: Vec<Rat> =
            (0..length).map(|_| grid[rng.gen_range(0..grid.len())].clone()).collect();
        if !lists.contains(&xs) {
            lists.push(xs);
        }
    }
    if lists.len() < m {
        return None;
    }
    let mut matrix: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rat> = Vec::with_capacity(m);
    for xs in &lists {
        let x = grid[rng.gen_range(0..grid.len())].clone();
        let args: BTreeMap<String, Rat> = phi
            .extra_args
            .iter()
            .map(|a| (a.clone(), grid[rng.gen_range(0..grid.len())].clone()))
            .collect();
        let accums: Option<Vec<Rat>> = phi
            .entries
            .iter()
            .map(|e| crate::eval::eval_offline_expr(e, xs, &args, None).ok())
            .collect();
        let accums = accums?;
        let mut extended = xs.clone();
        extended.push(x.clone());
        let value = crate::eval::eval_offline_expr(spec, &extended, &args, None).ok()?;

        // Row: sum over unknown columns = value*den_known - num_known.
        let mut row = vec![Rat::zero(); m];
        let mut num_known = Rat::zero();
        let mut den_known = Rat::zero();
        for term in &template.num {
            let mv = mono_value(&term.mono, &accums, &x, &args)?;
            match &term.coeff {
                Coeff::Known(c) => num_known += c * &mv,
                Coeff::Unknown { id, negated } => {
                    let col = ids.iter().position(|i| i == id)?;
                    let signed = if *negated { -mv } else { mv };
                    row[col] += signed;
                }
            }
        }
        for term in &template.den {
            let mv = mono_value(&term.mono, &accums, &x, &args)?;
            match &term.coeff {
                Coeff::Known(c) => den_known += c * &mv,
                Coeff::Unknown { id, negated } => {
                    let col = ids.iter().position(|i| i == id)?;
                    let signed = if *negated { -mv } else { mv };
                    row[col] -= &value * &signed;
                }
            }
        }
        matrix.push(row);
        rhs.push(&value * &den_known - num_known);
    }
    gauss_solve(matrix, rhs)
}

/// Exact Gaussian elimination; None when the matrix is singular.
pub fn gauss_solve(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for r in 0..n {
            if r == col {
                continue;
            }
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &p;
            for c in col..n {
                let sub = &factor * &a[col][c];
                a[r][c] -= sub;
            }
            let sub = &factor * &b[col];
            b[r] -= sub;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Minimal-degree interpolating polynomial through exact points, as
/// coefficients in ascending degree (trailing zeros trimmed). Newton's
/// divided differences over the rationals.
pub fn interpolate(points: &[(u32, Rat)]) -> Result<Vec<Rat>, InterpError> {
    if points.len() < 2 {
        return Err(InterpError::TooFewPoints);
    }
    let xs: Vec<Rat> = points.iter().map(|(l, _)| rat_int(*l as i64)).collect();
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            if xs[i] == xs[j] {
                return Err(InterpError::DuplicateAbscissae);
            }
        }
    }
    // Divided-difference table.
    let mut dd: Vec<Rat> = points.iter().map(|(_, v)| v.clone()).collect();
    let n = dd.len();
    for level in 1..n {
        for i in (level..n).rev() {
            let num = &dd[i] - &dd[i - 1];
            let den = &xs[i] - &xs[i - level];
            dd[i] = num / den;
        }
    }
    // Expand Newton form into monomial coefficients.
    let mut coeffs: Vec<Rat> = vec![Rat::zero()];
    let mut basis: Vec<Rat> = vec![Rat::one()]; // Π (X - x_j)
    for (i, c) in dd.iter().enumerate() {
        if coeffs.len() < basis.len() {
            coeffs.resize(basis.len(), Rat::zero());
        }
        for (k, bcoef) in basis.iter().enumerate() {
            coeffs[k] += c * bcoef;
        }
        if i + 1 < n {
            // basis *= (X - x_i)
            let mut next = vec![Rat::zero(); basis.len() + 1];
            for (k, bcoef) in basis.iter().enumerate() {
                next[k + 1] += bcoef;
                next[k] -= &xs[i] * bcoef;
            }
            basis = next;
        }
    }
    while coeffs.len() > 1 && coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
        coeffs.pop();
    }
    Ok(coeffs)
}

/// Completes a template by interpolating each unknown as a polynomial in the
/// length accumulator, gated by a fresh-seed equivalence check.
pub fn solve_template(
    spec: &OfflineExpr,
    phi: &Rfs,
    template: &Template,
    plan: &SamplePlan,
    cfg: &SearchConfig,
    salt: u64,
) -> Option<OnlineExpr> {
    let n_idx = phi.length_accum()?;
    if template.is_exact() {
        // Nothing to interpolate: gate the template itself.
        let cand = template.instantiate_online(&BTreeMap::new())?;
        let seed = derive_seed(derive_seed(cfg.rng_seed, salt), 0xBEEF);
        return check_equiv_mod_rfs(phi, &cand, spec, cfg, seed).then_some(cand);
    }
    let sample_seed = derive_seed(derive_seed(cfg.rng_seed, salt), 0xA11);
    let points = sample_points(spec, phi, template, plan, sample_seed).ok()?;
    let n = RatFun::var(Atom::Accum(n_idx));
    let mut assign: BTreeMap<u32, RatFun> = BTreeMap::new();
    for (id, pts) in &points {
        let coeffs = interpolate(pts).ok()?;
        let mut poly = RatFun::zero();
        for (deg, c) in coeffs.iter().enumerate() {
            poly = poly.add(&RatFun::constant(c.clone()).mul(&n.pow(deg as u32)));
        }
        assign.insert(*id, poly);
    }
    let rf = template.instantiate_ratfun(&assign)?;
    let cand = symterm_to_online(&SymTerm::Rat(rf)).ok()?;
    let fresh = derive_seed(derive_seed(cfg.rng_seed, salt), 0xF12E5);
    check_equiv_mod_rfs(phi, &cand, spec, cfg, fresh).then_some(cand)
}
