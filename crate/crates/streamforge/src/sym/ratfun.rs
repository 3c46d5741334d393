//! Canonical multivariate rational functions: numerator/denominator pairs in
//! lowest terms with a monic denominator under the fixed monomial order. Two
//! rational functions denote the same polynomial identity iff the canonical
//! forms are equal.

use super::poly::{gcd, Poly};
use super::Atom;
use crate::rat::Rat;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    /// Division by the zero polynomial follows safe-division semantics and
    /// yields zero.
    pub fn new(num: Poly, den: Poly) -> RatFun {
        if den.is_zero() || num.is_zero() {
            return RatFun { num: Poly::zero(), den: Poly::one() };
        }
        let g = gcd(&num, &den);
        let mut num = num.exact_div(&g).expect("gcd divides numerator");
        let mut den = den.exact_div(&g).expect("gcd divides denominator");
        let lead = den.leading().expect("nonzero denominator").1.clone();
        num = num.mul_rat(&(Rat::from_integer(1.into()) / &lead));
        den = den.mul_rat(&(Rat::from_integer(1.into()) / &lead));
        RatFun { num, den }
    }

    pub fn from_poly(p: Poly) -> RatFun {
        RatFun { num: p, den: Poly::one() }
    }

    pub fn zero() -> RatFun {
        RatFun::from_poly(Poly::zero())
    }

    pub fn one() -> RatFun {
        RatFun::from_poly(Poly::one())
    }

    pub fn constant(c: Rat) -> RatFun {
        RatFun::from_poly(Poly::constant(c))
    }

    pub fn var(a: Atom) -> RatFun {
        RatFun::from_poly(Poly::var(a))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_constant(&self) -> Option<Rat> {
        if let (Some(n), Some(d)) = (self.num.as_constant(), self.den.as_constant()) {
            if !d.is_zero() {
                return Some(n / d);
            }
        }
        None
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = self.num.atoms();
        out.extend(self.den.atoms());
        out
    }

    pub fn add(&self, other: &RatFun) -> RatFun {
        RatFun::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &RatFun) -> RatFun {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFun {
        RatFun { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, other: &RatFun) -> RatFun {
        RatFun::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    /// Safe division: a zero divisor yields zero.
    pub fn div(&self, other: &RatFun) -> RatFun {
        if other.is_zero() {
            return RatFun::zero();
        }
        RatFun::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn pow(&self, e: u32) -> RatFun {
        RatFun { num: self.num.pow(e), den: self.den.pow(e) }
    }

    /// Exact evaluation with safe division: a vanishing denominator yields 0.
    /// None when some atom is unbound.
    pub fn eval(&self, vals: &BTreeMap<Atom, Rat>) -> Option<Rat> {
        let d = self.den.eval(vals)?;
        if d.is_zero() {
            return Some(Rat::zero());
        }
        let n = self.num.eval(vals)?;
        Some(n / d)
    }

    /// Evaluation that refuses points where the denominator vanishes.
    pub fn eval_strict(&self, vals: &BTreeMap<Atom, Rat>) -> Option<Rat> {
        let d = self.den.eval(vals)?;
        if d.is_zero() {
            return None;
        }
        let n = self.num.eval(vals)?;
        Some(n / d)
    }

    /// Substitutes atoms by rational functions; unmapped atoms stay symbolic.
    pub fn subst(&self, map: &BTreeMap<Atom, RatFun>) -> RatFun {
        let n = poly_subst(&self.num, map);
        let d = poly_subst(&self.den, map);
        n.div(&d)
    }

    pub fn rename_atoms(&self, map: &BTreeMap<Atom, Atom>) -> RatFun {
        RatFun { num: poly_rename(&self.num, map), den: poly_rename(&self.den, map) }
    }
}

pub fn poly_subst(p: &Poly, map: &BTreeMap<Atom, RatFun>) -> RatFun {
    let mut acc = RatFun::zero();
    for (m, c) in &p.terms {
        let mut term = RatFun::constant(c.clone());
        for (a, e) in &m.0 {
            let base = map.get(a).cloned().unwrap_or_else(|| RatFun::var(a.clone()));
            term = term.mul(&base.pow(*e));
        }
        acc = acc.add(&term);
    }
    acc
}

pub fn poly_rename(p: &Poly, map: &BTreeMap<Atom, Atom>) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &p.terms {
        let mut nm = super::poly::Monomial::one();
        for (a, e) in &m.0 {
            let na = map.get(a).cloned().unwrap_or_else(|| a.clone());
            *nm.0.entry(na).or_insert(0) += e;
        }
        out = out.add(&Poly { terms: BTreeMap::from([(nm, c.clone())]) });
    }
    out
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.as_constant().map(|c| c == Rat::from_integer(1.into())).unwrap_or(false) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn v(i: u32) -> RatFun {
        RatFun::var(Atom::Fresh(i))
    }

    #[test]
    fn canonical_cancellation() {
        // (x^2 - 1)/(x - 1) == x + 1.
        let x = v(1);
        let lhs = x.mul(&x).sub(&RatFun::one()).div(&x.sub(&RatFun::one()));
        let rhs = x.add(&RatFun::one());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn monic_denominator() {
        // 1 / (2x - 2) has denominator x - 1 after normalization.
        let x = v(1);
        let r = RatFun::one().div(&x.mul(&RatFun::constant(rat_int(2))).sub(&RatFun::constant(rat_int(2))));
        assert_eq!(r.den(), &Poly::var(Atom::Fresh(1)).sub(&Poly::one()));
        assert_eq!(r.num().as_constant().unwrap(), rat(1, 2));
    }

    #[test]
    fn division_by_symbolic_zero_is_zero() {
        let x = v(1);
        let zero = x.sub(&x);
        assert!(zero.is_zero());
        assert_eq!(RatFun::one().div(&zero), RatFun::zero());
    }

    #[test]
    fn canonical_equality_matches_evaluation() {
        // Two algebraic routes to the same function agree canonically, and
        // the canonical form agrees with evaluation at 20 random points.
        let a = v(1);
        let b = v(2);
        // (a+b)^2 - (a-b)^2 == 4ab
        let lhs = a.add(&b).pow(2).sub(&a.sub(&b).pow(2));
        let rhs = a.mul(&b).mul(&RatFun::constant(rat_int(4)));
        assert_eq!(lhs, rhs);

        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let vals = BTreeMap::from([
                (Atom::Fresh(1), rat_int(rng.gen_range(-9..9))),
                (Atom::Fresh(2), rat_int(rng.gen_range(-9..9))),
            ]);
            assert_eq!(lhs.eval(&vals), rhs.eval(&vals));
        }
    }

    #[test]
    fn subst_composes() {
        // (v1/v2) with v1 := y^2, v2 := y  gives  y.
        let r = v(1).div(&v(2));
        let y = RatFun::var(Atom::Accum(1));
        let map = BTreeMap::from([
            (Atom::Fresh(1), y.mul(&y)),
            (Atom::Fresh(2), y.clone()),
        ]);
        assert_eq!(r.subst(&map), y);
    }
}
