//! Sparse multivariate polynomials over exact rationals, with the gcd
//! machinery needed for canonical rational-function forms.

use super::Atom;
use crate::rat::Rat;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A monomial: atom -> positive exponent. Ordered lexicographically over the
/// merged atom set (earlier atoms are more significant), which is compatible
/// with multiplication.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub BTreeMap<Atom, u32>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(BTreeMap::new())
    }

    pub fn var(a: Atom) -> Monomial {
        let mut m = BTreeMap::new();
        m.insert(a, 1);
        Monomial(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.0.get(a).copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (a, e) in &other.0 {
            *out.entry(a.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    pub fn try_div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = self.0.clone();
        for (a, e) in &other.0 {
            let cur = out.get_mut(a)?;
            if *cur < *e {
                return None;
            }
            *cur -= e;
            if *cur == 0 {
                out.remove(a);
            }
        }
        Some(Monomial(out))
    }

    /// Splits into (part over `vars`, part over the rest).
    pub fn split(&self, vars: &BTreeSet<Atom>) -> (Monomial, Monomial) {
        let mut inside = BTreeMap::new();
        let mut outside = BTreeMap::new();
        for (a, e) in &self.0 {
            if vars.contains(a) {
                inside.insert(a.clone(), *e);
            } else {
                outside.insert(a.clone(), *e);
            }
        }
        (Monomial(inside), Monomial(outside))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Lex over the union of atoms in ascending atom order.
        let mut keys: BTreeSet<&Atom> = self.0.keys().collect();
        keys.extend(other.0.keys());
        for k in keys {
            let a = self.0.get(k).copied().unwrap_or(0);
            let b = other.0.get(k).copied().unwrap_or(0);
            match a.cmp(&b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial: monomial -> nonzero rational coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn var(a: Atom) -> Poly {
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(a), Rat::one());
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&Monomial::one()) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            out.extend(m.0.keys().cloned());
        }
        out
    }

    pub fn mentions_any(&self, vars: &BTreeSet<Atom>) -> bool {
        self.terms.keys().any(|m| m.0.keys().any(|a| vars.contains(a)))
    }

    pub fn degree_in(&self, a: &Atom) -> u32 {
        self.terms.keys().map(|m| m.degree_in(a)).max().unwrap_or(0)
    }

    fn insert_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.insert_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn mul_rat(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn mul_mono(&self, m: &Monomial) -> Poly {
        Poly { terms: self.terms.iter().map(|(k, c)| (k.mul(m), c.clone())).collect() }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Leading (monomial, coefficient) under the lex order.
    pub fn leading(&self) -> Option<(&Monomial, &Rat)> {
        self.terms.iter().next_back()
    }

    pub fn eval(&self, vals: &BTreeMap<Atom, Rat>) -> Option<Rat> {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (a, e) in &m.0 {
                let v = vals.get(a)?;
                for _ in 0..*e {
                    term *= v;
                }
            }
            acc += term;
        }
        Some(acc)
    }

    /// Coefficients viewed as a univariate polynomial in `main`; index = degree.
    pub fn as_univariate(&self, main: &Atom) -> Vec<Poly> {
        let deg = self.degree_in(main) as usize;
        let mut out = vec![Poly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let d = m.degree_in(main) as usize;
            let mut rest = m.clone();
            rest.0.remove(main);
            out[d].insert_term(rest, c.clone());
        }
        out
    }

    pub fn from_univariate(main: &Atom, coeffs: Vec<Poly>) -> Poly {
        let mut out = Poly::zero();
        for (d, c) in coeffs.into_iter().enumerate() {
            let mut m = Monomial::one();
            if d > 0 {
                m.0.insert(main.clone(), d as u32);
            }
            out = out.add(&c.mul_mono(&m));
        }
        out
    }

    /// Exact division; None when not exact.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        let (dm, dc) = {
            let (m, c) = d.leading().unwrap();
            (m.clone(), c.clone())
        };
        while !rem.is_zero() {
            let (rm, rc) = {
                let (m, c) = rem.leading().unwrap();
                (m.clone(), c.clone())
            };
            let qm = rm.try_div(&dm)?;
            let qc = rc / &dc;
            let mut qt = Poly::zero();
            qt.insert_term(qm, qc);
            rem = rem.sub(&qt.mul(d));
            quot = quot.add(&qt);
        }
        Some(quot)
    }

    /// Scales to integer coefficients, primitive (coefficient gcd 1), with a
    /// positive leading coefficient. The zero polynomial stays zero.
    pub fn primitive_int(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut lcm = BigInt::one();
        for c in self.terms.values() {
            lcm = lcm.lcm(c.denom());
        }
        let mut gcd = BigInt::zero();
        for c in self.terms.values() {
            let scaled = c.numer() * (&lcm / c.denom());
            gcd = gcd.gcd(&scaled);
        }
        if gcd.is_zero() {
            gcd = BigInt::one();
        }
        let mut out = Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let scaled = c.numer() * (&lcm / c.denom());
                    (m.clone(), Rat::from_integer(scaled / &gcd))
                })
                .collect(),
        };
        if out.leading().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            out = out.neg();
        }
        out
    }
}

fn pseudo_rem(a: &Poly, b: &Poly, main: &Atom) -> Poly {
    let db = b.degree_in(main);
    let lcb = Poly::from_univariate(main, vec![b.as_univariate(main)[db as usize].clone()]);
    let mut r = a.clone();
    while !r.is_zero() {
        let dr = r.degree_in(main);
        if dr < db {
            break;
        }
        let lcr = r.as_univariate(main)[dr as usize].clone();
        let mut shift = Monomial::one();
        if dr > db {
            shift.0.insert(main.clone(), dr - db);
        }
        r = r.mul(&lcb).sub(&lcr.mul_mono(&shift).mul(b));
    }
    r
}

/// Content of `p` with respect to `main`: gcd of its univariate coefficients.
fn content_wrt(p: &Poly, main: &Atom) -> Poly {
    let coeffs = p.as_univariate(main);
    let mut g = Poly::zero();
    for c in coeffs {
        if !c.is_zero() {
            g = gcd(&g, &c);
        }
    }
    g
}

/// Multivariate gcd over the rationals (primitive pseudo-remainder sequence).
/// The result is primitive with integer coefficients and positive leading
/// coefficient; gcd of constants is 1.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive_int();
    }
    if b.is_zero() {
        return a.primitive_int();
    }
    let a = a.primitive_int();
    let b = b.primitive_int();
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one();
    }
    let mut atoms = a.atoms();
    atoms.extend(b.atoms());
    let main = atoms.into_iter().next_back().expect("nonconstant poly has atoms");

    let cont_a = content_wrt(&a, &main);
    let cont_b = content_wrt(&b, &main);
    let pp_a = a.exact_div(&cont_a).expect("content divides");
    let pp_b = b.exact_div(&cont_b).expect("content divides");
    let cont_g = gcd(&cont_a, &cont_b);

    let (mut f, mut g) = if pp_a.degree_in(&main) >= pp_b.degree_in(&main) {
        (pp_a, pp_b)
    } else {
        (pp_b, pp_a)
    };
    loop {
        if g.is_zero() {
            break;
        }
        if g.degree_in(&main) == 0 {
            f = Poly::one();
            break;
        }
        let r = pseudo_rem(&f, &g, &main);
        f = g;
        g = if r.is_zero() {
            Poly::zero()
        } else {
            r.exact_div(&content_wrt(&r, &main)).expect("content divides")
        };
    }
    cont_g.mul(&f).primitive_int()
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if m.is_one() {
                write!(f, "{}", crate::rat::render(c))?;
            } else {
                if !c.is_one() {
                    write!(f, "{}*", crate::rat::render(c))?;
                }
                let parts: Vec<String> = m
                    .0
                    .iter()
                    .map(|(a, e)| if *e == 1 { format!("{a}") } else { format!("{a}^{e}") })
                    .collect();
                write!(f, "{}", parts.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;

    fn x() -> Atom {
        Atom::Elem("x".into(), 1)
    }
    fn y() -> Atom {
        Atom::Elem("x".into(), 2)
    }

    #[test]
    fn monomial_order_is_multiplicative() {
        let a = Monomial::var(x());
        let b = Monomial::var(y());
        assert!(a > b, "earlier atom dominates");
        let c = Monomial::var(x());
        assert!(a.mul(&c) > b.mul(&c));
        // The case a plain derived order gets wrong: x^2 vs x*y.
        let x2 = a.mul(&a);
        let xy = a.mul(&b);
        assert!(x2 > xy);
    }

    #[test]
    fn arithmetic_basics() {
        let p = Poly::var(x()).add(&Poly::one()); // x + 1
        let q = Poly::var(x()).sub(&Poly::one()); // x - 1
        let prod = p.mul(&q); // x^2 - 1
        let expect = Poly::var(x()).pow(2).sub(&Poly::one());
        assert_eq!(prod, expect);
    }

    #[test]
    fn exact_division() {
        let p = Poly::var(x()).pow(2).sub(&Poly::one());
        let d = Poly::var(x()).sub(&Poly::one());
        let q = p.exact_div(&d).unwrap();
        assert_eq!(q, Poly::var(x()).add(&Poly::one()));
        assert!(p.exact_div(&Poly::var(x()).add(&Poly::constant(rat_int(2)))).is_none());
    }

    #[test]
    fn gcd_univariate() {
        // gcd(x^2 - 1, x^2 - 2x + 1) = x - 1.
        let a = Poly::var(x()).pow(2).sub(&Poly::one());
        let b = Poly::var(x())
            .pow(2)
            .sub(&Poly::var(x()).mul_rat(&rat_int(2)))
            .add(&Poly::one());
        assert_eq!(gcd(&a, &b), Poly::var(x()).sub(&Poly::one()));
    }

    #[test]
    fn gcd_multivariate() {
        // gcd((x+y)*x, (x+y)*y) = x + y.
        let s = Poly::var(x()).add(&Poly::var(y()));
        let a = s.mul(&Poly::var(x()));
        let b = s.mul(&Poly::var(y()));
        assert_eq!(gcd(&a, &b), s);
    }

    #[test]
    fn gcd_of_coprime_is_one() {
        let a = Poly::var(x()).add(&Poly::one());
        let b = Poly::var(y()).add(&Poly::constant(rat_int(2)));
        assert_eq!(gcd(&a, &b), Poly::one());
    }

    #[test]
    fn primitive_int_normalizes() {
        // (1/2)x - 3/4  ->  2x - 3.
        let p = Poly::var(x())
            .mul_rat(&crate::rat::rat(1, 2))
            .sub(&Poly::constant(crate::rat::rat(3, 4)));
        let q = p.primitive_int();
        assert_eq!(
            q,
            Poly::var(x()).mul_rat(&rat_int(2)).sub(&Poly::constant(rat_int(3)))
        );
    }
}
