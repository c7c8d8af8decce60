//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::registry::{Var, VarRegistry};
use super::Q;

/// Exponent vector, ordered graded-lexicographically (total degree first,
/// then the exponent of the earliest registered variable, and so on).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    deg: u32,
    exps: Box<[u16]>,
}

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Self {
            deg: 0,
            exps: vec![0; nvars].into_boxed_slice(),
        }
    }

    pub fn from_exps(exps: Vec<u16>) -> Self {
        let deg = exps.iter().map(|&e| e as u32).sum();
        Self {
            deg,
            exps: exps.into_boxed_slice(),
        }
    }

    pub fn var(nvars: usize, v: Var, e: u16) -> Self {
        let mut exps = vec![0; nvars];
        exps[v.index()] = e;
        Self::from_exps(exps)
    }

    pub fn degree(&self) -> u32 {
        self.deg
    }

    pub fn exps(&self) -> &[u16] {
        &self.exps
    }

    pub fn exp(&self, v: Var) -> u16 {
        self.exps[v.index()]
    }

    pub fn is_one(&self) -> bool {
        self.deg == 0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let exps: Vec<u16> = self
            .exps
            .iter()
            .zip(other.exps.iter())
            .map(|(a, b)| a + b)
            .collect();
        Monomial {
            deg: self.deg + other.deg,
            exps: exps.into_boxed_slice(),
        }
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.deg <= other.deg && self.exps.iter().zip(other.exps.iter()).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming divisibility.
    pub fn div_into(&self, other: &Monomial) -> Monomial {
        let exps: Vec<u16> = other
            .exps
            .iter()
            .zip(self.exps.iter())
            .map(|(a, b)| a - b)
            .collect();
        Monomial {
            deg: other.deg - self.deg,
            exps: exps.into_boxed_slice(),
        }
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial::from_exps(
            self.exps
                .iter()
                .zip(other.exps.iter())
                .map(|(a, b)| *a.min(b))
                .collect(),
        )
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial::from_exps(
            self.exps
                .iter()
                .zip(other.exps.iter())
                .map(|(a, b)| *a.max(b))
                .collect(),
        )
    }

    fn with_exp(&self, v: Var, e: u16) -> Monomial {
        let mut exps = self.exps.to_vec();
        exps[v.index()] = e;
        Monomial::from_exps(exps)
    }
}

/// Sparse polynomial over `Q`; zero coefficients are never stored.
#[derive(Clone, Debug)]
pub struct MPoly {
    reg: Arc<VarRegistry>,
    terms: BTreeMap<Monomial, Q>,
}

impl PartialEq for MPoly {
    fn eq(&self, other: &Self) -> bool {
        same_registry(&self.reg, &other.reg) && self.terms == other.terms
    }
}

impl Eq for MPoly {}

pub(crate) fn same_registry(a: &Arc<VarRegistry>, b: &Arc<VarRegistry>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl MPoly {
    pub fn zero(reg: &Arc<VarRegistry>) -> Self {
        Self {
            reg: reg.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(reg: &Arc<VarRegistry>) -> Self {
        Self::constant(reg, Q::one())
    }

    pub fn constant(reg: &Arc<VarRegistry>, c: Q) -> Self {
        let mut p = Self::zero(reg);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(reg.len()), c);
        }
        p
    }

    pub fn from_int(reg: &Arc<VarRegistry>, c: i64) -> Self {
        Self::constant(reg, Q::from_integer(BigInt::from(c)))
    }

    pub fn var(reg: &Arc<VarRegistry>, v: Var) -> Self {
        Self::monomial(reg, Monomial::var(reg.len(), v, 1), Q::one())
    }

    pub fn monomial(reg: &Arc<VarRegistry>, m: Monomial, c: Q) -> Self {
        let mut p = Self::zero(reg);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Q)>>(
        reg: &Arc<VarRegistry>,
        terms: I,
    ) -> Self {
        let mut p = Self::zero(reg);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn registry(&self) -> &Arc<VarRegistry> {
        &self.reg
    }

    pub fn nvars(&self) -> usize {
        self.reg.len()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Q)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.constant_term().is_one()
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn constant_term(&self) -> Q {
        self.terms
            .get(&Monomial::one(self.nvars()))
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn coeff(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Q)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> Q {
        self.leading_term()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Q::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Q) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(&self.reg);
        }
        MPoly {
            reg: self.reg.clone(),
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Q) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(&self.reg);
        }
        MPoly {
            reg: self.reg.clone(),
            terms: self.terms.iter().map(|(k, v)| (k.mul(m), v * c)).collect(),
        }
    }

    /// Divides every term by `m`; callers guarantee divisibility.
    pub fn div_monomial(&self, m: &Monomial) -> MPoly {
        MPoly {
            reg: self.reg.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (m.div_into(k), v.clone()))
                .collect(),
        }
    }

    /// Largest monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one(self.nvars());
        };
        it.fold(first.clone(), |acc, m| acc.gcd(m))
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut result = MPoly::one(&self.reg);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u16 {
        self.terms.keys().map(|m| m.exp(v)).max().unwrap_or(0)
    }

    /// Total degree counting only the listed variables.
    pub fn degree_in_vars(&self, vars: &[Var]) -> u32 {
        self.terms
            .keys()
            .map(|m| vars.iter().map(|&v| m.exp(v) as u32).sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exp(v) > 0)
    }

    /// Per-variable maximal exponents.
    pub fn degree_vector(&self) -> Vec<u16> {
        let mut d = vec![0u16; self.nvars()];
        for m in self.terms.keys() {
            for (slot, &e) in d.iter_mut().zip(m.exps()) {
                *slot = (*slot).max(e);
            }
        }
        d
    }

    /// Coefficients of `self` viewed as a polynomial in `v`; entry `k`
    /// multiplies `v^k`.
    pub fn coefficients_in(&self, v: Var) -> Vec<MPoly> {
        let deg = self.degree_in(v) as usize;
        let mut out = vec![MPoly::zero(&self.reg); deg + 1];
        for (m, c) in &self.terms {
            let k = m.exp(v) as usize;
            out[k].terms.insert(m.with_exp(v, 0), c.clone());
        }
        out
    }

    pub fn from_coefficients(v: Var, coeffs: &[MPoly]) -> MPoly {
        let reg = coeffs[0].reg.clone();
        let mut p = MPoly::zero(&reg);
        for (k, c) in coeffs.iter().enumerate() {
            for (m, q) in &c.terms {
                p.add_term(m.with_exp(v, m.exp(v) + k as u16), q.clone());
            }
        }
        p
    }

    pub fn derivative(&self, v: Var) -> MPoly {
        let mut p = MPoly::zero(&self.reg);
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e > 0 {
                p.add_term(m.with_exp(v, e - 1), c * Q::from_integer(BigInt::from(e)));
            }
        }
        p
    }

    /// Antiderivative in `v` with zero integration constant.
    pub fn integrate(&self, v: Var) -> MPoly {
        let mut p = MPoly::zero(&self.reg);
        for (m, c) in &self.terms {
            let e = m.exp(v) + 1;
            p.add_term(m.with_exp(v, e), c / Q::from_integer(BigInt::from(e)));
        }
        p
    }

    /// Exact quotient `self / divisor`, or `None` when the division leaves a
    /// remainder.
    pub fn exact_div(&self, divisor: &MPoly) -> Option<MPoly> {
        assert!(!divisor.is_zero(), "exact_div by zero polynomial");
        if self.is_zero() {
            return Some(MPoly::zero(&self.reg));
        }
        let (lm, lc) = divisor
            .leading_term()
            .map(|(m, c)| (m.clone(), c.clone()))?;
        if divisor.is_monomial() {
            if !self.terms.keys().all(|m| lm.divides(m)) {
                return None;
            }
            let inv = lc.recip();
            return Some(MPoly {
                reg: self.reg.clone(),
                terms: self
                    .terms
                    .iter()
                    .map(|(m, c)| (lm.div_into(m), c * &inv))
                    .collect(),
            });
        }
        // Cheap rejection: per-variable degree bounds.
        let dd = divisor.degree_vector();
        let sd = self.degree_vector();
        if dd.iter().zip(&sd).any(|(a, b)| a > b) {
            return None;
        }
        let mut rem = self.clone();
        let mut quot = MPoly::zero(&self.reg);
        while let Some((m, c)) = rem.leading_term() {
            if !lm.divides(m) {
                return None;
            }
            let qm = lm.div_into(m);
            let qc = c / &lc;
            rem = &rem - &divisor.mul_monomial(&qm, &qc);
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Scales so that the leading coefficient is one; returns the factor
    /// removed.
    pub fn monic(&self) -> (Q, MPoly) {
        let lc = self.leading_coeff();
        if lc.is_zero() || lc.is_one() {
            return (Q::one(), self.clone());
        }
        (lc.clone(), self.scale(&lc.recip()))
    }

    /// Rational `r` such that `r * self` has coprime integer coefficients
    /// with positive leading coefficient.
    pub fn integer_normalizer(&self) -> Q {
        use num_integer::Integer;
        let mut den_lcm = BigInt::one();
        let mut num_gcd = BigInt::zero();
        for c in self.terms.values() {
            den_lcm = den_lcm.lcm(c.denom());
            num_gcd = num_gcd.gcd(c.numer());
        }
        if num_gcd.is_zero() {
            return Q::one();
        }
        let mut r = Q::new(den_lcm, num_gcd);
        if self.leading_coeff().is_negative() {
            r = -r;
        }
        r
    }

    /// Returns `self` with every coefficient passed through `f`; zero results
    /// are dropped.
    pub fn map_coefficients(&self, mut f: impl FnMut(&Q) -> Q) -> MPoly {
        MPoly::from_terms(&self.reg, self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    pub fn retain_terms(&self, mut keep: impl FnMut(&Monomial) -> bool) -> MPoly {
        MPoly {
            reg: self.reg.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    fn check_reg(&self, other: &MPoly) {
        assert!(
            same_registry(&self.reg, &other.reg),
            "polynomials over different registries"
        );
    }
}

impl Add for &MPoly {
    type Output = MPoly;
    fn add(self, rhs: &MPoly) -> MPoly {
        self.check_reg(rhs);
        let (big, small) = if self.terms.len() >= rhs.terms.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MPoly {
    type Output = MPoly;
    fn sub(self, rhs: &MPoly) -> MPoly {
        self.check_reg(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &MPoly {
    type Output = MPoly;
    fn mul(self, rhs: &MPoly) -> MPoly {
        self.check_reg(rhs);
        let mut out = MPoly::zero(&self.reg);
        if self.is_zero() || rhs.is_zero() {
            return out;
        }
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        MPoly {
            reg: self.reg.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for MPoly {
            type Output = MPoly;
            fn $f(self, rhs: MPoly) -> MPoly {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&MPoly> for MPoly {
            type Output = MPoly;
            fn $f(self, rhs: &MPoly) -> MPoly {
                (&self).$f(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::q;

    fn reg() -> Arc<VarRegistry> {
        VarRegistry::standard()
    }

    fn v(name: &str) -> MPoly {
        let r = reg();
        MPoly::var(&r, r.var(name).unwrap())
    }

    #[test]
    fn grlex_order_puts_higher_degree_last() {
        let p = &(&v("x") * &v("x")) + &v("y").pow(3);
        let (lm, _) = p.leading_term().unwrap();
        assert_eq!(lm.degree(), 3);
        // same degree: earlier variable wins
        let p = &v("x") + &v("y");
        let r = reg();
        assert_eq!(p.leading_term().unwrap().0.exp(r.var("x").unwrap()), 1);
    }

    #[test]
    fn exact_division_and_rejection() {
        let x = v("x");
        let y = v("y");
        let a = &(&x + &y) * &(&x - &y);
        assert_eq!(a.exact_div(&(&x + &y)).unwrap(), &x - &y);
        assert!(a.exact_div(&(&x + &MPoly::from_int(&reg(), 2))).is_none());
    }

    #[test]
    fn derivative_and_integral_round_trip() {
        let r = reg();
        let x = r.var("x").unwrap();
        let p = &v("x").pow(3).scale(&q(5, 2)) + &(&v("x") * &v("z"));
        assert_eq!(p.integrate(x).derivative(x), p);
    }

    #[test]
    fn univariate_view_round_trip() {
        let r = reg();
        let y = r.var("y").unwrap();
        let p = &(&v("x") * &v("y").pow(2)) + &(&v("w") - &v("y"));
        let cs = p.coefficients_in(y);
        assert_eq!(cs.len(), 3);
        assert_eq!(MPoly::from_coefficients(y, &cs), p);
    }
}
