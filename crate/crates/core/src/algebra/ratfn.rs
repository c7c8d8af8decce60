//! Normalized rational functions: the scalar type of the symbolic layer.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Zero};

use super::gcd::gcd;
use super::poly::{MPoly, Monomial};
use super::registry::{Var, VarRegistry};
use super::{AlgebraError, Q};

/// `num / den` with `gcd(num, den) = 1` and a monic denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFn {
    num: MPoly,
    den: MPoly,
}

/// Simultaneous substitution map.
pub type Bindings = BTreeMap<Var, RatFn>;

impl RatFn {
    pub fn zero(reg: &Arc<VarRegistry>) -> Self {
        Self {
            num: MPoly::zero(reg),
            den: MPoly::one(reg),
        }
    }

    pub fn one(reg: &Arc<VarRegistry>) -> Self {
        Self::from_poly(MPoly::one(reg))
    }

    pub fn constant(reg: &Arc<VarRegistry>, c: Q) -> Self {
        Self::from_poly(MPoly::constant(reg, c))
    }

    pub fn from_int(reg: &Arc<VarRegistry>, c: i64) -> Self {
        Self::from_poly(MPoly::from_int(reg, c))
    }

    pub fn var(reg: &Arc<VarRegistry>, v: Var) -> Self {
        Self::from_poly(MPoly::var(reg, v))
    }

    /// Symbol by name in the given registry.
    pub fn symbol(reg: &Arc<VarRegistry>, name: &str) -> Result<Self, AlgebraError> {
        Ok(Self::var(reg, reg.var(name)?))
    }

    pub fn from_poly(p: MPoly) -> Self {
        let den = MPoly::one(p.registry());
        Self { num: p, den }
    }

    /// Builds `num / den` and normalizes.
    pub fn new(num: MPoly, den: MPoly) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: MPoly, den: MPoly) -> Self {
        if num.is_zero() {
            return Self::zero(num.registry());
        }
        if den.is_constant() {
            let c = den.constant_term();
            if c.is_one() {
                return Self { num, den };
            }
            let inv = c.recip();
            return Self {
                num: num.scale(&inv),
                den: MPoly::one(num.registry()),
            };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides"),
                den.exact_div(&g).expect("gcd divides"),
            )
        };
        Self::scaled(num, den)
    }

    fn scaled(num: MPoly, den: MPoly) -> Self {
        let lc = den.leading_coeff();
        if lc.is_one() {
            Self { num, den }
        } else {
            let inv = lc.recip();
            Self {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn registry(&self) -> &Arc<VarRegistry> {
        self.num.registry()
    }

    pub fn numer(&self) -> &MPoly {
        &self.num
    }

    pub fn denom(&self) -> &MPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    /// True when the denominator is 1.
    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_poly(&self) -> Option<&MPoly> {
        self.is_polynomial().then_some(&self.num)
    }

    pub fn is_constant(&self) -> bool {
        self.is_polynomial() && self.num.is_constant()
    }

    pub fn constant_value(&self) -> Option<Q> {
        self.is_constant().then(|| self.num.constant_term())
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    pub fn scale(&self, c: &Q) -> RatFn {
        if c.is_zero() {
            return RatFn::zero(self.registry());
        }
        RatFn {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn checked_div(&self, rhs: &RatFn) -> Result<RatFn, AlgebraError> {
        Ok(self * &rhs.inv()?)
    }

    pub fn inv(&self) -> Result<RatFn, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        Ok(Self::scaled(self.den.clone(), self.num.clone()))
    }

    pub fn pow(&self, e: i32) -> Result<RatFn, AlgebraError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let n = e.unsigned_abs();
        // Coprime parts stay coprime under powers.
        Ok(RatFn {
            num: base.num.pow(n),
            den: base.den.pow(n),
        })
    }

    /// Exact partial derivative.
    pub fn derivative(&self, v: Var) -> RatFn {
        let dn = self.num.derivative(v);
        if self.den.is_one() {
            return RatFn::from_poly(dn);
        }
        let dd = self.den.derivative(v);
        if dd.is_zero() {
            return RatFn::normalized(dn, self.den.clone());
        }
        // (n/d)' = (n' d - n d') / d^2; with g = gcd(d, d') one factor of g
        // cancels, which keeps the final gcd small.
        let g = gcd(&self.den, &dd);
        let d_over_g = self.den.exact_div(&g).expect("gcd divides");
        let dd_over_g = dd.exact_div(&g).expect("gcd divides");
        let num = &(&dn * &d_over_g) - &(&self.num * &dd_over_g);
        let den = &self.den * &d_over_g;
        RatFn::normalized(num, den)
    }

    /// Simultaneous substitution. Symbols absent from `bindings` stay as they
    /// are. Fails when the denominator becomes identically zero.
    pub fn substitute(&self, bindings: &Bindings) -> Result<RatFn, AlgebraError> {
        if bindings.is_empty() || !bindings.keys().any(|&v| self.contains_var(v)) {
            return Ok(self.clone());
        }
        let mut cache = PowerCache::new(bindings);
        let num = cache.eval(&self.num);
        if self.den.is_one() {
            return Ok(num);
        }
        let den = cache.eval(&self.den);
        if den.is_zero() {
            let offending: Vec<&str> = bindings
                .keys()
                .filter(|&&v| self.den.contains_var(v))
                .map(|&v| self.registry().name(v))
                .collect();
            return Err(AlgebraError::ZeroDenominator(offending.join(", ")));
        }
        num.checked_div(&den)
    }

    /// Convenience wrapper binding a single symbol.
    pub fn substitute_one(&self, v: Var, value: &RatFn) -> Result<RatFn, AlgebraError> {
        let mut b = Bindings::new();
        b.insert(v, value.clone());
        self.substitute(&b)
    }
}

/// Evaluates polynomials under a substitution, sharing powers of the bound
/// values across terms.
struct PowerCache<'a> {
    bindings: &'a Bindings,
    powers: BTreeMap<(Var, u16), RatFn>,
}

impl<'a> PowerCache<'a> {
    fn new(bindings: &'a Bindings) -> Self {
        Self {
            bindings,
            powers: BTreeMap::new(),
        }
    }

    fn power(&mut self, v: Var, e: u16) -> RatFn {
        if let Some(p) = self.powers.get(&(v, e)) {
            return p.clone();
        }
        let base = &self.bindings[&v];
        let p = if e == 1 {
            base.clone()
        } else {
            let half = self.power(v, e / 2);
            let sq = &half * &half;
            if e % 2 == 1 {
                &sq * base
            } else {
                sq
            }
        };
        self.powers.insert((v, e), p.clone());
        p
    }

    fn eval(&mut self, p: &MPoly) -> RatFn {
        let reg = p.registry().clone();
        let n = reg.len();
        // Group terms by their bound part so each distinct product of powers
        // is built once; the unbound part stays polynomial.
        let mut groups: BTreeMap<Vec<(Var, u16)>, MPoly> = BTreeMap::new();
        for (m, c) in p.terms() {
            let mut bound = Vec::new();
            let mut free = m.exps().to_vec();
            for (i, e) in m.exps().iter().enumerate() {
                let v = Var(i as u16);
                if *e > 0 && self.bindings.contains_key(&v) {
                    bound.push((v, *e));
                    free[i] = 0;
                }
            }
            debug_assert_eq!(free.len(), n);
            groups
                .entry(bound)
                .or_insert_with(|| MPoly::zero(&reg))
                .add_term(Monomial::from_exps(free), c.clone());
        }
        // Sum polynomial-valued groups first; rational ones are combined over
        // their common denominator where possible.
        let mut poly_acc = MPoly::zero(&reg);
        let mut by_den: Vec<(MPoly, MPoly)> = Vec::new();
        for (bound, coeff) in groups {
            let mut val = RatFn::from_poly(coeff);
            for (v, e) in bound {
                val = &val * &self.power(v, e);
                if val.is_zero() {
                    break;
                }
            }
            if val.is_polynomial() {
                poly_acc = &poly_acc + &val.num;
            } else if let Some(slot) = by_den.iter_mut().find(|(d, _)| *d == val.den) {
                slot.1 = &slot.1 + &val.num;
            } else {
                by_den.push((val.den, val.num));
            }
        }
        let mut acc = RatFn::from_poly(poly_acc);
        for (den, num) in by_den {
            acc = &acc + &RatFn::normalized(num, den);
        }
        acc
    }
}

impl Add for &RatFn {
    type Output = RatFn;
    fn add(self, rhs: &RatFn) -> RatFn {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RatFn::from_poly(&self.num + &rhs.num);
        }
        if self.den == rhs.den {
            return RatFn::normalized(&self.num + &rhs.num, self.den.clone());
        }
        if rhs.den.is_one() {
            return RatFn::scaled(&self.num + &(&rhs.num * &self.den), self.den.clone());
        }
        if self.den.is_one() {
            return RatFn::scaled(&(&self.num * &rhs.den) + &rhs.num, rhs.den.clone());
        }
        // a/b + c/d with g = gcd(b, d): only factors of g can cancel.
        let g = gcd(&self.den, &rhs.den);
        let b1 = self.den.exact_div(&g).expect("gcd divides");
        let d1 = rhs.den.exact_div(&g).expect("gcd divides");
        let num = &(&self.num * &d1) + &(&rhs.num * &b1);
        if num.is_zero() {
            return RatFn::zero(self.registry());
        }
        let den = &b1 * &rhs.den;
        if g.is_constant() {
            return RatFn::scaled(num, den);
        }
        let h = gcd(&num, &g);
        if h.is_constant() {
            RatFn::scaled(num, den)
        } else {
            RatFn::scaled(
                num.exact_div(&h).expect("divides"),
                den.exact_div(&h).expect("divides"),
            )
        }
    }
}

impl Sub for &RatFn {
    type Output = RatFn;
    fn sub(self, rhs: &RatFn) -> RatFn {
        self + &(-rhs)
    }
}

impl Mul for &RatFn {
    type Output = RatFn;
    fn mul(self, rhs: &RatFn) -> RatFn {
        if self.is_zero() || rhs.is_zero() {
            return RatFn::zero(self.registry());
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RatFn::from_poly(&self.num * &rhs.num);
        }
        // (a/b)(c/d): cancel gcd(a, d) and gcd(c, b) crosswise.
        let (a, d) = cancel_pair(&self.num, &rhs.den);
        let (c, b) = cancel_pair(&rhs.num, &self.den);
        RatFn::scaled(&a * &c, &b * &d)
    }
}

fn cancel_pair(n: &MPoly, d: &MPoly) -> (MPoly, MPoly) {
    if d.is_one() || n.is_constant() {
        return (n.clone(), d.clone());
    }
    let g = gcd(n, d);
    if g.is_constant() {
        (n.clone(), d.clone())
    } else {
        (
            n.exact_div(&g).expect("divides"),
            d.exact_div(&g).expect("divides"),
        )
    }
}

impl Neg for &RatFn {
    type Output = RatFn;
    fn neg(self) -> RatFn {
        RatFn {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for RatFn {
            type Output = RatFn;
            fn $f(self, rhs: RatFn) -> RatFn {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&RatFn> for RatFn {
            type Output = RatFn;
            fn $f(self, rhs: &RatFn) -> RatFn {
                (&self).$f(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for RatFn {
    type Output = RatFn;
    fn neg(self) -> RatFn {
        -&self
    }
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::expr::print_expr(self))
    }
}
