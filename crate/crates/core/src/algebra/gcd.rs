//! Multivariate GCD over `Q`.
//!
//! Recursive dense-in-one-variable view: content/primitive-part split, then a
//! primitive pseudo-remainder sequence. Instance sizes in this crate are small
//! (degree ≤ ~20, a handful of active variables), so no modular machinery.

use num_bigint::BigInt;
use num_traits::{One, Pow};

use super::poly::{MPoly, Monomial};
use super::registry::Var;
use super::Q;

/// Monic greatest common divisor; `gcd(0, 0) = 0`.
pub fn gcd(a: &MPoly, b: &MPoly) -> MPoly {
    if a.is_zero() {
        return b.monic().1;
    }
    if b.is_zero() {
        return a.monic().1;
    }
    if a.is_constant() || b.is_constant() {
        return MPoly::one(a.registry());
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mg = ma.gcd(&mb);
    let a1 = if ma.is_one() {
        a.clone()
    } else {
        a.div_monomial(&ma)
    };
    let b1 = if mb.is_one() {
        b.clone()
    } else {
        b.div_monomial(&mb)
    };
    let g = gcd_content_free(&a1, &b1);
    let g = if mg.is_one() {
        g
    } else {
        g.mul_monomial(&mg, &num_traits::One::one())
    };
    g.monic().1
}

fn gcd_content_free(a: &MPoly, b: &MPoly) -> MPoly {
    let one = || MPoly::one(a.registry());
    if a.is_constant() || b.is_constant() {
        return one();
    }
    if a == b {
        return a.monic().1;
    }
    // Monomials with unit monomial content are constants, handled above.
    let (small, large) = if a.num_terms() <= b.num_terms() {
        (a, b)
    } else {
        (b, a)
    };
    if large.exact_div(small).is_some() {
        return small.monic().1;
    }

    let da = a.degree_vector();
    let db = b.degree_vector();

    // A variable present in only one operand: the gcd divides every
    // coefficient of that operand with respect to the variable.
    for (p, q, dp, dq) in [(a, b, &da, &db), (b, a, &db, &da)] {
        if let Some(i) = (0..dp.len()).find(|&i| dp[i] > 0 && dq[i] == 0) {
            let mut g = q.clone();
            let mut coeffs: Vec<MPoly> = p
                .coefficients_in(Var(i as u16))
                .into_iter()
                .filter(|c| !c.is_zero())
                .collect();
            coeffs.sort_by_key(MPoly::num_terms);
            for c in coeffs {
                g = gcd(&c, &g);
                if g.is_constant() {
                    return one();
                }
            }
            return g;
        }
    }

    // Same variable support: pick the main variable of smallest degree.
    let v = (0..da.len())
        .filter(|&i| da[i] > 0)
        .min_by_key(|&i| (da[i].max(db[i]), da[i] + db[i]))
        .map(|i| Var(i as u16))
        .expect("non-constant polynomials have a variable");

    let (ca, pa) = content_and_primitive(a, v);
    let (cb, pb) = content_and_primitive(b, v);
    let c = gcd(&ca, &cb);

    if coprime_in(&pa, &pb, v) {
        return c;
    }
    let (mut p, mut q) = if pa.degree_in(v) >= pb.degree_in(v) {
        (pa, pb)
    } else {
        (pb, pa)
    };
    loop {
        let r = pseudo_remainder(&p, &q, v);
        if r.is_zero() {
            break;
        }
        if r.degree_in(v) == 0 {
            // primitive parts are coprime in v
            return c;
        }
        p = q;
        q = content_and_primitive(&r, v).1;
    }
    let g = content_and_primitive(&q, v).1;
    (&g * &c).monic().1
}

/// Sufficient test that primitive `a` and `b` have no common factor
/// involving `v`: specialize the other variables to integers at which the
/// leading coefficients in `v` survive, and check the univariate gcd. A common
/// factor of degree k in `v` would survive as a factor of degree k.
fn coprime_in(a: &MPoly, b: &MPoly, v: Var) -> bool {
    let others = |p: &MPoly| {
        p.degree_vector()
            .iter()
            .enumerate()
            .any(|(i, &d)| d > 0 && i != v.index())
    };
    if !others(a) && !others(b) {
        return false;
    }
    for attempt in 0..3u64 {
        let point: Vec<BigInt> = (0..a.nvars() as u64)
            .map(|i| BigInt::from(2 + (i * 7 + attempt * 13 + 3) % 89))
            .collect();
        let sa = specialize(a, v, &point);
        let sb = specialize(b, v, &point);
        if sa.degree_in(v) != a.degree_in(v) || sb.degree_in(v) != b.degree_in(v) {
            continue;
        }
        return gcd(&sa, &sb).degree_in(v) == 0;
    }
    false
}

/// Substitutes `point[i]` for every variable except `keep`.
fn specialize(p: &MPoly, keep: Var, point: &[BigInt]) -> MPoly {
    let n = p.nvars();
    let mut out = MPoly::zero(p.registry());
    for (m, c) in p.terms() {
        let mut factor = BigInt::one();
        for (i, &e) in m.exps().iter().enumerate() {
            if e > 0 && i != keep.index() {
                factor *= Pow::pow(&point[i], e as u32);
            }
        }
        let mut exps = vec![0u16; n];
        exps[keep.index()] = m.exp(keep);
        out.add_term(Monomial::from_exps(exps), c * Q::from_integer(factor));
    }
    out
}

/// Content with respect to `v` (gcd of the coefficients) and the primitive
/// part, normalized monic.
pub fn content_and_primitive(p: &MPoly, v: Var) -> (MPoly, MPoly) {
    let mut coeffs: Vec<MPoly> = p
        .coefficients_in(v)
        .into_iter()
        .filter(|c| !c.is_zero())
        .collect();
    coeffs.sort_by_key(MPoly::num_terms);
    let mut content = MPoly::zero(p.registry());
    for c in &coeffs {
        content = gcd(c, &content);
        if content.is_constant() {
            break;
        }
    }
    let prim = if content.is_constant() {
        p.monic().1
    } else {
        p.exact_div(&content).expect("content divides").monic().1
    };
    (content, prim)
}

/// Sparse pseudo-remainder of `a` by `b` in the variable `v`.
pub fn pseudo_remainder(a: &MPoly, b: &MPoly, v: Var) -> MPoly {
    let db = b.degree_in(v);
    let bc = b.coefficients_in(v);
    let lcb = &bc[db as usize];
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lcr = r.coefficients_in(v).swap_remove(dr as usize);
        let shift = Monomial::var(r.nvars(), v, dr - db);
        let t = (&lcr * b).mul_monomial(&shift, &num_traits::One::one());
        r = &(lcb * &r) - &t;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::registry::VarRegistry;

    fn v(name: &str) -> MPoly {
        let r = VarRegistry::standard();
        MPoly::var(&r, r.var(name).unwrap())
    }

    fn c(k: i64) -> MPoly {
        MPoly::from_int(&VarRegistry::standard(), k)
    }

    #[test]
    fn gcd_recovers_common_factor() {
        let f = &(&v("y") - &v("x").pow(2)) - &(&v("w") + &v("t"));
        let g1 = &(&v("x") + &v("z")) * &f;
        let g2 = &(&v("x") - &v("y") + c(3)) * &f.pow(2);
        assert_eq!(gcd(&g1, &g2), f.monic().1);
    }

    #[test]
    fn gcd_of_coprime_is_one() {
        let a = &v("x").pow(2) + &c(1);
        let b = &v("x") + &v("y");
        assert!(gcd(&a, &b).is_one());
    }

    #[test]
    fn gcd_with_monomial_content() {
        let a = &v("x").pow(3) * &(&v("y") + &c(1));
        let b = &v("x").pow(2) * &v("z");
        assert_eq!(gcd(&a, &b), v("x").pow(2));
    }

    #[test]
    fn gcd_with_univariate_only_in_one_operand() {
        let f = &v("x") + &v("alpha2");
        let a = &f * &(&v("w").pow(2) + &v("z"));
        let b = &f * &(&v("x") - &c(2));
        assert_eq!(gcd(&a, &b), f);
    }
}
