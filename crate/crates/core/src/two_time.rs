//! Commuting pair of autonomous Hamiltonians sharing one phase space, with
//! time variables `t` and `s`.

use crate::algebra::{q, var, Bindings, RatFn, Var, VarRegistry};
use crate::error::Result;
use crate::hamiltonian::{
    build_system, field_of, lie_bracket, poisson_bracket, HamSystem, ParameterPoint, Relation,
    SystemId, VectorField,
};
use crate::holomorphy::{chart_pushforward, polynomiality_check, Chart};

#[derive(Clone, Debug, PartialEq)]
pub struct TwoTimeSystem {
    pub k1: RatFn,
    pub k2: RatFn,
    pub pairs: Vec<(Var, Var)>,
    pub times: (Var, Var),
    pub params: ParameterPoint,
}

pub fn build_two_time() -> Result<TwoTimeSystem> {
    let k1 = build_system(SystemId::K1, None, None)?;
    let k2 = build_system(SystemId::K2, None, None)?;
    Ok(TwoTimeSystem {
        k1: k1.raw_hamiltonian()?,
        k2: k2.raw_hamiltonian()?,
        pairs: k1.pairs().to_vec(),
        times: (k1.time(), k2.time()),
        params: ParameterPoint::symbolic(Relation::SumZero),
    })
}

impl TwoTimeSystem {
    /// Same Hamiltonians with the parameters left unconstrained.
    pub fn without_relation(&self) -> Self {
        Self {
            params: ParameterPoint::symbolic(Relation::Free),
            ..self.clone()
        }
    }

    /// `(4 K1² − 13 K2) / 4`.
    pub fn k3(&self) -> RatFn {
        let four_k1_sq = (&self.k1 * &self.k1).scale(&q(4, 1));
        (&four_k1_sq - &self.k2.scale(&q(13, 1))).scale(&q(1, 4))
    }

    pub fn hamiltonians(&self) -> Result<[RatFn; 3]> {
        Ok([
            self.params.apply(&self.k1)?,
            self.params.apply(&self.k2)?,
            self.params.apply(&self.k3())?,
        ])
    }

    pub fn flows(&self) -> Result<(VectorField, VectorField)> {
        let [k1, k2, _] = self.hamiltonians()?;
        Ok((
            field_of(&k1, &self.pairs, self.times.0),
            field_of(&k2, &self.pairs, self.times.1),
        ))
    }

    /// The K1-flow or the K2-flow as a standalone system.
    pub fn system(&self, which: usize) -> Result<HamSystem> {
        let (h, time) = match which {
            1 => (self.k1.clone(), self.times.0),
            _ => (self.k2.clone(), self.times.1),
        };
        HamSystem::new(
            if which == 1 { "K1" } else { "K2" },
            h,
            self.pairs.clone(),
            time,
            self.params.clone(),
        )
    }
}

/// Lie bracket of the two flows.
pub fn compatibility_residual(t: &TwoTimeSystem) -> Result<VectorField> {
    let (v1, v2) = t.flows()?;
    let mut b = lie_bracket(&v1, &v2)?;
    for c in b.components.iter_mut() {
        *c = t.params.apply(c)?;
    }
    Ok(b)
}

/// `{K1, K2}`.
pub fn involution_residual(t: &TwoTimeSystem) -> Result<RatFn> {
    let [k1, k2, _] = t.hamiltonians()?;
    t.params.apply(&poisson_bracket(&k1, &k2, &t.pairs))
}

/// Entry `(i, j)` is the derivative of `K_i` along the flow of `K_j`.
pub fn first_integral_matrix(t: &TwoTimeSystem) -> Result<[[RatFn; 2]; 2]> {
    let (v1, v2) = t.flows()?;
    let [k1, k2, _] = t.hamiltonians()?;
    let entry = |k: &RatFn, v: &VectorField| t.params.apply(&v.apply(k));
    Ok([
        [entry(&k1, &v1)?, entry(&k1, &v2)?],
        [entry(&k2, &v1)?, entry(&k2, &v2)?],
    ])
}

/// Whether each of K1, K2, K3 becomes polynomial in the chart coordinates,
/// and whether both flows push forward to polynomial fields.
pub fn chart_polynomiality(t: &TwoTimeSystem, c: &Chart) -> Result<([bool; 3], [bool; 2])> {
    let [k1, k2, k3] = t.hamiltonians()?;
    let mut ks = [false; 3];
    for (flag, k) in ks.iter_mut().zip([&k1, &k2, &k3]) {
        *flag = t.params.apply(&c.to_chart(k)?)?.is_polynomial();
    }
    let mut flows = [false; 2];
    for (flag, which) in flows.iter_mut().zip([1, 2]) {
        *flag = polynomiality_check(&chart_pushforward(&t.system(which)?, c)?).pass();
    }
    Ok((ks, flows))
}

/// `K1 + scale · H(q1, p1, q2, p2)` with `t` fixed to `time_value`
/// (pass `None` to keep `t` symbolic).
pub fn autonomy_residual_with(
    t: &TwoTimeSystem,
    main: &HamSystem,
    scale: RatFn,
    time_value: Option<RatFn>,
) -> Result<RatFn> {
    let reg = VarRegistry::standard();
    let mut b: Bindings = ["x", "y", "z", "w"]
        .iter()
        .zip(["q1", "p1", "q2", "p2"])
        .map(|(from, to)| (var(from), RatFn::var(&reg, var(to))))
        .collect();
    if let Some(tv) = time_value {
        b.insert(main.time(), tv);
    }
    let h = main.raw_hamiltonian()?.substitute(&b)?;
    Ok(&t.k1 + &(&scale * &h))
}

/// `K1 + H_main|_{t=0} / 2` after renaming `(x, y, z, w) → (q1, p1, q2, p2)`.
pub fn autonomy_residual(t: &TwoTimeSystem, main: &HamSystem) -> Result<RatFn> {
    let reg = VarRegistry::standard();
    autonomy_residual_with(
        t,
        main,
        RatFn::constant(&reg, q(1, 2)),
        Some(RatFn::zero(&reg)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::holomorphy::{build_chart, ChartId};

    fn p(s: &str) -> RatFn {
        parse_expr(s).unwrap()
    }

    fn coeff_of(f: &RatFn, mono: &str) -> crate::algebra::Q {
        let m = p(mono);
        let (mono, _) = m.numer().leading_term().unwrap();
        f.numer().coeff(mono)
    }

    #[test]
    fn leading_coefficients() {
        let t = build_two_time().unwrap();
        assert_eq!(coeff_of(&t.k1, "q1^2*p1"), q(1, 1));
        assert_eq!(coeff_of(&t.k2, "p2^4"), q(1, 1));
        assert!(t.k3().is_polynomial());
    }

    #[test]
    fn involution_and_compatibility() {
        let t = build_two_time().unwrap();
        assert!(involution_residual(&t).unwrap().is_zero());
        assert!(compatibility_residual(&t).unwrap().is_zero());
        let m = first_integral_matrix(&t).unwrap();
        assert!(m.iter().flatten().all(RatFn::is_zero));
    }

    #[test]
    fn degenerate_pairs() {
        let mut t = build_two_time().unwrap();
        t.k2 = t.k1.clone();
        assert!(compatibility_residual(&t).unwrap().is_zero());
        t.k2 = p("q1");
        assert!(!compatibility_residual(&t).unwrap().is_zero());
        t.k2 = p("q2");
        let m = first_integral_matrix(&t).unwrap();
        assert!(m[0][0].is_zero());
        assert!(!m[0][1].is_zero());
    }

    #[test]
    fn bracket_off_the_relation_is_proportional_to_its_defect() {
        let t = build_two_time().unwrap().without_relation();
        let r = involution_residual(&t).unwrap();
        let expected = p("(2*alpha1 + 2*alpha2 + alpha3)*(alpha3^2 + 6*alpha3*p2*q2 + 6*p1*p2^2 - 4*p2^3 + 6*p2^2*q2^2)/2");
        assert_eq!(r, expected);
    }

    #[test]
    fn autonomy_scale() {
        let t = build_two_time().unwrap();
        let main = build_system(SystemId::Main, None, None).unwrap();
        assert!(autonomy_residual(&t, &main).unwrap().is_zero());
        let reg = VarRegistry::standard();
        let half = RatFn::constant(&reg, q(1, 2));
        let symbolic_t = autonomy_residual_with(&t, &main, half.clone(), None).unwrap();
        assert_eq!(symbolic_t, p("-t*(2*p1 - p2)/2"));
        let wrong = autonomy_residual_with(&t, &main, -half, Some(RatFn::zero(&reg))).unwrap();
        assert!(!wrong.is_zero());
    }

    #[test]
    fn polynomial_in_every_chart() {
        let t = build_two_time().unwrap();
        for id in [ChartId::R1, ChartId::R2, ChartId::R3] {
            assert_eq!(
                chart_polynomiality(&t, &build_chart(id)).unwrap(),
                ([true; 3], [true; 2]),
                "{id:?}"
            );
        }
    }

    #[test]
    fn degree_bounds() {
        let t = build_two_time().unwrap();
        let phase: Vec<Var> = t.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let deg = |f: &RatFn| f.numer().degree_in_vars(&phase);
        let [k1, k2, k3] = t.hamiltonians().unwrap();
        assert_eq!((deg(&k1), deg(&k2), deg(&k3)), (3, 6, 6));
    }
}
