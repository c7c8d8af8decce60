//! Holomorphy charts, polynomiality of pushed-forward systems, exterior
//! 2-form identities, and recovery of a Hamiltonian from chart conditions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::algebra::{var, Bindings, MPoly, Monomial, RatFn, Var, VarRegistry, Q};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, print_expr, print_poly};
use crate::hamiltonian::{
    field_of, hamiltonian_vector_field, HamSystem, ParameterPoint, Relation, VectorField,
};
use crate::linsolve::{Eliminator, SolutionSpace, SparseRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChartId {
    C1,
    C2,
    C3,
    R1,
    R2,
    R3,
    Identity,
}

impl ChartId {
    pub const ALL: [ChartId; 7] = [
        ChartId::C1,
        ChartId::C2,
        ChartId::C3,
        ChartId::R1,
        ChartId::R2,
        ChartId::R3,
        ChartId::Identity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChartId::C1 => "1",
            ChartId::C2 => "2",
            ChartId::C3 => "3",
            ChartId::R1 => "R1",
            ChartId::R2 => "R2",
            ChartId::R3 => "R3",
            ChartId::Identity => "id",
        }
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChartId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ChartId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownId {
                kind: "chart",
                id: s.to_string(),
            })
    }
}

/// A birational coordinate system with a stored inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub id: ChartId,
    pub source: Vec<Var>,
    pub target: Vec<Var>,
    pub forward: Vec<RatFn>,
    pub inverse: Vec<RatFn>,
    pub relation: Relation,
    /// Added to the source Hamiltonian on the left of the 2-form identity.
    pub correction: RatFn,
}

struct ChartText {
    source: [&'static str; 4],
    target: [&'static str; 4],
    forward: [&'static str; 4],
    inverse: [&'static str; 4],
    relation: Relation,
    correction: &'static str,
}

fn chart_text(id: ChartId) -> ChartText {
    const XYZW: [&str; 4] = ["x", "y", "z", "w"];
    const QP: [&str; 4] = ["q1", "p1", "q2", "p2"];
    const T1: [&str; 4] = ["x1", "y1", "z1", "w1"];
    const T2: [&str; 4] = ["x2", "y2", "z2", "w2"];
    const T3: [&str; 4] = ["x3", "y3", "z3", "w3"];
    match id {
        ChartId::C1 => ChartText {
            source: XYZW,
            target: T1,
            forward: ["1/x", "-x*(x*y + alpha2)", "z", "w"],
            inverse: ["1/x1", "-(x1*y1 + alpha2)*x1", "z1", "w1"],
            relation: Relation::SumOne,
            correction: "0",
        },
        ChartId::C2 => ChartText {
            source: XYZW,
            target: T2,
            forward: ["x", "y", "1/z", "-(z*w + alpha3)*z"],
            inverse: ["x2", "y2", "1/z2", "-(z2*w2 + alpha3)*z2"],
            relation: Relation::SumOne,
            correction: "0",
        },
        ChartId::C3 => ChartText {
            source: XYZW,
            target: T3,
            forward: [
                "1/x",
                "-((y - x^2 - w - t)*x - (x + z)*w + alpha1)*x",
                "-w/x",
                "x*(x + z)",
            ],
            inverse: [
                "1/x3",
                "1/x3^2 - z3/x3 + t - y3*x3^2 - w3*z3*x3 - alpha1*x3",
                "w3*x3 - 1/x3",
                "-z3/x3",
            ],
            relation: Relation::SumOne,
            correction: "x",
        },
        ChartId::R1 => ChartText {
            source: QP,
            target: T1,
            forward: ["1/q1", "-(q1*p1 + alpha2)*q1", "q2", "p2"],
            inverse: ["1/x1", "-(x1*y1 + alpha2)*x1", "z1", "w1"],
            relation: Relation::SumZero,
            correction: "0",
        },
        ChartId::R2 => ChartText {
            source: QP,
            target: T2,
            forward: ["q1", "p1", "1/q2", "-(q2*p2 + alpha3)*q2"],
            inverse: ["x2", "y2", "1/z2", "-(z2*w2 + alpha3)*z2"],
            relation: Relation::SumZero,
            correction: "0",
        },
        ChartId::R3 => ChartText {
            source: QP,
            target: T3,
            forward: [
                "1/q1",
                "-((p1 - q1^2 - p2)*q1 - (q1 + q2)*p2 + alpha1)*q1",
                "-p2/q1",
                "q1*(q1 + q2)",
            ],
            inverse: [
                "1/x3",
                "1/x3^2 - z3/x3 - y3*x3^2 - w3*z3*x3 - alpha1*x3",
                "w3*x3 - 1/x3",
                "-z3/x3",
            ],
            relation: Relation::SumZero,
            correction: "0",
        },
        ChartId::Identity => ChartText {
            source: XYZW,
            target: XYZW,
            forward: XYZW,
            inverse: XYZW,
            relation: Relation::Free,
            correction: "0",
        },
    }
}

pub fn build_chart(id: ChartId) -> Chart {
    let t = chart_text(id);
    let p = |s: &str| parse_expr(s).expect("chart text parses");
    Chart {
        id,
        source: t.source.iter().map(|n| var(n)).collect(),
        target: t.target.iter().map(|n| var(n)).collect(),
        forward: t.forward.iter().map(|s| p(s)).collect(),
        inverse: t.inverse.iter().map(|s| p(s)).collect(),
        relation: t.relation,
        correction: p(t.correction),
    }
}

/// Identity chart on arbitrary coordinates.
pub fn identity_chart(coords: &[Var]) -> Chart {
    let reg = VarRegistry::standard();
    let comps: Vec<RatFn> = coords.iter().map(|&v| RatFn::var(&reg, v)).collect();
    Chart {
        id: ChartId::Identity,
        source: coords.to_vec(),
        target: coords.to_vec(),
        forward: comps.clone(),
        inverse: comps,
        relation: Relation::Free,
        correction: RatFn::zero(&reg),
    }
}

impl Chart {
    fn inverse_bindings(&self) -> Bindings {
        self.source
            .iter()
            .copied()
            .zip(self.inverse.iter().cloned())
            .collect()
    }

    fn forward_bindings(&self) -> Bindings {
        self.target
            .iter()
            .copied()
            .zip(self.forward.iter().cloned())
            .collect()
    }

    /// Expresses a function of the source coordinates in chart coordinates.
    pub fn to_chart(&self, f: &RatFn) -> Result<RatFn> {
        Ok(f.substitute(&self.inverse_bindings())?)
    }

    /// Expresses a function of the chart coordinates in source coordinates.
    pub fn from_chart(&self, f: &RatFn) -> Result<RatFn> {
        Ok(f.substitute(&self.forward_bindings())?)
    }

    /// Both compositions reduce to the identity.
    pub fn round_trip(&self) -> Result<()> {
        let reg = VarRegistry::standard();
        let fail = |what: &str| Error::Chart {
            chart: self.id.to_string(),
            message: format!("{what} is not the identity"),
        };
        for (f, &t) in self.forward.iter().zip(&self.target) {
            if self.to_chart(f)? != RatFn::var(&reg, t) {
                return Err(fail("forward after inverse"));
            }
        }
        for (g, &s) in self.inverse.iter().zip(&self.source) {
            if self.from_chart(g)? != RatFn::var(&reg, s) {
                return Err(fail("inverse after forward"));
            }
        }
        Ok(())
    }
}

/// The flow of `s` written in the chart's coordinates.
pub fn chart_pushforward(s: &HamSystem, c: &Chart) -> Result<VectorField> {
    c.round_trip()?;
    let v = hamiltonian_vector_field(s)?;
    if v.coords != c.source {
        return Err(Error::CoordinateMismatch(format!(
            "system `{}` and chart `{}`",
            s.id(),
            c.id
        )));
    }
    let mut comps = Vec::with_capacity(c.forward.len());
    for f in &c.forward {
        let f = s.params().apply(f)?;
        let d = &f.derivative(s.time()) + &v.apply(&f);
        comps.push(s.params().apply(&c.to_chart(&d)?)?);
    }
    Ok(VectorField {
        coords: c.target.clone(),
        time: Some(s.time()),
        components: comps,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialityReport {
    /// `(coordinate, denominator)` for each non-polynomial component.
    pub offenders: Vec<(String, String)>,
}

impl PolynomialityReport {
    pub fn pass(&self) -> bool {
        self.offenders.is_empty()
    }
}

pub fn polynomiality_check(v: &VectorField) -> PolynomialityReport {
    let reg = VarRegistry::standard();
    let offenders = v
        .coords
        .iter()
        .zip(&v.components)
        .filter(|(_, c)| !c.is_polynomial())
        .map(|(u, c)| (reg.name(*u).to_string(), print_poly(c.denom())))
        .collect();
    PolynomialityReport { offenders }
}

/// Exterior 1-form `Σ f_u du`.
pub type OneForm = BTreeMap<Var, RatFn>;

/// Antisymmetric 2-form keyed by ordered pairs `(u, v)` with `u < v`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TwoForm {
    coeffs: BTreeMap<(Var, Var), RatFn>,
}

impl TwoForm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `c du∧dv`; `du∧du` is dropped and `dv∧du = −du∧dv`.
    pub fn add(&mut self, u: Var, v: Var, c: RatFn) {
        if u == v || c.is_zero() {
            return;
        }
        let (key, c) = if u < v { ((u, v), c) } else { ((v, u), -c) };
        let sum = match self.coeffs.remove(&key) {
            Some(old) => &old + &c,
            None => c,
        };
        if !sum.is_zero() {
            self.coeffs.insert(key, sum);
        }
    }

    pub fn coefficient(&self, u: Var, v: Var) -> Option<RatFn> {
        if u == v {
            return None;
        }
        let key = if u < v { (u, v) } else { (v, u) };
        let c = self.coeffs.get(&key)?;
        Some(if u < v { c.clone() } else { -c.clone() })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Var, Var), &RatFn)> {
        self.coeffs.iter()
    }

    pub fn add_wedge(&mut self, a: &OneForm, b: &OneForm, sign: i64) {
        let s = Q::from_integer(sign.into());
        for (u, fu) in a {
            for (v, gv) in b {
                if u != v {
                    self.add(*u, *v, (fu * gv).scale(&s));
                }
            }
        }
    }

    pub fn sub(&self, other: &TwoForm) -> TwoForm {
        let mut out = self.clone();
        for (&(u, v), c) in &other.coeffs {
            out.add(u, v, -c.clone());
        }
        out
    }

    pub fn map(&self, mut f: impl FnMut(&RatFn) -> Result<RatFn>) -> Result<TwoForm> {
        let mut out = TwoForm::new();
        for (&(u, v), c) in &self.coeffs {
            out.add(u, v, f(c)?);
        }
        Ok(out)
    }

    pub fn describe(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let reg = VarRegistry::standard();
        self.coeffs
            .iter()
            .map(|(&(u, v), c)| format!("({}) d{}^d{}", print_expr(c), reg.name(u), reg.name(v)))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// `df` over the given coordinates.
pub fn differential(f: &RatFn, vars: &[Var]) -> OneForm {
    vars.iter()
        .filter(|&&v| f.contains_var(v))
        .map(|&v| (v, f.derivative(v)))
        .filter(|(_, d)| !d.is_zero())
        .collect()
}

/// `d(Σ a_u du) = Σ_{u,v} ∂a_u/∂v dv∧du`.
pub fn exterior_derivative(w: &OneForm, vars: &[Var]) -> TwoForm {
    let mut out = TwoForm::new();
    for (&u, a) in w {
        for &v in vars {
            if a.contains_var(v) {
                out.add(v, u, a.derivative(v));
            }
        }
    }
    out
}

/// `Σ dX_i∧dY_i − dH∧dt` for canonical pairs of functions.
fn canonical_form(pairs: &[(RatFn, RatFn)], h: &RatFn, time: Var, vars: &[Var]) -> TwoForm {
    let mut out = TwoForm::new();
    for (a, b) in pairs {
        out.add_wedge(&differential(a, vars), &differential(b, vars), 1);
    }
    let reg = VarRegistry::standard();
    let dt = differential(&RatFn::var(&reg, time), vars);
    out.add_wedge(&differential(h, vars), &dt, -1);
    out
}

/// Left side minus right side of the chart's 2-form identity, with the
/// chart's own correction term.
pub fn two_form_residual(s: &HamSystem, c: &Chart, h_chart: &RatFn) -> Result<TwoForm> {
    two_form_residual_with(s, c, h_chart, &c.correction)
}

/// As [`two_form_residual`] with an explicit correction term.
pub fn two_form_residual_with(
    s: &HamSystem,
    c: &Chart,
    h_chart: &RatFn,
    correction: &RatFn,
) -> Result<TwoForm> {
    if !h_chart.is_polynomial() {
        return Err(Error::NotPolynomial("chart Hamiltonian".into()));
    }
    let reg = VarRegistry::standard();
    let mut vars = c.source.clone();
    vars.push(s.time());
    let sym = |v: Var| RatFn::var(&reg, v);
    let lhs_pairs: Vec<(RatFn, RatFn)> =
        c.source.chunks(2).map(|p| (sym(p[0]), sym(p[1]))).collect();
    let h = &s.hamiltonian()? + correction;
    let lhs = canonical_form(&lhs_pairs, &h, s.time(), &vars);

    let fwd: Vec<RatFn> = c
        .forward
        .iter()
        .map(|f| s.params().apply(f))
        .collect::<Result<_>>()?;
    let rhs_pairs: Vec<(RatFn, RatFn)> = fwd
        .chunks(2)
        .map(|p| (p[0].clone(), p[1].clone()))
        .collect();
    let b: Bindings = c.target.iter().copied().zip(fwd.iter().cloned()).collect();
    let h_back = s.params().apply(&h_chart.substitute(&b)?)?;
    let rhs = canonical_form(&rhs_pairs, &h_back, s.time(), &vars);
    lhs.sub(&rhs).map(|e| s.params().apply(e))
}

/// Polynomial Hamiltonian in chart coordinates whose Hamilton equations give
/// the pushed-forward flow; terms free of the phase variables are dropped.
pub fn derive_chart_hamiltonian(s: &HamSystem, c: &Chart) -> Result<MPoly> {
    let v = chart_pushforward(s, c)?;
    let reg = VarRegistry::standard();
    let name = |u: Var| reg.name(u).to_string();
    // gradient of the chart Hamiltonian: ∂H/∂X = −Ẏ, ∂H/∂Y = Ẋ
    let mut grad: Vec<(Var, MPoly)> = Vec::new();
    for (k, pair) in v.coords.chunks(2).enumerate() {
        let (dq, dp) = (&v.components[2 * k], &v.components[2 * k + 1]);
        let as_poly = |f: &RatFn, u: Var| {
            f.as_poly()
                .cloned()
                .ok_or_else(|| Error::NotPolynomial(name(u)))
        };
        grad.push((pair[0], -as_poly(dp, pair[1])?));
        grad.push((pair[1], as_poly(dq, pair[0])?));
    }
    for i in 0..grad.len() {
        for j in i + 1..grad.len() {
            let (u, gu) = &grad[i];
            let (w, gw) = &grad[j];
            if gu.derivative(*w) != gw.derivative(*u) {
                return Err(Error::NotHamiltonian(name(*u), name(*w)));
            }
        }
    }
    let mut h = MPoly::zero(&reg);
    for (u, g) in &grad {
        let rest = g - &h.derivative(*u);
        h = &h + &rest.integrate(*u);
    }
    let phase: Vec<Var> = v.coords.clone();
    Ok(h.retain_terms(|m| phase.iter().any(|&u| m.exp(u) > 0)))
}

/// Unknown-coefficient Hamiltonian: every monomial of degree ≤ `degree` in
/// the phase variables times each factor in `factors` (the constant
/// monomial takes only the factors free of parameters).
#[derive(Clone, Debug, PartialEq)]
pub struct HamAnsatz {
    pub degree: u32,
    pub coords: Vec<Var>,
    pub basis: Vec<RatFn>,
}

impl HamAnsatz {
    /// Coefficients affine in `t` and in `(alpha2, alpha3)`.
    pub fn affine(degree: u32) -> Self {
        let reg = VarRegistry::standard();
        let coords: Vec<Var> = ["x", "y", "z", "w"].iter().map(|n| var(n)).collect();
        let factors: Vec<RatFn> = ["1", "t", "alpha2", "alpha3"]
            .iter()
            .map(|s| parse_expr(s).expect("factor"))
            .collect();
        let mut monos = Vec::new();
        let mut exps = [0u32; 4];
        fn rec(i: usize, left: u32, exps: &mut [u32; 4], out: &mut Vec<[u32; 4]>) {
            if i == 4 {
                out.push(*exps);
                return;
            }
            for e in 0..=left {
                exps[i] = e;
                rec(i + 1, left - e, exps, out);
            }
            exps[i] = 0;
        }
        rec(0, degree, &mut exps, &mut monos);
        monos.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(*e)));
        let mut basis = Vec::new();
        for e in monos {
            let mut m = vec![0u16; reg.names().len()];
            for (k, &v) in coords.iter().enumerate() {
                m[v.index()] = e[k] as u16;
            }
            let mono = RatFn::from_poly(MPoly::monomial(
                &reg,
                Monomial::from_exps(m),
                Q::from_integer(1.into()),
            ));
            let nf = if e.iter().all(|&x| x == 0) {
                2
            } else {
                factors.len()
            };
            for f in &factors[..nf] {
                basis.push(&mono * f);
            }
        }
        Self {
            degree,
            coords,
            basis,
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn evaluate(&self, coeffs: &[Q]) -> RatFn {
        let reg = VarRegistry::standard();
        let mut acc = MPoly::zero(&reg);
        for (b, c) in self.basis.iter().zip(coeffs) {
            if !num_traits::Zero::is_zero(c) {
                acc = &acc + &b.numer().scale(c);
            }
        }
        RatFn::from_poly(acc)
    }

    pub fn labels(&self) -> Vec<String> {
        self.basis.iter().map(print_expr).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    pub ansatz: HamAnsatz,
    pub solution: SolutionSpace,
    pub equations: usize,
}

impl Recovery {
    pub fn particular(&self) -> RatFn {
        self.ansatz.evaluate(&self.solution.particular)
    }

    pub fn kernel_hamiltonians(&self) -> Vec<RatFn> {
        self.solution
            .kernel
            .iter()
            .map(|k| self.ansatz.evaluate(k))
            .collect()
    }
}

/// All ansatz coefficient vectors for which the flow stays polynomial in
/// every chart, under the relation `2 alpha1 + 2 alpha2 + alpha3 = 1`.
pub fn recover_hamiltonian(charts: &[Chart], ansatz: HamAnsatz) -> Result<Recovery> {
    let reg = VarRegistry::standard();
    let point = ParameterPoint::symbolic(Relation::SumOne);
    let time = var("t");
    let mut elim = Eliminator::new(ansatz.len());
    let mut equations = 0;
    let pairs: Vec<(Var, Var)> = ansatz.coords.chunks(2).map(|p| (p[0], p[1])).collect();
    for c in charts {
        c.round_trip()?;
        if c.source != ansatz.coords {
            return Err(Error::CoordinateMismatch(format!(
                "chart `{}` is not over the ansatz coordinates",
                c.id
            )));
        }
        let reduce = |f: &RatFn| point.apply(f);
        let inv: Bindings = c
            .source
            .iter()
            .copied()
            .zip(c.inverse.iter().map(reduce).collect::<Result<Vec<_>>>()?)
            .collect();
        let at_inv = |f: &RatFn| -> Result<RatFn> { reduce(&f.substitute(&inv)?) };
        let fwd: Vec<RatFn> = c.forward.iter().map(reduce).collect::<Result<_>>()?;
        let jac: Vec<Vec<RatFn>> = fwd
            .iter()
            .map(|f| {
                c.source
                    .iter()
                    .map(|&u| at_inv(&f.derivative(u)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let dt: Vec<RatFn> = fwd
            .iter()
            .map(|f| at_inv(&f.derivative(time)))
            .collect::<Result<_>>()?;

        let mut contributions: Vec<Vec<RatFn>> = vec![Vec::with_capacity(ansatz.len()); fwd.len()];
        for b in &ansatz.basis {
            let vb = field_of(b, &pairs, time);
            let vb: Vec<RatFn> = vb.components.iter().map(at_inv).collect::<Result<_>>()?;
            for (i, row) in jac.iter().enumerate() {
                let mut acc = RatFn::zero(&reg);
                for (jij, vj) in row.iter().zip(&vb) {
                    if !jij.is_zero() && !vj.is_zero() {
                        acc = &acc + &(jij * vj);
                    }
                }
                contributions[i].push(acc);
            }
        }
        for (i, contrib) in contributions.iter().enumerate() {
            equations += pole_conditions(c, &dt[i], contrib, &mut elim)?;
        }
    }
    let solution = elim.solve()?;
    Ok(Recovery {
        ansatz,
        solution,
        equations,
    })
}

/// Vanishing of every numerator coefficient that the common monomial
/// denominator does not divide.
fn pole_conditions(
    c: &Chart,
    constant: &RatFn,
    terms: &[RatFn],
    elim: &mut Eliminator,
) -> Result<usize> {
    let bad = || Error::Chart {
        chart: c.id.to_string(),
        message: "denominator is not a monomial".into(),
    };
    let mut lcm: Option<Monomial> = None;
    for f in std::iter::once(constant).chain(terms) {
        if f.is_zero() || f.is_polynomial() {
            continue;
        }
        let d = f.denom();
        if !d.is_monomial() {
            return Err(bad());
        }
        let (m, _) = d.leading_term().expect("nonzero");
        lcm = Some(match lcm {
            None => m.clone(),
            Some(l) => l.lcm(m),
        });
    }
    let Some(lcm) = lcm else {
        return Ok(0);
    };
    let cleared = |f: &RatFn| -> MPoly {
        let (m, c) = f.denom().leading_term().expect("nonzero");
        f.numer().mul_monomial(&m.div_into(&lcm), &c.recip())
    };
    let mut rows: BTreeMap<Monomial, (SparseRow, Q)> = BTreeMap::new();
    for (m, q) in cleared(constant).terms() {
        if !lcm.divides(m) {
            rows.entry(m.clone()).or_default().1 -= q;
        }
    }
    for (j, f) in terms.iter().enumerate() {
        if f.is_zero() {
            continue;
        }
        for (m, q) in cleared(f).terms() {
            if !lcm.divides(m) {
                rows.entry(m.clone()).or_default().0.insert(j, q.clone());
            }
        }
    }
    let n = rows.len();
    for (_, (row, rhs)) in rows {
        elim.push(row, rhs);
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_system, SystemId};

    fn p(s: &str) -> RatFn {
        parse_expr(s).unwrap()
    }

    #[test]
    fn catalog_charts_round_trip() {
        for id in ChartId::ALL {
            build_chart(id).round_trip().unwrap();
        }
    }

    #[test]
    fn broken_inverse_is_reported() {
        let mut c = build_chart(ChartId::C1);
        c.inverse[1] = p("-(x1*y1 + alpha3)*x1");
        assert!(matches!(c.round_trip(), Err(Error::Chart { .. })));
    }

    #[test]
    fn identity_chart_reproduces_field() {
        let s = build_system(SystemId::Main, None, None).unwrap();
        let v = chart_pushforward(&s, &build_chart(ChartId::Identity)).unwrap();
        assert_eq!(v, hamiltonian_vector_field(&s).unwrap());
    }

    #[test]
    fn polynomiality_names_offender() {
        let reg = VarRegistry::standard();
        let v = VectorField {
            coords: vec![var("x1"), var("y1")],
            time: None,
            components: vec![p("1/x1 + y1"), RatFn::one(&reg)],
        };
        let r = polynomiality_check(&v);
        assert!(!r.pass());
        assert_eq!(r.offenders, vec![("x1".to_string(), "x1".to_string())]);
    }

    #[test]
    fn chart_two_pushforward_is_polynomial() {
        let s = build_system(SystemId::Main, None, None).unwrap();
        let v = chart_pushforward(&s, &build_chart(ChartId::C2)).unwrap();
        assert!(polynomiality_check(&v).pass());
    }

    #[test]
    fn two_form_antisymmetry() {
        let mut f = TwoForm::new();
        f.add(var("y"), var("x"), p("2"));
        assert_eq!(f.coefficient(var("x"), var("y")), Some(p("-2")));
        f.add(var("x"), var("x"), p("5"));
        f.add(var("x"), var("y"), p("2"));
        assert!(f.is_zero());
    }

    #[test]
    fn identity_chart_two_form() {
        let s = build_system(SystemId::Main, None, None).unwrap();
        let h = s.hamiltonian().unwrap();
        let r = two_form_residual(&s, &build_chart(ChartId::Identity), &h).unwrap();
        assert!(r.is_zero(), "{}", r.describe());
    }

    #[test]
    fn identity_chart_hamiltonian() {
        let s = build_system(SystemId::Main, None, None).unwrap();
        let h = derive_chart_hamiltonian(&s, &build_chart(ChartId::Identity)).unwrap();
        assert_eq!(RatFn::from_poly(h), s.hamiltonian().unwrap());
    }

    #[test]
    fn non_hamiltonian_pushforward_is_rejected() {
        // scaling one momentum breaks the canonical structure
        let s = build_system(SystemId::Main, None, None).unwrap();
        let mut c = build_chart(ChartId::Identity);
        c.forward[1] = p("2*y");
        c.inverse[1] = p("y/2");
        assert!(matches!(
            derive_chart_hamiltonian(&s, &c),
            Err(Error::NotHamiltonian(..))
        ));
    }

    #[test]
    fn ansatz_size() {
        let a = HamAnsatz::affine(5);
        assert_eq!(a.len(), 125 * 4 + 2);
        assert!(a.basis[0].is_one());
        assert_eq!(a.basis[1], p("t"));
    }

    #[test]
    fn empty_chart_list_leaves_ansatz_free() {
        let r = recover_hamiltonian(&[], HamAnsatz::affine(2)).unwrap();
        assert_eq!(r.solution.dimension(), r.ansatz.len());
        assert!(r.particular().is_zero());
    }
}
