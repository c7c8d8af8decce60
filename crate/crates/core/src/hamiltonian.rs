//! Catalog of polynomial Hamiltonian systems and the canonical-structure
//! operations on them: vector fields, Poisson and Lie brackets, total time
//! derivatives and invariant cycles.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::algebra::{q, sym, vanishes_on_variety, var, Bindings, RatFn, Var, VarRegistry, Q};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, print_expr};

/// Affine constraint `2·alpha1 + 2·alpha2 + alpha3 = c` carried by a system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `c = 1`, the non-autonomous system and its conjugates.
    SumOne,
    /// `c = 0`, the two-time autonomous structure.
    SumZero,
    /// No constraint (generic coupled family and the earlier special cases).
    Free,
}

impl Relation {
    pub fn constant(self) -> Option<Q> {
        match self {
            Relation::SumOne => Some(q(1, 1)),
            Relation::SumZero => Some(q(0, 1)),
            Relation::Free => None,
        }
    }

    /// `2·alpha1 + 2·alpha2 + alpha3 - c` as an expression.
    pub fn defect(self) -> Option<RatFn> {
        let c = self.constant()?;
        let two = q(2, 1);
        let lhs = &(&sym("alpha1").scale(&two) + &sym("alpha2").scale(&two)) + &sym("alpha3");
        Some(&lhs - &RatFn::constant(lhs.registry(), c))
    }
}

pub const ALPHAS: [&str; 3] = ["alpha1", "alpha2", "alpha3"];

/// Values of `alpha1..alpha3` (symbolic or numeric) together with the
/// relation used to eliminate one of them.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPoint {
    relation: Relation,
    fixed: BTreeMap<Var, RatFn>,
    bindings: Bindings,
}

impl ParameterPoint {
    /// All parameters symbolic; under a relation `alpha1` is eliminated.
    pub fn symbolic(relation: Relation) -> Self {
        Self::solve(relation, BTreeMap::new()).expect("symbolic point is consistent")
    }

    /// Fixes one parameter and re-solves the relation for the first
    /// parameter that is still free.
    pub fn with(&self, name: &str, value: RatFn) -> Result<Self> {
        if !ALPHAS.contains(&name) {
            return Err(Error::UnknownId {
                kind: "parameter",
                id: name.to_string(),
            });
        }
        let mut fixed = self.fixed.clone();
        fixed.insert(var(name), value);
        Self::solve(self.relation, fixed)
    }

    fn solve(relation: Relation, fixed: BTreeMap<Var, RatFn>) -> Result<Self> {
        let mut bindings: Bindings = fixed.clone();
        if let Some(c) = relation.constant() {
            let reg = VarRegistry::standard();
            let weights = [q(2, 1), q(2, 1), q(1, 1)];
            let value = |i: usize| {
                bindings
                    .get(&var(ALPHAS[i]))
                    .cloned()
                    .unwrap_or_else(|| sym(ALPHAS[i]))
            };
            match (0..3).find(|&i| !fixed.contains_key(&var(ALPHAS[i]))) {
                Some(k) => {
                    let mut rest = RatFn::constant(&reg, c);
                    for i in (0..3).filter(|&i| i != k) {
                        rest = &rest - &value(i).scale(&weights[i]);
                    }
                    let solved = rest.scale(&weights[k].recip());
                    bindings.insert(var(ALPHAS[k]), solved);
                }
                None => {
                    let mut sum = RatFn::constant(&reg, -c);
                    for (i, w) in weights.iter().enumerate() {
                        sum = &sum + &value(i).scale(w);
                    }
                    if !sum.is_zero() {
                        return Err(Error::Parameter(format!(
                            "fixed parameters violate the relation (defect {})",
                            print_expr(&sum)
                        )));
                    }
                }
            }
        }
        Ok(Self {
            relation,
            fixed,
            bindings,
        })
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn bindings(&self) -> &Bindings {
        &self.bindings
    }

    /// Value of a parameter after elimination.
    pub fn value(&self, name: &str) -> RatFn {
        self.bindings
            .get(&var(name))
            .cloned()
            .unwrap_or_else(|| sym(name))
    }

    /// Applies the parameter values (and the elimination) to `f`.
    pub fn apply(&self, f: &RatFn) -> Result<RatFn> {
        Ok(f.substitute(&self.bindings)?)
    }

    /// True when the relation holds identically at this point.
    pub fn satisfies_relation(&self) -> bool {
        match self.relation.defect() {
            None => true,
            Some(d) => self.apply(&d).map(|r| r.is_zero()).unwrap_or(false),
        }
    }
}

/// Coupling and scale constants of the generic family.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyConstants {
    pub a: RatFn,
    pub a1: RatFn,
    pub a2: RatFn,
    pub a3: RatFn,
}

impl FamilyConstants {
    pub fn symbolic() -> Self {
        Self {
            a: sym("a"),
            a1: sym("a1"),
            a2: sym("a2"),
            a3: sym("a3"),
        }
    }

    fn bindings(&self) -> Result<Bindings> {
        for (n, v) in [("a1", &self.a1), ("a2", &self.a2), ("a3", &self.a3)] {
            if v.is_zero() {
                return Err(Error::Parameter(format!("{n} must be nonzero")));
            }
        }
        Ok([
            ("a", &self.a),
            ("a1", &self.a1),
            ("a2", &self.a2),
            ("a3", &self.a3),
        ]
        .into_iter()
        .map(|(n, v)| (var(n), v.clone()))
        .collect())
    }
}

impl Default for FamilyConstants {
    fn default() -> Self {
        Self::symbolic()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SystemId {
    Generic,
    Hone,
    A1Case,
    Main,
    Phi1Image,
    Phi2Image,
    Reduced,
    K1,
    K2,
}

impl SystemId {
    pub const ALL: [SystemId; 9] = [
        SystemId::Generic,
        SystemId::Hone,
        SystemId::A1Case,
        SystemId::Main,
        SystemId::Phi1Image,
        SystemId::Phi2Image,
        SystemId::Reduced,
        SystemId::K1,
        SystemId::K2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemId::Generic => "generic",
            SystemId::Hone => "hone",
            SystemId::A1Case => "a1case",
            SystemId::Main => "main",
            SystemId::Phi1Image => "sys11",
            SystemId::Phi2Image => "sys14",
            SystemId::Reduced => "sys16",
            SystemId::K1 => "K1",
            SystemId::K2 => "K2",
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SystemId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownId {
                kind: "system",
                id: s.to_string(),
            })
    }
}

/// Frozen catalog text: the Hamiltonian and (when printed) the right-hand
/// side, in the crate's expression syntax.
pub struct CatalogEntry {
    pub id: SystemId,
    pub hamiltonian: &'static str,
    pub printed_field: Option<&'static [&'static str]>,
    pub pairs: [(&'static str, &'static str); 2],
    pub time: &'static str,
    pub relation: Relation,
}

const XYZW: [(&str, &str); 2] = [("x", "y"), ("z", "w")];
const QP: [(&str, &str); 2] = [("q1", "p1"), ("q2", "p2")];

const H_MAIN: &str = "-2*x^2*y + 2*y^2 - 2*t*y - 2*alpha2*x + z^2*w + w^2 + t*w + alpha3*z - 3*y*w";
const H_SYS14: &str = "2*x^2*y + 2*y^2 - y*z + 2*t*y + 2*alpha1*x + 2*x*z*w + alpha3*w - z*w^2";
const K1_TEXT: &str = "q1^2*p1 - p1^2 + alpha2*q1 - q2^2*p2/2 - p2^2/2 - alpha3*q2/2 + 3/2*p1*p2";
const K2_TEXT: &str = "-alpha3^2*p1 + q2^4*p2^2 + 2*q2^2*p2^3 + p2^4 + 2*alpha3*q2^3*p2 \
    + 4*(alpha1 + alpha3)*q2*p2^2 + alpha3^2*q2^2 + alpha3*(2*alpha1 + alpha3)*p2 \
    - p2*(8*q1*p1*q2*p2 + 6*p1*q2^2*p2 + 4*q1^2*p1*p2 + 2*p1*p2^2 - p1^2*p2 \
    + 4*alpha2*q1*p2 + 4*alpha3*q1*p1 + 6*alpha3*p1*q2)";

pub static CATALOG: [CatalogEntry; 9] = [
    CatalogEntry {
        id: SystemId::Generic,
        hamiltonian: "a1*x^2*y + a2*y^2/2 + a3*t*y + a1*alpha1*x \
            + a1*z^2*w + a2*w^2/2 + a3*t*w + a1*alpha2*z + a*y*w",
        printed_field: None,
        pairs: XYZW,
        time: "t",
        relation: Relation::Free,
    },
    CatalogEntry {
        id: SystemId::Hone,
        hamiltonian:
            "2*x^2*y + y^2/8 - t*y + alpha1*x + 2*z^2*w + w^2/8 - t*w + alpha2*z + 3*y*w/4",
        printed_field: Some(&[
            "2*x^2 + y/4 + 3*w/4 - t",
            "-4*x*y - alpha1",
            "2*z^2 + w/4 + 3*y/4 - t",
            "-4*z*w - alpha2",
        ]),
        pairs: XYZW,
        time: "t",
        relation: Relation::Free,
    },
    CatalogEntry {
        id: SystemId::A1Case,
        hamiltonian: "-x^2*y + y^2/2 - t*y/2 - alpha1*x - z^2*w + w^2/2 - t*w/2 - alpha2*z + y*w",
        printed_field: Some(&[
            "-x^2 + y + w - t/2",
            "2*x*y + alpha1",
            "-z^2 + y + w - t/2",
            "2*z*w + alpha2",
        ]),
        pairs: XYZW,
        time: "t",
        relation: Relation::Free,
    },
    CatalogEntry {
        id: SystemId::Main,
        hamiltonian: H_MAIN,
        printed_field: Some(&[
            "-2*x^2 + 4*y - 3*w - 2*t",
            "4*x*y + 2*alpha2",
            "z^2 + 2*w - 3*y + t",
            "-2*z*w - alpha3",
        ]),
        pairs: XYZW,
        time: "t",
        relation: Relation::SumOne,
    },
    CatalogEntry {
        id: SystemId::Phi1Image,
        hamiltonian: "2*x^2*y + 2*y^2 + 2*t*y - y*z*w^2 + alpha3*y*w - 2*x*z*w - 2*alpha1*x - z",
        printed_field: Some(&[
            "2*x^2 + 4*y + 2*t - z*w^2 + alpha3*w",
            "-4*x*y + 2*z*w + 2*alpha1",
            "-2*x*z - 2*y*z*w + alpha3*y",
            "y*w^2 + 2*x*w + 1",
        ]),
        pairs: XYZW,
        time: "t",
        relation: Relation::SumOne,
    },
    CatalogEntry {
        id: SystemId::Phi2Image,
        hamiltonian: H_SYS14,
        printed_field: Some(&[
            "2*x^2 + 4*y - z + 2*t",
            "-4*x*y - 2*z*w - 2*alpha1",
            "-2*z*w + 2*x*z + alpha3",
            "w^2 - 2*x*w + y",
        ]),
        pairs: XYZW,
        time: "t",
        relation: Relation::SumOne,
    },
    CatalogEntry {
        id: SystemId::Reduced,
        hamiltonian: H_SYS14,
        // reduced (x, z) system on the invariant plane y = w = 0
        printed_field: Some(&["2*x^2 - z + 2*t", "2*x*z + alpha3"]),
        pairs: XYZW,
        time: "t",
        relation: Relation::SumOne,
    },
    CatalogEntry {
        id: SystemId::K1,
        hamiltonian: K1_TEXT,
        printed_field: None,
        pairs: QP,
        time: "t",
        relation: Relation::SumZero,
    },
    CatalogEntry {
        id: SystemId::K2,
        hamiltonian: K2_TEXT,
        printed_field: None,
        pairs: QP,
        time: "s",
        relation: Relation::SumZero,
    },
];

pub fn catalog_entry(id: SystemId) -> &'static CatalogEntry {
    CATALOG
        .iter()
        .find(|e| e.id == id)
        .expect("every id has an entry")
}

/// A polynomial Hamiltonian with its canonical pairs, time symbol and
/// parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct HamSystem {
    id: String,
    hamiltonian: RatFn,
    pairs: Vec<(Var, Var)>,
    time: Var,
    params: ParameterPoint,
    constants: Bindings,
    restriction: Vec<(Var, RatFn)>,
}

impl HamSystem {
    /// Custom system over the given pairs; `hamiltonian` must be polynomial in
    /// the phase variables.
    pub fn new(
        id: &str,
        hamiltonian: RatFn,
        pairs: Vec<(Var, Var)>,
        time: Var,
        params: ParameterPoint,
    ) -> Result<Self> {
        if !hamiltonian.is_polynomial() {
            return Err(Error::Parameter(format!(
                "hamiltonian of `{id}` is not polynomial"
            )));
        }
        Ok(Self {
            id: id.to_string(),
            hamiltonian,
            pairs,
            time,
            params,
            constants: Bindings::new(),
            restriction: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn pairs(&self) -> &[(Var, Var)] {
        &self.pairs
    }

    /// Phase coordinates in pair order `(q1, p1, q2, p2)`.
    pub fn coords(&self) -> Vec<Var> {
        self.pairs.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    pub fn time(&self) -> Var {
        self.time
    }

    pub fn params(&self) -> &ParameterPoint {
        &self.params
    }

    /// Invariant restriction (`sys16` lives on `y = w = 0`).
    pub fn restriction(&self) -> &[(Var, RatFn)] {
        &self.restriction
    }

    /// Hamiltonian with family constants and parameter values applied.
    pub fn hamiltonian(&self) -> Result<RatFn> {
        let h = self.hamiltonian.substitute(&self.constants)?;
        self.params.apply(&h)
    }

    /// Hamiltonian before parameters are applied (symbolic alphas).
    pub fn raw_hamiltonian(&self) -> Result<RatFn> {
        Ok(self.hamiltonian.substitute(&self.constants)?)
    }

    /// Same system at another parameter point.
    pub fn with_params(&self, params: ParameterPoint) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    pub fn registry(&self) -> &Arc<VarRegistry> {
        self.hamiltonian.registry()
    }

    /// Vector field at parameters `alpha ↦ image` (used for re-parameterized
    /// right-hand sides); the system's own point is applied afterwards.
    pub fn field_at(&self, image: &[RatFn; 3]) -> Result<VectorField> {
        let raw = hamiltonian_vector_field_raw(&self.raw_hamiltonian()?, &self.pairs, self.time);
        let b: Bindings = ALPHAS
            .iter()
            .zip(image.iter())
            .map(|(n, v)| (var(n), v.clone()))
            .collect();
        let mut comps = Vec::with_capacity(raw.components.len());
        for c in &raw.components {
            comps.push(self.params.apply(&c.substitute(&b)?)?);
        }
        Ok(VectorField {
            components: comps,
            ..raw
        })
    }
}

/// Builds a catalog system at the given parameter point (defaults to the
/// symbolic point under the entry's relation).
pub fn build_system(
    id: SystemId,
    params: Option<ParameterPoint>,
    consts: Option<FamilyConstants>,
) -> Result<HamSystem> {
    let entry = catalog_entry(id);
    let mut params = params.unwrap_or_else(|| ParameterPoint::symbolic(entry.relation));
    if params.relation() != entry.relation {
        return Err(Error::Parameter(format!(
            "`{id}` requires relation {:?}, got {:?}",
            entry.relation,
            params.relation()
        )));
    }
    let mut restriction = Vec::new();
    if id == SystemId::Reduced {
        params = params.with("alpha1", RatFn::zero(&VarRegistry::standard()))?;
        let zero = RatFn::zero(&VarRegistry::standard());
        restriction = vec![(var("y"), zero.clone()), (var("w"), zero)];
    }
    let constants = match (id, consts) {
        (SystemId::Generic, c) => c.unwrap_or_default().bindings()?,
        (_, Some(_)) => {
            return Err(Error::Parameter(format!(
                "`{id}` takes no family constants"
            )));
        }
        _ => Bindings::new(),
    };
    Ok(HamSystem {
        id: id.as_str().to_string(),
        hamiltonian: parse_expr(entry.hamiltonian)?,
        pairs: entry.pairs.iter().map(|(a, b)| (var(a), var(b))).collect(),
        time: var(entry.time),
        params,
        constants,
        restriction,
    })
}

/// Printed right-hand side of a catalog entry, over the coordinates it is
/// printed in.
pub fn printed_field(id: SystemId) -> Result<Option<VectorField>> {
    let entry = catalog_entry(id);
    let Some(texts) = entry.printed_field else {
        return Ok(None);
    };
    let coords: Vec<Var> = if id == SystemId::Reduced {
        vec![var("x"), var("z")]
    } else {
        entry
            .pairs
            .iter()
            .flat_map(|(a, b)| [var(a), var(b)])
            .collect()
    };
    let components = texts
        .iter()
        .map(|t| parse_expr(t))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Some(VectorField {
        coords,
        time: Some(var(entry.time)),
        components,
    }))
}

/// One component per coordinate, plus the time symbol of the flow.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub coords: Vec<Var>,
    pub time: Option<Var>,
    pub components: Vec<RatFn>,
}

impl VectorField {
    pub fn zero_like(&self) -> Self {
        let reg = VarRegistry::standard();
        Self {
            components: vec![RatFn::zero(&reg); self.coords.len()],
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(RatFn::is_zero)
    }

    pub fn polynomial_flags(&self) -> Vec<bool> {
        self.components.iter().map(RatFn::is_polynomial).collect()
    }

    /// `V(f) = Σ V_u ∂f/∂u` (no time derivative).
    pub fn apply(&self, f: &RatFn) -> RatFn {
        let mut acc = RatFn::zero(f.registry());
        for (u, c) in self.coords.iter().zip(&self.components) {
            if c.is_zero() || !f.contains_var(*u) {
                continue;
            }
            acc = &acc + &(c * &f.derivative(*u));
        }
        acc
    }

    /// Restricts every component to a variety given in solved form.
    pub fn restrict(&self, constraints: &[(Var, RatFn)], keep: &[Var]) -> Result<VectorField> {
        let b: Bindings = constraints.iter().cloned().collect();
        let mut comps = Vec::new();
        for k in keep {
            let i = self.coords.iter().position(|c| c == k).ok_or_else(|| {
                Error::CoordinateMismatch("restriction keeps an unknown coordinate".into())
            })?;
            comps.push(self.components[i].substitute(&b)?);
        }
        Ok(VectorField {
            coords: keep.to_vec(),
            time: self.time,
            components: comps,
        })
    }

    pub fn to_text(&self) -> Vec<(String, String)> {
        let reg = VarRegistry::standard();
        self.coords
            .iter()
            .zip(&self.components)
            .map(|(c, f)| (reg.name(*c).to_string(), print_expr(f)))
            .collect()
    }
}

fn hamiltonian_vector_field_raw(h: &RatFn, pairs: &[(Var, Var)], time: Var) -> VectorField {
    let mut coords = Vec::new();
    let mut components = Vec::new();
    for &(qv, pv) in pairs {
        coords.push(qv);
        components.push(h.derivative(pv));
        coords.push(pv);
        components.push(-h.derivative(qv));
    }
    VectorField {
        coords,
        time: Some(time),
        components,
    }
}

/// `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q` for each canonical pair.
pub fn hamiltonian_vector_field(s: &HamSystem) -> Result<VectorField> {
    Ok(hamiltonian_vector_field_raw(
        &s.hamiltonian()?,
        &s.pairs,
        s.time,
    ))
}

/// Field of an arbitrary function `h` over the given pairs.
pub fn field_of(h: &RatFn, pairs: &[(Var, Var)], time: Var) -> VectorField {
    hamiltonian_vector_field_raw(h, pairs, time)
}

/// `{F, G} = Σ_i (∂F/∂p_i ∂G/∂q_i − ∂F/∂q_i ∂G/∂p_i)`, so that `{p, q} = 1`.
pub fn poisson_bracket(f: &RatFn, g: &RatFn, pairs: &[(Var, Var)]) -> RatFn {
    let mut acc = RatFn::zero(f.registry());
    for &(qv, pv) in pairs {
        let fp = f.derivative(pv);
        let fq = f.derivative(qv);
        if !fp.is_zero() {
            acc = &acc + &(&fp * &g.derivative(qv));
        }
        if !fq.is_zero() {
            acc = &acc - &(&fq * &g.derivative(pv));
        }
    }
    acc
}

/// `[V, W]_i = Σ_j (V_j ∂W_i/∂u_j − W_j ∂V_i/∂u_j)`.
pub fn lie_bracket(v: &VectorField, w: &VectorField) -> Result<VectorField> {
    if v.coords != w.coords {
        return Err(Error::CoordinateMismatch(
            "lie bracket of fields on different coordinates".into(),
        ));
    }
    let components = v
        .components
        .iter()
        .zip(&w.components)
        .map(|(vi, wi)| &v.apply(wi) - &w.apply(vi))
        .collect();
    Ok(VectorField {
        coords: v.coords.clone(),
        time: None,
        components,
    })
}

/// `∂F/∂t + V_S · ∇F` along the flow of `s`.
pub fn total_time_derivative(f: &RatFn, s: &HamSystem) -> Result<RatFn> {
    let v = hamiltonian_vector_field(s)?;
    Ok(&f.derivative(s.time) + &v.apply(f))
}

/// Generators of an invariant subvariety and the parameter values under
/// which it is invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCycle {
    pub label: String,
    pub generators: Vec<RatFn>,
    pub parameters: Vec<(String, RatFn)>,
}

impl InvariantCycle {
    pub fn codimension(&self) -> usize {
        self.generators.len()
    }
}

/// The three rows of the invariant-cycle table of the main system.
pub fn main_invariant_cycles() -> Vec<InvariantCycle> {
    let zero = RatFn::zero(&VarRegistry::standard());
    let p = |s: &str| parse_expr(s).expect("catalog text");
    vec![
        InvariantCycle {
            label: "f1".into(),
            generators: vec![p("y")],
            parameters: vec![("alpha2".into(), zero.clone())],
        },
        InvariantCycle {
            label: "f2".into(),
            generators: vec![p("w")],
            parameters: vec![("alpha3".into(), zero.clone())],
        },
        InvariantCycle {
            label: "f3".into(),
            generators: vec![p("y - x^2 - w - t"), p("x + z")],
            parameters: vec![("alpha1".into(), zero)],
        },
    ]
}

/// Solves each generator for one phase variable it contains linearly with a
/// constant coefficient, preferring momenta, then positions in reverse pair
/// order.
pub fn triangularize(generators: &[RatFn], pairs: &[(Var, Var)]) -> Result<Vec<(Var, RatFn)>> {
    let mut order: Vec<Var> = pairs.iter().map(|p| p.1).collect();
    order.extend(pairs.iter().rev().map(|p| p.0));
    let mut solved: Vec<(Var, RatFn)> = Vec::new();
    for g in generators {
        let poly = g.as_poly().ok_or_else(|| {
            Error::Parameter("invariant-cycle generators must be polynomial".into())
        })?;
        let mut chosen = None;
        for &v in &order {
            if solved.iter().any(|(s, _)| *s == v) || poly.degree_in(v) != 1 {
                continue;
            }
            let coeffs = poly.coefficients_in(v);
            if !coeffs[1].is_constant() {
                continue;
            }
            let c = coeffs[1].constant_term();
            let value = RatFn::from_poly(coeffs[0].scale(&(-c.recip())));
            if solved.iter().any(|(s, _)| value.contains_var(*s)) {
                continue;
            }
            chosen = Some((v, value));
            break;
        }
        let (v, value) = chosen.ok_or_else(|| {
            Error::Algebra(crate::algebra::AlgebraError::NonTriangular(format!(
                "cannot solve `{}` for a fresh variable",
                print_expr(g)
            )))
        })?;
        solved.push((v, value));
    }
    Ok(solved)
}

/// True iff the flow of `s` (at the cycle's parameter values) is tangent to
/// the common zero set of the generators.
pub fn invariant_cycle_check(s: &HamSystem, c: &InvariantCycle) -> Result<bool> {
    let mut params = s.params().clone();
    for (name, value) in &c.parameters {
        params = params.with(name, value.clone())?;
    }
    let s = s.with_params(params);
    let constraints = triangularize(&c.generators, s.pairs())?;
    for g in &c.generators {
        let d = total_time_derivative(g, &s)?;
        if !vanishes_on_variety(&d, &constraints)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> RatFn {
        parse_expr(s).unwrap()
    }

    #[test]
    fn main_hamiltonian_matches_printed_text() {
        let s = build_system(SystemId::Main, None, None).unwrap();
        assert_eq!(
            s.hamiltonian().unwrap(),
            p("-2*x^2*y+2*y^2-2*t*y-2*alpha2*x+z^2*w+w^2+t*w+alpha3*z-3*y*w")
        );
    }

    #[test]
    fn main_field_and_dy_partial() {
        let s = build_system(SystemId::Main, None, None).unwrap();
        let h = s.hamiltonian().unwrap();
        assert_eq!(h.derivative(var("y")), p("-2*x^2+4*y-2*t-3*w"));
        let v = hamiltonian_vector_field(&s).unwrap();
        let expected = [
            "-2*x^2+4*y-3*w-2*t",
            "4*x*y+2*alpha2",
            "z^2+2*w-3*y+t",
            "-2*z*w-alpha3",
        ];
        for (c, e) in v.components.iter().zip(expected) {
            assert_eq!(*c, p(e));
        }
    }

    #[test]
    fn generic_keeps_coupling_symbolic() {
        let s = build_system(SystemId::Generic, None, None).unwrap();
        let h = s.hamiltonian().unwrap();
        let coupling = h.numer().coefficients_in(var("a"));
        assert_eq!(coupling.len(), 2);
        assert_eq!(RatFn::from_poly(coupling[1].clone()), p("y*w"));
    }

    #[test]
    fn hone_contains_three_quarter_coupling() {
        let h = build_system(SystemId::Hone, None, None)
            .unwrap()
            .hamiltonian()
            .unwrap();
        let yw = h.numer().coefficients_in(var("y"))[1].coefficients_in(var("w"))[1].clone();
        assert_eq!(yw.constant_term(), q(3, 4));
    }

    #[test]
    fn sys14_last_component() {
        let s = build_system(SystemId::Phi2Image, None, None).unwrap();
        let v = hamiltonian_vector_field(&s).unwrap();
        assert_eq!(v.components[3], p("w^2-2*x*w+y"));
    }

    #[test]
    fn zero_hamiltonian_gives_zero_field() {
        let reg = VarRegistry::standard();
        let s = HamSystem::new(
            "zero",
            RatFn::zero(&reg),
            vec![(var("x"), var("y")), (var("z"), var("w"))],
            var("t"),
            ParameterPoint::symbolic(Relation::Free),
        )
        .unwrap();
        assert!(hamiltonian_vector_field(&s).unwrap().is_zero());
    }

    #[test]
    fn unknown_system_id() {
        assert!(matches!(
            "frob".parse::<SystemId>(),
            Err(Error::UnknownId { .. })
        ));
    }

    #[test]
    fn canonical_bracket_sign() {
        let pairs = [(var("q1"), var("p1")), (var("q2"), var("p2"))];
        assert!(poisson_bracket(&p("p1"), &p("q1"), &pairs).is_one());
        assert!(poisson_bracket(&p("p1"), &p("q2"), &pairs).is_zero());
    }

    #[test]
    fn lie_bracket_constant_against_linear() {
        let reg = VarRegistry::standard();
        let coords = vec![var("x"), var("y")];
        let v = VectorField {
            coords: coords.clone(),
            time: None,
            components: vec![RatFn::one(&reg), RatFn::zero(&reg)],
        };
        let w = VectorField {
            coords,
            time: None,
            components: vec![p("x"), RatFn::zero(&reg)],
        };
        let b = lie_bracket(&v, &w).unwrap();
        assert!(b.components[0].is_one() && b.components[1].is_zero());
        assert!(lie_bracket(&v, &v).unwrap().is_zero());
    }

    #[test]
    fn time_derivative_of_time_is_one() {
        let s = build_system(SystemId::Main, None, None).unwrap();
        assert!(total_time_derivative(&p("t"), &s).unwrap().is_one());
    }

    #[test]
    fn parameter_elimination_respects_relation() {
        let pp = ParameterPoint::symbolic(Relation::SumOne);
        assert_eq!(pp.value("alpha1"), p("(1 - 2*alpha2 - alpha3)/2"));
        let z = pp
            .with("alpha1", RatFn::zero(&VarRegistry::standard()))
            .unwrap();
        assert_eq!(z.value("alpha2"), p("(1 - alpha3)/2"));
        assert!(z.satisfies_relation());
        let bad = z
            .with("alpha2", p("0"))
            .and_then(|z| z.with("alpha3", p("0")));
        assert!(bad.is_err());
    }

    #[test]
    fn invariant_cycle_rows() {
        let s = build_system(SystemId::Main, None, None).unwrap();
        for c in main_invariant_cycles() {
            assert!(invariant_cycle_check(&s, &c).unwrap(), "{}", c.label);
        }
        // without the parameter condition the first row fails
        let mut c = main_invariant_cycles().remove(0);
        c.parameters.clear();
        assert!(!invariant_cycle_check(&s, &c).unwrap());
    }

    #[test]
    fn codim_two_row_triangularizes_to_z_then_y() {
        let c = &main_invariant_cycles()[2];
        let pairs = [(var("x"), var("y")), (var("z"), var("w"))];
        let t = triangularize(&c.generators, &pairs).unwrap();
        assert_eq!(t[0].0, var("y"));
        assert_eq!(t[1], (var("z"), p("-x")));
    }
}
