//! Birational maps with an affine action on the parameters: construction,
//! composition, symplecticity, and invariance/conjugacy residuals.

use std::fmt;
use std::str::FromStr;

use crate::algebra::{sym, var, Bindings, RatFn, Var, VarRegistry};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, print_expr};
use crate::hamiltonian::{
    hamiltonian_vector_field, poisson_bracket, HamSystem, ParameterPoint, Relation, ALPHAS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MapId {
    /// Generic family, `x ↦ x + alpha1/y`.
    S1,
    /// Generic family, `z ↦ z + alpha2/w`.
    S2,
    S1Main,
    S2Main,
    S3Main,
    S1Qp,
    S2Qp,
    S3Qp,
    Phi1,
    Phi2,
    Identity,
    IdentityQp,
}

impl MapId {
    pub const ALL: [MapId; 12] = [
        MapId::S1,
        MapId::S2,
        MapId::S1Main,
        MapId::S2Main,
        MapId::S3Main,
        MapId::S1Qp,
        MapId::S2Qp,
        MapId::S3Qp,
        MapId::Phi1,
        MapId::Phi2,
        MapId::Identity,
        MapId::IdentityQp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MapId::S1 => "S1",
            MapId::S2 => "S2",
            MapId::S1Main => "s1",
            MapId::S2Main => "s2",
            MapId::S3Main => "s3",
            MapId::S1Qp => "s1_qp",
            MapId::S2Qp => "s2_qp",
            MapId::S3Qp => "s3_qp",
            MapId::Phi1 => "phi1",
            MapId::Phi2 => "phi2",
            MapId::Identity => "id",
            MapId::IdentityQp => "id_qp",
        }
    }
}

impl fmt::Display for MapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MapId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownId {
                kind: "map",
                id: s.to_string(),
            })
    }
}

/// `(u; alpha) ↦ (components(u, alpha); params(alpha))`, time fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct BirationalMap {
    pub id: String,
    pub coords: Vec<Var>,
    pub components: Vec<RatFn>,
    pub params: [RatFn; 3],
    pub relation: Relation,
}

const XYZW: [&str; 4] = ["x", "y", "z", "w"];
const QP: [&str; 4] = ["q1", "p1", "q2", "p2"];

fn parsed(texts: &[&str]) -> Vec<RatFn> {
    texts
        .iter()
        .map(|t| parse_expr(t).expect("catalog text parses"))
        .collect()
}

/// Replaces `x, y, z, w` in a template with the names in `names`.
fn rename(text: &str, names: [&str; 4]) -> String {
    let mut out = String::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            match XYZW.iter().position(|n| *n == word) {
                Some(k) => out.push_str(names[k]),
                None => out.push_str(word),
            }
        } else {
            out.push(c as char);
            i += 1;
        }
    }
    out
}

fn s3_components(f: &str, g: &str, y_shift: &str) -> [String; 4] {
    let n = format!("(x*({f}) - (x + z)*w + alpha1)");
    [
        format!("{n}/({f})"),
        format!("{y_shift} + {n}^2/({f})^2 - (x + z)*({g})/({f})"),
        format!("-({f})/(x + z) - {n}/({f})"),
        format!("-(x + z)*({g})/({f})"),
    ]
}

pub fn build_map(id: MapId) -> BirationalMap {
    let alphas = ["alpha1", "alpha2", "alpha3"];
    let (names, comps, params, relation): ([&str; 4], Vec<String>, [&str; 3], Relation) = match id {
        MapId::S1 => (
            XYZW,
            vec!["x + alpha1/y".into(), "y".into(), "z".into(), "w".into()],
            ["-alpha1", "alpha2", "alpha3"],
            Relation::Free,
        ),
        MapId::S2 => (
            XYZW,
            vec!["x".into(), "y".into(), "z + alpha2/w".into(), "w".into()],
            ["alpha1", "-alpha2", "alpha3"],
            Relation::Free,
        ),
        MapId::S1Main | MapId::S1Qp => (
            if id == MapId::S1Main { XYZW } else { QP },
            vec!["x + alpha2/y".into(), "y".into(), "z".into(), "w".into()],
            ["alpha1 + 2*alpha2", "-alpha2", "alpha3"],
            if id == MapId::S1Main {
                Relation::SumOne
            } else {
                Relation::SumZero
            },
        ),
        MapId::S2Main | MapId::S2Qp => (
            if id == MapId::S2Main { XYZW } else { QP },
            vec!["x".into(), "y".into(), "z + alpha3/w".into(), "w".into()],
            ["alpha1 + alpha3", "alpha2", "-alpha3"],
            if id == MapId::S2Main {
                Relation::SumOne
            } else {
                Relation::SumZero
            },
        ),
        MapId::S3Main => (
            XYZW,
            s3_components(
                "y - x^2 - w - t",
                "-1 - (x + z)*w + 2*alpha1 + 2*alpha2",
                "y - x^2 - w",
            )
            .to_vec(),
            ["-alpha1 - alpha3", "2*alpha1 + alpha2 + alpha3", "alpha3"],
            Relation::SumOne,
        ),
        MapId::S3Qp => (
            QP,
            s3_components(
                "y - x^2 - w",
                "-(x + z)*w + 2*alpha1 + 2*alpha2",
                "y - x^2 - w",
            )
            .to_vec(),
            ["-alpha1 - alpha3", "2*alpha1 + alpha2 + alpha3", "alpha3"],
            Relation::SumZero,
        ),
        MapId::Phi1 => (
            XYZW,
            vec![
                "x - ((x + z)*w - alpha1)/(-t - w - x^2 + y)".into(),
                "-t - w - x^2 + y".into(),
                "-w*(-t - w - x^2 + y)".into(),
                "(x + z)/(-t - w - x^2 + y)".into(),
            ],
            alphas,
            Relation::SumOne,
        ),
        MapId::Phi2 => (
            XYZW,
            vec![
                "x".into(),
                "-t - w - x^2 + y".into(),
                "-w".into(),
                "x + z".into(),
            ],
            alphas,
            Relation::SumOne,
        ),
        MapId::Identity | MapId::IdentityQp => (
            if id == MapId::Identity { XYZW } else { QP },
            XYZW.iter().map(|s| s.to_string()).collect(),
            alphas,
            Relation::Free,
        ),
    };
    let texts: Vec<String> = comps.iter().map(|c| rename(c, names)).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let p = parsed(&params);
    BirationalMap {
        id: id.as_str().to_string(),
        coords: names.iter().map(|n| var(n)).collect(),
        components: parsed(&refs),
        params: [p[0].clone(), p[1].clone(), p[2].clone()],
        relation,
    }
}

impl BirationalMap {
    pub fn identity(coords: Vec<Var>) -> Self {
        let reg = VarRegistry::standard();
        Self {
            id: "id".into(),
            components: coords.iter().map(|&v| RatFn::var(&reg, v)).collect(),
            coords,
            params: ALPHAS.map(sym),
            relation: Relation::Free,
        }
    }

    /// Bindings `u_j ↦ component_j, alpha_k ↦ params_k`, applied simultaneously.
    pub fn bindings(&self) -> Bindings {
        let mut b: Bindings = self
            .coords
            .iter()
            .copied()
            .zip(self.components.iter().cloned())
            .collect();
        for (n, p) in ALPHAS.iter().zip(&self.params) {
            b.insert(var(n), p.clone());
        }
        b
    }

    /// Pulls `f` back along the map: `f(M(u); P(alpha))`.
    pub fn pull_back(&self, f: &RatFn) -> Result<RatFn> {
        Ok(f.substitute(&self.bindings())?)
    }

    /// Applies the elimination of a relation to every component and parameter.
    pub fn reduced(&self, rel: Relation) -> Result<Self> {
        let point = ParameterPoint::symbolic(rel);
        let mut out = self.clone();
        for c in out.components.iter_mut() {
            *c = point.apply(c)?;
        }
        for p in out.params.iter_mut() {
            *p = point.apply(p)?;
        }
        Ok(out)
    }

    /// True when the parameter image satisfies the map's relation whenever
    /// the source parameters do.
    pub fn parameter_action_preserves_relation(&self) -> Result<bool> {
        let Some(defect) = self.relation.defect() else {
            return Ok(true);
        };
        let b: Bindings = ALPHAS
            .iter()
            .map(|n| var(n))
            .zip(self.params.iter().cloned())
            .collect();
        let image = defect.substitute(&b)?;
        Ok(ParameterPoint::symbolic(self.relation)
            .apply(&image)?
            .is_zero())
    }

    pub fn to_text(&self) -> Vec<String> {
        self.components.iter().map(print_expr).collect()
    }
}

/// `M1` first, then `M2`.
pub fn compose(m1: &BirationalMap, m2: &BirationalMap) -> Result<BirationalMap> {
    if m1.coords != m2.coords {
        return Err(Error::CoordinateMismatch(format!(
            "cannot compose `{}` with `{}`",
            m1.id, m2.id
        )));
    }
    let b = m1.bindings();
    let components = m2
        .components
        .iter()
        .map(|c| c.substitute(&b))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let pb: Bindings = ALPHAS
        .iter()
        .map(|n| var(n))
        .zip(m1.params.iter().cloned())
        .collect();
    let params = [0, 1, 2].map(|k| m2.params[k].substitute(&pb));
    let [p0, p1, p2] = params;
    let relation = match (m1.relation, m2.relation) {
        (Relation::Free, r) | (r, Relation::Free) => r,
        (a, b) if a == b => a,
        _ => {
            return Err(Error::Parameter(
                "composing maps with different parameter relations".into(),
            ))
        }
    };
    Ok(BirationalMap {
        id: format!("{}.{}", m1.id, m2.id),
        coords: m1.coords.clone(),
        components,
        params: [p0?, p1?, p2?],
        relation,
    })
}

/// Residual vector with a label per slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub labels: Vec<String>,
    pub components: Vec<RatFn>,
}

impl Residual {
    pub fn pass(&self) -> bool {
        self.components.iter().all(RatFn::is_zero)
    }

    /// `label: expr` lines for the nonzero slots.
    pub fn describe(&self) -> String {
        let lines: Vec<String> = self
            .labels
            .iter()
            .zip(&self.components)
            .filter(|(_, c)| !c.is_zero())
            .map(|(l, c)| format!("{l}: {}", print_expr(c)))
            .collect();
        if lines.is_empty() {
            "0".into()
        } else {
            lines.join("; ")
        }
    }
}

/// Canonical-bracket preservation: `{Y_i, X_i} − 1` for each pair, then every
/// cross bracket, reduced modulo the map's relation.
pub fn is_symplectic(m: &BirationalMap, pairs: &[(Var, Var)]) -> Result<Residual> {
    let n = m.components.len();
    if n != 2 * pairs.len() {
        return Err(Error::CoordinateMismatch(
            "map and pairs differ in dimension".into(),
        ));
    }
    let point = ParameterPoint::symbolic(m.relation);
    let reg = VarRegistry::standard();
    let name = |i: usize| reg.name(m.coords[i]).to_uppercase();
    let mut labels = Vec::new();
    let mut comps = Vec::new();
    for i in 0..pairs.len() {
        let (x, y) = (&m.components[2 * i], &m.components[2 * i + 1]);
        let b = &poisson_bracket(y, x, pairs) - &RatFn::one(&reg);
        labels.push(format!("{{{},{}}}-1", name(2 * i + 1), name(2 * i)));
        comps.push(point.apply(&b)?);
    }
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 && i % 2 == 0 {
                continue;
            }
            labels.push(format!("{{{},{}}}", name(i), name(j)));
            comps.push(point.apply(&poisson_bracket(&m.components[i], &m.components[j], pairs))?);
        }
    }
    Ok(Residual {
        labels,
        components: comps,
    })
}

fn coordinate_labels(coords: &[Var]) -> Vec<String> {
    let reg = VarRegistry::standard();
    coords.iter().map(|&v| reg.name(v).to_string()).collect()
}

/// Chain-rule derivative of each component of `m` along `s`.
fn pushed_flow(s: &HamSystem, m: &BirationalMap) -> Result<Vec<RatFn>> {
    let v = hamiltonian_vector_field(s)?;
    if v.coords != m.coords {
        return Err(Error::CoordinateMismatch(format!(
            "system `{}` and map `{}`",
            s.id(),
            m.id
        )));
    }
    m.components
        .iter()
        .map(|c| {
            let c = s.params().apply(c)?;
            Ok(&c.derivative(s.time()) + &v.apply(&c))
        })
        .collect()
}

/// `d/dt M(u)` along `S` minus `S`'s right-hand side at `(M(u); P(alpha))`.
pub fn invariance_residual(s: &HamSystem, m: &BirationalMap) -> Result<Residual> {
    let lhs = pushed_flow(s, m)?;
    let raw = crate::hamiltonian::field_of(&s.raw_hamiltonian()?, s.pairs(), s.time());
    let b = m.bindings();
    let mut comps = Vec::with_capacity(lhs.len());
    for (l, r) in lhs.iter().zip(&raw.components) {
        let r = s.params().apply(&r.substitute(&b)?)?;
        comps.push(s.params().apply(&(l - &r))?);
    }
    Ok(Residual {
        labels: coordinate_labels(&m.coords),
        components: comps,
    })
}

/// `d/dt M(u)` along `source` minus `target`'s right-hand side at `M(u)`.
pub fn conjugacy_residual(
    source: &HamSystem,
    m: &BirationalMap,
    target: &HamSystem,
) -> Result<Residual> {
    if source.time() != target.time() {
        return Err(Error::CoordinateMismatch(
            "source and target use different time symbols".into(),
        ));
    }
    let lhs = pushed_flow(source, m)?;
    let tv = hamiltonian_vector_field(target)?;
    let b: Bindings = tv
        .coords
        .iter()
        .copied()
        .zip(m.components.iter().cloned())
        .collect();
    let mut comps = Vec::with_capacity(lhs.len());
    for (l, r) in lhs.iter().zip(&tv.components) {
        let r = source.params().apply(&r.substitute(&b)?)?;
        comps.push(source.params().apply(&(l - &r))?);
    }
    Ok(Residual {
        labels: coordinate_labels(&m.coords),
        components: comps,
    })
}

/// Composes `word` left to right and compares with `expected` (components
/// and parameter action) modulo `rel`.
pub fn group_relation_check(word: &[MapId], expected: MapId, rel: Relation) -> Result<bool> {
    let Some((first, rest)) = word.split_first() else {
        return Err(Error::Usage("empty word".into()));
    };
    let mut acc = build_map(*first);
    for id in rest {
        acc = compose(&acc, &build_map(*id))?;
    }
    let target = match expected {
        MapId::Identity | MapId::IdentityQp => BirationalMap::identity(acc.coords.clone()),
        other => build_map(other),
    };
    let a = acc.reduced(rel)?;
    let b = target.reduced(rel)?;
    Ok(a.coords == b.coords && a.components == b.components && a.params == b.params)
}

/// Parameter image of the word composed left to right, reduced modulo `rel`.
pub fn parameter_action(word: &[MapId], rel: Relation) -> Result<[RatFn; 3]> {
    let Some((first, rest)) = word.split_first() else {
        return Err(Error::Usage("empty word".into()));
    };
    let mut acc = build_map(*first);
    for id in rest {
        acc = compose(&acc, &build_map(*id))?;
    }
    Ok(acc.reduced(rel)?.params)
}

/// Under `rel`, the two printed forms of the repeated factor in `s3` agree.
pub fn s3_factor_consistency(rel: Relation) -> Result<bool> {
    let (lhs, rhs) = match rel {
        Relation::SumOne => (
            "-1 - (x + z)*w + 2*alpha1 + 2*alpha2",
            "-(x + z)*w - alpha3",
        ),
        Relation::SumZero => (
            "-(q1 + q2)*p2 + 2*alpha1 + 2*alpha2",
            "-(q1 + q2)*p2 - alpha3",
        ),
        Relation::Free => return Ok(false),
    };
    let point = ParameterPoint::symbolic(rel);
    Ok(point
        .apply(&(&parse_expr(lhs)? - &parse_expr(rhs)?))?
        .is_zero())
}
