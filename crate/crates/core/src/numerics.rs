//! Complex-time integration of the polynomial systems: an embedded
//! Dormand–Prince 5(4) pair with PI step control and dense output, run
//! along polylines in the complex time plane, plus continuation through
//! movable poles by switching to a chart where the solution stays finite.

use std::fmt;

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::algebra::{var, MPoly, RatFn, Var, VarRegistry, Q};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_system, hamiltonian_vector_field, printed_field, FamilyConstants, HamSystem,
    ParameterPoint, Relation, SystemId, VectorField, ALPHAS,
};
use crate::holomorphy::{chart_pushforward, Chart};
use crate::transforms::BirationalMap;

pub type C64 = Complex64;

/// Polynomial with `f64` coefficients over a fixed list of variable slots.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(C64, Vec<(usize, u16)>)>,
}

impl CompiledPoly {
    pub fn compile(p: &MPoly, slots: &[Var]) -> Result<Self> {
        let reg = p.registry();
        let mut terms = Vec::with_capacity(p.num_terms());
        for (m, c) in p.terms() {
            let mut factors = Vec::new();
            for (i, &e) in m.exps().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let slot = slots.iter().position(|v| v.index() == i).ok_or_else(|| {
                    Error::Numerics(format!("symbol `{}` has no numeric value", reg.names()[i]))
                })?;
                factors.push((slot, e));
            }
            let c = c
                .to_f64()
                .ok_or_else(|| Error::Numerics("coefficient out of range".into()))?;
            terms.push((C64::new(c, 0.0), factors));
        }
        Ok(Self { terms })
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        let mut acc = C64::zero();
        for (c, factors) in &self.terms {
            let mut t = *c;
            for &(slot, e) in factors {
                t *= x[slot].powu(e as u32);
            }
            acc += t;
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub struct CompiledRat {
    num: CompiledPoly,
    den: Option<CompiledPoly>,
}

impl CompiledRat {
    pub fn compile(f: &RatFn, slots: &[Var]) -> Result<Self> {
        let den = if f.is_polynomial() {
            None
        } else {
            Some(CompiledPoly::compile(f.denom(), slots)?)
        };
        Ok(Self {
            num: CompiledPoly::compile(f.numer(), slots)?,
            den,
        })
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        let n = self.num.eval(x);
        match &self.den {
            None => n,
            Some(d) => n / d.eval(x),
        }
    }

    pub fn denominator(&self, x: &[C64]) -> C64 {
        self.den.as_ref().map_or(C64::new(1.0, 0.0), |d| d.eval(x))
    }
}

/// Vector of compiled functions of `(coords..., time)`.
#[derive(Clone, Debug)]
pub struct CompiledMap {
    slots: Vec<Var>,
    comps: Vec<CompiledRat>,
}

impl CompiledMap {
    pub fn compile(comps: &[RatFn], coords: &[Var], time: Var) -> Result<Self> {
        let mut slots = coords.to_vec();
        slots.push(time);
        let comps = comps
            .iter()
            .map(|c| CompiledRat::compile(c, &slots))
            .collect::<Result<_>>()?;
        Ok(Self { slots, comps })
    }

    pub fn from_field(v: &VectorField) -> Result<Self> {
        Self::compile(&v.components, &v.coords, v.time.unwrap_or_else(|| var("t")))
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    fn args(&self, t: C64, y: &[C64]) -> Vec<C64> {
        let mut a = Vec::with_capacity(self.slots.len());
        a.extend_from_slice(y);
        a.push(t);
        a
    }

    pub fn eval(&self, t: C64, y: &[C64]) -> Vec<C64> {
        let a = self.args(t, y);
        self.comps.iter().map(|c| c.eval(&a)).collect()
    }

    pub fn eval_into(&self, t: C64, y: &[C64], out: &mut [C64]) {
        let a = self.args(t, y);
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.eval(&a);
        }
    }

    /// Smallest denominator magnitude among the components.
    pub fn min_denominator(&self, t: C64, y: &[C64]) -> f64 {
        let a = self.args(t, y);
        self.comps
            .iter()
            .map(|c| c.denominator(&a).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Numeric parameter values; missing alphas are solved from the relation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NumParams {
    pub alpha: [Option<Q>; 3],
    /// `(a, a1, a2, a3)` for the generic family.
    pub constants: Option<[Q; 4]>,
}

impl NumParams {
    pub fn new(alpha2: Q, alpha3: Q) -> Self {
        Self {
            alpha: [None, Some(alpha2), Some(alpha3)],
            constants: None,
        }
    }

    pub fn point(&self, rel: Relation) -> Result<ParameterPoint> {
        let reg = VarRegistry::standard();
        let mut p = ParameterPoint::symbolic(rel);
        for k in [1, 2, 0] {
            if let Some(v) = &self.alpha[k] {
                p = p.with(ALPHAS[k], RatFn::constant(&reg, v.clone()))?;
            }
        }
        for name in ALPHAS {
            if !p.value(name).is_constant() {
                return Err(Error::Parameter(format!("{name} needs a numeric value")));
            }
        }
        Ok(p)
    }

    /// Catalog system at these values.
    pub fn system(&self, id: SystemId) -> Result<HamSystem> {
        let rel = crate::hamiltonian::catalog_entry(id).relation;
        let consts = match (&self.constants, id) {
            (Some(c), SystemId::Generic) => {
                let reg = VarRegistry::standard();
                let k = |i: usize| RatFn::constant(&reg, c[i].clone());
                Some(FamilyConstants {
                    a: k(0),
                    a1: k(1),
                    a2: k(2),
                    a3: k(3),
                })
            }
            (None, SystemId::Generic) => {
                return Err(Error::Parameter(
                    "generic family needs numeric constants".into(),
                ))
            }
            _ => None,
        };
        build_system(id, Some(self.point(rel)?), consts)
    }
}

/// Polyline in the complex time plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub points: Vec<C64>,
}

impl Path {
    pub fn new(points: Vec<C64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Usage("a path needs at least two points".into()));
        }
        if points.windows(2).any(|w| (w[1] - w[0]).norm() == 0.0) {
            return Err(Error::Usage("path has a zero-length segment".into()));
        }
        Ok(Self { points })
    }

    pub fn segment(a: C64, b: C64) -> Result<Self> {
        Self::new(vec![a, b])
    }

    /// `"0 -> 3+2i -> 5"`.
    pub fn parse(text: &str) -> Result<Self> {
        let pts = text
            .split("->")
            .map(|s| parse_complex(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts)
    }

    fn lengths(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.lengths().iter().sum()
    }

    /// Segment index, start arc length, unit direction.
    fn locate(&self, tau: f64) -> (usize, f64, C64) {
        let mut start = 0.0;
        let lens = self.lengths();
        for (k, l) in lens.iter().enumerate() {
            if tau < start + l || k + 1 == lens.len() {
                let dir = (self.points[k + 1] - self.points[k]) / l;
                return (k, start, dir);
            }
            start += l;
        }
        unreachable!("path has segments")
    }

    pub fn time_at(&self, tau: f64) -> C64 {
        let (k, start, dir) = self.locate(tau);
        self.points[k] + dir * (tau - start)
    }

    fn boundaries(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for l in self.lengths() {
            acc += l;
            out.push(acc);
        }
        out
    }
}

/// `"3"`, `"-1.5i"`, `"2-0.5i"`, `"i"`.
pub fn parse_complex(text: &str) -> Result<C64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Usage(format!("cannot parse complex number `{text}`"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let split = (1..bytes.len()).rev().find(|&i| {
            (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
        });
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            v => v.parse::<f64>().map_err(|_| bad())?,
        };
        let re = re.parse::<f64>().map_err(|_| bad())?;
        Ok(C64::new(re, im))
    } else {
        Ok(C64::new(s.parse::<f64>().map_err(|_| bad())?, 0.0))
    }
}

/// `"x=0,y=1,z=0,w=1"` in the order of `coords`.
pub fn parse_state(text: &str, coords: &[Var]) -> Result<Vec<C64>> {
    let reg = VarRegistry::standard();
    let mut out = vec![None; coords.len()];
    for part in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected name=value, got `{part}`")))?;
        let idx = coords
            .iter()
            .position(|&c| reg.name(c) == k.trim())
            .ok_or_else(|| Error::Usage(format!("`{}` is not a coordinate", k.trim())))?;
        out[idx] = Some(parse_complex(v)?);
    }
    out.into_iter()
        .zip(coords)
        .map(|(v, &c)| {
            v.ok_or_else(|| Error::Usage(format!("missing initial value for `{}`", reg.name(c))))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub tol: f64,
    pub max_steps: usize,
    /// Smallest step relative to the path length before giving up.
    pub min_step_ratio: f64,
}

impl StepControl {
    pub fn new(tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Usage("tolerance must be positive".into()));
        }
        Ok(Self {
            tol,
            max_steps: 2_000_000,
            min_step_ratio: 1e-14,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchConfig {
    /// Coordinate magnitude that triggers a chart change.
    pub threshold: f64,
    /// The new chart is entered from the latest state whose magnitude is at
    /// most this.
    pub reexpress_radius: f64,
    /// Leave a secondary chart once the principal coordinates fall below this.
    pub return_radius: f64,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        Self {
            threshold: 1e6,
            reexpress_radius: 1e2,
            return_radius: 1e1,
        }
    }
}

impl SwitchConfig {
    pub fn with_threshold(threshold: f64) -> Self {
        let d = Self::default();
        Self {
            threshold,
            reexpress_radius: d.reexpress_radius.min(threshold),
            return_radius: d.return_radius.min(threshold / 2.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub tau: f64,
    pub t: C64,
    pub chart: usize,
    pub state: Vec<C64>,
    pub err: f64,
}

#[derive(Clone, Debug)]
struct DenseStep {
    tau0: f64,
    h: f64,
    chart: usize,
    rcont: [Vec<C64>; 5],
}

impl DenseStep {
    fn eval(&self, tau: f64) -> Vec<C64> {
        let theta = (tau - self.tau0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        (0..r1.len())
            .map(|i| r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * theta1) * theta) * theta1) * theta)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchEvent {
    pub tau: f64,
    pub t: C64,
    pub from: usize,
    pub to: usize,
    /// Max-norm error of re-expressing the state and mapping it back.
    pub round_trip: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub path: Path,
    pub coords: Vec<Var>,
    /// Chart labels; index 0 is the principal coordinate system.
    pub charts: Vec<String>,
    pub samples: Vec<Sample>,
    pub switches: Vec<SwitchEvent>,
    steps: Vec<DenseStep>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has a start sample")
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Dense-output state at arc length `tau`, with its chart.
    pub fn state_at(&self, tau: f64) -> Option<(usize, Vec<C64>)> {
        let idx = self.steps.partition_point(|s| s.tau0 + s.h < tau);
        let s = self.steps.get(idx)?;
        if tau < s.tau0 - 1e-15 * (1.0 + s.tau0.abs()) {
            return None;
        }
        Some((s.chart, s.eval(tau)))
    }

    /// Largest step-wise change of `f` along the principal-chart samples.
    pub fn drift(&self, f: impl Fn(C64, &[C64]) -> C64) -> f64 {
        let principal: Vec<&Sample> = self.samples.iter().filter(|s| s.chart == 0).collect();
        let Some(first) = principal.first() else {
            return 0.0;
        };
        let f0 = f(first.t, &first.state);
        principal
            .iter()
            .map(|s| (f(s.t, &s.state) - f0).norm())
            .fold(0.0, f64::max)
    }

    /// JSON-lines rows `{t_re, t_im, chart, state, err}`.
    pub fn json_lines(&self) -> Vec<String> {
        #[derive(serde::Serialize)]
        struct Row<'a> {
            t_re: f64,
            t_im: f64,
            chart: &'a str,
            state: Vec<f64>,
            err: f64,
        }
        self.samples
            .iter()
            .map(|s| {
                let row = Row {
                    t_re: s.t.re,
                    t_im: s.t.im,
                    chart: &self.charts[s.chart],
                    state: s.state.iter().flat_map(|c| [c.re, c.im]).collect(),
                    err: s.err,
                };
                serde_json::to_string(&row).expect("finite rows serialize")
            })
            .collect()
    }
}

/// The flow in each chart plus the maps between charts and principal
/// coordinates.
struct Atlas {
    labels: Vec<String>,
    fields: Vec<CompiledMap>,
    to_chart: Vec<Option<CompiledMap>>,
    to_principal: Vec<Option<CompiledMap>>,
    coord_names: Vec<Vec<String>>,
}

impl Atlas {
    fn principal(s: &HamSystem) -> Result<Self> {
        let v = hamiltonian_vector_field(s)?;
        let reg = VarRegistry::standard();
        Ok(Self {
            labels: vec!["principal".into()],
            fields: vec![CompiledMap::from_field(&v)?],
            to_chart: vec![None],
            to_principal: vec![None],
            coord_names: vec![v.coords.iter().map(|&c| reg.name(c).to_string()).collect()],
        })
    }

    fn add_chart(&mut self, s: &HamSystem, c: &Chart) -> Result<()> {
        let v = chart_pushforward(s, c)?;
        let reg = VarRegistry::standard();
        let fwd: Vec<RatFn> = c
            .forward
            .iter()
            .map(|f| s.params().apply(f))
            .collect::<Result<_>>()?;
        let inv: Vec<RatFn> = c
            .inverse
            .iter()
            .map(|f| s.params().apply(f))
            .collect::<Result<_>>()?;
        self.labels.push(c.id.to_string());
        self.fields.push(CompiledMap::from_field(&v)?);
        self.to_chart
            .push(Some(CompiledMap::compile(&fwd, &c.source, s.time())?));
        self.to_principal
            .push(Some(CompiledMap::compile(&inv, &c.target, s.time())?));
        self.coord_names
            .push(c.target.iter().map(|&v| reg.name(v).to_string()).collect());
        Ok(())
    }

    fn principal_state(&self, chart: usize, t: C64, y: &[C64]) -> Vec<C64> {
        match &self.to_principal[chart] {
            None => y.to_vec(),
            Some(m) => m.eval(t, y),
        }
    }

    fn chart_state(&self, chart: usize, t: C64, u: &[C64]) -> Vec<C64> {
        match &self.to_chart[chart] {
            None => u.to_vec(),
            Some(m) => m.eval(t, u),
        }
    }
}

fn max_norm(y: &[C64]) -> f64 {
    y.iter()
        .map(|c| c.norm())
        .fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const BETA: f64 = 0.04;
const SAFE: f64 = 0.9;
const FAC1: f64 = 0.2;
const FAC2: f64 = 10.0;

struct Stepper<'a> {
    field: &'a CompiledMap,
    dir: C64,
    t0: C64,
    tau_seg: f64,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
}

impl<'a> Stepper<'a> {
    fn new(field: &'a CompiledMap, n: usize) -> Self {
        Self {
            field,
            dir: C64::new(1.0, 0.0),
            t0: C64::zero(),
            tau_seg: 0.0,
            k: std::array::from_fn(|_| vec![C64::zero(); n]),
            tmp: vec![C64::zero(); n],
        }
    }

    fn time(&self, tau: f64) -> C64 {
        self.t0 + self.dir * (tau - self.tau_seg)
    }

    /// `dy/dtau = dir · f(t(tau), y)`.
    fn rhs(&self, tau: f64, y: &[C64], out: &mut [C64]) {
        self.field.eval_into(self.time(tau), y, out);
        for o in out.iter_mut() {
            *o *= self.dir;
        }
    }

    /// One trial step; `k[0]` must hold the derivative at `(tau, y)`.
    /// Returns the new state and the scaled error.
    fn attempt(&mut self, tau: f64, y: &[C64], h: f64, tol: f64) -> (Vec<C64>, f64) {
        let n = y.len();
        let stage = |k: &[Vec<C64>; 7], coefs: &[(usize, f64)], tmp: &mut Vec<C64>| {
            for i in 0..n {
                let mut acc = C64::zero();
                for &(j, a) in coefs {
                    acc += k[j][i] * a;
                }
                tmp[i] = y[i] + acc * h;
            }
        };
        let mut tmp = std::mem::take(&mut self.tmp);
        let mut out = vec![C64::zero(); n];
        stage(&self.k, &[(0, A21)], &mut tmp);
        self.rhs(tau + C2 * h, &tmp, &mut out);
        self.k[1].copy_from_slice(&out);
        stage(&self.k, &[(0, A31), (1, A32)], &mut tmp);
        self.rhs(tau + C3 * h, &tmp, &mut out);
        self.k[2].copy_from_slice(&out);
        stage(&self.k, &[(0, A41), (1, A42), (2, A43)], &mut tmp);
        self.rhs(tau + C4 * h, &tmp, &mut out);
        self.k[3].copy_from_slice(&out);
        stage(&self.k, &[(0, A51), (1, A52), (2, A53), (3, A54)], &mut tmp);
        self.rhs(tau + C5 * h, &tmp, &mut out);
        self.k[4].copy_from_slice(&out);
        stage(
            &self.k,
            &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)],
            &mut tmp,
        );
        self.rhs(tau + h, &tmp, &mut out);
        self.k[5].copy_from_slice(&out);
        let mut ynew = vec![C64::zero(); n];
        stage(
            &self.k,
            &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)],
            &mut ynew,
        );
        self.rhs(tau + h, &ynew, &mut out);
        self.k[6].copy_from_slice(&out);
        let mut err = 0.0;
        for i in 0..n {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            let sc = tol + tol * y[i].norm().max(ynew[i].norm());
            err += (e.norm() / sc).powi(2);
        }
        self.tmp = tmp;
        (ynew, (err / n as f64).sqrt())
    }

    fn dense(&self, y: &[C64], ynew: &[C64], h: f64) -> [Vec<C64>; 5] {
        let n = y.len();
        let mut r = std::array::from_fn(|_| vec![C64::zero(); n]);
        for i in 0..n {
            let ydiff = ynew[i] - y[i];
            let bspl = self.k[0][i] * h - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - self.k[6][i] * h - bspl;
            r[4][i] = (self.k[0][i] * D1
                + self.k[2][i] * D3
                + self.k[3][i] * D4
                + self.k[4][i] * D5
                + self.k[5][i] * D6
                + self.k[6][i] * D7)
                * h;
        }
        r
    }
}

fn initial_step(st: &mut Stepper, tau: f64, y: &[C64], tol: f64, remaining: f64) -> f64 {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|c| tol + tol * c.norm()).collect();
    let norm = |v: &[C64]| {
        (v.iter()
            .zip(&sc)
            .map(|(c, s)| (c.norm() / s).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(&st.k[0]);
    let mut h = if d0 < 1e-10 || d1 < 1e-10 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h = h.min(remaining);
    let y1: Vec<C64> = y.iter().zip(&st.k[0]).map(|(a, b)| a + b * h).collect();
    let mut f1 = vec![C64::zero(); n];
    st.rhs(tau + h, &y1, &mut f1);
    let diff: Vec<C64> = f1.iter().zip(&st.k[0]).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h;
    let der = d1.max(d2);
    let h1 = if der <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der).powf(0.2)
    };
    (100.0 * h).min(h1).min(remaining)
}

struct Driver<'a> {
    atlas: &'a Atlas,
    path: &'a Path,
    control: StepControl,
    switching: Option<SwitchConfig>,
}

impl Driver<'_> {
    fn run(&self, init: &[C64]) -> Result<Trajectory> {
        let n = init.len();
        if self.atlas.fields[0].dim() != n {
            return Err(Error::Usage(format!(
                "initial state has {} entries, system has {}",
                n,
                self.atlas.fields[0].dim()
            )));
        }
        let bounds = self.path.boundaries();
        let total = *bounds.last().expect("bounds");
        let h_min = self.control.min_step_ratio * total.max(1.0);
        let mut traj = Trajectory {
            path: self.path.clone(),
            coords: Vec::new(),
            charts: self.atlas.labels.clone(),
            samples: vec![Sample {
                tau: 0.0,
                t: self.path.points[0],
                chart: 0,
                state: init.to_vec(),
                err: 0.0,
            }],
            switches: Vec::new(),
            steps: Vec::new(),
        };
        let mut chart = 0usize;
        let mut tau = 0.0;
        let mut y = init.to_vec();
        let mut h: Option<f64> = None;
        let mut facold: f64 = 1e-4;
        let mut steps_taken = 0usize;

        while tau < total * (1.0 - 1e-15) {
            let (seg, seg_start, dir) = self.path.locate(tau);
            let seg_end = bounds[seg + 1];
            let mut st = Stepper::new(&self.atlas.fields[chart], n);
            st.dir = dir;
            st.t0 = self.path.points[seg];
            st.tau_seg = seg_start;
            let mut k0 = vec![C64::zero(); n];
            st.rhs(tau, &y, &mut k0);
            st.k[0] = k0;
            let remaining = seg_end - tau;
            let mut hh = match h {
                Some(v) => v.min(remaining),
                None => initial_step(&mut st, tau, &y, self.control.tol, remaining),
            };
            let mut reject = false;
            loop {
                steps_taken += 1;
                if steps_taken > self.control.max_steps {
                    return Err(Error::Numerics("step budget exhausted".into()));
                }
                if hh < h_min || !hh.is_finite() {
                    let names = &self.atlas.coord_names[chart];
                    let worst = (0..n)
                        .max_by(|&a, &b| y[a].norm().total_cmp(&y[b].norm()))
                        .unwrap_or(0);
                    return Err(Error::Numerics(format!(
                        "step size underflow at t = {} (chart {}): `{}` blows up (|{}| = {:.3e})",
                        fmt_c(st.time(tau)),
                        self.atlas.labels[chart],
                        names[worst],
                        names[worst],
                        y[worst].norm()
                    )));
                }
                let (ynew, err) = st.attempt(tau, &y, hh, self.control.tol);
                let err = if err.is_finite() { err } else { f64::INFINITY };
                let expo1 = 0.2 - BETA * 0.75;
                let fac11 = err.powf(expo1);
                if err <= 1.0 {
                    let mut fac = fac11 / facold.powf(BETA);
                    fac = (1.0 / FAC2).max((1.0 / FAC1).min(fac / SAFE));
                    facold = err.max(1e-4);
                    let mut hnew = hh / fac;
                    if reject {
                        hnew = hnew.min(hh);
                    }
                    let rcont = st.dense(&y, &ynew, hh);
                    traj.steps.push(DenseStep {
                        tau0: tau,
                        h: hh,
                        chart,
                        rcont,
                    });
                    tau = if (seg_end - (tau + hh)).abs() <= 1e-14 * seg_end.abs().max(1.0) {
                        seg_end
                    } else {
                        tau + hh
                    };
                    y = ynew;
                    traj.samples.push(Sample {
                        tau,
                        t: self.path.time_at(tau),
                        chart,
                        state: y.clone(),
                        err: err * self.control.tol,
                    });
                    h = Some(hnew);
                    break;
                }
                reject = true;
                hh /= (1.0 / FAC1).min(fac11 / SAFE);
            }
            if let Some(cfg) = self.switching {
                if let Some((new_chart, new_tau, new_y)) =
                    self.maybe_switch(&mut traj, chart, tau, &y, &cfg)?
                {
                    chart = new_chart;
                    tau = new_tau;
                    y = new_y;
                    h = None;
                    facold = 1e-4;
                }
            }
        }
        Ok(traj)
    }

    fn maybe_switch(
        &self,
        traj: &mut Trajectory,
        chart: usize,
        tau: f64,
        y: &[C64],
        cfg: &SwitchConfig,
    ) -> Result<Option<(usize, f64, Vec<C64>)>> {
        let t = self.path.time_at(tau);
        let atlas = self.atlas;
        let u = atlas.principal_state(chart, t, y);
        if chart != 0 && max_norm(&u) <= cfg.return_radius {
            let back = atlas.chart_state(chart, t, &u);
            traj.switches.push(SwitchEvent {
                tau,
                t,
                from: chart,
                to: 0,
                round_trip: max_diff(&back, y),
            });
            traj.samples.push(Sample {
                tau,
                t,
                chart: 0,
                state: u.clone(),
                err: 0.0,
            });
            return Ok(Some((0, tau, u)));
        }
        let norm = max_norm(y);
        if norm.is_finite() && norm <= cfg.threshold {
            return Ok(None);
        }
        let best = (0..atlas.labels.len())
            .filter(|&k| k != chart)
            .map(|k| (k, max_norm(&atlas.chart_state(k, t, &u))))
            .filter(|(_, m)| m.is_finite())
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((target, m)) = best.filter(|&(_, m)| m < norm && m <= cfg.threshold) else {
            return Err(Error::Numerics(format!(
                "no chart keeps the state bounded at t = {} (max |coordinate| = {norm:.3e})",
                fmt_c(t)
            )));
        };
        let _ = m;
        // re-enter from the latest moderate state of the current chart run
        let run_start = traj
            .samples
            .iter()
            .rposition(|s| s.chart != chart)
            .map_or(0, |i| i + 1);
        let anchor = (run_start..traj.samples.len())
            .rev()
            .find(|&i| {
                max_norm(&atlas.principal_state(chart, traj.samples[i].t, &traj.samples[i].state))
                    <= cfg.reexpress_radius
            })
            .unwrap_or(traj.samples.len() - 1);
        let a_tau = traj.samples[anchor].tau;
        let a_t = traj.samples[anchor].t;
        let a_u = atlas.principal_state(chart, a_t, &traj.samples[anchor].state);
        traj.samples.truncate(anchor + 1);
        traj.steps.retain(|s| s.tau0 < a_tau);
        let v = atlas.chart_state(target, a_t, &a_u);
        let back = atlas.principal_state(target, a_t, &v);
        traj.switches.push(SwitchEvent {
            tau: a_tau,
            t: a_t,
            from: chart,
            to: target,
            round_trip: max_diff(&back, &a_u),
        });
        traj.samples.push(Sample {
            tau: a_tau,
            t: a_t,
            chart: target,
            state: v.clone(),
            err: 0.0,
        });
        Ok(Some((target, a_tau, v)))
    }
}

fn fmt_c(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("{}{:+}i", c.re, c.im)
    }
}

/// Integrates `s` along `path` from `init` in the principal coordinates.
pub fn integrate(
    s: &HamSystem,
    init: &[C64],
    path: &Path,
    control: StepControl,
) -> Result<Trajectory> {
    let atlas = Atlas::principal(s)?;
    let mut t = Driver {
        atlas: &atlas,
        path,
        control,
        switching: None,
    }
    .run(init)?;
    t.coords = s.coords();
    Ok(t)
}

/// Integrates a bare vector field (used for reduced systems).
pub fn integrate_field(
    v: &VectorField,
    init: &[C64],
    path: &Path,
    control: StepControl,
) -> Result<Trajectory> {
    let reg = VarRegistry::standard();
    let atlas = Atlas {
        labels: vec!["principal".into()],
        fields: vec![CompiledMap::from_field(v)?],
        to_chart: vec![None],
        to_principal: vec![None],
        coord_names: vec![v.coords.iter().map(|&c| reg.name(c).to_string()).collect()],
    };
    let mut t = Driver {
        atlas: &atlas,
        path,
        control,
        switching: None,
    }
    .run(init)?;
    t.coords = v.coords.clone();
    Ok(t)
}

/// As [`integrate`], switching to a chart of `atlas` whenever a coordinate
/// exceeds the threshold and back once the principal coordinates are small.
pub fn continue_through_pole(
    s: &HamSystem,
    atlas: &[Chart],
    init: &[C64],
    path: &Path,
    control: StepControl,
    switching: SwitchConfig,
) -> Result<Trajectory> {
    let mut a = Atlas::principal(s)?;
    for c in atlas {
        a.add_chart(s, c)?;
    }
    let mut t = Driver {
        atlas: &a,
        path,
        control,
        switching: Some(switching),
    }
    .run(init)?;
    t.coords = s.coords();
    Ok(t)
}

/// Max over interior samples of `|dX/dt − target(X)|` with `X = M(y(t))`,
/// the derivative taken by fourth-order central differences on the dense
/// output.
pub fn numeric_conjugacy_check(
    source: &HamSystem,
    m: &BirationalMap,
    target: &HamSystem,
    traj: &Trajectory,
) -> Result<f64> {
    let comps: Vec<RatFn> = m
        .components
        .iter()
        .map(|c| source.params().apply(c))
        .collect::<Result<_>>()?;
    let map = CompiledMap::compile(&comps, &m.coords, source.time())?;
    let tv = hamiltonian_vector_field(target)?;
    let rhs = CompiledMap::from_field(&tv)?;
    let delta = 1e-3_f64.min(traj.path.length() / 100.0);
    let mut worst: f64 = 0.0;
    let eps = 1e-8;
    let total = traj.path.length();
    let bounds = traj.path.boundaries();
    for s in &traj.samples {
        if s.chart != 0 || s.tau < 2.0 * delta || s.tau > total - 2.0 * delta {
            continue;
        }
        // stencil must stay on one segment and one chart
        if bounds.iter().any(|b| (s.tau - b).abs() < 2.0 * delta) {
            continue;
        }
        let mut vals = Vec::with_capacity(4);
        let mut ok = true;
        for k in [-2.0, -1.0, 1.0, 2.0] {
            let tau = s.tau + k * delta;
            match traj.state_at(tau) {
                Some((0, y)) => {
                    let t = traj.path.time_at(tau);
                    if map.min_denominator(t, &y) < eps {
                        return Err(Error::Numerics(format!(
                            "map denominator vanishes near t = {}",
                            fmt_c(t)
                        )));
                    }
                    vals.push(map.eval(t, &y));
                }
                _ => ok = false,
            }
        }
        if !ok {
            continue;
        }
        if map.min_denominator(s.t, &s.state) < eps {
            return Err(Error::Numerics(format!(
                "map denominator vanishes near t = {}",
                fmt_c(s.t)
            )));
        }
        let (_, _, dir) = traj.path.locate(s.tau);
        let x = map.eval(s.t, &s.state);
        let f = rhs.eval(s.t, &x);
        for i in 0..x.len() {
            let d =
                (-vals[3][i] + vals[2][i] * 8.0 - vals[1][i] * 8.0 + vals[0][i]) / (12.0 * delta);
            worst = worst.max((d / dir - f[i]).norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticularSolutionReport {
    /// `dy/dt` and `dw/dt` on `y = w = 0`.
    pub symbolic: [RatFn; 2],
    pub max_momentum: Option<f64>,
    pub max_reduced_gap: Option<f64>,
}

impl ParticularSolutionReport {
    pub fn symbolic_pass(&self) -> bool {
        self.symbolic.iter().all(RatFn::is_zero)
    }

    pub fn numeric_pass(&self, momentum_tol: f64, gap_tol: f64) -> bool {
        matches!((self.max_momentum, self.max_reduced_gap), (Some(m), Some(g)) if m <= momentum_tol && g <= gap_tol)
    }
}

/// Checks that `y = w = 0` is invariant for the conjugate system and that
/// the reduced `(x, z)` system describes the motion there. The numeric part
/// runs when `start` is given and the parameters are numeric.
pub fn particular_solution_check(
    params: &ParameterPoint,
    start: Option<(C64, C64)>,
    path: &Path,
    tol: f64,
) -> Result<ParticularSolutionReport> {
    let sys14 = build_system(SystemId::Phi2Image, Some(params.clone()), None)?;
    let v = hamiltonian_vector_field(&sys14)?;
    let reg = VarRegistry::standard();
    let zero = RatFn::zero(&reg);
    let plane = [(var("y"), zero.clone()), (var("w"), zero)];
    let on_plane = v.restrict(&plane, &[var("y"), var("w")])?;
    let symbolic = [
        on_plane.components[0].clone(),
        on_plane.components[1].clone(),
    ];
    let mut report = ParticularSolutionReport {
        symbolic,
        max_momentum: None,
        max_reduced_gap: None,
    };
    let Some((x0, z0)) = start else {
        return Ok(report);
    };
    let numeric = ALPHAS.iter().all(|n| params.value(n).is_constant());
    if !numeric {
        return Ok(report);
    }
    let reduced = printed_field(SystemId::Reduced)?.expect("reduced system is printed");
    let b = params.bindings().clone();
    let reduced = VectorField {
        components: reduced
            .components
            .iter()
            .map(|c| c.substitute(&b))
            .collect::<std::result::Result<_, _>>()?,
        ..reduced
    };
    let control = StepControl::new(tol)?;
    let full = integrate(&sys14, &[x0, C64::zero(), z0, C64::zero()], path, control)?;
    let red = integrate_field(&reduced, &[x0, z0], path, control)?;
    let mut mom: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for s in &full.samples {
        mom = mom.max(s.state[1].norm()).max(s.state[3].norm());
        let other = red
            .state_at(s.tau)
            .map(|(_, y)| y)
            .unwrap_or_else(|| red.last().state.clone());
        gap = gap
            .max((s.state[0] - other[0]).norm())
            .max((s.state[2] - other[1]).norm());
    }
    report.max_momentum = Some(mom);
    report.max_reduced_gap = Some(gap);
    Ok(report)
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} chart={} state=[", fmt_c(self.t), self.chart)?;
        for (i, c) in self.state.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&fmt_c(*c))?;
        }
        f.write_str("]")
    }
}

/// Evaluates an exact expression at numeric arguments.
pub fn eval_expr(f: &RatFn, coords: &[Var], time: Var, t: C64, y: &[C64]) -> Result<C64> {
    let m = CompiledMap::compile(std::slice::from_ref(f), coords, time)?;
    Ok(m.eval(t, y)[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::q;
    use crate::expr::parse_expr;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("3+2i").unwrap(), C64::new(3.0, 2.0));
        assert_eq!(parse_complex("-1.5i").unwrap(), C64::new(0.0, -1.5));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("2e-3-1e+2i").unwrap(), C64::new(2e-3, -1e2));
        assert_eq!(parse_complex(" 4 ").unwrap(), C64::new(4.0, 0.0));
        assert!(parse_complex("3+").is_err());
        assert!(Path::parse("0 -> 0").is_err());
    }

    #[test]
    fn zero_hamiltonian_is_constant() {
        let reg = VarRegistry::standard();
        let s = HamSystem::new(
            "zero",
            RatFn::zero(&reg),
            vec![(var("x"), var("y")), (var("z"), var("w"))],
            var("t"),
            ParameterPoint::symbolic(Relation::Free),
        )
        .unwrap();
        let init = [
            C64::new(1.0, 0.0),
            C64::new(2.0, 1.0),
            C64::zero(),
            C64::new(-1.0, 0.0),
        ];
        let tr = integrate(
            &s,
            &init,
            &Path::parse("0 -> 2+1i").unwrap(),
            StepControl::new(1e-10).unwrap(),
        )
        .unwrap();
        assert_eq!(tr.last().state, init.to_vec());
    }

    #[test]
    fn exponential_along_complex_path() {
        // x' = x, so x(t) = exp(t) independent of the path
        let reg = VarRegistry::standard();
        let s = HamSystem::new(
            "exp",
            parse_expr("x*y").unwrap(),
            vec![(var("x"), var("y"))],
            var("t"),
            ParameterPoint::symbolic(Relation::Free),
        )
        .unwrap();
        let _ = reg;
        let path = Path::parse("0 -> 1+1i -> 1+2i").unwrap();
        let tr = integrate(
            &s,
            &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            &path,
            StepControl::new(1e-12).unwrap(),
        )
        .unwrap();
        let end = C64::new(1.0, 2.0);
        assert!((tr.last().state[0] - end.exp()).norm() < 1e-9);
        assert!((tr.last().state[1] - (-end).exp()).norm() < 1e-9);
        // dense output between steps
        let mid = tr.samples[tr.samples.len() / 2].tau + 1e-3;
        let (_, y) = tr.state_at(mid).unwrap();
        assert!((y[0] - path.time_at(mid).exp()).norm() < 1e-8);
    }

    #[test]
    fn numeric_parameters_follow_relation() {
        let p = NumParams::new(q(1, 2), q(1, 4))
            .point(Relation::SumOne)
            .unwrap();
        assert_eq!(p.value("alpha1").constant_value(), Some(q(-1, 8)));
        assert!(NumParams {
            alpha: [None, Some(q(1, 2)), None],
            constants: None
        }
        .point(Relation::SumOne)
        .is_err());
    }

    #[test]
    fn blow_up_names_coordinate() {
        // x' = x^2 from x = 1 blows up at t = 1
        let s = HamSystem::new(
            "riccati",
            parse_expr("x^2*y").unwrap(),
            vec![(var("x"), var("y"))],
            var("t"),
            ParameterPoint::symbolic(Relation::Free),
        )
        .unwrap();
        let err = integrate(
            &s,
            &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            &Path::parse("0 -> 2").unwrap(),
            StepControl::new(1e-8).unwrap(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("`x` blows up"), "{err}");
    }

    fn three() -> Path {
        Path::parse("0 -> 3").unwrap()
    }

    #[test]
    fn symbolic_particular_solution_needs_vanishing_first_parameter() {
        let reg = VarRegistry::standard();
        let at_zero = ParameterPoint::symbolic(Relation::SumOne)
            .with("alpha1", RatFn::zero(&reg))
            .unwrap();
        assert!(particular_solution_check(&at_zero, None, &three(), 1e-10)
            .unwrap()
            .symbolic_pass());
        let generic = ParameterPoint::symbolic(Relation::SumOne);
        let r = particular_solution_check(&generic, None, &three(), 1e-10).unwrap();
        assert!(!r.symbolic_pass());
        assert_eq!(
            r.symbolic[0],
            generic.apply(&parse_expr("-2*alpha1").unwrap()).unwrap()
        );
    }
}
