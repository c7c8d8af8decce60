//! Named verification checks grouped into suites, with JSON-ready reports.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::algebra::{var, RatFn, VarRegistry};
use crate::error::{Error, Result};
use crate::expr::{print_expr, truncate_with_hash};
use crate::hamiltonian::{
    build_system, hamiltonian_vector_field, invariant_cycle_check, main_invariant_cycles,
    printed_field, ParameterPoint, Relation, SystemId,
};
use crate::holomorphy::{
    build_chart, chart_pushforward, derive_chart_hamiltonian, polynomiality_check,
    recover_hamiltonian, two_form_residual, ChartId, HamAnsatz,
};
use crate::numerics::{particular_solution_check, NumParams, Path, C64};
use crate::transforms::{
    build_map, conjugacy_residual, group_relation_check, invariance_residual, is_symplectic,
    parameter_action, MapId, Residual,
};
use crate::two_time::{
    autonomy_residual, build_two_time, chart_polynomiality, compatibility_residual,
    first_integral_matrix, involution_residual,
};

/// Residual text longer than this is cut and identified by its hash.
pub const RESIDUAL_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub anchor: String,
    pub status: Status,
    pub residual: String,
    pub residual_hash: String,
    pub ms: f64,
}

impl CheckReport {
    fn new(id: &str, anchor: &str, outcome: Result<Option<String>>, ms: f64) -> Self {
        let (status, text) = match outcome {
            Ok(None) => (Status::Pass, String::new()),
            Ok(Some(r)) => (
                Status::Fail,
                if r.is_empty() {
                    "nonzero".to_string()
                } else {
                    r
                },
            ),
            Err(e) => (Status::Error, e.to_string()),
        };
        let (residual, residual_hash) = if text.is_empty() {
            (text, String::new())
        } else {
            truncate_with_hash(&text, RESIDUAL_LIMIT)
        };
        Self {
            id: id.to_string(),
            anchor: anchor.to_string(),
            status,
            residual,
            residual_hash,
            ms,
        }
    }

    pub fn pass(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Symmetry,
    Holomorphy,
    Structures,
    TwoTime,
}

impl Suite {
    pub const NAMES: [&'static str; 5] =
        ["all", "symmetry", "holomorphy", "structures", "two-time"];

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "symmetry" => Suite::Symmetry,
            "holomorphy" => Suite::Holomorphy,
            "structures" => Suite::Structures,
            "two-time" => Suite::TwoTime,
            _ => {
                return Err(Error::UnknownId {
                    kind: "suite",
                    id: s.to_string(),
                })
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [
            Suite::All,
            Suite::Symmetry,
            Suite::Holomorphy,
            Suite::Structures,
            Suite::TwoTime,
        ]
        .iter()
        .position(|s| s == self)
        .expect("listed");
        f.write_str(Self::NAMES[i])
    }
}

type Run = Box<dyn Fn() -> Result<Option<String>> + Send + Sync>;

pub struct Check {
    pub id: String,
    pub anchor: String,
    pub suite: Suite,
    run: Run,
}

impl Check {
    fn new(id: impl Into<String>, anchor: impl Into<String>, suite: Suite, run: Run) -> Self {
        Self {
            id: id.into(),
            anchor: anchor.into(),
            suite,
            run,
        }
    }

    pub fn run(&self) -> CheckReport {
        let stop = timer();
        let outcome = (self.run)();
        CheckReport::new(&self.id, &self.anchor, outcome, stop())
    }
}

// wasm32-unknown-unknown has no clock
#[cfg(not(target_arch = "wasm32"))]
fn timer() -> impl FnOnce() -> f64 {
    let start = Instant::now();
    move || start.elapsed().as_secs_f64() * 1e3
}

#[cfg(target_arch = "wasm32")]
fn timer() -> impl FnOnce() -> f64 {
    || 0.0
}

fn residual(r: Residual) -> Option<String> {
    (!r.pass()).then(|| r.describe())
}

fn zero_or_text(f: &RatFn) -> Option<String> {
    (!f.is_zero()).then(|| print_expr(f))
}

fn flag(ok: bool, why: &str) -> Option<String> {
    (!ok).then(|| why.to_string())
}

fn symmetry_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for id in [MapId::S1, MapId::S2] {
        out.push(Check::new(
            format!("symmetry.generic.{id}"),
            format!("coupled family with symbolic constants is invariant under {id}"),
            Suite::Symmetry,
            Box::new(move || {
                Ok(residual(invariance_residual(
                    &build_system(SystemId::Generic, None, None)?,
                    &build_map(id),
                )?))
            }),
        ));
    }
    for id in [MapId::S1Main, MapId::S2Main, MapId::S3Main] {
        out.push(Check::new(
            format!("symmetry.main.{id}"),
            format!("main system is invariant under {id}"),
            Suite::Symmetry,
            Box::new(move || {
                Ok(residual(invariance_residual(
                    &build_system(SystemId::Main, None, None)?,
                    &build_map(id),
                )?))
            }),
        ));
    }
    for sid in [SystemId::K1, SystemId::K2] {
        for id in [MapId::S1Qp, MapId::S2Qp, MapId::S3Qp] {
            out.push(Check::new(
                format!("symmetry.{sid}.{id}"),
                format!("{sid} flow is invariant under {id}"),
                Suite::Symmetry,
                Box::new(move || {
                    Ok(residual(invariance_residual(
                        &build_system(sid, None, None)?,
                        &build_map(id),
                    )?))
                }),
            ));
        }
    }
    let groups = [
        (
            "main",
            [MapId::S1Main, MapId::S2Main, MapId::S3Main],
            MapId::Identity,
            Relation::SumOne,
        ),
        (
            "two_time",
            [MapId::S1Qp, MapId::S2Qp, MapId::S3Qp],
            MapId::IdentityQp,
            Relation::SumZero,
        ),
    ];
    for (label, [s1, s2, s3], id, rel) in groups {
        let words: [(&str, Vec<MapId>); 4] = [
            ("s1^2", vec![s1, s1]),
            ("s2^2", vec![s2, s2]),
            ("s3^2", vec![s3, s3]),
            ("(s1s2)^2", vec![s1, s2, s1, s2]),
        ];
        for (name, word) in words {
            out.push(Check::new(
                format!("group.{label}.{name}"),
                format!("{name} is the identity ({label} generators)"),
                Suite::Symmetry,
                Box::new(move || {
                    Ok(flag(
                        group_relation_check(&word, id, rel)?,
                        "composition differs from the identity",
                    ))
                }),
            ));
        }
        let expected: [&str; 3] = if rel == Relation::SumOne {
            ["alpha1 + 1", "alpha2 - 1", "alpha3"]
        } else {
            ["alpha1", "alpha2", "alpha3"]
        };
        out.push(Check::new(
            format!("group.{label}.s3s1"),
            format!("s3s1 acts on parameters as ({})", expected.join(", ")),
            Suite::Symmetry,
            Box::new(move || {
                let got = parameter_action(&[s3, s1], rel)?;
                let point = ParameterPoint::symbolic(rel);
                let mut diffs = Vec::new();
                for (g, e) in got.iter().zip(expected) {
                    let d = point.apply(&(g - &crate::expr::parse_expr(e)?))?;
                    if !d.is_zero() {
                        diffs.push(print_expr(&d));
                    }
                }
                Ok((!diffs.is_empty()).then(|| diffs.join("; ")))
            }),
        ));
    }
    for id in MapId::ALL
        .into_iter()
        .filter(|m| !matches!(m, MapId::Identity | MapId::IdentityQp))
    {
        out.push(Check::new(
            format!("symplectic.{id}"),
            format!("{id} preserves the canonical brackets"),
            Suite::Symmetry,
            Box::new(move || {
                let m = build_map(id);
                let pairs = if m.coords[0] == var("q1") {
                    vec![(var("q1"), var("p1")), (var("q2"), var("p2"))]
                } else {
                    vec![(var("x"), var("y")), (var("z"), var("w"))]
                };
                Ok(residual(is_symplectic(&m, &pairs)?))
            }),
        ));
    }
    out
}

fn holomorphy_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for id in [ChartId::C1, ChartId::C2, ChartId::C3] {
        out.push(Check::new(
            format!("holomorphy.polynomial.chart{id}"),
            format!("main flow is polynomial in chart {id}"),
            Suite::Holomorphy,
            Box::new(move || {
                let s = build_system(SystemId::Main, None, None)?;
                let r = polynomiality_check(&chart_pushforward(&s, &build_chart(id))?);
                Ok((!r.pass()).then(|| {
                    r.offenders
                        .iter()
                        .map(|(c, d)| format!("{c}: denominator {d}"))
                        .collect::<Vec<_>>()
                        .join("; ")
                }))
            }),
        ));
    }
    for id in [ChartId::C1, ChartId::C2, ChartId::C3] {
        let c = build_chart(id);
        let corr = print_expr(&c.correction);
        out.push(Check::new(
            format!("holomorphy.two_form.chart{id}"),
            format!("symplectic 2-form identity in chart {id} with correction {corr}"),
            Suite::Holomorphy,
            Box::new(move || {
                let s = build_system(SystemId::Main, None, None)?;
                let c = build_chart(id);
                let h = RatFn::from_poly(derive_chart_hamiltonian(&s, &c)?);
                let r = two_form_residual(&s, &c, &h)?;
                Ok((!r.is_zero()).then(|| r.describe()))
            }),
        ));
    }
    out.push(Check::new(
        "holomorphy.recovery",
        "degree-5 ansatz polynomial in charts 1-3 recovers the main Hamiltonian up to c0 + c1 t",
        Suite::Holomorphy,
        Box::new(|| {
            let charts: Vec<_> = [ChartId::C1, ChartId::C2, ChartId::C3]
                .map(build_chart)
                .into();
            let r = recover_hamiltonian(&charts, HamAnsatz::affine(5))?;
            let h = build_system(SystemId::Main, None, None)?.hamiltonian()?;
            let kernel: Vec<String> = r.kernel_hamiltonians().iter().map(print_expr).collect();
            let mut bad = Vec::new();
            if r.solution.dimension() != 2 {
                bad.push(format!(
                    "solution space dimension {}",
                    r.solution.dimension()
                ));
            }
            let diff = &r.particular() - &h;
            if !diff.is_zero() {
                bad.push(format!("particular - H = {}", print_expr(&diff)));
            }
            if kernel != ["1", "t"] {
                bad.push(format!("kernel {}", kernel.join(", ")));
            }
            Ok((!bad.is_empty()).then(|| bad.join("; ")))
        }),
    ));
    out
}

fn structure_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for (i, c) in main_invariant_cycles().into_iter().enumerate() {
        let label = c.label.clone();
        out.push(Check::new(
            format!("structures.invariant_cycle.{}", i + 1),
            format!("{label} is an invariant cycle"),
            Suite::Structures,
            Box::new(move || {
                Ok(flag(
                    invariant_cycle_check(&build_system(SystemId::Main, None, None)?, &c)?,
                    "flow leaves the variety",
                ))
            }),
        ));
    }
    for (m, t) in [
        (MapId::Phi1, SystemId::Phi1Image),
        (MapId::Phi2, SystemId::Phi2Image),
    ] {
        out.push(Check::new(
            format!("structures.conjugacy.{m}"),
            format!("{m} carries the main system to {t}"),
            Suite::Structures,
            Box::new(move || {
                let main = build_system(SystemId::Main, None, None)?;
                Ok(residual(conjugacy_residual(
                    &main,
                    &build_map(m),
                    &build_system(t, None, None)?,
                )?))
            }),
        ));
    }
    out.push(Check::new(
        "structures.particular.symbolic",
        "y = w = 0 is invariant for sys14 when alpha1 = 0",
        Suite::Structures,
        Box::new(|| {
            let reg = VarRegistry::standard();
            let p = ParameterPoint::symbolic(Relation::SumOne).with("alpha1", RatFn::zero(&reg))?;
            let r = particular_solution_check(&p, None, &Path::parse("0 -> 3")?, 1e-10)?;
            Ok((!r.symbolic_pass()).then(|| {
                r.symbolic
                    .iter()
                    .map(print_expr)
                    .collect::<Vec<_>>()
                    .join(", ")
            }))
        }),
    ));
    out.push(Check::new(
        "structures.particular.reduced_field",
        "sys14 on y = w = 0 with alpha1 = 0 is the printed reduced system",
        Suite::Structures,
        Box::new(|| {
            let s = build_system(SystemId::Reduced, None, None)?;
            let v =
                hamiltonian_vector_field(&s)?.restrict(s.restriction(), &[var("x"), var("z")])?;
            let printed = printed_field(SystemId::Reduced)?
                .ok_or_else(|| Error::Usage("no printed field".into()))?;
            let mut bad = Vec::new();
            for (a, b) in v.components.iter().zip(&printed.components) {
                let d = s.params().apply(&(a - b))?;
                if !d.is_zero() {
                    bad.push(print_expr(&d));
                }
            }
            Ok((!bad.is_empty()).then(|| bad.join("; ")))
        }),
    ));
    out.push(Check::new(
        "structures.particular.numeric",
        "integrated sys14 keeps y = w = 0 and follows the reduced system (sample x=0, z=1, alpha3=1/2)",
        Suite::Structures,
        Box::new(|| {
            let p = NumParams::new(crate::algebra::q(1, 4), crate::algebra::q(1, 2)).point(Relation::SumOne)?;
            let path = Path::parse(PARTICULAR_PATH)?;
            let r = particular_solution_check(&p, Some((C64::new(0.0, 0.0), C64::new(1.0, 0.0))), &path, 1e-12)?;
            Ok((!r.numeric_pass(1e-9, 1e-7)).then(|| format!("max |y|,|w| = {:?}, max gap = {:?}", r.max_momentum, r.max_reduced_gap)))
        }),
    ));
    out
}

/// Time path for the numeric particular-solution sample: the real segment
/// `[0, 3]` with a detour around the two real poles near 2.17 and 2.58.
pub const PARTICULAR_PATH: &str = "0 -> 1.9 -> 1.9+0.5i -> 3+0.5i -> 3";

fn two_time_checks() -> Vec<Check> {
    let mut out = Vec::new();
    out.push(Check::new(
        "two_time.compatibility",
        "the K1 and K2 flows commute",
        Suite::TwoTime,
        Box::new(|| {
            let b = compatibility_residual(&build_two_time()?)?;
            Ok((!b.is_zero()).then(|| {
                b.to_text()
                    .iter()
                    .map(|(c, f)| format!("{c}: {f}"))
                    .collect::<Vec<_>>()
                    .join("; ")
            }))
        }),
    ));
    out.push(Check::new(
        "two_time.involution",
        "{K1, K2} = 0 when 2 alpha1 + 2 alpha2 + alpha3 = 0",
        Suite::TwoTime,
        Box::new(|| Ok(zero_or_text(&involution_residual(&build_two_time()?)?))),
    ));
    out.push(Check::new(
        "two_time.first_integrals",
        "K1 and K2 are first integrals of both flows",
        Suite::TwoTime,
        Box::new(|| {
            let m = first_integral_matrix(&build_two_time()?)?;
            let bad: Vec<String> = m
                .iter()
                .flatten()
                .filter(|f| !f.is_zero())
                .map(print_expr)
                .collect();
            Ok((!bad.is_empty()).then(|| bad.join("; ")))
        }),
    ));
    out.push(Check::new(
        "two_time.k3_polynomial",
        "K3 = (4 K1^2 - 13 K2)/4 is polynomial",
        Suite::TwoTime,
        Box::new(|| {
            let k3 = build_two_time()?.k3();
            Ok(flag(k3.is_polynomial(), "K3 has a denominator"))
        }),
    ));
    for id in [ChartId::R1, ChartId::R2, ChartId::R3] {
        out.push(Check::new(
            format!("two_time.chart{id}"),
            format!("K1, K2, K3 and both flows are polynomial in chart {id}"),
            Suite::TwoTime,
            Box::new(move || {
                let (ks, flows) = chart_polynomiality(&build_two_time()?, &build_chart(id))?;
                let mut bad: Vec<String> = ks
                    .iter()
                    .zip(["K1", "K2", "K3"])
                    .filter(|(ok, _)| !**ok)
                    .map(|(_, n)| format!("{n} not polynomial"))
                    .collect();
                bad.extend(
                    flows
                        .iter()
                        .zip(["K1 flow", "K2 flow"])
                        .filter(|(ok, _)| !**ok)
                        .map(|(_, n)| format!("{n} not polynomial")),
                );
                Ok((!bad.is_empty()).then(|| bad.join("; ")))
            }),
        ));
    }
    out.push(Check::new(
        "two_time.degree_bound",
        "phase-space degrees of K1, K2, K3 are at most 3, 6, 6",
        Suite::TwoTime,
        Box::new(|| {
            let t = build_two_time()?;
            let phase: Vec<_> = t.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
            let degs = t.hamiltonians()?.map(|f| f.numer().degree_in_vars(&phase));
            Ok(flag(
                degs[0] <= 3 && degs[1] <= 6 && degs[2] <= 6,
                &format!("degrees {degs:?}"),
            ))
        }),
    ));
    out.push(Check::new(
        "two_time.autonomy",
        "K1 + H(t = 0)/2 = 0 after renaming x, y, z, w to q1, p1, q2, p2",
        Suite::TwoTime,
        Box::new(|| {
            Ok(zero_or_text(&autonomy_residual(
                &build_two_time()?,
                &build_system(SystemId::Main, None, None)?,
            )?))
        }),
    ));
    out
}

/// Every check, in report order.
pub fn all_checks() -> Vec<Check> {
    let mut v = symmetry_checks();
    v.extend(holomorphy_checks());
    v.extend(structure_checks());
    v.extend(two_time_checks());
    v
}

pub fn checks_for(suite: Suite) -> Vec<Check> {
    all_checks()
        .into_iter()
        .filter(|c| suite.includes(c.suite))
        .collect()
}

/// Runs the suite's checks on up to `workers` threads; reports keep the
/// check order.
pub fn run_suite(suite: Suite, workers: usize) -> Vec<CheckReport> {
    run_checks(&checks_for(suite), workers)
}

pub fn run_checks(checks: &[Check], workers: usize) -> Vec<CheckReport> {
    if workers <= 1 {
        return checks.iter().map(Check::run).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CheckReport>>> = Mutex::new(vec![None; checks.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(checks.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(c) = checks.get(i) else { break };
                let r = c.run();
                slots.lock().expect("report lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("report lock")
        .into_iter()
        .map(|r| r.expect("every check ran"))
        .collect()
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let checks = all_checks();
        let mut ids: Vec<&str> = checks.iter().map(|c| c.id.as_str()).collect();
        ids.sort();
        let before = ids.len();
        ids.dedup();
        assert_eq!(before, ids.len());
        assert!(before >= 40);
    }

    #[test]
    fn suite_names_round_trip() {
        for n in Suite::NAMES {
            assert_eq!(n.parse::<Suite>().unwrap().to_string(), n);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn report_status_matches_residual() {
        let pass = CheckReport::new("a", "x", Ok(None), 1.0);
        assert!(pass.pass() && pass.residual.is_empty() && pass.residual_hash.is_empty());
        let long = "x".repeat(10_000);
        let fail = CheckReport::new("b", "x", Ok(Some(long)), 1.0);
        assert_eq!(fail.status, Status::Fail);
        assert!(fail.residual.len() <= RESIDUAL_LIMIT + 64);
        assert_eq!(fail.residual_hash.len(), 64);
        let err = CheckReport::new("c", "x", Err(Error::Inconsistent), 1.0);
        assert_eq!(err.status, Status::Error);
        let json = serde_json::to_string(&[pass, fail, err]).unwrap();
        assert!(json.contains("\"status\":\"pass\""));
    }

    #[test]
    fn two_time_suite_passes() {
        let reports = run_suite(Suite::TwoTime, 2);
        assert!(reports.iter().all(CheckReport::pass), "{reports:#?}");
    }
}
