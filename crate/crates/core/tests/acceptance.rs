//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod laws;

use std::time::Instant;

use pain2_core::algebra::q;
use pain2_core::hamiltonian::{Relation, SystemId};
use pain2_core::holomorphy::{build_chart, Chart, ChartId};
use pain2_core::numerics::{
    continue_through_pole, eval_expr, integrate, numeric_conjugacy_check, parse_state, NumParams,
    Path, StepControl, SwitchConfig,
};
use pain2_core::transforms::{build_map, MapId};
use pain2_core::two_time::{build_two_time, TwoTimeSystem};
use pain2_core::verify::{all_checks, default_workers, run_checks, CheckReport};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn of(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Folds the reports whose id starts with one of `prefixes`.
fn checks(reports: &[CheckReport], prefixes: &[&str]) -> Verdict {
    let picked: Vec<&CheckReport> = reports
        .iter()
        .filter(|r| prefixes.iter().any(|p| r.id.starts_with(p)))
        .collect();
    if picked.is_empty() {
        return Verdict::of(false, "no checks matched");
    }
    let failed: Vec<String> = picked
        .iter()
        .filter(|r| !r.pass())
        .map(|r| format!("{} [{}]", r.id, r.residual))
        .collect();
    if failed.is_empty() {
        Verdict::of(true, format!("{} checks with zero residual", picked.len()))
    } else {
        Verdict::of(
            false,
            format!(
                "{}/{} checks fail: {}",
                failed.len(),
                picked.len(),
                failed.join("; ")
            ),
        )
    }
}

type Criterion<'a> = (
    &'static str,
    &'static str,
    Box<dyn FnOnce() -> Verdict + 'a>,
);

const K_INIT: &str = "q1=0.1+0.2i,p1=0.1+0.2i,q2=0.3i,p2=0.3i";

fn k_flow_drift(t2: &TwoTimeSystem, which: usize, tol: f64) -> pain2_core::Result<[f64; 2]> {
    let [k1, k2, _] = t2.hamiltonians()?;
    let s = t2.system(which)?;
    let coords = s.coords();
    let init = parse_state(K_INIT, &coords)?;
    let tr = integrate(&s, &init, &Path::parse("0 -> 5")?, StepControl::new(tol)?)?;
    let drift = |k| tr.drift(|t, y| eval_expr(k, &coords, s.time(), t, y).expect("compiles"));
    Ok([drift(&k1), drift(&k2)])
}

fn conserved_quantities() -> pain2_core::Result<Verdict> {
    let np = NumParams::new(q(1, 3), q(1, 5));
    let t2 = TwoTimeSystem {
        params: np.point(Relation::SumZero)?,
        ..build_two_time()?
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for which in [1, 2] {
        let runs: Vec<[f64; 2]> = [1e-6, 1e-8, 1e-10]
            .iter()
            .map(|&tol| k_flow_drift(&t2, which, tol))
            .collect::<Result<_, _>>()?;
        for k in 0..2 {
            let d: Vec<f64> = runs.iter().map(|r| r[k]).collect();
            let monotone = d.windows(2).all(|w| w[1] < w[0]);
            ok &= d[2] <= 1e-8 && monotone;
            notes.push(format!(
                "flow{which} K{}: {:.1e}/{:.1e}/{:.1e}",
                k + 1,
                d[0],
                d[1],
                d[2]
            ));
        }
    }
    Ok(Verdict::of(ok, notes.join(", ")))
}

fn pole_detour() -> pain2_core::Result<Verdict> {
    let s = NumParams::new(q(1, 4), q(1, 3)).system(SystemId::Main)?;
    let atlas: Vec<Chart> = [ChartId::C1, ChartId::C2, ChartId::C3]
        .map(build_chart)
        .into();
    let init = parse_state("x=0,y=1,z=0,w=1", &s.coords())?;
    // through the real pole near t = 0.9, back to the start around it
    let path = Path::parse("0 -> 1.5 -> 1.5+1i -> 1i -> 0")?;
    let tr = continue_through_pole(
        &s,
        &atlas,
        &init,
        &path,
        StepControl::new(1e-12)?,
        SwitchConfig::default(),
    )?;
    let end = tr.last();
    let loop_err = end
        .state
        .iter()
        .zip(&init)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let reexpress = tr.switches.iter().map(|e| e.round_trip).fold(0.0, f64::max);
    let pass = !tr.switches.is_empty() && end.chart == 0 && loop_err <= 1e-6 && reexpress <= 1e-6;
    Ok(Verdict::of(
        pass,
        format!(
            "{} switches, final chart {}, loop error {loop_err:.1e}, worst re-expression {reexpress:.1e}",
            tr.switches.len(),
            tr.charts[end.chart]
        ),
    ))
}

fn conjugacy_numeric() -> pain2_core::Result<Verdict> {
    let np = NumParams::new(q(1, 4), q(1, 3));
    let main = np.system(SystemId::Main)?;
    let init = parse_state("x=0.1+0.2i,y=0.3i,z=-0.1+0.1i,w=0.2", &main.coords())?;
    let tr = integrate(
        &main,
        &init,
        &Path::parse("0 -> 2")?,
        StepControl::new(1e-12)?,
    )?;
    let r = numeric_conjugacy_check(
        &main,
        &build_map(MapId::Phi2),
        &np.system(SystemId::Phi2Image)?,
        &tr,
    )?;
    Ok(Verdict::of(r <= 1e-6, format!("phi2 residual {r:.1e}")))
}

fn numerics() -> Verdict {
    let parts = [
        ("drift", conserved_quantities()),
        ("pole", pole_detour()),
        ("conjugacy", conjugacy_numeric()),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, r) in parts {
        match r {
            Ok(v) => {
                pass &= v.pass;
                notes.push(format!("{name}: {}", v.detail));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{name}: error {e}"));
            }
        }
    }
    Verdict::of(pass, notes.join(" | "))
}

fn properties() -> Verdict {
    let cases = 1000;
    let failed: Vec<String> = laws::ALL
        .iter()
        .filter_map(|(name, law)| law(cases).err().map(|e| format!("{name}: {e}")))
        .collect();
    if failed.is_empty() {
        Verdict::of(true, format!("{} laws x {cases} cases", laws::ALL.len()))
    } else {
        Verdict::of(false, failed.join("; "))
    }
}

fn main() {
    let start = Instant::now();
    let reports = run_checks(&all_checks(), default_workers());
    let criteria: Vec<Criterion> = vec![
        (
            "AC1",
            "symmetry invariance",
            Box::new(|| checks(&reports, &["symmetry."])),
        ),
        (
            "AC2",
            "group relations and parameter actions",
            Box::new(|| checks(&reports, &["group."])),
        ),
        (
            "AC3",
            "invariant cycles",
            Box::new(|| checks(&reports, &["structures.invariant_cycle."])),
        ),
        (
            "AC4",
            "chart polynomiality and 2-form residuals (corrections 0, 0, x)",
            Box::new(|| {
                checks(
                    &reports,
                    &["holomorphy.polynomial.", "holomorphy.two_form."],
                )
            }),
        ),
        (
            "AC5",
            "Hamiltonian recovery from three charts",
            Box::new(|| checks(&reports, &["holomorphy.recovery"])),
        ),
        (
            "AC6",
            "conjugacies, symplectic phi2, particular solution",
            Box::new(|| {
                checks(
                    &reports,
                    &[
                        "structures.conjugacy.",
                        "symplectic.phi2",
                        "structures.particular.",
                    ],
                )
            }),
        ),
        (
            "AC7",
            "two-time structure",
            Box::new(|| {
                checks(
                    &reports,
                    &[
                        "two_time.compatibility",
                        "two_time.involution",
                        "two_time.first_integrals",
                        "two_time.k3_polynomial",
                        "two_time.chartR",
                        "two_time.degree_bound",
                    ],
                )
            }),
        ),
        (
            "AC8",
            "autonomy correspondence",
            Box::new(|| checks(&reports, &["two_time.autonomy"])),
        ),
        ("AC9", "numerics", Box::new(numerics)),
        (
            "AC10",
            "randomized infrastructure laws",
            Box::new(properties),
        ),
    ];
    let mut failures = 0;
    for (id, title, run) in criteria {
        let v = run();
        failures += usize::from(!v.pass);
        println!(
            "{id:<5} {} {title}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "acceptance: {} of 10 criteria pass ({:.1} s)",
        10 - failures,
        start.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
