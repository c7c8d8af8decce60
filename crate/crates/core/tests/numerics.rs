use pain2_core::algebra::q;
use pain2_core::hamiltonian::{build_system, SystemId};
use pain2_core::holomorphy::{build_chart, Chart, ChartId};
use pain2_core::numerics::{
    continue_through_pole, integrate, numeric_conjugacy_check, parse_state, NumParams, Path,
    StepControl, SwitchConfig, C64,
};
use pain2_core::print_expr;
use pain2_core::transforms::{build_map, MapId};

fn atlas() -> Vec<Chart> {
    [ChartId::C1, ChartId::C2, ChartId::C3]
        .map(build_chart)
        .into()
}

fn max_gap(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).norm())
        .fold(0.0, f64::max)
}

#[test]
fn main_hamiltonian_prints_the_golden_string() {
    let h = build_system(SystemId::Main, None, None)
        .unwrap()
        .hamiltonian()
        .unwrap();
    let golden = include_str!("golden/main_hamiltonian.txt");
    assert_eq!(print_expr(&h), golden.trim_end());
}

#[test]
fn reduced_system_keeps_z_zero_without_alpha3() {
    // alpha1 = 0 and alpha3 = 0 force alpha2 = 1/2
    let s = NumParams::new(q(1, 2), q(0, 1))
        .system(SystemId::Phi2Image)
        .unwrap();
    let init = parse_state("x=0.3+0.1i,y=0,z=0,w=0", &s.coords()).unwrap();
    let tr = integrate(
        &s,
        &init,
        &Path::parse("0 -> 1 -> 1+1i").unwrap(),
        StepControl::new(1e-10).unwrap(),
    )
    .unwrap();
    for smp in &tr.samples {
        assert_eq!(smp.state[2], C64::new(0.0, 0.0), "z left zero at {smp}");
    }
}

#[test]
fn infinite_threshold_is_plain_integration() {
    let s = NumParams::new(q(1, 4), q(1, 3))
        .system(SystemId::Main)
        .unwrap();
    let init = parse_state("x=0,y=1,z=0,w=1", &s.coords()).unwrap();
    let path = Path::parse("0 -> 0.8 -> 0.9+0.3i -> 1.5").unwrap();
    let c = StepControl::new(1e-10).unwrap();
    let plain = integrate(&s, &init, &path, c).unwrap();
    let never = continue_through_pole(
        &s,
        &atlas(),
        &init,
        &path,
        c,
        SwitchConfig::with_threshold(f64::INFINITY),
    )
    .unwrap();
    assert!(never.switches.is_empty());
    assert_eq!(plain.samples, never.samples);
}

#[test]
fn far_from_poles_nothing_switches() {
    let s = NumParams::new(q(1, 2), q(1, 4))
        .system(SystemId::Main)
        .unwrap();
    let init = parse_state("x=0.1,y=0.2i,z=-0.1,w=0.1", &s.coords()).unwrap();
    let path = Path::parse("0 -> 1+0.5i").unwrap();
    let c = StepControl::new(1e-12).unwrap();
    let plain = integrate(&s, &init, &path, c).unwrap();
    let cont =
        continue_through_pole(&s, &atlas(), &init, &path, c, SwitchConfig::default()).unwrap();
    assert!(cont.switches.is_empty());
    assert!(max_gap(&plain.last().state, &cont.last().state) <= 1e-9);
}

#[test]
fn forward_then_backward_returns_home() {
    let s = NumParams::new(q(1, 4), q(1, 3))
        .system(SystemId::Main)
        .unwrap();
    let init = parse_state("x=0.2,y=-0.1+0.1i,z=0.3i,w=0.1", &s.coords()).unwrap();
    let tol = 1e-10;
    let c = StepControl::new(tol).unwrap();
    let out = integrate(&s, &init, &Path::parse("0 -> 0.7+0.2i").unwrap(), c).unwrap();
    let back = integrate(
        &s,
        &out.last().state,
        &Path::parse("0.7+0.2i -> 0").unwrap(),
        c,
    )
    .unwrap();
    let err = max_gap(&back.last().state, &init);
    assert!(err <= 10.0 * tol, "{err:e}");
}

#[test]
fn switches_re_express_exactly() {
    let s = NumParams::new(q(1, 4), q(1, 3))
        .system(SystemId::Main)
        .unwrap();
    let init = parse_state("x=0,y=1,z=0,w=1", &s.coords()).unwrap();
    let c = StepControl::new(1e-10).unwrap();
    let tr = continue_through_pole(
        &s,
        &atlas(),
        &init,
        &Path::parse("0 -> 5").unwrap(),
        c,
        SwitchConfig::default(),
    )
    .unwrap();
    assert!(tr.switches.len() >= 2);
    for e in &tr.switches {
        assert!(e.round_trip <= 1e-12, "{e:?}");
    }
    assert_eq!(tr.last().chart, 0);
}

#[test]
fn conjugacy_controls() {
    let np = NumParams::new(q(1, 4), q(1, 3));
    let main = np.system(SystemId::Main).unwrap();
    let init = parse_state("x=0.1+0.2i,y=0.3i,z=-0.1+0.1i,w=0.2", &main.coords()).unwrap();
    let tr = integrate(
        &main,
        &init,
        &Path::parse("0 -> 2").unwrap(),
        StepControl::new(1e-12).unwrap(),
    )
    .unwrap();
    let id = numeric_conjugacy_check(&main, &build_map(MapId::Identity), &main, &tr).unwrap();
    assert!(id <= 1e-8, "{id:e}");
    let phi1 = numeric_conjugacy_check(
        &main,
        &build_map(MapId::Phi1),
        &np.system(SystemId::Phi1Image).unwrap(),
        &tr,
    )
    .unwrap();
    assert!(phi1 <= 1e-6, "{phi1:e}");
    let wrong = numeric_conjugacy_check(
        &main,
        &build_map(MapId::Phi2),
        &np.system(SystemId::Phi1Image).unwrap(),
        &tr,
    )
    .unwrap();
    assert!(wrong > 0.1, "{wrong:e}");
}
