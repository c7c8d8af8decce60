use num_rational::BigRational;
use serde_json::json;
use wasm_bindgen::prelude::*;

use pain2_core::hamiltonian::SystemId;
use pain2_core::holomorphy::{build_chart, ChartId};
use pain2_core::numerics::{
    continue_through_pole, integrate, parse_state, NumParams, Path, StepControl, SwitchConfig,
};
use pain2_core::verify::{run_suite, Suite};
use pain2_core::{parse_expr, print_expr};

/// Canonical form of an expression.
pub fn normalize(text: &str) -> Result<String, String> {
    parse_expr(text)
        .map(|f| print_expr(&f))
        .map_err(|e| e.to_string())
}

/// Reports of one suite as a JSON array.
pub fn verify_json(suite: &str) -> Result<String, String> {
    let suite: Suite = suite
        .parse()
        .map_err(|e: pain2_core::Error| e.to_string())?;
    serde_json::to_string(&run_suite(suite, 1)).map_err(|e| e.to_string())
}

/// Trajectory of the main system as `{samples, switches, error}` JSON.
/// A failed run still returns the message so the page can show it.
pub fn trajectory_json(
    alpha2: &str,
    alpha3: &str,
    init: &str,
    path: &str,
    tol: f64,
    chart_switch: bool,
) -> Result<String, String> {
    let rat = |s: &str| {
        s.trim()
            .parse::<BigRational>()
            .map_err(|_| format!("`{s}` is not a rational number"))
    };
    let params = NumParams::new(rat(alpha2)?, rat(alpha3)?);
    let s = params.system(SystemId::Main).map_err(|e| e.to_string())?;
    let init = parse_state(init, &s.coords()).map_err(|e| e.to_string())?;
    let path = Path::parse(path).map_err(|e| e.to_string())?;
    let control = StepControl::new(tol).map_err(|e| e.to_string())?;
    let run = if chart_switch {
        let atlas: Vec<_> = [ChartId::C1, ChartId::C2, ChartId::C3]
            .map(build_chart)
            .into();
        continue_through_pole(&s, &atlas, &init, &path, control, SwitchConfig::default())
    } else {
        integrate(&s, &init, &path, control)
    };
    let out = match run {
        Ok(t) => {
            let samples: Vec<_> = t
                .samples
                .iter()
                .map(|p| json!({"t": [p.t.re, p.t.im], "chart": t.charts[p.chart], "x": [p.state[0].re, p.state[0].im]}))
                .collect();
            let switches: Vec<_> = t
                .switches
                .iter()
                .map(|e| json!({"t": [e.t.re, e.t.im], "from": t.charts[e.from], "to": t.charts[e.to], "round_trip": e.round_trip}))
                .collect();
            json!({"samples": samples, "switches": switches, "error": null})
        }
        Err(e) => json!({"samples": [], "switches": [], "error": e.to_string()}),
    };
    Ok(out.to_string())
}

#[wasm_bindgen(js_name = normalize)]
pub fn normalize_js(text: &str) -> Result<String, JsError> {
    normalize(text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = verify)]
pub fn verify_js(suite: &str) -> Result<String, JsError> {
    verify_json(suite).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trajectory)]
pub fn trajectory_js(
    alpha2: &str,
    alpha3: &str,
    init: &str,
    path: &str,
    tol: f64,
    chart_switch: bool,
) -> Result<String, JsError> {
    trajectory_json(alpha2, alpha3, init, path, tol, chart_switch).map_err(|e| JsError::new(&e))
}
