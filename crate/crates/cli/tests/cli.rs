use std::process::{Command, Output};

fn pain2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pain2"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = pain2(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(pain2(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(pain2(&["verify", "--bogus"]).status.code(), Some(2));
}

#[test]
fn two_time_suite_writes_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = pain2(&[
        "verify",
        "--suite",
        "two-time",
        "--json",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let arr = v.as_array().unwrap();
    assert!(!arr.is_empty());
    let mut ids = std::collections::BTreeSet::new();
    for r in arr {
        let obj = r.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            ["anchor", "id", "ms", "residual", "residual_hash", "status"]
        );
        for k in ["id", "anchor", "status", "residual", "residual_hash"] {
            assert!(obj[k].is_string(), "{k}");
        }
        assert!(obj["ms"].is_number());
        assert_eq!(obj["status"], "pass");
        assert_eq!(obj["residual"], "");
        assert!(ids.insert(obj["id"].as_str().unwrap().to_string()));
    }
}

#[test]
fn holomorphy_suite_reports_the_third_chart() {
    let o = pain2(&["verify", "--suite", "holomorphy"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{out}");
    assert!(out.contains("fail  holomorphy.two_form.chart3"), "{out}");
    assert!(out.contains("(1) dx^dt"), "{out}");
}

#[test]
fn integrate_writes_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let o = pain2(&[
        "integrate",
        "--system",
        "main",
        "--alpha2",
        "1/2",
        "--alpha3",
        "1/4",
        "--init",
        "x=0,y=1,z=0,w=1",
        "--path",
        "0 -> 3+2i",
        "--tol",
        "1e-10",
        "--json",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(rows.len() > 10);
    assert!(text
        .lines()
        .next()
        .unwrap()
        .starts_with("{\"t_re\":0.0,\"t_im\":0.0,\"chart\":\"principal\""));
    let last = rows.last().unwrap();
    assert_eq!(
        (last["t_re"].as_f64(), last["t_im"].as_f64()),
        (Some(3.0), Some(2.0))
    );
    assert_eq!(last["state"].as_array().unwrap().len(), 8);
}

#[test]
fn pole_needs_chart_switching() {
    let base = [
        "integrate",
        "--alpha2",
        "1/4",
        "--alpha3",
        "1/3",
        "--init",
        "x=0,y=1,z=0,w=1",
        "--path",
        "0 -> 2",
    ];
    let plain = pain2(&base);
    assert_eq!(plain.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&plain.stderr).contains("blows up"));
    let mut args = base.to_vec();
    args.push("--chart-switch");
    let o = pain2(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("switch principal -> 3"));
}

#[test]
fn bad_inputs_are_usage_errors() {
    let o = pain2(&[
        "integrate",
        "--alpha2",
        "1/4",
        "--init",
        "x=0,y=1,z=0,w=1",
        "--path",
        "0 -> 1",
    ]);
    assert_eq!(o.status.code(), Some(2), "missing alpha3");
    let o = pain2(&[
        "integrate",
        "--alpha2",
        "1/4",
        "--alpha3",
        "1/3",
        "--init",
        "x=0,y=1",
        "--path",
        "0 -> 1",
    ]);
    assert_eq!(o.status.code(), Some(2), "missing coordinates");
    let o = pain2(&[
        "integrate",
        "--alpha2",
        "1/4",
        "--alpha3",
        "1/3",
        "--init",
        "x=0,y=1,z=0,w=1",
        "--path",
        "0 -> 1",
        "--tol",
        "-1",
    ]);
    assert_eq!(o.status.code(), Some(2), "negative tolerance");
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# integrate defaults\nalpha2 = 1/4\nalpha3 = 1/3\ninit = x=0,y=1,z=0,w=1\npath = 0 -> 0.5\n").unwrap();
    let o = pain2(&["integrate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    // explicit flags override the file
    let o = pain2(&[
        "integrate",
        "--config",
        cfg.to_str().unwrap(),
        "--path",
        "0 -> 0.25",
    ]);
    assert!(stdout(&o).contains("end: t=0.25"), "{}", stdout(&o));
}

#[test]
fn catalog_and_recover() {
    let o = pain2(&["catalog", "--id", "main"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("H = "));
    assert_eq!(
        pain2(&["catalog", "--id", "nothing"]).status.code(),
        Some(2)
    );
    let o = pain2(&["recover"]);
    let out = stdout(&o);
    assert!(out.contains("solution space dimension 2"), "{out}");
    assert!(
        out.contains("kernel: 1\n") && out.contains("kernel: t\n"),
        "{out}"
    );
}
