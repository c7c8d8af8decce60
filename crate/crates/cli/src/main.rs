use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde_json::json;

use pain2_core::hamiltonian::{build_system, catalog_entry, printed_field, Relation, SystemId};
use pain2_core::holomorphy::{build_chart, recover_hamiltonian, ChartId, HamAnsatz};
use pain2_core::numerics::{
    continue_through_pole, integrate, parse_state, NumParams, Path, StepControl, SwitchConfig,
};
use pain2_core::transforms::{build_map, MapId};
use pain2_core::verify::{default_workers, run_suite, Suite};
use pain2_core::{print_expr, Error};

#[derive(Parser, Debug)]
#[command(
    name = "pain2",
    version,
    about = "Verify, integrate and explore coupled Painlevé II Hamiltonian systems"
)]
#[command(args_override_self = true)]
struct Cli {
    /// Read defaults from a key=value file (keys are long flag names).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Integrate a system along a path in the complex time plane.
    Integrate(IntegrateArgs),
    /// Recover the Hamiltonian from chart polynomiality.
    Recover(RecoverArgs),
    /// List systems and transformations.
    Catalog(CatalogArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = Suite::NAMES)]
    suite: String,
    /// Write the report array as JSON.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct IntegrateArgs {
    #[arg(long, default_value = "main")]
    system: String,
    #[arg(long, value_parser = parse_rational)]
    alpha1: Option<BigRational>,
    #[arg(long, value_parser = parse_rational)]
    alpha2: Option<BigRational>,
    #[arg(long, value_parser = parse_rational)]
    alpha3: Option<BigRational>,
    /// Coupling constants of the generic family, e.g. "a=-3,a1=1,a2=1,a3=1".
    #[arg(long)]
    constants: Option<String>,
    /// Initial state, e.g. "x=0,y=1,z=0,w=1".
    #[arg(long)]
    init: String,
    /// Polyline, e.g. "0 -> 3+2i".
    #[arg(long)]
    path: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Continue through poles by switching charts.
    #[arg(long)]
    chart_switch: bool,
    #[arg(long, default_value_t = 1e6)]
    threshold: f64,
    /// Write the trajectory as JSON lines.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    /// Charts imposing polynomiality.
    #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
    charts: Vec<String>,
    #[arg(long, default_value_t = 5)]
    degree: u32,
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CatalogArgs {
    /// Show one system or map.
    #[arg(long)]
    id: Option<String>,
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    s.trim()
        .parse::<BigRational>()
        .map_err(|_| format!("`{s}` is not a rational number"))
}

/// Exit status classes.
enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let args = match with_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<Error>(),
                    Some(
                        Error::Usage(_)
                            | Error::Parse(_)
                            | Error::UnknownId { .. }
                            | Error::Parameter(_)
                    )
                )
            });
            ExitCode::from(if usage || e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            })
        }
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Splices `--key value` pairs from the config file in front of the
/// command-line flags, so explicit flags win.
fn with_config(args: Vec<String>) -> anyhow::Result<Vec<String>> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(args);
    };
    let file = match args[pos].strip_prefix("--config=") {
        Some(f) => f.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| UsageError("--config needs a file".into()))?,
    };
    let text = fs::read_to_string(&file).with_context(|| format!("reading config {file}"))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("{file}:{}: expected key=value", n + 1)))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        match v {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => {
                extra.push(format!("--{k}"));
                extra.push(v.to_string());
            }
        }
    }
    let sub = args
        .iter()
        .skip(1)
        .position(|a| ["verify", "integrate", "recover", "catalog"].contains(&a.as_str()));
    let Some(sub) = sub.map(|i| i + 1) else {
        return Ok(args);
    };
    let mut out = args[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Verify(a) => verify(a),
        Command::Integrate(a) => integrate_cmd(a),
        Command::Recover(a) => recover(a),
        Command::Catalog(a) => catalog(a),
    }
}

fn write_json(path: &PathBuf, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn verify(a: VerifyArgs) -> anyhow::Result<Outcome> {
    let suite: Suite = a.suite.parse()?;
    let reports = run_suite(suite, a.workers.unwrap_or_else(default_workers));
    let mut out = std::io::stdout().lock();
    for r in &reports {
        let status = format!("{:?}", r.status).to_lowercase();
        writeln!(
            out,
            "{status:<5} {:<40} {:>9.1} ms  {}",
            r.id, r.ms, r.anchor
        )?;
        if !r.pass() {
            writeln!(out, "      residual: {}", r.residual)?;
        }
    }
    let passed = reports.iter().filter(|r| r.pass()).count();
    writeln!(out, "{passed}/{} checks passed", reports.len())?;
    if let Some(p) = &a.json {
        write_json(p, &serde_json::to_value(&reports)?)?;
    }
    Ok(if passed == reports.len() {
        Outcome::Ok
    } else {
        Outcome::Failed
    })
}

fn numeric_params(a: &IntegrateArgs) -> anyhow::Result<NumParams> {
    let mut p = NumParams {
        alpha: [a.alpha1.clone(), a.alpha2.clone(), a.alpha3.clone()],
        constants: None,
    };
    if let Some(text) = &a.constants {
        let mut vals: [Option<BigRational>; 4] = Default::default();
        for part in text.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| UsageError(format!("bad constant `{part}`")))?;
            let i = ["a", "a1", "a2", "a3"]
                .iter()
                .position(|n| *n == k.trim())
                .ok_or_else(|| UsageError(format!("unknown constant `{}`", k.trim())))?;
            vals[i] = Some(parse_rational(v).map_err(UsageError)?);
        }
        let [Some(c0), Some(c1), Some(c2), Some(c3)] = vals else {
            bail!(UsageError("constants need a, a1, a2 and a3".into()));
        };
        p.constants = Some([c0, c1, c2, c3]);
    }
    Ok(p)
}

fn integrate_cmd(a: IntegrateArgs) -> anyhow::Result<Outcome> {
    let id: SystemId = a.system.parse()?;
    let params = numeric_params(&a)?;
    let s = params.system(id)?;
    let init = parse_state(&a.init, &s.coords())?;
    let path = Path::parse(&a.path)?;
    let control = StepControl::new(a.tol)?;
    let traj = if a.chart_switch {
        let ids: &[ChartId] = match id {
            SystemId::Main => &[ChartId::C1, ChartId::C2, ChartId::C3],
            SystemId::K1 | SystemId::K2 => &[ChartId::R1, ChartId::R2, ChartId::R3],
            _ => bail!(UsageError(format!("no chart atlas for `{id}`"))),
        };
        let atlas: Vec<_> = ids.iter().map(|&c| build_chart(c)).collect();
        continue_through_pole(
            &s,
            &atlas,
            &init,
            &path,
            control,
            SwitchConfig::with_threshold(a.threshold),
        )?
    } else {
        integrate(&s, &init, &path, control)?
    };
    println!(
        "{} accepted steps, {} chart switches",
        traj.num_steps(),
        traj.switches.len()
    );
    for e in &traj.switches {
        println!(
            "  switch {} -> {} at t = {:.6}{:+.6}i (round trip {:.2e})",
            traj.charts[e.from], traj.charts[e.to], e.t.re, e.t.im, e.round_trip
        );
    }
    println!("end: {}", traj.last());
    if let Some(p) = &a.json {
        let mut text = traj.json_lines().join("\n");
        text.push('\n');
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(Outcome::Ok)
}

fn recover(a: RecoverArgs) -> anyhow::Result<Outcome> {
    let charts = a
        .charts
        .iter()
        .map(|c| match c.trim().parse::<ChartId>()? {
            id @ (ChartId::C1 | ChartId::C2 | ChartId::C3) => Ok(build_chart(id)),
            other => {
                Err(UsageError(format!("chart `{other}` is not a chart of the main system")).into())
            }
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if a.degree == 0 {
        bail!(UsageError("degree must be positive".into()));
    }
    let r = recover_hamiltonian(&charts, HamAnsatz::affine(a.degree))?;
    let particular = print_expr(&r.particular());
    let kernel: Vec<String> = r.kernel_hamiltonians().iter().map(print_expr).collect();
    println!(
        "unknowns {}, equations {}, rank {}",
        r.ansatz.len(),
        r.equations,
        r.solution.rank
    );
    println!("solution space dimension {}", r.solution.dimension());
    println!("particular: {particular}");
    if kernel.len() <= 8 {
        for k in &kernel {
            println!("kernel: {k}");
        }
    }
    if let Some(p) = &a.json {
        write_json(
            p,
            &json!({
                "unknowns": r.ansatz.len(),
                "equations": r.equations,
                "rank": r.solution.rank,
                "dimension": r.solution.dimension(),
                "particular": particular,
                "kernel": kernel,
            }),
        )?;
    }
    Ok(Outcome::Ok)
}

fn relation_text(r: Relation) -> &'static str {
    match r {
        Relation::SumOne => "2*alpha1 + 2*alpha2 + alpha3 = 1",
        Relation::SumZero => "2*alpha1 + 2*alpha2 + alpha3 = 0",
        Relation::Free => "none",
    }
}

fn system_json(id: SystemId) -> anyhow::Result<serde_json::Value> {
    let e = catalog_entry(id);
    let s = build_system(id, None, None)?;
    let field = printed_field(id)?.map(|v| v.to_text());
    Ok(json!({
        "id": id.to_string(),
        "kind": "system",
        "hamiltonian": print_expr(&s.raw_hamiltonian()?),
        "time": e.time,
        "pairs": e.pairs,
        "relation": relation_text(e.relation),
        "printed_field": field,
    }))
}

fn map_json(id: MapId) -> serde_json::Value {
    let m = build_map(id);
    json!({
        "id": id.to_string(),
        "kind": "map",
        "components": m.to_text(),
        "parameters": m.params.iter().map(print_expr).collect::<Vec<_>>(),
        "relation": relation_text(m.relation),
    })
}

fn catalog(a: CatalogArgs) -> anyhow::Result<Outcome> {
    let entries: Vec<serde_json::Value> = match &a.id {
        Some(id) => {
            if let Ok(s) = id.parse::<SystemId>() {
                vec![system_json(s)?]
            } else if let Ok(m) = id.parse::<MapId>() {
                vec![map_json(m)]
            } else {
                bail!(UsageError(format!("`{id}` is neither a system nor a map")));
            }
        }
        None => {
            let mut v = SystemId::ALL
                .iter()
                .map(|&s| system_json(s))
                .collect::<anyhow::Result<Vec<_>>>()?;
            v.extend(MapId::ALL.iter().map(|&m| map_json(m)));
            v
        }
    };
    for e in &entries {
        if e["kind"] == "system" {
            println!(
                "system {} (time {}, relation {})",
                e["id"].as_str().unwrap_or(""),
                e["time"].as_str().unwrap_or(""),
                e["relation"].as_str().unwrap_or("")
            );
            println!("  H = {}", e["hamiltonian"].as_str().unwrap_or(""));
        } else {
            println!(
                "map {} (relation {})",
                e["id"].as_str().unwrap_or(""),
                e["relation"].as_str().unwrap_or("")
            );
            let comps: Vec<&str> = e["components"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|c| c.as_str())
                .collect();
            println!("  ({})", comps.join(", "));
            let ps: Vec<&str> = e["parameters"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|c| c.as_str())
                .collect();
            println!("  alpha -> ({})", ps.join(", "));
        }
    }
    if let Some(p) = &a.json {
        write_json(p, &serde_json::Value::Array(entries))?;
    }
    Ok(Outcome::Ok)
}
