//! Command-line front end.
//!
//! Exit codes: 0 on success or match, 1 when a verdict fails, 2 on usage or
//! input errors. JSON output carries `"schema": 1`, prints every float with 17
//! significant digits and is byte-identical for identical inputs.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Number, Value};

use crate::catalog::{self, ClassificationReport, Params, Verdict};
use crate::chart_geometry::{gauss_identity_deviation, ChartFields, ChartedMap, CurvatureFields};
use crate::energy::{bienergy, homothety_check, integrate_invariants};
use crate::error::{Error, Result};
use crate::invariant_algebra::{eval_cf, eval_q1, eval_q2, eval_wc};
use crate::isopara_algebra::{condition_polynomial, family_interval, isolate_positive_roots, ConditionKind};
use crate::jet_calculus::JetAnalysis;

pub const SCHEMA_VERSION: u64 = 1;

/// Smallest node count per axis accepted by jet subcommands.
pub const MIN_GRID: usize = 16;

#[derive(Debug, Parser)]
#[command(name = "cfvar", version, about = "Invariants, residuals and classifications for maps into space forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit a JSON report.
    #[arg(long, global = true, conflicts_with = "table")]
    pub json: bool,
    /// Emit a plain-text table (default).
    #[arg(long, global = true)]
    pub table: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pointwise Q1, Q2, CF and WC of the second fundamental form.
    Invariants(InvariantsArgs),
    /// Euler–Lagrange residuals W1, W2 and their combinations.
    Residual(ResidualArgs),
    /// Integrated invariants, bienergy and homothety scaling.
    Energy(EnergyArgs),
    /// Exact condition polynomials of isoparametric families in the sphere.
    Isopara(IsoparaArgs),
    /// Family registry and the classification suite.
    Catalog(CatalogArgs),
    /// Critical flat tori in S³ for α I^Q1 + β I^Q2.
    FlatTorus(FlatTorusArgs),
}

#[derive(Debug, Args)]
pub struct ChartArgs {
    /// Built-in family id (see `catalog --list`).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub family: Option<String>,
    /// JSON chart description.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Family parameter as `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Shorthand for `--param r1=VALUE`.
    #[arg(long)]
    pub r1: Option<f64>,
    /// Shorthand for `--param seed=VALUE`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Nodes per axis: one value for all axes or a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Finite-difference stencil order.
    #[arg(long, default_value_t = 4, value_parser = parse_order)]
    pub order: usize,
    /// `induced` or `explicit` domain metric.
    #[arg(long, default_value = "induced", value_parser = ["induced", "explicit"])]
    pub mode: String,
}

fn parse_order(s: &str) -> std::result::Result<usize, String> {
    match s {
        "2" => Ok(2),
        "4" => Ok(4),
        _ => Err(format!("stencil order must be 2 or 4, got `{s}`")),
    }
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("parameter `{k}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Args)]
pub struct InvariantsArgs {
    #[command(flatten)]
    pub chart: ChartArgs,
    /// Also write per-node values as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub chart: ChartArgs,
    /// Weights of α W1 + β W2; both must be given.
    #[arg(long, requires = "beta", allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha", allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Include the second-order CF form and its agreement with W2 - W1.
    #[arg(long)]
    pub second_order: bool,
    /// Fail (exit 1) when the reported residual exceeds this max norm.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Also write per-node residual vectors as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub chart: ChartArgs,
    /// Compare energies under the homothety g ↦ scale² g (explicit metric only).
    #[arg(long)]
    pub homothety: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IsoparaArgs {
    /// Number of distinct principal curvatures.
    #[arg(long)]
    pub g: usize,
    /// Named family, e.g. M18, M30, M4m-2 (with --m), M8 for g = 4.
    #[arg(long, conflicts_with = "mults", required_unless_present = "mults")]
    pub family: Option<String>,
    /// Multiplicities m_1,…,m_g.
    #[arg(long, value_delimiter = ',')]
    pub mults: Option<Vec<u64>>,
    /// Family parameter for parameterized families.
    #[arg(long)]
    pub m: Option<i64>,
    /// Condition: CF, Q1, Q2 or WC.
    #[arg(long, default_value = "CF")]
    pub kind: ConditionKind,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// List chart families instead of running the classification suite.
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Args)]
pub struct FlatTorusArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    /// Cross-check against residuals on Clifford charts.
    #[arg(long)]
    pub check: bool,
    /// Nodes per axis for --check.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
}

/// Output of one command.
pub struct Outcome {
    pub json: Value,
    pub table: String,
    pub success: bool,
}

/// Parses `argv`, runs the command and returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    match run(&cli) {
        Ok(out) => match emit(&cli, &out) {
            Ok(()) => i32::from(!out.success),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Honors `CFVAR_THREADS`; a pool already configured is left alone.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("CFVAR_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("CFVAR_THREADS must be a positive integer, got `{v}`")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn emit(cli: &Cli, out: &Outcome) -> Result<()> {
    let text = if cli.json {
        let mut s = to_json_string(&out.json);
        s.push('\n');
        s
    } else {
        out.table.clone()
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs a parsed command.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Invariants(a) => run_invariants(a),
        Command::Residual(a) => run_residual(a),
        Command::Energy(a) => run_energy(a),
        Command::Isopara(a) => run_isopara(a),
        Command::Catalog(a) => run_catalog(a),
        Command::FlatTorus(a) => run_flat_torus(a),
    }
}

/// Pretty JSON with every non-integer number printed as `{:.16e}`.
pub fn to_json_string(v: &Value) -> String {
    serde_json::to_string_pretty(&normalize_floats(v.clone())).expect("JSON values always serialize")
}

fn normalize_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            if x.is_finite() {
                Value::Number(format!("{x:.16e}").parse::<Number>().expect("formatted float parses"))
            } else {
                Value::Null
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize_floats(v))).collect()),
        other => other,
    }
}

fn envelope(command: &str, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    if let Value::Object(b) = body {
        m.extend(b);
    } else {
        m.insert("result".into(), body);
    }
    Value::Object(m)
}

fn to_value<T: Serialize>(t: &T) -> Result<Value> {
    Ok(serde_json::to_value(t)?)
}

fn load_chart(a: &ChartArgs, jets: bool) -> Result<ChartedMap> {
    let map = match (&a.family, &a.config) {
        (Some(id), None) => {
            let entry = catalog::family(id)?;
            let mut params: Params = a.params.iter().cloned().collect();
            if let Some(r1) = a.r1 {
                params.insert("r1".into(), r1);
            }
            if let Some(seed) = a.seed {
                params.insert("seed".into(), seed as f64);
            }
            let grid = a.grid.as_ref().map(|g| match g.as_slice() {
                [n] => vec![*n; entry.default_grid.len()],
                g => g.to_vec(),
            });
            match a.mode.as_str() {
                "explicit" => catalog::chart_explicit(id, &params, grid.as_deref())?,
                _ => catalog::chart(id, &params, grid.as_deref())?,
            }
        }
        (None, Some(path)) => {
            if !a.params.is_empty() || a.r1.is_some() || a.seed.is_some() || a.grid.is_some() {
                return Err(Error::InvalidInput(
                    "--param, --r1, --seed and --grid apply to --family; put them in the config file".into(),
                ));
            }
            catalog::load_config(path)?
        }
        _ => return Err(Error::InvalidInput("give exactly one of --family and --config".into())),
    };
    if jets {
        if let Some(n) = map.dims().into_iter().find(|&n| n < MIN_GRID) {
            return Err(Error::InvalidInput(format!(
                "grid has {n} nodes on an axis; jet computations need at least {MIN_GRID}"
            )));
        }
    }
    Ok(map.with_stencil_order(a.order))
}

fn chart_header(map: &ChartedMap) -> Value {
    json!({
        "chart": map.name(),
        "grid": map.dims(),
        "ambient_curvature": map.ambient().curvature(),
        "immersion": map.is_immersion(),
        "stencil_order": map.stencil_order(),
    })
}

fn merge(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Object(mut x), Value::Object(y)) => {
            x.extend(y);
            Value::Object(x)
        }
        (a, _) => a,
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
struct Stats {
    min: f64,
    max: f64,
    mean: f64,
}

fn stats(v: &[f64]) -> Stats {
    if v.is_empty() {
        return Stats::default();
    }
    Stats {
        min: v.iter().copied().fold(f64::INFINITY, f64::min),
        max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: crate::sum::pairwise_sum(v) / v.len() as f64,
    }
}

fn run_invariants(a: &InvariantsArgs) -> Result<Outcome> {
    let map = load_chart(&a.chart, true)?;
    let fields = ChartFields::new(&map)?;
    let pts = fields.report_points();
    let mut cols = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for &p in &pts {
        let form = fields.form_at(p)?;
        for (c, v) in cols.iter_mut().zip([eval_q1(&form), eval_q2(&form), eval_cf(&form), eval_wc(&form)]) {
            c.push(v);
        }
    }
    let gauss = if fields.is_immersion() {
        Some(gauss_identity_deviation(&fields, &CurvatureFields::new(&fields))?)
    } else {
        None
    };
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path)?;
        let m = fields.dim();
        let mut header: Vec<String> = (0..m).map(|k| format!("u{k}")).collect();
        header.extend(["q1", "q2", "cf", "wc"].map(String::from));
        w.write_record(&header)?;
        for (i, &p) in pts.iter().enumerate() {
            let mut rec: Vec<String> = fields.grid().coords(p).iter().map(|x| format!("{x:.16e}")).collect();
            rec.extend(cols.iter().map(|c| format!("{:.16e}", c[i])));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    let names = ["q1", "q2", "cf", "wc"];
    let st: Vec<Stats> = cols.iter().map(|c| stats(c)).collect();
    let mut body = Map::new();
    for (n, s) in names.iter().zip(&st) {
        body.insert((*n).into(), to_value(s)?);
    }
    body.insert("points".into(), json!(pts.len()));
    body.insert("gauss_identity_deviation".into(), json!(gauss));
    let json = envelope("invariants", merge(chart_header(&map), Value::Object(body)));
    let mut t = String::new();
    writeln!(t, "chart {} grid {:?} ({} report nodes)", map.name(), map.dims(), pts.len()).ok();
    writeln!(t, "{:<4} {:>24} {:>24} {:>24}", "", "min", "max", "mean").ok();
    for (n, s) in names.iter().zip(&st) {
        writeln!(t, "{:<4} {:>24.16e} {:>24.16e} {:>24.16e}", n.to_uppercase(), s.min, s.max, s.mean).ok();
    }
    if let Some(g) = gauss {
        writeln!(t, "Gauss identity deviation {g:.3e}").ok();
    }
    Ok(Outcome {
        json,
        table: t,
        success: true,
    })
}

fn run_residual(a: &ResidualArgs) -> Result<Outcome> {
    let map = load_chart(&a.chart, true)?;
    let jets = JetAnalysis::new(&map)?;
    let field = match (a.alpha, a.beta) {
        (Some(al), Some(be)) => jets.residuals_for(al, be)?,
        _ => jets.residuals(),
    };
    if let Some(path) = &a.csv {
        field.write_csv(path)?;
    }
    let mut t = String::new();
    writeln!(t, "chart {} grid {:?}", map.name(), map.dims()).ok();
    writeln!(t, "{:<12} {:>24} {:>24}", "residual", "max norm", "L2 norm").ok();
    let mut slices = vec![&field.w1, &field.w2, &field.cf, &field.wc];
    if let Some((_, _, s)) = &field.combination {
        slices.push(s);
    }
    for s in &slices {
        writeln!(t, "{:<12} {:>24.16e} {:>24.16e}", s.label, s.max_norm, s.l2_norm).ok();
    }
    let mut body = merge(chart_header(&map), to_value(&field)?);
    if a.second_order {
        let so = jets.cf_second_order()?;
        let dev = jets.oracle_equivalence()?;
        writeln!(t, "second-order CF max norm {:.16e}", so.total.max_norm).ok();
        writeln!(t, "agreement with W2 - W1 (scaled) {:.3e}", dev.scaled_deviation).ok();
        body = merge(body, json!({ "second_order": to_value(&so)?, "oracle_equivalence": to_value(&dev)? }));
    }
    let checked = field.combination.as_ref().map(|c| &c.2).unwrap_or(&field.cf);
    let success = a.tolerance.is_none_or(|tol| checked.max_norm <= tol);
    if let Some(tol) = a.tolerance {
        writeln!(
            t,
            "verdict: {} ({} max norm {:.3e}, tolerance {tol:.1e})",
            if success { "pass" } else { "fail" },
            checked.label,
            checked.max_norm
        )
        .ok();
        body = merge(body, json!({ "tolerance": tol, "pass": success }));
    }
    Ok(Outcome {
        json: envelope("residual", body),
        table: t,
        success,
    })
}

fn run_energy(a: &EnergyArgs) -> Result<Outcome> {
    let map = load_chart(&a.chart, false)?;
    let e = integrate_invariants(&map)?;
    let mut t = String::new();
    writeln!(t, "chart {} grid {:?}", map.name(), map.dims()).ok();
    writeln!(t, "volume {:>24.16e}", e.volume).ok();
    for (n, v) in [("I^Q1", e.q1), ("I^Q2", e.q2), ("I^CF", e.cf), ("I^WC", e.wc)] {
        writeln!(t, "{n:<6} {v:>24.16e}").ok();
    }
    let mut body = merge(chart_header(&map), to_value(&e)?);
    if map.is_immersion() {
        let b = bienergy(&map)?;
        writeln!(t, "bienergy {:.16e} (I^Q2 / 2 gap {:.3e})", b.bienergy, b.relative_gap).ok();
        body = merge(body, json!({ "bienergy": to_value(&b)? }));
    }
    if let Some(s) = a.homothety {
        let h = homothety_check(&map, s)?;
        writeln!(
            t,
            "homothety {s}: relative change {:.3e} / {:.3e}, scale^(m-4) law deviation {:.3e}",
            h.relative_change[0], h.relative_change[1], h.scaling_law_deviation
        )
        .ok();
        body = merge(body, json!({ "homothety": to_value(&h)? }));
    }
    Ok(Outcome {
        json: envelope("energy", body),
        table: t,
        success: true,
    })
}

fn run_isopara(a: &IsoparaArgs) -> Result<Outcome> {
    let (mults, expected) = match (&a.family, &a.mults) {
        (Some(name), None) => {
            let (m, e) = catalog::isopara_family(a.g, name, a.m)?;
            (m, Some(e))
        }
        (None, Some(m)) => (m.clone(), None),
        _ => return Err(Error::InvalidInput("give exactly one of --family and --mults".into())),
    };
    let label = a.family.clone().unwrap_or_else(|| format!("g{}", a.g));
    let one = num_rational::BigRational::from_integer(1.into());
    let poly = condition_polynomial(a.g, &mults, a.kind, &one)?;
    let (lo, hi) = family_interval(a.g)?;
    let roots = if poly.identically_zero {
        None
    } else {
        Some(isolate_positive_roots(&poly, &lo, &hi)?)
    };
    let mut t = String::new();
    writeln!(t, "{label} (g = {}, multiplicities {mults:?}), condition {}", a.g, a.kind).ok();
    if poly.identically_zero {
        writeln!(t, "identically satisfied").ok();
    } else {
        let lp = if poly.lambda_power > 0 { format!("λ^{} · ", poly.lambda_power) } else { String::new() };
        writeln!(t, "polynomial: {lp}{}", poly.display_poly()).ok();
    }
    if let Some(e) = &expected {
        writeln!(t, "closed form: {e}").ok();
    }
    writeln!(t, "interval: ({lo}, {hi})").ok();
    if let Some(r) = &roots {
        for e in &r.endpoint_roots {
            writeln!(t, "endpoint root λ = {e}").ok();
        }
        for r in &r.roots {
            writeln!(t, "root in [{:.15}, {:.15}]", r.lo_f64, r.hi_f64).ok();
        }
    }
    let body = json!({
        "family": label,
        "g": a.g,
        "multiplicities": mults,
        "kind": a.kind,
        "polynomial": poly,
        "expected": expected,
        "interval": [lo.to_string(), hi.to_string()],
        "roots": roots.as_ref().map(|r| &r.roots),
        "endpoint_roots": roots.as_ref().map(|r| &r.endpoint_roots),
    });
    Ok(Outcome {
        json: envelope("isopara", body),
        table: t,
        success: true,
    })
}

/// Plain-text table of classification reports.
pub fn classification_table(reports: &[ClassificationReport]) -> String {
    let mut t = String::new();
    writeln!(t, "{:<11} {:<4} {:<40} {:<9} {}", "family", "kind", "parameters", "verdict", "roots").ok();
    for r in reports {
        let roots: Vec<String> = r
            .endpoint_roots
            .iter()
            .cloned()
            .chain(r.roots.iter().map(|e| format!("{:.12}", e.midpoint())))
            .collect();
        let verdict = match r.verdict {
            Verdict::Match => "match",
            Verdict::Mismatch => "MISMATCH",
        };
        writeln!(t, "{:<11} {:<4} {:<40} {:<9} {}", r.family, r.kind, r.parameters, verdict, roots.join(", ")).ok();
    }
    let bad = reports.iter().filter(|r| r.verdict != Verdict::Match).count();
    writeln!(t, "{} reports, {} mismatches", reports.len(), bad).ok();
    t
}

fn run_catalog(a: &CatalogArgs) -> Result<Outcome> {
    if a.list {
        let fams = catalog::families();
        let mut t = String::new();
        for f in &fams {
            let params: Vec<String> = f.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
            writeln!(t, "{:<18} {:<7} {:<28} {}", f.id, f.ambient, params.join(" "), f.summary).ok();
        }
        return Ok(Outcome {
            json: envelope("catalog", json!({ "families": to_value(&fams)? })),
            table: t,
            success: true,
        });
    }
    let reports = catalog::classification_suite()?;
    let success = catalog::all_match(&reports);
    Ok(Outcome {
        json: envelope("catalog", json!({ "all_match": success, "reports": to_value(&reports)? })),
        table: classification_table(&reports),
        success,
    })
}

fn run_flat_torus(a: &FlatTorusArgs) -> Result<Outcome> {
    let c = catalog::flat_torus_classify(a.alpha, a.beta)?;
    let mut t = String::new();
    writeln!(t, "(α, β) = ({}, {}): case {}", a.alpha, a.beta, c.case.label()).ok();
    let hs: Vec<String> = c.h_squared.iter().map(|h| format!("{h}")).collect();
    writeln!(t, "ℋ² ∈ {{{}}}", hs.join(", ")).ok();
    match c.radii {
        Some((r1, r2)) => writeln!(t, "radii r1 = {r1:.16}, r2 = {r2:.16}").ok(),
        None => writeln!(t, "no non-minimal critical Clifford torus").ok(),
    };
    let mut body = to_value(&c)?;
    let mut success = true;
    if a.check {
        if a.grid < MIN_GRID {
            return Err(Error::InvalidInput(format!("--grid must be at least {MIN_GRID}")));
        }
        let radii = [0.5, 0.6, std::f64::consts::FRAC_1_SQRT_2, 0.8];
        let chk = catalog::flat_torus_chart_check(a.alpha, a.beta, &radii, a.grid, 1e-3)?;
        success = chk.agrees;
        writeln!(
            t,
            "chart check at {}²: max relative deviation {:.3e}, critical residuals {:?}: {}",
            a.grid,
            chk.max_relative_deviation,
            chk.critical_residuals,
            if chk.agrees { "agree" } else { "DISAGREE" }
        )
        .ok();
        body = merge(body, json!({ "chart_check": to_value(&chk)? }));
    }
    Ok(Outcome {
        json: envelope("flat-torus", body),
        table: t,
        success,
    })
}

/// Convenience for tests and examples: run `argv` and capture the JSON report.
pub fn run_to_json(argv: &[&str]) -> Result<(Value, bool)> {
    let cli = Cli::try_parse_from(std::iter::once("cfvar").chain(argv.iter().copied()))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let out = run(&cli)?;
    Ok((serde_json::from_str(&to_json_string(&out.json))?, out.success))
}

/// Reads a JSON report written with `--out`.
pub fn read_report(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
