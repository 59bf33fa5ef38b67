//! The `lrinv` command line: argument parsing, subcommand dispatch, table
//! output and run manifests.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{preset, ModelConfig};
use crate::ermakov::{default_initial_data, ermakov_residual, solve_rho, ErmakovTolerance};
use crate::error::{Error, Result};
use crate::operators::{GridSpec, StencilOrder, WavefunctionFrame};
use crate::params::OscillatorModel;
use crate::propagator::{accuracy_dt_bound, growth_rate, propagate_with, recommended_q_max, PropagationOptions};
use crate::suite::{run_standard_suite, SuiteConfig};
use crate::wavefunction::{
    eigenfunction_frame, exact_solution_frame, packet_weights, synthesize_packet, LambdaQuadrature, ParityMix, EVEN,
    ODD,
};

pub const EXIT_OK: i32 = 0;
/// A verification check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Bad arguments or configuration.
pub const EXIT_USAGE: i32 = 2;
/// A computation failed.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lrinv", version, about = "Exact invariant-based wavefunctions for the time-dependent inverted oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the auxiliary equation for rho(t) and write t, rho, rho_dot, residual.
    Rho(RhoArgs),
    /// Invariant eigenfunction on the q-grid at one time.
    Eigen(FrameArgs),
    /// Exact Schrödinger solution (eigenfunction with its phase) at one time.
    Psi(FrameArgs),
    /// Expand a Gaussian in invariant eigenfunctions and resynthesize it at time t.
    Packet(PacketArgs),
    /// Crank–Nicolson propagation with snapshot files.
    Propagate(PropagateArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ParityArg {
    Even,
    Odd,
}

impl ParityArg {
    fn mix(self) -> ParityMix {
        match self {
            ParityArg::Even => EVEN,
            ParityArg::Odd => ODD,
        }
    }
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Model document (JSON).
    #[arg(long, group = "source")]
    model: Option<PathBuf>,
    /// Built-in configuration (ck-reference).
    #[arg(long, group = "source")]
    preset: Option<String>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid as q_min q_max n_points; defaults to the preset grid.
    #[arg(long, num_args = 3, value_names = ["QMIN", "QMAX", "N"], allow_negative_numbers = true)]
    grid: Option<Vec<String>>,
    /// Finite-difference order (2, 4, 6 or 8).
    #[arg(long)]
    order: Option<u32>,
}

#[derive(Debug, Args)]
struct Output {
    /// Output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct RhoArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, num_args = 2, value_names = ["A", "B"], required = true, allow_negative_numbers = true)]
    t_span: Vec<f64>,
    /// Number of output rows.
    #[arg(long, default_value_t = 301)]
    samples: usize,
    /// Initial (rho, rho_dot); defaults to the frozen-coefficient value.
    #[arg(long, num_args = 2, value_names = ["RHO", "RHO_DOT"], allow_negative_numbers = true)]
    initial: Option<Vec<f64>>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct FrameArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = ParityArg::Even)]
    parity: ParityArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct GaussianArgs {
    /// Centre of the initial Gaussian.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    q0: f64,
    /// Width: |psi|^2 has standard deviation sigma.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    sigma: f64,
    /// Carrier wavenumber.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    k0: f64,
}

#[derive(Debug, Args)]
struct PacketArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    gaussian: GaussianArgs,
    /// λ interval and Gauss–Legendre node count.
    #[arg(long, num_args = 3, value_names = ["A", "B", "N"], required = true, allow_negative_numbers = true)]
    lambda_range: Vec<String>,
    /// Synthesis time.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct PropagateArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    gaussian: GaussianArgs,
    /// Start from the exact solution with this λ instead of a Gaussian.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, value_enum, default_value_t = ParityArg::Even)]
    parity: ParityArg,
    #[arg(long, num_args = 2, value_names = ["A", "B"], required = true, allow_negative_numbers = true)]
    t_span: Vec<f64>,
    /// Time step; defaults to the preset step.
    #[arg(long)]
    dt: Option<f64>,
    /// Write every STRIDE-th step.
    #[arg(long, default_value_t = 100)]
    stride: usize,
    /// Output directory for snapshots.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    dt: Option<f64>,
    /// Seed for random trial frames.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Report path; the summary table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// Column-oriented numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// RFC 4180 CSV with 17 significant digits.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let doc = json!({ "columns": self.columns, "rows": self.rows });
        let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| Error::InvalidArgument(format!("json: {e}")))?;
        out.push(b'\n');
        Ok(out)
    }

    fn encode(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub full_config: Value,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<OutputRecord>,
}

fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects output files and writes them, with their digests, at the end.
struct Sink {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Sink {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    fn finish(self, subcommand: &str, config: Value, started: f64, manifest_path: &Path) -> Result<Vec<OutputRecord>> {
        let io = |p: &Path, e: std::io::Error| Error::InvalidArgument(format!("cannot write {}: {e}", p.display()));
        let mut records = Vec::new();
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
            }
            fs::write(path, bytes).map_err(|e| io(path, e))?;
            records.push(OutputRecord { path: path.display().to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        }
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            full_config: config,
            started_unix: started,
            finished_unix: now_unix(),
            outputs: records.clone(),
        };
        let text = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::InvalidArgument(format!("json: {e}")))?;
        fs::write(manifest_path, text).map_err(|e| io(manifest_path, e))?;
        Ok(records)
    }
}

/// `<out>.manifest.json` next to a single output file.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

struct Resolved {
    preset: Option<String>,
    model_cfg: ModelConfig,
    model: OscillatorModel,
    grid: Option<GridSpec>,
    dt: Option<f64>,
}

impl Resolved {
    fn grid(&self) -> Result<GridSpec> {
        self.grid.ok_or_else(|| Error::Config("--grid is required with --model".into()))
    }

    fn dt(&self, flag: Option<f64>) -> Result<f64> {
        flag.or(self.dt).ok_or_else(|| Error::Config("--dt is required with --model".into()))
    }

    fn config_doc(&self, extra: Value) -> Value {
        json!({
            "preset": self.preset,
            "model": self.model_cfg,
            "grid": self.grid,
            "dt": self.dt,
            "parameters": extra,
        })
    }
}

fn parse_grid(args: &GridArgs, default: Option<GridSpec>) -> Result<Option<GridSpec>> {
    let mut grid = match &args.grid {
        Some(v) => {
            let num = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| Error::Config(format!("--grid {what}: cannot parse `{s}`")))
            };
            let n = v[2]
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("--grid N: cannot parse `{}` as a point count", v[2])))?;
            Some(GridSpec::new(num(&v[0], "QMIN")?, num(&v[1], "QMAX")?, n).map_err(|e| Error::Config(format!("--grid: {e}")))?)
        }
        None => default,
    };
    if let Some(o) = args.order {
        let order = StencilOrder::from_order(o).ok_or_else(|| Error::Config(format!("--order: unsupported order {o}")))?;
        grid = grid.map(|g| g.with_order(order));
    }
    Ok(grid)
}

fn resolve(source: &Source, grid: Option<&GridArgs>) -> Result<Resolved> {
    let (preset_name, model_cfg, default_grid, dt) = match (&source.model, &source.preset) {
        (Some(path), None) => (None, ModelConfig::from_file(path)?, None, None),
        (None, Some(name)) => {
            let p = preset(name)?;
            (Some(p.name), p.model, Some(p.grid), Some(p.dt))
        }
        _ => return Err(Error::Config("exactly one of --model or --preset is required".into())),
    };
    let grid = match grid {
        Some(g) => parse_grid(g, default_grid)?,
        None => default_grid,
    };
    let model = model_cfg.build()?;
    Ok(Resolved { preset: preset_name, model_cfg, model, grid, dt })
}

fn frame_table(frame: &WavefunctionFrame) -> Table {
    let mut t = Table::new(&["q", "re_psi", "im_psi"]);
    for (q, v) in frame.grid().nodes().into_iter().zip(frame.values()) {
        t.push(vec![q, v.re, v.im]);
    }
    t
}

fn cmd_rho(a: &RhoArgs, log: &mut dyn std::io::Write) -> Result<i32> {
    let started = now_unix();
    let r = resolve(&a.source, None)?;
    let (t0, t1) = (a.t_span[0], a.t_span[1]);
    if a.samples < 2 {
        return Err(Error::Config("--samples must be at least 2".into()));
    }
    let (rho0, rho_dot0) = match &a.initial {
        Some(v) => (v[0], v[1]),
        None => default_initial_data(&r.model, t0)?,
    };
    let sol = solve_rho(&r.model, rho0, rho_dot0, (t0, t1), ErmakovTolerance::default())?;
    let mut table = Table::new(&["t", "rho", "rho_dot", "residual"]);
    for k in 0..a.samples {
        let t = if k + 1 == a.samples { t1 } else { t0 + (t1 - t0) * k as f64 / (a.samples - 1) as f64 };
        let s = sol.state(t)?;
        let res = ermakov_residual(&r.model, s.rho, s.rho_dot, s.rho_ddot, t)?;
        table.push(vec![t, s.rho, s.rho_dot, res]);
    }
    let mut sink = Sink::new();
    sink.add(a.output.out.clone(), table.encode(a.output.format)?);
    let doc = r.config_doc(json!({ "t_span": [t0, t1], "samples": a.samples, "initial": [rho0, rho_dot0], "format": a.output.format }));
    sink.finish("rho", doc, started, &manifest_path_for(&a.output.out))?;
    writeln!(log, "wrote {} rows to {}", a.samples, a.output.out.display()).ok();
    Ok(EXIT_OK)
}

fn cmd_frame(a: &FrameArgs, name: &str, with_phase: bool, log: &mut dyn std::io::Write) -> Result<i32> {
    let started = now_unix();
    let r = resolve(&a.source, Some(&a.grid))?;
    let grid = r.grid()?;
    let (lo, hi) = (a.t.min(0.0), a.t.max(0.0));
    let sol = r.model_cfg.ermakov(&r.model, lo, hi)?;
    let frame = if with_phase {
        exact_solution_frame(a.lambda, a.parity.mix(), &r.model, &sol, &grid, a.t)?
    } else {
        eigenfunction_frame(a.lambda, a.parity.mix(), &r.model, &sol, &grid, a.t)?
    };
    let mut sink = Sink::new();
    sink.add(a.output.out.clone(), frame_table(&frame).encode(a.output.format)?);
    let doc = r.config_doc(json!({ "lambda": a.lambda, "parity": a.parity, "t": a.t, "format": a.output.format }));
    sink.finish(name, doc, started, &manifest_path_for(&a.output.out))?;
    writeln!(log, "wrote {} points to {}", grid.n_points, a.output.out.display()).ok();
    Ok(EXIT_OK)
}

fn parse_lambda_range(v: &[String]) -> Result<(f64, f64, usize)> {
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("--lambda-range: cannot parse `{s}`")));
    let n = v[2].parse::<usize>().map_err(|_| Error::Config(format!("--lambda-range N: cannot parse `{}`", v[2])))?;
    Ok((num(&v[0])?, num(&v[1])?, n))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_packet(a: &PacketArgs, log: &mut dyn std::io::Write) -> Result<i32> {
    let started = now_unix();
    let r = resolve(&a.source, Some(&a.grid))?;
    let grid = r.grid()?;
    let (la, lb, n) = parse_lambda_range(&a.lambda_range)?;
    let g = &a.gaussian;
    let initial = WavefunctionFrame::gaussian(grid, 0.0, g.q0, g.sigma, g.k0)?;
    let sol = r.model_cfg.ermakov(&r.model, a.t.min(0.0), a.t.max(0.0))?;
    let quad = LambdaQuadrature::gauss_legendre(la, lb, n)?;
    let spec = packet_weights(&initial, &quad, &r.model, &sol)?;
    let packet = synthesize_packet(&spec, &r.model, &sol, &grid, a.t)?;
    let mut weights = Table::new(&["lambda", "weight", "re_c_even", "im_c_even", "re_c_odd", "im_c_odd"]);
    for ((l, w), (e, o)) in spec.lambda_nodes().iter().zip(spec.lambda_weights()).zip(spec.channels()) {
        weights.push(vec![*l, *w, e.re, e.im, o.re, o.im]);
    }
    let ext = match a.output.format {
        Format::Csv => ".weights.csv",
        Format::Json => ".weights.json",
    };
    let mut sink = Sink::new();
    sink.add(a.output.out.clone(), frame_table(&packet).encode(a.output.format)?);
    sink.add(sibling(&a.output.out, ext), weights.encode(a.output.format)?);
    let doc = r.config_doc(json!({
        "lambda_range": [la, lb, n], "t": a.t,
        "gaussian": { "q0": g.q0, "sigma": g.sigma, "k0": g.k0 }, "format": a.output.format,
    }));
    sink.finish("packet", doc, started, &manifest_path_for(&a.output.out))?;
    writeln!(log, "tail estimate |c(endpoints)|/max|c| = {:.3e}", spec.tail_estimate()).ok();
    writeln!(log, "wrote packet to {}", a.output.out.display()).ok();
    Ok(EXIT_OK)
}

fn cmd_propagate(a: &PropagateArgs, log: &mut dyn std::io::Write) -> Result<i32> {
    let started = now_unix();
    let r = resolve(&a.source, Some(&a.grid))?;
    let grid = r.grid()?;
    let dt = r.dt(a.dt)?;
    let (t0, t1) = (a.t_span[0], a.t_span[1]);
    let g = &a.gaussian;
    let initial = match a.lambda {
        Some(lambda) => {
            let sol = r.model_cfg.ermakov(&r.model, t0.min(0.0), t0.max(0.0))?;
            exact_solution_frame(lambda, a.parity.mix(), &r.model, &sol, &grid, t0)?
        }
        None => WavefunctionFrame::gaussian(grid, t0, g.q0, g.sigma, g.k0)?,
    };
    let rate = growth_rate(&r.model, t0, t1)?;
    let extent = g.q0.abs() + 5.0 * g.sigma;
    writeln!(
        log,
        "domain sizing: recommended q_max = {:.4} (growth rate {:.4}, duration {}); grid q_max = {}",
        recommended_q_max(extent, rate, t1 - t0),
        rate,
        t1 - t0,
        grid.q_max
    )
    .ok();
    let bound = accuracy_dt_bound(&r.model, &grid, t0, t1)?;
    if dt > bound {
        writeln!(log, "note: dt = {dt} exceeds the accuracy guide h^2 M_min / hbar = {bound:.3e}").ok();
    }
    let opts = PropagationOptions { stride: a.stride.max(1), check_boundary: true };
    let run = propagate_with(&r.model, &initial, t1, dt, opts, |_| Ok(()))?;
    let ext = match a.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut sink = Sink::new();
    for (k, f) in run.frames.iter().enumerate() {
        sink.add(a.out.join(format!("snapshot_{k:05}.{ext}")), frame_table(f).encode(a.format)?);
    }
    let mut norms = Table::new(&["t", "norm_sq"]);
    for &(t, n) in &run.norm_history {
        norms.push(vec![t, n]);
    }
    sink.add(a.out.join(format!("norm_history.{ext}")), norms.encode(a.format)?);
    let doc = r.config_doc(json!({
        "t_span": [t0, t1], "dt": dt, "effective_dt": run.dt, "stride": a.stride,
        "initial": match a.lambda {
            Some(l) => json!({ "exact": { "lambda": l, "parity": a.parity } }),
            None => json!({ "gaussian": { "q0": g.q0, "sigma": g.sigma, "k0": g.k0 } }),
        },
        "format": a.format,
    }));
    fs::create_dir_all(&a.out).map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", a.out.display())))?;
    sink.finish("propagate", doc, started, &a.out.join("manifest.json"))?;
    writeln!(log, "{} snapshots, norm drift {:.3e}, written to {}", run.frames.len(), run.norm_drift(), a.out.display()).ok();
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs, log: &mut dyn std::io::Write) -> Result<i32> {
    let started = now_unix();
    let r = resolve(&a.source, Some(&a.grid))?;
    let grid = r.grid()?;
    let dt = r.dt(a.dt)?;
    let cfg = SuiteConfig::new(r.model_cfg.clone(), grid, dt, a.seed);
    let outcome = run_standard_suite(&cfg)?;
    writeln!(log, "{:<6} {:<72} {:>12} {:>12}", "status", "check", "value", "threshold").ok();
    for rep in &outcome.reports {
        let status = if rep.pass { "PASS" } else { "FAIL" };
        let rel = match rep.expectation {
            crate::verify::Expectation::AtMost => "<=",
            crate::verify::Expectation::Exceeds => ">",
        };
        writeln!(log, "{status:<6} {:<72} {:>12.3e} {rel}{:>10.1e}", rep.description, rep.value, rep.threshold).ok();
        if let Some(e) = &rep.error {
            writeln!(log, "       error: {e}").ok();
        }
    }
    let failed = outcome.reports.iter().filter(|r| !r.pass).count();
    writeln!(log, "{} checks, {} failed, {:.1} s", outcome.reports.len(), failed, outcome.seconds).ok();
    if let Some(out) = &a.out {
        let bytes = match a.format {
            Format::Json => {
                let doc = json!({ "all_pass": outcome.all_pass, "reports": outcome.reports });
                let mut v = serde_json::to_vec_pretty(&doc).map_err(|e| Error::InvalidArgument(format!("json: {e}")))?;
                v.push(b'\n');
                v
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
                w.write_record(["description", "norm_type", "value", "threshold", "expectation", "pass", "error"]).map_err(io)?;
                for rep in &outcome.reports {
                    w.write_record([
                        rep.description.clone(),
                        format!("{:?}", rep.norm_type),
                        format!("{:.16e}", rep.value),
                        format!("{:.16e}", rep.threshold),
                        format!("{:?}", rep.expectation),
                        rep.pass.to_string(),
                        rep.error.clone().unwrap_or_default(),
                    ])
                    .map_err(io)?;
                }
                w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?
            }
        };
        let mut sink = Sink::new();
        sink.add(out.clone(), bytes);
        let doc = r.config_doc(json!({ "seed": a.seed, "dt": dt, "format": a.format }));
        sink.finish("verify", doc, started, &manifest_path_for(out))?;
    }
    Ok(if outcome.all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Runs the command line with explicit streams; returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().ansi().to_string();
            return if e.use_stderr() {
                write!(err, "{text}").ok();
                EXIT_USAGE
            } else {
                write!(out, "{text}").ok();
                EXIT_OK
            };
        }
    };
    let result = match &cli.command {
        Command::Rho(a) => cmd_rho(a, out),
        Command::Eigen(a) => cmd_frame(a, "eigen", false, out),
        Command::Psi(a) => cmd_frame(a, "psi", true, out),
        Command::Packet(a) => cmd_packet(a, out),
        Command::Propagate(a) => cmd_propagate(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            writeln!(err, "error: {e}").ok();
            EXIT_USAGE
        }
        Err(e) => {
            writeln!(err, "error: {e}").ok();
            EXIT_RUNTIME
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_seventeen_digits() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![0.1, -2.5e-300]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,b\n1.0000000000000001e-1,-2.5000000000000000e-300\n");
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn json_mirror() {
        let mut t = Table::new(&["x"]);
        t.push(vec![1.5]);
        let v: Value = serde_json::from_slice(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["columns"][0], "x");
        assert_eq!(v["rows"][0][0], 1.5);
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn usage_errors_exit_two() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["lrinv", "rho", "--preset", "ck-reference"], &mut o, &mut e), EXIT_USAGE);
        assert!(String::from_utf8_lossy(&e).contains("Usage"));
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_with(["lrinv", "frobnicate"], &mut o, &mut e), EXIT_USAGE);
    }
}
