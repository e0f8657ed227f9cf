//! Command line front end: `solve`, `build`, `verify`, `classify-realform` and `example`.

pub mod config;
pub mod pipeline;
pub mod realform;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tlmls::export::{chart, read_frame_csv, read_lift_csv, read_omega_csv, write_chart_csv, write_frame_csv, write_lift_csv, write_obj, write_omega_csv};
use tlmls::frame::FrameField;
use tlmls::grid::{Field, Grid};
use tlmls::surface::LiftField;
use tlmls::tzitzeica::SolutionField;

use config::{lambda_label, parse_lambda_list, RunConfig};
use pipeline::{Built, Solved};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// 2 for invalid input or unreadable files, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl From<tlmls::Error> for CliError {
    fn from(e: tlmls::Error) -> Self {
        match e {
            tlmls::Error::Io(m) | tlmls::Error::Format(m) => CliError::Io(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tlmls", version, about = "Timelike minimal Lagrangian surfaces in CH2_1 from Tzitzeica data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Goursat problem and write omega.csv and solve_report.json.
    Solve(RunArgs),
    /// Integrate frames and write frame and surface tables for each lambda.
    Build(BuildArgs),
    /// Check a built output directory and write report.json.
    Verify(VerifyArgs),
    /// Check the twisted loop algebra identities and the real-form table.
    ClassifyRealform(ClassifyArgs),
    /// Run a model surface end to end beside its closed form.
    Example(ExampleArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma separated spectral parameters, e.g. `1,0.7,0.5+0.2i`.
    #[arg(long)]
    lambda: Option<String>,
    /// Also write an OBJ mesh and the affine chart.
    #[arg(long)]
    obj: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Directory written by `build`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Also write realform.json into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the random samples.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ExampleArgs {
    /// `rp` or `clifford`.
    name: String,
    /// Nodes per axis.
    #[arg(long, default_value_t = 129)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    obj: bool,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("TLMLS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Build(args) => cmd_build(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::ClassifyRealform(args) => cmd_classify(&args),
        Command::Example(args) => cmd_example(&args),
    }
}

fn apply_tolerances(cfg: &mut RunConfig, overrides: &[String]) -> Result<(), CliError> {
    for item in overrides {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--tol: expected NAME=VALUE, found {item:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--tol {name}: cannot parse {value:?} as a number")))?;
        cfg.tolerances.insert(name.trim().to_string(), value);
    }
    cfg.validate()
}

fn load_config(args: &RunArgs) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::from_path(&args.config)?;
    apply_tolerances(&mut cfg, &args.tol)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.outputs.clone());
    Ok((cfg, out))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn open(dir: &Path, name: &str) -> Result<File, CliError> {
    let path = dir.join(name);
    File::open(&path).map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Debug, Serialize)]
struct GridInfo {
    nu: usize,
    nv: usize,
    hu: f64,
    hv: f64,
}

impl GridInfo {
    fn of(g: &Grid) -> Self {
        Self { nu: g.nodes_u(), nv: g.nodes_v(), hu: g.hu, hv: g.hv }
    }
}

#[derive(Debug, Serialize)]
struct SolveReport {
    grid: GridInfo,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_seconds: Option<f64>,
}

fn write_solved(dir: &Path, solved: &Solved, runtime: Option<f64>) -> Result<(), CliError> {
    let mut w = create(dir, "omega.csv")?;
    write_omega_csv(&solved.sol.omega, &mut w)?;
    let report = SolveReport {
        grid: GridInfo::of(solved.sol.grid()),
        residual: solved.residual,
        oracle_error: solved.oracle_error,
        runtime_seconds: runtime,
    };
    write_json(dir, "solve_report.json", &report)
}

fn cmd_solve(args: &RunArgs) -> Result<i32, CliError> {
    let (cfg, out) = load_config(args)?;
    let start = Instant::now();
    let solved = pipeline::solve(&cfg)?;
    let runtime = start.elapsed().as_secs_f64();
    write_solved(&out, &solved, Some(runtime))?;
    println!("solve: residual {:.3e}, {:.3} s, wrote {}", solved.residual, runtime, out.join("omega.csv").display());
    Ok(0)
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    config: serde_json::Value,
    files: Vec<String>,
}

fn same_grid(a: &Grid, b: &Grid) -> bool {
    a.nu == b.nu
        && a.nv == b.nv
        && (a.u0 - b.u0).abs() <= 1e-12
        && (a.v0 - b.v0).abs() <= 1e-12
        && (a.u1() - b.u1()).abs() <= 1e-12
        && (a.v1() - b.v1()).abs() <= 1e-12
}

/// Reads `omega.csv` from `dir` when it matches the configured grid; solves otherwise.
fn solved_for(cfg: &RunConfig, dir: &Path) -> Result<Solved, CliError> {
    let data = cfg.goursat_data()?;
    if dir.join("omega.csv").exists() {
        let omega = read_omega_csv(open(dir, "omega.csv")?)?;
        if same_grid(omega.grid(), data.grid()) {
            let omega = Field::from_vec(*data.grid(), omega.values().to_vec())?;
            return Ok(pipeline::finish_solve(cfg, data, SolutionField { omega }));
        }
    }
    let solved = pipeline::solve(cfg)?;
    write_solved(dir, &solved, None)?;
    Ok(solved)
}

fn write_built(cfg: &RunConfig, dir: &Path, built: &[Built], obj: bool) -> Result<Vec<String>, CliError> {
    let mut files = vec!["omega.csv".to_string(), "solve_report.json".to_string()];
    for b in built {
        let tag = lambda_label(b.lambda);
        let name = format!("frame_{tag}.csv");
        write_frame_csv(&b.frame, create(dir, &name)?)?;
        files.push(name);
        let name = format!("surface_{tag}.csv");
        write_lift_csv(&b.lift, create(dir, &name)?)?;
        files.push(name);
        if obj {
            let ch = chart(&b.lift);
            if !ch.skipped.is_empty() {
                eprintln!("warning: {} nodes with f3 = 0 left out of the chart at lambda = {tag}", ch.skipped.len());
            }
            let name = format!("chart_{tag}.csv");
            write_chart_csv(&ch, create(dir, &name)?)?;
            files.push(name);
            let name = format!("surface_{tag}.obj");
            write_obj(&ch, create(dir, &name)?)?;
            files.push(name);
        }
    }
    let config = serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    let manifest = Manifest { config, files: files.clone() };
    write_json(dir, "build.json", &manifest)?;
    Ok(files)
}

fn cmd_build(args: &BuildArgs) -> Result<i32, CliError> {
    let (mut cfg, out) = load_config(&args.run)?;
    if let Some(list) = &args.lambda {
        cfg.lambdas = parse_lambda_list(list)?;
        cfg.validate()?;
    }
    let solved = solved_for(&cfg, &out)?;
    let built = pipeline::build(&cfg, &solved)?;
    let files = write_built(&cfg, &out, &built, args.obj)?;
    println!("build: wrote {} files to {}", files.len(), out.display());
    Ok(0)
}

/// Reloads a build directory: configuration, `omega`, frames and lifts.
fn load_build(dir: &Path, overrides: &[String]) -> Result<(RunConfig, Solved, Vec<Built>), CliError> {
    let manifest: Manifest = serde_json::from_reader(open(dir, "build.json")?)
        .map_err(|e| CliError::Io(format!("build.json: {e}")))?;
    let mut cfg: RunConfig =
        serde_json::from_value(manifest.config).map_err(|e| CliError::Usage(format!("build.json config: {e}")))?;
    apply_tolerances(&mut cfg, overrides)?;
    let data = cfg.goursat_data()?;
    let omega = read_omega_csv(open(dir, "omega.csv")?)?;
    if !same_grid(omega.grid(), data.grid()) {
        return Err(CliError::Usage("omega.csv does not match the configured grid".into()));
    }
    let omega = Field::from_vec(*data.grid(), omega.values().to_vec())?;
    let solved = pipeline::finish_solve(&cfg, data, SolutionField { omega });
    let g = *solved.sol.grid();
    let mut built = Vec::new();
    for lambda in cfg.lambda_values() {
        let tag = lambda_label(lambda);
        let frames = read_frame_csv(open(dir, &format!("frame_{tag}.csv"))?)?;
        let lift = read_lift_csv(open(dir, &format!("surface_{tag}.csv"))?, lambda)?;
        if !same_grid(frames.grid(), &g) || !same_grid(lift.grid(), &g) {
            return Err(CliError::Usage(format!("tables for lambda = {tag} do not match the configured grid")));
        }
        let frames = Field::from_vec(g, frames.values().to_vec())?;
        let lift = LiftField { lambda, values: Field::from_vec(g, lift.values.values().to_vec())? };
        let frame = FrameField { lambda, frames, drift: Field::filled(g, 0.0) };
        built.push(Built { lambda, frame, lift });
    }
    Ok((cfg, solved, built))
}

fn print_report(report: &pipeline::VerifyReport) {
    let failed = report.failed();
    if failed.is_empty() {
        println!("verify: {} checks passed", report.checks.len());
    } else {
        println!("verify: {} of {} checks failed: {}", failed.len(), report.checks.len(), failed.join(", "));
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let (cfg, solved, built) = load_build(&args.out, &args.tol)?;
    let report = pipeline::verify(&cfg, &solved, &built)?;
    write_json(&args.out, "report.json", &report)?;
    print_report(&report);
    Ok(if report.overall { 0 } else { 1 })
}

fn cmd_classify(args: &ClassifyArgs) -> Result<i32, CliError> {
    let report = realform::classify(args.seed);
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    if let Some(dir) = &args.out {
        write_json(dir, "realform.json", &report)?;
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_example(args: &ExampleArgs) -> Result<i32, CliError> {
    let cfg = RunConfig::example(&args.name, args.grid)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("example_{}", args.name)));
    let solved = pipeline::solve(&cfg)?;
    write_solved(&out, &solved, None)?;
    let built = pipeline::build(&cfg, &solved)?;
    write_built(&cfg, &out, &built, args.obj)?;
    let report = pipeline::verify(&cfg, &solved, &built)?;
    write_json(&out, "report.json", &report)?;
    let (frames, lift) = pipeline::oracle_fields(&args.name, &cfg)?;
    let oracle = FrameField { lambda: Complex64::new(1.0, 0.0), frames, drift: Field::filled(*lift.grid(), 0.0) };
    write_frame_csv(&oracle, create(&out, "oracle_frame_1.csv")?)?;
    write_lift_csv(&lift, create(&out, "oracle_surface_1.csv")?)?;
    let diff = pipeline::oracle_diff(&args.name, &cfg, &solved, &built[0])?;
    write_json(&out, "diff.json", &diff)?;
    print_report(&report);
    println!(
        "example {}: omega error {:.3e}, frame error {:.3e}, lift error {:.3e}",
        args.name, diff.omega_max_error, diff.frame_max_error, diff.lift_max_error
    );
    Ok(if report.overall && diff.pass { 0 } else { 1 })
}
