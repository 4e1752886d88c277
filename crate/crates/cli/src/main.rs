mod manifest;
mod state_file;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use cubist::ancilla::{optimize_ancilla, search_map, AncillaOptimum, OptimizerConfig};
use cubist::fock::StateVector;
use cubist::gate::{AncillaSpec, Engine, GateConfig, GateSetup};
use cubist::grid_io::Axis;
use cubist::parallel::with_workers;
use cubist::phase_space::{ideal_cubic_wigner, wigner_of_state, wigner_of_state_mapped, WignerGrid};
use cubist::validation::{run_suite, Suite};
use cubist::CubistError;

use manifest::RunManifest;

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const MAX_N: usize = 12;
const MAX_MAP_CELLS: usize = 2000 * 2000;
const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Parser, Debug)]
#[command(name = "cubist", version, about = "Measurement-induced cubic phase gate: ancilla design and gate simulation")]
struct Cli {
    /// Worker threads for search maps and shot batches (0 = all cores).
    #[arg(long, global = true, env = "CUBIST_WORKERS", default_value_t = 0)]
    workers: usize,

    /// JSON file with command settings; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ancilla optimization and search maps.
    #[command(subcommand)]
    Ancilla(AncillaCommand),
    /// Wigner function grids.
    Wigner(WignerArgs),
    /// Gate simulation.
    #[command(subcommand)]
    Gate(GateCommand),
    /// Built-in identity and sampler checks.
    Validate(ValidateArgs),
}

#[derive(Subcommand, Debug)]
enum AncillaCommand {
    /// Optimal N-photon approximation of the cubic ancilla.
    Optimize(OptimizeArgs),
    /// Minimum-eigenvalue landscape over (λ′, d).
    Map(MapArgs),
}

#[derive(Subcommand, Debug)]
enum GateCommand {
    /// Monte-Carlo run of the gate.
    Run(GateArgs),
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(long)]
    n: Option<usize>,
    /// λ′ search window, `min,max`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    lambda_range: Option<(f64, f64)>,
    /// d search window, `min,max`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    d_range: Option<(f64, f64)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MapArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    lambda_range: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    d_range: Option<(f64, f64)>,
    /// Cells per axis, `K` or `KxM` (λ′ × d).
    #[arg(long, value_parser = parse_resolution)]
    resolution: Option<(usize, usize)>,
    #[arg(long, value_enum)]
    unit: Option<Unit>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Unit {
    #[default]
    Raw,
    #[value(name = "dB", alias = "db")]
    #[serde(rename = "dB", alias = "db")]
    Db,
}

#[derive(Args, Debug)]
struct WignerArgs {
    /// `ideal-cubic`, `optimized-N`, or a path to a state JSON file.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    /// `min,max,count` for both axes, or `xmin,xmax,nx,pmin,pmax,np`.
    #[arg(long, value_parser = parse_axes, allow_hyphen_values = true)]
    axes: Option<(Axis, Axis)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GateArgs {
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long)]
    squeeze_db: Option<f64>,
    /// `vacuum`, `gaussian`, `optimized-N`.
    #[arg(long)]
    ancilla: Option<String>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Input state JSON (default: vacuum).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Also write one CSV row per shot here.
    #[arg(long)]
    shots_csv: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Grid,
    Fock,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    suite: Option<SuiteArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Identities,
    Sampler,
    All,
}

/// Settings echoed into manifests. Each one loads from `--config`, then
/// takes flag overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct OptimizeSettings {
    n: usize,
    #[serde(flatten)]
    optimizer: OptimizerConfig,
}

impl Default for OptimizeSettings {
    fn default() -> Self {
        OptimizeSettings { n: 3, optimizer: OptimizerConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct MapSettings {
    n: usize,
    lambda_range: (f64, f64),
    d_range: (f64, f64),
    resolution: (usize, usize),
    unit: Unit,
}

impl Default for MapSettings {
    fn default() -> Self {
        let o = OptimizerConfig::default();
        MapSettings { n: 1, lambda_range: o.lambda_range, d_range: o.d_range, resolution: (200, 200), unit: Unit::Raw }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct WignerSettings {
    state: String,
    gamma: f64,
    x_axis: Axis,
    p_axis: Axis,
}

impl Default for WignerSettings {
    fn default() -> Self {
        let (x_axis, p_axis) = WignerGrid::default_axes();
        WignerSettings { state: "ideal-cubic".into(), gamma: 0.1, x_axis, p_axis }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct GateSettings {
    #[serde(flatten)]
    gate: GateConfig,
    input: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct ValidateSettings {
    suite: Suite,
    seed: u64,
}

impl Default for ValidateSettings {
    fn default() -> Self {
        ValidateSettings { suite: Suite::All, seed: 0 }
    }
}

/// Error with the process exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }

    fn numerical(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 3, error: error.into() }
    }
}

/// Bad input is a usage error; everything the numerics give up on is 3.
impl From<CubistError> for Failure {
    fn from(e: CubistError) -> Self {
        match e {
            CubistError::InvalidArgument(_)
            | CubistError::InvalidDimension(_)
            | CubistError::ModeOutOfRange { .. }
            | CubistError::Parse(_)
            | CubistError::Json(_) => Failure::usage(e),
            _ => Failure::numerical(e),
        }
    }
}

type Outcome = std::result::Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let workers = cli.workers;
    let config = cli.config.as_deref();
    match cli.command {
        Command::Ancilla(AncillaCommand::Optimize(a)) => cmd_optimize(a, config, workers),
        Command::Ancilla(AncillaCommand::Map(a)) => cmd_map(a, config, workers),
        Command::Wigner(a) => cmd_wigner(a, config, workers),
        Command::Gate(GateCommand::Run(a)) => cmd_gate_run(a, config, workers),
        Command::Validate(a) => cmd_validate(a, config, workers),
    }
}

fn load_settings<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))
        .map_err(Failure::usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("bad config {}", path.display()))
        .map_err(Failure::usage)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display())).map_err(Failure::usage)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(Failure::numerical)?;
    s.push('\n');
    Ok(s)
}

fn cmd_optimize(a: OptimizeArgs, config: Option<&Path>, workers: usize) -> Outcome {
    let start = Instant::now();
    let mut s: OptimizeSettings = load_settings(config)?;
    if let Some(n) = a.n {
        s.n = n;
    }
    if let Some(r) = a.lambda_range {
        s.optimizer.lambda_range = r;
    }
    if let Some(r) = a.d_range {
        s.optimizer.d_range = r;
    }
    if s.n > MAX_N {
        return Err(Failure::usage(anyhow!("--n must be at most {MAX_N}, got {}", s.n)));
    }
    s.optimizer.workers = workers;
    let opt: AncillaOptimum = optimize_ancilla(s.n, &s.optimizer)?;
    write_file(&a.out, &to_json(&opt)?)?;

    say!("N = {}  lambda' = {:.6}  d = {:.6}", opt.n, opt.lambda_opt, opt.d_opt);
    say!("{:>3}  {:>10}  {:>10}  {:>10}", "n", "|c_n|", "re", "im");
    for (k, c) in opt.coefficients.iter().enumerate() {
        say!("{k:>3}  {:>10.6}  {:>10.6}  {:>10.6}", c.norm(), c.re, c.im);
    }
    say!(
        "variance {:.8} ({:.3} dB), ratio to Gaussian limit {:.6}",
        opt.variance,
        opt.variance_db(),
        opt.ratio
    );

    RunManifest::new("ancilla optimize", &s, None, vec![a.out.clone()], start).write(&a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_map(a: MapArgs, config: Option<&Path>, workers: usize) -> Outcome {
    let start = Instant::now();
    let mut s: MapSettings = load_settings(config)?;
    if let Some(n) = a.n {
        s.n = n;
    }
    if let Some(r) = a.lambda_range {
        s.lambda_range = r;
    }
    if let Some(r) = a.d_range {
        s.d_range = r;
    }
    if let Some(r) = a.resolution {
        s.resolution = r;
    }
    if let Some(u) = a.unit {
        s.unit = u;
    }
    if s.n > MAX_N {
        return Err(Failure::usage(anyhow!("--n must be at most {MAX_N}, got {}", s.n)));
    }
    let (nl, nd) = s.resolution;
    if nl.saturating_mul(nd) > MAX_MAP_CELLS {
        return Err(Failure::usage(anyhow!("{nl}x{nd} exceeds the 2000x2000 cell limit")));
    }
    let map = search_map(s.n, s.lambda_range, s.d_range, s.resolution, workers)?;
    write_file(&a.out, &map.to_csv(s.unit == Unit::Db))?;
    let (il, id) = map.argmin();
    say!(
        "minimum {:.8} ({:.3} dB) at lambda' = {:.5}, d = {:.5}",
        map.get(il, id),
        map.db_values[il * map.d_axis.count + id],
        map.lambda_axis.value(il),
        map.d_axis.value(id)
    );
    RunManifest::new("ancilla map", &s, None, vec![a.out.clone()], start).write(&a.out)?;
    Ok(ExitCode::SUCCESS)
}

/// `optimized-N` or `optimized(N)`.
fn parse_optimized(spec: &str) -> Option<usize> {
    match AncillaSpec::parse(spec) {
        Ok(a) if spec.starts_with("optimized") => Some(a.cutoff()),
        _ => None,
    }
}

fn cmd_wigner(a: WignerArgs, config: Option<&Path>, workers: usize) -> Outcome {
    let start = Instant::now();
    let mut s: WignerSettings = load_settings(config)?;
    if let Some(st) = a.state {
        s.state = st;
    }
    if let Some(g) = a.gamma {
        s.gamma = g;
    }
    if let Some((x, p)) = a.axes {
        s.x_axis = x;
        s.p_axis = p;
    }
    let mut extra = serde_json::Map::new();
    let grid = if s.state == "ideal-cubic" {
        ideal_cubic_wigner(s.gamma, s.x_axis, s.p_axis)?
    } else if let Some(n) = parse_optimized(&s.state) {
        if n > MAX_N {
            return Err(Failure::usage(anyhow!("optimized cutoff must be at most {MAX_N}, got {n}")));
        }
        if s.gamma == 0.0 || !s.gamma.is_finite() {
            return Err(Failure::usage(anyhow!("--gamma must be finite and non-zero")));
        }
        let opt = optimize_ancilla(n, &OptimizerConfig { workers, ..Default::default() })?;
        // Ancilla prepared for strength γ: wavefunction √λ ψ(λx), λ = λ′γ^{1/3}.
        let g = s.gamma.cbrt();
        let lambda = opt.lambda_opt * g;
        let state = opt.state()?;
        let grid = with_workers(workers, || {
            wigner_of_state_mapped(&state, s.x_axis, s.p_axis, |x, p| (lambda * x, p / lambda))
        })??;
        extra.insert("lambda".into(), lambda.into());
        extra.insert("p_offset".into(), (-opt.p0 * g).into());
        grid
    } else {
        let state = state_file::load(Path::new(&s.state)).map_err(Failure::usage)?;
        with_workers(workers, || wigner_of_state(&state, s.x_axis, s.p_axis))??
    };
    write_file(&a.out, &grid.to_csv())?;
    let mut m = RunManifest::new("wigner", &s, None, vec![a.out.clone()], start);
    m.extra = extra;
    m.write(&a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_gate_run(a: GateArgs, config: Option<&Path>, workers: usize) -> Outcome {
    let start = Instant::now();
    let mut s: GateSettings = load_settings(config)?;
    let g = &mut s.gate;
    if let Some(v) = a.gamma {
        g.gamma = v;
    }
    if let Some(v) = a.t1 {
        g.t1 = v;
    }
    if let Some(v) = a.t2 {
        g.t2 = v;
    }
    if let Some(v) = a.squeeze_db {
        g.squeeze_db = v;
    }
    if let Some(v) = &a.ancilla {
        g.ancilla = AncillaSpec::parse(v)?;
    }
    if let Some(v) = a.shots {
        g.shots = v;
    }
    if let Some(v) = a.seed {
        g.seed = v;
    }
    if let Some(e) = a.engine {
        g.engine = match e {
            EngineArg::Grid => Engine::Grid,
            EngineArg::Fock => Engine::Fock,
        };
    }
    if a.input.is_some() {
        s.input = a.input;
    }
    let gate = s.gate.clone();
    gate.validate()?;
    if gate.ancilla.cutoff() > MAX_N {
        return Err(Failure::usage(anyhow!("ancilla cutoff must be at most {MAX_N}")));
    }
    let input = match &s.input {
        Some(p) => state_file::load(p).map_err(Failure::usage)?,
        None => StateVector::vacuum(gate.resolved_dims()[0])?,
    };

    let run = with_workers(workers, || GateSetup::new(&input, &gate).map(|setup| setup.run()))??;
    let summary = &run.summary;
    write_file(&a.out, &to_json(summary)?)?;
    let mut outputs = vec![a.out.clone()];
    if let Some(path) = &a.shots_csv {
        write_file(path, &run.shots_csv())?;
        outputs.push(path.clone());
    }
    say!(
        "mean fidelity {:.6} ± {:.6} over {} shots ({} failed)",
        summary.mean_fidelity, summary.std_error, summary.n_completed, summary.n_failed
    );
    say!("output Var(x) {:.6}  Var(p) {:.6}", summary.output.var_x, summary.output.var_p);
    RunManifest::new("gate run", &s, Some(gate.seed), outputs, start).write(&a.out)?;

    if summary.n_completed == 0 || summary.failure_rate() > MAX_FAILURE_RATE {
        if let Some(f) = summary.failures.first() {
            eprintln!("first failure (shot {}): {}", f.index, f.message);
        }
        return Err(Failure::numerical(anyhow!(
            "{} of {} shots failed (limit {:.0}%)",
            summary.n_failed,
            summary.n_shots,
            MAX_FAILURE_RATE * 100.0
        )));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(a: ValidateArgs, config: Option<&Path>, workers: usize) -> Outcome {
    let start = Instant::now();
    let mut s: ValidateSettings = load_settings(config)?;
    if let Some(v) = a.suite {
        s.suite = match v {
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Sampler => Suite::Sampler,
            SuiteArg::All => Suite::All,
        };
    }
    if let Some(v) = a.seed {
        s.seed = v;
    }
    let report = with_workers(workers, || run_suite(s.suite, s.seed))??;
    write_file(&a.out, &to_json(&report)?)?;
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let rel = match c.kind {
            cubist::validation::CheckKind::Residual => "<",
            cubist::validation::CheckKind::PValue => ">",
        };
        say!("{verdict}  {}: {:.3e} {rel} {:.0e}", c.name, c.value, c.threshold);
    }
    RunManifest::new("validate", &s, Some(s.seed), vec![a.out.clone()], start).write(&a.out)?;
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `min,max`, got `{s}`"));
    }
    let a: f64 = parts[0].parse().map_err(|e| format!("{}: {e}", parts[0]))?;
    let b: f64 = parts[1].parse().map_err(|e| format!("{}: {e}", parts[1]))?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(format!("range needs finite min < max, got `{s}`"));
    }
    Ok((a, b))
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t}: {e}"));
    let (a, b) = match s.split_once(['x', 'X']) {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let k = parse(s)?;
            (k, k)
        }
    };
    if a < 2 || b < 2 {
        return Err("resolution needs at least 2 cells per axis".into());
    }
    Ok((a, b))
}

fn parse_axes(s: &str) -> Result<(Axis, Axis), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let axis = |p: &[&str]| -> Result<Axis, String> {
        let min: f64 = p[0].parse().map_err(|e| format!("{}: {e}", p[0]))?;
        let max: f64 = p[1].parse().map_err(|e| format!("{}: {e}", p[1]))?;
        let count: usize = p[2].parse().map_err(|e| format!("{}: {e}", p[2]))?;
        Axis::new(min, max, count).map_err(|e| e.to_string())
    };
    match parts.len() {
        3 => {
            let a = axis(&parts)?;
            Ok((a, a))
        }
        6 => Ok((axis(&parts[..3])?, axis(&parts[3..])?)),
        _ => Err(format!("expected `min,max,count` or six values, got `{s}`")),
    }
}
