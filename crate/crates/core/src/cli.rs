//! The `gkpb` command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::breeding::{run_protocol, yield_estimate, Policy, ProtocolConfig};
use crate::gaussian::WaveFunction;
use crate::metrics::{fidelity, gkp_target, no_error_probability, zeta_to_db, GkpTarget, Quadrature};
use crate::optics::{make_cat, outcome_density, OutcomeSampler};
use crate::oracle::{run_suite, Suite};

pub const SEED_ENV: &str = "GKPB_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
    #[error("oracle suite {0} failed")]
    OracleFailed(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(crate::Error::Rejected { .. }) => "rejected",
            CliError::Core(_) => "computation",
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "config",
            CliError::Usage(_) => "usage",
            CliError::OracleFailed(_) => "oracle",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Uniform grid `min, max, n` with `n ≥ 2` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let step = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n).map(move |j| if j + 1 == self.n { self.max } else { self.min + j as f64 * step })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected min,max,n but got {s:?}"));
        }
        let min: f64 = parts[0].parse().map_err(|e| format!("bad grid min {:?}: {e}", parts[0]))?;
        let max: f64 = parts[1].parse().map_err(|e| format!("bad grid max {:?}: {e}", parts[1]))?;
        let n: usize = parts[2].parse().map_err(|e| format!("bad grid size {:?}: {e}", parts[2]))?;
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(format!("grid needs finite min < max, got {min}, {max}"));
        }
        if n < 2 {
            return Err(format!("grid needs at least 2 points, got {n}"));
        }
        Ok(Self { min, max, n })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    #[value(alias = "postselect-exact-zero")]
    ExactZero,
    Window,
    Sample,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::ExactZero => Policy::ExactZero,
            PolicyArg::Window => Policy::Window,
            PolicyArg::Sample => Policy::Sample,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gkpb", version, about = "Gaussian-superposition simulator for breeding GKP grid states from squeezed cats")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit the wave function of an approximate GKP state on a grid.
    Gkp(GkpArgs),
    /// Run the breed tree and write state, records and summary.
    Breed(BreedArgs),
    /// Emit the homodyne outcome density of one breeding round.
    Density(DensityArgs),
    /// Cross-check closed forms against quadrature.
    Oracle(OracleArgs),
    /// Monte-Carlo yield of the window policy.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct GkpArgs {
    #[arg(long, default_value_t = 0.15)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.15)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub logical: u8,
    #[arg(long, default_value = "-8,8,1601", allow_hyphen_values = true)]
    pub grid: Grid,
    /// Truncation of the peak sum; defaults to the envelope-derived value.
    #[arg(long)]
    pub s_max: Option<u32>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BreedArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyArg::ExactZero)]
    pub policy: PolicyArg,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "-8,8,1601", allow_hyphen_values = true)]
    pub grid: Grid,
    #[arg(long, default_value_t = 0.15)]
    pub target_delta: f64,
    #[arg(long, default_value_t = 0.15)]
    pub target_kappa: f64,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "-50,50,4001", allow_hyphen_values = true)]
    pub r_grid: Grid,
    /// Breeding round whose inputs are measured; 1 is cat + cat.
    #[arg(long, default_value_t = 1)]
    pub level: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_parser = parse_suite)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write this many cat + cat outcome draws to `draws.csv`.
    #[arg(long)]
    pub draws: Option<usize>,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// Provenance written next to directory outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub version: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

/// 17 significant digits, locale independent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with columns `x,re_psi,im_psi,abs2_psi`.
pub fn wavefunction_csv(psi: &WaveFunction, grid: &Grid) -> String {
    let mut out = String::from("x,re_psi,im_psi,abs2_psi\n");
    for x in grid.points() {
        let v = psi.evaluate(x);
        let _ = writeln!(out, "{},{},{},{}", fmt_f64(x), fmt_f64(v.re), fmt_f64(v.im), fmt_f64(v.norm_sqr()));
    }
    out
}

/// CSV with columns `r,density` for normalized inputs.
pub fn density_csv(psi1: &WaveFunction, psi2: &WaveFunction, grid: &Grid) -> crate::Result<String> {
    let a = psi1.normalize()?;
    let b = psi2.normalize()?;
    let mut out = String::from("r,density\n");
    for r in grid.points() {
        let _ = writeln!(out, "{},{}", fmt_f64(r), fmt_f64(outcome_density(&a, &b, r)?));
    }
    Ok(out)
}

/// Read a JSON config and apply the seed override from `GKPB_SEED`.
pub fn load_config(path: &Path) -> CliResult<ProtocolConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let mut cfg: ProtocolConfig =
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.into(), source })?;
    if let Ok(seed) = std::env::var(SEED_ENV) {
        cfg.seed = seed
            .trim()
            .parse()
            .map_err(|e| CliError::Usage(format!("{SEED_ENV}={seed:?} is not a 64-bit unsigned integer: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.into(), source })
}

fn emit(out: Option<&Path>, contents: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.into(), source })?;
        Ok(Self { root: root.into(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        write_file(&self.root.join(name), contents)?;
        self.written.push(name.into());
        Ok(())
    }

    fn finish(mut self, command: &str, cfg: &ProtocolConfig, started: Instant) -> CliResult<()> {
        self.written.push("manifest.json".into());
        let manifest = RunManifest {
            command: command.into(),
            config: serde_json::to_value(cfg).expect("serializable"),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: cfg.seed,
            outputs: self.written.clone(),
            duration_seconds: started.elapsed().as_secs_f64(),
        };
        write_file(&self.root.join("manifest.json"), &to_json(&manifest))
    }
}

fn cmd_gkp(args: &GkpArgs) -> CliResult<()> {
    let target = match args.s_max {
        Some(s) => GkpTarget::with_s_max(args.delta, args.kappa, args.logical, s)?,
        None => GkpTarget::new(args.delta, args.kappa, args.logical)?,
    };
    let psi = gkp_target(&target)?;
    emit(args.out.as_deref(), &wavefunction_csv(&psi, &args.grid))
}

#[derive(Serialize)]
struct BreedSummary {
    policy: Policy,
    m_target: u32,
    zeta: f64,
    zeta_db: f64,
    cat_alpha: f64,
    cats_consumed: u64,
    min_cats: u64,
    measurement_events: usize,
    terms: usize,
    target_delta: f64,
    target_kappa: f64,
    fidelity_to_target: f64,
    no_error_x: f64,
    no_error_p: f64,
}

fn cmd_breed(args: &BreedArgs) -> CliResult<()> {
    let started = Instant::now();
    let cfg = load_config(&args.config)?;
    let policy: Policy = args.policy.into();
    let mut dir = OutDir::create(&args.out)?;
    let run = match run_protocol(&cfg, policy) {
        Ok(run) => run,
        Err(e) => {
            let report = json!({ "error": "rejected", "message": e.to_string() });
            dir.write("error.json", &to_json(&report))?;
            dir.finish("breed", &cfg, started)?;
            return Err(e.into());
        }
    };
    let state = run.state.normalize()?;
    let target = gkp_target(&GkpTarget::new(args.target_delta, args.target_kappa, 0)?)?;
    let summary = BreedSummary {
        policy,
        m_target: cfg.m_target,
        zeta: cfg.zeta,
        zeta_db: zeta_to_db(cfg.zeta),
        cat_alpha: run.cat.alpha,
        cats_consumed: run.cats_consumed,
        min_cats: cfg.cat_budget(),
        measurement_events: run.records.len(),
        terms: state.len(),
        target_delta: args.target_delta,
        target_kappa: args.target_kappa,
        fidelity_to_target: fidelity(&state, &target)?,
        no_error_x: no_error_probability(&state, Quadrature::X)?,
        no_error_p: no_error_probability(&state, Quadrature::P)?,
    };
    let mut records = String::new();
    for rec in &run.records {
        records.push_str(&serde_json::to_string(rec).expect("serializable"));
        records.push('\n');
    }
    dir.write("state.csv", &wavefunction_csv(&state, &args.grid))?;
    dir.write("records.jsonl", &records)?;
    dir.write("terms.json", &to_json(&state.to_record()))?;
    dir.write("summary.json", &to_json(&summary))?;
    dir.finish("breed", &cfg, started)
}

/// The two inputs measured at breeding round `level` of the exact-zero tree.
pub fn round_inputs(cfg: &ProtocolConfig, level: u32) -> crate::Result<WaveFunction> {
    if level < 1 || level > cfg.m_target {
        return Err(crate::Error::InvalidParameter(format!("level must be in 1..={}, got {level}", cfg.m_target)));
    }
    let cat = make_cat(cfg.cat_spec()?);
    if level == 1 {
        return Ok(cat);
    }
    // the exact-zero subtree of depth level − 1 over the same cats
    let sub = ProtocolConfig { m_target: level - 1, ..cfg.clone() };
    let spacing_scale = std::f64::consts::SQRT_2.powi((cfg.m_target - (level - 1)) as i32);
    let sub = ProtocolConfig { base_spacing: cfg.base_spacing * spacing_scale, ..sub };
    Ok(run_protocol(&sub, Policy::ExactZero)?.state)
}

fn cmd_density(args: &DensityArgs) -> CliResult<()> {
    let cfg = load_config(&args.config)?;
    let input = round_inputs(&cfg, args.level)?;
    emit(args.out.as_deref(), &density_csv(&input, &input, &args.r_grid)?)
}

fn cmd_oracle(args: &OracleArgs) -> CliResult<()> {
    let report = run_suite(args.suite, args.seed)?;
    emit(args.out.as_deref(), &to_json(&report))?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::OracleFailed(args.suite.name().into()))
    }
}

fn cmd_sample(args: &SampleArgs) -> CliResult<()> {
    let started = Instant::now();
    let cfg = load_config(&args.config)?;
    let mut dir = OutDir::create(&args.out)?;
    let stats = yield_estimate(&cfg, args.trials)?;
    dir.write("yield.json", &to_json(&stats))?;
    if let Some(n) = args.draws {
        let cat = make_cat(cfg.cat_spec()?);
        let sampler = OutcomeSampler::new(&cat, &cat)?;
        let norm = cat.normalize()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut csv = String::from("index,r,density\n");
        for j in 0..n {
            let r = sampler.sample(&mut rng);
            let _ = writeln!(csv, "{j},{},{}", fmt_f64(r), fmt_f64(outcome_density(&norm, &norm, r)?));
        }
        dir.write("draws.csv", &csv)?;
    }
    dir.finish("sample", &cfg, started)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Gkp(a) => cmd_gkp(a),
        Command::Breed(a) => cmd_breed(a),
        Command::Density(a) => cmd_density(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Sample(a) => cmd_sample(a),
    }
}

/// Parse arguments, run, and report failures as JSON on standard error.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(e.exit_code())
        }
    }
}
