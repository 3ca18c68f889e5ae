//! The `gms` command line front-end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::{self, BlockMetric, BlockRow, Stage, StageRow};
use crate::cosets::{canonical_form, rokhlin_invariants, same_double_coset, CanonicalLabel};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::measure::{RMeasure, StripGrid};
use crate::topology::{
    doubling_closure_demo, lp_norm, matrix_element, operator_apply, weak_not_strong_demo, write_rows_csv, DemoConfig,
    GmsMetricConfig, GridFunction, DEFAULT_GRID_N,
};
use crate::transform::{random_exchange_with, IntervalSet, PwMap};

#[derive(Debug, Parser)]
#[command(name = "gms", version, about = "Derivative distributions, double cosets and convergence runs for maps of [0,1]")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonical double-coset label of a map, plus its Rokhlin invariants.
    Canon {
        map: PathBuf,
        /// Label JSON destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV table of F₁, …, F_K and F.
        #[arg(long)]
        invariants: Option<PathBuf>,
        /// Sample points for the invariants table.
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Convex map with a prescribed derivative distribution.
    Section {
        measure: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence table of one of the approximating sequences.
    Converge(ConvergeArgs),
    /// Biinvariant functionals on random double-coset samples.
    QuotientCheck {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Isometry and matrix-element table for the operators T_{1/p+is}.
    OperatorCheck {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Split,
    Spread,
    Compose,
    Discretize,
    Oscillation,
    Doubling,
}

/// Settings shared by the experiment commands.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Dyadic depth of the coset metric.
    #[arg(long, default_value_t = 6)]
    pub depth: u32,
    /// Half-width of the imaginary range of the strip grid (step ½).
    #[arg(long, default_value_t = 5.0)]
    pub strip_n: f64,
    /// Midpoint cells for grid functions and quadrature.
    #[arg(long, default_value_t = DEFAULT_GRID_N)]
    pub grid_n: usize,
    /// Exponent p of L^p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Imaginary part s of the exponent 1/p + is.
    #[arg(long, default_value_t = 0.7)]
    pub s: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[arg(long, value_enum)]
    pub engine: Engine,
    /// `uniform` or a measure JSON file.
    #[arg(long, default_value = "uniform")]
    pub nu: String,
    /// Map JSON for the discretize engine (ψ_U when absent).
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Target label JSON for the compose engine (½ν, ½ν; 0 when absent).
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub n_max: u32,
    #[arg(long, default_value_t = 64)]
    pub j_max: usize,
    #[arg(long = "bins-N", default_value_t = 8)]
    pub bins_n: u32,
    /// Finest level of the block metric.
    #[arg(long, default_value_t = 12)]
    pub block_depth: u32,
    /// Emit one row per block instead of one row per stage.
    #[arg(long)]
    pub blocks: bool,
    #[command(flatten)]
    pub common: Common,
}

/// Failure of a command, with the file it concerns when there is one.
#[derive(Debug)]
pub struct CliError {
    pub error: Error,
    pub file: Option<PathBuf>,
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        CliError { error, file: None }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        self.error.exit_code()
    }

    pub fn to_json(&self) -> String {
        let report = ErrorReport {
            kind: self.error.kind(),
            message: self.error.to_string(),
            file: self.file.as_ref().map(|p| p.display().to_string()),
            exit_code: self.exit_code(),
        };
        serde_json::to_string(&report).expect("error report serializes")
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn in_file<T>(path: &Path, r: Result<T>) -> CliResult<T> {
    r.map_err(|error| CliError { error, file: Some(path.to_path_buf()) })
}

fn read(path: &Path) -> CliResult<String> {
    in_file(path, fs::read_to_string(path).map_err(Error::from))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => in_file(p, fs::write(p, bytes).map_err(Error::from)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| Error::from(e).into())
        }
    }
}

fn csv_bytes<T: Serialize>(config: &str, rows: &[T]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_rows_csv(&mut buf, config, rows)?;
    Ok(buf)
}

impl Common {
    fn metric(&self) -> Result<GmsMetricConfig> {
        GmsMetricConfig::new(self.depth, StripGrid::symmetric(self.strip_n, 0.5)?)
    }

    fn echo(&self) -> String {
        format!(
            "depth={} strip_n={} grid_n={} p={} s={} seed={}",
            self.depth,
            self.strip_n,
            self.grid_n,
            self.p.map_or("default".to_string(), |p| p.to_string()),
            self.s,
            self.seed
        )
    }
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Canon { map, out, invariants, samples } => cmd_canon(&map, out.as_deref(), invariants.as_deref(), samples),
        Command::Section { measure, out } => cmd_section(&measure, out.as_deref()),
        Command::Converge(args) => cmd_converge(&args),
        Command::QuotientCheck { samples, common } => cmd_quotient_check(samples, &common),
        Command::OperatorCheck { common } => cmd_operator_check(&common),
    }
}

fn cmd_canon(map: &Path, out: Option<&Path>, inv_out: Option<&Path>, samples: usize) -> CliResult<()> {
    let g = in_file(map, PwMap::from_json(&read(map)?))?;
    let label = in_file(map, canonical_form(&g))?;
    if let Some(p) = inv_out {
        let inv = in_file(map, rokhlin_invariants(&g))?;
        let mut buf = Vec::new();
        writeln!(buf, "# config: map={} samples={samples}", map.display()).map_err(Error::from)?;
        inv.write_csv(&mut buf, &inv.sample_points(samples))?;
        emit(Some(p), &buf)?;
    }
    let mut json = label.to_json();
    json.push('\n');
    emit(out, json.as_bytes())
}

fn cmd_section(measure: &Path, out: Option<&Path>) -> CliResult<()> {
    let nu = in_file(measure, RMeasure::from_json(&read(measure)?))?;
    let g = in_file(measure, PwMap::convex_section(&nu))?;
    let mut json = g.to_json();
    json.push('\n');
    emit(out, json.as_bytes())
}

fn load_nu(spec: &str) -> CliResult<RMeasure> {
    if spec == "uniform" {
        return Ok(fixtures::uniform_nu());
    }
    let path = Path::new(spec);
    in_file(path, RMeasure::from_json(&read(path)?))
}

fn stage_output(args: &ConvergeArgs, config: &str, stages: Vec<Stage>) -> CliResult<Vec<u8>> {
    if args.blocks {
        let grid = args.common.metric()?.grid;
        let mut rows: Vec<BlockRow> = Vec::new();
        for (_, map) in &stages {
            rows.extend(map.block_rows(&grid)?);
        }
        csv_bytes(config, &rows)
    } else {
        let rows: Vec<StageRow> = stages.into_iter().map(|(r, _)| r).collect();
        csv_bytes(config, &rows)
    }
}

fn cmd_converge(args: &ConvergeArgs) -> CliResult<()> {
    let c = &args.common;
    if args.n_max == 0 || args.j_max == 0 || args.bins_n == 0 {
        return Err(Error::invalid("run config", "sequence bounds must be at least 1").into());
    }
    let grid = StripGrid::symmetric(c.strip_n, 0.5)?;
    let block_metric = BlockMetric::new(args.block_depth, grid)?;
    let base = format!("engine={:?} nu={} n_max={} block_depth={} {}", args.engine, args.nu, args.n_max, args.block_depth, c.echo())
        .to_lowercase();
    let bytes = match args.engine {
        Engine::Split => {
            let nu = load_nu(&args.nu)?;
            let half = nu.scale(0.5);
            let levels: Vec<u32> = (1..=args.n_max).collect();
            stage_output(args, &base, approx::run_split(&nu, &half, &half, &levels, &block_metric)?)?
        }
        Engine::Spread => {
            let nu = load_nu(&args.nu)?;
            let levels: Vec<u32> = (1..=args.n_max).collect();
            stage_output(args, &base, approx::run_spread(&nu, &levels, &block_metric)?)?
        }
        Engine::Compose => {
            let nu = load_nu(&args.nu)?;
            let label = match &args.target {
                Some(p) => in_file(p, CanonicalLabel::from_json(&read(p)?))?,
                None => CanonicalLabel::new(vec![nu.scale(0.5), nu.scale(0.5)], RMeasure::zero())?,
            };
            let stages: Vec<u32> = (1..=args.n_max).collect();
            stage_output(args, &base, approx::run_compose(&nu, &label, &stages, &block_metric)?)?
        }
        Engine::Discretize => {
            let g = match &args.map {
                Some(p) => in_file(p, PwMap::from_json(&read(p)?))?,
                None => fixtures::psi_u(),
            };
            let config = format!("engine=discretize bins_n={} {}", args.bins_n, c.echo());
            csv_bytes(&config, &approx::discretize_sequence(&g, args.bins_n, &c.metric()?)?)?
        }
        Engine::Oscillation => {
            let js: Vec<usize> = std::iter::successors(Some(1usize), |j| j.checked_mul(2)).take_while(|&j| j <= args.j_max).collect();
            let cfg = DemoConfig { metric: c.metric()?, grid_n: c.grid_n, ..DemoConfig::default() };
            let config = format!("engine=oscillation j_max={} {}", args.j_max, c.echo());
            csv_bytes(&config, &weak_not_strong_demo(&js, &cfg)?)?
        }
        Engine::Doubling => {
            let f = GridFunction::from_fn(c.grid_n, |x| x * (1.0 - x))?;
            let config = format!("engine=doubling n_max={} f=x(1-x) {}", args.n_max, c.echo());
            csv_bytes(&config, &doubling_closure_demo(args.n_max, &f, c.p.unwrap_or(2.0))?)?
        }
    };
    emit(c.out.as_deref(), &bytes)
}

/// `Φ(g)`: characteristic function of the derivative law on the grid.
fn functional(g: &PwMap, nodes: &[Complex64]) -> Result<Vec<Complex64>> {
    g.derivative_law().char_fn_many(nodes)
}

fn sup_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Serialize)]
struct FixtureCheck {
    map: &'static str,
    samples: usize,
    max_functional_deviation: f64,
    labels_equal: bool,
}

#[derive(Debug, Serialize)]
struct PairCheck {
    a: &'static str,
    b: &'static str,
    functional_distance: f64,
    same_double_coset: bool,
    verdict: &'static str,
}

#[derive(Debug, Serialize)]
struct QuotientReport {
    config: String,
    fixtures: Vec<FixtureCheck>,
    pairs: Vec<PairCheck>,
}

fn cmd_quotient_check(samples: usize, c: &Common) -> CliResult<()> {
    let nodes = c.metric()?.grid.nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let named: [(&'static str, PwMap); 3] = [("g0", fixtures::g0()), ("psi_u", fixtures::psi_u()), ("h2", fixtures::h2())];
    let mut checks = Vec::new();
    for (name, g) in &named {
        let phi = functional(g, &nodes)?;
        let label = canonical_form(g)?;
        let (mut worst, mut equal) = (0.0f64, true);
        for _ in 0..samples {
            let (nu_pieces, nv_pieces) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
            let u = random_exchange_with(&mut rng, nu_pieces)?;
            let v = random_exchange_with(&mut rng, nv_pieces)?;
            let h = PwMap::compose(&u, &PwMap::compose(g, &v)?)?;
            worst = worst.max(sup_gap(&functional(&h, &nodes)?, &phi));
            equal &= canonical_form(&h)? == label;
        }
        checks.push(FixtureCheck { map: name, samples, max_functional_deviation: worst, labels_equal: equal });
    }
    let mut pairs = Vec::new();
    for (a, ga, b, gb) in [("psi_u", fixtures::psi_u(), "h2", fixtures::h2()), ("g0", fixtures::g0(), "identity", PwMap::identity())] {
        let d = sup_gap(&functional(&ga, &nodes)?, &functional(&gb, &nodes)?);
        let same = same_double_coset(&ga, &gb)?;
        let verdict = match (d <= 1e-10, same) {
            (true, false) => "quotient identifies distinct cosets",
            (false, false) => "functionals separate the cosets",
            (true, true) => "same coset",
            (false, true) => "inconsistent",
        };
        pairs.push(PairCheck { a, b, functional_distance: d, same_double_coset: same, verdict });
    }
    let report = QuotientReport { config: format!("samples={samples} {}", c.echo()), fixtures: checks, pairs };
    let mut json = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    json.push('\n');
    emit(c.out.as_deref(), json.as_bytes())
}

#[derive(Debug, Serialize)]
struct OperatorRow {
    map: &'static str,
    p: f64,
    s: f64,
    norm_f: f64,
    norm_tf: f64,
    isometry_defect: f64,
    matrix_element_discrepancy: f64,
}

/// Smooth random test function: a few random cosine modes plus a constant.
fn random_test_function(rng: &mut ChaCha8Rng, n: usize) -> Result<GridFunction> {
    let modes: Vec<(f64, f64, f64)> =
        (1..=4).map(|k| (k as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))).collect();
    let c = rng.gen_range(-1.0..1.0);
    GridFunction::from_fn(n, |x| {
        c + modes.iter().map(|&(k, a, ph)| a * (std::f64::consts::TAU * k * x + ph).cos()).sum::<f64>()
    })
}

fn cmd_operator_check(c: &Common) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let f = random_test_function(&mut rng, c.grid_n)?;
    let ps: Vec<f64> = c.p.map_or(vec![1.0, 2.0, 3.0], |p| vec![p]);
    let ss = if c.s == 0.0 { vec![0.0] } else { vec![0.0, c.s] };
    let pairs = IntervalSet::dyadic_partition(2);
    let maps: [(&'static str, PwMap); 2] = [("g0", fixtures::g0()), ("psi_u", fixtures::psi_u())];
    let mut rows = Vec::new();
    for (name, g) in &maps {
        for &p in &ps {
            for &s in &ss {
                let tf = operator_apply(g, &f, p, s)?;
                let (nf, ntf) = (lp_norm(&f, p), lp_norm(&tf, p));
                let mut worst: f64 = 0.0;
                for a in &pairs {
                    for b in &pairs {
                        worst = worst.max(matrix_element(g, a, b, p, s, c.grid_n)?.discrepancy());
                    }
                }
                rows.push(OperatorRow {
                    map: name,
                    p,
                    s,
                    norm_f: nf,
                    norm_tf: ntf,
                    isometry_defect: (ntf - nf).abs(),
                    matrix_element_discrepancy: worst,
                });
            }
        }
    }
    let bytes = csv_bytes(&c.echo(), &rows)?;
    emit(c.out.as_deref(), &bytes)
}
