use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use bohrlab::dirichlet::{
    bohr_cahen_abscissa, bohr_lift, bohr_push, default_hp_quadrature, monomial_abs_sum, vertical_average_norm,
    AbscissaKind, CoefficientRule, DirichletPoly,
};
use bohrlab::inequalities::{run_check, CheckOptions, Constants, InequalityReport, TrialConfig, CHECK_NAMES};
use bohrlab::multiindex::PrimeTable;
use bohrlab::polys::VectorPoly;
use bohrlab::spaces::{estimate_cotype_constant, estimate_kahane_constant, Exponent, SpaceDescriptor};
use bohrlab::torus::Quadrature;
use bohrlab::C64;

#[derive(Parser)]
#[command(name = "bohrlab", version, about = "Bohr transform, H_p norms and cotype inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Dirichlet polynomial to polynomial on T^N.
    Lift(InArg),
    /// Polynomial on T^N to Dirichlet polynomial.
    Push(InArg),
    /// H_p norm of a Dirichlet polynomial (or L_p norm of a polynomial).
    Norm(NormArgs),
    /// Vertical line average of |D(it)|^p on [-T, T].
    Vnorm(VnormArgs),
    /// Bohr–Cahen abscissa estimate.
    Abscissa(AbscissaArgs),
    /// Σ ‖c_α‖ |z^α| over |α| ≤ m.
    MonomialSum(MonomialArgs),
    /// Empirical cotype or Kahane constant.
    Estimate(EstimateArgs),
    /// Run a verification suite (or `all`).
    Verify(VerifyArgs),
    /// Summarize line-delimited reports.
    Report(InArg),
}

#[derive(Args)]
struct InArg {
    /// Input JSON file.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct QuadArgs {
    /// Fixed roots-of-unity grid with this many points per axis.
    #[arg(long, conflicts_with = "samples")]
    grid: Option<usize>,
    /// Monte Carlo with this many samples.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl QuadArgs {
    fn quadrature(&self) -> Option<Quadrature> {
        match (self.grid, self.samples) {
            (Some(points_per_axis), _) => Some(Quadrature::Grid { points_per_axis }),
            (None, Some(samples)) => Some(Quadrature::MonteCarlo { samples, seed: self.seed }),
            (None, None) => None,
        }
    }
}

#[derive(Args)]
struct NormArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Args)]
struct VnormArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Half width of the window.
    #[arg(long = "T", default_value_t = 100.0)]
    half_width: f64,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    SigmaA,
    SigmaC,
}

#[derive(Args)]
struct AbscissaArgs {
    /// Coefficient rule as JSON, e.g. '{"kind":"power_decay","theta":1}'.
    #[arg(long, conflicts_with = "input")]
    rule: Option<String>,
    /// File holding the coefficient rule.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindArg::SigmaA)]
    kind: KindArg,
    #[arg(long = "n-max", default_value_t = 1_000_000)]
    n_max: u64,
}

#[derive(Args)]
struct MonomialArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Leading entries of z, as re or re:im separated by commas.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Vec<String>,
    #[arg(long, default_value_t = 10)]
    m: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstantArg {
    Cotype,
    Kahane,
}

#[derive(Args)]
struct SpaceArgs {
    /// Dimension d of X = ℓ_r^d.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Exponent r of X = ℓ_r^d ("inf" allowed); defaults to the cotype q.
    #[arg(long = "space-q")]
    space_q: Option<String>,
}

impl SpaceArgs {
    fn space(&self, q: f64) -> Result<SpaceDescriptor, String> {
        let exponent = match self.space_q.as_deref() {
            None => Exponent::Finite(q),
            Some("inf") => Exponent::Infinite,
            Some(s) => Exponent::Finite(s.parse().map_err(|_| format!("--space-q: cannot parse {s:?}"))?),
        };
        SpaceDescriptor::new(self.dim, exponent).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, value_enum, default_value_t = ConstantArg::Cotype)]
    kind: ConstantArg,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Vectors per family.
    #[arg(long = "N", default_value_t = 4)]
    vars: usize,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    space: SpaceArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Check name or `all`.
    check: String,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long = "N", default_value_t = 3)]
    vars: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1.05)]
    safety: f64,
    /// Exponent of the projection check.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Cotype constant; estimated when absent.
    #[arg(long = "cotype-constant", requires = "kahane_constant")]
    cotype_constant: Option<f64>,
    /// Kahane constant; estimated when absent.
    #[arg(long = "kahane-constant", requires = "cotype_constant")]
    kahane_constant: Option<f64>,
    #[arg(long = "estimation-trials", default_value_t = 2000)]
    estimation_trials: usize,
    /// Stop `verify all` after this many seconds (between checks).
    #[arg(long)]
    budget: Option<f64>,
    /// Keep per-trial records.
    #[arg(long)]
    records: bool,
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, conflicts_with = "samples")]
    grid: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

enum Failure {
    Usage(String),
    Violated,
}

impl From<bohrlab::Error> for Failure {
    fn from(e: bohrlab::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

type Outcome = Result<(), Failure>;

struct Sink {
    out: Box<dyn Write>,
    format: Format,
}

impl Sink {
    fn new(path: Option<&Path>, format: Format) -> Result<Self, Failure> {
        let out: Box<dyn Write> = match path {
            Some(p) => {
                Box::new(io::BufWriter::new(fs::File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?))
            }
            None => Box::new(io::stdout().lock()),
        };
        Ok(Self { out, format })
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Outcome {
        let text = serde_json::to_string(value).map_err(|e| usage(e.to_string()))?;
        writeln!(self.out, "{text}").and_then(|_| self.out.flush()).map_err(|e| usage(e.to_string()))
    }

    fn text(&mut self, text: &str) -> Outcome {
        write!(self.out, "{text}").and_then(|_| self.out.flush()).map_err(|e| usage(e.to_string()))
    }

    /// Flat object as `key  value` lines in table mode.
    fn value(&mut self, value: &Value) -> Outcome {
        match (self.format, value) {
            (Format::Table, Value::Object(map)) => {
                let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
                let mut s = String::new();
                for (k, v) in map {
                    s.push_str(&format!("{k:width$}  {v}\n"));
                }
                self.text(&s)
            }
            _ => self.json(value),
        }
    }

    fn report(&mut self, r: &InequalityReport) -> Outcome {
        match self.format {
            Format::Json => self.json(r),
            Format::Table => self.text(&format!("{}\n", table_row(r))),
        }
    }
}

fn table_row(r: &InequalityReport) -> String {
    format!(
        "{:<26} {:>7} {:>14.6e} {:>14.6e}  {}",
        r.name,
        r.trials,
        r.worst_ratio,
        r.raw_worst_ratio,
        if r.pass { "pass" } else { "FAIL" }
    )
}

const TABLE_HEADER: &str = "check                       trials    worst_ratio      raw_ratio  result\n";

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Prime table, read from (or written to) `$BOHRLAB_CACHE` when set.
fn prime_table() -> Result<PrimeTable, Failure> {
    let Some(path) = std::env::var_os("BOHRLAB_CACHE") else {
        return Ok(PrimeTable::default());
    };
    let path = PathBuf::from(path);
    if path.exists() {
        let primes: Vec<u64> = parse(&path)?;
        return PrimeTable::from_primes(primes).map_err(|e| usage(format!("{}: {e}", path.display())));
    }
    let table = PrimeTable::default();
    let text = serde_json::to_string(table.as_slice()).map_err(|e| usage(e.to_string()))?;
    // a failed cache write only costs a sieve next time
    let _ = fs::write(&path, text);
    Ok(table)
}

enum Series {
    Dirichlet(DirichletPoly),
    Poly(VectorPoly),
}

fn read_series(path: &Path) -> Result<Series, Failure> {
    let value: Value = serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let is_poly = value.get("N").is_some();
    let parsed = if is_poly {
        serde_json::from_value(value).map(Series::Poly)
    } else {
        serde_json::from_value(value).map(Series::Dirichlet)
    };
    parsed.map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_complex(s: &str) -> Result<C64, Failure> {
    let bad = || usage(format!("cannot parse {s:?} as re or re:im"));
    match s.split_once(':') {
        Some((re, im)) => Ok(C64::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?)),
        None => Ok(C64::new(s.trim().parse().map_err(|_| bad())?, 0.0)),
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().map_err(|e| usage(e.to_string()))?;
    }
    let mut sink = Sink::new(cli.out.as_deref(), cli.format)?;
    match cli.command {
        Command::Lift(a) => {
            let d: DirichletPoly = parse(&a.input)?;
            sink.json(&bohr_lift(&d, &prime_table()?)?)
        }
        Command::Push(a) => {
            let p: VectorPoly = parse(&a.input)?;
            sink.json(&bohr_push(&p, &prime_table()?)?)
        }
        Command::Norm(a) => {
            let table = prime_table()?;
            let poly = match read_series(&a.input)? {
                Series::Dirichlet(d) => bohr_lift(&d, &table)?,
                Series::Poly(p) => p,
            };
            let quad = a.quad.quadrature().unwrap_or_else(|| poly.default_quadrature(a.p));
            let integral = poly.lp_integral(a.p, &quad)?;
            sink.value(&json!({
                "p": a.p,
                "value": integral.value.max(0.0).powf(1.0 / a.p),
                "integral": integral,
                "quadrature": quad,
            }))
        }
        Command::Vnorm(a) => {
            let d: DirichletPoly = parse(&a.input)?;
            let value = vertical_average_norm(&d, a.p, a.half_width, a.samples)?;
            let table = prime_table()?;
            let hp = bohr_lift(&d, &table)?.lp_norm(a.p, &default_hp_quadrature(&d, a.p, &table)?)?;
            sink.value(&json!({ "p": a.p, "T": a.half_width, "samples": a.samples, "value": value, "hp_norm": hp }))
        }
        Command::Abscissa(a) => {
            let rule: CoefficientRule = match (&a.rule, &a.input) {
                (Some(text), _) => serde_json::from_str(text).map_err(|e| usage(format!("--rule: {e}")))?,
                (None, Some(path)) => parse(path)?,
                (None, None) => return Err(usage("abscissa needs --rule or --in")),
            };
            let kind = match a.kind {
                KindArg::SigmaA => AbscissaKind::SigmaA,
                KindArg::SigmaC => AbscissaKind::SigmaC,
            };
            let est = bohr_cahen_abscissa(&rule, kind, a.n_max)?;
            sink.value(&serde_json::to_value(&est).map_err(|e| usage(e.to_string()))?)
        }
        Command::MonomialSum(a) => {
            let table = prime_table()?;
            let poly = match read_series(&a.input)? {
                Series::Dirichlet(d) => bohr_lift(&d, &table)?,
                Series::Poly(p) => p,
            };
            let z = a.z.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>, _>>()?;
            let value = monomial_abs_sum(&poly, &z, a.m)?;
            sink.value(&json!({ "m": a.m, "value": value }))
        }
        Command::Estimate(a) => {
            let space = a.space.space(a.q).map_err(usage)?;
            let est = match a.kind {
                ConstantArg::Cotype => estimate_cotype_constant(&space, a.q, a.vars, a.trials, a.seed)?,
                ConstantArg::Kahane => estimate_kahane_constant(&space, a.vars, a.trials, a.seed)?,
            };
            sink.value(&serde_json::to_value(&est).map_err(|e| usage(e.to_string()))?)
        }
        Command::Verify(a) => verify(a, &mut sink),
        Command::Report(a) => {
            let text = read(&a.input)?;
            let mut reports = Vec::new();
            for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let r: InequalityReport =
                    serde_json::from_str(line).map_err(|e| usage(format!("line {}: {e}", k + 1)))?;
                reports.push(r);
            }
            summarize(&reports, &mut sink)
        }
    }
}

fn summarize(reports: &[InequalityReport], sink: &mut Sink) -> Outcome {
    match sink.format {
        Format::Table => {
            let mut s = TABLE_HEADER.to_string();
            for r in reports {
                s.push_str(&table_row(r));
                s.push('\n');
            }
            sink.text(&s)?;
        }
        Format::Json => {
            let rows: Vec<Value> = reports
                .iter()
                .map(|r| json!({ "name": r.name, "trials": r.trials, "worst_ratio": r.worst_ratio, "pass": r.pass }))
                .collect();
            sink.json(&json!({ "reports": rows, "pass": reports.iter().all(|r| r.pass) }))?;
        }
    }
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Violated)
    }
}

fn verify(a: VerifyArgs, sink: &mut Sink) -> Outcome {
    let table = prime_table()?;
    let space = a.space.space(a.q).map_err(usage)?;
    let quadrature = match (a.grid, a.samples) {
        (Some(points_per_axis), _) => Some(Quadrature::Grid { points_per_axis }),
        (None, Some(samples)) => Some(Quadrature::MonteCarlo { samples, seed: a.seed }),
        (None, None) => None,
    };
    let constants = match (a.cotype_constant, a.kahane_constant) {
        (Some(c), Some(k)) => Some(Constants::supplied(c, k)),
        _ => None,
    };
    let opts = CheckOptions { constants, estimation_trials: a.estimation_trials, eps: a.eps, p: a.p };
    let config = |name: &str| {
        let mut cfg = if a.check == "all" {
            let mut cfg = bohrlab::inequalities::default_config(name, a.seed, a.trials);
            cfg.space = space;
            cfg.q = a.q;
            cfg
        } else {
            TrialConfig::new(space, a.q, a.m, a.vars).with_trials(a.trials).with_seed(a.seed)
        };
        cfg.safety_factor = a.safety;
        cfg.quadrature = quadrature;
        cfg.keep_records = a.records;
        cfg
    };
    let names: Vec<&str> = if a.check == "all" {
        CHECK_NAMES.to_vec()
    } else if CHECK_NAMES.contains(&a.check.as_str()) {
        vec![a.check.as_str()]
    } else {
        return Err(usage(format!("unknown check {:?}; expected `all` or one of {}", a.check, CHECK_NAMES.join(", "))));
    };
    if sink.format == Format::Table {
        sink.text(TABLE_HEADER)?;
    }
    let start = Instant::now();
    let mut all_pass = true;
    for name in names {
        if a.budget.is_some_and(|b| start.elapsed().as_secs_f64() > b) {
            break;
        }
        let report = run_check(name, &config(name), &opts, &table)?;
        all_pass &= report.pass;
        sink.report(&report)?;
    }
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Violated)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violated) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
