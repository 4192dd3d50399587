//! `dme` — command-line driver for the distributed mean estimation toolkit.
//!
//! Subcommands: `gen` (synthetic datasets), `table1` (uniform-probability
//! cost/error summary), `curve` (cost/error trade-off curves), `optimize`
//! (budgeted probability/center optimization), and `simulate` (full
//! encode/wire/decode rounds). Results are CSV for offline plotting; human
//! commentary goes to stderr. Exit codes: 0 success, 1 validation error,
//! 2 I/O error.

use std::fs::File;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dme_core::analysis::{
    binary_params, mse_bounds, mse_closed_variable, mse_empirical, spread_stats,
};
use dme_core::bits::{ceil_log2, BitSizes};
use dme_core::codec::{EncoderParams, EncoderSpec};
use dme_core::data::{gen_synthetic, Dataset, Distribution};
use dme_core::optimizer::{alternating_minimize, optimal_probs_given_centers, BudgetProblem};
use dme_core::sim::{run_trials, RoundConfig, NODE_ID_BITS};
use dme_core::wire::{FormatKind, WireFormat};
use dme_core::Error;

#[derive(Parser)]
#[command(name = "dme", version, about = "Distributed mean estimation under a communication budget")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV (one row per node).
    Gen(GenArgs),
    /// Cost and error of the uniform-probability encoder at the four
    /// benchmark probabilities 1, 1/log2 d, 1/r, 1/d.
    Table1(Table1Args),
    /// Cost/error trade-off points across a list of budgets.
    Curve(CurveArgs),
    /// Optimize keep-probabilities (and optionally centers) for a budget.
    Optimize(OptimizeArgs),
    /// Simulate full star-topology rounds and report per-trial bits/error.
    Simulate(SimulateArgs),
}

fn parse_dist(s: &str) -> Result<Distribution, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<FormatKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct GenArgs {
    /// Source distribution: gaussian, laplace, or chi_squared.
    #[arg(long, value_parser = parse_dist)]
    dist: Distribution,
    /// Number of nodes (rows).
    #[arg(long)]
    n: usize,
    /// Vector dimension (columns).
    #[arg(long)]
    d: usize,
    /// Master seed; the same seed reproduces the file byte for byte.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SizeArgs {
    /// Wire float width in bits (16, 32, or 64).
    #[arg(long, default_value_t = 16)]
    r: u32,
    /// Center width in bits; defaults to `r`, 0 drops the center field.
    #[arg(long)]
    rbar: Option<u32>,
}

impl SizeArgs {
    fn sizes(&self) -> Result<BitSizes, Error> {
        BitSizes::new(self.r, self.rbar.unwrap_or(self.r))
    }
}

#[derive(Args)]
struct Table1Args {
    /// Input dataset CSV.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    sizes: SizeArgs,
    /// Monte Carlo trials behind the empirical column.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Seed for the Monte Carlo column.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Strategy {
    UniformPRowMeanCenters,
    OptimalPRowMeanCenters,
    OptimalPOptimalCenters,
    BinaryQuantizationPoint,
}

impl Strategy {
    fn name(self) -> &'static str {
        match self {
            Strategy::UniformPRowMeanCenters => "uniform_p_row_mean_centers",
            Strategy::OptimalPRowMeanCenters => "optimal_p_row_mean_centers",
            Strategy::OptimalPOptimalCenters => "optimal_p_optimal_centers",
            Strategy::BinaryQuantizationPoint => "binary_quantization_point",
        }
    }
}

#[derive(Args)]
struct CurveArgs {
    /// Input dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Budgets B (expected kept coordinates, summed over nodes), ascending.
    #[arg(long, value_delimiter = ',', group = "budget_source", required = true)]
    budgets: Option<Vec<f64>>,
    /// Bit budgets C, ascending; converted via C = n*rbar + (ceil_log2 d + r) B.
    #[arg(long, value_delimiter = ',', group = "budget_source")]
    budget_bits: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    strategy: Strategy,
    #[command(flatten)]
    sizes: SizeArgs,
    /// Monte Carlo trials behind the empirical column.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CentersFlag {
    /// Alternate between probability and center steps.
    Free,
    /// Pin centers to the row means and only optimize probabilities.
    RowMeans,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Input dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Budget B (expected kept coordinates, summed over nodes).
    #[arg(long, group = "budget_source", required = true)]
    budget_b: Option<f64>,
    /// Bit budget C; converted via C = n*rbar + (ceil_log2 d + r) B.
    #[arg(long, group = "budget_source")]
    budget_bits: Option<f64>,
    #[arg(long, value_enum, default_value_t = CentersFlag::Free)]
    centers: CentersFlag,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[command(flatten)]
    sizes: SizeArgs,
    /// Output base path; writes <out>.probs.csv, <out>.centers.csv, and
    /// <out>.summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum EncoderFlag {
    Identity,
    Variable,
    Fixed,
    Binary,
}

#[derive(Args)]
struct SimulateArgs {
    /// Input dataset CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    encoder: EncoderFlag,
    /// Wire format: naive, varying_length, sparse_indexed, sparse_seeded,
    /// or binary.
    #[arg(long, value_parser = parse_format)]
    format: FormatKind,
    /// Uniform keep probability (variable encoder).
    #[arg(long)]
    p: Option<f64>,
    /// Kept coordinates per node (fixed encoder).
    #[arg(long)]
    k: Option<usize>,
    /// Apply a shared random rotation with this seed before encoding.
    #[arg(long)]
    rotate: Option<u64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    sizes: SizeArgs,
    /// Per-trial CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for validation problems, 2 for anything about reading or writing files.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Parse(_) | Error::Malformed(_) | Error::Truncated { .. } => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Table1(args) => cmd_table1(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn load_dataset(path: &PathBuf) -> Result<Dataset, Error> {
    Dataset::read_csv(File::open(path)?)
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => File::create(path)?.write_all(text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn deviations(x: &Dataset, centers: &[f64]) -> Vec<f64> {
    let mut a = Vec::with_capacity(x.n() * x.d());
    for i in 0..x.n() {
        a.extend(x.row(i).iter().map(|v| (v - centers[i]).abs()));
    }
    a
}

fn cmd_gen(args: GenArgs) -> Result<(), Error> {
    let x = gen_synthetic(args.dist, args.n, args.d, args.seed)?;
    x.write_csv(File::create(&args.out)?)?;
    eprintln!("wrote {} ({} x {})", args.out.display(), x.n(), x.d());
    Ok(())
}

fn cmd_table1(args: Table1Args) -> Result<(), Error> {
    let x = load_dataset(&args.data)?;
    let sizes = args.sizes.sizes()?;
    let (n, d) = (x.n() as f64, x.d() as f64);
    let centers = x.row_means();
    let (r, r_bar, r_seed) =
        (f64::from(sizes.r()), f64::from(sizes.r_bar()), f64::from(sizes.r_seed()));
    let mut csv = String::from("p,expected_cost_bits,closed_mse,empirical_mse,std_error\n");
    for p in [1.0, 1.0 / f64::from(ceil_log2(x.d())), 1.0 / r, 1.0 / d] {
        let params = EncoderParams::uniform(x.n(), x.d(), p, centers.clone())?;
        let closed = mse_closed_variable(&x, &params)?;
        let rep = mse_empirical(&x, &EncoderSpec::Variable(params), args.trials, args.seed)?;
        let cost = n * (r_seed + r_bar) + n * p * d * r;
        csv += &format!("{p},{cost},{closed},{},{}\n", rep.mse, rep.std_error);
    }
    write_text(&args.out, &csv)
}

/// Convert a bit budget to an expected-kept-coordinate budget by inverting
/// `C = n*rbar + (ceil_log2 d + r) B`, floored at zero.
fn bits_to_budget(c: f64, x: &Dataset, sizes: BitSizes) -> f64 {
    let per_entry = f64::from(ceil_log2(x.d())) + f64::from(sizes.r());
    ((c - x.n() as f64 * f64::from(sizes.r_bar())) / per_entry).max(0.0)
}

fn validate_ascending(budgets: &[f64]) -> Result<(), Error> {
    if budgets.is_empty() {
        return Err(Error::InvalidArgument("at least one budget is required".into()));
    }
    for pair in budgets.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidArgument(format!(
                "budgets must be strictly ascending, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    if budgets[0] <= 0.0 {
        return Err(Error::InvalidArgument(format!("budget {} must be positive", budgets[0])));
    }
    Ok(())
}

fn cmd_curve(args: CurveArgs) -> Result<(), Error> {
    let x = load_dataset(&args.data)?;
    let sizes = args.sizes.sizes()?;
    let budgets: Vec<f64> = match (&args.budgets, &args.budget_bits) {
        (Some(b), None) => b.clone(),
        (None, Some(bits)) => {
            bits.iter().map(|&c| bits_to_budget(c, &x, sizes)).collect()
        }
        _ => unreachable!("clap enforces exactly one budget source"),
    };
    validate_ascending(&budgets)?;

    let mut csv = String::from(
        "strategy,requested_b,effective_b,cost_bits,closed_mse,empirical_mse,std_error,note\n",
    );
    let name = args.strategy.name();
    if args.strategy == Strategy::BinaryQuantizationPoint {
        // A single point: its cost and error are fixed by the data alone.
        let cost = x.n() as f64 * (2.0 * f64::from(sizes.r()) + x.d() as f64);
        let closed = mse_closed_variable(&x, &binary_params(&x)?)?;
        let rep = mse_empirical(&x, &EncoderSpec::BinaryQuant, args.trials, args.seed)?;
        csv += &format!("{name},,,{cost},{closed},{},{},\n", rep.mse, rep.std_error);
        return write_text(&args.out, &csv);
    }

    let centers = x.row_means();
    let a = deviations(&x, &centers);
    let support = a.iter().filter(|v| **v > 0.0).count() as f64;
    let per_entry = f64::from(ceil_log2(x.d())) + f64::from(sizes.r());
    for &requested in &budgets {
        let effective = requested.min(support);
        let note = if effective < requested {
            eprintln!("warning: budget {requested} exceeds the off-center support {support}; clipped");
            "clipped"
        } else {
            ""
        };
        let params = match args.strategy {
            Strategy::UniformPRowMeanCenters => {
                EncoderParams::uniform(x.n(), x.d(), effective / support, centers.clone())?
            }
            Strategy::OptimalPRowMeanCenters => {
                let probs = optimal_probs_given_centers(&a, effective)?;
                EncoderParams::new(x.n(), x.d(), probs, centers.clone())?
            }
            Strategy::OptimalPOptimalCenters => {
                let problem = BudgetProblem::new(x.clone(), effective)?;
                alternating_minimize(&problem, 1e-9, 200)?.params
            }
            Strategy::BinaryQuantizationPoint => unreachable!("handled above"),
        };
        let closed = mse_closed_variable(&x, &params)?;
        let rep = mse_empirical(&x, &EncoderSpec::Variable(params), args.trials, args.seed)?;
        let cost = x.n() as f64 * f64::from(sizes.r_bar()) + per_entry * effective;
        csv += &format!(
            "{name},{requested},{effective},{cost},{closed},{},{},{note}\n",
            rep.mse, rep.std_error
        );
    }
    write_text(&args.out, &csv)
}

fn cmd_optimize(args: OptimizeArgs) -> Result<(), Error> {
    let x = load_dataset(&args.data)?;
    let sizes = args.sizes.sizes()?;
    let budget = match (args.budget_b, args.budget_bits) {
        (Some(b), None) => b,
        (None, Some(c)) => {
            let b = bits_to_budget(c, &x, sizes);
            if b <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "bit budget {c} leaves no room for payload entries"
                )));
            }
            b
        }
        _ => unreachable!("clap enforces exactly one budget source"),
    };
    let mut problem = BudgetProblem::new(x.clone(), budget)?;
    if args.centers == CentersFlag::RowMeans {
        problem = problem.with_fixed_centers(x.row_means())?;
    }
    let sol = alternating_minimize(&problem, args.tol, args.max_iters)?;

    // Theorem-style sandwich at the solution's centers.
    let stats = spread_stats(&x, sol.params.centers())?;
    let bounds = mse_bounds(&stats, x.n(), budget.min(stats.support as f64))?;

    let base = args.out.display();
    let mut probs_csv = String::new();
    let header: Vec<String> = (0..x.d()).map(|j| format!("p{j}")).collect();
    probs_csv += &(header.join(",") + "\n");
    for i in 0..x.n() {
        let row: Vec<String> = sol.params.probs_row(i).iter().map(|v| format!("{v}")).collect();
        probs_csv += &(row.join(",") + "\n");
    }
    File::create(format!("{base}.probs.csv"))?.write_all(probs_csv.as_bytes())?;

    let mut centers_csv = String::from("center\n");
    for c in sol.params.centers() {
        centers_csv += &format!("{c}\n");
    }
    File::create(format!("{base}.centers.csv"))?.write_all(centers_csv.as_bytes())?;

    let summary = serde_json::json!({
        "budget": budget,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "bounds": {
            "lower": bounds.lower,
            "upper": bounds.upper,
            "exact": bounds.exact,
        },
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    File::create(format!("{base}.summary.json"))?.write_all(text.as_bytes())?;
    println!("{text}");
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let x = load_dataset(&args.data)?;
    let sizes = args.sizes.sizes()?;

    // With a rotation the encoder sees the rotated (padded) rows, so its
    // dimensions and centers come from those.
    let rows_seen: Vec<Vec<f64>> = match args.rotate {
        Some(seed) => (0..x.n()).map(|i| dme_core::codec::rotate(x.row(i), seed)).collect(),
        None => (0..x.n()).map(|i| x.row(i).to_vec()).collect(),
    };
    let d_seen = rows_seen[0].len();
    let centers: Vec<f64> =
        rows_seen.iter().map(|row| row.iter().sum::<f64>() / d_seen as f64).collect();

    let encoder = match args.encoder {
        EncoderFlag::Identity => EncoderSpec::Identity,
        EncoderFlag::Variable => {
            let p = args.p.ok_or_else(|| {
                Error::InvalidArgument("--p is required for the variable encoder".into())
            })?;
            EncoderSpec::Variable(EncoderParams::uniform(x.n(), d_seen, p, centers)?)
        }
        EncoderFlag::Fixed => {
            let k = args.k.ok_or_else(|| {
                Error::InvalidArgument("--k is required for the fixed encoder".into())
            })?;
            EncoderSpec::Fixed { k, centers }
        }
        EncoderFlag::Binary => EncoderSpec::BinaryQuant,
    };

    let cfg = RoundConfig {
        encoder,
        format: WireFormat::new(args.format, sizes),
        rotation: args.rotate,
        trials: args.trials,
        master_seed: args.seed,
    };
    let report = run_trials(&x, &cfg)?;

    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    let csv = String::from_utf8(csv).expect("report csv is ascii");
    write_text(&args.out, &csv)?;

    eprintln!("trials = {}", report.trials);
    eprintln!("mean_sq_error = {}", report.mean_sq_error);
    eprintln!("mean_bits_total = {}", report.mean_bits_total);
    eprintln!("min_bits = {}", report.min_bits);
    eprintln!("max_bits = {}", report.max_bits);
    eprintln!("overhead_bits_per_trial = {}", NODE_ID_BITS * x.n());
    Ok(())
}
