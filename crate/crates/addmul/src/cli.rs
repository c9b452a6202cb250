//! The `addmul` command.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use addmul_core::bounds::{hypothesis_threshold, min_j, rule_bounds};
use addmul_core::experiments::ExperimentConfig;
use addmul_core::{
    build_chain, matmul_naive, matmul_softfloat, matmul_softfloat_naive, matmul_sparse, ChainConfig, ChainSide,
    InputVector, MatmulConfig, OpCounter, MAX_BITS,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::format::{format_matrix, read_matrix, Matrix};
use crate::parallel::{par_matmul_dense, par_run_experiment};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "addmul", version, about = "Matrix multiplication using additions only")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multiply two matrix files of the same kind.
    Matmul(MatmulArgs),
    /// Measure list lengths after repeated sort, dedup and difference passes.
    Experiment(ExperimentArgs),
    /// Guaranteed additions for a vector-scalar product.
    Bound(BoundArgs),
    /// Per-level statistics of one vector's difference chain.
    ChainStats(ChainStatsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Side {
    Auto,
    Columns,
    Rows,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Strip trailing zero bits before sorting (default).
    #[arg(long, overrides_with = "no_align")]
    align: bool,
    #[arg(long, overrides_with = "align")]
    no_align: bool,
    /// Contiguous segments for the difference lists.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    segments: u32,
    /// Stop recursing at this many differences.
    #[arg(long, default_value_t = 4)]
    base_threshold: usize,
    /// Maximum number of chain levels.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    max_depth: u32,
}

impl ChainArgs {
    fn config(&self) -> ChainConfig {
        ChainConfig {
            align: !self.no_align,
            segments: self.segments as usize,
            base_threshold: self.base_threshold,
            max_depth: self.max_depth as usize,
        }
    }
}

#[derive(Debug, Args)]
pub struct MatmulArgs {
    a: PathBuf,
    b: PathBuf,
    /// Product file, written in the operands' format.
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    chain: ChainArgs,
    /// Which operand's vectors become chains.
    #[arg(long, value_enum, default_value_t = Side::Auto)]
    side: Side,
    /// Write operation counts as CSV.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Use native multiplication instead.
    #[arg(long)]
    naive: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// List length; repeat for several rows.
    #[arg(long = "n", required = true, value_parser = clap::value_parser!(u64).range(1..))]
    n: Vec<u64>,
    #[arg(long, default_value_t = 24, value_parser = clap::value_parser!(u32).range(1..=32))]
    bits: u32,
    /// Only aligned runs (both are run by default).
    #[arg(long, conflicts_with = "no_align")]
    align: bool,
    /// Only unaligned runs.
    #[arg(long)]
    no_align: bool,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sort/dedup/difference rounds per trial.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    levels: u32,
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("range").required(true).args(["bits", "k"]))]
#[command(group = clap::ArgGroup::new("query").required(true).multiple(true).args(["n", "j"]))]
pub struct BoundArgs {
    /// Vector length.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
    /// Element width; sets k = 2^bits.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=63))]
    bits: Option<u32>,
    /// Largest element value.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    k: Option<u64>,
    /// Report this multiplier's threshold.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    j: Option<u32>,
    /// Also print every rule's value (needs --n).
    #[arg(long, requires = "n")]
    rules: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["file", "values"]))]
pub struct ChainStatsArgs {
    /// Dense or sparse matrix file.
    file: Option<PathBuf>,
    /// Take this column of the file (default 0).
    #[arg(long, conflicts_with = "row", requires = "file")]
    column: Option<usize>,
    /// Take this row of the file instead.
    #[arg(long, requires = "file")]
    row: Option<usize>,
    /// Comma-separated vector instead of a file.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<i64>>,
    /// Width of --values (default: the smallest that fits).
    #[arg(long, requires = "values", value_parser = clap::value_parser!(u32).range(1..=32))]
    bits: Option<u32>,
    #[command(flatten)]
    chain: ChainArgs,
}

/// Parse `args` (program name first) and run, writing reports to `out`.
pub fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, out: &mut dyn Write) -> Result<()> {
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    execute(cli.command, out)
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Matmul(a) => cmd_matmul(&a),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::Bound(a) => cmd_bound(&a, out),
        Command::ChainStats(a) => cmd_chain_stats(&a, out),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = std::io::stdout();
    match execute(cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("addmul: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn check_width(bits: u32) -> Result<()> {
    if bits > MAX_BITS {
        Err(addmul_core::Error::InvalidBits(bits).into())
    } else {
        Ok(())
    }
}

fn cmd_matmul(args: &MatmulArgs) -> Result<()> {
    let a = read_matrix(&args.a)?;
    let b = read_matrix(&args.b)?;
    let config = MatmulConfig {
        chain: args.chain.config(),
        side: match args.side {
            Side::Auto => ChainSide::Auto,
            Side::Columns => ChainSide::Columns,
            Side::Rows => ChainSide::Rows,
        },
    };
    config.chain.validate()?;
    let (product, counter, products) = match (&a, &b) {
        (Matrix::Dense(a), Matrix::Dense(b)) => {
            check_width(a.bits().max(b.bits()))?;
            if args.naive {
                let m = matmul_naive(a, b)?;
                let products = count_dense_products(a, b);
                (Matrix::Dense(m), OpCounter::new(), products)
            } else {
                let p = par_matmul_dense(a, b, &config)?;
                (Matrix::Dense(p.matrix), p.counter, p.stats.products)
            }
        }
        (Matrix::Sparse(a), Matrix::Sparse(b)) => {
            check_width(a.bits().max(b.bits()))?;
            if args.naive {
                if a.cols() != b.rows() {
                    return Err(addmul_core::Error::DimensionMismatch("A.cols must equal B.rows").into());
                }
                let (da, db) = (a.to_dense(), b.to_dense());
                let products = count_dense_products(&da, &db);
                (Matrix::Sparse(matmul_naive(&da, &db)?.to_sparse()), OpCounter::new(), products)
            } else {
                let p = matmul_sparse(a, b, &config)?;
                (Matrix::Sparse(p.matrix), p.counter, p.stats.products)
            }
        }
        (Matrix::Float(a), Matrix::Float(b)) => {
            if args.naive {
                let m = matmul_softfloat_naive(a, b)?;
                let products = (0..a.cols())
                    .map(|k| {
                        let col = (0..a.rows()).filter(|&i| !a.get(i, k).is_zero()).count() as u64;
                        let row = (0..b.cols()).filter(|&j| !b.get(k, j).is_zero()).count() as u64;
                        col * row
                    })
                    .sum();
                (Matrix::Float(m), OpCounter::new(), products)
            } else {
                let p = matmul_softfloat(a, b, &config)?;
                (Matrix::Float(p.matrix), p.counter, p.stats.products)
            }
        }
        _ => return Err(Error::KindMismatch(a.kind(), b.kind())),
    };
    let path = &args.output;
    fs::write(path, format_matrix(&product)).map_err(|e| Error::from(e).in_file(path))?;
    if let Some(path) = &args.counts {
        fs::write(path, report::counter_csv(&counter, products)).map_err(|e| Error::from(e).in_file(path))?;
    }
    Ok(())
}

fn count_dense_products(a: &addmul_core::DenseMatrix, b: &addmul_core::DenseMatrix) -> u64 {
    (0..a.cols())
        .map(|k| {
            let col = a.col(k).filter(|&v| v != 0).count() as u64;
            let row = b.row(k).iter().filter(|&&v| v != 0).count() as u64;
            col * row
        })
        .sum()
}

fn cmd_experiment(args: &ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let aligns: &[bool] = match (args.align, args.no_align) {
        (true, _) => &[true],
        (_, true) => &[false],
        _ => &[false, true],
    };
    let mut rows = Vec::new();
    for &n in &args.n {
        for &align in aligns {
            let config = ExperimentConfig {
                n: usize::try_from(n).map_err(|_| Error::Usage(format!("n = {n} is too large")))?,
                bits: args.bits,
                align,
                trials: args.trials,
                seed: args.seed,
                levels: args.levels as usize,
            };
            rows.push(par_run_experiment(&config)?);
        }
    }
    if args.csv {
        writeln!(out, "{}", report::EXPERIMENT_HEADER)?;
        for r in &rows {
            out.write_all(report::experiment_csv_row(r).as_bytes())?;
        }
    } else {
        out.write_all(report::experiment_table(&rows).as_bytes())?;
    }
    Ok(())
}

fn cmd_bound(args: &BoundArgs, out: &mut dyn Write) -> Result<()> {
    let k = match (args.bits, args.k) {
        (Some(b), _) => 1u64 << b,
        (_, Some(k)) => k,
        _ => unreachable!("clap requires one of --bits and --k"),
    };
    if let Some(j) = args.j {
        let t = hypothesis_threshold(j, k)?;
        if args.csv {
            write!(out, "j,k,threshold\n{j},{k},{t}\n")?;
        } else {
            write!(out, "j: {j}\nk: {k}\nthreshold: {t}\n")?;
            if let Some(n) = args.n {
                writeln!(out, "holds: {}", u128::from(n) >= t)?;
            }
        }
        if args.n.is_none() {
            return Ok(());
        }
    }
    if let Some(n) = args.n {
        let r = min_j(n, k)?;
        let text = if args.csv { report::bound_csv(&r) } else { report::bound_text(&r) };
        out.write_all(text.as_bytes())?;
        if args.rules {
            out.write_all(report::rules_text(&rule_bounds(n, k)?).as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_chain_stats(args: &ChainStatsArgs, out: &mut dyn Write) -> Result<()> {
    let (values, bits) = match (&args.file, &args.values) {
        (Some(path), _) => {
            let dense = match read_matrix(path)? {
                Matrix::Dense(d) => d,
                Matrix::Sparse(s) => s.to_dense(),
                Matrix::Float(_) => return Err(Error::Usage("chain-stats needs an integer matrix".into())),
            };
            check_width(dense.bits())?;
            let v: Vec<i128> = match (args.row, args.column) {
                (Some(i), _) if i < dense.rows() => dense.row(i).to_vec(),
                (None, c) if c.unwrap_or(0) < dense.cols() => dense.col(c.unwrap_or(0)).collect(),
                _ => return Err(addmul_core::Error::DimensionMismatch("row or column index out of range").into()),
            };
            (v.into_iter().map(|x| x as i64).collect::<Vec<_>>(), dense.bits())
        }
        (_, Some(v)) => {
            let need = v.iter().map(|x| 64 - x.unsigned_abs().leading_zeros()).max().unwrap_or(0).max(1);
            (v.clone(), args.bits.unwrap_or(need))
        }
        _ => unreachable!("clap requires a file or --values"),
    };
    let config = args.chain.config();
    config.validate()?;
    let input = InputVector::from_signed(&values, bits)?;
    let chain = build_chain(&input, config, &mut OpCounter::new())?;
    out.write_all(report::chain_csv(&chain).as_bytes())?;
    Ok(())
}
