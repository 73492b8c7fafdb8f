use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gjbd::bench::{self, Experiment, Setting};
use gjbd::datagen::{fixture, random_instance};
use gjbd::eigsel::EigenvectorRoute;
use gjbd::io::{read_json, to_json, write_json, MatrixSetFile, SolutionFile};
use gjbd::metrics::quality_report;
use gjbd::{GjbdError, MatrixSetF64, Partition, SolveOptions};

#[derive(Parser)]
#[command(name = "gjbd", version, about = "General joint block diagonalization of matrix sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance with embedded ground truth.
    Gen(GenArgs),
    /// Block-diagonalize a matrix set.
    Solve(SolveArgs),
    /// Score a solution against the ground truth, as one CSV row.
    Eval(EvalArgs),
    /// Run a benchmark sweep and write one CSV row per trial.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Block sizes, e.g. `3,3,3`.
    #[arg(long)]
    partition: Partition,
    /// Polynomial degree; the set has p + 1 matrices.
    #[arg(long)]
    p: usize,
    /// Signal-to-noise ratio in dB, or `inf`.
    #[arg(long, default_value = "inf")]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw real matrices.
    #[arg(long)]
    real: bool,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix set file.
    #[arg(long, required_unless_present = "fixture", conflicts_with = "fixture")]
    input: Option<PathBuf>,
    /// Solve a built-in fixture instead of a file.
    #[arg(long)]
    fixture: Option<String>,
    #[arg(long, default_value_t = 3)]
    loops: usize,
    /// Ask for a real diagonalizer when the input is real.
    #[arg(long)]
    real: bool,
    /// Include the solve trace in the output.
    #[arg(long)]
    trace: bool,
    /// How pencil eigenvectors are computed.
    #[arg(long, default_value = "polynomial")]
    route: EigenvectorRoute,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    solution: PathBuf,
    /// Matrix set file with ground truth.
    #[arg(long)]
    truth: PathBuf,
    /// Print the CSV header line before the row.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    experiment: Experiment,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace the experiment's SNR grid, e.g. `30,40`.
    #[arg(long, value_delimiter = ',')]
    snr: Option<Vec<f64>>,
    /// How pencil eigenvectors are computed.
    #[arg(long, default_value = "polynomial")]
    route: EigenvectorRoute,
    /// For scaling-p4, the multipliers m to run, e.g. `1,2,3,4`.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<GjbdError> for Failure {
    fn from(e: GjbdError) -> Self {
        let code = match &e {
            GjbdError::NearlyDependent { .. } | GjbdError::SchurFailure { .. } | GjbdError::PoolTooSmall { .. } => 2,
            GjbdError::Format { .. }
            | GjbdError::EmptySet
            | GjbdError::ShapeMismatch { .. }
            | GjbdError::AllZero
            | GjbdError::InvalidPartition(_)
            | GjbdError::UnknownFixture(_)
            | GjbdError::PartitionMismatch { .. } => 3,
            _ => 1,
        };
        let message = match &e {
            GjbdError::NearlyDependent { .. } => {
                format!("{e}; the dense solver already used every eigenvector, so no larger pool is available")
            }
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn emit_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    match path {
        Some(p) => write_json(p, value)?,
        None => println!("{}", to_json(value)),
    }
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let inst = random_instance::<f64>(args.n, &args.partition, args.p, args.snr, args.seed, args.real)?;
    emit_json(args.out.as_deref(), &MatrixSetFile::from_instance(&inst))
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let ms: MatrixSetF64 = match (&args.input, &args.fixture) {
        (Some(path), _) => read_json::<MatrixSetFile>(path)?.matrix_set()?,
        (None, Some(name)) => fixture::<f64>(name)?.ms,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let opts =
        SolveOptions { refine_loops: args.loops, want_real: args.real, route: args.route, ..SolveOptions::default() };
    let (sol, trace) = gjbd::solve(&ms, &opts)?;
    emit_json(args.out.as_deref(), &SolutionFile::new(&sol, args.trace.then_some(trace)))
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let sol: SolutionFile = read_json(&args.solution)?;
    let truth_file: MatrixSetFile = read_json(&args.truth)?;
    let ms = truth_file.matrix_set()?;
    let (v_mix, true_partition) = truth_file
        .truth()?
        .ok_or_else(|| GjbdError::format("ground_truth", "the truth file has no ground truth"))?;
    let (w, partition) = sol.diagonalizer()?;
    if w.nrows() != ms.order() {
        return Err(GjbdError::format("n", format!("solution has order {}, truth {}", w.nrows(), ms.order())).into());
    }
    let unmixing = v_mix
        .try_inverse()
        .ok_or_else(|| GjbdError::format("ground_truth.v_mix", "is singular"))?;
    let report = quality_report(&ms, &unmixing, &true_partition, &w, &partition)?;
    let mut out = csv::WriterBuilder::new().has_headers(args.header).from_writer(io::stdout());
    out.serialize(&report).map_err(|e| Failure { code: 1, message: e.to_string() })?;
    out.flush()?;
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<(), Failure> {
    let mut settings = args.experiment.settings();
    if let Some(grid) = &args.snr {
        settings = match args.experiment {
            Experiment::Table2P1 => grid.iter().map(|&s| Setting::p1(s)).collect(),
            Experiment::Table2P2 => grid.iter().map(|&s| Setting::p2(s)).collect(),
            Experiment::Fig12Sweep => grid.iter().flat_map(|&s| [Setting::p1(s), Setting::p2(s)]).collect(),
            _ => settings
                .into_iter()
                .flat_map(|s| grid.iter().map(move |&snr| Setting { snr_db: snr, ..s.clone() }))
                .collect(),
        };
    }
    if let (Experiment::ScalingP4, Some(sizes)) = (args.experiment, &args.sizes) {
        settings = sizes.iter().map(|&m| Setting::p4(m)).collect();
    }
    let opts = SolveOptions { route: args.route, ..SolveOptions::default() };
    let rows = bench::run_experiment(args.experiment.id(), &settings, args.trials, args.seed, &opts);
    bench::write_csv(&rows, output(args.out.as_deref())?)?;

    let summaries = bench::summarize(&rows);
    let mut err = io::stderr().lock();
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3e}"));
    writeln!(err, "experiment  partition  p  snr  trials  strict%  merge%  median_pi  median_pi_pre  mean_ms")?;
    for s in &summaries {
        writeln!(
            err,
            "{}  {}  {}  {}  {}  {:.1}  {:.1}  {}  {}  {:.1}",
            s.experiment,
            s.partition,
            s.p,
            s.snr_db,
            s.trials,
            s.success_strict_pct,
            s.success_merge_pct,
            fmt(s.median_pi),
            fmt(s.median_pi_pre),
            s.mean_ms_total
        )?;
    }
    if args.experiment == Experiment::ScalingP4 && summaries.len() > 1 {
        let pts: Vec<(f64, f64)> = summaries.iter().map(|s| (s.n as f64, s.mean_ms_total)).collect();
        writeln!(err, "time ~ n^{:.2}", bench::fit_exponent(&pts))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
