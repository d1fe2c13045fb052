//! `poth` command-line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numerical
//! error. Every failure prints a single stderr line prefixed with
//! `error:<category>:`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use poth::batch::{run_batch, write_summary_csv, BatchOptions};
use poth::io::{parse_input, parse_report, write_report, InputFormat, ParseOptions, Payload};
use poth::plot::{render, PlotKind};
use poth::{
    pairwise_from_reference, sample_mvn, Direction, Error, ErrorCategory, HierarchyReport,
    ReportOptions, ScoreSource, SubsetSpec, DEFAULT_N_DRAWS,
};

#[derive(Parser, Debug)]
#[command(name = "poth", version, about = "Certainty of treatment hierarchies (SUCRA, P-scores, POTH)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Global POTH, scores, residuals and cumulative series.
    Compute(InputArgs),
    /// POTH of a treatment subset (requires --subset).
    Subset(InputArgs),
    /// Leave-one-out POTH residuals.
    Residuals(InputArgs),
    /// Cumulative POTH over the best k treatments.
    Cumulative(InputArgs),
    /// Render an SVG chart from a report.
    Plot(PlotArgs),
    /// POTH across a directory of networks.
    Batch(BatchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Reference,
    Pairwise,
    Draws,
    RankProbs,
    Scores,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Reference => InputFormat::ReferenceEffects,
            FormatArg::Pairwise => InputFormat::Pairwise,
            FormatArg::Draws => InputFormat::Draws,
            FormatArg::RankProbs => InputFormat::RankProbs,
            FormatArg::Scores => InputFormat::Scores,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Larger,
    Smaller,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Larger => Direction::LargerIsBetter,
            DirectionArg::Smaller => Direction::SmallerIsBetter,
        }
    }
}

/// How reference effects are turned into scores.
#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Analytic P-scores.
    Pscore,
    /// SUCRA from multivariate normal draws.
    Draws,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PlotKindArg {
    Residuals,
    Cumulative,
    Scores,
}

impl From<PlotKindArg> for PlotKind {
    fn from(k: PlotKindArg) -> Self {
        match k {
            PlotKindArg::Residuals => PlotKind::Residuals,
            PlotKindArg::Cumulative => PlotKind::Cumulative,
            PlotKindArg::Scores => PlotKind::Scores,
        }
    }
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Input layout; detected from the file when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    /// Companion covariance CSV for reference-effects CSV input.
    #[arg(long)]
    covariance: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pscore")]
    method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_N_DRAWS)]
    n_draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated treatment labels.
    #[arg(long, value_delimiter = ',')]
    subset: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Report JSON produced by another subcommand.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    plot_kind: PlotKindArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BatchArgs {
    #[arg(long)]
    dir: PathBuf,
    /// Summary CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Direction for CSV networks (JSON networks carry their own).
    #[arg(long, value_enum)]
    direction: Option<DirectionArg>,
    #[arg(long, value_enum, default_value = "pscore")]
    method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_N_DRAWS)]
    n_draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

struct Failure {
    category: ErrorCategory,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            category: e.category(),
            message: e.to_string(),
        }
    }
}

fn validation(message: impl Into<String>) -> Failure {
    Failure {
        category: ErrorCategory::Validation,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        category: ErrorCategory::Io,
        message: format!("{}: {e}", path.display()),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| io_failure(path, e))
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, bytes).map_err(|e| io_failure(path, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| validation(e.to_string()))?;
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Compute,
    Subset,
    Residuals,
    Cumulative,
}

fn analyze(args: &InputArgs, mode: Mode) -> Result<(), Failure> {
    set_threads(args.threads)?;
    if args.n_draws == 0 {
        return Err(validation("--n-draws must be at least 1"));
    }
    if mode == Mode::Subset && args.subset.is_empty() {
        return Err(validation("subset needs --subset a,b,..."));
    }
    let bytes = read(&args.input)?;
    let covariance = args.covariance.as_deref().map(read).transpose()?;
    let options = ParseOptions {
        direction: args.direction.map(Into::into),
        covariance_csv: covariance.as_deref(),
    };
    let doc = parse_input(&bytes, args.format.map(Into::into), &options)?;

    let pairwise;
    let draws;
    let source = match (&doc.payload, args.method) {
        (Payload::ReferenceEffects(r), MethodArg::Pscore) => {
            pairwise = pairwise_from_reference(r)?;
            ScoreSource::Pairwise(&pairwise)
        }
        (Payload::ReferenceEffects(r), MethodArg::Draws) => {
            draws = sample_mvn(r, args.n_draws, args.seed)?;
            ScoreSource::Draws(&draws)
        }
        (_, MethodArg::Draws) => {
            return Err(validation("--method draws applies to reference-effects input only"))
        }
        _ => doc.direct_source().expect("non-reference payload"),
    };

    let joint_required = matches!(mode, Mode::Subset | Mode::Residuals | Mode::Cumulative)
        || !args.subset.is_empty();
    if joint_required && !source.supports_subsets() {
        return Err(Error::UnsupportedSource {
            operation: match mode {
                Mode::Residuals => "residuals",
                Mode::Cumulative => "cumulative POTH",
                _ => "subset POTH",
            },
            source_kind: source.kind_name(),
        }
        .into());
    }
    let n = source.treatments().len();
    if mode == Mode::Residuals && n < 3 {
        return Err(Error::TooFewTreatments { min: 3, got: n }.into());
    }

    let mut report_options = ReportOptions {
        residuals: matches!(mode, Mode::Compute | Mode::Residuals),
        cumulative: matches!(mode, Mode::Compute | Mode::Cumulative),
        subsets: Vec::new(),
        warnings: doc.warnings.clone(),
    };
    if !args.subset.is_empty() {
        report_options
            .subsets
            .push(SubsetSpec::explicit(args.subset.iter().cloned()));
    }
    let report = HierarchyReport::build(source, &report_options)?;
    emit(args.output.as_deref(), &write_report(&report))
}

fn plot(args: &PlotArgs) -> Result<(), Failure> {
    let report = parse_report(&read(&args.input)?)?;
    let svg = render(&report, args.plot_kind.into())?;
    emit(args.output.as_deref(), svg.as_bytes())
}

fn batch(args: &BatchArgs) -> Result<(), Failure> {
    set_threads(args.threads)?;
    let options = BatchOptions {
        alpha: args.alpha,
        direction: args.direction.map(Into::into).unwrap_or_default(),
        seed: args.seed,
        n_draws: args.n_draws,
        sample_reference: args.method == MethodArg::Draws,
    };
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(validation("--alpha must lie in (0, 1)"));
    }
    if !args.dir.is_dir() {
        return Err(Failure {
            category: ErrorCategory::Io,
            message: format!("{}: not a directory", args.dir.display()),
        });
    }
    let result = run_batch(&args.dir, &options)?;
    for s in &result.skipped {
        eprintln!("warning:skipped:{}: {}", s.file, s.reason.replace('\n', " "));
    }
    emit(Some(&args.out), &write_summary_csv(&result.rows)?)?;
    let summary = serde_json::to_value(&result.summary).expect("summary serializes");
    emit(None, poth::io::canonical_json(&summary).as_bytes())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            eprintln!("error:validation: {first}");
            return ExitCode::from(1);
        }
    };
    let outcome = match &cli.command {
        Command::Compute(a) => analyze(a, Mode::Compute),
        Command::Subset(a) => analyze(a, Mode::Subset),
        Command::Residuals(a) => analyze(a, Mode::Residuals),
        Command::Cumulative(a) => analyze(a, Mode::Cumulative),
        Command::Plot(a) => plot(a),
        Command::Batch(a) => batch(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!(
                "error:{}: {}",
                f.category.as_str(),
                f.message.replace('\n', " ")
            );
            ExitCode::from(match f.category {
                ErrorCategory::Validation => 1,
                ErrorCategory::Io => 2,
                ErrorCategory::Numerical => 3,
            })
        }
    }
}
