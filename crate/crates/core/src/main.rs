use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vfclassify::eval::{round_metric, verify_paper_tables};
use vfclassify::pipeline::{self, load_config, PipelineConfig};
use vfclassify::{Error, Result};

/// Like `println!` but tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Glaucoma-vs-other classification of visual field perimetry.
#[derive(Debug, Parser)]
#[command(name = "vfclassify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset and its grid sidecar.
    Gen(RunArgs),
    /// Fit every enabled algorithm; writes models, standardizer and manifest.
    Train(RunArgs),
    /// Evaluate previously trained models on the test split.
    Eval(RunArgs),
    /// Generate or load, train and evaluate in one go.
    Pipeline(RunArgs),
    /// Reconstruct the published confusion matrices and check every printed cell.
    VerifyTables,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write reports with a comma decimal separator.
    #[arg(long)]
    comma_decimal: bool,
}

fn load(args: &RunArgs) -> Result<PipelineConfig> {
    let mut config = load_config(&args.config)?;
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    config.comma_decimal |= args.comma_decimal;
    config.validate()?;
    Ok(config)
}

fn print_outcome(outcome: &pipeline::RunOutcome) {
    for e in &outcome.ranked {
        say!(
            "{:<14} accuracy {:.2}  confusion {:?}",
            e.algorithm.tag(),
            round_metric(e.report.accuracy, 2),
            e.matrix.counts()
        );
    }
    for p in &outcome.written {
        say!("wrote {}", p.display());
    }
}

fn verify_tables() -> Result<()> {
    let results = verify_paper_tables();
    let mut failed = Vec::new();
    for v in &results {
        let t = &v.table;
        let status = if v.passed() { "PASS" } else { "FAIL" };
        let matrix = match v.matrices.as_slice() {
            [m] => format!("{:?}", m.counts()),
            ms => format!("{} candidates", ms.len()),
        };
        say!(
            "table {} {:<14} {status}  matrix {matrix}  cells checked {}",
            t.table_id,
            t.algorithm,
            v.cells_checked
        );
        for m in &v.mismatches {
            say!("    {m}");
        }
        if !v.passed() {
            failed.push(t.table_id);
        }
    }
    let passed = results.len() - failed.len();
    say!("{passed}/{} tables verified", results.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(failed))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::VerifyTables => verify_tables(),
        Command::Gen(args) => {
            let path = pipeline::run_generate(&load(&args)?)?;
            say!("wrote {}", path.display());
            Ok(())
        }
        Command::Train(args) => {
            print_outcome(&pipeline::run_train(&load(&args)?)?);
            Ok(())
        }
        Command::Eval(args) => {
            print_outcome(&pipeline::run_eval(&load(&args)?)?);
            Ok(())
        }
        Command::Pipeline(args) => {
            print_outcome(&pipeline::run_pipeline(&load(&args)?)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
