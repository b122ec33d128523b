use clap::{Args, Parser, Subcommand};
use hermite_core::runner::{self, export, ExperimentConfig, ExperimentReport, Format};
use hermite_core::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical experiments for the Hermite operator.
#[derive(Parser, Debug)]
#[command(name = "hermite-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Orthonormality and Parseval checks of the Hermite basis.
    Basis(RunArgs),
    /// Mehler kernel against its spectral sum, eigen-action and subordination.
    Kernel(RunArgs),
    /// Square-function norm ratios over a random corpus.
    Gfunc(RunArgs),
    /// Polarization identity on random pairs.
    Polarize(RunArgs),
    /// Mellin inversion identity and imaginary powers for a symbol.
    Multiplier(RunArgs),
    /// Integrability estimate for the Mellin transform of a symbol.
    Meda(RunArgs),
    /// Sobolev and potential norm ratios over a random corpus.
    Sobolev(RunArgs),
    /// Verify the hash of a JSON report and export it again.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory; without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the default configuration for this command and exit.
    #[arg(long)]
    print_config: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// JSON report written by an earlier run.
    path: PathBuf,
    #[command(flatten)]
    common: Common,
}

fn load_config(name: &str, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::from_file(path)?;
            match cfg.get("experiment") {
                Some(e) if runner::canonical(e)? != runner::canonical(name)? => {
                    return Err(Error::Validation(format!("config is for experiment {e:?}, not {name:?}")));
                }
                Some(_) => {}
                None => cfg.set("experiment", name),
            }
            cfg
        }
        None => ExperimentConfig::example(name)?,
    };
    if let Some(seed) = args.seed {
        cfg.set("seed", seed);
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim());
    }
    Ok(cfg)
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn emit(report: &ExperimentReport, common: &Common) -> Result<()> {
    let format: Format = common.format.parse()?;
    match &common.out {
        Some(dir) => {
            for path in export(report, dir, format)? {
                println!("{}", path.display());
            }
        }
        None => match format {
            Format::Json => println!("{}", report.to_json()?),
            Format::Csv => report.write_csv(std::io::stdout().lock())?,
        },
    }
    eprintln!("content hash {}", report.content_hash);
    for (k, v) in &report.summary {
        eprintln!("  {k} = {}", runner::num(*v));
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let (name, args) = match cli.command {
        Command::Report(a) => {
            init_threads(a.common.threads)?;
            let report = ExperimentReport::from_json(&std::fs::read_to_string(&a.path)?)?;
            if !report.hash_matches() {
                return Err(Error::Validation(format!(
                    "content hash mismatch in {}: stored {}, computed {}",
                    a.path.display(),
                    report.content_hash,
                    report.compute_hash()
                )));
            }
            return emit(&report, &a.common);
        }
        Command::Basis(a) => ("basis", a),
        Command::Kernel(a) => ("kernel", a),
        Command::Gfunc(a) => ("gfunc", a),
        Command::Polarize(a) => ("polarize", a),
        Command::Multiplier(a) => ("multiplier", a),
        Command::Meda(a) => ("meda", a),
        Command::Sobolev(a) => ("sobolev", a),
    };
    let cfg = load_config(name, &args)?;
    if args.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    init_threads(args.common.threads)?;
    let report = runner::run(&cfg)?;
    emit(&report, &args.common)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
