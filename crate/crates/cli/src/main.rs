use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Parser, Subcommand};

use fairdim::{
    load_table, prepare, run_sweep, synth, ErrorKind, FairPca, Method, PlotData, SearchConfig,
    SweepConfig, SweepReport,
};

const EXIT_BAD_FLAGS: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Fair PCA: classical PCA vs unconstrained (ufpca) and constrained (cfpca)
/// fair projections.
#[derive(Debug, Parser)]
#[command(name = "fairdim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the two-cloud synthetic data set as CSV.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = synth::DEFAULT_SEED)]
        seed: u64,
    },
    /// Fit one method at one rank.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sensitive_col: String,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        balanced: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit all methods at ranks 1..=max-rank.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        sensitive_col: String,
        #[arg(long)]
        max_rank: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        balanced: bool,
        /// Writes <stem>.jsonl and <stem>.csv; JSON lines go to stdout otherwise.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Record runtime_ms as 0 so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
    /// Turn a sweep report into per-panel series files.
    Plotdata {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

enum Failure {
    Flags(String),
    Run(fairdim::Error),
}

impl From<fairdim::Error> for Failure {
    fn from(e: fairdim::Error) -> Self {
        Failure::Run(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |source| {
        Failure::Run(fairdim::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(io_err(p)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

fn search_config(tol: f64) -> Result<SearchConfig, Failure> {
    SearchConfig::with_tol(tol).map_err(|e| Failure::Flags(e.to_string()))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("FAIRDIM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Flags(format!("FAIRDIM_THREADS must be a positive integer, got `{raw}`")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Flags(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn dataset_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { out, seed } => {
            let table = synth::generate_s1(seed)?;
            let file = fs::File::create(&out).map_err(io_err(&out))?;
            synth::write_csv(&table, synth::SENSITIVE_COLUMN, io::BufWriter::new(file))?;
        }
        Command::Fit {
            input,
            sensitive_col,
            method,
            rank,
            tol,
            balanced,
            output,
        } => {
            let cfg = search_config(tol)?;
            let table = load_table(&input, &sensitive_col)?;
            let data = prepare(&table, balanced)?;
            let fit = FairPca::new(&data)?.fit(method, rank, &cfg)?;
            let mut text = serde_json::to_string(&fit).expect("fit result serializes");
            text.push('\n');
            emit(output.as_deref(), &text)?;
        }
        Command::Sweep {
            input,
            sensitive_col,
            max_rank,
            tol,
            balanced,
            output,
            no_timing,
        } => {
            let mut cfg = SweepConfig::new(max_rank);
            cfg.search = search_config(tol)?;
            cfg.balanced = balanced;
            cfg.timing = !no_timing;
            configure_threads()?;
            let table = load_table(&input, &sensitive_col)?;
            let report = run_sweep(&dataset_id(&input), &table, &cfg)?;
            match output {
                Some(p) => {
                    report.write(&p)?;
                }
                None => emit(None, &report.to_jsonl())?,
            }
        }
        Command::Plotdata { report, out_dir } => {
            let report = SweepReport::read(&report)?;
            PlotData::from_report(&report).write(&out_dir)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_BAD_FLAGS),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Flags(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_BAD_FLAGS)
        }
        Err(Failure::Run(e @ fairdim::Error::RankOutOfRange { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_BAD_FLAGS)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Data => ExitCode::from(EXIT_DATA),
                ErrorKind::Numeric => ExitCode::from(EXIT_NUMERIC),
            }
        }
    }
}
