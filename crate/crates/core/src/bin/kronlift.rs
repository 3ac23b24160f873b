use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kronlift::cli::{
    cmd_analyze, cmd_compare, cmd_gen, cmd_solve, load_system, CliError, Method, RunReport,
    SolveOptions,
};
use kronlift::solvers::{DEFAULT_RANK_RTOL, DEFAULT_RIDGE};

#[derive(Parser)]
#[command(name = "kronlift", version, about = "Lift quadratic/cubic systems and solve them by SVD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long = "rank-rtol", default_value_t = DEFAULT_RANK_RTOL)]
    rank_rtol: f64,

    /// Print a human-readable table instead of JSON.
    #[arg(long)]
    pretty: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build a system file from a random or collocation descriptor.
    Gen {
        file: PathBuf,
        /// Write to this path instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report lift layout and singular values.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the lifted system and recover candidate roots.
    Solve {
        file: PathBuf,
        #[arg(long, default_value = "nullsearch")]
        method: String,
        #[arg(long, default_value_t = DEFAULT_RIDGE)]
        ridge: f64,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, env = "KRONLIFT_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare Newton from random starts with the null-space search.
    Compare {
        file: PathBuf,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, env = "KRONLIFT_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

fn emit(report: &RunReport, pretty: bool) {
    let text = if pretty { report.to_table() } else { report.to_json() };
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { file, output } => {
            let f = cmd_gen(&read(&file)?)?;
            let json = f.to_json();
            eprintln!(
                "gen: n={} quadratic={} cubic={} meta={}",
                f.n,
                f.g.is_some(),
                f.r.is_some(),
                f.meta
            );
            match output {
                Some(path) => std::fs::write(&path, json).map_err(|source| CliError::Io { path, source })?,
                None => {
                    let _ = std::io::stdout().write_all(json.as_bytes());
                }
            }
        }
        Command::Analyze { file, common } => {
            let sys = load_system(&file)?;
            emit(&cmd_analyze(&sys, common.rank_rtol)?, common.pretty);
        }
        Command::Solve {
            file,
            method,
            ridge,
            starts,
            seed,
            common,
        } => {
            let method = Method::parse(&method)?;
            let sys = load_system(&file)?;
            let opts = SolveOptions {
                method,
                ridge,
                starts,
                seed,
                rank_rtol: common.rank_rtol,
            };
            emit(&cmd_solve(&sys, opts)?, common.pretty);
        }
        Command::Compare {
            file,
            starts,
            seed,
            common,
        } => {
            let sys = load_system(&file)?;
            emit(&cmd_compare(&sys, starts, seed, common.rank_rtol)?, common.pretty);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&msg).trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
