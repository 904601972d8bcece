use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netgreeks::experiment::{run_with_threads, validate_config, ExperimentConfig};
use netgreeks::network::NetworkFile;
use netgreeks::Error;

#[derive(Parser)]
#[command(name = "netgreeks", version, about = "Prices and network Greeks of cross-held equity and debt")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of Monte-Carlo draws.
    #[arg(long)]
    draws: Option<u64>,
    /// Output CSV path; stdout when neither this nor the config sets one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form values and Greeks on the symmetric network grid.
    SymmetricGrid(RunArgs),
    /// Joint draws of two firms with mutual debt holdings.
    TwoFirm(RunArgs),
    /// Firm-averaged Greeks over Erdős–Rényi ensembles.
    ErSweep(RunArgs),
    /// Monte-Carlo claim prices for one network.
    Price(RunArgs),
    /// Monte-Carlo network Greeks for one network.
    Greeks(RunArgs),
    /// Exact expected debt sensitivity against local approximations.
    LocalCompare(RunArgs),
    /// Checks an experiment config or a network file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    if err.is_solver_failure() {
        EXIT_SOLVER
    } else if err.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_IO
    }
}

fn run(kind: &str, args: RunArgs) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if cfg.kind() != kind {
        return Err(Error::Config(format!(
            "config {} describes a `{}` experiment, not `{kind}`",
            args.config.display(),
            cfg.kind()
        )));
    }
    cfg.apply_overrides(args.seed, args.draws, args.out);
    eprintln!("netgreeks {kind}: running {}", args.config.display());
    let table = run_with_threads(&cfg, args.threads, &|msg| eprintln!("{msg}"))?;
    match cfg.out() {
        Some(path) => {
            let file = File::create(path)?;
            table.write_to(BufWriter::new(file))?;
            eprintln!("wrote {} rows to {}", table.rows.len(), path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write_to(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn validate(path: PathBuf) -> Result<(), Error> {
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    if value.get("kind").is_some() {
        let cfg = ExperimentConfig::from_path(&path)?;
        for note in validate_config(&cfg)? {
            println!("{note}");
        }
        println!("ok");
        return Ok(());
    }
    let file: NetworkFile = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    let report = file.validate()?;
    for check in &report.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", check.name, check.detail);
    }
    println!("strict sub-stochastic: {}", report.strict_sub_stochastic);
    if report.passed() {
        println!("ok");
        Ok(())
    } else {
        Err(Error::InvalidNetwork(report.failures().join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SymmetricGrid(a) => run("symmetric-grid", a),
        Command::TwoFirm(a) => run("two-firm", a),
        Command::ErSweep(a) => run("er-sweep", a),
        Command::Price(a) => run("price", a),
        Command::Greeks(a) => run("greeks", a),
        Command::LocalCompare(a) => run("local-compare", a),
        Command::Validate { config } => validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
