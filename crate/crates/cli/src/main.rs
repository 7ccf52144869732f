use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use favpts_cli::tables::{exponents_table, interior_grid, report, write_gff_samples};
use favpts_cli::{run_experiment, verify, CliError, ExperimentConfig, Overrides, Result, Suite};

#[derive(Parser)]
#[command(name = "favpts", version, about = "Favorite, late and high point experiments on Z^2")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count clustered tuples of special points over a range of scales.
    Simulate(RunArgs),
    /// Print closed-form and variational exponents over an (alpha, beta) grid.
    Exponents(ExponentArgs),
    VerifyCombinatorics(VerifyArgs),
    VerifyPotential(VerifyArgs),
    VerifyExponents(VerifyArgs),
    VerifyGff(VerifyArgs),
    VerifyWalk(VerifyArgs),
    /// Write field samples as raw little-endian f64 plus a JSON header.
    GffSample(SampleArgs),
    /// Summarize a finished run directory.
    Report {
        #[arg(long, default_value = "favpts-out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<u32>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    j: Option<u32>,
    #[arg(long)]
    trials: Option<u64>,
    /// favorite, truncated, late or high.
    #[arg(long)]
    kind: Option<String>,
    /// Count only tuples of distinct points.
    #[arg(long)]
    distinct: bool,
}

#[derive(Args)]
struct ExponentArgs {
    /// Comma-separated values; defaults to an interior grid.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// Points per axis for the default grid.
    #[arg(long, default_value_t = 10)]
    grid: usize,
    /// Also write exponents.csv into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for verdict.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Box side.
    #[arg(long, default_value_t = 32)]
    n: u32,
    /// Number of samples.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "favpts-out")]
    out: PathBuf,
}

fn simulate(args: RunArgs) -> Result<()> {
    let flags = Overrides {
        scales: args.scales,
        alpha: args.alpha,
        beta: args.beta,
        j: args.j,
        trials: args.trials,
        seed: args.seed,
        workers: args.workers,
        out: args.out,
        kind: args.kind,
        distinct: args.distinct.then_some(true),
    };
    let cfg = ExperimentConfig::resolve("simulate", args.config.as_deref(), flags)?;
    let manifest = run_experiment(&cfg)?;
    for s in &manifest.scales {
        println!("n={} mean count {:.3} (sd {:.3})", s.n, s.mean_count, s.sd_count);
    }
    match (&manifest.fit, &manifest.fit_note) {
        (Some(f), _) => println!("slope {:.4} +- {:.4}", f.slope, f.stderr),
        (None, note) => println!("no fit: {}", note.as_deref().unwrap_or("")),
    }
    println!("results in {}", cfg.out.display());
    Ok(())
}

fn exponents(args: ExponentArgs) -> Result<()> {
    let pick = |v: Vec<f64>| if v.is_empty() { interior_grid(args.grid) } else { v };
    let table = exponents_table(&pick(args.alpha), &pick(args.beta))?;
    print!("{table}");
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let path = dir.join("exponents.csv");
        std::fs::write(&path, &table).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

fn run_suite(suite: Suite, args: VerifyArgs) -> Result<()> {
    let verdict = verify(suite, args.seed, args.out.as_deref())?;
    for c in &verdict.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if verdict.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = verdict.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Verification(format!("{}: {}", suite.name(), failed.join(", "))))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Exponents(args) => exponents(args),
        Command::VerifyCombinatorics(a) => run_suite(Suite::Combinatorics, a),
        Command::VerifyPotential(a) => run_suite(Suite::Potential, a),
        Command::VerifyExponents(a) => run_suite(Suite::Exponents, a),
        Command::VerifyGff(a) => run_suite(Suite::Gff, a),
        Command::VerifyWalk(a) => run_suite(Suite::Walk, a),
        Command::GffSample(a) => {
            for p in write_gff_samples(a.n, a.trials, a.seed, &a.out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Report { out } => {
            print!("{}", report(&out)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
