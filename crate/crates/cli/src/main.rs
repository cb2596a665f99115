use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cyclicspec_cli::commands::{cmd_dirac, cmd_isometry, cmd_kernel, cmd_measure, cmd_selfadjoint};
use cyclicspec_cli::config::RunConfig;
use cyclicspec_cli::output::Tree;
use cyclicspec_cli::suite::{cmd_suite, SuiteOptions};
use cyclicspec_cli::CliError;

#[derive(Parser)]
#[command(name = "cyclicspec", version, about = "Spectral measures of cyclic compressions")]
struct Cli {
    /// TOML run configuration; defaults to the diag3 preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named preset (diag3, sadj3, shift), used when no config is given.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suite only: cap N at 100.
    #[arg(long, global = true)]
    quick: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Box masses, discrepancies and spectrum estimates.
    Measure,
    /// Isometry and polynomial consistency of the embedding.
    Isometry,
    /// Phases of an exp-selfadjoint model.
    Selfadjoint,
    /// Kernel propagators and the conditions on the operator.
    Kernel,
    /// Dirac representation, schedules and propagators.
    Dirac {
        /// Also report the expected values under the linear convention.
        #[arg(long)]
        dual_convention: bool,
    },
    /// The full acceptance matrix.
    Suite,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => RunConfig::preset("diag3")?,
    };
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (tree, passed, out): (Tree, bool, PathBuf) = match &cli.command {
        Command::Suite => {
            let opts = SuiteOptions { seed: cli.seed.unwrap_or(0), quick: cli.quick };
            let run = cmd_suite(opts)?;
            for c in &run.criteria {
                println!("{}", c.line());
            }
            let passed = run.passed();
            (run.tree, passed, cli.out.clone().unwrap_or_else(|| "out/suite".into()))
        }
        cmd => {
            let cfg = load(&cli)?;
            let outcome = match cmd {
                Command::Measure => cmd_measure(&cfg)?,
                Command::Isometry => cmd_isometry(&cfg)?,
                Command::Selfadjoint => cmd_selfadjoint(&cfg)?,
                Command::Kernel => cmd_kernel(&cfg)?,
                Command::Dirac { dual_convention } => cmd_dirac(&cfg, *dual_convention)?,
                Command::Suite => unreachable!(),
            };
            (outcome.tree, outcome.passed, cfg.out)
        }
    };
    tree.write_to(&out)?;
    println!("wrote {} files to {}", tree.files.len(), out.display());
    Ok(passed)
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
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some checks failed; see summary.json");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
