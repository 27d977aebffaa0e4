use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use parpolar::experiment::{cmd_bounds, cmd_construct, cmd_simulate, read_manifest, scheme_summary, selftest, ExperimentConfig};
use parpolar::sim::PermutationSet;
use parpolar::Error;

/// Polar coding for arbitrarily-permuted parallel channels.
#[derive(Parser)]
#[command(name = "parpolar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a scheme and write its manifest.
    Construct(Common),
    /// Simulate a manifest's scheme and write the block error CSV.
    Simulate(Common),
    /// Tabulate the tree-channel rate bounds per depth.
    Bounds(Common),
    /// Run the built-in noiseless and manifest checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// `all` or a list such as `0-1-2;2-0-1`
    #[arg(long)]
    permutations: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Parse(_) => 2,
        Error::Infeasible(_) => 3,
        Error::Resource(_) => 4,
        Error::Contract(_) => 1,
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = c.trials {
        if trials == 0 {
            return Err(Error::Usage("--trials must be positive".into()));
        }
        cfg.trials = trials;
    }
    if let Some(p) = &c.permutations {
        cfg.permutations = PermutationSet::parse(p)?;
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    Ok(cfg)
}

fn emit(path: Option<&Path>, body: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| Error::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Construct(c) => {
            let cfg = load_config(&c)?;
            let (scheme, manifest) = cmd_construct(&cfg)?;
            let summary = scheme_summary(&scheme);
            match cfg.out.as_deref() {
                Some(p) => {
                    emit(Some(p), &manifest)?;
                    print!("{summary}");
                }
                None => {
                    eprint!("{summary}");
                    print!("{manifest}");
                }
            }
        }
        Command::Simulate(c) => {
            let cfg = load_config(&c)?;
            let path = c.manifest.as_ref().ok_or_else(|| Error::Usage("simulate needs --manifest".into()))?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
            let scheme = read_manifest(&text)?;
            let (_, csv) = cmd_simulate(&cfg, &scheme)?;
            emit(cfg.out.as_deref(), &csv)?;
        }
        Command::Bounds(c) => {
            let cfg = load_config(&c)?;
            emit(cfg.out.as_deref(), &cmd_bounds(&cfg)?)?;
        }
        Command::Selftest => {
            let results = selftest()?;
            for (name, ok) in &results {
                println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
            }
            if results.iter().any(|(_, ok)| !ok) {
                return Err(Error::Contract("selftest failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("parpolar: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
