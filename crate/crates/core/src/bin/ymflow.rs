//! Command-line front end: `run` executes one flow and writes its artifacts,
//! `sweep` fans out over a list of cocycle amplitudes, `verify` runs the
//! invariant battery. Exit codes: 0 success, 2 non-convergence, 3 numerical
//! abort or failed invariant, 4 config error. No environment variables.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use ymflow::config::{ConfigError, RunConfig};
use ymflow::harness;

#[derive(Parser)]
#[command(name = "ymflow", version, about = "Heat-flow laboratory for Hermitian metrics on model bundles over flat complex tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; omit to use the built-in defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides out_dir from the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for the initial-metric perturbation (overrides initial.seed).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Patch a config key, e.g. --override flow.dt=5e-4. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the metric flow and write trace.csv, manifest.json, summary.txt.
    Run(CommonArgs),
    /// Run the invariant battery and print PASS/FAIL per item.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Test mode: break the named item's tolerance so it must FAIL.
        #[arg(long, value_name = "KEY")]
        inject_fault: Option<String>,
    },
    /// One run per [sweep] amplitude, each in its own subdirectory.
    Sweep(CommonArgs),
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, ConfigError> {
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("initial.seed={seed}"));
    }
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path, &overrides)?,
        None => RunConfig::from_toml("", &overrides)?,
    };
    if let Some(out) = &common.out {
        cfg.out_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn cmd_run(common: &CommonArgs) -> i32 {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ymflow: {e}");
            return 4;
        }
    };
    match harness::run(&cfg) {
        Ok(report) => {
            let summary_path = report.out_dir.join("summary.txt");
            match std::fs::read_to_string(&summary_path) {
                Ok(text) => print!("{text}"),
                Err(_) => println!("status: {}", report.manifest.status),
            }
            println!("artifacts in {}", report.out_dir.display());
            report.exit_code
        }
        Err(e) => {
            eprintln!("ymflow: {e}");
            e.exit_code()
        }
    }
}

fn cmd_verify(common: &CommonArgs, fault: Option<&str>) -> i32 {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ymflow: {e}");
            return 4;
        }
    };
    match harness::verify(&cfg, fault) {
        Ok(items) => {
            let mut all_pass = true;
            for it in &items {
                let tag = if it.pass { "PASS" } else { "FAIL" };
                all_pass &= it.pass;
                println!("{tag}  {:28} {}", it.name, it.detail);
            }
            println!(
                "verify: {}/{} checks passed",
                items.iter().filter(|i| i.pass).count(),
                items.len()
            );
            if all_pass {
                0
            } else {
                3
            }
        }
        Err(e) => {
            eprintln!("ymflow: {e}");
            e.exit_code()
        }
    }
}

fn cmd_sweep(common: &CommonArgs) -> i32 {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ymflow: {e}");
            return 4;
        }
    };
    match harness::sweep(&cfg) {
        Ok((index, exit)) => {
            for m in &index.members {
                println!(
                    "{}  amplitude {:<8} {}  (exit {})",
                    m.dir, m.amplitude, m.status, m.exit_code
                );
            }
            println!("index written to {}/index.json", cfg.out_dir);
            exit
        }
        Err(e) => {
            eprintln!("ymflow: {e}");
            e.exit_code()
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            // argument errors are config errors for exit-code purposes
            eprintln!("{e}");
            std::process::exit(4);
        }
    };
    let code = match &cli.command {
        Command::Run(common) => cmd_run(common),
        Command::Verify {
            common,
            inject_fault,
        } => cmd_verify(common, inject_fault.as_deref()),
        Command::Sweep(common) => cmd_sweep(common),
    };
    std::process::exit(code);
}
