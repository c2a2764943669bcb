use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fieldroad_cli::config::{RawConfig, RunConfig};
use fieldroad_cli::{commands, CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "fieldroad", version, about = "Field-road KPP laboratory")]
struct Cli {
    /// Defaults to the config's `command` key.
    #[command(subcommand)]
    command: Option<Cmd>,

    /// Config file (flat key = value with [section] headers).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. --set sim.dt=0.1 (repeatable).
    #[arg(short, long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Output directory (overrides output_dir).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps and property checks; 0 uses all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Time integration from a bump; writes snapshots.csv and probes.csv.
    Simulate,
    /// Nontrivial steady state on one period; writes steady.csv.
    Steady,
    /// Principal eigenvalues; writes dispersion.csv or halfplane.csv.
    Eigen {
        /// Comma-separated exponents (overrides spectral.alpha).
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Half-plane limit over the width schedule.
        #[arg(long)]
        halfplane: bool,
        /// Also write the eigen operator at the first alpha to operator.coo.
        #[arg(long)]
        dump_operator: bool,
    },
    /// Spreading speed on the strip, or in the half-plane; writes speed.csv.
    Speed {
        #[arg(long)]
        halfplane: bool,
    },
    /// Cross-product sweep over sweep.* lists; writes sweep.csv.
    Sweep,
    /// Front tracking and speed fit; writes front.csv and summary.csv.
    Front {
        /// Track a snapshot CSV instead of running a simulation.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// All property checks; exit code 4 names any failing property.
    Verify,
}

fn overrides(cli: &Cli) -> Vec<String> {
    let mut out = cli.set.clone();
    let name = cli.command.as_ref().map(|cmd| subcommand(cmd, &mut out));
    if let Some(name) = name {
        out.push(format!("command={name}"));
    }
    if let Some(o) = &cli.out {
        out.push(format!("output_dir={}", o.display()));
    }
    if let Some(t) = cli.threads {
        out.push(format!("threads={t}"));
    }
    out
}

/// Overrides implied by the subcommand's flags; returns its name.
fn subcommand(cmd: &Cmd, out: &mut Vec<String>) -> &'static str {
    match cmd {
        Cmd::Simulate => "simulate",
        Cmd::Steady => "steady",
        Cmd::Eigen { alpha, halfplane, dump_operator } => {
            if let Some(a) = alpha {
                out.push(format!("spectral.alpha={a}"));
            }
            if *halfplane {
                out.push("spectral.halfplane=true".into());
            }
            if *dump_operator {
                out.push("dump_operator=true".into());
            }
            "eigen"
        }
        Cmd::Speed { halfplane } => {
            if *halfplane {
                out.push("spectral.halfplane=true".into());
            }
            "speed"
        }
        Cmd::Sweep => "sweep",
        Cmd::Front { snapshots } => {
            if let Some(p) = snapshots {
                out.push(format!("front.snapshots={}", p.display()));
            }
            "front"
        }
        Cmd::Verify => "verify",
    }
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let mut raw = match &cli.config {
        Some(p) => fieldroad_cli::config::read_raw(p)?,
        None => RawConfig::default(),
    };
    for o in overrides(cli) {
        raw.apply_override(&o)?;
    }
    RunConfig::from_raw(&raw)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|config| {
        let mut stdout = std::io::stdout();
        let r = commands::run(&config, &mut stdout);
        stdout.flush().map_err(CliError::from)?;
        r
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
