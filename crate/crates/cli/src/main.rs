//! `orbit-heights`: orbit scans, heights, valuations and bound evaluators
//! with reproducible JSON/CSV reports.
//!
//! Exit codes: 0 success, 1 invalid input, 2 a cap was hit (partial result).

mod commands;
mod config;
mod error;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand};

use crate::commands::*;
use crate::config::{Common, FileConfig, Format};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "orbit-heights", version, about = "Heights, S-integrality and valuations along orbits of rational maps over Q")]
struct Cli {
    /// JSON file with option values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<String>,
    #[arg(long, global = true, value_parser = parse_execution)]
    execution: Option<orbit_heights::Execution>,
    /// Seed for randomized sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

fn parse_execution(s: &str) -> Result<orbit_heights::Execution, String> {
    match s {
        "sequential" => Ok(orbit_heights::Execution::Sequential),
        "parallel" => Ok(orbit_heights::Execution::Parallel),
        _ => Err(format!("expected sequential or parallel, got {s:?}")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// S-integrality verdicts along an orbit.
    Scan(ScanArgs),
    /// Indices where (phi^n(alpha) - beta)^-1 is quasi-(S, eps)-integral.
    QuasiScan(QuasiArgs),
    /// Evaluate a bound formula.
    Bound(BoundArgs),
    /// Certified canonical-height interval.
    Canheight(CanheightArgs),
    /// Weil height of a point or a map.
    Height(HeightArgs),
    /// v_p(a^n - b^n) by lifting the exponent.
    Lte(LteArgs),
    /// v_p(phi^n(alpha) - beta) by capped-precision iteration.
    OrbitValuation(OrbitValuationArgs),
    /// Count solutions of y 2^(2^n) - x = 3^i 5^j over a grid.
    FermatSweep(FermatArgs),
    /// Build and scan the adversarial family member m.
    Adversarial(AdversarialArgs),
    /// Lipschitz constant at a place, checked on random pairs.
    Lipschitz(LipschitzArgs),
    /// Parameters of the explicit z^2 argument.
    ParamsZ2(ParamsZ2Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Scan(_) => "scan",
            Command::QuasiScan(_) => "quasi-scan",
            Command::Bound(_) => "bound",
            Command::Canheight(_) => "canheight",
            Command::Height(_) => "height",
            Command::Lte(_) => "lte",
            Command::OrbitValuation(_) => "orbit-valuation",
            Command::FermatSweep(_) => "fermat-sweep",
            Command::Adversarial(_) => "adversarial",
            Command::Lipschitz(_) => "lipschitz",
            Command::ParamsZ2(_) => "params-z2",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let name = cli.command.name();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Missing(_)) {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_help());
                }
            }
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let start = Instant::now();
    let name = cli.command.name();
    let file = FileConfig::load(cli.config.as_deref(), name)?;
    let flags = Common { format: cli.format, output: cli.output.clone(), execution: cli.execution, seed: cli.seed };
    let common = file.common(&flags)?;
    let ctx = Context {
        execution: common.execution.unwrap_or_default(),
        seed: common.seed.unwrap_or(0),
    };
    let (args, outcome) = match &cli.command {
        Command::Scan(a) => resolve_and_run(&file, a, &ctx, cmd_scan)?,
        Command::QuasiScan(a) => resolve_and_run(&file, a, &ctx, cmd_quasi)?,
        Command::Bound(a) => resolve_and_run(&file, a, &ctx, cmd_bound)?,
        Command::Canheight(a) => resolve_and_run(&file, a, &ctx, cmd_canheight)?,
        Command::Height(a) => resolve_and_run(&file, a, &ctx, cmd_height)?,
        Command::Lte(a) => resolve_and_run(&file, a, &ctx, cmd_lte)?,
        Command::OrbitValuation(a) => resolve_and_run(&file, a, &ctx, cmd_orbit_valuation)?,
        Command::FermatSweep(a) => resolve_and_run(&file, a, &ctx, cmd_fermat)?,
        Command::Adversarial(a) => resolve_and_run(&file, a, &ctx, cmd_adversarial)?,
        Command::Lipschitz(a) => resolve_and_run(&file, a, &ctx, cmd_lipschitz)?,
        Command::ParamsZ2(a) => resolve_and_run(&file, a, &ctx, cmd_params_z2)?,
    };
    let format = common.format.unwrap_or_default();
    let mut config = serde_json::json!({
        "command": name,
        "format": format,
        "execution": ctx.execution,
        "seed": ctx.seed,
    });
    if let Some(out) = &common.output {
        config["output"] = out.clone().into();
    }
    if let (Some(c), serde_json::Value::Object(a)) = (config.as_object_mut(), args) {
        c.extend(a);
    }
    let text = report::render(name, &config, &outcome, format, start.elapsed());
    match &common.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Invalid(format!("cannot write {path}: {e}")))?,
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(outcome.status.exit_code() as u8)
}
