//! Command-line front end.
//!
//! Exit codes: 0 when every gate passes, 1 when a budget or protocol gate
//! fails, 2 for unusable input.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::scenario::{parse_scenario, Scenario};
use crate::toolkit::{self, Format, Output, SeedPolicy, SweepSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_GATE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SeedPolicyArg {
    Shared,
    PerPoint,
}

#[derive(Debug, Parser)]
#[command(name = "massive", version, about = "Design budgets and simulations for a spin-dependent microdiamond interferometer")]
struct Cli {
    /// Scenario file; defaults are used when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Also write the report as CSV to this path.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One-page design budget with pass/fail flags.
    Budget,
    /// Evaluate separation, phase, visibility and drops over one parameter.
    Sweep {
        /// Scenario field as section.key, e.g. diamond.radius.
        #[arg(long)]
        param: String,
        /// Comma-separated list or min:max:count grid; suffixes allowed.
        #[arg(long)]
        values: String,
        #[arg(long, value_enum, default_value = "per-point")]
        seed_policy: SeedPolicyArg,
    },
    /// Full protocol: diamond loading, drops, fringe scan and fit.
    Campaign,
    /// Solve the trajectory closure for the scenario's first pulse time.
    Closure {
        /// Overrides timing.t1, in seconds.
        #[arg(long)]
        t1: Option<f64>,
    },
    /// Visibility under the configured jitter and one-parameter scans.
    Sensitivity,
    /// Microwave antenna assignment for the CPMG train.
    Schedule,
}

fn load(cli: &Cli) -> Result<Scenario> {
    let mut scenario = match &cli.scenario {
        Some(path) => parse_scenario(&std::fs::read_to_string(path)?)?,
        None => Scenario::default(),
    };
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn render(scenario: &Scenario, command: &Command, format: Format) -> Result<Output> {
    match command {
        Command::Budget => toolkit::budget(scenario)?.render(format),
        Command::Sweep {
            param,
            values,
            seed_policy,
        } => {
            let spec = SweepSpec {
                path: param.clone(),
                values: SweepSpec::parse_values(values)?,
                seed_policy: match seed_policy {
                    SeedPolicyArg::Shared => SeedPolicy::Shared,
                    SeedPolicyArg::PerPoint => SeedPolicy::PerPoint,
                },
            };
            let rows = toolkit::sweep(scenario, &spec)?;
            toolkit::render_sweep(&spec.path, &rows, format)
        }
        Command::Campaign => toolkit::campaign(scenario, format),
        Command::Closure { t1 } => {
            let s = match t1 {
                Some(t) => scenario.with_value("timing.t1", *t)?,
                None => scenario.clone(),
            };
            toolkit::closure(&s, format)
        }
        Command::Sensitivity => toolkit::sensitivity(scenario, format),
        Command::Schedule => toolkit::schedule(scenario, format),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<bool> {
    let scenario = load(cli)?;
    let format = match cli.format {
        FormatArg::Text => Format::Text,
        FormatArg::Csv => Format::Csv,
    };
    let shown = render(&scenario, &cli.command, format)?;
    stdout.write_all(shown.body.as_bytes())?;
    if let Some(path) = &cli.output {
        let csv = if format == Format::Csv {
            shown.clone()
        } else {
            render(&scenario, &cli.command, Format::Csv)?
        };
        std::fs::write(path, csv.body)?;
    }
    Ok(shown.gates_ok)
}

/// Runs the CLI with explicit arguments and streams; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_GATE,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::GateFailed { .. } | Error::Unclosed { .. } => EXIT_GATE,
                _ => EXIT_INPUT,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (u8, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("massive").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn closure_command() {
        let (code, out, _) = run_args(&["closure", "--t1", "0.1"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("t1 = 0.100000000 s"));
        assert!(out.contains("t2 = 0.300000000 s"));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_args(&["fly"]).0, EXIT_INPUT);
        assert_eq!(run_args(&["budget", "--format", "xml"]).0, EXIT_INPUT);
        assert_eq!(run_args(&["budget", "--scenario", "/nonexistent/file"]).0, EXIT_INPUT);
        assert_eq!(run_args(&["sweep", "--param", "diamond.colour", "--values", "1"]).0, EXIT_INPUT);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }
}
