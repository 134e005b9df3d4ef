//! Reading a scenario file and printing its design budget.
//!
//! `cargo run --example scenario_file`

use std::io::Write;

use massive::scenario::parse_scenario;
use massive::toolkit::{budget, Format};

const TEXT: &str = "\
[diamond]
radius = 0.5 um

[vacuum]
trap_pressure = 7e-8 mbar
gas_temperature = 5 K

[readout]
kind = cryogenic
fidelity = 0.95
";

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let scenario = parse_scenario(TEXT)?;
    let report = budget(&scenario)?.render(Format::Text)?;
    write!(out, "{}", report.body)?;
    writeln!(out, "all gates pass: {}", report.gates_ok)?;

    match parse_scenario("[diamond]\nradius = -1 um\n") {
        Err(e) => writeln!(out, "rejected: {e}")?,
        Ok(_) => writeln!(out, "accepted a negative radius")?,
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
