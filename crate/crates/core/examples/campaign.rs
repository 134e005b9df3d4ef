//! End-to-end campaign: diamond loading, drops, readout and fringe fit.
//!
//! `cargo run --release --example campaign`

use std::io::Write;

use massive::protocol::run_campaign;
use massive::scenario::Scenario;

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let mut scenario = Scenario::default();
    scenario.jitter.errors.time = 1e-5;
    scenario.protocol.odds.odmr = 0.9;
    let report = run_campaign(&scenario)?;
    report.write_text(&mut *out)?;

    scenario.vacuum.uhv_pressure = Some(1e-4);
    match run_campaign(&scenario) {
        Err(e) => writeln!(out, "at 1e-6 mbar: {e}")?,
        Ok(_) => writeln!(out, "at 1e-6 mbar: unexpectedly coherent")?,
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
