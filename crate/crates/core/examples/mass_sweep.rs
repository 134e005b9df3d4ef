//! Separation, phase and readout cost as a function of diamond size.
//!
//! `cargo run --release --example mass_sweep`

use std::io::Write;

use massive::scenario::Scenario;
use massive::toolkit::{render_sweep, sweep, Format, SeedPolicy, SweepSpec, SweepValues};

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let spec = SweepSpec {
        path: "diamond.radius".into(),
        values: SweepValues::List(vec![0.25e-6, 0.5e-6, 1.0e-6]),
        seed_policy: SeedPolicy::PerPoint,
    };
    let mut scenario = Scenario::default();
    scenario.jitter.errors.time = 1e-5;
    let rows = sweep(&scenario, &spec)?;
    write!(out, "{}", render_sweep(&spec.path, &rows, Format::Text)?.body)?;
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
