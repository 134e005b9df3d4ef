//! Coherence under slow Ornstein-Uhlenbeck detuning noise, with and without
//! decoupling pulses, plus microwave pulse sizing.
//!
//! `cargo run --release --example dynamical_decoupling`

use std::io::Write;

use massive::spin::{build_cpmg, pi_pulse_duration, simulate_dephasing, DephasingNoise, PulseSequence};

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let total = 1e-3;
    let noise = DephasingNoise::ornstein_uhlenbeck(2.0 / total, 100.0 * total / 32.0, 11);
    let dt = total / 256.0;

    let free = simulate_dephasing(&PulseSequence::free_induction(total)?, &noise, 2000, dt)?;
    writeln!(out, "n =  0: W = {free:.4}")?;
    for n in [4, 16, 32] {
        let w = simulate_dephasing(&build_cpmg(n, total)?, &noise, 2000, dt)?;
        writeln!(out, "n = {n:>2}: W = {w:.4}")?;
    }

    for (power, distance) in [(10.0, 50e-6), (40.0, 50e-6), (10.0, 100e-6)] {
        writeln!(
            out,
            "pi pulse at {power} W, {:.0} um: {:.1} ns",
            distance * 1e6,
            pi_pulse_duration(power, distance)? * 1e9
        )?;
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
