//! Drops needed per data point for room-temperature and cryogenic readout.
//!
//! `cargo run --example readout_economics`

use std::io::Write;

use massive::readout::{drops_required, snr_from_fidelity, ReadoutModel};

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let room = ReadoutModel::room_temperature(0.03)?;
    let n_room = drops_required(&room, 10.0)?;
    writeln!(out, "room temperature (SNR 0.03): {n_room} drops")?;
    for fidelity in [0.8, 0.9, 0.95, 0.99] {
        let cryo = ReadoutModel::cryogenic(fidelity)?;
        let n = drops_required(&cryo, 10.0)?;
        writeln!(
            out,
            "cryogenic F = {fidelity}: SNR {:.3}, {n} drops, {:.0}x fewer",
            snr_from_fidelity(fidelity)?,
            n_room as f64 / n as f64
        )?;
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
