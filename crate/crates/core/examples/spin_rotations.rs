//! Pulse rotations on the Bloch sphere and the ideal CPMG train.
//!
//! `cargo run --example spin_rotations`

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use massive::spin::{apply_rotation, build_cpmg, Axis, Basis, SpinState};

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let ground = SpinState::ground(Basis::SingleQuantum);
    let split = apply_rotation(&ground, Axis::X, FRAC_PI_2)?;
    writeln!(out, "(pi/2)_x |0>  -> bloch {:?}", split.bloch().0)?;
    let echoed = apply_rotation(&split, Axis::Y, PI)?;
    writeln!(out, "then (pi)_y   -> bloch {:?}", echoed.bloch().0)?;

    for n in [1, 10, 10_000] {
        let seq = build_cpmg(n, 0.4)?;
        let end = seq.apply_ideal(&ground)?;
        writeln!(
            out,
            "CPMG n = {n:>5}: {} pulses, |y| = {:.15}, norm = {:.15}",
            seq.pulses().len(),
            end.bloch().y().abs(),
            end.norm_sqr()
        )?;
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
