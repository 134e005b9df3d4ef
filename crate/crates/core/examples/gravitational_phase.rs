//! Gravitational phase of the closed loop: cubic in time, independent of mass.
//!
//! `cargo run --example gravitational_phase`

use std::io::Write;

use massive::interferometer::{arm_acceleration, gravitational_phase, propagate_arms, solve_closure, TiltSpec};
use massive::particle::{Diamond, DEFAULT_NV_YIELD};
use massive::spin::Basis;

fn phase(diamond: &Diamond, t1: f64, tilt: &TiltSpec) -> massive::Result<f64> {
    let a = arm_acceleration(diamond, 1e4, Basis::SingleQuantum)?;
    let traj = propagate_arms(a, &solve_closure(t1)?, 20_001, false, None)?;
    gravitational_phase(&traj, diamond, tilt)
}

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let diamond = Diamond::build(0.5e-6, 3510.0, 20.0, DEFAULT_NV_YIELD)?;
    let tilt = TiltSpec::default();
    for t1 in [0.025, 0.05, 0.1] {
        writeln!(out, "T = {:.2} s: phase {:.4e} rad", 4.0 * t1, phase(&diamond, t1, &tilt)?)?;
    }
    let heavy = diamond.with_mass_scaled(10.0)?;
    writeln!(
        out,
        "mass x10 at T = 0.4 s: {:.4e} rad",
        phase(&heavy, 0.1, &tilt)?
    )?;
    for cos_theta in [1e-10, 1e-9, 1e-8] {
        writeln!(
            out,
            "cos(theta) = {cos_theta:e}: {:.4e} rad",
            phase(&diamond, 0.1, &TiltSpec::new(cos_theta)?)?
        )?;
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
