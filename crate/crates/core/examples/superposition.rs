//! Spatial superposition size for the default microdiamond.
//!
//! `cargo run --example superposition`

use std::io::Write;

use massive::interferometer::{arm_acceleration, ballistic_separation};
use massive::magnetics::DEFAULT_GRADIENT;
use massive::particle::{Diamond, DEFAULT_NITROGEN_PPB, DEFAULT_NV_YIELD};
use massive::physical_base::DIAMOND_DENSITY;
use massive::spin::Basis;

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let diamond = Diamond::build(0.5e-6, DIAMOND_DENSITY, DEFAULT_NITROGEN_PPB, DEFAULT_NV_YIELD)?;
    writeln!(out, "mass        {:.3e} kg", diamond.mass())?;
    writeln!(out, "atoms       {:.3e}", diamond.atom_count())?;
    writeln!(out, "nitrogen    {:.0}", diamond.nitrogen_count())?;
    writeln!(out, "expected NV {:.2}", diamond.expected_nv())?;

    for basis in [Basis::SingleQuantum, Basis::DoubleQuantum] {
        let a = arm_acceleration(&diamond, DEFAULT_GRADIENT, basis)?;
        writeln!(
            out,
            "{basis:?}: a = {a:.4e} m/s^2, s(0.2 s) = {:.3} um",
            ballistic_separation(a, 0.2)? * 1e6
        )?;
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
