//! Field environment checks and the dipole estimate of the pole-piece gradient.
//!
//! `cargo run --example pole_piece`

use std::io::Write;

use massive::magnetics::{environment_report, sphere_field, sphere_gradient, FieldEnvironment, GradientModel, PolePieceModel};

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let model = PolePieceModel::default();
    let env = FieldEnvironment::default();
    let report = environment_report(&env, &model)?;
    writeln!(out, "saturated {} aligned {} stable {}", report.saturation_ok, report.alignment_ok, report.stability_ok)?;
    writeln!(out, "configured gradient     {:.0} T/m", report.configured_gradient)?;
    writeln!(out, "dipole, single surface  {:.1} T/m", report.dipole_single_surface)?;
    writeln!(out, "dipole, pair midpoint   {:.1} T/m", report.dipole_pair_midpoint)?;
    writeln!(out, "configured / dipole     {:.2}", report.dipole_discrepancy())?;

    for r in [25e-6, 40e-6, 60e-6] {
        writeln!(
            out,
            "r = {:.0} um: B = {:.4} T, dB/dr = {:.1} T/m",
            r * 1e6,
            sphere_field(&model, r)?,
            sphere_gradient(&model, r)?
        )?;
    }

    let dipole = FieldEnvironment {
        gradient_model: GradientModel::DipoleSphere,
        ..env
    };
    writeln!(out, "gradient under the dipole model {:.1} T/m", environment_report(&dipole, &model)?.gradient_used)?;
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
