//! Differential pumping, gas collisions during the fall and helium cooling.
//!
//! `cargo run --example vacuum_budget`

use std::io::Write;

use massive::particle::{Diamond, DEFAULT_NV_YIELD};
use massive::physical_base::{convert_pressure, PressureUnit};
use massive::vacuum::{
    collision_expectation, cooling_report, effusion_flux, pressure_for_collisions, steady_uhv_pressure, Aperture,
    GasCondition,
};

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let mbar = |p: f64| convert_pressure(p, PressureUnit::Millibar, PressureUnit::Pascal);
    let to_mbar = |p: f64| convert_pressure(p, PressureUnit::Pascal, PressureUnit::Millibar);
    let diamond = Diamond::build(0.5e-6, 3510.0, 20.0, DEFAULT_NV_YIELD)?;

    let trap = mbar(7e-8);
    let uhv = steady_uhv_pressure(trap, 25e-6, 80e-3)?;
    writeln!(out, "UHV pressure {:.3e} mbar (ratio {:.4e})", to_mbar(uhv), trap / uhv)?;

    let trap_gas = GasCondition::helium(trap, 5.0)?;
    let uhv_gas = trap_gas.with_pressure(uhv)?;
    let j_in = effusion_flux(&trap_gas, &Aperture::new(25e-6)?)?;
    let j_out = effusion_flux(&uhv_gas, &Aperture::new(80e-3)?)?;
    writeln!(out, "flux in {j_in:.4e} mol/s, out {j_out:.4e} mol/s")?;

    let budget = collision_expectation(&uhv_gas, diamond.radius(), 0.4)?;
    writeln!(
        out,
        "expected collisions in 0.4 s: {:.3} (coherent {})",
        budget.expected_collisions, budget.coherent_ok
    )?;
    writeln!(
        out,
        "pressure for one collision: {:.3e} mbar",
        to_mbar(pressure_for_collisions(&uhv_gas, diamond.radius(), 0.4, 1.0)?)
    )?;

    let cooling = cooling_report(&diamond, &GasCondition::helium(mbar(100.0), 5.0)?, 0.1, 300.0)?;
    writeln!(out, "helium mean speed {:.2} m/s", trap_gas.mean_speed()?)?;
    writeln!(out, "impinged helium   {:.3e} kg", cooling.impinged_mass)?;
    writeln!(out, "C_He {:.3e} J/K vs C_diamond {:.3e} J/K -> cooled {}", cooling.helium_heat_capacity, cooling.diamond_heat_capacity, cooling.cooled_ok)?;
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
