//! Unit-tagged quantities at the text boundary.
//!
//! `cargo run --example units`

use std::io::Write;

use massive::physical_base::{mean_thermal_speed, parse_quantity, Quantity, Unit, HELIUM_MOLAR_MASS};

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    for text in ["0.5 um", "100 mbar", "7e-8 mbar", "50mT", "0.4 s"] {
        let (value, unit) = parse_quantity(text)?;
        writeln!(out, "{text:>10} -> {value:e} {}", unit.map_or("", |u| u.symbol()))?;
    }
    let a = Quantity::new(0.5e-6, Unit::Meter)?;
    let b = Quantity::new(0.4, Unit::Second)?;
    writeln!(out, "{a} + {b}: {}", a.checked_add(b).map_or_else(|e| e.to_string(), |q| q.to_string()))?;
    writeln!(out, "helium at 5 K: {:.2} m/s", mean_thermal_speed(5.0, HELIUM_MOLAR_MASS)?)?;
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
