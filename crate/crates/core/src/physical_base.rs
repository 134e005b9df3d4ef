//! Physical constants, unit-tagged quantities and gas-kinetic primitives.

use std::fmt;
use std::str::FromStr;

use crate::error::{positive, require, Error, Result};

/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.2740e-24;
/// Reduced Planck constant, J·s.
pub const REDUCED_PLANCK: f64 = 1.0546e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.3807e-23;
/// Molar gas constant, J/(mol·K).
pub const GAS_CONSTANT: f64 = 8.314;
/// Standard gravitational acceleration, m/s².
pub const G_EARTH: f64 = 9.81;
/// NV⁻ electron g-factor.
pub const NV_G_FACTOR: f64 = 2.003;
/// kg/mol.
pub const HELIUM_MOLAR_MASS: f64 = 4.003e-3;
/// Mass of one carbon atom, kg.
pub const CARBON_ATOMIC_MASS: f64 = 1.993e-26;
/// kg/m³.
pub const DIAMOND_DENSITY: f64 = 3510.0;
/// K.
pub const DIAMOND_DEBYE_TEMPERATURE: f64 = 2220.0;

/// Avogadro's number implied by the gas and Boltzmann constants above.
///
/// Deriving it (rather than using the CODATA value) keeps molar and
/// per-particle kinetic formulas exactly consistent with each other.
pub const AVOGADRO: f64 = GAS_CONSTANT / BOLTZMANN;

/// The closed set of units carried by [`Quantity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Meter,
    Second,
    Kilogram,
    Kelvin,
    Tesla,
    TeslaPerMeter,
    Pascal,
    JoulePerKelvin,
    Radian,
    Mole,
    Watt,
    Dimensionless,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Meter => "m",
            Unit::Second => "s",
            Unit::Kilogram => "kg",
            Unit::Kelvin => "K",
            Unit::Tesla => "T",
            Unit::TeslaPerMeter => "T/m",
            Unit::Pascal => "Pa",
            Unit::JoulePerKelvin => "J/K",
            Unit::Radian => "rad",
            Unit::Mole => "mol",
            Unit::Watt => "W",
            Unit::Dimensionless => "",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::Dimensionless => f.write_str("1"),
            u => f.write_str(u.symbol()),
        }
    }
}

/// Recognised textual suffixes and their SI scale factors.
const SUFFIXES: &[(&str, Unit, f64)] = &[
    ("m", Unit::Meter, 1.0),
    ("cm", Unit::Meter, 1e-2),
    ("mm", Unit::Meter, 1e-3),
    ("um", Unit::Meter, 1e-6),
    ("μm", Unit::Meter, 1e-6),
    ("µm", Unit::Meter, 1e-6),
    ("nm", Unit::Meter, 1e-9),
    ("s", Unit::Second, 1.0),
    ("ms", Unit::Second, 1e-3),
    ("us", Unit::Second, 1e-6),
    ("μs", Unit::Second, 1e-6),
    ("µs", Unit::Second, 1e-6),
    ("ns", Unit::Second, 1e-9),
    ("kg", Unit::Kilogram, 1.0),
    ("K", Unit::Kelvin, 1.0),
    ("mK", Unit::Kelvin, 1e-3),
    ("T", Unit::Tesla, 1.0),
    ("mT", Unit::Tesla, 1e-3),
    ("T/m", Unit::TeslaPerMeter, 1.0),
    ("Pa", Unit::Pascal, 1.0),
    ("mbar", Unit::Pascal, 100.0),
    ("atm", Unit::Pascal, 101_325.0),
    ("J/K", Unit::JoulePerKelvin, 1.0),
    ("rad", Unit::Radian, 1.0),
    ("mol", Unit::Mole, 1.0),
    ("W", Unit::Watt, 1.0),
    ("mW", Unit::Watt, 1e-3),
];

/// A finite value tagged with one unit from [`Unit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    value: f64,
    unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Result<Self> {
        require(value.is_finite(), "quantity value", "finite", value)?;
        Ok(Self { value, unit })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    fn same_unit(&self, other: &Quantity) -> Result<()> {
        if self.unit == other.unit {
            Ok(())
        } else {
            Err(Error::UnitMismatch {
                left: self.unit,
                right: other.unit,
            })
        }
    }

    pub fn checked_add(self, other: Quantity) -> Result<Quantity> {
        self.same_unit(&other)?;
        Quantity::new(self.value + other.value, self.unit)
    }

    pub fn checked_sub(self, other: Quantity) -> Result<Quantity> {
        self.same_unit(&other)?;
        Quantity::new(self.value - other.value, self.unit)
    }

    /// Dimensionless ratio of two like quantities.
    pub fn ratio(self, other: Quantity) -> Result<f64> {
        self.same_unit(&other)?;
        Ok(self.value / other.value)
    }

    pub fn scale(self, factor: f64) -> Result<Quantity> {
        Quantity::new(self.value * factor, self.unit)
    }

    /// The SI value, provided the quantity carries `unit`.
    pub fn expect_unit(&self, unit: Unit) -> Result<f64> {
        if self.unit == unit {
            Ok(self.value)
        } else {
            Err(Error::UnitMismatch {
                left: self.unit,
                right: unit,
            })
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Unit::Dimensionless => write!(f, "{:e}", self.value),
            u => write!(f, "{:e} {}", self.value, u.symbol()),
        }
    }
}

/// Parses `"<number> [suffix]"`.
///
/// A bare number yields `None` for the unit so the caller can interpret it in
/// the SI unit it expects.
pub fn parse_quantity(text: &str) -> Result<(f64, Option<Unit>)> {
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_whitespace())
        .map(|i| (&text[..i], text[i..].trim()))
        .unwrap_or_else(|| {
            // allow "0.5um": split at the first char that cannot continue a number
            let idx = text
                .char_indices()
                .find(|&(i, c)| !is_number_char(text, i, c))
                .map(|(i, _)| i)
                .unwrap_or(text.len());
            (&text[..idx], &text[idx..])
        });
    let (number, suffix) = split;
    let value: f64 = number
        .parse()
        .map_err(|_| Error::UnknownUnit(format!("unparsable number `{number}`")))?;
    if !value.is_finite() {
        return Err(Error::InvalidInput {
            name: "number",
            requirement: "finite",
            value,
        });
    }
    if suffix.is_empty() {
        return Ok((value, None));
    }
    let (_, unit, factor) = SUFFIXES
        .iter()
        .find(|(s, _, _)| *s == suffix)
        .ok_or_else(|| Error::UnknownUnit(suffix.to_string()))?;
    Ok((value * factor, Some(*unit)))
}

fn is_number_char(text: &str, i: usize, c: char) -> bool {
    if c.is_ascii_digit() || c == '.' || c == '+' || c == '-' {
        return true;
    }
    // exponent marker only when followed by a digit or sign
    if c == 'e' || c == 'E' {
        return text[i + 1..]
            .chars()
            .next()
            .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+');
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureUnit {
    Pascal,
    Millibar,
    Atmosphere,
}

impl PressureUnit {
    fn pascals(self) -> f64 {
        match self {
            PressureUnit::Pascal => 1.0,
            PressureUnit::Millibar => 100.0,
            PressureUnit::Atmosphere => 101_325.0,
        }
    }
}

impl FromStr for PressureUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Pa" => Ok(PressureUnit::Pascal),
            "mbar" => Ok(PressureUnit::Millibar),
            "atm" => Ok(PressureUnit::Atmosphere),
            other => Err(Error::UnknownUnit(other.to_string())),
        }
    }
}

pub fn convert_pressure(value: f64, from: PressureUnit, to: PressureUnit) -> f64 {
    if from == to {
        return value;
    }
    value * from.pascals() / to.pascals()
}

/// Mean speed of a Maxwell-Boltzmann gas, `sqrt(8RT / (π M))`.
pub fn mean_thermal_speed(temperature: f64, molar_mass: f64) -> Result<f64> {
    positive("temperature", temperature)?;
    positive("molar mass", molar_mass)?;
    Ok((8.0 * GAS_CONSTANT * temperature / (std::f64::consts::PI * molar_mass)).sqrt())
}

/// Particle number density of an ideal gas, m⁻³.
pub fn number_density(pressure: f64, temperature: f64) -> Result<f64> {
    require(pressure >= 0.0, "pressure", ">= 0", pressure)?;
    positive("temperature", temperature)?;
    Ok(pressure / (BOLTZMANN * temperature))
}
