//! Sectioned `key = value` scenario files.
//!
//! ```text
//! # comments run to the end of a line
//! [diamond]
//! radius = 0.5 um
//!
//! [vacuum]
//! trap_pressure = 7e-8 mbar
//! ```
//!
//! Every field is described once in a static table that drives parsing,
//! serialization and sweep-path lookup, so the three can never disagree.
//! Numbers without a suffix are read in SI units. Serialization writes SI
//! values in shortest round-trip scientific notation.

use std::fmt;

use crate::error::{Error, Result};
use crate::interferometer::{FractionalErrors, TiltSpec};
use crate::magnetics::{environment_report, Arrangement, FieldEnvironment, GradientModel, PolePieceModel};
use crate::particle::{Diamond, DEFAULT_NITROGEN_PPB, DEFAULT_NV_YIELD};
use crate::physical_base::{parse_quantity, Unit, DIAMOND_DENSITY, HELIUM_MOLAR_MASS};
use crate::protocol::{AntennaLayout, DropPlan, GateOdds};
use crate::readout::{ReadoutKind, ReadoutModel};
use crate::spin::Basis;
use crate::vacuum::{steady_uhv_pressure, GasCondition};

const MBAR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DiamondSpec {
    pub radius: f64,
    pub density: f64,
    pub nitrogen_ppb: f64,
    pub nv_yield: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSpec {
    pub basis: Basis,
    /// Decoupled spin coherence time, s.
    pub coherence_time: f64,
    pub cpmg_pulses: u64,
    pub microwave_power: f64,
    /// OU detuning amplitude for dephasing studies, rad/s.
    pub noise_amplitude: f64,
    pub noise_correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSpec {
    pub t1: f64,
    pub samples: u64,
    pub strict_dd_forces: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumSpec {
    pub gas_molar_mass: f64,
    pub gas_temperature: f64,
    pub trap_pressure: f64,
    pub uhv_radius: f64,
    /// Overrides the effusion estimate of the UHV pressure.
    pub uhv_pressure: Option<f64>,
    pub cooling_pressure: f64,
    pub cooling_duration: f64,
    pub initial_temperature: f64,
    /// Diamond internal temperature after cooling, K.
    pub internal_temperature: f64,
    pub purge_start: f64,
    pub purge_final: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JitterSpec {
    pub errors: FractionalErrors,
    /// Control level used for the pseudo-random-phase check.
    pub control_budget: f64,
    pub drops: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub points: usize,
    /// Drop-time increment between scan points, s.
    pub step: f64,
    pub drops_per_point: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    pub odds: GateOdds,
    pub max_attempts: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub diamond: DiamondSpec,
    pub magnet: PolePieceModel,
    pub field: FieldEnvironment,
    pub spin: SpinSpec,
    pub timing: TimingSpec,
    pub tilt: TiltSpec,
    pub vacuum: VacuumSpec,
    pub readout: ReadoutModel,
    pub target_snr: f64,
    pub jitter: JitterSpec,
    pub drop: DropPlan,
    pub antenna: AntennaLayout,
    pub scan: ScanSpec,
    pub protocol: ProtocolSpec,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            diamond: DiamondSpec {
                radius: 0.5e-6,
                density: DIAMOND_DENSITY,
                nitrogen_ppb: DEFAULT_NITROGEN_PPB,
                nv_yield: DEFAULT_NV_YIELD,
            },
            magnet: PolePieceModel::default(),
            field: FieldEnvironment::default(),
            spin: SpinSpec {
                basis: Basis::SingleQuantum,
                coherence_time: 0.5,
                cpmg_pulses: 10_000,
                microwave_power: 10.0,
                noise_amplitude: 0.0,
                noise_correlation: 1e-3,
            },
            timing: TimingSpec {
                t1: 0.1,
                samples: 20_001,
                strict_dd_forces: false,
            },
            tilt: TiltSpec::default(),
            vacuum: VacuumSpec {
                gas_molar_mass: HELIUM_MOLAR_MASS,
                gas_temperature: 5.0,
                trap_pressure: 7e-8 * MBAR,
                uhv_radius: 80e-3,
                uhv_pressure: None,
                cooling_pressure: 100.0 * MBAR,
                cooling_duration: 0.1,
                initial_temperature: 300.0,
                internal_temperature: 5.0,
                purge_start: 101_325.0,
                purge_final: 1e-6 * MBAR,
            },
            readout: ReadoutModel::cryogenic(crate::readout::CRYOGENIC_FIDELITY).expect("default readout"),
            target_snr: 10.0,
            jitter: JitterSpec {
                errors: FractionalErrors::default(),
                control_budget: 1e-5,
                drops: 20_000,
            },
            drop: DropPlan::default(),
            antenna: AntennaLayout::default(),
            scan: ScanSpec {
                points: 41,
                step: 2e-6,
                drops_per_point: 500,
            },
            protocol: ProtocolSpec {
                odds: GateOdds::default(),
                max_attempts: 10_000_000,
            },
            seed: 1,
        }
    }
}

impl Scenario {
    pub fn build_diamond(&self) -> Result<Diamond> {
        let d = &self.diamond;
        Diamond::build(d.radius, d.density, d.nitrogen_ppb, d.nv_yield)
    }

    /// Gradient seen by the interferometer under the configured gradient model.
    pub fn gradient(&self) -> Result<f64> {
        Ok(environment_report(&self.field, &self.magnet)?.gradient_used)
    }

    pub fn cooling_gas(&self) -> Result<GasCondition> {
        let v = &self.vacuum;
        GasCondition::new(v.gas_molar_mass, v.cooling_pressure, v.gas_temperature)
    }

    /// UHV pressure: the override if set, otherwise the effusion balance
    /// through the drop hole.
    pub fn uhv_pressure(&self) -> Result<f64> {
        match self.vacuum.uhv_pressure {
            Some(p) => Ok(p),
            None => steady_uhv_pressure(self.vacuum.trap_pressure, self.drop.hole_radius, self.vacuum.uhv_radius),
        }
    }

    pub fn uhv_gas(&self) -> Result<GasCondition> {
        let v = &self.vacuum;
        GasCondition::new(v.gas_molar_mass, self.uhv_pressure()?, v.gas_temperature)
    }

    /// Chamber pressures through the purge, Pa.
    pub fn purge_schedule(&self) -> Vec<f64> {
        vec![self.vacuum.purge_start, self.vacuum.cooling_pressure, self.vacuum.purge_final]
    }

    /// Cross-field validation by the owning modules' constructors.
    pub fn validate(&self) -> Result<()> {
        self.build_diamond()?;
        self.magnet.validate()?;
        self.field.validate()?;
        TiltSpec::new(self.tilt.cos_theta)?;
        self.cooling_gas()?;
        self.uhv_gas()?;
        self.readout.validate()?;
        self.drop.validate()?;
        self.antenna.validate()?;
        self.protocol.odds.validate()?;
        crate::interferometer::InterferometerTiming::symmetric(self.timing.t1)?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_scenario(text)
    }

    /// Same scenario with one field replaced, addressed as `section.key`.
    pub fn with_value(&self, path: &str, value: f64) -> Result<Self> {
        let field = lookup(path)?;
        let v = match field.kind {
            Kind::Real(_) | Kind::Plain | Kind::OptReal(_) => Value::Real(value),
            Kind::Int => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Sweep(format!("`{path}` takes a non-negative integer, got {value}")));
                }
                Value::Int(value as u64)
            }
            Kind::Choice(_) | Kind::Bool => {
                return Err(Error::Sweep(format!("`{path}` is not a numeric field")));
            }
        };
        if let Err(message) = field.constraint.check(&v) {
            return Err(Error::Sweep(format!("`{path}` {message}")));
        }
        let mut next = self.clone();
        (field.set)(&mut next, v).map_err(|m| Error::Sweep(format!("`{path}`: {m}")))?;
        next.validate()?;
        Ok(next)
    }

    /// Current numeric value of a sweepable field.
    pub fn value_at(&self, path: &str) -> Result<f64> {
        match (lookup(path)?.get)(self) {
            Value::Real(v) => Ok(v),
            Value::Int(v) => Ok(v as f64),
            _ => Err(Error::Sweep(format!("`{path}` is not a numeric field"))),
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for f in FIELDS {
            if f.section != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{}]\n", f.section));
                section = f.section;
            }
            out.push_str(&format!("{} = {}\n", f.key, format_value(f, &(f.get)(self))));
        }
        out
    }
}

fn lookup(path: &str) -> Result<&'static Field> {
    let (section, key) = path
        .split_once('.')
        .ok_or_else(|| Error::Sweep(format!("parameter path `{path}` must be section.key")))?;
    FIELDS
        .iter()
        .find(|f| f.section == section && f.key == key)
        .ok_or_else(|| Error::Sweep(format!("unknown parameter path `{path}`")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Every problem found in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioError {
    pub errors: Vec<LineError>,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            if e.line == 0 {
                write!(f, "scenario: {}", e.message)?;
            } else {
                write!(f, "line {}: {}", e.line, e.message)?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// SI value; a suffix must belong to the unit.
    Real(Unit),
    /// Bare number only, in the SI unit documented by the field.
    Plain,
    /// Like `Real`, or the literal `auto`.
    OptReal(Unit),
    Int,
    Bool,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
enum Constraint {
    Any,
    Positive,
    NonNegative,
    UnitInterval,
    AtLeast(u64),
}

impl Constraint {
    fn check(self, value: &Value) -> std::result::Result<(), String> {
        let x = match value {
            Value::Real(x) => *x,
            Value::Int(n) => *n as f64,
            _ => return Ok(()),
        };
        let ok = match self {
            Constraint::Any => true,
            Constraint::Positive => x > 0.0,
            Constraint::NonNegative => x >= 0.0,
            Constraint::UnitInterval => (0.0..=1.0).contains(&x),
            Constraint::AtLeast(n) => x >= n as f64,
        };
        if ok {
            return Ok(());
        }
        Err(match self {
            Constraint::Any => unreachable!(),
            Constraint::Positive => format!("must be > 0, got {x:e}"),
            Constraint::NonNegative => format!("must be >= 0, got {x:e}"),
            Constraint::UnitInterval => format!("must be in [0, 1], got {x:e}"),
            Constraint::AtLeast(n) => format!("must be >= {n}, got {x}"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Real(f64),
    Int(u64),
    Bool(bool),
    Text(&'static str),
    Auto,
}

type Setter = fn(&mut Scenario, Value) -> std::result::Result<(), String>;

struct Field {
    section: &'static str,
    key: &'static str,
    kind: Kind,
    constraint: Constraint,
    get: fn(&Scenario) -> Value,
    set: Setter,
}

macro_rules! real {
    ($section:literal, $key:literal, $unit:expr, $c:expr, $($path:tt).+) => {
        Field {
            section: $section,
            key: $key,
            kind: Kind::Real($unit),
            constraint: $c,
            get: |s| Value::Real(s.$($path).+),
            set: |s, v| {
                if let Value::Real(x) = v {
                    s.$($path).+ = x;
                }
                Ok(())
            },
        }
    };
}

macro_rules! plain {
    ($section:literal, $key:literal, $c:expr, $($path:tt).+) => {
        Field {
            section: $section,
            key: $key,
            kind: Kind::Plain,
            constraint: $c,
            get: |s| Value::Real(s.$($path).+),
            set: |s, v| {
                if let Value::Real(x) = v {
                    s.$($path).+ = x;
                }
                Ok(())
            },
        }
    };
}

macro_rules! int {
    ($section:literal, $key:literal, $c:expr, $ty:ty, $($path:tt).+) => {
        Field {
            section: $section,
            key: $key,
            kind: Kind::Int,
            constraint: $c,
            get: |s| Value::Int(s.$($path).+ as u64),
            set: |s, v| {
                if let Value::Int(n) = v {
                    s.$($path).+ = <$ty>::try_from(n).map_err(|_| format!("{n} out of range"))?;
                }
                Ok(())
            },
        }
    };
}

static FIELDS: &[Field] = &[
    real!("diamond", "radius", Unit::Meter, Constraint::Positive, diamond.radius),
    plain!("diamond", "density", Constraint::Positive, diamond.density),
    plain!("diamond", "nitrogen_ppb", Constraint::NonNegative, diamond.nitrogen_ppb),
    plain!("diamond", "nv_yield", Constraint::UnitInterval, diamond.nv_yield),
    real!("magnet", "tip_radius", Unit::Meter, Constraint::Positive, magnet.tip_radius),
    real!("magnet", "surface_field", Unit::Tesla, Constraint::Positive, magnet.surface_field),
    real!("magnet", "gap", Unit::Meter, Constraint::Positive, magnet.gap),
    Field {
        section: "magnet",
        key: "arrangement",
        kind: Kind::Choice(&["single", "opposing_pair"]),
        constraint: Constraint::Any,
        get: |s| {
            Value::Text(match s.magnet.arrangement {
                Arrangement::Single => "single",
                Arrangement::OpposingPair => "opposing_pair",
            })
        },
        set: |s, v| {
            s.magnet.arrangement = if v == Value::Text("single") {
                Arrangement::Single
            } else {
                Arrangement::OpposingPair
            };
            Ok(())
        },
    },
    real!("field", "bias", Unit::Tesla, Constraint::NonNegative, field.bias_field),
    real!("field", "gradient", Unit::TeslaPerMeter, Constraint::NonNegative, field.gradient),
    Field {
        section: "field",
        key: "gradient_model",
        kind: Kind::Choice(&["configured", "dipole"]),
        constraint: Constraint::Any,
        get: |s| {
            Value::Text(match s.field.gradient_model {
                GradientModel::ConfiguredConstant => "configured",
                GradientModel::DipoleSphere => "dipole",
            })
        },
        set: |s, v| {
            s.field.gradient_model = if v == Value::Text("dipole") {
                GradientModel::DipoleSphere
            } else {
                GradientModel::ConfiguredConstant
            };
            Ok(())
        },
    },
    plain!("field", "stability", Constraint::NonNegative, field.run_to_run_stability),
    Field {
        section: "spin",
        key: "basis",
        kind: Kind::Choice(&["single_quantum", "double_quantum"]),
        constraint: Constraint::Any,
        get: |s| {
            Value::Text(match s.spin.basis {
                Basis::SingleQuantum => "single_quantum",
                Basis::DoubleQuantum => "double_quantum",
            })
        },
        set: |s, v| {
            s.spin.basis = if v == Value::Text("double_quantum") {
                Basis::DoubleQuantum
            } else {
                Basis::SingleQuantum
            };
            Ok(())
        },
    },
    real!("spin", "coherence_time", Unit::Second, Constraint::Positive, spin.coherence_time),
    int!("spin", "cpmg_pulses", Constraint::AtLeast(1), u64, spin.cpmg_pulses),
    real!("spin", "microwave_power", Unit::Watt, Constraint::Positive, spin.microwave_power),
    plain!("spin", "noise_amplitude", Constraint::NonNegative, spin.noise_amplitude),
    real!("spin", "noise_correlation", Unit::Second, Constraint::Positive, spin.noise_correlation),
    real!("timing", "t1", Unit::Second, Constraint::Positive, timing.t1),
    int!("timing", "samples", Constraint::AtLeast(10_000), u64, timing.samples),
    Field {
        section: "timing",
        key: "strict_dd_forces",
        kind: Kind::Bool,
        constraint: Constraint::Any,
        get: |s| Value::Bool(s.timing.strict_dd_forces),
        set: |s, v| {
            s.timing.strict_dd_forces = v == Value::Bool(true);
            Ok(())
        },
    },
    plain!("tilt", "cos_theta", Constraint::UnitInterval, tilt.cos_theta),
    plain!("vacuum", "gas_molar_mass", Constraint::Positive, vacuum.gas_molar_mass),
    real!("vacuum", "gas_temperature", Unit::Kelvin, Constraint::Positive, vacuum.gas_temperature),
    real!("vacuum", "trap_pressure", Unit::Pascal, Constraint::Positive, vacuum.trap_pressure),
    real!("vacuum", "uhv_radius", Unit::Meter, Constraint::Positive, vacuum.uhv_radius),
    Field {
        section: "vacuum",
        key: "uhv_pressure",
        kind: Kind::OptReal(Unit::Pascal),
        constraint: Constraint::NonNegative,
        get: |s| s.vacuum.uhv_pressure.map_or(Value::Auto, Value::Real),
        set: |s, v| {
            s.vacuum.uhv_pressure = match v {
                Value::Real(x) => Some(x),
                _ => None,
            };
            Ok(())
        },
    },
    real!("vacuum", "cooling_pressure", Unit::Pascal, Constraint::Positive, vacuum.cooling_pressure),
    real!("vacuum", "cooling_duration", Unit::Second, Constraint::Positive, vacuum.cooling_duration),
    real!("vacuum", "initial_temperature", Unit::Kelvin, Constraint::Positive, vacuum.initial_temperature),
    real!("vacuum", "internal_temperature", Unit::Kelvin, Constraint::Positive, vacuum.internal_temperature),
    real!("vacuum", "purge_start", Unit::Pascal, Constraint::Positive, vacuum.purge_start),
    real!("vacuum", "purge_final", Unit::Pascal, Constraint::Positive, vacuum.purge_final),
    Field {
        section: "readout",
        key: "kind",
        kind: Kind::Choice(&["room_temperature", "cryogenic"]),
        constraint: Constraint::Any,
        get: |s| {
            Value::Text(match s.readout.kind {
                ReadoutKind::RoomTemperature => "room_temperature",
                ReadoutKind::CryogenicSingleShot => "cryogenic",
            })
        },
        set: |s, v| {
            s.readout.kind = if v == Value::Text("room_temperature") {
                ReadoutKind::RoomTemperature
            } else {
                ReadoutKind::CryogenicSingleShot
            };
            Ok(())
        },
    },
    plain!("readout", "snr", Constraint::Positive, readout.single_shot_snr),
    plain!("readout", "fidelity", Constraint::UnitInterval, readout.fidelity),
    plain!("readout", "snr_cap", Constraint::Positive, readout.snr_cap),
    plain!("readout", "target_snr", Constraint::Positive, target_snr),
    plain!("jitter", "time", Constraint::NonNegative, jitter.errors.time),
    plain!("jitter", "gradient", Constraint::NonNegative, jitter.errors.gradient),
    plain!("jitter", "g_factor", Constraint::NonNegative, jitter.errors.g_factor),
    plain!("jitter", "control_budget", Constraint::NonNegative, jitter.control_budget),
    int!("jitter", "drops", Constraint::AtLeast(100), usize, jitter.drops),
    real!("drop", "height", Unit::Meter, Constraint::Positive, drop.height),
    real!("drop", "window", Unit::Second, Constraint::Positive, drop.window),
    real!("drop", "hole_radius", Unit::Meter, Constraint::Positive, drop.hole_radius),
    int!("antenna", "count", Constraint::AtLeast(1), usize, antenna.count),
    real!("antenna", "length", Unit::Meter, Constraint::Positive, antenna.length),
    real!("antenna", "standoff", Unit::Meter, Constraint::Positive, antenna.standoff),
    int!("scan", "points", Constraint::AtLeast(8), usize, scan.points),
    real!("scan", "step", Unit::Second, Constraint::Positive, scan.step),
    int!("scan", "drops_per_point", Constraint::AtLeast(1), u64, scan.drops_per_point),
    plain!("protocol", "mass_probability", Constraint::UnitInterval, protocol.odds.mass),
    plain!("protocol", "neutral_probability", Constraint::UnitInterval, protocol.odds.neutral),
    plain!("protocol", "odmr_probability", Constraint::UnitInterval, protocol.odds.odmr),
    int!("protocol", "max_attempts", Constraint::AtLeast(1), u64, protocol.max_attempts),
    int!("run", "seed", Constraint::Any, u64, seed),
];

fn format_value(field: &Field, value: &Value) -> String {
    match (value, field.kind) {
        (Value::Real(x), Kind::Real(u) | Kind::OptReal(u)) => format!("{x:e} {}", u.symbol()),
        (Value::Real(x), _) => format!("{x:e}"),
        (Value::Int(n), _) => n.to_string(),
        (Value::Bool(b), _) => b.to_string(),
        (Value::Text(t), _) => (*t).to_string(),
        (Value::Auto, _) => "auto".to_string(),
    }
}

fn parse_value(field: &Field, text: &str) -> std::result::Result<Value, String> {
    let unit_error = |e: Error| e.to_string();
    match field.kind {
        Kind::Real(unit) | Kind::OptReal(unit) => {
            if matches!(field.kind, Kind::OptReal(_)) && text == "auto" {
                return Ok(Value::Auto);
            }
            let (x, parsed) = parse_quantity(text).map_err(unit_error)?;
            match parsed {
                Some(u) if u != unit => Err(Error::UnitMismatch { left: u, right: unit }.to_string()),
                _ => Ok(Value::Real(x)),
            }
        }
        Kind::Plain => match parse_quantity(text).map_err(unit_error)? {
            (x, None) => Ok(Value::Real(x)),
            (_, Some(u)) => Err(format!("`{}` takes a bare number, found unit {u}", field.key)),
        },
        Kind::Int => text
            .parse::<u64>()
            .map(Value::Int)
            .map_err(|_| format!("`{text}` is not a non-negative integer")),
        Kind::Bool => match text {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("`{text}` is not true or false")),
        },
        Kind::Choice(options) => options
            .iter()
            .find(|o| **o == text)
            .map(|o| Value::Text(o))
            .ok_or_else(|| format!("`{text}` is not one of {}", options.join(", "))),
    }
}

/// Parses and validates a scenario; an empty text gives the defaults.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut scenario = Scenario::default();
    let mut errors = Vec::new();
    let mut section: Option<&str> = None;
    let mut seen: Vec<(&str, &str)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fail = |message: String| errors.push(LineError { line, message });
        if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let name = name.trim();
            match FIELDS.iter().find(|f| f.section == name) {
                Some(f) => section = Some(f.section),
                None => {
                    fail(format!("unknown section [{name}]"));
                    section = None;
                }
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            fail(format!("expected `key = value`, found `{content}`"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section else {
            fail(format!("`{key}` appears outside a known section"));
            continue;
        };
        let Some(field) = FIELDS.iter().find(|f| f.section == sec && f.key == key) else {
            fail(format!("unknown key `{key}` in [{sec}]"));
            continue;
        };
        if seen.contains(&(field.section, field.key)) {
            fail(format!("duplicate key `{key}` in [{sec}]"));
            continue;
        }
        seen.push((field.section, field.key));
        let result = parse_value(field, value)
            .and_then(|v| field.constraint.check(&v).map(|_| v))
            .and_then(|v| (field.set)(&mut scenario, v));
        if let Err(message) = result {
            fail(format!("[{sec}] {key}: {message}"));
        }
    }

    if errors.is_empty() {
        if let Err(e) = scenario.validate() {
            errors.push(LineError {
                line: 0,
                message: e.to_string(),
            });
        }
    }
    if errors.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError { errors }.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(parse_scenario("").unwrap(), Scenario::default());
        assert_eq!(parse_scenario("# only a comment\n\n").unwrap(), Scenario::default());
    }

    #[test]
    fn suffixes_are_applied() {
        let s = parse_scenario("[diamond]\nradius = 0.5 um\n[vacuum]\ntrap_pressure = 7e-8 mbar\n").unwrap();
        assert!((s.diamond.radius - 5e-7).abs() < 1e-20);
        assert!((s.vacuum.trap_pressure - 7e-6).abs() < 1e-20);
        let s = parse_scenario("[diamond]\nradius = 250nm\n").unwrap();
        assert!((s.diamond.radius - 2.5e-7).abs() < 1e-20);
    }

    #[test]
    fn every_bad_line_is_reported() {
        let text = "[diamond]\nradius = -1 um\ncolour = blue\n[nowhere]\nx = 1\n[timing]\nt1 = 3 K\n";
        let err = parse_scenario(text).unwrap_err();
        let Error::Scenario(e) = err else { panic!("{err:?}") };
        let lines: Vec<usize> = e.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5, 7]);
        let text = e.to_string();
        assert!(text.contains("line 2"));
        assert!(text.contains("unit mismatch"));
    }

    #[test]
    fn bare_fields_reject_units_and_ints_reject_fractions() {
        assert!(parse_scenario("[diamond]\ndensity = 3510 kg\n").is_err());
        assert!(parse_scenario("[scan]\npoints = 4.5\n").is_err());
        assert!(parse_scenario("[scan]\npoints = 4\n").is_err());
        assert!(parse_scenario("[readout]\nkind = warm\n").is_err());
        assert!(parse_scenario("radius = 1 um\n").is_err());
        assert!(parse_scenario("[diamond]\nradius = 1 um\nradius = 2 um\n").is_err());
    }

    #[test]
    fn cross_field_validation_runs() {
        // window longer than the free fall of the drop height
        let err = parse_scenario("[drop]\nwindow = 0.6 s\n").unwrap_err();
        assert!(err.to_string().contains("interferometry window"), "{err}");
        assert!(parse_scenario("[readout]\nfidelity = 0.5\n").is_err());
    }

    #[test]
    fn uhv_override() {
        let s = parse_scenario("[vacuum]\nuhv_pressure = 1e-6 mbar\n").unwrap();
        assert!((s.uhv_pressure().unwrap() - 1e-4).abs() < 1e-18);
        let d = Scenario::default();
        assert!((d.uhv_pressure().unwrap() - 6.836e-13).abs() < 1e-16);
        assert_eq!(parse_scenario("[vacuum]\nuhv_pressure = auto\n").unwrap(), d);
    }

    #[test]
    fn default_roundtrip() {
        let d = Scenario::default();
        let text = d.serialize();
        assert!(text.starts_with("[diamond]\nradius = 5e-7 m\n"));
        assert_eq!(parse_scenario(&text).unwrap(), d);
    }

    #[test]
    fn sweep_paths() {
        let d = Scenario::default();
        assert_eq!(d.value_at("diamond.radius").unwrap(), 0.5e-6);
        let s = d.with_value("jitter.time", 1e-5).unwrap();
        assert_eq!(s.jitter.errors.time, 1e-5);
        assert!(d.with_value("diamond.colour", 1.0).is_err());
        assert!(d.with_value("radius", 1.0).is_err());
        assert!(d.with_value("readout.kind", 1.0).is_err());
        assert!(d.with_value("diamond.radius", -1.0).is_err());
        assert!(d.with_value("scan.points", 40.5).is_err());
        assert_eq!(d.with_value("scan.points", 21.0).unwrap().scan.points, 21);
    }

    proptest! {
        #[test]
        fn arbitrary_values_roundtrip(
            radius in 1e-8f64..1e-5,
            gradient in 0.0f64..1e6,
            eps in 0.0f64..1e-3,
            fidelity in 0.5001f64..1.0,
            seed in any::<u64>(),
            double in any::<bool>(),
            uhv in proptest::option::of(1e-14f64..1e-2),
        ) {
            let mut s = Scenario::default();
            s.diamond.radius = radius;
            s.field.gradient = gradient;
            s.jitter.errors.gradient = eps;
            s.readout.fidelity = fidelity;
            s.seed = seed;
            s.spin.basis = if double { Basis::DoubleQuantum } else { Basis::SingleQuantum };
            s.vacuum.uhv_pressure = uhv;
            prop_assert_eq!(parse_scenario(&s.serialize()).unwrap(), s);
        }
    }
}
