//! Gas kinetics for the cryogenic vacuum system: helium cooling of the
//! diamond, differential-pumping effusion, and the collision budget.
//!
//! Every surface-impingement quantity goes through [`impingement_rate`]
//! (`n v̄ π r²`: flux `n v̄/4` over the sphere surface `4πr²`).

use std::f64::consts::PI;

use crate::error::{non_negative, positive, Result};
use crate::particle::{debye_heat_capacity, Diamond};
use crate::physical_base::{mean_thermal_speed, number_density, AVOGADRO, GAS_CONSTANT, HELIUM_MOLAR_MASS};

/// Kinetic diameter of helium, m (used only for the Knudsen-number flag).
pub const HELIUM_KINETIC_DIAMETER: f64 = 2.6e-10;
/// Internal temperature below which blackbody decoherence is neglected, K.
pub const BLACKBODY_THRESHOLD: f64 = 10.0;
/// Helium-to-diamond heat-capacity ratio required for the cooling verdict.
pub const COOLING_CAPACITY_RATIO: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasCondition {
    pub molar_mass: f64,
    pub pressure: f64,
    pub temperature: f64,
}

impl GasCondition {
    pub fn new(molar_mass: f64, pressure: f64, temperature: f64) -> Result<Self> {
        positive("molar mass", molar_mass)?;
        non_negative("pressure", pressure)?;
        positive("gas temperature", temperature)?;
        Ok(Self {
            molar_mass,
            pressure,
            temperature,
        })
    }

    pub fn helium(pressure: f64, temperature: f64) -> Result<Self> {
        Self::new(HELIUM_MOLAR_MASS, pressure, temperature)
    }

    pub fn with_pressure(&self, pressure: f64) -> Result<Self> {
        Self::new(self.molar_mass, pressure, self.temperature)
    }

    pub fn mean_speed(&self) -> Result<f64> {
        mean_thermal_speed(self.temperature, self.molar_mass)
    }

    pub fn number_density(&self) -> Result<f64> {
        number_density(self.pressure, self.temperature)
    }

    pub fn molar_density(&self) -> f64 {
        self.pressure / (GAS_CONSTANT * self.temperature)
    }

    pub fn atom_mass(&self) -> f64 {
        self.molar_mass / AVOGADRO
    }

    /// Mean free path for hard spheres of the helium kinetic diameter.
    pub fn mean_free_path(&self) -> Result<f64> {
        let n = self.number_density()?;
        Ok(1.0 / (2f64.sqrt() * PI * HELIUM_KINETIC_DIAMETER.powi(2) * n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aperture {
    pub radius: f64,
}

impl Aperture {
    pub fn new(radius: f64) -> Result<Self> {
        positive("aperture radius", radius)?;
        Ok(Self { radius })
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Molar effusion flux through a thin orifice, `J = n v̄ A / 4` (mol/s).
pub fn effusion_flux(gas: &GasCondition, aperture: &Aperture) -> Result<f64> {
    Ok(gas.molar_density() * gas.mean_speed()? * aperture.area() / 4.0)
}

/// Steady UHV pressure from the flux balance, `P_uhv = P_trap (r_trap / r_uhv)²`.
pub fn steady_uhv_pressure(trap_pressure: f64, trap_radius: f64, uhv_radius: f64) -> Result<f64> {
    positive("trap pressure", trap_pressure)?;
    positive("trap hole radius", trap_radius)?;
    positive("UHV hole radius", uhv_radius)?;
    Ok(trap_pressure * (trap_radius / uhv_radius).powi(2))
}

/// Knudsen number of the gas relative to an orifice diameter.
pub fn knudsen_number(gas: &GasCondition, aperture: &Aperture) -> Result<f64> {
    Ok(gas.mean_free_path()? / (2.0 * aperture.radius))
}

/// Gas atoms striking a sphere per second, `n v̄ π r²`.
pub fn impingement_rate(gas: &GasCondition, particle_radius: f64) -> Result<f64> {
    positive("particle radius", particle_radius)?;
    Ok(gas.number_density()? * gas.mean_speed()? * PI * particle_radius * particle_radius)
}

/// Total gas mass striking the particle in `duration`.
pub fn impinging_gas_mass(gas: &GasCondition, particle_radius: f64, duration: f64) -> Result<f64> {
    non_negative("duration", duration)?;
    Ok(impingement_rate(gas, particle_radius)? * gas.atom_mass() * duration)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionBudget {
    pub expected_collisions: f64,
    pub coherent_ok: bool,
}

/// Expected gas collisions during the flight; one collision is taken to
/// destroy the superposition.
pub fn collision_expectation(gas: &GasCondition, particle_radius: f64, duration: f64) -> Result<CollisionBudget> {
    non_negative("duration", duration)?;
    let expected = impingement_rate(gas, particle_radius)? * duration;
    Ok(CollisionBudget {
        expected_collisions: expected,
        coherent_ok: expected < 1.0,
    })
}

/// Pressure at which the expected collision count over `duration` equals `collisions`.
pub fn pressure_for_collisions(
    gas: &GasCondition,
    particle_radius: f64,
    duration: f64,
    collisions: f64,
) -> Result<f64> {
    positive("duration", duration)?;
    positive("particle radius", particle_radius)?;
    let per_pascal = impingement_rate(&gas.with_pressure(1.0)?, particle_radius)? * duration;
    Ok(collisions / per_pascal)
}

pub fn blackbody_ok(internal_temperature: f64) -> bool {
    internal_temperature <= BLACKBODY_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingReport {
    pub impinged_mass: f64,
    pub helium_heat_capacity: f64,
    pub diamond_heat_capacity: f64,
    pub initial_temperature: f64,
    pub capacity_ratio: f64,
    pub cooled_ok: bool,
}

/// Compares the heat capacity of the helium that strikes the diamond with the
/// diamond's own Debye capacity at its starting temperature.
pub fn cooling_report(
    diamond: &Diamond,
    gas: &GasCondition,
    duration: f64,
    initial_temperature: f64,
) -> Result<CoolingReport> {
    let impinged_mass = impinging_gas_mass(gas, diamond.radius(), duration)?;
    // monatomic ideal gas, C = (3/2) R per mole
    let helium_heat_capacity = 1.5 * GAS_CONSTANT * impinged_mass / gas.molar_mass;
    let diamond_heat_capacity = debye_heat_capacity(diamond, initial_temperature)?;
    let capacity_ratio = helium_heat_capacity / diamond_heat_capacity;
    Ok(CoolingReport {
        impinged_mass,
        helium_heat_capacity,
        diamond_heat_capacity,
        initial_temperature,
        capacity_ratio,
        cooled_ok: capacity_ratio >= COOLING_CAPACITY_RATIO,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particle::DEFAULT_NV_YIELD;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const MBAR: f64 = 100.0;

    fn diamond() -> Diamond {
        Diamond::build(0.5e-6, 3510.0, 20.0, DEFAULT_NV_YIELD).unwrap()
    }

    #[test]
    fn flux_basics() {
        let hole = Aperture::new(25e-6).unwrap();
        assert_eq!(effusion_flux(&GasCondition::helium(0.0, 5.0).unwrap(), &hole).unwrap(), 0.0);
        let gas = GasCondition::helium(7e-8 * MBAR, 5.0).unwrap();
        let j1 = effusion_flux(&gas, &hole).unwrap();
        let big = Aperture::new(25e-6 * 2f64.sqrt()).unwrap();
        assert_relative_eq!(effusion_flux(&gas, &big).unwrap(), 2.0 * j1, max_relative = 1e-14);
        // independent arithmetic of P/(RT) · v̄ · πr²/4
        let expected = 7e-6 / (8.314 * 5.0) * 162.617_497_826_558_72 * PI * 625e-12 / 4.0;
        assert_relative_eq!(j1, expected, max_relative = 1e-12);
        assert_relative_eq!(j1, 1.3442e-14, max_relative = 1e-4);
    }

    #[test]
    fn differential_pumping_ratio() {
        let p_uhv = steady_uhv_pressure(1.0, 25e-6, 80e-3).unwrap();
        assert_relative_eq!(1.0 / p_uhv, 1.024e7, max_relative = 1e-12);
        let p = steady_uhv_pressure(7e-8 * MBAR, 25e-6, 80e-3).unwrap() / MBAR;
        assert_relative_eq!(p, 6.836e-15, max_relative = 1e-3);
        assert!(p < 1e-14);
        assert_eq!(steady_uhv_pressure(3.0, 1e-3, 1e-3).unwrap(), 3.0);
    }

    #[test]
    fn flux_balance_holds() {
        let trap = GasCondition::helium(7e-8 * MBAR, 5.0).unwrap();
        let p_uhv = steady_uhv_pressure(trap.pressure, 25e-6, 80e-3).unwrap();
        let uhv = trap.with_pressure(p_uhv).unwrap();
        let j_in = effusion_flux(&trap, &Aperture::new(25e-6).unwrap()).unwrap();
        let j_out = effusion_flux(&uhv, &Aperture::new(80e-3).unwrap()).unwrap();
        assert!(((j_in - j_out) / j_in).abs() < 1e-12);
    }

    #[test]
    fn impinged_helium_mass() {
        let gas = GasCondition::helium(100.0 * MBAR, 5.0).unwrap();
        let m = impinging_gas_mass(&gas, 0.5e-6, 0.1).unwrap();
        assert_relative_eq!(m, 1.23e-11, max_relative = 0.01);
        assert_eq!(impinging_gas_mass(&gas, 0.5e-6, 0.0).unwrap(), 0.0);
        let dense = gas.with_pressure(1000.0 * MBAR).unwrap();
        assert_relative_eq!(impinging_gas_mass(&dense, 0.5e-6, 0.1).unwrap(), 10.0 * m, max_relative = 1e-14);
        let atm = gas.with_pressure(101_325.0).unwrap();
        assert_relative_eq!(impinging_gas_mass(&atm, 0.5e-6, 0.1).unwrap(), 1.25e-10, max_relative = 0.01);
    }

    #[test]
    fn cooling_verdicts() {
        let gas = GasCondition::helium(100.0 * MBAR, 5.0).unwrap();
        let report = cooling_report(&diamond(), &gas, 0.1, 300.0).unwrap();
        assert!(report.helium_heat_capacity > 1e-8 && report.helium_heat_capacity < 1e-7);
        assert_relative_eq!(report.diamond_heat_capacity, 7.3e-13, max_relative = 0.01);
        assert!(report.cooled_ok);

        assert!(!cooling_report(&diamond(), &gas, 1e-6, 300.0).unwrap().cooled_ok);
        let vacuum = gas.with_pressure(0.0).unwrap();
        assert!(!cooling_report(&diamond(), &vacuum, 0.1, 300.0).unwrap().cooled_ok);
        assert!(cooling_report(&diamond(), &gas, 0.1, 900.0).is_err());
    }

    #[test]
    fn collision_budget() {
        let gas = GasCondition::helium(5e-15 * MBAR, 5.0).unwrap();
        let b = collision_expectation(&gas, 0.5e-6, 0.4).unwrap();
        assert_relative_eq!(b.expected_collisions, 0.370, max_relative = 0.01);
        assert!(b.coherent_ok);
        let worse = collision_expectation(&gas.with_pressure(5e-13 * MBAR).unwrap(), 0.5e-6, 0.4).unwrap();
        assert_relative_eq!(worse.expected_collisions, 37.0, max_relative = 0.01);
        assert!(!worse.coherent_ok);
        assert_eq!(collision_expectation(&gas, 0.5e-6, 0.0).unwrap().expected_collisions, 0.0);

        let p1 = pressure_for_collisions(&gas, 0.5e-6, 0.4, 1.0).unwrap();
        let at_p1 = collision_expectation(&gas.with_pressure(p1).unwrap(), 0.5e-6, 0.4).unwrap();
        assert_relative_eq!(at_p1.expected_collisions, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn collisions_and_mass_share_a_kernel() {
        let gas = GasCondition::helium(3e-3, 7.0).unwrap();
        let n = collision_expectation(&gas, 0.3e-6, 0.25).unwrap().expected_collisions;
        let m = impinging_gas_mass(&gas, 0.3e-6, 0.25).unwrap();
        assert!((n - m / gas.atom_mass()).abs() < 1e-12 * n);
    }

    #[test]
    fn trap_is_in_molecular_flow() {
        let trap = GasCondition::helium(7e-8 * MBAR, 5.0).unwrap();
        assert!(knudsen_number(&trap, &Aperture::new(25e-6).unwrap()).unwrap() > 1e3);
        let cooling = GasCondition::helium(100.0 * MBAR, 5.0).unwrap();
        assert!(knudsen_number(&cooling, &Aperture::new(25e-6).unwrap()).unwrap() < 1.0);
    }

    #[test]
    fn blackbody_gate() {
        assert!(blackbody_ok(5.0));
        assert!(blackbody_ok(10.0));
        assert!(!blackbody_ok(10.5));
    }

    proptest! {
        #[test]
        fn kinetic_scaling(p in 1e-10f64..1e5, t in 1.0f64..500.0, k in 0.1f64..10.0) {
            let g = GasCondition::helium(p, t).unwrap();
            let base = impingement_rate(&g, 1e-6).unwrap();
            let hot = impingement_rate(&GasCondition::helium(p, k * t).unwrap(), 1e-6).unwrap();
            let dense = impingement_rate(&g.with_pressure(k * p).unwrap(), 1e-6).unwrap();
            prop_assert!((dense / base - k).abs() < 1e-12 * k);
            prop_assert!((hot / base - k.powf(-0.5)).abs() < 1e-12);
        }
    }
}
