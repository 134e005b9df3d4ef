//! Microdiamond mass, composition and NV⁻ emitter statistics.

use std::f64::consts::PI;

use crate::error::{non_negative, positive, require, Error, Result};
use crate::physical_base::{BOLTZMANN, CARBON_ATOMIC_MASS, DIAMOND_DEBYE_TEMPERATURE};

/// Default NV⁻ yield: six grown-in NV⁻ per ~1840 substitutional nitrogen.
pub const DEFAULT_NV_YIELD: f64 = 6.0 / 1840.0;
/// Nitrogen content of low-absorption CVD material, parts per billion.
pub const DEFAULT_NITROGEN_PPB: f64 = 20.0;
/// Number of distinct NV⁻ symmetry axes in the diamond lattice.
pub const NV_ORIENTATIONS: u32 = 4;

/// A spherical microdiamond and the quantities derived from its size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diamond {
    radius: f64,
    density: f64,
    mass: f64,
    atom_count: f64,
    nitrogen_ppb: f64,
    nitrogen_count: f64,
    nv_yield: f64,
    expected_nv: f64,
}

impl Diamond {
    pub fn build(radius: f64, density: f64, nitrogen_ppb: f64, nv_yield: f64) -> Result<Self> {
        positive("diamond radius", radius)?;
        positive("diamond density", density)?;
        non_negative("nitrogen ppb", nitrogen_ppb)?;
        require((0.0..=1.0).contains(&nv_yield), "NV yield", "in [0, 1]", nv_yield)?;

        let mass = density * (4.0 / 3.0) * PI * radius.powi(3);
        let atom_count = mass / CARBON_ATOMIC_MASS;
        let nitrogen_count = atom_count * nitrogen_ppb * 1e-9;
        Ok(Self {
            radius,
            density,
            mass,
            atom_count,
            nitrogen_ppb,
            nitrogen_count,
            nv_yield,
            expected_nv: nitrogen_count * nv_yield,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn density(&self) -> f64 {
        self.density
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn atom_count(&self) -> f64 {
        self.atom_count
    }
    pub fn nitrogen_ppb(&self) -> f64 {
        self.nitrogen_ppb
    }
    pub fn nitrogen_count(&self) -> f64 {
        self.nitrogen_count
    }
    pub fn nv_yield(&self) -> f64 {
        self.nv_yield
    }
    pub fn expected_nv(&self) -> f64 {
        self.expected_nv
    }

    /// Same diamond with its density rescaled so the mass changes by `factor`.
    ///
    /// Used to probe mass independence without touching geometry.
    pub fn with_mass_scaled(&self, factor: f64) -> Result<Self> {
        Self::build(self.radius, self.density * factor, self.nitrogen_ppb, self.nv_yield)
    }
}

/// Low-temperature Debye heat capacity, `(12π⁴/5)·N·k_B·(T/Θ_D)³`.
///
/// Only the T³ regime is modelled; temperatures at or above Θ_D/3 are an
/// explicit out-of-model error.
pub fn debye_heat_capacity(diamond: &Diamond, temperature: f64) -> Result<f64> {
    let ceiling = DIAMOND_DEBYE_TEMPERATURE / 3.0;
    if !(temperature > 0.0 && temperature < ceiling) {
        return Err(Error::OutOfModel {
            quantity: "temperature",
            value: temperature,
            range: format!("(0, {ceiling:.1}) K"),
        });
    }
    let prefactor = 12.0 * PI.powi(4) / 5.0;
    Ok(prefactor * diamond.atom_count * BOLTZMANN * (temperature / DIAMOND_DEBYE_TEMPERATURE).powi(3))
}

/// Probability that at least one of the four orientations holds exactly one NV⁻.
///
/// With a Poisson total of mean `expected_nv` split uniformly over the
/// orientations, each orientation count is an independent Poisson(λ/4).
pub fn single_orientation_probability(expected_nv: f64) -> Result<f64> {
    non_negative("expected NV count", expected_nv)?;
    let per_axis = expected_nv / NV_ORIENTATIONS as f64;
    let exactly_one = per_axis * (-per_axis).exp();
    Ok(1.0 - (1.0 - exactly_one).powi(NV_ORIENTATIONS as i32))
}

/// g⁽²⁾(0) for `n` identical independent emitters.
pub fn hbt_g2(n_emitters: u32) -> Result<f64> {
    require(n_emitters >= 1, "emitter count", ">= 1", n_emitters as f64)?;
    Ok(1.0 - 1.0 / n_emitters as f64)
}

/// The single-emitter criterion g⁽²⁾(0) < 0.5.
pub fn is_single_emitter(g2: f64) -> bool {
    g2 < 0.5
}
