//! Simulation and design-budget toolkit for spin-dependent free-fall
//! interferometry of a levitated microdiamond carrying a single NV⁻ centre.
//!
//! The crate is organised bottom-up:
//!
//! - [`physical_base`]: constants, unit-tagged quantities, gas kinetics.
//! - [`particle`]: diamond mass, composition, emitter statistics, heat capacity.
//! - [`magnetics`]: pole-piece field model and field-environment checks.
//! - [`spin`]: two-level NV spin, pulse rotations, CPMG, dephasing Monte Carlo.
//! - [`interferometer`]: two-arm kinematics, closure, gravitational phase, jitter.
//! - [`vacuum`]: helium cooling, differential-pumping effusion, collision budget.
//! - [`readout`]: readout economics, fringe simulation and fitting.
//! - [`protocol`]: the gated experimental state machine, antenna scheduling, campaigns.
//! - [`scenario`]: the sectioned key/value scenario file.
//! - [`toolkit`]: budget, sweep, closure, sensitivity and schedule reports.
//! - [`cli`]: command-line front end used by the `massive` binary.
//!
//! All internal APIs take SI values as `f64`. [`physical_base::Quantity`]
//! guards the boundary where text with unit suffixes enters the system.

pub mod cli;
pub mod error;
pub mod interferometer;
pub mod magnetics;
pub mod particle;
pub mod physical_base;
pub mod protocol;
pub mod readout;
pub mod rng;
pub mod scenario;
pub mod spin;
pub mod toolkit;
pub mod vacuum;

pub use error::{Error, Result};
