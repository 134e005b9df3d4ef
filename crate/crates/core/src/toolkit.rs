//! Reports behind the command-line front end: design budget, parameter
//! sweeps, closure, jitter sensitivity and the antenna plan.
//!
//! Every report renders as text or as CSV with full-precision scientific
//! notation. Output depends only on the scenario, so repeated runs are
//! byte-identical.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interferometer::{
    arm_acceleration, ballistic_separation, gaussian_visibility, gravitational_phase, phase_jitter_visibility,
    propagate_arms, solve_closure, ArmTrajectory, FractionalErrors, InterferometerTiming,
};
use crate::magnetics::environment_report;
use crate::protocol::{antenna_schedule, AntennaSchedule};
use crate::readout::{drops_required, snr_from_fidelity, ReadoutModel};
use crate::rng::SeedStream;
use crate::scenario::Scenario;
use crate::spin::{build_cpmg, pi_pulse_duration};
use crate::vacuum::{collision_expectation, cooling_report, pressure_for_collisions};

/// Visibility at the control budget below which the phase is effectively random.
pub const PSEUDO_RANDOM_VISIBILITY: f64 = 0.1;
const MBAR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
}

/// A rendered report plus the overall gate verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub body: String,
    pub gates_ok: bool,
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn sci(x: f64) -> String {
    format!("{x:e}")
}

/// Closed trajectory of the scenario's interferometer.
pub fn scenario_trajectory(s: &Scenario) -> Result<(InterferometerTiming, ArmTrajectory)> {
    let timing = solve_closure(s.timing.t1)?;
    let diamond = s.build_diamond()?;
    let a = arm_acceleration(&diamond, s.gradient()?, s.spin.basis)?;
    let dd = if s.timing.strict_dd_forces {
        Some(build_cpmg(s.spin.cpmg_pulses as usize, timing.total())?.decoupling_times())
    } else {
        None
    };
    let traj = propagate_arms(a, &timing, s.timing.samples as usize, s.timing.strict_dd_forces, dd.as_deref())?;
    Ok((timing, traj))
}

/// The per-point quantities shared by the budget and the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMetrics {
    /// Ballistic separation at half the interferometry window, m.
    pub separation: f64,
    pub max_separation: f64,
    pub phase: f64,
    /// Monte Carlo visibility under the scenario's jitter.
    pub visibility: f64,
    pub drops_required: u64,
}

pub fn point_metrics(s: &Scenario) -> Result<PointMetrics> {
    let diamond = s.build_diamond()?;
    let a = arm_acceleration(&diamond, s.gradient()?, s.spin.basis)?;
    let (_, traj) = scenario_trajectory(s)?;
    let phase = gravitational_phase(&traj, &diamond, &s.tilt)?;
    let seed = SeedStream::new(s.seed).derive("jitter", 0).seed();
    Ok(PointMetrics {
        separation: ballistic_separation(a, s.drop.window / 2.0)?,
        max_separation: traj.max_separation,
        phase,
        visibility: phase_jitter_visibility(phase, &s.jitter.errors, s.jitter.drops, seed)?,
        drops_required: drops_required(&s.readout, s.target_snr)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetLine {
    pub module: &'static str,
    pub quantity: &'static str,
    pub value: f64,
    pub unit: &'static str,
    /// `None` for informational lines.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Budget {
    pub lines: Vec<BudgetLine>,
    pub notes: Vec<String>,
}

impl Budget {
    pub fn all_ok(&self) -> bool {
        self.lines.iter().all(|l| l.pass != Some(false))
    }

    pub fn value(&self, quantity: &str) -> Option<f64> {
        self.lines.iter().find(|l| l.quantity == quantity).map(|l| l.value)
    }

    pub fn render(&self, format: Format) -> Result<Output> {
        let verdict = |p: Option<bool>| match p {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "info",
        };
        let body = match format {
            Format::Text => {
                let mut out = String::from("design budget\n");
                for l in &self.lines {
                    let _ = writeln!(
                        out,
                        "  [{:<4}] {:<15} {:<32} {:>14.6e} {}",
                        verdict(l.pass),
                        l.module,
                        l.quantity,
                        l.value,
                        l.unit
                    );
                }
                for n in &self.notes {
                    let _ = writeln!(out, "  note: {n}");
                }
                out
            }
            Format::Csv => {
                let rows: Vec<Vec<String>> = self
                    .lines
                    .iter()
                    .map(|l| {
                        vec![
                            l.module.to_string(),
                            l.quantity.to_string(),
                            sci(l.value),
                            l.unit.to_string(),
                            verdict(l.pass).to_string(),
                        ]
                    })
                    .collect();
                csv_string(&["module", "quantity", "value", "unit", "verdict"], &rows)?
            }
        };
        Ok(Output {
            body,
            gates_ok: self.all_ok(),
        })
    }
}

pub fn budget(s: &Scenario) -> Result<Budget> {
    s.validate()?;
    let diamond = s.build_diamond()?;
    let metrics = point_metrics(s)?;
    let (timing, traj) = scenario_trajectory(s)?;
    let (rz, rv) = traj.relative_residuals();
    let control = FractionalErrors::uniform(s.jitter.control_budget);
    let control_visibility = gaussian_visibility(metrics.phase, &control);
    let field = environment_report(&s.field, &s.magnet)?;
    let uhv = s.uhv_pressure()?;
    let uhv_gas = s.uhv_gas()?;
    let required = pressure_for_collisions(&uhv_gas, diamond.radius(), s.drop.window, 1.0)?;
    let collisions = collision_expectation(&uhv_gas, diamond.radius(), s.drop.window)?;
    let cooling = cooling_report(
        &diamond,
        &s.cooling_gas()?,
        s.vacuum.cooling_duration,
        s.vacuum.initial_temperature,
    )?;
    let cpmg = build_cpmg(s.spin.cpmg_pulses as usize, s.drop.window)?;
    let schedule = antenna_schedule(&s.drop, &s.antenna, &cpmg.pulse_times());
    let room = ReadoutModel::room_temperature(crate::readout::ROOM_TEMPERATURE_SNR)?;
    let cryo = ReadoutModel::cryogenic(crate::readout::CRYOGENIC_FIDELITY)?;

    let line = |module, quantity, value, unit, pass| BudgetLine {
        module,
        quantity,
        value,
        unit,
        pass,
    };
    let mut lines = vec![
        line("particle", "mass", diamond.mass(), "kg", None),
        line("particle", "atoms", diamond.atom_count(), "", None),
        line("particle", "expected_nv", diamond.expected_nv(), "", None),
        line("interferometer", "separation_half_window", metrics.separation, "m", None),
        line("interferometer", "max_separation", metrics.max_separation, "m", None),
        line("interferometer", "total_time", timing.total(), "s", None),
        line("interferometer", "closure_residual", rz.max(rv), "", Some(traj.is_closed())),
        line("interferometer", "phase", metrics.phase, "rad", None),
        line("interferometer", "visibility_configured_jitter", metrics.visibility, "", None),
        line(
            "interferometer",
            "visibility_control_budget",
            control_visibility,
            "",
            Some(control_visibility >= PSEUDO_RANDOM_VISIBILITY),
        ),
        line("magnetics", "pole_saturation", s.magnet.surface_field, "T", Some(field.saturation_ok)),
        line("magnetics", "bias_field", s.field.bias_field, "T", Some(field.alignment_ok)),
        line("magnetics", "field_stability", s.field.run_to_run_stability, "", Some(field.stability_ok)),
        line("magnetics", "gradient_used", field.gradient_used, "T/m", None),
        line("vacuum", "uhv_pressure", uhv / MBAR, "mbar", Some(uhv < required)),
        line("vacuum", "required_pressure", required / MBAR, "mbar", None),
        line("vacuum", "expected_collisions", collisions.expected_collisions, "", Some(collisions.coherent_ok)),
        line("vacuum", "impinged_helium_mass", cooling.impinged_mass, "kg", None),
        line("vacuum", "helium_heat_capacity", cooling.helium_heat_capacity, "J/K", None),
        line("vacuum", "diamond_heat_capacity", cooling.diamond_heat_capacity, "J/K", None),
        line("vacuum", "cooling_capacity_ratio", cooling.capacity_ratio, "", Some(cooling.cooled_ok)),
    ];
    match &schedule {
        Ok(plan) => {
            lines.push(line("protocol", "cpmg_pulses", plan.assignments.len() as f64, "", None));
            lines.push(line("protocol", "antenna_max_index", plan.max_index().unwrap_or(0) as f64, "", Some(true)));
            lines.push(line("protocol", "antennas_used", plan.antennas_used() as f64, "", None));
        }
        Err(_) => lines.push(line("protocol", "antenna_max_index", f64::NAN, "", Some(false))),
    }
    lines.extend([
        line(
            "spin",
            "pi_pulse_duration",
            pi_pulse_duration(s.spin.microwave_power, s.antenna.standoff)?,
            "s",
            None,
        ),
        line("readout", "drops_required", metrics.drops_required as f64, "", None),
        line("readout", "drops_required_room", drops_required(&room, s.target_snr)? as f64, "", None),
        line("readout", "drops_required_cryo", drops_required(&cryo, s.target_snr)? as f64, "", None),
        line("readout", "cryo_snr", snr_from_fidelity(cryo.fidelity)?, "", None),
    ]);

    let mut notes = vec![
        format!(
            "interferometry window {:.6} s of a {:.6} s free fall from {} m; the rest of the fall is slack",
            s.drop.window,
            s.drop.free_fall_time(),
            s.drop.height
        ),
        format!(
            "cooling assumes {:e} mbar helium for {} s",
            s.vacuum.cooling_pressure / MBAR,
            s.vacuum.cooling_duration
        ),
        "cryogenic SNR uses the two-outcome discriminability (2F-1)/sqrt(2F(1-F))".to_string(),
    ];
    if control_visibility < PSEUDO_RANDOM_VISIBILITY {
        notes.push(format!(
            "WARNING pseudo-random phase: {:.3e} rad with {:e} control leaves visibility {:.3e}",
            metrics.phase, s.jitter.control_budget, control_visibility
        ));
    }
    if let Err(e) = schedule {
        notes.push(format!("antenna plan failed: {e}"));
    }
    Ok(Budget { lines, notes })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValues {
    List(Vec<f64>),
    Grid { min: f64, max: f64, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPolicy {
    /// Every point uses the scenario seed.
    Shared,
    /// Point `i` uses a seed derived from the scenario seed and `i`.
    PerPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub path: String,
    pub values: SweepValues,
    pub seed_policy: SeedPolicy,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        match &self.values {
            SweepValues::List(v) if v.is_empty() => Err(Error::Sweep("sweep needs at least one value".into())),
            SweepValues::List(v) => Ok(v.clone()),
            SweepValues::Grid { count: 0, .. } => Err(Error::Sweep("sweep count must be >= 1".into())),
            SweepValues::Grid { min, count: 1, .. } => Ok(vec![*min]),
            SweepValues::Grid { min, max, count } => Ok((0..*count)
                .map(|i| min + (max - min) * i as f64 / (*count - 1) as f64)
                .collect()),
        }
    }

    /// Parses `a,b,c` or `min:max:count`.
    pub fn parse_values(text: &str) -> Result<SweepValues> {
        let bad = || Error::Sweep(format!("cannot parse sweep values `{text}`"));
        let number = |t: &str| -> Result<f64> {
            match crate::physical_base::parse_quantity(t) {
                Ok((x, _)) => Ok(x),
                Err(_) => Err(bad()),
            }
        };
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            [min, max, count] => Ok(SweepValues::Grid {
                min: number(min)?,
                max: number(max)?,
                count: count.trim().parse().map_err(|_| bad())?,
            }),
            [list] => Ok(SweepValues::List(
                list.split(',').map(|t| number(t)).collect::<Result<_>>()?,
            )),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: PointMetrics,
}

/// Evaluates the sweep points concurrently; rows keep the input order.
pub fn sweep(s: &Scenario, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let values = spec.points()?;
    s.value_at(&spec.path)?;
    let streams = SeedStream::new(s.seed);
    values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut point = s.with_value(&spec.path, value)?;
            if spec.seed_policy == SeedPolicy::PerPoint && spec.path != "run.seed" {
                point.seed = streams.derive("sweep", i as u64).seed();
            }
            Ok(SweepRow {
                value,
                metrics: point_metrics(&point)?,
            })
        })
        .collect()
}

pub fn render_sweep(path: &str, rows: &[SweepRow], format: Format) -> Result<Output> {
    let body = match format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        sci(r.value),
                        sci(r.metrics.separation),
                        sci(r.metrics.phase),
                        sci(r.metrics.visibility),
                        r.metrics.drops_required.to_string(),
                    ]
                })
                .collect();
            csv_string(&[path, "separation_m", "phase_rad", "visibility", "drops_required"], &table)?
        }
        Format::Text => {
            let mut out = format!(
                "sweep over {path}\n  {:>14} {:>14} {:>14} {:>12} {:>10}\n",
                "value", "separation_m", "phase_rad", "visibility", "drops"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "  {:>14.6e} {:>14.6e} {:>14.6e} {:>12.6} {:>10}",
                    r.value, r.metrics.separation, r.metrics.phase, r.metrics.visibility, r.metrics.drops_required
                );
            }
            out
        }
    };
    Ok(Output { body, gates_ok: true })
}

pub fn closure(s: &Scenario, format: Format) -> Result<Output> {
    s.validate()?;
    let (timing, traj) = scenario_trajectory(s)?;
    let (rz, rv) = traj.relative_residuals();
    let body = match format {
        Format::Text => format!(
            "closure for t1 = {} s\n  t1 = {:.9} s\n  t2 = {:.9} s\n  t3 = {:.9} s\n  max separation {:.6e} m\n  residuals {:.3e} (position) {:.3e} (velocity)\n",
            s.timing.t1, timing.t1, timing.t2, timing.t3, traj.max_separation, rz, rv
        ),
        Format::Csv => {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
    };
    Ok(Output {
        body,
        gates_ok: traj.is_closed(),
    })
}

/// Control levels scanned by the sensitivity report.
pub const SENSITIVITY_LEVELS: [f64; 6] = [1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4];

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub parameter: &'static str,
    pub epsilon: f64,
    pub monte_carlo: f64,
    pub gaussian: f64,
}

/// Visibility under the configured jitter, then one-parameter scans.
pub fn sensitivity_rows(s: &Scenario) -> Result<Vec<SensitivityRow>> {
    s.validate()?;
    let phase = point_metrics(s)?.phase;
    let streams = SeedStream::new(s.seed);
    let mut cases: Vec<(&'static str, FractionalErrors)> = vec![("configured", s.jitter.errors)];
    for &eps in &SENSITIVITY_LEVELS {
        cases.push(("time", FractionalErrors { time: eps, ..Default::default() }));
    }
    for &eps in &SENSITIVITY_LEVELS {
        cases.push(("gradient", FractionalErrors { gradient: eps, ..Default::default() }));
    }
    for &eps in &SENSITIVITY_LEVELS {
        cases.push(("g_factor", FractionalErrors { g_factor: eps, ..Default::default() }));
    }
    cases
        .iter()
        .enumerate()
        .map(|(i, (parameter, errors))| {
            let seed = if i == 0 {
                streams.derive("jitter", 0).seed()
            } else {
                streams.derive("sensitivity", i as u64).seed()
            };
            Ok(SensitivityRow {
                parameter,
                epsilon: errors.time.max(errors.gradient).max(errors.g_factor),
                monte_carlo: phase_jitter_visibility(phase, errors, s.jitter.drops, seed)?,
                gaussian: gaussian_visibility(phase, errors),
            })
        })
        .collect()
}

pub fn sensitivity(s: &Scenario, format: Format) -> Result<Output> {
    let rows = sensitivity_rows(s)?;
    let body = match format {
        Format::Csv => csv_string(
            &["parameter", "epsilon", "visibility_mc", "visibility_gaussian"],
            &rows
                .iter()
                .map(|r| vec![r.parameter.to_string(), sci(r.epsilon), sci(r.monte_carlo), sci(r.gaussian)])
                .collect::<Vec<_>>(),
        )?,
        Format::Text => {
            let mut out = String::from("jitter sensitivity\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "  {:<10} eps {:>10.3e}  visibility {:.6} (gaussian {:.6})",
                    r.parameter, r.epsilon, r.monte_carlo, r.gaussian
                );
            }
            out
        }
    };
    Ok(Output { body, gates_ok: true })
}

/// Antenna plan for the scenario's CPMG train over the interferometry window.
pub fn schedule_plan(s: &Scenario) -> Result<AntennaSchedule> {
    s.validate()?;
    let cpmg = build_cpmg(s.spin.cpmg_pulses as usize, s.drop.window)?;
    antenna_schedule(&s.drop, &s.antenna, &cpmg.pulse_times())
}

pub fn schedule(s: &Scenario, format: Format) -> Result<Output> {
    let plan = schedule_plan(s)?;
    let body = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            plan.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        Format::Text => {
            let last = plan.assignments.last();
            let mut out = format!(
                "antenna plan\n  pulses {}\n  window {} s (free fall {:.6} s)\n  final position {:.6} m\n  max antenna index {} of {}\n  antennas used {}\n  switch-overs {}\n",
                plan.assignments.len(),
                s.drop.window,
                s.drop.free_fall_time(),
                last.map_or(0.0, |a| a.position),
                plan.max_index().unwrap_or(0),
                s.antenna.count,
                plan.antennas_used(),
                plan.switches.len()
            );
            for sw in plan.switches.iter().take(5) {
                let _ = writeln!(out, "  switch {} -> {} at {:.6e} s", sw.from, sw.to, sw.time);
            }
            if plan.switches.len() > 5 {
                let _ = writeln!(out, "  ...");
            }
            out
        }
    };
    Ok(Output { body, gates_ok: true })
}

pub fn campaign(s: &Scenario, format: Format) -> Result<Output> {
    let report = crate::protocol::run_campaign(s)?;
    let mut buf = Vec::new();
    match format {
        Format::Text => report.write_text(&mut buf)?,
        Format::Csv => report.write_csv(&mut buf)?,
    }
    Ok(Output {
        body: String::from_utf8(buf).expect("report is utf-8"),
        gates_ok: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_budget_numbers() {
        let b = budget(&Scenario::default()).unwrap();
        assert!(b.all_ok(), "{b:#?}");
        assert_relative_eq!(b.value("separation_half_window").unwrap(), 2.02e-6, max_relative = 0.01);
        assert_relative_eq!(b.value("max_separation").unwrap(), 1.01e-6, max_relative = 0.01);
        assert_relative_eq!(b.value("uhv_pressure").unwrap(), 6.836e-15, max_relative = 1e-3);
        assert_eq!(b.value("drops_required_cryo").unwrap(), 12.0);
        assert_eq!(b.value("drops_required_room").unwrap(), 111_112.0);
        assert_eq!(b.value("antenna_max_index").unwrap(), 78.0);
    }

    #[test]
    fn gradient_scales_separation_and_phase() {
        let base = budget(&Scenario::default()).unwrap();
        let s = Scenario::default().with_value("field.gradient", 1e5).unwrap();
        let b = budget(&s).unwrap();
        for q in ["separation_half_window", "phase"] {
            assert_relative_eq!(b.value(q).unwrap(), 10.0 * base.value(q).unwrap(), max_relative = 1e-9);
        }
    }

    #[test]
    fn steep_tilt_warns() {
        let s = Scenario::default().with_value("tilt.cos_theta", 1e-4).unwrap();
        let b = budget(&s).unwrap();
        assert!(!b.all_ok());
        assert!(b.notes.iter().any(|n| n.contains("pseudo-random phase")));
        assert!(!b.render(Format::Text).unwrap().gates_ok);
    }

    #[test]
    fn radius_sweep_tracks_inverse_mass() {
        let spec = SweepSpec {
            path: "diamond.radius".into(),
            values: SweepValues::List(vec![0.25e-6, 0.5e-6, 1.0e-6]),
            seed_policy: SeedPolicy::Shared,
        };
        let rows = sweep(&Scenario::default(), &spec).unwrap();
        for r in &rows {
            // s ∝ 1/m ∝ r⁻³
            let ratio = r.metrics.separation / rows[1].metrics.separation;
            assert_relative_eq!(ratio, (0.5e-6 / r.value).powi(3), max_relative = 1e-9);
        }
    }

    #[test]
    fn single_point_sweep_matches_budget() {
        let s = Scenario::default();
        let spec = SweepSpec {
            path: "diamond.radius".into(),
            values: SweepValues::Grid { min: 0.5e-6, max: 0.5e-6, count: 1 },
            seed_policy: SeedPolicy::Shared,
        };
        let row = sweep(&s, &spec).unwrap()[0];
        let b = budget(&s).unwrap();
        assert_eq!(row.metrics.separation, b.value("separation_half_window").unwrap());
        assert_eq!(row.metrics.phase, b.value("phase").unwrap());
        assert_eq!(row.metrics.visibility, b.value("visibility_configured_jitter").unwrap());
        assert_eq!(row.metrics.drops_required as f64, b.value("drops_required").unwrap());
    }

    #[test]
    fn time_jitter_sweep() {
        let spec = SweepSpec {
            path: "jitter.time".into(),
            values: SweepValues::List(vec![1e-6, 1e-5, 1e-4]),
            seed_policy: SeedPolicy::PerPoint,
        };
        let rows = sweep(&Scenario::default(), &spec).unwrap();
        assert!((rows[0].metrics.visibility - 0.99).abs() < 0.02);
        assert!((rows[1].metrics.visibility - 0.58).abs() < 0.05);
        assert!(rows[2].metrics.visibility < 0.05);
    }

    #[test]
    fn sweep_rejects_bad_paths() {
        let spec = SweepSpec {
            path: "diamond.colour".into(),
            values: SweepValues::List(vec![1.0]),
            seed_policy: SeedPolicy::Shared,
        };
        assert!(matches!(sweep(&Scenario::default(), &spec), Err(Error::Sweep(_))));
        assert!(SweepSpec::parse_values("1:2").is_err());
        assert_eq!(
            SweepSpec::parse_values("0.25 um,0.5um").unwrap(),
            SweepValues::List(vec![0.25e-6, 0.5e-6])
        );
        assert_eq!(
            SweepSpec::parse_values("1:3:3").unwrap(),
            SweepValues::Grid { min: 1.0, max: 3.0, count: 3 }
        );
    }

    #[test]
    fn sensitivity_with_no_jitter() {
        let rows = sensitivity_rows(&Scenario::default()).unwrap();
        assert_eq!(rows[0].monte_carlo, 1.0);
        assert_eq!(rows[0].gaussian, 1.0);
        let t = rows.iter().find(|r| r.parameter == "time" && r.epsilon == 1e-5).unwrap();
        assert!((t.monte_carlo - t.gaussian).abs() < 0.05);
    }

    #[test]
    fn closure_report() {
        let out = closure(&Scenario::default(), Format::Text).unwrap();
        assert!(out.gates_ok);
        assert!(out.body.contains("t2 = 0.300000000 s"), "{}", out.body);
        assert!(out.body.contains("t3 = 0.400000000 s"));
    }

    #[test]
    fn reports_are_deterministic() {
        let s = Scenario::default();
        for format in [Format::Text, Format::Csv] {
            assert_eq!(budget(&s).unwrap().render(format).unwrap(), budget(&s).unwrap().render(format).unwrap());
            assert_eq!(sensitivity(&s, format).unwrap(), sensitivity(&s, format).unwrap());
            assert_eq!(schedule(&s, format).unwrap(), schedule(&s, format).unwrap());
        }
    }
}
