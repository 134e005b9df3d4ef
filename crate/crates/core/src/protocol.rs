//! The experimental sequence as a gated state machine, plus the drop plan,
//! the microwave antenna scheduler and the end-to-end campaign driver.
//!
//! A rejection at any gate discards the diamond: the state returns to
//! [`Step::Trap`] with the attempt counter incremented.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{positive, require, Error, Result};
use crate::interferometer::{gravitational_phase, phase_jitter_visibility, InterferometerTiming, CLOSURE_TOLERANCE};
use crate::particle::{hbt_g2, is_single_emitter, single_orientation_probability, NV_ORIENTATIONS};
use crate::physical_base::G_EARTH;
use crate::readout::{fit_fringes, simulate_fringe_scan, FringeDataset, FringeFit};
use crate::rng::SeedStream;
use crate::scenario::Scenario;
use crate::vacuum::{blackbody_ok, collision_expectation, cooling_report, BLACKBODY_THRESHOLD};

/// Fractional drop-time control below which the phase stays deterministic.
pub const TIMING_TOLERANCE: f64 = 1e-5;
/// Purge stages, Pa: first stage near 1 atm, a helium stage within a decade
/// of 100 mbar, and a final stage at or below 10⁻⁶ mbar.
const PURGE_FIRST: (f64, f64) = (5e4, 2e5);
const PURGE_HELIUM: (f64, f64) = (1e3, 1e5);
const PURGE_FINAL_MAX: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Trap,
    Spectrum,
    Hbt,
    Odmr,
    CoolPurge,
    PolarizeDrop,
    Superpose,
    GradientFall,
    CloseAndSlow,
    CatchReadout,
    RepeatScan,
    CoherenceAudit,
}

impl Step {
    pub const ALL: [Step; 12] = [
        Step::Trap,
        Step::Spectrum,
        Step::Hbt,
        Step::Odmr,
        Step::CoolPurge,
        Step::PolarizeDrop,
        Step::Superpose,
        Step::GradientFall,
        Step::CloseAndSlow,
        Step::CatchReadout,
        Step::RepeatScan,
        Step::CoherenceAudit,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Option<Step> {
        Step::ALL.get(self.index() + 1).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Step::Trap => "trap",
            Step::Spectrum => "spectrum",
            Step::Hbt => "hbt",
            Step::Odmr => "odmr",
            Step::CoolPurge => "cool_purge",
            Step::PolarizeDrop => "polarize_drop",
            Step::Superpose => "superpose",
            Step::GradientFall => "gradient_fall",
            Step::CloseAndSlow => "close_and_slow",
            Step::CatchReadout => "catch_readout",
            Step::RepeatScan => "repeat_scan",
            Step::CoherenceAudit => "coherence_audit",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gate {
    NoMass,
    Charged,
    NoEmitter,
    TooManyEmitters,
    Misaligned,
    NotCold,
    InsufficientCooling,
    PurgeSchedule,
    NotPolarized,
    WeakBias,
    ShortCoherence,
    PoleSaturation,
    FieldDrift,
    Decoherence,
    Blackbody,
    Unclosed,
}

impl Gate {
    pub fn name(self) -> &'static str {
        match self {
            Gate::NoMass => "no_mass",
            Gate::Charged => "charged",
            Gate::NoEmitter => "no_emitter",
            Gate::TooManyEmitters => "too_many_emitters",
            Gate::Misaligned => "misaligned",
            Gate::NotCold => "not_cold",
            Gate::InsufficientCooling => "insufficient_cooling",
            Gate::PurgeSchedule => "purge_schedule",
            Gate::NotPolarized => "not_polarized",
            Gate::WeakBias => "weak_bias",
            Gate::ShortCoherence => "short_coherence",
            Gate::PoleSaturation => "pole_saturation",
            Gate::FieldDrift => "field_drift",
            Gate::Decoherence => "decoherence",
            Gate::Blackbody => "blackbody",
            Gate::Unclosed => "unclosed",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("step {step} requires evidence field `{field}`")]
    MissingEvidence { step: Step, field: &'static str },
    #[error("protocol already completed")]
    Finished,
}

/// Measurements offered to [`advance`]; each step reads only its own fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evidence {
    /// Trap: mass from the motional power spectrum, kg.
    pub mass_estimate: Option<f64>,
    pub neutral: Option<bool>,
    /// Spectrum: NV⁻ zero-phonon line observed.
    pub nv_present: Option<bool>,
    pub g2: Option<f64>,
    pub aligned: Option<bool>,
    /// CoolPurge: diamond internal temperature, K.
    pub internal_temperature: Option<f64>,
    pub cooled_ok: Option<bool>,
    /// CoolPurge: chamber pressures in order, Pa.
    pub pressure_schedule: Option<Vec<f64>>,
    pub polarized: Option<bool>,
    /// PolarizeDrop: bias field, T.
    pub bias_field: Option<f64>,
    /// Superpose: spin coherence time and interferometer window, s.
    pub coherence_time: Option<f64>,
    pub window: Option<f64>,
    pub field_ok: Option<bool>,
    pub saturation_ok: Option<bool>,
    pub expected_collisions: Option<f64>,
    /// CloseAndSlow: relative closure residual.
    pub closure_residual: Option<f64>,
    /// CloseAndSlow: fractional drop-time control (advisory only).
    pub timing_error: Option<f64>,
    pub readout_outcome: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateRecord {
    pub step: Step,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolState {
    pub step: Step,
    pub attempt_count: u64,
    pub evidence: BTreeMap<&'static str, GateRecord>,
    pub advisories: Vec<String>,
    pub completed: bool,
}

impl Default for ProtocolState {
    fn default() -> Self {
        Self::new()
    }
}

impl ProtocolState {
    pub fn new() -> Self {
        Self::at(Step::Trap)
    }

    /// State positioned at `step` with no accumulated evidence.
    pub fn at(step: Step) -> Self {
        Self {
            step,
            attempt_count: 0,
            evidence: BTreeMap::new(),
            advisories: Vec::new(),
            completed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transition {
    Advanced(ProtocolState),
    Rejected {
        gate: Gate,
        detail: String,
        state: ProtocolState,
    },
    Completed(ProtocolState),
}

impl Transition {
    pub fn state(&self) -> &ProtocolState {
        match self {
            Transition::Advanced(s) | Transition::Completed(s) => s,
            Transition::Rejected { state, .. } => state,
        }
    }
}

fn field<T: Clone>(step: Step, name: &'static str, value: &Option<T>) -> Result<T, ProtocolError> {
    value.clone().ok_or(ProtocolError::MissingEvidence { step, field: name })
}

fn purge_schedule_ok(schedule: &[f64]) -> bool {
    schedule.len() >= 3
        && schedule.windows(2).all(|w| w[1] < w[0])
        && (PURGE_FIRST.0..=PURGE_FIRST.1).contains(&schedule[0])
        && schedule[1..schedule.len() - 1]
            .iter()
            .any(|p| (PURGE_HELIUM.0..=PURGE_HELIUM.1).contains(p))
        && schedule[schedule.len() - 1] <= PURGE_FINAL_MAX
}

/// Gates of `step` in evaluation order, as (gate, passed, detail).
fn evaluate(step: Step, ev: &Evidence) -> Result<Vec<(Gate, bool, String)>, ProtocolError> {
    let checks = match step {
        Step::Trap => {
            let mass = field(step, "mass_estimate", &ev.mass_estimate)?;
            let neutral = field(step, "neutral", &ev.neutral)?;
            vec![
                (Gate::NoMass, mass.is_finite() && mass > 0.0, format!("mass estimate {mass:e} kg")),
                (Gate::Charged, neutral, format!("neutral = {neutral}")),
            ]
        }
        Step::Spectrum => {
            let present = field(step, "nv_present", &ev.nv_present)?;
            vec![(Gate::NoEmitter, present, format!("NV present = {present}"))]
        }
        Step::Hbt => {
            let g2 = field(step, "g2", &ev.g2)?;
            vec![(Gate::TooManyEmitters, is_single_emitter(g2), format!("g2(0) = {g2}"))]
        }
        Step::Odmr => {
            let aligned = field(step, "aligned", &ev.aligned)?;
            vec![(Gate::Misaligned, aligned, format!("aligned = {aligned}"))]
        }
        Step::CoolPurge => {
            let t = field(step, "internal_temperature", &ev.internal_temperature)?;
            let cooled = field(step, "cooled_ok", &ev.cooled_ok)?;
            let schedule = field(step, "pressure_schedule", &ev.pressure_schedule)?;
            vec![
                (Gate::NotCold, t <= BLACKBODY_THRESHOLD, format!("internal temperature {t} K")),
                (Gate::InsufficientCooling, cooled, format!("cooling verdict {cooled}")),
                (
                    Gate::PurgeSchedule,
                    purge_schedule_ok(&schedule),
                    format!("schedule {:?} Pa", schedule),
                ),
            ]
        }
        Step::PolarizeDrop => {
            let polarized = field(step, "polarized", &ev.polarized)?;
            let bias = field(step, "bias_field", &ev.bias_field)?;
            vec![
                (Gate::NotPolarized, polarized, format!("polarized = {polarized}")),
                (
                    Gate::WeakBias,
                    bias >= crate::magnetics::ALIGNMENT_BIAS_FIELD,
                    format!("bias {bias} T"),
                ),
            ]
        }
        Step::Superpose => {
            let coherence = field(step, "coherence_time", &ev.coherence_time)?;
            let window = field(step, "window", &ev.window)?;
            vec![(
                Gate::ShortCoherence,
                coherence >= window,
                format!("coherence {coherence} s vs window {window} s"),
            )]
        }
        Step::GradientFall => {
            let saturation = field(step, "saturation_ok", &ev.saturation_ok)?;
            let field_ok = field(step, "field_ok", &ev.field_ok)?;
            let collisions = field(step, "expected_collisions", &ev.expected_collisions)?;
            let t = field(step, "internal_temperature", &ev.internal_temperature)?;
            vec![
                (Gate::PoleSaturation, saturation, format!("pole pieces saturated = {saturation}")),
                (Gate::FieldDrift, field_ok, format!("field stable = {field_ok}")),
                (
                    Gate::Decoherence,
                    collisions < 1.0,
                    format!("expected collisions {collisions:e}"),
                ),
                (Gate::Blackbody, blackbody_ok(t), format!("internal temperature {t} K")),
            ]
        }
        Step::CloseAndSlow => {
            let residual = field(step, "closure_residual", &ev.closure_residual)?;
            vec![(
                Gate::Unclosed,
                residual < CLOSURE_TOLERANCE,
                format!("closure residual {residual:e}"),
            )]
        }
        Step::CatchReadout => {
            field(step, "readout_outcome", &ev.readout_outcome)?;
            Vec::new()
        }
        Step::RepeatScan | Step::CoherenceAudit => Vec::new(),
    };
    Ok(checks)
}

/// Applies the gates of the current step.
pub fn advance(state: &ProtocolState, evidence: &Evidence) -> Result<Transition, ProtocolError> {
    if state.completed {
        return Err(ProtocolError::Finished);
    }
    let step = state.step;
    let checks = evaluate(step, evidence)?;
    let mut next = state.clone();
    for (gate, passed, detail) in checks {
        next.evidence.insert(
            gate.name(),
            GateRecord {
                step,
                passed,
                detail: detail.clone(),
            },
        );
        if !passed {
            next.step = Step::Trap;
            next.attempt_count += 1;
            return Ok(Transition::Rejected {
                gate,
                detail,
                state: next,
            });
        }
    }
    if step == Step::CloseAndSlow {
        if let Some(eps) = evidence.timing_error {
            if eps > TIMING_TOLERANCE {
                next.advisories.push(format!(
                    "drop-time control {eps:e} exceeds {TIMING_TOLERANCE:e}: pseudo-random phase risk"
                ));
            }
        }
    }
    match step.next() {
        Some(s) => {
            next.step = s;
            Ok(Transition::Advanced(next))
        }
        None => {
            next.completed = true;
            Ok(Transition::Completed(next))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaLayout {
    pub count: usize,
    /// Length of one antenna along the fall, m.
    pub length: f64,
    /// Distance from the drop axis, m.
    pub standoff: f64,
}

impl Default for AntennaLayout {
    fn default() -> Self {
        Self {
            count: 150,
            length: 0.01,
            standoff: 50e-6,
        }
    }
}

impl AntennaLayout {
    pub fn validate(&self) -> Result<()> {
        require(self.count >= 1, "antenna count", ">= 1", self.count as f64)?;
        positive("antenna length", self.length)?;
        positive("antenna standoff", self.standoff)
    }

    pub fn coverage(&self) -> f64 {
        self.count as f64 * self.length
    }

    pub fn covers(&self, plan: &DropPlan) -> bool {
        self.coverage() >= plan.height * (1.0 - 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropPlan {
    pub height: f64,
    /// Coherent interferometry window starting at release, s.
    pub window: f64,
    pub hole_radius: f64,
}

impl Default for DropPlan {
    fn default() -> Self {
        Self {
            height: 1.5,
            window: 0.4,
            hole_radius: 25e-6,
        }
    }
}

impl DropPlan {
    pub fn validate(&self) -> Result<()> {
        positive("drop height", self.height)?;
        positive("interferometry window", self.window)?;
        positive("hole radius", self.hole_radius)?;
        require(
            self.window <= self.free_fall_time(),
            "interferometry window",
            "<= free-fall time of the drop height",
            self.window,
        )
    }

    pub fn free_fall_time(&self) -> f64 {
        (2.0 * self.height / G_EARTH).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaAssignment {
    pub pulse: usize,
    pub time: f64,
    pub position: f64,
    pub antenna: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaSwitch {
    /// Time at which the diamond crosses into `to`, s.
    pub time: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaSchedule {
    pub assignments: Vec<AntennaAssignment>,
    /// Pulse count per antenna index, length `layout.count`.
    pub pulse_counts: Vec<usize>,
    pub switches: Vec<AntennaSwitch>,
}

impl AntennaSchedule {
    pub fn max_index(&self) -> Option<usize> {
        self.assignments.iter().map(|a| a.antenna).max()
    }

    pub fn antennas_used(&self) -> usize {
        self.pulse_counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["pulse", "time_s", "z_m", "antenna"])?;
        for a in &self.assignments {
            w.write_record([
                a.pulse.to_string(),
                format!("{:e}", a.time),
                format!("{:e}", a.position),
                a.antenna.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Assigns each pulse to the antenna beside the falling diamond.
///
/// Positions follow `z = ½ g t²` from release. A pulse landing exactly on
/// the far edge of the last antenna is assigned to that antenna.
pub fn antenna_schedule(plan: &DropPlan, layout: &AntennaLayout, pulse_times: &[f64]) -> Result<AntennaSchedule> {
    plan.validate()?;
    layout.validate()?;
    let coverage = layout.coverage();
    let mut assignments = Vec::with_capacity(pulse_times.len());
    let mut pulse_counts = vec![0usize; layout.count];
    let mut switches = Vec::new();
    let mut previous: Option<(f64, usize)> = None;

    for (pulse, &time) in pulse_times.iter().enumerate() {
        require(
            (0.0..=plan.window).contains(&time),
            "pulse time",
            "within the interferometry window",
            time,
        )?;
        if let Some((t, _)) = previous {
            require(time >= t, "pulse time", "non-decreasing", time)?;
        }
        let position = 0.5 * G_EARTH * time * time;
        if position > coverage * (1.0 + 1e-12) {
            return Err(Error::Coverage {
                pulse,
                position,
                coverage,
            });
        }
        let antenna = ((position / layout.length).floor() as usize).min(layout.count - 1);
        if let Some((_, from)) = previous {
            for to in (from + 1)..=antenna {
                let boundary = to as f64 * layout.length;
                switches.push(AntennaSwitch {
                    time: (2.0 * boundary / G_EARTH).sqrt(),
                    from: to - 1,
                    to,
                });
            }
        }
        pulse_counts[antenna] += 1;
        assignments.push(AntennaAssignment {
            pulse,
            time,
            position,
            antenna,
        });
        previous = Some((time, antenna));
    }
    Ok(AntennaSchedule {
        assignments,
        pulse_counts,
        switches,
    })
}

/// Pass probabilities for the gates whose instrument physics is not modelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOdds {
    pub mass: f64,
    pub neutral: f64,
    pub odmr: f64,
}

impl Default for GateOdds {
    fn default() -> Self {
        Self {
            mass: 1.0,
            neutral: 1.0,
            odmr: 1.0,
        }
    }
}

impl GateOdds {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("mass gate probability", self.mass),
            ("neutralisation probability", self.neutral),
            ("ODMR alignment probability", self.odmr),
        ] {
            require((0.0..=1.0).contains(&p) && p > 0.0, name, "in (0, 1]", p)?;
        }
        Ok(())
    }

    pub fn product(&self) -> f64 {
        self.mass * self.neutral * self.odmr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub seed: u64,
    pub timing: InterferometerTiming,
    pub free_fall_time: f64,
    pub window: f64,
    /// Phase at the centre of the scan, rad.
    pub central_phase: f64,
    /// dφ/dT at the scan centre, rad/s.
    pub expected_frequency: f64,
    pub injected_visibility: f64,
    pub expected_collisions: f64,
    pub accepted: u64,
    pub attempts: u64,
    pub acceptance_probability: f64,
    pub rejections: BTreeMap<Gate, u64>,
    pub advisories: Vec<String>,
    pub dataset: FringeDataset,
    pub fit: FringeFit,
}

impl CampaignReport {
    pub fn mean_attempts(&self) -> f64 {
        self.attempts as f64 / self.accepted as f64
    }

    pub fn expected_attempts(&self) -> f64 {
        1.0 / self.acceptance_probability
    }

    pub fn total_drops(&self) -> u64 {
        self.dataset.total_drops()
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "campaign (seed {})", self.seed)?;
        writeln!(
            w,
            "  timing                {:.6} / {:.6} / {:.6} s",
            self.timing.t1, self.timing.t2, self.timing.t3
        )?;
        writeln!(
            w,
            "  window                {:.6} s of a {:.6} s free fall",
            self.window, self.free_fall_time
        )?;
        writeln!(w, "  central phase         {:.6e} rad", self.central_phase)?;
        writeln!(w, "  expected collisions   {:.6e}", self.expected_collisions)?;
        writeln!(w, "  diamonds accepted     {}", self.accepted)?;
        writeln!(w, "  diamonds loaded       {}", self.attempts)?;
        writeln!(
            w,
            "  attempts per accepted {:.6} (analytic {:.6})",
            self.mean_attempts(),
            self.expected_attempts()
        )?;
        for (gate, count) in &self.rejections {
            writeln!(w, "  rejected at {:<20} {}", gate.name(), count)?;
        }
        writeln!(w, "  total drops           {}", self.total_drops())?;
        writeln!(w, "  injected visibility   {:.6}", self.injected_visibility)?;
        let f = &self.fit;
        writeln!(
            w,
            "  fitted visibility     {:.6} +/- {:.6} (95% CI {:.6} .. {:.6})",
            f.visibility,
            f.visibility_err,
            f.visibility - 1.96 * f.visibility_err,
            f.visibility + 1.96 * f.visibility_err
        )?;
        writeln!(
            w,
            "  fitted frequency      {:.6e} +/- {:.3e} rad/s (expected {:.6e})",
            f.frequency, f.frequency_err, self.expected_frequency
        )?;
        writeln!(w, "  fitted phase          {:.6} +/- {:.6} rad at T = {:.9} s", f.phase_offset, f.phase_err, f.reference)?;
        writeln!(w, "  chi2 / dof            {:.3} / {}", f.chi_squared, f.degrees_of_freedom)?;
        for note in &self.advisories {
            writeln!(w, "  advisory: {note}")?;
        }
        Ok(())
    }

    /// Summary tables: one `table,key,value` row per entry.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["table", "key", "value"])?;
        let f = &self.fit;
        let rows: Vec<(&str, String, String)> = vec![
            ("attempts", "accepted".into(), self.accepted.to_string()),
            ("attempts", "loaded".into(), self.attempts.to_string()),
            ("attempts", "mean_per_accepted".into(), format!("{:e}", self.mean_attempts())),
            ("attempts", "analytic_per_accepted".into(), format!("{:e}", self.expected_attempts())),
            ("attempts", "total_drops".into(), self.total_drops().to_string()),
        ];
        for (t, k, v) in rows {
            w.write_record([t, &k, &v])?;
        }
        for (gate, count) in &self.rejections {
            w.write_record(["rejections", gate.name(), &count.to_string()])?;
        }
        for (k, v) in [
            ("visibility", f.visibility),
            ("visibility_err", f.visibility_err),
            ("frequency", f.frequency),
            ("frequency_err", f.frequency_err),
            ("phase_offset", f.phase_offset),
            ("phase_err", f.phase_err),
            ("reference", f.reference),
            ("chi_squared", f.chi_squared),
            ("injected_visibility", self.injected_visibility),
            ("central_phase", self.central_phase),
        ] {
            w.write_record(["fit", k, &format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evidence describing the apparatus, shared by every drop.
fn apparatus_evidence(scenario: &Scenario, closure_residual: f64, expected_collisions: f64) -> Result<Evidence> {
    let diamond = scenario.build_diamond()?;
    let cooling = cooling_report(
        &diamond,
        &scenario.cooling_gas()?,
        scenario.vacuum.cooling_duration,
        scenario.vacuum.initial_temperature,
    )?;
    let field = crate::magnetics::environment_report(&scenario.field, &scenario.magnet)?;
    Ok(Evidence {
        internal_temperature: Some(scenario.vacuum.internal_temperature),
        cooled_ok: Some(cooling.cooled_ok),
        pressure_schedule: Some(scenario.purge_schedule()),
        polarized: Some(true),
        bias_field: Some(scenario.field.bias_field),
        coherence_time: Some(scenario.spin.coherence_time),
        window: Some(scenario.drop.window),
        field_ok: Some(field.stability_ok),
        saturation_ok: Some(field.saturation_ok),
        expected_collisions: Some(expected_collisions),
        closure_residual: Some(closure_residual),
        timing_error: Some(scenario.jitter.errors.time),
        ..Evidence::default()
    })
}

/// Runs the full protocol: every fringe-scan drop consumes one accepted diamond.
///
/// Apparatus gates are checked once before any diamond is loaded; a failure
/// aborts the campaign with the step and gate that failed.
pub fn run_campaign(scenario: &Scenario) -> Result<CampaignReport> {
    scenario.validate()?;
    let streams = SeedStream::new(scenario.seed);
    let diamond = scenario.build_diamond()?;

    let (timing, trajectory) = crate::toolkit::scenario_trajectory(scenario)?;
    let (rz, rv) = trajectory.relative_residuals();
    let closure_residual = rz.max(rv);
    let collisions = collision_expectation(&scenario.uhv_gas()?, diamond.radius(), scenario.drop.window)?;

    let apparatus = apparatus_evidence(scenario, closure_residual, collisions.expected_collisions)?;
    let mut dry = ProtocolState::at(Step::CoolPurge);
    let mut advisories = Vec::new();
    while dry.step != Step::CatchReadout {
        match advance(&dry, &apparatus)? {
            Transition::Advanced(s) => dry = s,
            Transition::Rejected { gate, detail, .. } => {
                return Err(Error::GateFailed {
                    step: dry.step,
                    gate,
                    detail,
                })
            }
            Transition::Completed(_) => unreachable!("dry run stops before readout"),
        }
    }
    advisories.extend(dry.advisories.iter().cloned());

    let central_phase = gravitational_phase(&trajectory, &diamond, &scenario.tilt)?;
    let t0 = timing.total();
    let visibility = phase_jitter_visibility(
        central_phase,
        &scenario.jitter.errors,
        scenario.jitter.drops,
        streams.derive("jitter", 0).seed(),
    )?;
    let scan = &scenario.scan;
    let scan_values: Vec<f64> = (0..scan.points)
        .map(|j| t0 + (j as f64 - (scan.points - 1) as f64 / 2.0) * scan.step)
        .collect();
    // the closed trajectory's phase scales as the cube of the total time
    let phase_model = |t: f64| central_phase * (t / t0).powi(3);
    let dataset = simulate_fringe_scan(
        phase_model,
        visibility,
        &scenario.readout,
        &scan_values,
        scan.drops_per_point,
        streams.derive("readout", 0).seed(),
    )?;
    let fit = fit_fringes(&dataset, &scenario.readout)?;

    let odds = scenario.protocol.odds;
    let expected_nv = diamond.expected_nv();
    let nv_draw = (expected_nv > 0.0)
        .then(|| Poisson::new(expected_nv))
        .transpose()
        .map_err(|_| Error::InvalidInput {
            name: "expected NV count",
            requirement: "finite",
            value: expected_nv,
        })?;
    let mut rng = streams.rng("protocol", "diamond_loading");
    let mut rejections = BTreeMap::new();
    let mut attempts = 0u64;
    let mut accepted = 0u64;
    for point in &dataset.points {
        for drop in 0..point.drops {
            let outcome = drop < point.successes;
            let mut state = ProtocolState::new();
            let mut evidence = Evidence::default();
            loop {
                if state.step == Step::Trap {
                    attempts += 1;
                    if attempts > scenario.protocol.max_attempts {
                        return Err(Error::GateFailed {
                            step: Step::Trap,
                            gate: *rejections.iter().max_by_key(|(_, c)| **c).map(|(g, _)| g).unwrap_or(&Gate::NoEmitter),
                            detail: format!("more than {} diamonds loaded", scenario.protocol.max_attempts),
                        });
                    }
                    evidence = Evidence {
                        readout_outcome: Some(outcome),
                        ..diamond_evidence(&mut rng, &diamond, nv_draw.as_ref(), &odds, &apparatus)
                    };
                }
                state = match advance(&state, &evidence)? {
                    Transition::Advanced(s) => s,
                    Transition::Rejected { gate, state, .. } => {
                        *rejections.entry(gate).or_insert(0) += 1;
                        state
                    }
                    Transition::Completed(_) => {
                        accepted += 1;
                        break;
                    }
                };
            }
        }
    }

    let acceptance_probability = single_orientation_probability(expected_nv)? * odds.product();
    Ok(CampaignReport {
        seed: scenario.seed,
        timing,
        free_fall_time: scenario.drop.free_fall_time(),
        window: scenario.drop.window,
        central_phase,
        expected_frequency: 3.0 * central_phase / t0,
        injected_visibility: visibility,
        expected_collisions: collisions.expected_collisions,
        accepted,
        attempts,
        acceptance_probability,
        rejections,
        advisories,
        dataset,
        fit,
    })
}

/// Draws the per-diamond measurements for the loading gates on top of the
/// shared apparatus evidence.
///
/// HBT is taken on the emission of one ODMR-resolved orientation class: the
/// class holding exactly one NV if any, otherwise the smallest occupied class.
fn diamond_evidence(
    rng: &mut impl Rng,
    diamond: &crate::particle::Diamond,
    nv_draw: Option<&Poisson<f64>>,
    odds: &GateOdds,
    apparatus: &Evidence,
) -> Evidence {
    let total = nv_draw.map_or(0, |d| d.sample(rng) as u64);
    let mut classes = [0u32; NV_ORIENTATIONS as usize];
    for _ in 0..total {
        classes[rng.random_range(0..NV_ORIENTATIONS as usize)] += 1;
    }
    let g2 = if classes.contains(&1) {
        hbt_g2(1).expect("one emitter")
    } else {
        classes
            .iter()
            .copied()
            .filter(|&n| n > 0)
            .min()
            .map_or(1.0, |n| hbt_g2(n).expect("occupied class"))
    };
    let mass_ok = rng.random_bool(odds.mass);
    let neutral = rng.random_bool(odds.neutral);
    let aligned = rng.random_bool(odds.odmr);
    Evidence {
        mass_estimate: Some(if mass_ok { diamond.mass() } else { f64::NAN }),
        neutral: Some(neutral),
        nv_present: Some(total > 0),
        g2: Some(g2),
        aligned: Some(aligned),
        ..apparatus.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::build_cpmg;

    /// Evidence passing every gate of every step.
    fn passing() -> Evidence {
        Evidence {
            mass_estimate: Some(1.8e-15),
            neutral: Some(true),
            nv_present: Some(true),
            g2: Some(0.0),
            aligned: Some(true),
            internal_temperature: Some(5.0),
            cooled_ok: Some(true),
            pressure_schedule: Some(vec![101_325.0, 1e4, 1e-4]),
            polarized: Some(true),
            bias_field: Some(0.05),
            coherence_time: Some(0.5),
            window: Some(0.4),
            field_ok: Some(true),
            saturation_ok: Some(true),
            expected_collisions: Some(0.5),
            closure_residual: Some(0.0),
            timing_error: Some(0.0),
            readout_outcome: Some(true),
        }
    }

    /// One failing variant per gate, tagged with the step that owns it.
    fn failures() -> Vec<(Vec<(Step, Gate)>, Evidence)> {
        let p = passing();
        let with = |f: &dyn Fn(&mut Evidence)| {
            let mut e = p.clone();
            f(&mut e);
            e
        };
        vec![
            (vec![(Step::Trap, Gate::NoMass)], with(&|e| e.mass_estimate = Some(f64::NAN))),
            (vec![(Step::Trap, Gate::Charged)], with(&|e| e.neutral = Some(false))),
            (vec![(Step::Spectrum, Gate::NoEmitter)], with(&|e| e.nv_present = Some(false))),
            (vec![(Step::Hbt, Gate::TooManyEmitters)], with(&|e| e.g2 = Some(0.6))),
            (vec![(Step::Odmr, Gate::Misaligned)], with(&|e| e.aligned = Some(false))),
            (vec![(Step::CoolPurge, Gate::NotCold), (Step::GradientFall, Gate::Blackbody)], with(&|e| e.internal_temperature = Some(50.0))),
            (vec![(Step::CoolPurge, Gate::InsufficientCooling)], with(&|e| e.cooled_ok = Some(false))),
            (
                vec![(Step::CoolPurge, Gate::PurgeSchedule)],
                with(&|e| e.pressure_schedule = Some(vec![101_325.0, 1e-4, 1e4])),
            ),
            (vec![(Step::PolarizeDrop, Gate::NotPolarized)], with(&|e| e.polarized = Some(false))),
            (vec![(Step::PolarizeDrop, Gate::WeakBias)], with(&|e| e.bias_field = Some(0.01))),
            (vec![(Step::Superpose, Gate::ShortCoherence)], with(&|e| e.coherence_time = Some(2e-3))),
            (vec![(Step::GradientFall, Gate::PoleSaturation)], with(&|e| e.saturation_ok = Some(false))),
            (vec![(Step::GradientFall, Gate::FieldDrift)], with(&|e| e.field_ok = Some(false))),
            (vec![(Step::GradientFall, Gate::Decoherence)], with(&|e| e.expected_collisions = Some(3.0))),
            (vec![(Step::CloseAndSlow, Gate::Unclosed)], with(&|e| e.closure_residual = Some(1e-3))),
        ]
    }

    #[test]
    fn passing_evidence_walks_every_step_in_order() {
        let mut state = ProtocolState::new();
        let mut visited = vec![state.step];
        loop {
            match advance(&state, &passing()).unwrap() {
                Transition::Advanced(s) => {
                    assert_eq!(s.step.index(), state.step.index() + 1);
                    visited.push(s.step);
                    state = s;
                }
                Transition::Completed(s) => {
                    assert!(s.completed);
                    assert_eq!(advance(&s, &passing()), Err(ProtocolError::Finished));
                    break;
                }
                Transition::Rejected { gate, .. } => panic!("rejected at {gate}"),
            }
        }
        assert_eq!(visited, Step::ALL.to_vec());
    }

    #[test]
    fn transition_table() {
        let gates = failures();
        for step in Step::ALL {
            let mut at = ProtocolState::at(step);
            at.attempt_count = 3;
            for (owners, evidence) in &gates {
                let t = advance(&at, evidence).unwrap();
                let gate = owners[0].1;
                if let Some(&(_, gate)) = owners.iter().find(|(owner, _)| *owner == step) {
                    let Transition::Rejected { gate: g, state, .. } = t else { panic!("{step} passed {gate}") };
                    assert_eq!(g, gate);
                    assert_eq!(state.step, Step::Trap);
                    assert_eq!(state.attempt_count, 4);
                } else {
                    // other steps ignore this gate's evidence entirely
                    match step.next() {
                        Some(next) => assert_eq!(t.state().step, next),
                        None => assert!(matches!(t, Transition::Completed(_))),
                    }
                    assert!(!matches!(t, Transition::Rejected { .. }), "{step} rejected {gate}");
                    assert_eq!(t.state().attempt_count, 3);
                }
            }
        }
    }

    #[test]
    fn hbt_and_cooling_examples() {
        let hbt = ProtocolState::at(Step::Hbt);
        let ok = Evidence { g2: Some(0.3), ..Evidence::default() };
        assert_eq!(advance(&hbt, &ok).unwrap().state().step, Step::Odmr);
        let many = Evidence { g2: Some(0.6), ..Evidence::default() };
        match advance(&hbt, &many).unwrap() {
            Transition::Rejected { gate, state, .. } => {
                assert_eq!(gate.name(), "too_many_emitters");
                assert_eq!(state.step, Step::Trap);
            }
            t => panic!("{t:?}"),
        }
        let warm = Evidence {
            internal_temperature: Some(50.0),
            ..passing()
        };
        match advance(&ProtocolState::at(Step::CoolPurge), &warm).unwrap() {
            Transition::Rejected { gate, .. } => assert_eq!(gate.name(), "not_cold"),
            t => panic!("{t:?}"),
        }
    }

    #[test]
    fn missing_evidence_names_the_field() {
        let err = advance(&ProtocolState::at(Step::Hbt), &Evidence::default()).unwrap_err();
        assert_eq!(err, ProtocolError::MissingEvidence { step: Step::Hbt, field: "g2" });
        assert!(err.to_string().contains("g2"));
        let no_schedule = Evidence {
            pressure_schedule: None,
            ..passing()
        };
        let err = advance(&ProtocolState::at(Step::CoolPurge), &no_schedule).unwrap_err();
        assert!(err.to_string().contains("pressure_schedule"));
    }

    #[test]
    fn timing_advisory_does_not_block() {
        let loose = Evidence {
            timing_error: Some(1e-4),
            ..passing()
        };
        let t = advance(&ProtocolState::at(Step::CloseAndSlow), &loose).unwrap();
        assert_eq!(t.state().step, Step::CatchReadout);
        assert_eq!(t.state().advisories.len(), 1);
    }

    #[test]
    fn antenna_plan_for_the_window() {
        let plan = DropPlan::default();
        let layout = AntennaLayout::default();
        assert!(layout.covers(&plan));
        let times = build_cpmg(10_000, 0.4).unwrap().pulse_times();
        assert_eq!(times.len(), 10_001);
        let s = antenna_schedule(&plan, &layout, &times).unwrap();
        assert_eq!(s.max_index(), Some(78));
        assert_eq!(s.assignments.len(), 10_001);
        assert_eq!(s.pulse_counts.iter().sum::<usize>(), 10_001);
        assert!(s.assignments.windows(2).all(|w| w[1].antenna >= w[0].antenna));
        assert_eq!(s.switches.len(), 78);
        let last = s.assignments.last().unwrap();
        assert!((last.position - 0.5 * 9.81 * last.time.powi(2)).abs() < 1e-12);
        assert!((last.position - 0.7848).abs() < 1e-3);
    }

    #[test]
    fn antenna_plan_for_the_full_fall() {
        let full = DropPlan {
            window: 0.553,
            ..DropPlan::default()
        };
        let times = build_cpmg(10_000, 0.553).unwrap().pulse_times();
        let s = antenna_schedule(&full, &AntennaLayout::default(), &times).unwrap();
        assert_eq!(s.max_index(), Some(149));
        // exactly at the far edge of the last antenna
        let edge = DropPlan {
            window: full.free_fall_time(),
            ..full
        };
        let s = antenna_schedule(&edge, &AntennaLayout::default(), &[edge.free_fall_time()]).unwrap();
        assert_eq!(s.max_index(), Some(149));
        assert_eq!(antenna_schedule(&full, &AntennaLayout::default(), &[0.0]).unwrap().max_index(), Some(0));
    }

    #[test]
    fn antenna_plan_errors() {
        let short = AntennaLayout {
            count: 50,
            ..AntennaLayout::default()
        };
        let err = antenna_schedule(&DropPlan::default(), &short, &[0.1, 0.3, 0.4]).unwrap_err();
        assert!(matches!(err, Error::Coverage { pulse: 2, .. }), "{err:?}");
        assert!(antenna_schedule(&DropPlan::default(), &AntennaLayout::default(), &[0.5]).is_err());
        let too_long = DropPlan {
            window: 0.6,
            ..DropPlan::default()
        };
        assert!(too_long.validate().is_err());
    }

    #[test]
    fn campaign_attempts_follow_gate_probability() {
        let mut s = Scenario::default();
        s.scan.drops_per_point = 100;
        let r = run_campaign(&s).unwrap();
        assert_eq!(r.accepted, 4100);
        let p = r.acceptance_probability;
        assert!((p - 0.804).abs() < 1e-3);
        // geometric attempts per acceptance: sd sqrt(1-p)/p
        let sigma = (1.0 - p).sqrt() / p / (r.accepted as f64).sqrt();
        assert!((r.mean_attempts() - 1.0 / p).abs() < 3.0 * sigma, "{} vs {}", r.mean_attempts(), 1.0 / p);
        assert_eq!(r.rejections.keys().copied().collect::<Vec<_>>(), vec![Gate::NoEmitter, Gate::TooManyEmitters]);
        assert_eq!(r.attempts - r.accepted, r.rejections.values().sum::<u64>());
    }

    #[test]
    fn campaign_aborts_on_collisions() {
        let mut s = Scenario::default();
        s.vacuum.uhv_pressure = Some(1e-6 * 100.0);
        match run_campaign(&s) {
            Err(Error::GateFailed { step, gate, .. }) => {
                assert_eq!(step, Step::GradientFall);
                assert_eq!(gate, Gate::Decoherence);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn campaign_is_reproducible() {
        let mut s = Scenario::default();
        s.scan.drops_per_point = 50;
        s.protocol.odds.odmr = 0.7;
        let (a, b) = (run_campaign(&s).unwrap(), run_campaign(&s).unwrap());
        assert_eq!(a, b);
        let (mut ta, mut tb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ta).unwrap();
        b.write_csv(&mut tb).unwrap();
        assert_eq!(ta, tb);
        assert!(a.rejections.contains_key(&Gate::Misaligned));
        s.seed += 1;
        assert_ne!(run_campaign(&s).unwrap().attempts, a.attempts);
    }
}
