//! Spin-dependent two-arm kinematics, closure, gravitational phase and
//! fringe washing from run-to-run jitter.
//!
//! Only the relative coordinate between the arms is propagated. The relative
//! acceleration is piecewise constant: `+a` on `[0, t1]`, `−a` on `[t1, t2]`,
//! `+a` on `[t2, t3]`. With `t2 = 3 t1`, `t3 = 4 t1` both the separation and
//! the relative velocity return to zero at `t3`, and `∫Δz dt = 2 a t1³`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{non_negative, positive, require, Error, Result};
use crate::particle::Diamond;
use crate::physical_base::{BOHR_MAGNETON, G_EARTH, NV_G_FACTOR, REDUCED_PLANCK};
use crate::rng::SeedStream;
use crate::spin::Basis;

/// Relative closure tolerance used by [`gravitational_phase`] and the solver.
pub const CLOSURE_TOLERANCE: f64 = 1e-9;
/// Minimum trajectory samples for the phase integral.
pub const PHASE_MIN_SAMPLES: usize = 10_000;

/// Differential acceleration between the arms, `g μ_B (dB/dx) / m`.
pub fn arm_acceleration(diamond: &Diamond, gradient: f64, basis: Basis) -> Result<f64> {
    non_negative("gradient", gradient)?;
    positive("diamond mass", diamond.mass())?;
    Ok(basis.force_multiplier() * NV_G_FACTOR * BOHR_MAGNETON * gradient / diamond.mass())
}

/// `s = a t² / 2`.
pub fn ballistic_separation(acceleration: f64, time: f64) -> Result<f64> {
    non_negative("time", time)?;
    Ok(0.5 * acceleration * time * time)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerTiming {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl InterferometerTiming {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self> {
        require(t1 > 0.0, "t1", "> 0", t1)?;
        require(t2 > t1, "t2", "> t1", t2)?;
        require(t3 > t2, "t3", "> t2", t3)?;
        Ok(Self { t1, t2, t3 })
    }

    /// The closing scheme `(t1, 3 t1, 4 t1)`.
    pub fn symmetric(t1: f64) -> Result<Self> {
        Self::new(t1, 3.0 * t1, 4.0 * t1)
    }

    pub fn total(&self) -> f64 {
        self.t3
    }
}

/// One constant-acceleration piece of the relative motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub acceleration: f64,
    pub z0: f64,
    pub v0: f64,
}

impl Segment {
    fn position(&self, t: f64) -> f64 {
        let s = t - self.start;
        self.z0 + self.v0 * s + 0.5 * self.acceleration * s * s
    }

    fn velocity(&self, t: f64) -> f64 {
        self.v0 + self.acceleration * (t - self.start)
    }

    fn z_end(&self) -> f64 {
        self.position(self.end)
    }

    fn v_end(&self) -> f64 {
        self.velocity(self.end)
    }

    /// Largest |Δz| reached inside the segment.
    fn peak(&self) -> f64 {
        let mut best = self.z0.abs().max(self.z_end().abs());
        if self.acceleration != 0.0 {
            let turn = self.start - self.v0 / self.acceleration;
            if turn > self.start && turn < self.end {
                best = best.max(self.position(turn).abs());
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmTrajectory {
    pub times: Vec<f64>,
    pub relative_displacement: Vec<f64>,
    pub relative_velocity: Vec<f64>,
    pub max_separation: f64,
    pub closure_displacement: f64,
    pub closure_velocity: f64,
    pub segments: Vec<Segment>,
}

impl ArmTrajectory {
    /// Peak |Δv| over the flight.
    pub fn max_speed(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| [s.v0.abs(), s.v_end().abs()])
            .fold(0.0, f64::max)
    }

    /// Closure residuals relative to the peak separation and peak speed.
    pub fn relative_residuals(&self) -> (f64, f64) {
        let rel = |x: f64, scale: f64| if scale > 0.0 { x.abs() / scale } else { x.abs() };
        (
            rel(self.closure_displacement, self.max_separation),
            rel(self.closure_velocity, self.max_speed()),
        )
    }

    pub fn is_closed(&self) -> bool {
        let (dz, dv) = self.relative_residuals();
        dz < CLOSURE_TOLERANCE && dv < CLOSURE_TOLERANCE
    }

    /// Writes `time_s,dz_m,dv_mps` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time_s", "dz_m", "dv_mps"])?;
        for ((t, z), v) in self
            .times
            .iter()
            .zip(&self.relative_displacement)
            .zip(&self.relative_velocity)
        {
            w.write_record([format!("{t:e}"), format!("{z:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates the piecewise-constant relative acceleration in closed form.
///
/// With `strict_dd_forces`, every decoupling pulse time inside the flight
/// additionally flips the sign of the force.
pub fn propagate_arms(
    acceleration: f64,
    timing: &InterferometerTiming,
    samples: usize,
    strict_dd_forces: bool,
    dd_pulse_times: Option<&[f64]>,
) -> Result<ArmTrajectory> {
    InterferometerTiming::new(timing.t1, timing.t2, timing.t3)?;
    require(samples >= 100, "trajectory samples", ">= 100", samples as f64)?;
    require(acceleration.is_finite(), "acceleration", "finite", acceleration)?;

    // (time, is the flip from an interferometer pulse)
    let mut flips: Vec<f64> = vec![timing.t1, timing.t2];
    if strict_dd_forces {
        if let Some(times) = dd_pulse_times {
            flips.extend(times.iter().copied().filter(|&t| t > 0.0 && t < timing.t3));
        }
        flips.sort_by(f64::total_cmp);
    }

    let mut segments = Vec::with_capacity(flips.len() + 1);
    let (mut start, mut z0, mut v0, mut sign) = (0.0, 0.0, 0.0, 1.0);
    for &flip in flips.iter().chain(std::iter::once(&timing.t3)) {
        if flip > start {
            let seg = Segment {
                start,
                end: flip,
                acceleration: sign * acceleration,
                z0,
                v0,
            };
            z0 = seg.z_end();
            v0 = seg.v_end();
            segments.push(seg);
            start = flip;
        }
        sign = -sign;
    }

    let n = samples;
    let mut times = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    let mut dv = Vec::with_capacity(n);
    let mut seg_idx = 0;
    for i in 0..n {
        let t = if i + 1 == n {
            timing.t3
        } else {
            timing.t3 * i as f64 / (n - 1) as f64
        };
        while seg_idx + 1 < segments.len() && t > segments[seg_idx].end {
            seg_idx += 1;
        }
        let seg = &segments[seg_idx];
        times.push(t);
        dz.push(seg.position(t));
        dv.push(seg.velocity(t));
    }

    let last = segments.last().expect("at least one segment");
    Ok(ArmTrajectory {
        times,
        relative_displacement: dz,
        relative_velocity: dv,
        max_separation: segments.iter().map(Segment::peak).fold(0.0, f64::max),
        closure_displacement: last.z_end(),
        closure_velocity: last.v_end(),
        segments,
    })
}

/// Finds `(t2, t3)` closing both separation and relative velocity for a given `t1`.
///
/// Damped Newton iteration on the two closure residuals of
/// [`propagate_arms`], with a finite-difference Jacobian. The residuals do
/// not depend on the magnitude of `a`, so a unit acceleration is used.
pub fn solve_closure(t1: f64) -> Result<InterferometerTiming> {
    positive("t1", t1)?;
    let residual = |t2: f64, t3: f64| -> Result<[f64; 2]> {
        let timing = InterferometerTiming::new(t1, t2, t3)?;
        let traj = propagate_arms(1.0, &timing, 100, false, None)?;
        // scale by the natural units of the problem, a t1² and a t1
        Ok([traj.closure_displacement / (t1 * t1), traj.closure_velocity / t1])
    };

    let (mut t2, mut t3) = (2.5 * t1, 3.5 * t1);
    let mut best = f64::INFINITY;
    for _ in 0..100 {
        let r = residual(t2, t3)?;
        let norm = r[0].hypot(r[1]);
        best = best.min(norm);
        if norm < 1e-14 {
            let timing = InterferometerTiming::new(t1, t2, t3)?;
            let traj = propagate_arms(1.0, &timing, 100, false, None)?;
            if traj.is_closed() {
                return Ok(timing);
            }
        }
        let h = 1e-7 * t1;
        let r2 = residual(t2 + h, t3)?;
        let r3 = residual(t2, t3 + h)?;
        let j = [
            [(r2[0] - r[0]) / h, (r3[0] - r[0]) / h],
            [(r2[1] - r[1]) / h, (r3[1] - r[1]) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let d2 = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let d3 = (j[0][0] * r[1] - j[1][0] * r[0]) / det;

        // backtrack to keep the ordering t1 < t2 < t3 and reduce the residual
        let mut step = 1.0;
        loop {
            let (n2, n3) = (t2 - step * d2, t3 - step * d3);
            if n2 > t1 && n3 > n2 {
                if let Ok(rn) = residual(n2, n3) {
                    if rn[0].hypot(rn[1]) < norm || step < 1e-6 {
                        t2 = n2;
                        t3 = n3;
                        break;
                    }
                }
            }
            step *= 0.5;
            if step < 1e-12 {
                return Err(Error::NonConvergence {
                    what: "closure solver",
                    best_residual: best,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        what: "closure solver",
        best_residual: best,
    })
}

/// Deviation of the gradient direction from horizontal, as `cos θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltSpec {
    pub cos_theta: f64,
}

impl TiltSpec {
    pub fn new(cos_theta: f64) -> Result<Self> {
        require(cos_theta.abs() <= 1.0, "cos θ", "in [-1, 1]", cos_theta)?;
        Ok(Self { cos_theta })
    }
}

impl Default for TiltSpec {
    fn default() -> Self {
        Self { cos_theta: 1e-9 }
    }
}

/// `φ = (m g cosθ / ħ) ∫ Δz dt`, trapezoidal over the sampled trajectory.
pub fn gravitational_phase(trajectory: &ArmTrajectory, diamond: &Diamond, tilt: &TiltSpec) -> Result<f64> {
    TiltSpec::new(tilt.cos_theta)?;
    if !trajectory.is_closed() {
        return Err(Error::Unclosed {
            residual: trajectory.closure_displacement,
        });
    }
    require(
        trajectory.times.len() >= PHASE_MIN_SAMPLES,
        "trajectory samples",
        ">= 10000 for the phase integral",
        trajectory.times.len() as f64,
    )?;
    let area: f64 = trajectory
        .times
        .windows(2)
        .zip(trajectory.relative_displacement.windows(2))
        .map(|(t, z)| 0.5 * (z[0] + z[1]) * (t[1] - t[0]))
        .sum();
    Ok(diamond.mass() * G_EARTH * tilt.cos_theta / REDUCED_PLANCK * area)
}

/// Fractional run-to-run control errors (1σ).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FractionalErrors {
    pub time: f64,
    pub gradient: f64,
    pub g_factor: f64,
}

impl FractionalErrors {
    pub fn uniform(eps: f64) -> Self {
        Self {
            time: eps,
            gradient: eps,
            g_factor: eps,
        }
    }

    fn validate(&self) -> Result<()> {
        non_negative("time jitter", self.time)?;
        non_negative("gradient jitter", self.gradient)?;
        non_negative("g-factor jitter", self.g_factor)
    }
}

/// Fringe visibility `|⟨e^{iφ}⟩|` over `n_drops` jittered drops.
///
/// Per drop, `φ = φ₀ (1+ε_t ξ)³ (1+ε_B ξ') (1+ε_g ξ'')`.
pub fn phase_jitter_visibility(phase_scale: f64, errors: &FractionalErrors, n_drops: usize, seed: u64) -> Result<f64> {
    errors.validate()?;
    require(phase_scale.is_finite(), "phase", "finite", phase_scale)?;
    require(n_drops >= 100, "drop count", ">= 100", n_drops as f64)?;
    if errors.time == 0.0 && errors.gradient == 0.0 && errors.g_factor == 0.0 {
        return Ok(1.0);
    }
    let streams = SeedStream::new(seed);
    let phasors: Vec<Complex64> = (0..n_drops as u64)
        .into_par_iter()
        .map(|drop| {
            let mut rng = streams.rng_indexed("interferometer", "phase_jitter", drop);
            let xi_t: f64 = rng.sample(StandardNormal);
            let xi_b: f64 = rng.sample(StandardNormal);
            let xi_g: f64 = rng.sample(StandardNormal);
            let phi = phase_scale
                * (1.0 + errors.time * xi_t).powi(3)
                * (1.0 + errors.gradient * xi_b)
                * (1.0 + errors.g_factor * xi_g);
            // reduce modulo 2π relative to φ₀ so large phases keep their precision
            Complex64::from_polar(1.0, (phi - phase_scale) % (2.0 * PI))
        })
        .collect();
    let sum: Complex64 = phasors.iter().sum();
    Ok((sum.norm() / n_drops as f64).min(1.0))
}

/// First-order Gaussian dephasing: `exp(−φ₀² (9ε_t² + ε_B² + ε_g²) / 2)`.
pub fn gaussian_visibility(phase_scale: f64, errors: &FractionalErrors) -> f64 {
    let variance = phase_scale.powi(2) * (9.0 * errors.time.powi(2) + errors.gradient.powi(2) + errors.g_factor.powi(2));
    (-variance / 2.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particle::DEFAULT_NV_YIELD;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn diamond() -> Diamond {
        Diamond::build(0.5e-6, 3510.0, 20.0, DEFAULT_NV_YIELD).unwrap()
    }

    /// Closed form for the (t1, 3t1, 4t1) scheme, piece by piece.
    fn oracle_position(a: f64, t1: f64, t: f64) -> f64 {
        if t <= t1 {
            0.5 * a * t * t
        } else if t <= 3.0 * t1 {
            let s = t - t1;
            0.5 * a * t1 * t1 + a * t1 * s - 0.5 * a * s * s
        } else {
            let s = t - 3.0 * t1;
            0.5 * a * t1 * t1 - a * t1 * s + 0.5 * a * s * s
        }
    }

    #[test]
    fn acceleration_values() {
        let a = arm_acceleration(&diamond(), 1e4, Basis::SingleQuantum).unwrap();
        assert_relative_eq!(a, 1.01e-4, max_relative = 2e-3);
        let a2 = arm_acceleration(&diamond(), 1e4, Basis::DoubleQuantum).unwrap();
        assert_relative_eq!(a2, 2.0 * a, max_relative = 1e-15);
        assert_eq!(arm_acceleration(&diamond(), 0.0, Basis::SingleQuantum).unwrap(), 0.0);
        assert!(arm_acceleration(&diamond(), -1.0, Basis::SingleQuantum).is_err());
    }

    #[test]
    fn separation_values() {
        let s = ballistic_separation(1.01e-4, 0.2).unwrap();
        assert_relative_eq!(s, 2.02e-6, max_relative = 1e-12);
        assert_eq!(ballistic_separation(1.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(ballistic_separation(2.02e-4, 0.2).unwrap(), 2.0 * s, max_relative = 1e-15);
    }

    #[test]
    fn symmetric_scheme_closes() {
        let a = 1.01e-4;
        let traj = propagate_arms(a, &InterferometerTiming::symmetric(0.1).unwrap(), 1001, false, None).unwrap();
        let (dz, dv) = traj.relative_residuals();
        assert!(dz < 1e-9 && dv < 1e-9, "{dz} {dv}");
        assert_relative_eq!(traj.max_separation, a * 0.01, max_relative = 1e-12);
        // peak at t = 2 t1 = sample 500 of 1001 over [0, 0.4]
        assert_relative_eq!(traj.relative_displacement[500], a * 0.01, max_relative = 1e-12);
        for (t, z) in traj.times.iter().zip(&traj.relative_displacement) {
            assert!((z - oracle_position(a, 0.1, *t)).abs() < 1e-12 * a * 0.01);
        }
    }

    #[test]
    fn zero_acceleration_stays_put() {
        let traj = propagate_arms(0.0, &InterferometerTiming::symmetric(0.1).unwrap(), 200, false, None).unwrap();
        assert!(traj.relative_displacement.iter().all(|z| *z == 0.0));
        assert!(traj.relative_velocity.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn invalid_timing_rejected() {
        let bad = InterferometerTiming { t1: 0.2, t2: 0.1, t3: 0.4 };
        assert!(propagate_arms(1.0, &bad, 200, false, None).is_err());
        assert!(InterferometerTiming::new(0.1, 0.3, 0.3).is_err());
        assert!(propagate_arms(1.0, &InterferometerTiming::symmetric(0.1).unwrap(), 50, false, None).is_err());
    }

    #[test]
    fn kinematics_are_piecewise_polynomial() {
        let a = 3.3e-4;
        let traj = propagate_arms(a, &InterferometerTiming::new(0.07, 0.19, 0.33).unwrap(), 5000, false, None).unwrap();
        for seg in &traj.segments {
            for (i, &t) in traj.times.iter().enumerate() {
                if t >= seg.start && t <= seg.end {
                    let s = t - seg.start;
                    let v = seg.v0 + seg.acceleration * s;
                    let z = seg.z0 + seg.v0 * s + 0.5 * seg.acceleration * s * s;
                    assert!((traj.relative_velocity[i] - v).abs() < 1e-12 * a);
                    assert!((traj.relative_displacement[i] - z).abs() < 1e-12 * a);
                }
            }
        }
        // continuity at breakpoints
        for w in traj.segments.windows(2) {
            assert_relative_eq!(w[0].z_end(), w[1].z0, max_relative = 1e-15);
            assert_relative_eq!(w[0].v_end(), w[1].v0, max_relative = 1e-15);
        }
    }

    #[test]
    fn strict_decoupling_forces_break_closure() {
        let timing = InterferometerTiming::symmetric(0.1).unwrap();
        let dd: Vec<f64> = (0..7).map(|k| 0.05 + 0.05 * k as f64).collect();
        let relaxed = propagate_arms(1e-4, &timing, 200, false, Some(&dd)).unwrap();
        let strict = propagate_arms(1e-4, &timing, 200, true, Some(&dd)).unwrap();
        assert!(relaxed.is_closed());
        assert!(strict.segments.len() > relaxed.segments.len());
        assert!(strict.max_separation < relaxed.max_separation);
    }

    #[test]
    fn closure_solutions() {
        for t1 in [0.1, 0.05] {
            let timing = solve_closure(t1).unwrap();
            assert_relative_eq!(timing.t2, 3.0 * t1, max_relative = 1e-9);
            assert_relative_eq!(timing.t3, 4.0 * t1, max_relative = 1e-9);
        }
        assert!(solve_closure(0.0).is_err());
    }

    #[test]
    fn phase_value_and_properties() {
        let d = diamond();
        let a = arm_acceleration(&d, 1e4, Basis::SingleQuantum).unwrap();
        let traj = propagate_arms(a, &InterferometerTiming::symmetric(0.1).unwrap(), 20_001, false, None).unwrap();
        let phi = gravitational_phase(&traj, &d, &TiltSpec::default()).unwrap();
        let closed = NV_G_FACTOR * BOHR_MAGNETON * 1e4 * G_EARTH * 1e-9 / REDUCED_PLANCK * 2.0 * 0.1f64.powi(3);
        assert_relative_eq!(phi, closed, max_relative = 1e-7);
        assert_relative_eq!(phi, 3.5e4, max_relative = 0.02);

        assert_eq!(gravitational_phase(&traj, &d, &TiltSpec::new(0.0).unwrap()).unwrap(), 0.0);
        assert!(TiltSpec::new(1.5).is_err());
    }

    #[test]
    fn phase_requires_closure_and_samples() {
        let d = diamond();
        let open = propagate_arms(1e-4, &InterferometerTiming::new(0.1, 0.25, 0.4).unwrap(), 20_000, false, None).unwrap();
        assert!(matches!(gravitational_phase(&open, &d, &TiltSpec::default()), Err(Error::Unclosed { .. })));
        let sparse = propagate_arms(1e-4, &InterferometerTiming::symmetric(0.1).unwrap(), 500, false, None).unwrap();
        assert!(gravitational_phase(&sparse, &d, &TiltSpec::default()).is_err());
    }

    #[test]
    fn phase_is_mass_independent() {
        let d = diamond();
        let phase_for = |d: &Diamond| {
            let a = arm_acceleration(d, 1e4, Basis::SingleQuantum).unwrap();
            let traj = propagate_arms(a, &InterferometerTiming::symmetric(0.1).unwrap(), 10_000, false, None).unwrap();
            gravitational_phase(&traj, d, &TiltSpec::default()).unwrap()
        };
        let base = phase_for(&d);
        for k in [0.1, 10.0] {
            let scaled = phase_for(&d.with_mass_scaled(k).unwrap());
            assert!(((scaled - base) / base).abs() < 1e-10);
        }
    }

    #[test]
    fn visibility_limits() {
        let zero = FractionalErrors::default();
        assert_eq!(phase_jitter_visibility(3.5e4, &zero, 1000, 1).unwrap(), 1.0);

        let small = FractionalErrors { time: 1e-5, ..zero };
        let v = phase_jitter_visibility(3.5e4, &small, 20_000, 2).unwrap();
        let closed = gaussian_visibility(3.5e4, &small);
        assert_relative_eq!(closed, 0.58, max_relative = 0.01);
        // |mean phasor| has standard error ~ sqrt((1 - V²)/(2N))
        let se = ((1.0 - closed * closed) / (2.0 * 20_000.0)).sqrt();
        assert!((v - closed).abs() < 3.0 * se + 2e-3, "{v} vs {closed}");

        let large = FractionalErrors { time: 1e-4, ..zero };
        assert!(phase_jitter_visibility(3.5e4, &large, 20_000, 3).unwrap() < 0.05);
        assert!(phase_jitter_visibility(3.5e4, &small, 10, 3).is_err());
    }

    #[test]
    fn visibility_deterministic() {
        let e = FractionalErrors::uniform(1e-5);
        let a = phase_jitter_visibility(3.5e4, &e, 5000, 9).unwrap();
        let b = phase_jitter_visibility(3.5e4, &e, 5000, 9).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn trajectory_csv_header() {
        let traj = propagate_arms(1e-4, &InterferometerTiming::symmetric(0.1).unwrap(), 100, false, None).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time_s,dz_m,dv_mps\n0e0,0e0,0e0\n"));
        assert_eq!(text.lines().count(), 101);
    }

    proptest! {
        #[test]
        fn solved_closure_is_four_t1(t1 in 1e-4f64..10.0) {
            let timing = solve_closure(t1).unwrap();
            prop_assert!((timing.t3 / (4.0 * t1) - 1.0).abs() < 1e-9);
            let traj = propagate_arms(1.0, &timing, 100, false, None).unwrap();
            let (dz, dv) = traj.relative_residuals();
            prop_assert!(dz < 1e-9 && dv < 1e-9);
        }
    }
}
