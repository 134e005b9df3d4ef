//! NV⁻ two-level spin: rotations, CPMG sequences, and dephasing under
//! Ornstein-Uhlenbeck detuning noise.
//!
//! Phase convention: a rotation by θ about axis n is `exp(-iθ n·σ/2)`, so
//! `(π/2)_x` takes the Bloch vector from +z (|0⟩) to −y. Pulses are
//! instantaneous; finite pulse length only enters [`pi_pulse_duration`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{non_negative, positive, require, Error, Result};
use crate::rng::SeedStream;

const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// |0⟩, |1⟩ (m_s = 0, +1)
    SingleQuantum,
    /// |−1⟩, |+1⟩
    DoubleQuantum,
}

impl Basis {
    /// Differential force relative to the single-quantum superposition.
    pub fn force_multiplier(self) -> f64 {
        match self {
            Basis::SingleQuantum => 1.0,
            Basis::DoubleQuantum => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    amplitudes: [Complex64; 2],
    basis: Basis,
}

impl SpinState {
    pub fn new(a0: Complex64, a1: Complex64, basis: Basis) -> Result<Self> {
        let state = Self {
            amplitudes: [a0, a1],
            basis,
        };
        state.check_norm()?;
        Ok(state)
    }

    /// The lower basis state (|0⟩, or |−1⟩ in the double-quantum basis).
    pub fn ground(basis: Basis) -> Self {
        Self {
            amplitudes: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            basis,
        }
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amplitudes
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes[0].norm_sqr() + self.amplitudes[1].norm_sqr()
    }

    fn check_norm(&self) -> Result<()> {
        let n = self.norm_sqr();
        require((n - 1.0).abs() <= NORM_TOLERANCE, "state norm", "1 within 1e-12", n)
    }

    pub fn bloch(&self) -> BlochVector {
        let [a0, a1] = self.amplitudes;
        let coherence = a0.conj() * a1;
        BlochVector([
            2.0 * coherence.re,
            2.0 * coherence.im,
            a0.norm_sqr() - a1.norm_sqr(),
        ])
    }
}

/// Rotate a normalized state about an equatorial axis (or z).
pub fn apply_rotation(state: &SpinState, axis: Axis, angle: f64) -> Result<SpinState> {
    state.check_norm()?;
    require(angle.is_finite(), "rotation angle", "finite", angle)?;
    let (s, c) = (angle / 2.0).sin_cos();
    let [a0, a1] = state.amplitudes;
    let i = Complex64::i();
    let amplitudes = match axis {
        Axis::X => [a0 * c - i * s * a1, a1 * c - i * s * a0],
        Axis::Y => [a0 * c - a1 * s, a1 * c + a0 * s],
        Axis::Z => {
            let phase = Complex64::new(c, -s);
            [a0 * phase, a1 * phase.conj()]
        }
    };
    Ok(SpinState {
        amplitudes,
        basis: state.basis,
    })
}

/// Real Bloch-vector representation of a pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub const UP: BlochVector = BlochVector([0.0, 0.0, 1.0]);

    pub fn x(&self) -> f64 {
        self.0[0]
    }
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    pub fn z(&self) -> f64 {
        self.0[2]
    }

    /// Right-handed rotation matching [`apply_rotation`].
    pub fn rotate(self, axis: Axis, angle: f64) -> BlochVector {
        let (s, c) = angle.sin_cos();
        let [x, y, z] = self.0;
        BlochVector(match axis {
            Axis::X => [x, y * c - z * s, y * s + z * c],
            Axis::Y => [x * c + z * s, y, z * c - x * s],
            Axis::Z => [x * c - y * s, x * s + y * c, z],
        })
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub time: f64,
    pub axis: Axis,
    pub angle: f64,
}

impl Pulse {
    pub fn new(time: f64, axis: Axis, angle: f64) -> Result<Self> {
        non_negative("pulse time", time)?;
        require(angle > 0.0 && angle <= TAU, "pulse angle", "in (0, 2π]", angle)?;
        Ok(Self { time, axis, angle })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pulses: Vec<Pulse>,
    total_duration: f64,
}

impl PulseSequence {
    pub fn new(pulses: Vec<Pulse>, total_duration: f64) -> Result<Self> {
        positive("sequence duration", total_duration)?;
        for pair in pulses.windows(2) {
            require(pair[1].time > pair[0].time, "pulse time", "strictly increasing", pair[1].time)?;
        }
        if let Some(last) = pulses.last() {
            require(last.time <= total_duration, "pulse time", "<= total duration", last.time)?;
        }
        Ok(Self {
            pulses,
            total_duration,
        })
    }

    /// A lone `(π/2)_x` followed by free evolution (Ramsey / free-induction decay).
    pub fn free_induction(total_duration: f64) -> Result<Self> {
        Self::new(vec![Pulse::new(0.0, Axis::X, FRAC_PI_2)?], total_duration)
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    pub fn pulse_times(&self) -> Vec<f64> {
        self.pulses.iter().map(|p| p.time).collect()
    }

    /// Times of the refocusing (non-initial) pulses.
    pub fn decoupling_times(&self) -> Vec<f64> {
        self.pulses.iter().skip(1).map(|p| p.time).collect()
    }

    /// Smallest interval between consecutive events, including both ends.
    pub fn min_gap(&self) -> f64 {
        let mut edges: Vec<f64> = Vec::with_capacity(self.pulses.len() + 2);
        edges.push(0.0);
        edges.extend(self.pulses.iter().map(|p| p.time));
        edges.push(self.total_duration);
        edges
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|g| *g > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Applies every pulse, ignoring free evolution between them.
    pub fn apply_ideal(&self, state: &SpinState) -> Result<SpinState> {
        self.pulses
            .iter()
            .try_fold(*state, |s, p| apply_rotation(&s, p.axis, p.angle))
    }
}

/// `(π/2)_x` at t = 0 then `n` `(π)_y` pulses at `(2k−1)·T/(2n)`.
pub fn build_cpmg(n: usize, total_duration: f64) -> Result<PulseSequence> {
    require(n >= 1, "CPMG pulse count", ">= 1", n as f64)?;
    positive("CPMG duration", total_duration)?;
    let mut pulses = Vec::with_capacity(n + 1);
    pulses.push(Pulse::new(0.0, Axis::X, FRAC_PI_2)?);
    let half_spacing = total_duration / (2 * n) as f64;
    for k in 1..=n {
        pulses.push(Pulse::new((2 * k - 1) as f64 * half_spacing, Axis::Y, PI)?);
    }
    PulseSequence::new(pulses, total_duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    OrnsteinUhlenbeck,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingNoise {
    pub kind: NoiseKind,
    /// Stationary standard deviation of the detuning, rad/s.
    pub amplitude: f64,
    pub correlation_time: f64,
    pub seed: u64,
}

impl DephasingNoise {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            amplitude: 0.0,
            correlation_time: 1.0,
            seed: 0,
        }
    }

    pub fn ornstein_uhlenbeck(amplitude: f64, correlation_time: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::OrnsteinUhlenbeck,
            amplitude,
            correlation_time,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        non_negative("noise amplitude", self.amplitude)?;
        positive("noise correlation time", self.correlation_time)
    }
}

/// Monte Carlo coherence `W = |⟨y⟩|` at the end of `sequence`.
///
/// Each trial draws an independent OU detuning path from its own seed
/// stream; the per-trial results are reduced in trial order so the estimate
/// does not depend on scheduling.
pub fn simulate_dephasing(
    sequence: &PulseSequence,
    noise: &DephasingNoise,
    trials: usize,
    time_step: f64,
) -> Result<f64> {
    noise.validate()?;
    require(trials >= 1, "trial count", ">= 1", trials as f64)?;
    positive("time step", time_step)?;
    let required = (noise.correlation_time / 10.0).min(sequence.min_gap() / 2.0);
    if time_step > required {
        return Err(Error::StepTooCoarse {
            given: time_step,
            required,
        });
    }

    if noise.kind == NoiseKind::None || noise.amplitude == 0.0 {
        let end = evolve(sequence, time_step, |_| 0.0);
        return Ok(end.y().abs().min(1.0));
    }

    let streams = SeedStream::new(noise.seed);
    let ys: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = streams.rng_indexed("spin_dynamics", "dephasing", trial);
            let mut detuning = noise.amplitude * rng.sample::<f64, _>(StandardNormal);
            evolve(sequence, time_step, |dt| {
                // exact OU update over dt; trapezoidal phase accumulation
                let decay = (-dt / noise.correlation_time).exp();
                let kick = noise.amplitude * (1.0 - decay * decay).sqrt();
                let next = detuning * decay + kick * rng.sample::<f64, _>(StandardNormal);
                let phase = 0.5 * (detuning + next) * dt;
                detuning = next;
                phase
            })
            .y()
        })
        .collect();
    let mean = ys.iter().sum::<f64>() / trials as f64;
    Ok(mean.abs().min(1.0))
}

/// Steps a Bloch vector through the sequence; `phase(dt)` yields the z
/// rotation accumulated during each free-evolution step.
fn evolve(sequence: &PulseSequence, time_step: f64, mut phase: impl FnMut(f64) -> f64) -> BlochVector {
    let mut v = BlochVector::UP;
    let mut now = 0.0;
    let pulses = sequence.pulses();
    let mut idx = 0;
    loop {
        while idx < pulses.len() && pulses[idx].time <= now {
            v = v.rotate(pulses[idx].axis, pulses[idx].angle);
            idx += 1;
        }
        let next_event = pulses.get(idx).map_or(sequence.total_duration(), |p| p.time);
        let gap = next_event - now;
        if gap > 0.0 {
            let steps = (gap / time_step).ceil().max(1.0) as usize;
            let dt = gap / steps as f64;
            for _ in 0..steps {
                let dphi = phase(dt);
                if dphi != 0.0 {
                    v = v.rotate(Axis::Z, dphi);
                }
            }
        }
        now = next_event;
        if idx >= pulses.len() && now >= sequence.total_duration() {
            break;
        }
    }
    v
}

/// Reference π-pulse: 50 ns at 10 W with the antenna 50 μm away.
const PI_PULSE_REFERENCE: (f64, f64, f64) = (50e-9, 10.0, 50e-6);

/// π-pulse length for a near-field antenna, `t_π ∝ distance / √power`.
pub fn pi_pulse_duration(power: f64, distance: f64) -> Result<f64> {
    positive("microwave power", power)?;
    positive("antenna distance", distance)?;
    let (t_ref, p_ref, d_ref) = PI_PULSE_REFERENCE;
    Ok(t_ref * (distance / d_ref) / (power / p_ref).sqrt())
}
