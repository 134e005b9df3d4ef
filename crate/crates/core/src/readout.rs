//! Readout economics and fringe statistics.
//!
//! Two readout models are supported. Room-temperature optical readout is
//! characterised by its single-shot SNR and adds Gaussian photon noise to the
//! aggregated counts. Cryogenic resonant readout is a single-shot binary
//! measurement with fidelity F, which mixes the outcome probabilities as
//! `p_obs = F p + (1 − F)(1 − p)`.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{positive, require, Error, Result};
use crate::rng::SeedStream;

/// SNR assigned to a perfect (F = 1) single-shot readout.
pub const DEFAULT_SNR_CAP: f64 = 100.0;
pub const ROOM_TEMPERATURE_SNR: f64 = 0.03;
pub const CRYOGENIC_FIDELITY: f64 = 0.95;
/// Minimum number of scan points accepted by the fitter.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutKind {
    RoomTemperature,
    CryogenicSingleShot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutModel {
    pub kind: ReadoutKind,
    /// Used by the room-temperature model.
    pub single_shot_snr: f64,
    /// Used by the cryogenic model.
    pub fidelity: f64,
    pub snr_cap: f64,
}

impl ReadoutModel {
    pub fn room_temperature(snr: f64) -> Result<Self> {
        let m = Self {
            kind: ReadoutKind::RoomTemperature,
            single_shot_snr: snr,
            fidelity: CRYOGENIC_FIDELITY,
            snr_cap: DEFAULT_SNR_CAP,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn cryogenic(fidelity: f64) -> Result<Self> {
        let m = Self {
            kind: ReadoutKind::CryogenicSingleShot,
            single_shot_snr: ROOM_TEMPERATURE_SNR,
            fidelity,
            snr_cap: DEFAULT_SNR_CAP,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        positive("single-shot SNR", self.single_shot_snr)?;
        require(
            self.fidelity > 0.5 && self.fidelity <= 1.0,
            "readout fidelity",
            "in (0.5, 1]",
            self.fidelity,
        )?;
        positive("SNR cap", self.snr_cap)
    }

    /// Effective single-shot SNR of this model.
    pub fn effective_snr(&self) -> Result<f64> {
        match self.kind {
            ReadoutKind::RoomTemperature => Ok(self.single_shot_snr),
            ReadoutKind::CryogenicSingleShot => snr_with_cap(self.fidelity, self.snr_cap),
        }
    }

    /// Fidelity used for folding; the room model has no binary mixing.
    fn folding_fidelity(&self) -> f64 {
        match self.kind {
            ReadoutKind::RoomTemperature => 1.0,
            ReadoutKind::CryogenicSingleShot => self.fidelity,
        }
    }

    /// Per-shot additive noise variance in units of the outcome contrast.
    fn photon_noise_variance(&self) -> f64 {
        match self.kind {
            ReadoutKind::RoomTemperature => self.single_shot_snr.powi(-2),
            ReadoutKind::CryogenicSingleShot => 0.0,
        }
    }
}

/// Two-outcome discriminability `(2F − 1) / sqrt(2F(1 − F))`.
pub fn snr_from_fidelity(fidelity: f64) -> Result<f64> {
    snr_with_cap(fidelity, DEFAULT_SNR_CAP)
}

fn snr_with_cap(fidelity: f64, cap: f64) -> Result<f64> {
    require(
        fidelity > 0.5 && fidelity <= 1.0,
        "readout fidelity",
        "in (0.5, 1]",
        fidelity,
    )?;
    if fidelity == 1.0 {
        return Ok(cap);
    }
    let snr = (2.0 * fidelity - 1.0) / (2.0 * fidelity * (1.0 - fidelity)).sqrt();
    Ok(snr.min(cap))
}

/// Drops needed for one data point of the requested SNR, `ceil((target / snr)²)`.
pub fn drops_required(model: &ReadoutModel, target_snr: f64) -> Result<u64> {
    positive("target SNR", target_snr)?;
    model.validate()?;
    let ratio = target_snr / model.effective_snr()?;
    Ok((ratio * ratio).ceil().max(1.0) as u64)
}

/// Probability seen through a binary readout of fidelity `F`.
pub fn fold(p: f64, fidelity: f64) -> f64 {
    fidelity * p + (1.0 - fidelity) * (1.0 - p)
}

/// Inverse of [`fold`].
pub fn unfold(p_obs: f64, fidelity: f64) -> f64 {
    (p_obs - (1.0 - fidelity)) / (2.0 * fidelity - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint {
    pub scan_value: f64,
    pub drops: u64,
    pub successes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeDataset {
    pub axis: String,
    pub points: Vec<FringePoint>,
}

impl FringeDataset {
    pub fn new(axis: impl Into<String>, points: Vec<FringePoint>) -> Result<Self> {
        for p in &points {
            require(p.successes <= p.drops, "successes", "<= drops", p.successes as f64)?;
            require(p.scan_value.is_finite(), "scan value", "finite", p.scan_value)?;
        }
        Ok(Self {
            axis: axis.into(),
            points,
        })
    }

    pub fn total_drops(&self) -> u64 {
        self.points.iter().map(|p| p.drops).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["scan_value", "drops", "successes"])?;
        for p in &self.points {
            w.write_record([format!("{:e}", p.scan_value), p.drops.to_string(), p.successes.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, axis: impl Into<String>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["scan_value", "drops", "successes"] {
            return Err(Error::Degenerate(format!(
                "expected header scan_value,drops,successes, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut points = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let bad = |what: &str| Error::Degenerate(format!("row {}: bad {what}", line + 2));
            points.push(FringePoint {
                scan_value: record[0].trim().parse().map_err(|_| bad("scan_value"))?,
                drops: record[1].trim().parse().map_err(|_| bad("drops"))?,
                successes: record[2].trim().parse().map_err(|_| bad("successes"))?,
            });
        }
        Self::new(axis, points)
    }
}

/// Draws readout counts for `p = ½(1 + V cos φ(x))` at each scan value.
pub fn simulate_fringe_scan(
    phase_model: impl Fn(f64) -> f64,
    visibility: f64,
    model: &ReadoutModel,
    scan_values: &[f64],
    drops_per_point: u64,
    seed: u64,
) -> Result<FringeDataset> {
    require((0.0..=1.0).contains(&visibility), "visibility", "in [0, 1]", visibility)?;
    require(drops_per_point >= 1, "drops per point", ">= 1", drops_per_point as f64)?;
    model.validate()?;
    let streams = SeedStream::new(seed);
    let fidelity = model.folding_fidelity();
    let noise_sd = (drops_per_point as f64 * model.photon_noise_variance()).sqrt();

    let mut points = Vec::with_capacity(scan_values.len());
    for (i, &x) in scan_values.iter().enumerate() {
        let mut rng = streams.rng_indexed("readout_stats", "fringe_scan", i as u64);
        let p = 0.5 * (1.0 + visibility * phase_model(x).cos());
        let p_obs = fold(p, fidelity).clamp(0.0, 1.0);
        let mut successes = Binomial::new(drops_per_point, p_obs)
            .map_err(|_| Error::InvalidInput {
                name: "success probability",
                requirement: "in [0, 1]",
                value: p_obs,
            })?
            .sample(&mut rng);
        if noise_sd > 0.0 {
            let noisy = successes as f64 + noise_sd * rng.sample::<f64, _>(StandardNormal);
            successes = noisy.round().clamp(0.0, drops_per_point as f64) as u64;
        }
        points.push(FringePoint {
            scan_value: x,
            drops: drops_per_point,
            successes,
        });
    }
    FringeDataset::new("scan_value", points)
}

/// Result of fitting `p(x) = ½(1 + V cos(ω (x − x_ref) + φ₀))`.
///
/// `x_ref` is the weighted centre of the scan, which keeps the phase offset
/// well conditioned when the scan sits far from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeFit {
    pub visibility: f64,
    pub phase_offset: f64,
    pub frequency: f64,
    pub reference: f64,
    pub visibility_err: f64,
    pub phase_err: f64,
    pub frequency_err: f64,
    pub chi_squared: f64,
    pub degrees_of_freedom: usize,
    pub iterations: usize,
}

impl FringeFit {
    pub fn model(&self, x: f64) -> f64 {
        0.5 * (1.0 + self.visibility * (self.frequency * (x - self.reference) + self.phase_offset).cos())
    }
}

struct Prepared {
    u: Vec<f64>,
    y: Vec<f64>,
    drops: Vec<f64>,
    reference: f64,
    fidelity: f64,
    extra_variance: f64,
}

impl Prepared {
    fn new(data: &FringeDataset, model: &ReadoutModel) -> Result<Self> {
        model.validate()?;
        if data.points.len() < MIN_FIT_POINTS {
            return Err(Error::InvalidInput {
                name: "fringe points",
                requirement: ">= 8",
                value: data.points.len() as f64,
            });
        }
        if data.points.iter().any(|p| p.drops == 0) {
            return Err(Error::Degenerate("scan point with zero drops".into()));
        }
        let fractions: Vec<f64> = data
            .points
            .iter()
            .map(|p| p.successes as f64 / p.drops as f64)
            .collect();
        if fractions.iter().all(|f| *f == fractions[0]) {
            return Err(Error::Degenerate("all scan points have identical outcomes".into()));
        }
        let xs: Vec<f64> = data.points.iter().map(|p| p.scan_value).collect();
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if hi <= lo {
            return Err(Error::Degenerate("scan values are all identical".into()));
        }
        let reference = xs.iter().sum::<f64>() / xs.len() as f64;
        let fidelity = model.folding_fidelity();
        Ok(Self {
            u: xs.iter().map(|x| x - reference).collect(),
            y: fractions.iter().map(|&q| unfold(q, fidelity)).collect(),
            drops: data.points.iter().map(|p| p.drops as f64).collect(),
            reference,
            fidelity,
            extra_variance: model.photon_noise_variance(),
        })
    }

    /// Inverse variances of the unfolded fractions, evaluated at model `p`.
    fn weights(&self, p_model: impl Fn(usize) -> f64) -> Vec<f64> {
        let contrast = (2.0 * self.fidelity - 1.0).powi(2);
        (0..self.y.len())
            .map(|i| {
                let n = self.drops[i];
                let q = fold(p_model(i).clamp(0.0, 1.0), self.fidelity);
                let binomial = (q * (1.0 - q)).max(0.25 / n);
                n * contrast / (binomial + self.extra_variance)
            })
            .collect()
    }

    fn span(&self) -> (f64, f64) {
        let mut sorted = self.u.clone();
        sorted.sort_by(f64::total_cmp);
        let min_step = sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min);
        (sorted[sorted.len() - 1] - sorted[0], min_step)
    }
}

/// Weighted linear fit of `y − ½ = A cos ωu + B sin ωu` at fixed ω.
fn linear_at(prep: &Prepared, weights: &[f64], omega: f64) -> Option<(f64, f64, f64)> {
    let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..prep.u.len() {
        let (s, c) = (omega * prep.u[i]).sin_cos();
        let w = weights[i];
        let r = prep.y[i] - 0.5;
        scc += w * c * c;
        sss += w * s * s;
        scs += w * c * s;
        syc += w * r * c;
        sys += w * r * s;
    }
    let det = scc * sss - scs * scs;
    if det.abs() < 1e-300 {
        return None;
    }
    let a = (syc * sss - sys * scs) / det;
    let b = (sys * scc - syc * scs) / det;
    let chi2 = (0..prep.u.len())
        .map(|i| {
            let (s, c) = (omega * prep.u[i]).sin_cos();
            weights[i] * (prep.y[i] - 0.5 - a * c - b * s).powi(2)
        })
        .sum();
    Some((a, b, chi2))
}

fn predict(u: f64, params: &[f64; 3]) -> f64 {
    0.5 * (1.0 + params[0] * (params[1] * u + params[2]).cos())
}

fn chi_squared(prep: &Prepared, weights: &[f64], params: &[f64; 3]) -> f64 {
    (0..prep.u.len())
        .map(|i| weights[i] * (prep.y[i] - predict(prep.u[i], params)).powi(2))
        .sum()
}

/// Levenberg-Marquardt over the parameters selected by `free`.
///
/// Returns the refined parameters, the covariance of the free parameters
/// (undamped normal matrix inverse) and the iteration count.
fn refine(
    prep: &Prepared,
    start: [f64; 3],
    free: &[usize],
) -> Result<([f64; 3], DMatrix<f64>, Vec<f64>, usize)> {
    let mut params = start;
    let mut weights = prep.weights(|i| predict(prep.u[i], &params));
    let mut lambda = 1e-3;
    let mut chi2 = chi_squared(prep, &weights, &params);
    let mut iterations = 0;
    let k = free.len();

    let normal = |params: &[f64; 3], weights: &[f64]| {
        let mut jtj = DMatrix::<f64>::zeros(k, k);
        let mut jtr = DVector::<f64>::zeros(k);
        for i in 0..prep.u.len() {
            let arg = params[1] * prep.u[i] + params[2];
            let (s, c) = arg.sin_cos();
            let full = [0.5 * c, -0.5 * params[0] * prep.u[i] * s, -0.5 * params[0] * s];
            let r = prep.y[i] - predict(prep.u[i], params);
            for (a, &pa) in free.iter().enumerate() {
                jtr[a] += weights[i] * full[pa] * r;
                for (b, &pb) in free.iter().enumerate() {
                    jtj[(a, b)] += weights[i] * full[pa] * full[pb];
                }
            }
        }
        (jtj, jtr)
    };

    let mut converged = false;
    for outer in 0..8 {
        for _ in 0..200 {
            iterations += 1;
            let (jtj, jtr) = normal(&params, &weights);
            let mut damped = jtj.clone();
            for d in 0..k {
                damped[(d, d)] *= 1.0 + lambda;
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = params;
            for (a, &pa) in free.iter().enumerate() {
                trial[pa] += step[a];
            }
            let trial_chi2 = chi_squared(prep, &weights, &trial);
            if trial_chi2 <= chi2 {
                let improvement = chi2 - trial_chi2;
                params = trial;
                chi2 = trial_chi2;
                lambda = (lambda / 10.0).max(1e-12);
                if improvement <= 1e-12 * chi2.max(1e-300) {
                    break;
                }
            } else {
                lambda *= 10.0;
                if lambda > 1e12 {
                    break;
                }
            }
        }
        // reweight at the new model and stop once the weights settle
        let new_weights = prep.weights(|i| predict(prep.u[i], &params));
        let shift = new_weights
            .iter()
            .zip(&weights)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        weights = new_weights;
        chi2 = chi_squared(prep, &weights, &params);
        lambda = 1e-3;
        if shift < 1e-9 || outer == 7 {
            converged = shift < 1e-6;
            break;
        }
    }
    if !converged || !chi2.is_finite() {
        return Err(Error::NonConvergence {
            what: "fringe fit",
            best_residual: chi2,
        });
    }

    let (jtj, _) = normal(&params, &weights);
    let cov = jtj.try_inverse().ok_or_else(|| Error::NonConvergence {
        what: "fringe fit covariance",
        best_residual: chi2,
    })?;
    Ok((params, cov, weights, iterations))
}

fn finish(prep: &Prepared, params: [f64; 3], cov: &DMatrix<f64>, free: &[usize], weights: &[f64], iterations: usize) -> FringeFit {
    let mut sigma = [0.0; 3];
    for (a, &pa) in free.iter().enumerate() {
        sigma[pa] = cov[(a, a)].max(0.0).sqrt();
    }
    let (mut v, mut phi) = (params[0], params[2]);
    if v < 0.0 {
        v = -v;
        phi += PI;
    }
    let phi = (phi + PI).rem_euclid(TAU) - PI;
    FringeFit {
        visibility: v,
        phase_offset: phi,
        frequency: params[1],
        reference: prep.reference,
        visibility_err: sigma[0],
        phase_err: sigma[2],
        frequency_err: sigma[1],
        chi_squared: chi_squared(prep, weights, &params),
        degrees_of_freedom: prep.u.len().saturating_sub(free.len()),
        iterations,
    }
}

fn initial_from_linear(a: f64, b: f64, omega: f64) -> [f64; 3] {
    // A = ½V cos φ₀, B = −½V sin φ₀
    [2.0 * a.hypot(b), omega, (-b).atan2(a)]
}

/// Weighted least-squares fringe fit with a frequency search.
///
/// The frequency is first located on a periodogram grid up to the Nyquist
/// limit of the finest scan spacing, then visibility, frequency and phase are
/// refined together with binomial weights after fidelity unfolding.
pub fn fit_fringes(data: &FringeDataset, model: &ReadoutModel) -> Result<FringeFit> {
    let prep = Prepared::new(data, model)?;
    let (span, min_step) = prep.span();
    let omega_max = PI / min_step;
    let omega_step = PI / (10.0 * span);
    let initial_weights = {
        // smoothed observed fractions for the first pass
        let contrast = (2.0 * prep.fidelity - 1.0).powi(2);
        data.points
            .iter()
            .map(|p| {
                let n = p.drops as f64;
                let q = (p.successes as f64 + 0.5) / (n + 1.0);
                n * contrast / (q * (1.0 - q) + prep.extra_variance)
            })
            .collect::<Vec<_>>()
    };

    let mut best: Option<(f64, [f64; 3])> = None;
    let steps = (omega_max / omega_step).ceil() as usize;
    for k in 1..=steps {
        let omega = k as f64 * omega_step;
        if let Some((a, b, chi2)) = linear_at(&prep, &initial_weights, omega) {
            if best.is_none_or(|(c, _)| chi2 < c) {
                best = Some((chi2, initial_from_linear(a, b, omega)));
            }
        }
    }
    let (_, start) = best.ok_or_else(|| Error::Degenerate("no frequency could be fitted".into()))?;
    let free = [0, 1, 2];
    let (params, cov, weights, iterations) = refine(&prep, start, &free)?;
    Ok(finish(&prep, params, &cov, &free, &weights, iterations))
}

/// Fit with the fringe frequency (rad per scan unit) held fixed.
pub fn fit_fringes_at_frequency(data: &FringeDataset, model: &ReadoutModel, frequency: f64) -> Result<FringeFit> {
    require(frequency.is_finite(), "fringe frequency", "finite", frequency)?;
    let prep = Prepared::new(data, model)?;
    let weights = prep.weights(|i| prep.y[i]);
    let (a, b, _) = linear_at(&prep, &weights, frequency)
        .ok_or_else(|| Error::Degenerate("singular design at this frequency".into()))?;
    let free = [0, 2];
    let (params, cov, weights, iterations) = refine(&prep, initial_from_linear(a, b, frequency), &free)?;
    Ok(finish(&prep, params, &cov, &free, &weights, iterations))
}
