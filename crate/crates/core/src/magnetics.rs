//! Pole-piece field model and field-environment checks.
//!
//! The sharp pole piece is represented by a uniformly magnetised sphere whose
//! external on-axis field is `B_s (R/r)³`. Two opposing spheres face each
//! other across a gap measured between their surfaces; with opposite polarity
//! their gradients add along the axis.
//!
//! The closed-form dipole gradient is a cross-check only. Downstream physics
//! uses the configured constant gradient unless a scenario explicitly selects
//! [`GradientModel::DipoleSphere`].

use crate::error::{non_negative, positive, require, Error, Result};

/// Saturation field of Hyperco pole pieces, T.
pub const SATURATION_FIELD: f64 = 2.4;
/// Minimum bias field for NV axis alignment, T.
pub const ALIGNMENT_BIAS_FIELD: f64 = 0.05;
/// Required run-to-run stability of the persistent-mode magnets (fractional).
pub const STABILITY_REQUIREMENT: f64 = 1e-9;
/// Headline inhomogeneity used by all downstream kinematics, T/m.
pub const DEFAULT_GRADIENT: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrangement {
    Single,
    OpposingPair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolePieceModel {
    pub tip_radius: f64,
    pub surface_field: f64,
    /// Distance between the two sphere surfaces.
    pub gap: f64,
    pub arrangement: Arrangement,
}

impl Default for PolePieceModel {
    fn default() -> Self {
        Self {
            tip_radius: 20e-6,
            surface_field: SATURATION_FIELD,
            gap: 160e-6,
            arrangement: Arrangement::OpposingPair,
        }
    }
}

impl PolePieceModel {
    pub fn new(tip_radius: f64, surface_field: f64, gap: f64, arrangement: Arrangement) -> Result<Self> {
        let model = Self {
            tip_radius,
            surface_field,
            gap,
            arrangement,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        positive("tip radius", self.tip_radius)?;
        positive("surface field", self.surface_field)?;
        positive("pole gap", self.gap)
    }

    pub fn saturation_ok(&self) -> bool {
        self.surface_field >= SATURATION_FIELD
    }

    /// Separation of the two sphere centres.
    pub fn centre_separation(&self) -> f64 {
        self.gap + 2.0 * self.tip_radius
    }

    /// Distance from a sphere centre to the gap midpoint.
    pub fn midpoint_distance(&self) -> f64 {
        self.centre_separation() / 2.0
    }

    fn check_position(&self, r: f64) -> Result<()> {
        if !(r >= self.tip_radius) || !r.is_finite() {
            return Err(Error::InvalidInput {
                name: "distance from sphere centre",
                requirement: ">= tip radius",
                value: r,
            });
        }
        if self.arrangement == Arrangement::OpposingPair && r > self.centre_separation() - self.tip_radius {
            return Err(Error::InvalidInput {
                name: "distance from sphere centre",
                requirement: "outside the opposing sphere",
                value: r,
            });
        }
        Ok(())
    }

    fn single_field(&self, r: f64) -> f64 {
        self.surface_field * (self.tip_radius / r).powi(3)
    }

    fn single_gradient(&self, r: f64) -> f64 {
        3.0 * self.surface_field * self.tip_radius.powi(3) / r.powi(4)
    }
}

/// On-axis field at distance `r` from the (first) sphere centre.
///
/// For the opposing pair the second sphere contributes with opposite sign.
pub fn sphere_field(model: &PolePieceModel, r: f64) -> Result<f64> {
    model.check_position(r)?;
    Ok(match model.arrangement {
        Arrangement::Single => model.single_field(r),
        Arrangement::OpposingPair => {
            model.single_field(r) - model.single_field(model.centre_separation() - r)
        }
    })
}

/// Magnitude of the on-axis gradient `|dB/dr|`.
pub fn sphere_gradient(model: &PolePieceModel, r: f64) -> Result<f64> {
    model.check_position(r)?;
    Ok(match model.arrangement {
        Arrangement::Single => model.single_gradient(r),
        Arrangement::OpposingPair => {
            model.single_gradient(r) + model.single_gradient(model.centre_separation() - r)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientModel {
    ConfiguredConstant,
    DipoleSphere,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEnvironment {
    pub bias_field: f64,
    pub gradient: f64,
    pub gradient_model: GradientModel,
    /// Fractional drift per day.
    pub run_to_run_stability: f64,
}

impl Default for FieldEnvironment {
    fn default() -> Self {
        Self {
            bias_field: ALIGNMENT_BIAS_FIELD,
            gradient: DEFAULT_GRADIENT,
            gradient_model: GradientModel::ConfiguredConstant,
            run_to_run_stability: 1e-9,
        }
    }
}

impl FieldEnvironment {
    pub fn validate(&self) -> Result<()> {
        non_negative("bias field", self.bias_field)?;
        non_negative("gradient", self.gradient)?;
        require(
            self.run_to_run_stability >= 0.0,
            "field stability",
            ">= 0",
            self.run_to_run_stability,
        )
    }

    pub fn alignment_ok(&self) -> bool {
        self.bias_field >= ALIGNMENT_BIAS_FIELD
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldReport {
    pub saturation_ok: bool,
    pub alignment_ok: bool,
    pub stability_ok: bool,
    /// Gradient used by the interferometer, T/m.
    pub gradient_used: f64,
    pub gradient_model: GradientModel,
    pub configured_gradient: f64,
    /// Single sphere, 80 μm measured from the surface (r = R + gap/2).
    pub dipole_single_surface: f64,
    /// Single sphere, gap/2 measured from the centre.
    pub dipole_single_centre: f64,
    /// Opposing pair at the gap midpoint.
    pub dipole_pair_midpoint: f64,
}

impl FieldReport {
    pub fn all_ok(&self) -> bool {
        self.saturation_ok && self.alignment_ok && self.stability_ok
    }

    /// Configured gradient over the pair's dipole estimate at the midpoint.
    pub fn dipole_discrepancy(&self) -> f64 {
        self.configured_gradient / self.dipole_pair_midpoint
    }
}

pub fn environment_report(env: &FieldEnvironment, model: &PolePieceModel) -> Result<FieldReport> {
    env.validate()?;
    model.validate()?;
    let single = PolePieceModel {
        arrangement: Arrangement::Single,
        ..*model
    };
    let pair = PolePieceModel {
        arrangement: Arrangement::OpposingPair,
        ..*model
    };
    let half_gap = model.gap / 2.0;
    let dipole_single_surface = sphere_gradient(&single, model.tip_radius + half_gap)?;
    let dipole_single_centre = sphere_gradient(&single, half_gap.max(model.tip_radius))?;
    let dipole_pair_midpoint = sphere_gradient(&pair, pair.midpoint_distance())?;

    let gradient_used = match env.gradient_model {
        GradientModel::ConfiguredConstant => env.gradient,
        GradientModel::DipoleSphere => match model.arrangement {
            Arrangement::OpposingPair => dipole_pair_midpoint,
            Arrangement::Single => dipole_single_surface,
        },
    };

    Ok(FieldReport {
        saturation_ok: model.saturation_ok(),
        alignment_ok: env.alignment_ok(),
        stability_ok: env.run_to_run_stability <= STABILITY_REQUIREMENT,
        gradient_used,
        gradient_model: env.gradient_model,
        configured_gradient: env.gradient,
        dipole_single_surface,
        dipole_single_centre,
        dipole_pair_midpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single() -> PolePieceModel {
        PolePieceModel {
            arrangement: Arrangement::Single,
            ..PolePieceModel::default()
        }
    }

    #[test]
    fn field_values() {
        let m = single();
        assert_eq!(sphere_field(&m, 20e-6).unwrap(), 2.4);
        assert_relative_eq!(sphere_field(&m, 100e-6).unwrap(), 0.0192, max_relative = 1e-12);
        assert!(sphere_field(&m, 1.0).unwrap() < 1e-13);
        assert!(sphere_field(&m, 10e-6).is_err());
    }

    #[test]
    fn gradient_values() {
        assert_relative_eq!(sphere_gradient(&single(), 100e-6).unwrap(), 576.0, max_relative = 1e-12);
        let pair = PolePieceModel::default();
        assert_relative_eq!(
            sphere_gradient(&pair, pair.midpoint_distance()).unwrap(),
            1152.0,
            max_relative = 1e-12
        );
        assert!(sphere_gradient(&pair, 190e-6).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        for model in [single(), PolePieceModel::default()] {
            let r0 = model.tip_radius;
            let upper = match model.arrangement {
                Arrangement::Single => 10.0 * r0,
                Arrangement::OpposingPair => model.centre_separation() - r0,
            };
            for i in 0..=200 {
                let r = r0 + (upper - r0) * i as f64 / 200.0;
                let h = 1e-4 * r0;
                let (lo, hi) = ((r - h).max(r0), (r + h).min(upper));
                let fd = -(sphere_field(&model, hi).unwrap() - sphere_field(&model, lo).unwrap()) / (hi - lo);
                let g = sphere_gradient(&model, r).unwrap();
                // one-sided differences at the ends are first order; use a looser bound there
                let tol = if lo == r || hi == r { 1e-3 } else { 1e-6 };
                assert!(((fd - g) / g).abs() < tol, "r={r:e}: fd={fd} g={g}");
            }
        }
    }

    #[test]
    fn pair_midpoint_is_twice_single() {
        let pair = PolePieceModel::default();
        let r = pair.midpoint_distance();
        let g_pair = sphere_gradient(&pair, r).unwrap();
        let g_single = sphere_gradient(&single(), r).unwrap();
        assert_relative_eq!(g_pair, 2.0 * g_single, max_relative = 1e-15);
    }

    #[test]
    fn single_field_and_gradient_decrease() {
        let m = single();
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for i in 0..1000 {
            let r = 20e-6 * (1.0 + i as f64 * 0.01);
            let cur = (sphere_field(&m, r).unwrap(), sphere_gradient(&m, r).unwrap());
            assert!(cur.0 < prev.0 && cur.1 < prev.1);
            prev = cur;
        }
    }

    #[test]
    fn default_report() {
        let r = environment_report(&FieldEnvironment::default(), &PolePieceModel::default()).unwrap();
        assert!(r.saturation_ok && r.alignment_ok && r.stability_ok);
        assert_eq!(r.gradient_used, 1e4);
        assert_relative_eq!(r.dipole_single_surface, 576.0, max_relative = 1e-12);
        assert_relative_eq!(r.dipole_single_centre, 1406.25, max_relative = 1e-12);
        assert_relative_eq!(r.dipole_pair_midpoint, 1152.0, max_relative = 1e-12);
        assert!(r.dipole_discrepancy() > 8.0);
    }

    #[test]
    fn report_flags_failures() {
        let weak_bias = FieldEnvironment {
            bias_field: 0.01,
            ..FieldEnvironment::default()
        };
        let r = environment_report(&weak_bias, &PolePieceModel::default()).unwrap();
        assert!(!r.alignment_ok);

        let unsaturated = PolePieceModel {
            surface_field: 2.0,
            ..PolePieceModel::default()
        };
        let r = environment_report(&FieldEnvironment::default(), &unsaturated).unwrap();
        assert!(!r.saturation_ok);

        let drifting = FieldEnvironment {
            run_to_run_stability: 1e-7,
            ..FieldEnvironment::default()
        };
        assert!(!environment_report(&drifting, &PolePieceModel::default()).unwrap().stability_ok);
    }

    #[test]
    fn dipole_model_is_only_used_when_selected() {
        let env = FieldEnvironment {
            gradient_model: GradientModel::DipoleSphere,
            ..FieldEnvironment::default()
        };
        let r = environment_report(&env, &PolePieceModel::default()).unwrap();
        assert_relative_eq!(r.gradient_used, 1152.0, max_relative = 1e-12);
    }
}
