//! Aerodynamic load on the aileron and the extension spring that stands in
//! for it on the rig.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Statute miles per hour to metres per second.
pub const MPH_TO_MPS: f64 = 0.44704;

/// Aileron geometry and flight envelope of the studied aircraft.
///
/// Defaults are the case-study values, with cruise speeds converted from
/// statute miles per hour.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AirfoilSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub area_m2: f64,
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub v_avg_mps: f64,
    pub theta_max_deg: f64,
    pub rho_kg_m3: f64,
}

impl Default for AirfoilSpec {
    fn default() -> Self {
        Self {
            width_m: 0.428,
            height_m: 0.048,
            area_m2: 0.021,
            v_min_mps: 40.0 * MPH_TO_MPS,
            v_max_mps: 50.0 * MPH_TO_MPS,
            v_avg_mps: 45.0 * MPH_TO_MPS,
            theta_max_deg: 40.0,
            rho_kg_m3: 1.27,
        }
    }
}

impl AirfoilSpec {
    /// Check internal consistency of the specification.
    pub fn validate(&self) -> Result<()> {
        if self.rho_kg_m3 <= 0.0 {
            return Err(Error::Config(format!("air density must be positive, got {}", self.rho_kg_m3)));
        }
        if !(self.v_min_mps <= self.v_avg_mps && self.v_avg_mps <= self.v_max_mps) {
            return Err(Error::Config(format!(
                "cruise speeds must be ordered min <= avg <= max, got ({}, {}, {})",
                self.v_min_mps, self.v_avg_mps, self.v_max_mps
            )));
        }
        if !(self.theta_max_deg > 0.0 && self.theta_max_deg <= 90.0) {
            return Err(Error::Config(format!(
                "max deployment angle must be in (0, 90], got {}",
                self.theta_max_deg
            )));
        }
        let product = self.width_m * self.height_m;
        if (self.area_m2 - product).abs() > 0.05 * product {
            return Err(Error::Config(format!(
                "surface area {} inconsistent with width x height = {product}",
                self.area_m2
            )));
        }
        Ok(())
    }
}

/// The extension spring loading the control horn.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpringSpec {
    /// Hooke stiffness k, newtons per metre.
    pub stiffness_n_per_m: f64,
    /// Horn arm length, metres; extension x(θ) = arm * sin θ.
    pub arm_length_m: f64,
    /// Extension at the maximum deployment angle, metres.
    pub max_extension_m: f64,
}

/// Aerodynamic normal force on the control surface at the given airspeed
/// and deflection: F = ½ ρ v² A cos θ.
pub fn aero_force(spec: &AirfoilSpec, v_mps: f64, theta_deg: f64) -> Result<f64> {
    if theta_deg.abs() > 90.0 {
        return Err(Error::Domain(format!("deflection {theta_deg}° outside [-90, 90]")));
    }
    if v_mps < 0.0 {
        return Err(Error::Domain(format!("airspeed must be non-negative, got {v_mps}")));
    }
    let theta = theta_deg.to_radians();
    // cos θ is even, so the force is non-negative over the whole domain
    Ok(0.5 * spec.rho_kg_m3 * v_mps * v_mps * spec.area_m2 * theta.cos())
}

/// Size the spring so its resistance at the maximum deployment angle
/// matches the aerodynamic force at maximum cruise speed.
pub fn size_spring(spec: &AirfoilSpec, arm_length_m: f64) -> Result<SpringSpec> {
    if arm_length_m <= 0.0 {
        return Err(Error::Config(format!("arm length must be positive, got {arm_length_m}")));
    }
    let theta_max = spec.theta_max_deg.to_radians();
    let max_extension = arm_length_m * theta_max.sin();
    if max_extension <= 0.0 {
        return Err(Error::Degenerate(
            "zero maximum deployment angle leaves the spring unloaded".into(),
        ));
    }
    let f_max = aero_force(spec, spec.v_max_mps, spec.theta_max_deg)?;
    Ok(SpringSpec {
        stiffness_n_per_m: f_max / max_extension,
        arm_length_m,
        max_extension_m: max_extension,
    })
}

/// Spring force at a deflection angle, signed to oppose the deflection
/// (the rig mounts one spring per side).
pub fn spring_force(spring: &SpringSpec, theta_deg: f64) -> Result<f64> {
    if theta_deg.abs() > 90.0 {
        return Err(Error::Domain(format!("deflection {theta_deg}° outside [-90, 90]")));
    }
    let extension = spring.arm_length_m * theta_deg.to_radians().sin().abs();
    let magnitude = spring.stiffness_n_per_m * extension;
    Ok(-theta_deg.signum() * magnitude)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_spec_is_consistent() {
        AirfoilSpec::default().validate().unwrap();
    }

    #[test]
    fn force_vanishes_at_right_angle() {
        let spec = AirfoilSpec::default();
        assert_abs_diff_eq!(aero_force(&spec, 20.0, 90.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn force_at_average_cruise() {
        let spec = AirfoilSpec::default();
        // ½·1.27·20.1168²·0.021 ≈ 5.40 N
        let f0 = aero_force(&spec, 45.0 * MPH_TO_MPS, 0.0).unwrap();
        assert_abs_diff_eq!(f0, 5.40, epsilon = 0.01);
        let f40 = aero_force(&spec, 45.0 * MPH_TO_MPS, 40.0).unwrap();
        assert_abs_diff_eq!(f40, f0 * 40f64.to_radians().cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(f40, 4.13, epsilon = 0.01);
    }

    #[test]
    fn force_rejects_out_of_range_angle() {
        let spec = AirfoilSpec::default();
        assert!(aero_force(&spec, 10.0, 91.0).is_err());
        assert!(aero_force(&spec, -1.0, 0.0).is_err());
    }

    #[test]
    fn spring_sizing_chain() {
        let spec = AirfoilSpec::default();
        let spring = size_spring(&spec, 0.02).unwrap();
        // aero_force(v_max, 40°) / (0.02 sin 40°) ≈ 396 N/m
        assert_abs_diff_eq!(spring.stiffness_n_per_m, 396.0, epsilon = 2.0);
        assert_abs_diff_eq!(spring.max_extension_m, 0.02 * 40f64.to_radians().sin(), epsilon = 1e-12);
    }

    #[test]
    fn doubling_arm_halves_stiffness() {
        let spec = AirfoilSpec::default();
        let s1 = size_spring(&spec, 0.02).unwrap();
        let s2 = size_spring(&spec, 0.04).unwrap();
        assert_abs_diff_eq!(s1.stiffness_n_per_m, 2.0 * s2.stiffness_n_per_m, epsilon = 1e-9);
    }

    #[test]
    fn full_deployment_extension_equals_arm() {
        let spec = AirfoilSpec { theta_max_deg: 90.0, ..AirfoilSpec::default() };
        let spring = size_spring(&spec, 0.02).unwrap();
        assert_abs_diff_eq!(spring.max_extension_m, 0.02, epsilon = 1e-12);
    }

    #[test]
    fn sized_spring_balances_peak_load() {
        let spec = AirfoilSpec::default();
        let spring = size_spring(&spec, 0.02).unwrap();
        let aero = aero_force(&spec, spec.v_max_mps, spec.theta_max_deg).unwrap();
        let resist = spring_force(&spring, spec.theta_max_deg).unwrap();
        assert_abs_diff_eq!(resist.abs(), aero, epsilon = aero * 1e-9);
        // symmetric rig: same magnitude, opposite sign at -θ_max
        let other = spring_force(&spring, -spec.theta_max_deg).unwrap();
        assert_abs_diff_eq!(other, -resist, epsilon = 1e-12);
    }

    #[test]
    fn spring_force_zero_at_neutral() {
        let spec = AirfoilSpec::default();
        let spring = size_spring(&spec, 0.02).unwrap();
        assert_abs_diff_eq!(spring_force(&spring, 0.0).unwrap(), 0.0, epsilon = 1e-12);
    }
}
