//! Matter-wave kinematics: de Broglie wavelength, diffraction angles and the
//! supersonic terminal velocity.

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{Error, Result};

/// de Broglie wavelength λ = h/(m·v), m.
pub fn de_broglie(mass: f64, speed: f64) -> Result<f64> {
    if mass <= 0.0 || speed <= 0.0 {
        return Err(Error::Domain(format!(
            "de_broglie requires positive mass and speed, got mass={mass}, speed={speed}"
        )));
    }
    Ok(PLANCK / (mass * speed))
}

/// First-order diffraction angle θ₁ = λ/a for grating period a, rad.
pub fn diffraction_angle(wavelength: f64, period: f64) -> Result<f64> {
    if period <= 0.0 {
        return Err(Error::Domain(format!(
            "diffraction_angle requires a positive grating period, got {period}"
        )));
    }
    Ok(wavelength / period)
}

/// Bragg incidence angle θ_B = θ₁/2, rad.
pub fn bragg_angle(wavelength: f64, period: f64) -> Result<f64> {
    Ok(diffraction_angle(wavelength, period)? / 2.0)
}

/// Terminal velocity of a fully expanded monatomic supersonic beam,
/// v = sqrt(5·k_B·T/m) for carrier mass m, m/s.
pub fn supersonic_terminal_velocity(temperature: f64, carrier_mass: f64) -> Result<f64> {
    if temperature <= 0.0 || carrier_mass <= 0.0 {
        return Err(Error::Domain(format!(
            "supersonic_terminal_velocity requires positive inputs, got T={temperature}, m={carrier_mass}"
        )));
    }
    Ok((5.0 * BOLTZMANN * temperature / carrier_mass).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{AMU, ARGON_MASS_AMU};
    use crate::species::lithium7;

    #[test]
    fn de_broglie_lithium_at_beam_speed() {
        // 7 u at 1050 m/s → 54.3 pm
        let lambda = de_broglie(7.0 * AMU, 1050.0).unwrap();
        assert!((lambda - 54.3e-12).abs() / 54.3e-12 < 5e-3, "got {lambda}");
        // the real isotopic mass stays within half a percent
        let lambda = de_broglie(lithium7().mass, 1050.0).unwrap();
        assert!((lambda - 54.3e-12).abs() / 54.3e-12 < 5e-3, "got {lambda}");
    }

    #[test]
    fn de_broglie_scales_inversely_with_speed() {
        let m = 23.0 * AMU;
        let l1 = de_broglie(m, 800.0).unwrap();
        let l2 = de_broglie(m, 1600.0).unwrap();
        assert!((l1 / l2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn de_broglie_sodium_thermal_beam() {
        // 23 u at 1000 m/s → 17.3 pm (direct formula evaluation)
        let lambda = de_broglie(23.0 * AMU, 1000.0).unwrap();
        assert!((lambda - 17.35e-12).abs() < 0.05e-12, "got {lambda}");
    }

    #[test]
    fn de_broglie_rejects_nonpositive() {
        assert!(de_broglie(0.0, 1.0).is_err());
        assert!(de_broglie(1.0, -5.0).is_err());
    }

    #[test]
    fn first_order_angle_for_lithium() {
        // 54.3 pm over a 335 nm period → 162 µrad
        let theta = diffraction_angle(54.3e-12, 335.0e-9).unwrap();
        assert!((theta - 162.0e-6).abs() / 162.0e-6 < 5e-3, "got {theta}");
    }

    #[test]
    fn unit_ratio_gives_one_radian() {
        let a = 3.1e-7;
        assert_eq!(diffraction_angle(a, a).unwrap(), 1.0);
    }

    #[test]
    fn bragg_angle_is_half_the_diffraction_angle() {
        let theta_b = bragg_angle(54.3e-12, 335.0e-9).unwrap();
        assert!((theta_b - 81.0e-6).abs() / 81.0e-6 < 5e-3, "got {theta_b}");
    }

    #[test]
    fn diffraction_angle_rejects_bad_period() {
        assert!(diffraction_angle(54e-12, 0.0).is_err());
        assert!(diffraction_angle(54e-12, -1.0).is_err());
    }

    #[test]
    fn argon_seeded_beam_speed() {
        // 1050 K argon → 1045 m/s within 1%
        let v = supersonic_terminal_velocity(1050.0, ARGON_MASS_AMU * AMU).unwrap();
        assert!((v - 1045.0).abs() / 1045.0 < 0.01, "got {v}");
    }

    #[test]
    fn speed_scales_as_sqrt_temperature() {
        let m = ARGON_MASS_AMU * AMU;
        let v1 = supersonic_terminal_velocity(300.0, m).unwrap();
        let v2 = supersonic_terminal_velocity(1200.0, m).unwrap();
        assert!((v2 / v1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn heavier_carrier_slows_the_beam() {
        // quadruple carrier mass → half the speed: 522 m/s at 1050 K
        let v = supersonic_terminal_velocity(1050.0, 4.0 * ARGON_MASS_AMU * AMU).unwrap();
        assert!((v - 522.6).abs() < 1.0, "got {v}");
    }

    #[test]
    fn terminal_velocity_rejects_nonpositive() {
        assert!(supersonic_terminal_velocity(-1.0, 1e-26).is_err());
        assert!(supersonic_terminal_velocity(300.0, 0.0).is_err());
    }
}
