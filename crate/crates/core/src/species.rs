//! Atomic species data: isotope masses, abundances, optical properties and
//! ground-state hyperfine structure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::AMU;
use crate::error::{Error, Result};

/// Minimum ratio |detuning|/linewidth accepted for a laser-coupled level.
/// Below this the coherent-diffraction picture breaks down.
pub const MIN_DETUNING_LINEWIDTH_RATIO: f64 = 20.0;

/// One ground-state hyperfine level and the laser detuning it sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperfineLevel {
    /// Twice the total angular momentum F (handles half-integer F).
    pub two_f: u32,
    /// Laser detuning for this level, rad/s. Positive is blue.
    pub detuning: f64,
}

impl HyperfineLevel {
    /// Zeeman degeneracy 2F+1.
    pub fn degeneracy(&self) -> u32 {
        self.two_f + 1
    }
}

/// One isotope: mass, natural abundance, optical data and hyperfine levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    /// Atomic mass, kg.
    pub mass: f64,
    /// Natural abundance fraction; abundances of a species list sum to 1.
    pub abundance: f64,
    /// Resonance wavelength, m.
    pub resonance_wavelength: f64,
    /// Natural linewidth, rad/s.
    pub linewidth: f64,
    /// Saturation intensity, W/m².
    pub saturation_intensity: f64,
    /// Whether the grating light couples to this isotope. An uncoupled
    /// isotope is transmitted undiffracted.
    pub coupled: bool,
    pub levels: Vec<HyperfineLevel>,
}

impl Species {
    /// Standing-wave grating period a = λ_r/2.
    pub fn grating_period(&self) -> f64 {
        self.resonance_wavelength / 2.0
    }

    /// Grating wavevector magnitude k_g = 2π/a = 4π/λ_r, rad/m.
    pub fn grating_wavevector(&self) -> f64 {
        4.0 * PI / self.resonance_wavelength
    }
}

/// ⁷Li with the lithium D2 optical data and the two ground hyperfine levels.
pub fn lithium7() -> Species {
    Species {
        name: "7Li".to_string(),
        mass: 7.0160034366 * AMU,
        abundance: 0.926,
        resonance_wavelength: 671.0e-9,
        linewidth: 2.0 * PI * 5.87e6,
        saturation_intensity: 25.4,
        coupled: true,
        levels: vec![
            HyperfineLevel { two_f: 2, detuning: 2.0 * PI * 2.1e9 },
            HyperfineLevel { two_f: 4, detuning: 2.0 * PI * 2.9e9 },
        ],
    }
}

/// ⁶Li. The grating laser sits far from its resonances, so it is carried as
/// an uncoupled isotope: transmitted straight through every grating.
pub fn lithium6() -> Species {
    Species {
        name: "6Li".to_string(),
        mass: 6.0151228874 * AMU,
        abundance: 0.074,
        resonance_wavelength: 671.0e-9,
        linewidth: 2.0 * PI * 5.87e6,
        saturation_intensity: 25.4,
        coupled: false,
        levels: vec![
            HyperfineLevel { two_f: 1, detuning: -2.0 * PI * 8.3e9 },
            HyperfineLevel { two_f: 3, detuning: -2.0 * PI * 8.1e9 },
        ],
    }
}

/// Natural lithium: 92.6% ⁷Li, 7.4% ⁶Li.
pub fn natural_lithium() -> Vec<Species> {
    vec![lithium7(), lithium6()]
}

/// Validate a species list: positive masses and wavelengths, abundances
/// summing to one, and far-detuned coupling for every driven level.
pub fn validate_species(list: &[Species]) -> Result<()> {
    if list.is_empty() {
        return Err(Error::Config("species list is empty".into()));
    }
    let mut total = 0.0;
    for sp in list {
        if sp.mass <= 0.0 {
            return Err(Error::Config(format!("{}: mass must be positive", sp.name)));
        }
        if sp.resonance_wavelength <= 0.0 {
            return Err(Error::Config(format!(
                "{}: resonance wavelength must be positive",
                sp.name
            )));
        }
        if sp.abundance < 0.0 {
            return Err(Error::Config(format!("{}: negative abundance", sp.name)));
        }
        if sp.levels.is_empty() {
            return Err(Error::Config(format!("{}: no hyperfine levels", sp.name)));
        }
        if sp.coupled {
            if sp.linewidth <= 0.0 || sp.saturation_intensity <= 0.0 {
                return Err(Error::Config(format!(
                    "{}: coupled species needs positive linewidth and saturation intensity",
                    sp.name
                )));
            }
            for level in &sp.levels {
                if level.detuning.abs() < MIN_DETUNING_LINEWIDTH_RATIO * sp.linewidth {
                    return Err(Error::Config(format!(
                        "{} 2F={}: |detuning| must exceed {}×linewidth for coherent diffraction",
                        sp.name, level.two_f, MIN_DETUNING_LINEWIDTH_RATIO
                    )));
                }
            }
        }
        total += sp.abundance;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "abundances sum to {total}, expected 1 within 1e-9"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_lithium_validates() {
        validate_species(&natural_lithium()).unwrap();
    }

    #[test]
    fn grating_period_is_half_wavelength() {
        let li = lithium7();
        assert_eq!(li.grating_period(), li.resonance_wavelength / 2.0);
        // a = 335.5 nm for the 671 nm resonance
        assert!((li.grating_period() - 335.5e-9).abs() < 1e-12);
    }

    #[test]
    fn abundance_sum_enforced() {
        let mut list = natural_lithium();
        list[0].abundance = 0.9;
        assert!(validate_species(&list).is_err());
    }

    #[test]
    fn near_resonant_level_rejected() {
        let mut list = natural_lithium();
        list[0].levels[0].detuning = list[0].linewidth * 2.0;
        assert!(validate_species(&list).is_err());
    }

    #[test]
    fn degeneracies_follow_two_f() {
        let li = lithium7();
        // F=1 and F=2 carry 3 and 5 sublevels
        assert_eq!(li.levels[0].degeneracy(), 3);
        assert_eq!(li.levels[1].degeneracy(), 5);
    }
}
