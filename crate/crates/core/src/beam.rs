//! Supersonic-beam source model and Monte Carlo sampling of individual atoms
//! through the two-slit collimator.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::constants::PLANCK;
use crate::error::{Error, Result};
use crate::geometry::CollimationGeometry;
use crate::kinematics::supersonic_terminal_velocity;
use crate::species::Species;

/// Seeded supersonic beam: mean speed v₀ and parallel speed ratio S, so the
/// longitudinal speed distribution is Gaussian with σ_v = v₀/S.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamSource {
    /// Mean speed v₀, m/s.
    pub mean_speed: f64,
    /// Parallel speed ratio S = v₀/σ_v.
    pub speed_ratio: f64,
    /// Source temperature, K (informational).
    pub temperature: f64,
    /// Carrier-gas atomic mass, kg.
    pub carrier_mass: f64,
}

impl BeamSource {
    /// Build a source whose mean speed is the full-expansion terminal
    /// velocity for the given temperature and carrier gas.
    pub fn from_temperature(temperature: f64, carrier_mass: f64, speed_ratio: f64) -> Result<Self> {
        Ok(BeamSource {
            mean_speed: supersonic_terminal_velocity(temperature, carrier_mass)?,
            speed_ratio,
            temperature,
            carrier_mass,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean_speed <= 0.0 {
            return Err(Error::Config(format!(
                "beam mean speed must be positive, got {}",
                self.mean_speed
            )));
        }
        if self.speed_ratio <= 1.0 {
            return Err(Error::Config(format!(
                "speed ratio must exceed 1, got {}",
                self.speed_ratio
            )));
        }
        Ok(())
    }
}

/// One sampled atom of the collimated beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSample {
    /// Index into the species list.
    pub species: usize,
    /// Index into the species' hyperfine-level list.
    pub level: usize,
    /// Statistical weight of the sample.
    pub weight: f64,
    /// Longitudinal speed, m/s.
    pub speed: f64,
    /// Transverse trajectory angle θ_x, rad.
    pub angle: f64,
    /// Transverse offset at the second collimation slit, m.
    pub offset: f64,
}

impl AtomSample {
    /// de Broglie wavelength of this sample, m.
    pub fn de_broglie(&self, species: &[Species]) -> f64 {
        PLANCK / (species[self.species].mass * self.speed)
    }

    /// Straight-line transverse position at plane z (no diffraction kicks).
    pub fn straight_x(&self, geom: &CollimationGeometry, z: f64) -> f64 {
        self.offset + self.angle * (z - geom.slit1_z)
    }
}

/// Draw one atom: speed from the truncated Gaussian, transverse phase space
/// uniform over the two-slit acceptance, isotope by abundance and hyperfine
/// level by Zeeman degeneracy. Deterministic for a given RNG state.
pub fn sample_atom<R: Rng>(
    source: &BeamSource,
    geom: &CollimationGeometry,
    species: &[Species],
    rng: &mut R,
) -> Result<AtomSample> {
    if species.is_empty() {
        return Err(Error::Config("cannot sample from an empty species list".into()));
    }
    if geom.slit_separation() <= 0.0 {
        return Err(Error::Config(
            "collimation slits must be separated along the beamline".into(),
        ));
    }
    source.validate()?;

    // Uniform positions inside both slit apertures give a uniform density
    // over the accepted transverse phase space.
    let x0 = (rng.random::<f64>() - 0.5) * geom.slit0_width;
    let x1 = (rng.random::<f64>() - 0.5) * geom.slit1_width;
    let angle = (x1 - x0) / geom.slit_separation();

    let sigma = source.mean_speed / source.speed_ratio;
    let speed = loop {
        let g: f64 = rand_distr::StandardNormal.sample(rng);
        let v = source.mean_speed + sigma * g;
        if v > 0.0 {
            break v;
        }
    };

    let species_idx = {
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = species.len() - 1;
        for (i, sp) in species.iter().enumerate() {
            acc += sp.abundance;
            if r < acc {
                chosen = i;
                break;
            }
        }
        chosen
    };

    let levels = &species[species_idx].levels;
    let total_deg: u32 = levels.iter().map(|l| l.degeneracy()).sum();
    let level_idx = {
        let r: f64 = rng.random::<f64>() * f64::from(total_deg);
        let mut acc = 0.0;
        let mut chosen = levels.len() - 1;
        for (i, l) in levels.iter().enumerate() {
            acc += f64::from(l.degeneracy());
            if r < acc {
                chosen = i;
                break;
            }
        }
        chosen
    };

    Ok(AtomSample {
        species: species_idx,
        level: level_idx,
        weight: 1.0,
        speed,
        angle,
        offset: x1,
    })
}
