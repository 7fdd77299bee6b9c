//! Run configuration: a TOML key-tree mirroring every module's types, with
//! embedded defaults, unit-suffixed key names, strict unknown-key rejection
//! and auto-calibration of derived quantities.

use serde::{Deserialize, Serialize};

use crate::beam::{AtomSample, BeamSource};
use crate::bragg::{pulse_params, Envelope, StandingWave, DEFAULT_DT_FACTOR, DEFAULT_P_MAX};
use crate::constants::{AMU, HBAR};
use crate::error::{Error, Result};
use crate::geometry::CollimationGeometry;
use crate::interferometer::{DiffractionModel, InterferometerConfig};
use crate::noise::{DetectorModel, VibrationModel};
use crate::species::{HyperfineLevel, Species};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelEntry {
    pub two_f: u32,
    /// Laser detuning δ/2π, GHz.
    pub detuning_ghz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesEntry {
    pub name: String,
    pub mass_amu: f64,
    pub abundance: f64,
    pub resonance_wavelength_nm: f64,
    /// Natural linewidth Γ/2π, MHz.
    pub linewidth_mhz: f64,
    pub saturation_intensity_mw_cm2: f64,
    pub coupled: bool,
    pub levels: Vec<LevelEntry>,
}

impl SpeciesEntry {
    fn to_species(&self) -> Species {
        Species {
            name: self.name.clone(),
            mass: self.mass_amu * AMU,
            abundance: self.abundance,
            resonance_wavelength: self.resonance_wavelength_nm * 1e-9,
            linewidth: 2.0 * std::f64::consts::PI * self.linewidth_mhz * 1e6,
            // 1 mW/cm² = 10 W/m²
            saturation_intensity: self.saturation_intensity_mw_cm2 * 10.0,
            coupled: self.coupled,
            levels: self
                .levels
                .iter()
                .map(|l| HyperfineLevel {
                    two_f: l.two_f,
                    detuning: 2.0 * std::f64::consts::PI * l.detuning_ghz * 1e9,
                })
                .collect(),
        }
    }
}

fn default_species() -> Vec<SpeciesEntry> {
    vec![
        SpeciesEntry {
            name: "7Li".into(),
            mass_amu: 7.0160034366,
            abundance: 0.926,
            resonance_wavelength_nm: 671.0,
            linewidth_mhz: 5.87,
            saturation_intensity_mw_cm2: 2.54,
            coupled: true,
            levels: vec![
                LevelEntry { two_f: 2, detuning_ghz: 2.1 },
                LevelEntry { two_f: 4, detuning_ghz: 2.9 },
            ],
        },
        SpeciesEntry {
            name: "6Li".into(),
            mass_amu: 6.0151228874,
            abundance: 0.074,
            resonance_wavelength_nm: 671.0,
            linewidth_mhz: 5.87,
            saturation_intensity_mw_cm2: 2.54,
            coupled: false,
            levels: vec![
                LevelEntry { two_f: 1, detuning_ghz: -8.3 },
                LevelEntry { two_f: 3, detuning_ghz: -8.1 },
            ],
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    pub mean_speed_m_s: f64,
    pub speed_ratio: f64,
    pub temperature_k: f64,
    pub carrier_mass_amu: f64,
    /// Rate of collimated atoms entering the interferometer, atoms/s.
    pub flux_hz: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection {
            mean_speed_m_s: 1050.0,
            speed_ratio: 20.0,
            temperature_k: 1050.0,
            carrier_mass_amu: 39.948,
            flux_hz: 2.8e5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub slit0_width_um: f64,
    pub slit0_z_m: f64,
    pub slit1_width_um: f64,
    pub slit1_z_m: f64,
    pub mirror_z_m: [f64; 3],
    pub detector_slit_z_m: f64,
    pub detector_z_m: f64,
    pub detector_slit_width_um: f64,
    pub ribbon_width_um: f64,
    pub aperture_height_mm: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            slit0_width_um: 20.0,
            slit0_z_m: 0.480,
            slit1_width_um: 12.0,
            slit1_z_m: 1.260,
            mirror_z_m: [1.410, 2.015, 2.620],
            detector_slit_z_m: 3.020,
            detector_z_m: 3.370,
            detector_slit_width_um: 30.0,
            ribbon_width_um: 760.0,
            aperture_height_mm: 3.0,
        }
    }
}

impl GeometrySection {
    fn to_geometry(&self) -> CollimationGeometry {
        CollimationGeometry {
            slit0_width: self.slit0_width_um * 1e-6,
            slit0_z: self.slit0_z_m,
            slit1_width: self.slit1_width_um * 1e-6,
            slit1_z: self.slit1_z_m,
            mirror_z: self.mirror_z_m,
            detector_slit_z: self.detector_slit_z_m,
            detector_z: self.detector_z_m,
            detector_slit_width: self.detector_slit_width_um * 1e-6,
            ribbon_width: self.ribbon_width_um * 1e-6,
            aperture_height: self.aperture_height_mm * 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveSection {
    pub power_mw: f64,
    pub waist_mm: f64,
    pub mirror_x_nm: f64,
    /// Mirror rotation about y, µrad; defaults to the Bragg angle of the
    /// reference species at the mean beam speed.
    pub theta_y_urad: Option<f64>,
    pub theta_z_urad: f64,
    pub loss_probability: f64,
    pub envelope: Envelope,
    pub active: bool,
}

impl Default for WaveSection {
    fn default() -> Self {
        WaveSection {
            power_mw: 40.0,
            waist_mm: 6.5,
            mirror_x_nm: 0.0,
            theta_y_urad: None,
            theta_z_urad: 0.0,
            loss_probability: 0.02,
            envelope: Envelope::Gaussian,
            active: true,
        }
    }
}

fn default_waves() -> Vec<WaveSection> {
    vec![
        WaveSection { power_mw: 40.0, ..Default::default() },
        WaveSection { power_mw: 80.0, ..Default::default() },
        WaveSection { power_mw: 40.0, ..Default::default() },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub efficiency: f64,
    pub background_cps: f64,
    pub burst_rate_hz: f64,
    pub burst_counts: f64,
    /// Detector-slit center for exit 1, µm; defaults to the exit-1 beam
    /// position at the detector-slit plane.
    pub slit_center_um: Option<f64>,
}

impl Default for DetectorSection {
    fn default() -> Self {
        DetectorSection {
            efficiency: 0.4,
            background_cps: 3370.0,
            burst_rate_hz: 0.0,
            burst_counts: 0.0,
            slit_center_um: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VibrationSection {
    pub rms_nm: f64,
    pub bandwidth_khz: f64,
}

impl Default for VibrationSection {
    fn default() -> Self {
        VibrationSection { rms_nm: 3.0, bandwidth_khz: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub model: DiffractionModel,
    pub seed: u64,
    pub samples: usize,
    pub p_max: i32,
    pub dt_factor: f64,
    /// Coupling calibration constant; defaults so the middle grating drives
    /// a π pulse for the reference species at the mean speed.
    pub coupling_scale: Option<f64>,
    /// Per-bin Gaussian fringe-phase dispersion injected into fringe runs,
    /// rad rms.
    pub phase_dispersion_rad: f64,
    pub include_strays: bool,
    pub ideal_ports: bool,
    pub single_velocity: bool,
    pub spacing_tolerance_mm: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            model: DiffractionModel::TwoLevel,
            seed: 20260810,
            samples: 20_000,
            p_max: DEFAULT_P_MAX,
            dt_factor: DEFAULT_DT_FACTOR,
            coupling_scale: None,
            phase_dispersion_rad: 0.63,
            include_strays: true,
            ideal_ports: false,
            single_velocity: false,
            spacing_tolerance_mm: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub duration_s: f64,
    pub bin_s: f64,
    /// Mirror-3 sweep rate, nm/s.
    pub rate_nm_per_s: f64,
    /// Quadratic sweep term from piezo hysteresis, nm/s².
    pub accel_nm_per_s2: f64,
    pub start_nm: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            duration_s: 40.0,
            bin_s: 0.1,
            rate_nm_per_s: 100.0,
            accel_nm_per_s2: 0.35,
            start_nm: 0.0,
        }
    }
}

/// Complete run configuration, one-to-one with the TOML config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub species: Vec<SpeciesEntry>,
    pub beam: BeamSection,
    pub geometry: GeometrySection,
    pub waves: Vec<WaveSection>,
    pub detector: DetectorSection,
    pub vibration: VibrationSection,
    pub simulation: SimulationSection,
    pub sweep: SweepSection,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            species: default_species(),
            beam: BeamSection::default(),
            geometry: GeometrySection::default(),
            waves: default_waves(),
            detector: DetectorSection::default(),
            vibration: VibrationSection::default(),
            simulation: SimulationSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

/// Mirror-3 sweep trajectory settings in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub duration: f64,
    pub bin: f64,
    pub rate: f64,
    pub accel: f64,
    pub start: f64,
}

impl SweepSettings {
    /// Mirror position at time t.
    pub fn position(&self, t: f64) -> f64 {
        self.start + self.rate * t + self.accel * t * t
    }

    /// Per-bin sweep values at bin midpoints.
    pub fn values(&self) -> Vec<f64> {
        let n = (self.duration / self.bin).round() as usize;
        (0..n)
            .map(|i| self.position((i as f64 + 0.5) * self.bin))
            .collect()
    }
}

/// A validated configuration with every derived quantity resolved.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub interferometer: InterferometerConfig,
    pub detector: DetectorModel,
    pub vibration: VibrationModel,
    pub sweep: SweepSettings,
    /// Injected fringe-phase dispersion, rad rms.
    pub phase_dispersion: f64,
    pub seed: u64,
    pub samples: usize,
}

impl ResolvedConfig {
    /// Grating period of the reference species.
    pub fn grating_period(&self) -> f64 {
        self.interferometer.reference_species().grating_period()
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("config write error: {e}")))
    }

    /// Resolve all auto-calibrated fields and validate every invariant.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if self.waves.len() != 3 {
            return Err(Error::Config(format!(
                "exactly 3 standing waves required, got {}",
                self.waves.len()
            )));
        }
        let species: Vec<Species> = self.species.iter().map(|s| s.to_species()).collect();
        crate::species::validate_species(&species)?;
        let reference = species
            .iter()
            .find(|s| s.coupled)
            .ok_or_else(|| Error::Config("no laser-coupled species".into()))?;
        let kg = reference.grating_wavevector();
        let beam = BeamSource {
            mean_speed: self.beam.mean_speed_m_s,
            speed_ratio: self.beam.speed_ratio,
            temperature: self.beam.temperature_k,
            carrier_mass: self.beam.carrier_mass_amu * AMU,
        };
        beam.validate()?;
        let geometry = self.geometry.to_geometry();
        geometry.validate()?;
        let theta_b = HBAR * kg / (2.0 * reference.mass * beam.mean_speed);
        let theta1 = 2.0 * theta_b;

        let mut waves = Vec::with_capacity(3);
        let mut active = [false; 3];
        for (i, w) in self.waves.iter().enumerate() {
            active[i] = w.active;
            waves.push(StandingWave {
                mirror_x: w.mirror_x_nm * 1e-9,
                theta_y: w.theta_y_urad.unwrap_or(theta_b * 1e6) * 1e-6,
                theta_z: w.theta_z_urad * 1e-6,
                power: w.power_mw * 1e-3,
                waist: w.waist_mm * 1e-3,
                grating_wavevector: kg,
                loss_probability: w.loss_probability,
                envelope: w.envelope,
            });
        }
        let waves: [StandingWave; 3] = waves.try_into().expect("length checked above");

        // calibrate the coupling so the degeneracy-averaged pulse area of
        // the middle grating is π at the mean speed: the hyperfine levels
        // see different detunings, so no single level can be exact without
        // over-driving the other
        let coupling_scale = match self.simulation.coupling_scale {
            Some(k) => k,
            None => {
                let ref_index = species
                    .iter()
                    .position(|s| s.coupled)
                    .expect("reference species exists");
                let total_weight: f64 = reference
                    .levels
                    .iter()
                    .map(|l| f64::from(l.degeneracy()))
                    .sum();
                let mut area = 0.0;
                for (level, l) in reference.levels.iter().enumerate() {
                    let probe = AtomSample {
                        species: ref_index,
                        level,
                        weight: 1.0,
                        speed: beam.mean_speed,
                        angle: 0.0,
                        offset: 0.0,
                    };
                    area += f64::from(l.degeneracy()) / total_weight
                        * pulse_params(&waves[1], &probe, &species, 1.0)?.area();
                }
                if area > 0.0 {
                    std::f64::consts::PI / area
                } else {
                    1.0
                }
            }
        };

        // the slit sits on the exit-1 beam, biased a fifth of its width away
        // from exit 2 to cut the neighboring beam's leakage
        let slit_width = self.geometry.detector_slit_width_um * 1e-6;
        let slit_center = self
            .detector
            .slit_center_um
            .map(|v| v * 1e-6)
            .unwrap_or_else(|| {
                theta1 * (geometry.mirror_z[1] - geometry.mirror_z[0]) - 0.2 * slit_width
            });

        let interferometer = InterferometerConfig {
            species,
            beam,
            geometry,
            waves,
            active,
            coupling_scale,
            source_rate: self.beam.flux_hz,
            slit_center,
            slit_width,
            model: self.simulation.model,
            p_max: self.simulation.p_max,
            dt_factor: self.simulation.dt_factor,
            include_strays: self.simulation.include_strays,
            ideal_ports: self.simulation.ideal_ports,
            single_velocity: self.simulation.single_velocity,
            spacing_tolerance: self.simulation.spacing_tolerance_mm * 1e-3,
        };
        interferometer.validate()?;

        let detector = DetectorModel {
            efficiency: self.detector.efficiency,
            background: self.detector.background_cps,
            burst_rate: self.detector.burst_rate_hz,
            burst_counts: self.detector.burst_counts,
        };
        detector.validate()?;
        let vibration = VibrationModel {
            rms: self.vibration.rms_nm * 1e-9,
            bandwidth: self.vibration.bandwidth_khz * 1e3,
        };
        vibration.validate()?;
        if self.sweep.bin_s <= 0.0 || self.sweep.duration_s <= 0.0 {
            return Err(Error::Config("sweep duration and bin must be positive".into()));
        }
        if self.simulation.phase_dispersion_rad < 0.0 {
            return Err(Error::Config("phase dispersion must be non-negative".into()));
        }

        Ok(ResolvedConfig {
            interferometer,
            detector,
            vibration,
            sweep: SweepSettings {
                duration: self.sweep.duration_s,
                bin: self.sweep.bin_s,
                rate: self.sweep.rate_nm_per_s * 1e-9,
                accel: self.sweep.accel_nm_per_s2 * 1e-9,
                start: self.sweep.start_nm * 1e-9,
            },
            phase_dispersion: self.simulation.phase_dispersion_rad,
            seed: self.simulation.seed,
            samples: self.simulation.samples,
        })
    }

    /// A copy with every auto-calibrated option pinned to its resolved
    /// numeric value, suitable for emission as a reproducible snapshot.
    pub fn snapshot(&self) -> Result<SimConfig> {
        let resolved = self.resolve()?;
        let mut out = self.clone();
        for (w, rw) in out.waves.iter_mut().zip(resolved.interferometer.waves.iter()) {
            w.theta_y_urad = Some(rw.theta_y * 1e6);
        }
        out.simulation.coupling_scale = Some(resolved.interferometer.coupling_scale);
        out.detector.slit_center_um = Some(resolved.interferometer.slit_center * 1e6);
        Ok(out)
    }

    /// Read a named scalar parameter (see [`SimConfig::set_parameter`]).
    pub fn parameter(&self, path: &str) -> Result<f64> {
        self.access(path, None)
    }

    /// Set a named scalar parameter. Supported paths: `waves.<i>.power_mw`,
    /// `waves.<i>.theta_y_urad`, `waves.<i>.theta_z_urad`,
    /// `waves.<i>.mirror_x_nm`, `detector.slit_center_um`,
    /// `geometry.detector_slit_width_um`, `beam.mean_speed_m_s`,
    /// `beam.speed_ratio`, `beam.flux_hz`,
    /// `simulation.phase_dispersion_rad`, `simulation.coupling_scale`.
    pub fn set_parameter(&mut self, path: &str, value: f64) -> Result<()> {
        // Work on a clone to keep `self` untouched when the path is unknown.
        let mut probe = self.clone();
        probe.access_mut(path, value)?;
        *self = probe;
        Ok(())
    }

    fn access(&self, path: &str, _: Option<f64>) -> Result<f64> {
        let unknown = || Error::UnknownParameter(path.to_string());
        let parts: Vec<&str> = path.split('.').collect();
        match parts.as_slice() {
            ["waves", idx, field] => {
                let i: usize = idx.parse().map_err(|_| unknown())?;
                let w = self.waves.get(i).ok_or_else(unknown)?;
                match *field {
                    "power_mw" => Ok(w.power_mw),
                    "theta_y_urad" => w.theta_y_urad.ok_or_else(|| {
                        Error::UnknownParameter(format!(
                            "{path} is auto-calibrated; snapshot the config first"
                        ))
                    }),
                    "theta_z_urad" => Ok(w.theta_z_urad),
                    "mirror_x_nm" => Ok(w.mirror_x_nm),
                    _ => Err(unknown()),
                }
            }
            ["detector", "slit_center_um"] => self.detector.slit_center_um.ok_or_else(|| {
                Error::UnknownParameter(format!("{path} is auto-calibrated; snapshot the config first"))
            }),
            ["geometry", "detector_slit_width_um"] => Ok(self.geometry.detector_slit_width_um),
            ["beam", "mean_speed_m_s"] => Ok(self.beam.mean_speed_m_s),
            ["beam", "speed_ratio"] => Ok(self.beam.speed_ratio),
            ["beam", "flux_hz"] => Ok(self.beam.flux_hz),
            ["simulation", "phase_dispersion_rad"] => Ok(self.simulation.phase_dispersion_rad),
            ["simulation", "coupling_scale"] => self
                .simulation
                .coupling_scale
                .ok_or_else(|| Error::UnknownParameter(format!("{path} is auto-calibrated"))),
            _ => Err(unknown()),
        }
    }

    fn access_mut(&mut self, path: &str, value: f64) -> Result<()> {
        let unknown = || Error::UnknownParameter(path.to_string());
        let parts: Vec<&str> = path.split('.').collect();
        match parts.as_slice() {
            ["waves", idx, field] => {
                let i: usize = idx.parse().map_err(|_| unknown())?;
                let w = self.waves.get_mut(i).ok_or_else(unknown)?;
                match *field {
                    "power_mw" => w.power_mw = value,
                    "theta_y_urad" => w.theta_y_urad = Some(value),
                    "theta_z_urad" => w.theta_z_urad = value,
                    "mirror_x_nm" => w.mirror_x_nm = value,
                    _ => return Err(unknown()),
                }
                Ok(())
            }
            ["detector", "slit_center_um"] => {
                self.detector.slit_center_um = Some(value);
                Ok(())
            }
            ["geometry", "detector_slit_width_um"] => {
                self.geometry.detector_slit_width_um = value;
                Ok(())
            }
            ["beam", "mean_speed_m_s"] => {
                self.beam.mean_speed_m_s = value;
                Ok(())
            }
            ["beam", "speed_ratio"] => {
                self.beam.speed_ratio = value;
                Ok(())
            }
            ["beam", "flux_hz"] => {
                self.beam.flux_hz = value;
                Ok(())
            }
            ["simulation", "phase_dispersion_rad"] => {
                self.simulation.phase_dispersion_rad = value;
                Ok(())
            }
            ["simulation", "coupling_scale"] => {
                self.simulation.coupling_scale = Some(value);
                Ok(())
            }
            _ => Err(unknown()),
        }
    }
}
