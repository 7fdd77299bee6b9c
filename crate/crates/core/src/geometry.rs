//! Beamline geometry: the two collimation slits, the three standing-wave
//! mirrors, the detector slit and the detector plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// z positions and apertures of every element along the beamline, all in
/// meters. z is measured from the nozzle; x is the transverse (horizontal)
/// direction in which diffraction happens; y is vertical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollimationGeometry {
    /// First collimation slit width.
    pub slit0_width: f64,
    pub slit0_z: f64,
    /// Second collimation slit width.
    pub slit1_width: f64,
    pub slit1_z: f64,
    /// z of the three standing-wave mirrors.
    pub mirror_z: [f64; 3],
    /// z of the movable detector slit.
    pub detector_slit_z: f64,
    /// z of the hot-wire detector ribbon.
    pub detector_z: f64,
    /// Detector slit width.
    pub detector_slit_width: f64,
    /// Width of the detector ribbon.
    pub ribbon_width: f64,
    /// Vertical aperture height limiting the y extent of the beam.
    pub aperture_height: f64,
}

impl Default for CollimationGeometry {
    fn default() -> Self {
        CollimationGeometry {
            slit0_width: 20.0e-6,
            slit0_z: 0.480,
            slit1_width: 12.0e-6,
            slit1_z: 1.260,
            mirror_z: [1.410, 2.015, 2.620],
            detector_slit_z: 3.020,
            detector_z: 3.370,
            detector_slit_width: 30.0e-6,
            ribbon_width: 760.0e-6,
            aperture_height: 3.0e-3,
        }
    }
}

impl CollimationGeometry {
    /// Check widths are positive and z positions strictly increase in
    /// beamline order.
    pub fn validate(&self) -> Result<()> {
        let widths = [
            ("slit0_width", self.slit0_width),
            ("slit1_width", self.slit1_width),
            ("detector_slit_width", self.detector_slit_width),
            ("ribbon_width", self.ribbon_width),
            ("aperture_height", self.aperture_height),
        ];
        for (name, w) in widths {
            if w <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive, got {w}")));
            }
        }
        let order = [
            ("slit0_z", self.slit0_z),
            ("slit1_z", self.slit1_z),
            ("mirror_z[0]", self.mirror_z[0]),
            ("mirror_z[1]", self.mirror_z[1]),
            ("mirror_z[2]", self.mirror_z[2]),
            ("detector_slit_z", self.detector_slit_z),
            ("detector_z", self.detector_z),
        ];
        for pair in order.windows(2) {
            if pair[1].1 <= pair[0].1 {
                return Err(Error::Config(format!(
                    "{} = {} must lie downstream of {} = {}",
                    pair[1].0, pair[1].1, pair[0].0, pair[0].1
                )));
            }
        }
        Ok(())
    }

    /// Distance between the two collimation slits.
    pub fn slit_separation(&self) -> f64 {
        self.slit1_z - self.slit0_z
    }

    /// Full width of the angular acceptance set by the two slits,
    /// (w₀+w₁)/(z_S1−z_S0).
    pub fn angular_acceptance(&self) -> f64 {
        (self.slit0_width + self.slit1_width) / self.slit_separation()
    }

    /// Full width of the collimated-beam envelope at plane z ≥ z_S1: the
    /// extreme straight rays through both slits span
    /// w₁ + (w₀+w₁)·(z−z_S1)/(z_S1−z_S0).
    pub fn beam_envelope_width(&self, z: f64) -> f64 {
        self.slit1_width + self.angular_acceptance() * (z - self.slit1_z)
    }

    /// Whether a straight ray with offset `x1` at the second slit and angle
    /// `angle` passes through both collimation slits.
    pub fn ray_passes_slits(&self, x1: f64, angle: f64) -> bool {
        let x0 = x1 - angle * self.slit_separation();
        x0.abs() <= self.slit0_width / 2.0 && x1.abs() <= self.slit1_width / 2.0
    }
}
