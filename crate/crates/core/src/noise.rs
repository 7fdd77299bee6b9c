//! Detector model, Poisson counting statistics and vibration-induced phase
//! noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::FringeScan;

/// Hot-wire detector: efficiency, dark background and an optional burst
/// process for the occasional electronics spike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Detection probability per atom reaching the wire.
    pub efficiency: f64,
    /// Background count rate, counts/s.
    pub background: f64,
    /// Rate of burst events, events/s (0 disables bursts).
    pub burst_rate: f64,
    /// Counts added per burst event.
    pub burst_counts: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            efficiency: 0.4,
            background: 3370.0,
            burst_rate: 0.0,
            burst_counts: 0.0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Config(format!(
                "detector efficiency {} outside [0, 1]",
                self.efficiency
            )));
        }
        if self.background < 0.0 || self.burst_rate < 0.0 || self.burst_counts < 0.0 {
            return Err(Error::Config("detector rates must be non-negative".into()));
        }
        Ok(())
    }
}

/// Vibration of the mirror combination x_M1 + x_M3 − 2·x_M2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibrationModel {
    /// rms displacement of the combination, m.
    pub rms: f64,
    /// Measurement bandwidth, Hz (informational; the noise is treated as
    /// white and fast compared with one counting bin).
    pub bandwidth: f64,
}

impl Default for VibrationModel {
    fn default() -> Self {
        VibrationModel { rms: 3.0e-9, bandwidth: 50.0e3 }
    }
}

impl VibrationModel {
    pub fn validate(&self) -> Result<()> {
        if self.rms < 0.0 {
            return Err(Error::Config("vibration rms must be non-negative".into()));
        }
        Ok(())
    }
}

/// Binned count record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    /// Bin start times, s.
    pub start_times: Vec<f64>,
    /// Bin width, s.
    pub bin_duration: f64,
    /// Counts per bin.
    pub counts: Vec<u64>,
}

impl CountRecord {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Phase noise 2π·rms/a from a vibration rms of the mirror combination on a
/// grating of period a, rad.
pub fn vibration_phase_rms(vibration: &VibrationModel, grating_period: f64) -> Result<f64> {
    if grating_period <= 0.0 {
        return Err(Error::Domain(format!(
            "grating period must be positive, got {grating_period}"
        )));
    }
    Ok(2.0 * std::f64::consts::PI * vibration.rms / grating_period)
}

/// Simulate Poisson counts: per bin, counts ~ Poisson(bin·(η·rate + B)),
/// plus optional burst events. Deterministic for a given seed.
pub fn simulate_counts<F>(
    rate_fn: F,
    detector: &DetectorModel,
    bin_duration: f64,
    duration: f64,
    seed: u64,
) -> Result<CountRecord>
where
    F: Fn(f64) -> f64,
{
    detector.validate()?;
    if bin_duration <= 0.0 {
        return Err(Error::Domain(format!(
            "bin duration must be positive, got {bin_duration}"
        )));
    }
    let n_bins = (duration / bin_duration).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(u32::MAX)); // counting stream, clear of atom batches

    let mut start_times = Vec::with_capacity(n_bins);
    let mut counts = Vec::with_capacity(n_bins);
    for i in 0..n_bins {
        let t0 = i as f64 * bin_duration;
        let rate = rate_fn(t0 + bin_duration / 2.0);
        if rate < 0.0 {
            return Err(Error::Domain(format!("negative rate {rate} at t={t0}")));
        }
        let lambda = bin_duration * (detector.efficiency * rate + detector.background);
        let mut c = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| Error::Domain(format!("invalid Poisson mean {lambda}: {e}")))?
                .sample(&mut rng) as u64
        } else {
            0
        };
        if detector.burst_rate > 0.0 && detector.burst_counts > 0.0 {
            let n_bursts = Poisson::new(detector.burst_rate * bin_duration)
                .map_err(|e| Error::Domain(format!("invalid burst rate: {e}")))?
                .sample(&mut rng);
            c += (n_bursts * detector.burst_counts) as u64;
        }
        start_times.push(t0);
        counts.push(c);
    }
    Ok(CountRecord { start_times, bin_duration, counts })
}

/// Add an independent Gaussian fringe-phase offset of rms 2π·rms/a to every
/// bin of a mirror-sweep scan, re-evaluating the expected rates. Models
/// vibration that is fast compared with one bin.
pub fn apply_vibration_jitter(
    scan: &FringeScan,
    vibration: &VibrationModel,
    grating_period: f64,
    seed: u64,
) -> Result<FringeScan> {
    vibration.validate()?;
    let sigma = vibration_phase_rms(vibration, grating_period)?;
    apply_phase_jitter(scan, sigma, seed)
}

/// Add an independent Gaussian phase offset of rms `sigma` to every bin of a
/// mirror-sweep scan. A zero rms returns the scan unchanged.
pub fn apply_phase_jitter(scan: &FringeScan, sigma: f64, seed: u64) -> Result<FringeScan> {
    if sigma < 0.0 {
        return Err(Error::Domain(format!("phase rms must be non-negative, got {sigma}")));
    }
    let mut out = scan.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(u32::MAX) + 1);
    let normal = rand_distr::Normal::new(0.0, sigma)
        .map_err(|e| Error::Domain(format!("invalid jitter rms: {e}")))?;
    for offset in out.phase_offsets.iter_mut() {
        *offset += normal.sample(&mut rng);
    }
    out.reevaluate()?;
    Ok(out)
}
