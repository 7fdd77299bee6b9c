//! Three-grating Mach-Zehnder propagation: path enumeration, port
//! intensities, Monte Carlo fringe synthesis and single-grating diffraction
//! profiles.
//!
//! Per atom, the transverse state is a set of branches (momentum order,
//! position, complex amplitude). Each active standing wave maps branches
//! through the diffraction unitary of the configured model; free flight
//! between planes advances positions and kinetic phases. At the detector-slit
//! plane, branches sharing the same momentum order and position form coherent
//! groups; groups add in intensity. Each group carries a top-hat envelope of
//! the collimation-propagated beam width, and the detector slit accepts the
//! overlapping fraction — the residual overlap between the two exit beams is
//! what bounds the ideal fringe contrast.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{sample_atom, AtomSample, BeamSource};
use crate::bragg::{
    ladder_propagate, pulse_params, two_level_unitary, LadderState, StandingWave,
};
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::geometry::CollimationGeometry;
use crate::species::{validate_species, Species};

/// Atoms per Monte Carlo work batch. Batches map to fixed RNG substreams and
/// are reduced in index order, so results do not depend on the thread count.
const BATCH_SIZE: usize = 256;

/// Branch amplitudes below this weight are dropped during propagation.
const PRUNE_THRESHOLD: f64 = 1e-14;

/// Positions closer than this at the detector-slit plane belong to the same
/// coherent group (real clusters are separated by ~100 µm).
const CLUSTER_TOLERANCE: f64 = 1.0e-6;

/// Which diffraction model the Monte Carlo applies at each grating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffractionModel {
    /// Closed-form two-level Rabi solution on momentum orders {0, 1}.
    TwoLevel,
    /// Momentum-ladder integration resolving every order up to p_max.
    Ladder,
}

/// Exit-port label of a propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortLabel {
    Port1,
    Port2,
    Stray,
}

/// One enumerated path through the three gratings.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    /// Signed diffraction order applied at each grating.
    pub orders: [i32; 3],
    /// Accumulated amplitude (unit for enumeration templates).
    pub amplitude: Complex64,
    /// Exit angle relative to the undiffracted beam, rad.
    pub exit_angle: f64,
    /// Exit x at the detector-slit plane relative to the straight ray, m.
    pub exit_x: f64,
    pub port: PortLabel,
}

/// Full configuration of one interferometer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub species: Vec<Species>,
    pub beam: BeamSource,
    pub geometry: CollimationGeometry,
    pub waves: [StandingWave; 3],
    /// Active-grating mask; inactive gratings transmit unchanged.
    pub active: [bool; 3],
    /// Calibration constant scaling every two-photon Rabi frequency.
    pub coupling_scale: f64,
    /// Rate of collimated atoms entering the grating region, atoms/s.
    pub source_rate: f64,
    /// Detector-slit center for exit 1, m.
    pub slit_center: f64,
    /// Detector-slit width, m.
    pub slit_width: f64,
    pub model: DiffractionModel,
    /// Ladder truncation (ignored by the two-level model).
    pub p_max: i32,
    /// Integration step factor dt·(fastest scale) for the ladder model.
    pub dt_factor: f64,
    /// Propagate stray paths into the detection windows.
    pub include_strays: bool,
    /// Classify ports kinematically with unit acceptance instead of the
    /// detector-slit windows (used by structural oracle checks).
    pub ideal_ports: bool,
    /// Emit every atom at the mean speed on axis (no beam dispersion).
    pub single_velocity: bool,
    /// Allowed asymmetry |(z_M2−z_M1) − (z_M3−z_M2)|, m.
    pub spacing_tolerance: f64,
}

impl InterferometerConfig {
    pub fn validate(&self) -> Result<()> {
        validate_species(&self.species)?;
        self.beam.validate()?;
        self.geometry.validate()?;
        for wave in &self.waves {
            wave.validate()?;
        }
        let d12 = self.geometry.mirror_z[1] - self.geometry.mirror_z[0];
        let d23 = self.geometry.mirror_z[2] - self.geometry.mirror_z[1];
        if (d12 - d23).abs() > self.spacing_tolerance {
            return Err(Error::Config(format!(
                "grating spacing asymmetry {:.3e} m exceeds tolerance {:.3e} m",
                (d12 - d23).abs(),
                self.spacing_tolerance
            )));
        }
        if self.slit_width <= 0.0 {
            return Err(Error::Config("detector-slit width must be positive".into()));
        }
        if self.source_rate < 0.0 {
            return Err(Error::Config("source rate must be non-negative".into()));
        }
        if self.coupling_scale <= 0.0 {
            return Err(Error::Config("coupling scale must be positive".into()));
        }
        if self.p_max < 2 {
            return Err(Error::Config("p_max must be at least 2".into()));
        }
        Ok(())
    }

    /// First laser-coupled species: the reference for port geometry.
    pub fn reference_species(&self) -> &Species {
        self.species
            .iter()
            .find(|s| s.coupled)
            .unwrap_or(&self.species[0])
    }

    /// First-order diffraction angle of the reference species at the mean
    /// beam speed.
    pub fn reference_theta1(&self) -> f64 {
        let sp = self.reference_species();
        HBAR * sp.grating_wavevector() / (sp.mass * self.beam.mean_speed)
    }

    /// Kick offsets of the two exit beams at the detector-slit plane,
    /// relative to the straight ray.
    pub fn port_offsets(&self) -> (f64, f64) {
        let theta1 = self.reference_theta1();
        let g = &self.geometry;
        (
            theta1 * (g.mirror_z[1] - g.mirror_z[0]),
            theta1 * (g.detector_slit_z - g.mirror_z[1]),
        )
    }

    /// Detection window centers for exits 1 and 2. The slit is physically
    /// placed at exit 1; exit 2 is observed at its mirrored position.
    pub fn port_windows(&self) -> ([f64; 2], f64) {
        let (p1, p2) = self.port_offsets();
        let center2 = self.slit_center + (p2 - p1);
        ([self.slit_center, center2], self.slit_width)
    }
}

/// Normalized intensities (I₁, I₂) of the two complementary exits for a
/// total interferometer phase and fringe contrast:
/// I₁ ∝ 1+C·cosφ, I₂ ∝ 1−C·cosφ, I₁+I₂ = 1.
pub fn port_intensity(phase: f64, contrast: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&contrast) {
        return Err(Error::Domain(format!("contrast {contrast} outside [0, 1]")));
    }
    let c = contrast * phase.cos();
    Ok((0.5 * (1.0 + c), 0.5 * (1.0 - c)))
}

/// Total interferometer phase 2π(x_M1 + x_M3 − 2·x_M2)/a from the three
/// mirror positions and the grating period.
pub fn mirror_phase(mirror_x: &[f64; 3], grating_period: f64) -> f64 {
    2.0 * std::f64::consts::PI * (mirror_x[0] + mirror_x[2] - 2.0 * mirror_x[1]) / grating_period
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Fringe-contrast factor left after averaging the residual grating-vector
/// mismatch Δk_y = k_g(θ_z1 + θ_z3 − 2θ_z2) over a uniform aperture of
/// height H: |sin(Δk_y·H/2)/(Δk_y·H/2)|.
pub fn delta_k_washout(
    theta_z: &[f64; 3],
    aperture_height: f64,
    grating_wavevector: f64,
) -> Result<f64> {
    if aperture_height <= 0.0 {
        return Err(Error::Domain(format!(
            "aperture height must be positive, got {aperture_height}"
        )));
    }
    let delta_ky = grating_wavevector * (theta_z[0] + theta_z[2] - 2.0 * theta_z[1]);
    Ok(sinc(delta_ky * aperture_height / 2.0).abs())
}

/// Contrast factor exp(−σ²/2) from a Gaussian phase dispersion of rms σ.
pub fn phase_dispersion_contrast(sigma: f64) -> Result<f64> {
    if sigma < 0.0 {
        return Err(Error::Domain(format!(
            "phase rms must be non-negative, got {sigma}"
        )));
    }
    Ok((-sigma * sigma / 2.0).exp())
}

/// Enumerate every |orders|³ path through the three gratings. Each element
/// of `orders` is a transfer magnitude: at each grating a path in the ground
/// manifold takes kick +s, a path in a kicked manifold takes −s, which is
/// the resonant Bragg geometry. The pair rejoining at the detector-slit
/// plane with zero net order forms exit 1; the complementary rejoining pair
/// forms exit 2; everything else is a stray.
pub fn enumerate_paths(
    orders: &[i32],
    geometry: &CollimationGeometry,
    theta1: f64,
) -> Vec<PathState> {
    let mut set: Vec<i32> = orders.to_vec();
    set.sort_unstable();
    set.dedup();
    let z_sd = geometry.detector_slit_z;
    let port1_x = theta1 * (geometry.mirror_z[1] - geometry.mirror_z[0]);
    let port2_x = theta1 * (z_sd - geometry.mirror_z[1]);

    let mut paths = Vec::with_capacity(set.len().pow(3));
    for &s1 in &set {
        for &s2 in &set {
            for &s3 in &set {
                let mut n = 0i32;
                let mut applied = [0i32; 3];
                for (j, &s) in [s1, s2, s3].iter().enumerate() {
                    let jump = if n > 0 { -s } else { s };
                    applied[j] = jump;
                    n += jump;
                }
                let exit_x: f64 = applied
                    .iter()
                    .zip(geometry.mirror_z.iter())
                    .map(|(&p, &z)| f64::from(p) * theta1 * (z_sd - z))
                    .sum();
                let exit_angle = f64::from(n) * theta1;
                let tol = 1e-9 * z_sd.max(1.0);
                let port = if n == 0 && (exit_x - port1_x).abs() < tol {
                    PortLabel::Port1
                } else if n == 1 && (exit_x - port2_x).abs() < tol {
                    PortLabel::Port2
                } else {
                    PortLabel::Stray
                };
                paths.push(PathState {
                    orders: applied,
                    amplitude: Complex64::ONE,
                    exit_angle,
                    exit_x,
                    port,
                });
            }
        }
    }
    paths
}

// ---------------------------------------------------------------------------
// Monte Carlo engine
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Branch {
    order: i32,
    x: f64,
    amp: Complex64,
    grating_orders: [i32; 3],
}

/// One coherent group of paths at the detector-slit plane.
///
/// For detection the group is treated as a beam: a top-hat envelope of the
/// collimation-propagated width centered on `kick_offset`, the deflection
/// its diffraction history imposes on the whole collimated beam.
#[derive(Debug, Clone)]
pub struct CoherentGroup {
    /// Final momentum order (sets the exit angle).
    pub order: i32,
    /// This atom's position at the detector-slit plane, m.
    pub x: f64,
    /// Beam-centroid deflection: position minus the atom's straight-line
    /// position, m.
    pub kick_offset: f64,
    pub label: PortLabel,
    /// Sweep-independent part of the group intensity.
    pub constant: f64,
    /// Complex fringe coefficients: harmonic m of the swept-mirror phase
    /// contributes 2·Re(harmonics[m−1]·e^{−i·m·(k_g·Δx+δ)}).
    pub harmonics: Vec<Complex64>,
}

impl CoherentGroup {
    /// Intensity at fringe phase `phase` = k_g·Δx + δ of the swept mirror.
    pub fn intensity(&self, phase: f64) -> f64 {
        let mut rate = self.constant;
        for (i, h) in self.harmonics.iter().enumerate() {
            let m = (i + 1) as f64;
            rate += 2.0 * (h * Complex64::from_polar(1.0, -m * phase)).re;
        }
        rate
    }
}

/// Propagate one atom through the interferometer and reduce its exit state
/// to coherent groups. Returns the groups and the probability lost to
/// spontaneous emission. `sweep_grating` selects which grating's mirror
/// position the fringe harmonics refer to.
pub fn atom_groups(
    config: &InterferometerConfig,
    atom: &AtomSample,
    sweep_grating: Option<usize>,
) -> Result<(Vec<CoherentGroup>, f64)> {
    let sp = &config.species[atom.species];
    let geom = &config.geometry;
    let kg = config.waves[0].grating_wavevector;
    let kick = HBAR * kg / (sp.mass * atom.speed);
    let theta_b = kick / 2.0;

    let mut branches = vec![Branch {
        order: 0,
        x: atom.offset,
        amp: Complex64::ONE,
        grating_orders: [0; 3],
    }];
    let mut lost = 0.0;
    let mut z = geom.slit1_z;

    let drift = |branches: &mut Vec<Branch>, from: f64, to: f64| {
        let dz = to - from;
        for b in branches.iter_mut() {
            let n = f64::from(b.order);
            b.x += (atom.angle + n * kick) * dz;
            let phase = -kg * n * (n * theta_b + atom.angle) * dz;
            b.amp *= Complex64::from_polar(1.0, phase);
        }
    };

    for j in 0..3 {
        let zj = geom.mirror_z[j];
        drift(&mut branches, z, zj);
        z = zj;
        if !config.active[j] || !sp.coupled {
            continue;
        }
        let wave = &config.waves[j];
        let pulse = pulse_params(wave, atom, &config.species, config.coupling_scale)?;
        if pulse.rabi == 0.0 {
            continue;
        }
        let survive = (1.0 - wave.loss_probability).sqrt();
        let mut next: Vec<Branch> = Vec::with_capacity(branches.len() * 3);
        match config.model {
            DiffractionModel::TwoLevel => {
                let u = two_level_unitary(
                    pulse.rabi,
                    -pulse.detuning,
                    pulse.duration,
                    kg * wave.mirror_x,
                );
                for b in &branches {
                    lost += b.amp.norm_sqr() * wave.loss_probability;
                    let q = b.order as usize;
                    debug_assert!(q <= 1, "two-level branch outside orders {{0,1}}");
                    for (p, row) in u.iter().enumerate() {
                        let amp = b.amp * row[q] * survive;
                        if amp.norm_sqr() > PRUNE_THRESHOLD {
                            let mut orders = b.grating_orders;
                            orders[j] = p as i32 - q as i32;
                            next.push(Branch {
                                order: p as i32,
                                x: b.x,
                                amp,
                                grating_orders: orders,
                            });
                        }
                    }
                }
            }
            DiffractionModel::Ladder => {
                // one unified window per grating keeps the relative phases
                // of different input orders consistent
                let occ_lo = branches.iter().map(|b| b.order).min().unwrap();
                let occ_hi = branches.iter().map(|b| b.order).max().unwrap();
                let dt = crate::bragg::stable_dt_for_orders(
                    wave,
                    atom,
                    &config.species,
                    config.coupling_scale,
                    occ_lo,
                    occ_hi,
                    config.p_max,
                )? * (config.dt_factor / crate::bragg::DEFAULT_DT_FACTOR);
                let lo = occ_lo - config.p_max;
                let hi = occ_hi + config.p_max;
                let mut columns = std::collections::BTreeMap::new();
                for b in &branches {
                    if columns.contains_key(&b.order) {
                        continue;
                    }
                    let input: LadderState = (lo..=hi)
                        .map(|n| {
                            (
                                n,
                                if n == b.order {
                                    Complex64::ONE
                                } else {
                                    Complex64::ZERO
                                },
                            )
                        })
                        .collect();
                    let col = ladder_propagate(
                        wave,
                        atom,
                        &config.species,
                        config.coupling_scale,
                        config.p_max,
                        dt,
                        &input,
                    )?;
                    columns.insert(b.order, col);
                }
                for b in &branches {
                    lost += b.amp.norm_sqr() * wave.loss_probability;
                    for &(p, u_pq) in &columns[&b.order] {
                        let amp = b.amp * u_pq * survive;
                        if amp.norm_sqr() > PRUNE_THRESHOLD {
                            let mut orders = b.grating_orders;
                            orders[j] = p - b.order;
                            next.push(Branch { order: p, x: b.x, amp, grating_orders: orders });
                        }
                    }
                }
            }
        }
        branches = next;
    }
    drift(&mut branches, z, geom.detector_slit_z);

    // cluster into coherent groups
    branches.sort_by(|a, b| {
        a.order
            .cmp(&b.order)
            .then(a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal))
    });
    let straight = atom.straight_x(geom, geom.detector_slit_z);
    let theta1 = kick;
    let d12 = geom.mirror_z[1] - geom.mirror_z[0];
    let d_sd2 = geom.detector_slit_z - geom.mirror_z[1];
    let theta_zs = [
        config.waves[0].theta_z,
        config.waves[1].theta_z,
        config.waves[2].theta_z,
    ];
    let aperture = geom.aperture_height;
    let n_harmonics = match config.model {
        DiffractionModel::TwoLevel => 2,
        DiffractionModel::Ladder => (2 * config.p_max).max(2) as usize,
    };

    let mut groups = Vec::new();
    let mut start = 0;
    while start < branches.len() {
        let mut end = start + 1;
        while end < branches.len()
            && branches[end].order == branches[start].order
            && (branches[end].x - branches[end - 1].x).abs() < CLUSTER_TOLERANCE
        {
            end += 1;
        }
        let members = &branches[start..end];
        let x = members.iter().map(|b| b.x).sum::<f64>() / members.len() as f64;
        let order = members[0].order;
        let kick_offset = x - straight;

        let mut constant = 0.0;
        let mut harmonics = vec![Complex64::ZERO; n_harmonics];
        for (i, a) in members.iter().enumerate() {
            constant += a.amp.norm_sqr();
            for b in members.iter().skip(i + 1) {
                let d = [
                    a.grating_orders[0] - b.grating_orders[0],
                    a.grating_orders[1] - b.grating_orders[1],
                    a.grating_orders[2] - b.grating_orders[2],
                ];
                let delta_ky = kg
                    * (f64::from(d[0]) * theta_zs[0]
                        + f64::from(d[1]) * theta_zs[1]
                        + f64::from(d[2]) * theta_zs[2]);
                let washout = sinc(delta_ky * aperture / 2.0);
                let cross = a.amp * b.amp.conj() * washout;
                let m = sweep_grating
                    .map(|g| a.grating_orders[g] - b.grating_orders[g])
                    .unwrap_or(0);
                match m.cmp(&0) {
                    std::cmp::Ordering::Equal => constant += 2.0 * cross.re,
                    std::cmp::Ordering::Greater => {
                        let idx = (m - 1) as usize;
                        if idx < harmonics.len() {
                            harmonics[idx] += cross;
                        }
                    }
                    std::cmp::Ordering::Less => {
                        let idx = (-m - 1) as usize;
                        if idx < harmonics.len() {
                            harmonics[idx] += cross.conj();
                        }
                    }
                }
            }
        }

        let tol = 1e-9;
        let label = if order == 0 && (kick_offset - theta1 * d12).abs() < tol {
            PortLabel::Port1
        } else if order == 1 && (kick_offset - theta1 * d_sd2).abs() < tol {
            PortLabel::Port2
        } else {
            PortLabel::Stray
        };

        groups.push(CoherentGroup { order, x, kick_offset, label, constant, harmonics });
        start = end;
    }
    Ok((groups, lost))
}

/// Overlapping fraction of a top-hat beam envelope of full width `width`
/// centered at `x` with a detection window.
fn tophat_acceptance(x: f64, width: f64, window_center: f64, window_width: f64) -> f64 {
    let lo = (x - width / 2.0).max(window_center - window_width / 2.0);
    let hi = (x + width / 2.0).min(window_center + window_width / 2.0);
    ((hi - lo).max(0.0)) / width
}

/// Sweep target of a Monte Carlo fringe run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepVariable {
    /// Displace one mirror along x; values are absolute positions, m.
    MirrorX(usize),
    /// Move the detector slit; values are absolute slit centers, m.
    DetectorSlitX,
}

impl SweepVariable {
    pub fn name(&self) -> String {
        match self {
            SweepVariable::MirrorX(i) => format!("mirror_x_{}", i + 1),
            SweepVariable::DetectorSlitX => "detector_slit_x".to_string(),
        }
    }
}

/// Sweep request: variable, grid and counting time per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub bin_duration: f64,
}

/// Fringe decomposition of one port series:
/// rate(Δ, δ) = mean + Σ_m 2·Re(harmonics[m−1]·e^{−i·m·(k_g·Δ + δ)}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeDecomposition {
    pub grating_wavevector: f64,
    /// Swept-mirror baseline position the harmonics were computed at.
    pub baseline: f64,
    /// Mean rate, counts/s.
    pub mean: f64,
    pub harmonics: Vec<(f64, f64)>,
}

impl FringeDecomposition {
    pub fn rate(&self, value: f64, extra_phase: f64) -> f64 {
        let base = self.grating_wavevector * (value - self.baseline) + extra_phase;
        let mut rate = self.mean;
        for (i, &(re, im)) in self.harmonics.iter().enumerate() {
            let m = (i + 1) as f64;
            let h = Complex64::new(re, im);
            rate += 2.0 * (h * Complex64::from_polar(1.0, -m * base)).re;
        }
        rate
    }

    /// Fringe contrast of the fundamental, 2|h₁|/mean.
    pub fn contrast(&self) -> f64 {
        if self.mean <= 0.0 {
            0.0
        } else {
            let h1 = self
                .harmonics
                .first()
                .map(|&(re, im)| Complex64::new(re, im).norm())
                .unwrap_or(0.0);
            (2.0 * h1 / self.mean).min(1.0)
        }
    }
}

/// Expected rates of one exit across the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortSeries {
    /// 1 or 2 for the labeled exits; 0 for the combined slit-scan signal.
    pub port: u8,
    /// Physical rate at the detection window, counts/s (before detector
    /// efficiency and background).
    pub expected_rate: Vec<f64>,
    pub decomposition: Option<FringeDecomposition>,
}

/// Swept-parameter rate record at the exit ports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub sweep_name: String,
    pub values: Vec<f64>,
    pub bin_duration: f64,
    pub ports: Vec<PortSeries>,
    /// Per-step fringe-phase offsets already folded into the rates, rad.
    pub phase_offsets: Vec<f64>,
}

impl FringeScan {
    /// Recompute every port's expected rates from its decomposition and the
    /// accumulated per-step phase offsets.
    pub fn reevaluate(&mut self) -> Result<()> {
        for port in &mut self.ports {
            let dec = port.decomposition.as_ref().ok_or_else(|| {
                Error::Config("scan carries no fringe decomposition to re-evaluate".into())
            })?;
            port.expected_rate = self
                .values
                .iter()
                .zip(self.phase_offsets.iter())
                .map(|(&v, &d)| dec.rate(v, d))
                .collect();
        }
        Ok(())
    }

    /// Series for a labeled port, if present.
    pub fn port(&self, port: u8) -> Option<&PortSeries> {
        self.ports.iter().find(|p| p.port == port)
    }
}

#[derive(Clone)]
struct Accumulator {
    weight: f64,
    loss: f64,
    port_mean: [f64; 2],
    port_harmonics: [Vec<Complex64>; 2],
    slit_rates: Vec<f64>,
    atoms: usize,
}

impl Accumulator {
    fn new(n_harmonics: usize, n_steps: usize) -> Self {
        Accumulator {
            weight: 0.0,
            loss: 0.0,
            port_mean: [0.0; 2],
            port_harmonics: [
                vec![Complex64::ZERO; n_harmonics],
                vec![Complex64::ZERO; n_harmonics],
            ],
            slit_rates: vec![0.0; n_steps],
            atoms: 0,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.weight += other.weight;
        self.loss += other.loss;
        for p in 0..2 {
            self.port_mean[p] += other.port_mean[p];
            for (a, b) in self.port_harmonics[p]
                .iter_mut()
                .zip(other.port_harmonics[p].iter())
            {
                *a += b;
            }
        }
        for (a, b) in self.slit_rates.iter_mut().zip(other.slit_rates.iter()) {
            *a += b;
        }
        self.atoms += other.atoms;
    }
}

/// Per-port summary of one Monte Carlo accumulation.
#[derive(Debug, Clone, Copy)]
pub struct PortObservables {
    /// Mean physical rate at the window, counts/s.
    pub mean: f64,
    /// Complex fundamental fringe coefficient, counts/s.
    pub fundamental: Complex64,
}

/// Result of the port-level Monte Carlo, including per-batch partials for
/// statistical error estimation.
#[derive(Debug, Clone)]
pub struct PortMonteCarlo {
    pub ports: [PortObservables; 2],
    pub batches: Vec<[PortObservables; 2]>,
    pub n_samples: usize,
    /// Mean probability lost to spontaneous emission per atom.
    pub loss: f64,
}

fn accumulate_batch(
    config: &InterferometerConfig,
    sweep: &SweepSpec,
    seed: u64,
    batch_index: usize,
    batch_size: usize,
    n_harmonics: usize,
) -> Result<Accumulator> {
    let n_steps = match sweep.variable {
        SweepVariable::DetectorSlitX => sweep.values.len(),
        SweepVariable::MirrorX(_) => 0,
    };
    let mut acc = Accumulator::new(n_harmonics, n_steps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch_index as u64);

    let sweep_grating = match sweep.variable {
        SweepVariable::MirrorX(i) => Some(i),
        SweepVariable::DetectorSlitX => None,
    };
    let ([w1, w2], width) = config.port_windows();
    let envelope_width = config
        .geometry
        .beam_envelope_width(config.geometry.detector_slit_z);

    for _ in 0..batch_size {
        let atom = if config.single_velocity {
            AtomSample {
                species: 0,
                level: config.species[0].levels.len() - 1,
                weight: 1.0,
                speed: config.beam.mean_speed,
                angle: 0.0,
                offset: 0.0,
            }
        } else {
            sample_atom(&config.beam, &config.geometry, &config.species, &mut rng)?
        };
        let (groups, lost) = atom_groups(config, &atom, sweep_grating)?;
        acc.weight += atom.weight;
        acc.loss += atom.weight * lost;

        for g in &groups {
            if g.label == PortLabel::Stray && !config.include_strays {
                continue;
            }
            match sweep.variable {
                SweepVariable::DetectorSlitX => {
                    let intensity = g.intensity(0.0);
                    for (i, &slit_x) in sweep.values.iter().enumerate() {
                        let a = tophat_acceptance(g.kick_offset, envelope_width, slit_x, width);
                        if a > 0.0 {
                            acc.slit_rates[i] += atom.weight * a * intensity;
                        }
                    }
                }
                SweepVariable::MirrorX(_) => {
                    for (p, wc) in [w1, w2].iter().enumerate() {
                        let a = if config.ideal_ports {
                            let wanted = if p == 0 { PortLabel::Port1 } else { PortLabel::Port2 };
                            if g.label == wanted {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            tophat_acceptance(g.kick_offset, envelope_width, *wc, width)
                        };
                        if a > 0.0 {
                            acc.port_mean[p] += atom.weight * a * g.constant;
                            for (dst, src) in
                                acc.port_harmonics[p].iter_mut().zip(g.harmonics.iter())
                            {
                                *dst += atom.weight * a * src;
                            }
                        }
                    }
                }
            }
        }
        acc.atoms += 1;
    }
    Ok(acc)
}

fn run_accumulation(
    config: &InterferometerConfig,
    sweep: &SweepSpec,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Accumulator>> {
    let n_harmonics = match config.model {
        DiffractionModel::TwoLevel => 2,
        DiffractionModel::Ladder => (2 * config.p_max).max(2) as usize,
    };
    let n_batches = n_samples.div_ceil(BATCH_SIZE);
    let sizes: Vec<usize> = (0..n_batches)
        .map(|i| {
            if i + 1 == n_batches {
                n_samples - BATCH_SIZE * (n_batches - 1)
            } else {
                BATCH_SIZE
            }
        })
        .collect();
    sizes
        .par_iter()
        .enumerate()
        .map(|(i, &size)| accumulate_batch(config, sweep, seed, i, size, n_harmonics))
        .collect()
}

/// Port-level Monte Carlo without a sweep: mean rates and fundamental fringe
/// coefficients of both exits at the current mirror positions.
pub fn port_observables(
    config: &InterferometerConfig,
    n_samples: usize,
    seed: u64,
) -> Result<PortMonteCarlo> {
    config.validate()?;
    if !config.active.iter().any(|&a| a) {
        return Err(Error::Config("no active gratings".into()));
    }
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be positive".into()));
    }
    // harmonics referred to mirror 3 make the fundamental the fringe term
    let sweep = SweepSpec {
        variable: SweepVariable::MirrorX(2),
        values: vec![config.waves[2].mirror_x],
        bin_duration: 1.0,
    };
    let accs = run_accumulation(config, &sweep, n_samples, seed)?;
    let scale = |acc: &Accumulator| -> [PortObservables; 2] {
        let f = if acc.weight > 0.0 {
            config.source_rate / acc.weight
        } else {
            0.0
        };
        [0, 1].map(|p| PortObservables {
            mean: acc.port_mean[p] * f,
            fundamental: acc.port_harmonics[p]
                .first()
                .copied()
                .unwrap_or(Complex64::ZERO)
                * f,
        })
    };
    let batches: Vec<[PortObservables; 2]> = accs.iter().map(&scale).collect();
    let mut total = Accumulator::new(accs[0].port_harmonics[0].len(), accs[0].slit_rates.len());
    for acc in &accs {
        total.merge(acc);
    }
    let loss = if total.weight > 0.0 { total.loss / total.weight } else { 0.0 };
    Ok(PortMonteCarlo { ports: scale(&total), batches, n_samples, loss })
}

/// Monte Carlo fringe synthesis: sample `n_samples` atoms, propagate them
/// through the active gratings, and evaluate the expected exit rates for
/// every sweep value. Deterministic for a given seed, independent of the
/// worker-thread count.
pub fn monte_carlo_fringe(
    config: &InterferometerConfig,
    sweep: &SweepSpec,
    n_samples: usize,
    seed: u64,
) -> Result<FringeScan> {
    config.validate()?;
    if !config.active.iter().any(|&a| a) {
        return Err(Error::Config("no active gratings".into()));
    }
    if sweep.values.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if let SweepVariable::MirrorX(i) = sweep.variable {
        if i > 2 {
            return Err(Error::Config(format!("mirror index {i} out of range")));
        }
    }
    let accs = run_accumulation(config, sweep, n_samples, seed)?;
    let mut total = Accumulator::new(accs[0].port_harmonics[0].len(), accs[0].slit_rates.len());
    for acc in &accs {
        total.merge(acc);
    }
    let flux = if total.weight > 0.0 {
        config.source_rate / total.weight
    } else {
        0.0
    };

    let phase_offsets = vec![0.0; sweep.values.len()];
    let ports = match sweep.variable {
        SweepVariable::DetectorSlitX => vec![PortSeries {
            port: 0,
            expected_rate: total.slit_rates.iter().map(|r| r * flux).collect(),
            decomposition: None,
        }],
        SweepVariable::MirrorX(idx) => {
            let baseline = config.waves[idx].mirror_x;
            let kg = config.waves[idx].grating_wavevector;
            (0..2usize)
                .map(|p| {
                    let dec = FringeDecomposition {
                        grating_wavevector: kg,
                        baseline,
                        mean: total.port_mean[p] * flux,
                        harmonics: total.port_harmonics[p]
                            .iter()
                            .map(|h| (h.re * flux, h.im * flux))
                            .collect(),
                    };
                    let expected_rate = sweep.values.iter().map(|&v| dec.rate(v, 0.0)).collect();
                    PortSeries {
                        port: (p + 1) as u8,
                        expected_rate,
                        decomposition: Some(dec),
                    }
                })
                .collect()
        }
    };

    Ok(FringeScan {
        sweep_name: sweep.variable.name(),
        values: sweep.values.clone(),
        bin_duration: sweep.bin_duration,
        ports,
        phase_offsets,
    })
}

/// Single-grating diffraction profile: counts versus detector-slit position
/// with exactly one active grating.
pub fn diffraction_profile(
    config: &InterferometerConfig,
    slit_positions: &[f64],
    bin_duration: f64,
    n_samples: usize,
    seed: u64,
) -> Result<FringeScan> {
    let n_active = config.active.iter().filter(|&&a| a).count();
    if n_active != 1 {
        return Err(Error::Config(format!(
            "diffraction profile requires exactly one active grating, got {n_active}"
        )));
    }
    let sweep = SweepSpec {
        variable: SweepVariable::DetectorSlitX,
        values: slit_positions.to_vec(),
        bin_duration,
    };
    monte_carlo_fringe(config, &sweep, n_samples, seed)
}

/// Intensity-weighted centroid of a profile restricted to [lo, hi].
pub fn windowed_centroid(values: &[f64], rates: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &r) in values.iter().zip(rates) {
        if x >= lo && x <= hi {
            num += x * r;
            den += r;
        }
    }
    (den > 0.0).then_some(num / den)
}

/// Sum of a profile's rates over [lo, hi].
pub fn windowed_rate(values: &[f64], rates: &[f64], lo: f64, hi: f64) -> f64 {
    values
        .iter()
        .zip(rates)
        .filter(|&(&x, _)| x >= lo && x <= hi)
        .map(|(_, &r)| r)
        .sum()
}
