//! Fringe fitting, contrast extraction, figure of merit and phase
//! sensitivity estimators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constants::HBAR_EV_S;
use crate::error::{Error, Result};
use crate::noise::CountRecord;

/// How the detector background enters the fringe fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Background {
    /// Independently measured rate, counts/s, held fixed.
    Fixed(f64),
    /// Background floated as a fit parameter.
    Fit,
}

/// Optional fit switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Freeze the quadratic phase coefficient at zero.
    pub freeze_quadratic: bool,
    /// Pin the linear phase coefficient φ₁ (rad/s) instead of searching for
    /// it. Used when the sweep rate is known independently.
    pub fix_frequency: Option<f64>,
    /// Grid resolution for the initial frequency search.
    pub grid_points: usize,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            freeze_quadratic: false,
            fix_frequency: None,
            grid_points: 400,
            max_iterations: 200,
        }
    }
}

/// Per-parameter 1σ uncertainties of a [`FringeFit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitUncertainties {
    pub mean_rate: f64,
    pub contrast: f64,
    pub phase: [f64; 3],
    pub background: f64,
}

/// Result of fitting B + I·(1 + C·cos(φ₀ + φ₁t + φ₂t²)) to a count record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// Mean detected signal rate I, counts/s.
    pub mean_rate: f64,
    /// Background rate B, counts/s (fixed or fitted).
    pub background: f64,
    /// Fringe contrast C ∈ [0, 1].
    pub contrast: f64,
    /// Phase polynomial coefficients [φ₀ (rad), φ₁ (rad/s), φ₂ (rad/s²)].
    pub phase: [f64; 3],
    pub uncertainties: FitUncertainties,
    /// Weighted residual sum of squares.
    pub chi_square: f64,
    /// Degrees of freedom of the fit.
    pub dof: usize,
    pub iterations: usize,
}

/// Phase-sensitivity summary of one fringe record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Sensitivity estimated from the residual scatter, rad/√Hz.
    pub measured: f64,
    /// Mid-fringe shot-noise limit, rad/√Hz.
    pub shot_noise_limit: f64,
    /// Figure of merit I·C², counts/s.
    pub figure_of_merit: f64,
}

/// Fringe contrast (I_max − I_min)/(I_max + I_min).
pub fn contrast(i_max: f64, i_min: f64) -> Result<f64> {
    if i_min < 0.0 || i_max < i_min {
        return Err(Error::Domain(format!(
            "contrast requires I_max ≥ I_min ≥ 0, got ({i_max}, {i_min})"
        )));
    }
    if i_max == 0.0 {
        return Err(Error::Domain("contrast undefined for two zero intensities".into()));
    }
    Ok((i_max - i_min) / (i_max + i_min))
}

/// Figure of merit I·C² governing Poisson-limited phase accuracy.
pub fn figure_of_merit(mean_rate: f64, contrast: f64) -> f64 {
    mean_rate * contrast * contrast
}

/// Mid-fringe shot-noise phase sensitivity √(I+B)/(C·I), rad/√Hz.
pub fn shot_noise_limit(mean_rate: f64, background: f64, contrast: f64) -> Result<f64> {
    if mean_rate <= 0.0 || contrast <= 0.0 {
        return Err(Error::Domain(format!(
            "shot_noise_limit requires positive rate and contrast, got I={mean_rate}, C={contrast}"
        )));
    }
    if background < 0.0 {
        return Err(Error::Domain("background must be non-negative".into()));
    }
    Ok((mean_rate + background).sqrt() / (contrast * mean_rate))
}

/// Smallest detectable energy perturbation ħ·Δφ/τ, eV.
pub fn min_detectable_perturbation(delta_phi: f64, interaction_time: f64) -> Result<f64> {
    if interaction_time <= 0.0 {
        return Err(Error::Domain(format!(
            "interaction time must be positive, got {interaction_time}"
        )));
    }
    Ok(HBAR_EV_S * delta_phi / interaction_time)
}

/// Predicted contrast after independent Gaussian phase-dispersion sources:
/// ideal_C·Π exp(−σᵢ²/2).
pub fn phase_noise_contrast_budget(ideal_contrast: f64, sigmas: &[f64]) -> Result<f64> {
    let mut c = ideal_contrast;
    for &s in sigmas {
        c *= crate::interferometer::phase_dispersion_contrast(s)?;
    }
    Ok(c)
}

struct FitProblem<'a> {
    times: &'a [f64],
    counts: &'a [f64],
    bin: f64,
    fit_background: bool,
    fixed_background: f64,
    freeze_quadratic: bool,
    fix_frequency: bool,
}

impl FitProblem<'_> {
    /// Parameter layout: [I, U, V, φ1, φ2, (B)].
    fn n_params(&self) -> usize {
        5 + usize::from(self.fit_background)
    }

    fn model_counts(&self, p: &DVector<f64>, t: f64) -> f64 {
        let b = if self.fit_background { p[5] } else { self.fixed_background };
        let xi = p[3] * t + p[4] * t * t;
        self.bin * (b + p[0] + p[1] * xi.cos() + p[2] * xi.sin())
    }

    fn jacobian_row(&self, p: &DVector<f64>, t: f64, row: &mut [f64]) {
        let xi = p[3] * t + p[4] * t * t;
        let (s, c) = xi.sin_cos();
        let slope = -p[1] * s + p[2] * c;
        row[0] = self.bin;
        row[1] = self.bin * c;
        row[2] = self.bin * s;
        row[3] = if self.fix_frequency { 0.0 } else { self.bin * slope * t };
        row[4] = if self.freeze_quadratic { 0.0 } else { self.bin * slope * t * t };
        if self.fit_background {
            row[5] = self.bin;
        }
    }

    fn chi_square(&self, p: &DVector<f64>) -> f64 {
        self.times
            .iter()
            .zip(self.counts)
            .map(|(&t, &y)| {
                let mu = self.model_counts(p, t);
                let w = 1.0 / mu.max(1.0);
                (y - mu) * (y - mu) * w
            })
            .sum()
    }
}

/// Solve the linear system in (I, U, V) for one fixed phase polynomial and
/// return the candidate parameter vector with its χ².
fn linear_candidate(problem: &FitProblem<'_>, omega: f64, quad: f64) -> Option<(f64, DVector<f64>)> {
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (&t, &y) in problem.times.iter().zip(problem.counts) {
        let xi = omega * t + quad * t * t;
        let row = [1.0, xi.cos(), xi.sin()];
        let target = y / problem.bin - problem.fixed_background;
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * target;
        }
    }
    let a = DMatrix::from_fn(3, 3, |i, j| ata[i][j]);
    let b = DVector::from_row_slice(&atb);
    let sol = a.lu().solve(&b)?;
    let mut p = DVector::zeros(problem.n_params());
    p[0] = sol[0];
    p[1] = sol[1];
    p[2] = sol[2];
    p[3] = omega;
    p[4] = quad;
    if problem.fit_background {
        p[5] = problem.fixed_background;
    }
    let chi2 = problem.chi_square(&p);
    Some((chi2, p))
}

/// Coarse linear-in-quadratures search over the fringe frequency and the
/// quadratic drift, followed by a local grid refinement around the best
/// point: for each trial phase polynomial the system is linear in
/// (I, U, V).
fn grid_search(
    problem: &FitProblem<'_>,
    grid_points: usize,
    fixed_omega: Option<f64>,
) -> (f64, DVector<f64>, f64) {
    let t_span = problem.times.last().unwrap() - problem.times[0];
    let n = problem.times.len();
    let omega_lo = std::f64::consts::PI / t_span.max(1e-12);
    let omega_hi = 0.8 * std::f64::consts::PI * n as f64 / t_span.max(1e-12);
    let quad_unit = 2.0 * std::f64::consts::PI / (t_span * t_span).max(1e-12);
    let quad_grid: Vec<f64> = if problem.freeze_quadratic {
        vec![0.0]
    } else {
        [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0]
            .iter()
            .map(|c| c * quad_unit)
            .collect()
    };

    fn consider(best: &mut Option<(f64, DVector<f64>)>, cand: Option<(f64, DVector<f64>)>) {
        if let Some((chi2, p)) = cand {
            if best.as_ref().map(|(c, _)| chi2 < *c).unwrap_or(true) {
                *best = Some((chi2, p));
            }
        }
    }

    let mut best: Option<(f64, DVector<f64>)> = None;
    if let Some(omega) = fixed_omega {
        for &q in &quad_grid {
            consider(&mut best, linear_candidate(problem, omega, q));
        }
    } else {
        let grid_points = grid_points.max(10);
        let spacing = (omega_hi - omega_lo) / (grid_points - 1) as f64;
        for k in 0..grid_points {
            let omega = omega_lo + spacing * k as f64;
            for &q in &quad_grid {
                consider(&mut best, linear_candidate(problem, omega, q));
            }
        }
        // refine locally around the coarse optimum
        let (coarse_omega, coarse_quad) = {
            let p = &best.as_ref().expect("non-empty grid").1;
            (p[3], p[4])
        };
        for dk in -20..=20 {
            let omega = coarse_omega + spacing * f64::from(dk) / 20.0;
            if omega <= 0.0 {
                continue;
            }
            for dq in -4..=4 {
                let q = coarse_quad + quad_unit * f64::from(dq) / 8.0;
                consider(&mut best, linear_candidate(problem, omega, q));
            }
        }
    }
    let (chi2, p) = best.expect("grid search over a non-empty grid");
    let omega = p[3];
    (chi2, p, omega)
}

/// Weighted least-squares fit of B + I(1 + C·cos(φ₀+φ₁t+φ₂t²)) to a count
/// record with Poisson weights: coarse frequency grid, then damped
/// Gauss-Newton refinement.
pub fn fit_fringes(
    record: &CountRecord,
    background: Background,
    options: &FitOptions,
) -> Result<FringeFit> {
    if record.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "fringe fit needs at least 6 bins, got {}",
            record.len()
        )));
    }
    let counts: Vec<f64> = record.counts.iter().map(|&c| c as f64).collect();
    let times: Vec<f64> = record
        .start_times
        .iter()
        .map(|&t| t + record.bin_duration / 2.0)
        .collect();
    let (fit_background, fixed_background) = match background {
        Background::Fixed(b) => (false, b),
        Background::Fit => {
            // seed the floating background with the lowest decile
            let mut sorted = counts.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (true, sorted[sorted.len() / 10] / record.bin_duration)
        }
    };
    let problem = FitProblem {
        times: &times,
        counts: &counts,
        bin: record.bin_duration,
        fit_background,
        fixed_background,
        freeze_quadratic: options.freeze_quadratic,
        fix_frequency: options.fix_frequency.is_some(),
    };

    let (_, mut params, grid_omega) =
        grid_search(&problem, options.grid_points.max(10), options.fix_frequency);
    let n_params = problem.n_params();
    let n = times.len();

    // Levenberg-Marquardt refinement
    let mut lambda = 1e-3;
    let mut chi2 = problem.chi_square(&params);
    let mut iterations = 0;
    let mut converged = false;
    let mut small_steps = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let mut jtj = DMatrix::<f64>::zeros(n_params, n_params);
        let mut jtr = DVector::<f64>::zeros(n_params);
        let mut row = vec![0.0; n_params];
        for (&t, &y) in times.iter().zip(&counts) {
            let mu = problem.model_counts(&params, t);
            let w = 1.0 / mu.max(1.0);
            problem.jacobian_row(&params, t, &mut row);
            let r = y - mu;
            for i in 0..n_params {
                for j in 0..n_params {
                    jtj[(i, j)] += w * row[i] * row[j];
                }
                jtr[i] += w * row[i] * r;
            }
        }
        if problem.freeze_quadratic {
            jtj[(4, 4)] = 1.0;
        }
        if problem.fix_frequency {
            jtj[(3, 3)] = 1.0;
        }
        // column scaling (unit diagonal) keeps the solve well conditioned
        // across the very different parameter magnitudes
        let scales: Vec<f64> = (0..n_params).map(|i| jtj[(i, i)].max(1e-30).sqrt()).collect();
        let scaled = DMatrix::from_fn(n_params, n_params, |i, j| {
            jtj[(i, j)] / (scales[i] * scales[j])
        });
        let scaled_grad = DVector::from_fn(n_params, |i, _| jtr[i] / scales[i]);
        let mut improved = false;
        for _ in 0..15 {
            let mut damped = scaled.clone();
            for i in 0..n_params {
                damped[(i, i)] += lambda + 1e-10;
            }
            let Some(scaled_step) = damped.lu().solve(&scaled_grad) else {
                lambda *= 10.0;
                continue;
            };
            let step = DVector::from_fn(n_params, |i, _| scaled_step[i] / scales[i]);
            let trial = &params + &step;
            let trial_chi2 = problem.chi_square(&trial);
            if trial_chi2 <= chi2 {
                let delta = chi2 - trial_chi2;
                params = trial;
                chi2 = trial_chi2;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                // converge on sustained stagnation: the shrinking damping
                // gives the next iteration a chance to move again
                if delta < 1e-9 + 1e-12 * chi2 {
                    small_steps += 1;
                } else {
                    small_steps = 0;
                }
                break;
            }
            lambda *= 10.0;
        }
        if small_steps >= 2 {
            converged = true;
            break;
        }
        if !improved {
            // no direction improves even under heavy damping: local optimum
            converged = true;
            break;
        }
    }
    if !converged && iterations >= options.max_iterations {
        return Err(Error::Convergence(format!(
            "fringe fit did not converge after {iterations} iterations; best grid frequency {:.6} rad/s",
            grid_omega
        )));
    }

    // covariance from the Gauss-Newton normal matrix at the optimum
    let mut jtj = DMatrix::<f64>::zeros(n_params, n_params);
    let mut row = vec![0.0; n_params];
    for &t in &times {
        let mu = problem.model_counts(&params, t);
        let w = 1.0 / mu.max(1.0);
        problem.jacobian_row(&params, t, &mut row);
        for i in 0..n_params {
            for j in 0..n_params {
                jtj[(i, j)] += w * row[i] * row[j];
            }
        }
    }
    if problem.freeze_quadratic {
        jtj[(4, 4)] = 1.0;
    }
    if problem.fix_frequency {
        jtj[(3, 3)] = 1.0;
    }
    // a floated background is collinear with the mean signal level, so the
    // normal matrix can be singular; a relative ridge leaves well-posed
    // problems untouched and reports the unidentifiable direction as a
    // correspondingly large uncertainty
    for i in 0..n_params {
        jtj[(i, i)] *= 1.0 + 1e-12;
        jtj[(i, i)] += 1e-300;
    }
    let cov = jtj
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Convergence("singular normal matrix at optimum".into()))?;

    let (mut i_rate, u, v) = (params[0], params[1], params[2]);
    let amplitude = (u * u + v * v).sqrt();
    let mut phi0 = (-v).atan2(u);
    let mut contrast_hat = if i_rate.abs() > 0.0 { amplitude / i_rate } else { 0.0 };
    if contrast_hat < 0.0 {
        contrast_hat = -contrast_hat;
        phi0 += std::f64::consts::PI;
    }
    let mut background_rate = if fit_background { params[5] } else { fixed_background };
    if fit_background && contrast_hat > 1.0 {
        // the background/mean split is degenerate; hold the physical C ≤ 1
        // boundary while preserving the identifiable level and amplitude
        let level = background_rate + i_rate;
        i_rate = amplitude;
        background_rate = level - amplitude;
        contrast_hat = 1.0;
    }

    // delta method for C = √(U²+V²)/I and φ₀ = atan2(−V, U)
    let s = amplitude.max(1e-300);
    let g_c = [
        -s / (i_rate * i_rate),
        u / (s * i_rate),
        v / (s * i_rate),
    ];
    let mut var_c = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var_c += g_c[i] * cov[(i, j)] * g_c[j];
        }
    }
    let g_p = [v / (s * s), -u / (s * s)];
    let mut var_p0 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            var_p0 += g_p[i] * cov[(i + 1, j + 1)] * g_p[j];
        }
    }

    let sigma_b = if fit_background { cov[(5, 5)].max(0.0).sqrt() } else { 0.0 };
    let dof = n.saturating_sub(n_params - usize::from(options.freeze_quadratic));

    Ok(FringeFit {
        mean_rate: i_rate,
        background: background_rate,
        contrast: contrast_hat.min(1.0),
        phase: [phi0, params[3], params[4]],
        uncertainties: FitUncertainties {
            mean_rate: cov[(0, 0)].max(0.0).sqrt(),
            contrast: var_c.max(0.0).sqrt(),
            phase: [
                var_p0.max(0.0).sqrt(),
                cov[(3, 3)].max(0.0).sqrt(),
                cov[(4, 4)].max(0.0).sqrt(),
            ],
            background: sigma_b,
        },
        chi_square: chi2,
        dof,
        iterations,
    })
}

/// Phase sensitivity from the per-bin residual scatter, normalized to 1 s.
///
/// Residuals are converted to equivalent phase deviations through the local
/// fringe slope; only bins with at least 75% of the maximum slope
/// participate, which reproduces the mid-fringe convention of
/// [`shot_noise_limit`] on shot-noise-limited data.
pub fn measured_sensitivity(record: &CountRecord, fit: &FringeFit) -> Result<f64> {
    if record.len() < 6 {
        return Err(Error::InsufficientData("sensitivity needs at least 6 bins".into()));
    }
    let t_bin = record.bin_duration;
    let amp = fit.mean_rate * fit.contrast * t_bin;
    if amp <= 0.0 {
        return Err(Error::Domain(
            "sensitivity undefined: fringe slope vanishes everywhere".into(),
        ));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t0, &c) in record.start_times.iter().zip(&record.counts) {
        let t = t0 + t_bin / 2.0;
        let psi = fit.phase[0] + fit.phase[1] * t + fit.phase[2] * t * t;
        let mu = t_bin * (fit.background + fit.mean_rate * (1.0 + fit.contrast * psi.cos()));
        let slope = -amp * psi.sin();
        if slope.abs() >= 0.75 * amp {
            let r = c as f64 - mu;
            num += r * r;
            den += slope * slope;
        }
    }
    if den == 0.0 {
        return Err(Error::Domain(
            "sensitivity undefined: no bins near mid-fringe".into(),
        ));
    }
    Ok((num / den).sqrt() * t_bin.sqrt())
}

/// Bundle the three sensitivity figures for one fitted record.
pub fn sensitivity_report(record: &CountRecord, fit: &FringeFit) -> Result<SensitivityReport> {
    Ok(SensitivityReport {
        measured: measured_sensitivity(record, fit)?,
        shot_noise_limit: shot_noise_limit(fit.mean_rate, fit.background, fit.contrast)?,
        figure_of_merit: figure_of_merit(fit.mean_rate, fit.contrast),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    pub(crate) fn synthetic_record(
        mean_rate: f64,
        background: f64,
        contrast: f64,
        phase: [f64; 3],
        bin: f64,
        duration: f64,
        seed: Option<u64>,
    ) -> CountRecord {
        let n = (duration / bin).round() as usize;
        let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
        let mut start_times = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for i in 0..n {
            let t0 = i as f64 * bin;
            let t = t0 + bin / 2.0;
            let psi = phase[0] + phase[1] * t + phase[2] * t * t;
            let mu = bin * (background + mean_rate * (1.0 + contrast * psi.cos()));
            let c = match rng.as_mut() {
                Some(r) => Poisson::new(mu).unwrap().sample(r) as u64,
                None => mu.round() as u64,
            };
            start_times.push(t0);
            counts.push(c);
        }
        CountRecord { start_times, bin_duration: bin, counts }
    }

    #[test]
    fn contrast_basics() {
        assert_eq!(contrast(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(contrast(7.0, 0.0).unwrap(), 1.0);
        assert!(contrast(0.0, 0.0).is_err());
        assert!(contrast(1.0, 2.0).is_err());
    }

    #[test]
    fn contrast_scale_invariant() {
        let a = contrast(14.0e3, 2.1e3).unwrap();
        let b = contrast(14.0, 2.1).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn figure_of_merit_values() {
        // flux and contrast pairs from operating interferometers
        assert!((figure_of_merit(1.4e4, 0.74) - 7.666e3).abs() < 10.0);
        assert!((figure_of_merit(1900.0, 0.49) - 456.2).abs() < 0.5);
        assert_eq!(figure_of_merit(1.0e4, 0.0), 0.0);
    }

    #[test]
    fn shot_noise_limit_values() {
        let s = shot_noise_limit(1.4e4, 3370.0, 0.74).unwrap();
        assert!((s - 12.7e-3).abs() < 0.1e-3, "got {s}");
        let s = shot_noise_limit(1.0e6, 0.0, 1.0).unwrap();
        assert!((s - 1.0e-3).abs() < 1e-9);
        assert!(shot_noise_limit(0.0, 10.0, 0.5).is_err());
        assert!(shot_noise_limit(100.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn perturbation_bound_values() {
        // 0.1 mrad over 100 µs → ħ/τ·Δφ = 6.6e-16 eV
        let e = min_detectable_perturbation(0.1e-3, 100.0e-6).unwrap();
        assert!((e - 6.58e-16).abs() < 0.05e-16, "got {e}");
        assert_eq!(min_detectable_perturbation(0.0, 1.0).unwrap(), 0.0);
        let e = min_detectable_perturbation(1.0, 1.0).unwrap();
        assert!((e - 6.582e-16).abs() < 1e-18);
        assert!(min_detectable_perturbation(1.0, 0.0).is_err());
    }

    #[test]
    fn budget_factors() {
        let c = phase_noise_contrast_budget(0.90, &[0.63]).unwrap();
        assert!((c - 0.738).abs() < 1e-3, "got {c}");
        assert_eq!(phase_noise_contrast_budget(0.42, &[]).unwrap(), 0.42);
        let c = phase_noise_contrast_budget(0.90, &[0.0563]).unwrap();
        assert!((c - 0.8986).abs() < 2e-4, "got {c}");
    }

    #[test]
    fn noiseless_sine_exact_recovery() {
        let phase = [0.8, 1.9, 0.0];
        // noiseless record at high rate so rounding is negligible
        let rec = synthetic_record(2.0e6, 1.0e5, 0.6, phase, 0.1, 40.0, None);
        let fit = fit_fringes(&rec, Background::Fixed(1.0e5), &FitOptions::default()).unwrap();
        assert!((fit.contrast - 0.6).abs() < 1e-6, "C = {}", fit.contrast);
        assert!((fit.phase[1] - 1.9).abs() < 1e-6);
        assert!((fit.mean_rate - 2.0e6).abs() / 2.0e6 < 1e-6);
    }

    #[test]
    fn synthetic_fringe_contrast_recovered() {
        let phase = [0.3, 1.87, 0.0065];
        let rec = synthetic_record(1.4e4, 3370.0, 0.74, phase, 0.1, 40.0, Some(42));
        let fit = fit_fringes(&rec, Background::Fixed(3370.0), &FitOptions::default()).unwrap();
        assert!((fit.contrast - 0.74).abs() < 0.015, "C = {}", fit.contrast);
        assert!(fit.uncertainties.contrast < 0.02);
    }

    #[test]
    fn null_contrast_consistent_with_zero() {
        // the sweep is known, so pin the phase evolution: a free frequency
        // search would return the extreme of ~400 noise amplitudes
        let options = FitOptions {
            fix_frequency: Some(1.9),
            freeze_quadratic: true,
            ..Default::default()
        };
        let mut within2 = 0usize;
        let mut within35 = 0usize;
        let n_trials = 100;
        for seed in 0..n_trials {
            let rec = synthetic_record(1.4e4, 3370.0, 0.0, [0.0, 1.9, 0.0], 0.1, 20.0, Some(seed));
            let fit = fit_fringes(&rec, Background::Fixed(3370.0), &options).unwrap();
            if fit.contrast <= 2.0 * fit.uncertainties.contrast {
                within2 += 1;
            }
            if fit.contrast <= 3.5 * fit.uncertainties.contrast {
                within35 += 1;
            }
        }
        // fitted amplitude is Rayleigh-distributed under the null:
        // P(C ≤ 2σ) = 86.5%, P(C ≤ 3.5σ) = 99.8%
        assert!(within2 >= 70, "only {within2}/{n_trials} within 2σ");
        assert!(within35 >= 95, "only {within35}/{n_trials} within 3.5σ");
    }

    #[test]
    fn too_few_bins_rejected() {
        let rec = synthetic_record(1.0e3, 0.0, 0.5, [0.0, 5.0, 0.0], 0.1, 0.5, None);
        assert!(matches!(
            fit_fringes(&rec, Background::Fixed(0.0), &FitOptions::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn fitted_background_keeps_identifiable_quantities() {
        // a floated background trades off exactly against the mean signal
        // level; the total level and the fringe amplitude stay identified
        // and the background uncertainty is reported as large
        let rec = synthetic_record(1.4e4, 3370.0, 0.74, [0.3, 1.87, 0.0], 0.1, 40.0, Some(3));
        let fit = fit_fringes(&rec, Background::Fit, &FitOptions::default()).unwrap();
        let level = fit.background + fit.mean_rate;
        let amplitude = fit.mean_rate * fit.contrast;
        assert!((level - 17370.0).abs() / 17370.0 < 0.01, "level {level}");
        assert!(
            (amplitude - 0.74 * 1.4e4).abs() / (0.74 * 1.4e4) < 0.03,
            "amplitude {amplitude}"
        );
        assert!(fit.uncertainties.background > 100.0);
    }

    #[test]
    fn sensitivity_matches_shot_noise_on_poisson_data() {
        let phase = [0.0, 1.87, 0.0];
        let rec = synthetic_record(1.4e4, 3370.0, 0.74, phase, 0.1, 60.0, Some(8));
        let fit = fit_fringes(&rec, Background::Fixed(3370.0), &FitOptions::default()).unwrap();
        let measured = measured_sensitivity(&rec, &fit).unwrap();
        let limit = shot_noise_limit(fit.mean_rate, fit.background, fit.contrast).unwrap();
        assert!(
            (measured / limit - 1.0).abs() < 0.15,
            "measured {measured}, limit {limit}"
        );
    }

    #[test]
    fn sensitivity_degrades_in_quadrature_with_jitter() {
        // add a per-bin phase jitter and expect √(shot² + σ_j²·T_bin)
        let phase = [0.0, 1.87, 0.0];
        let bin = 0.1;
        let jitter = 0.014;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let normal = rand_distr::Normal::new(0.0, jitter).unwrap();
        let n = (120.0 / bin) as usize;
        let mut start_times = Vec::new();
        let mut counts = Vec::new();
        for i in 0..n {
            let t0 = i as f64 * bin;
            let t = t0 + bin / 2.0;
            let psi = phase[1] * t + normal.sample(&mut rng);
            let mu = bin * (3370.0 + 1.4e4 * (1.0 + 0.74 * psi.cos()));
            counts.push(Poisson::new(mu).unwrap().sample(&mut rng) as u64);
            start_times.push(t0);
        }
        let rec = CountRecord { start_times, bin_duration: bin, counts };
        let fit = fit_fringes(&rec, Background::Fixed(3370.0), &FitOptions::default()).unwrap();
        let measured = measured_sensitivity(&rec, &fit).unwrap();
        let shot = shot_noise_limit(fit.mean_rate, fit.background, fit.contrast).unwrap();
        let expected = (shot * shot + jitter * jitter * bin).sqrt();
        assert!(
            (measured / expected - 1.0).abs() < 0.2,
            "measured {measured}, expected {expected}"
        );
    }

    #[test]
    fn infinite_count_limit_reaches_jitter_floor() {
        // scale counts up: the shot term shrinks and the jitter floor remains
        let bin = 0.1;
        let jitter = 0.02;
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let normal = rand_distr::Normal::new(0.0, jitter).unwrap();
        let n = (120.0 / bin) as usize;
        let mut start_times = Vec::new();
        let mut counts = Vec::new();
        let big = 1.4e10;
        for i in 0..n {
            let t0 = i as f64 * bin;
            let t = t0 + bin / 2.0;
            let psi = 1.87 * t + normal.sample(&mut rng);
            let mu = bin * big * (1.0 + 0.74 * psi.cos());
            counts.push(mu.round() as u64);
            start_times.push(t0);
        }
        let rec = CountRecord { start_times, bin_duration: bin, counts };
        let fit = fit_fringes(&rec, Background::Fixed(0.0), &FitOptions::default()).unwrap();
        let measured = measured_sensitivity(&rec, &fit).unwrap();
        let floor = jitter * bin.sqrt();
        assert!(
            (measured / floor - 1.0).abs() < 0.25,
            "measured {measured}, floor {floor}"
        );
    }

    #[test]
    fn flat_record_has_undefined_sensitivity() {
        let rec = synthetic_record(1.0e4, 0.0, 0.0, [0.0, 1.9, 0.0], 0.1, 20.0, None);
        let fit = FringeFit {
            mean_rate: 1.0e4,
            background: 0.0,
            contrast: 0.0,
            phase: [0.0, 1.9, 0.0],
            uncertainties: FitUncertainties {
                mean_rate: 0.0,
                contrast: 0.0,
                phase: [0.0; 3],
                background: 0.0,
            },
            chi_square: 0.0,
            dof: rec.len(),
            iterations: 0,
        };
        assert!(measured_sensitivity(&rec, &fit).is_err());
    }
}
