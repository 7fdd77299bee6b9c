//! Acceptance suite: every exit criterion of the simulator, one test per
//! criterion, each printing a single pass/fail line. Run with
//! `cargo test -p mzatom-cli --release --test acceptance -- --nocapture`.

use std::fs;
use std::process::Command;

use mzatom_core::analysis::{
    fit_fringes, measured_sensitivity, min_detectable_perturbation, phase_noise_contrast_budget,
    shot_noise_limit, Background, FitOptions,
};
use mzatom_core::beam::AtomSample;
use mzatom_core::bragg::{
    bragg_angle_for, ladder_integrate, order_minus_one_suppression, pulse_params, stable_dt,
    two_level_bragg, Envelope,
};
use mzatom_core::config::SimConfig;
use mzatom_core::constants::{AMU, ARGON_MASS_AMU};
use mzatom_core::interferometer::{
    delta_k_washout, diffraction_profile, monte_carlo_fringe, phase_dispersion_contrast,
    port_observables, windowed_centroid, windowed_rate, DiffractionModel, SweepSpec,
    SweepVariable,
};
use mzatom_core::kinematics::{de_broglie, diffraction_angle, supersonic_terminal_velocity};
use mzatom_core::noise::{simulate_counts, vibration_phase_rms, DetectorModel, VibrationModel};
use mzatom_core::tuning::{optimize, Metric};

fn criterion(number: u32, label: &str, check: impl FnOnce() -> Result<(), String>) {
    match check() {
        Ok(()) => println!("acceptance criterion {number:2} [{label}]: PASS"),
        Err(msg) => {
            println!("acceptance criterion {number:2} [{label}]: FAIL - {msg}");
            panic!("criterion {number} [{label}] failed: {msg}");
        }
    }
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn rel_close(value: f64, target: f64, tolerance: f64) -> bool {
    (value - target).abs() <= tolerance * target.abs()
}

#[test]
fn criterion_01_kinematics() {
    criterion(1, "kinematics", || {
        let resolved = SimConfig::default().resolve().map_err(|e| e.to_string())?;
        let li7 = resolved.interferometer.reference_species();
        let lambda = de_broglie(li7.mass, 1050.0).map_err(|e| e.to_string())?;
        ensure(
            rel_close(lambda, 54.3e-12, 0.005),
            format!("de Broglie wavelength {lambda:.4e} != 54.3 pm +- 0.5%"),
        )?;
        let theta1 = diffraction_angle(lambda, li7.grating_period()).map_err(|e| e.to_string())?;
        ensure(
            rel_close(theta1, 162.0e-6, 0.005),
            format!("first-order angle {theta1:.4e} != 162 urad +- 0.5%"),
        )?;
        let g = &resolved.interferometer.geometry;
        let separation = theta1 * (g.mirror_z[1] - g.mirror_z[0]);
        ensure(
            rel_close(separation, 98.0e-6, 0.05),
            format!("path separation {separation:.4e} != 98 um +- 5%"),
        )
    });
}

#[test]
fn criterion_02_carrier_velocity() {
    criterion(2, "carrier-gas velocity", || {
        let v = supersonic_terminal_velocity(1050.0, ARGON_MASS_AMU * AMU)
            .map_err(|e| e.to_string())?;
        ensure((v - 1045.0).abs() <= 10.0, format!("terminal velocity {v:.2} != 1045 +- 10 m/s"))
    });
}

#[test]
fn criterion_03_bragg_dynamics() {
    criterion(3, "Bragg dynamics", || {
        let resolved = SimConfig::default().resolve().map_err(|e| e.to_string())?;
        let species = resolved.interferometer.species.clone();
        let kg = species[0].grating_wavevector();

        // deep-Bragg regime: slow atom, weak coupling, square envelope
        let atom = AtomSample { species: 0, level: 1, weight: 1.0, speed: 66.0, angle: 0.0, offset: 0.0 };
        let theta_b = bragg_angle_for(species[0].mass, atom.speed, kg);
        let mut wave = resolved.interferometer.waves[1].clone();
        wave.theta_y = theta_b;
        wave.envelope = Envelope::Square;
        wave.loss_probability = 0.0;
        let base = pulse_params(&wave, &atom, &species, 1.0).map_err(|e| e.to_string())?;
        let kappa = std::f64::consts::PI / base.area();
        let pulse = pulse_params(&wave, &atom, &species, kappa).map_err(|e| e.to_string())?;
        let two_level = two_level_bragg(&pulse);
        let dt = stable_dt(&wave, &atom, &species, kappa, 4).map_err(|e| e.to_string())?;
        let ladder = ladder_integrate(&wave, &atom, &species, kappa, 4, dt).map_err(|e| e.to_string())?;
        for p in [0, 1] {
            let diff = (ladder.population(p) - two_level.population(p)).abs();
            ensure(diff < 1e-3, format!("deep-Bragg order {p} differs from two-level by {diff:.2e}"))?;
        }

        // thin-grating limit against the Bessel reference
        let area = 1.5f64;
        let tau = 2.0e-10;
        let mut thin = wave.clone();
        thin.theta_y = 0.0;
        thin.waist = tau * 1050.0 / (std::f64::consts::PI / 2.0).sqrt();
        let fast = AtomSample { speed: 1050.0, ..atom.clone() };
        let base = pulse_params(&thin, &fast, &species, 1.0).map_err(|e| e.to_string())?;
        let kappa = area / base.area();
        let dt = stable_dt(&thin, &fast, &species, kappa, 6).map_err(|e| e.to_string())?;
        let amps = ladder_integrate(&thin, &fast, &species, kappa, 6, dt).map_err(|e| e.to_string())?;
        let bessel = |n: u32, x: f64| -> f64 {
            let half = x / 2.0;
            let mut term = half.powi(n as i32);
            for k in 1..=n {
                term /= f64::from(k);
            }
            let mut sum = term;
            for k in 1..40 {
                let kf = f64::from(k);
                term *= -(half * half) / (kf * (kf + f64::from(n)));
                sum += term;
            }
            sum
        };
        for p in -3i32..=3 {
            let expected = bessel(p.unsigned_abs(), area).powi(2);
            let diff = (amps.population(p) - expected).abs();
            ensure(diff < 1e-3, format!("thin-grating order {p} off Bessel by {diff:.2e}"))?;
        }

        // unitarity at the suggested step
        for (power, speed, angle) in [(0.040, 1050.0, 7.0e-6), (0.080, 930.0, -12.0e-6), (0.120, 1180.0, 0.0)] {
            let mut w = resolved.interferometer.waves[1].clone();
            w.power = power;
            w.loss_probability = 0.0;
            let a = AtomSample { species: 0, level: 1, weight: 1.0, speed, angle, offset: 0.0 };
            let dt = stable_dt(&w, &a, &species, resolved.interferometer.coupling_scale, 4)
                .map_err(|e| e.to_string())?;
            let amps = ladder_integrate(&w, &a, &species, resolved.interferometer.coupling_scale, 4, dt)
                .map_err(|e| e.to_string())?;
            let drift = (amps.total_population() - 1.0).abs();
            ensure(drift < 1e-9, format!("unitarity drift {drift:.2e} at P={power}"))?;
        }

        // order −1 suppression at the nominal Bragg geometry
        let nominal = AtomSample { species: 0, level: 1, weight: 1.0, speed: 1050.0, angle: 0.0, offset: 0.0 };
        let mut w = resolved.interferometer.waves[1].clone();
        w.loss_probability = 0.0;
        let p_minus = order_minus_one_suppression(&w, &nominal, &species, resolved.interferometer.coupling_scale)
            .map_err(|e| e.to_string())?;
        ensure(p_minus < 1e-3, format!("order -1 population {p_minus:.2e} not suppressed"))
    });
}

#[test]
fn criterion_04_diffraction_profile() {
    criterion(4, "diffraction profile", || {
        let mut config = SimConfig::default();
        config.simulation.model = DiffractionModel::Ladder;
        config.simulation.samples = 1200;
        config.geometry.detector_slit_width_um = 50.0;
        for (i, w) in config.waves.iter_mut().enumerate() {
            w.active = i == 1;
        }
        let resolved = config.resolve().map_err(|e| e.to_string())?;
        let positions: Vec<f64> = (-60..=120).map(|i| f64::from(i) * 2.5e-6).collect();
        let scan = diffraction_profile(&resolved.interferometer, &positions, 1.0, resolved.samples, resolved.seed)
            .map_err(|e| e.to_string())?;
        let rates = &scan.ports[0].expected_rate;

        let theta1 = resolved.interferometer.reference_theta1();
        let g = &resolved.interferometer.geometry;
        let expected = theta1 * (g.detector_slit_z - g.mirror_z[1]);
        let half = expected / 2.0;
        let p0 = windowed_centroid(&positions, rates, -half, half).ok_or("no order-0 peak")?;
        let p1 = windowed_centroid(&positions, rates, half, expected + half).ok_or("no order-1 peak")?;
        let separation = p1 - p0;
        ensure(
            rel_close(separation, 162.0e-6, 0.05),
            format!("peak separation {separation:.4e} != 162 um +- 5%"),
        )?;
        // two resolved peaks: the valley between them dips well below both
        let valley = windowed_rate(&positions, rates, p0 + 0.35 * expected, p0 + 0.65 * expected)
            / (0.3 * expected / 2.5e-6);
        let peak0_max = positions
            .iter()
            .zip(rates)
            .filter(|(&x, _)| (x - p0).abs() < half / 2.0)
            .map(|(_, &r)| r)
            .fold(0.0, f64::max);
        ensure(valley < 0.5 * peak0_max, format!("peaks unresolved: valley {valley:.3e} vs peak {peak0_max:.3e}"))?;
        let order0 = windowed_rate(&positions, rates, -half, half);
        let minus1 = windowed_rate(&positions, rates, -expected - half, -half);
        ensure(
            minus1 < 1e-3 * order0,
            format!("order -1 rate {minus1:.3e} above 1e-3 of order 0 ({order0:.3e})"),
        )
    });
}

#[test]
fn criterion_05_ideal_contrast() {
    criterion(5, "ideal Monte Carlo contrast", || {
        // strays on, dispersion off
        let mut config = SimConfig::default();
        config.simulation.phase_dispersion_rad = 0.0;
        let resolved = config.resolve().map_err(|e| e.to_string())?;
        let a = resolved.grating_period();
        let values: Vec<f64> = (0..250).map(|i| f64::from(i) * a / 100.0).collect();
        let sweep = SweepSpec { variable: SweepVariable::MirrorX(2), values, bin_duration: 1.0 };
        let scan = monte_carlo_fringe(&resolved.interferometer, &sweep, 20_000, resolved.seed)
            .map_err(|e| e.to_string())?;
        // fit the fringe through high-statistics counts
        let rates = scan.port(1).ok_or("missing exit 1")?.expected_rate.clone();
        let det = DetectorModel { efficiency: 1.0, background: 0.0, burst_rate: 0.0, burst_counts: 0.0 };
        let record = simulate_counts(
            {
                let rates = rates.clone();
                move |t: f64| {
                    let i = ((t / 1.0) as usize).min(rates.len() - 1);
                    rates[i] * 100.0
                }
            },
            &det,
            1.0,
            250.0,
            7,
        )
        .map_err(|e| e.to_string())?;
        let omega = 2.0 * std::f64::consts::PI / 100.0;
        let options = FitOptions { fix_frequency: Some(omega), freeze_quadratic: true, ..Default::default() };
        let fit = fit_fringes(&record, Background::Fixed(0.0), &options).map_err(|e| e.to_string())?;
        ensure(
            (fit.contrast - 0.90).abs() <= 0.05,
            format!("ideal contrast {:.4} != 0.90 +- 0.05", fit.contrast),
        )?;

        // single-velocity perfect-pulse case: exactly full contrast
        config.simulation.single_velocity = true;
        config.simulation.ideal_ports = true;
        config.simulation.include_strays = false;
        for w in config.waves.iter_mut() {
            w.loss_probability = 0.0;
        }
        let resolved = config.resolve().map_err(|e| e.to_string())?;
        let values: Vec<f64> = (0..40).map(|i| f64::from(i) * a / 20.0).collect();
        let sweep = SweepSpec { variable: SweepVariable::MirrorX(2), values, bin_duration: 1.0 };
        let scan = monte_carlo_fringe(&resolved.interferometer, &sweep, 64, 1).map_err(|e| e.to_string())?;
        let rates = &scan.port(1).ok_or("missing exit 1")?.expected_rate;
        let max = rates.iter().cloned().fold(f64::MIN, f64::max);
        let min = rates.iter().cloned().fold(f64::MAX, f64::min);
        let contrast = (max - min) / (max + min);
        ensure(
            (contrast - 1.0).abs() <= 1e-6,
            format!("single-velocity contrast {contrast:.9} != 1 +- 1e-6"),
        )
    });
}

#[test]
fn criterion_06_contrast_budget() {
    criterion(6, "contrast budget", || {
        let factor = phase_dispersion_contrast(0.63).map_err(|e| e.to_string())?;
        ensure((factor - 0.820).abs() <= 0.001, format!("exp(-0.63^2/2) = {factor:.5} != 0.820 +- 0.001"))?;
        let budget = phase_noise_contrast_budget(0.90, &[0.63]).map_err(|e| e.to_string())?;
        ensure((budget - 0.74).abs() <= 0.005, format!("0.90 x 0.820 = {budget:.4} != 0.74"))?;
        let resolved = SimConfig::default().resolve().map_err(|e| e.to_string())?;
        let vib = VibrationModel { rms: 3.0e-9, bandwidth: 50.0e3 };
        let sigma = vibration_phase_rms(&vib, resolved.grating_period()).map_err(|e| e.to_string())?;
        ensure((sigma - 0.0563).abs() <= 6e-4, format!("vibration phase {sigma:.5} != 0.0563"))?;
        let vib_factor = phase_dispersion_contrast(sigma).map_err(|e| e.to_string())?;
        ensure(vib_factor > 0.998, format!("vibration contrast factor {vib_factor:.6} <= 0.998"))
    });
}

#[test]
fn criterion_07_fringe_fit() {
    criterion(7, "fringe fit", || {
        // synthetic record shaped like the default sweep settings
        let resolved = SimConfig::default().resolve().map_err(|e| e.to_string())?;
        let a = resolved.grating_period();
        let rate = 100.0e-9;
        let accel = 0.35e-9;
        let phi1 = 2.0 * std::f64::consts::PI * rate / a;
        let phi2 = 2.0 * std::f64::consts::PI * accel / a;
        let (mean, background, c_true, bin) = (1.4e4, 3370.0, 0.74, 0.1);
        let det = DetectorModel { efficiency: 1.0, background, burst_rate: 0.0, burst_counts: 0.0 };
        let record = simulate_counts(
            move |t: f64| mean * (1.0 + c_true * (0.4 + phi1 * t + phi2 * t * t).cos()),
            &det,
            bin,
            40.0,
            20260810,
        )
        .map_err(|e| e.to_string())?;
        let fit = fit_fringes(&record, Background::Fixed(background), &FitOptions::default())
            .map_err(|e| e.to_string())?;
        ensure(
            (fit.contrast - 0.74).abs() <= 0.015,
            format!("recovered contrast {:.4} != 0.74 +- 0.015", fit.contrast),
        )?;
        let period = 2.0 * std::f64::consts::PI * rate / fit.phase[1];
        ensure(
            rel_close(period, 335.0e-9, 0.01),
            format!("fringe period {:.4} nm != 335 +- 1%", period * 1e9),
        )
    });
}

#[test]
fn criterion_08_sensitivity() {
    criterion(8, "phase sensitivity", || {
        let limit = shot_noise_limit(1.4e4, 3370.0, 0.74).map_err(|e| e.to_string())?;
        ensure(
            (limit - 12.7e-3).abs() <= 0.1e-3,
            format!("shot-noise limit {:.3} mrad/sqrt(Hz) != 12.7", limit * 1e3),
        )?;
        ensure(
            limit / 10.0e-3 <= 1.35,
            format!("shot-noise limit {:.3} mrad not within 35% of 10 mrad", limit * 1e3),
        )?;

        // end-to-end: estimator self-consistency on shot-noise-only data
        let det = DetectorModel { efficiency: 1.0, background: 3370.0, burst_rate: 0.0, burst_counts: 0.0 };
        let record = simulate_counts(
            |t: f64| 1.4e4 * (1.0 + 0.74 * (1.87 * t).cos()),
            &det,
            0.1,
            60.0,
            8,
        )
        .map_err(|e| e.to_string())?;
        let fit = fit_fringes(&record, Background::Fixed(3370.0), &FitOptions::default())
            .map_err(|e| e.to_string())?;
        let measured = measured_sensitivity(&record, &fit).map_err(|e| e.to_string())?;
        let analytic = shot_noise_limit(fit.mean_rate, fit.background, fit.contrast)
            .map_err(|e| e.to_string())?;
        ensure(
            (measured / analytic - 1.0).abs() <= 0.15,
            format!("measured {measured:.4e} vs analytic {analytic:.4e}: off by more than 15%"),
        )
    });
}

#[test]
fn criterion_09_perturbation_bound() {
    criterion(9, "perturbation bound", || {
        let energy = min_detectable_perturbation(0.1e-3, 100.0e-6).map_err(|e| e.to_string())?;
        ensure(
            rel_close(energy, 6.6e-16, 0.02),
            format!("minimum energy {energy:.3e} != 6.6e-16 eV"),
        )?;
        ensure(
            (energy - 6.0e-16).abs() / 6.0e-16 <= 0.10,
            format!("minimum energy {energy:.3e} not within 10% of 6e-16 eV"),
        )
    });
}

#[test]
fn criterion_10_fringe_structure() {
    criterion(10, "fringe structure", || {
        let mut config = SimConfig::default();
        config.simulation.phase_dispersion_rad = 0.0;
        config.simulation.ideal_ports = true;
        let snapshot = config.snapshot().map_err(|e| e.to_string())?;
        let a = snapshot.resolve().map_err(|e| e.to_string())?.grating_period();

        // complementarity: exit sums independent of every mirror position
        let mut sums = Vec::new();
        for (x1, x2, x3) in [(0.0, 0.0, 0.0), (a / 3.0, 0.0, 0.0), (0.0, a / 5.0, 0.0), (0.0, 0.0, a / 7.0)] {
            let mut cfg = snapshot.clone();
            cfg.set_parameter("waves.0.mirror_x_nm", x1 * 1e9).map_err(|e| e.to_string())?;
            cfg.set_parameter("waves.1.mirror_x_nm", x2 * 1e9).map_err(|e| e.to_string())?;
            cfg.set_parameter("waves.2.mirror_x_nm", x3 * 1e9).map_err(|e| e.to_string())?;
            let resolved = cfg.resolve().map_err(|e| e.to_string())?;
            let obs = port_observables(&resolved.interferometer, 3000, 42).map_err(|e| e.to_string())?;
            let r1 = obs.ports[0].mean + 2.0 * obs.ports[0].fundamental.re;
            let r2 = obs.ports[1].mean + 2.0 * obs.ports[1].fundamental.re;
            sums.push(r1 + r2);
        }
        for s in &sums[1..] {
            ensure(
                (s - sums[0]).abs() <= 1e-9 * sums[0],
                format!("exit sum varies with mirrors: {sums:?}"),
            )?;
        }

        // x_M2 enters with coefficient −2: moving M2 by δ equals moving M3 by −2δ
        let resolved = snapshot.resolve().map_err(|e| e.to_string())?;
        let delta = 40.0e-9;
        let mut cfg_m2 = resolved.interferometer.clone();
        cfg_m2.waves[1].mirror_x = delta;
        let sweep = |x: f64| SweepSpec {
            variable: SweepVariable::MirrorX(2),
            values: vec![x],
            bin_duration: 1.0,
        };
        let with_m2 = monte_carlo_fringe(&cfg_m2, &sweep(0.0), 3000, 9).map_err(|e| e.to_string())?;
        let with_m3 = monte_carlo_fringe(&resolved.interferometer, &sweep(-2.0 * delta), 3000, 9)
            .map_err(|e| e.to_string())?;
        let r_m2 = with_m2.ports[0].expected_rate[0];
        let r_m3 = with_m3.ports[0].expected_rate[0];
        ensure(
            (r_m2 - r_m3).abs() <= 1e-9 * r_m2.abs(),
            format!("x_M2 coefficient is not -2: {r_m2} vs {r_m3}"),
        )?;

        // fringe period in x_M3 is exactly the grating period
        let base = monte_carlo_fringe(&resolved.interferometer, &sweep(0.11 * a), 3000, 9)
            .map_err(|e| e.to_string())?;
        let shifted = monte_carlo_fringe(&resolved.interferometer, &sweep(1.11 * a), 3000, 9)
            .map_err(|e| e.to_string())?;
        let r0 = base.ports[0].expected_rate[0];
        let r1 = shifted.ports[0].expected_rate[0];
        ensure(
            (r0 - r1).abs() <= 1e-9 * r0.abs(),
            format!("fringe period differs from the grating period: {r0} vs {r1}"),
        )
    });
}

#[test]
fn criterion_11_optimization() {
    criterion(11, "alignment optimization", || {
        // recover the 1:2:1 power ratio from a detuned start
        let mut config = SimConfig::default();
        config.simulation.phase_dispersion_rad = 0.0;
        config.waves[0].power_mw = 20.0;
        config.waves[1].power_mw = 120.0;
        config.waves[2].power_mw = 20.0;
        let params: Vec<String> = (0..3).map(|i| format!("waves.{i}.power_mw")).collect();
        let result = optimize(&config, &params, Metric::FigureOfMerit, 240, 1500, 5)
            .map_err(|e| e.to_string())?;
        let p: Vec<f64> = result.parameters.iter().map(|(_, v)| *v).collect();
        let mid_ratio = p[1] / (2.0 * p[0]);
        let outer_ratio = p[2] / p[0];
        ensure(
            (mid_ratio - 1.0).abs() <= 0.15 && (outer_ratio - 1.0).abs() <= 0.15,
            format!("power ratio not 1:2:1 within 15%: {p:?}"),
        )?;

        // θ_z tuning restores the grating-vector match
        let mut config = SimConfig::default();
        config.simulation.phase_dispersion_rad = 0.0;
        config.simulation.samples = 1024;
        config.waves[0].theta_z_urad = 50.0;
        let result = optimize(
            &config,
            &["waves.0.theta_z_urad".to_string()],
            Metric::Contrast,
            60,
            1024,
            4,
        )
        .map_err(|e| e.to_string())?;
        let theta_z1 = result.parameters[0].1 * 1e-6;
        let resolved = SimConfig::default().resolve().map_err(|e| e.to_string())?;
        let washout = delta_k_washout(
            &[theta_z1, 0.0, 0.0],
            resolved.interferometer.geometry.aperture_height,
            resolved.interferometer.waves[0].grating_wavevector,
        )
        .map_err(|e| e.to_string())?;
        ensure(washout > 0.99, format!("washout {washout:.4} <= 0.99 after tuning"))
    });
}

#[test]
fn criterion_12_determinism() {
    criterion(12, "determinism", || {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out1 = tmp.path().join("a");
        let out2 = tmp.path().join("b");
        for out in [&out1, &out2] {
            let status = Command::new(env!("CARGO_BIN_EXE_mzatom"))
                .args([
                    "--seed",
                    "123",
                    "--samples",
                    "1500",
                    "--out",
                    out.to_str().unwrap(),
                    "fringes",
                    "--duration-s",
                    "8",
                ])
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.success(), format!("fringes run failed: {status}"))?;
        }
        for name in ["config_snapshot.toml", "fringe_scan.csv", "counts.csv", "fringe_fit.txt"] {
            let a = fs::read(out1.join(name)).map_err(|e| e.to_string())?;
            let b = fs::read(out2.join(name)).map_err(|e| e.to_string())?;
            ensure(a == b, format!("{name} differs between identical seeded runs"))?;
        }
        Ok(())
    });
}
