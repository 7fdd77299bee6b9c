//! Command implementations for the `mzatom` binary: experiment drivers for
//! diffraction profiles and interference fringes, parameter scans, alignment
//! optimization, and consolidated reports. All outputs are deterministic for
//! a fixed seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use mzatom_core::analysis::{
    fit_fringes, measured_sensitivity, min_detectable_perturbation, shot_noise_limit, Background,
    FitOptions, FringeFit,
};
use mzatom_core::config::{ResolvedConfig, SimConfig};
use mzatom_core::interferometer::{
    delta_k_washout, diffraction_profile, monte_carlo_fringe, phase_dispersion_contrast,
    port_observables, windowed_centroid, windowed_rate, DiffractionModel, FringeScan, SweepSpec,
    SweepVariable,
};
use mzatom_core::noise::{
    apply_phase_jitter, apply_vibration_jitter, simulate_counts, vibration_phase_rms, CountRecord,
};
use mzatom_core::tuning::{optimize, scan, Metric, ScanSpec};

/// Seed salts separating the independent noise stages of a fringe run.
const DISPERSION_SEED_SALT: u64 = 0x9e3779b97f4a7c15;
const VIBRATION_SEED_SALT: u64 = 0x6a09e667f3bcc909;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    #[value(name = "two-level")]
    TwoLevel,
    Ladder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Contrast,
    /// Figure of merit I·C².
    Icc,
    Rate,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Contrast => Metric::Contrast,
            MetricArg::Icc => Metric::FigureOfMerit,
            MetricArg::Rate => Metric::PortRate,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mzatom",
    about = "Three-grating Mach-Zehnder atom interferometer simulator",
    version
)]
pub struct Cli {
    /// TOML configuration file; embedded defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample-count override.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "mzatom-out")]
    pub out: PathBuf,
    /// Diffraction model override.
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelArg>,
    /// Worker threads (0 = automatic). Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-grating diffraction profile versus detector-slit position.
    Diffract {
        /// Grating to leave on (1-3).
        #[arg(long, default_value_t = 2)]
        grating: usize,
        #[arg(long, default_value_t = -150.0)]
        from_um: f64,
        #[arg(long, default_value_t = 300.0)]
        to_um: f64,
        #[arg(long, default_value_t = 2.5)]
        step_um: f64,
        /// Detector-slit width for the scan, µm.
        #[arg(long, default_value_t = 50.0)]
        slit_width_um: f64,
        /// Counting period per slit position, s.
        #[arg(long, default_value_t = 1.0)]
        bin_s: f64,
    },
    /// Interference fringes: sweep mirror 3, count, fit, and report.
    Fringes {
        #[arg(long)]
        duration_s: Option<f64>,
        #[arg(long)]
        bin_s: Option<f64>,
        /// Drop stray paths from the detection windows.
        #[arg(long)]
        no_strays: bool,
        /// Override the injected phase-dispersion rms, rad.
        #[arg(long)]
        dispersion_rad: Option<f64>,
        /// Disable the vibration phase jitter.
        #[arg(long)]
        no_vibration: bool,
        /// Emit every atom at the mean speed on axis.
        #[arg(long)]
        single_velocity: bool,
        /// Kinematic port classification instead of slit windows.
        #[arg(long)]
        ideal_ports: bool,
    },
    /// Evaluate a metric over a grid of one configuration parameter.
    Scan {
        /// Parameter path, e.g. waves.1.theta_y_urad.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = MetricArg::Contrast)]
        metric: MetricArg,
        /// Atoms per grid point.
        #[arg(long, default_value_t = 4000)]
        point_samples: usize,
    },
    /// Derivative-free optimization of configuration parameters.
    Optimize {
        /// Comma-separated parameter paths.
        #[arg(long, value_delimiter = ',')]
        params: Vec<String>,
        #[arg(long, value_enum, default_value_t = MetricArg::Icc)]
        metric: MetricArg,
        /// Evaluation budget.
        #[arg(long, default_value_t = 240)]
        budget: usize,
        /// Atoms per evaluation.
        #[arg(long, default_value_t = 2000)]
        point_samples: usize,
    },
    /// Consolidated contrast-budget report over a run directory.
    Report {
        /// Directory containing outputs of a previous run.
        run_dir: PathBuf,
    },
}

/// Error classes mapped to distinct process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or arguments (exit 2).
    Config(String),
    /// Runtime failure: I/O, domain errors, instability (exit 3).
    Runtime(String),
    /// Fit or optimization did not converge / not enough data (exit 4).
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Convergence(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Convergence(m) => write!(f, "convergence error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mzatom_core::Error> for CliError {
    fn from(e: mzatom_core::Error) -> Self {
        use mzatom_core::Error::*;
        match e {
            Config(m) | UnknownParameter(m) => CliError::Config(m),
            Domain(m) | UnstableStep(m) => CliError::Runtime(m),
            Convergence(m) | InsufficientData(m) => CliError::Convergence(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn fmt_f(x: f64) -> String {
    format!("{x:.9e}")
}

fn load_config(cli: &Cli) -> CliResult<SimConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            SimConfig::from_toml_str(&text)?
        }
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.simulation.seed = seed;
    }
    if let Some(samples) = cli.samples {
        config.simulation.samples = samples;
    }
    if let Some(model) = cli.model {
        config.simulation.model = match model {
            ModelArg::TwoLevel => DiffractionModel::TwoLevel,
            ModelArg::Ladder => DiffractionModel::Ladder,
        };
    }
    Ok(config)
}

fn write_snapshot(out: &Path, config: &SimConfig) -> CliResult<()> {
    let snapshot = config.snapshot()?;
    fs::write(out.join("config_snapshot.toml"), snapshot.to_toml_string()?)?;
    Ok(())
}

/// Write a fringe scan (expected rates plus simulated counts) in the
/// standard CSV schema.
fn write_scan_csv(
    path: &Path,
    scan: &FringeScan,
    resolved: &ResolvedConfig,
    seed: u64,
) -> CliResult<()> {
    let mut text = String::from("sweep_value,port,expected_rate_hz,counts,bin_s\n");
    for port in &scan.ports {
        let rates = port.expected_rate.clone();
        let bin = scan.bin_duration;
        let duration = bin * rates.len() as f64;
        let record = simulate_counts(
            move |t: f64| {
                let i = ((t / bin) as usize).min(rates.len() - 1);
                rates[i].max(0.0)
            },
            &resolved.detector,
            bin,
            duration,
            seed.wrapping_add(u64::from(port.port)),
        )?;
        for ((value, rate), counts) in scan
            .values
            .iter()
            .zip(&port.expected_rate)
            .zip(&record.counts)
        {
            let _ = writeln!(
                text,
                "{},{},{},{},{}",
                fmt_f(*value),
                port.port,
                fmt_f(*rate),
                counts,
                fmt_f(scan.bin_duration)
            );
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_count_record(path: &Path, record: &CountRecord) -> CliResult<()> {
    let mut text = String::from("t_start_s,bin_s,counts\n");
    for (t, c) in record.start_times.iter().zip(&record.counts) {
        let _ = writeln!(text, "{},{},{}", fmt_f(*t), fmt_f(record.bin_duration), c);
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let config = load_config(cli)?;
    fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Diffract { grating, from_um, to_um, step_um, slit_width_um, bin_s } => {
            cmd_diffract(cli, config, *grating, *from_um, *to_um, *step_um, *slit_width_um, *bin_s)
        }
        Command::Fringes {
            duration_s,
            bin_s,
            no_strays,
            dispersion_rad,
            no_vibration,
            single_velocity,
            ideal_ports,
        } => {
            let mut config = config;
            if let Some(d) = duration_s {
                config.sweep.duration_s = *d;
            }
            if let Some(b) = bin_s {
                config.sweep.bin_s = *b;
            }
            if *no_strays {
                config.simulation.include_strays = false;
            }
            if let Some(s) = dispersion_rad {
                config.simulation.phase_dispersion_rad = *s;
            }
            if *single_velocity {
                config.simulation.single_velocity = true;
            }
            if *ideal_ports {
                config.simulation.ideal_ports = true;
            }
            cmd_fringes(cli, config, *no_vibration)
        }
        Command::Scan { param, from, to, steps, metric, point_samples } => {
            cmd_scan(cli, config, param, *from, *to, *steps, (*metric).into(), *point_samples)
        }
        Command::Optimize { params, metric, budget, point_samples } => {
            cmd_optimize(cli, config, params, (*metric).into(), *budget, *point_samples)
        }
        Command::Report { run_dir } => cmd_report(cli, run_dir),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_diffract(
    cli: &Cli,
    mut config: SimConfig,
    grating: usize,
    from_um: f64,
    to_um: f64,
    step_um: f64,
    slit_width_um: f64,
    bin_s: f64,
) -> CliResult<()> {
    if !(1..=3).contains(&grating) {
        return Err(CliError::Config(format!("grating must be 1-3, got {grating}")));
    }
    if step_um <= 0.0 || to_um <= from_um {
        return Err(CliError::Config("slit scan range is empty".into()));
    }
    for (i, wave) in config.waves.iter_mut().enumerate() {
        wave.active = i + 1 == grating;
    }
    config.geometry.detector_slit_width_um = slit_width_um;
    // resolving the suppressed order −1 needs the full momentum ladder
    if cli.model.is_none() {
        config.simulation.model = DiffractionModel::Ladder;
    }
    write_snapshot(&cli.out, &config)?;
    let resolved = config.resolve()?;

    let n_steps = ((to_um - from_um) / step_um).round() as usize + 1;
    let positions: Vec<f64> = (0..n_steps).map(|i| (from_um + i as f64 * step_um) * 1e-6).collect();
    let scan = diffraction_profile(
        &resolved.interferometer,
        &positions,
        bin_s,
        resolved.samples,
        resolved.seed,
    )?;
    write_scan_csv(&cli.out.join("diffraction.csv"), &scan, &resolved, resolved.seed)?;

    // profile summary: peak positions from windowed centroids, order −1 bound
    let rates = &scan.ports[0].expected_rate;
    let theta1 = resolved.interferometer.reference_theta1();
    let g = &resolved.interferometer.geometry;
    let expected_sep = theta1 * (g.detector_slit_z - g.mirror_z[grating - 1]);
    let half = expected_sep / 2.0;
    let peak0 = windowed_centroid(&positions, rates, -half, half);
    let peak1 = windowed_centroid(&positions, rates, half, expected_sep + half);
    let rate0 = windowed_rate(&positions, rates, -half, half);
    let rate1 = windowed_rate(&positions, rates, half, expected_sep + half);
    let rate_minus1 = windowed_rate(&positions, rates, -expected_sep - half, -half);

    let mut summary = String::new();
    let _ = writeln!(summary, "grating={grating}");
    let _ = writeln!(summary, "n_positions={}", positions.len());
    if let (Some(p0), Some(p1)) = (peak0, peak1) {
        let _ = writeln!(summary, "peak0_um={}", fmt_f(p0 * 1e6));
        let _ = writeln!(summary, "peak1_um={}", fmt_f(p1 * 1e6));
        let _ = writeln!(summary, "peak_separation_um={}", fmt_f((p1 - p0) * 1e6));
    }
    let _ = writeln!(summary, "order0_rate_hz={}", fmt_f(rate0));
    let _ = writeln!(summary, "order1_rate_hz={}", fmt_f(rate1));
    let _ = writeln!(summary, "order_minus1_rate_hz={}", fmt_f(rate_minus1));
    let _ = writeln!(
        summary,
        "order_minus1_fraction={}",
        fmt_f(if rate0 > 0.0 { rate_minus1 / rate0 } else { 0.0 })
    );
    fs::write(cli.out.join("diffract_summary.txt"), summary)?;
    println!(
        "diffraction profile written to {}; peak separation {:.1} µm",
        cli.out.display(),
        peak1.zip(peak0).map(|(a, b)| (a - b) * 1e6).unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_fringes(cli: &Cli, config: SimConfig, no_vibration: bool) -> CliResult<()> {
    write_snapshot(&cli.out, &config)?;
    let resolved = config.resolve()?;
    let sweep = SweepSpec {
        variable: SweepVariable::MirrorX(2),
        values: resolved.sweep.values(),
        bin_duration: resolved.sweep.bin,
    };
    let mut scan = monte_carlo_fringe(&resolved.interferometer, &sweep, resolved.samples, resolved.seed)?;
    if resolved.phase_dispersion > 0.0 {
        scan = apply_phase_jitter(
            &scan,
            resolved.phase_dispersion,
            resolved.seed ^ DISPERSION_SEED_SALT,
        )?;
    }
    if !no_vibration && resolved.vibration.rms > 0.0 {
        scan = apply_vibration_jitter(
            &scan,
            &resolved.vibration,
            resolved.grating_period(),
            resolved.seed ^ VIBRATION_SEED_SALT,
        )?;
    }
    write_scan_csv(&cli.out.join("fringe_scan.csv"), &scan, &resolved, resolved.seed)?;

    // counts at exit 1 drive the fit
    let port1 = scan
        .port(1)
        .ok_or_else(|| CliError::Runtime("missing exit-1 series".into()))?;
    let rates = port1.expected_rate.clone();
    let bin = scan.bin_duration;
    let record = simulate_counts(
        move |t: f64| {
            let i = ((t / bin) as usize).min(rates.len() - 1);
            rates[i].max(0.0)
        },
        &resolved.detector,
        bin,
        bin * scan.values.len() as f64,
        resolved.seed.wrapping_add(1),
    )?;
    write_count_record(&cli.out.join("counts.csv"), &record)?;

    let fit = fit_fringes(
        &record,
        Background::Fixed(resolved.detector.background),
        &FitOptions::default(),
    )?;
    let report = fit_report(&record, &fit, &resolved)?;
    fs::write(cli.out.join("fringe_fit.txt"), report)?;
    println!(
        "fringes written to {}; fitted contrast {:.3} ± {:.3}",
        cli.out.display(),
        fit.contrast,
        fit.uncertainties.contrast
    );
    Ok(())
}

fn fit_report(record: &CountRecord, fit: &FringeFit, resolved: &ResolvedConfig) -> CliResult<String> {
    let mut text = String::new();
    let _ = writeln!(text, "mean_rate_cps={}", fmt_f(fit.mean_rate));
    let _ = writeln!(text, "mean_rate_err_cps={}", fmt_f(fit.uncertainties.mean_rate));
    let _ = writeln!(text, "background_cps={}", fmt_f(fit.background));
    let _ = writeln!(text, "contrast={}", fmt_f(fit.contrast));
    let _ = writeln!(text, "contrast_err={}", fmt_f(fit.uncertainties.contrast));
    let _ = writeln!(text, "phase0_rad={}", fmt_f(fit.phase[0]));
    let _ = writeln!(text, "phase0_err_rad={}", fmt_f(fit.uncertainties.phase[0]));
    let _ = writeln!(text, "phase1_rad_per_s={}", fmt_f(fit.phase[1]));
    let _ = writeln!(text, "phase1_err_rad_per_s={}", fmt_f(fit.uncertainties.phase[1]));
    let _ = writeln!(text, "phase2_rad_per_s2={}", fmt_f(fit.phase[2]));
    let _ = writeln!(text, "phase2_err_rad_per_s2={}", fmt_f(fit.uncertainties.phase[2]));
    let _ = writeln!(text, "chi_square={}", fmt_f(fit.chi_square));
    let _ = writeln!(text, "dof={}", fit.dof);
    // the measured fringe period in mirror displacement
    if fit.phase[1] > 0.0 && resolved.sweep.rate > 0.0 {
        let period = 2.0 * std::f64::consts::PI * resolved.sweep.rate / fit.phase[1];
        let _ = writeln!(text, "fringe_period_nm={}", fmt_f(period * 1e9));
    }
    let _ = writeln!(
        text,
        "figure_of_merit_cps={}",
        fmt_f(mzatom_core::analysis::figure_of_merit(fit.mean_rate, fit.contrast))
    );
    if fit.contrast > 0.0 && fit.mean_rate > 0.0 {
        let limit = shot_noise_limit(fit.mean_rate, fit.background, fit.contrast)?;
        let _ = writeln!(text, "shot_noise_limit_rad_sqrthz={}", fmt_f(limit));
        let measured = measured_sensitivity(record, fit)?;
        let _ = writeln!(text, "measured_sensitivity_rad_sqrthz={}", fmt_f(measured));
        // reference detectability figure: phase resolved in one hour of
        // integration applied over a 100 µs interaction
        let phase_1h = measured / 3600.0f64.sqrt();
        let energy = min_detectable_perturbation(phase_1h, 100.0e-6)?;
        let _ = writeln!(text, "min_detectable_energy_1h_100us_ev={}", fmt_f(energy));
    }
    let sigma_vib = vibration_phase_rms(&resolved.vibration, resolved.grating_period())?;
    let _ = writeln!(text, "vibration_phase_rms_rad={}", fmt_f(sigma_vib));
    let _ = writeln!(text, "dispersion_phase_rms_rad={}", fmt_f(resolved.phase_dispersion));
    Ok(text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    cli: &Cli,
    config: SimConfig,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
    metric: Metric,
    point_samples: usize,
) -> CliResult<()> {
    if steps < 2 || to <= from {
        return Err(CliError::Config("scan grid must have at least 2 ascending steps".into()));
    }
    write_snapshot(&cli.out, &config)?;
    let values: Vec<f64> = (0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect();
    let spec = ScanSpec {
        parameter: param.to_string(),
        values,
        metric,
        samples: point_samples,
        seed: config.simulation.seed,
    };
    let points = scan(&config, &spec)?;
    let mut text = String::from("param_value,metric,metric_err,n_samples\n");
    for p in &points {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fmt_f(p.value),
            fmt_f(p.metric),
            fmt_f(p.error),
            p.n_samples
        );
    }
    fs::write(cli.out.join("scan.csv"), text)?;
    let best = points
        .iter()
        .max_by(|a, b| a.metric.total_cmp(&b.metric))
        .expect("non-empty scan");
    println!(
        "scan of {param} written to {}; best {:.6e} at {:.6e}",
        cli.out.display(),
        best.metric,
        best.value
    );
    Ok(())
}

fn cmd_optimize(
    cli: &Cli,
    config: SimConfig,
    params: &[String],
    metric: Metric,
    budget: usize,
    point_samples: usize,
) -> CliResult<()> {
    if params.is_empty() {
        return Err(CliError::Config("no parameters given".into()));
    }
    write_snapshot(&cli.out, &config)?;
    let result = optimize(&config, params, metric, budget, point_samples, config.simulation.seed)?;

    let mut text = String::from("step,metric\n");
    for (i, m) in result.trace.iter().enumerate() {
        let _ = writeln!(text, "{},{}", i, fmt_f(*m));
    }
    fs::write(cli.out.join("optimize_trace.csv"), text)?;

    let mut optimized = config.snapshot()?;
    for (path, value) in &result.parameters {
        optimized.set_parameter(path, *value)?;
    }
    fs::write(cli.out.join("optimized_config.toml"), optimized.to_toml_string()?)?;

    let mut summary = String::new();
    for (path, value) in &result.parameters {
        let _ = writeln!(summary, "{path}={}", fmt_f(*value));
    }
    let _ = writeln!(summary, "final_metric={}", fmt_f(result.final_metric));
    let _ = writeln!(summary, "evaluations={}", result.evaluations);
    let _ = writeln!(summary, "budget_exhausted={}", result.budget_exhausted);
    fs::write(cli.out.join("optimize_summary.txt"), summary)?;
    println!(
        "optimization written to {}; final metric {:.6e} after {} evaluations",
        cli.out.display(),
        result.final_metric,
        result.evaluations
    );
    Ok(())
}

fn cmd_report(cli: &Cli, run_dir: &Path) -> CliResult<()> {
    let snapshot_path = run_dir.join("config_snapshot.toml");
    let mut missing = Vec::new();
    if !snapshot_path.exists() {
        missing.push("config_snapshot.toml");
    }
    if !missing.is_empty() {
        return Err(CliError::Config(format!(
            "run directory {} is missing: {}",
            run_dir.display(),
            missing.join(", ")
        )));
    }
    let config = SimConfig::from_toml_str(&fs::read_to_string(&snapshot_path)?)?;
    let resolved = config.resolve()?;

    // stray-on, dispersion-free reference contrast from the seeded model
    let mut ideal_cfg = config.clone();
    ideal_cfg.simulation.phase_dispersion_rad = 0.0;
    let ideal_resolved = ideal_cfg.resolve()?;
    let mc = port_observables(&ideal_resolved.interferometer, ideal_resolved.samples, ideal_resolved.seed)?;
    let ideal_contrast = if mc.ports[0].mean > 0.0 {
        (2.0 * mc.ports[0].fundamental.norm() / mc.ports[0].mean).min(1.0)
    } else {
        0.0
    };

    let theta_z = [
        resolved.interferometer.waves[0].theta_z,
        resolved.interferometer.waves[1].theta_z,
        resolved.interferometer.waves[2].theta_z,
    ];
    let washout = delta_k_washout(
        &theta_z,
        resolved.interferometer.geometry.aperture_height,
        resolved.interferometer.waves[0].grating_wavevector,
    )?;
    let dispersion = phase_dispersion_contrast(resolved.phase_dispersion)?;
    let sigma_vib = vibration_phase_rms(&resolved.vibration, resolved.grating_period())?;
    let vibration = phase_dispersion_contrast(sigma_vib)?;
    let predicted = ideal_contrast * washout * dispersion * vibration;

    let mut text = String::new();
    let _ = writeln!(text, "ideal_contrast={}", fmt_f(ideal_contrast));
    let _ = writeln!(text, "washout_factor={}", fmt_f(washout));
    let _ = writeln!(text, "dispersion_factor={}", fmt_f(dispersion));
    let _ = writeln!(text, "vibration_factor={}", fmt_f(vibration));
    let _ = writeln!(text, "predicted_contrast={}", fmt_f(predicted));

    let fit_path = run_dir.join("fringe_fit.txt");
    if fit_path.exists() {
        let fit_text = fs::read_to_string(&fit_path)?;
        for line in fit_text.lines() {
            if let Some(value) = line.strip_prefix("contrast=") {
                let _ = writeln!(text, "measured_contrast={value}");
            }
            if let Some(value) = line.strip_prefix("measured_sensitivity_rad_sqrthz=") {
                let _ = writeln!(text, "measured_sensitivity_rad_sqrthz={value}");
            }
        }
    }
    fs::write(cli.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}
