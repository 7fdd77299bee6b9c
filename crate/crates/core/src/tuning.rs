//! Parameter scans and derivative-free optimization of alignment and pulse
//! powers against the simulated fringe metrics.
//!
//! Every metric evaluation reruns the Monte Carlo with the same seed
//! (common random numbers), which turns the noisy objective into a smooth
//! quasi-deterministic one. Optimization is coordinate descent with
//! golden-section line searches; only improving steps are accepted, so the
//! metric trace is non-decreasing and the result never falls below the
//! starting point.

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::interferometer::{port_observables, PortObservables};

const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_9;

/// Objective extracted from the port-1 Monte Carlo observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Fringe contrast 2|h₁|/mean of exit 1.
    Contrast,
    /// Figure of merit I·C² of exit 1, counts/s.
    FigureOfMerit,
    /// Expected exit-1 rate at the current mirror positions, counts/s.
    PortRate,
}

impl Metric {
    fn evaluate(&self, obs: &PortObservables) -> f64 {
        let mean = obs.mean;
        match self {
            Metric::Contrast => {
                if mean <= 0.0 {
                    0.0
                } else {
                    (2.0 * obs.fundamental.norm() / mean).min(1.0)
                }
            }
            Metric::FigureOfMerit => {
                if mean <= 0.0 {
                    0.0
                } else {
                    let c = (2.0 * obs.fundamental.norm() / mean).min(1.0);
                    mean * c * c
                }
            }
            Metric::PortRate => mean + 2.0 * obs.fundamental.re,
        }
    }
}

/// One scan request over a named configuration parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    /// Parameter path understood by [`SimConfig::set_parameter`].
    pub parameter: String,
    /// Grid of parameter values, ascending.
    pub values: Vec<f64>,
    pub metric: Metric,
    /// Atoms per grid point.
    pub samples: usize,
    pub seed: u64,
}

/// One evaluated scan point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub value: f64,
    pub metric: f64,
    /// Standard error over Monte Carlo batches.
    pub error: f64,
    pub n_samples: usize,
}

/// Result of a derivative-free optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Optimized parameter values, in the order requested.
    pub parameters: Vec<(String, f64)>,
    /// Metric after the start and after every accepted improvement.
    pub trace: Vec<f64>,
    pub final_metric: f64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

fn evaluate(config: &SimConfig, metric: Metric, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let resolved = config.resolve()?;
    let mc = port_observables(&resolved.interferometer, samples, seed)?;
    let value = metric.evaluate(&mc.ports[0]);
    let batch_values: Vec<f64> = mc.batches.iter().map(|b| metric.evaluate(&b[0])).collect();
    let error = if batch_values.len() > 1 {
        let n = batch_values.len() as f64;
        let mean = batch_values.iter().sum::<f64>() / n;
        let var = batch_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok((value, error))
}

/// Evaluate the metric over a parameter grid with a fixed seed per point.
pub fn scan(config: &SimConfig, spec: &ScanSpec) -> Result<Vec<ScanPoint>> {
    if spec.values.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    if spec.values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("scan grid must be strictly ascending".into()));
    }
    let base = config.snapshot()?;
    // reject unknown paths before spending any Monte Carlo time
    base.parameter(&spec.parameter)?;
    let mut points = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let mut cfg = base.clone();
        cfg.set_parameter(&spec.parameter, value)?;
        let (metric, error) = evaluate(&cfg, spec.metric, spec.samples, spec.seed)?;
        points.push(ScanPoint { value, metric, error, n_samples: spec.samples });
    }
    Ok(points)
}

/// Default search interval for a parameter path.
fn default_bounds(config: &SimConfig, path: &str) -> Result<(f64, f64)> {
    let current = config.parameter(path)?;
    let bounds = if path.ends_with("power_mw") {
        (1.0, 250.0)
    } else if path.ends_with("theta_y_urad") {
        (current - 250.0, current + 250.0)
    } else if path.ends_with("theta_z_urad") {
        (-150.0, 150.0)
    } else if path.ends_with("mirror_x_nm") {
        (current - 200.0, current + 200.0)
    } else if path.ends_with("slit_center_um") {
        (current - 100.0, current + 100.0)
    } else {
        let span = current.abs().max(1.0);
        (current - 0.5 * span, current + 0.5 * span)
    };
    Ok(bounds)
}

struct Budget {
    used: usize,
    limit: usize,
}

impl Budget {
    fn take(&mut self) -> bool {
        if self.used < self.limit {
            self.used += 1;
            true
        } else {
            false
        }
    }
}

/// Coordinate-descent optimization of `parameters` against `metric`, with
/// golden-section line searches on the fixed-seed objective. Returns the
/// best configuration seen; stops early when the evaluation budget runs out.
pub fn optimize(
    config: &SimConfig,
    parameters: &[String],
    metric: Metric,
    budget: usize,
    samples: usize,
    seed: u64,
) -> Result<OptimizationResult> {
    if parameters.is_empty() {
        return Err(Error::Config("no parameters to optimize".into()));
    }
    if budget < 10 * parameters.len() {
        return Err(Error::Config(format!(
            "budget {budget} too small: need at least 10 evaluations per parameter"
        )));
    }
    let mut best = config.snapshot()?;
    for p in parameters {
        best.parameter(p)?;
    }

    let mut budget = Budget { used: 0, limit: budget };
    budget.take();
    let (mut best_metric, _) = evaluate(&best, metric, samples, seed)?;
    let mut trace = vec![best_metric];
    let mut exhausted = false;

    let bounds: Vec<(f64, f64)> = parameters
        .iter()
        .map(|p| default_bounds(&best, p))
        .collect::<Result<_>>()?;

    'sweeps: for _ in 0..8 {
        let mut improved_any = false;
        for (param, &(lo, hi)) in parameters.iter().zip(&bounds) {
            let tolerance = 0.01 * (hi - lo);
            let eval_at = |x: f64, budget: &mut Budget| -> Result<Option<f64>> {
                if !budget.take() {
                    return Ok(None);
                }
                let mut cfg = best.clone();
                cfg.set_parameter(param, x)?;
                Ok(Some(evaluate(&cfg, metric, samples, seed)?.0))
            };

            // golden-section maximization on [lo, hi]
            let mut a = lo;
            let mut b = hi;
            let mut x1 = b - GOLDEN_RATIO * (b - a);
            let mut x2 = a + GOLDEN_RATIO * (b - a);
            let Some(mut f1) = eval_at(x1, &mut budget)? else {
                exhausted = true;
                break 'sweeps;
            };
            let Some(mut f2) = eval_at(x2, &mut budget)? else {
                exhausted = true;
                break 'sweeps;
            };
            while (b - a).abs() > tolerance {
                if f1 < f2 {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + GOLDEN_RATIO * (b - a);
                    match eval_at(x2, &mut budget)? {
                        Some(f) => f2 = f,
                        None => {
                            exhausted = true;
                            break;
                        }
                    }
                } else {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - GOLDEN_RATIO * (b - a);
                    match eval_at(x1, &mut budget)? {
                        Some(f) => f1 = f,
                        None => {
                            exhausted = true;
                            break;
                        }
                    }
                }
            }
            let (x_best, f_best) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
            if f_best > best_metric {
                best.set_parameter(param, x_best)?;
                best_metric = f_best;
                trace.push(best_metric);
                improved_any = true;
            }
            if exhausted {
                break 'sweeps;
            }
        }
        if !improved_any {
            break;
        }
    }

    let parameters = parameters
        .iter()
        .map(|p| Ok((p.clone(), best.parameter(p)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimizationResult {
        parameters,
        trace,
        final_metric: best_metric,
        evaluations: budget.used,
        budget_exhausted: exhausted,
    })
}
