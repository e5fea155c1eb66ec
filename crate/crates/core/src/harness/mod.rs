//! Monte Carlo experiments over independent seeded trials.
//!
//! Each trial streams one path through the sampler and receiver without
//! storing it, so long horizons at fine grids cost O(1) memory per trial.
//! Trials are reduced in index order, so a report is bit-identical whether
//! trials ran on one thread or many.

mod config_file;
mod diagnostics;

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::analytics::{optimal_distortion, wiener_uniform_distortion};
use crate::error::{Result, SimError};
use crate::exec::Execution;
use crate::policy::{uniform_indices, Anchoring, InnovationSampler, ThresholdPolicy};
use crate::process::{grid_steps, ProcessModel};
use crate::rng::trial_rng;
use crate::soi::time_average;
use crate::stats::{mean_ci, Estimate};

pub use config_file::parse_config;
pub use diagnostics::{
    dynkin_check_with,
    dynkin_check, iid_interval_diagnostic, interval_rewards, renewal_ratio, DynkinConfig, DynkinReport,
    IidDiagnostic,
};

/// Largest `horizon/dt` a config may ask for.
pub const MAX_GRID_STEPS: f64 = 1e9;
/// Per-trial cap on retained inter-sample intervals.
const MAX_INTERVALS_PER_TRIAL: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One sign bit per sample, receiver reconstructs `mean ± a`.
    Estimation,
    /// Exact real-valued samples.
    AnalogEstimation,
    /// Closed loop `Y = X + Z` with `Z = −X̂`; reports the cost on `Y`.
    Control,
}

#[derive(Debug, Clone)]
pub enum PolicyChoice {
    Fixed(ThresholdPolicy),
    /// Resolve to the model's optimal threshold for `rate_target`.
    OptimalForRate,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ProcessModel,
    pub policy: PolicyChoice,
    pub rate_target: f64,
    pub horizon: f64,
    pub dt: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub mode: Mode,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(SimError::Config(m));
        if !(self.rate_target > 0.0) || !self.rate_target.is_finite() {
            return cfg(format!("rate must be positive, got {}", self.rate_target));
        }
        if self.trials == 0 {
            return cfg("trials must be at least 1".into());
        }
        if !(self.dt > 0.0) || !(self.horizon >= self.dt) {
            return cfg(format!("need horizon >= dt > 0, got horizon={}, dt={}", self.horizon, self.dt));
        }
        if self.horizon / self.dt > MAX_GRID_STEPS {
            return cfg(format!("horizon/dt exceeds {MAX_GRID_STEPS:e}"));
        }
        grid_steps(self.horizon, self.dt).map_err(|e| SimError::Config(e.to_string()))?;
        if let PolicyChoice::Fixed(ThresholdPolicy::Uniform { .. }) = self.policy {
            if self.mode != Mode::AnalogEstimation {
                return cfg("a uniform schedule carries real-valued samples; use mode = analog".into());
            }
        }
        Ok(())
    }

    pub fn resolve_policy(&self) -> Result<ThresholdPolicy> {
        match &self.policy {
            PolicyChoice::Fixed(p) => Ok(p.clone()),
            PolicyChoice::OptimalForRate => ThresholdPolicy::optimal_for_rate(&self.model, self.rate_target),
        }
    }

    /// Analytic distortion for the configured policy, where one is known.
    pub fn analytic_reference(&self) -> Result<Option<f64>> {
        match (&self.policy, &self.model) {
            (PolicyChoice::OptimalForRate, m) => optimal_distortion(m, self.rate_target).map(Some),
            (PolicyChoice::Fixed(ThresholdPolicy::Uniform { period }), ProcessModel::WienerFamily(p))
                if p.drift() == 0.0 =>
            {
                wiener_uniform_distortion(1.0 / period, p.scale(), p.time_scale()).map(Some)
            }
            _ => Ok(None),
        }
    }
}

/// What one trial contributes to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub samples: usize,
    pub rate: f64,
    /// Time-averaged squared error (or squared plant output in control mode).
    pub mse: f64,
    /// Same, over the first half of the horizon.
    pub mse_first_half: f64,
    /// Time-averaged signed error `X − X̂`.
    pub mean_error: f64,
    pub overshoot_sum: f64,
    pub overshoot_max: f64,
    pub positive_signs: usize,
    pub intervals: Vec<f64>,
}

enum Sampler {
    Threshold(InnovationSampler),
    Uniform { indices: Vec<usize>, next: usize, tracker: crate::process::MeanTracker },
}

/// Runs trial `trial_index` of `config` with an already resolved policy.
pub fn run_trial(config: &ExperimentConfig, policy: &ThresholdPolicy, trial_index: u64) -> Result<TrialOutcome> {
    let steps = grid_steps(config.horizon, config.dt)?;
    let dt = config.dt;
    let horizon = dt * steps as f64;
    let kernel = config.model.kernel(dt)?;
    let mut sampler = match policy {
        ThresholdPolicy::Uniform { period } => Sampler::Uniform {
            indices: uniform_indices(*period, dt, steps)?,
            next: 0,
            tracker: kernel.tracker(0.0),
        },
        p => {
            let anchoring = match config.mode {
                Mode::AnalogEstimation => Anchoring::Sample,
                Mode::Estimation | Mode::Control => Anchoring::Reconstructed,
            };
            Sampler::Threshold(InnovationSampler::new(&kernel, p, anchoring)?)
        }
    };
    let control = config.mode == Mode::Control;
    let half = steps / 2;

    let mut rng = trial_rng(config.master_seed, trial_index);
    let mut out = TrialOutcome {
        samples: 0,
        rate: 0.0,
        mse: 0.0,
        mse_first_half: 0.0,
        mean_error: 0.0,
        overshoot_sum: 0.0,
        overshoot_max: 0.0,
        positive_signs: 0,
        intervals: Vec::new(),
    };
    let mut x = 0.0;
    let mut estimate = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_err = 0.0;
    let mut sum_sq_half = 0.0;
    let mut last_event = 0usize;

    for k in 0..steps {
        if k == half {
            sum_sq_half = sum_sq;
        }
        let err = if control {
            // Y = X + Z with Z = −X̂
            x + -estimate
        } else {
            x - estimate
        };
        sum_sq += err * err;
        sum_err += err;

        let z = -estimate;
        x = kernel.step(x, rng.sample(StandardNormal));
        let k1 = k + 1;
        match &mut sampler {
            Sampler::Threshold(s) => {
                let seen = if control { (x + z) - z } else { x };
                if let Some(c) = s.observe(seen) {
                    out.samples += 1;
                    let o = c.overshoot();
                    out.overshoot_sum += o;
                    out.overshoot_max = out.overshoot_max.max(o);
                    if c.sign > 0 {
                        out.positive_signs += 1;
                    }
                    if out.intervals.len() < MAX_INTERVALS_PER_TRIAL {
                        out.intervals.push((k1 - last_event) as f64 * dt);
                    }
                    last_event = k1;
                }
                estimate = s.estimate();
            }
            Sampler::Uniform { indices, next, tracker } => {
                tracker.advance();
                if indices.get(*next) == Some(&k1) {
                    tracker.reset(x);
                    *next += 1;
                    out.samples += 1;
                    if out.intervals.len() < MAX_INTERVALS_PER_TRIAL {
                        out.intervals.push((k1 - last_event) as f64 * dt);
                    }
                    last_event = k1;
                }
                estimate = tracker.mean();
            }
        }
    }
    out.rate = out.samples as f64 / horizon;
    out.mse = time_average(sum_sq, dt, horizon);
    out.mse_first_half = if half > 0 { time_average(sum_sq_half, dt, dt * half as f64) } else { out.mse };
    out.mean_error = time_average(sum_err, dt, horizon);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub trials: usize,
    pub mode: Mode,
    pub rate_target: f64,
    pub horizon: f64,
    pub dt: f64,
    pub master_seed: u64,
    /// Threshold actually used, when the policy is a constant threshold.
    pub threshold: Option<f64>,
    pub empirical_rate: Estimate,
    pub empirical_mse: Estimate,
    pub analytic_reference: Option<f64>,
    /// Set when a single trial makes the half-widths meaningless.
    pub degenerate_ci: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

pub fn run_trials(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_trials_with(config, Execution::default())
}

pub fn run_trials_with(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    config.validate()?;
    let policy = config.resolve_policy()?;
    let outcomes = exec
        .map(config.trials, |i| run_trial(config, &policy, i as u64))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    summarize(config, &policy, &outcomes)
}

fn summarize(config: &ExperimentConfig, policy: &ThresholdPolicy, outcomes: &[TrialOutcome]) -> Result<ExperimentReport> {
    let pick = |f: fn(&TrialOutcome) -> f64| outcomes.iter().map(f).collect::<Vec<_>>();
    let empirical_rate = mean_ci(&pick(|o| o.rate));
    let empirical_mse = mean_ci(&pick(|o| o.mse));
    let half_mse = mean_ci(&pick(|o| o.mse_first_half));
    let mean_error = mean_ci(&pick(|o| o.mean_error));

    let samples: usize = outcomes.iter().map(|o| o.samples).sum();
    let mut diag = BTreeMap::new();
    diag.insert("samples_total".to_string(), samples as f64);
    diag.insert("mean_error".to_string(), mean_error.value);
    diag.insert("mean_error_half_width".to_string(), mean_error.half_width);
    let drift = (empirical_mse.value - half_mse.value).abs();
    diag.insert("horizon_sensitivity".to_string(), drift);
    diag.insert("horizon_stable".to_string(), f64::from(u8::from(drift < 2.0 * empirical_mse.half_width)));
    if policy.is_threshold() && samples > 0 {
        let over: f64 = outcomes.iter().map(|o| o.overshoot_sum).sum();
        diag.insert("overshoot_mean".to_string(), over / samples as f64);
        diag.insert(
            "overshoot_max".to_string(),
            outcomes.iter().map(|o| o.overshoot_max).fold(0.0, f64::max),
        );
        let plus: usize = outcomes.iter().map(|o| o.positive_signs).sum();
        diag.insert("positive_sign_fraction".to_string(), plus as f64 / samples as f64);
    }
    let intervals: Vec<f64> = outcomes.iter().flat_map(|o| o.intervals.iter().copied()).collect();
    if let Ok(iid) = iid_interval_diagnostic(&intervals) {
        diag.insert("ks_p".to_string(), iid.ks_p);
        diag.insert("lag1_autocorrelation".to_string(), iid.lag1);
        if iid.lag1_degenerate {
            diag.insert("lag1_degenerate".to_string(), 1.0);
        }
    }

    Ok(ExperimentReport {
        trials: outcomes.len(),
        mode: config.mode,
        rate_target: config.rate_target,
        horizon: config.horizon,
        dt: config.dt,
        master_seed: config.master_seed,
        threshold: match policy {
            ThresholdPolicy::Constant(a) => Some(*a),
            _ => None,
        },
        empirical_rate,
        empirical_mse,
        analytic_reference: config.analytic_reference()?,
        degenerate_ci: outcomes.len() < 2,
        diagnostics: diag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub rate: f64,
    pub analytic_d: f64,
    pub empirical_d: f64,
    pub ci_half: f64,
    pub overshoot_mean: f64,
}

/// One optimal-threshold experiment per rate, `base` supplying everything
/// except the rate and policy.
pub fn drf_sweep(base: &ExperimentConfig, rates: &[f64]) -> Result<Vec<SweepRow>> {
    drf_sweep_with(base, rates, Execution::default())
}

pub fn drf_sweep_with(base: &ExperimentConfig, rates: &[f64], exec: Execution) -> Result<Vec<SweepRow>> {
    if rates.is_empty() {
        return Err(SimError::Config("no rates given".into()));
    }
    if rates.iter().any(|&r| !(r > 0.0)) || rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::Config("rates must be positive and strictly increasing".into()));
    }
    rates
        .iter()
        .map(|&rate| {
            let cfg = ExperimentConfig { rate_target: rate, policy: PolicyChoice::OptimalForRate, ..base.clone() };
            let report = run_trials_with(&cfg, exec)?;
            Ok(SweepRow {
                rate,
                analytic_d: report.analytic_reference.unwrap_or(f64::NAN),
                empirical_d: report.empirical_mse.value,
                ci_half: report.empirical_mse.half_width,
                overshoot_mean: report.diagnostics.get("overshoot_mean").copied().unwrap_or(0.0),
            })
        })
        .collect()
}

/// CSV with columns `rate,analytic_d,empirical_d,ci_half,overshoot_mean`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "rate,analytic_d,empirical_d,ci_half,overshoot_mean")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.rate, r.analytic_d, r.empirical_d, r.ci_half, r.overshoot_mean)?;
    }
    Ok(())
}
