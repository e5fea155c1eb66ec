use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::analytics::OuRateFunctions;
use crate::error::{Result, SimError};
use crate::exec::Execution;
use crate::policy::StoppingRecord;
use crate::process::{ProcessModel, SamplePath};
use crate::rng::trial_rng;
use crate::soi::EstimatePath;
use crate::stats::{ks_two_sample, lag1_autocorrelation};

/// Long-run reward per unit time of a renewal-reward sequence,
/// `Σ rewards / Σ intervals`.
pub fn renewal_ratio(intervals: &[f64], rewards: &[f64]) -> Result<f64> {
    if intervals.is_empty() || intervals.len() != rewards.len() {
        return Err(SimError::domain(format!(
            "need equal, non-empty interval and reward sequences, got {} and {}",
            intervals.len(),
            rewards.len()
        )));
    }
    let total: f64 = intervals.iter().sum();
    if !(total > 0.0) {
        return Err(SimError::domain("total interval length must be positive"));
    }
    Ok(rewards.iter().sum::<f64>() / total)
}

/// Lengths and integrated squared errors of the complete inter-sample
/// cycles `[τ_i, τ_{i+1})`. The truncated cycle after the last sample is
/// dropped.
pub fn interval_rewards(
    path: &SamplePath,
    estimate: &EstimatePath,
    record: &StoppingRecord,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if path.values.len() != estimate.values.len() {
        return Err(SimError::Alignment("path and estimate lengths differ".into()));
    }
    let mut intervals = Vec::with_capacity(record.len());
    let mut rewards = Vec::with_capacity(record.len());
    let mut start = 0usize;
    for &end in &record.indices {
        let reward: f64 = (start..end)
            .map(|k| (path.values[k] - estimate.values[k]).powi(2) * path.dt)
            .sum();
        intervals.push((end - start) as f64 * path.dt);
        rewards.push(reward);
        start = end;
    }
    Ok((intervals, rewards))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IidDiagnostic {
    /// Two-sample KS p-value, first half of the intervals against the second.
    pub ks_p: f64,
    pub lag1: f64,
    /// The intervals had zero variance; `lag1` is reported as 0.
    pub lag1_degenerate: bool,
}

pub fn iid_interval_diagnostic(intervals: &[f64]) -> Result<IidDiagnostic> {
    if intervals.len() < 20 {
        return Err(SimError::domain(format!("need at least 20 intervals, got {}", intervals.len())));
    }
    let (first, second) = intervals.split_at(intervals.len() / 2);
    let ks = ks_two_sample(first, second)?;
    let (lag1, lag1_degenerate) = match lag1_autocorrelation(intervals) {
        Some(r) => (r, false),
        None => (0.0, true),
    };
    Ok(IidDiagnostic { ks_p: ks.p_value, lag1, lag1_degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynkinConfig {
    pub model: ProcessModel,
    pub threshold: f64,
    pub episodes: usize,
    pub dt: f64,
    pub seed: u64,
    /// Episodes still inside the band after this long are dropped.
    pub max_episode_time: f64,
}

impl DynkinConfig {
    pub fn new(model: ProcessModel, threshold: f64, episodes: usize, dt: f64, seed: u64) -> Self {
        DynkinConfig { model, threshold, episodes, dt, seed, max_episode_time: 1e4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynkinReport {
    pub rel_err_time: f64,
    pub rel_err_area: f64,
    pub episodes: usize,
    pub mean_exit_time: f64,
    pub mean_r1: f64,
    pub mean_area: f64,
    pub mean_r2: f64,
}

struct Episode {
    time: f64,
    area: f64,
    exit_value: f64,
}

/// Checks `E[T] = E[R₁(O_T²)]` and `E[∫₀ᵀ O² dt] = E[R₂(O_T²)]` on simulated
/// exits of the OU innovation `dO = −θO dt + σ dW`, `O_0 = 0`, from
/// `(−threshold, threshold)`.
pub fn dynkin_check(cfg: &DynkinConfig) -> Result<DynkinReport> {
    dynkin_check_with(cfg, Execution::default())
}

pub fn dynkin_check_with(cfg: &DynkinConfig, exec: Execution) -> Result<DynkinReport> {
    let rates = OuRateFunctions::from_model(&cfg.model)
        .map_err(|_| SimError::domain("Dynkin identities are checked on the OU process only"))?;
    if !(cfg.threshold > 0.0) {
        return Err(SimError::domain(format!("threshold must be positive, got {}", cfg.threshold)));
    }
    if cfg.episodes == 0 {
        return Err(SimError::domain("need at least one episode"));
    }
    // Innovation of an OU process is a zero-level OU process with the same θ, σ.
    let innovation = match cfg.model {
        ProcessModel::OrnsteinUhlenbeck(p) => ProcessModel::ornstein_uhlenbeck(p.theta(), 0.0, p.sigma())?,
        _ => unreachable!(),
    };
    let kernel = innovation.kernel(cfg.dt)?;
    let max_steps = (cfg.max_episode_time / cfg.dt).ceil() as u64;
    let a = cfg.threshold;

    let episodes: Vec<Option<Episode>> = exec.map(cfg.episodes, |i| {
        let mut rng = trial_rng(cfg.seed, i as u64);
        let mut o = 0.0f64;
        let mut sum_sq = 0.0;
        let mut steps = 0u64;
        while steps < max_steps {
            sum_sq += o * o;
            o = kernel.step(o, rng.sample(StandardNormal));
            steps += 1;
            if o.abs() >= a {
                return Some(Episode { time: steps as f64 * cfg.dt, area: sum_sq * cfg.dt, exit_value: o });
            }
        }
        None
    });
    let done: Vec<Episode> = episodes.into_iter().flatten().collect();
    if done.len() < cfg.episodes.div_ceil(2) || done.is_empty() {
        return Err(SimError::InsufficientEpisodes { completed: done.len(), requested: cfg.episodes });
    }

    let n = done.len() as f64;
    let mut sums = [0.0f64; 4];
    for e in &done {
        let v = e.exit_value * e.exit_value;
        sums[0] += e.time;
        sums[1] += rates.r1(v)?;
        sums[2] += e.area;
        sums[3] += rates.r2(v)?;
    }
    let [mean_exit_time, mean_r1, mean_area, mean_r2] = sums.map(|s| s / n);
    Ok(DynkinReport {
        rel_err_time: (mean_exit_time - mean_r1).abs() / mean_exit_time,
        rel_err_area: (mean_area - mean_r2).abs() / mean_area,
        episodes: done.len(),
        mean_exit_time,
        mean_r1,
        mean_area,
        mean_r2,
    })
}
