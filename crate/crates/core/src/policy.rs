//! Sampling rules and grid-based detection of their stopping times.
//!
//! A symmetric threshold policy samples at the first time the innovation
//! `X_t − E[X_t | X_{τ_i}, τ_i]` reaches `±a(t − τ_i)`. On a grid the first
//! grid point with `|innovation| ≥ a` is taken as the stopping time; the
//! excess `|innovation| − a` there is the overshoot.

use std::fmt;
use std::sync::Arc;

use crate::analytics::OuRateFunctions;
use crate::error::{Result, SimError};
use crate::process::{grid_steps, Kernel, MeanTracker, ProcessModel, SamplePath};

/// Grid used to probe an elapsed-time threshold for downward jumps.
const PROBE_POINTS: usize = 10_000;
const JUMP_TOL: f64 = 1e-9;

type ThresholdFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Threshold as a function of the time elapsed since the last sample.
#[derive(Clone)]
pub struct ElapsedThreshold(Arc<ThresholdFn>);

impl ElapsedThreshold {
    #[inline]
    pub fn at(&self, elapsed: f64) -> f64 {
        (self.0)(elapsed)
    }
}

impl fmt::Debug for ElapsedThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ElapsedThreshold(<fn>)")
    }
}

#[derive(Debug, Clone)]
pub enum ThresholdPolicy {
    Constant(f64),
    ElapsedTime(ElapsedThreshold),
    /// Deterministic sampling every `period` seconds (`period = 1/F`).
    Uniform { period: f64 },
}

impl ThresholdPolicy {
    pub fn constant(a: f64) -> Result<Self> {
        if !(a >= 0.0) {
            return Err(SimError::domain(format!("threshold must be non-negative, got {a}")));
        }
        Ok(ThresholdPolicy::Constant(a))
    }

    pub fn uniform(period: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(SimError::domain(format!("period must be positive, got {period}")));
        }
        Ok(ThresholdPolicy::Uniform { period })
    }

    /// Wraps a threshold function of elapsed time after probing it on
    /// `[0, probe_horizon]`.
    ///
    /// Rejects negative or non-finite values and any discontinuous drop.
    /// Whether a drop is right-continuous cannot be told apart at floating
    /// point resolution, so all downward jumps are refused; upward jumps and
    /// continuous decrease are fine.
    pub fn elapsed_time<F>(f: F, probe_horizon: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(probe_horizon > 0.0) || !probe_horizon.is_finite() {
            return Err(SimError::domain("probe horizon must be positive"));
        }
        let h = probe_horizon / PROBE_POINTS as f64;
        for k in 0..=PROBE_POINTS {
            let t = k as f64 * h;
            let v = f(t);
            if !(v >= 0.0) || v.is_infinite() {
                return Err(SimError::domain(format!("threshold a({t}) = {v} is not a finite non-negative value")));
            }
            if k < PROBE_POINTS && v - f(t + h) > JUMP_TOL {
                if let Some(at) = downward_jump(&f, t, t + h) {
                    return Err(SimError::domain(format!(
                        "threshold drops discontinuously near t = {at}"
                    )));
                }
            }
        }
        Ok(ThresholdPolicy::ElapsedTime(ElapsedThreshold(Arc::new(f))))
    }

    /// Threshold after `elapsed` seconds; `None` for the uniform schedule.
    #[inline]
    pub fn threshold_at(&self, elapsed: f64) -> Option<f64> {
        match self {
            ThresholdPolicy::Constant(a) => Some(*a),
            ThresholdPolicy::ElapsedTime(f) => Some(f.at(elapsed)),
            ThresholdPolicy::Uniform { .. } => None,
        }
    }

    pub fn is_threshold(&self) -> bool {
        !matches!(self, ThresholdPolicy::Uniform { .. })
    }

    /// The rate-optimal constant threshold for `model` at `rate` samples
    /// (equivalently bits) per second.
    pub fn optimal_for_rate(model: &ProcessModel, rate: f64) -> Result<Self> {
        let a = match model {
            ProcessModel::WienerFamily(p) => wiener_optimal_threshold(p.scale(), p.time_scale(), rate)?,
            ProcessModel::OrnsteinUhlenbeck(p) => ou_optimal_threshold(p.theta(), p.sigma(), rate)?,
        };
        ThresholdPolicy::constant(a)
    }
}

/// Localizes a drop inside `[lo, hi]` by bisection down to adjacent floats and
/// reports its position if it survives there.
fn downward_jump<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> Option<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(lo) - f(mid) >= f(mid) - f(hi) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if f(lo) - f(lo.next_up()) > JUMP_TOL {
        Some(lo)
    } else {
        None
    }
}

/// Optimal threshold `c·sqrt(a/F)` for `c·W_{a·t} + b·t` at frequency `F`.
pub fn wiener_optimal_threshold(scale: f64, time_scale: f64, frequency: f64) -> Result<f64> {
    if !(frequency > 0.0) {
        return Err(SimError::domain(format!("frequency must be positive, got {frequency}")));
    }
    if !(time_scale > 0.0) {
        return Err(SimError::domain(format!("time scale must be positive, got {time_scale}")));
    }
    Ok(scale.abs() * (time_scale / frequency).sqrt())
}

/// Optimal OU threshold `sqrt(R₁⁻¹(1/R))`.
pub fn ou_optimal_threshold(theta: f64, sigma: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(SimError::domain(format!("rate must be positive, got {rate}")));
    }
    let f = OuRateFunctions::new(theta, sigma)?;
    Ok(f.r1_inverse(1.0 / rate)?.sqrt())
}

/// Stopping times found on a grid. `τ_0 = 0` is implicit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StoppingRecord {
    pub times: Vec<f64>,
    /// Side of the band that was hit. Always `+1` for the uniform schedule.
    pub signs: Vec<i8>,
    /// True path value at each stopping time.
    pub sample_values: Vec<f64>,
    /// Grid index of each stopping time.
    pub indices: Vec<usize>,
    /// `|innovation| − a` at detection; 0 for the uniform schedule.
    pub overshoots: Vec<f64>,
}

impl StoppingRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `τ_{i+1} − τ_i` for consecutive stopping times, starting from `τ_0 = 0`.
    pub fn intervals(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.times
            .iter()
            .map(|&t| {
                let d = t - prev;
                prev = t;
                d
            })
            .collect()
    }
}

/// What the sampler resets its conditional mean to after a stopping time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchoring {
    /// The value the receiver reconstructs from the sign bit, `mean ± a`.
    /// The encoder keeps this replica so both ends track the same estimate.
    Reconstructed,
    /// The exact sample value, as when real-valued samples are transmitted.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub sign: i8,
    pub threshold: f64,
    pub innovation: f64,
    /// `mean + sign·a`: what a sign-bit receiver recovers.
    pub reconstructed: f64,
}

impl Crossing {
    pub fn overshoot(&self) -> f64 {
        self.innovation.abs() - self.threshold
    }
}

#[derive(Debug, Clone)]
enum Rule {
    Constant(f64),
    Elapsed(ElapsedThreshold),
}

/// Streaming symmetric-threshold sampler. Feed it `X_{k·dt}` for
/// `k = 1, 2, …` in order.
#[derive(Debug, Clone)]
pub(crate) struct InnovationSampler {
    rule: Rule,
    tracker: MeanTracker,
    dt: f64,
    anchoring: Anchoring,
}

impl InnovationSampler {
    pub fn new(kernel: &Kernel, policy: &ThresholdPolicy, anchoring: Anchoring) -> Result<Self> {
        let rule = match policy {
            ThresholdPolicy::Constant(a) => Rule::Constant(*a),
            ThresholdPolicy::ElapsedTime(f) => Rule::Elapsed(f.clone()),
            ThresholdPolicy::Uniform { .. } => {
                return Err(SimError::UnsupportedPolicy(
                    "uniform schedule has no innovation threshold".into(),
                ))
            }
        };
        Ok(InnovationSampler { rule, tracker: kernel.tracker(0.0), dt: kernel.dt, anchoring })
    }

    #[inline]
    fn threshold(&self) -> f64 {
        match &self.rule {
            Rule::Constant(a) => *a,
            Rule::Elapsed(f) => f.at(self.tracker.steps() as f64 * self.dt),
        }
    }

    #[inline]
    pub fn observe(&mut self, x: f64) -> Option<Crossing> {
        self.tracker.advance();
        let mean = self.tracker.mean();
        let innovation = x - mean;
        let threshold = self.threshold();
        if innovation.abs() >= threshold {
            let sign: i8 = if innovation >= 0.0 { 1 } else { -1 };
            let reconstructed = mean + f64::from(sign) * threshold;
            let anchor = match self.anchoring {
                Anchoring::Reconstructed => reconstructed,
                Anchoring::Sample => x,
            };
            self.tracker.reset(anchor);
            Some(Crossing { sign, threshold, innovation, reconstructed })
        } else {
            None
        }
    }

    /// Current conditional-mean estimate, valid after the latest `observe`.
    #[inline]
    pub fn estimate(&self) -> f64 {
        self.tracker.mean()
    }
}

/// Grid indices of a uniform schedule with the given period, snapped to the
/// nearest grid point and kept within `(0, steps]`.
pub(crate) fn uniform_indices(period: f64, dt: f64, steps: usize) -> Result<Vec<usize>> {
    if period < dt * (1.0 - 1e-9) {
        return Err(SimError::domain(format!(
            "uniform period {period} is shorter than the grid step {dt}"
        )));
    }
    let mut out = Vec::new();
    for i in 1.. {
        let k = (i as f64 * period / dt).round() as usize;
        if k > steps {
            break;
        }
        out.push(k);
    }
    Ok(out)
}

/// Stopping times of `policy` on `path`, with the sampler anchored on the
/// receiver's reconstruction after each sample (the sign-of-innovation
/// encoder). For the uniform schedule anchoring is irrelevant.
pub fn detect_stopping_times(
    path: &SamplePath,
    model: &ProcessModel,
    policy: &ThresholdPolicy,
) -> Result<StoppingRecord> {
    detect_with(path, model, policy, Anchoring::Reconstructed)
}

/// Same as [`detect_stopping_times`] but anchored on the exact sample value,
/// the rule for transmitting real-valued samples.
pub fn detect_stopping_times_analog(
    path: &SamplePath,
    model: &ProcessModel,
    policy: &ThresholdPolicy,
) -> Result<StoppingRecord> {
    detect_with(path, model, policy, Anchoring::Sample)
}

pub fn detect_with(
    path: &SamplePath,
    model: &ProcessModel,
    policy: &ThresholdPolicy,
    anchoring: Anchoring,
) -> Result<StoppingRecord> {
    if path.values.len() < 2 {
        return Err(SimError::domain("path has no grid steps"));
    }
    let mut rec = StoppingRecord::default();
    let steps = path.values.len() - 1;
    if let ThresholdPolicy::Uniform { period } = policy {
        for k in uniform_indices(*period, path.dt, steps)? {
            rec.push(k, path.time(k), 1, path.values[k], 0.0);
        }
        return Ok(rec);
    }
    let kernel = model.kernel(path.dt)?;
    let mut sampler = InnovationSampler::new(&kernel, policy, anchoring)?;
    for (k, &x) in path.values.iter().enumerate().skip(1) {
        if let Some(c) = sampler.observe(x) {
            rec.push(k, path.time(k), c.sign, x, c.overshoot());
        }
    }
    Ok(rec)
}

impl StoppingRecord {
    fn push(&mut self, index: usize, time: f64, sign: i8, value: f64, overshoot: f64) {
        self.indices.push(index);
        self.times.push(time);
        self.signs.push(sign);
        self.sample_values.push(value);
        self.overshoots.push(overshoot);
    }
}

/// `N / T`.
pub fn empirical_frequency(record: &StoppingRecord, horizon: f64) -> f64 {
    record.len() as f64 / horizon
}

/// Grid steps needed for `horizon` at `dt`, re-exported for callers that
/// build schedules themselves.
pub fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    grid_steps(horizon, dt)
}
