//! Source processes: the linear Wiener family `c·W_{a·t} + b·t` and the
//! Ornstein-Uhlenbeck process `dX = θ(μ − X)dt + σ dW`, both started at
//! `X_0 = 0`.
//!
//! Both families have Gaussian transitions with an affine conditional mean,
//! so paths are drawn from the exact transition kernel rather than an Euler
//! scheme.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WienerParams {
    scale: f64,
    time_scale: f64,
    drift: f64,
}

impl WienerParams {
    /// `c`
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `a`, the time change `W_{a·t}`.
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    /// `b`, the deterministic drift rate.
    pub fn drift(&self) -> f64 {
        self.drift
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    theta: f64,
    mu: f64,
    sigma: f64,
}

impl OuParams {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProcessModel {
    WienerFamily(WienerParams),
    OrnsteinUhlenbeck(OuParams),
}

/// Parameters of `X̃_t = q·X̃_s + R_t(s, τ)` where `X̃` is the process minus
/// its conditional mean given the sample at `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSpec {
    pub q: f64,
    pub r_variance: f64,
}

/// A trajectory on the uniform grid `0, dt, 2·dt, …, horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub dt: f64,
    pub values: Vec<f64>,
    pub horizon: f64,
    pub seed: u64,
}

impl SamplePath {
    /// Wraps externally produced grid values. `values[0]` must be 0.
    pub fn from_values(dt: f64, values: Vec<f64>, seed: u64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SimError::domain(format!("grid step must be positive, got {dt}")));
        }
        if values.len() < 2 {
            return Err(SimError::domain("a path needs at least two grid points"));
        }
        if values[0] != 0.0 {
            return Err(SimError::domain("paths start at X_0 = 0"));
        }
        let horizon = dt * (values.len() - 1) as f64;
        Ok(SamplePath { dt, values, horizon, seed })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Number of grid steps covering `horizon`; the horizon must be a whole
/// multiple of `dt`.
pub fn grid_steps(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SimError::domain(format!("grid step must be positive, got {dt}")));
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(SimError::domain(format!(
            "horizon {horizon} must be finite and at least one grid step {dt}"
        )));
    }
    let steps = (horizon / dt).round();
    if ((steps * dt - horizon) / horizon).abs() > 1e-9 {
        return Err(SimError::domain(format!(
            "horizon {horizon} is not a multiple of dt {dt}"
        )));
    }
    Ok(steps as usize)
}

impl ProcessModel {
    /// `X_t = c·W_{a·t} + b·t`.
    pub fn wiener(scale: f64, time_scale: f64, drift: f64) -> Result<Self> {
        if !(time_scale > 0.0) || !time_scale.is_finite() {
            return Err(SimError::domain(format!("time scale must be positive, got {time_scale}")));
        }
        if !scale.is_finite() || !drift.is_finite() {
            return Err(SimError::domain("wiener parameters must be finite"));
        }
        Ok(ProcessModel::WienerFamily(WienerParams { scale, time_scale, drift }))
    }

    pub fn standard_wiener() -> Self {
        ProcessModel::WienerFamily(WienerParams { scale: 1.0, time_scale: 1.0, drift: 0.0 })
    }

    pub fn ornstein_uhlenbeck(theta: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(SimError::domain(format!("theta must be positive, got {theta}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(SimError::domain(format!("sigma must be positive, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(SimError::domain("mu must be finite"));
        }
        Ok(ProcessModel::OrnsteinUhlenbeck(OuParams { theta, mu, sigma }))
    }

    /// True when the innovation law is symmetric about zero and the
    /// unconditional mean stays at zero (no drift, no off-origin level).
    pub fn is_driftless(&self) -> bool {
        match self {
            ProcessModel::WienerFamily(p) => p.drift == 0.0,
            ProcessModel::OrnsteinUhlenbeck(p) => p.mu == 0.0,
        }
    }

    /// `E[X_t | X_τ = x]`.
    pub fn conditional_mean(&self, x_at_tau: f64, tau: f64, t: f64) -> Result<f64> {
        if !(t >= tau) || tau < 0.0 {
            return Err(SimError::domain(format!("need t >= tau >= 0, got tau={tau}, t={t}")));
        }
        Ok(match self {
            ProcessModel::WienerFamily(p) => x_at_tau + p.drift * (t - tau),
            ProcessModel::OrnsteinUhlenbeck(p) => {
                p.mu + (x_at_tau - p.mu) * (-p.theta * (t - tau)).exp()
            }
        })
    }

    /// Draws `X_{t+dt}` given `X_t = x` from the exact transition kernel.
    pub fn exact_step(&self, x: f64, dt: f64, gaussian_draw: f64) -> Result<f64> {
        Ok(self.kernel(dt)?.step(x, gaussian_draw))
    }

    pub fn residual_spec(&self, s: f64, t: f64, tau: f64) -> Result<ResidualSpec> {
        if !(tau <= s && s <= t) {
            return Err(SimError::domain(format!(
                "need tau <= s <= t, got tau={tau}, s={s}, t={t}"
            )));
        }
        let lag = t - s;
        Ok(match self {
            ProcessModel::WienerFamily(p) => ResidualSpec {
                q: 1.0,
                r_variance: p.scale * p.scale * p.time_scale * lag,
            },
            ProcessModel::OrnsteinUhlenbeck(p) => ResidualSpec {
                q: (-p.theta * lag).exp(),
                r_variance: p.sigma * p.sigma * -(-2.0 * p.theta * lag).exp_m1() / (2.0 * p.theta),
            },
        })
    }

    /// Exact path on `[0, horizon]` drawn from substream 0 of `seed`.
    pub fn simulate_path(&self, horizon: f64, dt: f64, seed: u64) -> Result<SamplePath> {
        let steps = grid_steps(horizon, dt)?;
        let kernel = self.kernel(dt)?;
        let mut rng = trial_rng(seed, 0);
        let mut values = Vec::with_capacity(steps + 1);
        let mut x = 0.0;
        values.push(x);
        for _ in 0..steps {
            x = kernel.step(x, rng.sample(StandardNormal));
            values.push(x);
        }
        Ok(SamplePath { dt, values, horizon: dt * steps as f64, seed })
    }

    /// One-step transition on a fixed grid.
    pub fn kernel(&self, dt: f64) -> Result<Kernel> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SimError::domain(format!("grid step must be positive, got {dt}")));
        }
        Ok(match self {
            ProcessModel::WienerFamily(p) => Kernel {
                dt,
                level: 0.0,
                decay: 1.0,
                drift_step: p.drift * dt,
                noise_sd: p.scale * (p.time_scale * dt).sqrt(),
            },
            ProcessModel::OrnsteinUhlenbeck(p) => {
                let decay = (-p.theta * dt).exp();
                let var = p.sigma * p.sigma * -(-2.0 * p.theta * dt).exp_m1() / (2.0 * p.theta);
                Kernel { dt, level: p.mu, decay, drift_step: 0.0, noise_sd: var.sqrt() }
            }
        })
    }
}

/// Affine Gaussian transition `x ↦ level + (x − level)·decay + drift_step + noise_sd·ξ`.
///
/// The Wiener family uses `level = 0, decay = 1`; the OU process uses
/// `drift_step = 0`. Either way the arithmetic reduces bit-exactly to the
/// family's own formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub dt: f64,
    level: f64,
    decay: f64,
    drift_step: f64,
    noise_sd: f64,
}

impl Kernel {
    #[inline]
    pub fn step(&self, x: f64, gaussian_draw: f64) -> f64 {
        self.level + (x - self.level) * self.decay + self.drift_step + self.noise_sd * gaussian_draw
    }

    #[inline]
    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    #[inline]
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub(crate) fn tracker(&self, anchor: f64) -> MeanTracker {
        MeanTracker {
            level: self.level,
            decay: self.decay,
            drift_step: self.drift_step,
            anchor,
            steps: 0,
            factor: 1.0,
        }
    }
}

/// Conditional mean `E[X_{τ+m·dt} | X_τ = anchor]` advanced one grid step at a
/// time. The encoder's replica and the decoder both use this, so their
/// estimates agree bit for bit.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MeanTracker {
    level: f64,
    decay: f64,
    drift_step: f64,
    anchor: f64,
    steps: u64,
    factor: f64,
}

impl MeanTracker {
    #[inline]
    pub fn mean(&self) -> f64 {
        self.level + (self.anchor - self.level) * self.factor + self.drift_step * self.steps as f64
    }

    #[inline]
    pub fn advance(&mut self) {
        self.steps += 1;
        self.factor *= self.decay;
    }

    #[inline]
    pub fn reset(&mut self, anchor: f64) {
        self.anchor = anchor;
        self.steps = 0;
        self.factor = 1.0;
    }

    /// Grid steps since the last reset.
    #[inline]
    pub fn steps(&self) -> u64 {
        self.steps
    }
}
