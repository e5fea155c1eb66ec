//! Rate-constrained control of `Y_t = X_t + Z_t`.
//!
//! The controller applies `Z_t = −X̂_t`, the receiver's estimate of the
//! disturbance. The encoder watches `Y`, subtracts the `Z` it knows the
//! controller applied (it runs the same receiver), and sends sign bits on the
//! innovation of `X`. With this controller the mean-square cost on `Y` is the
//! estimation MSE.

use std::io::Write;

use crate::error::{Result, SimError};
use crate::policy::{Anchoring, InnovationSampler, ThresholdPolicy};
use crate::process::ProcessModel;
use crate::soi::time_average;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlTrajectory {
    pub dt: f64,
    pub horizon: f64,
    /// Disturbance, kept for verification and export.
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    /// Right-continuous control signal.
    pub z_values: Vec<f64>,
    pub event_times: Vec<f64>,
    pub event_indices: Vec<usize>,
    /// Disturbance values the receiver recovered at each event.
    pub recovered_samples: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impulse {
    pub time: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseDecomposition {
    pub impulses: Vec<Impulse>,
    /// Discrete left derivative of `Z`; zero at index 0 and at impulse
    /// points, where the impulse carries the whole step.
    pub derivative_values: Vec<f64>,
}

/// Simulates the closed loop on the disturbance path drawn from `seed`.
pub fn run_control(
    model: &ProcessModel,
    policy: &ThresholdPolicy,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<ControlTrajectory> {
    if !policy.is_threshold() {
        return Err(SimError::UnsupportedPolicy("control loop needs a threshold policy".into()));
    }
    let path = model.simulate_path(horizon, dt, seed)?;
    let kernel = model.kernel(dt)?;
    let mut replica = InnovationSampler::new(&kernel, policy, Anchoring::Reconstructed)?;

    let n = path.values.len();
    let mut traj = ControlTrajectory {
        dt,
        horizon: path.horizon,
        x_values: path.values,
        y_values: Vec::with_capacity(n),
        z_values: Vec::with_capacity(n),
        event_times: Vec::new(),
        event_indices: Vec::new(),
        recovered_samples: Vec::new(),
    };
    let mut z = 0.0;
    traj.z_values.push(z);
    traj.y_values.push(traj.x_values[0] + z);
    for k in 1..n {
        // Plant output just before any impulse at k.
        let y_before = traj.x_values[k] + z;
        let x_seen = y_before - z;
        if let Some(c) = replica.observe(x_seen) {
            traj.event_times.push(k as f64 * dt);
            traj.event_indices.push(k);
            traj.recovered_samples.push(c.reconstructed);
        }
        z = -replica.estimate();
        traj.z_values.push(z);
        traj.y_values.push(traj.x_values[k] + z);
    }
    Ok(traj)
}

/// `(1/T)·∫ Y_t² dt` by left-Riemann sum.
pub fn control_cost(traj: &ControlTrajectory) -> f64 {
    let n = traj.y_values.len().saturating_sub(1);
    let sum_sq: f64 = traj.y_values[..n].iter().map(|y| y * y).sum();
    time_average(sum_sq, traj.dt, traj.horizon)
}

/// Splits `Z` into impulses at the event times plus a smooth part.
pub fn decompose_control(traj: &ControlTrajectory) -> ImpulseDecomposition {
    let z = &traj.z_values;
    let mut derivative_values = vec![0.0; z.len()];
    let mut impulses = Vec::with_capacity(traj.event_indices.len());
    let mut jumps = traj.event_indices.iter().peekable();
    for k in 1..z.len() {
        let step = z[k] - z[k - 1];
        if jumps.peek() == Some(&&k) {
            impulses.push(Impulse { time: k as f64 * traj.dt, weight: step });
            jumps.next();
        } else {
            derivative_values[k] = step / traj.dt;
        }
    }
    ImpulseDecomposition { impulses, derivative_values }
}

/// Integrates a decomposition back onto the grid: impulses as exact steps,
/// the smooth part as a running sum.
pub fn reintegrate(decomp: &ImpulseDecomposition, dt: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon / dt).round() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut impulses = decomp.impulses.iter().peekable();
    for k in 0..n {
        let t = k as f64 * dt;
        if let Some(d) = decomp.derivative_values.get(k) {
            acc += d * dt;
        }
        while let Some(imp) = impulses.peek() {
            if imp.time <= t + 0.5 * dt {
                acc += imp.weight;
                impulses.next();
            } else {
                break;
            }
        }
        out.push(acc);
    }
    out
}

/// CSV with columns `t,x,z,y`.
pub fn write_trajectory_csv<W: Write>(traj: &ControlTrajectory, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,x,z,y")?;
    for (k, ((x, z), y)) in traj.x_values.iter().zip(&traj.z_values).zip(&traj.y_values).enumerate() {
        writeln!(out, "{},{},{},{}", k as f64 * traj.dt, x, z, y)?;
    }
    Ok(())
}

/// CSV with columns `time,weight`.
pub fn write_impulses_csv<W: Write>(decomp: &ImpulseDecomposition, mut out: W) -> std::io::Result<()> {
    writeln!(out, "time,weight")?;
    for imp in &decomp.impulses {
        writeln!(out, "{},{}", imp.time, imp.weight)?;
    }
    Ok(())
}
