//! Sign-of-innovation code: one bit per stopping time saying which edge of
//! the threshold band the innovation reached, and the receiver that turns
//! those bits back into samples and a running MMSE estimate.

use std::io::{BufRead, Write};

use crate::error::{Result, SimError};
use crate::policy::{uniform_indices, StoppingRecord, ThresholdPolicy};
use crate::process::{grid_steps, ProcessModel, SamplePath};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoiEvent {
    pub timestamp: f64,
    pub bit: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoiStream {
    pub events: Vec<SoiEvent>,
    pub horizon: f64,
}

/// Receiver-side estimate on the source grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatePath {
    pub dt: f64,
    pub values: Vec<f64>,
    pub recovered_samples: Vec<f64>,
}

/// Maps each stopping time to its codeword `(sign + 1) / 2`.
pub fn encode(record: &StoppingRecord, policy: &ThresholdPolicy, horizon: f64) -> Result<SoiStream> {
    if !policy.is_threshold() {
        return Err(SimError::UnsupportedPolicy(
            "sign-of-innovation coding needs a threshold policy".into(),
        ));
    }
    let events = record
        .times
        .iter()
        .zip(&record.signs)
        .map(|(&timestamp, &sign)| SoiEvent { timestamp, bit: u8::from(sign > 0) })
        .collect();
    Ok(SoiStream { events, horizon })
}

fn event_index(timestamp: f64, dt: f64, steps: usize) -> Result<usize> {
    let pos = timestamp / dt;
    let k = pos.round();
    if (pos - k).abs() > 1e-3 || k < 1.0 || k as usize > steps {
        return Err(SimError::Alignment(format!(
            "timestamp {timestamp} is not a grid point in (0, {}]",
            steps as f64 * dt
        )));
    }
    Ok(k as usize)
}

/// Rebuilds `X_{τ_i} = mean ± a` from the bits and fills the grid with the
/// conditional mean from the latest recovered sample.
pub fn decode(stream: &SoiStream, model: &ProcessModel, policy: &ThresholdPolicy, dt: f64) -> Result<EstimatePath> {
    if !policy.is_threshold() {
        return Err(SimError::UnsupportedPolicy(
            "sign-of-innovation decoding needs a threshold policy".into(),
        ));
    }
    let steps = grid_steps(stream.horizon, dt)?;
    let kernel = model.kernel(dt)?;
    let mut tracker = kernel.tracker(0.0);
    let mut values = Vec::with_capacity(steps + 1);
    let mut recovered = Vec::with_capacity(stream.events.len());
    values.push(0.0);

    let mut events = stream.events.iter().peekable();
    let mut last_index = 0;
    for k in 1..=steps {
        tracker.advance();
        if let Some(ev) = events.peek() {
            let idx = event_index(ev.timestamp, dt, steps)?;
            if idx <= last_index {
                return Err(SimError::Alignment("event timestamps must be strictly increasing".into()));
            }
            if idx == k {
                let elapsed = tracker.steps() as f64 * dt;
                let a = policy.threshold_at(elapsed).expect("threshold policy");
                let sign = if ev.bit == 1 { 1.0 } else { -1.0 };
                let x = tracker.mean() + sign * a;
                tracker.reset(x);
                recovered.push(x);
                last_index = idx;
                events.next();
            }
        }
        values.push(tracker.mean());
    }
    Ok(EstimatePath { dt, values, recovered_samples: recovered })
}

/// Receiver for real-valued samples: the estimate restarts from the exact
/// sample value at each stopping time.
pub fn decode_analog(record: &StoppingRecord, model: &ProcessModel, horizon: f64, dt: f64) -> Result<EstimatePath> {
    let steps = grid_steps(horizon, dt)?;
    let kernel = model.kernel(dt)?;
    let mut tracker = kernel.tracker(0.0);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    let mut samples = record.times.iter().zip(&record.sample_values).peekable();
    for k in 1..=steps {
        tracker.advance();
        if let Some(&(&t, &x)) = samples.peek() {
            if event_index(t, dt, steps)? == k {
                tracker.reset(x);
                samples.next();
            }
        }
        values.push(tracker.mean());
    }
    if samples.next().is_some() {
        return Err(SimError::Alignment("samples out of order".into()));
    }
    Ok(EstimatePath { dt, values, recovered_samples: record.sample_values.clone() })
}

/// `ℓ(x) = ⌊log₂ x⌋ + 1`, with `ℓ(0) = 1`.
pub fn bit_length(codeword: u64) -> u32 {
    if codeword == 0 {
        1
    } else {
        u64::BITS - codeword.leading_zeros()
    }
}

/// Bits per second; every SOI codeword is one bit.
pub fn empirical_rate(stream: &SoiStream) -> f64 {
    let bits: u64 = stream.events.iter().map(|e| u64::from(bit_length(u64::from(e.bit)))).sum();
    bits as f64 / stream.horizon
}

/// Left-Riemann time average of a squared-error sum accumulated over
/// grid points `0..steps`.
#[inline]
pub(crate) fn time_average(sum_sq: f64, dt: f64, horizon: f64) -> f64 {
    sum_sq * dt / horizon
}

/// `(1/T)·Σ_k (X_k − X̂_k)²·dt` over `k = 0..len−2`.
pub fn empirical_mse(path: &SamplePath, estimate: &EstimatePath) -> Result<f64> {
    if path.dt != estimate.dt || path.values.len() != estimate.values.len() {
        return Err(SimError::Alignment(format!(
            "path (dt={}, n={}) and estimate (dt={}, n={}) are on different grids",
            path.dt,
            path.values.len(),
            estimate.dt,
            estimate.values.len()
        )));
    }
    let n = path.values.len() - 1;
    let sum_sq: f64 = path.values[..n]
        .iter()
        .zip(&estimate.values[..n])
        .map(|(x, xh)| {
            let e = x - xh;
            e * e
        })
        .sum();
    Ok(time_average(sum_sq, path.dt, path.horizon))
}

/// Samples a path with a uniform schedule and returns the analog estimate.
pub fn uniform_estimate(path: &SamplePath, model: &ProcessModel, period: f64) -> Result<EstimatePath> {
    let steps = path.values.len() - 1;
    let mut record = StoppingRecord::default();
    for k in uniform_indices(period, path.dt, steps)? {
        record.times.push(path.time(k));
        record.sample_values.push(path.values[k]);
    }
    decode_analog(&record, model, path.horizon, path.dt)
}

const HEADER_PREFIX: &str = "# soi-stream v1";

impl SoiStream {
    /// Writes the text format: a header line then `timestamp<TAB>bit` rows.
    pub fn write_to<W: Write>(&self, dt: f64, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{HEADER_PREFIX} T={} dt={}", self.horizon, dt)?;
        for e in &self.events {
            writeln!(out, "{:.9}\t{}", e.timestamp, e.bit)?;
        }
        Ok(())
    }

    /// Parses the text format, returning the stream and its grid step.
    pub fn read_from<R: BufRead>(input: R) -> Result<(SoiStream, f64)> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| SimError::Config("empty soi stream".into()))?
            .map_err(|e| SimError::Config(e.to_string()))?;
        let rest = header
            .strip_prefix(HEADER_PREFIX)
            .ok_or_else(|| SimError::Config(format!("bad soi stream header: {header}")))?;
        let mut horizon = None;
        let mut dt = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("T", v)) => horizon = Some(parse_num(v)?),
                Some(("dt", v)) => dt = Some(parse_num(v)?),
                _ => return Err(SimError::Config(format!("unknown header field {field}"))),
            }
        }
        let horizon = horizon.ok_or_else(|| SimError::Config("header is missing T".into()))?;
        let dt = dt.ok_or_else(|| SimError::Config("header is missing dt".into()))?;

        let mut events = Vec::new();
        let mut prev = 0.0;
        for line in lines {
            let line = line.map_err(|e| SimError::Config(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (t, b) = line
                .split_once('\t')
                .ok_or_else(|| SimError::Config(format!("malformed event line: {line}")))?;
            let timestamp = parse_num(t)?;
            let bit = match b.trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(SimError::Config(format!("bit must be 0 or 1, got {other}"))),
            };
            if !(timestamp > prev) || timestamp > horizon * (1.0 + 1e-12) {
                return Err(SimError::Config(format!(
                    "timestamp {timestamp} out of order or outside (0, {horizon}]"
                )));
            }
            prev = timestamp;
            events.push(SoiEvent { timestamp, bit });
        }
        Ok((SoiStream { events, horizon }, dt))
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| SimError::Config(format!("not a number: {s}")))
}
