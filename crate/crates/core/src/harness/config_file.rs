//! Flat `key = value` experiment files.
//!
//! ```text
//! # standard Wiener at one bit per second
//! model = wiener
//! policy = optimal
//! rate = 1
//! horizon = 2000
//! dt = 1e-4
//! trials = 64
//! seed = 7
//! mode = estimation
//! ```
//!
//! Keys: `model` (`wiener` | `ou`), `scale`, `time_scale`, `drift` (Wiener,
//! defaults 1, 1, 0), `theta`, `mu`, `sigma` (OU, `mu` defaults to 0),
//! `policy` (`optimal` | `constant` | `uniform`), `threshold`, `period`
//! (defaults to `1/rate`), `rate`, `horizon`, `dt`, `trials`, `seed`, `mode`
//! (`estimation` | `analog` | `control`).

use std::collections::BTreeMap;

use super::{ExperimentConfig, Mode, PolicyChoice};
use crate::error::{Result, SimError};
use crate::policy::ThresholdPolicy;
use crate::process::ProcessModel;

const KNOWN_KEYS: &[&str] = &[
    "model", "scale", "time_scale", "drift", "theta", "mu", "sigma", "policy", "threshold", "period", "rate",
    "horizon", "dt", "trials", "seed", "mode",
];

fn err(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}

struct Table(BTreeMap<String, String>);

impl Table {
    fn str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        self.str(key)
            .map(|v| v.parse::<f64>().map_err(|_| err(format!("{key}: not a number: {v}"))))
            .transpose()
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| err(format!("missing key {key}")))
    }

    fn int<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.str(key)
            .map(|v| v.parse::<T>().map_err(|_| err(format!("{key}: not a non-negative integer: {v}"))))
            .transpose()
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected key = value", lineno + 1)))?;
        let key = k.trim().to_ascii_lowercase();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(err(format!("line {}: unknown key {key}", lineno + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(err(format!("line {}: duplicate key {key}", lineno + 1)));
        }
    }
    let t = Table(map);

    let model = match t.str("model") {
        Some("wiener") => ProcessModel::wiener(
            t.num_or("scale", 1.0)?,
            t.num_or("time_scale", 1.0)?,
            t.num_or("drift", 0.0)?,
        ),
        Some("ou") => ProcessModel::ornstein_uhlenbeck(t.required("theta")?, t.num_or("mu", 0.0)?, t.required("sigma")?),
        Some(other) => return Err(err(format!("unknown model {other}"))),
        None => return Err(err("missing key model")),
    }
    .map_err(|e| err(e.to_string()))?;

    let rate_target = t.required("rate")?;
    let policy = match t.str("policy").unwrap_or("optimal") {
        "optimal" => PolicyChoice::OptimalForRate,
        "constant" => PolicyChoice::Fixed(ThresholdPolicy::constant(t.required("threshold")?).map_err(|e| err(e.to_string()))?),
        "uniform" => {
            let period = t.num_or("period", 1.0 / rate_target)?;
            PolicyChoice::Fixed(ThresholdPolicy::uniform(period).map_err(|e| err(e.to_string()))?)
        }
        other => return Err(err(format!("unknown policy {other}"))),
    };
    let mode = match t.str("mode").unwrap_or("estimation") {
        "estimation" => Mode::Estimation,
        "analog" => Mode::AnalogEstimation,
        "control" => Mode::Control,
        other => return Err(err(format!("unknown mode {other}"))),
    };

    let cfg = ExperimentConfig {
        model,
        policy,
        rate_target,
        horizon: t.required("horizon")?,
        dt: t.required("dt")?,
        trials: t.int("trials")?.unwrap_or(1),
        master_seed: t.int("seed")?.unwrap_or(0),
        mode,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let cfg = parse_config(
            "# comment\nmodel = ou\ntheta = 2\nsigma=0.5\nmu = -1 # inline\nrate = 1.5\nhorizon = 10\ndt = 1e-3\ntrials = 4\nseed = 9\nmode = control\n",
        )
        .unwrap();
        assert_eq!(cfg.model, ProcessModel::ornstein_uhlenbeck(2.0, -1.0, 0.5).unwrap());
        assert_eq!(cfg.rate_target, 1.5);
        assert_eq!(cfg.trials, 4);
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.mode, Mode::Control);
        assert!(matches!(cfg.policy, PolicyChoice::OptimalForRate));
    }

    #[test]
    fn uniform_period_defaults_to_inverse_rate() {
        let cfg = parse_config("model = wiener\npolicy = uniform\nrate = 4\nhorizon = 1\ndt = 0.01\nmode = analog\n").unwrap();
        match cfg.policy {
            PolicyChoice::Fixed(ThresholdPolicy::Uniform { period }) => assert_eq!(period, 0.25),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_files() {
        let base = "model = wiener\nrate = 1\nhorizon = 1\ndt = 0.01\n";
        assert!(parse_config(base).is_ok());
        for bad in [
            format!("{base}colour = blue\n"),
            format!("{base}rate = 2\n"),
            base.replace("rate = 1", "rate = 1,5"),
            base.replace("rate = 1", "rate = 0"),
            base.replace("wiener", "levy"),
            format!("{base}policy = uniform\n"),
            format!("{base}trials = -3\n"),
            base.replace("dt = 0.01\n", ""),
            "model = ou\nsigma = 1\nrate = 1\nhorizon = 1\ndt = 0.01\n".to_string(),
            format!("{base}justtext\n"),
        ] {
            assert!(matches!(parse_config(&bad), Err(SimError::Config(_))), "{bad}");
        }
    }
}
