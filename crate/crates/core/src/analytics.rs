//! Closed-form and series-based performance functions.
//!
//! For the OU process the expected inter-sample time and the expected
//! integrated squared innovation at threshold `sqrt(v)` are
//!
//! ```text
//! R₁(v) = v/σ² · ₂F₂(1, 1; 3/2, 2; θv/σ²)
//! R₂(v) = −v/(2θ) + σ²/(2θ)·R₁(v)
//! ```
//!
//! and the distortion at rate `R` is `R·R₂(R₁⁻¹(1/R))`.

use crate::error::{Result, SimError};
use crate::process::ProcessModel;

pub const DEFAULT_SERIES_TOL: f64 = 1e-14;
const MAX_TERMS: usize = 100_000;
const BISECTION_REL_WIDTH: f64 = 1e-14;

/// `₂F₂(1, 1; 3/2, 2; x)`.
pub fn hyp2f2(x: f64) -> Result<f64> {
    Ok(1.0 + hyp2f2_tail(x, DEFAULT_SERIES_TOL)?)
}

/// `₂F₂(1, 1; 3/2, 2; x) − 1`, summed from the `n = 1` term so small
/// arguments keep full relative precision.
///
/// Term ratio: `t_{n+1}/t_n = (1+n)² x / ((3/2+n)(2+n)(1+n)) = (1+n) x / ((3/2+n)(2+n))`.
pub fn hyp2f2_tail(x: f64, tol: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(SimError::Numeric(format!("2F2 argument {x} is not finite")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut term = x / 3.0;
    let mut tail = 0.0;
    for n in 1..MAX_TERMS {
        tail += term;
        let total = 1.0 + tail;
        if term.abs() < tol * total.abs() {
            return Ok(tail);
        }
        let k = n as f64;
        term *= (1.0 + k) * x / ((1.5 + k) * (2.0 + k));
        if !term.is_finite() {
            return Err(SimError::Numeric(format!("2F2 series overflowed at x = {x}")));
        }
    }
    Err(SimError::Numeric(format!("2F2 series did not converge in {MAX_TERMS} terms at x = {x}")))
}

/// `R₁`, `R₂` and the inverse of `R₁` for one OU parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuRateFunctions {
    theta: f64,
    sigma: f64,
    series_tol: f64,
}

impl OuRateFunctions {
    pub fn new(theta: f64, sigma: f64) -> Result<Self> {
        Self::with_tolerance(theta, sigma, DEFAULT_SERIES_TOL)
    }

    pub fn with_tolerance(theta: f64, sigma: f64, series_tol: f64) -> Result<Self> {
        if !(theta > 0.0) || !(sigma > 0.0) || !theta.is_finite() || !sigma.is_finite() {
            return Err(SimError::domain(format!(
                "theta and sigma must be positive, got theta={theta}, sigma={sigma}"
            )));
        }
        if !(series_tol > 0.0) {
            return Err(SimError::domain("series tolerance must be positive"));
        }
        Ok(OuRateFunctions { theta, sigma, series_tol })
    }

    pub fn from_model(model: &ProcessModel) -> Result<Self> {
        match model {
            ProcessModel::OrnsteinUhlenbeck(p) => Self::new(p.theta(), p.sigma()),
            _ => Err(SimError::domain("rate functions are defined for the OU process only")),
        }
    }

    fn arg(&self, v: f64) -> f64 {
        self.theta * v / (self.sigma * self.sigma)
    }

    fn check(v: f64) -> Result<()> {
        if !(v >= 0.0) {
            return Err(SimError::domain(format!("v must be non-negative, got {v}")));
        }
        Ok(())
    }

    /// Expected time for the innovation to leave `(−sqrt(v), sqrt(v))`.
    pub fn r1(&self, v: f64) -> Result<f64> {
        Self::check(v)?;
        let tail = hyp2f2_tail(self.arg(v), self.series_tol)?;
        Ok(v / (self.sigma * self.sigma) * (1.0 + tail))
    }

    /// Expected `∫ O_t² dt` over one exit episode at threshold `sqrt(v)`.
    ///
    /// Evaluated as `v·(₂F₂ − 1)/(2θ)`, which equals the defining difference
    /// without its cancellation at small `θ`.
    pub fn r2(&self, v: f64) -> Result<f64> {
        Self::check(v)?;
        let tail = hyp2f2_tail(self.arg(v), self.series_tol)?;
        Ok(v * tail / (2.0 * self.theta))
    }

    /// The `v ≥ 0` with `r1(v) = y`, by bracketing then bisection.
    pub fn r1_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(SimError::domain(format!("r1_inverse needs finite y >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        // r1(v) ≥ y, with series overflow counting as "far above".
        let above = |v: f64| -> Result<bool> {
            match self.r1(v) {
                Ok(r) => Ok(r >= y),
                Err(SimError::Numeric(_)) => Ok(true),
                Err(e) => Err(e),
            }
        };
        let mut lo = 0.0;
        // ₂F₂ ≥ 1 makes σ²y an upper bracket already; keep expanding in case
        // of rounding at the boundary.
        let mut hi = self.sigma * self.sigma * y;
        let mut expansions = 0;
        while !above(hi)? {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 1100 {
                return Err(SimError::Numeric(format!("could not bracket r1 root for y = {y}")));
            }
        }
        while hi - lo > BISECTION_REL_WIDTH * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if above(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `D(R) = R·R₂(R₁⁻¹(1/R))`.
    pub fn drf(&self, rate: f64) -> Result<f64> {
        if !(rate > 0.0) {
            return Err(SimError::domain(format!("rate must be positive, got {rate}")));
        }
        Ok(rate * self.r2(self.r1_inverse(1.0 / rate)?)?)
    }
}

/// Distortion-rate function of the OU process under the optimal sign code.
pub fn ou_drf(theta: f64, sigma: f64, rate: f64) -> Result<f64> {
    OuRateFunctions::new(theta, sigma)?.drf(rate)
}

/// `a·c²/(6F)`: the minimum distortion of `c·W_{a·t} + b·t` at sampling
/// frequency `F`.
pub fn wiener_dff(frequency: f64, scale: f64, time_scale: f64) -> Result<f64> {
    if !(frequency > 0.0) {
        return Err(SimError::domain(format!("frequency must be positive, got {frequency}")));
    }
    Ok(time_scale * scale * scale / (6.0 * frequency))
}

/// `a·c²/(2F)`: distortion of the driftless Wiener family under uniform
/// sampling every `1/F` seconds.
pub fn wiener_uniform_distortion(frequency: f64, scale: f64, time_scale: f64) -> Result<f64> {
    if !(frequency > 0.0) {
        return Err(SimError::domain(format!("frequency must be positive, got {frequency}")));
    }
    Ok(time_scale * scale * scale / (2.0 * frequency))
}

/// Optimal distortion at `rate` for either model family.
pub fn optimal_distortion(model: &ProcessModel, rate: f64) -> Result<f64> {
    match model {
        ProcessModel::WienerFamily(p) => wiener_dff(rate, p.scale(), p.time_scale()),
        ProcessModel::OrnsteinUhlenbeck(p) => ou_drf(p.theta(), p.sigma(), rate),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> OuRateFunctions {
        OuRateFunctions::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn hyp2f2_small_arguments() {
        assert_eq!(hyp2f2(0.0).unwrap(), 1.0);
        let x = 1e-6;
        assert!((hyp2f2(x).unwrap() - (1.0 + x / 3.0)).abs() < 1e-13);
        // (1)_n² / ((3/2)_n (2)_n n!) for n = 1, 2, 3: 1/3, 4/45, 2/105
        let x = 1e-3;
        let taylor = x / 3.0 + 4.0 * x * x / 45.0 + 2.0 * x * x * x / 105.0;
        assert!((hyp2f2_tail(x, 1e-16).unwrap() - taylor).abs() < 1e-10 * taylor);
        assert!(hyp2f2(f64::NAN).is_err());
    }

    #[test]
    fn hyp2f2_overflow_is_reported() {
        assert!(matches!(hyp2f2(1e6), Err(SimError::Numeric(_))));
    }

    #[test]
    fn r1_r2_examples() {
        let f = unit();
        assert_eq!(f.r1(0.0).unwrap(), 0.0);
        assert_eq!(f.r2(0.0).unwrap(), 0.0);
        assert!(f.r1(-1.0).is_err());
        assert!(f.r2(-1.0).is_err());
        assert!(f.r1_inverse(-1.0).is_err());
        assert_eq!(f.r1_inverse(0.0).unwrap(), 0.0);

        // θv/σ² = 1e-8
        let g = OuRateFunctions::new(1e-8, 1.0).unwrap();
        assert!((g.r1(1.0).unwrap() - 1.0).abs() < 1e-8);

        let sigma = 1.7;
        let g = OuRateFunctions::new(1e-6, sigma).unwrap();
        let v = 0.9;
        let wiener = v * v / (6.0 * sigma * sigma);
        assert!((g.r2(v).unwrap() - wiener).abs() < 1e-5 * wiener);
    }

    #[test]
    fn r2_matches_defining_difference() {
        let f = OuRateFunctions::new(0.7, 1.3).unwrap();
        for v in [0.1, 0.5, 1.0, 3.0, 8.0] {
            let direct = -v / (2.0 * 0.7) + 1.3 * 1.3 / (2.0 * 0.7) * f.r1(v).unwrap();
            assert!((f.r2(v).unwrap() - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn drf_wiener_limit_and_monotone() {
        for r in [0.5, 1.0, 2.0, 10.0] {
            let d = ou_drf(1e-3, 1.0, r).unwrap();
            let w = 1.0 / (6.0 * r);
            assert!(((d - w) / w).abs() < 0.01, "R={r}: {d} vs {w}");
        }
        let mut prev = f64::INFINITY;
        for k in -6..=8 {
            let d = ou_drf(1.0, 1.0, 2f64.powi(k)).unwrap();
            assert!(d < prev);
            prev = d;
        }
        assert!(ou_drf(1.0, 1.0, 1e4).unwrap() < ou_drf(1.0, 1.0, 1e2).unwrap());
        assert!(ou_drf(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn wiener_closed_forms() {
        assert!((wiener_dff(1.0, 1.0, 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-16);
        assert!((wiener_dff(2.0, 1.0, 1.0).unwrap() - 1.0 / 12.0).abs() < 1e-16);
        assert_eq!(wiener_dff(1.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(wiener_uniform_distortion(1.0, 1.0, 1.0).unwrap(), 0.5);
        assert!(wiener_uniform_distortion(1e300, 1.0, 1.0).unwrap() < 1e-300);
        assert!(wiener_dff(0.0, 1.0, 1.0).is_err());
        assert!(wiener_uniform_distortion(-1.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn r1_monotone_and_convex(theta in 0.01f64..3.0, sigma in 0.2f64..3.0,
                                  v1 in 0.0f64..10.0, gap in 1e-3f64..10.0) {
            let f = OuRateFunctions::new(theta, sigma).unwrap();
            let v2 = v1 + gap;
            let (a, b) = (f.r1(v1).unwrap(), f.r1(v2).unwrap());
            prop_assert!(a < b);
            let mid = f.r1(0.5 * (v1 + v2)).unwrap();
            prop_assert!(mid <= 0.5 * (a + b) + 1e-12 * b.max(1.0));
        }

        #[test]
        fn r1_inverse_round_trip(theta in 0.01f64..3.0, sigma in 0.2f64..3.0, v0 in 1e-6f64..8.0) {
            let f = OuRateFunctions::new(theta, sigma).unwrap();
            let y = f.r1(v0).unwrap();
            let v = f.r1_inverse(y).unwrap();
            prop_assert!(((v - v0) / v0).abs() < 1e-10);
        }

        #[test]
        fn uniform_to_threshold_ratio_is_three(f in 1e-3f64..1e3, c in -5.0f64..5.0, a in 1e-3f64..10.0) {
            prop_assume!(c.abs() > 1e-6);
            let ratio = wiener_uniform_distortion(f, c, a).unwrap() / wiener_dff(f, c, a).unwrap();
            prop_assert!((ratio - 3.0).abs() < 1e-12);
        }
    }
}
