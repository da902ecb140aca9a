//! Closed-form quantities: achievability parameters, the capacity interval,
//! Chebyshev error bounds, hypersphere volumes and the codebook-size bounds.
//!
//! All logarithms are base 2.
//!
//! The error bounds come in two forms. The `*_paper` values are the closed
//! forms as usually displayed, which drop `h_min^4` (and `a^2` in the type II
//! terms). The `*_exact` values substitute the threshold `delta_n` directly
//! into the Chebyshev step without simplification; experiments compare
//! against those.

use std::f64::consts::PI;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::channel::SystemParameters;
use crate::cir::{check_kappa, ChannelImpulseResponse, CirSummary};
use crate::error::{Error, Result};

/// Exponent of the saturated-packing density upper bound `2^{-0.599 n}`.
pub const DENSITY_UPPER_EXPONENT: f64 = 0.599;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AchievabilityQuantities {
    pub epsilon_n: f64,
    /// Decoding threshold, `epsilon_n / 3`.
    pub delta_n: f64,
    /// Packing radius `sqrt(n_bar * epsilon_n)`.
    pub r0: f64,
    /// Output length `n + K - 1`.
    pub n_bar: usize,
}

fn check_h_min(h_min: f64) -> Result<()> {
    if h_min > 0.0 && h_min.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("h_min must be positive (got {h_min})")))
    }
}

fn check_taps(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::param("tap count K must be at least 1"))
    } else {
        Ok(())
    }
}

/// `epsilon_n = a / (h_min^2 n^{(1 - (2 kappa + b)) / 2})`, `delta_n = epsilon_n / 3`,
/// `r0 = sqrt(n_bar epsilon_n)`.
pub fn achievability_parameters(params: &SystemParameters, h_min: f64, k: usize) -> Result<AchievabilityQuantities> {
    params.validate()?;
    check_h_min(h_min)?;
    check_taps(k)?;
    if 2.0 * params.kappa + params.b >= 1.0 {
        return Err(Error::param(format!(
            "2*kappa + b must be below 1 (got {})",
            2.0 * params.kappa + params.b
        )));
    }
    let n = params.n as f64;
    let exponent = (1.0 - (2.0 * params.kappa + params.b)) / 2.0;
    let epsilon_n = params.a / (h_min * h_min * n.powf(exponent));
    let n_bar = params.n + k - 1;
    Ok(AchievabilityQuantities {
        epsilon_n,
        delta_n: epsilon_n / 3.0,
        r0: (n_bar as f64 * epsilon_n).sqrt(),
        n_bar,
    })
}

/// `((1 - 2 kappa) / 4, 1 + kappa)`.
pub fn capacity_interval(kappa: f64) -> Result<(f64, f64)> {
    check_kappa(kappa)?;
    Ok(((1.0 - 2.0 * kappa) / 4.0, 1.0 + kappa))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBoundSet {
    pub eta0_paper: f64,
    pub eta0_exact: f64,
    pub zeta0_paper: f64,
    pub zeta0_exact: f64,
    pub zeta1_paper: f64,
    pub zeta1_exact: f64,
    pub eta0_paper_clamped: f64,
    pub eta0_exact_clamped: f64,
    pub zeta0_paper_clamped: f64,
    pub zeta0_exact_clamped: f64,
    pub zeta1_paper_clamped: f64,
    pub zeta1_exact_clamped: f64,
}

impl ErrorBoundSet {
    fn new(eta0: (f64, f64), zeta0: (f64, f64), zeta1: (f64, f64)) -> Self {
        let c = |v: f64| v.clamp(0.0, 1.0);
        Self {
            eta0_paper: eta0.0,
            eta0_exact: eta0.1,
            zeta0_paper: zeta0.0,
            zeta0_exact: zeta0.1,
            zeta1_paper: zeta1.0,
            zeta1_exact: zeta1.1,
            eta0_paper_clamped: c(eta0.0),
            eta0_exact_clamped: c(eta0.1),
            zeta0_paper_clamped: c(zeta0.0),
            zeta0_exact_clamped: c(zeta0.1),
            zeta1_paper_clamped: c(zeta1.0),
            zeta1_exact_clamped: c(zeta1.1),
        }
    }

    /// `min(1, zeta0 + zeta1)` in the exact form, the type II bound.
    pub fn type2_exact(&self) -> f64 {
        (self.zeta0_exact + self.zeta1_exact).min(1.0)
    }

    pub fn type2_paper(&self) -> f64 {
        (self.zeta0_paper + self.zeta1_paper).min(1.0)
    }
}

/// Chebyshev terms from the threshold: `3 sigma^4 / (n_bar delta^2)` for the
/// noise-energy deviation and `16 sigma^2 (K L P)^2 / (n_bar delta^2)` for the
/// cross term.
fn exact_terms(sigma_z2: f64, n_bar: usize, delta_n: f64, a_max: f64) -> (f64, f64) {
    let denom = n_bar as f64 * delta_n * delta_n;
    let energy = 3.0 * sigma_z2 * sigma_z2 / denom;
    let cross = 16.0 * sigma_z2 * a_max * a_max / denom;
    (energy, cross)
}

pub fn error_probability_bounds(params: &SystemParameters, h_min: f64, l: f64, k: usize) -> Result<ErrorBoundSet> {
    let q = achievability_parameters(params, h_min, k)?;
    let SystemParameters {
        n,
        kappa,
        sigma_z2,
        p_max,
        a,
        b,
    } = *params;
    let n = n as f64;
    let scale = n.powf(2.0 * kappa + b);
    let s4 = sigma_z2 * sigma_z2;

    let eta0_paper = 27.0 * s4 / (a * a * scale);
    let zeta0_paper = 144.0 * sigma_z2 * n.powf(2.0 * kappa) * l * l * p_max * p_max / scale;
    let zeta1_paper = 27.0 * s4 / scale;

    let (energy, cross) = exact_terms(sigma_z2, q.n_bar, q.delta_n, k as f64 * l * p_max);
    Ok(ErrorBoundSet::new(
        (eta0_paper, energy),
        (zeta0_paper, cross),
        (zeta1_paper, energy),
    ))
}

/// `log2` of the volume of a `dim`-ball of radius `r`,
/// `pi^{dim/2} r^dim / Gamma(dim/2 + 1)`, via log-gamma.
pub fn sphere_log_volume(dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    (d / 2.0) * PI.log2() + d * r.log2() - ln_gamma(d / 2.0 + 1.0) / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingBounds {
    /// Lower bound on `log2 M` from the saturated packing in the input space.
    pub log_m_lower: f64,
    /// Upper bound on `log2 M` from packing the convolved codebook.
    pub log_m_upper: f64,
    /// `log_m_lower / (n log2 n)`
    pub r_lower: f64,
    pub r_upper: f64,
    /// Converse minimum distance `sqrt(n_bar epsilon_n')`.
    pub alpha_n: f64,
    pub epsilon_n_prime: f64,
    /// `K L p_max`
    pub a_max: f64,
}

pub fn counting_bounds(params: &SystemParameters, h_min: f64, l: f64, k: usize) -> Result<CountingBounds> {
    let q = achievability_parameters(params, h_min, k)?;
    let n = params.n;
    let n_bar = q.n_bar as f64;

    let log_m_lower = (n as f64 * (params.p_max / 2.0).log2() - sphere_log_volume(n, q.r0)).max(0.0);

    let epsilon_n_prime = params.a * params.a / n_bar.powf(2.0 * (1.0 + params.b));
    let alpha_n = (n_bar * epsilon_n_prime).sqrt();
    let a_max = k as f64 * l * params.p_max;
    let log_m_upper =
        -DENSITY_UPPER_EXPONENT * n_bar + n_bar * (a_max + 2.0 * alpha_n).log2() - sphere_log_volume(q.n_bar, alpha_n);

    let scale = n as f64 * (n as f64).log2();
    Ok(CountingBounds {
        log_m_lower,
        log_m_upper,
        r_lower: log_m_lower / scale,
        r_upper: log_m_upper / scale,
        alpha_n,
        epsilon_n_prime,
        a_max,
    })
}

/// Every closed-form quantity for one parameter set, flattened for JSON output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    #[serde(flatten)]
    pub params: SystemParameters,
    #[serde(flatten)]
    pub cir: CirSummary,
    #[serde(flatten)]
    pub achievability: AchievabilityQuantities,
    #[serde(flatten)]
    pub errors: ErrorBoundSet,
    #[serde(flatten)]
    pub counting: CountingBounds,
    pub capacity_lower: f64,
    pub capacity_upper: f64,
}

pub fn bounds_report(
    params: &SystemParameters,
    cir: &ChannelImpulseResponse,
    h_min_tolerance: f64,
) -> Result<BoundsReport> {
    let summary = crate::cir::validate_cir(cir, h_min_tolerance)?;
    if !summary.c2_ok {
        return Err(Error::param(format!(
            "impulse response spectrum is not bounded away from zero (h_min = {:e})",
            summary.h_min
        )));
    }
    let achievability = achievability_parameters(params, summary.h_min, summary.k)?;
    let errors = error_probability_bounds(params, summary.h_min, summary.l, summary.k)?;
    let counting = counting_bounds(params, summary.h_min, summary.l, summary.k)?;
    let (capacity_lower, capacity_upper) = capacity_interval(params.kappa)?;
    Ok(BoundsReport {
        params: *params,
        cir: summary,
        achievability,
        errors,
        counting,
        capacity_lower,
        capacity_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(n: usize, kappa: f64, b: f64, a: f64) -> SystemParameters {
        SystemParameters::new(n, kappa, 1.0, 1.0, a, b).unwrap()
    }

    #[test]
    fn achievability_hand_values() {
        // b -> 0 approximated by 1e-12
        let q = achievability_parameters(&params(100, 0.0, 1e-12, 1.0), 1.0, 1).unwrap();
        assert_relative_eq!(q.epsilon_n, 0.1, max_relative = 1e-9);
        assert_relative_eq!(q.delta_n, 0.1 / 3.0, max_relative = 1e-9);
        assert_eq!(q.n_bar, 100);
        assert_relative_eq!(q.r0, 10f64.sqrt(), max_relative = 1e-9);

        let q = achievability_parameters(&params(1000, 0.0, 0.2, 10.0), 1.0, 1).unwrap();
        assert_relative_eq!(q.delta_n, 0.21033, max_relative = 1e-4);
        assert_eq!(q.delta_n, q.epsilon_n / 3.0);

        let p = params(1000, 0.2, 0.1, 2.0);
        let one = achievability_parameters(&p, 0.4, 4).unwrap();
        let two = achievability_parameters(&p, 0.8, 4).unwrap();
        assert_relative_eq!(two.epsilon_n, one.epsilon_n / 4.0, max_relative = 1e-14);
        assert_eq!(one.n_bar, 1003);
    }

    #[test]
    fn achievability_rejects_flipped_exponent() {
        let p = params(1000, 0.45, 0.1, 1.0);
        assert!(matches!(achievability_parameters(&p, 1.0, 1), Err(Error::Parameter(_))));
        assert!(achievability_parameters(&params(1000, 0.1, 0.1, 1.0), 0.0, 1).is_err());
    }

    #[test]
    fn capacity_values() {
        assert_eq!(capacity_interval(0.0).unwrap(), (0.25, 1.0));
        assert_eq!(capacity_interval(0.25).unwrap(), (0.125, 1.25));
        let (lo, hi) = capacity_interval(0.49).unwrap();
        assert_relative_eq!(lo, 0.005, max_relative = 1e-12);
        assert_relative_eq!(hi, 1.49, max_relative = 1e-12);
        assert!(capacity_interval(0.5).is_err());
        assert!(capacity_interval(-0.01).is_err());
    }

    #[test]
    fn error_bound_hand_values() {
        let e = error_probability_bounds(&params(1000, 0.0, 0.2, 10.0), 1.0, 1.0, 1).unwrap();
        assert_relative_eq!(e.eta0_exact, 0.0678, max_relative = 1e-3);
        assert_relative_eq!(e.eta0_paper, e.eta0_exact, max_relative = 1e-12);
        assert_relative_eq!(e.zeta0_exact, 0.3617, max_relative = 1e-3);
        assert_relative_eq!(e.zeta0_paper, 36.17, max_relative = 1e-3);
        assert_eq!(e.zeta0_paper_clamped, 1.0);
        assert_eq!(e.zeta1_exact, e.eta0_exact);
        assert_relative_eq!(e.type2_exact(), 0.4295, max_relative = 1e-3);
    }

    #[test]
    fn exact_terms_vanish_without_noise() {
        let (energy, cross) = exact_terms(0.0, 100, 0.1, 1.0);
        assert_eq!((energy, cross), (0.0, 0.0));
    }

    #[test]
    fn sphere_volumes() {
        assert_relative_eq!(sphere_log_volume(2, 1.0), PI.log2(), max_relative = 1e-12);
        assert_relative_eq!(sphere_log_volume(1, 1.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(sphere_log_volume(3, 1.0), (4.0 * PI / 3.0).log2(), max_relative = 1e-12);
        assert_relative_eq!(sphere_log_volume(4, 1.0), (PI * PI / 2.0).log2(), max_relative = 1e-12);
        // far beyond where Gamma overflows
        assert!(sphere_log_volume(10_000, 1.0).is_finite());
    }

    #[test]
    fn counting_hand_values() {
        // n = 4, p_max = 2: log_m_lower = max(0, -log2(pi^2/2 * r0^4)) = 0
        let p = SystemParameters::new(4, 0.0, 1.0, 2.0, 1.0, 0.2).unwrap();
        let c = counting_bounds(&p, 1.0, 1.0, 1).unwrap();
        assert_eq!(c.log_m_lower, 0.0);

        // n_bar = 100, a = 1, b -> 0: alpha_n = 1 / 10
        let p = SystemParameters::new(100, 0.0, 1.0, 1.0, 1.0, 1e-12).unwrap();
        let c = counting_bounds(&p, 1.0, 1.0, 1).unwrap();
        assert_relative_eq!(c.alpha_n, 0.1, max_relative = 1e-9);
        assert_eq!(c.a_max, 1.0);
    }

    #[test]
    fn rate_lower_bound_grows_with_n() {
        let r: Vec<f64> = [1_000, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&n| {
                counting_bounds(&params(n, 0.0, 0.01, 1.0), 1.0, 1.0, 1)
                    .unwrap()
                    .r_lower
            })
            .collect();
        assert!(r.windows(2).all(|w| w[0] < w[1]), "{r:?}");
        assert!(r[3] < 0.2475);
    }

    #[test]
    fn report_flattens_every_field() {
        let p = params(1000, 0.0, 0.2, 10.0);
        let rep = bounds_report(&p, &ChannelImpulseResponse::identity(), 1e-6).unwrap();
        let v = serde_json::to_value(rep).unwrap();
        for key in [
            "n",
            "kappa",
            "sigma_z2",
            "p_max",
            "a",
            "b",
            "k",
            "l",
            "sum_abs",
            "h_min",
            "c1_ok",
            "c2_ok",
            "epsilon_n",
            "delta_n",
            "r0",
            "n_bar",
            "eta0_paper",
            "eta0_exact",
            "zeta0_paper",
            "zeta0_exact",
            "zeta1_paper",
            "zeta1_exact",
            "eta0_exact_clamped",
            "log_m_lower",
            "log_m_upper",
            "r_lower",
            "r_upper",
            "alpha_n",
            "epsilon_n_prime",
            "a_max",
            "capacity_lower",
            "capacity_upper",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let bad = ChannelImpulseResponse::new(vec![1.0, -1.0]).unwrap();
        assert!(bounds_report(&p, &bad, 1e-6).is_err());
    }
}
