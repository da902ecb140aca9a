//! Channel impulse response: DTFT evaluation, spectral minimum and the
//! admissibility checks (absolute summability and a spectrum bounded away
//! from zero).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Smallest grid used by [`ChannelImpulseResponse::h_min`].
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Width at which the ternary refinement of the spectral minimum stops.
pub const REFINEMENT_TOLERANCE: f64 = 1e-10;
/// Default positivity tolerance for the spectral-minimum condition.
pub const DEFAULT_H_MIN_TOLERANCE: f64 = 1e-6;

/// Finite tap vector `h_0, ..., h_{K-1}` with nonzero end taps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelImpulseResponse {
    taps: Vec<f64>,
}

impl ChannelImpulseResponse {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Constraint("impulse response needs at least one tap".into()));
        }
        if let Some(k) = taps.iter().position(|h| !h.is_finite()) {
            return Err(Error::Constraint(format!("tap h_{k} is not finite")));
        }
        if taps[0] == 0.0 {
            return Err(Error::Constraint("first tap h_0 must be nonzero".into()));
        }
        if taps[taps.len() - 1] == 0.0 {
            return Err(Error::Constraint("last tap h_{K-1} must be nonzero".into()));
        }
        Ok(Self { taps })
    }

    /// The ISI-free channel `h = [1]`.
    pub fn identity() -> Self {
        Self { taps: vec![1.0] }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap count `K`.
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest absolute tap `L`.
    pub fn max_abs_tap(&self) -> f64 {
        self.taps.iter().fold(0.0, |m, h| m.max(h.abs()))
    }

    pub fn sum_abs(&self) -> f64 {
        self.taps.iter().map(|h| h.abs()).sum()
    }

    /// Taps in reverse order. The magnitude response is unchanged.
    pub fn reversed(&self) -> Self {
        let mut taps = self.taps.clone();
        taps.reverse();
        Self { taps }
    }

    /// Spectral minimum on the default grid.
    pub fn h_min(&self) -> f64 {
        let points = DEFAULT_GRID_POINTS.max(4 * self.len());
        compute_h_min(self, points).expect("default grid satisfies the density requirement")
    }
}

/// `H(phi) = sum_k h_k exp(-j phi k)`.
pub fn evaluate_dtft(cir: &ChannelImpulseResponse, phi: f64) -> Complex64 {
    dtft(cir.taps(), phi)
}

pub(crate) fn dtft(x: &[f64], phi: f64) -> Complex64 {
    // Horner in z = exp(-j phi)
    let z = Complex64::from_polar(1.0, -phi);
    x.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &h| acc * z + h)
}

/// Infimum of `|H(phi)|` over `[-pi, pi]`: uniform grid search followed by a
/// ternary refinement inside the interval bracketing the grid minimizer.
pub fn compute_h_min(cir: &ChannelImpulseResponse, grid_points: usize) -> Result<f64> {
    let k = cir.len();
    if grid_points < 4 * k {
        return Err(Error::param(format!(
            "grid_points must be at least 4K = {} (got {grid_points})",
            4 * k
        )));
    }
    let step = 2.0 * PI / grid_points as f64;
    let mag = |phi: f64| evaluate_dtft(cir, phi).norm();

    let (best_i, best) = (0..grid_points)
        .map(|i| (i, mag(-PI + step * i as f64)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });

    let centre = -PI + step * best_i as f64;
    let (mut lo, mut hi) = (centre - step, centre + step);
    while hi - lo > REFINEMENT_TOLERANCE {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if mag(m1) < mag(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(best.min(mag(0.5 * (lo + hi))))
}

/// Spectral summary of an impulse response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CirSummary {
    pub k: usize,
    /// `max_k |h_k|`
    pub l: f64,
    pub sum_abs: f64,
    pub h_min: f64,
    pub c1_ok: bool,
    pub c2_ok: bool,
}

pub fn validate_cir(cir: &ChannelImpulseResponse, h_min_tolerance: f64) -> Result<CirSummary> {
    if h_min_tolerance.is_nan() || h_min_tolerance <= 0.0 {
        return Err(Error::param("h_min tolerance must be positive"));
    }
    let h_min = cir.h_min();
    Ok(CirSummary {
        k: cir.len(),
        l: cir.max_abs_tap(),
        sum_abs: cir.sum_abs(),
        h_min,
        // a finite list of finite taps is always absolutely summable
        c1_ok: true,
        c2_ok: h_min > h_min_tolerance,
    })
}

pub(crate) fn check_kappa(kappa: f64) -> Result<()> {
    if (0.0..0.5).contains(&kappa) {
        Ok(())
    } else {
        Err(Error::param("kappa must lie in [0, 0.5)"))
    }
}

/// Tap count `K = floor(n^kappa)`, at least 1.
pub fn taps_count(n: usize, kappa: f64) -> Result<usize> {
    check_kappa(kappa)?;
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    let k = (n as f64).powf(kappa);
    // guard exact integer powers against rounding just below
    let k = (k + 1e-9).floor() as usize;
    Ok(k.max(1))
}

/// `(1 / 2pi) * integral |X(phi)|^2 dphi` by the trapezoidal rule on `points`
/// uniformly spaced nodes over one period.
pub fn spectral_energy(x: &[f64], points: usize) -> f64 {
    let step = 2.0 * PI / points as f64;
    // periodic integrand: the two trapezoid end weights merge into one node
    let sum: f64 = (0..points).map(|i| dtft(x, -PI + step * i as f64).norm_sqr()).sum();
    sum * step / (2.0 * PI)
}

/// Number of taps in a generator, either explicit or derived from `K = n^kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TapCount {
    Fixed(usize),
    Auto,
}

/// CIR as written in configuration files and on the command line.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CirSpec {
    Taps(Vec<f64>),
    #[default]
    Identity,
    /// `h_k = (K - k) / K`
    UniformDecay(TapCount),
    /// `h_k = ratio^k`
    Geometric(TapCount, f64),
}

impl CirSpec {
    /// Builds the impulse response; `auto` tap counts use `taps_count(n, kappa)`.
    pub fn resolve(&self, n: usize, kappa: f64) -> Result<ChannelImpulseResponse> {
        let count = |t: &TapCount| -> Result<usize> {
            match *t {
                TapCount::Fixed(k) => Ok(k),
                TapCount::Auto => taps_count(n, kappa),
            }
        };
        match self {
            CirSpec::Taps(t) => ChannelImpulseResponse::new(t.clone()),
            CirSpec::Identity => Ok(ChannelImpulseResponse::identity()),
            CirSpec::UniformDecay(t) => {
                let k = count(t)?;
                ChannelImpulseResponse::new((0..k).map(|i| (k - i) as f64 / k as f64).collect())
            }
            CirSpec::Geometric(t, ratio) => {
                let k = count(t)?;
                ChannelImpulseResponse::new((0..k).map(|i| ratio.powi(i as i32)).collect())
            }
        }
    }
}

fn parse_count(s: &str) -> Result<TapCount> {
    if s == "auto" {
        return Ok(TapCount::Auto);
    }
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(TapCount::Fixed(k)),
        _ => Err(Error::Parse(format!(
            "tap count must be a positive integer or 'auto', got '{s}'"
        ))),
    }
}

impl FromStr for CirSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["identity"] => Ok(CirSpec::Identity),
            ["uniform-decay", k] => Ok(CirSpec::UniformDecay(parse_count(k)?)),
            ["geometric", k, ratio] => {
                let ratio: f64 = ratio
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad geometric ratio '{ratio}'")))?;
                if ratio == 0.0 || !ratio.is_finite() {
                    return Err(Error::Parse("geometric ratio must be finite and nonzero".into()));
                }
                Ok(CirSpec::Geometric(parse_count(k)?, ratio))
            }
            _ => {
                let taps = s
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad CIR '{s}': expected a tap list or generator")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                ChannelImpulseResponse::new(taps.clone())?;
                Ok(CirSpec::Taps(taps))
            }
        }
    }
}

impl fmt::Display for CirSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let count = |t: &TapCount| match t {
            TapCount::Fixed(k) => k.to_string(),
            TapCount::Auto => "auto".to_string(),
        };
        match self {
            CirSpec::Taps(t) => {
                let parts: Vec<String> = t.iter().map(|h| h.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
            CirSpec::Identity => write!(f, "identity"),
            CirSpec::UniformDecay(t) => write!(f, "uniform-decay:{}", count(t)),
            CirSpec::Geometric(t, r) => write!(f, "geometric:{}:{}", count(t), r),
        }
    }
}

impl Serialize for CirSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CirSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
