//! Threshold identification decoder.
//!
//! For a target message `j` the decoder computes
//! `T(y, c_j^h) = |y - c_j^h|^2 / n_bar - sigma_z2` and accepts iff
//! `|T| <= delta_n`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoderConfig {
    pub delta_n: f64,
    pub sigma_z2: f64,
}

impl DecoderConfig {
    pub fn new(delta_n: f64, sigma_z2: f64) -> Result<Self> {
        if !(delta_n > 0.0 && delta_n.is_finite()) {
            return Err(Error::param(format!("delta_n must be positive (got {delta_n})")));
        }
        if !(sigma_z2 >= 0.0 && sigma_z2.is_finite()) {
            return Err(Error::param(format!("sigma_z2 must be nonnegative (got {sigma_z2})")));
        }
        Ok(Self { delta_n, sigma_z2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub measure: f64,
}

impl Decision {
    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }
}

pub fn decoding_measure(y: &[f64], c_h: &[f64], sigma_z2: f64) -> Result<f64> {
    if y.len() != c_h.len() {
        return Err(Error::param(format!(
            "observation has length {} but the convolved codeword has length {}",
            y.len(),
            c_h.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::param("observation must not be empty"));
    }
    let residual: f64 = y.iter().zip(c_h).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(residual / y.len() as f64 - sigma_z2)
}

/// Accepts on `|T| <= delta_n`, boundary included.
pub fn identify(y: &[f64], c_h: &[f64], config: &DecoderConfig) -> Result<Decision> {
    let measure = decoding_measure(y, c_h, config.sigma_z2)?;
    let verdict = if measure.abs() <= config.delta_n {
        Verdict::Accept
    } else {
        Verdict::Reject
    };
    Ok(Decision { verdict, measure })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_hand_values() {
        let c = [0.3, -1.0, 2.0, 0.5];
        assert_eq!(decoding_measure(&c, &c, 0.7).unwrap(), -0.7);
        let y: Vec<f64> = c.iter().map(|v| v + 1.0).collect();
        assert!((decoding_measure(&y, &c, 1.0).unwrap()).abs() < 1e-15);
        let y = [c[0] + 2.0, c[1], c[2], c[3]];
        assert!((decoding_measure(&y, &c, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(decoding_measure(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn identify_hand_values() {
        let c = [0.0; 4];
        let y = [1.0; 4];
        let d = identify(&y, &c, &DecoderConfig::new(1e-9, 1.0).unwrap()).unwrap();
        assert!(d.accepted());
        assert_eq!(d.measure, 0.0);

        let d = identify(&c, &c, &DecoderConfig::new(0.05, 1.0).unwrap()).unwrap();
        assert_eq!(d.verdict, Verdict::Reject);

        let d = identify(&y, &c, &DecoderConfig::new(0.6, 0.5).unwrap()).unwrap();
        assert!(d.accepted());
        assert_eq!(d.measure, 0.5);
    }

    #[test]
    fn boundary_is_accepted() {
        let c = [0.0; 4];
        let y = [1.0, 1.0, 0.0, 0.0];
        // T = 0.5 - 0.25 = 0.25 exactly
        let d = identify(&y, &c, &DecoderConfig::new(0.25, 0.25).unwrap()).unwrap();
        assert!(d.accepted());
    }

    #[test]
    fn measure_is_shift_invariant_and_symmetric() {
        let y = [0.5, -0.25, 1.0];
        let c = [0.25, 0.0, -0.5];
        let s = [2.0, -4.0, 8.0];
        let ys: Vec<f64> = y.iter().zip(&s).map(|(a, b)| a + b).collect();
        let cs: Vec<f64> = c.iter().zip(&s).map(|(a, b)| a + b).collect();
        assert_eq!(
            decoding_measure(&y, &c, 1.0).unwrap(),
            decoding_measure(&ys, &cs, 1.0).unwrap()
        );
        let mirrored: Vec<f64> = y.iter().zip(&c).map(|(yv, cv)| 2.0 * cv - yv).collect();
        assert_eq!(
            decoding_measure(&y, &c, 1.0).unwrap(),
            decoding_measure(&mirrored, &c, 1.0).unwrap()
        );
    }

    #[test]
    fn config_validation() {
        assert!(DecoderConfig::new(0.0, 1.0).is_err());
        assert!(DecoderConfig::new(0.1, -1.0).is_err());
    }
}
