//! Discrete-time Gaussian channel with inter-symbol interference:
//! `Y = x * h + Z` with `Z` i.i.d. `N(0, sigma_z2)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cir::{check_kappa, ChannelImpulseResponse};
use crate::error::{Error, Result};

/// Parameter tuple shared by the bounds, the codebook and the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParameters {
    /// Codeword length.
    pub n: usize,
    /// ISI rate, `K = n^kappa`.
    pub kappa: f64,
    /// Noise variance.
    pub sigma_z2: f64,
    /// Peak amplitude constraint `|c_t| <= p_max`.
    pub p_max: f64,
    pub a: f64,
    pub b: f64,
}

impl SystemParameters {
    pub fn new(n: usize, kappa: f64, sigma_z2: f64, p_max: f64, a: f64, b: f64) -> Result<Self> {
        let p = Self {
            n,
            kappa,
            sigma_z2,
            p_max,
            a,
            b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::param(format!("n must be at least 4 (got {})", self.n)));
        }
        check_kappa(self.kappa)?;
        let positive = [
            ("sigma_z2", self.sigma_z2),
            ("p_max", self.p_max),
            ("a", self.a),
            ("b", self.b),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive and finite (got {v})")));
            }
        }
        Ok(())
    }
}

/// One channel use: the codeword, its convolution with the CIR and the noisy output.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTranscript {
    pub input: Vec<f64>,
    pub convolved: Vec<f64>,
    pub output: Vec<f64>,
}

impl ChannelTranscript {
    /// `output - convolved`.
    pub fn noise(&self) -> Vec<f64> {
        self.output.iter().zip(&self.convolved).map(|(y, x)| y - x).collect()
    }
}

/// Full linear convolution, length `n + K - 1`.
pub fn convolve(codeword: &[f64], cir: &ChannelImpulseResponse) -> Result<Vec<f64>> {
    if codeword.is_empty() {
        return Err(Error::param("codeword must not be empty"));
    }
    Ok(convolve_into(codeword, cir.taps()))
}

pub(crate) fn convolve_into(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len() + h.len() - 1];
    for (t, &xt) in x.iter().enumerate() {
        for (k, &hk) in h.iter().enumerate() {
            out[t + k] += hk * xt;
        }
    }
    out
}

/// I.i.d. `N(0, sigma_z2)` samples drawn from `rng`.
pub fn sample_noise<R: Rng + ?Sized>(length: usize, sigma_z2: f64, rng: &mut R) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::param("noise length must be positive"));
    }
    if !(sigma_z2 > 0.0 && sigma_z2.is_finite()) {
        return Err(Error::param(format!("sigma_z2 must be positive (got {sigma_z2})")));
    }
    let sigma = sigma_z2.sqrt();
    Ok((0..length)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Sends `codeword` through the channel. `sigma_z2 = 0` gives a noiseless output.
pub fn transmit<R: Rng + ?Sized>(
    codeword: &[f64],
    cir: &ChannelImpulseResponse,
    sigma_z2: f64,
    rng: &mut R,
) -> Result<ChannelTranscript> {
    if !(sigma_z2 >= 0.0 && sigma_z2.is_finite()) {
        return Err(Error::param(format!("sigma_z2 must be nonnegative (got {sigma_z2})")));
    }
    let convolved = convolve(codeword, cir)?;
    let output = if sigma_z2 == 0.0 {
        convolved.clone()
    } else {
        let noise = sample_noise(convolved.len(), sigma_z2, rng)?;
        convolved.iter().zip(&noise).map(|(x, z)| x + z).collect()
    };
    Ok(ChannelTranscript {
        input: codeword.to_vec(),
        convolved,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, StreamKey};

    fn cir(t: &[f64]) -> ChannelImpulseResponse {
        ChannelImpulseResponse::new(t.to_vec()).unwrap()
    }

    #[test]
    fn convolution_hand_values() {
        assert_eq!(convolve(&[1.0, 2.0], &cir(&[1.0, 1.0])).unwrap(), vec![1.0, 3.0, 2.0]);
        assert_eq!(convolve(&[5.0, -3.0, 2.0], &cir(&[1.0])).unwrap(), vec![5.0, -3.0, 2.0]);
        assert_eq!(
            convolve(&[1.0, 0.0, 0.0], &cir(&[0.5, 0.25])).unwrap(),
            vec![0.5, 0.25, 0.0, 0.0]
        );
        assert!(convolve(&[], &cir(&[1.0])).is_err());
    }

    #[test]
    fn noise_is_reproducible() {
        let key = StreamKey::new(11, Domain::User);
        let a = sample_noise(32, 1.0, &mut key.stream(0)).unwrap();
        let b = sample_noise(32, 1.0, &mut key.stream(0)).unwrap();
        assert_eq!(a, b);
        assert!(sample_noise(3, 0.0, &mut key.stream(0)).is_err());
        assert!(sample_noise(0, 1.0, &mut key.stream(0)).is_err());
    }

    #[test]
    fn noise_moments() {
        let key = StreamKey::new(1, Domain::User);
        let z = sample_noise(1_000_000, 1.0, &mut key.stream(0)).unwrap();
        let var = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
        assert!((0.99..=1.01).contains(&var), "{var}");

        let z = sample_noise(1_000_000, 4.0, &mut key.stream(1)).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        assert!(mean.abs() <= 0.006, "{mean}");
    }

    #[test]
    fn noiseless_transmit_is_exact() {
        let key = StreamKey::new(0, Domain::User);
        let t = transmit(&[0.3, -0.7, 1.0], &cir(&[1.0, 0.5]), 0.0, &mut key.stream(0)).unwrap();
        assert_eq!(t.output, t.convolved);
        assert!(t.noise().iter().all(|&z| z == 0.0));
    }

    #[test]
    fn seeded_transmit_replays_the_stream() {
        let key = StreamKey::new(5, Domain::User);
        let t = transmit(&[1.0, 2.0], &cir(&[1.0, 1.0]), 1.0, &mut key.stream(9)).unwrap();
        let z = sample_noise(3, 1.0, &mut key.stream(9)).unwrap();
        assert_eq!(t.convolved, vec![1.0, 3.0, 2.0]);
        let expected: Vec<f64> = t.convolved.iter().zip(&z).map(|(x, z)| x + z).collect();
        assert_eq!(t.output, expected);
    }

    #[test]
    fn identity_channel_noise_statistics() {
        let key = StreamKey::new(2, Domain::User);
        let c: Vec<f64> = (0..100_000).map(|i| ((i % 7) as f64 - 3.0) / 3.0).collect();
        let t = transmit(&c, &ChannelImpulseResponse::identity(), 1.0, &mut key.stream(0)).unwrap();
        let z = t.noise();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // 4 standard errors
        assert!(mean.abs() < 4.0 / n.sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
    }

    #[test]
    fn parameters_validation() {
        assert!(SystemParameters::new(4, 0.0, 1.0, 1.0, 1.0, 0.1).is_ok());
        assert!(SystemParameters::new(3, 0.0, 1.0, 1.0, 1.0, 0.1).is_err());
        assert!(SystemParameters::new(10, 0.5, 1.0, 1.0, 1.0, 0.1).is_err());
        assert!(SystemParameters::new(10, 0.1, 0.0, 1.0, 1.0, 0.1).is_err());
        assert!(SystemParameters::new(10, 0.1, 1.0, -1.0, 1.0, 0.1).is_err());
        assert!(SystemParameters::new(10, 0.1, 1.0, 1.0, 1.0, 0.0).is_err());
    }
}
