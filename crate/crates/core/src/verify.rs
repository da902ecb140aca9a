//! Built-in property suite run by `idisi verify`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::convolve_into;
use crate::cir::{spectral_energy, ChannelImpulseResponse};
use crate::codebook::{greedy_pack, PackingConfig};
use crate::decoder::decoding_measure;
use crate::experiments::estimate_type1;
use crate::rng::{Domain, StreamKey};
use crate::{codebook::Codebook, decoder::DecoderConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, amp: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-amp..=amp)).collect()
}

/// Random CIR with `K <= max_taps` whose spectral minimum exceeds `floor`.
pub fn random_admissible_cir(rng: &mut ChaCha8Rng, max_taps: usize, floor: f64) -> ChannelImpulseResponse {
    loop {
        let k = rng.random_range(1..=max_taps);
        let mut taps = uniform_vec(rng, k, 1.0);
        // keep the end taps away from zero
        taps[0] = taps[0].signum() * taps[0].abs().max(0.05);
        taps[k - 1] = taps[k - 1].signum() * taps[k - 1].abs().max(0.05);
        if let Ok(cir) = ChannelImpulseResponse::new(taps) {
            if cir.h_min() > floor {
                return cir;
            }
        }
    }
}

/// Energy of random sequences against trapezoidal quadrature of `|X(phi)|^2`.
pub fn check_parseval(sequences: usize, seed: u64) -> CheckResult {
    let key = StreamKey::new(seed, Domain::Verify);
    let mut worst = 0.0f64;
    for s in 0..sequences {
        let mut rng = key.stream(s as u64);
        let len = rng.random_range(1..=64);
        let x = uniform_vec(&mut rng, len, 1.0);
        let direct: f64 = x.iter().map(|v| v * v).sum();
        let quad = spectral_energy(&x, 1 << 14);
        worst = worst.max((quad - direct).abs() / direct);
    }
    CheckResult {
        name: "parseval",
        passed: worst < 1e-6,
        detail: format!("{sequences} sequences, worst relative error {worst:.3e}"),
    }
}

/// Convolution shrinks pairwise distances by at most `h_min`.
pub fn check_min_distance_under_convolution(pairs: usize, cirs: usize, seed: u64) -> CheckResult {
    let key = StreamKey::new(seed, Domain::Verify).child(1);
    let mut violations = 0usize;
    let mut worst_ratio = f64::INFINITY;
    for c in 0..cirs {
        let mut rng = key.stream(c as u64);
        let cir = random_admissible_cir(&mut rng, 8, 0.1);
        let h_min = cir.h_min();
        for _ in 0..pairs {
            let n = rng.random_range(1..=64);
            let x = uniform_vec(&mut rng, n, 1.0);
            let y = uniform_vec(&mut rng, n, 1.0);
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let cx = convolve_into(&x, cir.taps());
            let cy = convolve_into(&y, cir.taps());
            let cdiff: Vec<f64> = cx.iter().zip(&cy).map(|(a, b)| a - b).collect();
            let lhs = norm(&cdiff);
            let rhs = h_min * norm(&diff);
            worst_ratio = worst_ratio.min(lhs / rhs);
            if lhs < rhs * (1.0 - 1e-9) {
                violations += 1;
            }
        }
    }
    CheckResult {
        name: "convolved-distance",
        passed: violations == 0,
        detail: format!(
            "{} pairs over {cirs} CIRs, {violations} violations, smallest ratio {worst_ratio:.6}",
            pairs * cirs
        ),
    }
}

/// Greedy packing on `[-1, 1]` with spacing 0.8 fills the 3 available slots.
pub fn check_packing_oracle(seed: u64) -> CheckResult {
    let book = greedy_pack(1, 1.0, 0.4, &PackingConfig::greedy(100_000, seed));
    match book {
        Ok(b) => CheckResult {
            name: "packing-oracle",
            passed: b.len() == 3,
            detail: format!("M = {} (1-D maximum 3)", b.len()),
        },
        Err(e) => CheckResult {
            name: "packing-oracle",
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Mean and variance of the decoding measure under the true hypothesis.
pub fn check_decoder_statistics(n: usize, trials: u64, seed: u64) -> CheckResult {
    let fail = |detail: String| CheckResult {
        name: "decoder-statistics",
        passed: false,
        detail,
    };
    let book = match Codebook::from_rows(vec![vec![0.0; n]], 1.0) {
        Ok(b) => b,
        Err(e) => return fail(e.to_string()),
    };
    let dec = DecoderConfig {
        delta_n: 1.0,
        sigma_z2: 1.0,
    };
    let out = match estimate_type1(&book, &ChannelImpulseResponse::identity(), &dec, trials, seed) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string()),
    };
    let nominal = 3.0 / n as f64;
    let mean_tol = 4.0 * (nominal / trials as f64).sqrt();
    let passed = out.measure_mean.abs() <= mean_tol && out.measure_variance <= 1.1 * nominal;
    CheckResult {
        name: "decoder-statistics",
        passed,
        detail: format!(
            "mean {:.3e} (|.| <= {mean_tol:.3e}), variance {:.3e} (<= {:.3e})",
            out.measure_mean,
            out.measure_variance,
            1.1 * nominal
        ),
    }
}

/// `T(y, c) = -sigma^2` when the observation equals the codeword.
fn check_measure_floor() -> CheckResult {
    let c = [0.25, -0.5, 1.0];
    let t = decoding_measure(&c, &c, 0.75).unwrap_or(f64::NAN);
    CheckResult {
        name: "measure-floor",
        passed: t == -0.75,
        detail: format!("T = {t}"),
    }
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        check_parseval(100, seed),
        check_min_distance_under_convolution(1000, 20, seed),
        check_packing_oracle(seed),
        check_decoder_statistics(2000, 10_000, seed),
        check_measure_floor(),
    ]
}
