//! Deterministic identification over discrete-time Gaussian channels with
//! inter-symbol interference.
//!
//! The crate builds peak-constrained codebooks with a guaranteed minimum
//! distance, simulates the ISI channel `Y = x * h + Z`, runs the threshold
//! identification decoder, and evaluates the closed-form error, rate and
//! codebook-size bounds so they can be compared against Monte Carlo
//! frequencies.

pub mod bounds;
pub mod channel;
pub mod cir;
pub mod cli;
pub mod codebook;
pub mod decoder;
pub mod error;
pub mod experiments;
pub mod rng;
pub mod verify;

pub use bounds::{
    achievability_parameters, capacity_interval, counting_bounds, error_probability_bounds, sphere_log_volume,
    AchievabilityQuantities, BoundsReport, CountingBounds, ErrorBoundSet,
};
pub use channel::{convolve, sample_noise, transmit, ChannelTranscript, SystemParameters};
pub use cir::{compute_h_min, evaluate_dtft, taps_count, validate_cir, ChannelImpulseResponse, CirSpec, CirSummary};
pub use codebook::{
    convolve_codebook, greedy_pack, min_pairwise_distance, stress_pair, verify_codebook, Codebook, PackingConfig,
    PackingStrategy, VerificationReport,
};
pub use decoder::{decoding_measure, identify, Decision, DecoderConfig, Verdict};
pub use error::{Error, Result};
pub use experiments::{
    estimate_type1, estimate_type2, run_sweep, run_trial, CodebookSource, ErrorEstimate, SweepRecord, SweepRow,
    TrialConfig, TypeOneOutcome, TypeTwoOutcome,
};
pub use rng::{Domain, StreamKey};
