//! Monte Carlo estimation of the identification error probabilities and
//! parameter sweeps.
//!
//! Trial `t` of a run always draws from substream `t` of the run's key, and
//! counts are summed in trial order, so results do not depend on how many
//! worker threads execute the trials.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{achievability_parameters, capacity_interval, counting_bounds, error_probability_bounds};
use crate::channel::{transmit, SystemParameters};
use crate::cir::{validate_cir, ChannelImpulseResponse, CirSpec, DEFAULT_H_MIN_TOLERANCE};
use crate::codebook::{convolve_codebook, fmt_f64, pack, read_codebook_csv, stress_pair, Codebook, PackingConfig};
use crate::decoder::{identify, DecoderConfig};
use crate::error::{Error, Result};
use crate::rng::{Domain, StreamKey};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Largest codebook for which every ordered pair may be enumerated.
pub const EXHAUSTIVE_MAX_M: usize = 64;

/// Failure frequency with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub failures: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ErrorEstimate {
    pub fn new(failures: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        if failures > trials {
            return Err(Error::param("failures cannot exceed trials"));
        }
        let n = trials as f64;
        let p = failures as f64 / n;
        let z2 = Z95 * Z95;
        let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
        let half = Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Ok(Self {
            failures,
            trials,
            p_hat: p,
            ci_low: (centre - half).clamp(0.0, p),
            ci_high: (centre + half).clamp(p, 1.0),
        })
    }

    pub fn wilson_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// Type I estimate plus the sample moments of the decoding measure under the
/// true hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeOneOutcome {
    pub estimate: ErrorEstimate,
    pub measure_mean: f64,
    pub measure_variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeTwoOutcome {
    pub estimate: ErrorEstimate,
    /// `(sent, tested)` pair with the highest acceptance rate.
    pub worst_pair: (usize, usize),
    pub worst_rate: f64,
    pub pairs: usize,
}

fn check_shapes(codebook: &Codebook, conv: &[Vec<f64>]) {
    debug_assert_eq!(codebook.len(), conv.len());
}

/// Missed identification: send `c_i` for a uniform `i`, fail when the
/// decoder for `i` rejects.
pub fn estimate_type1(
    codebook: &Codebook,
    cir: &ChannelImpulseResponse,
    decoder: &DecoderConfig,
    trials: u64,
    seed: u64,
) -> Result<TypeOneOutcome> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let conv = convolve_codebook(codebook, cir);
    check_shapes(codebook, &conv);
    let key = StreamKey::new(seed, Domain::TypeOne);
    let m = codebook.len();

    let results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = key.stream(t);
            let i = rng.random_range(0..m);
            let sent = transmit(codebook.codeword(i), cir, decoder.sigma_z2, &mut rng)?;
            let d = identify(&sent.output, &conv[i], decoder)?;
            Ok((d.measure, !d.accepted()))
        })
        .collect::<Result<Vec<(f64, bool)>>>()?;

    let failures = results.iter().filter(|r| r.1).count() as u64;
    let n = results.len() as f64;
    let mean = results.iter().map(|r| r.0).sum::<f64>() / n;
    let variance = if results.len() > 1 {
        results.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(TypeOneOutcome {
        estimate: ErrorEstimate::new(failures, trials)?,
        measure_mean: mean,
        measure_variance: variance,
    })
}

/// Ordered pairs `(i, j)`, `i != j`, drawn uniformly.
pub fn sample_pairs(m: usize, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if m < 2 {
        return Err(Error::domain("type II error needs at least two codewords"));
    }
    let mut rng = StreamKey::new(seed, Domain::TypeTwoPairs).stream(0);
    Ok((0..count)
        .map(|_| {
            let i = rng.random_range(0..m);
            let j = rng.random_range(0..m - 1);
            (i, if j >= i { j + 1 } else { j })
        })
        .collect())
}

pub fn all_pairs(m: usize) -> Result<Vec<(usize, usize)>> {
    if m < 2 {
        return Err(Error::domain("type II error needs at least two codewords"));
    }
    if m > EXHAUSTIVE_MAX_M {
        return Err(Error::param(format!(
            "exhaustive pair enumeration is limited to M <= {EXHAUSTIVE_MAX_M} (M = {m})"
        )));
    }
    Ok((0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect())
}

/// False identification over explicit `(sent, tested)` pairs, `trials_per_pair`
/// transmissions each.
pub fn estimate_type2_pairs(
    codebook: &Codebook,
    cir: &ChannelImpulseResponse,
    decoder: &DecoderConfig,
    pairs: &[(usize, usize)],
    trials_per_pair: u64,
    seed: u64,
) -> Result<TypeTwoOutcome> {
    let m = codebook.len();
    if m < 2 {
        return Err(Error::domain("type II error needs at least two codewords"));
    }
    if pairs.is_empty() || trials_per_pair == 0 {
        return Err(Error::param("need at least one pair and one trial per pair"));
    }
    for &(i, j) in pairs {
        if i == j {
            return Err(Error::domain(format!(
                "type II pair ({i}, {j}) must name distinct codewords"
            )));
        }
        if i >= m || j >= m {
            return Err(Error::domain(format!("pair ({i}, {j}) out of range for M = {m}")));
        }
    }
    let conv = convolve_codebook(codebook, cir);
    let key = StreamKey::new(seed, Domain::TypeTwoTrials);

    let per_pair = pairs
        .par_iter()
        .enumerate()
        .map(|(p, &(i, j))| {
            (0..trials_per_pair)
                .into_par_iter()
                .map(|t| {
                    let mut rng = key.stream(p as u64 * trials_per_pair + t);
                    let sent = transmit(codebook.codeword(i), cir, decoder.sigma_z2, &mut rng)?;
                    Ok(identify(&sent.output, &conv[j], decoder)?.accepted() as u64)
                })
                .collect::<Result<Vec<u64>>>()
                .map(|v| v.iter().sum::<u64>())
        })
        .collect::<Result<Vec<u64>>>()?;

    let failures: u64 = per_pair.iter().sum();
    let (worst, &worst_count) =
        per_pair
            .iter()
            .enumerate()
            .fold((0, &per_pair[0]), |acc, (p, c)| if *c > *acc.1 { (p, c) } else { acc });
    Ok(TypeTwoOutcome {
        estimate: ErrorEstimate::new(failures, trials_per_pair * pairs.len() as u64)?,
        worst_pair: pairs[worst],
        worst_rate: worst_count as f64 / trials_per_pair as f64,
        pairs: pairs.len(),
    })
}

/// False identification: `pair_sample` sampled pairs (or all pairs when
/// `exhaustive`), each run `trials / pairs` times.
pub fn estimate_type2(
    codebook: &Codebook,
    cir: &ChannelImpulseResponse,
    decoder: &DecoderConfig,
    trials: u64,
    pair_sample: usize,
    exhaustive: bool,
    seed: u64,
) -> Result<TypeTwoOutcome> {
    if trials == 0 || pair_sample == 0 {
        return Err(Error::param("trials and pair sample must be at least 1"));
    }
    let pairs = if exhaustive {
        all_pairs(codebook.len())?
    } else {
        sample_pairs(codebook.len(), pair_sample, seed)?
    };
    let per_pair = (trials / pairs.len() as u64).max(1);
    estimate_type2_pairs(codebook, cir, decoder, &pairs, per_pair, seed)
}

/// Where a trial's codebook comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookSource {
    Pack(PackingConfig),
    File(PathBuf),
    /// Two codewords at distance exactly `2 r0`.
    StressPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub params: SystemParameters,
    pub cir: CirSpec,
    pub codebook: CodebookSource,
    pub trials: u64,
    pub pair_sample: usize,
    pub seed: u64,
    #[serde(default)]
    pub exhaustive: bool,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        if self.pair_sample == 0 {
            return Err(Error::param("pair sample must be at least 1"));
        }
        Ok(())
    }
}

/// One completed sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: SystemParameters,
    pub cir: String,
    pub h_min: f64,
    pub k: usize,
    pub m: usize,
    pub epsilon_n: f64,
    pub delta_n: f64,
    pub r0: f64,
    pub eta0_paper: f64,
    pub eta0_exact: f64,
    pub zeta_paper: f64,
    pub zeta_exact: f64,
    pub type1: TypeOneOutcome,
    /// Absent when the codebook has a single codeword.
    pub type2: Option<TypeTwoOutcome>,
    pub capacity_lower: f64,
    pub capacity_upper: f64,
    pub r_lower: f64,
    pub r_upper: f64,
    pub wall_seconds: f64,
}

fn load_codebook(config: &TrialConfig, r0: f64) -> Result<Codebook> {
    let p = &config.params;
    let book = match &config.codebook {
        CodebookSource::Pack(packing) => pack(p.n, p.p_max, r0, packing)?,
        CodebookSource::StressPair => stress_pair(p.n, p.p_max, r0)?,
        CodebookSource::File(path) => {
            let file = std::fs::File::open(path)?;
            read_codebook_csv(std::io::BufReader::new(file))?.0
        }
    };
    if book.block_length() != p.n {
        return Err(Error::param(format!(
            "codebook block length {} does not match n = {}",
            book.block_length(),
            p.n
        )));
    }
    Ok(book)
}

/// Runs a single configuration: bounds, codebook, and both error estimates.
pub fn run_trial(config: &TrialConfig) -> Result<SweepRow> {
    let start = Instant::now();
    config.validate()?;
    let p = config.params;
    let cir = config.cir.resolve(p.n, p.kappa)?;
    let summary = validate_cir(&cir, DEFAULT_H_MIN_TOLERANCE)?;
    if !summary.c2_ok {
        return Err(Error::param(format!(
            "impulse response spectrum is not bounded away from zero (h_min = {:e})",
            summary.h_min
        )));
    }
    let q = achievability_parameters(&p, summary.h_min, summary.k)?;
    let bounds = error_probability_bounds(&p, summary.h_min, summary.l, summary.k)?;
    let counting = counting_bounds(&p, summary.h_min, summary.l, summary.k)?;
    let (capacity_lower, capacity_upper) = capacity_interval(p.kappa)?;

    let book = load_codebook(config, q.r0)?;
    let decoder = DecoderConfig::new(q.delta_n, p.sigma_z2)?;
    let type1 = estimate_type1(&book, &cir, &decoder, config.trials, config.seed)?;
    let type2 = if book.len() >= 2 {
        Some(estimate_type2(
            &book,
            &cir,
            &decoder,
            config.trials,
            config.pair_sample,
            config.exhaustive,
            config.seed,
        )?)
    } else {
        None
    };

    Ok(SweepRow {
        params: p,
        cir: config.cir.to_string(),
        h_min: summary.h_min,
        k: summary.k,
        m: book.len(),
        epsilon_n: q.epsilon_n,
        delta_n: q.delta_n,
        r0: q.r0,
        eta0_paper: bounds.eta0_paper,
        eta0_exact: bounds.eta0_exact,
        zeta_paper: bounds.zeta0_paper + bounds.zeta1_paper,
        zeta_exact: bounds.zeta0_exact + bounds.zeta1_exact,
        type1,
        type2,
        capacity_lower,
        capacity_upper,
        r_lower: counting.r_lower,
        r_upper: counting.r_upper,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// A sweep row: either a result or the error that aborted that configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub config: TrialConfig,
    pub outcome: std::result::Result<SweepRow, String>,
}

/// Runs every configuration in grid order on `threads` workers (0 = all cores).
pub fn run_sweep(grid: &[TrialConfig], threads: usize) -> Result<Vec<SweepRecord>> {
    if grid.is_empty() {
        return Err(Error::param("sweep grid is empty"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        grid.iter()
            .map(|config| SweepRecord {
                config: config.clone(),
                outcome: run_trial(config).map_err(|e| e.to_string()),
            })
            .collect()
    }))
}

pub const CSV_COLUMNS: &[&str] = &[
    "n",
    "kappa",
    "a",
    "b",
    "sigma_z2",
    "p_max",
    "cir",
    "h_min",
    "k",
    "m",
    "epsilon_n",
    "delta_n",
    "r0",
    "eta0_paper",
    "eta0_exact",
    "zeta_paper",
    "zeta_exact",
    "p1_failures",
    "p1_trials",
    "p1_hat",
    "p1_ci_low",
    "p1_ci_high",
    "t_mean",
    "t_variance",
    "p2_failures",
    "p2_trials",
    "p2_hat",
    "p2_ci_low",
    "p2_ci_high",
    "p2_worst_i",
    "p2_worst_j",
    "p2_worst_rate",
    "capacity_lower",
    "capacity_upper",
    "r_lower",
    "r_upper",
];

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Header row. `wall_seconds` is only present with `timing`, since it breaks
/// byte-for-byte reproducibility.
pub fn csv_header(timing: bool) -> String {
    let mut cols: Vec<&str> = CSV_COLUMNS.to_vec();
    if timing {
        cols.push("wall_seconds");
    }
    cols.push("error");
    cols.join(",")
}

pub fn csv_row(record: &SweepRecord, timing: bool) -> String {
    let p = &record.config.params;
    let mut f: Vec<String> = vec![
        p.n.to_string(),
        fmt_f64(p.kappa),
        fmt_f64(p.a),
        fmt_f64(p.b),
        fmt_f64(p.sigma_z2),
        fmt_f64(p.p_max),
        csv_quote(&record.config.cir.to_string()),
    ];
    let width = CSV_COLUMNS.len() + timing as usize;
    match &record.outcome {
        Ok(r) => {
            let e1 = &r.type1.estimate;
            f.extend([
                fmt_f64(r.h_min),
                r.k.to_string(),
                r.m.to_string(),
                fmt_f64(r.epsilon_n),
                fmt_f64(r.delta_n),
                fmt_f64(r.r0),
                fmt_f64(r.eta0_paper),
                fmt_f64(r.eta0_exact),
                fmt_f64(r.zeta_paper),
                fmt_f64(r.zeta_exact),
                e1.failures.to_string(),
                e1.trials.to_string(),
                fmt_f64(e1.p_hat),
                fmt_f64(e1.ci_low),
                fmt_f64(e1.ci_high),
                fmt_f64(r.type1.measure_mean),
                fmt_f64(r.type1.measure_variance),
            ]);
            match &r.type2 {
                Some(t2) => {
                    let e2 = &t2.estimate;
                    f.extend([
                        e2.failures.to_string(),
                        e2.trials.to_string(),
                        fmt_f64(e2.p_hat),
                        fmt_f64(e2.ci_low),
                        fmt_f64(e2.ci_high),
                        t2.worst_pair.0.to_string(),
                        t2.worst_pair.1.to_string(),
                        fmt_f64(t2.worst_rate),
                    ]);
                }
                None => f.extend(std::iter::repeat_n(String::new(), 8)),
            }
            f.extend([
                fmt_f64(r.capacity_lower),
                fmt_f64(r.capacity_upper),
                fmt_f64(r.r_lower),
                fmt_f64(r.r_upper),
            ]);
            if timing {
                f.push(fmt_f64(r.wall_seconds));
            }
            f.push(String::new());
        }
        Err(msg) => {
            f.resize(width, String::new());
            f.push(csv_quote(msg));
        }
    }
    f.join(",")
}

pub fn write_csv<W: Write>(records: &[SweepRecord], timing: bool, mut out: W) -> Result<()> {
    writeln!(out, "{}", csv_header(timing))?;
    for r in records {
        writeln!(out, "{}", csv_row(r, timing))?;
    }
    Ok(())
}

/// JSON mirror of the CSV: one object per record.
pub fn records_to_json(records: &[SweepRecord], timing: bool) -> serde_json::Value {
    let rows = records
        .iter()
        .map(|rec| match &rec.outcome {
            Ok(row) => {
                let mut v = serde_json::to_value(row).expect("rows serialize");
                if !timing {
                    v.as_object_mut().unwrap().remove("wall_seconds");
                }
                v
            }
            Err(msg) => serde_json::json!({
                "params": rec.config.params,
                "cir": rec.config.cir.to_string(),
                "error": msg,
            }),
        })
        .collect();
    serde_json::Value::Array(rows)
}
