//! Peak-constrained codebooks with a guaranteed minimum pairwise distance.
//!
//! The packing is built greedily: uniform candidates in the cube
//! `[-p_max, p_max]^n` are accepted when they keep distance at least `2 r0`
//! from every codeword accepted so far. Boundary touching is allowed and
//! spheres may protrude from the cube; only the centres are constrained.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::sphere_log_volume;
use crate::channel::convolve_into;
use crate::cir::ChannelImpulseResponse;
use crate::error::{Error, Result};
use crate::rng::{Domain, StreamKey};

pub const DEFAULT_CANDIDATE_BUDGET: usize = 100_000;

const CSV_MAGIC: &str = "# idisi-codebook v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    codewords: Vec<Vec<f64>>,
    p_max: f64,
    guaranteed_min_distance: f64,
}

impl Codebook {
    /// Wraps explicit rows. Only shape is checked here; use [`verify_codebook`]
    /// for the peak and distance invariants.
    pub fn from_rows(codewords: Vec<Vec<f64>>, p_max: f64) -> Result<Self> {
        Self::with_guarantee(codewords, p_max, 0.0)
    }

    fn with_guarantee(codewords: Vec<Vec<f64>>, p_max: f64, guaranteed_min_distance: f64) -> Result<Self> {
        if codewords.is_empty() {
            return Err(Error::Constraint("codebook needs at least one codeword".into()));
        }
        let n = codewords[0].len();
        if n == 0 {
            return Err(Error::Constraint("codewords must not be empty".into()));
        }
        if codewords.iter().any(|c| c.len() != n) {
            return Err(Error::Constraint("codewords differ in length".into()));
        }
        if codewords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Constraint("codeword entries must be finite".into()));
        }
        if p_max.is_nan() || p_max <= 0.0 {
            return Err(Error::param("p_max must be positive"));
        }
        Ok(Self {
            codewords,
            p_max,
            guaranteed_min_distance,
        })
    }

    pub fn codewords(&self) -> &[Vec<f64>] {
        &self.codewords
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        &self.codewords[i]
    }

    /// Number of codewords `M`.
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// Block length `n`.
    pub fn block_length(&self) -> usize {
        self.codewords[0].len()
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn guaranteed_min_distance(&self) -> f64 {
        self.guaranteed_min_distance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PackingStrategy {
    GreedyUniform,
    AxisGrid,
    /// Codewords supplied from a file; nothing is packed.
    Explicit,
}

impl FromStr for PackingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy-uniform" => Ok(Self::GreedyUniform),
            "axis-grid" => Ok(Self::AxisGrid),
            "explicit" => Ok(Self::Explicit),
            _ => Err(Error::Parse(format!("unknown packing strategy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingConfig {
    pub strategy: PackingStrategy,
    pub candidate_budget: usize,
    pub seed: u64,
}

impl Default for PackingConfig {
    fn default() -> Self {
        Self {
            strategy: PackingStrategy::GreedyUniform,
            candidate_budget: DEFAULT_CANDIDATE_BUDGET,
            seed: 0,
        }
    }
}

impl PackingConfig {
    pub fn greedy(candidate_budget: usize, seed: u64) -> Self {
        Self {
            strategy: PackingStrategy::GreedyUniform,
            candidate_budget,
            seed,
        }
    }
}

fn check_pack_args(n: usize, p_max: f64, r0: f64, config: &PackingConfig) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::param("p_max must be positive"));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::param("r0 must be positive"));
    }
    if config.candidate_budget == 0 {
        return Err(Error::param("candidate budget must be at least 1"));
    }
    Ok(())
}

/// True when `|x - y| >= min_dist`. Stops summing once the partial sum is
/// clearly past the threshold.
fn far_enough(x: &[f64], y: &[f64], min_dist: f64) -> bool {
    let early = min_dist * min_dist * (1.0 + 1e-12);
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        acc += d * d;
        if acc > early {
            return true;
        }
    }
    acc.sqrt() >= min_dist
}

fn candidate(key: &StreamKey, index: usize, n: usize, p_max: f64, out: &mut [f64]) {
    let mut rng = key.stream(index as u64);
    for v in out.iter_mut().take(n) {
        *v = rng.random_range(-p_max..=p_max);
    }
}

/// Greedy saturated-packing analog. Deterministic in `(seed, budget)`.
///
/// Candidate `i` is drawn from substream `i`. Candidates are visited from the
/// outside in (decreasing distance from the cube centre, ties by index); in one
/// dimension this fills `[-p_max, p_max]` to its maximum of
/// `floor(p_max / r0) + 1` points.
pub fn greedy_pack(n: usize, p_max: f64, r0: f64, config: &PackingConfig) -> Result<Codebook> {
    check_pack_args(n, p_max, r0, config)?;
    let key = StreamKey::new(config.seed, Domain::Packing);
    let mut order: Vec<(f64, usize)> = (0..config.candidate_budget)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, i| {
                candidate(&key, i, n, p_max, buf);
                (buf.iter().map(|v| v * v).sum::<f64>(), i)
            },
        )
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let min_dist = 2.0 * r0;
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    let mut buf = vec![0.0; n];
    for &(_, i) in &order {
        candidate(&key, i, n, p_max, &mut buf);
        if accepted.iter().all(|c| far_enough(c, &buf, min_dist)) {
            accepted.push(buf.clone());
        }
    }
    Codebook::with_guarantee(accepted, p_max, min_dist)
}

/// Cartesian grid with spacing `2 r0` starting at `-p_max` on every axis,
/// enumerated lexicographically and truncated to the candidate budget.
pub fn axis_grid_pack(n: usize, p_max: f64, r0: f64, config: &PackingConfig) -> Result<Codebook> {
    check_pack_args(n, p_max, r0, config)?;
    let spacing = 2.0 * r0;
    let levels: Vec<f64> = (0..)
        .map(|k| -p_max + spacing * k as f64)
        .take_while(|v| *v <= p_max)
        .collect();
    let per_axis = levels.len();
    let mut idx = vec![0usize; n];
    let mut rows = Vec::new();
    'outer: while rows.len() < config.candidate_budget {
        rows.push(idx.iter().map(|&i| levels[i]).collect());
        for pos in (0..n).rev() {
            idx[pos] += 1;
            if idx[pos] < per_axis {
                continue 'outer;
            }
            idx[pos] = 0;
        }
        break;
    }
    Codebook::with_guarantee(rows, p_max, spacing)
}

/// Dispatches on the configured strategy.
pub fn pack(n: usize, p_max: f64, r0: f64, config: &PackingConfig) -> Result<Codebook> {
    match config.strategy {
        PackingStrategy::GreedyUniform => greedy_pack(n, p_max, r0, config),
        PackingStrategy::AxisGrid => axis_grid_pack(n, p_max, r0, config),
        PackingStrategy::Explicit => Err(Error::param("explicit codebooks are read from a file, not packed")),
    }
}

/// Two codewords `+v(1,...,1)` and `-v(1,...,1)` at distance exactly `2 r0`
/// (the smallest representable `v` with `2 v sqrt(n) >= 2 r0`).
pub fn stress_pair(n: usize, p_max: f64, r0: f64) -> Result<Codebook> {
    check_pack_args(n, p_max, r0, &PackingConfig::default())?;
    let target = 2.0 * r0;
    let dist = |v: f64| distance(&vec![v; n], &vec![-v; n]);
    let mut v = r0 / (n as f64).sqrt();
    while dist(v) < target {
        v = v.next_up();
    }
    if v > p_max {
        return Err(Error::param(format!(
            "a pair at distance 2 r0 = {target} needs amplitude {v} > p_max = {p_max}"
        )));
    }
    Codebook::with_guarantee(vec![vec![v; n], vec![-v; n]], p_max, target)
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Closest pair `(i, j, distance)` with `i < j`.
fn closest_pair(rows: &[Vec<f64>]) -> Option<(usize, usize, f64)> {
    (0..rows.len())
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..rows.len()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, distance(&rows[i], &rows[j])))
        .reduce_with(|a, b| {
            // total order: distance, then indices, so the reduction is schedule independent
            if (b.2, b.0, b.1) < (a.2, a.0, a.1) {
                b
            } else {
                a
            }
        })
}

/// Exact minimum pairwise Euclidean distance.
pub fn min_pairwise_distance(codebook: &Codebook) -> Result<f64> {
    if codebook.len() < 2 {
        return Err(Error::domain("minimum distance undefined for a single codeword"));
    }
    Ok(closest_pair(&codebook.codewords).map(|p| p.2).unwrap())
}

/// Every codeword convolved with the CIR; rows have length `n + K - 1`.
pub fn convolve_codebook(codebook: &Codebook, cir: &ChannelImpulseResponse) -> Vec<Vec<f64>> {
    codebook
        .codewords
        .iter()
        .map(|c| convolve_into(c, cir.taps()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub peak_ok: bool,
    /// First `(codeword, position)` exceeding the peak constraint.
    pub peak_witness: Option<(usize, usize)>,
    pub distance_ok: bool,
    pub min_distance: f64,
    pub distance_witness: Option<(usize, usize)>,
    pub convolved_ok: bool,
    pub convolved_min_distance: f64,
    pub convolved_witness: Option<(usize, usize)>,
}

impl VerificationReport {
    pub fn all_ok(&self) -> bool {
        self.peak_ok && self.distance_ok && self.convolved_ok
    }
}

/// Brute-force check of the peak constraint, the `2 r0` distance of the
/// codebook and the `2 h_min r0` distance of its convolved image.
pub fn verify_codebook(
    codebook: &Codebook,
    cir: &ChannelImpulseResponse,
    r0: f64,
    h_min: f64,
) -> Result<VerificationReport> {
    if codebook.len() < 2 {
        return Err(Error::domain("minimum distance undefined for a single codeword"));
    }
    let p_max = codebook.p_max;
    let peak_witness = codebook
        .codewords
        .iter()
        .enumerate()
        .find_map(|(i, c)| c.iter().position(|v| v.abs() > p_max).map(|t| (i, t)));

    let (di, dj, dmin) = closest_pair(&codebook.codewords).unwrap();
    let distance_ok = dmin >= 2.0 * r0;

    let conv = convolve_codebook(codebook, cir);
    let (ci, cj, cmin) = closest_pair(&conv).unwrap();
    // h_min is a sampled spectral value, so allow round-off at the 1e-9 level
    let convolved_ok = cmin >= 2.0 * h_min * r0 * (1.0 - 1e-9);

    Ok(VerificationReport {
        peak_ok: peak_witness.is_none(),
        peak_witness,
        distance_ok,
        min_distance: dmin,
        distance_witness: (!distance_ok).then_some((di, dj)),
        convolved_ok,
        convolved_min_distance: cmin,
        convolved_witness: (!convolved_ok).then_some((ci, cj)),
    })
}

/// Empirical packing density in log2, using the unclipped sphere volume, next
/// to the saturated-packing window `[-n, -0.599 n]`. Informational only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PackingDensity {
    pub log2_density: f64,
    pub log2_lower: f64,
    pub log2_upper: f64,
}

pub fn packing_density(codebook: &Codebook, r0: f64) -> PackingDensity {
    let n = codebook.block_length();
    let log2_density =
        (codebook.len() as f64).log2() + sphere_log_volume(n, r0) - n as f64 * (2.0 * codebook.p_max).log2();
    PackingDensity {
        log2_density,
        log2_lower: -(n as f64),
        log2_upper: -0.599 * n as f64,
    }
}

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Codebook CSV: one header comment line, then one codeword per row.
pub fn write_codebook_csv<W: Write>(codebook: &Codebook, r0: f64, seed: u64, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{CSV_MAGIC}, n={}, p_max={}, r0={}, seed={}",
        codebook.block_length(),
        fmt_f64(codebook.p_max),
        fmt_f64(r0),
        seed
    )?;
    let mut line = String::new();
    for c in &codebook.codewords {
        line.clear();
        for (t, v) in c.iter().enumerate() {
            if t > 0 {
                line.push(',');
            }
            write!(line, "{}", fmt_f64(*v)).unwrap();
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Header fields of a codebook file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookHeader {
    pub n: usize,
    pub p_max: f64,
    pub r0: f64,
    pub seed: u64,
}

fn parse_header(line: &str) -> Result<CodebookHeader> {
    let rest = line
        .strip_prefix(CSV_MAGIC)
        .ok_or_else(|| Error::Parse(format!("expected '{CSV_MAGIC}' header")))?;
    let mut n = None;
    let mut p_max = None;
    let mut r0 = None;
    let mut seed = None;
    for field in rest.split(',').map(str::trim).filter(|f| !f.is_empty()) {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field '{field}'")))?;
        let bad = || Error::Parse(format!("bad header value '{field}'"));
        match key {
            "n" => n = Some(value.parse().map_err(|_| bad())?),
            "p_max" => p_max = Some(value.parse().map_err(|_| bad())?),
            "r0" => r0 = Some(value.parse().map_err(|_| bad())?),
            "seed" => seed = Some(value.parse().map_err(|_| bad())?),
            _ => return Err(Error::Parse(format!("unknown header field '{key}'"))),
        }
    }
    let missing = |k: &str| Error::Parse(format!("header is missing '{k}'"));
    Ok(CodebookHeader {
        n: n.ok_or_else(|| missing("n"))?,
        p_max: p_max.ok_or_else(|| missing("p_max"))?,
        r0: r0.ok_or_else(|| missing("r0"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
    })
}

pub fn read_codebook_csv<R: BufRead>(input: R) -> Result<(Codebook, CodebookHeader)> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => parse_header(line?.trim_end())?,
        None => return Err(Error::Parse("empty codebook file".into())),
    };
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad value '{v}'", lineno + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.n {
            return Err(Error::Parse(format!(
                "line {}: expected {} values, found {}",
                lineno + 2,
                header.n,
                row.len()
            )));
        }
        rows.push(row);
    }
    let codebook = Codebook::with_guarantee(rows, header.p_max, 2.0 * header.r0)?;
    Ok((codebook, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cb(rows: &[&[f64]], p_max: f64) -> Codebook {
        Codebook::from_rows(rows.iter().map(|r| r.to_vec()).collect(), p_max).unwrap()
    }

    #[test]
    fn one_dimensional_packing_reaches_three() {
        let book = greedy_pack(1, 1.0, 0.4, &PackingConfig::greedy(100_000, 0)).unwrap();
        assert_eq!(book.len(), 3);
    }

    #[test]
    fn oversized_sphere_admits_one_codeword() {
        let book = greedy_pack(2, 1.0, 10.0, &PackingConfig::greedy(1000, 3)).unwrap();
        assert_eq!(book.len(), 1);
    }

    #[test]
    fn packing_is_deterministic() {
        let cfg = PackingConfig::greedy(2000, 42);
        let a = greedy_pack(4, 1.0, 0.5, &cfg).unwrap();
        let b = greedy_pack(4, 1.0, 0.5, &cfg).unwrap();
        assert_eq!(a, b);
        let c = greedy_pack(4, 1.0, 0.5, &PackingConfig::greedy(2000, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn min_distance_hand_values() {
        assert_eq!(
            min_pairwise_distance(&cb(&[&[0.0, 0.0], &[3.0, 4.0]], 5.0)).unwrap(),
            5.0
        );
        assert_eq!(min_pairwise_distance(&cb(&[&[0.0], &[1.0], &[3.0]], 5.0)).unwrap(), 1.0);
        assert!(matches!(
            min_pairwise_distance(&cb(&[&[0.0]], 1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn convolve_codebook_rows() {
        let book = cb(&[&[1.0, 2.0]], 2.0);
        let h = ChannelImpulseResponse::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(convolve_codebook(&book, &h), vec![vec![1.0, 3.0, 2.0]]);
        let book = cb(&[&[0.1, -0.2], &[0.3, 0.9]], 1.0);
        assert_eq!(
            convolve_codebook(&book, &ChannelImpulseResponse::identity()),
            book.codewords
        );
    }

    #[test]
    fn verify_flags_peak_violation() {
        let book = cb(&[&[0.0, 0.0], &[1.5, 0.0]], 1.0);
        let rep = verify_codebook(&book, &ChannelImpulseResponse::identity(), 0.1, 1.0).unwrap();
        assert!(!rep.peak_ok);
        assert_eq!(rep.peak_witness, Some((1, 0)));
    }

    #[test]
    fn verify_flags_short_distance() {
        let r0 = 0.3;
        let book = cb(&[&[0.0, 0.0], &[2.0 * r0 - 1e-3, 0.0]], 1.0);
        let rep = verify_codebook(&book, &ChannelImpulseResponse::identity(), r0, 1.0).unwrap();
        assert!(rep.peak_ok);
        assert!(!rep.distance_ok);
        assert_eq!(rep.distance_witness, Some((0, 1)));
    }

    #[test]
    fn verify_passes_on_greedy_output() {
        let r0 = 0.35;
        let book = greedy_pack(3, 1.0, r0, &PackingConfig::greedy(5000, 1)).unwrap();
        assert!(book.len() >= 2);
        let h = ChannelImpulseResponse::new(vec![1.0, 0.5]).unwrap();
        let rep = verify_codebook(&book, &h, r0, h.h_min()).unwrap();
        assert!(rep.all_ok(), "{rep:?}");
        assert!(verify_codebook(&cb(&[&[0.0]], 1.0), &h, r0, 0.5).is_err());
    }

    #[test]
    fn axis_grid_spacing() {
        let cfg = PackingConfig {
            strategy: PackingStrategy::AxisGrid,
            candidate_budget: 1000,
            seed: 0,
        };
        let book = pack(2, 1.0, 0.5, &cfg).unwrap();
        // levels -1, 0, 1 per axis
        assert_eq!(book.len(), 9);
        assert_eq!(min_pairwise_distance(&book).unwrap(), 1.0);
        let capped = pack(
            2,
            1.0,
            0.5,
            &PackingConfig {
                candidate_budget: 4,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(capped.len(), 4);
        let explicit = PackingConfig {
            strategy: PackingStrategy::Explicit,
            ..cfg
        };
        assert!(pack(2, 1.0, 0.5, &explicit).is_err());
    }

    #[test]
    fn stress_pair_distance_is_two_r0() {
        let r0 = (1000.0f64 * 10.0 / 1000f64.powf(0.4)).sqrt();
        let book = stress_pair(1000, 1.0, r0).unwrap();
        let d = min_pairwise_distance(&book).unwrap();
        assert!(d >= 2.0 * r0);
        assert!((d - 2.0 * r0).abs() <= 1e-12 * r0);
        assert!(stress_pair(4, 1.0, 5.0).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let book = greedy_pack(5, 1.3, 0.6, &PackingConfig::greedy(500, 9)).unwrap();
        let mut buf = Vec::new();
        write_codebook_csv(&book, 0.6, 9, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# idisi-codebook v1, n=5, p_max="));
        let (back, header) = read_codebook_csv(buf.as_slice()).unwrap();
        assert_eq!(back.codewords(), book.codewords());
        assert_eq!(header.r0, 0.6);
        assert_eq!(header.seed, 9);
        assert_eq!(header.p_max, 1.3);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(read_codebook_csv("".as_bytes()).is_err());
        assert!(read_codebook_csv("n=2\n1,2\n".as_bytes()).is_err());
        let bad_width = "# idisi-codebook v1, n=2, p_max=1, r0=0.1, seed=0\n0.1,0.2,0.3\n";
        assert!(read_codebook_csv(bad_width.as_bytes()).is_err());
    }

    #[test]
    fn density_report_is_finite() {
        let book = greedy_pack(2, 1.0, 0.3, &PackingConfig::greedy(2000, 0)).unwrap();
        let d = packing_density(&book, 0.3);
        assert!(d.log2_density.is_finite());
        assert_eq!(d.log2_lower, -2.0);
    }
}
