//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::bounds::{achievability_parameters, bounds_report};
use crate::channel::SystemParameters;
use crate::cir::{validate_cir, CirSpec, DEFAULT_H_MIN_TOLERANCE};
use crate::codebook::{
    min_pairwise_distance, pack, packing_density, write_codebook_csv, PackingConfig, PackingStrategy,
};
use crate::error::{Error, Result};
use crate::experiments::{csv_header, csv_row, records_to_json, run_trial, CodebookSource, SweepRecord, TrialConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_BAD_PARAMETERS: i32 = 2;

const LOG_NOTE: &str = "All logarithms (log M bounds, rates) are base 2.";

#[derive(Debug, Parser)]
#[command(
    name = "idisi",
    version,
    about = "Deterministic identification over ISI Gaussian channels",
    after_help = LOG_NOTE
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print every closed-form quantity as a flat JSON object
    #[command(after_help = LOG_NOTE)]
    Bounds(CommonArgs),
    /// Pack a codebook and write it as CSV
    #[command(after_help = LOG_NOTE)]
    Pack(CommonArgs),
    /// Run one Monte Carlo configuration and print its result row
    #[command(after_help = LOG_NOTE)]
    Simulate(CommonArgs),
    /// Run a parameter grid (comma-separated values expand to a product) and stream CSV rows
    #[command(after_help = LOG_NOTE)]
    Sweep(CommonArgs),
    /// Run the built-in property suite; exits 1 on any failure
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Master seed for the randomized checks
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Codeword length (sweep: comma-separated list)
    #[arg(long)]
    n: Option<String>,
    /// ISI rate in [0, 0.5) (sweep: list)
    #[arg(long)]
    kappa: Option<String>,
    /// Constant a > 0 in epsilon_n (sweep: list)
    #[arg(long)]
    a: Option<String>,
    /// Slack constant b > 0 (sweep: list)
    #[arg(long)]
    b: Option<String>,
    /// Noise variance (sweep: list)
    #[arg(long = "sigma-z2")]
    sigma_z2: Option<String>,
    /// Peak amplitude constraint (sweep: list)
    #[arg(long = "p-max")]
    p_max: Option<String>,
    /// Tap list "1,0.5" or generator: identity | uniform-decay:<K|auto> | geometric:<K|auto>:<ratio>
    #[arg(long, allow_hyphen_values = true)]
    cir: Option<String>,
    /// Monte Carlo trials per error type
    #[arg(long)]
    trials: Option<u64>,
    /// Number of (i, j) pairs sampled for the type II estimate
    #[arg(long)]
    pairs: Option<usize>,
    /// Candidate budget of the packing
    #[arg(long)]
    budget: Option<usize>,
    /// Codebook source: greedy-uniform | axis-grid | stress-pair | file:<path>
    #[arg(long)]
    codebook: Option<String>,
    /// Packing radius for `pack` (default: the achievability radius r0)
    #[arg(long)]
    r0: Option<f64>,
    /// Master seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for simulate and sweep
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Enumerate all ordered pairs for the type II estimate (M <= 64)
    #[arg(long)]
    exhaustive: bool,
    /// Add a wall_seconds column (output is then no longer reproducible)
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Contents of a `--config` JSON file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<OneOrMany<usize>>,
    kappa: Option<OneOrMany<f64>>,
    a: Option<OneOrMany<f64>>,
    b: Option<OneOrMany<f64>>,
    sigma_z2: Option<OneOrMany<f64>>,
    p_max: Option<OneOrMany<f64>>,
    cir: Option<CirSpec>,
    trials: Option<u64>,
    pairs: Option<usize>,
    budget: Option<usize>,
    codebook: Option<String>,
    r0: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    exhaustive: Option<bool>,
    timing: Option<bool>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: Vec<usize>,
    pub kappa: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub sigma_z2: Vec<f64>,
    pub p_max: Vec<f64>,
    pub cir: CirSpec,
    pub trials: u64,
    pub pairs: usize,
    pub budget: usize,
    pub codebook: String,
    pub r0: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub json: bool,
    pub exhaustive: bool,
    pub timing: bool,
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("--{flag}: cannot parse '{}'", v.trim())))
        })
        .collect()
}

impl RunConfig {
    fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::param(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        fn pick<T: std::str::FromStr + Clone>(
            flag: &str,
            cli: &Option<String>,
            file: Option<OneOrMany<T>>,
            default: T,
        ) -> Result<Vec<T>> {
            match cli {
                Some(s) => parse_list(flag, s),
                None => Ok(file.map(OneOrMany::into_vec).unwrap_or_else(|| vec![default])),
            }
        }
        let cir = match &args.cir {
            Some(s) => s.parse()?,
            None => file.cir.unwrap_or_default(),
        };
        Ok(Self {
            n: pick("n", &args.n, file.n, 1000)?,
            kappa: pick("kappa", &args.kappa, file.kappa, 0.0)?,
            a: pick("a", &args.a, file.a, 10.0)?,
            b: pick("b", &args.b, file.b, 0.2)?,
            sigma_z2: pick("sigma-z2", &args.sigma_z2, file.sigma_z2, 1.0)?,
            p_max: pick("p-max", &args.p_max, file.p_max, 1.0)?,
            cir,
            trials: args.trials.or(file.trials).unwrap_or(10_000),
            pairs: args.pairs.or(file.pairs).unwrap_or(16),
            budget: args
                .budget
                .or(file.budget)
                .unwrap_or(crate::codebook::DEFAULT_CANDIDATE_BUDGET),
            codebook: args
                .codebook
                .clone()
                .or(file.codebook)
                .unwrap_or_else(|| "greedy-uniform".into()),
            r0: args.r0.or(file.r0),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out),
            json: args.format.or(file.format).unwrap_or(Format::Csv) == Format::Json,
            exhaustive: args.exhaustive || file.exhaustive.unwrap_or(false),
            timing: args.timing || file.timing.unwrap_or(false),
        })
    }

    fn codebook_source(&self) -> Result<CodebookSource> {
        if let Some(path) = self.codebook.strip_prefix("file:") {
            return Ok(CodebookSource::File(PathBuf::from(path)));
        }
        if self.codebook == "stress-pair" {
            return Ok(CodebookSource::StressPair);
        }
        let strategy: PackingStrategy = self.codebook.parse()?;
        if strategy == PackingStrategy::Explicit {
            return Err(Error::param("use --codebook file:<path> for explicit codebooks"));
        }
        Ok(CodebookSource::Pack(PackingConfig {
            strategy,
            candidate_budget: self.budget,
            seed: self.seed,
        }))
    }

    /// Cartesian product of all list-valued parameters, `n` outermost.
    pub fn grid(&self) -> Result<Vec<TrialConfig>> {
        let source = self.codebook_source()?;
        let mut grid = Vec::new();
        for &n in &self.n {
            for &kappa in &self.kappa {
                for &a in &self.a {
                    for &b in &self.b {
                        for &sigma_z2 in &self.sigma_z2 {
                            for &p_max in &self.p_max {
                                grid.push(TrialConfig {
                                    params: SystemParameters {
                                        n,
                                        kappa,
                                        sigma_z2,
                                        p_max,
                                        a,
                                        b,
                                    },
                                    cir: self.cir.clone(),
                                    codebook: source.clone(),
                                    trials: self.trials,
                                    pair_sample: self.pairs,
                                    seed: self.seed,
                                    exhaustive: self.exhaustive,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(grid)
    }

    fn single(&self) -> Result<TrialConfig> {
        let mut grid = self.grid()?;
        if grid.len() != 1 {
            return Err(Error::param(
                "this subcommand takes a single value per parameter; use `sweep` for lists",
            ));
        }
        Ok(grid.remove(0))
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

/// Worker count from `IDISI_THREADS` (0 or unset = all cores).
pub fn threads_from_env() -> Result<usize> {
    match std::env::var("IDISI_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::param(format!("IDISI_THREADS must be a nonnegative integer (got '{v}')"))),
        _ => Ok(0),
    }
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads_from_env()?)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn cmd_bounds(cfg: &RunConfig) -> Result<()> {
    let t = cfg.single()?;
    let cir = t.cir.resolve(t.params.n, t.params.kappa)?;
    t.params.validate()?;
    let report = bounds_report(&t.params, &cir, DEFAULT_H_MIN_TOLERANCE)?;
    let mut out = cfg.output()?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    out.flush()?;
    Ok(())
}

fn cmd_pack(cfg: &RunConfig) -> Result<()> {
    let t = cfg.single()?;
    let p = t.params;
    p.validate()?;
    let r0 = match cfg.r0 {
        Some(r) => r,
        None => {
            let cir = t.cir.resolve(p.n, p.kappa)?;
            let s = validate_cir(&cir, DEFAULT_H_MIN_TOLERANCE)?;
            if !s.c2_ok {
                return Err(Error::param("impulse response spectrum is not bounded away from zero"));
            }
            achievability_parameters(&p, s.h_min, s.k)?.r0
        }
    };
    let packing = match t.codebook {
        CodebookSource::Pack(pc) => pc,
        _ => return Err(Error::param("pack needs --codebook greedy-uniform or axis-grid")),
    };
    let book = pack(p.n, p.p_max, r0, &packing)?;
    let mut out = cfg.output()?;
    write_codebook_csv(&book, r0, cfg.seed, &mut out)?;
    out.flush()?;
    let density = packing_density(&book, r0);
    let dmin = min_pairwise_distance(&book)
        .map(|d| d.to_string())
        .unwrap_or_else(|_| "n/a".into());
    eprintln!(
        "packed M = {} codewords, n = {}, r0 = {r0}, min distance = {dmin}, log2 density = {:.3} (saturated window [{}, {}])",
        book.len(),
        p.n,
        density.log2_density,
        density.log2_lower,
        density.log2_upper
    );
    Ok(())
}

fn emit_records(cfg: &RunConfig, records: &[SweepRecord]) -> Result<()> {
    let mut out = cfg.output()?;
    if cfg.json {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&records_to_json(records, cfg.timing))?
        )?;
    } else {
        writeln!(out, "{}", csv_header(cfg.timing))?;
        for r in records {
            writeln!(out, "{}", csv_row(r, cfg.timing))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let t = cfg.single()?;
    let row = with_pool(|| run_trial(&t))??;
    emit_records(
        cfg,
        &[SweepRecord {
            config: t,
            outcome: Ok(row),
        }],
    )
}

fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let grid = cfg.grid()?;
    if cfg.json {
        let records = crate::experiments::run_sweep(&grid, threads_from_env()?)?;
        return emit_records(cfg, &records);
    }
    let mut out = cfg.output()?;
    writeln!(out, "{}", csv_header(cfg.timing))?;
    out.flush()?;
    for config in grid {
        let outcome = with_pool(|| run_trial(&config))?.map_err(|e| e.to_string());
        let record = SweepRecord { config, outcome };
        writeln!(out, "{}", csv_row(&record, cfg.timing))?;
        out.flush()?;
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let results = with_pool(|| crate::verify::run_all(args.seed.unwrap_or(0)))?;
    let mut ok = true;
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        ok &= r.passed;
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Bounds(a) => cmd_bounds(&RunConfig::resolve(&a)?)?,
        Command::Pack(a) => cmd_pack(&RunConfig::resolve(&a)?)?,
        Command::Simulate(a) => cmd_simulate(&RunConfig::resolve(&a)?)?,
        Command::Sweep(a) => cmd_sweep(&RunConfig::resolve(&a)?)?,
        Command::Verify(a) => {
            return Ok(if cmd_verify(&a)? { EXIT_OK } else { EXIT_VERIFY_FAILED });
        }
    }
    Ok(EXIT_OK)
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return EXIT_BAD_PARAMETERS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BAD_PARAMETERS
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> CommonArgs {
        let mut full = vec!["idisi", "sweep"];
        full.extend_from_slice(v);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Sweep(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn grid_expands_lists_in_order() {
        let cfg = RunConfig::resolve(&args(&["--n", "200,500", "--kappa", "0,0.1"])).unwrap();
        let grid = cfg.grid().unwrap();
        let ns: Vec<(usize, f64)> = grid.iter().map(|t| (t.params.n, t.params.kappa)).collect();
        assert_eq!(ns, vec![(200, 0.0), (200, 0.1), (500, 0.0), (500, 0.1)]);
        assert!(cfg.single().is_err());
    }

    #[test]
    fn flags_override_file_and_unknown_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"n": [100, 200], "sigma_z2": 2.0, "cir": "1,0.5"}"#).unwrap();
        let p = path.to_str().unwrap();
        let cfg = RunConfig::resolve(&args(&["--config", p, "--n", "300"])).unwrap();
        assert_eq!(cfg.n, vec![300]);
        assert_eq!(cfg.sigma_z2, vec![2.0]);
        assert_eq!(cfg.cir, CirSpec::Taps(vec![1.0, 0.5]));

        std::fs::write(&path, r#"{"n": 100, "noise": 2.0}"#).unwrap();
        assert!(RunConfig::resolve(&args(&["--config", p])).is_err());
    }

    #[test]
    fn codebook_sources() {
        let src = |s: &str| RunConfig::resolve(&args(&["--codebook", s])).unwrap().codebook_source();
        assert!(matches!(src("stress-pair").unwrap(), CodebookSource::StressPair));
        assert!(matches!(src("file:/tmp/x.csv").unwrap(), CodebookSource::File(_)));
        assert!(matches!(src("axis-grid").unwrap(), CodebookSource::Pack(_)));
        assert!(src("explicit").is_err());
        assert!(src("nonsense").is_err());
    }

    #[test]
    fn negative_taps_parse_as_values() {
        let cfg = RunConfig::resolve(&args(&["--cir", "-1,0.5"])).unwrap();
        assert_eq!(cfg.cir, CirSpec::Taps(vec![-1.0, 0.5]));
    }
}
