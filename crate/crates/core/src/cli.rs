//! Command-line experiment runner.
//!
//! Four subcommands: `run` executes a single protocol and writes its
//! transcript, `sweep` enumerates all 2-party coalitions across a range of
//! ring sizes into a CSV, `montecarlo` estimates leakage probabilities for
//! random coalitions, and `verify` checks the whole claim suite.
//!
//! Every option can also come from a flat `key=value` config file; flags
//! override config-file values, which override the documented defaults.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rayon::prelude::*;

use crate::adversary::{
    exhaustive_pair_sweep, leakage_report, monte_carlo_leakage, Coalition, SweepCell,
};
use crate::claims;
use crate::engine::{run_protocol, Config, ProtocolKind};
use crate::modular::{Modulus, Residue, DEFAULT_MODULUS};
use crate::shares::seeded_stream;

const DEFAULT_SEED: u64 = 0;
const DEFAULT_TRIALS: usize = 10_000;
const DEFAULT_COALITION_SIZE: usize = 2;

#[derive(Debug, Parser)]
#[command(
    name = "secure-sum-lab",
    version,
    about = "Simulate ring-based secure sum protocols and analyze collusion leakage"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute one protocol run and print the announced sum
    Run(RunArgs),
    /// Exhaustive 2-coalition leakage sweep over a range of ring sizes
    Sweep(SweepArgs),
    /// Estimate leakage probability for random coalitions
    Montecarlo(MonteArgs),
    /// Check the quantitative claim suite and print a PASS/FAIL table
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Protocol kind: clifton, ksecure or ck
    #[arg(long)]
    protocol: Option<ProtocolKind>,
    /// Arithmetic modulus M (default 2^61 - 1)
    #[arg(long)]
    modulus: Option<u64>,
    /// Master seed for all randomness (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Start segmented rounds with a random initiator mask
    #[arg(long)]
    initiator_mask: bool,
    /// Flat key=value config file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; holds the transcript (run), CSV (sweep) or JSON report
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of parties
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated inputs, or "random"
    #[arg(long)]
    inputs: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Ring size or inclusive range, e.g. 5 or 4..8
    #[arg(long)]
    n: Option<String>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct MonteArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of parties
    #[arg(long)]
    n: Option<usize>,
    /// Number of sampled coalitions (default 10000)
    #[arg(long)]
    trials: Option<usize>,
    /// Coalition size to sample (default 2)
    #[arg(long)]
    coalition_size: Option<usize>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Arithmetic modulus M (default 2^61 - 1)
    #[arg(long)]
    modulus: Option<u64>,
    /// Master seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
}

/// Entry point; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => cmd_run(args).map(|()| 0),
        Command::Sweep(args) => cmd_sweep(args).map(|()| 0),
        Command::Montecarlo(args) => cmd_montecarlo(args).map(|()| 0),
        Command::Verify(args) => cmd_verify(args),
    }
}

/// Values loaded from a `key=value` config file.
struct FileValues(HashMap<String, String>);

impl FileValues {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    anyhow!("{}:{}: expected key=value", path.display(), lineno + 1)
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileValues(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key '{key}': {e}")),
        }
    }
}

fn resolve<T>(flag: Option<T>, file: Option<T>, default: Option<T>, key: &str) -> Result<T> {
    flag.or(file)
        .or(default)
        .ok_or_else(|| anyhow!("missing required option --{key}"))
}

fn resolve_modulus(flag: Option<u64>, file: &FileValues) -> Result<Modulus> {
    let value = resolve(flag, file.get("modulus")?, Some(DEFAULT_MODULUS), "modulus")?;
    Ok(Modulus::new(value)?)
}

fn resolve_mask(flag: bool, file: &FileValues) -> Result<bool> {
    Ok(if flag {
        true
    } else {
        file.get("initiator-mask")?.unwrap_or(false)
    })
}

fn resolve_out(flag: Option<PathBuf>, file: &FileValues) -> Result<Option<PathBuf>> {
    Ok(flag.or(file.get("out")?))
}

/// Write the whole file in one shot via a sibling temp file, so failed
/// commands leave no partial output behind.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn install_pool(jobs: Option<usize>) -> Result<()> {
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("initializing worker pool")?;
    }
    Ok(())
}

fn parse_inputs(spec: &str, n: usize, modulus: Modulus, seed: u64) -> Result<Vec<Residue>> {
    if spec == "random" {
        let mut rng = seeded_stream(seed, n as u64 + 1);
        return Ok((0..n).map(|_| rng.gen_range(0..modulus.get())).collect());
    }
    spec.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|e| anyhow!("invalid input '{part}': {e}"))
        })
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let file = FileValues::load(args.common.config.as_deref())?;
    let kind: ProtocolKind = resolve(
        args.common.protocol,
        file.get("protocol")?,
        None,
        "protocol",
    )?;
    let modulus = resolve_modulus(args.common.modulus, &file)?;
    let seed = resolve(args.common.seed, file.get("seed")?, Some(DEFAULT_SEED), "seed")?;
    let inputs_spec: String = resolve(args.inputs, file.get("inputs")?, None, "inputs")?;
    let n = match resolve(args.n, file.get("n")?, Some(0), "n")? {
        0 if inputs_spec != "random" => inputs_spec.split(',').count(),
        0 => bail!("missing required option --n"),
        n => n,
    };
    let mask = resolve_mask(args.common.initiator_mask, &file)?;
    let out = resolve_out(args.common.out, &file)?;

    let inputs = parse_inputs(&inputs_spec, n, modulus, seed)?;
    if inputs.len() != n {
        bail!("got {} inputs for n = {n}", inputs.len());
    }
    let config = Config::new(n, modulus, kind, seed).with_initiator_mask(mask);
    let run = run_protocol(&config, &inputs)?;
    if let Some(path) = &out {
        write_atomic(path, &run.transcript.to_text())?;
    }
    println!("announced {}", run.announced());
    Ok(())
}

fn parse_range(spec: &str) -> Result<std::ops::RangeInclusive<usize>> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|e| anyhow!("range start: {e}"))?;
        let hi: usize = hi.trim().parse().map_err(|e| anyhow!("range end: {e}"))?;
        if lo > hi {
            bail!("empty range {spec}");
        }
        Ok(lo..=hi)
    } else {
        let n: usize = spec.trim().parse().map_err(|e| anyhow!("ring size: {e}"))?;
        Ok(n..=n)
    }
}

fn sweep_csv(cells_by_n: &[(usize, Vec<SweepCell>)], kind: ProtocolKind) -> String {
    let mut csv = String::from("n,protocol,coalition,victim,leaked,segments_learned\n");
    for (n, cells) in cells_by_n {
        for cell in cells {
            let _ = writeln!(
                csv,
                "{n},{kind},{}+{},{},{},{}",
                cell.coalition[0], cell.coalition[1], cell.victim, cell.leaked,
                cell.segments_learned
            );
        }
        // aggregate rows: leaked count and segments_learned total per class
        for (class, is_initiator) in [("initiator", true), ("middle", false)] {
            let class_cells = cells
                .iter()
                .filter(|c| c.victim.is_initiator() == is_initiator);
            let (mut leaked, mut segments) = (0usize, 0usize);
            for cell in class_cells {
                leaked += usize::from(cell.leaked);
                segments += cell.segments_learned;
            }
            let _ = writeln!(csv, "{n},{kind},ALL,{class},{leaked},{segments}");
        }
    }
    csv
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let file = FileValues::load(args.common.config.as_deref())?;
    let kind: ProtocolKind = resolve(
        args.common.protocol,
        file.get("protocol")?,
        None,
        "protocol",
    )?;
    let modulus = resolve_modulus(args.common.modulus, &file)?;
    let seed = resolve(args.common.seed, file.get("seed")?, Some(DEFAULT_SEED), "seed")?;
    let range_spec: String = resolve(args.n, file.get("n")?, None, "n")?;
    let mask = resolve_mask(args.common.initiator_mask, &file)?;
    let out = resolve_out(args.common.out, &file)?;
    install_pool(args.jobs.or(file.get("jobs")?))?;

    let sizes: Vec<usize> = parse_range(&range_spec)?.collect();
    let mut cells_by_n: Vec<(usize, Vec<SweepCell>)> = sizes
        .par_iter()
        .map(|&n| {
            let config = Config::new(n, modulus, kind, seed).with_initiator_mask(mask);
            exhaustive_pair_sweep(&config).map(|cells| (n, cells))
        })
        .collect::<Result<_, _>>()?;
    // canonical order regardless of worker scheduling
    cells_by_n.sort_by_key(|(n, _)| *n);
    let csv = sweep_csv(&cells_by_n, kind);
    match &out {
        Some(path) => write_atomic(path, &csv)?,
        None => print!("{csv}"),
    }
    let leaked: usize = cells_by_n
        .iter()
        .flat_map(|(_, cells)| cells)
        .filter(|c| c.leaked)
        .count();
    eprintln!("sweep complete: {leaked} leaking cells");
    Ok(())
}

fn cmd_montecarlo(args: MonteArgs) -> Result<()> {
    let file = FileValues::load(args.common.config.as_deref())?;
    let kind: ProtocolKind = resolve(
        args.common.protocol,
        file.get("protocol")?,
        None,
        "protocol",
    )?;
    let modulus = resolve_modulus(args.common.modulus, &file)?;
    let seed = resolve(args.common.seed, file.get("seed")?, Some(DEFAULT_SEED), "seed")?;
    let n = resolve(args.n, file.get("n")?, None, "n")?;
    let trials = resolve(
        args.trials,
        file.get("trials")?,
        Some(DEFAULT_TRIALS),
        "trials",
    )?;
    let coalition_size = resolve(
        args.coalition_size,
        file.get("coalition-size")?,
        Some(DEFAULT_COALITION_SIZE),
        "coalition-size",
    )?;
    let mask = resolve_mask(args.common.initiator_mask, &file)?;
    let out = resolve_out(args.common.out, &file)?;
    install_pool(args.jobs.or(file.get("jobs")?))?;

    let config = Config::new(n, modulus, kind, seed).with_initiator_mask(mask);
    let result = monte_carlo_leakage(&config, trials, coalition_size)?;
    if let Some(path) = &out {
        write_atomic(path, &result.to_json())?;
    }
    println!(
        "initiator: p={:.6} stderr={:.6} ({}/{})",
        result.initiator.probability,
        result.initiator.std_error,
        result.initiator.leaked,
        result.initiator.observations
    );
    println!(
        "middle: p={:.6} stderr={:.6} ({}/{})",
        result.middle.probability,
        result.middle.std_error,
        result.middle.leaked,
        result.middle.observations
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let modulus = Modulus::new(args.modulus.unwrap_or(DEFAULT_MODULUS))?;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let reports = claims::all_claims(modulus, seed);
    let mut all_pass = true;
    for report in &reports {
        let verdict = if report.pass { "PASS" } else { "FAIL" };
        println!("{verdict}  {:<45}  {}", report.name, report.detail);
        all_pass &= report.pass;
    }
    println!(
        "{} of {} claims hold",
        reports.iter().filter(|r| r.pass).count(),
        reports.len()
    );
    Ok(if all_pass { 0 } else { 1 })
}

/// Report a single coalition; exposed for ad-hoc use from tests and docs.
pub fn coalition_report_json(
    config: &Config,
    inputs: &[Residue],
    members: &[usize],
) -> Result<String> {
    let coalition = Coalition::of(members, config.n)?;
    Ok(leakage_report(config, inputs, &coalition)?.to_json())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("4..8").unwrap(), 4..=8);
        assert_eq!(parse_range("5").unwrap(), 5..=5);
        assert!(parse_range("8..4").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn inputs_parsing() {
        let m = Modulus::new(97).unwrap();
        assert_eq!(parse_inputs("1, 2,3", 3, m, 0).unwrap(), vec![1, 2, 3]);
        assert!(parse_inputs("1,x", 2, m, 0).is_err());
        let r = parse_inputs("random", 4, m, 7).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|&v| v < 97));
        assert_eq!(r, parse_inputs("random", 4, m, 7).unwrap());
    }

    #[test]
    fn file_values_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lab.conf");
        fs::write(&path, "# comment\nprotocol = ck\nseed=9\n\nn=6\n").unwrap();
        let file = FileValues::load(Some(&path)).unwrap();
        // flag wins over file, file wins over default
        let seed = resolve(Some(3u64), file.get("seed").unwrap(), Some(0), "seed").unwrap();
        assert_eq!(seed, 3);
        let seed = resolve(None, file.get("seed").unwrap(), Some(0u64), "seed").unwrap();
        assert_eq!(seed, 9);
        let kind: ProtocolKind =
            resolve(None, file.get("protocol").unwrap(), None, "protocol").unwrap();
        assert_eq!(kind, ProtocolKind::CkSecureSum);
    }

    #[test]
    fn malformed_file_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        fs::write(&path, "protocol ck\n").unwrap();
        assert!(FileValues::load(Some(&path)).is_err());
    }
}
