//! Batch runs of `k(p, n)` over ranges of primes.
//!
//! Cases are `(p, n)` pairs with `n` an odd divisor of `p - 1`, optionally
//! restricted to `n > p^epsilon`. Each case runs independently on a rayon pool
//! of `workers` threads; results come back ordered by `(p, n)` whatever the
//! completion order, so output files are byte-identical across worker counts.
//! Wall-clock timings are the one nondeterministic field and are only recorded
//! when `timing` is set.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsums::{empirical_delta, expsum_profile};
use crate::modmath::{build_prime_context, factorize, primes_in_range};
use crate::residues::{compute_k, roots_of_unity_subgroup, Caps, Sandwich};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NPolicy {
    AllOddDivisors,
    LargestOddDivisor,
    Fixed(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub p_min: u64,
    pub p_max: u64,
    pub n_min: u64,
    /// Keep only cases with `n > p^epsilon`; 0 admits every `n > 1`.
    pub epsilon: f64,
    pub n_policy: NPolicy,
    pub with_expsums: bool,
    pub workers: usize,
    pub caps: Caps,
    /// Record per-case wall-clock time in `elapsed_ms`.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            p_min: 5,
            p_max: 1000,
            n_min: 3,
            epsilon: 0.0,
            n_policy: NPolicy::AllOddDivisors,
            with_expsums: false,
            workers: 1,
            caps: Caps::default(),
            timing: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p_min < 5 {
            return Err(Error::BadConfig(format!(
                "p_min must be at least 5, got {}",
                self.p_min
            )));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::BadConfig(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if self.workers == 0 {
            return Err(Error::BadConfig("workers must be at least 1".into()));
        }
        if self.p_max < self.p_min {
            return Err(Error::EmptyRange(format!(
                "p_max {} is below p_min {}",
                self.p_max, self.p_min
            )));
        }
        Ok(())
    }
}

/// Odd divisors of `m`, ascending.
pub fn odd_divisors(m: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (q, e) in factorize(m).into_iter().filter(|&(q, _)| q != 2) {
        let base = divs.clone();
        let mut pow = 1;
        for _ in 0..e {
            pow *= q;
            divs.extend(base.iter().map(|d| d * pow));
        }
    }
    divs.sort_unstable();
    divs
}

/// All `(p, n)` cases selected by `config`, sorted by `(p, n)`.
pub fn enumerate_cases(config: &SweepConfig) -> Result<Vec<(u64, u64)>> {
    config.validate()?;
    let primes = primes_in_range(config.p_min, config.p_max);
    if primes.is_empty() {
        return Err(Error::EmptyRange(format!(
            "no primes in [{}, {}]",
            config.p_min, config.p_max
        )));
    }
    let mut cases = Vec::new();
    for p in primes {
        let candidates = match config.n_policy {
            NPolicy::AllOddDivisors => odd_divisors(p - 1),
            NPolicy::LargestOddDivisor => vec![(p - 1) >> (p - 1).trailing_zeros()],
            NPolicy::Fixed(n) if n % 2 == 1 && (p - 1) % n == 0 => vec![n],
            NPolicy::Fixed(_) => vec![],
        };
        let floor = (p as f64).powf(config.epsilon);
        cases.extend(
            candidates
                .into_iter()
                .filter(|&n| n >= config.n_min && n as f64 > floor)
                .map(|n| (p, n)),
        );
    }
    Ok(cases)
}

/// One computed case.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub p: u64,
    pub n: u64,
    pub k: u64,
    pub lower: Ratio<u128>,
    pub upper_exclusive: Ratio<u128>,
    /// `k 2n / (p - 1)`; at least 1 by the lower bound.
    pub normalized: f64,
    pub log_p: f64,
    pub log_k: f64,
    pub max_expsum_ratio: Option<f64>,
    pub delta_emp: Option<f64>,
    pub elapsed_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepRow {
    Record(SweepRecord),
    Skipped { p: u64, n: u64, reason: String },
}

impl SweepRow {
    pub fn key(&self) -> (u64, u64) {
        match self {
            SweepRow::Record(r) => (r.p, r.n),
            SweepRow::Skipped { p, n, .. } => (*p, *n),
        }
    }

    pub fn record(&self) -> Option<&SweepRecord> {
        match self {
            SweepRow::Record(r) => Some(r),
            SweepRow::Skipped { .. } => None,
        }
    }
}

fn run_case(p: u64, n: u64, config: &SweepConfig) -> Result<SweepRow> {
    let start = Instant::now();
    let skipped = |e: Error| SweepRow::Skipped {
        p,
        n,
        reason: e.to_string(),
    };

    let ctx = build_prime_context(p)?;
    let kr = match compute_k(&ctx, n, &config.caps) {
        Ok(kr) => kr,
        Err(e) if e.is_scale_limit() => return Ok(skipped(e)),
        Err(e) => return Err(e),
    };
    if kr.sandwich() == Sandwich::Fail {
        return Err(Error::BoundViolation { p, n, k: kr.k });
    }

    let (mut max_expsum_ratio, mut delta_emp) = (None, None);
    if config.with_expsums {
        let h = roots_of_unity_subgroup(&ctx, n, &config.caps)?;
        if h.elements().is_none() {
            return Ok(skipped(Error::ScaleLimit {
                what: "n (subgroup size)",
                value: n,
                cap: config.caps.enumeration,
            }));
        }
        let profile = expsum_profile(&ctx, &h)?;
        max_expsum_ratio = Some(profile.ratio());
        delta_emp = empirical_delta(&profile).ok();
    }

    Ok(SweepRow::Record(SweepRecord {
        p,
        n,
        k: kr.k,
        normalized: (kr.k as f64) * 2.0 * n as f64 / (p - 1) as f64,
        log_p: (p as f64).ln(),
        log_k: (kr.k as f64).ln(),
        lower: kr.lower,
        upper_exclusive: kr.upper_exclusive,
        max_expsum_ratio,
        delta_emp,
        elapsed_ms: config.timing.then(|| start.elapsed().as_millis() as u64),
    }))
}

/// Runs every case of `config` on a pool of `config.workers` threads.
///
/// Cases that exceed a size cap become [`SweepRow::Skipped`]; a Chowla-London
/// violation aborts the run.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let cases = enumerate_cases(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::BadConfig(e.to_string()))?;
    pool.install(|| {
        cases
            .par_iter()
            .map(|&(p, n)| run_case(p, n, config))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares of `ln k` against `ln p`.
pub fn fit_exponent<'a>(records: impl IntoIterator<Item = &'a SweepRecord>) -> Result<FitResult> {
    let points: Vec<(f64, f64)> = records.into_iter().map(|r| (r.log_p, r.log_k)).collect();
    let count = points.len();
    if count < 2 {
        return Err(Error::InsufficientData("need at least two records"));
    }
    let nf = count as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx <= f64::EPSILON * nf * mean_x.abs().max(1.0) {
        return Err(Error::InsufficientData("ln p has zero variance"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        n_points: count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Jsonl,
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(RecordFormat::Csv),
            "jsonl" => Ok(RecordFormat::Jsonl),
            other => Err(Error::BadConfig(format!("unknown record format {other:?}"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 11] = [
    "p",
    "n",
    "k",
    "lower_num",
    "lower_den",
    "upper_num",
    "upper_den",
    "normalized",
    "max_expsum_ratio",
    "delta_emp",
    "elapsed_ms",
];

/// JSONL line layout: the CSV columns plus `reason`, non-null only on
/// skipped rows.
#[derive(Debug, Serialize, Deserialize)]
struct JsonRow {
    p: u64,
    n: u64,
    k: Option<u64>,
    lower_num: Option<u128>,
    lower_den: Option<u128>,
    upper_num: Option<u128>,
    upper_den: Option<u128>,
    normalized: Option<f64>,
    max_expsum_ratio: Option<f64>,
    delta_emp: Option<f64>,
    elapsed_ms: Option<u64>,
    reason: Option<String>,
}

fn record_from_parts(
    p: u64,
    n: u64,
    k: u64,
    lower: (u128, u128),
    upper: (u128, u128),
    normalized: f64,
    max_expsum_ratio: Option<f64>,
    delta_emp: Option<f64>,
    elapsed_ms: Option<u64>,
) -> Result<SweepRecord> {
    if lower.1 == 0 || upper.1 == 0 {
        return Err(Error::Format(format!("zero denominator in row ({p}, {n})")));
    }
    Ok(SweepRecord {
        p,
        n,
        k,
        lower: Ratio::new(lower.0, lower.1),
        upper_exclusive: Ratio::new(upper.0, upper.1),
        normalized,
        log_p: (p as f64).ln(),
        log_k: (k as f64).ln(),
        max_expsum_ratio,
        delta_emp,
        elapsed_ms,
    })
}

fn opt_to_string<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes rows to `out`. CSV carries computed records only; JSONL carries
/// skipped rows too, with their reason.
pub fn write_records_to<W: Write>(rows: &[SweepRow], out: W, format: RecordFormat) -> Result<()> {
    match format {
        RecordFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            let csv_err = |e: csv::Error| Error::Io(e.into());
            w.write_record(CSV_COLUMNS).map_err(csv_err)?;
            for r in rows.iter().filter_map(SweepRow::record) {
                w.write_record([
                    r.p.to_string(),
                    r.n.to_string(),
                    r.k.to_string(),
                    r.lower.numer().to_string(),
                    r.lower.denom().to_string(),
                    r.upper_exclusive.numer().to_string(),
                    r.upper_exclusive.denom().to_string(),
                    r.normalized.to_string(),
                    opt_to_string(r.max_expsum_ratio),
                    opt_to_string(r.delta_emp),
                    opt_to_string(r.elapsed_ms),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
        }
        RecordFormat::Jsonl => {
            let mut w = BufWriter::new(out);
            for row in rows {
                let json = match row {
                    SweepRow::Record(r) => JsonRow {
                        p: r.p,
                        n: r.n,
                        k: Some(r.k),
                        lower_num: Some(*r.lower.numer()),
                        lower_den: Some(*r.lower.denom()),
                        upper_num: Some(*r.upper_exclusive.numer()),
                        upper_den: Some(*r.upper_exclusive.denom()),
                        normalized: Some(r.normalized),
                        max_expsum_ratio: r.max_expsum_ratio,
                        delta_emp: r.delta_emp,
                        elapsed_ms: r.elapsed_ms,
                        reason: None,
                    },
                    SweepRow::Skipped { p, n, reason } => JsonRow {
                        p: *p,
                        n: *n,
                        k: None,
                        lower_num: None,
                        lower_den: None,
                        upper_num: None,
                        upper_den: None,
                        normalized: None,
                        max_expsum_ratio: None,
                        delta_emp: None,
                        elapsed_ms: None,
                        reason: Some(reason.clone()),
                    },
                };
                serde_json::to_writer(&mut w, &json).map_err(|e| Error::Io(e.into()))?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write_records(rows: &[SweepRow], path: impl AsRef<Path>, format: RecordFormat) -> Result<()> {
    write_records_to(rows, File::create(path)?, format)
}

fn parse_field<T: FromStr>(raw: &str, column: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Format(format!("bad value {raw:?} in column {column}")))
}

fn parse_opt<T: FromStr>(raw: &str, column: &str) -> Result<Option<T>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_field(raw, column).map(Some)
    }
}

pub fn read_records_from<R: BufRead>(input: R, format: RecordFormat) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    match format {
        RecordFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(input);
            let headers = rdr.headers().map_err(|e| Error::Format(e.to_string()))?;
            if headers.iter().ne(CSV_COLUMNS) {
                return Err(Error::Format(format!("unexpected CSV header {headers:?}")));
            }
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
                let f = |i: usize| rec.get(i).unwrap_or("");
                let c = |i: usize| CSV_COLUMNS[i];
                rows.push(SweepRow::Record(record_from_parts(
                    parse_field(f(0), c(0))?,
                    parse_field(f(1), c(1))?,
                    parse_field(f(2), c(2))?,
                    (parse_field(f(3), c(3))?, parse_field(f(4), c(4))?),
                    (parse_field(f(5), c(5))?, parse_field(f(6), c(6))?),
                    parse_field(f(7), c(7))?,
                    parse_opt(f(8), c(8))?,
                    parse_opt(f(9), c(9))?,
                    parse_opt(f(10), c(10))?,
                )?));
            }
        }
        RecordFormat::Jsonl => {
            for line in input.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let j: JsonRow =
                    serde_json::from_str(&line).map_err(|e| Error::Format(e.to_string()))?;
                if let Some(reason) = j.reason {
                    rows.push(SweepRow::Skipped {
                        p: j.p,
                        n: j.n,
                        reason,
                    });
                    continue;
                }
                let missing = || Error::Format(format!("incomplete row ({}, {})", j.p, j.n));
                rows.push(SweepRow::Record(record_from_parts(
                    j.p,
                    j.n,
                    j.k.ok_or_else(missing)?,
                    (
                        j.lower_num.ok_or_else(missing)?,
                        j.lower_den.ok_or_else(missing)?,
                    ),
                    (
                        j.upper_num.ok_or_else(missing)?,
                        j.upper_den.ok_or_else(missing)?,
                    ),
                    j.normalized.ok_or_else(missing)?,
                    j.max_expsum_ratio,
                    j.delta_emp,
                    j.elapsed_ms,
                )?));
            }
        }
    }
    Ok(rows)
}

pub fn read_records(path: impl AsRef<Path>, format: RecordFormat) -> Result<Vec<SweepRow>> {
    read_records_from(BufReader::new(File::open(path)?), format)
}
