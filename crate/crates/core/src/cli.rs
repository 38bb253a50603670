//! The `powres` command line.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error, 3 scale-cap error.
//! With `--json` the data stream carries exactly one JSON document;
//! diagnostics always go to the error stream.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expsums::{
    empirical_delta, expsum_profile, orthogonality_decomposition, theorem_radius,
};
use crate::modmath::{build_prime_context, primes_in_range};
use crate::residues::{
    compute_k, nth_root, nth_root_solutions, power_residue_subgroup, roots_of_unity_subgroup,
    Caps, KResult, Sandwich,
};
use crate::sweep::{
    fit_exponent, odd_divisors, run_sweep, write_records, NPolicy, RecordFormat, SweepConfig,
    SweepRow,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SCALE: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    /// Data stream (stdout).
    pub payload: String,
    /// Diagnostics (stderr).
    pub diagnostics: String,
}

impl CommandOutcome {
    fn ok(payload: String) -> Self {
        CommandOutcome {
            exit_code: EXIT_OK,
            payload,
            diagnostics: String::new(),
        }
    }
}

pub fn exit_code_for(err: &Error) -> i32 {
    if err.is_scale_limit() {
        return EXIT_SCALE;
    }
    match err {
        Error::EmptyRange(_) | Error::BadConfig(_) => EXIT_USAGE,
        _ => EXIT_DOMAIN,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "powres",
    version,
    about = "Covering numbers of n-th power residues modulo a prime"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Group {
    /// Roots of unity, order n
    Roots,
    /// Non-zero n-th power residues, order (p-1)/n
    Residues,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Policy {
    All,
    Largest,
    Fixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute k(p, n) and check it against the Chowla-London bounds
    Compute {
        p: u64,
        n: u64,
        #[arg(long)]
        json: bool,
    },
    /// List all solutions of x^n = m (mod p)
    Roots {
        p: u64,
        n: u64,
        m: u64,
        #[arg(long)]
        json: bool,
    },
    /// Exponential sums over a subgroup of F_p^*
    Expsum {
        p: u64,
        n: u64,
        #[arg(long, value_enum, default_value = "roots")]
        group: Group,
        /// Only report the maximum
        #[arg(long, conflicts_with = "profile")]
        max_only: bool,
        /// Dump every coset value
        #[arg(long)]
        profile: bool,
        #[arg(long)]
        json: bool,
    },
    /// Split the solution count in [-K, K] into main and error terms
    Decompose {
        p: u64,
        n: u64,
        m: u64,
        /// Interval radius
        #[arg(value_name = "K", required_unless_present = "delta")]
        radius: Option<u64>,
        /// Use K = floor(p^(1 - delta)) instead of an explicit radius
        #[arg(long, conflicts_with = "radius")]
        delta: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Batch computation over a range of primes
    Sweep {
        #[arg(long, default_value_t = 5)]
        p_min: u64,
        #[arg(long)]
        p_max: u64,
        #[arg(long, default_value_t = 3)]
        n_min: u64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "all")]
        policy: Policy,
        /// n for --policy fixed
        #[arg(long, required_if_eq("policy", "fixed"))]
        n: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Also record max|S|/|H| and the empirical delta per case
        #[arg(long)]
        with_expsums: bool,
        /// Record wall-clock time per case (makes output nondeterministic)
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        json: bool,
    },
    /// Check the Chowla-London bounds for every prime up to --p-max
    Verify {
        #[arg(long, default_value_t = 5)]
        p_min: u64,
        #[arg(long)]
        p_max: u64,
        #[arg(long)]
        json: bool,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, caps: Caps) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutcome {
                    exit_code: EXIT_USAGE,
                    payload: String::new(),
                    diagnostics: text,
                }
            } else {
                CommandOutcome::ok(text)
            };
        }
    };
    match dispatch(cli.command, &caps) {
        Ok(outcome) => outcome,
        Err(e) => CommandOutcome {
            exit_code: exit_code_for(&e),
            payload: String::new(),
            diagnostics: format!("error: {e}\n"),
        },
    }
}

fn dispatch(command: Command, caps: &Caps) -> Result<CommandOutcome> {
    match command {
        Command::Compute { p, n, json } => cmd_compute(p, n, json, caps),
        Command::Roots { p, n, m, json } => cmd_roots(p, n, m, json, caps),
        Command::Expsum {
            p,
            n,
            group,
            max_only,
            profile,
            json,
        } => cmd_expsum(p, n, group, max_only, profile, json, caps),
        Command::Decompose {
            p,
            n,
            m,
            radius,
            delta,
            json,
        } => cmd_decompose(p, n, m, radius, delta, json, caps),
        Command::Sweep {
            p_min,
            p_max,
            n_min,
            epsilon,
            policy,
            n,
            out,
            format,
            workers,
            with_expsums,
            timing,
            json,
        } => {
            let n_policy = match policy {
                Policy::All => NPolicy::AllOddDivisors,
                Policy::Largest => NPolicy::LargestOddDivisor,
                Policy::Fixed => NPolicy::Fixed(n.expect("clap enforces --n")),
            };
            let config = SweepConfig {
                p_min,
                p_max,
                n_min,
                epsilon,
                n_policy,
                with_expsums,
                workers,
                caps: *caps,
                timing,
            };
            let format = match format {
                Format::Csv => RecordFormat::Csv,
                Format::Jsonl => RecordFormat::Jsonl,
            };
            cmd_sweep(&config, out, format, json)
        }
        Command::Verify { p_min, p_max, json } => cmd_verify(p_min, p_max, json, caps),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct RatioOut {
    num: u128,
    den: u128,
}

impl From<&Ratio<u128>> for RatioOut {
    fn from(r: &Ratio<u128>) -> Self {
        RatioOut {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

fn show_ratio(r: &Ratio<u128>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Serialize)]
struct ComputeOut {
    p: u64,
    n: u64,
    g: u64,
    k: u64,
    lower: RatioOut,
    upper_exclusive: RatioOut,
    sandwich: Sandwich,
}

pub fn cmd_compute(p: u64, n: u64, json: bool, caps: &Caps) -> Result<CommandOutcome> {
    let ctx = build_prime_context(p)?;
    let kr: KResult = compute_k(&ctx, n, caps)?;
    let sandwich = kr.sandwich();
    let out = ComputeOut {
        p,
        n,
        g: ctx.g(),
        k: kr.k,
        lower: (&kr.lower).into(),
        upper_exclusive: (&kr.upper_exclusive).into(),
        sandwich,
    };
    let payload = if json {
        to_json(&out)
    } else {
        let verdict = match sandwich {
            Sandwich::Pass => "PASS".to_string(),
            Sandwich::Fail => "FAIL".to_string(),
            Sandwich::Skipped => "SKIPPED (the upper bound is vacuous at n = 1)".to_string(),
        };
        format!(
            "p = {p}, n = {n}, g = {}\nk = {}\nbounds: [{}, {})\nchowla-london: {verdict}\n",
            ctx.g(),
            kr.k,
            show_ratio(&kr.lower),
            show_ratio(&kr.upper_exclusive),
        )
    };
    let mut outcome = CommandOutcome::ok(payload);
    if sandwich == Sandwich::Fail {
        outcome.exit_code = EXIT_DOMAIN;
        outcome.diagnostics = format!("error: k({p}, {n}) = {} violates the bounds\n", kr.k);
    }
    Ok(outcome)
}

#[derive(Debug, Serialize)]
struct RootsOut {
    p: u64,
    n: u64,
    m: u64,
    g: u64,
    h_generator: u64,
    x0: u64,
    roots: Vec<u64>,
}

pub fn cmd_roots(p: u64, n: u64, m: u64, json: bool, caps: &Caps) -> Result<CommandOutcome> {
    let ctx = build_prime_context(p)?;
    let roots = nth_root_solutions(&ctx, n, m, caps)?;
    let out = RootsOut {
        p,
        n,
        m,
        g: ctx.g(),
        h_generator: roots_of_unity_subgroup(&ctx, n, caps)?.generator(),
        x0: nth_root(&ctx, n, m, caps)?,
        roots,
    };
    let payload = if json {
        to_json(&out)
    } else {
        let list: Vec<String> = out.roots.iter().map(u64::to_string).collect();
        format!(
            "x^{n} = {m} (mod {p}): {{{}}}\nx0 = {}, g = {}, H generator = {}\n",
            list.join(", "),
            out.x0,
            out.g,
            out.h_generator
        )
    };
    Ok(CommandOutcome::ok(payload))
}

#[derive(Debug, Serialize)]
struct CosetOut {
    representative: u64,
    re: f64,
    im: f64,
    abs: f64,
}

#[derive(Debug, Serialize)]
struct ExpsumOut {
    p: u64,
    n: u64,
    subgroup_order: u64,
    cosets: usize,
    max_magnitude: f64,
    ratio: f64,
    argmax_a: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_emp: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parseval_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<Vec<CosetOut>>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_expsum(
    p: u64,
    n: u64,
    group: Group,
    max_only: bool,
    dump_profile: bool,
    json: bool,
    caps: &Caps,
) -> Result<CommandOutcome> {
    let ctx = build_prime_context(p)?;
    let h = match group {
        Group::Roots => roots_of_unity_subgroup(&ctx, n, caps)?,
        Group::Residues => power_residue_subgroup(&ctx, n, caps)?,
    };
    if h.elements().is_none() {
        return Err(Error::ScaleLimit {
            what: "|H| (subgroup size)",
            value: h.order(),
            cap: caps.enumeration,
        });
    }
    let profile = expsum_profile(&ctx, &h)?;
    let out = ExpsumOut {
        p,
        n,
        subgroup_order: h.order(),
        cosets: profile.coset_values.len(),
        max_magnitude: profile.max_magnitude,
        ratio: profile.ratio(),
        argmax_a: profile.argmax_a,
        delta_emp: (!max_only).then(|| empirical_delta(&profile).ok()),
        parseval_residual: (!max_only).then_some(profile.parseval_residual),
        profile: dump_profile.then(|| {
            profile
                .coset_values
                .iter()
                .map(|&(a, s)| CosetOut {
                    representative: a,
                    re: s.re,
                    im: s.im,
                    abs: s.norm(),
                })
                .collect()
        }),
    };
    if json {
        return Ok(CommandOutcome::ok(to_json(&out)));
    }
    let mut text = String::new();
    let _ = writeln!(
        text,
        "p = {p}, |H| = {}, cosets = {}",
        out.subgroup_order, out.cosets
    );
    let _ = writeln!(text, "max|S| = {} (at a = {})", out.max_magnitude, out.argmax_a);
    let _ = writeln!(text, "max|S|/|H| = {}", out.ratio);
    if let Some(delta) = out.delta_emp {
        match delta {
            Some(d) => writeln!(text, "delta_emp = {d}"),
            None => writeln!(text, "delta_emp = undefined (trivial subgroup)"),
        }
        .ok();
    }
    if let Some(res) = out.parseval_residual {
        let _ = writeln!(text, "parseval residual = {res}");
    }
    for c in out.profile.iter().flatten() {
        let _ = writeln!(
            text,
            "  a = {:>8}  |S| = {:<22} S = {} {:+}i",
            c.representative, c.abs, c.re, c.im
        );
    }
    Ok(CommandOutcome::ok(text))
}

#[derive(Debug, Serialize)]
struct DecompOut {
    p: u64,
    n: u64,
    m: u64,
    radius: u64,
    exact_count: u64,
    main_term: f64,
    error_term: f64,
    reconstruction: f64,
    residual: f64,
    imag_residual: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_decompose(
    p: u64,
    n: u64,
    m: u64,
    radius: Option<u64>,
    delta: Option<f64>,
    json: bool,
    caps: &Caps,
) -> Result<CommandOutcome> {
    let ctx = build_prime_context(p)?;
    let k = match (radius, delta) {
        (Some(k), _) => k,
        (None, Some(d)) if (0.0..1.0).contains(&d) => theorem_radius(p, d),
        (None, Some(d)) => {
            return Err(Error::BadConfig(format!("delta must lie in [0, 1), got {d}")))
        }
        (None, None) => return Err(Error::BadConfig("missing radius K".into())),
    };
    let d = orthogonality_decomposition(&ctx, n, m, k, caps)?;
    let out = DecompOut {
        p,
        n,
        m,
        radius: k,
        exact_count: d.exact_count,
        main_term: d.main_term,
        error_term: d.error_term,
        reconstruction: d.reconstruction,
        residual: d.residual(),
        imag_residual: d.imag_residual,
    };
    let payload = if json {
        to_json(&out)
    } else {
        format!(
            "p = {p}, n = {n}, m = {m}, K = {k}\nexact count = {}\nmain term = {}\nerror term = {}\nreconstruction = {}\nresidual = {}\n",
            out.exact_count, out.main_term, out.error_term, out.reconstruction, out.residual
        )
    };
    Ok(CommandOutcome::ok(payload))
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    cases: usize,
    computed: usize,
    skipped: usize,
    slope: Option<f64>,
    intercept: Option<f64>,
    r_squared: Option<f64>,
    min_normalized: Option<f64>,
    max_normalized: Option<f64>,
    out: Option<PathBuf>,
}

pub fn cmd_sweep(
    config: &SweepConfig,
    out: Option<PathBuf>,
    format: RecordFormat,
    json: bool,
) -> Result<CommandOutcome> {
    let rows = run_sweep(config)?;
    if let Some(path) = &out {
        write_records(&rows, path, format)?;
    }
    let records: Vec<_> = rows.iter().filter_map(SweepRow::record).collect();
    let fit = fit_exponent(records.iter().copied()).ok();
    let normalized = records.iter().map(|r| r.normalized);
    let summary = SweepSummary {
        cases: rows.len(),
        computed: records.len(),
        skipped: rows.len() - records.len(),
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r_squared: fit.map(|f| f.r_squared),
        min_normalized: normalized.clone().reduce(f64::min),
        max_normalized: normalized.reduce(f64::max),
        out,
    };

    let mut diagnostics = String::new();
    for row in &rows {
        if let SweepRow::Skipped { p, n, reason } = row {
            let _ = writeln!(diagnostics, "skipped ({p}, {n}): {reason}");
        }
    }
    let payload = if json {
        to_json(&summary)
    } else {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| v.to_string());
        let mut text = format!(
            "cases: {} ({} computed, {} skipped)\nslope of ln k vs ln p: {}\nr^2: {}\nnormalized k: min {}, max {}\n",
            summary.cases,
            summary.computed,
            summary.skipped,
            opt(summary.slope),
            opt(summary.r_squared),
            opt(summary.min_normalized),
            opt(summary.max_normalized),
        );
        if let Some(path) = &summary.out {
            let _ = writeln!(text, "wrote {}", path.display());
        }
        text
    };
    Ok(CommandOutcome {
        exit_code: EXIT_OK,
        payload,
        diagnostics,
    })
}

#[derive(Debug, Serialize)]
struct Violation {
    p: u64,
    n: u64,
    k: u64,
    lower: RatioOut,
    upper_exclusive: RatioOut,
}

#[derive(Debug, Serialize)]
struct VerifyOut {
    p_min: u64,
    p_max: u64,
    primes: usize,
    cases: usize,
    violations: Vec<Violation>,
}

pub fn cmd_verify(p_min: u64, p_max: u64, json: bool, caps: &Caps) -> Result<CommandOutcome> {
    let p_min = p_min.max(5);
    if p_max < p_min {
        return Err(Error::EmptyRange(format!(
            "no primes p >= {p_min} up to {p_max}"
        )));
    }
    let primes = primes_in_range(p_min, p_max);
    if primes.is_empty() {
        return Err(Error::EmptyRange(format!("no primes in [{p_min}, {p_max}]")));
    }
    let mut cases = 0;
    let mut violations = Vec::new();
    for &p in &primes {
        let ctx = build_prime_context(p)?;
        for n in odd_divisors(p - 1).into_iter().filter(|&n| n >= 3) {
            let kr = compute_k(&ctx, n, caps)?;
            cases += 1;
            if kr.sandwich() != Sandwich::Pass {
                violations.push(Violation {
                    p,
                    n,
                    k: kr.k,
                    lower: (&kr.lower).into(),
                    upper_exclusive: (&kr.upper_exclusive).into(),
                });
            }
        }
    }
    let out = VerifyOut {
        p_min,
        p_max,
        primes: primes.len(),
        cases,
        violations,
    };
    let payload = if json {
        to_json(&out)
    } else if out.violations.is_empty() {
        format!(
            "all {cases} cases pass ({} primes in [{p_min}, {p_max}])\n",
            out.primes
        )
    } else {
        let mut text = format!("{} of {cases} cases violate the bounds:\n", out.violations.len());
        for v in &out.violations {
            let _ = writeln!(
                text,
                "  p = {}, n = {}, k = {}, bounds [{}/{}, {}/{})",
                v.p, v.n, v.k, v.lower.num, v.lower.den, v.upper_exclusive.num, v.upper_exclusive.den
            );
        }
        text
    };
    Ok(CommandOutcome {
        exit_code: if out.violations.is_empty() {
            EXIT_OK
        } else {
            EXIT_DOMAIN
        },
        payload,
        diagnostics: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> CommandOutcome {
        run(
            std::iter::once("powres").chain(args.iter().copied()),
            Caps::default(),
        )
    }

    #[test]
    fn compute_reports_k_and_bounds() {
        let out = run_args(&["compute", "13", "3"]);
        assert_eq!(out.exit_code, 0);
        assert!(out.payload.contains("k = 2"));
        assert!(out.payload.contains("bounds: [2, 13/3)"));
        assert!(out.payload.contains("PASS"));
    }

    #[test]
    fn compute_error_paths() {
        let even = run_args(&["compute", "13", "6"]);
        assert_eq!(even.exit_code, 1);
        assert!(even.diagnostics.contains("n must be odd"));
        let composite = run_args(&["compute", "9", "3"]);
        assert_eq!(composite.exit_code, 1);
        assert!(composite.diagnostics.contains("p is not prime"));
        assert_eq!(run_args(&["compute", "13"]).exit_code, 2);
        assert_eq!(run_args(&["compute", "x", "3"]).exit_code, 2);
    }

    #[test]
    fn scale_cap_maps_to_exit_3() {
        let caps = Caps {
            enumeration: 2,
            ..Caps::default()
        };
        let out = run(["powres", "compute", "13", "3"], caps);
        assert_eq!(out.exit_code, 3);
        let out = run(["powres", "expsum", "13", "3"], caps);
        assert_eq!(out.exit_code, 3);
    }

    #[test]
    fn decompose_needs_a_radius() {
        assert_eq!(run_args(&["decompose", "13", "3", "8"]).exit_code, 2);
        let out = run_args(&["decompose", "13", "3", "8", "--delta", "0"]);
        assert_eq!(out.exit_code, 0);
        assert!(out.payload.contains("K = 6"));
    }

    #[test]
    fn verify_small_ranges() {
        assert_eq!(run_args(&["verify", "--p-max", "4"]).exit_code, 2);
        let out = run_args(&["verify", "--p-max", "13", "--json"]);
        assert_eq!(out.exit_code, 0);
        let v: serde_json::Value = serde_json::from_str(&out.payload).unwrap();
        // (7, 3), (11, 5) and (13, 3)
        assert_eq!(v["cases"], 3);
    }
}
