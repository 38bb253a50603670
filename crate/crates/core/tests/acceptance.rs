//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p powres --test acceptance`.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use powres::expsums::{
    expsum_profile, harmonic_bound_check, interval_bound, interval_expsum,
    orthogonality_decomposition, subgroup_expsum,
};
use powres::modmath::{build_prime_context, powmod, primes_in_range};
use powres::residues::{
    brute_force_k, compute_k, nth_root_solutions, roots_of_unity_subgroup, Caps, SubgroupSpec,
};
use powres::sweep::{
    fit_exponent, odd_divisors, run_sweep, write_records_to, NPolicy, RecordFormat, SweepConfig,
    SweepRow,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Criterion 1: (p-1)/(2n) <= k < (1/2 - 1/(2n)) p in exact rationals for
/// every prime 5 <= p <= 10^4 and odd n >= 3 dividing p - 1.
fn chowla_london_sandwich() -> Outcome {
    let caps = Caps::default();
    let mut cases = 0;
    for p in primes_in_range(5, 10_000) {
        let ctx = build_prime_context(p).unwrap();
        for n in odd_divisors(p - 1).into_iter().filter(|&n| n >= 3) {
            let k = compute_k(&ctx, n, &caps).unwrap().k as u128;
            let (pp, nn) = (p as u128, n as u128);
            // Independent restatement of the bounds.
            let lower = Ratio::new(pp - 1, 2 * nn);
            let upper = (Ratio::new(1, 2) - Ratio::new(1, 2 * nn)) * Ratio::from_integer(pp);
            let k = Ratio::from_integer(k);
            ensure(lower <= k && k < upper, || {
                format!("violation at p = {p}, n = {n}: k = {k}, bounds [{lower}, {upper})")
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} cases, 0 violations"))
}

/// Criterion 2: compute_k = brute_force_k for all primes p < 2000 and all odd
/// n | p - 1, with k = (p-1)/2 at n = 1.
fn oracle_equivalence() -> Outcome {
    let caps = Caps::default();
    let mut cases = 0;
    for p in primes_in_range(5, 1999) {
        let ctx = build_prime_context(p).unwrap();
        for n in odd_divisors(p - 1) {
            let fast = compute_k(&ctx, n, &caps).unwrap().k;
            let slow = brute_force_k(&ctx, n).unwrap();
            ensure(fast == slow, || {
                format!("p = {p}, n = {n}: compute_k = {fast}, brute force = {slow}")
            })?;
            if n == 1 {
                ensure(fast == (p - 1) / 2, || format!("p = {p}, n = 1: k = {fast}"))?;
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} cases, 0 mismatches"))
}

/// Criterion 3: 200 random (p < 10^4, n, m): exactly n roots, each a root,
/// equal to the brute-force filter.
fn root_sets() -> Outcome {
    let caps = Caps::default();
    let primes = primes_in_range(5, 9_999);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let p = primes[rng.gen_range(0..primes.len())];
        let divs = odd_divisors(p - 1);
        let n = divs[rng.gen_range(0..divs.len())];
        let m = powmod(rng.gen_range(1..p), n, p);
        let ctx = build_prime_context(p).unwrap();
        let roots = nth_root_solutions(&ctx, n, m, &caps).unwrap();
        let brute: Vec<u64> = (1..p).filter(|&x| powmod(x, n, p) == m).collect();
        ensure(roots.len() as u64 == n, || {
            format!("p = {p}, n = {n}, m = {m}: {} roots", roots.len())
        })?;
        ensure(roots.iter().all(|&x| powmod(x, n, p) == m), || {
            format!("p = {p}, n = {n}, m = {m}: a returned value is not a root")
        })?;
        ensure(roots == brute, || {
            format!("p = {p}, n = {n}, m = {m}: root set differs from brute force")
        })?;
    }
    Ok("200 triples, 0 mismatches".into())
}

/// Criterion 4: sum_{a=0}^{p-1} |S(a, H)|^2 = p |H| to relative 1e-8, summed
/// over every a directly and through the per-coset profile.
fn parseval() -> Outcome {
    let caps = Caps::default();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for p in [101u64, 1009, 5003] {
        let ctx = build_prime_context(p).unwrap();
        for n in odd_divisors(p - 1) {
            let h = roots_of_unity_subgroup(&ctx, n, &caps).unwrap();
            let direct: f64 = (0..p)
                .map(|a| subgroup_expsum(&h, a).unwrap().norm_sqr())
                .sum();
            let target = (p * n) as f64;
            let rel_direct = (direct - target).abs() / target;
            let rel_profile = expsum_profile(&ctx, &h).unwrap().parseval_relative();
            worst = worst.max(rel_direct).max(rel_profile);
            ensure(rel_direct < 1e-8 && rel_profile < 1e-8, || {
                format!("p = {p}, n = {n}: relative error {rel_direct:e} / {rel_profile:e}")
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} subgroups, worst relative error {worst:.2e} < 1e-8"))
}

fn direct_interval_sum(p: u64, r: u64, k: u64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for x in 1..=k {
        for signed in [x, p - x] {
            // e(-r x / p) with the numerator reduced exactly
            let num = (p - (r % p) * signed % p) % p;
            let theta = 2.0 * PI * num as f64 / p as f64;
            acc += Complex64::new(theta.cos(), theta.sin());
        }
    }
    acc
}

/// Criterion 5: closed form vs direct summation within 1e-9, and the
/// envelope min(2K, 1/(2||r/p||) + 1).
fn dirichlet_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for p in [97u64, 499, 997] {
        let radii = [1, (p as f64).powf(0.7).floor() as u64, (p - 1) / 2];
        for k in radii {
            for r in 0..p {
                let closed = interval_expsum(p, r, k).unwrap();
                let direct = direct_interval_sum(p, r, k);
                let err = (closed - direct).norm();
                worst = worst.max(err);
                ensure(err <= 1e-9, || {
                    format!("p = {p}, r = {r}, K = {k}: |closed - direct| = {err:e}")
                })?;
                if r >= 1 {
                    let bound = interval_bound(p, r, k).unwrap();
                    ensure(closed.norm() <= bound, || {
                        format!("p = {p}, r = {r}, K = {k}: |D| = {} > {bound}", closed.norm())
                    })?;
                }
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} (p, r, K) checks, worst deviation {worst:.2e} <= 1e-9"))
}

/// Criterion 6: |main + error - exact count| < 1e-4 for 100 sampled cases.
fn orthogonality_reconstruction() -> Outcome {
    let caps = Caps::default();
    let primes = primes_in_range(5, 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = primes[rng.gen_range(0..primes.len())];
        let divs = odd_divisors(p - 1);
        let n = divs[rng.gen_range(0..divs.len())];
        let m = powmod(rng.gen_range(1..p), n, p);
        let k = rng.gen_range(1..=(p - 1) / 2);
        let ctx = build_prime_context(p).unwrap();
        let d = orthogonality_decomposition(&ctx, n, m, k, &caps).unwrap();
        let brute = (1..=k)
            .flat_map(|x| [x, p - x])
            .filter(|&x| powmod(x, n, p) == m)
            .count() as u64;
        ensure(d.exact_count == brute, || {
            format!("p = {p}, n = {n}, m = {m}, K = {k}: count {} vs {brute}", d.exact_count)
        })?;
        let residual = (d.main_term + d.error_term - brute as f64).abs();
        worst = worst.max(residual);
        ensure(residual < 1e-4, || {
            format!("p = {p}, n = {n}, m = {m}, K = {k}: residual {residual:e}")
        })?;
    }
    Ok(format!("100 cases, worst residual {worst:.2e} < 1e-4"))
}

/// Criterion 7: max_a |S(a, H)| / |H| < 1 whenever 2 <= |H| <= p - 2.
fn sub_triviality() -> Outcome {
    let mut primes = primes_in_range(5, 2000);
    primes.extend([5003, 10_007]);
    let mut subgroups = 0;
    let mut worst: f64 = 0.0;
    for p in primes {
        let ctx = build_prime_context(p).unwrap();
        let divisors: Vec<u64> = (2..=p - 2).filter(|d| (p - 1) % d == 0).collect();
        for d in divisors {
            let h = SubgroupSpec::of_order(&ctx, d, u64::MAX).unwrap();
            let ratio = expsum_profile(&ctx, &h).unwrap().ratio();
            worst = worst.max(ratio);
            ensure(ratio < 1.0, || format!("p = {p}, |H| = {d}: ratio {ratio}"))?;
            subgroups += 1;
        }
    }
    Ok(format!("{subgroups} subgroups, largest ratio {worst:.8} < 1"))
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get().min(8))
}

/// Criterion 8: OLS slope of ln k on ln p < 1 for p in [10^3, 10^5], n the
/// largest odd divisor of p - 1 with n > p^(1/3).
fn theorem_trend() -> Outcome {
    let config = SweepConfig {
        p_min: 1_000,
        p_max: 100_000,
        n_min: 3,
        epsilon: 1.0 / 3.0,
        n_policy: NPolicy::LargestOddDivisor,
        workers: workers(),
        caps: Caps::default(),
        ..SweepConfig::default()
    };
    let rows = run_sweep(&config).unwrap();
    let records: Vec<_> = rows.iter().filter_map(SweepRow::record).collect();
    ensure(records.len() == rows.len(), || {
        format!("{} cases skipped", rows.len() - records.len())
    })?;
    ensure(
        records.iter().all(|r| r.n as f64 > (r.p as f64).powf(1.0 / 3.0)),
        || "a case violates n > p^(1/3)".into(),
    )?;
    let fit = fit_exponent(records.iter().copied()).unwrap();
    ensure(fit.slope < 1.0, || format!("slope {} >= 1", fit.slope))?;
    Ok(format!(
        "{} primes, slope {:.4} (intercept {:.4}, r^2 {:.4}) < 1",
        fit.n_points, fit.slope, fit.intercept, fit.r_squared
    ))
}

/// Criterion 9: identical sweeps with different worker counts give
/// byte-identical CSV and JSONL.
fn determinism() -> Outcome {
    let base = SweepConfig {
        p_min: 5,
        p_max: 500,
        with_expsums: true,
        caps: Caps {
            enumeration: 40,
            ..Caps::default()
        },
        ..SweepConfig::default()
    };
    let mut outputs = Vec::new();
    for workers in [1, 4] {
        let rows = run_sweep(&SweepConfig {
            workers,
            ..base.clone()
        })
        .unwrap();
        let mut csv = Vec::new();
        let mut jsonl = Vec::new();
        write_records_to(&rows, &mut csv, RecordFormat::Csv).unwrap();
        write_records_to(&rows, &mut jsonl, RecordFormat::Jsonl).unwrap();
        outputs.push((csv, jsonl, rows.len()));
    }
    ensure(outputs[0].0 == outputs[1].0, || "CSV differs".into())?;
    ensure(outputs[0].1 == outputs[1].1, || "JSONL differs".into())?;
    Ok(format!(
        "{} rows, CSV {} bytes and JSONL {} bytes identical for 1 and 4 workers",
        outputs[0].2,
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

/// Criterion 10: sum 1/||r/p|| <= 2p (1 + ln((p-1)/2)) for all primes p <= 10^4.
fn harmonic_bound() -> Outcome {
    let mut tightest = f64::INFINITY;
    let mut count = 0;
    for p in primes_in_range(5, 10_000) {
        let c = harmonic_bound_check(p);
        let pf = p as f64;
        // Recompute both sides from scratch.
        let lhs: f64 = (1..p).map(|r| pf / r.min(p - r) as f64).sum();
        let rhs = 2.0 * pf * (1.0 + (((p - 1) / 2) as f64).ln());
        ensure((lhs - c.lhs).abs() <= 1e-9 * lhs && c.rhs == rhs, || {
            format!("p = {p}: harmonic sums disagree")
        })?;
        ensure(c.ok && lhs <= rhs, || format!("p = {p}: {lhs} > {rhs}"))?;
        tightest = tightest.min(rhs - lhs);
        count += 1;
    }
    Ok(format!("{count} primes, smallest slack {tightest:.4}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Chowla-London sandwich, p <= 10^4", chowla_london_sandwich),
        ("compute_k = brute force, p < 2000", oracle_equivalence),
        ("root sets of x^n = m, 200 samples", root_sets),
        ("Parseval identity, p in {101, 1009, 5003}", parseval),
        ("Dirichlet closed form and envelope", dirichlet_closed_form),
        ("orthogonality reconstruction, 100 samples", orthogonality_reconstruction),
        ("subgroup sums are sub-trivial", sub_triviality),
        ("growth trend of k, p in [10^3, 10^5]", theorem_trend),
        ("sweep output independent of workers", determinism),
        ("harmonic bound, p <= 10^4", harmonic_bound),
    ];

    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  [{:>2}] {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL  [{:>2}] {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
