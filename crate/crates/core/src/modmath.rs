//! 64-bit modular arithmetic: products, powers, primality, factorization and
//! primitive roots.
//!
//! Every modulus is capped at [`MODULUS_CAP`] = 2^62. Products go through a
//! `u128` intermediate, so `mulmod` is exact for every residue below the cap.

use serde::Serialize;

use crate::error::{Error, Result};

/// Exclusive upper bound on moduli accepted by [`build_prime_context`].
pub const MODULUS_CAP: u64 = 1 << 62;

const TRIAL_DIVISION_LIMIT: u64 = 1_000_000;

/// Bases that make Miller-Rabin deterministic over the whole `u64` range.
const MR_BASES: [u64; 7] = [2, 325, 9375, 28178, 450775, 9780504, 1795265022];

#[inline]
pub fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

/// `a^e mod p` by square-and-multiply.
///
/// `powmod(0, 0, p)` is 1: the empty product convention.
pub fn powmod(a: u64, mut e: u64, p: u64) -> u64 {
    if p == 1 {
        return 0;
    }
    let mut base = a % p;
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        e >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Deterministic primality test, exact for every `u64`.
pub fn is_prime(m: u64) -> bool {
    if m < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if m == q {
            return true;
        }
        if m % q == 0 {
            return false;
        }
    }
    if m < 41 * 41 {
        return true;
    }

    let s = (m - 1).trailing_zeros();
    let d = (m - 1) >> s;
    'bases: for &base in &MR_BASES {
        let a = base % m;
        if a == 0 {
            continue;
        }
        let mut x = powmod(a, d, m);
        if x == 1 || x == m - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, m);
            if x == m - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Prime factorization sorted by prime. `factorize(1)` is empty.
///
/// Trial division handles every factor below 10^6; whatever composite
/// cofactor remains is split with Brent's variant of Pollard rho, driven by a
/// fixed sequence of polynomial constants so the run is reproducible.
pub fn factorize(m: u64) -> Vec<(u64, u32)> {
    let mut primes = Vec::new();
    if m == 0 {
        return Vec::new();
    }
    let mut rest = m;
    while rest % 2 == 0 {
        primes.push(2);
        rest /= 2;
    }
    let mut d = 3u64;
    while d <= TRIAL_DIVISION_LIMIT && d * d <= rest {
        while rest % d == 0 {
            primes.push(d);
            rest /= d;
        }
        d += 2;
    }
    if rest > 1 {
        split_large(rest, &mut primes);
    }
    primes.sort_unstable();

    let mut out: Vec<(u64, u32)> = Vec::new();
    for q in primes {
        match out.last_mut() {
            Some((last, e)) if *last == q => *e += 1,
            _ => out.push((q, 1)),
        }
    }
    out
}

fn split_large(m: u64, primes: &mut Vec<u64>) {
    if m == 1 {
        return;
    }
    if is_prime(m) {
        primes.push(m);
        return;
    }
    let d = pollard_brent(m);
    split_large(d, primes);
    split_large(m / d, primes);
}

/// Returns a non-trivial divisor of the odd composite `m`.
fn pollard_brent(m: u64) -> u64 {
    if let Some(r) = exact_square_root(m) {
        return r;
    }
    const BATCH: u64 = 128;
    let step = |y: u64, c: u64| (mulmod(y, y, m) + c) % m;

    for c in 1.. {
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;

        while g == 1 {
            x = y;
            for _ in 0..r {
                y = step(y, c);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = step(y, c);
                    q = mulmod(q, x.abs_diff(y), m);
                }
                g = gcd(q, m);
                k += BATCH;
            }
            r *= 2;
        }
        if g == m {
            // The batch overshot; replay it one step at a time.
            loop {
                ys = step(ys, c);
                g = gcd(x.abs_diff(ys), m);
                if g > 1 {
                    break;
                }
            }
        }
        if g != m {
            return g;
        }
    }
    unreachable!("the constant sequence is unbounded")
}

fn exact_square_root(m: u64) -> Option<u64> {
    let r = (m as f64).sqrt() as u64;
    (r.saturating_sub(1)..=r + 1).find(|&c| c > 1 && c.checked_mul(c) == Some(m))
}

/// All primes in `[lo, hi]`, by a segmented sieve of Eratosthenes.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || hi < lo {
        return Vec::new();
    }
    let lo = lo.max(2);
    let root = (hi as f64).sqrt() as u64 + 1;

    let mut small = vec![true; root as usize + 1];
    small[0] = false;
    if root >= 1 {
        small[1] = false;
    }
    let mut i = 2;
    while i * i <= root {
        if small[i as usize] {
            for j in (i * i..=root).step_by(i as usize) {
                small[j as usize] = false;
            }
        }
        i += 1;
    }

    let mut composite = vec![false; (hi - lo + 1) as usize];
    for q in (2..=root).filter(|&q| small[q as usize]) {
        if q * q > hi {
            break;
        }
        let first = (q * q).max(lo.div_ceil(q) * q);
        for j in (first..=hi).step_by(q as usize) {
            composite[(j - lo) as usize] = true;
        }
    }
    composite
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| lo + i as u64)
        .collect()
}

/// A verified odd prime together with the factorization of `p - 1` and its
/// least primitive root. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeContext {
    p: u64,
    factors: Vec<(u64, u32)>,
    g: u64,
}

impl PrimeContext {
    pub fn p(&self) -> u64 {
        self.p
    }

    /// Factorization of `p - 1`, ascending by prime.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// The least primitive root.
    pub fn g(&self) -> u64 {
        self.g
    }

    /// Exact multiplicative order of a unit `a` modulo `p`.
    pub fn order_of(&self, a: u64) -> u64 {
        let mut ord = self.p - 1;
        for &(q, e) in &self.factors {
            for _ in 0..e {
                if powmod(a, ord / q, self.p) == 1 {
                    ord /= q;
                } else {
                    break;
                }
            }
        }
        ord
    }

    fn is_primitive_root(&self, g: u64) -> bool {
        let order = self.p - 1;
        self.factors
            .iter()
            .all(|&(q, _)| powmod(g, order / q, self.p) != 1)
    }
}

/// Validates `p` and finds its least primitive root by testing 2, 3, ... in
/// order against every prime factor of `p - 1`.
pub fn build_prime_context(p: u64) -> Result<PrimeContext> {
    if p < 5 {
        return Err(Error::TooSmall(p));
    }
    if p >= MODULUS_CAP {
        return Err(Error::ModulusTooLarge(p));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let mut ctx = PrimeContext {
        p,
        factors: factorize(p - 1),
        g: 0,
    };
    ctx.g = (2..p)
        .find(|&g| ctx.is_primitive_root(g))
        .expect("every prime has a primitive root");
    Ok(ctx)
}
