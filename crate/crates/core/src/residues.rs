//! Power residues modulo a prime: the two subgroups of `F_p^*` involved, the
//! full solution sets of `x^n = m`, and the covering number `k(p, n)`.
//!
//! `k(p, n)` is the least `k` such that `x^n mod p` over `x = ±1, ..., ±k`
//! hits every non-zero n-th power residue. For odd `n`, `(-x)^n = -(x^n)`, so
//! each step of the scan marks both `r` and `p - r`. Even `n` is rejected.

use std::collections::HashMap;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modmath::{mulmod, powmod, PrimeContext};

/// Largest subgroup or residue set that will be materialized in memory.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 22;
/// Exclusive bound on `p` for baby-step giant-step discrete logarithms.
pub const DEFAULT_BSGS_CAP: u64 = 1 << 40;
/// Exclusive bound on `p` for [`brute_force_k`].
pub const BRUTE_FORCE_CAP: u64 = 100_000;

pub const ENUMERATION_CAP_ENV: &str = "POWRES_ENUM_CAP";
pub const BSGS_CAP_ENV: &str = "POWRES_BSGS_CAP";

/// Size limits for enumeration and discrete logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Caps {
    pub enumeration: u64,
    pub bsgs: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            enumeration: DEFAULT_ENUMERATION_CAP,
            bsgs: DEFAULT_BSGS_CAP,
        }
    }
}

impl Caps {
    /// Defaults overridden by `POWRES_ENUM_CAP` / `POWRES_BSGS_CAP` when set.
    pub fn from_env() -> std::result::Result<Self, String> {
        let mut caps = Caps::default();
        for (name, slot) in [
            (ENUMERATION_CAP_ENV, &mut caps.enumeration),
            (BSGS_CAP_ENV, &mut caps.bsgs),
        ] {
            if let Ok(raw) = std::env::var(name) {
                *slot = raw
                    .trim()
                    .parse()
                    .map_err(|_| format!("{name} must be a non-negative integer, got {raw:?}"))?;
            }
        }
        Ok(caps)
    }
}

/// Checks that `n` is a positive odd divisor of `p - 1`.
pub fn validate_n(p: u64, n: u64) -> Result<()> {
    let reason = if n == 0 {
        "n must be positive"
    } else if n % 2 == 0 {
        "n must be odd"
    } else if (p - 1) % n != 0 {
        "n must divide p - 1"
    } else {
        return Ok(());
    };
    Err(Error::BadN { p, n, reason })
}

fn check_cap(what: &'static str, value: u64, cap: u64) -> Result<()> {
    if value > cap {
        Err(Error::ScaleLimit { what, value, cap })
    } else {
        Ok(())
    }
}

/// A cyclic subgroup of `F_p^*` of order `d | p - 1`, generated by
/// `g^((p-1)/d)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgroupSpec {
    p: u64,
    order: u64,
    generator: u64,
    elements: Option<Vec<u64>>,
}

impl SubgroupSpec {
    /// The subgroup of order `d`; enumerated when `d <= enumeration_cap`.
    pub fn of_order(ctx: &PrimeContext, d: u64, enumeration_cap: u64) -> Result<Self> {
        let p = ctx.p();
        if d == 0 || (p - 1) % d != 0 {
            return Err(Error::BadN {
                p,
                n: d,
                reason: "subgroup order must divide p - 1",
            });
        }
        let generator = powmod(ctx.g(), (p - 1) / d, p);
        let elements = (d <= enumeration_cap).then(|| {
            let mut out = Vec::with_capacity(d as usize);
            let mut h = 1;
            for _ in 0..d {
                out.push(h);
                h = mulmod(h, generator, p);
            }
            out
        });
        Ok(SubgroupSpec {
            p,
            order: d,
            generator,
            elements,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    /// Elements in generation order `w^0, w^1, ...`, when enumerated.
    pub fn elements(&self) -> Option<&[u64]> {
        self.elements.as_deref()
    }

    pub fn contains(&self, x: u64) -> bool {
        x % self.p != 0 && powmod(x, self.order, self.p) == 1
    }
}

/// `H`: the n-th roots of unity, of order `n`.
pub fn roots_of_unity_subgroup(ctx: &PrimeContext, n: u64, caps: &Caps) -> Result<SubgroupSpec> {
    validate_n(ctx.p(), n)?;
    SubgroupSpec::of_order(ctx, n, caps.enumeration)
}

/// `R = {x^n}`: the non-zero n-th power residues, of order `(p-1)/n` and
/// generated by `g^n`.
pub fn power_residue_subgroup(ctx: &PrimeContext, n: u64, caps: &Caps) -> Result<SubgroupSpec> {
    validate_n(ctx.p(), n)?;
    SubgroupSpec::of_order(ctx, (ctx.p() - 1) / n, caps.enumeration)
}

pub fn is_nth_residue(ctx: &PrimeContext, n: u64, m: u64) -> Result<bool> {
    let p = ctx.p();
    validate_n(p, n)?;
    if m == 0 || m >= p {
        return Err(Error::BadResidue { p, m });
    }
    Ok(powmod(m, (p - 1) / n, p) == 1)
}

/// Discrete logarithm to base `g` by baby-step giant-step.
fn discrete_log(ctx: &PrimeContext, m: u64) -> u64 {
    let p = ctx.p();
    let order = p - 1;
    let step = (order as f64).sqrt().ceil() as u64;

    let mut baby = HashMap::with_capacity(step as usize);
    let mut e = 1;
    for j in 0..step {
        baby.entry(e).or_insert(j);
        e = mulmod(e, ctx.g(), p);
    }
    // g^(-step)
    let giant = powmod(ctx.g(), order - step % order, p);
    let mut gamma = m;
    for i in 0..=step {
        if let Some(&j) = baby.get(&gamma) {
            return (i * step + j) % order;
        }
        gamma = mulmod(gamma, giant, p);
    }
    unreachable!("g generates F_p^*, so every unit has a logarithm")
}

/// One solution `x0 = g^(t/n)` of `x^n = m`, where `m = g^t`.
pub fn nth_root(ctx: &PrimeContext, n: u64, m: u64, caps: &Caps) -> Result<u64> {
    let p = ctx.p();
    if !is_nth_residue(ctx, n, m)? {
        return Err(Error::NotResidue { p, n, m });
    }
    if p >= caps.bsgs {
        return Err(Error::ScaleLimit {
            what: "p (discrete log)",
            value: p,
            cap: caps.bsgs,
        });
    }
    let t = discrete_log(ctx, m);
    debug_assert_eq!(t % n, 0);
    Ok(powmod(ctx.g(), t / n, p))
}

/// All `n` solutions of `x^n = m (mod p)`, sorted ascending: one root `x0`
/// multiplied through the roots of unity.
pub fn nth_root_solutions(ctx: &PrimeContext, n: u64, m: u64, caps: &Caps) -> Result<Vec<u64>> {
    let x0 = nth_root(ctx, n, m, caps)?;
    check_cap("n (root set size)", n, caps.enumeration)?;
    let p = ctx.p();
    let w = powmod(ctx.g(), (p - 1) / n, p);
    let mut roots = Vec::with_capacity(n as usize);
    let mut x = x0;
    for _ in 0..n {
        roots.push(x);
        x = mulmod(x, w, p);
    }
    roots.sort_unstable();
    Ok(roots)
}

/// Exact Chowla-London bounds `((p-1)/(2n), (1/2 - 1/(2n)) p)`.
///
/// The upper bound is exclusive and degenerates to 0 at `n = 1`.
pub fn chowla_london_bounds(p: u64, n: u64) -> Result<(Ratio<u128>, Ratio<u128>)> {
    if p < 3 {
        return Err(Error::TooSmall(p));
    }
    validate_n(p, n)?;
    let (p, n) = (p as u128, n as u128);
    Ok((Ratio::new(p - 1, 2 * n), Ratio::new(p * (n - 1), 2 * n)))
}

/// Outcome of comparing `k` against the Chowla-London bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sandwich {
    Pass,
    Fail,
    /// `n = 1`, where the upper bound is vacuous.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KResult {
    pub p: u64,
    pub n: u64,
    pub k: u64,
    pub lower: Ratio<u128>,
    pub upper_exclusive: Ratio<u128>,
}

impl KResult {
    pub fn sandwich(&self) -> Sandwich {
        if self.n < 3 {
            return Sandwich::Skipped;
        }
        let k = Ratio::from_integer(self.k as u128);
        if self.lower <= k && k < self.upper_exclusive {
            Sandwich::Pass
        } else {
            Sandwich::Fail
        }
    }
}

#[derive(Debug, Clone)]
enum ResidueIndex {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

const DENSE_ALWAYS: u64 = 1 << 16;
const DENSE_MAX: u64 = 1 << 22;
const NOT_A_RESIDUE: u32 = u32::MAX;

/// Incremental coverage of the n-th power residues by `±1, ..., ±x`.
///
/// Each residue of `R` gets a slot in a bitmap, found through an index built
/// by walking `R` from its generator.
#[derive(Debug, Clone)]
pub struct CoverState {
    p: u64,
    n: u64,
    index: ResidueIndex,
    covered: Vec<u64>,
    covered_count: u64,
    target: u64,
    x_current: u64,
}

impl CoverState {
    pub fn new(ctx: &PrimeContext, n: u64, caps: &Caps) -> Result<Self> {
        let p = ctx.p();
        validate_n(p, n)?;
        let size = (p - 1) / n;
        check_cap("(p-1)/n (residue set size)", size, caps.enumeration)?;

        let gen = powmod(ctx.g(), n, p);
        let dense = p <= DENSE_ALWAYS || (p <= DENSE_MAX && size.saturating_mul(64) >= p);
        let index = if dense {
            let mut slots = vec![NOT_A_RESIDUE; p as usize];
            let mut r = 1;
            for i in 0..size {
                slots[r as usize] = i as u32;
                r = mulmod(r, gen, p);
            }
            ResidueIndex::Dense(slots)
        } else {
            let mut map = HashMap::with_capacity(size as usize);
            let mut r = 1;
            for i in 0..size {
                map.insert(r, i as u32);
                r = mulmod(r, gen, p);
            }
            ResidueIndex::Sparse(map)
        };

        Ok(CoverState {
            p,
            n,
            index,
            covered: vec![0; size.div_ceil(64) as usize],
            covered_count: 0,
            target: size,
            x_current: 0,
        })
    }

    fn slot(&self, r: u64) -> Option<u32> {
        match &self.index {
            ResidueIndex::Dense(slots) => Some(slots[r as usize]).filter(|&s| s != NOT_A_RESIDUE),
            ResidueIndex::Sparse(map) => map.get(&r).copied(),
        }
    }

    /// Marks residue `r`; returns whether it was newly covered.
    pub fn mark(&mut self, r: u64) -> bool {
        let slot = self
            .slot(r)
            .expect("x^n is always an n-th power residue") as usize;
        let (word, bit) = (slot / 64, 1u64 << (slot % 64));
        if self.covered[word] & bit != 0 {
            return false;
        }
        self.covered[word] |= bit;
        self.covered_count += 1;
        true
    }

    /// Moves to the next `x`, marking `x^n` and `(-x)^n = p - x^n`.
    pub fn advance(&mut self) {
        self.x_current += 1;
        let r = powmod(self.x_current, self.n, self.p);
        self.mark(r);
        self.mark(self.p - r);
    }

    pub fn is_complete(&self) -> bool {
        self.covered_count == self.target
    }

    pub fn covered_count(&self) -> u64 {
        self.covered_count
    }

    /// Number of residues to cover, `(p-1)/n`.
    pub fn target(&self) -> u64 {
        self.target
    }

    pub fn x_current(&self) -> u64 {
        self.x_current
    }

    /// Population count of the bitmap; always equals [`Self::covered_count`].
    pub fn popcount(&self) -> u64 {
        self.covered.iter().map(|w| w.count_ones() as u64).sum()
    }
}

/// Computes `k(p, n)` exactly by scanning `x = 1, 2, ...` until every n-th
/// power residue is covered.
pub fn compute_k(ctx: &PrimeContext, n: u64, caps: &Caps) -> Result<KResult> {
    let mut state = CoverState::new(ctx, n, caps)?;
    while !state.is_complete() {
        state.advance();
    }
    let (lower, upper_exclusive) = chowla_london_bounds(ctx.p(), n)?;
    Ok(KResult {
        p: ctx.p(),
        n,
        k: state.x_current(),
        lower,
        upper_exclusive,
    })
}

/// Definitional `k(p, n)`: for each candidate `k` the set
/// `{x^n : 1 <= |x| <= k}` is rebuilt from nothing. Quadratic in `k`; only
/// meant as a cross-check for `p < 10^5`.
pub fn brute_force_k(ctx: &PrimeContext, n: u64) -> Result<u64> {
    let p = ctx.p();
    validate_n(p, n)?;
    check_cap("p (brute force)", p, BRUTE_FORCE_CAP - 1)?;

    let mut stamp = vec![0u64; p as usize];
    let mut residues = 0;
    for x in 1..p {
        let r = powmod(x, n, p) as usize;
        if stamp[r] == 0 {
            stamp[r] = 1;
            residues += 1;
        }
    }

    let mut stamp = vec![0u64; p as usize];
    for k in 1..p {
        let mut hit = 0;
        for x in 1..=k {
            for r in [powmod(x, n, p), powmod(p - x, n, p)] {
                if stamp[r as usize] != k {
                    stamp[r as usize] = k;
                    hit += 1;
                }
            }
        }
        if hit == residues {
            return Ok(k);
        }
    }
    unreachable!("k = (p-1)/2 covers every residue")
}
