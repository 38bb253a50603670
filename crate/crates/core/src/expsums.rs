//! Exponential sums over multiplicative subgroups and short intervals.
//!
//! `S(a, H) = sum_{h in H} e(ah/p)` with `e(x) = exp(2 pi i x)`, and the
//! interval sum `D(r, K) = sum_{1 <= |x| <= K} e(-rx/p)`. Together they give
//! an exact counting identity for the solutions of `x^n = m` in `[-K, K]`:
//!
//! ```text
//! #{h in H : x0 h = x (mod p), 1 <= |x| <= K}
//!     = (n/p) 2K + (1/p) sum_{r=1}^{p-1} S(r x0, H) D(r, K)
//! ```
//!
//! Phases are always evaluated from an exactly reduced integer numerator, one
//! `sin_cos` per term, and accumulated pairwise.

use std::f64::consts::PI;
use std::ops::Add;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modmath::{mulmod, powmod, PrimeContext};
use crate::residues::{nth_root, nth_root_solutions, roots_of_unity_subgroup, Caps, SubgroupSpec};

pub type ComplexVal = Complex64;

/// `e(num/p)` for `0 <= num < p`.
#[inline]
pub fn phase(num: u64, p: u64) -> Complex64 {
    // Fold into (-p/2, p/2] so the angle stays small.
    let signed = if num > p / 2 {
        -((p - num) as f64)
    } else {
        num as f64
    };
    let (s, c) = (2.0 * PI * signed / p as f64).sin_cos();
    Complex64::new(c, s)
}

const BLOCK: usize = 32;

/// Cascade summation: blocks of [`BLOCK`] terms summed directly, block sums
/// merged as a binary tree.
#[derive(Debug, Clone, Default)]
pub struct PairwiseSum<T> {
    levels: Vec<Option<T>>,
    block: T,
    in_block: usize,
}

impl<T: Copy + Default + Add<Output = T>> PairwiseSum<T> {
    pub fn new() -> Self {
        PairwiseSum {
            levels: Vec::new(),
            block: T::default(),
            in_block: 0,
        }
    }

    pub fn push(&mut self, term: T) {
        self.block = self.block + term;
        self.in_block += 1;
        if self.in_block == BLOCK {
            let mut carry = std::mem::take(&mut self.block);
            self.in_block = 0;
            for level in self.levels.iter_mut() {
                match level.take() {
                    Some(prev) => carry = prev + carry,
                    None => {
                        *level = Some(carry);
                        return;
                    }
                }
            }
            self.levels.push(Some(carry));
        }
    }

    pub fn total(&self) -> T {
        self.levels
            .iter()
            .flatten()
            .fold(self.block, |acc, &v| v + acc)
    }
}

impl<T: Copy + Default + Add<Output = T>> FromIterator<T> for PairwiseSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = PairwiseSum::new();
        for t in iter {
            acc.push(t);
        }
        acc
    }
}

fn pairwise<T: Copy + Default + Add<Output = T>>(iter: impl IntoIterator<Item = T>) -> T {
    iter.into_iter().collect::<PairwiseSum<T>>().total()
}

/// `S(a, H)`. `a` is reduced modulo `p` first.
pub fn subgroup_expsum(h: &SubgroupSpec, a: u64) -> Result<Complex64> {
    let elements = h.elements().ok_or(Error::NotEnumerated(h.order()))?;
    let p = h.p();
    let a = a % p;
    Ok(pairwise(elements.iter().map(|&x| phase(mulmod(a, x, p), p))))
}

/// `S(a, H)` for one representative `a = g^i` of each coset `aH` of `F_p^*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumProfile {
    pub p: u64,
    pub subgroup_order: u64,
    /// `(representative, S(representative))`, ordered by coset index `i`.
    pub coset_values: Vec<(u64, Complex64)>,
    /// `max |S(a)|` over `a != 0`.
    pub max_magnitude: f64,
    pub argmax_a: u64,
    /// `|sum_{a=0}^{p-1} |S(a)|^2 - p |H||`, including the `a = 0` term `|H|^2`.
    pub parseval_residual: f64,
}

impl ExpSumProfile {
    pub fn ratio(&self) -> f64 {
        self.max_magnitude / self.subgroup_order as f64
    }

    pub fn parseval_relative(&self) -> f64 {
        self.parseval_residual / (self.p as f64 * self.subgroup_order as f64)
    }
}

/// Evaluates `S` once per coset. Since `S(ah, H) = S(a, H)` for `h in H`, this
/// costs `p - 1` phase evaluations in total instead of `p |H|`.
pub fn expsum_profile(ctx: &PrimeContext, h: &SubgroupSpec) -> Result<ExpSumProfile> {
    let p = ctx.p();
    assert_eq!(h.p(), p, "subgroup belongs to a different prime");
    let d = h.order();
    h.elements().ok_or(Error::NotEnumerated(d))?;

    let cosets = (p - 1) / d;
    let mut coset_values = Vec::with_capacity(cosets as usize);
    let mut rep = 1;
    for _ in 0..cosets {
        coset_values.push((rep, subgroup_expsum(h, rep)?));
        rep = mulmod(rep, ctx.g(), p);
    }

    let (mut argmax_a, mut max_magnitude) = (coset_values[0].0, f64::NEG_INFINITY);
    for &(a, s) in &coset_values {
        if s.norm() > max_magnitude {
            max_magnitude = s.norm();
            argmax_a = a;
        }
    }

    let d_f = d as f64;
    let energy = d_f * d_f + d_f * pairwise(coset_values.iter().map(|(_, s)| s.norm_sqr()));
    Ok(ExpSumProfile {
        p,
        subgroup_order: d,
        coset_values,
        max_magnitude,
        argmax_a,
        parseval_residual: (energy - p as f64 * d_f).abs(),
    })
}

/// `-ln(max|S| / |H|) / (3 ln p)`, clamped at 0.
pub fn empirical_delta(profile: &ExpSumProfile) -> Result<f64> {
    if profile.subgroup_order < 2 {
        return Err(Error::TrivialSubgroup);
    }
    let delta = -profile.ratio().ln() / (3.0 * (profile.p as f64).ln());
    Ok(delta.max(0.0))
}

fn check_radius(p: u64, k: u64) -> Result<()> {
    let max = (p - 1) / 2;
    if k == 0 || k > max {
        Err(Error::BadRadius { k, max })
    } else {
        Ok(())
    }
}

/// `D(r, K)` by the Dirichlet kernel `sin((2K+1) pi r/p) / sin(pi r/p) - 1`;
/// `2K` when `r = 0 (mod p)`. Real by symmetry.
pub fn interval_expsum(p: u64, r: u64, k: u64) -> Result<Complex64> {
    check_radius(p, k)?;
    let r = r % p;
    if r == 0 {
        return Ok(Complex64::new(2.0 * k as f64, 0.0));
    }
    let wide = ((2 * k + 1) as u128 * r as u128 % (2 * p as u128)) as f64;
    let num = (PI * wide / p as f64).sin();
    let den = (PI * r as f64 / p as f64).sin();
    Ok(Complex64::new(num / den - 1.0, 0.0))
}

/// Envelope `min(2K, 1/(2 ||r/p||) + 1)` for `|D(r, K)|`, with `||.||` the
/// distance to the nearest integer.
pub fn interval_bound(p: u64, r: u64, k: u64) -> Result<f64> {
    let r = r % p;
    if r == 0 {
        return Err(Error::ZeroFrequency);
    }
    let dist = r.min(p - r) as f64;
    Ok((2.0 * k as f64).min(p as f64 / (2.0 * dist) + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Compares `sum_{r=1}^{p-1} 1/||r/p||` with `2p (1 + ln((p-1)/2))`.
pub fn harmonic_bound_check(p: u64) -> HarmonicCheck {
    assert!(p >= 3, "harmonic bound needs p >= 3");
    let pf = p as f64;
    let lhs = pairwise((1..p).map(|r| pf / r.min(p - r) as f64));
    let rhs = 2.0 * pf * (1.0 + (((p - 1) / 2) as f64).ln());
    HarmonicCheck {
        lhs,
        rhs,
        ok: lhs <= rhs,
    }
}

/// `floor(p^(1-delta))` clamped into `[1, (p-1)/2]`.
pub fn theorem_radius(p: u64, delta: f64) -> u64 {
    let k = (p as f64).powf(1.0 - delta).floor() as u64;
    k.clamp(1, (p - 1) / 2)
}

/// Exact number of solutions of `x^n = m` with `1 <= |x| <= K`.
pub fn count_solutions_in_interval(
    ctx: &PrimeContext,
    n: u64,
    m: u64,
    k: u64,
    caps: &Caps,
) -> Result<u64> {
    let p = ctx.p();
    check_radius(p, k)?;
    let roots = nth_root_solutions(ctx, n, m, caps)?;
    Ok(roots.iter().filter(|&&s| s <= k || p - s <= k).count() as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub m: u64,
    pub radius: u64,
    pub exact_count: u64,
    /// `(n/p) 2K`
    pub main_term: f64,
    /// `(1/p) sum_{r=1}^{p-1} S(r x0, H) D(r, K)`, real part.
    pub error_term: f64,
    pub reconstruction: f64,
    /// Imaginary part left over in the error sum; zero in exact arithmetic.
    pub imag_residual: f64,
}

impl DecompositionResult {
    pub fn residual(&self) -> f64 {
        (self.reconstruction - self.exact_count as f64).abs()
    }
}

/// `S(a, H)` for every `a` in `0..p`, filled coset by coset.
fn expsum_table(ctx: &PrimeContext, h: &SubgroupSpec) -> Result<Vec<Complex64>> {
    let p = ctx.p();
    let elements = h.elements().ok_or(Error::NotEnumerated(h.order()))?;
    let mut table = vec![Complex64::default(); p as usize];
    table[0] = Complex64::new(h.order() as f64, 0.0);
    let mut rep = 1;
    for _ in 0..(p - 1) / h.order() {
        let s = subgroup_expsum(h, rep)?;
        for &x in elements {
            table[mulmod(rep, x, p) as usize] = s;
        }
        rep = mulmod(rep, ctx.g(), p);
    }
    Ok(table)
}

/// Splits the solution count in `[-K, K]` into the main term and the
/// character-sum error term, alongside the count itself.
pub fn orthogonality_decomposition(
    ctx: &PrimeContext,
    n: u64,
    m: u64,
    k: u64,
    caps: &Caps,
) -> Result<DecompositionResult> {
    let p = ctx.p();
    check_radius(p, k)?;
    let exact_count = count_solutions_in_interval(ctx, n, m, k, caps)?;
    let x0 = nth_root(ctx, n, m, caps)?;
    if p - 1 > caps.enumeration {
        return Err(Error::ScaleLimit {
            what: "p - 1 (sum table)",
            value: p - 1,
            cap: caps.enumeration,
        });
    }
    let h = roots_of_unity_subgroup(ctx, n, caps)?;
    let table = expsum_table(ctx, &h)?;

    let mut acc = PairwiseSum::new();
    for r in 1..p {
        let d = interval_expsum(p, r, k)?.re;
        acc.push(table[mulmod(r, x0, p) as usize] * d);
    }
    let error = acc.total() / p as f64;
    let main_term = n as f64 * 2.0 * k as f64 / p as f64;

    debug_assert_eq!(powmod(x0, n, p), m);
    Ok(DecompositionResult {
        m,
        radius: k,
        exact_count,
        main_term,
        error_term: error.re,
        reconstruction: main_term + error.re,
        imag_residual: error.im.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::build_prime_context;
    use crate::residues::{power_residue_subgroup, SubgroupSpec};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn phase_has_unit_modulus() {
        for p in [13u64, 997, (1 << 61) - 1] {
            for num in [0, 1, p / 2, p / 2 + 1, p - 1] {
                assert!(close(phase(num, p).norm(), 1.0, 1e-12));
            }
        }
    }

    #[test]
    fn pairwise_sum_matches_exact_integers() {
        let total: f64 = pairwise((1..=10_000).map(|i| i as f64));
        assert_eq!(total, 50_005_000.0);
        assert_eq!(pairwise(std::iter::empty::<f64>()), 0.0);
    }

    #[test]
    fn subgroup_sum_examples() {
        let ctx = build_prime_context(13).unwrap();
        let h = SubgroupSpec::of_order(&ctx, 3, 1 << 20).unwrap();
        assert_eq!(subgroup_expsum(&h, 0).unwrap(), Complex64::new(3.0, 0.0));

        let full = SubgroupSpec::of_order(&ctx, 12, 1 << 20).unwrap();
        for a in 1..13 {
            let s = subgroup_expsum(&full, a).unwrap();
            assert!(close(s.re, -1.0, 1e-9) && close(s.im, 0.0, 1e-9));
        }

        // {1, 12}: 2 cos(2 pi / 13) = 1.770912051306...
        let pm = SubgroupSpec::of_order(&ctx, 2, 1 << 20).unwrap();
        let s = subgroup_expsum(&pm, 1).unwrap();
        assert!(close(s.re, 1.770_912_051_306_2, 1e-12), "{s}");
        assert!(close(s.im, 0.0, 1e-12));

        let lazy = SubgroupSpec::of_order(&ctx, 3, 2).unwrap();
        assert!(matches!(
            subgroup_expsum(&lazy, 1),
            Err(Error::NotEnumerated(3))
        ));
    }

    #[test]
    fn profile_extremes() {
        let ctx = build_prime_context(13).unwrap();
        let trivial = SubgroupSpec::of_order(&ctx, 1, 1 << 20).unwrap();
        let prof = expsum_profile(&ctx, &trivial).unwrap();
        assert_eq!(prof.coset_values.len(), 12);
        assert!(close(prof.max_magnitude, 1.0, 1e-12));
        assert!(matches!(
            empirical_delta(&prof),
            Err(Error::TrivialSubgroup)
        ));

        let full = power_residue_subgroup(&ctx, 1, &Caps::default()).unwrap();
        let prof = expsum_profile(&ctx, &full).unwrap();
        assert_eq!(prof.coset_values.len(), 1);
        assert!(close(prof.max_magnitude, 1.0, 1e-12));
    }

    #[test]
    fn profile_matches_full_scan() {
        let ctx = build_prime_context(13).unwrap();
        let h = SubgroupSpec::of_order(&ctx, 3, 1 << 20).unwrap();
        let prof = expsum_profile(&ctx, &h).unwrap();
        assert_eq!(prof.coset_values.len(), 4);
        let scan = (1..13)
            .map(|a| subgroup_expsum(&h, a).unwrap().norm())
            .fold(0.0, f64::max);
        assert!(close(prof.max_magnitude, scan, 1e-12));
        assert!(prof.max_magnitude < 3.0);
        assert!(prof.parseval_relative() < 1e-12);
        assert!(empirical_delta(&prof).unwrap() > 0.0);
    }

    #[test]
    fn empirical_delta_inverts_synthetic_profiles() {
        let p = 10_007u64;
        let mut prof = ExpSumProfile {
            p,
            subgroup_order: 5001,
            coset_values: vec![],
            max_magnitude: 5001.0,
            argmax_a: 1,
            parseval_residual: 0.0,
        };
        assert!(close(empirical_delta(&prof).unwrap(), 0.0, 1e-15));
        prof.max_magnitude = 5001.0 / (p as f64).powf(0.3);
        assert!(close(empirical_delta(&prof).unwrap(), 0.1, 1e-12));
    }

    #[test]
    fn interval_sum_examples() {
        assert_eq!(interval_expsum(13, 0, 4).unwrap(), Complex64::new(8.0, 0.0));
        for r in 1..13 {
            assert!(close(interval_expsum(13, r, 6).unwrap().re, -1.0, 1e-12));
        }
        let want = (7.0 * PI / 13.0).sin() / (PI / 13.0).sin() - 1.0;
        // direct six-term sum
        let direct: f64 = [-3i64, -2, -1, 1, 2, 3]
            .iter()
            .map(|&x| (-2.0 * PI * x as f64 / 13.0).cos())
            .sum();
        let got = interval_expsum(13, 1, 3).unwrap().re;
        assert!(close(got, want, 1e-12) && close(got, direct, 1e-12));
        assert!(matches!(
            interval_expsum(13, 1, 7),
            Err(Error::BadRadius { .. })
        ));
        assert!(matches!(
            interval_expsum(13, 1, 0),
            Err(Error::BadRadius { .. })
        ));
    }

    #[test]
    fn interval_bound_examples() {
        assert_eq!(interval_bound(13, 1, 1).unwrap(), 2.0);
        let b = interval_bound(13, 6, 6).unwrap();
        assert!(close(b, 25.0 / 12.0, 1e-15));
        assert!(interval_expsum(13, 6, 6).unwrap().norm() <= b);
        assert!(matches!(
            interval_bound(13, 13, 3),
            Err(Error::ZeroFrequency)
        ));
    }

    #[test]
    fn harmonic_examples() {
        let c5 = harmonic_bound_check(5);
        assert!(close(c5.lhs, 15.0, 1e-12));
        assert!(close(c5.rhs, 10.0 * (1.0 + 2f64.ln()), 1e-12));
        assert!(c5.ok);

        let c7 = harmonic_bound_check(7);
        assert!(close(c7.lhs, 2.0 * (7.0 + 3.5 + 7.0 / 3.0), 1e-12));
        assert!(close(c7.rhs, 14.0 * (1.0 + 3f64.ln()), 1e-12));
        assert!(c7.ok);
    }

    #[test]
    fn counting_examples() {
        let ctx = build_prime_context(13).unwrap();
        let caps = Caps::default();
        assert_eq!(count_solutions_in_interval(&ctx, 3, 8, 2, &caps).unwrap(), 1);
        assert_eq!(count_solutions_in_interval(&ctx, 3, 8, 6, &caps).unwrap(), 3);
        assert_eq!(count_solutions_in_interval(&ctx, 3, 1, 6, &caps).unwrap(), 3);
        assert!(count_solutions_in_interval(&ctx, 3, 2, 6, &caps).is_err());
        assert!(count_solutions_in_interval(&ctx, 3, 8, 7, &caps).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let ctx = build_prime_context(13).unwrap();
        let caps = Caps::default();

        let d = orthogonality_decomposition(&ctx, 3, 8, 6, &caps).unwrap();
        assert_eq!(d.exact_count, 3);
        assert!(close(d.main_term, 36.0 / 13.0, 1e-12));
        assert!(close(d.error_term, 3.0 - 36.0 / 13.0, 1e-6));
        assert!(d.residual() < 1e-6 && d.imag_residual < 1e-6);

        let d = orthogonality_decomposition(&ctx, 3, 8, 2, &caps).unwrap();
        assert_eq!(d.exact_count, 1);
        assert!(d.residual() < 1e-6);
    }

    #[test]
    fn theorem_radius_clamps() {
        assert_eq!(theorem_radius(13, 0.0), 6);
        assert_eq!(theorem_radius(13, 0.99), 1);
        assert_eq!(theorem_radius(10_007, 0.5), 100);
    }
}
