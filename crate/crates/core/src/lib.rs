//! Covering numbers `k(p, n)` of n-th power residues modulo a prime, and the
//! exponential-sum machinery that bounds their growth.
//!
//! - [`modmath`]: 64-bit modular arithmetic, primality, factorization,
//!   primitive roots.
//! - [`residues`]: the roots-of-unity and power-residue subgroups, full root
//!   sets of `x^n = m`, `k(p, n)` and its Chowla-London bounds.
//! - [`expsums`]: subgroup and interval exponential sums, the orthogonality
//!   counting identity and its bounds.
//! - [`sweep`]: parallel batch runs over ranges of primes, CSV/JSONL records,
//!   log-log exponent fits.
//! - [`cli`]: the `powres` command line.

pub mod cli;
pub mod error;
pub mod expsums;
pub mod modmath;
pub mod residues;
pub mod sweep;

pub use error::{Error, Result};
pub use expsums::{
    count_solutions_in_interval, empirical_delta, expsum_profile, harmonic_bound_check,
    interval_bound, interval_expsum, orthogonality_decomposition, subgroup_expsum, ComplexVal,
    DecompositionResult, ExpSumProfile, HarmonicCheck,
};
pub use modmath::{build_prime_context, factorize, is_prime, mulmod, powmod, PrimeContext};
pub use residues::{
    brute_force_k, chowla_london_bounds, compute_k, is_nth_residue, nth_root_solutions,
    power_residue_subgroup, roots_of_unity_subgroup, Caps, CoverState, KResult, Sandwich,
    SubgroupSpec,
};
pub use sweep::{
    enumerate_cases, fit_exponent, read_records, run_sweep, write_records, FitResult, NPolicy,
    RecordFormat, SweepConfig, SweepRecord, SweepRow,
};
