//! Exact boson-sampling statistics.
//!
//! With `Λ[(out, in)]` the single-particle amplitude, the probability of
//! output occupations `S` given input occupations `T` is
//!
//! ```text
//! P(S|T) = |Per(Λ[S,T])|^2 / (prod_j s_j! prod_i t_i!)
//! ```
//!
//! where `Λ[S,T]` repeats output row `j` `s_j` times and input column `i`
//! `t_i` times.

mod fock;
mod permanent;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use fock::{fock_oracle_distribution, FockSource, FOCK_MAX_BASIS};
pub use permanent::{permanent_naive, permanent_ryser, NAIVE_MAX_DIM, RYSER_MAX_DIM};

use crate::linalg::CMatrix;
use crate::linear_optics::ModeUnitary;

/// Tolerance on `sum p = 1` for exact and oracle distributions.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("permanent of order {dim} exceeds limit {max}")]
    PermanentTooLarge { dim: usize, max: usize },
    #[error("boson number mismatch: sum(S) = {output}, sum(T) = {input}")]
    TotalMismatch { output: usize, input: usize },
    #[error("expected {expected} modes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Fock basis of size {size} exceeds limit {max}")]
    FockBasisTooLarge { size: u128, max: usize },
    #[error("distribution not normalized: sum = {0}")]
    NotNormalized(f64),
    #[error("distributions have different outcome sets")]
    ShapeMismatch,
    #[error("invalid distribution entry: {0}")]
    InvalidEntry(&'static str),
    #[error("at least one sample is required")]
    NoSamples,
}

/// Occupation numbers of `M` modes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationVector(Vec<usize>);

impl OccupationVector {
    pub fn new(occupations: Vec<usize>) -> Self {
        OccupationVector(occupations)
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Mode labels with multiplicity, ascending: `(2, 0, 1) -> [0, 0, 2]`.
    pub fn expand(&self) -> Vec<usize> {
        self.0.iter().enumerate().flat_map(|(i, &c)| core::iter::repeat_n(i, c)).collect()
    }

    fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&c| (1..=c).map(|k| k as f64).product::<f64>()).product()
    }
}

impl From<Vec<usize>> for OccupationVector {
    fn from(v: Vec<usize>) -> Self {
        OccupationVector(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    FockOracle,
    Empirical,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::FockOracle => "fock_oracle",
            Provenance::Empirical => "empirical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Provenance::Exact),
            "fock_oracle" => Some(Provenance::FockOracle),
            "empirical" => Some(Provenance::Empirical),
            _ => None,
        }
    }
}

/// Probabilities over all outcomes of `n` bosons in `m` modes, in
/// [`enumerate_outcomes`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    m: usize,
    n: usize,
    provenance: Provenance,
    entries: Vec<(OccupationVector, f64)>,
}

impl OutcomeDistribution {
    /// Checks that every vector has `m` modes and `n` bosons and every
    /// probability is finite and nonnegative. Normalization is checked only
    /// for exact and oracle provenance.
    pub fn from_entries(
        m: usize,
        n: usize,
        provenance: Provenance,
        entries: Vec<(OccupationVector, f64)>,
    ) -> Result<Self, StatsError> {
        for (s, p) in &entries {
            if s.modes() != m {
                return Err(StatsError::DimensionMismatch { expected: m, found: s.modes() });
            }
            if s.total() != n {
                return Err(StatsError::TotalMismatch { output: s.total(), input: n });
            }
            if !(p.is_finite() && *p >= -1e-12) {
                return Err(StatsError::InvalidEntry("probability must be finite and nonnegative"));
            }
        }
        if entries.windows(2).any(|w| w[0].0 <= w[1].0) {
            return Err(StatsError::InvalidEntry("outcomes must be strictly descending lexicographically"));
        }
        let dist = OutcomeDistribution { m, n, provenance, entries };
        if provenance != Provenance::Empirical && dist.normalization_residual() > NORMALIZATION_TOL {
            return Err(StatsError::NotNormalized(dist.total_probability()));
        }
        Ok(dist)
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn bosons(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn entries(&self) -> &[(OccupationVector, f64)] {
        &self.entries
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|(_, p)| *p)
    }

    pub fn probability_of(&self, s: &OccupationVector) -> Option<f64> {
        // Entries are sorted descending.
        self.entries.binary_search_by(|(v, _)| s.cmp(v)).ok().map(|i| self.entries[i].1)
    }

    pub fn total_probability(&self) -> f64 {
        self.probabilities().sum()
    }

    pub fn normalization_residual(&self) -> f64 {
        (self.total_probability() - 1.0).abs()
    }
}

/// Number of ways to place `n` bosons in `m` modes, `C(n + m - 1, m - 1)`.
pub fn fock_dimension(m: usize, n: usize) -> u128 {
    if m == 0 {
        return u128::from(n == 0);
    }
    let k = (m - 1).min(n) as u128;
    let top = (n + m - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (top - i) / (i + 1);
    }
    acc
}

/// All compositions of `n` into `m` parts, descending lexicographically:
/// `(n, 0, ..., 0)` first and `(0, ..., 0, n)` last.
pub fn enumerate_outcomes(m: usize, n: usize) -> Vec<OccupationVector> {
    fn fill(prefix: &mut Vec<usize>, m: usize, remaining: usize, out: &mut Vec<OccupationVector>) {
        if prefix.len() + 1 == m {
            prefix.push(remaining);
            out.push(OccupationVector(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            fill(prefix, m, remaining - first, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    fill(&mut Vec::with_capacity(m), m, n, &mut out);
    out
}

fn check_pair(lambda: &ModeUnitary, s: &OccupationVector, t: &OccupationVector) -> Result<(), StatsError> {
    let m = lambda.dim();
    for v in [s, t] {
        if v.modes() != m {
            return Err(StatsError::DimensionMismatch { expected: m, found: v.modes() });
        }
    }
    if s.total() != t.total() {
        return Err(StatsError::TotalMismatch { output: s.total(), input: t.total() });
    }
    Ok(())
}

/// `N x N` matrix with entry `(r, c) = Λ[(out_r, in_c)]`, where `out` lists
/// output modes with multiplicity `s_j` and `in` lists input modes with
/// multiplicity `t_i`, both ascending with repeats adjacent.
pub fn build_submatrix(
    lambda: &ModeUnitary,
    s: &OccupationVector,
    t: &OccupationVector,
) -> Result<CMatrix, StatsError> {
    check_pair(lambda, s, t)?;
    let outs = s.expand();
    let ins = t.expand();
    let m = lambda.matrix();
    Ok(CMatrix::from_fn(outs.len(), |r, c| m[(outs[r], ins[c])]))
}

/// `P(S|T)` from the Ryser permanent.
pub fn outcome_probability(
    lambda: &ModeUnitary,
    s: &OccupationVector,
    t: &OccupationVector,
) -> Result<f64, StatsError> {
    let sub = build_submatrix(lambda, s, t)?;
    let per = permanent_ryser(&sub)?;
    Ok(per.norm_sqr() / (s.factorial_product() * t.factorial_product()))
}

/// `P(S|T)` for every outcome `S`.
pub fn exact_distribution(lambda: &ModeUnitary, t: &OccupationVector) -> Result<OutcomeDistribution, StatsError> {
    if t.modes() != lambda.dim() {
        return Err(StatsError::DimensionMismatch { expected: lambda.dim(), found: t.modes() });
    }
    let n = t.total();
    let entries = enumerate_outcomes(lambda.dim(), n)
        .into_iter()
        .map(|s| {
            let p = outcome_probability(lambda, &s, t)?;
            Ok((s, p))
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    OutcomeDistribution::from_entries(lambda.dim(), n, Provenance::Exact, entries)
}

/// Inverse-CDF sampling over the distribution's outcome order. The stream
/// is ChaCha8 seeded with `seed` via `SeedableRng::seed_from_u64`, one
/// uniform `f64` per sample.
pub fn sample_outcomes(
    dist: &OutcomeDistribution,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<OccupationVector>, StatsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_outcomes_with(dist, n_samples, &mut rng)
}

pub fn sample_outcomes_with<R: Rng + ?Sized>(
    dist: &OutcomeDistribution,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<OccupationVector>, StatsError> {
    if n_samples == 0 {
        return Err(StatsError::NoSamples);
    }
    if dist.entries.is_empty() || dist.normalization_residual() > NORMALIZATION_TOL {
        return Err(StatsError::NotNormalized(dist.total_probability()));
    }
    let mut cdf = Vec::with_capacity(dist.entries.len());
    let mut acc = 0.0;
    for (_, p) in &dist.entries {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let last_positive = dist.entries.iter().rposition(|(_, p)| *p > 0.0).unwrap_or(0);
    Ok((0..n_samples)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let idx = cdf.partition_point(|&c| c <= u).min(last_positive);
            dist.entries[idx].0.clone()
        })
        .collect())
}

/// Relative frequencies of `samples` over the full outcome set of `(m, n)`.
pub fn empirical_distribution(m: usize, samples: &[OccupationVector]) -> Result<OutcomeDistribution, StatsError> {
    let first = samples.first().ok_or(StatsError::NoSamples)?;
    let n = first.total();
    let outcomes = enumerate_outcomes(m, n);
    let mut counts = alloc::vec![0usize; outcomes.len()];
    for s in samples {
        if s.modes() != m {
            return Err(StatsError::DimensionMismatch { expected: m, found: s.modes() });
        }
        let idx = outcomes
            .binary_search_by(|v| s.cmp(v))
            .map_err(|_| StatsError::TotalMismatch { output: s.total(), input: n })?;
        counts[idx] += 1;
    }
    let total = samples.len() as f64;
    let entries = outcomes.into_iter().zip(counts).map(|(s, c)| (s, c as f64 / total)).collect();
    OutcomeDistribution::from_entries(m, n, Provenance::Empirical, entries)
}

/// `(1/2) sum |p_i - q_i|` over identical outcome lists.
pub fn total_variation_distance(p: &OutcomeDistribution, q: &OutcomeDistribution) -> Result<f64, StatsError> {
    if p.m != q.m || p.n != q.n || p.entries.len() != q.entries.len() {
        return Err(StatsError::ShapeMismatch);
    }
    let mut sum = 0.0;
    for ((s, a), (t, b)) in p.entries.iter().zip(&q.entries) {
        if s != t {
            return Err(StatsError::ShapeMismatch);
        }
        sum += (a - b).abs();
    }
    Ok((0.5 * sum).min(1.0))
}
