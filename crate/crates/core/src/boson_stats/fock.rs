//! Many-body oracle: evolves the input Fock state explicitly in the
//! `N`-particle Fock space, without using permanents.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;

use super::{enumerate_outcomes, fock_dimension, OccupationVector, OutcomeDistribution, Provenance, StatsError};
use crate::ion_chain::CouplingMatrix;
use crate::linalg::C64;
use crate::linear_optics::ModeUnitary;

/// Largest Fock basis the oracle will build.
pub const FOCK_MAX_BASIS: usize = 100_000;

/// What drives the many-body evolution.
#[derive(Debug, Clone, Copy)]
pub enum FockSource<'a> {
    /// Single-particle unitary, lifted through `a_i^dagger -> sum_j U_ji a_j^dagger`.
    Unitary(&'a ModeUnitary),
    /// Hopping Hamiltonian `sum K_ij a_i^dagger a_j` applied for `time` seconds,
    /// propagated directly in Fock space.
    Generator { couplings: &'a CouplingMatrix, time: f64 },
}

impl FockSource<'_> {
    fn dim(&self) -> usize {
        match self {
            FockSource::Unitary(u) => u.dim(),
            FockSource::Generator { couplings, .. } => couplings.dim(),
        }
    }
}

/// Output distribution computed by explicit Fock-space evolution of `input`.
pub fn fock_oracle_distribution(
    source: FockSource<'_>,
    input: &OccupationVector,
) -> Result<OutcomeDistribution, StatsError> {
    let m = source.dim();
    if input.modes() != m {
        return Err(StatsError::DimensionMismatch { expected: m, found: input.modes() });
    }
    let n = input.total();
    let size = fock_dimension(m, n);
    if size > FOCK_MAX_BASIS as u128 {
        return Err(StatsError::FockBasisTooLarge { size, max: FOCK_MAX_BASIS });
    }
    let basis = enumerate_outcomes(m, n);
    let amplitudes = match source {
        FockSource::Unitary(u) => lift_unitary(u, input, &basis),
        FockSource::Generator { couplings, time } => propagate_generator(couplings, time, input, &basis),
    };
    let entries = basis.into_iter().zip(amplitudes.iter().map(|a| a.norm_sqr())).collect();
    OutcomeDistribution::from_entries(m, n, Provenance::FockOracle, entries)
}

fn lift_unitary(u: &ModeUnitary, input: &OccupationVector, basis: &[OccupationVector]) -> Vec<C64> {
    let m = u.dim();
    let lambda = u.matrix();
    let mut state: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
    state.insert(vec![0; m], C64::new(1.0, 0.0));
    let mut norm = 1.0;
    for (mode, &count) in input.occupations().iter().enumerate() {
        for created in 1..=count {
            norm *= created as f64;
            let mut next: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
            for (occ, amp) in &state {
                for out in 0..m {
                    let coeff = lambda[(out, mode)];
                    if coeff == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut raised = occ.clone();
                    raised[out] += 1;
                    let bosonic = (raised[out] as f64).sqrt();
                    *next.entry(raised).or_insert(C64::new(0.0, 0.0)) += amp * coeff * bosonic;
                }
            }
            state = next;
        }
    }
    let scale = 1.0 / norm.sqrt();
    basis.iter().map(|occ| state.get(occ.occupations()).copied().unwrap_or(C64::new(0.0, 0.0)) * scale).collect()
}

/// Sparse `N`-particle Hamiltonian in compressed-row form.
struct SparseHamiltonian {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseHamiltonian {
    fn build(k: &CouplingMatrix, basis: &[OccupationVector]) -> Self {
        let index: BTreeMap<&[usize], usize> =
            basis.iter().enumerate().map(|(i, occ)| (occ.occupations(), i)).collect();
        let m = k.dim();
        let mut row_start = Vec::with_capacity(basis.len() + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_start.push(0);
        for occ in basis {
            let n = occ.occupations();
            // <n'| a_i^dagger a_j |n> with n' = n - e_j + e_i.
            for j in 0..m {
                if n[j] == 0 {
                    continue;
                }
                for i in 0..m {
                    let rate = k.rate(i, j);
                    if i == j || rate == 0.0 {
                        continue;
                    }
                    let mut target = n.to_vec();
                    target[j] -= 1;
                    target[i] += 1;
                    let amp = ((n[j] * target[i]) as f64).sqrt();
                    cols.push(index[target.as_slice()]);
                    values.push(rate * amp);
                }
            }
            row_start.push(cols.len());
        }
        // Rows above hold <n'|H|n> keyed by source n; H is symmetric, so the
        // same layout serves as row-major storage.
        SparseHamiltonian { row_start, cols, values }
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        for (row, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for idx in self.row_start[row]..self.row_start[row + 1] {
                acc += x[self.cols[idx]] * self.values[idx];
            }
            *o = acc;
        }
    }

    fn norm_bound(&self) -> f64 {
        (0..self.row_start.len() - 1)
            .map(|r| self.values[self.row_start[r]..self.row_start[r + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `exp(-i H t) |input>` by Taylor series over steps with `||H|| dt <= 1/2`.
fn propagate_generator(
    k: &CouplingMatrix,
    time: f64,
    input: &OccupationVector,
    basis: &[OccupationVector],
) -> Vec<C64> {
    let h = SparseHamiltonian::build(k, basis);
    let dim = basis.len();
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    let start = basis.iter().position(|b| b == input).expect("input is in its own basis");
    psi[start] = C64::new(1.0, 0.0);

    let steps = ((h.norm_bound() * time.abs()) / 0.5).ceil().max(1.0) as usize;
    let dt = time / steps as f64;
    let mut term = vec![C64::new(0.0, 0.0); dim];
    let mut scratch = vec![C64::new(0.0, 0.0); dim];
    for _ in 0..steps {
        term.copy_from_slice(&psi);
        for order in 1..200 {
            h.apply(&term, &mut scratch);
            // term <- (-i dt / order) H term
            let factor = C64::new(0.0, -dt / order as f64);
            let mut size = 0.0f64;
            for (t, s) in term.iter_mut().zip(&scratch) {
                *t = s * factor;
                size = size.max(t.norm());
            }
            for (p, t) in psi.iter_mut().zip(&term) {
                *p += t;
            }
            if size < 1e-18 {
                break;
            }
        }
    }
    psi
}
