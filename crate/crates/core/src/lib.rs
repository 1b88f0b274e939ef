//! Numerical kernels for boson sampling with the local transverse phonon
//! modes of a trapped-ion chain.
//!
//! The pipeline this crate supports:
//!
//! 1. [`ion_chain`]: equilibrium positions of `M` ions in a harmonic trap and
//!    the Coulomb-mediated hopping matrix `K` between their transverse modes.
//! 2. [`linear_optics`]: single-particle mode unitaries, evolution
//!    `exp(-i K t)`, and the Reck decomposition into adjacent beam splitters
//!    and phases.
//! 3. [`dd_compiler`]: pulse schedules of free evolution and instantaneous
//!    phase flips that realize each beam splitter with the always-on chain
//!    Hamiltonian, and a simulator that executes them.
//! 4. [`boson_stats`]: permanents, exact output distributions, an
//!    independent Fock-space oracle, sampling, and distribution distances.
//! 5. [`detection`]: the repeated sideband/carrier/readout protocol that
//!    turns binary spin readout into a phonon-number measurement.
//!
//! Everything here is `no_std` with `alloc`; file formats and the command
//! line live in the companion `phonon-bs` crate.
//!
//! ```
//! use phonon_core::boson_stats::{exact_distribution, OccupationVector};
//! use phonon_core::linear_optics::beam_splitter_unitary;
//!
//! let bs = beam_splitter_unitary(0, core::f64::consts::FRAC_PI_4, 2).unwrap();
//! let dist = exact_distribution(&bs, &OccupationVector::new(vec![1, 1])).unwrap();
//! let p: Vec<f64> = dist.probabilities().collect();
//! assert!(p[1] < 1e-15); // both bosons always leave together
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod boson_stats;
pub mod dd_compiler;
pub mod detection;
pub mod ion_chain;
pub mod linalg;
pub mod linear_optics;

pub use boson_stats::{OccupationVector, OutcomeDistribution, Provenance};
pub use dd_compiler::{CompileOptions, PulseSchedule, Scheme};
pub use detection::{DetectionParams, ModeReadout};
pub use ion_chain::{CouplingMatrix, IonChain, TrapParams};
pub use linalg::{CMatrix, C64};
pub use linear_optics::{ElementSequence, ModeUnitary};

use thiserror::Error;

/// Any error raised by this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Chain(#[from] ion_chain::ChainError),
    #[error(transparent)]
    Optics(#[from] linear_optics::OpticsError),
    #[error(transparent)]
    Compile(#[from] dd_compiler::CompileError),
    #[error(transparent)]
    Stats(#[from] boson_stats::StatsError),
    #[error(transparent)]
    Detection(#[from] detection::DetectionError),
}
