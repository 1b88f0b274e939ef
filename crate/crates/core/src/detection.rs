//! Consecutive quantum-jump readout of local phonon numbers.
//!
//! One round is: sideband transfer `|n+1>|D> -> |n>|B>`, carrier flip
//! `D <-> B`, spin readout. The spin reads bright exactly when the mode was
//! empty before the round, so the number of dark rounds before the first
//! bright one is the phonon number. Transfer and flip are ideal; the spin
//! readout reports the true state with probability `f`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::boson_stats::OccupationVector;

pub const DEFAULT_MAX_REPETITIONS: u32 = 10;
/// Residual excitation after sideband cooling bounds the default
/// preparation error.
pub const DEFAULT_PREP_ERROR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectionError {
    #[error("readout fidelity must lie in (0.5, 1], got {0}")]
    InvalidFidelity(f64),
    #[error("preparation error must lie in [0, 1), got {0}")]
    InvalidPrepError(f64),
    #[error("max_repetitions must be at least 1")]
    InvalidMaxRepetitions,
    #[error("readout overflow: no bright outcome within {max_repetitions} repetitions")]
    Overflow { max_repetitions: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    readout_fidelity: f64,
    max_repetitions: u32,
    prep_error: f64,
}

impl DetectionParams {
    pub fn new(readout_fidelity: f64, max_repetitions: u32, prep_error: f64) -> Result<Self, DetectionError> {
        if !(readout_fidelity > 0.5 && readout_fidelity <= 1.0) {
            return Err(DetectionError::InvalidFidelity(readout_fidelity));
        }
        if !(0.0..1.0).contains(&prep_error) {
            return Err(DetectionError::InvalidPrepError(prep_error));
        }
        if max_repetitions == 0 {
            return Err(DetectionError::InvalidMaxRepetitions);
        }
        Ok(DetectionParams { readout_fidelity, max_repetitions, prep_error })
    }

    /// Perfect readout and preparation.
    pub fn ideal() -> Self {
        DetectionParams { readout_fidelity: 1.0, max_repetitions: DEFAULT_MAX_REPETITIONS, prep_error: 0.0 }
    }

    pub fn readout_fidelity(&self) -> f64 {
        self.readout_fidelity
    }

    pub fn max_repetitions(&self) -> u32 {
        self.max_repetitions
    }

    pub fn prep_error(&self) -> f64 {
        self.prep_error
    }
}

/// Result of reading one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeReadout {
    /// Dark rounds seen before the first bright one.
    pub reported_n: u32,
    /// Repetitions of the transfer/flip/readout steps after which bright was
    /// registered; the total number of spin readouts is `repetitions + 1`.
    pub repetitions: u32,
}

impl ModeReadout {
    pub fn readouts(&self) -> u32 {
        self.repetitions + 1
    }
}

/// Phonon-number distribution of a mode prepared towards `n_target`, indexed
/// by phonon number: `1 - eps` on the target, `eps / 2` on each neighbour,
/// with the mass below zero folded onto `n = 0`.
pub fn prepare_mode_distribution(n_target: u32, eps: f64) -> Result<Vec<f64>, DetectionError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(DetectionError::InvalidPrepError(eps));
    }
    let n = n_target as usize;
    let mut p = vec![0.0; n + 2];
    p[n] += 1.0 - eps;
    p[n + 1] += eps / 2.0;
    p[n.saturating_sub(1)] += eps / 2.0;
    while p.last() == Some(&0.0) && p.len() > n + 1 {
        p.pop();
    }
    Ok(p)
}

/// Draws a phonon number from a distribution indexed by phonon number.
pub fn sample_phonon_number<R: Rng + ?Sized>(dist: &[f64], rng: &mut R) -> u32 {
    let total: f64 = dist.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (n, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return n as u32;
        }
    }
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
}

/// Runs the readout rounds on a mode holding `true_n` phonons.
///
/// A false bright ends the protocol early; a false dark on an empty mode
/// continues with the mode still empty. Needing more than
/// `max_repetitions` dark rounds is an overflow.
pub fn measure_mode<R: Rng + ?Sized>(
    true_n: u32,
    params: &DetectionParams,
    rng: &mut R,
) -> Result<ModeReadout, DetectionError> {
    let f = params.readout_fidelity;
    let mut remaining = true_n;
    let mut dark_rounds = 0u32;
    loop {
        let truly_bright = remaining == 0;
        remaining = remaining.saturating_sub(1);
        let correct = f >= 1.0 || rng.random::<f64>() < f;
        let reads_bright = truly_bright == correct;
        if reads_bright {
            return Ok(ModeReadout { reported_n: dark_rounds, repetitions: dark_rounds });
        }
        dark_rounds += 1;
        if dark_rounds > params.max_repetitions {
            return Err(DetectionError::Overflow { max_repetitions: params.max_repetitions });
        }
    }
}

/// Independent generator for `(trial, mode)`. Streams are assigned by index,
/// so results do not depend on evaluation order.
pub fn substream(seed: u64, trial: u64, mode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(1 << 20).wrapping_add(mode));
    rng
}

/// Reads every mode of `occupations` with its own substream of `seed`.
/// Per-mode overflows are returned in place rather than aborting the chain.
pub fn measure_chain(
    occupations: &OccupationVector,
    params: &DetectionParams,
    seed: u64,
) -> Vec<Result<ModeReadout, DetectionError>> {
    measure_chain_trial(occupations, params, seed, 0)
}

pub fn measure_chain_trial(
    occupations: &OccupationVector,
    params: &DetectionParams,
    seed: u64,
    trial: u64,
) -> Vec<Result<ModeReadout, DetectionError>> {
    occupations
        .occupations()
        .iter()
        .enumerate()
        .map(|(mode, &n)| measure_mode(n as u32, params, &mut substream(seed, trial, mode as u64)))
        .collect()
}

/// One row of a detection run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadoutRecord {
    pub trial: u64,
    pub mode: usize,
    /// Phonons actually present at readout, after preparation noise.
    pub true_n: u32,
    pub reported_n: u32,
    pub repetitions: u32,
    pub overflow: bool,
}

/// Prepares each mode of each nominal occupation vector with the
/// preparation-noise model and reads it out. Trial `t` uses substreams
/// `(seed, t, mode)`.
pub fn simulate_detection(
    nominal: &[OccupationVector],
    params: &DetectionParams,
    seed: u64,
) -> Result<Vec<ReadoutRecord>, DetectionError> {
    let mut records = Vec::new();
    for (trial, occ) in nominal.iter().enumerate() {
        records.extend(simulate_detection_trial(occ, params, seed, trial as u64)?);
    }
    Ok(records)
}

/// One trial of [`simulate_detection`]; trials are independent, so they can
/// be evaluated in any order.
pub fn simulate_detection_trial(
    nominal: &OccupationVector,
    params: &DetectionParams,
    seed: u64,
    trial: u64,
) -> Result<Vec<ReadoutRecord>, DetectionError> {
    let mut records = Vec::with_capacity(nominal.modes());
    for (mode, &n) in nominal.occupations().iter().enumerate() {
        let mut rng = substream(seed, trial, mode as u64);
        let true_n = if params.prep_error > 0.0 {
            sample_phonon_number(&prepare_mode_distribution(n as u32, params.prep_error)?, &mut rng)
        } else {
            n as u32
        };
        let record = match measure_mode(true_n, params, &mut rng) {
            Ok(r) => ReadoutRecord {
                trial,
                mode,
                true_n,
                reported_n: r.reported_n,
                repetitions: r.repetitions,
                overflow: false,
            },
            Err(DetectionError::Overflow { max_repetitions }) => ReadoutRecord {
                trial,
                mode,
                true_n,
                reported_n: max_repetitions,
                repetitions: max_repetitions,
                overflow: true,
            },
            Err(e) => return Err(e),
        };
        records.push(record);
    }
    Ok(records)
}
