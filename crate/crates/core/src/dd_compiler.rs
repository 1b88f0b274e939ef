//! Dynamical-decoupling compiler: realizes adjacent-pair beam splitters with
//! the always-on long-range hopping Hamiltonian plus instantaneous `pi` phase
//! flips, and whole unitaries by chaining those with Reck phases.
//!
//! A `pi` flip on mode `i` conjugates the generator as `K_ik -> -K_ik` for all
//! `k`. Between flips the chain therefore evolves under `F K F`, where `F` is
//! the current sign frame (the product of flips applied so far). A schedule is
//! built from frames: each frame is held for an equal share of the evolution,
//! frame changes are implemented by flipping the modes whose sign changes,
//! and every sub-interval starts and ends in the all-`+` frame so that the net
//! decoupling phase on every mode is a multiple of `2 pi`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::ion_chain::CouplingMatrix;
use crate::linalg::{CMatrix, C64};
use crate::linear_optics::{reck_decompose, Element, ElementSequence, ModeUnitary, OpticsError, Propagator};

pub const DEFAULT_N_SUB: usize = 16;
/// A beam splitter whose pair coupling is this many times weaker than the
/// strongest coupling in the chain is rejected by default.
pub const DEFAULT_MAX_DURATION_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("pair index {pair} out of range for {dim} modes")]
    PairOutOfRange { pair: usize, dim: usize },
    #[error("beam splitter angle {0} outside [0, pi/2]")]
    AngleOutOfRange(f64),
    #[error("n_sub must be at least 1")]
    ZeroSubdivisions,
    #[error("schedule duration {duration:e} s exceeds limit {limit:e} s (pair coupling too weak)")]
    DurationTooLong { duration: f64, limit: f64 },
    #[error("dimension mismatch: couplings have {0} modes, target has {1}")]
    DimensionMismatch(usize, usize),
    #[error("segment duration {0} is not a finite nonnegative number")]
    InvalidSegment(f64),
    #[error("phase event for mode {mode} at t = {time} s is invalid for {dim} modes over {total} s")]
    InvalidEvent { mode: usize, time: f64, dim: usize, total: f64 },
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// Decoupling pattern family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Alternating signs outward from the kept pair; cancels all other
    /// nearest-neighbour couplings, leaves longer-range same-sign pairs.
    NearestNeighbor,
    /// Sylvester-Hadamard frames; cancels every non-target coupling at first
    /// order regardless of range.
    Hadamard,
}

/// Per-mode signs; `-1` marks modes flipped for that frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn all_plus(dim: usize) -> Self {
        SignPattern(vec![1; dim])
    }

    /// Accepts only entries `+1` and `-1`.
    pub fn from_signs(signs: Vec<i8>) -> Option<Self> {
        signs.iter().all(|&s| s == 1 || s == -1).then_some(SignPattern(signs))
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

fn check_pair(dim: usize, pair: usize) -> Result<(), CompileError> {
    if pair + 1 >= dim {
        return Err(CompileError::PairOutOfRange { pair, dim });
    }
    Ok(())
}

/// Keeps modes `pair` and `pair + 1` at `+` and alternates outward, so every
/// other adjacent pair has opposite signs.
pub fn nn_isolation_pattern(dim: usize, pair: usize) -> Result<SignPattern, CompileError> {
    check_pair(dim, pair)?;
    let signs = (0..dim)
        .map(|i| {
            let dist = if i <= pair { pair - i } else { i - (pair + 1) };
            if dist % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok(SignPattern(signs))
}

/// Slice frames from a Sylvester-Hadamard matrix of order `P`, the smallest
/// power of two `>= dim - 1`. The kept pair shares row 0 (all `+`), every
/// other mode takes its own row, and slice `t` uses column `t`. The slice
/// average of `s_i s_k` is then 1 for the kept pair and 0 for all others.
pub fn hadamard_slice_patterns(dim: usize, pair: usize) -> Result<Vec<SignPattern>, CompileError> {
    check_pair(dim, pair)?;
    let order = (dim - 1).next_power_of_two();
    let rows: Vec<usize> = (0..dim)
        .map(|i| {
            if i == pair || i == pair + 1 {
                0
            } else if i < pair {
                i + 1
            } else {
                i - 1
            }
        })
        .collect();
    let hadamard = |r: usize, t: usize| if (r & t).count_ones().is_multiple_of(2) { 1i8 } else { -1 };
    Ok((0..order).map(|t| SignPattern(rows.iter().map(|&r| hadamard(r, t)).collect())).collect())
}

/// Instantaneous single-mode phase `e^{i phi}` applied at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEvent {
    pub time: f64,
    pub mode: usize,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// Free evolution under the full coupling matrix for this many seconds.
    Evolve(f64),
    Phase(PhaseEvent),
}

/// Alternating free-evolution segments and phase events.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    dim: usize,
    steps: Vec<Step>,
    total: f64,
}

impl PulseSchedule {
    pub fn empty(dim: usize) -> Self {
        PulseSchedule { dim, steps: Vec::new(), total: 0.0 }
    }

    /// Rebuilds a schedule from steps, checking event times and indices.
    pub fn from_steps(dim: usize, steps: Vec<Step>) -> Result<Self, CompileError> {
        let mut sched = PulseSchedule::empty(dim);
        for step in steps {
            match step {
                Step::Evolve(d) => {
                    if !(d.is_finite() && d >= 0.0) {
                        return Err(CompileError::InvalidSegment(d));
                    }
                    sched.evolve(d);
                }
                Step::Phase(ev) => {
                    let rel = (ev.time - sched.total).abs();
                    if ev.mode >= dim || !ev.phi.is_finite() || rel > 1e-9 * sched.total.max(1e-300) {
                        return Err(CompileError::InvalidEvent {
                            mode: ev.mode,
                            time: ev.time,
                            dim,
                            total: sched.total,
                        });
                    }
                    sched.steps.push(Step::Phase(ev));
                }
            }
        }
        Ok(sched)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn total_duration(&self) -> f64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn phase_events(&self) -> impl Iterator<Item = &PhaseEvent> {
        self.steps.iter().filter_map(|s| match s {
            Step::Phase(p) => Some(p),
            Step::Evolve(_) => None,
        })
    }

    pub fn segment_durations(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().filter_map(|s| match s {
            Step::Evolve(d) => Some(*d),
            Step::Phase(_) => None,
        })
    }

    fn evolve(&mut self, duration: f64) {
        if duration <= 0.0 {
            return;
        }
        if let Some(Step::Evolve(last)) = self.steps.last_mut() {
            *last += duration;
        } else {
            self.steps.push(Step::Evolve(duration));
        }
        self.total += duration;
    }

    fn phase(&mut self, mode: usize, phi: f64) {
        self.steps.push(Step::Phase(PhaseEvent { time: self.total, mode, phi }));
    }

    /// Appends `other`, shifting its event times.
    pub fn append(&mut self, other: &PulseSchedule) {
        assert_eq!(self.dim, other.dim);
        for step in &other.steps {
            match *step {
                Step::Evolve(d) => self.evolve(d),
                Step::Phase(ev) => self.phase(ev.mode, ev.phi),
            }
        }
    }
}

/// Compiler knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    pub n_sub: usize,
    pub scheme: Scheme,
    /// Longest allowed beam-splitter duration in seconds. `None` means
    /// `DEFAULT_MAX_DURATION_FACTOR / max K_ij`.
    pub max_duration: Option<f64>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { n_sub: DEFAULT_N_SUB, scheme: Scheme::Hadamard, max_duration: None }
    }
}

impl CompileOptions {
    pub fn new(n_sub: usize, scheme: Scheme) -> Self {
        CompileOptions { n_sub, scheme, max_duration: None }
    }
}

/// Frames held during one sub-interval, before symmetrization.
fn frames(dim: usize, pair: usize, scheme: Scheme) -> Result<Vec<SignPattern>, CompileError> {
    match scheme {
        Scheme::NearestNeighbor => Ok(vec![SignPattern::all_plus(dim), nn_isolation_pattern(dim, pair)?]),
        Scheme::Hadamard => hadamard_slice_patterns(dim, pair),
    }
}

/// Schedule for `exp(-i theta X_pair)` using `n_sub` palindromic repetitions
/// of the scheme's frames. Total evolution time is `theta / K_{pair,pair+1}`.
pub fn compile_beam_splitter(
    k: &CouplingMatrix,
    pair: usize,
    theta: f64,
    opts: &CompileOptions,
) -> Result<PulseSchedule, CompileError> {
    let dim = k.dim();
    check_pair(dim, pair)?;
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(CompileError::AngleOutOfRange(theta));
    }
    if opts.n_sub == 0 {
        return Err(CompileError::ZeroSubdivisions);
    }
    let mut sched = PulseSchedule::empty(dim);
    if theta == 0.0 {
        return Ok(sched);
    }
    let rate = k.rate(pair, pair + 1);
    let duration = theta / rate;
    let limit = opts.max_duration.unwrap_or(DEFAULT_MAX_DURATION_FACTOR / k.max_rate());
    if !(duration.is_finite() && duration <= limit) {
        return Err(CompileError::DurationTooLong { duration, limit });
    }

    let base = frames(dim, pair, opts.scheme)?;
    let mut order: Vec<&SignPattern> = base.iter().collect();
    order.extend(base.iter().rev());
    let slice = duration / (opts.n_sub * order.len()) as f64;

    let plus = SignPattern::all_plus(dim);
    for _ in 0..opts.n_sub {
        let mut current = &plus;
        for frame in &order {
            flip_between(&mut sched, current, frame);
            sched.evolve(slice);
            current = frame;
        }
        flip_between(&mut sched, current, &plus);
    }
    Ok(sched)
}

fn flip_between(sched: &mut PulseSchedule, from: &SignPattern, to: &SignPattern) {
    for (mode, (a, b)) in from.0.iter().zip(&to.0).enumerate() {
        if a != b {
            sched.phase(mode, PI);
        }
    }
}

/// Compiles an element sequence: beam splitters through
/// [`compile_beam_splitter`], phases as instantaneous events. Exactly-zero
/// phases are dropped.
pub fn compile_sequence(
    k: &CouplingMatrix,
    seq: &ElementSequence,
    opts: &CompileOptions,
) -> Result<PulseSchedule, CompileError> {
    if k.dim() != seq.dim() {
        return Err(CompileError::DimensionMismatch(k.dim(), seq.dim()));
    }
    let mut sched = PulseSchedule::empty(k.dim());
    for e in seq.elements() {
        match e {
            Element::Bs(bs) => {
                let part = compile_beam_splitter(k, bs.pair(), bs.theta(), opts)?;
                sched.append(&part);
            }
            Element::Phase(p) => {
                if p.phi() != 0.0 {
                    sched.phase(p.mode(), p.phi());
                }
            }
        }
    }
    Ok(sched)
}

/// Reck-decomposes `target` and compiles the resulting sequence.
pub fn compile_unitary(
    k: &CouplingMatrix,
    target: &ModeUnitary,
    opts: &CompileOptions,
) -> Result<PulseSchedule, CompileError> {
    if k.dim() != target.dim() {
        return Err(CompileError::DimensionMismatch(k.dim(), target.dim()));
    }
    let seq = reck_decompose(target, 1e-12)?;
    compile_sequence(k, &seq, opts)
}

/// Executes a schedule against the full coupling matrix.
pub fn simulate_schedule(k: &CouplingMatrix, sched: &PulseSchedule) -> Result<ModeUnitary, CompileError> {
    if k.dim() != sched.dim() {
        return Err(CompileError::DimensionMismatch(k.dim(), sched.dim()));
    }
    let prop = Propagator::from_couplings(k);
    let mut m = CMatrix::identity(sched.dim());
    for step in &sched.steps {
        match *step {
            Step::Evolve(d) => m = prop.evolve(d).matrix() * &m,
            Step::Phase(ev) => m.scale_row(ev.mode, C64::from_polar(1.0, ev.phi)),
        }
    }
    Ok(ModeUnitary::from_matrix_unchecked(m))
}

/// Slice-average of `s_i s_k` over a set of frames, as an exact fraction
/// `(numerator, denominator)`.
pub fn pair_average(patterns: &[SignPattern], i: usize, k: usize) -> (i64, i64) {
    let sum: i64 = patterns.iter().map(|p| (p.0[i] * p.0[k]) as i64).sum();
    (sum, patterns.len() as i64)
}
