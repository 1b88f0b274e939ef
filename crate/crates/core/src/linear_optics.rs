//! Single-particle mode unitaries: beam splitters, phase shifts, evolution
//! under a hopping generator, and the triangular (Reck) decomposition into
//! adjacent-pair beam splitters and single-mode phases.
//!
//! Index convention: `Λ[(out, in)]` is the amplitude for a boson entering
//! mode `in` to leave in mode `out`. All mode indices are zero-based and a
//! beam splitter with pair index `j` couples modes `j` and `j + 1`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

// Float supplies the math methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use thiserror::Error;

use crate::ion_chain::CouplingMatrix;
use crate::linalg::{hermitian_eigen, orthonormalize_columns, CMatrix, HermitianEigen, C64};

/// Tolerance used when accepting a matrix as a [`ModeUnitary`].
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("mode index {index} out of range for {dim} modes")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("beam splitter angle {0} outside [0, pi/2]")]
    AngleOutOfRange(f64),
    #[error("matrix is not unitary (defect {defect:e}, tolerance {tol:e})")]
    NotUnitary { defect: f64, tol: f64 },
    #[error("generator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix has zero dimension")]
    Empty,
}

/// A unitary `M x M` matrix acting on mode operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary(CMatrix);

impl ModeUnitary {
    pub fn new(matrix: CMatrix) -> Result<Self, OpticsError> {
        Self::with_tolerance(matrix, UNITARITY_TOL)
    }

    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self, OpticsError> {
        if matrix.dim() == 0 {
            return Err(OpticsError::Empty);
        }
        let defect = if matrix.is_finite() { matrix.unitarity_defect() } else { f64::INFINITY };
        if defect >= tol {
            return Err(OpticsError::NotUnitary { defect, tol });
        }
        Ok(ModeUnitary(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        ModeUnitary(CMatrix::identity(dim))
    }

    /// Discrete Fourier interferometer `exp(2 pi i j k / M) / sqrt(M)`.
    pub fn fourier(dim: usize) -> Self {
        let norm = 1.0 / (dim as f64).sqrt();
        ModeUnitary(CMatrix::from_fn(dim, |j, k| {
            let angle = 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
            C64::from_polar(norm, angle)
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &ModeUnitary) -> ModeUnitary {
        ModeUnitary(&self.0 * &other.0)
    }

    pub fn adjoint(&self) -> ModeUnitary {
        ModeUnitary(self.0.adjoint())
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.0.unitarity_defect()
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        ModeUnitary(matrix)
    }
}

fn check_pair(j: usize, dim: usize) -> Result<(), OpticsError> {
    if j + 1 >= dim {
        return Err(OpticsError::IndexOutOfRange { index: j, dim });
    }
    Ok(())
}

fn check_mode(i: usize, dim: usize) -> Result<(), OpticsError> {
    if i >= dim {
        return Err(OpticsError::IndexOutOfRange { index: i, dim });
    }
    Ok(())
}

/// 2x2 block of `exp(-i theta sigma_x)`.
fn bs_block(theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

/// `exp(-i theta X_j)` where `X_j` couples modes `j` and `j + 1`. Any real
/// `theta` is accepted here; [`BsElement`] restricts it to `[0, pi/2]`.
pub fn beam_splitter_unitary(j: usize, theta: f64, dim: usize) -> Result<ModeUnitary, OpticsError> {
    check_pair(j, dim)?;
    let mut m = CMatrix::identity(dim);
    m.rotate_rows(j, j + 1, bs_block(theta));
    Ok(ModeUnitary(m))
}

/// Diagonal unitary with `e^{i phi}` on mode `i`.
pub fn phase_unitary(i: usize, phi: f64, dim: usize) -> Result<ModeUnitary, OpticsError> {
    check_mode(i, dim)?;
    let mut m = CMatrix::identity(dim);
    m[(i, i)] = C64::from_polar(1.0, phi);
    Ok(ModeUnitary(m))
}

/// Precomputed spectral form of a Hermitian generator, so repeated
/// evolutions reuse one eigendecomposition.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigen: HermitianEigen,
}

impl Propagator {
    pub fn from_couplings(k: &CouplingMatrix) -> Self {
        let h = CMatrix::from_real(k.dim(), k.rates());
        Propagator { eigen: hermitian_eigen(&h) }
    }

    pub fn from_hermitian(h: &CMatrix) -> Result<Self, OpticsError> {
        let scale = h.as_slice().iter().map(|z| z.norm()).fold(1.0, f64::max);
        let defect = h.hermiticity_defect();
        if !h.is_finite() || defect > 1e-12 * scale {
            return Err(OpticsError::NotHermitian(defect));
        }
        Ok(Propagator { eigen: hermitian_eigen(h) })
    }

    pub fn dim(&self) -> usize {
        self.eigen.vectors.dim()
    }

    /// `exp(-i H t)`.
    pub fn evolve(&self, t: f64) -> ModeUnitary {
        ModeUnitary(self.eigen.map_spectrum(|l| C64::from_polar(1.0, -l * t)))
    }
}

/// `exp(-i K t)` for the hopping matrix `K`.
pub fn evolve_modes(k: &CouplingMatrix, t: f64) -> ModeUnitary {
    Propagator::from_couplings(k).evolve(t)
}

/// `exp(-i H t)` for an arbitrary Hermitian generator.
pub fn evolve_hermitian(h: &CMatrix, t: f64) -> Result<ModeUnitary, OpticsError> {
    Ok(Propagator::from_hermitian(h)?.evolve(t))
}

/// Adjacent-pair beam splitter `exp(-i theta X_j)`, `theta` in `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsElement {
    pair: usize,
    theta: f64,
}

impl BsElement {
    pub fn new(pair: usize, theta: f64) -> Result<Self, OpticsError> {
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(OpticsError::AngleOutOfRange(theta));
        }
        Ok(BsElement { pair, theta })
    }

    pub fn pair(&self) -> usize {
        self.pair
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Single-mode phase `e^{i phi}`, `phi` reduced to `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseElement {
    mode: usize,
    phi: f64,
}

impl PhaseElement {
    pub fn new(mode: usize, phi: f64) -> Self {
        PhaseElement { mode, phi: wrap_phase(phi) }
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Reduces an angle to `[0, 2 pi)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = phi % two_pi;
    let r = if r < 0.0 { r + two_pi } else { r };
    if r >= two_pi {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    Bs(BsElement),
    Phase(PhaseElement),
}

/// Elements in application order: the first element acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSequence {
    dim: usize,
    elements: Vec<Element>,
}

impl ElementSequence {
    pub fn new(dim: usize, elements: Vec<Element>) -> Result<Self, OpticsError> {
        if dim == 0 {
            return Err(OpticsError::Empty);
        }
        for e in &elements {
            match e {
                Element::Bs(bs) => check_pair(bs.pair, dim)?,
                Element::Phase(p) => check_mode(p.mode, dim)?,
            }
        }
        Ok(ElementSequence { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn beam_splitters(&self) -> impl Iterator<Item = &BsElement> {
        self.elements.iter().filter_map(|e| match e {
            Element::Bs(b) => Some(b),
            Element::Phase(_) => None,
        })
    }

    pub fn phases(&self) -> impl Iterator<Item = &PhaseElement> {
        self.elements.iter().filter_map(|e| match e {
            Element::Phase(p) => Some(p),
            Element::Bs(_) => None,
        })
    }
}

/// Ordered product `E_last ... E_first`.
pub fn recompose(seq: &ElementSequence) -> ModeUnitary {
    let mut m = CMatrix::identity(seq.dim);
    for e in &seq.elements {
        match *e {
            Element::Bs(bs) => m.rotate_rows(bs.pair, bs.pair + 1, bs_block(bs.theta)),
            Element::Phase(p) => m.scale_row(p.mode, C64::from_polar(1.0, p.phi)),
        }
    }
    ModeUnitary(m)
}

/// Triangular nulling decomposition.
///
/// Column by column, from the bottom row upwards, each sub-diagonal entry
/// `U[r][c]` is nulled by left-multiplying rows `(r-1, r)` with
/// `BS(-theta) P(r-1, phi)`. Once every sub-diagonal entry is gone the
/// remainder is a diagonal `D`, so `U = T_1^dagger ... T_n^dagger D` where
/// `T^dagger = P(r-1, -phi) BS(theta)`. Entries already below `tol` still
/// produce a zero-angle element so the sequence shape depends only on `M`.
///
/// The output has exactly `M(M-1)/2` beam splitters and `M(M+1)/2` phases.
pub fn reck_decompose(u: &ModeUnitary, tol: f64) -> Result<ElementSequence, OpticsError> {
    let n = u.dim();
    let defect = u.unitarity_defect();
    if defect >= tol.max(UNITARITY_TOL) {
        return Err(OpticsError::NotUnitary { defect, tol });
    }
    let mut w = u.matrix().clone();
    // (pair, theta, phi) of each nulling step, in nulling order.
    let mut steps: Vec<(usize, f64, f64)> = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);

    for col in 0..n.saturating_sub(1) {
        for row in ((col + 1)..n).rev() {
            let a = row - 1;
            let x = w[(a, col)];
            let y = w[(row, col)];
            let (theta, phi) = if y.norm() < tol {
                (0.0, 0.0)
            } else if x.norm() < tol {
                (FRAC_PI_2, y.arg() + FRAC_PI_2)
            } else {
                (y.norm().atan2(x.norm()), y.arg() - x.arg() + FRAC_PI_2)
            };
            w.scale_row(a, C64::from_polar(1.0, phi));
            w.rotate_rows(a, row, bs_block(-theta));
            w[(row, col)] = C64::new(0.0, 0.0);
            steps.push((a, theta, phi));
        }
    }

    let mut elements = Vec::with_capacity(steps.len() * 2 + n);
    for i in 0..n {
        elements.push(Element::Phase(PhaseElement::new(i, w[(i, i)].arg())));
    }
    for &(pair, theta, phi) in steps.iter().rev() {
        elements.push(Element::Bs(BsElement { pair, theta }));
        elements.push(Element::Phase(PhaseElement::new(pair, -phi)));
    }
    ElementSequence::new(n, elements)
}

/// Phase-insensitive distance `1 - |tr(U^dagger V)| / M`.
pub fn unitary_distance(u: &ModeUnitary, v: &ModeUnitary) -> Result<f64, OpticsError> {
    if u.dim() != v.dim() {
        return Err(OpticsError::DimensionMismatch(u.dim(), v.dim()));
    }
    let n = u.dim();
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            tr += u.matrix()[(k, i)].conj() * v.matrix()[(k, i)];
        }
    }
    Ok((1.0 - tr.norm() / n as f64).max(0.0))
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; 1 - u keeps the logarithm finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Gaussian matrix,
/// which fixes the `R` diagonal to be real and positive.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ModeUnitary {
    let mut m = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = C64::new(standard_normal(rng), standard_normal(rng));
        }
    }
    orthonormalize_columns(&mut m);
    ModeUnitary(m)
}
