//! Dense complex linear algebra in dimension `d` and `d²`.
//!
//! Bipartite vectors use the `|k k'⟩` basis with Alice's index major, so
//! the amplitude of `|k k'⟩` lives at position `k * d + k'`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Default closeness tolerance for matrix identities.
pub const TOLERANCE: f64 = 1e-12;

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(())
}

/// `e^{2iπk/d}`. `k` may be negative; it is reduced mod `d` first so that
/// exact roots do not accumulate rounding from large arguments.
pub fn root_of_unity(d: usize, k: i64) -> Complex64 {
    let k = k.rem_euclid(d as i64) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * k / d as f64)
}

/// `ω = e^{2iπ/d}`.
pub fn omega(d: usize) -> Complex64 {
    root_of_unity(d, 1)
}

/// Index arithmetic mod `d`, normalized into `[0, d)`.
#[inline]
pub fn wrap(i: i64, d: usize) -> usize {
    i.rem_euclid(d as i64) as usize
}

/// Unitary discrete Fourier matrix, entry `(k, l) = ω^{kl}/√d`.
pub fn fourier_matrix(d: usize) -> Result<ComplexMatrix> {
    check_dimension(d)?;
    let scale = 1.0 / (d as f64).sqrt();
    Ok(ComplexMatrix::from_fn(d, d, |k, l| {
        root_of_unity(d, (k * l) as i64) * scale
    }))
}

/// Kronecker product with `A`'s index major: entry `((k,k'),(l,l')) = A[k,l]·B[k',l']`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Diagonal matrix with the given entries.
pub fn diagonal(entries: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_column_slice(entries))
}

/// Largest entrywise modulus of `a - b`. Shapes must agree.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `‖U U† − I‖_max`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &ComplexMatrix::identity(n, n))
}

pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    u.is_square() && unitarity_defect(u) <= tol
}

/// A pure bipartite state `Σ_j δ_j |j j⟩` with unit-norm coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntangledState {
    deltas: Vec<Complex64>,
}

impl EntangledState {
    /// Normalizes `deltas` to unit norm.
    pub fn new(d: usize, deltas: &[Complex64]) -> Result<Self> {
        check_dimension(d)?;
        if deltas.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: deltas.len(),
            });
        }
        let norm = deltas.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateState);
        }
        Ok(Self {
            deltas: deltas.iter().map(|z| z / norm).collect(),
        })
    }

    /// `(1/√d) Σ_j |j j⟩`.
    pub fn maximally_entangled(d: usize) -> Result<Self> {
        Self::new(d, &vec![Complex64::new(1.0, 0.0); d])
    }

    pub fn psi3() -> Self {
        Self::maximally_entangled(3).expect("d = 3 is valid")
    }

    pub fn psi4() -> Self {
        Self::maximally_entangled(4).expect("d = 4 is valid")
    }

    /// `(|00⟩ + |11⟩ + |22⟩ + |33⟩ − i|44⟩)/√5`.
    pub fn psi5() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self::new(5, &[one, one, one, one, Complex64::new(0.0, -1.0)]).expect("valid")
    }

    /// The reference state paired with each builtin Bell operator.
    pub fn reference(d: usize) -> Result<Self> {
        match d {
            3 => Ok(Self::psi3()),
            4 => Ok(Self::psi4()),
            5 => Ok(Self::psi5()),
            _ => Err(Error::UnsupportedDimension {
                d,
                reason: "reference states exist for d = 3, 4, 5".into(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.deltas.len()
    }

    pub fn deltas(&self) -> &[Complex64] {
        &self.deltas
    }

    /// Expands to the `d²`-vector in the `|k k'⟩` basis.
    pub fn amplitudes(&self) -> ComplexVector {
        let d = self.dim();
        let mut v = ComplexVector::zeros(d * d);
        for (j, delta) in self.deltas.iter().enumerate() {
            v[j * d + j] = *delta;
        }
        v
    }

    /// Reads the diagonal coefficients back out of a `d²`-vector.
    pub fn diagonal_coefficients(v: &ComplexVector, d: usize) -> Vec<Complex64> {
        (0..d).map(|j| v[j * d + j]).collect()
    }

    /// `|ψ⟩⟨ψ|` as a density state.
    pub fn density(&self) -> DensityState {
        let v = self.amplitudes();
        DensityState {
            d: self.dim(),
            matrix: &v * v.adjoint(),
        }
    }

    /// `⟨ψ|(A ⊗ B)|ψ⟩ = Σ_{j,l} δ_j* δ_l A[j,l] B[j,l]`, without forming `A ⊗ B`.
    pub fn product_expectation(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, dj) in self.deltas.iter().enumerate() {
            for (l, dl) in self.deltas.iter().enumerate() {
                acc += dj.conj() * dl * a[(j, l)] * b[(j, l)];
            }
        }
        acc
    }
}

/// A normalized bipartite density matrix on `C^d ⊗ C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    d: usize,
    matrix: ComplexMatrix,
}

impl DensityState {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(d: usize, matrix: ComplexMatrix) -> Result<Self> {
        check_dimension(d)?;
        if matrix.nrows() != d * d || matrix.ncols() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: matrix.nrows(),
            });
        }
        if max_abs_diff(&matrix, &matrix.adjoint()) > TOLERANCE {
            return Err(Error::InvalidConfig(
                "density matrix is not Hermitian".into(),
            ));
        }
        let trace = matrix.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > TOLERANCE {
            return Err(Error::InvalidConfig(format!(
                "density matrix trace is {trace}, expected 1"
            )));
        }
        let min_eig = matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidConfig(format!(
                "density matrix has negative eigenvalue {min_eig}"
            )));
        }
        Ok(Self { d, matrix })
    }

    /// `I/d²`.
    pub fn maximally_mixed(d: usize) -> Result<Self> {
        check_dimension(d)?;
        let n = d * d;
        let matrix = ComplexMatrix::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0);
        Ok(Self { d, matrix })
    }

    pub(crate) fn from_parts_unchecked(d: usize, matrix: ComplexMatrix) -> Self {
        Self { d, matrix }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `tr(ρ (A ⊗ B))`.
    pub fn product_expectation(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
        (&self.matrix * tensor(a, b)).trace()
    }
}

/// Either kind of bipartite state accepted by measurement routines.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(EntangledState),
    Mixed(DensityState),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(s) => s.dim(),
            State::Mixed(s) => s.dim(),
        }
    }

    pub fn product_expectation(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
        match self {
            State::Pure(s) => s.product_expectation(a, b),
            State::Mixed(s) => s.product_expectation(a, b),
        }
    }

    /// Detector-pair probabilities after applying `ua ⊗ ub`, indexed `k * d + k'`.
    pub fn detector_probabilities(&self, ua: &ComplexMatrix, ub: &ComplexMatrix) -> Vec<f64> {
        let u = tensor(ua, ub);
        match self {
            State::Pure(s) => (u * s.amplitudes()).iter().map(|z| z.norm_sqr()).collect(),
            State::Mixed(s) => {
                let rotated = &u * s.matrix() * u.adjoint();
                rotated.diagonal().iter().map(|z| z.re.max(0.0)).collect()
            }
        }
    }
}

impl From<EntangledState> for State {
    fn from(s: EntangledState) -> Self {
        State::Pure(s)
    }
}

impl From<DensityState> for State {
    fn from(s: DensityState) -> Self {
        State::Mixed(s)
    }
}
