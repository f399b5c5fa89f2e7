//! Ditter (multiport beam splitter) measurements.
//!
//! A ditter with phases `Θ = (θ_0, …, θ_{d-1})` applies `U_Θ = F·D_Θ`, where `F`
//! is the unitary Fourier matrix, and `d` detectors then read out the
//! computational basis. With detector `k` reporting `ω^k` the device measures
//!
//! ```text
//! Z_Θ = D_Θ* F† Z F D_Θ = Σ_k θ_k θ*_{k+1} |k+1⟩⟨k|
//! ```
//!
//! Reporting `ω^{-k}` instead (a relabelling of the detectors) measures `Z_Θ†`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qudit::{
    check_dimension, diagonal, fourier_matrix, root_of_unity, wrap, ComplexMatrix, State,
};

/// Tolerance on `|θ_k| = 1` when accepting user phases.
pub const PHASE_TOLERANCE: f64 = 1e-9;

/// Unit-modulus phase shifts parameterizing one ditter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    thetas: Vec<Complex64>,
}

impl PhaseVector {
    pub fn new(thetas: Vec<Complex64>) -> Result<Self> {
        check_dimension(thetas.len())?;
        for (index, t) in thetas.iter().enumerate() {
            let modulus = t.norm();
            if (modulus - 1.0).abs() > PHASE_TOLERANCE || !modulus.is_finite() {
                return Err(Error::InvalidPhase { index, modulus });
            }
        }
        // snap to the unit circle
        Ok(Self {
            thetas: thetas.into_iter().map(|t| t / t.norm()).collect(),
        })
    }

    /// `θ_k = e^{iφ_k}`.
    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        Self::new(
            angles
                .iter()
                .map(|&a| Complex64::from_polar(1.0, a))
                .collect(),
        )
    }

    pub fn ones(d: usize) -> Result<Self> {
        check_dimension(d)?;
        Ok(Self {
            thetas: vec![Complex64::new(1.0, 0.0); d],
        })
    }

    pub fn dim(&self) -> usize {
        self.thetas.len()
    }

    pub fn thetas(&self) -> &[Complex64] {
        &self.thetas
    }

    /// `θ_k` with the index taken mod `d`.
    pub fn at(&self, k: i64) -> Complex64 {
        self.thetas[wrap(k, self.dim())]
    }

    pub fn conj(&self) -> Self {
        Self {
            thetas: self.thetas.iter().map(|t| t.conj()).collect(),
        }
    }

    /// `D_Θ`.
    pub fn diagonal(&self) -> ComplexMatrix {
        diagonal(&self.thetas)
    }
}

/// `θ_j = base^{sign·j·a}`, the `(1, θ^a, θ^{2a}, …)` family.
pub fn geometric_phases(d: usize, base: Complex64, a: i64, sign: i8) -> Result<PhaseVector> {
    check_dimension(d)?;
    let modulus = base.norm();
    if (modulus - 1.0).abs() > PHASE_TOLERANCE {
        return Err(Error::InvalidPhase { index: 1, modulus });
    }
    let arg = base.arg();
    let s = if sign < 0 { -1.0 } else { 1.0 };
    let thetas = (0..d)
        .map(|j| Complex64::from_polar(1.0, arg * s * (j as i64 * a) as f64))
        .collect();
    PhaseVector::new(thetas)
}

/// Which outcome label detector `k` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelConvention {
    /// Detector `k` reports `ω^k`; the device measures `Z_Θ`.
    Standard,
    /// Detector `k` reports `ω^{-k}`; the device measures `Z_Θ†`.
    Conjugate,
}

/// A ditter plus a detector labelling, with its observable matrix cached.
#[derive(Debug, Clone, PartialEq)]
pub struct DitterObservable {
    phases: PhaseVector,
    convention: LabelConvention,
    matrix: ComplexMatrix,
}

impl DitterObservable {
    pub fn new(phases: PhaseVector, convention: LabelConvention) -> Self {
        let z = cyclic_form(&phases);
        let matrix = match convention {
            LabelConvention::Standard => z,
            LabelConvention::Conjugate => z.adjoint(),
        };
        Self {
            phases,
            convention,
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.dim()
    }

    pub fn phases(&self) -> &PhaseVector {
        &self.phases
    }

    pub fn convention(&self) -> LabelConvention {
        self.convention
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// The ditter's unitary `U_Θ = F·D_Θ` (applied before detection).
    pub fn unitary(&self) -> ComplexMatrix {
        let f = fourier_matrix(self.dim()).expect("phase vectors have d >= 2");
        f * self.phases.diagonal()
    }

    /// Outcome label reported by detector `k`.
    pub fn label(&self, k: usize) -> Complex64 {
        let d = self.dim();
        match self.convention {
            LabelConvention::Standard => root_of_unity(d, k as i64),
            LabelConvention::Conjugate => root_of_unity(d, -(k as i64)),
        }
    }

    pub fn labels(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|k| self.label(k)).collect()
    }
}

/// `Σ_k θ_k θ*_{k+1} |k+1⟩⟨k|`.
pub fn cyclic_form(phases: &PhaseVector) -> ComplexMatrix {
    let d = phases.dim();
    let mut z = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        let next = (k + 1) % d;
        z[(next, k)] = phases.thetas[k] * phases.thetas[next].conj();
    }
    z
}

/// `D_Θ* F† Z F D_Θ` by explicit matrix products.
pub fn conjugated_product_form(phases: &PhaseVector) -> ComplexMatrix {
    let d = phases.dim();
    let f = fourier_matrix(d).expect("phase vectors have d >= 2");
    let labels: Vec<Complex64> = (0..d).map(|k| root_of_unity(d, k as i64)).collect();
    let z = diagonal(&labels);
    phases.conj().diagonal() * f.adjoint() * z * &f * phases.diagonal()
}

/// The standard-convention observable `Z_Θ`.
pub fn ditter_observable(phases: PhaseVector) -> DitterObservable {
    DitterObservable::new(phases, LabelConvention::Standard)
}

/// Phases `Γ` with `Z_Θ^i Z_Λ^j = Z_Γ†`, where
/// `γ_k = θ_k θ_{k+1} ⋯ θ_{k-i-1} · λ_{k-i} ⋯ λ_k` (indices mod `d`).
pub fn product_phases(
    theta: &PhaseVector,
    lambda: &PhaseVector,
    i: usize,
    j: usize,
) -> Result<PhaseVector> {
    let d = theta.dim();
    if lambda.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: lambda.dim(),
        });
    }
    if i < 1 || i + 2 > d || i + j + 1 != d {
        return Err(Error::ExponentConstraint { d, i, j });
    }
    let gammas = (0..d as i64)
        .map(|k| {
            // d - i factors of θ starting at k, then i + 1 factors of λ ending at k.
            let t: Complex64 = (0..(d - i) as i64).map(|s| theta.at(k + s)).product();
            let l: Complex64 = (0..=i as i64)
                .map(|s| lambda.at(k - i as i64 + s))
                .product();
            t * l
        })
        .collect();
    PhaseVector::new(gammas)
}

/// `Z_Θ^i Z_Λ^j` realized as a single ditter with conjugated labels.
pub fn product_observable(
    theta: &PhaseVector,
    lambda: &PhaseVector,
    i: usize,
    j: usize,
) -> Result<DitterObservable> {
    let gamma = product_phases(theta, lambda, i, j)?;
    Ok(DitterObservable::new(gamma, LabelConvention::Conjugate))
}

/// Joint detector statistics for one pair of measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    d: usize,
    /// `P(k, k')` at `k * d + k'`.
    probabilities: Vec<f64>,
    alice_labels: Vec<Complex64>,
    bob_labels: Vec<Complex64>,
}

impl JointDistribution {
    pub fn new(
        d: usize,
        probabilities: Vec<f64>,
        alice_labels: Vec<Complex64>,
        bob_labels: Vec<Complex64>,
    ) -> Result<Self> {
        check_dimension(d)?;
        for len in [alice_labels.len(), bob_labels.len()] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: len,
                });
            }
        }
        if probabilities.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: probabilities.len(),
            });
        }
        Ok(Self {
            d,
            probabilities,
            alice_labels,
            bob_labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn probability(&self, k: usize, k_prime: usize) -> f64 {
        self.probabilities[k * self.d + k_prime]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn alice_label(&self, k: usize) -> Complex64 {
        self.alice_labels[k]
    }

    pub fn bob_label(&self, k: usize) -> Complex64 {
        self.bob_labels[k]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Applies Alice's and Bob's ditters to `state` and returns `P(k, k')` with labels.
pub fn outcome_distribution(
    state: &State,
    alice: &DitterObservable,
    bob: &DitterObservable,
) -> Result<JointDistribution> {
    let d = state.dim();
    for dim in [alice.dim(), bob.dim()] {
        if dim != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: dim,
            });
        }
    }
    let probabilities = state.detector_probabilities(&alice.unitary(), &bob.unitary());
    JointDistribution::new(d, probabilities, alice.labels(), bob.labels())
}
