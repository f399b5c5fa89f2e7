//! Homogeneous Bell operators and their violation factors.
//!
//! A Bell operator `T` is a sum of monomials `c · A₁^{i₁} A₂^{i₂} B₁^{j₁} B₂^{j₂}`
//! of degree `d-1` on each side. Its violation factor on a state is
//!
//! ```text
//! v = Re(e^{iπ/d} Σ_m c_m E_m) / (d² cos(π/d))
//! ```
//!
//! where `E_m` is the correlation of the monomial's measurement pair. Local
//! realistic models satisfy `v ≤ 1`.
//!
//! Quantum mechanically `A₁ = Z_{Θ_A}` and `A₂ = Z_{Λ_A}`, so a pure power
//! `A₁^{d-1}` is `Z_{Θ_A}†` and a mixed monomial `A₁^i A₂^j` is the single-ditter
//! product observable `Z_Γ†`. Bob's side is the same with his own generators.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ditter::{
    geometric_phases, outcome_distribution, product_observable, DitterObservable,
    JointDistribution, LabelConvention, PhaseVector,
};
use crate::error::{Error, Result};
use crate::qudit::{check_dimension, root_of_unity, EntangledState, State};

/// `e^{iπ/d}`, the rotation applied to `⟨T⟩` before taking the real part.
pub fn rotation_phase(d: usize) -> Complex64 {
    Complex64::from_polar(1.0, PI / d as f64)
}

/// `d² cos(π/d)`.
pub fn normalization(d: usize) -> f64 {
    (d * d) as f64 * (PI / d as f64).cos()
}

/// An element of `Z[ω]` written as `Σ_t coeffs[t] ω^t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclotomicInteger {
    pub d: usize,
    pub coeffs: Vec<i64>,
}

impl CyclotomicInteger {
    pub fn new(d: usize, coeffs: &[i64]) -> Self {
        Self {
            d,
            coeffs: coeffs.to_vec(),
        }
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(t, &c)| root_of_unity(self.d, t as i64) * c as f64)
            .sum()
    }
}

impl std::fmt::Display for CyclotomicInteger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut terms = Vec::new();
        for (t, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let power = match t {
                0 => String::new(),
                1 => "w".to_string(),
                _ => format!("w^{t}"),
            };
            let mag = c.unsigned_abs();
            let body = if t > 0 && mag == 1 {
                power
            } else {
                format!("{mag}{power}")
            };
            let sign = if c < 0 { "-" } else { "+" };
            terms.push((sign, body));
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (sign, body)) in terms.iter().enumerate() {
            match (n, *sign) {
                (0, "-") => write!(f, "-{body}")?,
                (0, _) => write!(f, "{body}")?,
                (_, s) => write!(f, " {s} {body}")?,
            }
        }
        Ok(())
    }
}

/// One term `c · A₁^{i₁} A₂^{i₂} B₁^{j₁} B₂^{j₂}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellMonomial {
    pub alice: (u32, u32),
    pub bob: (u32, u32),
    pub coefficient: Complex64,
    /// Exact coefficient in `Z[ω]`, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<CyclotomicInteger>,
}

impl BellMonomial {
    /// Alice's basis index `a`, the exponent of `A₂`.
    pub fn alice_basis(&self) -> usize {
        self.alice.1 as usize
    }

    pub fn bob_basis(&self) -> usize {
        self.bob.1 as usize
    }
}

/// A homogeneous Bell operator in dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellOperator {
    pub d: usize,
    pub monomials: Vec<BellMonomial>,
}

impl BellOperator {
    /// Builds an operator from a `d × d` table of exact coefficients, row `a`
    /// holding Alice's `A₁^{d-1-a} A₂^a` and column `b` Bob's `B₁^{d-1-b} B₂^b`.
    pub fn from_table(d: usize, table: &[&[&[i64]]]) -> Result<Self> {
        check_dimension(d)?;
        if table.len() != d || table.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidConfig(format!(
                "coefficient table must be {d} x {d}"
            )));
        }
        let k = d as u32 - 1;
        let mut monomials = Vec::with_capacity(d * d);
        for (a, row) in table.iter().enumerate() {
            for (b, coeffs) in row.iter().enumerate() {
                let exact = CyclotomicInteger::new(d, coeffs);
                monomials.push(BellMonomial {
                    alice: (k - a as u32, a as u32),
                    bob: (k - b as u32, b as u32),
                    coefficient: exact.value(),
                    exact: Some(exact),
                });
            }
        }
        Ok(Self { d, monomials })
    }

    /// Coefficient of the monomial with the given exponents.
    pub fn coefficient(&self, alice: (u32, u32), bob: (u32, u32)) -> Option<Complex64> {
        self.monomials
            .iter()
            .find(|m| m.alice == alice && m.bob == bob)
            .map(|m| m.coefficient)
    }

    pub fn monomial(&self, alice: (u32, u32), bob: (u32, u32)) -> Option<&BellMonomial> {
        self.monomials
            .iter()
            .find(|m| m.alice == alice && m.bob == bob)
    }

    /// Multiplies every coefficient by `factor`; exact forms are dropped.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            d: self.d,
            monomials: self
                .monomials
                .iter()
                .map(|m| BellMonomial {
                    coefficient: m.coefficient * factor,
                    exact: None,
                    ..m.clone()
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("operator serializes")
    }
}

/// Which coefficient table to expose for the builtin operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transcription {
    /// Exactly as tabulated in the literature.
    Tabulated,
    /// Tabulated values with the single-coefficient repairs for `T₃` and `T₅`
    /// that restore the local bound `v ≤ 1`.
    Corrected,
}

/// A coefficient that differs between the tabulated and corrected operators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientCorrection {
    pub alice: (u32, u32),
    pub bob: (u32, u32),
    pub tabulated: CyclotomicInteger,
    pub corrected: CyclotomicInteger,
}

type Table = [&'static [&'static [i64]]];

// Coefficients in units of (1, ω, ω², ω³). Rows: Alice basis a, columns: Bob basis b.
const T3_TABULATED: &Table = &[
    &[&[4, -1], &[-2, -1], &[1, -1]],
    &[&[-5, -1], &[-2, -1], &[-1, -1]],
    &[&[-5, -1], &[-2, -1], &[1, -1]],
];

const T4_TABULATED: &Table = &[
    &[&[-1, -3], &[-1, -1], &[5, -5], &[1, -3]],
    &[&[1, 1], &[-3, -1], &[-1, -1], &[-1, -3]],
    &[&[1, 3], &[1, 5], &[-1, -7], &[3, 3]],
    &[&[-5, -5], &[-1, 1], &[1, 1], &[1, -1]],
];

const T5_TABULATED: &Table = &[
    &[
        &[6, -3, 0, 2],
        &[-5, -6, -4, 0],
        &[-3, 2, -1, 7],
        &[-3, -4, 1, 1],
        &[0, 6, 2, 2],
    ],
    &[
        &[-2, -3, -4, -1],
        &[-4, -3, -3, -5],
        &[2, -2, -3, -2],
        &[1, 0, 1, -2],
        &[3, -2, 4, 0],
    ],
    &[
        &[3, 3, -1, 0],
        &[0, 1, 7, 2],
        &[-5, -5, -6, -4],
        &[-2, 0, 0, -3],
        &[4, 1, 0, 5],
    ],
    &[
        &[1, 0, -4, -2],
        &[2, 1, 1, 1],
        &[1, 3, 0, 1],
        &[-7, -4, -7, -7],
        &[-2, 0, 0, -3],
    ],
    &[
        &[2, 3, 2, -2],
        &[-3, -3, -1, -3],
        &[-5, -3, 0, -2],
        &[-4, -2, -5, -4],
        &[-5, -5, -6, -4],
    ],
];

/// `(d, a, b, corrected coefficients)`.
const CORRECTIONS: &[(usize, usize, usize, &[i64])] = &[
    // −(ω + 1) → −(ω − 1) on A₁A₂B₂²
    (3, 1, 2, &[1, -1]),
    // 2ω³ − 3ω + 6 → 2ω² − 3ω + 6 on A₁⁴B₁⁴
    (5, 0, 0, &[6, -3, 2, 0]),
];

fn unsupported(d: usize) -> Error {
    Error::UnsupportedDimension {
        d,
        reason: "builtin Bell operators exist for d = 3, 4, 5".into(),
    }
}

fn tabulated_table(d: usize) -> Result<&'static Table> {
    match d {
        3 => Ok(T3_TABULATED),
        4 => Ok(T4_TABULATED),
        5 => Ok(T5_TABULATED),
        _ => Err(unsupported(d)),
    }
}

/// The builtin operator `T_d` for `d ∈ {3, 4, 5}`.
pub fn operator(d: usize, transcription: Transcription) -> Result<BellOperator> {
    let table = tabulated_table(d)?;
    let mut op = BellOperator::from_table(d, table)?;
    if transcription == Transcription::Corrected {
        for &(cd, a, b, coeffs) in CORRECTIONS {
            if cd != d {
                continue;
            }
            let m = &mut op.monomials[a * d + b];
            let exact = CyclotomicInteger::new(d, coeffs);
            m.coefficient = exact.value();
            m.exact = Some(exact);
        }
    }
    Ok(op)
}

/// The corrected builtin operator, the one satisfying the local bound.
pub fn builtin_operator(d: usize) -> Result<BellOperator> {
    operator(d, Transcription::Corrected)
}

/// Coefficients repaired by [`Transcription::Corrected`] for dimension `d`.
pub fn corrections(d: usize) -> Result<Vec<CoefficientCorrection>> {
    let table = tabulated_table(d)?;
    let k = d as u32 - 1;
    Ok(CORRECTIONS
        .iter()
        .filter(|c| c.0 == d)
        .map(|&(_, a, b, coeffs)| CoefficientCorrection {
            alice: (k - a as u32, a as u32),
            bob: (k - b as u32, b as u32),
            tabulated: CyclotomicInteger::new(d, table[a][b]),
            corrected: CyclotomicInteger::new(d, coeffs),
        })
        .collect())
}

/// Generator ditters for the four variables `A₁, A₂, B₁, B₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisAssignment {
    pub theta: Complex64,
    pub alice: (PhaseVector, PhaseVector),
    pub bob: (PhaseVector, PhaseVector),
    /// Geometric exponents `(A₁, A₂, B₁, B₂)` when built from a single base phase.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<[i64; 4]>,
}

/// Geometric exponents of the four standard optimal bases, as `(A₁, A₂, B₁, B₂)`
/// over the base phase [`canonical_theta`].
pub const OPTIMAL_BASES_EXPONENTS: [i64; 4] = [0, 2, 1, -1];

/// `e^{iπ/(2d)}`.
pub fn canonical_theta(d: usize) -> Complex64 {
    Complex64::from_polar(1.0, PI / (2.0 * d as f64))
}

impl BasisAssignment {
    pub fn new(
        theta: Complex64,
        alice: (PhaseVector, PhaseVector),
        bob: (PhaseVector, PhaseVector),
    ) -> Result<Self> {
        let d = alice.0.dim();
        for dim in [alice.1.dim(), bob.0.dim(), bob.1.dim()] {
            if dim != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: dim,
                });
            }
        }
        Ok(Self {
            theta,
            alice,
            bob,
            exponents: None,
        })
    }

    /// Each variable gets the geometric ditter `(1, θ^e, θ^{2e}, …)`.
    pub fn geometric(d: usize, theta: Complex64, exponents: [i64; 4]) -> Result<Self> {
        let g = |e: i64| geometric_phases(d, theta, e, 1);
        Ok(Self {
            theta,
            alice: (g(exponents[0])?, g(exponents[1])?),
            bob: (g(exponents[2])?, g(exponents[3])?),
            exponents: Some(exponents),
        })
    }

    /// The four optimal bases at `θ = e^{iπ/(2d)}`.
    pub fn optimal_bases(d: usize) -> Result<Self> {
        Self::geometric(d, canonical_theta(d), OPTIMAL_BASES_EXPONENTS)
    }

    /// Alice's optimal-basis generators with Bob holding their conjugates, so
    /// that matched basis indices give Alice and Bob conjugate ditters.
    pub fn key_aligned(d: usize, theta: Complex64) -> Result<Self> {
        let [p, q, _, _] = OPTIMAL_BASES_EXPONENTS;
        Self::geometric(d, theta, [p, q, -p, -q])
    }

    pub fn dim(&self) -> usize {
        self.alice.0.dim()
    }
}

fn side_observable(
    d: usize,
    exps: (u32, u32),
    generators: &(PhaseVector, PhaseVector),
) -> Result<DitterObservable> {
    let k = d as u32 - 1;
    if exps.0 + exps.1 != k {
        return Err(Error::MonomialDegree(exps));
    }
    Ok(match exps {
        (i, 0) if i == k => DitterObservable::new(generators.0.clone(), LabelConvention::Conjugate),
        (0, j) if j == k => DitterObservable::new(generators.1.clone(), LabelConvention::Conjugate),
        (i, j) => product_observable(&generators.0, &generators.1, i as usize, j as usize)?,
    })
}

/// The measurement pair substituted for a monomial's Alice and Bob factors.
pub fn monomial_observables(
    m: &BellMonomial,
    basis: &BasisAssignment,
) -> Result<(DitterObservable, DitterObservable)> {
    let d = basis.dim();
    Ok((
        side_observable(d, m.alice, &basis.alice)?,
        side_observable(d, m.bob, &basis.bob)?,
    ))
}

/// Alice's `d` measurements `𝒜_a = A₁^{d-1-a} A₂^a` and Bob's `ℬ_b`, indexed by basis.
pub fn basis_observables(
    basis: &BasisAssignment,
) -> Result<(Vec<DitterObservable>, Vec<DitterObservable>)> {
    let d = basis.dim();
    let k = d as u32 - 1;
    let alice = (0..=k)
        .map(|a| side_observable(d, (k - a, a), &basis.alice))
        .collect::<Result<Vec<_>>>()?;
    let bob = (0..=k)
        .map(|b| side_observable(d, (k - b, b), &basis.bob))
        .collect::<Result<Vec<_>>>()?;
    Ok((alice, bob))
}

/// `E = Σ P(k,k') · label_A(k) · label_B(k')`.
pub fn correlation(dist: &JointDistribution) -> Result<Complex64> {
    let total = dist.total();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized(total));
    }
    let d = dist.dim();
    let mut e = Complex64::new(0.0, 0.0);
    for k in 0..d {
        for kp in 0..d {
            e += dist.bob_label(kp) * dist.alice_label(k) * dist.probability(k, kp);
        }
    }
    Ok(e)
}

/// How monomial correlations are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationPath {
    /// Detector statistics weighted by outcome labels.
    Distribution,
    /// `⟨A ⊗ B⟩` from the observable matrices.
    Operator,
}

/// Correlations `E_m` for every monomial, in operator order.
pub fn monomial_correlations(
    state: &State,
    op: &BellOperator,
    basis: &BasisAssignment,
    path: CorrelationPath,
) -> Result<Vec<Complex64>> {
    check_dims(state.dim(), op, basis)?;
    let (alice, bob) = basis_observables(basis)?;
    op.monomials
        .iter()
        .map(|m| {
            let (a, b) = (&alice[m.alice_basis()], &bob[m.bob_basis()]);
            match path {
                CorrelationPath::Operator => Ok(state.product_expectation(a.matrix(), b.matrix())),
                CorrelationPath::Distribution => correlation(&outcome_distribution(state, a, b)?),
            }
        })
        .collect()
}

fn check_dims(d: usize, op: &BellOperator, basis: &BasisAssignment) -> Result<()> {
    for dim in [op.d, basis.dim()] {
        if dim != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: dim,
            });
        }
    }
    Ok(())
}

/// `Re(e^{iπ/d} Σ_m c_m E_m) / (d² cos(π/d))`.
pub fn violation_from_correlations(op: &BellOperator, correlations: &[Complex64]) -> f64 {
    let sum: Complex64 = op
        .monomials
        .iter()
        .zip(correlations)
        .map(|(m, e)| m.coefficient * e)
        .sum();
    (rotation_phase(op.d) * sum).re / normalization(op.d)
}

pub fn violation_with(
    state: &State,
    op: &BellOperator,
    basis: &BasisAssignment,
    path: CorrelationPath,
) -> Result<f64> {
    let e = monomial_correlations(state, op, basis, path)?;
    Ok(violation_from_correlations(op, &e))
}

/// Violation factor of `op` on `state` with the given generators.
pub fn violation(state: &State, op: &BellOperator, basis: &BasisAssignment) -> Result<f64> {
    violation_with(state, op, basis, CorrelationPath::Operator)
}

/// Outcome of the exhaustive local-realist search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LhvBound {
    pub d: usize,
    pub max: f64,
    /// Root-of-unity exponents `(A₁, A₂, B₁, B₂)` attaining the maximum.
    pub argmax: [usize; 4],
    pub strategies: usize,
}

/// Largest enumerated dimension for [`lhv_max`].
pub const LHV_MAX_DIMENSION: usize = 6;

/// Maximizes the rotated, normalized value of `op` over all `d⁴` deterministic
/// assignments of `d`-th roots of unity to `A₁, A₂, B₁, B₂`.
pub fn lhv_max(op: &BellOperator) -> Result<LhvBound> {
    let d = op.d;
    check_dimension(d)?;
    if d > LHV_MAX_DIMENSION {
        return Err(Error::UnsupportedDimension {
            d,
            reason: format!("exhaustive enumeration is limited to d <= {LHV_MAX_DIMENSION}"),
        });
    }
    let rho = rotation_phase(d);
    let norm = normalization(d);
    let mut best = (f64::NEG_INFINITY, [0usize; 4]);
    let dd = d as i64;
    for x1 in 0..d {
        for x2 in 0..d {
            for y1 in 0..d {
                for y2 in 0..d {
                    let s: Complex64 = op
                        .monomials
                        .iter()
                        .map(|m| {
                            let e = x1 as i64 * m.alice.0 as i64
                                + x2 as i64 * m.alice.1 as i64
                                + y1 as i64 * m.bob.0 as i64
                                + y2 as i64 * m.bob.1 as i64;
                            m.coefficient * root_of_unity(d, e.rem_euclid(dd))
                        })
                        .sum();
                    let v = (rho * s).re / norm;
                    if v > best.0 {
                        best = (v, [x1, x2, y1, y2]);
                    }
                }
            }
        }
    }
    Ok(LhvBound {
        d,
        max: best.0,
        argmax: best.1,
        strategies: d.pow(4),
    })
}

/// Grid points for the free-θ scan.
pub const THETA_GRID_POINTS: usize = 10_000;

/// Best value of a θ scan over the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaScan {
    /// `arg θ` in radians, in `[0, 2π)`.
    pub angle: f64,
    pub value: f64,
}

/// Maximizes violation over `θ` for fixed geometric exponents: a uniform grid of
/// `grid` points, then one local refinement of the same size across the best cell.
pub fn theta_scan(
    state: &State,
    op: &BellOperator,
    exponents: [i64; 4],
    grid: usize,
) -> Result<ThetaScan> {
    let d = state.dim();
    let eval = |angle: f64| -> Result<f64> {
        let basis = BasisAssignment::geometric(d, Complex64::from_polar(1.0, angle), exponents)?;
        violation(state, op, &basis)
    };
    let step = 2.0 * PI / grid as f64;
    let best_of = |angles: Vec<f64>| -> Result<ThetaScan> {
        let values = angles
            .par_iter()
            .map(|&a| eval(a).map(|v| (a, v)))
            .collect::<Result<Vec<_>>>()?;
        // first maximum in grid order keeps the result deterministic
        let (angle, value) =
            values.into_iter().fold(
                (0.0, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
        Ok(ThetaScan { angle, value })
    };
    let coarse = best_of((0..grid).map(|n| n as f64 * step).collect())?;
    let fine = best_of(
        (0..=grid)
            .map(|n| coarse.angle - step + 2.0 * step * n as f64 / grid as f64)
            .collect(),
    )?;
    let best = if fine.value > coarse.value {
        fine
    } else {
        coarse
    };
    Ok(ThetaScan {
        angle: best.angle.rem_euclid(2.0 * PI),
        value: best.value,
    })
}

/// Result of [`optimize_basis`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisOptimum {
    pub basis: BasisAssignment,
    pub value: f64,
    /// Violation of the default assignment [`OPTIMAL_BASES_EXPONENTS`] at `θ = e^{iπ/(2d)}`.
    pub seed_value: f64,
    /// Free-θ scan with the winning exponents, for comparison.
    pub theta_scan: ThetaScan,
}

fn permutations(items: [i64; 4]) -> Vec<[i64; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for e in 0..4 {
                    let idx = [a, b, c, e];
                    let distinct = (0..4).all(|x| (x + 1..4).all(|y| idx[x] != idx[y]));
                    if distinct {
                        out.push(idx.map(|i| items[i]));
                    }
                }
            }
        }
    }
    out
}

/// Searches the assignments of the four optimal bases to `A₁, A₂, B₁, B₂` at
/// `θ = e^{iπ/(2d)}` and returns the one with the largest violation. Ties keep
/// the first assignment in enumeration order.
pub fn optimize_basis(state: &EntangledState, op: &BellOperator) -> Result<BasisOptimum> {
    let d = state.dim();
    if !(3..=5).contains(&d) {
        return Err(unsupported(d));
    }
    let st = State::Pure(state.clone());
    let theta = canonical_theta(d);
    let mut best: Option<(BasisAssignment, f64)> = None;
    for exps in permutations(OPTIMAL_BASES_EXPONENTS) {
        let basis = BasisAssignment::geometric(d, theta, exps)?;
        let v = violation(&st, op, &basis)?;
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((basis, v));
        }
    }
    let (basis, value) = best.expect("24 assignments");
    let seed_value = violation(&st, op, &BasisAssignment::optimal_bases(d)?)?;
    let winning = basis.exponents.expect("geometric assignment");
    let theta_scan = theta_scan(&st, op, winning, THETA_GRID_POINTS)?;
    Ok(BasisOptimum {
        basis,
        value,
        seed_value,
        theta_scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ditter::ditter_observable;
    use crate::qudit::{max_abs_diff, unitarity_defect, DensityState};

    fn w(d: usize) -> Complex64 {
        root_of_unity(d, 1)
    }

    #[test]
    fn t3_first_coefficient() {
        let t3 = builtin_operator(3).unwrap();
        let c = t3.coefficient((2, 0), (2, 0)).unwrap();
        assert!((c + (w(3) - 4.0)).norm() < 1e-12);
        assert_eq!(t3.monomials.len(), 9);
    }

    #[test]
    fn t4_last_coefficient_and_count() {
        let t4 = builtin_operator(4).unwrap();
        let c = t4.coefficient((0, 3), (0, 3)).unwrap();
        assert!((c + (w(4) - 1.0)).norm() < 1e-12);
        assert_eq!(t4.monomials.len(), 16);
    }

    #[test]
    fn t5_last_coefficient_and_count() {
        let t5 = builtin_operator(5).unwrap();
        let o = w(5);
        let expected = -(o.powi(3) * 4.0 + o.powi(2) * 6.0 + o * 5.0 + 5.0);
        let c = t5.coefficient((0, 4), (0, 4)).unwrap();
        assert!((c - expected).norm() < 1e-12);
        assert_eq!(t5.monomials.len(), 25);
    }

    #[test]
    fn unsupported_dimensions() {
        for d in [2, 6, 7] {
            assert!(matches!(
                builtin_operator(d),
                Err(Error::UnsupportedDimension { .. })
            ));
        }
    }

    #[test]
    fn homogeneous_degrees() {
        for d in 3..=5 {
            let op = builtin_operator(d).unwrap();
            for m in &op.monomials {
                assert_eq!(m.alice.0 + m.alice.1, d as u32 - 1);
                assert_eq!(m.bob.0 + m.bob.1, d as u32 - 1);
            }
        }
    }

    #[test]
    fn corrections_are_single_coefficients() {
        for d in 3..=5 {
            let tab = operator(d, Transcription::Tabulated).unwrap();
            let cor = operator(d, Transcription::Corrected).unwrap();
            let diffs = tab
                .monomials
                .iter()
                .zip(&cor.monomials)
                .filter(|(a, b)| a.exact != b.exact)
                .count();
            assert_eq!(diffs, corrections(d).unwrap().len());
            assert_eq!(diffs, if d == 4 { 0 } else { 1 });
        }
    }

    #[test]
    fn cyclotomic_display() {
        assert_eq!(
            CyclotomicInteger::new(5, &[6, -3, 2, 0]).to_string(),
            "2w^2 - 3w + 6"
        );
        assert_eq!(CyclotomicInteger::new(3, &[1, -1]).to_string(), "-w + 1");
        assert_eq!(CyclotomicInteger::new(3, &[0, 0]).to_string(), "0");
    }

    #[test]
    fn pure_power_is_adjoint_generator() {
        let basis = BasisAssignment::optimal_bases(3).unwrap();
        let m = builtin_operator(3).unwrap().monomials[0].clone();
        let (a, _) = monomial_observables(&m, &basis).unwrap();
        let z = ditter_observable(basis.alice.0.clone());
        assert!(max_abs_diff(a.matrix(), &z.matrix().adjoint()) < 1e-12);
    }

    #[test]
    fn mixed_monomial_is_product_observable() {
        let basis = BasisAssignment::geometric(3, canonical_theta(3), [1, -2, 0, 3]).unwrap();
        let op = builtin_operator(3).unwrap();
        let m = op.monomial((1, 1), (2, 0)).unwrap();
        let (a, _) = monomial_observables(m, &basis).unwrap();
        let p = product_observable(&basis.alice.0, &basis.alice.1, 1, 1).unwrap();
        assert_eq!(a, p);
    }

    #[test]
    fn monomial_observables_have_root_of_unity_spectrum() {
        let basis = BasisAssignment::optimal_bases(5).unwrap();
        for m in &builtin_operator(5).unwrap().monomials {
            let (a, b) = monomial_observables(m, &basis).unwrap();
            for x in [a, b] {
                assert!(unitarity_defect(x.matrix()) < 1e-12);
                let p = x.matrix().pow(5);
                assert!(max_abs_diff(&p, &crate::qudit::ComplexMatrix::identity(5, 5)) < 1e-10);
            }
        }
    }

    #[test]
    fn bad_monomial_degree() {
        let basis = BasisAssignment::optimal_bases(3).unwrap();
        let m = BellMonomial {
            alice: (1, 0),
            bob: (2, 0),
            coefficient: Complex64::new(1.0, 0.0),
            exact: None,
        };
        assert_eq!(
            monomial_observables(&m, &basis),
            Err(Error::MonomialDegree((1, 0)))
        );
    }

    #[test]
    fn correlation_edge_cases() {
        let d = 3;
        let labels: Vec<Complex64> = (0..d).map(|k| root_of_unity(d, k as i64)).collect();
        let conj: Vec<Complex64> = labels.iter().map(|z| z.conj()).collect();
        let mut p = vec![0.0; d * d];
        for k in 0..d {
            p[k * d + k] = 1.0 / 3.0;
        }
        let perfect = JointDistribution::new(d, p, labels.clone(), conj.clone()).unwrap();
        assert!((correlation(&perfect).unwrap() - 1.0).norm() < 1e-12);

        let uniform = JointDistribution::new(d, vec![1.0 / 9.0; 9], labels.clone(), conj).unwrap();
        assert!(correlation(&uniform).unwrap().norm() < 1e-12);

        let bad = JointDistribution::new(d, vec![0.2; 9], labels.clone(), labels).unwrap();
        assert!(matches!(correlation(&bad), Err(Error::Unnormalized(_))));
    }

    #[test]
    fn maximally_mixed_has_zero_violation() {
        for d in 3..=5 {
            let st = State::Mixed(DensityState::maximally_mixed(d).unwrap());
            let v = violation(
                &st,
                &builtin_operator(d).unwrap(),
                &BasisAssignment::optimal_bases(d).unwrap(),
            )
            .unwrap();
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn lhv_refuses_large_dimension() {
        let op = BellOperator {
            d: 7,
            monomials: vec![],
        };
        assert!(matches!(
            lhv_max(&op),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn permutations_are_distinct() {
        let p = permutations(OPTIMAL_BASES_EXPONENTS);
        assert_eq!(p.len(), 24);
        assert_eq!(p[0], OPTIMAL_BASES_EXPONENTS);
    }

    #[test]
    fn json_export_lists_exact_coefficients() {
        let j = builtin_operator(4).unwrap().to_json();
        let monos = j["monomials"].as_array().unwrap();
        assert_eq!(monos.len(), 16);
        assert_eq!(monos[0]["exact"]["coeffs"], serde_json::json!([-1, -3]));
        assert_eq!(monos[0]["alice"], serde_json::json!([3, 0]));
    }
}
