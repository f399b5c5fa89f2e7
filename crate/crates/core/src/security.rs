//! Noise tolerance and cloning-attack security criteria.
//!
//! Isotropic noise `N` mixes the source state with the maximally mixed state
//! and scales every traceless correlation by `1 - N`, so a violation `v`
//! survives up to `N = 1 - 1/v`. An eavesdropper with a phase-covariant cloner
//! of fidelity `F_A` stays hidden while `F_A ≥ F_N`, which bounds the
//! violations that can be certified securely by `v < (d-1)/(d F_A - 1)`.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::bell::{builtin_operator, optimize_basis};
use crate::error::{Error, Result};
use crate::qudit::{check_dimension, ComplexMatrix, DensityState, EntangledState};

/// Phase-covariant cloner fidelities `F_A` by dimension.
pub const CLONER_FIDELITY: [(usize, f64); 7] = [
    (3, 0.7753),
    (4, 0.7342),
    (5, 0.7080),
    (6, 0.6898),
    (7, 0.6762),
    (8, 0.6657),
    (9, 0.6573),
];

/// `F_A` in the `d → ∞` limit.
pub const CLONER_FIDELITY_LIMIT: f64 = 0.5;

/// CGLMP violations of the maximally entangled state with the four optimal bases.
pub const NDEB_VIOLATIONS: [(usize, f64); 3] = [(3, 1.436), (4, 1.448), (5, 1.455)];

/// Reference hCHSH-d violations for the builtin states and operators.
pub const HDDEB_REFERENCE_VIOLATIONS: [(usize, f64); 3] = [(3, 1.505), (4, 1.546), (5, 1.574)];

fn lookup(table: &[(usize, f64)], d: usize) -> Option<f64> {
    table.iter().find(|(k, _)| *k == d).map(|(_, v)| *v)
}

pub fn cloner_fidelity(d: usize) -> Option<f64> {
    lookup(&CLONER_FIDELITY, d)
}

pub fn ndeb_violation(d: usize) -> Option<f64> {
    lookup(&NDEB_VIOLATIONS, d)
}

pub fn hddeb_reference_violation(d: usize) -> Option<f64> {
    lookup(&HDDEB_REFERENCE_VIOLATIONS, d)
}

/// `N·I/d² + (1-N)|ψ⟩⟨ψ|` on the joint space.
pub fn apply_isotropic_noise(state: &EntangledState, noise: f64) -> Result<DensityState> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::NoiseOutOfRange(noise));
    }
    let d = state.dim();
    let n = d * d;
    let pure = state.density();
    let mixed = ComplexMatrix::identity(n, n) * Complex64::new(noise / n as f64, 0.0);
    let matrix = mixed + pure.matrix() * Complex64::new(1.0 - noise, 0.0);
    Ok(DensityState::from_parts_unchecked(d, matrix))
}

/// `N = 1 - 1/v`, the largest noise proportion that leaves `v` above 1.
pub fn noise_threshold(v: f64) -> Result<f64> {
    if v.is_nan() || v < 1.0 {
        return Err(Error::NoViolation(v));
    }
    Ok(1.0 - 1.0 / v)
}

/// `F_N = 1 - N(d-1)/d`, the single-qudit fidelity of the isotropic channel.
pub fn channel_fidelity(noise: f64, d: usize) -> f64 {
    1.0 - noise * (d as f64 - 1.0) / d as f64
}

/// `(d-1)/(d v) + 1/d`: the channel fidelity must exceed this floor.
pub fn secure_channel_condition(v: f64, d: usize) -> Result<f64> {
    if v.is_nan() || v < 1.0 {
        return Err(Error::NoViolation(v));
    }
    let d = d as f64;
    Ok((d - 1.0) / (d * v) + 1.0 / d)
}

/// `(d-1)/(d F_A - 1)`, the largest violation still secure against the cloner.
pub fn security_criterion(d: usize, cloner_fidelity: f64) -> Result<f64> {
    check_dimension(d)?;
    let denom = d as f64 * cloner_fidelity;
    if denom <= 1.0 {
        return Err(Error::CriterionUndefined(denom));
    }
    Ok((d as f64 - 1.0) / (denom - 1.0))
}

/// `lim_{d→∞} (d-1)/(d F_A - 1) = 1/F_A`.
pub fn security_criterion_limit(cloner_fidelity: f64) -> Result<f64> {
    if cloner_fidelity <= 0.0 {
        return Err(Error::CriterionUndefined(cloner_fidelity));
    }
    Ok(1.0 / cloner_fidelity)
}

/// One row of the security-criterion table. `d = None` is the `d → ∞` limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionRow {
    pub d: Option<usize>,
    pub cloner_fidelity: f64,
    pub max_secure_violation: f64,
}

impl CriterionRow {
    pub fn dimension_label(&self) -> String {
        self.d.map_or_else(|| "inf".to_string(), |d| d.to_string())
    }
}

/// Criterion rows for `d = 3..9` followed by the infinite-dimension limit.
pub fn criterion_table() -> Vec<CriterionRow> {
    let mut rows: Vec<CriterionRow> = CLONER_FIDELITY
        .iter()
        .map(|&(d, fa)| CriterionRow {
            d: Some(d),
            cloner_fidelity: fa,
            max_secure_violation: security_criterion(d, fa).expect("tabulated F_A > 1/d"),
        })
        .collect();
    rows.push(CriterionRow {
        d: None,
        cloner_fidelity: CLONER_FIDELITY_LIMIT,
        max_secure_violation: security_criterion_limit(CLONER_FIDELITY_LIMIT).expect("positive"),
    });
    rows
}

/// N-DEB versus hdDEB under the same cloning-attack criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityReport {
    pub d: usize,
    pub cloner_fidelity: f64,
    pub v_ndeb: f64,
    pub v_hddeb: f64,
    pub v_max_secure: f64,
    pub noise_threshold_ndeb: f64,
    pub noise_threshold_hddeb: f64,
    pub ndeb_secure: bool,
    pub hddeb_secure: bool,
    /// `v_max_secure - v_ndeb`.
    pub gap_ndeb: f64,
    /// `v_max_secure - v_hddeb`.
    pub gap_hddeb: f64,
    /// Assumptions the report relies on without re-deriving them.
    pub assumptions: Vec<String>,
}

/// Assembles the comparison for `d ∈ {3, 4, 5}`, computing `v_hddeb` with
/// [`optimize_basis`] on the builtin state and operator.
pub fn comparison_report(d: usize) -> Result<SecurityReport> {
    let unsupported = || Error::UnsupportedDimension {
        d,
        reason: "comparison reports exist for d = 3, 4, 5".into(),
    };
    let v_ndeb = ndeb_violation(d).ok_or_else(unsupported)?;
    let fa = cloner_fidelity(d).ok_or_else(unsupported)?;
    let state = EntangledState::reference(d)?;
    let v_hddeb = optimize_basis(&state, &builtin_operator(d)?)?.value;
    let v_max_secure = security_criterion(d, fa)?;
    Ok(SecurityReport {
        d,
        cloner_fidelity: fa,
        v_ndeb,
        v_hddeb,
        v_max_secure,
        noise_threshold_ndeb: noise_threshold(v_ndeb)?,
        noise_threshold_hddeb: noise_threshold(v_hddeb)?,
        ndeb_secure: v_ndeb < v_max_secure,
        hddeb_secure: v_hddeb < v_max_secure,
        gap_ndeb: v_max_secure - v_ndeb,
        gap_hddeb: v_max_secure - v_hddeb,
        assumptions: vec![
            "all 2d bases are cloned with the optimal phase-covariant fidelity F_A".into(),
            "F_A values are taken as constants, not derived".into(),
        ],
    })
}

/// Text table with one `v<…` row per dimension.
pub fn render_criterion_table(rows: &[CriterionRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{:>4} | {:>7} | Security criterion", "d", "F_A").unwrap();
    writeln!(out, "{}", "-".repeat(36)).unwrap();
    for r in rows {
        writeln!(
            out,
            "{:>4} | {:>7.4} | v<{:.4}",
            r.dimension_label(),
            r.cloner_fidelity,
            r.max_secure_violation
        )
        .unwrap();
    }
    out
}

/// Text table comparing the two protocols.
pub fn render_comparison(reports: &[SecurityReport]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:>3} | {:>7} | {:>8} | {:>9} | {:>7} | {:>8} | secure (N-DEB, hdDEB)",
        "d", "v_N-DEB", "v_hdDEB", "criterion", "N_N-DEB", "N_hdDEB"
    )
    .unwrap();
    writeln!(out, "{}", "-".repeat(84)).unwrap();
    for r in reports {
        writeln!(
            out,
            "{:>3} | {:>7.4} | {:>8.4} | v<{:<7.4} | {:>7.4} | {:>8.4} | ({}, {})",
            r.d,
            r.v_ndeb,
            r.v_hddeb,
            r.v_max_secure,
            r.noise_threshold_ndeb,
            r.noise_threshold_hddeb,
            r.ndeb_secure,
            r.hddeb_secure
        )
        .unwrap();
    }
    out
}
