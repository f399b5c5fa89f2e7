//! Monte-Carlo simulation of the key distribution procedure.
//!
//! Each round Alice and Bob draw basis indices `a`, `b` uniformly, measure the
//! shared (possibly noisy) pair and record which detector fired. Rounds with
//! `a == b` yield key dits; every round feeds the Bell-violation estimate.
//!
//! Round `n` draws from its own ChaCha stream (`seed`, stream `n`), so a seed
//! fixes the transcript regardless of how rounds are scheduled across threads.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{
    basis_observables, builtin_operator, canonical_theta, normalization, rotation_phase, violation,
    violation_from_correlations, BasisAssignment, BellOperator,
};
use crate::ditter::{
    ditter_observable, geometric_phases, outcome_distribution, DitterObservable, JointDistribution,
};
use crate::error::{Error, Result};
use crate::qudit::{root_of_unity, EntangledState, State};
use crate::security::apply_isotropic_noise;

/// Which procedure to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `d` bases per party built from two generator ditters each.
    HdDeb,
    /// Four geometric bases per party; key generation only.
    NDeb,
}

/// Number of bases per party in N-DEB mode.
pub const NDEB_BASES: usize = 4;

impl Mode {
    pub fn basis_count(self, d: usize) -> usize {
        match self {
            Mode::HdDeb => d,
            Mode::NDeb => NDEB_BASES,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hddeb" => Ok(Mode::HdDeb),
            "ndeb" | "n-deb" => Ok(Mode::NDeb),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub state: EntangledState,
    pub noise: f64,
    pub theta: Complex64,
    pub rounds: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Generators for hdDEB mode; ignored in N-DEB mode.
    pub bases: BasisAssignment,
}

impl ProtocolConfig {
    /// hdDEB defaults: `θ = e^{iπ/(2d)}`, key-aligned bases, no noise, 10⁴ rounds.
    pub fn new(state: EntangledState) -> Result<Self> {
        let d = state.dim();
        let theta = canonical_theta(d);
        Ok(Self {
            bases: BasisAssignment::key_aligned(d, theta)?,
            state,
            noise: 0.0,
            theta,
            rounds: 10_000,
            seed: 0,
            mode: Mode::HdDeb,
        })
    }

    pub fn d(&self) -> usize {
        self.state.dim()
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_bases(mut self, bases: BasisAssignment) -> Self {
        self.theta = bases.theta;
        self.bases = bases;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::NoiseOutOfRange(self.noise));
        }
        if self.mode == Mode::HdDeb && self.bases.dim() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                actual: self.bases.dim(),
            });
        }
        Ok(())
    }

    /// The state the parties actually share.
    pub fn source(&self) -> Result<State> {
        Ok(if self.noise == 0.0 {
            State::Pure(self.state.clone())
        } else {
            State::Mixed(apply_isotropic_noise(&self.state, self.noise)?)
        })
    }

    /// Alice's and Bob's measurements indexed by basis.
    pub fn measurements(&self) -> Result<(Vec<DitterObservable>, Vec<DitterObservable>)> {
        let d = self.d();
        match self.mode {
            Mode::HdDeb => basis_observables(&self.bases),
            Mode::NDeb => {
                let side = |sign: i8| {
                    (0..NDEB_BASES as i64)
                        .map(|a| geometric_phases(d, self.theta, a, sign).map(ditter_observable))
                        .collect::<Result<Vec<_>>>()
                };
                Ok((side(1)?, side(-1)?))
            }
        }
    }
}

/// One protocol round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub a: usize,
    pub b: usize,
    /// Index `k` of Alice's detector that fired.
    pub alice_detector: usize,
    /// Index `k'` of Bob's detector that fired.
    pub bob_detector: usize,
    pub alice_outcome: Complex64,
    pub bob_outcome: Complex64,
}

/// Sifted key material.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiftOutcome {
    pub key_alice: Vec<usize>,
    pub key_bob: Vec<usize>,
    /// `None` when no round survived sifting.
    pub agreement_rate: Option<f64>,
}

impl SiftOutcome {
    pub fn rate_undefined(&self) -> bool {
        self.agreement_rate.is_none()
    }
}

/// Keeps rounds with `a == b`. Alice's dit is `k`, Bob's is `(d - k') mod d`,
/// so detector pairs with `k + k' ≡ 0` give equal dits.
pub fn sift(records: &[RoundRecord], d: usize) -> SiftOutcome {
    let (key_alice, key_bob): (Vec<usize>, Vec<usize>) = records
        .iter()
        .filter(|r| r.a == r.b)
        .map(|r| (r.alice_detector, (d - r.bob_detector % d) % d))
        .unzip();
    let agreement_rate = if key_alice.is_empty() {
        None
    } else {
        let agree = key_alice
            .iter()
            .zip(&key_bob)
            .filter(|(x, y)| x == y)
            .count();
        Some(agree as f64 / key_alice.len() as f64)
    };
    SiftOutcome {
        key_alice,
        key_bob,
        agreement_rate,
    }
}

/// Sample mean of `label_A · label_B` for one basis pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCorrelation {
    pub a: usize,
    pub b: usize,
    pub samples: usize,
    pub mean: Complex64,
}

/// Empirical correlations for every `(a, b)` in `0..n × 0..n`, row-major.
pub fn pair_correlations(records: &[RoundRecord], n: usize) -> Vec<PairCorrelation> {
    let mut sums = vec![(0usize, Complex64::new(0.0, 0.0)); n * n];
    for r in records.iter().filter(|r| r.a < n && r.b < n) {
        let cell = &mut sums[r.a * n + r.b];
        cell.0 += 1;
        cell.1 += r.alice_outcome * r.bob_outcome;
    }
    sums.into_iter()
        .enumerate()
        .map(|(idx, (samples, sum))| PairCorrelation {
            a: idx / n,
            b: idx % n,
            samples,
            mean: if samples == 0 {
                sum
            } else {
                sum / samples as f64
            },
        })
        .collect()
}

/// Empirical violation with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Plugs per-pair sample means into the violation formula. Monomial
/// `A₁^{d-1-a} A₂^a B₁^{d-1-b} B₂^b` is estimated from rounds with bases `(a, b)`.
/// The standard error combines the per-pair sample variances of
/// `Re(e^{iπ/d} c_m · label_A · label_B)` linearly.
pub fn estimate_violation(records: &[RoundRecord], op: &BellOperator) -> Result<ViolationEstimate> {
    let d = op.d;
    let rho = rotation_phase(d);
    let norm = normalization(d);
    // (count, Σy, Σy²) per pair, y = Re(ρ c_m X) for that pair's monomial
    let mut acc = vec![(0usize, 0.0f64, 0.0f64, Complex64::new(0.0, 0.0)); d * d];
    let coeff: Vec<Option<Complex64>> = (0..d * d)
        .map(|idx| {
            let (a, b) = (idx / d, idx % d);
            let k = d as u32 - 1;
            op.coefficient((k - a as u32, a as u32), (k - b as u32, b as u32))
        })
        .collect();
    for r in records.iter().filter(|r| r.a < d && r.b < d) {
        let idx = r.a * d + r.b;
        let x = r.alice_outcome * r.bob_outcome;
        let y = coeff[idx].map_or(0.0, |c| (rho * c * x).re);
        let cell = &mut acc[idx];
        cell.0 += 1;
        cell.1 += y;
        cell.2 += y * y;
        cell.3 += x;
    }
    let starved: Vec<(usize, usize)> = op
        .monomials
        .iter()
        .map(|m| (m.alice_basis(), m.bob_basis()))
        .filter(|&(a, b)| acc[a * d + b].0 == 0)
        .collect();
    if !starved.is_empty() {
        return Err(Error::InsufficientData(starved));
    }
    let means: Vec<Complex64> = op
        .monomials
        .iter()
        .map(|m| {
            let cell = &acc[m.alice_basis() * d + m.bob_basis()];
            cell.3 / cell.0 as f64
        })
        .collect();
    let value = violation_from_correlations(op, &means);
    let variance: f64 = op
        .monomials
        .iter()
        .map(|m| {
            let (n, s, s2, _) = acc[m.alice_basis() * d + m.bob_basis()];
            if n < 2 {
                return 0.0;
            }
            let n = n as f64;
            let sample_var = ((s2 - s * s / n) / (n - 1.0)).max(0.0);
            sample_var / n
        })
        .sum();
    Ok(ViolationEstimate {
        value,
        stderr: variance.sqrt() / norm,
    })
}

/// `P(m)` for `k + k' ≡ m (mod d)` when Alice's ditter has phases
/// `(1, θ^a, θ^{2a}, …)` and Bob's the conjugate phases.
pub fn correlation_spectrum(state: &EntangledState, theta: Complex64, a: i64) -> Result<Vec<f64>> {
    let d = state.dim();
    let alice = ditter_observable(geometric_phases(d, theta, a, 1)?);
    let bob = ditter_observable(geometric_phases(d, theta, a, -1)?);
    let dist = outcome_distribution(&State::Pure(state.clone()), &alice, &bob)?;
    let mut spectrum = vec![0.0; d];
    for k in 0..d {
        for kp in 0..d {
            spectrum[(k + kp) % d] += dist.probability(k, kp);
        }
    }
    Ok(spectrum)
}

/// True when matched bases always produce equal key dits.
pub fn is_perfectly_correlated(spectrum: &[f64]) -> bool {
    (spectrum[0] - 1.0).abs() < 1e-12
}

/// Aggregate statistics of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptSummary {
    pub d: usize,
    pub mode: Mode,
    pub rounds: usize,
    pub seed: u64,
    pub noise: f64,
    pub basis_count: usize,
    pub sifted_rounds: usize,
    pub sift_rate: f64,
    pub expected_sift_rate: f64,
    pub key_alice: Vec<usize>,
    pub key_bob: Vec<usize>,
    pub agreement_rate: Option<f64>,
    /// Exact probability of equal dits on a sifted round.
    pub expected_agreement: f64,
    pub pair_correlations: Vec<PairCorrelation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation_estimate: Option<ViolationEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation_analytic: Option<f64>,
    pub flags: Vec<String>,
}

fn cumulative(dist: &JointDistribution) -> Vec<f64> {
    let mut acc = 0.0;
    dist.probabilities()
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("non-empty");
    let idx = cdf.partition_point(|&c| c <= u * total);
    if idx < cdf.len() {
        return idx;
    }
    // u·total landed on the final rounding sliver; take the last outcome with mass
    let mut last = cdf.len() - 1;
    while last > 0 && cdf[last] == cdf[last - 1] {
        last -= 1;
    }
    last
}

/// Exact probability of `(d - k') mod d == k` for one joint distribution.
fn equal_dit_probability(dist: &JointDistribution) -> f64 {
    let d = dist.dim();
    (0..d).map(|k| dist.probability(k, (d - k) % d)).sum()
}

/// Runs the protocol and summarizes the transcript.
pub fn run_protocol(config: &ProtocolConfig) -> Result<(Vec<RoundRecord>, TranscriptSummary)> {
    config.validate()?;
    let d = config.d();
    let n = config.mode.basis_count(d);
    let source = config.source()?;
    let (alice, bob) = config.measurements()?;

    let dists = (0..n * n)
        .map(|idx| outcome_distribution(&source, &alice[idx / n], &bob[idx % n]))
        .collect::<Result<Vec<_>>>()?;
    let cdfs: Vec<Vec<f64>> = dists.iter().map(cumulative).collect();

    let records: Vec<RoundRecord> = (0..config.rounds)
        .into_par_iter()
        .map(|round| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(round as u64);
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let u: f64 = rng.random();
            let outcome = sample_index(&cdfs[a * n + b], u);
            let (k, kp) = (outcome / d, outcome % d);
            RoundRecord {
                round,
                a,
                b,
                alice_detector: k,
                bob_detector: kp,
                alice_outcome: alice[a].label(k),
                bob_outcome: bob[b].label(kp),
            }
        })
        .collect();

    let sifted = sift(&records, d);
    let sifted_rounds = sifted.key_alice.len();
    let expected_agreement = ((0..n)
        .map(|a| equal_dit_probability(&dists[a * n + a]))
        .sum::<f64>()
        / n as f64)
        .clamp(0.0, 1.0);

    let mut flags = Vec::new();
    if expected_agreement < 1.0 - 1e-12 {
        flags.push("imperfect_key_correlation".to_string());
    }
    if sifted.rate_undefined() {
        flags.push("empty_sift".to_string());
    }

    let (violation_estimate, violation_analytic) = match (config.mode, builtin_operator(d)) {
        (Mode::HdDeb, Ok(op)) => (
            estimate_violation(&records, &op).ok(),
            Some(violation(&source, &op, &config.bases)?),
        ),
        _ => (None, None),
    };
    if config.mode == Mode::HdDeb && violation_analytic.is_some() && violation_estimate.is_none() {
        flags.push("insufficient_data".to_string());
    }

    let summary = TranscriptSummary {
        d,
        mode: config.mode,
        rounds: config.rounds,
        seed: config.seed,
        noise: config.noise,
        basis_count: n,
        sifted_rounds,
        sift_rate: sifted_rounds as f64 / config.rounds as f64,
        expected_sift_rate: 1.0 / n as f64,
        key_alice: sifted.key_alice,
        key_bob: sifted.key_bob,
        agreement_rate: sifted.agreement_rate,
        expected_agreement,
        pair_correlations: pair_correlations(&records, n),
        violation_estimate,
        violation_analytic,
        flags,
    };
    Ok((records, summary))
}

/// Writes `round,a,b,k,k'` rows.
pub fn write_transcript_csv<W: Write>(records: &[RoundRecord], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidConfig(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "a", "b", "k", "k'"]).map_err(io)?;
    for r in records {
        w.write_record(&[
            r.round.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            r.alice_detector.to_string(),
            r.bob_detector.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidConfig(format!("csv output failed: {e}")))?;
    Ok(())
}

/// `d`-th root label check used by record validation.
pub fn is_root_of_unity(z: Complex64, d: usize) -> bool {
    (0..d as i64).any(|k| (z - root_of_unity(d, k)).norm() < 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(a: usize, b: usize, k: usize, kp: usize, d: usize) -> RoundRecord {
        RoundRecord {
            round: 0,
            a,
            b,
            alice_detector: k,
            bob_detector: kp,
            alice_outcome: root_of_unity(d, -(k as i64)),
            bob_outcome: root_of_unity(d, -(kp as i64)),
        }
    }

    #[test]
    fn sift_perfect_pairs() {
        let d = 5;
        let recs: Vec<_> = (0..d).map(|k| record(1, 1, k, (d - k) % d, d)).collect();
        let out = sift(&recs, d);
        assert_eq!(out.agreement_rate, Some(1.0));
        assert_eq!(out.key_alice, out.key_bob);
    }

    #[test]
    fn sift_empty() {
        let out = sift(&[record(0, 1, 0, 0, 3)], 3);
        assert!(out.rate_undefined());
        assert!(out.key_alice.is_empty() && out.key_bob.is_empty());
        assert!(sift(&[], 3).rate_undefined());
    }

    #[test]
    fn sift_chance_level() {
        let d = 3;
        let mut recs = Vec::new();
        for k in 0..d {
            for kp in 0..d {
                recs.push(record(2, 2, k, kp, d));
            }
        }
        let rate = sift(&recs, d).agreement_rate.unwrap();
        assert!((rate - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn estimate_with_unit_correlations_is_closed_form() {
        let d = 4;
        let op = builtin_operator(d).unwrap();
        let mut recs = Vec::new();
        for a in 0..d {
            for b in 0..d {
                recs.push(record(a, b, 0, 0, d));
                recs.push(record(a, b, 1, d - 1, d));
            }
        }
        let est = estimate_violation(&recs, &op).unwrap();
        let sum: Complex64 = op.monomials.iter().map(|m| m.coefficient).sum();
        let expected = (rotation_phase(d) * sum).re / normalization(d);
        assert!((est.value - expected).abs() < 1e-12);
        assert!(est.stderr < 1e-12);
    }

    #[test]
    fn estimate_names_starved_pairs() {
        let op = builtin_operator(3).unwrap();
        let recs = vec![record(0, 0, 0, 0, 3)];
        match estimate_violation(&recs, &op) {
            Err(Error::InsufficientData(pairs)) => {
                assert_eq!(pairs.len(), 8);
                assert!(!pairs.contains(&(0, 0)));
                assert!(pairs.contains(&(2, 1)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let cfg = ProtocolConfig::new(EntangledState::psi3()).unwrap();
        assert!(cfg.clone().with_rounds(0).validate().is_err());
        assert!(matches!(
            cfg.clone().with_noise(1.2).validate(),
            Err(Error::NoiseOutOfRange(_))
        ));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn sampling_skips_zero_mass() {
        let cdf = [0.0, 0.5, 0.5, 1.0];
        assert_eq!(sample_index(&cdf, 0.0), 1);
        assert_eq!(sample_index(&cdf, 0.5), 3);
        assert_eq!(sample_index(&[0.5, 1.0, 1.0], 0.9999999999999999), 1);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("hdDEB".parse::<Mode>().unwrap(), Mode::HdDeb);
        assert_eq!("N-DEB".parse::<Mode>().unwrap(), Mode::NDeb);
        assert!("bb84".parse::<Mode>().is_err());
        assert_eq!(Mode::NDeb.basis_count(7), 4);
    }
}
