//! Command-line front end.
//!
//! Every scalar parameter is a flag; `--config FILE` supplies `key = value`
//! defaults that flags override. Resolved parameters, the seed, the tool
//! version and a SHA-256 of the primary output are recorded in a run manifest,
//! and `hddeb replay MANIFEST` re-executes a run and checks the checksum.
//!
//! Exit codes: 0 success, 2 validation error, 3 insufficient data.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bell::{
    canonical_theta, lhv_max, operator, optimize_basis, violation, BasisAssignment, Transcription,
    OPTIMAL_BASES_EXPONENTS,
};
use crate::error::Error;
use crate::protocol::{
    correlation_spectrum, estimate_violation, is_perfectly_correlated, run_protocol,
    write_transcript_csv, Mode, ProtocolConfig,
};
use crate::qudit::{EntangledState, State};
use crate::security::{
    apply_isotropic_noise, comparison_report, criterion_table, hddeb_reference_violation,
    render_comparison, render_criterion_table,
};

pub const SCHEMA_VERSION: &str = "v1";
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_INSUFFICIENT_DATA: u8 = 3;

/// Local-bound tolerance used by `lhv`.
pub const LHV_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "hddeb", version, about = "hdDEB protocol and hCHSH-d toolkit")]
pub struct Cli {
    /// Key-value file (TOML) with parameter defaults; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Violation factor of a builtin Bell operator.
    Violation(ViolationArgs),
    /// Monte-Carlo protocol run with transcript and summary.
    Simulate(SimulateArgs),
    /// Security-criterion and protocol comparison tables.
    Security(SecurityArgs),
    /// Exhaustive local-realist bound check.
    Lhv(LhvArgs),
    /// Matched-basis detector-sum spectrum.
    Spectrum(SpectrumArgs),
    /// Re-run a manifest and verify its output checksum.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// Output format: json, csv or text.
    #[arg(long)]
    pub format: Option<String>,
    /// Directory for output files and the run manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ViolationArgs {
    #[arg(long)]
    pub d: Option<usize>,
    /// psi3 | psi4 | psi5 | ghz | mixed:N | file:PATH
    #[arg(long)]
    pub state: Option<String>,
    /// Base phase angle in radians, or "optimize".
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub optimize: bool,
    /// corrected | tabulated
    #[arg(long)]
    pub coefficients: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// hddeb | ndeb
    #[arg(long)]
    pub mode: Option<String>,
    /// key-aligned | optimal | comma-separated exponents for A1,A2,B1,B2
    #[arg(long, allow_hyphen_values = true)]
    pub bases: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SecurityArgs {
    /// Comma-separated dimensions for the comparison table.
    #[arg(long = "d-list")]
    pub d_list: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LhvArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub coefficients: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Geometric basis exponent `a`.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<i64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    InsufficientData(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::InsufficientData(_) => EXIT_INSUFFICIENT_DATA,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::InsufficientData(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InsufficientData(_) => CliError::InsufficientData(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Resolved parameters: config-file values overlaid by flags.
pub type Params = BTreeMap<String, String>;

/// Provenance record for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Params,
    pub seed: Option<u64>,
    pub version: String,
    pub output_sha256: String,
}

/// Everything a command produced.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub command: String,
    pub params: Params,
    pub result: Value,
    pub text: String,
    pub csv: Option<String>,
    /// Extra files written under `--out`.
    pub files: Vec<(String, Vec<u8>)>,
}

impl CommandOutput {
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(
            serde_json::to_string(&self.result)
                .expect("json")
                .as_bytes(),
        );
        if let Some(csv) = &self.csv {
            h.update(csv.as_bytes());
        }
        for (name, bytes) in &self.files {
            h.update(name.as_bytes());
            h.update(bytes);
        }
        hex::encode(h.finalize())
    }

    pub fn manifest(&self) -> RunManifest {
        RunManifest {
            command: self.command.clone(),
            parameters: self.params.clone(),
            seed: self.params.get("seed").and_then(|s| s.parse().ok()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            output_sha256: self.checksum(),
        }
    }

    /// `{schema, manifest, result}`.
    pub fn envelope(&self) -> Value {
        json!({
            "schema": format!("hddeb/{}/{}", self.command, SCHEMA_VERSION),
            "manifest": self.manifest(),
            "result": self.result,
        })
    }

    /// What goes to stdout for the resolved `format`.
    pub fn render(&self) -> Result<String, CliError> {
        match self
            .params
            .get("format")
            .map(String::as_str)
            .unwrap_or("text")
        {
            "json" => Ok(serde_json::to_string_pretty(&self.envelope()).expect("json") + "\n"),
            "csv" => self
                .csv
                .clone()
                .ok_or_else(|| invalid(format!("{} has no csv output", self.command))),
            "text" => Ok(self.text.clone()),
            other => Err(invalid(format!("unknown format {other:?}"))),
        }
    }

    /// Writes outputs and `manifest.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let write =
            |name: &str, bytes: &[u8]| std::fs::write(dir.join(name), bytes).map_err(io_err);
        let result = serde_json::to_string_pretty(&self.envelope()).expect("json") + "\n";
        write(&format!("{}.json", self.command), result.as_bytes())?;
        if let Some(csv) = &self.csv {
            write(&format!("{}.csv", self.command), csv.as_bytes())?;
        }
        for (name, bytes) in &self.files {
            write(name, bytes)?;
        }
        let manifest = serde_json::to_string_pretty(&self.manifest()).expect("json") + "\n";
        write("manifest.json", manifest.as_bytes())
    }
}

fn load_config(path: &Path) -> Result<Params, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
    Ok(table
        .into_iter()
        .map(|(k, v)| {
            let s = match v {
                toml::Value::String(s) => s,
                other => other.to_string(),
            };
            (k.replace('-', "_"), s)
        })
        .collect())
}

fn put<T: ToString>(p: &mut Params, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        p.insert(key.to_string(), v.to_string());
    }
}

fn put_common(p: &mut Params, c: &Common) {
    put(p, "format", &c.format);
    put(p, "out", &c.out.as_ref().map(|o| o.display().to_string()));
}

/// Name and flag overrides for a parsed command.
fn flag_params(cmd: &Command) -> (String, Params) {
    let mut p = Params::new();
    let name = match cmd {
        Command::Violation(a) => {
            put(&mut p, "d", &a.d);
            put(&mut p, "state", &a.state);
            put(&mut p, "theta", &a.theta);
            put(&mut p, "coefficients", &a.coefficients);
            if a.optimize {
                p.insert("optimize".into(), "true".into());
            }
            put_common(&mut p, &a.common);
            "violation"
        }
        Command::Simulate(a) => {
            put(&mut p, "d", &a.d);
            put(&mut p, "state", &a.state);
            put(&mut p, "theta", &a.theta);
            put(&mut p, "rounds", &a.rounds);
            put(&mut p, "noise", &a.noise);
            put(&mut p, "seed", &a.seed);
            put(&mut p, "mode", &a.mode);
            put(&mut p, "bases", &a.bases);
            put_common(&mut p, &a.common);
            "simulate"
        }
        Command::Security(a) => {
            put(&mut p, "d_list", &a.d_list);
            put_common(&mut p, &a.common);
            "security"
        }
        Command::Lhv(a) => {
            put(&mut p, "d", &a.d);
            put(&mut p, "coefficients", &a.coefficients);
            put_common(&mut p, &a.common);
            "lhv"
        }
        Command::Spectrum(a) => {
            put(&mut p, "d", &a.d);
            put(&mut p, "state", &a.state);
            put(&mut p, "theta", &a.theta);
            put(&mut p, "a", &a.a);
            put_common(&mut p, &a.common);
            "spectrum"
        }
        Command::Replay(_) => "replay",
    };
    (name.to_string(), p)
}

fn get<T: std::str::FromStr>(p: &Params, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    p.get(key)
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| invalid(format!("--{key} {s:?}: {e}")))
        })
        .transpose()
}

fn required_d(p: &Params) -> Result<usize, CliError> {
    get::<usize>(p, "d")?.ok_or_else(|| invalid("--d is required"))
}

fn transcription(p: &Params) -> Result<Transcription, CliError> {
    match p
        .get("coefficients")
        .map(String::as_str)
        .unwrap_or("corrected")
    {
        "corrected" => Ok(Transcription::Corrected),
        "tabulated" => Ok(Transcription::Tabulated),
        other => Err(invalid(format!("unknown coefficient table {other:?}"))),
    }
}

/// A parsed `--state` value.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    pub pure: EntangledState,
    pub noise: f64,
}

impl StateSpec {
    pub fn state(&self) -> Result<State, CliError> {
        Ok(if self.noise == 0.0 {
            State::Pure(self.pure.clone())
        } else {
            State::Mixed(apply_isotropic_noise(&self.pure, self.noise)?)
        })
    }
}

#[derive(Deserialize)]
struct StateFile {
    deltas: Vec<[f64; 2]>,
}

fn default_state(d: usize) -> Result<EntangledState, CliError> {
    Ok(EntangledState::reference(d).or_else(|_| EntangledState::maximally_entangled(d))?)
}

/// Parses `psi3 | psi4 | psi5 | ghz | mixed:N | file:PATH` for dimension `d`.
/// `mixed:N` applies isotropic noise `N` to the default state for `d`.
pub fn parse_state(spec: Option<&str>, d: usize) -> Result<StateSpec, CliError> {
    let pure = |s: EntangledState| -> Result<StateSpec, CliError> {
        if s.dim() != d {
            return Err(invalid(format!(
                "state has dimension {}, but --d is {d}",
                s.dim()
            )));
        }
        Ok(StateSpec {
            pure: s,
            noise: 0.0,
        })
    };
    let Some(spec) = spec else {
        return pure(default_state(d)?);
    };
    match spec {
        "psi3" => pure(EntangledState::psi3()),
        "psi4" => pure(EntangledState::psi4()),
        "psi5" => pure(EntangledState::psi5()),
        "ghz" => pure(EntangledState::maximally_entangled(d)?),
        s if s.starts_with("mixed:") => {
            let n: f64 = s["mixed:".len()..]
                .parse()
                .map_err(|e| invalid(format!("--state {s:?}: {e}")))?;
            if !(0.0..=1.0).contains(&n) {
                return Err(Error::NoiseOutOfRange(n).into());
            }
            Ok(StateSpec {
                pure: default_state(d)?,
                noise: n,
            })
        }
        s => {
            let path = s.strip_prefix("file:").unwrap_or(s);
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("--state {s:?}: {e}")))?;
            let file: StateFile = serde_json::from_str(&text)
                .map_err(|e| invalid(format!("state file {path}: {e}")))?;
            let deltas: Vec<Complex64> = file
                .deltas
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect();
            pure(EntangledState::new(deltas.len(), &deltas)?)
        }
    }
}

fn parse_theta(p: &Params, d: usize) -> Result<Complex64, CliError> {
    match p.get("theta").map(String::as_str) {
        None | Some("optimize") | Some("default") => Ok(canonical_theta(d)),
        Some(s) => {
            let angle: f64 = s
                .parse()
                .map_err(|e| invalid(format!("--theta {s:?}: {e}")))?;
            Ok(Complex64::from_polar(1.0, angle))
        }
    }
}

fn basis_json(b: &BasisAssignment) -> Value {
    json!({
        "theta_angle": b.theta.arg(),
        "exponents": b.exponents,
        "alice": [b.alice.0.thetas(), b.alice.1.thetas()],
        "bob": [b.bob.0.thetas(), b.bob.1.thetas()],
    })
}

fn cmd_violation(p: &Params) -> Result<CommandOutput, CliError> {
    let d = required_d(p)?;
    let op = operator(d, transcription(p)?)?;
    let spec = parse_state(p.get("state").map(String::as_str), d)?;
    let state = spec.state()?;
    let optimize = get::<bool>(p, "optimize")?.unwrap_or(false)
        || p.get("theta").is_some_and(|t| t == "optimize");
    let reference = hddeb_reference_violation(d);

    let (basis, value, extra) = if optimize {
        let opt = optimize_basis(&spec.pure, &op)?;
        let value = violation(&state, &op, &opt.basis)?;
        let extra = json!({
            "pure_state_value": opt.value,
            "seed_value": opt.seed_value,
            "theta_scan": opt.theta_scan,
        });
        (opt.basis, value, extra)
    } else {
        let basis = BasisAssignment::geometric(d, parse_theta(p, d)?, OPTIMAL_BASES_EXPONENTS)?;
        let value = violation(&state, &op, &basis)?;
        (basis, value, json!({}))
    };

    let mut text = String::new();
    writeln!(
        text,
        "d = {d}, {} coefficients",
        p.get("coefficients").map_or("corrected", |s| s)
    )
    .unwrap();
    writeln!(text, "violation v = {value:.4}").unwrap();
    match reference {
        Some(r) => writeln!(text, "reference   = {r:.4}").unwrap(),
        None => writeln!(text, "reference   = n/a").unwrap(),
    }
    writeln!(
        text,
        "basis: theta = {:.4} rad, exponents (A1, A2, B1, B2) = {:?}",
        basis.theta.arg(),
        basis.exponents.unwrap_or_default()
    )
    .unwrap();
    if let Some(scan) = extra.get("theta_scan") {
        writeln!(
            text,
            "free-theta scan: v = {:.4} at theta = {:.4} rad",
            scan["value"].as_f64().unwrap_or(f64::NAN),
            scan["angle"].as_f64().unwrap_or(f64::NAN)
        )
        .unwrap();
    }

    let result = json!({
        "d": d,
        "state": p.get("state").cloned().unwrap_or_else(|| "default".into()),
        "noise": spec.noise,
        "optimized": optimize,
        "coefficients": transcription(p)?,
        "violation": value,
        "reference_violation": reference,
        "basis": basis_json(&basis),
        "details": extra,
    });
    Ok(CommandOutput {
        command: "violation".into(),
        params: p.clone(),
        result,
        text,
        csv: None,
        files: vec![],
    })
}

fn parse_bases(p: &Params, d: usize, theta: Complex64) -> Result<BasisAssignment, CliError> {
    match p.get("bases").map(String::as_str).unwrap_or("key-aligned") {
        "key-aligned" => Ok(BasisAssignment::key_aligned(d, theta)?),
        "optimal" => Ok(BasisAssignment::geometric(
            d,
            theta,
            OPTIMAL_BASES_EXPONENTS,
        )?),
        s => {
            let exps: Vec<i64> = s
                .split(',')
                .map(|x| x.trim().parse::<i64>())
                .collect::<Result<_, _>>()
                .map_err(|e| invalid(format!("--bases {s:?}: {e}")))?;
            let exps: [i64; 4] = exps
                .try_into()
                .map_err(|_| invalid("--bases needs four exponents"))?;
            Ok(BasisAssignment::geometric(d, theta, exps)?)
        }
    }
}

fn cmd_simulate(p: &Params) -> Result<CommandOutput, CliError> {
    let d = required_d(p)?;
    let spec = parse_state(p.get("state").map(String::as_str), d)?;
    let noise = get::<f64>(p, "noise")?.unwrap_or(spec.noise);
    let theta = parse_theta(p, d)?;
    let mode: Mode = p
        .get("mode")
        .map(|m| m.parse())
        .transpose()?
        .unwrap_or(Mode::HdDeb);
    let config = ProtocolConfig::new(spec.pure)?
        .with_bases(parse_bases(p, d, theta)?)
        .with_noise(noise)
        .with_rounds(get(p, "rounds")?.unwrap_or(10_000))
        .with_seed(get(p, "seed")?.unwrap_or(0))
        .with_mode(mode);

    let (records, summary) = run_protocol(&config)?;
    if mode == Mode::HdDeb {
        if let Ok(op) = operator(d, Transcription::Corrected) {
            estimate_violation(&records, &op)?;
        }
    }

    let mut csv = Vec::new();
    write_transcript_csv(&records, &mut csv)?;
    let csv = String::from_utf8(csv).expect("ascii csv");

    let mut text = String::new();
    writeln!(
        text,
        "mode {:?}, d = {d}, rounds = {}, seed = {}, noise = {:.4}",
        mode, summary.rounds, summary.seed, summary.noise
    )
    .unwrap();
    writeln!(
        text,
        "sift rate       = {:.4} (expected {:.4})",
        summary.sift_rate, summary.expected_sift_rate
    )
    .unwrap();
    match summary.agreement_rate {
        Some(r) => writeln!(
            text,
            "agreement rate  = {r:.4} (expected {:.4})",
            summary.expected_agreement
        )
        .unwrap(),
        None => writeln!(text, "agreement rate  = undefined (no sifted rounds)").unwrap(),
    }
    writeln!(text, "key length      = {}", summary.key_alice.len()).unwrap();
    if let (Some(est), Some(v)) = (summary.violation_estimate, summary.violation_analytic) {
        writeln!(
            text,
            "violation       = {:.4} +/- {:.4} (analytic {v:.4})",
            est.value, est.stderr
        )
        .unwrap();
    }
    for f in &summary.flags {
        writeln!(text, "flag: {f}").unwrap();
    }

    let result = serde_json::to_value(&summary).expect("summary serializes");
    let summary_bytes = serde_json::to_string_pretty(&result).expect("json") + "\n";
    Ok(CommandOutput {
        command: "simulate".into(),
        params: p.clone(),
        result,
        text,
        csv: Some(csv),
        files: vec![("summary.json".into(), summary_bytes.into_bytes())],
    })
}

fn cmd_security(p: &Params) -> Result<CommandOutput, CliError> {
    let dims: Vec<usize> = p
        .get("d_list")
        .map_or("3,4,5", String::as_str)
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(format!("--d-list: {e}")))?;
    let rows = criterion_table();
    let reports = dims
        .iter()
        .map(|&d| comparison_report(d))
        .collect::<Result<Vec<_>, _>>()?;
    let mut text = render_criterion_table(&rows);
    text.push('\n');
    text.push_str(&render_comparison(&reports));

    let mut csv = String::from("d,v_ndeb,v_hddeb,v_max_secure,ndeb_secure,hddeb_secure\n");
    for r in &reports {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.d, r.v_ndeb, r.v_hddeb, r.v_max_secure, r.ndeb_secure, r.hddeb_secure
        )
        .unwrap();
    }
    let criteria: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "d": r.dimension_label(),
                "cloner_fidelity": r.cloner_fidelity,
                "max_secure_violation": r.max_secure_violation,
            })
        })
        .collect();
    Ok(CommandOutput {
        command: "security".into(),
        params: p.clone(),
        result: json!({ "criteria": criteria, "comparison": reports }),
        text,
        csv: Some(csv),
        files: vec![],
    })
}

fn cmd_lhv(p: &Params) -> Result<CommandOutput, CliError> {
    let d = required_d(p)?;
    let op = operator(d, transcription(p)?)?;
    let bound = lhv_max(&op)?;
    let pass = bound.max <= 1.0 + LHV_TOLERANCE;
    let text = format!(
        "d = {d}: max over {} local strategies = {:.4} (argmax exponents {:?}) -> {}\n",
        bound.strategies,
        bound.max,
        bound.argmax,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(CommandOutput {
        command: "lhv".into(),
        params: p.clone(),
        result: json!({
            "d": d,
            "coefficients": transcription(p)?,
            "max": bound.max,
            "argmax": bound.argmax,
            "strategies": bound.strategies,
            "tolerance": LHV_TOLERANCE,
            "pass": pass,
        }),
        text,
        csv: None,
        files: vec![],
    })
}

fn cmd_spectrum(p: &Params) -> Result<CommandOutput, CliError> {
    let d = required_d(p)?;
    let spec = parse_state(p.get("state").map(String::as_str), d)?;
    let theta = parse_theta(p, d)?;
    let a = get::<i64>(p, "a")?.unwrap_or(0);
    let spectrum = correlation_spectrum(&spec.pure, theta, a)?;
    let perfect = is_perfectly_correlated(&spectrum);
    let mut text = String::new();
    for (m, pm) in spectrum.iter().enumerate() {
        writeln!(text, "P(k+k' = {m} mod {d}) = {pm:.4}").unwrap();
    }
    if !perfect {
        writeln!(text, "flag: matched bases are not perfectly correlated").unwrap();
    }
    let mut csv = String::from("m,p\n");
    for (m, pm) in spectrum.iter().enumerate() {
        writeln!(csv, "{m},{pm}").unwrap();
    }
    Ok(CommandOutput {
        command: "spectrum".into(),
        params: p.clone(),
        result: json!({
            "d": d,
            "a": a,
            "theta_angle": theta.arg(),
            "spectrum": spectrum,
            "perfectly_correlated": perfect,
        }),
        text,
        csv: Some(csv),
        files: vec![],
    })
}

/// Runs `command` with fully resolved parameters.
pub fn execute(command: &str, params: &Params) -> Result<CommandOutput, CliError> {
    let out = match command {
        "violation" => cmd_violation(params),
        "simulate" => cmd_simulate(params),
        "security" => cmd_security(params),
        "lhv" => cmd_lhv(params),
        "spectrum" => cmd_spectrum(params),
        other => Err(invalid(format!("unknown command {other:?}"))),
    }?;
    if let Some(dir) = params.get("out") {
        out.write_to(Path::new(dir))?;
    }
    Ok(out)
}

/// Re-executes a manifest; returns the output and whether the checksum matched.
pub fn replay(manifest: &RunManifest) -> Result<(CommandOutput, bool), CliError> {
    let mut params = manifest.parameters.clone();
    params.remove("out");
    let out = execute(&manifest.command, &params)?;
    // the recorded checksum covers the parameters as run, including `out`
    let mut check = out.clone();
    check.params = manifest.parameters.clone();
    let matches = check.checksum() == manifest.output_sha256;
    Ok((out, matches))
}

/// Parses, merges config, executes and renders. Returns stdout text.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    if let Command::Replay(r) = &cli.command {
        let text = std::fs::read_to_string(&r.manifest).map_err(io_err)?;
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| invalid(format!("manifest: {e}")))?;
        let (_, ok) = replay(&manifest)?;
        if !ok {
            return Err(invalid(
                "replayed output checksum does not match the manifest",
            ));
        }
        return Ok(format!(
            "replay ok: {} {}\n",
            manifest.command, manifest.output_sha256
        ));
    }
    let (name, flags) = flag_params(&cli.command);
    let mut params = match &cli.config {
        Some(path) => load_config(path)?,
        None => Params::new(),
    };
    params.extend(flags);
    execute(&name, &params)?.render()
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hddeb: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, &str)]) -> Params {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn state_specs() {
        assert_eq!(
            parse_state(Some("psi5"), 5).unwrap().pure,
            EntangledState::psi5()
        );
        assert!(parse_state(Some("psi5"), 3).is_err());
        let m = parse_state(Some("mixed:0.25"), 3).unwrap();
        assert_eq!(m.noise, 0.25);
        assert!(parse_state(Some("mixed:1.5"), 3).is_err());
        assert_eq!(parse_state(None, 7).unwrap().pure.dim(), 7);
    }

    #[test]
    fn unsupported_dimension_is_validation_error() {
        let err = execute("violation", &params(&[("d", "6")])).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_VALIDATION);
    }

    #[test]
    fn starved_simulation_exits_with_insufficient_data() {
        let err = execute("simulate", &params(&[("d", "3"), ("rounds", "4")])).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_INSUFFICIENT_DATA);
        assert!(err.to_string().contains("(a="));
    }

    #[test]
    fn mixed_one_has_zero_violation() {
        let out = execute("violation", &params(&[("d", "3"), ("state", "mixed:1.0")])).unwrap();
        assert!(out.result["violation"].as_f64().unwrap().abs() < 1e-10);
    }

    #[test]
    fn csv_unavailable_for_violation() {
        let out = execute("violation", &params(&[("d", "4"), ("format", "csv")])).unwrap();
        assert!(out.render().is_err());
    }
}
