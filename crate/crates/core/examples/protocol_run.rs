// One hdDEB run: random bases, sifting on matched rounds, key agreement and
// a Bell-violation estimate from the same transcript.

use hddeb::bell::builtin_operator;
use hddeb::protocol::{estimate_violation, run_protocol, ProtocolConfig, TranscriptSummary};
use hddeb::qudit::EntangledState;

pub fn run_example() -> hddeb::Result<TranscriptSummary> {
    let config = ProtocolConfig::new(EntangledState::maximally_entangled(3)?)?
        .with_rounds(30_000)
        .with_seed(7);
    let (records, summary) = run_protocol(&config)?;
    let est = estimate_violation(&records, &builtin_operator(3)?)?;
    assert_eq!(Some(est), summary.violation_estimate);
    Ok(summary)
}

#[allow(dead_code)]
fn main() -> hddeb::Result<()> {
    let s = run_example()?;
    println!(
        "rounds {}  sifted {}  sift rate {:.4}",
        s.rounds, s.sifted_rounds, s.sift_rate
    );
    println!("agreement {:?}", s.agreement_rate);
    println!(
        "first key dits {:?}",
        &s.key_alice[..12.min(s.key_alice.len())]
    );
    if let Some(v) = s.violation_estimate {
        println!("violation {:.4} +/- {:.4}", v.value, v.stderr);
    }
    Ok(())
}
