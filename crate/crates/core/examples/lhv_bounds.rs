// Exhaustive local-realist check of each Bell operator, for the corrected
// coefficients and for the table as originally transcribed.

use hddeb::bell::{corrections, lhv_max, operator, Transcription};

pub fn run_example() -> hddeb::Result<Vec<(usize, Transcription, f64)>> {
    let mut out = Vec::new();
    for d in 3..=5 {
        for t in [Transcription::Corrected, Transcription::Tabulated] {
            out.push((d, t, lhv_max(&operator(d, t)?)?.max));
        }
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> hddeb::Result<()> {
    for (d, t, max) in run_example()? {
        let verdict = if max <= 1.0 + 1e-9 { "ok" } else { "exceeds 1" };
        println!("d={d} {t:?}: local max {max:.4} ({verdict})");
    }
    for d in 3..=5 {
        for c in corrections(d)? {
            println!(
                "d={d}: coefficient at A{:?} B{:?} reads {} as tabulated, {} corrected",
                c.alice, c.bob, c.tabulated, c.corrected
            );
        }
    }
    Ok(())
}
