// Isotropic noise scales the violation linearly, so each state has a noise
// threshold beyond which the Bell test no longer certifies anything.

use hddeb::bell::{builtin_operator, optimize_basis, violation};
use hddeb::qudit::{EntangledState, State};
use hddeb::security::{apply_isotropic_noise, channel_fidelity, noise_threshold};

/// `(d, [(noise, violation)], threshold)`.
pub type Curve = (usize, Vec<(f64, f64)>, f64);

pub fn run_example() -> hddeb::Result<Vec<Curve>> {
    let mut out = Vec::new();
    for d in 3..=5 {
        let pure = EntangledState::reference(d)?;
        let op = builtin_operator(d)?;
        let basis = optimize_basis(&pure, &op)?.basis;
        let curve = [0.0, 0.1, 0.2, 0.3, 0.4]
            .into_iter()
            .map(|n| {
                let rho = State::Mixed(apply_isotropic_noise(&pure, n)?);
                Ok((n, violation(&rho, &op, &basis)?))
            })
            .collect::<hddeb::Result<Vec<_>>>()?;
        let threshold = noise_threshold(curve[0].1)?;
        out.push((d, curve, threshold));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> hddeb::Result<()> {
    for (d, curve, n) in run_example()? {
        let pts: Vec<String> = curve
            .iter()
            .map(|(n, v)| format!("{n:.1}:{v:.4}"))
            .collect();
        println!(
            "d={d}  {}  threshold N={n:.4}  F={:.4}",
            pts.join("  "),
            channel_fidelity(n, d)
        );
    }
    Ok(())
}
