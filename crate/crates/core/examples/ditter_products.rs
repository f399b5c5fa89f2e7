// A product of two ditter observables `Z_Θ^i Z_Λ^j` with `i + j = d - 1`
// is itself a ditter observable with conjugated detector labels.

use hddeb::ditter::{ditter_observable, product_observable, PhaseVector};
use hddeb::qudit::max_abs_diff;

pub fn run_example() -> hddeb::Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for d in 3..=6 {
        let theta =
            PhaseVector::from_angles(&(0..d).map(|k| 0.3 * k as f64 + 0.1).collect::<Vec<_>>())?;
        let lambda =
            PhaseVector::from_angles(&(0..d).map(|k| 1.7 - 0.45 * k as f64).collect::<Vec<_>>())?;
        let (zt, zl) = (
            ditter_observable(theta.clone()),
            ditter_observable(lambda.clone()),
        );
        for i in 1..=d - 2 {
            let j = d - 1 - i;
            let direct = zt.matrix().pow(i as u32) * zl.matrix().pow(j as u32);
            let single = product_observable(&theta, &lambda, i, j)?;
            out.push((d, i, max_abs_diff(&direct, single.matrix())));
        }
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> hddeb::Result<()> {
    for (d, i, err) in run_example()? {
        println!(
            "d={d} i={i} j={}: max |Z^i Z^j - Z_gamma^dagger| = {err:.2e}",
            d - 1 - i
        );
    }
    Ok(())
}
