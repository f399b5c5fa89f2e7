// Optimal violation factors of the builtin hCHSH-d operators on the
// reference states, next to the tabulated reference values.
//
// ```bash
// cargo run --release --example optimal_violations
// ```

use hddeb::bell::{builtin_operator, optimize_basis};
use hddeb::qudit::EntangledState;
use hddeb::security::hddeb_reference_violation;

pub struct Row {
    pub d: usize,
    pub value: f64,
    pub reference: f64,
    pub exponents: [i64; 4],
    pub free_theta: f64,
}

pub fn run_example() -> hddeb::Result<Vec<Row>> {
    (3..=5)
        .map(|d| {
            let state = EntangledState::reference(d)?;
            let opt = optimize_basis(&state, &builtin_operator(d)?)?;
            Ok(Row {
                d,
                value: opt.value,
                reference: hddeb_reference_violation(d).expect("reference value"),
                exponents: opt.basis.exponents.expect("geometric"),
                free_theta: opt.theta_scan.value,
            })
        })
        .collect()
}

#[allow(dead_code)]
fn main() -> hddeb::Result<()> {
    println!(" d |      v |    ref | exponents        | free-theta v");
    for r in run_example()? {
        println!(
            "{:>2} | {:.4} | {:.4} | {:<16} | {:.4}",
            r.d,
            r.value,
            r.reference,
            format!("{:?}", r.exponents),
            r.free_theta
        );
    }
    Ok(())
}
