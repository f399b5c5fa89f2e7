// Security criterion from optimal-cloner fidelities, and the N-DEB versus
// hdDEB comparison.

use hddeb::security::{
    comparison_report, criterion_table, render_comparison, render_criterion_table,
};

pub fn run_example() -> hddeb::Result<String> {
    let reports = (3..=5)
        .map(comparison_report)
        .collect::<hddeb::Result<Vec<_>>>()?;
    Ok(format!(
        "{}\n{}",
        render_criterion_table(&criterion_table()),
        render_comparison(&reports)
    ))
}

#[allow(dead_code)]
fn main() -> hddeb::Result<()> {
    print!("{}", run_example()?);
    Ok(())
}
