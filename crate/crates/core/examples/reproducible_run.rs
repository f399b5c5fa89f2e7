// Library-level use of the command runner: execute a simulation into a
// directory, then replay its manifest and confirm the checksum.

use hddeb::cli::{execute, replay, CliError, Params, RunManifest};

pub fn run_example() -> Result<(RunManifest, bool), CliError> {
    let dir = std::env::temp_dir().join(format!("hddeb-example-{}", std::process::id()));
    let params: Params = [
        ("d", "4"),
        ("rounds", "5000"),
        ("seed", "3"),
        ("noise", "0.1"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .chain([("out".to_string(), dir.display().to_string())])
    .collect();
    let manifest = execute("simulate", &params)?.manifest();
    let (_, matches) = replay(&manifest)?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok((manifest, matches))
}

#[allow(dead_code)]
fn main() -> Result<(), CliError> {
    let (m, ok) = run_example()?;
    println!("{} v{} seed {:?}", m.command, m.version, m.seed);
    println!(
        "sha256 {}  replay {}",
        m.output_sha256,
        if ok { "matches" } else { "differs" }
    );
    Ok(())
}
