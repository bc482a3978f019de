//! Load a scenario from `examples/data`, run it, and print the summary the
//! harness writes next to the CSV trace.

use std::path::PathBuf;

use resest::run_scenario;

fn main() -> resest::Result<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let out = std::env::temp_dir().join("resest-scenario");
    for name in ["k7_flocal.json", "negative_control.json"] {
        let (report, dir) = run_scenario(data.join(name), Some(&out.join(name)))?;
        let s = &report.summary;
        println!(
            "{}: {} after {} steps (max error {:.3e}), robust={}, outputs in {}",
            s.name,
            s.verdict,
            s.steps,
            s.final_max_error,
            s.robust,
            dir.display()
        );
    }
    Ok(())
}
