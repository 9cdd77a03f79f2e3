// Drive the file-based commands the `tokenlink` binary exposes:
// synthesize a pair, then normalize, profile and link it from a run config.
//
// ```bash
// cargo run --example run_pipeline -- /tmp/tokenlink-demo
// ```

use std::path::PathBuf;

use tokenlink::pipeline::{cmd_link, cmd_normalize, cmd_profile, cmd_synth, RunConfig};
use tokenlink::synth::{FieldRates, SynthConfig};

fn main() -> anyhow::Result<()> {
    let dir: PathBuf = match std::env::args().nth(1) {
        Some(d) => d.into(),
        None => std::env::temp_dir().join("tokenlink-demo"),
    };
    let mut synth = SynthConfig { n_persons: 2000, seed: 11, ..Default::default() };
    synth.error_rates.typo = FieldRates::uniform(0.03);
    synth.error_rates.null.middle_name = 0.4;
    cmd_synth(&synth, &dir)?;

    // run.toml written by synth points at the generated files.
    let mut cfg = RunConfig::load(&dir.join("run.toml"))?;
    for (name, step) in [
        ("normalize", cmd_normalize as fn(&RunConfig) -> tokenlink::Result<_>),
        ("profile", cmd_profile),
        ("link", cmd_link),
    ] {
        cfg.output_dir = dir.join(name);
        let outcome = step(&cfg)?;
        println!("{name}: {} files, exit code {}", outcome.written.len(), outcome.exit_code());
    }
    print!("{}", std::fs::read_to_string(dir.join("link/validation_report.txt"))?);
    Ok(())
}
