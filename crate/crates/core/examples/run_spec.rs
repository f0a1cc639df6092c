//! Parses an experiment spec and runs it through the harness.
//!
//! `cargo run --release --example run_spec -- examples/specs/ser_small.spec`

use ncmad::harness::{parse_spec, run_experiment};

fn main() -> ncmad::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/specs/ser_small.spec").into());
    let text = std::fs::read_to_string(&path)?;
    let mut spec = parse_spec(&text)?;
    spec.validate()?;
    spec.trials = spec.trials.min(200);
    print!("{}", run_experiment(&spec, 4)?);
    Ok(())
}
