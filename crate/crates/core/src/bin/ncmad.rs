use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ncmad::harness::{optimize_constellation_cmd, parse_spec, run, version_string};

#[derive(Parser)]
#[command(name = "ncmad", about = "Non-coherent multi-user detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a spec file.
    Run { spec: PathBuf },
    /// Optimize a Grassmannian constellation and write it to <output>.txt.
    Constellation { spec: PathBuf },
    /// Print the version string.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Version => {
            println!("{}", version_string());
            Ok(())
        }
        Command::Run { spec } => load(&spec).and_then(|s| run(&s)).map(|r| {
            println!("wrote {} ({} rows) and {} in {:.2} s", r.csv_path.display(), r.rows, r.meta_path.display(), r.wall_clock_s);
        }),
        Command::Constellation { spec } => load(&spec).and_then(|s| optimize_constellation_cmd(&s)).map(|r| {
            println!("min_chordal_distance = {}", r.min_distance);
            println!("wrote {}", r.path.display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} message={:?}", e.kind(), e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn load(path: &PathBuf) -> ncmad::Result<ncmad::harness::ExperimentSpec> {
    parse_spec(&std::fs::read_to_string(path)?)
}
