use std::path::Path;
use std::process::Command;

use ncmad::harness::{optimize_constellation_cmd, parse_spec, resolve_threads, run, run_experiment, ExperimentKind};

const SER: &str = "experiment = ser\nseed = 11\ntrials = 60\nsnr_db = 0, 6\n\
[system]\nT = 4\nK = 2\nN = 2\n[constellation]\nB = 2\n\
[detector.ml]\n[detector.ep]\n[detector.mmse-sia]\n[detector.pocis]\n";

fn spec_with_output(text: &str, dir: &Path, name: &str) -> String {
    format!("output = {}\n{text}", dir.join(name).display())
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn ser_csv_has_schema_and_one_row_per_cell() {
    let spec = parse_spec(SER).unwrap();
    let csv = run_experiment(&spec, 1).unwrap();
    let r = rows(&csv);
    assert_eq!(r[0], ["snr_db", "detector", "ser", "ci_lo", "ci_hi", "n_trials"]);
    assert_eq!(r.len(), 1 + 2 * 4);
    for row in &r[1..] {
        let ser: f64 = row[2].parse().unwrap();
        let (lo, hi): (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
        assert!(lo <= ser && ser <= hi);
        assert_eq!(row[5], "60");
    }
}

#[test]
fn csv_is_identical_across_runs_and_thread_counts() {
    let spec = parse_spec(SER).unwrap();
    let a = run_experiment(&spec, 1).unwrap();
    assert_eq!(a, run_experiment(&spec, 1).unwrap());
    assert_eq!(a, run_experiment(&spec, 3).unwrap());
}

#[test]
fn tv_gmi_and_rate_schemas() {
    let base = "seed = 3\ntrials = 20\nsnr_db = 4\n[system]\nT = 4\nK = 2\nN = 2\n[constellation]\nB = 2\n";
    let tv = run_experiment(&parse_spec(&format!("experiment = tv\n{base}[detector.ep]\nt_max = 4\n[detector.pocis]\n")).unwrap(), 1).unwrap();
    let r = rows(&tv);
    assert_eq!(r[0], ["iteration", "detector", "delta_mean", "delta_se"]);
    assert_eq!(r.len(), 1 + 4 + 3);

    let gmi = run_experiment(
        &parse_spec(&format!("experiment = gmi\n{base}[detector.exact-joint]\n[detector.uniform]\n[gmi]\ns_grid = 0.5, 1\n")).unwrap(),
        1,
    )
    .unwrap();
    let r = rows(&gmi);
    assert_eq!(r[0], ["snr_db", "detector", "s", "gmi", "se"]);
    assert_eq!(r.len(), 1 + 2 * 2);
    assert!(r.iter().filter(|row| row[1] == "uniform").all(|row| row[3].parse::<f64>().unwrap() == 0.0));

    let rate = run_experiment(&parse_spec(&format!("experiment = rate\n{base}")).unwrap(), 1).unwrap();
    let r = rows(&rate);
    assert_eq!(r[0], ["snr_db", "rate", "se"]);
    assert_eq!(r.len(), 2);
}

#[test]
fn run_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let spec = parse_spec(&spec_with_output(SER, dir.path(), "nested/ser")).unwrap();
    let report = run(&spec).unwrap();
    assert_eq!(report.rows, 8);
    let csv = std::fs::read_to_string(&report.csv_path).unwrap();
    assert_eq!(csv, run_experiment(&spec, 1).unwrap());
    let meta = std::fs::read_to_string(&report.meta_path).unwrap();
    assert!(meta.contains("ncmad v0.1.0"));
    assert!(meta.contains("# spec"));
    let reparsed = parse_spec(meta.split("# spec\n").nth(1).unwrap()).unwrap();
    assert_eq!(reparsed, spec);
}

#[test]
fn constellation_command_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiment = constellation\nseed = 5\n[system]\nT = 4\nK = 2\nN = 2\n\
[constellation]\nB = 2\niters = 200\nrestarts = 2\nepsilon = 0.05\n";
    let a = optimize_constellation_cmd(&parse_spec(&spec_with_output(text, dir.path(), "a")).unwrap()).unwrap();
    let b = optimize_constellation_cmd(&parse_spec(&spec_with_output(text, dir.path(), "b")).unwrap()).unwrap();
    assert_eq!(a.text, b.text);
    assert_eq!(std::fs::read_to_string(&a.path).unwrap(), a.text);
    let parsed = ncmad::constellation::parse_constellations(&a.text).unwrap();
    assert_eq!(parsed.len(), 3);
    assert!((ncmad::constellation::min_chordal_distance(parsed[0].symbols()) - a.min_distance).abs() < 1e-12);
}

#[test]
fn threads_env_overrides_spec() {
    assert_eq!(resolve_threads(2, None).unwrap(), 2);
    assert_eq!(resolve_threads(2, Some("5")).unwrap(), 5);
    assert!(resolve_threads(2, Some("zero")).is_err());
}

#[test]
fn every_shipped_spec_parses() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/specs");
    let mut kinds = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = parse_spec(&std::fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        spec.validate().unwrap();
        kinds.push(spec.kind);
    }
    for k in [ExperimentKind::Tv, ExperimentKind::Ser, ExperimentKind::Gmi, ExperimentKind::Rate, ExperimentKind::Constellation] {
        assert!(kinds.contains(&k), "{k:?}");
    }
}

fn ncmad(args: &[&str], threads: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ncmad"));
    cmd.args(args).env_remove("NCMAD_THREADS");
    if let Some(t) = threads {
        cmd.env("NCMAD_THREADS", t);
    }
    cmd.output().unwrap()
}

#[test]
fn cli_run_version_and_errors() {
    let out = ncmad(&["version"], None);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ncmad v0.1.0"));

    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("ser.spec");
    std::fs::write(&spec_path, spec_with_output(SER, dir.path(), "one")).unwrap();
    assert!(ncmad(&["run", spec_path.to_str().unwrap()], None).status.success());
    let one = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    std::fs::write(&spec_path, spec_with_output(SER, dir.path(), "two")).unwrap();
    assert!(ncmad(&["run", spec_path.to_str().unwrap()], Some("4")).status.success());
    assert_eq!(one, std::fs::read_to_string(dir.path().join("two.csv")).unwrap());
    assert!(std::fs::read_to_string(dir.path().join("two.meta")).unwrap().contains("threads = 4"));

    std::fs::write(&spec_path, SER.replace("K = 2", "K = 5")).unwrap();
    let out = ncmad(&["run", spec_path.to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error kind="));
}
