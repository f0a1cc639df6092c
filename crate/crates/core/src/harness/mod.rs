//! Experiment orchestration behind the `ncmad` binary: builds the system
//! from a spec, runs the requested Monte-Carlo experiment and writes
//! `<output>.csv` plus `<output>.meta`.
//!
//! CSV columns per experiment:
//!
//! | experiment | columns |
//! |---|---|
//! | `ser` | `snr_db,detector,ser,ci_lo,ci_hi,n_trials` |
//! | `gmi` | `snr_db,detector,s,gmi,se` |
//! | `tv` | `iteration,detector,delta_mean,delta_se` |
//! | `rate` | `snr_db,rate,se` |

mod spec;

pub use spec::{
    parse_spec, ConstellationChoice, CorrelationChoice, DetectorEntry, ExperimentKind, ExperimentSpec, SystemSpec,
};

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelModel, Correlation, CorrelationSpec, SystemConfig};
use crate::constellation::{
    min_chordal_distance, optimize_grassmannian, parse_constellations, pilot_qam_constellation, write_constellation,
    Constellation, ConstellationKind, PrecodedFamily, DEFAULT_BITS_CAP,
};
use crate::detectors::{DetectorSpec, Problem};
use crate::error::{Error, Result};
use crate::metrics::{gmi_estimate, rate_optimal_estimate, ser_experiment, tv_experiment, MonteCarlo};

const CONSTELLATION_TAG: u64 = 0x636f_6e73_7465_6c6c;
const CORRELATION_TAG: u64 = 0x636f_7272_656c_6174;

/// Version reported by `ncmad version` and in `.meta` files.
pub fn version_string() -> String {
    match option_env!("NCMAD_GIT_REV") {
        Some(rev) => format!("ncmad v{}-g{rev}", env!("CARGO_PKG_VERSION")),
        None => format!("ncmad v{}", env!("CARGO_PKG_VERSION")),
    }
}

/// Stream for randomness outside the trials (constellation restarts,
/// nominal angles), disjoint from every trial stream.
fn aux_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag);
    rng.set_stream(u64::MAX);
    rng
}

/// `NCMAD_THREADS`, when set, overrides the spec's `threads`.
pub fn resolve_threads(spec_threads: usize, env: Option<&str>) -> Result<usize> {
    match env {
        None => Ok(spec_threads),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Validation(format!("NCMAD_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

/// Constellations for the spec, with the precoded family when there is one.
pub fn build_constellations(spec: &ExperimentSpec) -> Result<(Vec<Constellation>, Option<PrecodedFamily>)> {
    let (t, k) = (spec.system.t, spec.system.k);
    match &spec.constellation {
        ConstellationChoice::Grassmannian { bits, params } => {
            let design = optimize_grassmannian(t - k + 1, 1 << bits, params, &mut aux_rng(spec.seed, CONSTELLATION_TAG));
            let family = PrecodedFamily::with_default_precoders(design.base, t, k)?;
            Ok((family.constellations()?, Some(family)))
        }
        ConstellationChoice::PilotQam { qam_order } => {
            let cons = (0..k)
                .map(|u| pilot_qam_constellation(t, k, u, *qam_order, DEFAULT_BITS_CAP))
                .collect::<Result<Vec<_>>>()?;
            Ok((cons, None))
        }
        ConstellationChoice::File { path } => {
            let all = parse_constellations(&std::fs::read_to_string(path)?)?;
            if let Some(base) = all.iter().find(|c| *c.kind() == ConstellationKind::Grassmannian) {
                let family = PrecodedFamily::with_default_precoders(base.symbols().to_vec(), t, k)?;
                return Ok((family.constellations()?, Some(family)));
            }
            let mut cons = Vec::with_capacity(k);
            for u in 0..k {
                let c = all
                    .iter()
                    .find(|c| matches!(c.kind(), ConstellationKind::PilotQam { user, .. } | ConstellationKind::GrassmannianPrecoded { user } if *user == u))
                    .ok_or_else(|| Error::Validation(format!("{path}: no constellation for user {u}")))?;
                cons.push(c.clone());
            }
            Ok((cons, None))
        }
    }
}

/// Channel model at the first SNR of the spec (unit noise when none).
pub fn build_model(spec: &ExperimentSpec) -> Result<ChannelModel> {
    let s = &spec.system;
    let correlation = match &s.correlation {
        CorrelationChoice::Uncorrelated => vec![Correlation::Uncorrelated; s.k],
        CorrelationChoice::LocalScattering {
            d_h,
            sigma_phi_deg,
            phi_deg,
            angle_samples,
        } => {
            let phi: Vec<f64> = match phi_deg {
                Some(p) => p.iter().map(|d| d.to_radians()).collect(),
                None => {
                    let mut rng = aux_rng(spec.seed, CORRELATION_TAG);
                    (0..s.k)
                        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                        .collect()
                }
            };
            phi.into_iter()
                .map(|phi| {
                    Correlation::LocalScattering(CorrelationSpec {
                        d_h: *d_h,
                        phi,
                        sigma_phi: sigma_phi_deg.to_radians(),
                        n_angle_samples: *angle_samples,
                    })
                })
                .collect()
        }
    };
    let mut cfg = SystemConfig {
        t: s.t,
        k: s.k,
        n: s.n,
        sigma2: 1.0,
        xi: s.xi.clone(),
        correlation,
    };
    if let Some(&snr) = spec.snr_db.first() {
        cfg = cfg.with_snr_db(snr);
    }
    ChannelModel::new(cfg)
}

pub fn build_problem(spec: &ExperimentSpec) -> Result<Problem> {
    let (cons, family) = build_constellations(spec)?;
    let problem = Problem::new(build_model(spec)?, cons, family)?;
    for d in &spec.detectors {
        match d.detector() {
            Some(DetectorSpec::Pocis { .. }) if problem.family().is_none() => {
                return Err(Error::KindMismatch {
                    expected: "grassmannian-precoded".into(),
                    found: problem.constellations()[0].kind().to_string(),
                })
            }
            Some(DetectorSpec::PilotMmse) if problem.family().is_some() => {
                return Err(Error::KindMismatch {
                    expected: "pilot-qam".into(),
                    found: problem.constellations()[0].kind().to_string(),
                })
            }
            _ => {}
        }
    }
    Ok(problem)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn to_csv(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(&r).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

fn finite(v: f64, what: &str) -> Result<String> {
    if v.is_finite() {
        Ok(v.to_string())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// Runs the experiment and returns the CSV text. Deterministic given the
/// spec; `threads` only changes the wall-clock time.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<String> {
    spec.validate()?;
    let problem = build_problem(spec)?;
    let mc = MonteCarlo::new(spec.trials, spec.seed).with_threads(threads);
    let detectors: Vec<DetectorSpec> = spec.detectors.iter().filter_map(|d| d.detector().cloned()).collect();
    let label = |i: usize| spec.detectors[i].label.clone();
    match spec.kind {
        ExperimentKind::Tv => {
            let traces = tv_experiment(&problem, &detectors, &mc)?;
            let mut rows = Vec::new();
            for (d, tr) in traces.iter().enumerate() {
                for (t, m) in tr.delta.iter().enumerate() {
                    rows.push(vec![(t + 1).to_string(), label(d), finite(m.mean, "delta")?, finite(m.se, "delta se")?]);
                }
            }
            to_csv(&["iteration", "detector", "delta_mean", "delta_se"], rows)
        }
        ExperimentKind::Ser => {
            let table = ser_experiment(&problem, &detectors, &spec.snr_db, &mc)?;
            let rows = table
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    Ok(vec![
                        r.snr_db.to_string(),
                        label(i % detectors.len()),
                        finite(r.ser, "ser")?,
                        finite(r.ci_lo, "ci_lo")?,
                        finite(r.ci_hi, "ci_hi")?,
                        r.n_trials.to_string(),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            to_csv(&["snr_db", "detector", "ser", "ci_lo", "ci_hi", "n_trials"], rows)
        }
        ExperimentKind::Gmi => {
            let mut rows = Vec::new();
            for (i, &snr) in spec.snr_db.iter().enumerate() {
                let p = at_snr(&problem, snr);
                for (d, entry) in spec.detectors.iter().enumerate() {
                    let g = gmi_estimate(&p, &entry.metric, &spec.s_grid, &mc.at_point(i as u64))?;
                    for ((s, v), se) in g.per_s_curve.iter().zip(&g.per_s_se) {
                        rows.push(vec![snr.to_string(), label(d), s.to_string(), finite(*v, "gmi")?, finite(*se, "gmi se")?]);
                    }
                }
            }
            to_csv(&["snr_db", "detector", "s", "gmi", "se"], rows)
        }
        ExperimentKind::Rate => {
            let mut rows = Vec::new();
            for (i, &snr) in spec.snr_db.iter().enumerate() {
                let r = rate_optimal_estimate(&at_snr(&problem, snr), &mc.at_point(i as u64))?;
                rows.push(vec![snr.to_string(), finite(r.rate_bits_per_use, "rate")?, finite(r.mc_std_error, "rate se")?]);
            }
            to_csv(&["snr_db", "rate", "se"], rows)
        }
        ExperimentKind::Constellation => Err(Error::Validation("use the constellation command for this spec".into())),
    }
}

fn at_snr(problem: &Problem, snr_db: f64) -> Problem {
    problem.with_sigma2(problem.model().config().clone().with_snr_db(snr_db).sigma2)
}

/// Files written by [`run`].
#[derive(Clone, Debug)]
pub struct RunReport {
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
    pub rows: usize,
    pub wall_clock_s: f64,
}

fn with_ext(output: &str, ext: &str) -> PathBuf {
    PathBuf::from(format!("{output}.{ext}"))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, body)?;
    Ok(())
}

fn meta(spec: &ExperimentSpec, threads: usize, started: SystemTime, wall: f64) -> String {
    let unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!(
        "version = {}\nstarted_unix = {unix}\nwall_clock_s = {wall:.3}\nthreads = {threads}\n\n# spec\n{}",
        version_string(),
        spec.to_text()
    )
}

/// Runs a spec end to end, honouring `NCMAD_THREADS`.
pub fn run(spec: &ExperimentSpec) -> Result<RunReport> {
    if spec.kind == ExperimentKind::Constellation {
        let started = SystemTime::now();
        let clock = Instant::now();
        let rep = optimize_constellation_cmd(spec)?;
        let meta_path = with_ext(&spec.output, "meta");
        write_file(&meta_path, &meta(spec, 1, started, clock.elapsed().as_secs_f64()))?;
        return Ok(RunReport {
            csv_path: rep.path,
            meta_path,
            rows: 0,
            wall_clock_s: clock.elapsed().as_secs_f64(),
        });
    }
    let threads = resolve_threads(spec.threads, std::env::var("NCMAD_THREADS").ok().as_deref())?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let csv = run_experiment(spec, threads)?;
    let wall = clock.elapsed().as_secs_f64();
    let csv_path = with_ext(&spec.output, "csv");
    let meta_path = with_ext(&spec.output, "meta");
    write_file(&csv_path, &csv)?;
    write_file(&meta_path, &meta(spec, threads, started, wall))?;
    Ok(RunReport {
        csv_path,
        meta_path,
        rows: csv.lines().count().saturating_sub(1),
        wall_clock_s: wall,
    })
}

#[derive(Clone, Debug)]
pub struct ConstellationReport {
    pub path: PathBuf,
    pub min_distance: f64,
    pub converged: bool,
    /// The file contents: base set followed by every user's constellation.
    pub text: String,
}

/// Optimizes the base set `D` and writes it together with the precoded
/// per-user constellations to `<output>.txt`.
pub fn optimize_constellation_cmd(spec: &ExperimentSpec) -> Result<ConstellationReport> {
    let ConstellationChoice::Grassmannian { bits, params } = &spec.constellation else {
        return Err(Error::Validation("constellation command needs kind = grassmannian".into()));
    };
    let (t, k) = (spec.system.t, spec.system.k);
    let design = optimize_grassmannian(t - k + 1, 1 << bits, params, &mut aux_rng(spec.seed, CONSTELLATION_TAG));
    let family = PrecodedFamily::with_default_precoders(design.base.clone(), t, k)?;
    let mut text = write_constellation(&family.base_constellation()?);
    for c in family.constellations()? {
        text.push_str(&write_constellation(&c));
    }
    let path = with_ext(&spec.output, "txt");
    write_file(&path, &text)?;
    Ok(ConstellationReport {
        path,
        min_distance: min_chordal_distance(&design.base),
        converged: design.converged,
        text,
    })
}
