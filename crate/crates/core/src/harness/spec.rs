//! The experiment spec file: `key = value` lines grouped under `[section]`
//! headers, `#` starts a comment.
//!
//! ```text
//! experiment = ser
//! seed = 7
//! trials = 2000
//! snr_db = 0, 4, 8
//! output = results/ser
//!
//! [system]
//! T = 6
//! K = 3
//! N = 4
//!
//! [constellation]
//! kind = grassmannian
//! B = 4
//!
//! [detector.ep]
//! [detector.pocis]
//! iters = 3
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::constellation::GrassmannianParams;
use crate::detectors::{DetectorSpec, EpConfig, SiaConfig, SiaPath, DEFAULT_JOINT_BITS_CAP};
use crate::error::{Error, Result};
use crate::metrics::{default_s_grid, GmiMetric};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Tv,
    Ser,
    Gmi,
    Rate,
    Constellation,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Tv => "tv",
            ExperimentKind::Ser => "ser",
            ExperimentKind::Gmi => "gmi",
            ExperimentKind::Rate => "rate",
            ExperimentKind::Constellation => "constellation",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "tv" => ExperimentKind::Tv,
            "ser" => ExperimentKind::Ser,
            "gmi" => ExperimentKind::Gmi,
            "rate" => ExperimentKind::Rate,
            "constellation" => ExperimentKind::Constellation,
            _ => return Err(format!("unknown experiment '{s}' (tv, ser, gmi, rate, constellation)")),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CorrelationChoice {
    Uncorrelated,
    LocalScattering {
        d_h: f64,
        sigma_phi_deg: f64,
        /// Nominal angles in degrees; drawn from the master seed when absent.
        phi_deg: Option<Vec<f64>>,
        angle_samples: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub t: usize,
    pub k: usize,
    pub n: usize,
    /// One gain per user.
    pub xi: Vec<f64>,
    pub correlation: CorrelationChoice,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConstellationChoice {
    /// Optimized base set `D` in `C^(T−K+1)`, precoded per user.
    Grassmannian { bits: u32, params: GrassmannianParams },
    PilotQam { qam_order: usize },
    /// Constellation file as written by the `constellation` command.
    File { path: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorEntry {
    /// Section suffix, `ep` for `[detector.ep]`, `epak.t0-2` for
    /// `[detector.epak.t0-2]`; used as the detector column in CSVs.
    pub label: String,
    pub metric: GmiMetric,
}

impl DetectorEntry {
    pub fn detector(&self) -> Option<&DetectorSpec> {
        match &self.metric {
            GmiMetric::Factorized(d) => Some(d),
            GmiMetric::ExactJoint => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    pub threads: usize,
    pub output: String,
    pub snr_db: Vec<f64>,
    pub system: SystemSpec,
    pub constellation: ConstellationChoice,
    pub detectors: Vec<DetectorEntry>,
    pub s_grid: Vec<f64>,
}

/// Raw key/value pairs of one section, with their line numbers.
#[derive(Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Parse {
                line,
                msg: format!("{key}: {e}"),
            }),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|x| {
                    x.trim().parse::<T>().map_err(|e| Error::Parse {
                        line,
                        msg: format!("{key}: {e}"),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn finish(self, name: &str) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            return Err(Error::Parse {
                line,
                msg: format!("unknown key '{key}' in [{name}]"),
            });
        }
        Ok(())
    }
}

fn missing(key: &str, section: &str) -> Error {
    Error::Validation(format!("missing '{key}' in [{section}]"))
}

fn detector_from_section(kind: &str, label: &str, sec: &mut Section) -> Result<GmiMetric> {
    let ep = |sec: &mut Section, t0_default: Option<usize>| -> Result<EpConfig> {
        let d = EpConfig::default();
        let t_max = sec.parse("t_max")?.unwrap_or(d.t_max);
        let cfg = EpConfig {
            eta: sec.parse("eta")?.unwrap_or(d.eta),
            t_max,
            t0: sec.parse("t0")?.or(t0_default).unwrap_or(t_max),
            conv_tol: sec.parse("conv_tol")?.unwrap_or(d.conv_tol),
        };
        cfg.validate()?;
        Ok(cfg)
    };
    let spec = match kind {
        "exact-joint" => return Ok(GmiMetric::ExactJoint),
        "exact" => DetectorSpec::Exact,
        "ml" => DetectorSpec::Ml,
        "genie" => DetectorSpec::Genie,
        "uniform" => DetectorSpec::Uniform,
        "pilot-mmse" => DetectorSpec::PilotMmse,
        "ep" => DetectorSpec::Ep(ep(sec, None)?),
        "epak" => DetectorSpec::Epak(ep(sec, Some(0))?),
        "mmse-sia" => {
            let d = SiaConfig::default();
            let path = match sec.take("path") {
                None => SiaPath::Auto,
                Some((line, v)) => match v.as_str() {
                    "auto" => SiaPath::Auto,
                    "general" => SiaPath::General,
                    "fast" => SiaPath::Fast,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("path: expected auto, general or fast, got '{v}'"),
                        })
                    }
                },
            };
            let cfg = SiaConfig {
                eta: sec.parse("eta")?.unwrap_or(d.eta),
                t_max: sec.parse("t_max")?.unwrap_or(d.t_max),
                conv_tol: sec.parse("conv_tol")?.unwrap_or(d.conv_tol),
                path,
            };
            cfg.validate()?;
            DetectorSpec::MmseSia(cfg)
        }
        "pocis" => {
            let iters = sec.parse("iters")?.unwrap_or(3);
            if iters == 0 {
                return Err(Error::Validation("pocis iters >= 1 violated".into()));
            }
            DetectorSpec::Pocis { iters }
        }
        _ => {
            return Err(Error::Parse {
                line: sec.line,
                msg: format!("unknown detector '{kind}' in [detector.{label}]"),
            })
        }
    };
    Ok(GmiMetric::Factorized(spec))
}

/// Parses and validates a spec document.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let mut sections: Vec<(String, Section)> = vec![(String::new(), Section::default())];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                line,
                msg: "unterminated section header".into(),
            })?;
            let name = name.trim().to_string();
            if sections.iter().any(|(n, _)| *n == name) {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate section [{name}]"),
                });
            }
            sections.push((
                name,
                Section {
                    line,
                    ..Section::default()
                },
            ));
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected 'key = value', got '{content}'"),
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            return Err(Error::Parse { line, msg: "empty key".into() });
        }
        let sec = &mut sections.last_mut().unwrap().1;
        if sec.entries.insert(key.clone(), (line, value)).is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key '{key}'"),
            });
        }
    }

    let mut top = None;
    let mut system = None;
    let mut constellation = None;
    let mut gmi = None;
    let mut detectors = Vec::new();
    for (name, sec) in sections {
        match name.as_str() {
            "" => top = Some(sec),
            "system" => system = Some(sec),
            "constellation" => constellation = Some(sec),
            "gmi" => gmi = Some(sec),
            other => match other.strip_prefix("detector.") {
                Some(label) if !label.is_empty() => detectors.push((label.to_string(), sec)),
                _ => {
                    return Err(Error::Parse {
                        line: sec.line,
                        msg: format!("unknown section [{other}]"),
                    })
                }
            },
        }
    }

    let mut top = top.unwrap();
    let kind: ExperimentKind = top.parse("experiment")?.ok_or_else(|| missing("experiment", "top level"))?;
    let seed = top.parse("seed")?.unwrap_or(0);
    let trials = top.parse("trials")?.unwrap_or(1000);
    let threads = top.parse("threads")?.unwrap_or(1);
    let output = top.take("output").map(|(_, v)| v).unwrap_or_else(|| "ncmad_out".into());
    let snr_db = top.list::<f64>("snr_db")?.unwrap_or_default();
    top.finish("top level")?;

    let mut sys = system.ok_or_else(|| Error::Validation("missing [system] section".into()))?;
    let t = sys.parse("T")?.ok_or_else(|| missing("T", "system"))?;
    let k: usize = sys.parse("K")?.ok_or_else(|| missing("K", "system"))?;
    let n = sys.parse("N")?.ok_or_else(|| missing("N", "system"))?;
    let xi = match sys.list::<f64>("xi")? {
        None => vec![1.0; k],
        Some(v) if v.len() == 1 => vec![v[0]; k],
        Some(v) => v,
    };
    let correlation = match sys.take("correlation") {
        None => CorrelationChoice::Uncorrelated,
        Some((_, v)) if v == "uncorrelated" => CorrelationChoice::Uncorrelated,
        Some((_, v)) if v == "local-scattering" => CorrelationChoice::LocalScattering {
            d_h: sys.parse("d_h")?.unwrap_or(0.5),
            sigma_phi_deg: sys.parse("sigma_phi_deg")?.unwrap_or(10.0),
            phi_deg: sys.list("phi_deg")?,
            angle_samples: sys.parse("angle_samples")?.unwrap_or(crate::channel::DEFAULT_ANGLE_SAMPLES),
        },
        Some((line, v)) => {
            return Err(Error::Parse {
                line,
                msg: format!("correlation: expected uncorrelated or local-scattering, got '{v}'"),
            })
        }
    };
    sys.finish("system")?;
    let system = SystemSpec {
        t,
        k,
        n,
        xi,
        correlation,
    };

    let mut con = constellation.ok_or_else(|| Error::Validation("missing [constellation] section".into()))?;
    let con_kind = con.take("kind").map(|(_, v)| v).unwrap_or_else(|| "grassmannian".into());
    let bits: Option<u32> = con.parse("B")?;
    let constellation = match con_kind.as_str() {
        "grassmannian" => {
            let d = GrassmannianParams::default();
            ConstellationChoice::Grassmannian {
                bits: bits.ok_or_else(|| missing("B", "constellation"))?,
                params: GrassmannianParams {
                    epsilon: con.parse("epsilon")?.unwrap_or(d.epsilon),
                    iters: con.parse("iters")?.unwrap_or(d.iters),
                    restarts: con.parse("restarts")?.unwrap_or(d.restarts),
                },
            }
        }
        "pilot-qam" => {
            let qam_order: usize = con.parse("qam_order")?.unwrap_or(4);
            if let Some(b) = bits {
                let want = (t.saturating_sub(k)) as u32 * qam_order.trailing_zeros();
                if b != want {
                    return Err(Error::Validation(format!(
                        "B = (T - K) log2(qam_order) violated ({b} != {want})"
                    )));
                }
            }
            ConstellationChoice::PilotQam { qam_order }
        }
        "file" => ConstellationChoice::File {
            path: con.take("path").map(|(_, v)| v).ok_or_else(|| missing("path", "constellation"))?,
        },
        other => {
            return Err(Error::Validation(format!(
                "constellation kind '{other}' (grassmannian, pilot-qam, file)"
            )))
        }
    };
    con.finish("constellation")?;

    let detectors = detectors
        .into_iter()
        .map(|(label, mut sec)| {
            let kind = label.split('.').next().unwrap().to_string();
            let metric = detector_from_section(&kind, &label, &mut sec)?;
            sec.finish(&format!("detector.{label}"))?;
            Ok(DetectorEntry { label, metric })
        })
        .collect::<Result<Vec<_>>>()?;

    let s_grid = match gmi {
        None => default_s_grid(),
        Some(mut sec) => {
            let g = sec.list("s_grid")?.unwrap_or_else(default_s_grid);
            sec.finish("gmi")?;
            g
        }
    };

    let spec = ExperimentSpec {
        kind,
        seed,
        trials,
        threads,
        output,
        snr_db,
        system,
        constellation,
        detectors,
        s_grid,
    };
    spec.validate()?;
    Ok(spec)
}

impl ExperimentSpec {
    /// Bits per user, when known without reading a file.
    pub fn bits_per_user(&self) -> Option<u32> {
        match &self.constellation {
            ConstellationChoice::Grassmannian { bits, .. } => Some(*bits),
            ConstellationChoice::PilotQam { qam_order } => {
                Some((self.system.t.saturating_sub(self.system.k)) as u32 * qam_order.trailing_zeros())
            }
            ConstellationChoice::File { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.t <= s.k || s.k == 0 {
            return Err(Error::Validation(format!("T > K >= 1 violated (T = {}, K = {})", s.t, s.k)));
        }
        if s.n < s.k {
            return Err(Error::Validation(format!("N >= K violated (N = {}, K = {})", s.n, s.k)));
        }
        if s.xi.len() != s.k || s.xi.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Validation("xi must hold one positive gain per user".into()));
        }
        if let CorrelationChoice::LocalScattering {
            d_h,
            sigma_phi_deg,
            phi_deg,
            angle_samples,
        } = &s.correlation
        {
            if !(*d_h > 0.0) || !(*sigma_phi_deg >= 0.0) || *angle_samples == 0 {
                return Err(Error::Validation("d_h > 0, sigma_phi_deg >= 0, angle_samples >= 1 violated".into()));
            }
            if phi_deg.as_ref().is_some_and(|p| p.len() != s.k) {
                return Err(Error::Validation("phi_deg needs one angle per user".into()));
            }
        }
        if self.threads == 0 {
            return Err(Error::Validation("threads >= 1 violated".into()));
        }
        match &self.constellation {
            ConstellationChoice::Grassmannian { bits, params } => {
                if *bits == 0 || *bits > crate::constellation::DEFAULT_BITS_CAP {
                    return Err(Error::Validation(format!("1 <= B <= 20 violated (B = {bits})")));
                }
                if !(params.epsilon > 0.0) || params.restarts == 0 {
                    return Err(Error::Validation("epsilon > 0 and restarts >= 1 violated".into()));
                }
            }
            ConstellationChoice::PilotQam { qam_order } => {
                if ![4, 8, 16].contains(qam_order) {
                    return Err(Error::Validation(format!("qam_order in {{4, 8, 16}} violated ({qam_order})")));
                }
            }
            ConstellationChoice::File { .. } => {}
        }
        if self.kind == ExperimentKind::Constellation {
            if !matches!(self.constellation, ConstellationChoice::Grassmannian { .. }) {
                return Err(Error::Validation("constellation experiment needs kind = grassmannian".into()));
            }
            return Ok(());
        }
        if self.trials == 0 {
            return Err(Error::Validation("trials >= 1 violated".into()));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("snr_db must list at least one finite value".into()));
        }
        if self.kind == ExperimentKind::Tv && self.snr_db.len() != 1 {
            return Err(Error::Validation("tv experiment takes exactly one snr_db".into()));
        }
        if self.kind != ExperimentKind::Rate && self.detectors.is_empty() {
            return Err(Error::Validation("at least one [detector.NAME] section is required".into()));
        }
        if self.kind != ExperimentKind::Gmi && self.detectors.iter().any(|d| d.metric == GmiMetric::ExactJoint) {
            return Err(Error::Validation("exact-joint is only a GMI metric".into()));
        }
        if self.kind == ExperimentKind::Gmi && (self.s_grid.is_empty() || self.s_grid.iter().any(|s| !(*s >= 0.0))) {
            return Err(Error::Validation("s_grid must be nonempty with every s >= 0".into()));
        }
        let mut labels: Vec<&str> = self.detectors.iter().map(|d| d.label.as_str()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.detectors.len() {
            return Err(Error::Validation("detector labels must be distinct".into()));
        }
        // fail fast on enumeration caps
        let joint = matches!(self.kind, ExperimentKind::Tv | ExperimentKind::Rate)
            || self.detectors.iter().any(|d| match &d.metric {
                GmiMetric::ExactJoint => true,
                GmiMetric::Factorized(spec) => spec.needs_joint_enumeration(),
            });
        if let (true, Some(b)) = (joint, self.bits_per_user()) {
            let total = b * s.k as u32;
            if total > DEFAULT_JOINT_BITS_CAP {
                return Err(Error::SizeOverflow {
                    bits: total,
                    cap: DEFAULT_JOINT_BITS_CAP,
                });
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse_spec(spec.to_text())` gives back `spec`.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let _ = writeln!(out, "experiment = {}", self.kind.name());
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "threads = {}", self.threads);
        let _ = writeln!(out, "output = {}", self.output);
        if !self.snr_db.is_empty() {
            let _ = writeln!(out, "snr_db = {}", list(&self.snr_db));
        }
        let s = &self.system;
        let _ = writeln!(out, "\n[system]\nT = {}\nK = {}\nN = {}\nxi = {}", s.t, s.k, s.n, list(&s.xi));
        match &s.correlation {
            CorrelationChoice::Uncorrelated => {
                let _ = writeln!(out, "correlation = uncorrelated");
            }
            CorrelationChoice::LocalScattering {
                d_h,
                sigma_phi_deg,
                phi_deg,
                angle_samples,
            } => {
                let _ = writeln!(
                    out,
                    "correlation = local-scattering\nd_h = {d_h}\nsigma_phi_deg = {sigma_phi_deg}\nangle_samples = {angle_samples}"
                );
                if let Some(p) = phi_deg {
                    let _ = writeln!(out, "phi_deg = {}", list(p));
                }
            }
        }
        out.push_str("\n[constellation]\n");
        match &self.constellation {
            ConstellationChoice::Grassmannian { bits, params } => {
                let _ = writeln!(
                    out,
                    "kind = grassmannian\nB = {bits}\nepsilon = {}\niters = {}\nrestarts = {}",
                    params.epsilon, params.iters, params.restarts
                );
            }
            ConstellationChoice::PilotQam { qam_order } => {
                let _ = writeln!(out, "kind = pilot-qam\nqam_order = {qam_order}");
            }
            ConstellationChoice::File { path } => {
                let _ = writeln!(out, "kind = file\npath = {path}");
            }
        }
        for d in &self.detectors {
            let _ = writeln!(out, "\n[detector.{}]", d.label);
            match &d.metric {
                GmiMetric::Factorized(DetectorSpec::Ep(c)) | GmiMetric::Factorized(DetectorSpec::Epak(c)) => {
                    let _ = writeln!(out, "eta = {}\nt_max = {}\nt0 = {}\nconv_tol = {}", c.eta, c.t_max, c.t0, c.conv_tol);
                }
                GmiMetric::Factorized(DetectorSpec::MmseSia(c)) => {
                    let path = match c.path {
                        SiaPath::Auto => "auto",
                        SiaPath::General => "general",
                        SiaPath::Fast => "fast",
                    };
                    let _ = writeln!(out, "eta = {}\nt_max = {}\nconv_tol = {}\npath = {path}", c.eta, c.t_max, c.conv_tol);
                }
                GmiMetric::Factorized(DetectorSpec::Pocis { iters }) => {
                    let _ = writeln!(out, "iters = {iters}");
                }
                _ => {}
            }
        }
        if self.kind == ExperimentKind::Gmi {
            let _ = writeln!(out, "\n[gmi]\ns_grid = {}", list(&self.s_grid));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "experiment = ser\nsnr_db = 8\n[system]\nT = 4\nK = 2\nN = 2\n[constellation]\nB = 2\n[detector.ep]\n";

    #[test]
    fn minimal_spec_gets_defaults() {
        let s = parse_spec(MINIMAL).unwrap();
        assert_eq!(s.kind, ExperimentKind::Ser);
        assert_eq!(s.threads, 1);
        match &s.detectors[0].metric {
            GmiMetric::Factorized(DetectorSpec::Ep(c)) => {
                assert_eq!((c.eta, c.t_max), (0.9, 6));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn k_above_t_is_rejected() {
        let err = parse_spec(&MINIMAL.replace("K = 2", "K = 5")).unwrap_err();
        assert!(err.to_string().contains("T > K"), "{err}");
    }

    #[test]
    fn unknown_keys_and_sections_carry_line_numbers() {
        let err = parse_spec(&MINIMAL.replace("N = 2", "N = 2\nfoo = 1")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 7, .. }), "{err}");
        let err = parse_spec(&format!("{MINIMAL}[bogus]\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 10, .. }), "{err}");
        let err = parse_spec(&MINIMAL.replace("T = 4", "T = four")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn text_round_trip() {
        let text = "experiment = gmi\nseed = 3\ntrials = 10\nsnr_db = -2.5, 0, 4\noutput = a/b\n\
            [system]\nT = 6\nK = 3\nN = 4\ncorrelation = local-scattering\nphi_deg = 10, -20.5, 33\n\
            [constellation]\nkind = grassmannian\nB = 4\nrestarts = 3\n\
            [detector.ep]\neta = 0.7\n[detector.epak.t0-2]\nt0 = 2\n[detector.mmse-sia]\npath = general\n\
            [detector.pocis]\niters = 4\n[detector.exact-joint]\n[gmi]\ns_grid = 0.5, 1, 1.5\n";
        let a = parse_spec(text).unwrap();
        let b = parse_spec(&a.to_text()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn caps_fail_fast() {
        let text = MINIMAL.replace("B = 2", "B = 11").replace("[detector.ep]", "[detector.ml]");
        assert!(matches!(parse_spec(&text).unwrap_err(), Error::SizeOverflow { bits: 22, .. }));
    }
}
