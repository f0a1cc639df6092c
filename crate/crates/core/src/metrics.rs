//! LLRs, posterior accuracy, SER and achievable-rate estimates.
//!
//! Every experiment draws its blocks from a per-trial ChaCha8 stream keyed by
//! `(seed, point, trial)`, so detectors evaluated with the same
//! [`MonteCarlo`] see identical blocks, and the result does not depend on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{sample_block, ChannelBlock};
use crate::constellation::Label;
use crate::detectors::{detect, map_hard_decision, DetectorSpec, JointTable, Problem, DEFAULT_JOINT_BITS_CAP};
use crate::error::{Error, Result};
use crate::linalg::log_sum_exp;

/// LLRs are clamped to `±LLR_CLAMP`.
pub const LLR_CLAMP: f64 = 50.0;
/// PMF entries below this are raised to it before taking logs in the GMI.
pub const GMI_PMF_FLOOR: f64 = 1e-12;

/// `(1/2) Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `log P(bit j = 1) − log P(bit j = 0)` for every bit position.
pub fn llr(pmf: &[f64], labels: &[Label]) -> Vec<f64> {
    let bits = labels.first().map_or(0, |l| l.bits());
    (0..bits)
        .map(|j| {
            let (mut one, mut zero) = (Vec::new(), Vec::new());
            for (p, l) in pmf.iter().zip(labels) {
                if l.bit(j) { &mut one } else { &mut zero }.push(p.ln());
            }
            let v = log_sum_exp(&one) - log_sum_exp(&zero);
            if v.is_nan() {
                0.0
            } else {
                v.clamp(-LLR_CLAMP, LLR_CLAMP)
            }
        })
        .collect()
}

/// Wilson score interval for `errors` successes out of `n` at `z` sigmas.
pub fn wilson_interval(errors: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// Summed in input order, so equal inputs give bit-identical output.
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len() as f64;
        if x.is_empty() {
            return MeanSe { mean: 0.0, se: 0.0 };
        }
        let mean = x.iter().sum::<f64>() / n;
        let var = if x.len() > 1 {
            x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MeanSe { mean, se: (var / n).sqrt() }
    }
}

/// Trial count, master seed, worker threads and the grid point whose
/// blocks are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonteCarlo {
    pub n_trials: usize,
    pub seed: u64,
    pub threads: usize,
    pub point: u64,
}

impl MonteCarlo {
    pub fn new(n_trials: usize, seed: u64) -> Self {
        MonteCarlo {
            n_trials,
            seed,
            threads: 1,
            point: 0,
        }
    }

    pub fn with_threads(self, threads: usize) -> Self {
        MonteCarlo { threads, ..self }
    }

    pub fn at_point(self, point: u64) -> Self {
        MonteCarlo { point, ..self }
    }

    pub fn trial_rng(&self, trial: usize) -> ChaCha8Rng {
        let key = self.seed ^ self.point.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(trial as u64);
        rng
    }

    /// Uniform symbol indices followed by the channel and noise draw.
    pub fn draw(&self, problem: &Problem, trial: usize) -> Result<ChannelBlock> {
        let mut rng = self.trial_rng(trial);
        let truth: Vec<usize> = problem.sizes().iter().map(|&m| rng.random_range(0..m)).collect();
        sample_block(problem.model(), problem.constellations(), &truth, &mut rng)
    }

    /// Runs `f` on every trial index and returns the results in trial order.
    pub fn run<T: Send>(&self, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        if self.threads <= 1 {
            return (0..self.n_trials).map(f).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
        pool.install(|| (0..self.n_trials).into_par_iter().map(f).collect())
    }
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Average total variation to the exact marginals after every iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct TvTrace {
    pub detector: String,
    /// `delta[t]` is `Δ_{t+1}`.
    pub delta: Vec<MeanSe>,
    pub min_eig_ratio: Option<f64>,
}

pub fn tv_experiment(problem: &Problem, detectors: &[DetectorSpec], mc: &MonteCarlo) -> Result<Vec<TvTrace>> {
    problem.check_joint_cap(DEFAULT_JOINT_BITS_CAP)?;
    let k = problem.k() as f64;
    // per trial: per detector (Δ_t values, min eig ratio)
    let per_trial = mc.run(|trial| {
        let block = mc.draw(problem, trial)?;
        let exact = JointTable::new(problem, &block.y_mat, DEFAULT_JOINT_BITS_CAP)?.marginals();
        detectors
            .iter()
            .map(|spec| {
                let det = detect(spec, problem, &block)?;
                let deltas = (1..=spec.max_iterations())
                    .map(|t| {
                        det.posterior
                            .at_iteration(t)
                            .iter()
                            .zip(&exact.pmfs)
                            .map(|(p, q)| total_variation(p, q))
                            .sum::<f64>()
                            / k
                    })
                    .collect::<Vec<f64>>();
                Ok((deltas, det.min_eig_ratio))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(detectors
        .iter()
        .enumerate()
        .map(|(d, spec)| {
            let delta = (0..spec.max_iterations())
                .map(|t| MeanSe::from_samples(&per_trial.iter().map(|r| r[d].0[t]).collect::<Vec<_>>()))
                .collect();
            let min_eig_ratio = per_trial.iter().fold(None, |acc, r| min_opt(acc, r[d].1));
            TvTrace {
                detector: spec.kind_name().to_string(),
                delta,
                min_eig_ratio,
            }
        })
        .collect())
}

/// One (SNR, detector) cell of an SER table.
#[derive(Clone, Debug, PartialEq)]
pub struct SerRow {
    pub snr_db: f64,
    pub detector: String,
    pub errors: usize,
    /// Number of (user, trial) pairs.
    pub total: usize,
    pub ser: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_trials: usize,
    pub min_eig_ratio: Option<f64>,
}

/// Symbol error rate of each detector at each SNR. Blocks at SNR index `i`
/// come from grid point `i`, shared by all detectors.
pub fn ser_experiment(problem: &Problem, detectors: &[DetectorSpec], snr_db: &[f64], mc: &MonteCarlo) -> Result<Vec<SerRow>> {
    if detectors.iter().any(|d| d.needs_joint_enumeration()) {
        problem.check_joint_cap(DEFAULT_JOINT_BITS_CAP)?;
    }
    let k = problem.k();
    let mut rows = Vec::with_capacity(snr_db.len() * detectors.len());
    for (i, &snr) in snr_db.iter().enumerate() {
        let cfg = problem.model().config().clone().with_snr_db(snr);
        let p = problem.with_sigma2(cfg.sigma2);
        let mc = mc.at_point(i as u64);
        let per_trial = mc.run(|trial| {
            let block = mc.draw(&p, trial)?;
            detectors
                .iter()
                .map(|spec| {
                    let det = detect(spec, &p, &block)?;
                    let errs = det
                        .posterior
                        .pmfs
                        .iter()
                        .zip(&block.true_indices)
                        .filter(|(pmf, &t)| map_hard_decision(pmf) != t)
                        .count();
                    Ok((errs, det.min_eig_ratio))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        for (d, spec) in detectors.iter().enumerate() {
            let errors: usize = per_trial.iter().map(|r| r[d].0).sum();
            let total = mc.n_trials * k;
            let ser = if total == 0 { 0.0 } else { errors as f64 / total as f64 };
            let (ci_lo, ci_hi) = wilson_interval(errors, total, 1.96);
            rows.push(SerRow {
                snr_db: snr,
                detector: spec.kind_name().to_string(),
                errors,
                total,
                ser,
                se: (ser * (1.0 - ser) / total.max(1) as f64).sqrt(),
                ci_lo,
                ci_hi,
                n_trials: mc.n_trials,
                min_eig_ratio: per_trial.iter().fold(None, |acc, r| min_opt(acc, r[d].1)),
            });
        }
    }
    Ok(rows)
}

/// `{0.1, 0.2, …, 3.0}`.
pub fn default_s_grid() -> Vec<f64> {
    (1..=30).map(|i| i as f64 / 10.0).collect()
}

/// Decoding metric used in the GMI.
#[derive(Clone, Debug, PartialEq)]
pub enum GmiMetric {
    /// Product of the detector's per-user PMFs.
    Factorized(DetectorSpec),
    /// The exact joint posterior, without factorization.
    ExactJoint,
}

impl GmiMetric {
    pub fn name(&self) -> &'static str {
        match self {
            GmiMetric::Factorized(d) => d.kind_name(),
            GmiMetric::ExactJoint => "exact-joint",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmiResult {
    pub gmi_bits_per_use: f64,
    pub s_star: f64,
    /// `(s, GMI(s))` for every grid value.
    pub per_s_curve: Vec<(f64, f64)>,
    /// Standard error at `s_star`.
    pub mc_std_error: f64,
    pub per_s_se: Vec<f64>,
}

/// `log2 Σ_i exp(s (l_i − l_truth))`, exact when the truth attains the max.
fn log2_ratio(logs: &[f64], truth: usize, s: f64) -> f64 {
    let d: Vec<f64> = logs.iter().map(|l| s * (l - logs[truth])).collect();
    let m = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m <= 0.0 {
        d.iter().map(|v| v.exp()).sum::<f64>().log2()
    } else {
        m / std::f64::consts::LN_2 + d.iter().map(|v| (v - m).exp()).sum::<f64>().log2()
    }
}

fn validate_s_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() || s_grid.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::Validation("s grid must be nonempty with every s >= 0".into()));
    }
    Ok(())
}

/// Monte-Carlo GMI with the metric evaluated on every grid value of `s`
/// from the same draws.
pub fn gmi_estimate(problem: &Problem, metric: &GmiMetric, s_grid: &[f64], mc: &MonteCarlo) -> Result<GmiResult> {
    validate_s_grid(s_grid)?;
    if matches!(metric, GmiMetric::ExactJoint) || matches!(metric, GmiMetric::Factorized(d) if d.needs_joint_enumeration()) {
        problem.check_joint_cap(DEFAULT_JOINT_BITS_CAP)?;
    }
    let t = problem.t() as f64;
    let bits: f64 = problem.total_bits() as f64;
    let per_trial = mc.run(|trial| {
        let block = mc.draw(problem, trial)?;
        let values = match metric {
            GmiMetric::ExactJoint => {
                let table = JointTable::new(problem, &block.y_mat, DEFAULT_JOINT_BITS_CAP)?;
                let truth = table.flat_index(&block.true_indices);
                s_grid
                    .iter()
                    .map(|&s| (bits - log2_ratio(table.log_likelihoods(), truth, s)) / t)
                    .collect::<Vec<f64>>()
            }
            GmiMetric::Factorized(spec) => {
                let det = detect(spec, problem, &block)?;
                let logs: Vec<Vec<f64>> = det
                    .posterior
                    .pmfs
                    .iter()
                    .map(|p| p.iter().map(|v| v.max(GMI_PMF_FLOOR).ln()).collect())
                    .collect();
                s_grid
                    .iter()
                    .map(|&s| {
                        let mut v = 0.0;
                        for (k, l) in logs.iter().enumerate() {
                            v += (l.len() as f64).log2() - log2_ratio(l, block.true_indices[k], s);
                        }
                        v / t
                    })
                    .collect()
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("GMI bracket in trial {trial}")));
        }
        Ok(values)
    })?;
    let stats: Vec<MeanSe> = (0..s_grid.len())
        .map(|j| MeanSe::from_samples(&per_trial.iter().map(|v| v[j]).collect::<Vec<_>>()))
        .collect();
    let mut best = 0;
    for j in 1..stats.len() {
        if stats[j].mean > stats[best].mean {
            best = j;
        }
    }
    Ok(GmiResult {
        gmi_bits_per_use: stats[best].mean,
        s_star: s_grid[best],
        per_s_curve: s_grid.iter().zip(&stats).map(|(&s, m)| (s, m.mean)).collect(),
        mc_std_error: stats[best].se,
        per_s_se: stats.iter().map(|m| m.se).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub rate_bits_per_use: f64,
    pub mc_std_error: f64,
}

/// Rate with the optimal decoding metric,
/// `(1/T)(Σ B_k − E[log2(Σ_joint p(Y|S') / p(Y|S))])`.
pub fn rate_optimal_estimate(problem: &Problem, mc: &MonteCarlo) -> Result<RateEstimate> {
    problem.check_joint_cap(DEFAULT_JOINT_BITS_CAP)?;
    let t = problem.t() as f64;
    let bits = problem.total_bits() as f64;
    let per_trial = mc.run(|trial| {
        let block = mc.draw(problem, trial)?;
        let table = JointTable::new(problem, &block.y_mat, DEFAULT_JOINT_BITS_CAP)?;
        let truth = table.flat_index(&block.true_indices);
        Ok((bits - log2_ratio(table.log_likelihoods(), truth, 1.0)) / t)
    })?;
    let m = MeanSe::from_samples(&per_trial);
    Ok(RateEstimate {
        rate_bits_per_use: m.mean,
        mc_std_error: m.se,
    })
}
