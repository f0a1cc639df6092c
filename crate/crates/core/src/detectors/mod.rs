//! Multi-user detectors. Every detector maps one received block to
//! per-user PMFs over constellation indices.

mod ep;
mod exact;
mod likelihood;
mod pilot;
mod pocis;
mod sia;

pub use ep::{ep_detect, ep_init, ep_update_user, epak_update_user, EpConfig, EpState, UserMessages};
pub use exact::{exact_posterior, genie_posterior, ml_detect, JointTable};
pub use likelihood::{joint_log_likelihood, single_user_log_likelihood, BlockLikelihood};
pub use pilot::pilot_mmse_detect;
pub use pocis::pocis_detect;
pub use sia::{mmse_sia_detect, SiaConfig, SiaPath};

use crate::channel::{ChannelBlock, ChannelModel};
use crate::constellation::{Constellation, PrecodedFamily};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// Largest `Σ_k B_k` for which joint enumeration is attempted.
pub const DEFAULT_JOINT_BITS_CAP: u32 = 20;

/// Per-user PMFs, optionally with the PMFs after every iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorEstimate {
    pub pmfs: Vec<Vec<f64>>,
    /// `trace[t][k]` is user k's PMF after iteration t + 1.
    pub trace: Vec<Vec<Vec<f64>>>,
}

impl PosteriorEstimate {
    pub fn new(pmfs: Vec<Vec<f64>>) -> Self {
        PosteriorEstimate { pmfs, trace: Vec::new() }
    }

    pub fn with_trace(pmfs: Vec<Vec<f64>>, trace: Vec<Vec<Vec<f64>>>) -> Self {
        PosteriorEstimate { pmfs, trace }
    }

    pub fn uniform(sizes: &[usize]) -> Self {
        Self::new(sizes.iter().map(|&m| vec![1.0 / m as f64; m]).collect())
    }

    pub fn one_hot(sizes: &[usize], indices: &[usize]) -> Self {
        Self::new(sizes.iter().zip(indices).map(|(&m, &i)| one_hot(m, i)).collect())
    }

    pub fn hard_decisions(&self) -> Vec<usize> {
        self.pmfs.iter().map(|p| map_hard_decision(p)).collect()
    }

    /// PMFs after iteration `t` (1-based); iterations past the end of the
    /// trace repeat the final PMFs.
    pub fn at_iteration(&self, t: usize) -> &[Vec<f64>] {
        if self.trace.is_empty() || t == 0 {
            return &self.pmfs;
        }
        &self.trace[(t - 1).min(self.trace.len() - 1)]
    }
}

pub(crate) fn one_hot(m: usize, i: usize) -> Vec<f64> {
    let mut p = vec![0.0; m];
    p[i] = 1.0;
    p
}

/// Argmax with ties going to the smallest index.
pub fn map_hard_decision(pmf: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in pmf.iter().enumerate() {
        if p > pmf[best] {
            best = i;
        }
    }
    best
}

/// Output of one detector on one block.
#[derive(Clone, Debug)]
pub struct Detection {
    pub posterior: PosteriorEstimate,
    pub indices: Vec<usize>,
    /// Smallest `λ_min / ‖C_k1‖` over all stabilized `C_k1` (EP family only).
    pub min_eig_ratio: Option<f64>,
    pub iterations: usize,
}

impl Detection {
    fn from_posterior(posterior: PosteriorEstimate, iterations: usize) -> Self {
        let indices = posterior.hard_decisions();
        Detection {
            posterior,
            indices,
            min_eig_ratio: None,
            iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DetectorSpec {
    /// Exact marginal posteriors by joint enumeration.
    Exact,
    /// Joint ML; PMFs are one-hot at the ML decision.
    Ml,
    /// Exact single-user posterior given the true interfering symbols.
    Genie,
    Ep(EpConfig),
    /// EP switching to the Kronecker approximation after `t0` iterations.
    Epak(EpConfig),
    MmseSia(SiaConfig),
    Pocis { iters: usize },
    PilotMmse,
    /// Uniform PMFs regardless of the observation.
    Uniform,
}

impl DetectorSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            DetectorSpec::Exact => "exact",
            DetectorSpec::Ml => "ml",
            DetectorSpec::Genie => "genie",
            DetectorSpec::Ep(_) => "ep",
            DetectorSpec::Epak(_) => "epak",
            DetectorSpec::MmseSia(_) => "mmse-sia",
            DetectorSpec::Pocis { .. } => "pocis",
            DetectorSpec::PilotMmse => "pilot-mmse",
            DetectorSpec::Uniform => "uniform",
        }
    }

    /// Whether the detector enumerates the joint constellation.
    pub fn needs_joint_enumeration(&self) -> bool {
        matches!(self, DetectorSpec::Exact | DetectorSpec::Ml)
    }

    /// Number of iterations the detector reports in its trace.
    pub fn max_iterations(&self) -> usize {
        match self {
            DetectorSpec::Ep(c) | DetectorSpec::Epak(c) => c.t_max,
            DetectorSpec::MmseSia(c) => c.t_max,
            DetectorSpec::Pocis { iters } => *iters,
            _ => 1,
        }
    }
}

/// A channel model together with the users' constellations and whatever
/// per-configuration quantities the detectors reuse across blocks.
#[derive(Clone, Debug)]
pub struct Problem {
    model: ChannelModel,
    constellations: Vec<Constellation>,
    family: Option<PrecodedFamily>,
    /// `L_jᴴ L_k` for all user pairs.
    sqrt_grams: Vec<Vec<CMat>>,
    /// `s_jᴴ s_k` for all user pairs, indexed `[j][k][i_j * M_k + i_k]`.
    inner: Vec<Vec<Vec<C64>>>,
    scalar_gains: Option<Vec<f64>>,
}

impl Problem {
    pub fn new(model: ChannelModel, constellations: Vec<Constellation>, family: Option<PrecodedFamily>) -> Result<Self> {
        let cfg = model.config();
        if constellations.len() != cfg.k {
            return Err(Error::Dimension(format!(
                "{} constellations for {} users",
                constellations.len(),
                cfg.k
            )));
        }
        if let Some(c) = constellations.iter().find(|c| c.dim() != cfg.t) {
            return Err(Error::Dimension(format!("symbol length {} != T = {}", c.dim(), cfg.t)));
        }
        let k = cfg.k;
        let sqrt_grams = (0..k)
            .map(|j| {
                (0..k)
                    .map(|l| model.sqrt_correlation(j).adjoint() * model.sqrt_correlation(l))
                    .collect()
            })
            .collect();
        let inner = (0..k)
            .map(|j| {
                (0..k)
                    .map(|l| {
                        let (a, b) = (&constellations[j], &constellations[l]);
                        let mut v = Vec::with_capacity(a.len() * b.len());
                        for sa in a.symbols() {
                            for sb in b.symbols() {
                                v.push(sa.dotc(sb));
                            }
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let scalar_gains = model.scalar_gains();
        Ok(Problem {
            model,
            constellations,
            family,
            sqrt_grams,
            inner,
            scalar_gains,
        })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn constellations(&self) -> &[Constellation] {
        &self.constellations
    }

    pub fn family(&self) -> Option<&PrecodedFamily> {
        self.family.as_ref()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.constellations.iter().map(|c| c.len()).collect()
    }

    pub fn total_bits(&self) -> u32 {
        self.constellations.iter().map(|c| c.bits()).sum()
    }

    /// Fails fast when joint enumeration would exceed `cap` bits.
    pub fn check_joint_cap(&self, cap: u32) -> Result<()> {
        let bits = self.total_bits();
        if bits > cap {
            return Err(Error::SizeOverflow { bits, cap });
        }
        Ok(())
    }

    pub fn t(&self) -> usize {
        self.model.config().t
    }

    pub fn k(&self) -> usize {
        self.model.config().k
    }

    pub fn n(&self) -> usize {
        self.model.config().n
    }

    pub fn sigma2(&self) -> f64 {
        self.model.sigma2()
    }

    /// Same constellations, different noise level.
    pub fn with_sigma2(&self, sigma2: f64) -> Problem {
        let mut p = self.clone();
        p.model = self.model.with_sigma2(sigma2);
        p
    }

    pub(crate) fn scalar_gains(&self) -> Option<&[f64]> {
        self.scalar_gains.as_deref()
    }
}

/// Runs one detector on one block.
pub fn detect(spec: &DetectorSpec, problem: &Problem, block: &ChannelBlock) -> Result<Detection> {
    let sizes = problem.sizes();
    match spec {
        DetectorSpec::Exact => {
            let table = JointTable::new(problem, &block.y_mat, DEFAULT_JOINT_BITS_CAP)?;
            Ok(Detection::from_posterior(table.marginals(), 1))
        }
        DetectorSpec::Ml => {
            let idx = ml_detect(problem, &block.y_mat)?;
            Ok(Detection {
                posterior: PosteriorEstimate::one_hot(&sizes, &idx),
                indices: idx,
                min_eig_ratio: None,
                iterations: 1,
            })
        }
        DetectorSpec::Genie => {
            let lik = BlockLikelihood::new(problem, &block.y_mat);
            let pmfs = (0..problem.k())
                .map(|k| genie_posterior(&lik, k, &block.true_indices))
                .collect::<Result<Vec<_>>>()?;
            Ok(Detection::from_posterior(PosteriorEstimate::new(pmfs), 1))
        }
        DetectorSpec::Ep(cfg) | DetectorSpec::Epak(cfg) => {
            let cfg = if matches!(spec, DetectorSpec::Ep(_)) {
                EpConfig { t0: cfg.t_max, ..cfg.clone() }
            } else {
                cfg.clone()
            };
            let (posterior, state, iterations) = ep_detect(problem, &block.y, &cfg)?;
            let indices = posterior.hard_decisions();
            Ok(Detection {
                posterior,
                indices,
                min_eig_ratio: Some(state.min_eig_ratio),
                iterations,
            })
        }
        DetectorSpec::MmseSia(cfg) => {
            let (posterior, iterations) = mmse_sia_detect(problem, &block.y, cfg)?;
            Ok(Detection::from_posterior(posterior, iterations))
        }
        DetectorSpec::Pocis { iters } => {
            let (posterior, indices) = pocis_detect(problem, &block.y_mat, *iters)?;
            Ok(Detection {
                posterior,
                indices,
                min_eig_ratio: None,
                iterations: *iters,
            })
        }
        DetectorSpec::PilotMmse => {
            let (posterior, indices) = pilot_mmse_detect(problem, &block.y_mat)?;
            Ok(Detection {
                posterior,
                indices,
                min_eig_ratio: None,
                iterations: 1,
            })
        }
        DetectorSpec::Uniform => Ok(Detection::from_posterior(PosteriorEstimate::uniform(&sizes), 1)),
    }
}

/// `(s sᴴ) ⊗ B` accumulated with weight `w` into `target`.
pub(crate) fn kron_outer_acc(target: &mut CMat, w: f64, s: &CVec, b: &CMat) {
    let n = b.nrows();
    for t in 0..s.len() {
        for u in 0..s.len() {
            let c = s[t] * s[u].conj() * w;
            if c == C64::from(0.0) {
                continue;
            }
            let mut blk = target.view_mut((t * n, u * n), (n, n));
            blk.zip_apply(b, |x, y| *x += c * y);
        }
    }
}

/// `s ⊗ r` in the row-major vectorization.
pub(crate) fn kron_vec(s: &CVec, r: &CVec) -> CVec {
    let n = r.len();
    CVec::from_fn(s.len() * n, |i, _| s[i / n] * r[i % n])
}
