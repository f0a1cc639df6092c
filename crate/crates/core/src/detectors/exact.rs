//! Exhaustive enumeration of the joint constellation.

use super::likelihood::BlockLikelihood;
use super::{PosteriorEstimate, Problem, DEFAULT_JOINT_BITS_CAP};
use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, normalize_log_weights, CMat};

/// Log-likelihoods of every joint symbol tuple, user 0 most significant.
#[derive(Clone, Debug)]
pub struct JointTable {
    sizes: Vec<usize>,
    lls: Vec<f64>,
}

impl JointTable {
    pub fn new(problem: &Problem, y_mat: &CMat, cap: u32) -> Result<Self> {
        problem.check_joint_cap(cap)?;
        let lik = BlockLikelihood::new(problem, y_mat);
        let sizes = problem.sizes();
        let total: usize = sizes.iter().product();
        let mut lls = Vec::with_capacity(total);
        let mut scratch = lik.scratch();
        let mut joint = vec![0usize; sizes.len()];
        for _ in 0..total {
            let ll = lik.log_likelihood(&joint, &mut scratch)?;
            if !ll.is_finite() {
                return Err(Error::NonFinite("joint log-likelihood".into()));
            }
            lls.push(ll);
            // odometer increment, last user fastest
            for u in (0..joint.len()).rev() {
                joint[u] += 1;
                if joint[u] < sizes[u] {
                    break;
                }
                joint[u] = 0;
            }
        }
        Ok(JointTable { sizes, lls })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn log_likelihoods(&self) -> &[f64] {
        &self.lls
    }

    pub fn flat_index(&self, joint: &[usize]) -> usize {
        joint.iter().zip(&self.sizes).fold(0, |acc, (&i, &m)| acc * m + i)
    }

    pub fn joint_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        for u in (0..self.sizes.len()).rev() {
            out[u] = flat % self.sizes[u];
            flat /= self.sizes[u];
        }
        out
    }

    pub fn log_likelihood(&self, joint: &[usize]) -> f64 {
        self.lls[self.flat_index(joint)]
    }

    /// `log Σ_joint p(y | joint)`.
    pub fn log_evidence(&self) -> f64 {
        log_sum_exp(&self.lls)
    }

    /// Per-user marginal posteriors under uniform priors.
    pub fn marginals(&self) -> PosteriorEstimate {
        let mut per_user: Vec<Vec<Vec<f64>>> = self.sizes.iter().map(|&m| vec![Vec::new(); m]).collect();
        for (flat, &ll) in self.lls.iter().enumerate() {
            for (u, i) in self.joint_index(flat).into_iter().enumerate() {
                per_user[u][i].push(ll);
            }
        }
        let pmfs = per_user
            .iter()
            .map(|bins| normalize_log_weights(&bins.iter().map(|b| log_sum_exp(b)).collect::<Vec<_>>()))
            .collect();
        PosteriorEstimate::new(pmfs)
    }

    /// Joint argmax; ties go to the lexicographically smallest tuple.
    pub fn argmax(&self) -> Vec<usize> {
        let mut best = 0;
        for (i, &v) in self.lls.iter().enumerate() {
            if v > self.lls[best] {
                best = i;
            }
        }
        self.joint_index(best)
    }
}

pub fn exact_posterior(problem: &Problem, y_mat: &CMat) -> Result<PosteriorEstimate> {
    Ok(JointTable::new(problem, y_mat, DEFAULT_JOINT_BITS_CAP)?.marginals())
}

pub fn ml_detect(problem: &Problem, y_mat: &CMat) -> Result<Vec<usize>> {
    Ok(JointTable::new(problem, y_mat, DEFAULT_JOINT_BITS_CAP)?.argmax())
}

/// Posterior of user `k` with every other user fixed at `truth`.
pub fn genie_posterior(lik: &BlockLikelihood<'_>, k: usize, truth: &[usize]) -> Result<Vec<f64>> {
    let m = lik.problem().constellations()[k].len();
    let mut joint = truth.to_vec();
    let mut scratch = lik.scratch();
    let lls = (0..m)
        .map(|i| {
            joint[k] = i;
            lik.log_likelihood(&joint, &mut scratch)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(normalize_log_weights(&lls))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_block, ChannelModel, SystemConfig};
    use crate::constellation::{optimize_grassmannian, GrassmannianParams, PrecodedFamily};
    use crate::detectors::joint_log_likelihood;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(t: usize, k: usize, n: usize, s2: f64, m: usize) -> (ChannelModel, Problem) {
        let params = GrassmannianParams {
            epsilon: 0.05,
            iters: 200,
            restarts: 2,
        };
        let d = optimize_grassmannian(t - k + 1, m, &params, &mut ChaCha8Rng::seed_from_u64(11));
        let fam = PrecodedFamily::with_default_precoders(d.base, t, k).unwrap();
        let model = ChannelModel::new(SystemConfig::uncorrelated(t, k, n, s2)).unwrap();
        let problem = Problem::new(model.clone(), fam.constellations().unwrap(), Some(fam)).unwrap();
        (model, problem)
    }

    #[test]
    fn marginalization_order_does_not_matter() {
        let (model, problem) = setup(3, 2, 2, 0.05, 4);
        let block = sample_block(&model, problem.constellations(), &[1, 3], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let table = JointTable::new(&problem, &block.y_mat, 20).unwrap();
        let ev = table.log_evidence();
        let joint: Vec<Vec<f64>> = (0..4)
            .map(|a| (0..4).map(|b| (table.log_likelihood(&[a, b]) - ev).exp()).collect())
            .collect();
        let rows: f64 = (0..4).map(|a| (0..4).map(|b| joint[a][b]).sum::<f64>()).sum();
        let cols: f64 = (0..4).map(|b| (0..4).map(|a| joint[a][b]).sum::<f64>()).sum();
        assert!((rows - cols).abs() <= 1e-12);
        let post = table.marginals();
        for a in 0..4 {
            let direct: f64 = (0..4).map(|b| joint[a][b]).sum();
            assert!((post.pmfs[0][a] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn single_user_posterior_is_normalized_likelihood() {
        let (model, problem) = setup(4, 1, 2, 0.2, 8);
        let block = sample_block(&model, problem.constellations(), &[5], &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let post = exact_posterior(&problem, &block.y_mat).unwrap();
        let lls: Vec<f64> = (0..8)
            .map(|i| joint_log_likelihood(&block.y, &[i], &model, problem.constellations()).unwrap())
            .collect();
        let want = normalize_log_weights(&lls);
        for i in 0..8 {
            assert!((post.pmfs[0][i] - want[i]).abs() < 1e-10);
        }
        let lik = BlockLikelihood::new(&problem, &block.y_mat);
        let genie = genie_posterior(&lik, 0, &[5]).unwrap();
        for i in 0..8 {
            assert!((genie[i] - want[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn uninformative_observation_gives_uniform_posterior() {
        let (model, problem) = setup(3, 2, 2, 1e9, 4);
        let block = sample_block(&model, problem.constellations(), &[0, 0], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let post = exact_posterior(&problem, &block.y_mat).unwrap();
        for p in &post.pmfs {
            let tv: f64 = p.iter().map(|v| (v - 0.25).abs()).sum::<f64>() / 2.0;
            assert!(tv < 1e-6);
        }
    }

    #[test]
    fn genie_is_conditional_slice() {
        let (model, problem) = setup(3, 2, 2, 0.1, 4);
        let block = sample_block(&model, problem.constellations(), &[2, 1], &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let table = JointTable::new(&problem, &block.y_mat, 20).unwrap();
        let lik = BlockLikelihood::new(&problem, &block.y_mat);
        let genie = genie_posterior(&lik, 0, &[2, 1]).unwrap();
        let slice = normalize_log_weights(&(0..4).map(|a| table.log_likelihood(&[a, 1])).collect::<Vec<_>>());
        for a in 0..4 {
            assert!((genie[a] - slice[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_recovery() {
        let (model, problem) = setup(4, 1, 2, 1e-9, 8);
        for truth in 0..8 {
            let block = sample_block(&model, problem.constellations(), &[truth], &mut ChaCha8Rng::seed_from_u64(truth as u64)).unwrap();
            assert_eq!(ml_detect(&problem, &block.y_mat).unwrap(), vec![truth]);
            let lik = BlockLikelihood::new(&problem, &block.y_mat);
            assert!(genie_posterior(&lik, 0, &[truth]).unwrap()[truth] >= 1.0 - 1e-6);
        }
    }

    #[test]
    fn ml_is_table_argmax() {
        let (model, problem) = setup(3, 2, 2, 0.3, 4);
        for seed in 0..10 {
            let block = sample_block(&model, problem.constellations(), &[0, 2], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let ml = ml_detect(&problem, &block.y_mat).unwrap();
            let mut best = (f64::NEG_INFINITY, vec![]);
            for a in 0..4 {
                for b in 0..4 {
                    let v = joint_log_likelihood(&block.y, &[a, b], &model, problem.constellations()).unwrap();
                    if v > best.0 {
                        best = (v, vec![a, b]);
                    }
                }
            }
            assert_eq!(ml, best.1);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let (_, problem) = setup(3, 2, 2, 0.3, 4);
        let err = JointTable::new(&problem, &CMat::zeros(3, 2), 3).unwrap_err();
        assert!(matches!(err, Error::SizeOverflow { bits: 4, cap: 3 }));
    }
}
