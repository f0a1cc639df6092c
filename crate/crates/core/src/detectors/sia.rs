//! MMSE successive interference approximation: each user sees the others
//! as Gaussian interference with covariance `R_l ⊗ Ξ_l`, where `R_l` is the
//! current posterior second moment of `s_l`.

use super::ep::capacitance_moments;
use super::{PosteriorEstimate, Problem};
use crate::error::{Error, Result};
use crate::linalg::{kron, normalize_log_weights, unvec_rows, CMat, CVec, PdFactor, C64};
use crate::metrics::total_variation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiaPath {
    /// `T x T` path when every `Ξ_k` is a multiple of the identity.
    Auto,
    General,
    Fast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiaConfig {
    pub eta: f64,
    pub t_max: usize,
    pub conv_tol: f64,
    pub path: SiaPath,
}

impl Default for SiaConfig {
    fn default() -> Self {
        SiaConfig {
            eta: 0.9,
            t_max: 6,
            conv_tol: 1e-4,
            path: SiaPath::Auto,
        }
    }
}

impl SiaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Validation(format!("0 <= eta <= 1 violated ({})", self.eta)));
        }
        if self.t_max == 0 {
            return Err(Error::Validation("t_max >= 1 violated".into()));
        }
        Ok(())
    }
}

fn weighted_outer(pmf: &[f64], symbols: &[CVec]) -> CMat {
    let t = symbols[0].len();
    let mut r = CMat::zeros(t, t);
    for (p, s) in pmf.iter().zip(symbols) {
        if *p != 0.0 {
            r += s * s.adjoint() * C64::from(*p);
        }
    }
    r
}

/// Runs MMSE-SIA; returns the posterior with its per-sweep trace and the
/// number of sweeps performed.
pub fn mmse_sia_detect(problem: &Problem, y: &CVec, cfg: &SiaConfig) -> Result<(PosteriorEstimate, usize)> {
    let fast = match cfg.path {
        SiaPath::Auto => problem.scalar_gains().is_some(),
        SiaPath::Fast => {
            if problem.scalar_gains().is_none() {
                return Err(Error::Validation("fast MMSE-SIA path needs uncorrelated fading".into()));
            }
            true
        }
        SiaPath::General => false,
    };
    let (t, k, n, s2) = (problem.t(), problem.k(), problem.n(), problem.sigma2());
    let cons = problem.constellations();
    let mut pmfs: Vec<Vec<f64>> = cons.iter().map(|c| vec![1.0 / c.len() as f64; c.len()]).collect();
    let mut r: Vec<CMat> = cons.iter().map(|c| c.mean_outer()).collect();
    let e = C64::from(cfg.eta);
    let rem = C64::from(1.0 - cfg.eta);

    // interference-plus-noise covariance of user k under the current R's:
    // T x T on the fast path, NT x NT otherwise
    let target = |r: &[CMat], user: usize| -> CMat {
        if fast {
            let xi = problem.scalar_gains().unwrap();
            let mut q = CMat::identity(t, t) * C64::from(s2);
            for l in (0..k).filter(|&l| l != user) {
                q += &r[l] * C64::from(xi[l]);
            }
            q
        } else {
            let mut c = CMat::identity(n * t, n * t) * C64::from(s2);
            for l in (0..k).filter(|&l| l != user) {
                c += kron(&r[l], problem.model().correlation(l).as_matrix());
            }
            c
        }
    };
    let mut cov: Vec<CMat> = (0..k).map(|u| target(&r, u)).collect();
    let y_mat = unvec_rows(y, t, n);

    let mut trace = Vec::with_capacity(cfg.t_max);
    for it in 1..=cfg.t_max {
        let before = pmfs.clone();
        for user in 0..k {
            cov[user] = target(&r, user) * e + &cov[user] * rem;
            let logw = if fast {
                fast_weights(problem, user, &cov[user], &y_mat)
            } else {
                capacitance_moments(problem, user, &cov[user], y, false).map(|m| m.logw)
            }
            .map_err(|err| err.at(user, it))?;
            if logw.iter().any(|w| !w.is_finite()) {
                return Err(Error::NonFinite("symbol weights".into()).at(user, it));
            }
            pmfs[user] = normalize_log_weights(&logw);
            r[user] = weighted_outer(&pmfs[user], cons[user].symbols()) * e + &r[user] * rem;
        }
        let change = before
            .iter()
            .zip(&pmfs)
            .map(|(a, b)| total_variation(a, b))
            .fold(0.0, f64::max);
        trace.push(pmfs.clone());
        if change < cfg.conv_tol {
            break;
        }
    }
    let iterations = trace.len();
    Ok((PosteriorEstimate::with_trace(pmfs, trace), iterations))
}

/// `ξ‖Yᴴ Q⁻¹ s‖² / (1 + ξγ) − N log(1 + ξγ)`, `γ = sᴴ Q⁻¹ s`.
fn fast_weights(problem: &Problem, user: usize, q: &CMat, y_mat: &CMat) -> Result<Vec<f64>> {
    let xi = problem.scalar_gains().unwrap()[user];
    let n = problem.n() as f64;
    let f = PdFactor::new(q)?;
    let yh = y_mat.adjoint();
    Ok(problem.constellations()[user]
        .symbols()
        .iter()
        .map(|s| {
            let w = f.solve_vec(s);
            let gamma = s.dotc(&w).re;
            let d = 1.0 + xi * gamma;
            xi * (&yh * w).norm_squared() / d - n * d.ln()
        })
        .collect())
}
