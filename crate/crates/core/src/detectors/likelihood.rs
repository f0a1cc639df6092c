//! Joint likelihood `p(y | s_1, …, s_K)` of the block-fading model.

use super::Problem;
use crate::channel::ChannelModel;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{kron, log_gauss_pdf, hermitize, CMat, CVec, C64, LN_PI};

/// Direct evaluation with the dense `NT x NT` covariance
/// `σ²I + Σ_k s_k s_kᴴ ⊗ Ξ_k`.
pub fn joint_log_likelihood(y: &CVec, joint: &[usize], model: &ChannelModel, constellations: &[Constellation]) -> Result<f64> {
    let cfg = model.config();
    if joint.len() != cfg.k || y.len() != cfg.nt() {
        return Err(Error::Dimension("joint index or observation length".into()));
    }
    let mut cov = CMat::identity(cfg.nt(), cfg.nt()) * C64::from(cfg.sigma2);
    for (k, &i) in joint.iter().enumerate() {
        let s = constellations[k].symbol(i);
        cov += kron(&(s * s.adjoint()), model.correlation(k).as_matrix());
    }
    log_gauss_pdf(y, &CVec::zeros(cfg.nt()), &hermitize(&cov))
}

/// In-place Cholesky of a small Hermitian matrix stored row-major; returns
/// the log-determinant or `None` when a pivot is not positive.
pub(crate) fn small_cholesky(a: &mut [C64], n: usize) -> Option<f64> {
    let mut logdet = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let ljj = d.sqrt();
        a[j * n + j] = C64::from(ljj);
        logdet += 2.0 * ljj.ln();
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = v / ljj;
        }
    }
    Some(logdet)
}

/// `bᴴ A⁻¹ b` given the factor from `small_cholesky`; `b` is overwritten.
pub(crate) fn small_quad(l: &[C64], n: usize, b: &mut [C64]) -> f64 {
    let mut q = 0.0;
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * n + k] * b[k];
        }
        v /= l[i * n + i].re;
        b[i] = v;
        q += v.norm_sqr();
    }
    q
}

/// Per-block quantities for fast joint likelihood evaluation through the
/// `KN x KN` capacitance matrix `σ²I + UᴴU`, `U = [s_1⊗L_1, …, s_K⊗L_K]`.
pub struct BlockLikelihood<'a> {
    problem: &'a Problem,
    /// `c[k][i] = L_kᴴ Yᵀ conj(s_{k,i})`.
    c: Vec<Vec<CVec>>,
    y_norm2: f64,
}

impl<'a> BlockLikelihood<'a> {
    pub fn new(problem: &'a Problem, y_mat: &CMat) -> Self {
        let c = problem
            .constellations()
            .iter()
            .enumerate()
            .map(|(k, cons)| {
                let lh = problem.model().sqrt_correlation(k).adjoint();
                let yt = y_mat.transpose();
                cons.symbols().iter().map(|s| &lh * (&yt * s.conjugate())).collect()
            })
            .collect();
        BlockLikelihood {
            problem,
            c,
            y_norm2: y_mat.norm_squared(),
        }
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    /// Scratch space large enough for `log_likelihood`.
    pub fn scratch(&self) -> Vec<C64> {
        let kn = self.problem.k() * self.problem.n();
        vec![C64::from(0.0); kn * kn + kn]
    }

    pub fn log_likelihood(&self, joint: &[usize], scratch: &mut [C64]) -> Result<f64> {
        let p = self.problem;
        let (t, k, n, s2) = (p.t(), p.k(), p.n(), p.sigma2());
        let sizes: Vec<usize> = p.constellations().iter().map(|c| c.len()).collect();
        let (logdet, quad) = if let Some(xi) = p.scalar_gains() {
            // G = G_K ⊗ I_N
            let (g, rest) = scratch.split_at_mut(k * k);
            for a in 0..k {
                for b in 0..=a {
                    let ip = p.inner[a][b][joint[a] * sizes[b] + joint[b]];
                    g[a * k + b] = ip * (xi[a] * xi[b]).sqrt() + if a == b { C64::from(s2) } else { C64::from(0.0) };
                }
            }
            let ld = small_cholesky(g, k).ok_or(Error::NonPositiveDefinite)?;
            let mut quad = 0.0;
            for m in 0..n {
                for a in 0..k {
                    rest[a] = self.c[a][joint[a]][m];
                }
                quad += small_quad(g, k, &mut rest[..k]);
            }
            (n as f64 * ld, quad)
        } else {
            let kn = k * n;
            let (g, rest) = scratch.split_at_mut(kn * kn);
            for a in 0..k {
                for b in 0..=a {
                    let ip = p.inner[a][b][joint[a] * sizes[b] + joint[b]];
                    let lg = &p.sqrt_grams[a][b];
                    for r in 0..n {
                        for q in 0..n {
                            let mut v = ip * lg[(r, q)];
                            if a == b && r == q {
                                v += s2;
                            }
                            g[(a * n + r) * kn + b * n + q] = v;
                        }
                    }
                }
            }
            let ld = small_cholesky(g, kn).ok_or(Error::NonPositiveDefinite)?;
            for a in 0..k {
                rest[a * n..(a + 1) * n].copy_from_slice(self.c[a][joint[a]].as_slice());
            }
            (ld, small_quad(g, kn, &mut rest[..kn]))
        };
        let nt = (n * t) as f64;
        let kn = (k * n) as f64;
        Ok(-(self.y_norm2 - quad) / s2 - (nt - kn) * s2.ln() - logdet - nt * LN_PI)
    }
}

/// Single-user likelihood with a rank-one symbol covariance, after rotating
/// the antennas onto the eigenbasis of `Ξ`.
pub struct SingleUserLikelihood {
    z: CMat,
    lambda: Vec<f64>,
    z_norm2: f64,
    sigma2: f64,
}

impl SingleUserLikelihood {
    /// `y_mat` is `T' x N'`, `xi` the `N' x N'` correlation seen after any
    /// antenna-side projection.
    pub fn new(y_mat: &CMat, xi: &CMat, sigma2: f64) -> Self {
        let eig = hermitize(xi).into_inner().symmetric_eigen();
        let z = y_mat * eig.eigenvectors.map(|v| v.conj());
        SingleUserLikelihood {
            z_norm2: z.norm_squared(),
            z,
            lambda: eig.eigenvalues.iter().map(|l| l.max(0.0)).collect(),
            sigma2,
        }
    }

    pub fn log_likelihood(&self, s: &CVec) -> f64 {
        let s2 = self.sigma2;
        let tp = self.z.nrows() as f64;
        let energy = s.norm_squared();
        let mut ll = -self.z_norm2 / s2;
        for (n, &lam) in self.lambda.iter().enumerate() {
            let g = s.dotc(&self.z.column(n));
            let d = s2 + lam * energy;
            ll += lam * g.norm_sqr() / (d * s2) - d.ln() - (tp - 1.0) * s2.ln() - tp * LN_PI;
        }
        ll
    }
}

pub fn single_user_log_likelihood(y_mat: &CMat, s: &CVec, xi: &CMat, sigma2: f64) -> f64 {
    SingleUserLikelihood::new(y_mat, xi, sigma2).log_likelihood(s)
}
