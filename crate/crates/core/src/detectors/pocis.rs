//! Projection onto the orthogonal complement of the interference subspace,
//! iterated with single-user ML detection.
//!
//! This follows a prose description only. Our reading:
//! 1. Row-space step (done once, it does not depend on estimates): for user
//!    k, project `Y` on the left onto the complement of `span{U_l : l ≠ k}`
//!    and run single-user ML with the projected symbols.
//! 2. Each iteration, for each user in turn: fit all channels jointly by
//!    least squares from the current hard symbols (`Ĥᵀ = Ŝ⁺ Y`), project `Y`
//!    on the right onto the complement of the other users' fitted channel
//!    directions, and re-detect user k by single-user ML with the projected
//!    correlation `Bᵀ Ξ_k B̄`.

use super::likelihood::SingleUserLikelihood;
use super::{one_hot, PosteriorEstimate, Problem};
use crate::constellation::ConstellationKind;
use crate::error::{Error, Result};
use crate::linalg::{hermitize, CMat, C64};

const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis (as columns) of the orthogonal complement of the
/// column span of `a` in `C^dim`, together with the rank of `a`.
pub(crate) fn complement_basis(a: &CMat, dim: usize) -> (CMat, usize) {
    if a.ncols() == 0 {
        return (CMat::identity(dim, dim), 0);
    }
    let svd = a.clone().svd(true, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_TOL * smax.max(f64::MIN_POSITIVE))
        .collect();
    let rank = keep.len();
    let mut proj = CMat::identity(dim, dim);
    for &i in &keep {
        let c = u.column(i);
        proj -= c * c.adjoint();
    }
    let eig = hermitize(&proj).into_inner().symmetric_eigen();
    let cols: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let basis = CMat::from_fn(dim, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])]);
    (basis, rank)
}

fn best_symbol(lik: &SingleUserLikelihood, symbols: impl Iterator<Item = crate::linalg::CVec>) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, s) in symbols.enumerate() {
        let v = lik.log_likelihood(&s);
        if v > best.0 {
            best = (v, i);
        }
    }
    best.1
}

pub fn pocis_detect(problem: &Problem, y_mat: &CMat, iters: usize) -> Result<(PosteriorEstimate, Vec<usize>)> {
    let family = problem.family().ok_or_else(|| Error::KindMismatch {
        expected: "grassmannian-precoded".into(),
        found: problem.constellations()[0].kind().to_string(),
    })?;
    if let Some(c) = problem
        .constellations()
        .iter()
        .find(|c| !matches!(c.kind(), ConstellationKind::GrassmannianPrecoded { .. }))
    {
        return Err(Error::KindMismatch {
            expected: "grassmannian-precoded".into(),
            found: c.kind().to_string(),
        });
    }
    let (t, k, n, s2) = (problem.t(), problem.k(), problem.n(), problem.sigma2());
    let cons = problem.constellations();
    let sizes = problem.sizes();

    let mut decisions = Vec::with_capacity(k);
    for user in 0..k {
        let others: Vec<&CMat> = (0..k).filter(|&l| l != user).map(|l| family.precoder(l)).collect();
        let stacked = if others.is_empty() {
            CMat::zeros(t, 0)
        } else {
            let cols: usize = others.iter().map(|u| u.ncols()).sum();
            let mut m = CMat::zeros(t, cols);
            let mut at = 0;
            for u in others {
                m.view_mut((0, at), (t, u.ncols())).copy_from(u);
                at += u.ncols();
            }
            m
        };
        let (q, dim) = complement_basis(&stacked, t);
        if dim >= t || q.ncols() == 0 {
            return Err(Error::RankDeficiency { dim, t }.at(user, 0));
        }
        let qh = q.adjoint();
        let lik = SingleUserLikelihood::new(&(&qh * y_mat), problem.model().correlation(user).as_matrix(), s2);
        decisions.push(best_symbol(&lik, cons[user].symbols().iter().map(|s| &qh * s)));
    }

    let mut trace = Vec::with_capacity(iters);
    for _ in 0..iters {
        for user in 0..k {
            let b = if k == 1 {
                CMat::identity(n, n)
            } else {
                let s_hat = CMat::from_fn(t, k, |r, c| cons[c].symbol(decisions[c])[r]);
                let h_t = s_hat.pseudo_inverse(1e-12).map_err(|_| Error::EigenFailure)? * y_mat;
                let others: Vec<usize> = (0..k).filter(|&l| l != user).collect();
                // user l contributes s_l h_lᵀ, removed by B with h_lᵀ B = 0
                let g = CMat::from_fn(n, others.len(), |r, c| h_t[(others[c], r)].conj());
                let (b, _) = complement_basis(&g, n);
                if b.ncols() == 0 {
                    return Err(Error::RankDeficiency { dim: others.len(), t: n }.at(user, 0));
                }
                b
            };
            let xi = b.transpose() * problem.model().correlation(user).as_matrix() * b.map(|z: C64| z.conj());
            let lik = SingleUserLikelihood::new(&(y_mat * &b), &xi, s2);
            decisions[user] = best_symbol(&lik, cons[user].symbols().iter().cloned());
        }
        trace.push(sizes.iter().zip(&decisions).map(|(&m, &i)| one_hot(m, i)).collect());
    }
    let pmfs = sizes.iter().zip(&decisions).map(|(&m, &i)| one_hot(m, i)).collect();
    Ok((PosteriorEstimate::with_trace(pmfs, trace), decisions))
}
