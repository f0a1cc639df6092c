//! Coherent baseline for pilot-plus-QAM signalling: MMSE channel estimates
//! from the pilot slots, then a per-slot LMMSE equalizer with the channel
//! estimation error folded into the noise.

use super::{PosteriorEstimate, Problem};
use crate::constellation::{qam_average_energy, qam_points, ConstellationKind};
use crate::error::{Error, Result};
use crate::linalg::{normalize_log_weights, CMat, CVec, PdFactor, C64};

fn qam_order(kind: &ConstellationKind) -> Option<usize> {
    match kind {
        ConstellationKind::PilotQam { qam_order, .. } => Some(*qam_order),
        _ => None,
    }
}

/// Returns soft PMFs (products of per-slot QAM posteriors under a Gaussian
/// residual) and the per-slot nearest-point decisions.
pub fn pilot_mmse_detect(problem: &Problem, y_mat: &CMat) -> Result<(PosteriorEstimate, Vec<usize>)> {
    let cons = problem.constellations();
    let orders = cons
        .iter()
        .map(|c| {
            qam_order(c.kind()).ok_or_else(|| Error::KindMismatch {
                expected: "pilot-qam".into(),
                found: c.kind().to_string(),
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    let (t, k, n, s2) = (problem.t(), problem.k(), problem.n(), problem.sigma2());
    let slots = t - k;
    let a = (k as f64 / t as f64).sqrt();
    let eye = CMat::identity(n, n);

    let mut h_hat = CMat::zeros(n, k);
    let mut err_sum = CMat::zeros(n, n);
    for user in 0..k {
        let xi = problem.model().correlation(user).as_matrix();
        let f = PdFactor::new(&(xi * C64::from(a * a) + &eye * C64::from(s2))).map_err(|e| e.at(user, 0))?;
        let r: CVec = y_mat.row(user).transpose();
        h_hat.set_column(user, &(xi * f.solve_vec(&r) * C64::from(a)));
        err_sum += xi - xi * f.solve(xi) * C64::from(a * a);
    }

    let mut pmfs = Vec::with_capacity(k);
    let mut decisions = Vec::with_capacity(k);
    for user in 0..k {
        let points = qam_points(orders[user])?;
        let p = qam_average_energy(&points);
        let b = (1.0 / (t as f64 * p)).sqrt();
        // b_l² P_l = 1/T for every user, whatever its QAM order
        let cov = (&h_hat * h_hat.adjoint() + &err_sum) * C64::from(1.0 / t as f64) + &eye * C64::from(s2);
        let fac = PdFactor::new(&cov).map_err(|e| e.at(user, 0))?;
        let hk: CVec = h_hat.column(user).into();
        let filt = fac.solve_vec(&hk) * C64::from(p * b);
        let beta = (filt.dotc(&hk) * b).re;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::NonFinite("equalizer bias".into()).at(user, 0));
        }
        let nu = (p * (1.0 - beta) / beta).max(1e-300);

        let mut slot_pmfs = Vec::with_capacity(slots);
        let mut index = 0usize;
        for slot in 0..slots {
            let row: CVec = y_mat.row(k + slot).transpose();
            let x = filt.dotc(&row) / beta;
            let ll: Vec<f64> = points.iter().map(|q| -(x - q).norm_sqr() / nu).collect();
            let nearest = (0..points.len())
                .min_by(|&i, &j| (x - points[i]).norm_sqr().total_cmp(&(x - points[j]).norm_sqr()))
                .unwrap();
            index = index * points.len() + nearest;
            slot_pmfs.push(normalize_log_weights(&ll));
        }
        let q = points.len();
        let m = cons[user].len();
        let pmf = (0..m)
            .map(|i| {
                let mut rest = i;
                let mut v = 1.0;
                for slot in (0..slots).rev() {
                    v *= slot_pmfs[slot][rest % q];
                    rest /= q;
                }
                v
            })
            .collect();
        pmfs.push(pmf);
        decisions.push(index);
    }
    Ok((PosteriorEstimate::new(pmfs), decisions))
}
