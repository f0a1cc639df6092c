use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{canonical_phase, min_chordal_distance};
use crate::linalg::{CVec, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannianParams {
    /// Smoothing of the max in the log-sum-exp surrogate.
    pub epsilon: f64,
    pub iters: usize,
    pub restarts: usize,
}

impl Default for GrassmannianParams {
    fn default() -> Self {
        GrassmannianParams {
            epsilon: 0.01,
            iters: 2000,
            restarts: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GrassmannianDesign {
    /// Unit vectors in canonical phase.
    pub base: Vec<CVec>,
    pub min_distance: f64,
    /// False when the winning restart ran out of iterations before the
    /// gradient vanished.
    pub converged: bool,
    /// Best-so-far minimum distance after every iteration of every restart.
    pub history: Vec<f64>,
}

const GRAD_TOL: f64 = 1e-9;
const ARMIJO: f64 = 1e-4;

/// `log Σ_{i<j} exp(|d_iᴴ d_j| / ε)`.
fn objective(d: &[CVec], eps: f64) -> f64 {
    let mut vals = Vec::with_capacity(d.len() * d.len() / 2);
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            vals.push(d[i].dotc(&d[j]).norm() / eps);
        }
    }
    crate::linalg::log_sum_exp(&vals)
}

/// Riemannian gradient on the product of unit spheres, with the phase
/// direction of each vector projected out as well.
fn riemannian_gradient(d: &[CVec], eps: f64) -> Vec<CVec> {
    let m = d.len();
    let mut pairs = Vec::with_capacity(m * m / 2);
    for i in 0..m {
        for j in i + 1..m {
            let a = d[i].dotc(&d[j]);
            pairs.push((i, j, a));
        }
    }
    let logits: Vec<f64> = pairs.iter().map(|p| p.2.norm() / eps).collect();
    let lse = crate::linalg::log_sum_exp(&logits);
    let mut g: Vec<CVec> = d.iter().map(|v| CVec::zeros(v.len())).collect();
    for (&(i, j, a), &l) in pairs.iter().zip(&logits) {
        let abs = a.norm();
        if abs == 0.0 {
            continue;
        }
        let w = (l - lse).exp() / eps / abs;
        // ∂|a|/∂d̄_i = ā d_j / 2|a| and ∂|a|/∂d̄_j = a d_i / 2|a|
        g[i].axpy(C64::from(w) * a.conj(), &d[j], C64::from(1.0));
        g[j].axpy(C64::from(w) * a, &d[i], C64::from(1.0));
    }
    for (gi, di) in g.iter_mut().zip(d) {
        let c = di.dotc(gi);
        gi.axpy(-c, di, C64::from(1.0));
    }
    g
}

fn random_unit(n: usize, rng: &mut impl Rng) -> CVec {
    let v = CVec::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let norm = v.norm();
    v / C64::from(norm)
}

fn retract(d: &[CVec], g: &[CVec], step: f64) -> Vec<CVec> {
    d.iter()
        .zip(g)
        .map(|(v, gi)| {
            let w = v - gi * C64::from(step);
            let norm = w.norm();
            w / C64::from(norm)
        })
        .collect()
}

/// Packs `m` lines in `C^dim` by descending the smoothed max-coherence
/// objective. Keeps the iterate with the largest minimum chordal distance
/// over all restarts.
pub fn optimize_grassmannian(dim: usize, m: usize, params: &GrassmannianParams, rng: &mut impl Rng) -> GrassmannianDesign {
    assert!(dim >= 2 && m >= 2, "need dim >= 2 and M >= 2");
    let eps = params.epsilon;
    let mut best: Option<(Vec<CVec>, f64, bool)> = None;
    let mut history = Vec::new();
    let mut best_so_far = 0.0_f64;

    for _ in 0..params.restarts.max(1) {
        let mut d: Vec<CVec> = (0..m).map(|_| random_unit(dim, rng)).collect();
        let mut f = objective(&d, eps);
        let mut step = 0.1 * eps;
        let mut run_best = (d.clone(), min_chordal_distance(&d));
        let mut converged = false;

        for _ in 0..params.iters {
            let g = riemannian_gradient(&d, eps);
            let gnorm2: f64 = g.iter().map(|v| v.norm_squared()).sum();
            if gnorm2.sqrt() * eps < GRAD_TOL {
                converged = true;
                break;
            }
            let mut accepted = None;
            while step > 1e-16 {
                let cand = retract(&d, &g, step);
                let fc = objective(&cand, eps);
                if fc <= f - ARMIJO * step * gnorm2 {
                    accepted = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc)) = accepted else {
                converged = true;
                break;
            };
            d = cand;
            f = fc;
            step *= 2.0;
            let dist = min_chordal_distance(&d);
            if dist > run_best.1 {
                run_best = (d.clone(), dist);
            }
            best_so_far = best_so_far.max(run_best.1);
            history.push(best_so_far);
        }

        let better = best.as_ref().is_none_or(|b| run_best.1 > b.1);
        if better {
            best = Some((run_best.0, run_best.1, converged));
        }
        best_so_far = best_so_far.max(best.as_ref().map_or(0.0, |b| b.1));
    }

    let (base, _, converged) = best.expect("at least one restart");
    let base: Vec<CVec> = base.iter().map(canonical_phase).collect();
    GrassmannianDesign {
        min_distance: min_chordal_distance(&base),
        base,
        converged,
        history,
    }
}
