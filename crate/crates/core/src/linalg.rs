//! Dense complex linear algebra and Gaussian-density algebra.
//!
//! Everything here is a pure function of its inputs. Densities are evaluated
//! in the log domain through a Cholesky factorization; positive-definite
//! factorizations get one jittered retry before giving up.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Relative jitter added to the diagonal on the single factorization retry.
pub const JITTER: f64 = 1e-10;

/// Relative anti-Hermitian residual below which `abs_eigen_fix` treats its
/// input as Hermitian.
pub const HERMITIAN_PATH_TOL: f64 = 1e-6;

const HERMITIAN_TOL: f64 = 1e-12;

/// A square complex matrix equal to its own conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    /// Validates `m` against the Hermitian invariant (1e-12 relative).
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.norm().max(f64::MIN_POSITIVE);
        let skew = (&m - m.adjoint()).norm();
        if skew > HERMITIAN_TOL * scale && skew > f64::EPSILON {
            return Err(Error::Dimension(format!(
                "matrix is not Hermitian (relative skew {:e})",
                skew / scale
            )));
        }
        Ok(HermitianMatrix(m))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMat::identity(n, n))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        HermitianMatrix(CMat::identity(n, n) * C64::from(s))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn is_identity(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.0[(i, j)] == if i == j { C64::from(1.0) } else { C64::from(0.0) }))
    }
}

impl AsRef<CMat> for HermitianMatrix {
    fn as_ref(&self) -> &CMat {
        &self.0
    }
}

/// Mean and covariance of a complex Gaussian message.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMessage {
    pub mean: CVec,
    pub cov: HermitianMatrix,
}

impl GaussianMessage {
    pub fn new(mean: CVec, cov: HermitianMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::Dimension(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.dim(),
                cov.dim()
            )));
        }
        Ok(GaussianMessage { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

// The complex square root never fails, so a negative pivot shows up as a
// non-real diagonal entry instead of a `None`.
fn checked_cholesky(h: CMat) -> Option<Cholesky<C64, Dyn>> {
    let chol = Cholesky::new(h)?;
    let l = chol.l_dirty();
    let ok = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re
    });
    ok.then_some(chol)
}

/// Cholesky factor of a Hermitian positive-definite matrix.
pub struct PdFactor {
    chol: Cholesky<C64, Dyn>,
    jittered: bool,
}

impl PdFactor {
    /// Factorizes the Hermitian part of `m`, retrying once with diagonal
    /// jitter `JITTER * trace(m) / n`.
    pub fn new(m: &CMat) -> Result<Self> {
        let h = hermitize(m).into_inner();
        if let Some(chol) = checked_cholesky(h.clone()) {
            return Ok(PdFactor {
                chol,
                jittered: false,
            });
        }
        let n = h.nrows().max(1);
        let jitter = JITTER * h.trace().re / n as f64;
        if !(jitter > 0.0) || !jitter.is_finite() {
            return Err(Error::NonPositiveDefinite);
        }
        let mut h = h;
        for i in 0..h.nrows() {
            h[(i, i)] += C64::from(jitter);
        }
        checked_cholesky(h)
            .map(|chol| PdFactor {
                chol,
                jittered: true,
            })
            .ok_or(Error::NonPositiveDefinite)
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn jittered(&self) -> bool {
        self.jittered
    }

    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>()
    }

    /// `x^H M^{-1} x`.
    pub fn quad_form(&self, x: &CVec) -> f64 {
        let mut w = x.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut w);
        w.norm_squared()
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &CVec) -> CVec {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> CMat {
        hermitize(&self.chol.inverse()).into_inner()
    }
}

/// `(M + M^H) / 2`.
pub fn hermitize(m: &CMat) -> HermitianMatrix {
    let mut h = m + m.adjoint();
    h.scale_mut(0.5);
    HermitianMatrix(h)
}

/// Natural log of the circularly-symmetric complex Gaussian density
/// `exp(-(x-mu)^H cov^{-1} (x-mu)) / (pi^n det cov)`.
pub fn log_gauss_pdf(x: &CVec, mean: &CVec, cov: &HermitianMatrix) -> Result<f64> {
    let n = cov.dim();
    if x.len() != n || mean.len() != n {
        return Err(Error::Dimension(format!(
            "log_gauss_pdf: x {} / mean {} / cov {}",
            x.len(),
            mean.len(),
            n
        )));
    }
    let f = PdFactor::new(cov.as_matrix())?;
    Ok(log_gauss_with(&f, &(x - mean)))
}

/// Log density at offset `d = x - mean` for an already-factorized covariance.
pub fn log_gauss_with(factor: &PdFactor, d: &CVec) -> f64 {
    -factor.quad_form(d) - factor.log_det() - factor.dim() as f64 * LN_PI
}

/// Product of two Gaussian densities:
/// `N(x; a) N(x; b) = exp(log_scale) N(x; product)`.
pub fn gauss_multiply(a: &GaussianMessage, b: &GaussianMessage) -> Result<(GaussianMessage, f64)> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "gauss_multiply: dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let s1 = a.cov.as_matrix();
    let s2 = b.cov.as_matrix();
    let sum = PdFactor::new(&(s1 + s2))?;
    // (S1^-1 + S2^-1)^-1 = S1 (S1 + S2)^-1 S2
    let cov = hermitize(&(s1 * sum.solve(s2)));
    let mean = s2 * sum.solve_vec(&a.mean) + s1 * sum.solve_vec(&b.mean);
    let log_scale = log_gauss_with(&sum, &(&a.mean - &b.mean));
    Ok((GaussianMessage { mean, cov }, log_scale))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Least-squares factor `C̄` minimizing `‖c - C̄ ⊗ xi‖_F`.
pub fn nearest_kronecker_factor(c: &HermitianMatrix, xi: &HermitianMatrix) -> Result<CMat> {
    let n = xi.dim();
    let nt = c.dim();
    if n == 0 || !nt.is_multiple_of(n) {
        return Err(Error::Dimension(format!(
            "nearest_kronecker_factor: {nt}x{nt} is not a multiple of {n}x{n}"
        )));
    }
    let xi = xi.as_matrix();
    let denom = xi.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if denom <= 1e-14 {
        return Err(Error::DegenerateCorrelation(denom));
    }
    let t = nt / n;
    let c = c.as_matrix();
    Ok(CMat::from_fn(t, t, |i, j| {
        let block = c.view((i * n, j * n), (n, n));
        // <xi, C{i,j}>_F = tr(xi^H C{i,j})
        let inner: C64 = block
            .iter()
            .zip(xi.iter())
            .map(|(cb, x)| x.conj() * cb)
            .sum();
        inner / denom
    }))
}

/// Replaces the eigenvalues of `m` by their absolute values and returns the
/// Hermitian part of the result.
///
/// Numerically Hermitian input (anti-Hermitian residual at most
/// `HERMITIAN_PATH_TOL` relative) goes through the Hermitian solver, which is
/// robust to clustered and zero eigenvalues. Anything else goes through a
/// complex Schur decomposition and `V |Λ| V^{-1}`.
pub fn abs_eigen_fix(m: &CMat) -> Result<HermitianMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("abs_eigen_fix needs a square matrix".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("abs_eigen_fix input".into()));
    }
    let scale = m.norm();
    let skew = (m - m.adjoint()).norm();
    if skew <= HERMITIAN_PATH_TOL * scale {
        let eig = SymmetricEigen::try_new(hermitize(m).into_inner(), f64::EPSILON, 0)
            .ok_or(Error::EigenFailure)?;
        let v = &eig.eigenvectors;
        let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::from(l.abs())));
        return Ok(hermitize(&(v * d * v.adjoint())));
    }
    let (lambda, v) = eigen_general(m)?;
    let v_inv = v.clone().try_inverse().ok_or(Error::EigenFailure)?;
    let d = CMat::from_diagonal(&lambda.map(|l| C64::from(l.norm())));
    let out = hermitize(&(&v * d * v_inv));
    if out.as_matrix().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenFailure);
    }
    Ok(out)
}

/// Eigenvalues and (unit-norm) right eigenvectors of a general complex
/// matrix, from its complex Schur form.
pub fn eigen_general(m: &CMat) -> Result<(CVec, CMat)> {
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let (q, t) = schur.unpack();
    let smin = (f64::EPSILON * t.norm()).max(f64::MIN_POSITIVE);
    let mut x = CMat::zeros(n, n);
    for j in 0..n {
        let lambda = t[(j, j)];
        x[(j, j)] = C64::from(1.0);
        for i in (0..j).rev() {
            let mut acc = C64::from(0.0);
            for l in i + 1..=j {
                acc += t[(i, l)] * x[(l, j)];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smin {
                d = C64::from(smin);
            }
            x[(i, j)] = -acc / d;
        }
        let nrm = x.column(j).norm();
        x.column_mut(j).unscale_mut(nrm);
    }
    let lambda = CVec::from_fn(n, |i, _| t[(i, i)]);
    Ok((lambda, q * x))
}

/// `V diag(sqrt(max(λ, 0)))` for the eigendecomposition of a PSD matrix, so
/// that `L L^H` reproduces it.
pub fn psd_sqrt(m: &HermitianMatrix) -> CMat {
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let mut l = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}

/// Row-major vectorization `vec(M^T)`: entry `(t, n)` lands at `t * cols + n`.
pub fn vec_rows(m: &CMat) -> CVec {
    let (r, c) = m.shape();
    CVec::from_fn(r * c, |i, _| m[(i / c, i % c)])
}

/// Inverse of [`vec_rows`].
pub fn unvec_rows(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |t, n| v[t * cols + n])
}

/// Numerically stable `ln Σ exp(x_i)`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Smallest probability kept in a normalized PMF before renormalization.
pub const PMF_FLOOR: f64 = 1e-300;

/// Normalizes log-weights into a PMF via log-sum-exp, clamping entries below
/// at [`PMF_FLOOR`] and renormalizing.
pub fn normalize_log_weights(logw: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logw);
    let mut p: Vec<f64> = logw.iter().map(|l| (l - lse).exp().max(PMF_FLOOR)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

/// Real-valued view helpers used by tests and diagnostics.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn real_vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
