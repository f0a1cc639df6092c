//! Spatial correlation matrices and coherence-block sampling.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{abs_eigen_fix, hermitize, psd_sqrt, vec_rows, CMat, CVec, HermitianMatrix, C64};

/// Default number of midpoint-quadrature nodes for the angular average.
pub const DEFAULT_ANGLE_SAMPLES: usize = 1024;

/// Local scattering model parameters for one user.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSpec {
    /// Antenna spacing in wavelengths.
    pub d_h: f64,
    /// Nominal angle of arrival (radians).
    pub phi: f64,
    /// Angular standard deviation (radians).
    pub sigma_phi: f64,
    pub n_angle_samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Correlation {
    /// `Ξ_k = ξ_k I_N`.
    Uncorrelated,
    LocalScattering(CorrelationSpec),
}

/// Dimensions, noise level and per-user fading statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// Coherence time in channel uses.
    pub t: usize,
    /// Number of users.
    pub k: usize,
    /// Receive antennas.
    pub n: usize,
    /// Noise variance per complex dimension.
    pub sigma2: f64,
    /// Per-user average gains.
    pub xi: Vec<f64>,
    pub correlation: Vec<Correlation>,
}

impl SystemConfig {
    /// Unit-gain uncorrelated fading.
    pub fn uncorrelated(t: usize, k: usize, n: usize, sigma2: f64) -> Self {
        SystemConfig {
            t,
            k,
            n,
            sigma2,
            xi: vec![1.0; k],
            correlation: vec![Correlation::Uncorrelated; k],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Validation("K >= 1 violated".into()));
        }
        if self.t <= self.k {
            return Err(Error::Validation(format!("T > K violated (T = {}, K = {})", self.t, self.k)));
        }
        if self.n < self.k {
            return Err(Error::Validation(format!("N >= K violated (N = {}, K = {})", self.n, self.k)));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::Validation(format!("sigma2 > 0 violated ({})", self.sigma2)));
        }
        if self.xi.len() != self.k || self.correlation.len() != self.k {
            return Err(Error::Validation("per-user gain/correlation lists must have K entries".into()));
        }
        if let Some(x) = self.xi.iter().find(|x| !(**x > 0.0)) {
            return Err(Error::Validation(format!("xi_k > 0 violated ({x})")));
        }
        for c in &self.correlation {
            if let Correlation::LocalScattering(s) = c {
                if !(s.d_h > 0.0) {
                    return Err(Error::Validation("d_H > 0 violated".into()));
                }
                if !(s.sigma_phi >= 0.0) {
                    return Err(Error::Validation("sigma_phi >= 0 violated".into()));
                }
                if s.n_angle_samples == 0 {
                    return Err(Error::Validation("n_angle_samples >= 1 violated".into()));
                }
            }
        }
        Ok(())
    }

    pub fn nt(&self) -> usize {
        self.n * self.t
    }

    /// Sets the noise level so that user 0 sees `snr_db` per receive antenna.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.sigma2 = snr_to_sigma2(snr_db, self.xi[0], self.t);
        self
    }
}

/// `ξ / (T · 10^(snr/10))`, so that `snr = ξ / (T σ²)`.
pub fn snr_to_sigma2(snr_db: f64, xi: f64, t: usize) -> f64 {
    xi / (t as f64 * 10f64.powf(snr_db / 10.0))
}

pub fn sigma2_to_snr_db(sigma2: f64, xi: f64, t: usize) -> f64 {
    10.0 * (xi / (t as f64 * sigma2)).log10()
}

/// Receive correlation of a uniform linear array under the local scattering
/// model, with the angular deviation averaged by midpoint quadrature.
pub fn local_scattering_correlation(n: usize, spec: &CorrelationSpec, xi: f64) -> HermitianMatrix {
    let samples = spec.n_angle_samples.max(1);
    let half_width = 3f64.sqrt() * spec.sigma_phi;
    let step = 2.0 * half_width / samples as f64;
    let sines: Vec<f64> = (0..samples)
        .map(|q| (spec.phi - half_width + (q as f64 + 0.5) * step).sin())
        .collect();
    let two_pi_d = 2.0 * std::f64::consts::PI * spec.d_h;
    let m = CMat::from_fn(n, n, |l, m| {
        if l == m {
            return C64::from(xi);
        }
        let lag = l as f64 - m as f64;
        let acc: C64 = sines.iter().map(|s| C64::from_polar(1.0, two_pi_d * lag * s)).sum();
        acc * (xi / samples as f64)
    });
    let h = hermitize(&m);
    let ev = h.eigenvalues();
    let largest = ev.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if ev.first().copied().unwrap_or(0.0) < -1e-10 * largest {
        let fixed = abs_eigen_fix(h.as_matrix()).unwrap_or(h);
        // restore the exact diagonal that the projection perturbs slightly
        let mut m = fixed.into_inner();
        for i in 0..n {
            m[(i, i)] = C64::from(xi);
        }
        return hermitize(&m);
    }
    h
}

/// A system configuration together with its fixed correlation matrices and
/// their square roots.
#[derive(Clone, Debug)]
pub struct ChannelModel {
    config: SystemConfig,
    correlations: Vec<HermitianMatrix>,
    sqrt_correlations: Vec<CMat>,
}

impl ChannelModel {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let correlations: Vec<HermitianMatrix> = config
            .correlation
            .iter()
            .zip(&config.xi)
            .map(|(c, &xi)| match c {
                Correlation::Uncorrelated => HermitianMatrix::scaled_identity(config.n, xi),
                Correlation::LocalScattering(spec) => local_scattering_correlation(config.n, spec, xi),
            })
            .collect();
        let sqrt_correlations = correlations.iter().map(psd_sqrt).collect();
        Ok(ChannelModel {
            config,
            correlations,
            sqrt_correlations,
        })
    }

    /// Uses explicitly supplied correlation matrices.
    pub fn with_correlations(config: SystemConfig, correlations: Vec<HermitianMatrix>) -> Result<Self> {
        config.validate()?;
        if correlations.len() != config.k || correlations.iter().any(|c| c.dim() != config.n) {
            return Err(Error::Dimension("need K correlation matrices of size N x N".into()));
        }
        let sqrt_correlations = correlations.iter().map(psd_sqrt).collect();
        Ok(ChannelModel {
            config,
            correlations,
            sqrt_correlations,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn sigma2(&self) -> f64 {
        self.config.sigma2
    }

    /// Same correlation matrices, different noise level.
    pub fn with_sigma2(&self, sigma2: f64) -> Self {
        let mut m = self.clone();
        m.config.sigma2 = sigma2;
        m
    }

    pub fn correlation(&self, k: usize) -> &HermitianMatrix {
        &self.correlations[k]
    }

    pub fn correlations(&self) -> &[HermitianMatrix] {
        &self.correlations
    }

    /// `L_k` with `L_k L_k^H = Ξ_k`.
    pub fn sqrt_correlation(&self, k: usize) -> &CMat {
        &self.sqrt_correlations[k]
    }

    /// Per-user scalar gains when every `Ξ_k` is a multiple of the identity.
    pub fn scalar_gains(&self) -> Option<Vec<f64>> {
        self.config
            .correlation
            .iter()
            .all(|c| matches!(c, Correlation::Uncorrelated))
            .then(|| self.config.xi.clone())
    }
}

/// One coherence block.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelBlock {
    /// N x K channel matrix.
    pub h: CMat,
    /// T x N noise.
    pub w: CMat,
    /// T x N received matrix.
    pub y_mat: CMat,
    /// `vec(Y^T)`, length NT.
    pub y: CVec,
    pub true_indices: Vec<usize>,
}

fn complex_normal(rng: &mut impl Rng, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Draws `H` and `W` and forms `Y = S H^T + W` for the given symbol indices.
pub fn sample_block(
    model: &ChannelModel,
    constellations: &[Constellation],
    indices: &[usize],
    rng: &mut impl Rng,
) -> Result<ChannelBlock> {
    let cfg = model.config();
    if constellations.len() != cfg.k || indices.len() != cfg.k {
        return Err(Error::Dimension("need one constellation and one index per user".into()));
    }
    for (c, &i) in constellations.iter().zip(indices) {
        if i >= c.len() || c.dim() != cfg.t {
            return Err(Error::Dimension(format!("index {i} / symbol length {} invalid", c.dim())));
        }
    }
    let mut h = CMat::zeros(cfg.n, cfg.k);
    for k in 0..cfg.k {
        let g = CVec::from_fn(cfg.n, |_, _| complex_normal(rng, 1.0));
        h.set_column(k, &(model.sqrt_correlation(k) * g));
    }
    let w = CMat::from_fn(cfg.t, cfg.n, |_, _| complex_normal(rng, cfg.sigma2));
    let mut y_mat = w.clone();
    for k in 0..cfg.k {
        let s = constellations[k].symbol(indices[k]);
        y_mat += s * h.column(k).transpose();
    }
    let y = vec_rows(&y_mat);
    Ok(ChannelBlock {
        h,
        w,
        y_mat,
        y,
        true_indices: indices.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_precoders, precode, Constellation, ConstellationKind};
    use crate::linalg::max_abs_diff;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(d_h: f64, phi: f64, sigma_phi: f64, samples: usize) -> CorrelationSpec {
        CorrelationSpec {
            d_h,
            phi,
            sigma_phi,
            n_angle_samples: samples,
        }
    }

    #[test]
    fn no_angular_spread_is_rank_one() {
        let s = spec(0.5, 0.7, 0.0, 16);
        let xi = local_scattering_correlation(4, &s, 2.0);
        for l in 0..4 {
            for m in 0..4 {
                let want = C64::from_polar(2.0, 2.0 * std::f64::consts::PI * 0.5 * (l as f64 - m as f64) * 0.7f64.sin());
                assert!((xi.as_matrix()[(l, m)] - want).norm() < 1e-12);
            }
        }
        let ev = xi.eigenvalues();
        assert!(ev[..3].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn zero_spacing_gives_constant_matrix() {
        // d_H = 0 is outside the validated range but the formula is still defined
        let s = spec(0.0, 0.3, 0.2, 32);
        let xi = local_scattering_correlation(3, &s, 1.5);
        assert!(xi.as_matrix().iter().all(|z| (z - C64::from(1.5)).norm() < 1e-12));
    }

    #[test]
    fn quadrature_converges_and_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let s = spec(0.5, phi, 10f64.to_radians(), DEFAULT_ANGLE_SAMPLES);
        let xi = local_scattering_correlation(8, &s, 1.0);
        assert!((xi.trace() - 8.0).abs() < 1e-9);
        assert!(xi.min_eigenvalue() >= -1e-10);
        let fine = local_scattering_correlation(8, &CorrelationSpec { n_angle_samples: 10 * DEFAULT_ANGLE_SAMPLES, ..s }, 1.0);
        assert!(max_abs_diff(xi.as_matrix(), fine.as_matrix()) <= 1e-6);
    }

    #[test]
    fn snr_conversion() {
        assert!((snr_to_sigma2(0.0, 1.0, 1) - 1.0).abs() < 1e-15);
        assert!((snr_to_sigma2(10.0, 1.0, 6) - 1.0 / 60.0).abs() < 1e-15);
        for &s2 in &[1e-3, 0.0264, 0.7, 3.0] {
            let back = snr_to_sigma2(sigma2_to_snr_db(s2, 1.3, 6), 1.3, 6);
            assert!((back - s2).abs() <= 1e-12 * s2);
        }
    }

    #[test]
    fn validation_messages() {
        let bad = SystemConfig::uncorrelated(2, 3, 4, 0.1);
        assert!(bad.validate().unwrap_err().to_string().contains("T > K"));
        let bad = SystemConfig::uncorrelated(6, 3, 2, 0.1);
        assert!(bad.validate().unwrap_err().to_string().contains("N >= K"));
        let bad = SystemConfig::uncorrelated(6, 3, 4, 0.0);
        assert!(bad.validate().is_err());
    }

    fn one_user_constellation(t: usize) -> Vec<Constellation> {
        let base = Constellation::unit_vectors_for_tests(t, 2);
        vec![precode(&base, &build_precoders(t, 1)[0], 0, 1).unwrap()]
    }

    #[test]
    fn noiseless_block_is_rank_one() {
        let model = ChannelModel::new(SystemConfig::uncorrelated(3, 1, 2, 1e-300)).unwrap();
        let cons = one_user_constellation(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = sample_block(&model, &cons, &[1], &mut rng).unwrap();
        let s = cons[0].symbol(1);
        let clean = s * b.h.column(0).transpose();
        assert!(max_abs_diff(&b.y_mat, &clean) < 1e-140);
        assert_eq!(cons[0].kind(), &ConstellationKind::GrassmannianPrecoded { user: 0 });
    }

    #[test]
    fn blocks_are_deterministic_and_row_major() {
        let model = ChannelModel::new(SystemConfig::uncorrelated(3, 1, 2, 0.1)).unwrap();
        let cons = one_user_constellation(3);
        let a = sample_block(&model, &cons, &[0], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_block(&model, &cons, &[0], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        for t in 0..3 {
            for n in 0..2 {
                assert_eq!(a.y[t * 2 + n], a.y_mat[(t, n)]);
            }
        }
    }
}
