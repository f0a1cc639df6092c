//! Local-scattering correlation and one simulated coherence block.

use ncmad::channel::{local_scattering_correlation, sample_block, ChannelModel, Correlation, CorrelationSpec, SystemConfig};
use ncmad::constellation::pilot_qam_constellation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ncmad::Result<()> {
    let spec = CorrelationSpec {
        d_h: 0.5,
        phi: 0.3,
        sigma_phi: 10f64.to_radians(),
        n_angle_samples: 1024,
    };
    let r = local_scattering_correlation(4, &spec, 1.0);
    println!("first row of the correlation matrix:");
    for z in r.as_matrix().row(0).iter() {
        println!("  {:+.4} {:+.4}i", z.re, z.im);
    }

    let mut cfg = SystemConfig::uncorrelated(4, 2, 4, 0.1).with_snr_db(10.0);
    cfg.correlation = vec![Correlation::LocalScattering(spec.clone()), Correlation::Uncorrelated];
    let model = ChannelModel::new(cfg)?;
    let cons = (0..2)
        .map(|u| pilot_qam_constellation(4, 2, u, 4, 20))
        .collect::<ncmad::Result<Vec<_>>>()?;
    let block = sample_block(&model, &cons, &[3, 12], &mut ChaCha8Rng::seed_from_u64(1))?;
    println!("sigma2 = {:.4}", model.sigma2());
    println!("Y is {}x{}, vec(Y^T) has length {}", block.y_mat.nrows(), block.y_mat.ncols(), block.y.len());
    Ok(())
}
