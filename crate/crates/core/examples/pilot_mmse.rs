//! Pilot plus QAM signalling detected by the coherent MMSE baseline.

use ncmad::channel::{sample_block, ChannelModel, SystemConfig};
use ncmad::constellation::pilot_qam_constellation;
use ncmad::detectors::{pilot_mmse_detect, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ncmad::Result<()> {
    let (t, k, n) = (4, 2, 4);
    let cons = (0..k)
        .map(|u| pilot_qam_constellation(t, k, u, 4, 20))
        .collect::<ncmad::Result<Vec<_>>>()?;
    let model = ChannelModel::new(SystemConfig::uncorrelated(t, k, n, 1.0).with_snr_db(15.0))?;
    let problem = Problem::new(model, cons, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 500;
    let mut errors = 0;
    for _ in 0..trials {
        let truth: Vec<usize> = problem.sizes().iter().map(|&m| rng.random_range(0..m)).collect();
        let block = sample_block(problem.model(), problem.constellations(), &truth, &mut rng)?;
        let (_, hard) = pilot_mmse_detect(&problem, &block.y_mat)?;
        errors += hard.iter().zip(&truth).filter(|(a, b)| a != b).count();
    }
    println!("pilot-MMSE SER at 15 dB: {:.4}", errors as f64 / (trials * k) as f64);
    Ok(())
}
