//! Interference-subspace projection iterated with single-user ML.

use ncmad::channel::{ChannelModel, SystemConfig};
use ncmad::constellation::{optimize_grassmannian, GrassmannianParams, PrecodedFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ncmad::detectors::{pocis_detect, Problem};
use ncmad::metrics::MonteCarlo;

fn grassmannian_problem(t: usize, k: usize, n: usize, bits: u32, snr_db: f64) -> ncmad::Result<Problem> {
    let params = GrassmannianParams {
        epsilon: 0.02,
        iters: 400,
        restarts: 3,
    };
    let design = optimize_grassmannian(t - k + 1, 1 << bits, &params, &mut ChaCha8Rng::seed_from_u64(7));
    let family = PrecodedFamily::with_default_precoders(design.base, t, k)?;
    let model = ChannelModel::new(SystemConfig::uncorrelated(t, k, n, 1.0).with_snr_db(snr_db))?;
    Problem::new(model, family.constellations()?, Some(family))
}

fn main() -> ncmad::Result<()> {
    let problem = grassmannian_problem(6, 3, 4, 4, 12.0)?;
    let mc = MonteCarlo::new(200, 3);
    let mut errors = 0;
    for trial in 0..mc.n_trials {
        let block = mc.draw(&problem, trial)?;
        let (_, hard) = pocis_detect(&problem, &block.y_mat, 3)?;
        errors += hard.iter().zip(&block.true_indices).filter(|(a, b)| a != b).count();
    }
    println!("POCIS SER at 12 dB over {} trials: {:.4}", mc.n_trials, errors as f64 / (3 * mc.n_trials) as f64);
    Ok(())
}
