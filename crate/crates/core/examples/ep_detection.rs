//! EP and EPAK against exact marginalization on one block.

use ncmad::channel::{ChannelModel, SystemConfig};
use ncmad::constellation::{optimize_grassmannian, GrassmannianParams, PrecodedFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ncmad::detectors::{ep_detect, exact_posterior, EpConfig, Problem};
use ncmad::metrics::{total_variation, MonteCarlo};

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
    let problem = grassmannian_problem(6, 3, 4, 4, 8.0)?;
    let block = MonteCarlo::new(1, 5).draw(&problem, 0)?;
    let exact = exact_posterior(&problem, &block.y_mat)?;

    for (name, t0) in [("ep", 6), ("epak t0=2", 2)] {
        let cfg = EpConfig {
            t0,
            ..EpConfig::default()
        };
        let (post, _, iters) = ep_detect(&problem, &block.y, &cfg)?;
        let tv: f64 = post.pmfs.iter().zip(&exact.pmfs).map(|(a, b)| total_variation(a, b)).sum::<f64>() / 3.0;
        println!("{name}: {iters} iterations, decisions {:?}, mean TV to exact {tv:.4}", post.hard_decisions());
    }
    println!("truth: {:?}", block.true_indices);
    Ok(())
}
