//! Exact marginal posteriors, joint ML, the genie bound and bit LLRs.

use ncmad::channel::{ChannelModel, SystemConfig};
use ncmad::constellation::{optimize_grassmannian, GrassmannianParams, PrecodedFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ncmad::detectors::{exact_posterior, genie_posterior, ml_detect, BlockLikelihood, Problem};
use ncmad::metrics::{llr, MonteCarlo};

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
    let problem = grassmannian_problem(4, 2, 2, 2, 8.0)?;
    let block = MonteCarlo::new(1, 42).draw(&problem, 0)?;
    println!("truth: {:?}", block.true_indices);

    let post = exact_posterior(&problem, &block.y_mat)?;
    for (k, pmf) in post.pmfs.iter().enumerate() {
        println!("user {k} exact PMF {:.3?}", pmf);
        println!("user {k} bit LLRs  {:.3?}", llr(pmf, problem.constellations()[k].labels()));
    }
    println!("joint ML: {:?}", ml_detect(&problem, &block.y_mat)?);

    let lik = BlockLikelihood::new(&problem, &block.y_mat);
    println!("genie PMF of user 0: {:.3?}", genie_posterior(&lik, 0, &block.true_indices)?);
    Ok(())
}
