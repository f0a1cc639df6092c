//! MMSE successive interference approximation, fast and general paths.

use ncmad::channel::{ChannelModel, SystemConfig};
use ncmad::constellation::{optimize_grassmannian, GrassmannianParams, PrecodedFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ncmad::detectors::{mmse_sia_detect, Problem, SiaConfig, SiaPath};
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
    let block = MonteCarlo::new(1, 9).draw(&problem, 0)?;
    let run = |path| {
        let cfg = SiaConfig {
            path,
            ..SiaConfig::default()
        };
        mmse_sia_detect(&problem, &block.y, &cfg)
    };
    let (fast, iters) = run(SiaPath::Fast)?;
    let (general, _) = run(SiaPath::General)?;
    let gap = fast.pmfs.iter().zip(&general.pmfs).map(|(a, b)| total_variation(a, b)).fold(0.0, f64::max);
    println!("{iters} iterations, decisions {:?}, truth {:?}", fast.hard_decisions(), block.true_indices);
    println!("fast vs general path TV: {gap:.2e}");
    Ok(())
}
