//! Per-iteration total variation to the exact marginals.

use ncmad::channel::{ChannelModel, SystemConfig};
use ncmad::constellation::{optimize_grassmannian, GrassmannianParams, PrecodedFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ncmad::detectors::{DetectorSpec, EpConfig, Problem, SiaConfig};
use ncmad::metrics::{tv_experiment, MonteCarlo};

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
    let dets = [
        DetectorSpec::Ep(EpConfig::default()),
        DetectorSpec::MmseSia(SiaConfig::default()),
        DetectorSpec::Pocis { iters: 3 },
    ];
    let traces = tv_experiment(&problem, &dets, &MonteCarlo::new(100, 1).with_threads(4))?;
    for tr in &traces {
        let row: Vec<String> = tr.delta.iter().map(|d| format!("{:.4}", d.mean)).collect();
        println!("{:>9}: {}", tr.detector, row.join(" "));
    }
    Ok(())
}
