//! Symbol error rate of several detectors over an SNR grid.

use ncmad::channel::{ChannelModel, SystemConfig};
use ncmad::constellation::{optimize_grassmannian, GrassmannianParams, PrecodedFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ncmad::detectors::{DetectorSpec, EpConfig, Problem, SiaConfig};
use ncmad::metrics::{ser_experiment, MonteCarlo};

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
    let problem = grassmannian_problem(4, 2, 2, 2, 0.0)?;
    let dets = [
        DetectorSpec::Ml,
        DetectorSpec::Genie,
        DetectorSpec::Ep(EpConfig::default()),
        DetectorSpec::MmseSia(SiaConfig::default()),
    ];
    let rows = ser_experiment(&problem, &dets, &[0.0, 5.0, 10.0], &MonteCarlo::new(400, 2).with_threads(4))?;
    for r in rows {
        println!("{:>5.1} dB {:>9}: SER {:.4} [{:.4}, {:.4}]", r.snr_db, r.detector, r.ser, r.ci_lo, r.ci_hi);
    }
    Ok(())
}
