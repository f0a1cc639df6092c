//! Designs a Grassmannian base set and precodes it for three users.

use ncmad::constellation::{min_chordal_distance, optimize_grassmannian, write_constellation, GrassmannianParams, PrecodedFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ncmad::Result<()> {
    let (t, k, bits) = (6, 3, 4);
    let params = GrassmannianParams {
        epsilon: 0.01,
        iters: 500,
        restarts: 4,
    };
    let design = optimize_grassmannian(t - k + 1, 1 << bits, &params, &mut ChaCha8Rng::seed_from_u64(3));
    println!("min chordal distance {:.4} (converged: {})", design.min_distance, design.converged);

    let family = PrecodedFamily::with_default_precoders(design.base, t, k)?;
    for (user, c) in family.constellations()?.iter().enumerate() {
        println!("user {user}: {} symbols of length {}, dmin {:.4}", c.len(), c.dim(), min_chordal_distance(c.symbols()));
    }
    let text = write_constellation(&family.base_constellation()?);
    println!("{}", text.lines().next().unwrap_or(""));
    Ok(())
}
