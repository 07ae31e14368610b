//! Convergence diagnostics on synthetic chains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stwnc::diagnostics::{lag1_autocorr, mc_error, mode_occupancy, psrf};

fn ar1(rho: f64, n: usize, offset: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x = rho * x + z.sample(&mut rng);
            x + offset
        })
        .collect()
}

fn main() -> stwnc::Result<()> {
    let n = 100_000;
    let a = ar1(0.97, n, 0.0, 1);
    let b = ar1(0.97, n, 0.0, 2);
    let far = ar1(0.97, n, 5.0, 3);
    println!("lag-1 autocorrelation   {:.4}", lag1_autocorr(&a)?);
    println!("batch-means MC error    {:.4}", mc_error(&a)?);
    println!("R-hat, same target      {:.4}", psrf(&[&a, &b])?);
    println!("R-hat, shifted chain    {:.4}", psrf(&[&a, &far])?);
    for (sign, share) in mode_occupancy(&a, |x| x.is_sign_positive()) {
        println!("share with positive = {sign}: {share:.3}");
    }
    Ok(())
}
