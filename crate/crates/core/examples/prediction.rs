//! Noisy one-dimensional fit with posterior predictive bands, and the CRPS
//! of the predictive against the truth.
//!
//!     cargo run --release --example prediction

use khaos::bench::crps_from_samples;
use khaos::linear::PriorSpec;
use khaos::sampler::{predict, run_chain, SamplerConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn truth(u: f64) -> f64 {
    (6.0 * u).sin() + 0.5 * u
}

fn main() -> khaos::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 150;
    let x = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>());
    let y: Vec<f64> = x.iter().map(|&u| truth(u) + 0.2 * rng.sample::<f64, _>(StandardNormal)).collect();
    let draws = run_chain(&x, &y, &PriorSpec::modified_gprior(), &SamplerConfig { seed: 8, ..SamplerConfig::default() })?;

    let grid = DMatrix::from_fn(11, 1, |i, _| i as f64 / 10.0);
    let mean_fn = predict(&draws, &grid, false, 0)?;
    let observed = predict(&draws, &grid, true, 0)?;
    let (m, lo, hi) = (mean_fn.mean(), observed.quantile(0.05), observed.quantile(0.95));
    println!("{:>5} {:>8} {:>8} {:>8} {:>8} {:>8}", "x", "truth", "mean", "q05", "q95", "crps");
    for j in 0..grid.nrows() {
        let u = grid[(j, 0)];
        let crps = crps_from_samples(&mean_fn.point_samples(j), truth(u))?;
        println!("{u:>5.2} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {crps:>8.4}", truth(u), m[j], lo[j], hi[j]);
    }
    let sigma2 = draws.draws.iter().map(|d| d.sigma2).sum::<f64>() / draws.len() as f64;
    println!("posterior mean noise sd {:.3} (true 0.2)", sigma2.sqrt());
    Ok(())
}
