//! Ordinal response with five categories cut from a noisy latent Ishigami
//! surface. Prints latent total Sobol indices and class probabilities at a
//! few points.
//!
//!     cargo run --release --example ordinal

use khaos::bench::{maximin_lhs, TestFunction};
use khaos::linear::PriorSpec;
use khaos::ordinal::{fit_ordinal, predict_ordinal};
use khaos::sampler::SamplerConfig;
use khaos::sobol::sobol_posterior;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> khaos::Result<()> {
    let n = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = maximin_lhs(n, 3, &mut rng, 1)?;
    let z: Vec<f64> = TestFunction::Ishigami
        .eval_rows(&x)
        .into_iter()
        .map(|f| f + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut sorted = z.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let cuts: Vec<f64> = (1..5).map(|k| sorted[k * n / 5]).collect();
    let labels: Vec<usize> = z.iter().map(|v| 1 + cuts.iter().filter(|c| v >= *c).count()).collect();

    let cfg = SamplerConfig { n_iter: 40_000, n_burn: 30_000, n_thin: 10, seed: 1, ..SamplerConfig::default() };
    let fit = fit_ordinal(&x, &labels, &PriorSpec::ridge(), &cfg)?;
    let t = sobol_posterior(&fit.latent)?.total_means();
    println!("latent total indices: {:.3} {:.3} {:.3}", t[0], t[1], t[2]);

    let last = fit.cutpoints.last().expect("draws");
    println!("final cutpoints: {last:.3?}");
    let probe = DMatrix::from_row_slice(3, 3, &[0.1, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9, 0.9, 0.1]);
    let probs = predict_ordinal(&fit, &probe)?;
    for i in 0..probe.nrows() {
        let row: Vec<String> = probs.row(i).iter().map(|p| format!("{p:.3}")).collect();
        println!("x = {:?}: {}", probe.row(i).iter().collect::<Vec<_>>(), row.join(" "));
    }
    Ok(())
}
